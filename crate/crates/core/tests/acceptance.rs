//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{
    circular_shift, count_oracle, dense_fusion_solve, dense_wls, interior, kernel_sum_filter, pair_auc,
    random_image, rng,
};
use msfuse::aggregate::{guided_filter, GuidedFilterParams};
use msfuse::config::PipelineConfig;
use msfuse::fusion::{fuse_scales, FusionParams, FusionSolver};
use msfuse::io::load_image;
use msfuse::metrics::{accuracy, auc, confusion, sensitivity};
use msfuse::pipeline::match_view;
use msfuse::reconstruct::{triangulate, CameraRig};
use msfuse::wls::{decompose, wls_filter, WlsParams};
use msfuse::{CostVolume, DisparityMap, Image};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn msfuse(args: &[&str], cwd: &Path, threads: Option<&str>) -> Result<Duration, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_msfuse"));
    cmd.args(args).current_dir(cwd);
    if let Some(t) = threads {
        cmd.env("MSFUSE_THREADS", t);
    }
    let start = Instant::now();
    let out = cmd.output().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        out.status.success(),
        format!("msfuse {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)),
    )?;
    Ok(elapsed)
}

fn wls_oracle_equivalence() -> Outcome {
    let mut r = rng(900);
    let images: Vec<Image> = (0..20).map(|_| random_image(&mut r, 16, 16)).collect();
    let mut worst = 0.0f64;
    let mut solve_time = Duration::ZERO;
    for eta in [0.25, 1.0, 4.0] {
        let p = WlsParams {
            eta,
            ..WlsParams::default()
        };
        for img in &images {
            let start = Instant::now();
            let fast = wls_filter(img, &p).map_err(|e| e.to_string())?;
            solve_time += start.elapsed();
            worst = worst.max(max_abs_diff(fast.data(), dense_wls(img, &p).data()));
        }
    }
    check(worst <= 1e-6, format!("max |Δ| = {worst:e}"))?;
    check(
        solve_time < Duration::from_secs(1),
        format!("solver took {solve_time:?}"),
    )?;
    Ok(format!("max |Δ| = {worst:.2e}, 60 solves in {solve_time:.2?}"))
}

fn wls_limiting_cases() -> Outcome {
    let mut r = rng(901);
    let img = random_image(&mut r, 16, 16);
    let identity = wls_filter(
        &img,
        &WlsParams {
            eta: 0.0,
            ..WlsParams::default()
        },
    )
    .map_err(|e| e.to_string())?;
    check(identity == img, "η = 0 is not the identity")?;

    let flat = Image::filled(16, 16, 0.37);
    let fixed = wls_filter(&flat, &WlsParams::default()).map_err(|e| e.to_string())?;
    let drift = max_abs_diff(fixed.data(), flat.data());
    check(drift <= 1e-12, format!("constant image drifted by {drift:e}"))?;

    for i in 0..10 {
        let pyr =
            decompose(&random_image(&mut r, 16, 16), &WlsParams::default()).map_err(|e| e.to_string())?;
        for s in 0..3 {
            let (a, b) = (pyr.layer(s).total_variation(), pyr.layer(s + 1).total_variation());
            check(b <= a, format!("image {i}: TV rose from {a} to {b} at level {s}"))?;
        }
    }
    Ok(format!(
        "identity exact, constant drift {drift:.1e}, TV monotone on 10 images"
    ))
}

fn guided_filter_kernel_fidelity() -> Outcome {
    let mut r = rng(902);
    let p = GuidedFilterParams { radius: 2, xi: 1e-4 };
    let (mut worst_interior, mut worst_all, mut worst_const) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let guide = random_image(&mut r, 8, 8);
        let input = random_image(&mut r, 8, 8);
        let fast = guided_filter(&guide, &input, &p).map_err(|e| e.to_string())?;
        let oracle = kernel_sum_filter(&guide, &input, &p);
        worst_all = worst_all.max(max_abs_diff(fast.data(), oracle.data()));
        for (x, y) in interior(8, 8, 2) {
            worst_interior = worst_interior.max((fast.get(x, y) - oracle.get(x, y)).abs());
        }
        let c: f64 = r.random();
        let flat = guided_filter(&guide, &Image::filled(8, 8, c), &p).map_err(|e| e.to_string())?;
        worst_const = worst_const.max(flat.data().iter().map(|v| (v - c).abs()).fold(0.0, f64::max));
    }
    check(
        worst_interior <= 1e-10,
        format!("interior |Δ| = {worst_interior:e}"),
    )?;
    check(worst_all <= 1e-10, format!("image-wide |Δ| = {worst_all:e}"))?;
    check(
        worst_const <= 1e-10,
        format!("constant slice drift {worst_const:e}"),
    )?;
    Ok(format!(
        "kernel |Δ| = {worst_all:.1e} at every pixel, constant drift {worst_const:.1e}"
    ))
}

fn fusion_solver() -> Outcome {
    let mut r = rng(903);
    let vols: Vec<CostVolume> = (0..4)
        .map(|_| CostVolume::new(5, 4, 0, 2, (0..60).map(|_| r.random()).collect()).unwrap())
        .collect();
    let same = fuse_scales(&vols, &FusionParams { zeta: 0.0 }).map_err(|e| e.to_string())?;
    check(same == vols, "ζ = 0 is not the identity")?;

    let solver = FusionSolver::new(0.7).map_err(|e| e.to_string())?;
    let k = 0.61;
    let fixed = solver.solve([k; 4]);
    let drift = fixed.iter().map(|v| (v - k).abs()).fold(0.0, f64::max);
    check(drift <= 1e-12, format!("constant vector drift {drift:e}"))?;

    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let zeta = r.random_range(0.0..10.0);
        let e: [f64; 4] = std::array::from_fn(|_| r.random());
        let fast = FusionSolver::new(zeta).map_err(|e| e.to_string())?.solve(e);
        worst = worst.max(max_abs_diff(&fast, &dense_fusion_solve(zeta, e)));
    }
    check(worst <= 1e-12, format!("dense oracle |Δ| = {worst:e}"))?;

    let got = FusionSolver::new(1.0)
        .map_err(|e| e.to_string())?
        .solve([1.0, 2.0, 3.0, 4.0]);
    let want = [11.0 / 7.0, 15.0 / 7.0, 20.0 / 7.0, 24.0 / 7.0];
    let fixture = max_abs_diff(&got, &want);
    check(fixture <= 1e-12, format!("fixture off by {fixture:e}"))?;
    Ok(format!(
        "oracle |Δ| = {worst:.1e} over 10^4 vectors, fixture |Δ| = {fixture:.1e}"
    ))
}

fn synthetic_recovery() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    msfuse(&["gen-synthetic", "64", "64", "5", "--seed", "7"], d, None)?;
    let elapsed = msfuse(
        &[
            "reconstruct",
            "synthetic_left.pgm",
            "synthetic_right.pgm",
            "--out-disparity",
            "disp.pfm",
            "--out-cloud",
            "cloud.ply",
        ],
        d,
        None,
    )?;
    let disp = load_image(d.join("disp.pfm")).map_err(|e| e.to_string())?;
    let (mut good, mut total) = (0usize, 0usize);
    for y in 8..56 {
        for x in 8..56 {
            total += 1;
            good += ((disp.get(x, y) - 5.0).abs() <= 1.0) as usize;
        }
    }
    let frac = good as f64 / total as f64;
    check(frac >= 0.95, format!("only {:.2}% within 1 px", 100.0 * frac))?;
    check(
        elapsed < Duration::from_secs(10),
        format!("reconstruct took {elapsed:?}"),
    )?;
    Ok(format!(
        "{:.2}% within 1 px, reconstruct in {elapsed:.2?}",
        100.0 * frac
    ))
}

fn shifted_exactness() -> Outcome {
    let mut r = rng(905);
    let cfg = PipelineConfig::default();
    let (w, h) = (48, 32);
    let left = random_image(&mut r, w, h);
    let lp = decompose(&left, &cfg.wls).map_err(|e| e.to_string())?;
    let m = cfg.cost.census_radius + 2 * cfg.aggregate.radius;
    let mut checked = 0;
    for k in [2usize, 7] {
        let rp = decompose(&circular_shift(&left, k), &cfg.wls).map_err(|e| e.to_string())?;
        let view = match_view(&lp, &rp, &cfg).map_err(|e| e.to_string())?;
        for y in m..h - m {
            for x in k + m..w - m {
                let got = view.winners.get(x, y);
                check(got == k as f64, format!("k = {k}: WTA {got} at ({x}, {y})"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} fully-supported pixels exact for k = 2, 7"))
}

fn triangulation_round_trip() -> Outcome {
    let (w, h) = (64, 48);
    let rig = CameraRig::centred(525.0, 0.1, w, h);
    let z = 2.0;
    let plane: Vec<[f64; 3]> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            [
                (x as f64 - rig.cx) * z / 525.0,
                (y as f64 - rig.cy) * z / 525.0,
                z,
            ]
        })
        .collect();
    let disp = DisparityMap::new(w, h, plane.iter().map(|p| rig.project(*p).2).collect())
        .map_err(|e| e.to_string())?;
    let cloud = triangulate(&disp, &rig, None).map_err(|e| e.to_string())?;
    check(
        cloud.len() == w * h,
        format!("{} points for {} pixels", cloud.len(), w * h),
    )?;
    let mut worst = 0.0f64;
    for (p, q) in cloud.points.iter().zip(&plane) {
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>().sqrt() / norm;
        worst = worst.max(err);
    }
    check(worst <= 1e-9, format!("relative error {worst:e}"))?;

    let halved = DisparityMap::new(w, h, disp.to_image().data().iter().map(|c| c / 2.0).collect()).unwrap();
    let far = triangulate(&halved, &rig, None).map_err(|e| e.to_string())?;
    for (a, b) in cloud.points.iter().zip(&far.points) {
        check(
            b[2] == 2.0 * a[2],
            format!("halving gave depth {} from {}", b[2], a[2]),
        )?;
    }
    Ok(format!(
        "relative error {worst:.1e}, halving doubles depth exactly"
    ))
}

fn metrics_oracles() -> Outcome {
    let mut r = rng(908);
    let as_mask = |bits: &[bool]| Image::new(16, 16, bits.iter().map(|&b| b as u8 as f64).collect()).unwrap();
    for i in 0..100 {
        let p: Vec<bool> = (0..256).map(|_| r.random()).collect();
        let t: Vec<bool> = (0..256).map(|_| r.random()).collect();
        let c = confusion(&as_mask(&p), &as_mask(&t)).map_err(|e| e.to_string())?;
        let (tp, tn, fp, fn_) = count_oracle(&p, &t);
        check(
            (c.tp, c.tn, c.fp, c.fn_) == (tp, tn, fp, fn_),
            format!("pair {i}: counts differ"),
        )?;
        check(
            accuracy(&c).unwrap() == (tp + tn) as f64 / 256.0,
            format!("pair {i}: ACC differs"),
        )?;
        check(
            sensitivity(&c).unwrap() == tp as f64 / (tp + fn_) as f64,
            format!("pair {i}: Sen differs"),
        )?;
    }
    for i in 0..100 {
        let scores: Vec<f64> = (0..256).map(|_| r.random_range(0..64) as f64 / 64.0).collect();
        let t: Vec<bool> = (0..256).map(|_| r.random_bool(0.4)).collect();
        let s = Image::new(16, 16, scores.clone()).unwrap();
        let got = auc(&s, &as_mask(&t)).map_err(|e| e.to_string())?;
        check(
            got == pair_auc(&scores, &t),
            format!("map {i}: AUC {got} vs pair oracle"),
        )?;
        let mapped = Image::new(16, 16, scores.iter().map(|v| (3.0 * v).exp() + v).collect()).unwrap();
        check(
            auc(&mapped, &as_mask(&t)).unwrap() == got,
            format!("map {i}: not monotone invariant"),
        )?;
    }
    Ok("100 mask pairs and 100 score maps exact".into())
}

fn thread_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    msfuse(&["gen-synthetic", "64", "48", "4", "--seed", "21"], d, None)?;
    for t in ["1", "8"] {
        let disp = format!("disp_{t}.pfm");
        let cloud = format!("cloud_{t}.ply");
        msfuse(
            &[
                "reconstruct",
                "synthetic_left.pgm",
                "synthetic_right.pgm",
                "--out-disparity",
                &disp,
                "--out-cloud",
                &cloud,
            ],
            d,
            Some(t),
        )?;
    }
    let read = |name: &str| std::fs::read(d.join(name)).map_err(|e| e.to_string());
    check(read("disp_1.pfm")? == read("disp_8.pfm")?, "PFM outputs differ")?;
    check(read("cloud_1.ply")? == read("cloud_8.ply")?, "PLY outputs differ")?;
    Ok("PFM and PLY byte-identical for 1 and 8 threads".into())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("WLS oracle equivalence", wls_oracle_equivalence),
        ("WLS limiting cases", wls_limiting_cases),
        ("guided-filter kernel fidelity", guided_filter_kernel_fidelity),
        ("cross-scale fusion", fusion_solver),
        ("synthetic end-to-end recovery", synthetic_recovery),
        ("shifted-image exactness", shifted_exactness),
        ("triangulation round trip", triangulation_round_trip),
        ("metrics oracles", metrics_oracles),
        ("thread-count determinism", thread_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                println!("FAIL criterion {}: {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
