#![allow(dead_code)]

use msfuse::aggregate::{kernel_weight, GuidedFilterParams};
use msfuse::wls::WlsParams;
use msfuse::Image;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |_, _| rng.random::<f64>())
}

/// Dense `I + η (Dxᵀ Λx Dx + Dyᵀ Λy Dy)` assembled from explicit
/// forward-difference operators, with weights from the scalar formula.
pub fn dense_wls_matrix(h: &Image, params: &WlsParams) -> DMatrix<f64> {
    let (w, ht) = (h.width(), h.height());
    let n = w * ht;
    let idx = |x: usize, y: usize| y * w + x;
    let lambda = |g: f64| 1.0 / (g.abs().powf(params.alpha) + params.eps_w);
    let mut dx = DMatrix::<f64>::zeros(n, n);
    let mut dy = DMatrix::<f64>::zeros(n, n);
    let mut lx = DMatrix::<f64>::zeros(n, n);
    let mut ly = DMatrix::<f64>::zeros(n, n);
    for y in 0..ht {
        for x in 0..w {
            let q = idx(x, y);
            if x + 1 < w {
                dx[(q, idx(x + 1, y))] = 1.0;
                dx[(q, q)] = -1.0;
                lx[(q, q)] = lambda(h.get(x + 1, y) - h.get(x, y));
            } else {
                lx[(q, q)] = lambda(0.0);
            }
            if y + 1 < ht {
                dy[(q, idx(x, y + 1))] = 1.0;
                dy[(q, q)] = -1.0;
                ly[(q, q)] = lambda(h.get(x, y + 1) - h.get(x, y));
            } else {
                ly[(q, q)] = lambda(0.0);
            }
        }
    }
    let a = dx.transpose() * lx * &dx + dy.transpose() * ly * &dy;
    DMatrix::<f64>::identity(n, n) + a * params.eta
}

/// WLS filtering by dense LU factorization.
pub fn dense_wls(h: &Image, params: &WlsParams) -> Image {
    let m = dense_wls_matrix(h, params);
    let rhs = DVector::from_column_slice(h.data());
    let sol = m.lu().solve(&rhs).expect("non-singular WLS system");
    Image::new(h.width(), h.height(), sol.as_slice().to_vec()).unwrap()
}

/// Normalized explicit kernel sum `Σ_j L(i,j) p_j / Σ_j L(i,j)`.
pub fn kernel_sum_filter(guide: &Image, input: &Image, params: &GuidedFilterParams) -> Image {
    let (w, h) = (guide.width(), guide.height());
    let r = 2 * params.radius;
    Image::from_fn(w, h, |x, y| {
        let mut num = 0.0;
        let mut den = 0.0;
        for jy in y.saturating_sub(r)..=(y + r).min(h - 1) {
            for jx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                let l = kernel_weight(guide, (x, y), (jx, jy), params);
                num += l * input.get(jx, jy);
                den += l;
            }
        }
        num / den
    })
}

/// Pixels whose every covering window lies inside the image.
pub fn interior(w: usize, h: usize, radius: usize) -> impl Iterator<Item = (usize, usize)> {
    let m = 2 * radius;
    (m..h.saturating_sub(m)).flat_map(move |y| (m..w.saturating_sub(m)).map(move |x| (x, y)))
}

/// Naive clipped-window mean.
pub fn naive_box_mean(img: &Image, r: usize) -> Image {
    let (w, h) = (img.width(), img.height());
    Image::from_fn(w, h, |x, y| {
        let mut s = 0.0;
        let mut n = 0.0;
        for yy in y.saturating_sub(r)..=(y + r).min(h - 1) {
            for xx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                s += img.get(xx, yy);
                n += 1.0;
            }
        }
        s / n
    })
}

/// 4×4 dense solve `(I + ζL) v = e` by LU.
pub fn dense_fusion_solve(zeta: f64, e: [f64; 4]) -> [f64; 4] {
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0 + zeta,
            -zeta,
            0.0,
            0.0,
            -zeta,
            1.0 + 2.0 * zeta,
            -zeta,
            0.0,
            0.0,
            -zeta,
            1.0 + 2.0 * zeta,
            -zeta,
            0.0,
            0.0,
            -zeta,
            1.0 + zeta,
        ],
    );
    let v = m.lu().solve(&DVector::from_column_slice(&e)).unwrap();
    [v[0], v[1], v[2], v[3]]
}

/// Exhaustive pairwise AUC: wins plus half ties over all (pos, neg) pairs.
pub fn pair_auc(scores: &[f64], truth: &[bool]) -> f64 {
    let mut wins = 0u64;
    let mut ties = 0u64;
    let mut pairs = 0u64;
    for (i, &ti) in truth.iter().enumerate() {
        if !ti {
            continue;
        }
        for (j, &tj) in truth.iter().enumerate() {
            if tj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins += 1;
            } else if scores[i] == scores[j] {
                ties += 1;
            }
        }
    }
    (wins as f64 + 0.5 * ties as f64) / pairs as f64
}

/// Four-way per-pixel count `(tp, tn, fp, fn)`.
pub fn count_oracle(pred: &[bool], truth: &[bool]) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        if p && t {
            c.0 += 1;
        }
        if !p && !t {
            c.1 += 1;
        }
        if p && !t {
            c.2 += 1;
        }
        if !p && t {
            c.3 += 1;
        }
    }
    c
}

/// Right view that is `left` circularly shifted left by `k` pixels, so
/// left pixel `x` appears at right pixel `x − k`.
pub fn circular_shift(left: &Image, k: usize) -> Image {
    let w = left.width();
    Image::from_fn(w, left.height(), |x, y| left.get((x + k) % w, y))
}
