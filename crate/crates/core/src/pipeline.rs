//! End-to-end orchestration and output staging used by the CLI.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::aggregate::aggregate_cost;
use crate::config::PipelineConfig;
use crate::cost::match_cost;
use crate::disparity::{fill_invalid, lr_consistency, subpixel_refine, wta};
use crate::error::{Error, Result};
use crate::fusion::fuse_scales;
use crate::image::{CostVolume, DisparityMap, Image};
use crate::io::{encode, ImageFormat};
use crate::reconstruct::{triangulate_with_threshold, PointCloud};
use crate::wls::{decompose, ScalePyramid};

/// Environment variable capping worker threads (`0` or unset: automatic).
pub const THREADS_ENV: &str = "MSFUSE_THREADS";

/// Single-view result of the multi-scale matcher.
#[derive(Clone, Debug)]
pub struct ViewDisparity {
    /// Guided-filter aggregated costs per scale, before fusion.
    pub aggregated: Vec<CostVolume>,
    /// Fused cost volume of scale 0.
    pub fused: CostVolume,
    /// Integer winner-take-all disparities.
    pub winners: DisparityMap,
    /// Winners after optional subpixel refinement.
    pub disparity: DisparityMap,
}

/// Matches `left` against `right` (pixel `x` against `x − c`) using their
/// pyramids and returns the view's disparity.
pub fn match_view(left: &ScalePyramid, right: &ScalePyramid, cfg: &PipelineConfig) -> Result<ViewDisparity> {
    let aggregated: Vec<CostVolume> = left
        .layers()
        .par_iter()
        .zip(right.layers().par_iter())
        .map(|(l, r)| {
            let raw = match_cost(l, r, &cfg.cost)?;
            aggregate_cost(l, &raw, &cfg.aggregate)
        })
        .collect::<Result<_>>()?;
    let fused = fuse_scales(&aggregated, &cfg.fusion)?
        .into_iter()
        .next()
        .expect("four fused volumes");
    let winners = wta(&fused);
    let disparity = if cfg.disparity.subpixel {
        subpixel_refine(&fused, &winners)?
    } else {
        winners.clone()
    };
    Ok(ViewDisparity {
        aggregated,
        fused,
        winners,
        disparity,
    })
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub left_pyramid: ScalePyramid,
    pub right_pyramid: ScalePyramid,
    pub left_view: ViewDisparity,
    /// Right-view disparity, in right-image coordinates.
    pub right_disparity: DisparityMap,
    /// Left disparity after the left-right check, before filling.
    pub checked: DisparityMap,
    /// Final left disparity.
    pub disparity: DisparityMap,
    pub cloud: PointCloud,
}

pub fn reconstruct(left: &Image, right: &Image, cfg: &PipelineConfig) -> Result<Reconstruction> {
    if !left.same_shape(right) {
        return Err(Error::contract(format!(
            "left {}x{} and right {}x{} differ in shape",
            left.width(),
            left.height(),
            right.width(),
            right.height()
        )));
    }
    cfg.validate()?;
    let rig = cfg.rig.rig_for(left.width(), left.height());
    rig.validate(left.width(), left.height())?;

    let (lp, rp) = rayon::join(|| decompose(left, &cfg.wls), || decompose(right, &cfg.wls));
    let (left_pyramid, right_pyramid) = (lp?, rp?);

    // The right view is the left-view matcher run on the mirrored pair.
    let (left_view, mirrored) = rayon::join(
        || match_view(&left_pyramid, &right_pyramid, cfg),
        || match_view(&right_pyramid.mirror_x(), &left_pyramid.mirror_x(), cfg),
    );
    let left_view = left_view?;
    let right_disparity = mirrored?.disparity.mirror_x();

    let checked = lr_consistency(&left_view.disparity, &right_disparity, cfg.disparity.lr_threshold)?;
    let disparity = if cfg.disparity.fill_invalid {
        fill_invalid(&checked)
    } else {
        checked.clone()
    };
    let cloud = triangulate_with_threshold(&disparity, &rig, Some(left), cfg.rig.min_disparity)?;
    Ok(Reconstruction {
        left_pyramid,
        right_pyramid,
        left_view,
        right_disparity,
        checked,
        disparity,
        cloud,
    })
}

/// Rayon pool honouring [`THREADS_ENV`].
pub fn thread_pool_from_env() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
}

/// Files written together: either all land at their final paths or none do.
#[derive(Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    pub fn add_image(&mut self, path: impl Into<PathBuf>, img: &Image, format: ImageFormat) -> Result<()> {
        let bytes = encode(img, format)?;
        self.add(path, bytes);
        Ok(())
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    /// Writes every file to a temporary sibling, then renames them into
    /// place. On failure the temporaries are removed.
    pub fn commit(self) -> Result<()> {
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(self.files.len());
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = fs::remove_file(tmp);
            }
        };
        for (path, bytes) in &self.files {
            let mut name = path.file_name().unwrap_or_default().to_os_string();
            name.push(".msfuse-partial");
            let tmp = path.with_file_name(name);
            if let Err(e) = fs::write(&tmp, bytes) {
                cleanup(&staged);
                return Err(Error::io(path, e));
            }
            staged.push((tmp, path.clone()));
        }
        for (i, (tmp, path)) in staged.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, path) {
                cleanup(&staged[i..]);
                return Err(Error::io(path, e));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new();
        out.add(dir.path().join("a.txt"), b"a".to_vec());
        out.add(dir.path().join("b.txt"), b"b".to_vec());
        out.commit().unwrap();
        assert_eq!(fs::read(dir.path().join("a.txt")).unwrap(), b"a");
        assert_eq!(fs::read(dir.path().join("b.txt")).unwrap(), b"b");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn failed_commit_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new();
        out.add(dir.path().join("ok.txt"), b"x".to_vec());
        out.add(dir.path().join("missing/sub/no.txt"), b"y".to_vec());
        assert!(matches!(out.commit(), Err(Error::Io { .. })));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn mismatched_pair_rejected() {
        let cfg = PipelineConfig::default();
        let r = reconstruct(&Image::filled(8, 8, 0.1), &Image::filled(9, 8, 0.1), &cfg);
        assert!(matches!(r, Err(Error::Contract(_))));
    }
}
