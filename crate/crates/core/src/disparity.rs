//! Disparity extraction: winner-take-all, parabolic subpixel refinement,
//! left-right consistency and background-favouring hole filling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{is_valid, CostVolume, DisparityMap, INVALID_DISPARITY};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisparityParams {
    pub lr_threshold: f64,
    pub subpixel: bool,
    pub fill_invalid: bool,
}

impl Default for DisparityParams {
    fn default() -> Self {
        Self {
            lr_threshold: 1.0,
            subpixel: true,
            fill_invalid: true,
        }
    }
}

impl DisparityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_threshold.is_finite() && self.lr_threshold > 0.0) {
            return Err(Error::contract(format!(
                "lr_threshold must be > 0, got {}",
                self.lr_threshold
            )));
        }
        Ok(())
    }
}

/// Per-pixel argmin over disparities; ties go to the smallest disparity.
pub fn wta(volume: &CostVolume) -> DisparityMap {
    let (w, h) = (volume.width(), volume.height());
    let n = w * h;
    let data = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = 0;
            let mut best_cost = volume.slice(0)[i];
            for k in 1..volume.depth() {
                let c = volume.slice(k)[i];
                if c < best_cost {
                    best = k;
                    best_cost = c;
                }
            }
            (volume.d_min() + best) as f64
        })
        .collect();
    DisparityMap::from_raw(w, h, data)
}

/// Vertex offset of the parabola through `(−1, minus)`, `(0, centre)`,
/// `(1, plus)`, clamped to `[−0.5, 0.5]`; zero for a degenerate fit.
pub fn parabola_offset(minus: f64, centre: f64, plus: f64) -> f64 {
    let denom = minus - 2.0 * centre + plus;
    if denom.abs() <= 1e-12 {
        return 0.0;
    }
    ((minus - plus) / (2.0 * denom)).clamp(-0.5, 0.5)
}

/// Refines integer winners strictly inside the disparity range.
pub fn subpixel_refine(volume: &CostVolume, d: &DisparityMap) -> Result<DisparityMap> {
    if d.width() != volume.width() || d.height() != volume.height() {
        return Err(Error::contract("disparity map and cost volume differ in shape"));
    }
    let w = volume.width();
    let (lo, hi) = (volume.d_min(), volume.d_max());
    let data = d
        .data()
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            if !is_valid(v) || v.fract() != 0.0 {
                return v;
            }
            let c = v as usize;
            if c <= lo || c >= hi {
                return v;
            }
            let (x, y) = (i % w, i / w);
            let offset = parabola_offset(
                volume.get(x, y, c - 1),
                volume.get(x, y, c),
                volume.get(x, y, c + 1),
            );
            v + offset
        })
        .collect();
    Ok(DisparityMap::from_raw(d.width(), d.height(), data))
}

/// Invalidates left pixels whose disparity disagrees with the right view's
/// disparity at the corresponding pixel by more than `threshold`.
pub fn lr_consistency(d_left: &DisparityMap, d_right: &DisparityMap, threshold: f64) -> Result<DisparityMap> {
    if d_left.width() != d_right.width() || d_left.height() != d_right.height() {
        return Err(Error::contract("left and right disparity maps differ in shape"));
    }
    let w = d_left.width();
    let data = d_left
        .data()
        .iter()
        .enumerate()
        .map(|(i, &dl)| {
            if !is_valid(dl) {
                return INVALID_DISPARITY;
            }
            let (x, y) = (i % w, i / w);
            let xr = x as f64 - dl.round();
            if xr < 0.0 || xr >= w as f64 {
                return INVALID_DISPARITY;
            }
            let dr = d_right.get(xr as usize, y);
            if !is_valid(dr) || (dl - dr).abs() > threshold {
                INVALID_DISPARITY
            } else {
                dl
            }
        })
        .collect();
    Ok(DisparityMap::from_raw(d_left.width(), d_left.height(), data))
}

/// Fills each invalid pixel with the smaller of the nearest valid
/// disparities to its left and right in the same row.
pub fn fill_invalid(d: &DisparityMap) -> DisparityMap {
    let w = d.width();
    let data: Vec<f64> = d
        .data()
        .par_chunks(w)
        .flat_map_iter(|row| {
            let mut left = vec![None; w];
            let mut last = None;
            for x in 0..w {
                if is_valid(row[x]) {
                    last = Some(row[x]);
                }
                left[x] = last;
            }
            let mut out = row.to_vec();
            let mut next: Option<f64> = None;
            for x in (0..w).rev() {
                if is_valid(row[x]) {
                    next = Some(row[x]);
                    continue;
                }
                out[x] = match (left[x], next) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => INVALID_DISPARITY,
                };
            }
            out
        })
        .collect();
    DisparityMap::from_raw(w, d.height(), data)
}
