//! Guided-filter cost aggregation.
//!
//! For a guide `W` and window radius `r`, the guided-filter kernel is
//!
//! ```text
//! L(i, j) = 1/|λ|² · Σ_{l : i, j ∈ λ_l} [1 + (W_i − δ_l)(W_j − δ_l) / (φ_l² + ξ)]
//! ```
//!
//! where `λ_l` is the window centred at `l` (clipped to the image), `δ_l` and
//! `φ_l²` the guide's mean and variance over it and `|λ| = (2r + 1)²`. The
//! filtered value is `Σ_j L(i, j) p_j / N_i` with `N_i = Σ_j L(i, j)`.
//!
//! [`GuidedFilter`] evaluates this in O(1) per pixel: per-window linear
//! coefficients `a_l = cov_l(W, p) / (φ_l² + ξ)`, `b_l = mean_l(p) − a_l δ_l`,
//! followed by a pixel-count weighted average of `a_l W_i + b_l` over the
//! windows covering `i`. Away from the border every window holds `|λ|`
//! pixels and this is the usual mean of coefficients; near the border the
//! count weighting keeps the result equal to the normalized kernel sum.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{CostVolume, Image};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GuidedFilterParams {
    pub radius: usize,
    /// Regularization ξ.
    pub xi: f64,
}

impl Default for GuidedFilterParams {
    fn default() -> Self {
        Self { radius: 4, xi: 1e-4 }
    }
}

impl GuidedFilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(Error::contract("guided filter radius must be at least 1"));
        }
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(Error::contract(format!(
                "guided filter xi must be > 0, got {}",
                self.xi
            )));
        }
        Ok(())
    }

    /// Full window size `|λ| = (2r + 1)²`.
    pub fn window_len(&self) -> usize {
        (2 * self.radius + 1).pow(2)
    }
}

/// Sum over the `(2r+1)²` window clipped to the image, via running sums
/// along rows then columns.
fn box_sum(data: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let mut horiz = vec![0.0; w * h];
    let mut prefix = vec![0.0; w.max(h) + 1];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..w {
            prefix[x + 1] = prefix[x] + row[x];
        }
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            horiz[y * w + x] = prefix[hi + 1] - prefix[lo];
        }
    }
    let mut out = vec![0.0; w * h];
    for x in 0..w {
        for y in 0..h {
            prefix[y + 1] = prefix[y] + horiz[y * w + x];
        }
        for y in 0..h {
            let lo = y.saturating_sub(r);
            let hi = (y + r).min(h - 1);
            out[y * w + x] = prefix[hi + 1] - prefix[lo];
        }
    }
    out
}

/// Number of in-image pixels in each clipped window.
fn box_count(w: usize, h: usize, r: usize) -> Vec<f64> {
    let span = |i: usize, n: usize| ((i + r).min(n - 1) - i.saturating_sub(r) + 1) as f64;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let sy = span(y, h);
        for x in 0..w {
            out.push(span(x, w) * sy);
        }
    }
    out
}

/// Mean over the window of radius `radius` clipped to the image bounds.
pub fn box_mean(img: &Image, radius: usize) -> Image {
    let (w, h) = (img.width(), img.height());
    let sums = box_sum(img.data(), w, h, radius);
    let counts = box_count(w, h, radius);
    Image::from_raw(w, h, sums.iter().zip(&counts).map(|(s, n)| s / n).collect())
}

/// Explicit kernel `L(i, j)`; `i` and `j` are `(x, y)` pixel coordinates.
///
/// Window statistics are computed directly over each clipped window. This is
/// the quadratic-cost reference for [`GuidedFilter`].
pub fn kernel_weight(
    guide: &Image,
    i: (usize, usize),
    j: (usize, usize),
    params: &GuidedFilterParams,
) -> f64 {
    let (w, h) = (guide.width() as isize, guide.height() as isize);
    let r = params.radius as isize;
    let (ix, iy) = (i.0 as isize, i.1 as isize);
    let (jx, jy) = (j.0 as isize, j.1 as isize);
    let wi = guide.get(i.0, i.1);
    let wj = guide.get(j.0, j.1);
    let mut sum = 0.0;
    for ly in (iy.max(jy) - r).max(0)..=(iy.min(jy) + r).min(h - 1) {
        for lx in (ix.max(jx) - r).max(0)..=(ix.min(jx) + r).min(w - 1) {
            let mut n = 0.0;
            let mut acc = 0.0;
            for y in (ly - r).max(0)..=(ly + r).min(h - 1) {
                for x in (lx - r).max(0)..=(lx + r).min(w - 1) {
                    acc += guide.get(x as usize, y as usize);
                    n += 1.0;
                }
            }
            let mean = acc / n;
            let mut var = 0.0;
            for y in (ly - r).max(0)..=(ly + r).min(h - 1) {
                for x in (lx - r).max(0)..=(lx + r).min(w - 1) {
                    var += (guide.get(x as usize, y as usize) - mean).powi(2);
                }
            }
            var /= n;
            sum += 1.0 + (wi - mean) * (wj - mean) / (var + params.xi);
        }
    }
    let len = params.window_len() as f64;
    sum / (len * len)
}

/// Guided filter with guide statistics precomputed for reuse across inputs.
#[derive(Clone, Debug)]
pub struct GuidedFilter {
    guide: Image,
    params: GuidedFilterParams,
    counts: Vec<f64>,
    count_cover: Vec<f64>,
    mean_guide: Vec<f64>,
    var_guide: Vec<f64>,
}

impl GuidedFilter {
    pub fn new(guide: &Image, params: &GuidedFilterParams) -> Result<Self> {
        params.validate()?;
        let (w, h, r) = (guide.width(), guide.height(), params.radius);
        let counts = box_count(w, h, r);
        let count_cover = box_sum(&counts, w, h, r);
        let sums = box_sum(guide.data(), w, h, r);
        let sq: Vec<f64> = guide.data().iter().map(|v| v * v).collect();
        let sq_sums = box_sum(&sq, w, h, r);
        let mean_guide: Vec<f64> = sums.iter().zip(&counts).map(|(s, n)| s / n).collect();
        let var_guide = sq_sums
            .iter()
            .zip(&counts)
            .zip(&mean_guide)
            .map(|((s, n), m)| (s / n - m * m).max(0.0))
            .collect();
        Ok(Self {
            guide: guide.clone(),
            params: *params,
            counts,
            count_cover,
            mean_guide,
            var_guide,
        })
    }

    pub fn guide(&self) -> &Image {
        &self.guide
    }

    /// Filters raw row-major samples of the guide's shape.
    pub fn filter_slice(&self, input: &[f64]) -> Vec<f64> {
        let (w, h, r) = (self.guide.width(), self.guide.height(), self.params.radius);
        let g = self.guide.data();
        let n = w * h;
        debug_assert_eq!(input.len(), n);

        let sum_p = box_sum(input, w, h, r);
        let gp: Vec<f64> = g.iter().zip(input).map(|(a, b)| a * b).collect();
        let sum_gp = box_sum(&gp, w, h, r);

        let mut na = vec![0.0; n];
        let mut nb = vec![0.0; n];
        for l in 0..n {
            let cnt = self.counts[l];
            let mean_p = sum_p[l] / cnt;
            let cov = sum_gp[l] / cnt - self.mean_guide[l] * mean_p;
            let a = cov / (self.var_guide[l] + self.params.xi);
            let b = mean_p - a * self.mean_guide[l];
            na[l] = cnt * a;
            nb[l] = cnt * b;
        }
        let sa = box_sum(&na, w, h, r);
        let sb = box_sum(&nb, w, h, r);
        (0..n)
            .map(|i| (sa[i] * g[i] + sb[i]) / self.count_cover[i])
            .collect()
    }

    pub fn filter(&self, input: &Image) -> Result<Image> {
        if !input.same_shape(&self.guide) {
            return Err(Error::contract("guide and input differ in shape"));
        }
        Image::new(input.width(), input.height(), self.filter_slice(input.data()))
    }
}

pub fn guided_filter(guide: &Image, input: &Image, params: &GuidedFilterParams) -> Result<Image> {
    GuidedFilter::new(guide, params)?.filter(input)
}

/// Guided-filters every disparity slice of `volume` with the same guide;
/// negative results are clamped to zero.
pub fn aggregate_cost(guide: &Image, volume: &CostVolume, params: &GuidedFilterParams) -> Result<CostVolume> {
    if guide.width() != volume.width() || guide.height() != volume.height() {
        return Err(Error::contract(format!(
            "guide {}x{} does not match cost volume {}x{}",
            guide.width(),
            guide.height(),
            volume.width(),
            volume.height()
        )));
    }
    let filter = GuidedFilter::new(guide, params)?;
    let slices: Vec<Vec<f64>> = (0..volume.depth())
        .into_par_iter()
        .map(|k| {
            let mut out = filter.filter_slice(volume.slice(k));
            for v in &mut out {
                *v = v.max(0.0);
            }
            out
        })
        .collect();
    CostVolume::from_slices(volume.width(), volume.height(), volume.d_min(), slices)
}
