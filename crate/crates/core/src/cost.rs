//! Pixelwise matching cost: truncated absolute difference, truncated
//! x-gradient difference and normalized census Hamming distance.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{gradient, Axis, CostVolume, Image};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostParams {
    pub d_min: usize,
    pub d_max: usize,
    pub w_ad: f64,
    pub w_grad: f64,
    pub w_cen: f64,
    pub tau_ad: f64,
    pub tau_grad: f64,
    pub census_radius: usize,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            d_min: 0,
            d_max: 32,
            w_ad: 0.3,
            w_grad: 0.3,
            w_cen: 0.4,
            tau_ad: 0.12,
            tau_grad: 0.08,
            census_radius: 2,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.w_ad, self.w_grad, self.w_cen];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::contract("cost weights must be finite and non-negative"));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::contract("cost weights must not all be zero"));
        }
        if !(self.tau_ad.is_finite() && self.tau_ad > 0.0 && self.tau_grad.is_finite() && self.tau_grad > 0.0)
        {
            return Err(Error::contract("cost truncations must be positive"));
        }
        if self.d_min > self.d_max {
            return Err(Error::contract(format!(
                "d_min {} exceeds d_max {}",
                self.d_min, self.d_max
            )));
        }
        if self.census_radius == 0 {
            return Err(Error::contract("census radius must be at least 1"));
        }
        Ok(())
    }

    /// Largest cost any cell can take.
    pub fn max_cost(&self) -> f64 {
        self.w_ad * self.tau_ad + self.w_grad * self.tau_grad + self.w_cen
    }
}

/// Census bit strings, one per pixel.
///
/// Bit `k` refers to the `k`-th neighbour of the window in row-major order
/// with the centre skipped; it is set iff that neighbour is strictly darker
/// than the centre. Out-of-bounds neighbours count as equal to the centre.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusImage {
    width: usize,
    height: usize,
    radius: usize,
    bits: usize,
    words: usize,
    codes: Vec<u64>,
}

impl CensusImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Code length, `(2r + 1)² − 1`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn code(&self, x: usize, y: usize) -> &[u64] {
        let i = (y * self.width + x) * self.words;
        &self.codes[i..i + self.words]
    }

    pub fn bit(&self, x: usize, y: usize, k: usize) -> bool {
        (self.code(x, y)[k / 64] >> (k % 64)) & 1 == 1
    }

    /// Code at `(x, y)` as a string of `0`/`1`, bit 0 first.
    pub fn code_string(&self, x: usize, y: usize) -> String {
        (0..self.bits)
            .map(|k| if self.bit(x, y, k) { '1' } else { '0' })
            .collect()
    }

    pub fn hamming(&self, a: (usize, usize), other: &CensusImage, b: (usize, usize)) -> u32 {
        self.code(a.0, a.1)
            .iter()
            .zip(other.code(b.0, b.1))
            .map(|(p, q)| (p ^ q).count_ones())
            .sum()
    }
}

pub fn census_transform(img: &Image, radius: usize) -> Result<CensusImage> {
    if radius == 0 {
        return Err(Error::contract("census radius must be at least 1"));
    }
    let (w, h) = (img.width(), img.height());
    let side = 2 * radius + 1;
    let bits = side * side - 1;
    let words = bits.div_ceil(64);
    let r = radius as isize;
    let mut codes = vec![0u64; w * h * words];
    for y in 0..h {
        for x in 0..w {
            let centre = img.get(x, y);
            let code = &mut codes[(y * w + x) * words..(y * w + x + 1) * words];
            let mut k = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    let inside = nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h;
                    if inside && img.get(nx as usize, ny as usize) < centre {
                        code[k / 64] |= 1 << (k % 64);
                    }
                    k += 1;
                }
            }
        }
    }
    Ok(CensusImage {
        width: w,
        height: h,
        radius,
        bits,
        words,
        codes,
    })
}

/// Cost volume `E(j, c)` comparing left pixel `(x, y)` with right pixel
/// `(x − c, y)`. Right samples outside the image take the maximal cost of
/// every term.
pub fn match_cost(left: &Image, right: &Image, params: &CostParams) -> Result<CostVolume> {
    params.validate()?;
    if !left.same_shape(right) {
        return Err(Error::contract(format!(
            "left {}x{} and right {}x{} differ in shape",
            left.width(),
            left.height(),
            right.width(),
            right.height()
        )));
    }
    let (w, h) = (left.width(), left.height());
    let gl = gradient(left, Axis::X);
    let gr = gradient(right, Axis::X);
    let cl = census_transform(left, params.census_radius)?;
    let cr = census_transform(right, params.census_radius)?;
    let bits = cl.bits() as f64;
    let max_cost = params.max_cost();

    let slices: Vec<Vec<f64>> = (params.d_min..=params.d_max)
        .into_par_iter()
        .map(|c| {
            let mut slice = vec![max_cost; w * h];
            for y in 0..h {
                for x in c..w {
                    let xr = x - c;
                    let ad = (left.get(x, y) - right.get(xr, y)).abs().min(params.tau_ad);
                    let gd = (gl.get(x, y) - gr.get(xr, y)).abs().min(params.tau_grad);
                    let cen = cl.hamming((x, y), &cr, (xr, y)) as f64 / bits;
                    slice[y * w + x] = params.w_ad * ad + params.w_grad * gd + params.w_cen * cen;
                }
            }
            slice
        })
        .collect();
    CostVolume::from_slices(w, h, params.d_min, slices)
}
