//! Cross-scale fusion of aggregated cost volumes.
//!
//! The four per-scale costs `ê = (ê_0, ..., ê_3)` of a cell are replaced by
//! the minimizer of `Σ_s (v_s − ê_s)² + ζ Σ_s (v_s − v_{s−1})²`, i.e. the
//! solution of `(I + ζ L) v = ê` with `L` the Laplacian of the path graph
//! over scales.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::CostVolume;
use crate::wls::PYRAMID_LEVELS;

const SCALES: usize = PYRAMID_LEVELS;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionParams {
    /// Cross-scale coupling strength ζ.
    pub zeta: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self { zeta: 0.3 }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta.is_finite() && self.zeta >= 0.0) {
            return Err(Error::contract(format!(
                "fusion zeta must be >= 0, got {}",
                self.zeta
            )));
        }
        Ok(())
    }
}

pub type FusionMatrix = [[f64; SCALES]; SCALES];

/// `I + ζ L` for the four-node path graph.
pub fn fusion_matrix(zeta: f64) -> FusionMatrix {
    let mut m = [[0.0; SCALES]; SCALES];
    for s in 0..SCALES {
        let degree = if s == 0 || s == SCALES - 1 { 1.0 } else { 2.0 };
        m[s][s] = 1.0 + degree * zeta;
        if s + 1 < SCALES {
            m[s][s + 1] = -zeta;
            m[s + 1][s] = -zeta;
        }
    }
    m
}

/// `LDLᵀ` factorization of the tridiagonal fusion matrix.
#[derive(Clone, Copy, Debug)]
pub struct FusionSolver {
    lower: [f64; SCALES - 1],
    diag: [f64; SCALES],
}

impl FusionSolver {
    pub fn new(zeta: f64) -> Result<Self> {
        FusionParams { zeta }.validate()?;
        let m = fusion_matrix(zeta);
        let mut lower = [0.0; SCALES - 1];
        let mut diag = [0.0; SCALES];
        diag[0] = m[0][0];
        for k in 1..SCALES {
            lower[k - 1] = m[k][k - 1] / diag[k - 1];
            diag[k] = m[k][k] - lower[k - 1] * lower[k - 1] * diag[k - 1];
        }
        Ok(Self { lower, diag })
    }

    #[inline]
    pub fn solve(&self, rhs: [f64; SCALES]) -> [f64; SCALES] {
        let mut v = rhs;
        for k in 1..SCALES {
            v[k] -= self.lower[k - 1] * v[k - 1];
        }
        for (vk, d) in v.iter_mut().zip(&self.diag) {
            *vk /= d;
        }
        for k in (0..SCALES - 1).rev() {
            v[k] -= self.lower[k] * v[k + 1];
        }
        v
    }
}

/// Solves the fusion system at every `(pixel, disparity)` cell.
pub fn fuse_scales(volumes: &[CostVolume], params: &FusionParams) -> Result<Vec<CostVolume>> {
    if volumes.len() != SCALES {
        return Err(Error::contract(format!(
            "fusion needs {SCALES} cost volumes, got {}",
            volumes.len()
        )));
    }
    if volumes.iter().any(|v| !v.same_shape(&volumes[0])) {
        return Err(Error::contract("cost volumes differ in shape or disparity range"));
    }
    let solver = FusionSolver::new(params.zeta)?;
    let n = volumes[0].data().len();
    let inputs: Vec<&[f64]> = volumes.iter().map(|v| v.data()).collect();

    let fused: Vec<[f64; SCALES]> = (0..n)
        .into_par_iter()
        .map(|i| solver.solve([inputs[0][i], inputs[1][i], inputs[2][i], inputs[3][i]]))
        .collect();
    let outputs: Vec<Vec<f64>> = (0..SCALES)
        .map(|s| fused.iter().map(|v| v[s]).collect())
        .collect();
    let proto = &volumes[0];
    outputs
        .into_iter()
        .map(|data| CostVolume::new(proto.width(), proto.height(), proto.d_min(), proto.d_max(), data))
        .collect()
}
