//! Edge-preserving weighted-least-squares smoothing and the four-level
//! base-layer decomposition.
//!
//! The filtered image `σ` minimizes
//!
//! ```text
//! Σ_q (σ_q − h_q)² + η [λx_q (∇x σ_q)² + λy_q (∇y σ_q)²]
//! ```
//!
//! with `λ_axis(q) = (|∇_axis h(q)|^α + ε)⁻¹`. Setting the gradient of the
//! energy to zero gives the sparse SPD system `(I + η A) σ = h`, where `A` is
//! the five-point Laplacian whose edge between `q` and its forward neighbour
//! carries weight `λ(q)`. The system is solved matrix-free with
//! Jacobi-preconditioned conjugate gradients.

use crate::error::{Error, Result};
use crate::image::{gradient, Axis, Image};

/// Number of base layers produced by [`decompose`].
pub const PYRAMID_LEVELS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WlsParams {
    /// Smoothing strength η.
    pub eta: f64,
    /// Gradient-sensitivity exponent α.
    pub alpha: f64,
    /// Weight regularizer ε.
    pub eps_w: f64,
    /// Relative residual tolerance of the linear solve.
    pub solver_tol: f64,
    pub max_iter: usize,
    pub levels: usize,
}

impl Default for WlsParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            alpha: 1.2,
            eps_w: 1e-4,
            solver_tol: 1e-8,
            max_iter: 10_000,
            levels: PYRAMID_LEVELS,
        }
    }
}

impl WlsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::contract(format!("wls eta must be >= 0, got {}", self.eta)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::contract(format!(
                "wls alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.eps_w.is_finite() && self.eps_w > 0.0) {
            return Err(Error::contract(format!(
                "wls eps_w must be > 0, got {}",
                self.eps_w
            )));
        }
        if !(self.solver_tol.is_finite() && self.solver_tol > 0.0) {
            return Err(Error::contract(format!(
                "wls solver_tol must be > 0, got {}",
                self.solver_tol
            )));
        }
        if self.levels != PYRAMID_LEVELS {
            return Err(Error::contract(format!(
                "wls levels is fixed at {PYRAMID_LEVELS}, got {}",
                self.levels
            )));
        }
        Ok(())
    }
}

/// Smoothness weights `(λx, λy)` derived from the guide's forward gradients.
pub fn smoothness_weights(guide: &Image, params: &WlsParams) -> (Image, Image) {
    let weight = |g: f64| 1.0 / (g.abs().powf(params.alpha) + params.eps_w);
    let map = |axis| {
        let g = gradient(guide, axis);
        Image::from_raw(
            g.width(),
            g.height(),
            g.data().iter().map(|&v| weight(v)).collect(),
        )
    };
    (map(Axis::X), map(Axis::Y))
}

/// The operator `I + η A` for fixed edge weights.
#[derive(Clone, Debug)]
pub struct WlsSystem {
    width: usize,
    height: usize,
    eta: f64,
    wx: Vec<f64>,
    wy: Vec<f64>,
}

impl WlsSystem {
    pub fn new(eta: f64, wx: &Image, wy: &Image) -> Result<Self> {
        if !wx.same_shape(wy) {
            return Err(Error::contract("weight images differ in shape"));
        }
        Ok(Self {
            width: wx.width(),
            height: wx.height(),
            eta,
            wx: wx.data().to_vec(),
            wy: wy.data().to_vec(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `out = (I + η A) v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let (w, h, eta) = (self.width, self.height, self.eta);
        out.copy_from_slice(v);
        for y in 0..h {
            let row = y * w;
            for x in 0..w {
                let q = row + x;
                if x + 1 < w {
                    let f = eta * self.wx[q] * (v[q] - v[q + 1]);
                    out[q] += f;
                    out[q + 1] -= f;
                }
                if y + 1 < h {
                    let f = eta * self.wy[q] * (v[q] - v[q + w]);
                    out[q] += f;
                    out[q + w] -= f;
                }
            }
        }
    }

    /// Diagonal of `I + η A`.
    pub fn diagonal(&self) -> Vec<f64> {
        let (w, h, eta) = (self.width, self.height, self.eta);
        let mut d = vec![1.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let q = y * w + x;
                if x + 1 < w {
                    d[q] += eta * self.wx[q];
                    d[q + 1] += eta * self.wx[q];
                }
                if y + 1 < h {
                    d[q] += eta * self.wy[q];
                    d[q + w] += eta * self.wy[q];
                }
            }
        }
        d
    }

    /// Weighted smoothness term `Σ_q λx (∇x v)² + λy (∇y v)²` (without η).
    pub fn smoothness(&self, v: &[f64]) -> f64 {
        let (w, h) = (self.width, self.height);
        let mut s = 0.0;
        for y in 0..h {
            for x in 0..w {
                let q = y * w + x;
                if x + 1 < w {
                    s += self.wx[q] * (v[q + 1] - v[q]).powi(2);
                }
                if y + 1 < h {
                    s += self.wy[q] * (v[q + w] - v[q]).powi(2);
                }
            }
        }
        s
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Iteration summary of a successful solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `system · σ = rhs` with Jacobi-preconditioned CG starting from
/// `σ = rhs`. Convergence is confirmed on the true residual.
pub fn solve_pcg(
    system: &WlsSystem,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = rhs.len();
    let rhs_norm = dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = system.diagonal().iter().map(|d| 1.0 / d).collect();

    let mut x = rhs.to_vec();
    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];

    let true_residual = |x: &[f64], ax: &mut [f64], r: &mut [f64]| {
        system.apply(x, ax);
        for i in 0..n {
            r[i] = rhs[i] - ax[i];
        }
        dot(r, r).sqrt() / rhs_norm
    };

    let mut rel = true_residual(&x, &mut ax, &mut r);
    let mut iterations = 0;
    'restart: loop {
        if rel <= tol {
            return Ok((
                x,
                SolveStats {
                    iterations,
                    residual: rel,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            system.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if dot(&r, &r).sqrt() / rhs_norm <= tol {
                rel = true_residual(&x, &mut ax, &mut r);
                continue 'restart;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let residual = true_residual(&x, &mut ax, &mut r);
        if residual <= tol {
            return Ok((x, SolveStats { iterations, residual }));
        }
        return Err(Error::NumericFailure { residual, iterations });
    }
}

/// Smooths `h` with explicit edge weights; `wx`/`wy` must match `h` in shape.
pub fn wls_filter_weighted(h: &Image, wx: &Image, wy: &Image, params: &WlsParams) -> Result<Image> {
    params.validate()?;
    if !h.same_shape(wx) || !h.same_shape(wy) {
        return Err(Error::contract("weights must match the image shape"));
    }
    if params.eta == 0.0 {
        return Ok(h.clone());
    }
    let system = WlsSystem::new(params.eta, wx, wy)?;
    let (sigma, _) = solve_pcg(&system, h.data(), params.solver_tol, params.max_iter)?;
    Image::new(h.width(), h.height(), sigma)
}

/// Edge-preserving WLS filter of `h`, guided by its own gradients.
pub fn wls_filter(h: &Image, params: &WlsParams) -> Result<Image> {
    params.validate()?;
    let (wx, wy) = smoothness_weights(h, params);
    wls_filter_weighted(h, &wx, &wy, params)
}

/// Value of the WLS objective at `sigma` for data `h`, with weights from `h`.
pub fn wls_energy(sigma: &Image, h: &Image, params: &WlsParams) -> Result<f64> {
    if !sigma.same_shape(h) {
        return Err(Error::contract("sigma and h differ in shape"));
    }
    let (wx, wy) = smoothness_weights(h, params);
    let system = WlsSystem::new(params.eta, &wx, &wy)?;
    let data: f64 = sigma
        .data()
        .iter()
        .zip(h.data())
        .map(|(s, v)| (s - v).powi(2))
        .sum();
    Ok(data + params.eta * system.smoothness(sigma.data()))
}

/// Base layers `[R0, R1, R2, R3]`, each the WLS filtering of its predecessor.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalePyramid {
    layers: Vec<Image>,
}

impl ScalePyramid {
    pub fn from_layers(layers: Vec<Image>) -> Result<Self> {
        if layers.len() != PYRAMID_LEVELS {
            return Err(Error::contract(format!(
                "pyramid needs {PYRAMID_LEVELS} layers, got {}",
                layers.len()
            )));
        }
        if layers.iter().any(|l| !l.same_shape(&layers[0])) {
            return Err(Error::contract("pyramid layers differ in shape"));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Image] {
        &self.layers
    }

    pub fn layer(&self, s: usize) -> &Image {
        &self.layers[s]
    }

    /// Detail layers `R_s − R_{s+1}` for `s = 0..3`.
    pub fn details(&self) -> Vec<Image> {
        self.layers
            .windows(2)
            .map(|w| w[0].sub(&w[1]).expect("same-shaped layers"))
            .collect()
    }

    pub fn mirror_x(&self) -> ScalePyramid {
        ScalePyramid {
            layers: self.layers.iter().map(Image::mirror_x).collect(),
        }
    }
}

pub fn decompose(r0: &Image, params: &WlsParams) -> Result<ScalePyramid> {
    params.validate()?;
    let mut layers = Vec::with_capacity(PYRAMID_LEVELS);
    layers.push(r0.clone());
    for s in 1..PYRAMID_LEVELS {
        let next = wls_filter(&layers[s - 1], params)?;
        layers.push(next);
    }
    Ok(ScalePyramid { layers })
}
