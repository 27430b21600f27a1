//! Flat `key = value` pipeline configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Unknown keys and repeated keys are errors. [`PipelineConfig::to_canonical`]
//! prints every key in a fixed order, and parsing that text yields the same
//! configuration.
//!
//! | key | default |
//! |-----|---------|
//! | `wls.eta` | 1.0 |
//! | `wls.alpha` | 1.2 |
//! | `wls.eps_w` | 1e-4 |
//! | `wls.solver_tol` | 1e-8 |
//! | `wls.max_iter` | 10000 |
//! | `wls.levels` | 4 (fixed) |
//! | `cost.d_min` | 0 |
//! | `cost.d_max` | 32 |
//! | `cost.w_ad` / `cost.w_grad` / `cost.w_cen` | 0.3 / 0.3 / 0.4 |
//! | `cost.tau_ad` / `cost.tau_grad` | 0.12 / 0.08 |
//! | `cost.census_radius` | 2 |
//! | `aggregate.radius` | 4 |
//! | `aggregate.xi` | 1e-4 |
//! | `fusion.zeta` | 0.3 |
//! | `disparity.lr_threshold` | 1.0 |
//! | `disparity.subpixel` | true |
//! | `disparity.fill_invalid` | true |
//! | `rig.focal_px` | 525.0 |
//! | `rig.baseline_m` | 0.1 |
//! | `rig.cx` / `rig.cy` | `auto` (image centre) |
//! | `rig.min_disparity` | 1e-6 |

use std::collections::HashSet;
use std::path::Path;

use crate::aggregate::GuidedFilterParams;
use crate::cost::CostParams;
use crate::disparity::DisparityParams;
use crate::error::{Error, Result};
use crate::fusion::FusionParams;
use crate::reconstruct::{CameraRig, DEFAULT_MIN_DISPARITY};
use crate::wls::WlsParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigConfig {
    pub focal_px: f64,
    pub baseline_m: f64,
    /// `None` places the principal point at the image centre.
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub min_disparity: f64,
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            focal_px: 525.0,
            baseline_m: 0.1,
            cx: None,
            cy: None,
            min_disparity: DEFAULT_MIN_DISPARITY,
        }
    }
}

impl RigConfig {
    pub fn rig_for(&self, width: usize, height: usize) -> CameraRig {
        let centred = CameraRig::centred(self.focal_px, self.baseline_m, width, height);
        CameraRig {
            cx: self.cx.unwrap_or(centred.cx),
            cy: self.cy.unwrap_or(centred.cy),
            ..centred
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineConfig {
    pub wls: WlsParams,
    pub cost: CostParams,
    pub aggregate: GuidedFilterParams,
    pub fusion: FusionParams,
    pub disparity: DisparityParams,
    pub rig: RigConfig,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_auto(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

fn auto_str(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |v| format!("{v:?}"))
}

impl PipelineConfig {
    pub fn keys() -> Vec<&'static str> {
        Self::default().entries().into_iter().map(|(k, _)| k).collect()
    }

    /// Every key with its current value, in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("wls.eta", format!("{:?}", self.wls.eta)),
            ("wls.alpha", format!("{:?}", self.wls.alpha)),
            ("wls.eps_w", format!("{:?}", self.wls.eps_w)),
            ("wls.solver_tol", format!("{:?}", self.wls.solver_tol)),
            ("wls.max_iter", self.wls.max_iter.to_string()),
            ("wls.levels", self.wls.levels.to_string()),
            ("cost.d_min", self.cost.d_min.to_string()),
            ("cost.d_max", self.cost.d_max.to_string()),
            ("cost.w_ad", format!("{:?}", self.cost.w_ad)),
            ("cost.w_grad", format!("{:?}", self.cost.w_grad)),
            ("cost.w_cen", format!("{:?}", self.cost.w_cen)),
            ("cost.tau_ad", format!("{:?}", self.cost.tau_ad)),
            ("cost.tau_grad", format!("{:?}", self.cost.tau_grad)),
            ("cost.census_radius", self.cost.census_radius.to_string()),
            ("aggregate.radius", self.aggregate.radius.to_string()),
            ("aggregate.xi", format!("{:?}", self.aggregate.xi)),
            ("fusion.zeta", format!("{:?}", self.fusion.zeta)),
            (
                "disparity.lr_threshold",
                format!("{:?}", self.disparity.lr_threshold),
            ),
            ("disparity.subpixel", self.disparity.subpixel.to_string()),
            ("disparity.fill_invalid", self.disparity.fill_invalid.to_string()),
            ("rig.focal_px", format!("{:?}", self.rig.focal_px)),
            ("rig.baseline_m", format!("{:?}", self.rig.baseline_m)),
            ("rig.cx", auto_str(self.rig.cx)),
            ("rig.cy", auto_str(self.rig.cy)),
            ("rig.min_disparity", format!("{:?}", self.rig.min_disparity)),
        ]
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "wls.eta" => self.wls.eta = parse_value(key, v)?,
            "wls.alpha" => self.wls.alpha = parse_value(key, v)?,
            "wls.eps_w" => self.wls.eps_w = parse_value(key, v)?,
            "wls.solver_tol" => self.wls.solver_tol = parse_value(key, v)?,
            "wls.max_iter" => self.wls.max_iter = parse_value(key, v)?,
            "wls.levels" => self.wls.levels = parse_value(key, v)?,
            "cost.d_min" => self.cost.d_min = parse_value(key, v)?,
            "cost.d_max" => self.cost.d_max = parse_value(key, v)?,
            "cost.w_ad" => self.cost.w_ad = parse_value(key, v)?,
            "cost.w_grad" => self.cost.w_grad = parse_value(key, v)?,
            "cost.w_cen" => self.cost.w_cen = parse_value(key, v)?,
            "cost.tau_ad" => self.cost.tau_ad = parse_value(key, v)?,
            "cost.tau_grad" => self.cost.tau_grad = parse_value(key, v)?,
            "cost.census_radius" => self.cost.census_radius = parse_value(key, v)?,
            "aggregate.radius" => self.aggregate.radius = parse_value(key, v)?,
            "aggregate.xi" => self.aggregate.xi = parse_value(key, v)?,
            "fusion.zeta" => self.fusion.zeta = parse_value(key, v)?,
            "disparity.lr_threshold" => self.disparity.lr_threshold = parse_value(key, v)?,
            "disparity.subpixel" => self.disparity.subpixel = parse_value(key, v)?,
            "disparity.fill_invalid" => self.disparity.fill_invalid = parse_value(key, v)?,
            "rig.focal_px" => self.rig.focal_px = parse_value(key, v)?,
            "rig.baseline_m" => self.rig.baseline_m = parse_value(key, v)?,
            "rig.cx" => self.rig.cx = parse_auto(key, v)?,
            "rig.cy" => self.rig.cy = parse_auto(key, v)?,
            "rig.min_disparity" => self.rig.min_disparity = parse_value(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip(e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_canonical(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Checks every parameter group; the rig is checked against the image
    /// size only when the pipeline runs.
    pub fn validate(&self) -> Result<()> {
        self.wls.validate()?;
        self.cost.validate()?;
        self.aggregate.validate()?;
        self.fusion.validate()?;
        self.disparity.validate()?;
        if !(self.rig.min_disparity.is_finite() && self.rig.min_disparity >= 0.0) {
            return Err(Error::contract("rig.min_disparity must be >= 0"));
        }
        Ok(())
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) | Error::Contract(m) => m,
        other => other.to_string(),
    }
}
