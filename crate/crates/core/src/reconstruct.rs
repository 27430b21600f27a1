//! Triangulation of a rectified-stereo disparity map into metric 3D points
//! and ASCII PLY export.
//!
//! With focal length `g` (pixels), baseline `S` (metres), principal point
//! `(cx, cy)` and disparity `c` at left pixel `(x, y)`:
//! `Z = g S / c`, `X = (x − cx) Z / g`, `Y = (y − cy) Z / g`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{is_valid, DisparityMap, Image};

/// Disparities at or below this value are treated as infinitely far.
pub const DEFAULT_MIN_DISPARITY: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraRig {
    /// Focal length in pixels.
    pub focal_px: f64,
    /// Baseline in metres.
    pub baseline_m: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraRig {
    /// Rig with the principal point at the centre of a `width × height` image.
    pub fn centred(focal_px: f64, baseline_m: f64, width: usize, height: usize) -> Self {
        Self {
            focal_px,
            baseline_m,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
        }
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if !(self.focal_px.is_finite() && self.focal_px > 0.0) {
            return Err(Error::contract(format!(
                "focal length must be > 0, got {}",
                self.focal_px
            )));
        }
        if !(self.baseline_m.is_finite() && self.baseline_m > 0.0) {
            return Err(Error::contract(format!(
                "baseline must be > 0, got {}",
                self.baseline_m
            )));
        }
        let sane = |v: f64, extent: usize| v.is_finite() && v.abs() <= 10.0 * extent.max(1) as f64;
        if !sane(self.cx, width) || !sane(self.cy, height) {
            return Err(Error::contract(format!(
                "principal point ({}, {}) is implausible for a {width}x{height} image",
                self.cx, self.cy
            )));
        }
        Ok(())
    }

    /// Point seen at left pixel `(x, y)` with disparity `c`.
    pub fn triangulate_pixel(&self, x: f64, y: f64, c: f64) -> [f64; 3] {
        let z = self.focal_px * self.baseline_m / c;
        [
            (x - self.cx) * z / self.focal_px,
            (y - self.cy) * z / self.focal_px,
            z,
        ]
    }

    /// Left pixel coordinates and disparity of a point in front of the rig.
    pub fn project(&self, p: [f64; 3]) -> (f64, f64, f64) {
        let [x, y, z] = p;
        (
            self.cx + self.focal_px * x / z,
            self.cy + self.focal_px * y / z,
            self.focal_px * self.baseline_m / z,
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
    /// Source pixel `(x, y)` of each point.
    pub pixels: Vec<(usize, usize)>,
    pub intensity: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// ASCII PLY 1.0 serialization, coordinates as 32-bit floats.
    pub fn to_ply(&self) -> String {
        let mut s = String::new();
        s.push_str("ply\nformat ascii 1.0\n");
        let _ = writeln!(s, "element vertex {}", self.points.len());
        s.push_str("property float x\nproperty float y\nproperty float z\n");
        if self.intensity.is_some() {
            s.push_str("property float intensity\n");
        }
        s.push_str("end_header\n");
        for (k, p) in self.points.iter().enumerate() {
            let _ = write!(s, "{} {} {}", p[0] as f32, p[1] as f32, p[2] as f32);
            if let Some(int) = &self.intensity {
                let _ = write!(s, " {}", int[k] as f32);
            }
            s.push('\n');
        }
        s
    }
}

/// One point per valid pixel with disparity above `min_disparity`, in
/// row-major pixel order.
pub fn triangulate_with_threshold(
    d: &DisparityMap,
    rig: &CameraRig,
    intensity: Option<&Image>,
    min_disparity: f64,
) -> Result<PointCloud> {
    rig.validate(d.width(), d.height())?;
    if let Some(img) = intensity {
        if img.width() != d.width() || img.height() != d.height() {
            return Err(Error::contract(
                "intensity image and disparity map differ in shape",
            ));
        }
    }
    let mut cloud = PointCloud {
        intensity: intensity.map(|_| Vec::new()),
        ..PointCloud::default()
    };
    for y in 0..d.height() {
        for x in 0..d.width() {
            let c = d.get(x, y);
            if !is_valid(c) || c <= min_disparity {
                continue;
            }
            cloud.points.push(rig.triangulate_pixel(x as f64, y as f64, c));
            cloud.pixels.push((x, y));
            if let (Some(out), Some(img)) = (cloud.intensity.as_mut(), intensity) {
                out.push(img.get(x, y));
            }
        }
    }
    Ok(cloud)
}

pub fn triangulate(d: &DisparityMap, rig: &CameraRig, intensity: Option<&Image>) -> Result<PointCloud> {
    triangulate_with_threshold(d, rig, intensity, DEFAULT_MIN_DISPARITY)
}

pub fn export_ply(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, cloud.to_ply()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::INVALID_DISPARITY;

    fn rig() -> CameraRig {
        CameraRig {
            focal_px: 100.0,
            baseline_m: 0.1,
            cx: 2.0,
            cy: 1.0,
        }
    }

    #[test]
    fn principal_point_pixel() {
        assert_eq!(rig().triangulate_pixel(2.0, 1.0, 10.0), [0.0, 0.0, 1.0]);
        let p = rig().triangulate_pixel(52.0, 1.0, 10.0);
        assert!((p[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn skips_invalid_and_tiny_disparities() {
        let d = DisparityMap::new(3, 1, vec![INVALID_DISPARITY, 0.0, 10.0]).unwrap();
        let cloud = triangulate(&d, &rig(), None).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.pixels, vec![(2, 0)]);
        let empty = triangulate(&DisparityMap::filled(3, 3, INVALID_DISPARITY), &rig(), None).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn halving_disparity_doubles_depth() {
        let d = DisparityMap::new(2, 1, vec![8.0, 3.0]).unwrap();
        let half = DisparityMap::new(2, 1, vec![4.0, 1.5]).unwrap();
        let a = triangulate(&d, &rig(), None).unwrap();
        let b = triangulate(&half, &rig(), None).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(q[2], 2.0 * p[2]);
        }
    }

    #[test]
    fn ply_layout() {
        let empty = PointCloud::default().to_ply();
        assert!(empty.contains("element vertex 0\n"));
        assert!(empty.ends_with("end_header\n"));
        let one = PointCloud {
            points: vec![[0.0, 0.0, 1.0]],
            pixels: vec![(0, 0)],
            intensity: None,
        };
        let text = one.to_ply();
        let body: Vec<&str> = text.split("end_header\n").nth(1).unwrap().lines().collect();
        assert_eq!(body, vec!["0 0 1"]);
        assert!(!text.contains("intensity"));
    }

    #[test]
    fn rejects_bad_rig() {
        let d = DisparityMap::filled(4, 4, 1.0);
        let bad = [
            CameraRig {
                focal_px: 0.0,
                ..rig()
            },
            CameraRig {
                baseline_m: -1.0,
                ..rig()
            },
            CameraRig { cx: 1e6, ..rig() },
        ];
        for r in bad {
            assert!(triangulate(&d, &r, None).is_err());
        }
    }
}
