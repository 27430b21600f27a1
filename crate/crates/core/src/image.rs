//! Grayscale image, cost volume and disparity map containers.

use crate::error::{Error, Result};

/// Marker stored in a [`DisparityMap`] for pixels without a disparity.
pub const INVALID_DISPARITY: f64 = -1.0;

/// Row-major grayscale image with finite `f64` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::contract(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::contract(format!(
                "image data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "non-finite sample {} at index {i}",
                data[i]
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Image with every sample equal to `value`.
    ///
    /// Panics on zero dimensions or a non-finite value.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid constant image")
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics on zero dimensions or if `f` returns a non-finite value.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("finite image samples")
    }

    /// Wraps samples known to be finite. Used internally on hot paths.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Horizontally mirrored copy.
    pub fn mirror_x(&self) -> Image {
        let w = self.width;
        Image::from_raw(
            w,
            self.height,
            self.data
                .chunks_exact(w)
                .flat_map(|row| row.iter().rev().copied())
                .collect(),
        )
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &Image) -> Result<Image> {
        if !self.same_shape(other) {
            return Err(Error::contract("image shapes differ"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Image::new(self.width, self.height, data)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Anisotropic total variation: sum of absolute forward differences.
    pub fn total_variation(&self) -> f64 {
        let (w, h) = (self.width, self.height);
        let mut tv = 0.0;
        for y in 0..h {
            for x in 0..w {
                let v = self.get(x, y);
                if x + 1 < w {
                    tv += (self.get(x + 1, y) - v).abs();
                }
                if y + 1 < h {
                    tv += (self.get(x, y + 1) - v).abs();
                }
            }
        }
        tv
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Forward difference `img(q + 1) - img(q)` along `axis`; the trailing
/// column (or row) is zero.
pub fn gradient(img: &Image, axis: Axis) -> Image {
    let (w, h) = (img.width(), img.height());
    let src = img.data();
    let mut out = vec![0.0; w * h];
    match axis {
        Axis::X => {
            for y in 0..h {
                let row = &src[y * w..(y + 1) * w];
                let dst = &mut out[y * w..(y + 1) * w];
                for x in 0..w.saturating_sub(1) {
                    dst[x] = row[x + 1] - row[x];
                }
            }
        }
        Axis::Y => {
            for y in 0..h.saturating_sub(1) {
                for x in 0..w {
                    out[y * w + x] = src[(y + 1) * w + x] - src[y * w + x];
                }
            }
        }
    }
    Image::from_raw(w, h, out)
}

/// Matching or aggregation costs over `[d_min, d_max]` for every pixel.
///
/// Storage is slice-major: all pixels of disparity `d_min` first, in
/// row-major order, then `d_min + 1`, and so on.
#[derive(Clone, Debug, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    d_min: usize,
    d_max: usize,
    data: Vec<f64>,
}

impl CostVolume {
    pub fn new(width: usize, height: usize, d_min: usize, d_max: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::contract("cost volume dimensions must be positive"));
        }
        if d_min > d_max {
            return Err(Error::contract(format!("d_min {d_min} exceeds d_max {d_max}")));
        }
        let expected = width * height * (d_max - d_min + 1);
        if data.len() != expected {
            return Err(Error::contract(format!(
                "cost volume data length {} does not match {expected}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::contract("costs must be finite and non-negative"));
        }
        Ok(Self {
            width,
            height,
            d_min,
            d_max,
            data,
        })
    }

    /// Assembles a volume from per-disparity slices, `slices[k]` holding
    /// disparity `d_min + k`.
    pub fn from_slices(width: usize, height: usize, d_min: usize, slices: Vec<Vec<f64>>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::contract("cost volume needs at least one slice"));
        }
        let d_max = d_min + slices.len() - 1;
        let data = slices.concat();
        Self::new(width, height, d_min, d_max, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn d_min(&self) -> usize {
        self.d_min
    }

    #[inline]
    pub fn d_max(&self) -> usize {
        self.d_max
    }

    /// Number of disparity candidates.
    #[inline]
    pub fn depth(&self) -> usize {
        self.d_max - self.d_min + 1
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Costs of slice `k` (disparity `d_min + k`), row-major.
    #[inline]
    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[k * n..(k + 1) * n]
    }

    pub fn slice_image(&self, k: usize) -> Image {
        Image::from_raw(self.width, self.height, self.slice(k).to_vec())
    }

    /// Cost at pixel `(x, y)` for disparity `d` (absolute, not offset).
    #[inline]
    pub fn get(&self, x: usize, y: usize, d: usize) -> f64 {
        let n = self.width * self.height;
        self.data[(d - self.d_min) * n + y * self.width + x]
    }

    pub fn same_shape(&self, other: &CostVolume) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.d_min == other.d_min
            && self.d_max == other.d_max
    }

    /// Per-pixel minimum cost over all disparities.
    pub fn min_map(&self) -> Image {
        let n = self.width * self.height;
        let mut out = self.slice(0).to_vec();
        for k in 1..self.depth() {
            for (o, v) in out.iter_mut().zip(&self.data[k * n..(k + 1) * n]) {
                *o = o.min(*v);
            }
        }
        Image::from_raw(self.width, self.height, out)
    }
}

/// Per-pixel real disparities; [`INVALID_DISPARITY`] marks missing values.
#[derive(Clone, Debug, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::contract(format!(
                "disparity data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("disparities must be finite"));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid disparity map")
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn is_valid_at(&self, x: usize, y: usize) -> bool {
        is_valid(self.get(x, y))
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|v| is_valid(**v)).count()
    }

    pub fn mirror_x(&self) -> DisparityMap {
        let w = self.width;
        DisparityMap::from_raw(
            w,
            self.height,
            self.data
                .chunks_exact(w)
                .flat_map(|row| row.iter().rev().copied())
                .collect(),
        )
    }

    /// Disparities as an image; invalid pixels keep the sentinel value.
    pub fn to_image(&self) -> Image {
        Image::from_raw(self.width, self.height, self.data.clone())
    }

    pub fn from_image(img: &Image) -> DisparityMap {
        DisparityMap::from_raw(img.width(), img.height(), img.data().to_vec())
    }

    /// 1.0 where valid, 0.0 elsewhere.
    pub fn validity_mask(&self) -> Image {
        Image::from_raw(
            self.width,
            self.height,
            self.data
                .iter()
                .map(|v| if is_valid(*v) { 1.0 } else { 0.0 })
                .collect(),
        )
    }
}

#[inline]
pub(crate) fn is_valid(d: f64) -> bool {
    d >= 0.0
}
