//! Python bindings: `import msfuse_py`.
//!
//! Images cross the boundary as `Image` objects built from flat row-major
//! lists; errors become `ValueError` (bad input or config), `OSError`
//! (files) or `ArithmeticError` (solver failure, undefined metric).

use pyo3::exceptions::{PyArithmeticError, PyIndexError, PyOSError, PyValueError};
use pyo3::prelude::*;

use msfuse::aggregate::GuidedFilterParams;
use msfuse::config::PipelineConfig;
use msfuse::fusion::FusionParams;
use msfuse::io::ImageFormat;
use msfuse::reconstruct::CameraRig;
use msfuse::{metrics, CostVolume, DisparityMap, Error, Image};

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Io { .. } => PyOSError::new_err(msg),
        Error::NumericFailure { .. } | Error::UndefinedMetric(_) => PyArithmeticError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn check_xy(x: usize, y: usize, w: usize, h: usize) -> PyResult<()> {
    if x >= w || y >= h {
        return Err(PyIndexError::new_err(format!("({x}, {y}) outside {w}x{h}")));
    }
    Ok(())
}

fn parse_format(name: &str) -> PyResult<ImageFormat> {
    match name {
        "pgm8" => Ok(ImageFormat::Pgm8),
        "pgm16" => Ok(ImageFormat::Pgm16),
        "pfm" => Ok(ImageFormat::Pfm),
        _ => Err(PyValueError::new_err(format!(
            "unknown format `{name}` (pgm8, pgm16, pfm)"
        ))),
    }
}

#[pyclass(name = "Image", module = "msfuse_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyImage(Image);

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f64>) -> PyResult<Self> {
        Image::new(width, height, data).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, value: f64) -> PyResult<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        msfuse::io::load_image(path).map(Self).map_err(to_py)
    }

    /// `format` is one of `pgm8`, `pgm16`, `pfm`.
    #[pyo3(signature = (path, format = "pfm"))]
    fn save(&self, path: &str, format: &str) -> PyResult<()> {
        msfuse::io::save_image(&self.0, path, parse_format(format)?).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        check_xy(x, y, self.0.width(), self.0.height())?;
        Ok(self.0.get(x, y))
    }

    fn to_list(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn total_variation(&self) -> f64 {
        self.0.total_variation()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.0.width(), self.0.height())
    }
}

#[pyclass(name = "CostVolume", module = "msfuse_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyCostVolume(CostVolume);

#[pymethods]
impl PyCostVolume {
    /// `data` is slice-major: every pixel of `d_min`, then `d_min + 1`, ...
    #[new]
    fn new(width: usize, height: usize, d_min: usize, d_max: usize, data: Vec<f64>) -> PyResult<Self> {
        CostVolume::new(width, height, d_min, d_max, data)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn d_min(&self) -> usize {
        self.0.d_min()
    }

    #[getter]
    fn d_max(&self) -> usize {
        self.0.d_max()
    }

    fn get(&self, x: usize, y: usize, d: usize) -> PyResult<f64> {
        check_xy(x, y, self.0.width(), self.0.height())?;
        if d < self.0.d_min() || d > self.0.d_max() {
            return Err(PyIndexError::new_err(format!("disparity {d} outside range")));
        }
        Ok(self.0.get(x, y, d))
    }

    fn slice(&self, k: usize) -> PyResult<PyImage> {
        if k >= self.0.depth() {
            return Err(PyIndexError::new_err(format!("slice {k} of {}", self.0.depth())));
        }
        Ok(PyImage(self.0.slice_image(k)))
    }

    fn min_map(&self) -> PyImage {
        PyImage(self.0.min_map())
    }

    fn to_list(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }
}

#[pyclass(name = "DisparityMap", module = "msfuse_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDisparityMap(DisparityMap);

#[pymethods]
impl PyDisparityMap {
    /// Negative entries mark invalid pixels.
    #[new]
    fn new(width: usize, height: usize, data: Vec<f64>) -> PyResult<Self> {
        DisparityMap::new(width, height, data).map(Self).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        check_xy(x, y, self.0.width(), self.0.height())?;
        Ok(self.0.get(x, y))
    }

    fn is_valid(&self, x: usize, y: usize) -> PyResult<bool> {
        check_xy(x, y, self.0.width(), self.0.height())?;
        Ok(self.0.is_valid_at(x, y))
    }

    fn valid_count(&self) -> usize {
        self.0.valid_count()
    }

    fn to_image(&self) -> PyImage {
        PyImage(self.0.to_image())
    }

    fn to_list(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }
}

#[pyclass(name = "PointCloud", module = "msfuse_py", frozen)]
struct PyPointCloud(msfuse::reconstruct::PointCloud);

#[pymethods]
impl PyPointCloud {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64, f64)> {
        self.0.points.iter().map(|p| (p[0], p[1], p[2])).collect()
    }

    #[getter]
    fn pixels(&self) -> Vec<(usize, usize)> {
        self.0.pixels.clone()
    }

    fn to_ply(&self) -> String {
        self.0.to_ply()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        msfuse::reconstruct::export_ply(&self.0, path).map_err(to_py)
    }
}

#[pyclass(name = "Config", module = "msfuse_py", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyConfig(PipelineConfig);

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        PipelineConfig::parse(text).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        PipelineConfig::load(path).map(Self).map_err(to_py)
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        let mut next = self.0.clone();
        next.set(key, value).map_err(to_py)?;
        next.validate().map_err(to_py)?;
        self.0 = next;
        Ok(())
    }

    fn get(&self, key: &str) -> PyResult<String> {
        self.0
            .entries()
            .into_iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| PyValueError::new_err(format!("unknown key `{key}`")))
    }

    #[staticmethod]
    fn keys() -> Vec<&'static str> {
        PipelineConfig::keys()
    }

    fn to_canonical(&self) -> String {
        self.0.to_canonical()
    }
}

fn config_or_default(config: Option<&PyConfig>) -> PipelineConfig {
    config.map(|c| c.0.clone()).unwrap_or_default()
}

/// Four base layers, finest first.
#[pyfunction]
#[pyo3(signature = (image, config = None))]
fn decompose(image: &PyImage, config: Option<&PyConfig>) -> PyResult<Vec<PyImage>> {
    let pyr = msfuse::wls::decompose(&image.0, &config_or_default(config).wls).map_err(to_py)?;
    Ok(pyr.layers().iter().cloned().map(PyImage).collect())
}

#[pyfunction]
#[pyo3(signature = (image, config = None))]
fn wls_filter(image: &PyImage, config: Option<&PyConfig>) -> PyResult<PyImage> {
    msfuse::wls::wls_filter(&image.0, &config_or_default(config).wls)
        .map(PyImage)
        .map_err(to_py)
}

/// Census code of every pixel as a bit string.
#[pyfunction]
fn census_transform(image: &PyImage, radius: usize) -> PyResult<Vec<String>> {
    let census = msfuse::cost::census_transform(&image.0, radius).map_err(to_py)?;
    let (w, h) = (image.0.width(), image.0.height());
    Ok((0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| census.code_string(x, y))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (left, right, config = None))]
fn match_cost(left: &PyImage, right: &PyImage, config: Option<&PyConfig>) -> PyResult<PyCostVolume> {
    msfuse::cost::match_cost(&left.0, &right.0, &config_or_default(config).cost)
        .map(PyCostVolume)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (guide, input, radius = 4, xi = 1e-4))]
fn guided_filter(guide: &PyImage, input: &PyImage, radius: usize, xi: f64) -> PyResult<PyImage> {
    msfuse::aggregate::guided_filter(&guide.0, &input.0, &GuidedFilterParams { radius, xi })
        .map(PyImage)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (guide, volume, radius = 4, xi = 1e-4))]
fn aggregate_cost(guide: &PyImage, volume: &PyCostVolume, radius: usize, xi: f64) -> PyResult<PyCostVolume> {
    msfuse::aggregate::aggregate_cost(&guide.0, &volume.0, &GuidedFilterParams { radius, xi })
        .map(PyCostVolume)
        .map_err(to_py)
}

/// Couples four per-scale volumes, finest first.
#[pyfunction]
#[pyo3(signature = (volumes, zeta = 0.3))]
fn fuse_scales(volumes: Vec<PyCostVolume>, zeta: f64) -> PyResult<Vec<PyCostVolume>> {
    let vols: Vec<CostVolume> = volumes.into_iter().map(|v| v.0).collect();
    let fused = msfuse::fusion::fuse_scales(&vols, &FusionParams { zeta }).map_err(to_py)?;
    Ok(fused.into_iter().map(PyCostVolume).collect())
}

#[pyfunction]
fn wta(volume: &PyCostVolume) -> PyDisparityMap {
    PyDisparityMap(msfuse::disparity::wta(&volume.0))
}

#[pyfunction]
fn subpixel_refine(volume: &PyCostVolume, disparity: &PyDisparityMap) -> PyResult<PyDisparityMap> {
    msfuse::disparity::subpixel_refine(&volume.0, &disparity.0)
        .map(PyDisparityMap)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (left, right, threshold = 1.0))]
fn lr_consistency(left: &PyDisparityMap, right: &PyDisparityMap, threshold: f64) -> PyResult<PyDisparityMap> {
    msfuse::disparity::lr_consistency(&left.0, &right.0, threshold)
        .map(PyDisparityMap)
        .map_err(to_py)
}

#[pyfunction]
fn fill_invalid(disparity: &PyDisparityMap) -> PyDisparityMap {
    PyDisparityMap(msfuse::disparity::fill_invalid(&disparity.0))
}

/// `cx`/`cy` default to the image centre.
#[pyfunction]
#[pyo3(signature = (disparity, focal_px = 525.0, baseline_m = 0.1, cx = None, cy = None, intensity = None))]
fn triangulate(
    disparity: &PyDisparityMap,
    focal_px: f64,
    baseline_m: f64,
    cx: Option<f64>,
    cy: Option<f64>,
    intensity: Option<&PyImage>,
) -> PyResult<PyPointCloud> {
    let (w, h) = (disparity.0.width(), disparity.0.height());
    let centred = CameraRig::centred(focal_px, baseline_m, w, h);
    let rig = CameraRig {
        cx: cx.unwrap_or(centred.cx),
        cy: cy.unwrap_or(centred.cy),
        ..centred
    };
    rig.validate(w, h).map_err(to_py)?;
    msfuse::reconstruct::triangulate(&disparity.0, &rig, intensity.map(|i| &i.0))
        .map(PyPointCloud)
        .map_err(to_py)
}

/// Full pipeline; returns `(disparity, cloud)`.
#[pyfunction]
#[pyo3(signature = (left, right, config = None))]
fn reconstruct(
    py: Python<'_>,
    left: &PyImage,
    right: &PyImage,
    config: Option<&PyConfig>,
) -> PyResult<(PyDisparityMap, PyPointCloud)> {
    let cfg = config_or_default(config);
    let (l, r) = (left.0.clone(), right.0.clone());
    let rec = py
        .detach(move || msfuse::pipeline::reconstruct(&l, &r, &cfg))
        .map_err(to_py)?;
    Ok((PyDisparityMap(rec.disparity), PyPointCloud(rec.cloud)))
}

/// `{"acc": .., "sen": .., "auc": ..}`; `auc` only when `scores` is given.
#[pyfunction]
#[pyo3(signature = (pred, truth, scores = None, threshold = 0.5))]
fn eval_mask(
    pred: &PyImage,
    truth: &PyImage,
    scores: Option<&PyImage>,
    threshold: f64,
) -> PyResult<Vec<(&'static str, f64)>> {
    let c = metrics::confusion_with_threshold(&pred.0, &truth.0, threshold).map_err(to_py)?;
    let mut out = vec![
        ("acc", metrics::accuracy(&c).map_err(to_py)?),
        ("sen", metrics::sensitivity(&c).map_err(to_py)?),
    ];
    if let Some(s) = scores {
        out.push((
            "auc",
            metrics::auc_with_threshold(&s.0, &truth.0, threshold).map_err(to_py)?,
        ));
    }
    Ok(out)
}

/// Returns `(left, right, ground_truth)`.
#[pyfunction]
#[pyo3(signature = (width, height, disparity, seed = 0))]
fn gen_synthetic(
    width: usize,
    height: usize,
    disparity: usize,
    seed: u64,
) -> PyResult<(PyImage, PyImage, PyDisparityMap)> {
    let pair = msfuse::synth::gen_synthetic(width, height, disparity, seed).map_err(to_py)?;
    Ok((
        PyImage(pair.left),
        PyImage(pair.right),
        PyDisparityMap(pair.ground_truth),
    ))
}

#[pymodule]
fn msfuse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyCostVolume>()?;
    m.add_class::<PyDisparityMap>()?;
    m.add_class::<PyPointCloud>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(wls_filter, m)?)?;
    m.add_function(wrap_pyfunction!(census_transform, m)?)?;
    m.add_function(wrap_pyfunction!(match_cost, m)?)?;
    m.add_function(wrap_pyfunction!(guided_filter, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_cost, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_scales, m)?)?;
    m.add_function(wrap_pyfunction!(wta, m)?)?;
    m.add_function(wrap_pyfunction!(subpixel_refine, m)?)?;
    m.add_function(wrap_pyfunction!(lr_consistency, m)?)?;
    m.add_function(wrap_pyfunction!(fill_invalid, m)?)?;
    m.add_function(wrap_pyfunction!(triangulate, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(eval_mask, m)?)?;
    m.add_function(wrap_pyfunction!(gen_synthetic, m)?)?;
    Ok(())
}
