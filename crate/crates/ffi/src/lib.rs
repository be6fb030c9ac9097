//! C ABI over the halluzig pipeline.
//!
//! Handles are opaque and owned by the caller once returned; release each with
//! its `_free` function. Every fallible call returns an [`HzStatus`]; on
//! failure [`hz_last_error_message`] describes the error for the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use halluzig::classify::ForestModel;
use halluzig::ingest::{load_sample, AttentionMatrix, AttentionSample, Edge};
use halluzig::vectorize::{featurize_sample, sample_diagram, FeatureConfig, Scheme};
use halluzig::zigzag::{betti_numbers, PersistenceDiagram};
use halluzig::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    IoError = 4,
    InvariantViolation = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Values for [`HzConfig::scheme`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HzScheme {
    PersImg = 0,
    PersEntropy = 1,
    BettiCurve = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HzConfig {
    pub top_percent: f64,
    pub depth_fraction: f64,
    pub min_persistence: usize,
    /// One of the [`HzScheme`] values.
    pub scheme: u32,
    /// Bit 0 selects dimension 0, bit 1 selects dimension 1.
    pub dims_mask: u32,
    pub image_resolution: usize,
    pub sigma: f64,
    pub curve_resolution: usize,
}

/// A closed interval `[birth, death]` of snapshot indices.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HzInterval {
    pub dim: u8,
    pub birth: usize,
    pub death: usize,
}

pub struct HzSample(AttentionSample);

pub struct HzDiagram(PersistenceDiagram);

pub struct HzModel(ForestModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: HzStatus,
    message: String,
}

impl Failure {
    fn new(status: HzStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(HzStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let status = match err.root() {
            Error::InvalidParameter(_) => HzStatus::InvalidArgument,
            Error::Invariant(_) => HzStatus::InvariantViolation,
            Error::Io { .. } | Error::MissingManifest(_) => HzStatus::IoError,
            _ => HzStatus::DataError,
        };
        Self::new(status, err.to_string())
    }
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HzStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            HzStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(HzStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

fn to_feature_config(config: &HzConfig) -> Result<FeatureConfig, Failure> {
    let scheme = match config.scheme {
        0 => Scheme::PersImg,
        1 => Scheme::PersEntropy,
        2 => Scheme::BettiCurve,
        other => {
            return Err(Failure::new(
                HzStatus::InvalidArgument,
                format!("unknown scheme {other}"),
            ))
        }
    };
    if config.dims_mask & !0b11 != 0 {
        return Err(Failure::new(
            HzStatus::InvalidArgument,
            format!(
                "dims_mask {:#x} selects a dimension other than 0 or 1",
                config.dims_mask
            ),
        ));
    }
    let dims = (0..2u8).filter(|d| config.dims_mask & (1 << d) != 0).collect();
    let cfg = FeatureConfig {
        top_percent: config.top_percent,
        depth_fraction: config.depth_fraction,
        min_persistence: config.min_persistence,
        scheme,
        dims,
        image_resolution: config.image_resolution,
        sigma: config.sigma,
        curve_resolution: config.curve_resolution,
    };
    cfg.validate()?;
    Ok(cfg)
}

unsafe fn config_arg(config: *const HzConfig) -> Result<FeatureConfig, Failure> {
    match config.as_ref() {
        Some(c) => to_feature_config(c),
        None => Ok(FeatureConfig::default()),
    }
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hz_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default feature configuration: top 10% of edges, all layers, minimum
/// persistence 5, dimension 1, 32x32 persistence images.
#[no_mangle]
pub extern "C" fn hz_config_default() -> HzConfig {
    let d = FeatureConfig::default();
    HzConfig {
        top_percent: d.top_percent,
        depth_fraction: d.depth_fraction,
        min_persistence: d.min_persistence,
        scheme: HzScheme::PersImg as u32,
        dims_mask: d.dims.iter().fold(0, |m, &dim| m | (1 << dim)),
        image_resolution: d.image_resolution,
        sigma: d.sigma,
        curve_resolution: d.curve_resolution,
    }
}

/// Loads a sample from an attention dump directory.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hz_sample_load(dir: *const c_char, out: *mut *mut HzSample) -> HzStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let dir = str_arg(dir, "dir")?;
        let sample = load_sample(dir)?;
        *out = Box::into_raw(Box::new(HzSample(sample)));
        Ok(())
    })
}

/// Builds a sample from head-averaged attention matrices laid out as
/// `num_layers` consecutive row-major `seq_len x seq_len` blocks.
///
/// # Safety
/// `data` must point to `num_layers * seq_len * seq_len` floats, `sample_id`
/// must be NULL or a NUL-terminated string, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_sample_from_matrices(
    sample_id: *const c_char,
    data: *const f32,
    num_layers: usize,
    seq_len: usize,
    causal: bool,
    out: *mut *mut HzSample,
) -> HzStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if data.is_null() {
            return Err(Failure::null("data"));
        }
        let id = if sample_id.is_null() {
            "sample"
        } else {
            str_arg(sample_id, "sample_id")?
        };
        let block = seq_len
            .checked_mul(seq_len)
            .filter(|b| b.checked_mul(num_layers).is_some())
            .ok_or_else(|| Failure::new(HzStatus::InvalidArgument, "matrix dimensions overflow"))?;
        let values = slice::from_raw_parts(data, block * num_layers);
        let layers = values
            .chunks(block.max(1))
            .take(num_layers)
            .map(|chunk| AttentionMatrix::new(seq_len, chunk.to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        let sample = AttentionSample::new(id, "ffi", causal, layers)?;
        *out = Box::into_raw(Box::new(HzSample(sample)));
        Ok(())
    })
}

/// # Safety
/// `sample` must be NULL or a handle from this library that is not used again.
#[no_mangle]
pub unsafe extern "C" fn hz_sample_free(sample: *mut HzSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Number of layers, or 0 for a NULL handle.
///
/// # Safety
/// `sample` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hz_sample_num_layers(sample: *const HzSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.num_layers())
}

/// Sequence length, or 0 for a NULL handle.
///
/// # Safety
/// `sample` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hz_sample_seq_len(sample: *const HzSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.seq_len())
}

/// Zigzag barcode of a sample, unfiltered. A NULL `config` uses the defaults.
///
/// # Safety
/// `sample` must be a live handle, `config` NULL or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hz_diagram_compute(
    sample: *const HzSample,
    config: *const HzConfig,
    out: *mut *mut HzDiagram,
) -> HzStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let sample = ref_arg(sample, "sample")?;
        let cfg = config_arg(config)?;
        let diagram = sample_diagram(&sample.0, &cfg)?;
        *out = Box::into_raw(Box::new(HzDiagram(diagram)));
        Ok(())
    })
}

/// # Safety
/// `diagram` must be NULL or a handle from this library that is not used again.
#[no_mangle]
pub unsafe extern "C" fn hz_diagram_free(diagram: *mut HzDiagram) {
    if !diagram.is_null() {
        drop(Box::from_raw(diagram));
    }
}

/// Number of intervals, or 0 for a NULL handle.
///
/// # Safety
/// `diagram` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hz_diagram_len(diagram: *const HzDiagram) -> usize {
    diagram.as_ref().map_or(0, |d| d.0.len())
}

/// Largest snapshot index of the filtration, or 0 for a NULL handle.
///
/// # Safety
/// `diagram` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hz_diagram_max_index(diagram: *const HzDiagram) -> usize {
    diagram.as_ref().map_or(0, |d| d.0.max_index())
}

/// Copies interval `index` (sorted by dimension, birth, death) into `out`.
///
/// # Safety
/// `diagram` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hz_diagram_get(diagram: *const HzDiagram, index: usize, out: *mut HzInterval) -> HzStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let diagram = ref_arg(diagram, "diagram")?;
        let bar = diagram.0.intervals().get(index).ok_or_else(|| {
            Failure::new(
                HzStatus::InvalidArgument,
                format!("index {index} out of range for {} intervals", diagram.0.len()),
            )
        })?;
        *out = HzInterval {
            dim: bar.dim,
            birth: bar.birth,
            death: bar.death,
        };
        Ok(())
    })
}

/// Length of the feature vector a config produces.
///
/// # Safety
/// `config` must be NULL or readable, `width` writable.
#[no_mangle]
pub unsafe extern "C" fn hz_feature_width(config: *const HzConfig, width: *mut usize) -> HzStatus {
    guard(|| {
        let width = out_arg(width, "width")?;
        *width = config_arg(config)?.width_per_diagram();
        Ok(())
    })
}

/// Writes the feature vector of a sample into `out`. `written` always
/// receives the required length; when `capacity` is too small nothing else is
/// written and the call returns `HZ_STATUS_BUFFER_TOO_SMALL`.
///
/// # Safety
/// `sample` must be a live handle, `config` NULL or readable, `out` valid for
/// `capacity` doubles (may be NULL when `capacity` is 0), `written` writable.
#[no_mangle]
pub unsafe extern "C" fn hz_featurize(
    sample: *const HzSample,
    config: *const HzConfig,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> HzStatus {
    guard(|| {
        let written = out_arg(written, "written")?;
        let sample = ref_arg(sample, "sample")?;
        let cfg = config_arg(config)?;
        let width = cfg.width_per_diagram();
        *written = width;
        if capacity < width {
            return Err(Failure::new(
                HzStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, {width} required"),
            ));
        }
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let values = featurize_sample(&sample.0, &cfg)?;
        slice::from_raw_parts_mut(out, width).copy_from_slice(&values);
        Ok(())
    })
}

/// Betti numbers of a graph given as `num_edges` vertex pairs (0-based).
///
/// # Safety
/// `edges` must point to `2 * num_edges` integers (may be NULL when
/// `num_edges` is 0); `b0` and `b1` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hz_betti_numbers(
    num_vertices: usize,
    edges: *const u32,
    num_edges: usize,
    b0: *mut usize,
    b1: *mut usize,
) -> HzStatus {
    guard(|| {
        let b0 = out_arg(b0, "b0")?;
        let b1 = out_arg(b1, "b1")?;
        let pairs: &[u32] = if num_edges == 0 {
            &[]
        } else if edges.is_null() {
            return Err(Failure::null("edges"));
        } else {
            slice::from_raw_parts(edges, 2 * num_edges)
        };
        let mut list = Vec::with_capacity(num_edges);
        for pair in pairs.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || u as usize >= num_vertices || v as usize >= num_vertices {
                return Err(Failure::new(
                    HzStatus::InvalidArgument,
                    format!("edge ({u}, {v}) is a self-loop or out of range for {num_vertices} vertices"),
                ));
            }
            list.push(Edge::new(u, v));
        }
        list.sort_unstable();
        list.dedup();
        (*b0, *b1) = betti_numbers(num_vertices, &list);
        Ok(())
    })
}

/// Loads a random-forest model saved by `halluzig train-eval --model-out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hz_model_load(path: *const c_char, out: *mut *mut HzModel) -> HzStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let model = ForestModel::load(path)?;
        *out = Box::into_raw(Box::new(HzModel(model)));
        Ok(())
    })
}

/// Feature width the model expects, or 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hz_model_feature_dim(model: *const HzModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.feature_dim)
}

/// Class-1 probabilities for `rows` row-major feature vectors of width `cols`.
///
/// # Safety
/// `model` must be a live handle, `features` valid for `rows * cols` doubles
/// and `probabilities` for `rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn hz_model_predict(
    model: *const HzModel,
    features: *const f64,
    rows: usize,
    cols: usize,
    probabilities: *mut f64,
) -> HzStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        if cols != model.0.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: model.0.feature_dim,
                found: cols,
                row: None,
            }
            .into());
        }
        if rows == 0 {
            return Ok(());
        }
        if features.is_null() {
            return Err(Failure::null("features"));
        }
        if probabilities.is_null() {
            return Err(Failure::null("probabilities"));
        }
        let total = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure::new(HzStatus::InvalidArgument, "rows * cols overflows"))?;
        let flat = slice::from_raw_parts(features, total);
        let x: Vec<Vec<f64>> = flat.chunks(cols).map(<[f64]>::to_vec).collect();
        let p = model.0.predict_proba(&x)?;
        slice::from_raw_parts_mut(probabilities, rows).copy_from_slice(&p);
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle from this library that is not used again.
#[no_mangle]
pub unsafe extern "C" fn hz_model_free(model: *mut HzModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
