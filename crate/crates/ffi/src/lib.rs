//! C ABI over `sxai`.
//!
//! Models and semantic spaces are opaque handles created by `*_load` and
//! released by the matching `*_free`. Every fallible call returns an
//! [`SxaiStatus`]; on failure the message is available from
//! [`sxai_last_error_message`] on the same thread until the next failing call.
//! Images are passed as `channels * height * width` doubles in planar
//! (channel-major) order with values in `[0, 1]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use sxai::assessment::{compute_radar, derive_indicators, generate_explanation};
use sxai::nn::{load_checkpoint, CnnModel, Image};
use sxai::semspace::SemanticSpace;
use sxai::semstats::{semantic_probability, space_probability, FittedActivation};
use sxai::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SxaiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    ShapeMismatch = 4,
    NotFitted = 5,
    IncompleteRadar = 6,
    DegenerateData = 7,
    Internal = 99,
}

/// Opaque trained model.
pub struct SxaiModel(CnnModel);

/// Opaque semantic space.
pub struct SxaiSpace(SemanticSpace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SxaiStatus {
    match err {
        Error::Io { .. } => SxaiStatus::Io,
        Error::ShapeMismatch(_) => SxaiStatus::ShapeMismatch,
        Error::NotFitted(_) => SxaiStatus::NotFitted,
        Error::IncompleteRadar(_) => SxaiStatus::IncompleteRadar,
        Error::DegenerateData(_)
        | Error::DegenerateDifference
        | Error::DegenerateDistribution(_) => SxaiStatus::DegenerateData,
        _ => SxaiStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SxaiStatus, String)>) -> SxaiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SxaiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SxaiStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (SxaiStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (SxaiStatus, String) {
    (SxaiStatus::NullPointer, format!("{name} is null"))
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, (SxaiStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| (SxaiStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
    Ok(PathBuf::from(s))
}

unsafe fn image_arg(
    model: &CnnModel,
    pixels: *const f64,
    len: usize,
) -> Result<Image, (SxaiStatus, String)> {
    if pixels.is_null() {
        return Err(null("pixels"));
    }
    let shape = model.input_shape();
    if len != shape.len() {
        return Err((
            SxaiStatus::ShapeMismatch,
            format!("expected {} values, got {len}", shape.len()),
        ));
    }
    let data = std::slice::from_raw_parts(pixels, len).to_vec();
    Image::new(shape, data).map_err(lib_err)
}

/// Message of the last failure on this thread, or null. Owned by the library;
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sxai_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sxai_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sxai_model_load(
    path: *const c_char,
    out: *mut *mut SxaiModel,
) -> SxaiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = load_checkpoint(&path_arg(path)?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SxaiModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `sxai_model_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sxai_model_free(model: *mut SxaiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the expected input as channels, height and width.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sxai_model_input_shape(
    model: *const SxaiModel,
    channels: *mut usize,
    height: *mut usize,
    width: *mut usize,
) -> SxaiStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if channels.is_null() || height.is_null() || width.is_null() {
            return Err(null("output"));
        }
        let s = m.0.input_shape();
        *channels = s.channels;
        *height = s.height;
        *width = s.width;
        Ok(())
    })
}

/// # Safety
/// `model` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn sxai_model_num_classes(model: *const SxaiModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.num_classes())
}

/// Class probabilities into `out` (`out_len` must equal the class count).
///
/// # Safety
/// `pixels` must hold `len` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sxai_model_predict(
    model: *const SxaiModel,
    pixels: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> SxaiStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len != m.num_classes() {
            return Err((
                SxaiStatus::ShapeMismatch,
                format!("model has {} classes, out has {out_len}", m.num_classes()),
            ));
        }
        let image = image_arg(m, pixels, len)?;
        let probs = m.predict(&image).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(probs.as_slice());
        Ok(())
    })
}

/// Loads a semantic space record (TOML).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sxai_space_load(
    path: *const c_char,
    out: *mut *mut SxaiSpace,
) -> SxaiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let space: SemanticSpace = sxai::io::read_toml(&path_arg(path)?).map_err(lib_err)?;
        space.validate().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SxaiSpace(space)));
        Ok(())
    })
}

/// # Safety
/// `space` must come from `sxai_space_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sxai_space_free(space: *mut SxaiSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Semantic probability of an image in a fitted space.
///
/// # Safety
/// Handles must be valid; `pixels` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sxai_space_probability(
    model: *const SxaiModel,
    space: *const SxaiSpace,
    pixels: *const f64,
    len: usize,
    out: *mut f64,
) -> SxaiStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let s = &space.as_ref().ok_or_else(|| null("space"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let image = image_arg(m, pixels, len)?;
        let features = m.forward_features(&image).map_err(lib_err)?;
        *out = space_probability(&features, s).map_err(lib_err)?;
        Ok(())
    })
}

/// Semantic probability of activation `a` under a normal fit.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sxai_semantic_probability(
    a: f64,
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
    out: *mut f64,
) -> SxaiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let fit = FittedActivation {
            mean,
            std,
            min,
            max,
            samples: 0,
        };
        fit.validate().map_err(lib_err)?;
        *out = semantic_probability(a, &fit);
        Ok(())
    })
}

/// Trust assessment sentence for an image. `spaces` must cover every class
/// and concept. The string is released with `sxai_string_free`.
///
/// # Safety
/// `spaces` must hold `n_spaces` valid handles; `pixels` `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sxai_assess(
    model: *const SxaiModel,
    spaces: *const *const SxaiSpace,
    n_spaces: usize,
    pixels: *const f64,
    len: usize,
    out_sentence: *mut *mut c_char,
) -> SxaiStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        if out_sentence.is_null() {
            return Err(null("out_sentence"));
        }
        if spaces.is_null() && n_spaces > 0 {
            return Err(null("spaces"));
        }
        let handles = if n_spaces == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(spaces, n_spaces)
        };
        let owned = handles
            .iter()
            .map(|&h| h.as_ref().map(|s| s.0.clone()).ok_or_else(|| null("space")))
            .collect::<Result<Vec<_>, _>>()?;
        let image = image_arg(m, pixels, len)?;
        let radar = compute_radar(&image, m, &owned).map_err(lib_err)?;
        let predicted = m.predict(&image).map_err(lib_err)?.argmax();
        let indicators = derive_indicators(&radar, predicted).map_err(lib_err)?;
        let sentence = generate_explanation(&indicators).sentence;
        let c = CString::new(sentence)
            .map_err(|_| (SxaiStatus::Internal, "NUL in sentence".to_string()))?;
        *out_sentence = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sxai_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
