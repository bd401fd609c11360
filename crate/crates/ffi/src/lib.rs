//! C ABI over the `lisa` crate.
//!
//! Models and streaming sessions are opaque heap objects owned by the caller
//! and released with the matching `*_free` function. Every fallible call
//! returns a [`LisaStatus`]; on failure a description is available from
//! [`lisa_last_error_message`] on the same thread. Output buffers are
//! caller-allocated: when one is too small the call fails with
//! `LISA_STATUS_BUFFER_TOO_SMALL`, stores the required length in `*written`,
//! and leaves all state untouched so it can be retried.
//!
//! Samples cross the boundary as `float`; rates are `double` in Hz.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use lisa::audio_io::output_len;
use lisa::{AudioSignal, Error, ModelConfig, ModelWeights, StreamSession};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LisaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    TooShort = 5,
    SessionClosed = 6,
    BufferTooSmall = 7,
    NonFinite = 8,
    Panic = 9,
}

/// Trained (or freshly initialized) model weights. Read-only once created;
/// one model may back any number of sessions on any threads.
pub struct LisaModel {
    weights: Arc<ModelWeights<f32>>,
}

/// Streaming session. Keeps its own reference to the model, so the model
/// handle may be freed first. Not thread-safe.
pub struct LisaStream {
    session: StreamSession<f32>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let msg = CString::new(bytes).expect("interior nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> LisaStatus {
    match err {
        Error::Io { .. } => LisaStatus::Io,
        Error::UnsupportedFormat(_) | Error::Checkpoint(_) => LisaStatus::Format,
        Error::TooShort { .. } => LisaStatus::TooShort,
        Error::SessionClosed => LisaStatus::SessionClosed,
        Error::NonFinite(_) | Error::NonFiniteGradient(_) | Error::NonFiniteLoss { .. } => LisaStatus::NonFinite,
        Error::ZeroLength
        | Error::EmptyInput
        | Error::InvalidRate(_)
        | Error::Config(_)
        | Error::LengthMismatch(..)
        | Error::ZeroReference
        | Error::OutOfSpan(_)
        | Error::Shape(_) => LisaStatus::InvalidArgument,
    }
}

fn fail(status: LisaStatus, msg: impl Into<Vec<u8>>) -> LisaStatus {
    set_last_error(msg);
    status
}

fn from_error(err: Error) -> LisaStatus {
    fail(status_of(&err), err.to_string())
}

/// Runs `f`, turning panics into `LISA_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> LisaStatus) -> LisaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(LisaStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn valid_rate(rate: f64) -> bool {
    rate.is_finite() && rate > 0.0
}

/// # Safety
/// `data` must be null only when `len == 0`, else point to `len` floats.
unsafe fn input_slice<'a>(data: *const f32, len: usize) -> Option<&'a [f32]> {
    if len == 0 {
        Some(&[])
    } else if data.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(data, len))
    }
}

/// Copies `values` into the caller's buffer after a capacity check.
///
/// # Safety
/// `out` must point to `capacity` writable floats (or be null with
/// `capacity == 0`); `written` must be valid.
unsafe fn write_out(values: &[f32], out: *mut f32, capacity: usize, written: *mut usize) -> LisaStatus {
    *written = values.len();
    if values.len() > capacity {
        return fail(LisaStatus::BufferTooSmall, format!("need {} samples, capacity {capacity}", values.len()));
    }
    if !values.is_empty() {
        if out.is_null() {
            return fail(LisaStatus::NullPointer, "output buffer is null");
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    LisaStatus::Ok
}

fn store_model(weights: ModelWeights<f32>, out: *mut *mut LisaModel) -> LisaStatus {
    let model = Box::new(LisaModel { weights: Arc::new(weights) });
    // SAFETY: checked non-null by every caller.
    unsafe { *out = Box::into_raw(model) };
    LisaStatus::Ok
}

/// Loads a checkpoint file. On success `*out` receives a new model.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lisa_model_load(path: *const c_char, out: *mut *mut LisaModel) -> LisaStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(LisaStatus::NullPointer, "null argument to lisa_model_load");
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => PathBuf::from(p),
            Err(_) => return fail(LisaStatus::InvalidArgument, "path is not valid UTF-8"),
        };
        match ModelWeights::<f32>::load(&path) {
            Ok(w) => store_model(w, out),
            Err(e) => from_error(e),
        }
    })
}

/// Creates an untrained model with the default architecture.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lisa_model_init(seed: u64, out: *mut *mut LisaModel) -> LisaStatus {
    guard(|| {
        if out.is_null() {
            return fail(LisaStatus::NullPointer, "null argument to lisa_model_init");
        }
        match ModelWeights::<f32>::init(ModelConfig::default(), seed) {
            Ok(w) => store_model(w, out),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `model` must come from `lisa_model_load`/`lisa_model_init` and not have
/// been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lisa_model_free(model: *mut LisaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Total number of trainable parameters; 0 for a null model.
///
/// # Safety
/// `model` must be null or a live model.
#[no_mangle]
pub unsafe extern "C" fn lisa_model_parameter_count(model: *const LisaModel) -> usize {
    model.as_ref().map_or(0, |m| m.weights.parameter_count())
}

/// Input samples the model looks ahead of each output (the streaming
/// latency in input periods); 0 for a null model.
///
/// # Safety
/// `model` must be null or a live model.
#[no_mangle]
pub unsafe extern "C" fn lisa_model_lookahead(model: *const LisaModel) -> usize {
    model.as_ref().map_or(0, |m| m.weights.config().receptive_half_width() + 1)
}

/// Number of samples `lisa_upsample` produces for `input_len` samples.
/// Returns 0 for invalid rates.
#[no_mangle]
pub extern "C" fn lisa_output_length(input_len: usize, rate_in: f64, rate_out: f64) -> usize {
    if !valid_rate(rate_in) || !valid_rate(rate_out) {
        return 0;
    }
    output_len(input_len as f64 / rate_in, rate_out)
}

/// Super-resolves a whole signal. `output` needs room for
/// `lisa_output_length(len, rate_in, rate_out)` samples.
///
/// # Safety
/// `input` must point to `len` floats, `output` to `capacity` writable
/// floats, and `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lisa_upsample(
    model: *const LisaModel,
    input: *const f32,
    len: usize,
    rate_in: f64,
    rate_out: f64,
    output: *mut f32,
    capacity: usize,
    written: *mut usize,
) -> LisaStatus {
    guard(|| {
        let (Some(model), false) = (model.as_ref(), written.is_null()) else {
            return fail(LisaStatus::NullPointer, "null argument to lisa_upsample");
        };
        *written = 0;
        let Some(input) = input_slice(input, len) else {
            return fail(LisaStatus::NullPointer, "input buffer is null");
        };
        if !valid_rate(rate_in) || !valid_rate(rate_out) {
            return fail(LisaStatus::InvalidArgument, format!("invalid rates {rate_in} -> {rate_out}"));
        }
        let needed = lisa_output_length(len, rate_in, rate_out);
        if needed > capacity {
            *written = needed;
            return fail(LisaStatus::BufferTooSmall, format!("need {needed} samples, capacity {capacity}"));
        }
        let signal = match AudioSignal::new(input.iter().map(|&v| v as f64).collect(), rate_in) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        match lisa::upsample(&signal, &model.weights, rate_out) {
            Ok(out) => {
                let out: Vec<f32> = out.samples().iter().map(|&v| v as f32).collect();
                write_out(&out, output, capacity, written)
            }
            Err(e) => from_error(e),
        }
    })
}

/// Opens a streaming session converting `rate_in` to `rate_out`.
///
/// # Safety
/// `model` must be a live model and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lisa_stream_new(
    model: *const LisaModel,
    rate_in: f64,
    rate_out: f64,
    out: *mut *mut LisaStream,
) -> LisaStatus {
    guard(|| {
        let (Some(model), false) = (model.as_ref(), out.is_null()) else {
            return fail(LisaStatus::NullPointer, "null argument to lisa_stream_new");
        };
        match StreamSession::new(Arc::clone(&model.weights), rate_in, rate_out) {
            Ok(session) => {
                *out = Box::into_raw(Box::new(LisaStream { session }));
                LisaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Most samples the next push of `len` inputs can emit.
fn push_bound(s: &StreamSession<f32>, len: usize) -> usize {
    output_len((s.pushed() + len) as f64 / s.rate_in(), s.rate_out()).saturating_sub(s.emitted())
}

/// Capacity that guarantees the next push of `len` samples (or, with
/// `len == 0`, the close) fits; 0 for null.
///
/// # Safety
/// `stream` must be null or a live session.
#[no_mangle]
pub unsafe extern "C" fn lisa_stream_max_output(stream: *const LisaStream, len: usize) -> usize {
    stream.as_ref().map_or(0, |s| push_bound(&s.session, len))
}

/// Feeds `len` input samples and writes every output that became
/// computable. If `capacity` is below `lisa_stream_max_output(stream, len)`
/// nothing is consumed.
///
/// # Safety
/// `stream` must be a live session, `samples` must point to `len` floats,
/// `output` to `capacity` writable floats, and `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lisa_stream_push(
    stream: *mut LisaStream,
    samples: *const f32,
    len: usize,
    output: *mut f32,
    capacity: usize,
    written: *mut usize,
) -> LisaStatus {
    guard(|| {
        let (Some(stream), false) = (stream.as_mut(), written.is_null()) else {
            return fail(LisaStatus::NullPointer, "null argument to lisa_stream_push");
        };
        *written = 0;
        let Some(samples) = input_slice(samples, len) else {
            return fail(LisaStatus::NullPointer, "input buffer is null");
        };
        if stream.session.is_closed() {
            return from_error(Error::SessionClosed);
        }
        let bound = push_bound(&stream.session, len);
        if bound > capacity {
            *written = bound;
            return fail(LisaStatus::BufferTooSmall, format!("need up to {bound} samples, capacity {capacity}"));
        }
        let input: Vec<f64> = samples.iter().map(|&v| v as f64).collect();
        match stream.session.push(&input) {
            Ok(out) => write_out(&out, output, capacity, written),
            Err(e) => from_error(e),
        }
    })
}

/// Ends the input and writes the remaining outputs.
///
/// # Safety
/// As for [`lisa_stream_push`].
#[no_mangle]
pub unsafe extern "C" fn lisa_stream_close(
    stream: *mut LisaStream,
    output: *mut f32,
    capacity: usize,
    written: *mut usize,
) -> LisaStatus {
    guard(|| {
        let (Some(stream), false) = (stream.as_mut(), written.is_null()) else {
            return fail(LisaStatus::NullPointer, "null argument to lisa_stream_close");
        };
        *written = 0;
        if stream.session.is_closed() {
            return from_error(Error::SessionClosed);
        }
        let bound = push_bound(&stream.session, 0);
        if bound > capacity {
            *written = bound;
            return fail(LisaStatus::BufferTooSmall, format!("need {bound} samples, capacity {capacity}"));
        }
        match stream.session.close() {
            Ok(out) => write_out(&out, output, capacity, written),
            Err(e) => from_error(e),
        }
    })
}

/// Input samples accepted so far; 0 for null.
///
/// # Safety
/// `stream` must be null or a live session.
#[no_mangle]
pub unsafe extern "C" fn lisa_stream_pushed(stream: *const LisaStream) -> usize {
    stream.as_ref().map_or(0, |s| s.session.pushed())
}

/// Output samples emitted so far; 0 for null.
///
/// # Safety
/// `stream` must be null or a live session.
#[no_mangle]
pub unsafe extern "C" fn lisa_stream_emitted(stream: *const LisaStream) -> usize {
    stream.as_ref().map_or(0, |s| s.session.emitted())
}

/// # Safety
/// `stream` must come from `lisa_stream_new` and not have been freed.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lisa_stream_free(stream: *mut LisaStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Description of the last failure on the calling thread, or an empty
/// string. Valid until the next `lisa_*` call on this thread.
#[no_mangle]
pub extern "C" fn lisa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn lisa_status_string(status: LisaStatus) -> *const c_char {
    let s: &'static CStr = match status {
        LisaStatus::Ok => c"ok",
        LisaStatus::NullPointer => c"null pointer",
        LisaStatus::InvalidArgument => c"invalid argument",
        LisaStatus::Io => c"i/o error",
        LisaStatus::Format => c"bad file format",
        LisaStatus::TooShort => c"input too short",
        LisaStatus::SessionClosed => c"session closed",
        LisaStatus::BufferTooSmall => c"output buffer too small",
        LisaStatus::NonFinite => c"non-finite value",
        LisaStatus::Panic => c"panic",
    };
    s.as_ptr()
}
