//! C ABI for `ontoclust`.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns an
//! [`OcStatus`]; on failure a message is available from [`oc_last_error`]
//! on the same thread until the next failing call. Strings returned by the
//! library are released with [`oc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ontoclust::error::exit;
use ontoclust::evaluation::{step_improvement, EvaluationReport, SseSpace};
use ontoclust::pipeline::{load_normalized, run_pipeline, PipelineOptions};
use ontoclust::{project, DataMatrix, Error, GaConfig, IngestReport, Ontology, Schema};

/// Status codes. The first five match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcStatus {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Ontology = 3,
    Internal = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    BufferTooSmall = 7,
}

/// Parsed and validated ontology.
pub struct OcOntology(Ontology);

/// Loaded, normalized feature matrix with its ingest report.
pub struct OcData {
    matrix: DataMatrix,
    ingest: IngestReport,
}

/// Evaluation report of a full pipeline run.
pub struct OcReport(EvaluationReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(OcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            exit::USAGE => OcStatus::Usage,
            exit::DATA => OcStatus::Data,
            exit::ONTOLOGY => OcStatus::Ontology,
            _ => OcStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

/// Runs `f`, turning errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal error: panic inside ontoclust".into());
            OcStatus::Internal
        }
    }
}

fn null() -> Failure {
    Failure(OcStatus::NullPointer, "null pointer argument".into())
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(OcStatus::InvalidUtf8, format!("invalid UTF-8: {e}")))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn oc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses ontology text into a new handle.
///
/// # Safety
/// `source` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_ontology_parse(
    source: *const c_char,
    out: *mut *mut OcOntology,
) -> OcStatus {
    guard(|| {
        let o = Ontology::parse(text(source)?).map_err(|e| Failure::from(Error::from(e)))?;
        write(out, Box::into_raw(Box::new(OcOntology(o))))
    })
}

/// Number of levels.
///
/// # Safety
/// `o` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_ontology_depth(o: *const OcOntology, out: *mut usize) -> OcStatus {
    guard(|| write(out, handle(o)?.0.depth()))
}

/// Number of concepts at `level` (1-based).
///
/// # Safety
/// `o` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_ontology_level_size(
    o: *const OcOntology,
    level: usize,
    out: *mut usize,
) -> OcStatus {
    guard(|| {
        let concepts = handle(o)?
            .0
            .concepts_at_level(level)
            .map_err(|e| Failure::from(Error::from(e)))?;
        write(out, concepts.len())
    })
}

/// # Safety
/// `o` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn oc_ontology_free(o: *mut OcOntology) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

fn schema_or_default(schema: Option<&str>) -> Result<Schema, Failure> {
    match schema {
        Some(s) => Schema::parse(s).map_err(|e| Failure::from(Error::from(e))),
        None => Ok(Schema::new()),
    }
}

/// Loads CSV text and min-max normalizes its feature columns. `schema` may
/// be null, in which case every column is a feature.
///
/// # Safety
/// `csv` and non-null `schema` must be nul-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn oc_data_load(
    csv: *const c_char,
    schema: *const c_char,
    out: *mut *mut OcData,
) -> OcStatus {
    guard(|| {
        let csv = text(csv)?;
        let schema = schema_or_default(if schema.is_null() {
            None
        } else {
            Some(text(schema)?)
        })?;
        let (matrix, ingest) = load_normalized(csv, &schema)?;
        write(out, Box::into_raw(Box::new(OcData { matrix, ingest })))
    })
}

/// Record and feature counts of a loaded matrix, and rows dropped at load.
///
/// # Safety
/// `d` must be a live handle; every out pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_data_shape(
    d: *const OcData,
    rows: *mut usize,
    cols: *mut usize,
    dropped: *mut usize,
) -> OcStatus {
    guard(|| {
        let d = handle(d)?;
        write(rows, d.matrix.rows())?;
        write(cols, d.matrix.cols())?;
        write(dropped, d.ingest.rows_dropped)
    })
}

/// # Safety
/// `d` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn oc_data_free(d: *mut OcData) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Projects the data onto `level`, writing the row-major values into `buf`.
/// `cols` always receives the level width. If `capacity` is smaller than
/// rows × cols nothing is written and `BufferTooSmall` is returned, so a
/// call with `capacity = 0` queries the size.
///
/// # Safety
/// `d` and `o` must be live handles; `buf` must hold `capacity` doubles
/// (or be null when `capacity` is 0); `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_project(
    d: *const OcData,
    o: *const OcOntology,
    level: usize,
    buf: *mut f64,
    capacity: usize,
    cols: *mut usize,
) -> OcStatus {
    guard(|| {
        let p = project(&handle(d)?.matrix, &handle(o)?.0, level).map_err(Error::from)?;
        write(cols, p.cols())?;
        let values = p.values.as_slice();
        if capacity < values.len() {
            return Err(Failure(
                OcStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, need {}", values.len()),
            ));
        }
        if buf.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Runs the whole pipeline with default genetic-search settings and the
/// given seed. `level_space` selects own-level SSE for the improvements
/// instead of the level-1 space. `schema` may be null.
///
/// # Safety
/// `csv` and non-null `schema` must be nul-terminated strings; `o` must be
/// a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_run(
    csv: *const c_char,
    schema: *const c_char,
    o: *const OcOntology,
    seed: u64,
    level_space: bool,
    out: *mut *mut OcReport,
) -> OcStatus {
    guard(|| {
        let csv = text(csv)?;
        let schema = schema_or_default(if schema.is_null() {
            None
        } else {
            Some(text(schema)?)
        })?;
        let opts = PipelineOptions {
            dataset_name: String::new(),
            ga: GaConfig {
                seed,
                ..GaConfig::default()
            },
            space: if level_space {
                SseSpace::Level
            } else {
                SseSpace::Original
            },
        };
        let result = run_pipeline(csv, &schema, &handle(o)?.0, &opts)?;
        write(out, Box::into_raw(Box::new(OcReport(result.report))))
    })
}

/// Report as JSON. Release the string with [`oc_string_free`].
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_report_json(r: *const OcReport, out: *mut *mut c_char) -> OcStatus {
    guard(|| {
        let json = CString::new(handle(r)?.0.to_json())
            .map_err(|e| Failure(OcStatus::Internal, e.to_string()))?;
        write(out, json.into_raw())
    })
}

/// Number of levels in the report.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_report_levels(r: *const OcReport, out: *mut usize) -> OcStatus {
    guard(|| write(out, handle(r)?.0.levels.len()))
}

/// Cluster count and both SSE values of the `index`-th level (0-based).
///
/// # Safety
/// `r` must be a live handle; every out pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_report_level(
    r: *const OcReport,
    index: usize,
    k: *mut usize,
    sse_original: *mut f64,
    sse_level: *mut f64,
) -> OcStatus {
    guard(|| {
        let levels = &handle(r)?.0.levels;
        let l = levels.get(index).ok_or_else(|| {
            Failure(
                OcStatus::Usage,
                format!(
                    "level index {index} out of range (report has {})",
                    levels.len()
                ),
            )
        })?;
        write(k, l.k)?;
        write(sse_original, l.sse_original_space)?;
        write(sse_level, l.sse_level_space)
    })
}

/// Total improvement percentage.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_report_total_improvement(
    r: *const OcReport,
    out: *mut f64,
) -> OcStatus {
    guard(|| write(out, handle(r)?.0.total_improvement))
}

/// # Safety
/// `r` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn oc_report_free(r: *mut OcReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Percentage SSE improvement from `sse_prev` to `sse_next`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oc_step_improvement(
    sse_prev: f64,
    sse_next: f64,
    out: *mut f64,
) -> OcStatus {
    guard(|| {
        let v = step_improvement(sse_prev, sse_next).map_err(Error::from)?;
        write(out, v)
    })
}
