//! C ABI for the localization toolkit.
//!
//! Conventions: every fallible call returns a [`BarylocStatus`] and writes
//! its output through pointers; every returned object has exactly one
//! matching `_free` function; strings are UTF-8 and NUL-terminated. On any
//! non-`Ok` status a human-readable message is available from
//! [`baryloc_last_error`] until the next call on the same thread. Input
//! enums are plain integers so that out-of-range values from C are caught
//! instead of being undefined behavior.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use baryloc::document::{NetworkDocument, ResultDocument};
use baryloc::network::{SensorNetwork, SubsetCap};
use baryloc::pipeline::{self, LocalizeOptions, PipelineError, PipelineOutput, SolverChoice};
use baryloc::solver::{PathMode, SolveStatus, DEFAULT_ITER_TOL, DEFAULT_MAX_ITERS};

/// Result of every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarylocStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The document could not be parsed.
    ParseError = 3,
    /// Arguments were structurally valid but semantically wrong
    /// (inconsistent document, bad option values, index out of range).
    InvalidArgument = 4,
    /// The pipeline could not produce a system (degenerate geometry).
    NumericalFailure = 5,
    /// Reading the input file failed.
    IoError = 6,
    /// A panic was caught at the boundary; state may be stale but the
    /// process is intact.
    InternalPanic = 7,
}

/// Terminal state of a solve, mirrored from the core library.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarylocSolveStatus {
    Solved = 0,
    Singular = 1,
    Diverged = 2,
}

pub const BARYLOC_SOLVER_DIRECT: u32 = 0;
pub const BARYLOC_SOLVER_ITERATIVE: u32 = 1;
pub const BARYLOC_PATHS_VERTEX_DISJOINT: u32 = 0;
pub const BARYLOC_PATHS_EDGE_DISJOINT: u32 = 1;

/// Plain-data solve options. Zero-initialization gives the defaults except
/// for `max_iters` and `tol`; prefer [`baryloc_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BarylocOptions {
    /// Per-branch subset cap; 0 means unlimited.
    pub subset_cap: u64,
    /// `BARYLOC_SOLVER_DIRECT` or `BARYLOC_SOLVER_ITERATIVE`.
    pub solver: u32,
    /// Iteration limit for the iterative solver.
    pub max_iters: u64,
    /// Convergence tolerance for the iterative solver.
    pub tol: f64,
    /// Required disjoint-path count for the connectivity diagnostic;
    /// 0 skips the diagnostic.
    pub diagnostic_paths: u64,
    /// `BARYLOC_PATHS_VERTEX_DISJOINT` or `BARYLOC_PATHS_EDGE_DISJOINT`.
    pub path_mode: u32,
}

/// Opaque handle to a parsed sensor network.
pub struct BarylocNetwork {
    net: SensorNetwork,
}

/// Opaque handle to the output of one localization run.
pub struct BarylocResult {
    dimension: usize,
    out: PipelineOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL bytes removed");
    });
}

fn fail(status: BarylocStatus, msg: &str) -> BarylocStatus {
    set_last_error(msg);
    status
}

/// Message for the most recent non-`Ok` status on this thread. Never null;
/// empty when no error has occurred. The pointer is invalidated by the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn baryloc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn guarded(body: impl FnOnce() -> BarylocStatus) -> BarylocStatus {
    catch_unwind(AssertUnwindSafe(body))
        .unwrap_or_else(|_| fail(BarylocStatus::InternalPanic, "panic caught at the C boundary"))
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, BarylocStatus> {
    if ptr.is_null() {
        return Err(fail(
            BarylocStatus::NullArgument,
            &format!("{what} must not be null"),
        ));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| fail(BarylocStatus::InvalidUtf8, &format!("{what} is not UTF-8")))
}

fn document_status(err: &baryloc::document::DocumentError) -> BarylocStatus {
    use baryloc::document::DocumentError::*;
    match err {
        Io(_) => BarylocStatus::IoError,
        Json(_) => BarylocStatus::ParseError,
        _ => BarylocStatus::InvalidArgument,
    }
}

fn network_from_document(
    doc: NetworkDocument,
    out: *mut *mut BarylocNetwork,
) -> BarylocStatus {
    match doc.to_network() {
        Ok(net) => {
            unsafe {
                *out = Box::into_raw(Box::new(BarylocNetwork { net }));
            }
            BarylocStatus::Ok
        }
        Err(e) => fail(BarylocStatus::InvalidArgument, &e.to_string()),
    }
}

/// Parse a network document from a JSON string into a new handle.
#[no_mangle]
pub extern "C" fn baryloc_network_from_json(
    json: *const c_char,
    out: *mut *mut BarylocNetwork,
) -> BarylocStatus {
    guarded(|| {
        if out.is_null() {
            return fail(BarylocStatus::NullArgument, "out must not be null");
        }
        let text = match unsafe { read_str(json, "json") } {
            Ok(t) => t,
            Err(status) => return status,
        };
        match NetworkDocument::from_json(text) {
            Ok(doc) => network_from_document(doc, out),
            Err(e) => fail(document_status(&e), &e.to_string()),
        }
    })
}

/// Read and parse a network document from a file path.
#[no_mangle]
pub extern "C" fn baryloc_network_load(
    path: *const c_char,
    out: *mut *mut BarylocNetwork,
) -> BarylocStatus {
    guarded(|| {
        if out.is_null() {
            return fail(BarylocStatus::NullArgument, "out must not be null");
        }
        let path = match unsafe { read_str(path, "path") } {
            Ok(t) => t,
            Err(status) => return status,
        };
        match NetworkDocument::load(Path::new(path)) {
            Ok(doc) => network_from_document(doc, out),
            Err(e) => fail(document_status(&e), &e.to_string()),
        }
    })
}

/// Release a network handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn baryloc_network_free(net: *mut BarylocNetwork) {
    if !net.is_null() {
        drop(unsafe { Box::from_raw(net) });
    }
}

macro_rules! read_handle {
    ($ptr:expr, $what:literal) => {
        match unsafe { $ptr.as_ref() } {
            Some(h) => h,
            None => return fail(BarylocStatus::NullArgument, concat!($what, " must not be null")),
        }
    };
}

macro_rules! out_ptr {
    ($ptr:expr, $what:literal) => {
        if $ptr.is_null() {
            return fail(BarylocStatus::NullArgument, concat!($what, " must not be null"));
        }
    };
}

#[no_mangle]
pub extern "C" fn baryloc_network_dimension(
    net: *const BarylocNetwork,
    out: *mut u32,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(net, "net");
        out_ptr!(out, "out");
        unsafe { *out = handle.net.dimension() as u32 };
        BarylocStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn baryloc_network_node_count(
    net: *const BarylocNetwork,
    out: *mut u64,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(net, "net");
        out_ptr!(out, "out");
        unsafe { *out = handle.net.node_count() as u64 };
        BarylocStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn baryloc_network_anchor_count(
    net: *const BarylocNetwork,
    out: *mut u64,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(net, "net");
        out_ptr!(out, "out");
        unsafe { *out = handle.net.anchor_count() as u64 };
        BarylocStatus::Ok
    })
}

/// Write the default options: unlimited cap, direct solver, diagnostic off.
#[no_mangle]
pub extern "C" fn baryloc_options_default(out: *mut BarylocOptions) -> BarylocStatus {
    guarded(|| {
        out_ptr!(out, "out");
        unsafe {
            *out = BarylocOptions {
                subset_cap: 0,
                solver: BARYLOC_SOLVER_DIRECT,
                max_iters: DEFAULT_MAX_ITERS as u64,
                tol: DEFAULT_ITER_TOL,
                diagnostic_paths: 0,
                path_mode: BARYLOC_PATHS_VERTEX_DISJOINT,
            };
        }
        BarylocStatus::Ok
    })
}

fn convert_options(raw: &BarylocOptions) -> Result<LocalizeOptions, BarylocStatus> {
    let cap = match raw.subset_cap {
        0 => SubsetCap::Unlimited,
        k => SubsetCap::PerBranch(usize::try_from(k).map_err(|_| {
            fail(BarylocStatus::InvalidArgument, "subset_cap exceeds the address space")
        })?),
    };
    let solver = match raw.solver {
        BARYLOC_SOLVER_DIRECT => SolverChoice::Direct,
        BARYLOC_SOLVER_ITERATIVE => {
            if raw.max_iters == 0 {
                return Err(fail(
                    BarylocStatus::InvalidArgument,
                    "max_iters must be positive for the iterative solver",
                ));
            }
            if !(raw.tol > 0.0) {
                return Err(fail(
                    BarylocStatus::InvalidArgument,
                    "tol must be a positive number for the iterative solver",
                ));
            }
            SolverChoice::Iterative {
                max_iters: usize::try_from(raw.max_iters).unwrap_or(usize::MAX),
                tol: raw.tol,
            }
        }
        other => {
            return Err(fail(
                BarylocStatus::InvalidArgument,
                &format!("unknown solver code {other}"),
            ))
        }
    };
    let path_mode = match raw.path_mode {
        BARYLOC_PATHS_VERTEX_DISJOINT => PathMode::VertexDisjoint,
        BARYLOC_PATHS_EDGE_DISJOINT => PathMode::EdgeDisjoint,
        other => {
            return Err(fail(
                BarylocStatus::InvalidArgument,
                &format!("unknown path mode code {other}"),
            ))
        }
    };
    let diagnostic_paths = match raw.diagnostic_paths {
        0 => None,
        k => Some(usize::try_from(k).map_err(|_| {
            fail(BarylocStatus::InvalidArgument, "diagnostic_paths exceeds the address space")
        })?),
    };
    Ok(LocalizeOptions {
        cap,
        solver,
        diagnostic_paths,
        path_mode,
    })
}

/// Run prune, enumeration, assembly and solve on the network. `opts` may be
/// null for the defaults. A solve that terminates as singular or diverged
/// still returns `Ok`; inspect the result's solve status.
#[no_mangle]
pub extern "C" fn baryloc_localize(
    net: *const BarylocNetwork,
    opts: *const BarylocOptions,
    out: *mut *mut BarylocResult,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(net, "net");
        out_ptr!(out, "out");
        let options = if opts.is_null() {
            LocalizeOptions::default()
        } else {
            match convert_options(unsafe { &*opts }) {
                Ok(o) => o,
                Err(status) => return status,
            }
        };
        match pipeline::localize(&handle.net, &options) {
            Ok(output) => {
                unsafe {
                    *out = Box::into_raw(Box::new(BarylocResult {
                        dimension: handle.net.dimension(),
                        out: output,
                    }));
                }
                BarylocStatus::Ok
            }
            Err(e @ (PipelineError::Network(_) | PipelineError::Solver(_))) => {
                fail(BarylocStatus::InvalidArgument, &e.to_string())
            }
            Err(e) => fail(BarylocStatus::NumericalFailure, &e.to_string()),
        }
    })
}

/// Release a result handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn baryloc_result_free(res: *mut BarylocResult) {
    if !res.is_null() {
        drop(unsafe { Box::from_raw(res) });
    }
}

#[no_mangle]
pub extern "C" fn baryloc_result_solve_status(
    res: *const BarylocResult,
    out: *mut BarylocSolveStatus,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(res, "res");
        out_ptr!(out, "out");
        let status = match handle.out.result.status {
            SolveStatus::Solved => BarylocSolveStatus::Solved,
            SolveStatus::Singular => BarylocSolveStatus::Singular,
            SolveStatus::Diverged => BarylocSolveStatus::Diverged,
        };
        unsafe { *out = status };
        BarylocStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn baryloc_result_dimension(
    res: *const BarylocResult,
    out: *mut u32,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(res, "res");
        out_ptr!(out, "out");
        unsafe { *out = handle.dimension as u32 };
        BarylocStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn baryloc_result_rcond(
    res: *const BarylocResult,
    out: *mut f64,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(res, "res");
        out_ptr!(out, "out");
        unsafe { *out = handle.out.result.rcond };
        BarylocStatus::Ok
    })
}

/// Iteration count of the iterative solver; 0 for the direct solver.
#[no_mangle]
pub extern "C" fn baryloc_result_iterations(
    res: *const BarylocResult,
    out: *mut u64,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(res, "res");
        out_ptr!(out, "out");
        unsafe { *out = handle.out.result.iterations.unwrap_or(0) as u64 };
        BarylocStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn baryloc_result_position_count(
    res: *const BarylocResult,
    out: *mut u64,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(res, "res");
        out_ptr!(out, "out");
        unsafe { *out = handle.out.result.positions.len() as u64 };
        BarylocStatus::Ok
    })
}

/// Fetch the position at `index` (ascending node id order). `coords` must
/// hold at least the network dimension; `coords_len` is checked.
#[no_mangle]
pub extern "C" fn baryloc_result_position(
    res: *const BarylocResult,
    index: u64,
    id_out: *mut u32,
    coords: *mut f64,
    coords_len: u64,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(res, "res");
        out_ptr!(id_out, "id_out");
        out_ptr!(coords, "coords");
        if coords_len < handle.dimension as u64 {
            return fail(
                BarylocStatus::InvalidArgument,
                &format!(
                    "coords_len {} below network dimension {}",
                    coords_len, handle.dimension
                ),
            );
        }
        let Some((id, pos)) = handle
            .out
            .result
            .positions
            .iter()
            .nth(index as usize)
        else {
            return fail(
                BarylocStatus::InvalidArgument,
                &format!(
                    "index {} out of range for {} positions",
                    index,
                    handle.out.result.positions.len()
                ),
            );
        };
        unsafe {
            *id_out = *id;
            ptr::copy_nonoverlapping(pos.as_ptr(), coords, handle.dimension);
        }
        BarylocStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn baryloc_result_pruned_count(
    res: *const BarylocResult,
    out: *mut u64,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(res, "res");
        out_ptr!(out, "out");
        unsafe { *out = handle.out.pruned.len() as u64 };
        BarylocStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn baryloc_result_pruned_id(
    res: *const BarylocResult,
    index: u64,
    out: *mut u32,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(res, "res");
        out_ptr!(out, "out");
        let Some(&id) = handle.out.pruned.get(index as usize) else {
            return fail(
                BarylocStatus::InvalidArgument,
                &format!(
                    "index {} out of range for {} pruned ids",
                    index,
                    handle.out.pruned.len()
                ),
            );
        };
        unsafe { *out = id };
        BarylocStatus::Ok
    })
}

/// Serialize the full result document (status, rcond, pruned ids, positions,
/// diagnostics, timings) as JSON. Free the string with
/// [`baryloc_string_free`].
#[no_mangle]
pub extern "C" fn baryloc_result_to_json(
    res: *const BarylocResult,
    out: *mut *mut c_char,
) -> BarylocStatus {
    guarded(|| {
        let handle = read_handle!(res, "res");
        out_ptr!(out, "out");
        let doc = ResultDocument::from_output(handle.dimension, &handle.out);
        match doc.to_json() {
            Ok(json) => {
                let c = CString::new(json).expect("JSON has no NUL bytes");
                unsafe { *out = c.into_raw() };
                BarylocStatus::Ok
            }
            Err(e) => fail(BarylocStatus::InternalPanic, &e.to_string()),
        }
    })
}

/// Release a string returned by this library. Null is a no-op.
#[no_mangle]
pub extern "C" fn baryloc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
