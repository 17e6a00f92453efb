//! C interface over opaque graph and outcome handles.
//!
//! Every fallible call returns a [`CmStatus`]; on failure the message is
//! kept per thread and read back with [`cm_last_error_message`]. Panics are
//! caught at the boundary and reported as [`CmStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cm_compete::compete::{run_competition, Color, CompetitionConfig, Outcome, SpeedRatio, TieRule};
use cm_compete::degrees::DegreeModel;
use cm_compete::error::Error;
use cm_compete::graph::{DegreeSequence, Graph};
use cm_compete::predict::{predict, TheoryInputs};

/// Result codes.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    TooLarge = 4,
    Io = 5,
    Format = 6,
    Incomplete = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Tie rules by code, in the order of the enum.
pub const CM_TIE_ALWAYS_RED: i32 = 0;
pub const CM_TIE_ALWAYS_BLUE: i32 = 1;
pub const CM_TIE_FAIR_COIN: i32 = 2;
pub const CM_TIE_NEIGHBOR_PROPORTIONAL: i32 = 3;

/// Vertex colors reported by [`cm_outcome_vertex`].
pub const CM_UNPAINTED: u8 = 0;
pub const CM_RED: u8 = 1;
pub const CM_BLUE: u8 = 2;

/// Opaque graph.
pub struct CmGraph(Graph);

/// Opaque competition result.
pub struct CmOutcome(Outcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CmStatus {
    match e {
        Error::InvalidParameter(_)
        | Error::InvalidDegreeSequence(_)
        | Error::VertexOutOfRange { .. }
        | Error::CoincidentSources(_)
        | Error::MissingRng(_) => CmStatus::InvalidArgument,
        Error::Domain { .. } => CmStatus::Domain,
        Error::TooLarge { .. } | Error::EnumerationTooLarge(_) => CmStatus::TooLarge,
        Error::Io(_) => CmStatus::Io,
        Error::Format(_) => CmStatus::Format,
        Error::Incomplete { .. } | Error::ComponentExhausted { .. } => CmStatus::Incomplete,
    }
}

fn fail(status: CmStatus, msg: impl Into<String>) -> CmStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), CmStatus>>(f: F) -> CmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(CmStatus::Panic, msg)
        }
    }
}

fn lift<T>(r: cm_compete::error::Result<T>) -> Result<T, CmStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), CmStatus> {
    if p.is_null() {
        Err(fail(CmStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn tie_rule(code: i32) -> Result<TieRule, CmStatus> {
    match code {
        CM_TIE_ALWAYS_RED => Ok(TieRule::AlwaysRed),
        CM_TIE_ALWAYS_BLUE => Ok(TieRule::AlwaysBlue),
        CM_TIE_FAIR_COIN => Ok(TieRule::FairCoin),
        CM_TIE_NEIGHBOR_PROPORTIONAL => Ok(TieRule::NeighborProportional),
        _ => Err(fail(CmStatus::InvalidArgument, format!("unknown tie rule code {code}"))),
    }
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, CmStatus> {
    non_null(path, "path")?;
    let s = CStr::from_ptr(path).to_str().map_err(|_| fail(CmStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(Path::new(s))
}

/// Copies `s` with a trailing NUL into `buf`; `needed` receives the full
/// length including the NUL.
unsafe fn write_str(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), CmStatus> {
    let bytes = s.as_bytes();
    if !needed.is_null() {
        *needed = bytes.len() + 1;
    }
    if buf.is_null() || len < bytes.len() + 1 {
        return Err(fail(CmStatus::BufferTooSmall, format!("need {} bytes", bytes.len() + 1)));
    }
    std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
    *buf.add(bytes.len()) = 0;
    Ok(())
}

/// Copies the calling thread's last error message into `buf`.
///
/// Returns the message length including the NUL, or 0 if there is none.
/// The copy is truncated to fit `len` bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Builds a configuration-model graph with `n` power-law degrees.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free
/// with [`cm_graph_free`].
#[no_mangle]
pub unsafe extern "C" fn cm_graph_build(n: u64, tau: f64, seed: u64, out: *mut *mut CmGraph) -> CmStatus {
    guard(|| {
        non_null(out, "out")?;
        let model = lift(DegreeModel::pareto_ceil(tau))?;
        let g = lift(Graph::build(n, &model, seed))?;
        *out = Box::into_raw(Box::new(CmGraph(g)));
        Ok(())
    })
}

/// Builds a graph from an explicit degree sequence; an odd total is fixed
/// by lowering the last degree.
///
/// # Safety
/// `degrees` must point to `len` readable values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cm_graph_from_degrees(
    degrees: *const u32,
    len: usize,
    seed: u64,
    out: *mut *mut CmGraph,
) -> CmStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(degrees, "degrees")?;
        let seq = lift(DegreeSequence::new(std::slice::from_raw_parts(degrees, len).to_vec()))?;
        *out = Box::into_raw(Box::new(CmGraph(Graph::from_degree_sequence(&seq, seed))));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cm_graph_load(path: *const c_char, out: *mut *mut CmGraph) -> CmStatus {
    guard(|| {
        non_null(out, "out")?;
        let g = lift(Graph::load(path_arg(path)?))?;
        *out = Box::into_raw(Box::new(CmGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from this library and `path` be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cm_graph_save(graph: *const CmGraph, path: *const c_char) -> CmStatus {
    guard(|| {
        non_null(graph, "graph")?;
        lift((*graph).0.save(path_arg(path)?))
    })
}

/// Number of vertices, 0 for a null handle.
///
/// # Safety
/// `graph` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cm_graph_vertex_count(graph: *const CmGraph) -> u64 {
    graph.as_ref().map_or(0, |g| g.0.n() as u64)
}

/// Total number of half-edges, 0 for a null handle.
///
/// # Safety
/// `graph` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cm_graph_half_edges(graph: *const CmGraph) -> u64 {
    graph.as_ref().map_or(0, |g| g.0.half_edges())
}

/// # Safety
/// `graph` must come from this library and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn cm_graph_degree(graph: *const CmGraph, vertex: u32, out: *mut u32) -> CmStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        let g = &(*graph).0;
        let v = lift(g.check_vertex(vertex as u64))?;
        *out = g.degree(v);
        Ok(())
    })
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cm_graph_free(graph: *mut CmGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Runs the competition; blue needs `lambda_num / lambda_den` time units
/// per step against red's one.
///
/// # Safety
/// `graph` must come from this library and `out` be valid; the result is
/// freed with [`cm_outcome_free`].
#[no_mangle]
pub unsafe extern "C" fn cm_run_competition(
    graph: *const CmGraph,
    lambda_num: u64,
    lambda_den: u64,
    red_source: u32,
    blue_source: u32,
    tie_rule_code: i32,
    seed: u64,
    out: *mut *mut CmOutcome,
) -> CmStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        let cfg = CompetitionConfig {
            lambda: lift(SpeedRatio::new(lambda_num, lambda_den))?,
            red_source,
            blue_source,
            tie_rule: tie_rule(tie_rule_code)?,
            seed,
        };
        let o = lift(run_competition(&(*graph).0, &cfg))?;
        *out = Box::into_raw(Box::new(CmOutcome(o)));
        Ok(())
    })
}

/// # Safety
/// `outcome` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cm_outcome_red_count(outcome: *const CmOutcome) -> u64 {
    outcome.as_ref().map_or(0, |o| o.0.red_count)
}

/// # Safety
/// `outcome` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cm_outcome_blue_count(outcome: *const CmOutcome) -> u64 {
    outcome.as_ref().map_or(0, |o| o.0.blue_count)
}

/// Largest degree among blue vertices.
///
/// # Safety
/// `outcome` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cm_outcome_dmax_blue(outcome: *const CmOutcome) -> u32 {
    outcome.as_ref().map_or(0, |o| o.0.dmax_blue())
}

/// Writes the first blocking tick; returns 1 if there was one, 0 if not
/// and -1 for null arguments.
///
/// # Safety
/// `outcome` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cm_outcome_first_block_tick(outcome: *const CmOutcome, out: *mut u64) -> i32 {
    match (outcome.as_ref(), out.is_null()) {
        (Some(o), false) => match o.0.first_block_tick {
            Some(t) => {
                *out = t;
                1
            }
            None => 0,
        },
        _ => -1,
    }
}

/// # Safety
/// `outcome` must come from this library and `color`/`tick` be valid;
/// `tick` receives `UINT64_MAX` for unpainted vertices.
#[no_mangle]
pub unsafe extern "C" fn cm_outcome_vertex(
    outcome: *const CmOutcome,
    vertex: u32,
    color: *mut u8,
    tick: *mut u64,
) -> CmStatus {
    guard(|| {
        non_null(outcome, "outcome")?;
        non_null(color, "color")?;
        non_null(tick, "tick")?;
        let o = &(*outcome).0;
        let v = vertex as usize;
        if v >= o.colors.len() {
            return Err(fail(CmStatus::InvalidArgument, format!("vertex {vertex} out of range")));
        }
        *color = match o.colors[v] {
            Color::Unpainted => CM_UNPAINTED,
            Color::Red => CM_RED,
            Color::Blue => CM_BLUE,
        };
        *tick = o.paint_tick[v];
        Ok(())
    })
}

/// # Safety
/// `outcome` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cm_outcome_free(outcome: *mut CmOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// Inputs of [`cm_predict_json`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CmTheoryInputs {
    pub log_log_n: f64,
    pub tau: f64,
    pub lambda: f64,
    pub rho_prime: f64,
    pub yr: f64,
    pub yb: f64,
    pub clogn: f64,
    pub tie_rule: i32,
}

/// Evaluates the prediction chain and writes the report as JSON.
///
/// With a null or short `buf` the call fails with `BufferTooSmall` and
/// `needed` still receives the required size including the NUL.
///
/// # Safety
/// `inputs` must be valid, `buf` null or `len` writable bytes, `needed`
/// null or valid.
#[no_mangle]
pub unsafe extern "C" fn cm_predict_json(
    inputs: *const CmTheoryInputs,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> CmStatus {
    guard(|| {
        non_null(inputs, "inputs")?;
        let i = *inputs;
        let inp = TheoryInputs {
            log_log_n: i.log_log_n,
            tau: i.tau,
            lambda: i.lambda,
            rho_prime: i.rho_prime,
            yr: i.yr,
            yb: i.yb,
            clogn: i.clogn,
            tie_rule: tie_rule(i.tie_rule)?,
        };
        let report = lift(predict(&inp))?.report();
        let json = serde_json::to_string(&report).map_err(|e| fail(CmStatus::Format, e.to_string()))?;
        write_str(&json, buf, len, needed)
    })
}
