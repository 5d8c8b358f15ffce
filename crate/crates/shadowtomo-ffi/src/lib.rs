//! C ABI over the shadowtomo library.
//!
//! Objects are opaque heap handles created by `*_new`/`*_read`/`*_sample` functions
//! and released with the matching `*_free`. Every fallible call returns a
//! [`ShadowtomoStatus`]; the message of the last failure on the calling thread is
//! available from [`shadowtomo_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use shadowtomo::ef_dynamics::evolve_snapshot_ef;
use shadowtomo::estimation::{
    estimate_observable, estimate_pauli, Aggregation, ObservableSpec, DEFAULT_EXTENT_CAP,
};
use shadowtomo::experiments::{cluster_state, ghz_state};
use shadowtomo::reconstruction::{
    closed_form_r_clifford, closed_form_r_depth_one, closed_form_r_pauli, read_r, solve_r_ladder,
    write_r, ReconstructionMps, SolveOptions,
};
use shadowtomo::shadow_norm::pauli_shadow_norm_from_ef;
use shadowtomo::stabilizer_sim::{
    read_snapshots, run_protocol, write_snapshots, CircuitSpec, PauliString, SnapshotStore,
    StabilizerState,
};
use shadowtomo::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShadowtomoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    NonFinite = 4,
    ExtentCap = 5,
    IncompleteEnsemble = 6,
    Parse = 7,
    InsufficientPoints = 8,
    Mismatch = 9,
    EmptyStore = 10,
    Io = 11,
    Panic = 12,
}

/// Built-in initial states.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShadowtomoState {
    Ghz = 0,
    Cluster = 1,
}

/// Closed-form reconstruction coefficients.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShadowtomoClosedForm {
    /// Depth 0: random single-qubit Cliffords.
    Pauli = 0,
    /// Depth 1 on an even ring.
    DepthOne = 1,
    /// Infinite depth: global Cliffords.
    Global = 2,
}

/// Summary of one estimate.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ShadowtomoEstimate {
    pub estimate: f64,
    pub variance: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Opaque snapshot collection.
pub struct ShadowtomoSnapshots(SnapshotStore);

/// Opaque reconstruction coefficients.
pub struct ShadowtomoReconstruction(ReconstructionMps);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ShadowtomoStatus {
    match e {
        Error::Dimension(_) | Error::Length { .. } => ShadowtomoStatus::Dimension,
        Error::NonFinite(_) => ShadowtomoStatus::NonFinite,
        Error::ExtentCap { .. } => ShadowtomoStatus::ExtentCap,
        Error::IncompleteEnsemble { .. } => ShadowtomoStatus::IncompleteEnsemble,
        Error::Invalid(_) => ShadowtomoStatus::InvalidArgument,
        Error::Parse { .. } => ShadowtomoStatus::Parse,
        Error::InsufficientPoints { .. } => ShadowtomoStatus::InsufficientPoints,
        Error::Mismatch(_) => ShadowtomoStatus::Mismatch,
        Error::EmptyStore => ShadowtomoStatus::EmptyStore,
        Error::Io(_) => ShadowtomoStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ShadowtomoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShadowtomoStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            ShadowtomoStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            ShadowtomoStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::Invalid(format!("{what} is not UTF-8"))))
}

fn aggregation(groups: usize) -> Aggregation {
    if groups == 0 {
        Aggregation::Mean
    } else {
        Aggregation::MedianOfMeans { groups }
    }
}

fn summary(r: &shadowtomo::estimation::EstimateResult) -> ShadowtomoEstimate {
    ShadowtomoEstimate {
        estimate: r.estimate,
        variance: r.variance,
        std_error: r.stderr,
        samples: r.samples,
    }
}

fn builtin_state(kind: u32, n: usize) -> Result<(StabilizerState, &'static str), Error> {
    match kind {
        k if k == ShadowtomoState::Ghz as u32 => Ok((ghz_state(n)?, "ghz")),
        k if k == ShadowtomoState::Cluster as u32 => Ok((cluster_state(n)?, "cluster")),
        k => Err(Error::Invalid(format!("unknown state kind {k}"))),
    }
}

/// Message of the last failure on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn shadowtomo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Sample `samples` snapshots of a built-in state (a [`ShadowtomoState`] value)
/// through depth-`depth` circuits.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free with
/// [`shadowtomo_snapshots_free`].
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_sample(
    state: u32,
    n: usize,
    depth: usize,
    samples: usize,
    seed: u64,
    out: *mut *mut ShadowtomoSnapshots,
) -> ShadowtomoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let (s, label) = builtin_state(state, n)?;
        let store = run_protocol(&s, &CircuitSpec::new(n, depth, seed), samples, label)?;
        *out = Box::into_raw(Box::new(ShadowtomoSnapshots(store)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_snapshots_read(
    path: *const c_char,
    out: *mut *mut ShadowtomoSnapshots,
) -> ShadowtomoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let store = read_snapshots(BufReader::new(File::open(string(path, "path")?)?))?;
        *out = Box::into_raw(Box::new(ShadowtomoSnapshots(store)));
        Ok(())
    })
}

/// # Safety
/// `snapshots` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_snapshots_write(
    snapshots: *const ShadowtomoSnapshots,
    path: *const c_char,
) -> ShadowtomoStatus {
    guard(|| {
        let s = deref(snapshots, "snapshots")?;
        let mut w = BufWriter::new(File::create(string(path, "path")?)?);
        write_snapshots(&s.0, &mut w)?;
        w.flush()?;
        Ok(())
    })
}

/// Number of snapshots, or 0 for NULL.
///
/// # Safety
/// `snapshots` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_snapshots_len(snapshots: *const ShadowtomoSnapshots) -> usize {
    snapshots.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `snapshots` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_snapshots_free(snapshots: *mut ShadowtomoSnapshots) {
    if !snapshots.is_null() {
        drop(Box::from_raw(snapshots));
    }
}

/// Closed-form coefficients; `kind` is a [`ShadowtomoClosedForm`] value.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_reconstruction_closed_form(
    kind: u32,
    n: usize,
    out: *mut *mut ShadowtomoReconstruction,
) -> ShadowtomoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if n == 0 {
            return Err(Error::Invalid("n must be positive".into()).into());
        }
        let r = match kind {
            k if k == ShadowtomoClosedForm::Pauli as u32 => closed_form_r_pauli(n),
            k if k == ShadowtomoClosedForm::DepthOne as u32 => closed_form_r_depth_one(n)?,
            k if k == ShadowtomoClosedForm::Global as u32 => closed_form_r_clifford(n),
            k => return Err(Error::Invalid(format!("unknown closed form {k}")).into()),
        };
        *out = Box::into_raw(Box::new(ShadowtomoReconstruction(r)));
        Ok(())
    })
}

/// Solve the reconstruction coefficients for depth `depth` (warm-started from depth 0
/// upward). `ef_bond = 0` keeps the EF exact. `achieved_loss` may be NULL.
///
/// # Safety
/// `out` must be a valid pointer; `achieved_loss` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_reconstruction_solve(
    n: usize,
    depth: usize,
    ef_bond: usize,
    r_bond: usize,
    tol: f64,
    max_iters: usize,
    out: *mut *mut ShadowtomoReconstruction,
    achieved_loss: *mut f64,
) -> ShadowtomoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let opts = SolveOptions {
            bond: r_bond,
            tol,
            max_iters,
            ..Default::default()
        };
        let r = solve_r_ladder(n, depth, (ef_bond > 0).then_some(ef_bond), &opts)?
            .pop()
            .expect("depth 0 present");
        if let Some(l) = achieved_loss.as_mut() {
            *l = r.loss().unwrap_or(0.0);
        }
        *out = Box::into_raw(Box::new(ShadowtomoReconstruction(r)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_reconstruction_read(
    path: *const c_char,
    out: *mut *mut ShadowtomoReconstruction,
) -> ShadowtomoStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let r = read_r(BufReader::new(File::open(string(path, "path")?)?))?;
        *out = Box::into_raw(Box::new(ShadowtomoReconstruction(r)));
        Ok(())
    })
}

/// # Safety
/// `r` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_reconstruction_write(
    r: *const ShadowtomoReconstruction,
    path: *const c_char,
) -> ShadowtomoStatus {
    guard(|| {
        let r = deref(r, "reconstruction")?;
        let mut w = BufWriter::new(File::create(string(path, "path")?)?);
        write_r(&r.0, &mut w)?;
        w.flush()?;
        Ok(())
    })
}

/// Coefficient `r_A` for the subset whose bit `i` marks site `i`.
///
/// # Safety
/// `r` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_reconstruction_coefficient(
    r: *const ShadowtomoReconstruction,
    mask: u64,
    value: *mut f64,
) -> ShadowtomoStatus {
    guard(|| {
        let r = deref(r, "reconstruction")?;
        *out_ref(value, "value")? = r.0.coefficient_mask(mask)?;
        Ok(())
    })
}

/// # Safety
/// `r` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_reconstruction_free(r: *mut ShadowtomoReconstruction) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Estimate a Pauli string such as `"ZZIIII"`; `groups = 0` averages, otherwise
/// median of means over `groups` groups.
///
/// # Safety
/// Handles must be live, `pauli` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_estimate_pauli(
    snapshots: *const ShadowtomoSnapshots,
    r: *const ShadowtomoReconstruction,
    pauli: *const c_char,
    groups: usize,
    out: *mut ShadowtomoEstimate,
) -> ShadowtomoStatus {
    guard(|| {
        let (s, r) = (deref(snapshots, "snapshots")?, deref(r, "reconstruction")?);
        let p: PauliString = string(pauli, "pauli")?.parse()?;
        *out_ref(out, "out")? = summary(&estimate_pauli(&s.0, &r.0, &p, aggregation(groups))?);
        Ok(())
    })
}

/// Fidelity with a stabilizer reference given as `"+ZZI;+IZZ;+XXX"`.
///
/// # Safety
/// Handles must be live, `generators` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_estimate_fidelity(
    snapshots: *const ShadowtomoSnapshots,
    r: *const ShadowtomoReconstruction,
    generators: *const c_char,
    groups: usize,
    out: *mut ShadowtomoEstimate,
) -> ShadowtomoStatus {
    guard(|| {
        let (s, r) = (deref(snapshots, "snapshots")?, deref(r, "reconstruction")?);
        let reference: StabilizerState = string(generators, "generators")?.parse()?;
        let obs = ObservableSpec::stabilizer(&reference);
        *out_ref(out, "out")? = summary(&estimate_observable(
            &s.0,
            &r.0,
            &obs,
            aggregation(groups),
            DEFAULT_EXTENT_CAP,
        )?);
        Ok(())
    })
}

/// Shadow norm of a Pauli string at depth `depth` from the EF alone; `ef_bond = 0`
/// keeps the EF exact.
///
/// # Safety
/// `pauli` must be NUL-terminated and `norm` valid.
#[no_mangle]
pub unsafe extern "C" fn shadowtomo_pauli_shadow_norm(
    pauli: *const c_char,
    depth: usize,
    ef_bond: usize,
    norm: *mut f64,
) -> ShadowtomoStatus {
    guard(|| {
        let p: PauliString = string(pauli, "pauli")?.parse()?;
        let ef = evolve_snapshot_ef(
            &CircuitSpec::new(p.len(), depth, 0),
            (ef_bond > 0).then_some(ef_bond),
        )?;
        *out_ref(norm, "norm")? = pauli_shadow_norm_from_ef(&ef, &p.support_mask())?;
        Ok(())
    })
}
