//! C ABI for `surfgrf`.
//!
//! Objects are opaque handles created by `sgrf_*_new`/`sgrf_*_load` style
//! functions and released by the matching `*_free`. Every fallible call
//! returns an [`SgrfStatus`]; on failure the message is available from
//! [`sgrf_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use surfgrf::assembly::{assemble_load, assemble_mass_stiffness, DiscreteSpace};
use surfgrf::fractional::{solve_fractional, split_beta, Pencil, SolverOptions};
use surfgrf::geometry::{load_geometry, MultipatchSurface};
use surfgrf::linalg::Hierarchy;
use surfgrf::reference::{spherical_harmonic_projected, SphericalHarmonicIndex};
use surfgrf::sampler::{sample_field, SampleOptions, SampledField};
use surfgrf::Error;

/// Result codes of every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgrfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Geometry = 4,
    Solver = 5,
    Parse = 6,
    Io = 7,
    Panic = 8,
}

/// Closed multipatch surface.
pub struct SgrfSurface {
    inner: Arc<MultipatchSurface>,
}

/// Discretized operator `κ² − Δ_Γ` with its multilevel hierarchy.
pub struct SgrfProblem {
    space: Arc<DiscreteSpace>,
    pencil: Pencil,
    level: usize,
    degree: usize,
}

/// One sampled random field.
pub struct SgrfField {
    inner: SampledField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SgrfStatus {
    match e {
        Error::Domain(_) => SgrfStatus::Domain,
        Error::InvalidKnots(_)
        | Error::InvalidPatch(_)
        | Error::SingularGeometry { .. }
        | Error::OpenSurface(_)
        | Error::IncompatibleInterface(_) => SgrfStatus::Geometry,
        Error::MaxIterations { .. }
        | Error::IndefiniteOperator { .. }
        | Error::DegenerateOperator { .. }
        | Error::ShiftedSolve { .. } => SgrfStatus::Solver,
        Error::Parse { .. } => SgrfStatus::Parse,
        Error::Io(_) => SgrfStatus::Io,
        Error::Dimension(_) | Error::Config(_) => SgrfStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SgrfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SgrfStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SgrfStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(msg);
            SgrfStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SgrfStatus::Panic
        }
    }
}

unsafe fn reference<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn string_arg(p: *const c_char, what: &'static str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::Invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(v);
    Ok(())
}

fn check_len(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got != want {
        return Err(Failure::Invalid(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn sgrf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sgrf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builtin surface: `"sphere"`, `"torus"` or `"cube"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgrf_surface_builtin(name: *const c_char, out: *mut *mut SgrfSurface) -> SgrfStatus {
    guard(|| {
        let name = string_arg(name, "name")?;
        let s = MultipatchSurface::builtin(&name)?;
        write_out(out, Box::into_raw(Box::new(SgrfSurface { inner: Arc::new(s) })), "out")
    })
}

/// Surface from a multipatch geometry file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgrf_surface_load(path: *const c_char, out: *mut *mut SgrfSurface) -> SgrfStatus {
    guard(|| {
        let path = string_arg(path, "path")?;
        let s = load_geometry(&path)?;
        write_out(out, Box::into_raw(Box::new(SgrfSurface { inner: Arc::new(s) })), "out")
    })
}

/// # Safety
/// `surface` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgrf_surface_num_patches(surface: *const SgrfSurface, out: *mut usize) -> SgrfStatus {
    guard(|| {
        let s = reference(surface, "surface")?;
        write_out(out, s.inner.num_patches(), "out")
    })
}

/// # Safety
/// `surface` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgrf_surface_free(surface: *mut SgrfSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Assembles mass and stiffness matrices and the multilevel hierarchy for
/// level `level` and spline degree `degree`.
///
/// # Safety
/// `surface` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgrf_problem_new(
    surface: *const SgrfSurface,
    level: usize,
    degree: usize,
    kappa: f64,
    out: *mut *mut SgrfProblem,
) -> SgrfStatus {
    guard(|| {
        let s = reference(surface, "surface")?;
        let h = Arc::new(Hierarchy::new(s.inner.clone(), level, degree)?);
        let space = Arc::new(h.finest().clone());
        let (m, st) = assemble_mass_stiffness(&space)?;
        let pencil = Pencil::new(m, st, kappa)?.with_hierarchy(h)?;
        let p = SgrfProblem {
            space,
            pencil,
            level,
            degree,
        };
        write_out(out, Box::into_raw(Box::new(p)), "out")
    })
}

/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgrf_problem_num_dofs(problem: *const SgrfProblem, out: *mut usize) -> SgrfStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        write_out(out, p.space.num_dofs(), "out")
    })
}

/// Load vector of the real spherical harmonic `(l, m)`, evaluated at the
/// radial projection of each surface point onto the unit sphere.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sgrf_problem_harmonic_load(
    problem: *const SgrfProblem,
    l: u32,
    m: i32,
    out: *mut f64,
    len: usize,
) -> SgrfStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        let out = slice_out(out, len, "out")?;
        check_len(len, p.space.num_dofs(), "out")?;
        let idx = SphericalHarmonicIndex::new(l, m)?;
        let f = assemble_load(&p.space, |x| spherical_harmonic_projected(idx, x))?;
        out.copy_from_slice(&f);
        Ok(())
    })
}

/// Coefficients of `(κ² − Δ_Γ)^{−β}` applied to a load vector. `quadrature`
/// is the sinc budget summed over stages, 0 for the level default;
/// `improved` selects the improved splitting of `β`.
///
/// # Safety
/// `load` and `out` must point to `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn sgrf_problem_apply_fractional(
    problem: *const SgrfProblem,
    beta: f64,
    quadrature: usize,
    improved: bool,
    load: *const f64,
    out: *mut f64,
    len: usize,
) -> SgrfStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        let f = slice_arg(load, len, "load")?;
        check_len(len, p.space.num_dofs(), "load")?;
        let plan = split_beta(beta, improved)?;
        let plan = if quadrature == 0 || plan.num_sinc_stages() == 0 {
            plan.with_default_quadrature(p.level, p.degree)
        } else {
            plan.with_total_budget(quadrature)
        };
        let (u, _) = solve_fractional(&p.pencil, f, &plan, &SolverOptions::default())?;
        slice_out(out, len, "out")?.copy_from_slice(&u);
        Ok(())
    })
}

/// Value at parameter `(x, y)` of patch `patch` of the spline with
/// coefficients `coeffs`.
///
/// # Safety
/// `coeffs` must point to `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn sgrf_problem_evaluate(
    problem: *const SgrfProblem,
    coeffs: *const f64,
    len: usize,
    patch: usize,
    x: f64,
    y: f64,
    out: *mut f64,
) -> SgrfStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        let c = slice_arg(coeffs, len, "coeffs")?;
        check_len(len, p.space.num_dofs(), "coeffs")?;
        write_out(out, p.space.eval(c, patch, x, y)?, "out")
    })
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgrf_problem_free(problem: *mut SgrfProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Draws one Whittle-Matérn field with seed `seed`. `sqrt_terms` is the
/// number of terms of the mass square-root expansion (0 for the default).
///
/// # Safety
/// `surface` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgrf_sample(
    surface: *const SgrfSurface,
    level: usize,
    degree: usize,
    beta: f64,
    kappa: f64,
    seed: u64,
    sqrt_terms: usize,
    out: *mut *mut SgrfField,
) -> SgrfStatus {
    guard(|| {
        let s = reference(surface, "surface")?;
        let mut opts = SampleOptions::default();
        if sqrt_terms > 0 {
            opts.sqrt_terms = sqrt_terms;
        }
        let f = sample_field(s.inner.clone(), level, degree, beta, kappa, seed, &opts)?;
        write_out(out, Box::into_raw(Box::new(SgrfField { inner: f })), "out")
    })
}

/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgrf_field_num_dofs(field: *const SgrfField, out: *mut usize) -> SgrfStatus {
    guard(|| {
        let f = reference(field, "field")?;
        write_out(out, f.inner.coeffs.len(), "out")
    })
}

/// Copies the spline coefficients into `out`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sgrf_field_coefficients(field: *const SgrfField, out: *mut f64, len: usize) -> SgrfStatus {
    guard(|| {
        let f = reference(field, "field")?;
        let out = slice_out(out, len, "out")?;
        check_len(len, f.inner.coeffs.len(), "out")?;
        out.copy_from_slice(&f.inner.coeffs);
        Ok(())
    })
}

/// Surface point (`point[3]`, may be null) and field value at parameter
/// `(x, y)` of patch `patch`.
///
/// # Safety
/// `value` must be writable; `point` null or three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sgrf_field_evaluate(
    field: *const SgrfField,
    patch: usize,
    x: f64,
    y: f64,
    point: *mut f64,
    value: *mut f64,
) -> SgrfStatus {
    guard(|| {
        let f = reference(field, "field")?;
        let (pt, v) = f.inner.eval_point(patch, x, y)?;
        if !point.is_null() {
            slice_out(point, 3, "point")?.copy_from_slice(&pt);
        }
        write_out(value, v, "value")
    })
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgrf_field_free(field: *mut SgrfField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}
