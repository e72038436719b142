//! C ABI for the dmpflight library.
//!
//! All handles are opaque; every fallible call returns a `DmpfStatus` and
//! stores a human-readable message retrievable with `dmpf_last_error`.
//! Pointers returned through out-parameters must be released with the
//! matching `*_free` function. Passing NULL where a handle is expected is
//! reported as `DMPF_NULL_ARGUMENT`, never undefined behaviour.

use dmpflight::dmp::{PrimitiveKind, PrimitiveParams};
use dmpflight::error::Error;
use dmpflight::learning::{self, Demonstration};
use dmpflight::trajectory::Trajectory;
use dmpflight::{coupling, io};
use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr};
use std::path::Path;
use std::ptr;

/// Result of every fallible FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmpfStatus {
    /// Operation succeeded.
    DmpfOk = 0,
    /// A required pointer argument was NULL.
    DmpfNullArgument = 1,
    /// Invalid data, file contents, or configuration.
    DmpfInvalidData = 2,
    /// Numerical failure (divergence, singular metric, ...).
    DmpfNumerical = 3,
    /// A path or string argument was not valid UTF-8.
    DmpfBadString = 4,
}

/// Primitive family selector, mirrors the library's kinds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmpfKind {
    DmpfDiscrete = 0,
    DmpfRhythmic = 1,
    DmpfFiltered = 2,
}

impl From<DmpfKind> for PrimitiveKind {
    fn from(k: DmpfKind) -> Self {
        match k {
            DmpfKind::DmpfDiscrete => PrimitiveKind::Discrete,
            DmpfKind::DmpfRhythmic => PrimitiveKind::Rhythmic,
            DmpfKind::DmpfFiltered => PrimitiveKind::Filtered,
        }
    }
}

/// Opaque movement-primitive handle.
pub struct DmpfPrimitive {
    inner: PrimitiveParams,
}

/// Opaque sampled-trajectory handle.
pub struct DmpfTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> DmpfStatus {
    match err.exit_code() {
        2 => DmpfStatus::DmpfInvalidData,
        _ => DmpfStatus::DmpfNumerical,
    }
}

fn fail(err: Error) -> DmpfStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// # Safety
/// `ptr` must be NULL or a valid NUL-terminated string.
unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, DmpfStatus> {
    if ptr.is_null() {
        set_error("path argument is NULL");
        return Err(DmpfStatus::DmpfNullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path argument is not valid UTF-8");
            Err(DmpfStatus::DmpfBadString)
        }
    }
}

macro_rules! require {
    ($ptr:expr, $name:literal) => {
        if $ptr.is_null() {
            set_error(concat!($name, " is NULL"));
            return DmpfStatus::DmpfNullArgument;
        }
    };
}

/// Copy the message of the most recent error on this thread into `buf`
/// (NUL-terminated, truncated to `len`). Returns the full message length
/// in bytes, excluding the terminator. A NULL `buf` just queries the length.
#[no_mangle]
pub unsafe extern "C" fn dmpf_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Load a primitive parameter file (TOML).
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. On success `*out` owns the handle.
#[no_mangle]
pub unsafe extern "C" fn dmpf_primitive_load(
    path: *const c_char,
    out: *mut *mut DmpfPrimitive,
) -> DmpfStatus {
    require!(out, "out");
    *out = ptr::null_mut();
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match io::read_params(path) {
        Ok(params) => {
            *out = Box::into_raw(Box::new(DmpfPrimitive { inner: params }));
            DmpfStatus::DmpfOk
        }
        Err(e) => fail(e),
    }
}

/// Save a primitive parameter file (TOML).
///
/// # Safety
/// `primitive` must be a live handle from this library; `path` a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dmpf_primitive_save(
    primitive: *const DmpfPrimitive,
    path: *const c_char,
) -> DmpfStatus {
    require!(primitive, "primitive");
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match io::write_params(&(*primitive).inner, path) {
        Ok(()) => DmpfStatus::DmpfOk,
        Err(e) => fail(e),
    }
}

/// Fit a primitive to a demonstration trajectory CSV.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpf_learn_from_csv(
    path: *const c_char,
    n_basis: usize,
    kind: DmpfKind,
    out: *mut *mut DmpfPrimitive,
) -> DmpfStatus {
    require!(out, "out");
    *out = ptr::null_mut();
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let result = io::read_trajectory_csv(path).and_then(|traj| {
        let demo = Demonstration::from_trajectory(&traj);
        learning::learn(&demo, n_basis, kind.into())
    });
    match result {
        Ok(params) => {
            *out = Box::into_raw(Box::new(DmpfPrimitive { inner: params }));
            DmpfStatus::DmpfOk
        }
        Err(e) => fail(e),
    }
}

/// Number of degrees of freedom of a primitive; 0 for a NULL handle.
///
/// # Safety
/// `primitive` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dmpf_primitive_n_dofs(primitive: *const DmpfPrimitive) -> usize {
    if primitive.is_null() {
        return 0;
    }
    (*primitive).inner.n_dofs()
}

/// Retarget the goal of one DOF (index order matches the parameter file).
///
/// # Safety
/// `primitive` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dmpf_primitive_set_goal(
    primitive: *mut DmpfPrimitive,
    dof: usize,
    goal: c_double,
) -> DmpfStatus {
    require!(primitive, "primitive");
    let p = &mut (*primitive).inner;
    if dof >= p.n_dofs() {
        set_error(format!("DOF index {} out of range ({})", dof, p.n_dofs()));
        return DmpfStatus::DmpfInvalidData;
    }
    if !goal.is_finite() {
        set_error("goal must be finite");
        return DmpfStatus::DmpfInvalidData;
    }
    p.goals[dof] = goal;
    match p.validate() {
        Ok(()) => DmpfStatus::DmpfOk,
        Err(e) => fail(e),
    }
}

/// Integrate the primitive from rest at its recorded start.
///
/// # Safety
/// `primitive` must be a live handle; `out` a valid pointer. On success
/// `*out` owns the trajectory.
#[no_mangle]
pub unsafe extern "C" fn dmpf_primitive_rollout(
    primitive: *const DmpfPrimitive,
    dt: c_double,
    duration: c_double,
    out: *mut *mut DmpfTrajectory,
) -> DmpfStatus {
    require!(out, "out");
    *out = ptr::null_mut();
    require!(primitive, "primitive");
    let p = &(*primitive).inner;
    let zeros = vec![0.0; p.n_dofs()];
    match p.rollout(&p.y_start, &zeros, dt, duration) {
        Ok(traj) => {
            *out = Box::into_raw(Box::new(DmpfTrajectory { inner: traj }));
            DmpfStatus::DmpfOk
        }
        Err(e) => fail(e),
    }
}

/// Convex superposition of two primitives of the same kind and basis.
/// `alpha` weights the first primitive.
///
/// # Safety
/// `first` and `second` must be live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpf_blend(
    first: *const DmpfPrimitive,
    second: *const DmpfPrimitive,
    alpha: c_double,
    out: *mut *mut DmpfPrimitive,
) -> DmpfStatus {
    require!(out, "out");
    *out = ptr::null_mut();
    require!(first, "first");
    require!(second, "second");
    if !(0.0..=1.0).contains(&alpha) {
        set_error(format!("alpha = {} must be in [0, 1]", alpha));
        return DmpfStatus::DmpfInvalidData;
    }
    match coupling::blend(&(*first).inner, &(*second).inner, alpha, 1.0 - alpha) {
        Ok(p) => {
            *out = Box::into_raw(Box::new(DmpfPrimitive { inner: p }));
            DmpfStatus::DmpfOk
        }
        Err(e) => fail(e),
    }
}

/// Number of samples in a trajectory; 0 for a NULL handle.
///
/// # Safety
/// `trajectory` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dmpf_trajectory_len(trajectory: *const DmpfTrajectory) -> usize {
    if trajectory.is_null() {
        return 0;
    }
    (*trajectory).inner.len()
}

/// Number of DOFs of a trajectory; 0 for a NULL handle.
///
/// # Safety
/// `trajectory` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dmpf_trajectory_n_dofs(trajectory: *const DmpfTrajectory) -> usize {
    if trajectory.is_null() {
        return 0;
    }
    (*trajectory).inner.n_dofs()
}

/// Read one sample: position, velocity, and acceleration of `dof` at
/// `index`. Out-pointers may be NULL to skip a channel.
///
/// # Safety
/// `trajectory` must be a live handle; non-NULL out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dmpf_trajectory_sample(
    trajectory: *const DmpfTrajectory,
    dof: usize,
    index: usize,
    y: *mut c_double,
    ydot: *mut c_double,
    yddot: *mut c_double,
) -> DmpfStatus {
    require!(trajectory, "trajectory");
    let t = &(*trajectory).inner;
    if dof >= t.n_dofs() || index >= t.len() {
        set_error(format!(
            "sample ({}, {}) out of range ({} DOFs, {} samples)",
            dof,
            index,
            t.n_dofs(),
            t.len()
        ));
        return DmpfStatus::DmpfInvalidData;
    }
    if !y.is_null() {
        *y = t.y[dof][index];
    }
    if !ydot.is_null() {
        *ydot = t.ydot[dof][index];
    }
    if !yddot.is_null() {
        *yddot = t.yddot[dof][index];
    }
    DmpfStatus::DmpfOk
}

/// Write a trajectory CSV (deterministic bytes).
///
/// # Safety
/// `trajectory` must be a live handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dmpf_trajectory_write_csv(
    trajectory: *const DmpfTrajectory,
    path: *const c_char,
) -> DmpfStatus {
    require!(trajectory, "trajectory");
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match io::write_trajectory_csv(&(*trajectory).inner, path) {
        Ok(()) => DmpfStatus::DmpfOk,
        Err(e) => fail(e),
    }
}

/// Release a primitive handle. NULL is a no-op.
///
/// # Safety
/// `primitive` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dmpf_primitive_free(primitive: *mut DmpfPrimitive) {
    if !primitive.is_null() {
        drop(Box::from_raw(primitive));
    }
}

/// Release a trajectory handle. NULL is a no-op.
///
/// # Safety
/// `trajectory` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dmpf_trajectory_free(trajectory: *mut DmpfTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dmpflight::synth;
    use std::ffi::CString;

    fn demo_csv(dir: &Path) -> CString {
        let demo = synth::min_jerk_demo(0.0, 1.0, 1.0, 1e-3);
        let traj = demo.to_trajectory().unwrap();
        let path = dir.join("demo.csv");
        io::write_trajectory_csv(&traj, &path).unwrap();
        CString::new(path.to_str().unwrap()).unwrap()
    }

    #[test]
    fn learn_rollout_sample_free_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let csv = demo_csv(dir.path());
        unsafe {
            let mut prim: *mut DmpfPrimitive = ptr::null_mut();
            let st = dmpf_learn_from_csv(csv.as_ptr(), 30, DmpfKind::DmpfDiscrete, &mut prim);
            assert_eq!(st, DmpfStatus::DmpfOk);
            assert_eq!(dmpf_primitive_n_dofs(prim), 1);

            let mut traj: *mut DmpfTrajectory = ptr::null_mut();
            let st = dmpf_primitive_rollout(prim, 1e-3, 1.5, &mut traj);
            assert_eq!(st, DmpfStatus::DmpfOk);
            let n = dmpf_trajectory_len(traj);
            assert!(n > 1000);

            let mut y = 0.0;
            let st = dmpf_trajectory_sample(traj, 0, n - 1, &mut y, ptr::null_mut(), ptr::null_mut());
            assert_eq!(st, DmpfStatus::DmpfOk);
            assert!((y - 1.0).abs() < 0.02, "final y = {}", y);

            dmpf_trajectory_free(traj);
            dmpf_primitive_free(prim);
        }
    }

    #[test]
    fn save_load_and_retarget() {
        let dir = tempfile::tempdir().unwrap();
        let csv = demo_csv(dir.path());
        let params_path =
            CString::new(dir.path().join("p.params").to_str().unwrap()).unwrap();
        unsafe {
            let mut prim: *mut DmpfPrimitive = ptr::null_mut();
            assert_eq!(
                dmpf_learn_from_csv(csv.as_ptr(), 30, DmpfKind::DmpfDiscrete, &mut prim),
                DmpfStatus::DmpfOk
            );
            assert_eq!(dmpf_primitive_save(prim, params_path.as_ptr()), DmpfStatus::DmpfOk);

            let mut loaded: *mut DmpfPrimitive = ptr::null_mut();
            assert_eq!(
                dmpf_primitive_load(params_path.as_ptr(), &mut loaded),
                DmpfStatus::DmpfOk
            );
            assert_eq!(dmpf_primitive_set_goal(loaded, 0, 2.0), DmpfStatus::DmpfOk);
            assert_eq!(
                dmpf_primitive_set_goal(loaded, 7, 2.0),
                DmpfStatus::DmpfInvalidData
            );
            // goal 0 is rejected because the goal doubles as the spatial scale
            assert_eq!(dmpf_primitive_set_goal(loaded, 0, 0.0), DmpfStatus::DmpfInvalidData);
            dmpf_primitive_free(loaded);
            dmpf_primitive_free(prim);
        }
    }

    #[test]
    fn blend_matches_library() {
        let dir = tempfile::tempdir().unwrap();
        let csv = demo_csv(dir.path());
        unsafe {
            let mut a: *mut DmpfPrimitive = ptr::null_mut();
            let mut b: *mut DmpfPrimitive = ptr::null_mut();
            dmpf_learn_from_csv(csv.as_ptr(), 30, DmpfKind::DmpfDiscrete, &mut a);
            dmpf_learn_from_csv(csv.as_ptr(), 30, DmpfKind::DmpfDiscrete, &mut b);
            dmpf_primitive_set_goal(b, 0, 2.0);
            let mut out: *mut DmpfPrimitive = ptr::null_mut();
            assert_eq!(dmpf_blend(a, b, 0.25, &mut out), DmpfStatus::DmpfOk);
            let expected = coupling::blend(&(*a).inner, &(*b).inner, 0.25, 0.75).unwrap();
            assert_eq!((*out).inner.goals, expected.goals);
            assert_eq!(dmpf_blend(a, b, 1.5, &mut out), DmpfStatus::DmpfInvalidData);
            dmpf_primitive_free(a);
            dmpf_primitive_free(b);
            dmpf_primitive_free(out);
        }
    }

    #[test]
    fn null_handling_and_error_message() {
        unsafe {
            let mut out: *mut DmpfPrimitive = ptr::null_mut();
            assert_eq!(
                dmpf_primitive_load(ptr::null(), &mut out),
                DmpfStatus::DmpfNullArgument
            );
            assert!(out.is_null());
            let missing = CString::new("/nonexistent/file.params").unwrap();
            assert_eq!(
                dmpf_primitive_load(missing.as_ptr(), &mut out),
                DmpfStatus::DmpfInvalidData
            );
            let needed = dmpf_last_error(ptr::null_mut(), 0);
            assert!(needed > 0);
            let mut buf = vec![0i8; needed + 1];
            dmpf_last_error(buf.as_mut_ptr() as *mut c_char, buf.len());
            let msg = CStr::from_ptr(buf.as_ptr() as *const c_char)
                .to_string_lossy()
                .into_owned();
            assert!(msg.contains("file.params"), "message: {}", msg);
            // free on NULL is a no-op
            dmpf_primitive_free(ptr::null_mut());
            dmpf_trajectory_free(ptr::null_mut());
        }
    }
}
