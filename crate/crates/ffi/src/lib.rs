//! C ABI over the earthquake library.
//!
//! Every function returns an [`EqStatus`]. On failure the message is kept in a
//! thread-local slot and can be copied out with [`eq_last_error_message`].
//! Laminations and circle maps cross the boundary as opaque handles that the
//! caller releases with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use earthquake::earthquake::{earthquake_boundary, earthquake_path, recover_measure};
use earthquake::lamination::box_mass;
use earthquake::liouville::{liouville_box, pullback_liouville};
use earthquake::{Atom, BoundaryPoint, Error, GeodesicBox, MeasuredLamination, PiecewiseMobiusCircleMap};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidLamination = 4,
    InvalidGeometry = 5,
    InvalidMap = 6,
    Numerical = 7,
    OutOfRange = 8,
    Internal = 9,
}

/// Opaque measured lamination.
pub struct EqLamination(MeasuredLamination);

/// Opaque piecewise Möbius homeomorphism of the circle.
pub struct EqCircleMap(PiecewiseMobiusCircleMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> EqStatus {
    match e {
        Error::Parse(_) | Error::Io(_) => EqStatus::Parse,
        Error::InvalidLamination(_) => EqStatus::InvalidLamination,
        Error::InvalidMobius { .. }
        | Error::DegenerateGeodesic { .. }
        | Error::PointOnGeodesic
        | Error::OutsideDisk
        | Error::InvalidBox
        | Error::BoxCornerCollision { .. }
        | Error::BoxOnEndpoint { .. } => EqStatus::InvalidGeometry,
        Error::NotEarthquakeMap(_) | Error::InvalidCircleMap(_) | Error::NonHyperbolic { .. } => EqStatus::InvalidMap,
        Error::NonConvergence { .. } => EqStatus::Numerical,
        Error::NegativeTime(_) | Error::InvalidGrid(_) => EqStatus::OutOfRange,
        _ => EqStatus::Internal,
    }
}

fn fail(status: EqStatus, msg: impl Into<String>) -> EqStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, recording its error and trapping panics.
fn guard(f: impl FnOnce() -> Result<(), EqStatus>) -> EqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EqStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(EqStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

fn lift<T>(r: earthquake::Result<T>) -> Result<T, EqStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, EqStatus> {
    p.as_ref().ok_or_else(|| fail(EqStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, EqStatus> {
    p.as_mut().ok_or_else(|| fail(EqStatus::NullPointer, format!("{what} is null")))
}

unsafe fn read_box(corners: *const f64) -> Result<GeodesicBox, EqStatus> {
    if corners.is_null() {
        return Err(fail(EqStatus::NullPointer, "corners is null"));
    }
    let a = std::slice::from_raw_parts(corners, 4);
    lift(GeodesicBox::from_angles([a[0], a[1], a[2], a[3]]))
}

/// Copies the last error message of this thread into `buf` as a
/// nul-terminated string and returns its length without the terminator.
/// With a null `buf` or a too small `len` nothing is copied, so a first call
/// with `len = 0` sizes the buffer. Returns 0 when there is no error.
///
/// # Safety
/// `buf` is null or valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn eq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len >= bytes.len() {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
            }
            bytes.len() - 1
        }
    })
}

/// Parses a lamination from a JSON array of `{"p_angle", "q_angle", "weight"}`
/// records.
///
/// # Safety
/// `json` is a valid nul-terminated string; `out_lam` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_lamination_from_json(json: *const c_char, out_lam: *mut *mut EqLamination) -> EqStatus {
    guard(|| {
        let slot = out(out_lam, "out_lam")?;
        if json.is_null() {
            return Err(fail(EqStatus::NullPointer, "json is null"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| fail(EqStatus::InvalidUtf8, e.to_string()))?;
        let lam = lift(MeasuredLamination::from_json(text))?;
        *slot = Box::into_raw(Box::new(EqLamination(lam)));
        Ok(())
    })
}

/// Builds a lamination from `n` triples `(p, q, weight)` of endpoint angles
/// and transverse weight.
///
/// # Safety
/// `atoms` is valid for `3 * n` reads (or may be null when `n` is 0);
/// `out_lam` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_lamination_from_atoms(atoms: *const f64, n: usize, out_lam: *mut *mut EqLamination) -> EqStatus {
    guard(|| {
        let slot = out(out_lam, "out_lam")?;
        let raw = match n {
            0 => &[][..],
            _ if atoms.is_null() => return Err(fail(EqStatus::NullPointer, "atoms is null")),
            _ => std::slice::from_raw_parts(atoms, 3 * n),
        };
        let atoms = raw.chunks_exact(3).map(|t| Atom::from_angles(t[0], t[1], t[2])).collect::<Result<Vec<_>, _>>();
        let lam = lift(atoms.and_then(MeasuredLamination::new))?;
        *slot = Box::into_raw(Box::new(EqLamination(lam)));
        Ok(())
    })
}

/// Number of atoms.
///
/// # Safety
/// `lam` is a live handle; `out_len` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_lamination_len(lam: *const EqLamination, out_len: *mut usize) -> EqStatus {
    guard(|| {
        *out(out_len, "out_len")? = deref(lam, "lam")?.0.len();
        Ok(())
    })
}

/// Endpoint angles and weight of atom `i`.
///
/// # Safety
/// `lam` is a live handle; `out_atom` is valid for 3 writes.
#[no_mangle]
pub unsafe extern "C" fn eq_lamination_atom(lam: *const EqLamination, i: usize, out_atom: *mut f64) -> EqStatus {
    guard(|| {
        let lam = &deref(lam, "lam")?.0;
        if out_atom.is_null() {
            return Err(fail(EqStatus::NullPointer, "out_atom is null"));
        }
        let atom = lam
            .atoms()
            .get(i)
            .ok_or_else(|| fail(EqStatus::OutOfRange, format!("atom {i} of {}", lam.len())))?;
        let vals = [atom.geodesic.p().angle(), atom.geodesic.q().angle(), atom.weight];
        ptr::copy_nonoverlapping(vals.as_ptr(), out_atom, 3);
        Ok(())
    })
}

/// Lamination mass of the box with counterclockwise corner angles
/// `corners[0..4]`.
///
/// # Safety
/// `lam` is a live handle; `corners` is valid for 4 reads; `out_mass` is
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_lamination_box_mass(lam: *const EqLamination, corners: *const f64, out_mass: *mut f64) -> EqStatus {
    guard(|| {
        let lam = &deref(lam, "lam")?.0;
        let q = read_box(corners)?;
        *out(out_mass, "out_mass")? = lift(box_mass(lam, &q))?;
        Ok(())
    })
}

/// Serializes the lamination as JSON into a new string that the caller
/// releases with [`eq_string_free`].
///
/// # Safety
/// `lam` is a live handle; `out_json` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_lamination_to_json(lam: *const EqLamination, out_json: *mut *mut c_char) -> EqStatus {
    guard(|| {
        let text = deref(lam, "lam")?.0.to_json();
        *out(out_json, "out_json")? = CString::new(text).map_err(|e| fail(EqStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Releases a lamination. Null is ignored.
///
/// # Safety
/// `lam` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eq_lamination_free(lam: *mut EqLamination) {
    if !lam.is_null() {
        drop(Box::from_raw(lam));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Boundary extension of the left earthquake along `lam`, fixing the stratum
/// of the origin (nudged off any atom through it).
///
/// # Safety
/// `lam` is a live handle; `out_map` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_earthquake_boundary(lam: *const EqLamination, out_map: *mut *mut EqCircleMap) -> EqStatus {
    guard(|| {
        let h = earthquake_boundary(&deref(lam, "lam")?.0);
        *out(out_map, "out_map")? = Box::into_raw(Box::new(EqCircleMap(h)));
        Ok(())
    })
}

/// Boundary map of the earthquake along `t · lam`, fixing the default base
/// stratum.
///
/// # Safety
/// `lam` is a live handle; `out_map` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_earthquake_path(lam: *const EqLamination, t: f64, out_map: *mut *mut EqCircleMap) -> EqStatus {
    guard(|| {
        let lam = &deref(lam, "lam")?.0;
        let base = earthquake::earthquake::default_base(lam);
        let h = lift(earthquake_path(lam, t, base))?;
        *out(out_map, "out_map")? = Box::into_raw(Box::new(EqCircleMap(h)));
        Ok(())
    })
}

/// Parses a circle map from its text form.
///
/// # Safety
/// `text` is a valid nul-terminated string; `out_map` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_circle_map_from_text(text: *const c_char, out_map: *mut *mut EqCircleMap) -> EqStatus {
    guard(|| {
        let slot = out(out_map, "out_map")?;
        if text.is_null() {
            return Err(fail(EqStatus::NullPointer, "text is null"));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|e| fail(EqStatus::InvalidUtf8, e.to_string()))?;
        *slot = Box::into_raw(Box::new(EqCircleMap(lift(PiecewiseMobiusCircleMap::from_text(text))?)));
        Ok(())
    })
}

/// Number of breakpoints.
///
/// # Safety
/// `map` is a live handle; `out_len` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_circle_map_breakpoints(map: *const EqCircleMap, out_len: *mut usize) -> EqStatus {
    guard(|| {
        *out(out_len, "out_len")? = deref(map, "map")?.0.breakpoints().len();
        Ok(())
    })
}

/// Image of the boundary angle `angle`, in `[0, 2π)`.
///
/// # Safety
/// `map` is a live handle; `out_angle` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_circle_map_eval(map: *const EqCircleMap, angle: f64, out_angle: *mut f64) -> EqStatus {
    guard(|| {
        let map = &deref(map, "map")?.0;
        if !angle.is_finite() {
            return Err(fail(EqStatus::OutOfRange, "angle is not finite"));
        }
        *out(out_angle, "out_angle")? = map.eval(BoundaryPoint::new(angle)).angle();
        Ok(())
    })
}

/// Recovers the earthquake measure of a boundary map.
///
/// # Safety
/// `map` is a live handle; `out_lam` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_recover_measure(map: *const EqCircleMap, out_lam: *mut *mut EqLamination) -> EqStatus {
    guard(|| {
        let lam = lift(recover_measure(&deref(map, "map")?.0))?;
        *out(out_lam, "out_lam")? = Box::into_raw(Box::new(EqLamination(lam)));
        Ok(())
    })
}

/// Liouville measure of the pullback of a box under `map`.
///
/// # Safety
/// `map` is a live handle; `corners` is valid for 4 reads; `out_mass` is
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_pullback_liouville(map: *const EqCircleMap, corners: *const f64, out_mass: *mut f64) -> EqStatus {
    guard(|| {
        let map = &deref(map, "map")?.0;
        let q = read_box(corners)?;
        *out(out_mass, "out_mass")? = lift(pullback_liouville(map, &q))?;
        Ok(())
    })
}

/// Releases a circle map. Null is ignored.
///
/// # Safety
/// `map` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eq_circle_map_free(map: *mut EqCircleMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Liouville measure of the box with counterclockwise corner angles
/// `corners[0..4]`.
///
/// # Safety
/// `corners` is valid for 4 reads; `out_mass` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eq_liouville_box(corners: *const f64, out_mass: *mut f64) -> EqStatus {
    guard(|| {
        let q = read_box(corners)?;
        *out(out_mass, "out_mass")? = liouville_box(&q);
        Ok(())
    })
}
