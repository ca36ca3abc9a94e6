//! C ABI for the lattice-walk geometry library.
//!
//! Handles are opaque pointers created and destroyed by this library; every
//! fallible call returns a [`DqwStatus`] and leaves a human-readable message
//! retrievable through [`dqw_last_error`] on failure. Field extractors fill
//! caller-provided J×P row-major `double` buffers, with NaN marking sites
//! that are degenerate or outside the valid slice range reported alongside.
//!
//! The generated header lives at `include/dqwgeom.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use dqw_geom::connection::WalkConnection;
use dqw_geom::curvature::rho_slow;
use dqw_geom::field::{AngleField, SpinorSlice};
use dqw_geom::geometry::GeometryField;
use dqw_geom::lattice::Lattice;
use dqw_geom::theta::{build_angle_field, eval_theta, ThetaSpec};
use dqw_geom::walk;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum DqwStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Arguments violate a precondition (sizes, ranges, seeds).
    InvalidArgument = 3,
    /// The expression failed to parse.
    ParseError = 4,
    /// Evaluation hit a domain error (arccos out of range, ...).
    DomainError = 5,
    /// The requested site lies outside the valid slice range.
    RangeError = 6,
    /// An internal computation failed; see dqw_last_error.
    ComputeError = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg).unwrap_or_default();
    });
}

fn fail(status: DqwStatus, msg: impl Into<String>) -> DqwStatus {
    set_error(msg);
    status
}

/// Copy the message of the most recent failure on this thread into `buf`
/// (NUL-terminated, truncated to `cap`). Returns the full message length.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be null (in which
/// case only the length is returned).
#[no_mangle]
pub unsafe extern "C" fn dqw_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            // always terminate
            *buf.add(n - 1) = 0;
        }
        bytes.len() - 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dqw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque lattice descriptor.
pub struct DqwLattice {
    lat: Lattice,
}

/// Opaque coin-angle definition: a parsed expression, a constant, or a
/// seeded random family.
pub struct DqwTheta {
    source: ThetaSource,
}

enum ThetaSource {
    Spec(ThetaSpec),
    Random { seed: u64, amplitude: f64 },
}

impl DqwTheta {
    fn angle_field(&self, lat: Lattice) -> Result<AngleField, String> {
        match &self.source {
            ThetaSource::Spec(spec) => build_angle_field(spec, lat).map_err(|e| e.to_string()),
            ThetaSource::Random { seed, amplitude } => {
                Ok(AngleField::random(lat, *seed, *amplitude))
            }
        }
    }
}

/// Create a lattice with P spatial sites (even, ≥ 4), J stored slices (≥ 3)
/// and spacing eps (> 0).
///
/// # Safety
/// `out` must be a valid pointer. The returned handle must be released with
/// [`dqw_lattice_free`].
#[no_mangle]
pub unsafe extern "C" fn dqw_lattice_new(
    p_sites: u32,
    j_slices: u32,
    eps: f64,
    out: *mut *mut DqwLattice,
) -> DqwStatus {
    if out.is_null() {
        return fail(DqwStatus::NullArgument, "out pointer is null");
    }
    match Lattice::new(p_sites as usize, j_slices as usize, eps) {
        Ok(lat) => {
            *out = Box::into_raw(Box::new(DqwLattice { lat }));
            DqwStatus::Ok
        }
        Err(e) => fail(DqwStatus::InvalidArgument, e.to_string()),
    }
}

/// # Safety
/// `lat` must be a handle from [`dqw_lattice_new`] (or null) and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dqw_lattice_free(lat: *mut DqwLattice) {
    if !lat.is_null() {
        drop(Box::from_raw(lat));
    }
}

/// Parse a coin-angle expression in the variables t and x.
///
/// # Safety
/// `src` must be a NUL-terminated string, `out` a valid pointer. The handle
/// must be released with [`dqw_theta_free`].
#[no_mangle]
pub unsafe extern "C" fn dqw_theta_parse(src: *const c_char, out: *mut *mut DqwTheta) -> DqwStatus {
    if src.is_null() || out.is_null() {
        return fail(DqwStatus::NullArgument, "src or out pointer is null");
    }
    let text = match CStr::from_ptr(src).to_str() {
        Ok(t) => t,
        Err(_) => return fail(DqwStatus::InvalidUtf8, "expression is not valid UTF-8"),
    };
    match ThetaSpec::parse(text) {
        Ok(spec) => {
            *out = Box::into_raw(Box::new(DqwTheta {
                source: ThetaSource::Spec(spec),
            }));
            DqwStatus::Ok
        }
        Err(e) => fail(DqwStatus::ParseError, e.to_string()),
    }
}

/// A constant coin angle (radians).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dqw_theta_constant(value: f64, out: *mut *mut DqwTheta) -> DqwStatus {
    if out.is_null() {
        return fail(DqwStatus::NullArgument, "out pointer is null");
    }
    if !value.is_finite() {
        return fail(DqwStatus::InvalidArgument, "constant angle must be finite");
    }
    *out = Box::into_raw(Box::new(DqwTheta {
        source: ThetaSource::Spec(ThetaSpec::constant(value)),
    }));
    DqwStatus::Ok
}

/// Independent uniform angles in [−amplitude, amplitude], reproducible from
/// the seed.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dqw_theta_random(
    seed: u64,
    amplitude: f64,
    out: *mut *mut DqwTheta,
) -> DqwStatus {
    if out.is_null() {
        return fail(DqwStatus::NullArgument, "out pointer is null");
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return fail(DqwStatus::InvalidArgument, "amplitude must be positive");
    }
    *out = Box::into_raw(Box::new(DqwTheta {
        source: ThetaSource::Random { seed, amplitude },
    }));
    DqwStatus::Ok
}

/// # Safety
/// `theta` must be a handle from one of the constructors (or null) and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dqw_theta_free(theta: *mut DqwTheta) {
    if !theta.is_null() {
        drop(Box::from_raw(theta));
    }
}

/// θ at lattice site (j, p); p wraps periodically.
///
/// # Safety
/// All pointers must be valid handles / writable locations.
#[no_mangle]
pub unsafe extern "C" fn dqw_theta_eval(
    theta: *const DqwTheta,
    lat: *const DqwLattice,
    j: u32,
    p: i64,
    out: *mut f64,
) -> DqwStatus {
    let (Some(theta), Some(lat), false) = (theta.as_ref(), lat.as_ref(), out.is_null()) else {
        return fail(DqwStatus::NullArgument, "null handle or out pointer");
    };
    if j as usize >= lat.lat.j_slices() {
        return fail(
            DqwStatus::RangeError,
            format!("slice {j} outside 0..{}", lat.lat.j_slices()),
        );
    }
    match &theta.source {
        ThetaSource::Spec(spec) => match eval_theta(spec, &lat.lat, j as usize, p) {
            Ok(v) => {
                *out = v;
                DqwStatus::Ok
            }
            Err(e) => fail(DqwStatus::DomainError, e.to_string()),
        },
        ThetaSource::Random { seed, amplitude } => {
            *out = AngleField::random(lat.lat, *seed, *amplitude).get(j as usize, p);
            DqwStatus::Ok
        }
    }
}

/// Run the walk from a seeded random unit state and record the flat norm of
/// every stored slice into `out_norms` (length `n_steps + 1`).
///
/// # Safety
/// `out_norms` must point to at least `n_steps + 1` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dqw_walk_norms(
    lat: *const DqwLattice,
    theta: *const DqwTheta,
    state_seed: u64,
    n_steps: u32,
    out_norms: *mut f64,
) -> DqwStatus {
    let (Some(lat), Some(theta), false) = (lat.as_ref(), theta.as_ref(), out_norms.is_null())
    else {
        return fail(DqwStatus::NullArgument, "null handle or buffer");
    };
    let angle = match theta.angle_field(lat.lat) {
        Ok(a) => a,
        Err(e) => return fail(DqwStatus::DomainError, e),
    };
    let psi0 = SpinorSlice::random(lat.lat.p_sites(), state_seed);
    match walk::run(psi0, &angle, n_steps as usize) {
        Ok(hist) => {
            let norms = hist.norms();
            std::ptr::copy_nonoverlapping(norms.as_ptr(), out_norms, norms.len());
            DqwStatus::Ok
        }
        Err(e) => fail(DqwStatus::ComputeError, e.to_string()),
    }
}

/// Transport velocities and volume density per site. Each output buffer
/// holds J×P row-major doubles; slices above `*out_valid_hi` and degenerate
/// sites are NaN. Null buffers are skipped.
///
/// # Safety
/// Non-null buffers must hold J×P writable doubles; `out_valid_hi` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn dqw_metric(
    lat: *const DqwLattice,
    theta: *const DqwTheta,
    out_x_minus: *mut f64,
    out_x_plus: *mut f64,
    out_mu: *mut f64,
    out_valid_hi: *mut u32,
) -> DqwStatus {
    let (Some(lat), Some(theta), false) = (lat.as_ref(), theta.as_ref(), out_valid_hi.is_null())
    else {
        return fail(DqwStatus::NullArgument, "null handle or out_valid_hi");
    };
    let angle = match theta.angle_field(lat.lat) {
        Ok(a) => a,
        Err(e) => return fail(DqwStatus::DomainError, e),
    };
    let geom = match GeometryField::build(&angle) {
        Ok(g) => g,
        Err(e) => return fail(DqwStatus::ComputeError, e.to_string()),
    };
    let l = lat.lat;
    let (_, hi) = geom.valid_j();
    *out_valid_hi = hi as u32;
    for (buf, pick) in [
        (out_x_minus, 0usize),
        (out_x_plus, 1),
        (out_mu, 2),
    ] {
        if buf.is_null() {
            continue;
        }
        for j in 0..l.j_slices() {
            for p in 0..l.p_sites() as i64 {
                let v = if j <= hi {
                    match geom.site(j, p) {
                        Ok(s) => match pick {
                            0 => s.x_minus,
                            1 => s.x_plus,
                            _ => s.metric.mu,
                        },
                        Err(_) => f64::NAN,
                    }
                } else {
                    f64::NAN
                };
                *buf.add(l.idx(j, p)) = v;
            }
        }
    }
    DqwStatus::Ok
}

/// The slow discrete Riemann curvature ρˢ per site, into a J×P row-major
/// buffer (NaN outside `[*out_valid_lo, *out_valid_hi]` and on masked sites).
///
/// # Safety
/// `out_rho` must hold J×P writable doubles; the range pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn dqw_rho_slow(
    lat: *const DqwLattice,
    theta: *const DqwTheta,
    out_rho: *mut f64,
    out_valid_lo: *mut u32,
    out_valid_hi: *mut u32,
) -> DqwStatus {
    let (Some(lat), Some(theta)) = (lat.as_ref(), theta.as_ref()) else {
        return fail(DqwStatus::NullArgument, "null handle");
    };
    if out_rho.is_null() || out_valid_lo.is_null() || out_valid_hi.is_null() {
        return fail(DqwStatus::NullArgument, "null output pointer");
    }
    let angle = match theta.angle_field(lat.lat) {
        Ok(a) => a,
        Err(e) => return fail(DqwStatus::DomainError, e),
    };
    let conn = match WalkConnection::build(&angle) {
        Ok((_, c)) => c,
        Err(e) => return fail(DqwStatus::ComputeError, e.to_string()),
    };
    let rho = match rho_slow(&conn) {
        Ok(r) => r,
        Err(e) => return fail(DqwStatus::ComputeError, e.to_string()),
    };
    let (lo, hi) = rho.valid_j();
    *out_valid_lo = lo as u32;
    *out_valid_hi = hi as u32;
    let l = lat.lat;
    for j in 0..l.j_slices() {
        for p in 0..l.p_sites() as i64 {
            let v = if j >= lo && j <= hi {
                rho.value(j, p).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            *out_rho.add(l.idx(j, p)) = v;
        }
    }
    DqwStatus::Ok
}
