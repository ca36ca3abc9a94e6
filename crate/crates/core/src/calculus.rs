//! Discrete derivative operators on fields.
//!
//! All three operators are stride-2 so they act within one sublattice parity
//! class:
//!
//! ```text
//! (D_j f)_{j,p}  = ½ (f_{j+2,p} − f_{j,p})
//! (D_p f)_{j,p}  = ¼ (f_{j,p+2} − f_{j,p−2})
//! (D_pp f)_{j,p} = ¼ (f_{j,p+2} + f_{j,p−2} − 2 f_{j,p})
//! ```
//!
//! `D_p`/`D_pp` wrap periodically; `D_j` is defined only where slice j+2 is
//! stored, so its output valid range loses two slices at the top. There are
//! no one-sided fallbacks: downstream quantities inherit the reduced range.
//!
//! Inverting the stencils gives exact neighbor reconstructions
//! (`f_{j+2} = f + 2 D_j f`, `f_{j,p±2} = f ± 2 D_p f + 2 D_pp f`), used as a
//! machine-precision identity throughout the tests and the boost algebra.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;

use crate::field::{Field, FieldError};
use crate::mat2::Mat2;

/// Element types the stencils act on entrywise.
pub trait StencilElem:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
}

impl StencilElem for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl StencilElem for C64 {
    fn zero() -> Self {
        C64::ZERO
    }
}

impl StencilElem for Mat2 {
    fn zero() -> Self {
        Mat2::zero()
    }
}

/// Forward time derivative; valid range shrinks by two slices.
pub fn d_j<T: StencilElem>(f: &Field<T>) -> Result<Field<T>, FieldError> {
    let (lo, hi) = f.valid_j();
    if hi < lo + 2 {
        return Err(FieldError::EmptyRange { hi, need: 2 });
    }
    Ok(Field::from_fn_filled(
        f.lat(),
        (lo, hi - 2),
        T::zero(),
        |j, p| (f.get(j + 2, p) - f.get(j, p)) * 0.5,
    ))
}

/// Centered space derivative, periodic wrap.
pub fn d_p<T: StencilElem>(f: &Field<T>) -> Field<T> {
    Field::from_fn_filled(f.lat(), f.valid_j(), T::zero(), |j, p| {
        (f.get(j, p + 2) - f.get(j, p - 2)) * 0.25
    })
}

/// Centered second space difference, periodic wrap.
pub fn d_pp<T: StencilElem>(f: &Field<T>) -> Field<T> {
    Field::from_fn_filled(f.lat(), f.valid_j(), T::zero(), |j, p| {
        (f.get(j, p + 2) + f.get(j, p - 2) - f.get(j, p) * 2.0) * 0.25
    })
}

/// Neighbor values rebuilt from a field and its three derivatives at (j, p):
/// `(f_{j+2,p}, f_{j,p+2}, f_{j,p−2})`. Exact by construction.
pub fn reconstruct<T: StencilElem>(
    f: &Field<T>,
    dj: &Field<T>,
    dp: &Field<T>,
    dpp: &Field<T>,
    j: usize,
    p: i64,
) -> (T, T, T) {
    let base = f.get(j, p);
    let up = base + dj.get(j, p) * 2.0;
    let right = base + dp.get(j, p) * 2.0 + dpp.get(j, p) * 2.0;
    let left = base - dp.get(j, p) * 2.0 + dpp.get(j, p) * 2.0;
    (up, right, left)
}
