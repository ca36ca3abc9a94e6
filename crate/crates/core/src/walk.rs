//! The unitary walk itself, in the original basis (b_L, b_R).
//!
//! One step is a stride-1 shift T, `(TΨ)_p = (ψ^L_{p+1}, ψ^R_{p−1})`, followed
//! by the site-dependent SU(2) coin
//!
//! ```text
//! U(θ) = [ −cos θ   i sin θ ]
//!        [ −i sin θ  cos θ  ]
//! ```
//!
//! evaluated at angle θ(j, p) when producing slice j+1. The geometry lives in
//! the stroboscopic (two-step) map, which is implemented as literal
//! composition of two single steps; the closed-form two-step coefficients in
//! [`crate::geometry`] are checked against it rather than trusted.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::field::{AngleField, Basis, FieldError, SpinorSlice};
use crate::lattice::Lattice;
use crate::mat2::Mat2;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("step from slice j={j} needs theta at slice {need}, lattice stores J={j_slices}")]
    ThetaSlice {
        j: usize,
        need: usize,
        j_slices: usize,
    },
    #[error("run of {n_steps} steps exceeds stored slices (J={j_slices})")]
    TooManySteps { n_steps: usize, j_slices: usize },
    #[error("slice length {got} does not match lattice P={expected}")]
    SliceLength { got: usize, expected: usize },
}

/// The coin U(θ). Unitary for every real θ.
pub fn coin(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new([
        [C64::new(-c, 0.0), C64::new(0.0, s)],
        [C64::new(0.0, -s), C64::new(c, 0.0)],
    ])
}

fn check_slice(psi: &SpinorSlice, lat: &Lattice) -> Result<(), WalkError> {
    psi.expect_basis(Basis::Original)?;
    if psi.p_sites() != lat.p_sites() {
        return Err(WalkError::SliceLength {
            got: psi.p_sites(),
            expected: lat.p_sites(),
        });
    }
    Ok(())
}

/// One step: slice j → slice j+1.
pub fn step(psi: &SpinorSlice, theta: &AngleField, j: usize) -> Result<SpinorSlice, WalkError> {
    let lat = theta.lat();
    check_slice(psi, &lat)?;
    if j >= lat.j_slices() {
        return Err(WalkError::ThetaSlice {
            j,
            need: j,
            j_slices: lat.j_slices(),
        });
    }
    let p_sites = lat.p_sites() as i64;
    let mut out = SpinorSlice::zero(lat.p_sites(), Basis::Original);
    for p in 0..p_sites {
        let shifted = [psi.get(p + 1)[0], psi.get(p - 1)[1]];
        out.set(p, coin(theta.get(j, p)).mul_vec(shifted));
    }
    Ok(out)
}

/// The stroboscopic map: slice j → slice j+2, by composing two steps.
pub fn two_step(psi: &SpinorSlice, theta: &AngleField, j: usize) -> Result<SpinorSlice, WalkError> {
    let lat = theta.lat();
    if j + 1 >= lat.j_slices() {
        return Err(WalkError::ThetaSlice {
            j,
            need: j + 1,
            j_slices: lat.j_slices(),
        });
    }
    step(&step(psi, theta, j)?, theta, j + 1)
}

/// Full walk history with per-slice flat norms.
#[derive(Clone, Debug)]
pub struct SpinorHistory {
    lat: Lattice,
    slices: Vec<SpinorSlice>,
    norms: Vec<f64>,
}

impl SpinorHistory {
    pub fn lat(&self) -> Lattice {
        self.lat
    }

    pub fn slice(&self, j: usize) -> &SpinorSlice {
        &self.slices[j]
    }

    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    /// Flat norm Σ|ψ|² recorded at each stored slice.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Largest |norm(j) − norm(0)| over the run.
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.norms[0];
        self.norms
            .iter()
            .map(|n| (n - n0).abs())
            .fold(0.0, f64::max)
    }
}

/// Evolve `psi0` for `n_steps` steps, storing every slice.
pub fn run(
    psi0: SpinorSlice,
    theta: &AngleField,
    n_steps: usize,
) -> Result<SpinorHistory, WalkError> {
    let lat = theta.lat();
    check_slice(&psi0, &lat)?;
    if n_steps > lat.j_slices() - 1 {
        return Err(WalkError::TooManySteps {
            n_steps,
            j_slices: lat.j_slices(),
        });
    }
    let mut slices = Vec::with_capacity(n_steps + 1);
    let mut norms = Vec::with_capacity(n_steps + 1);
    norms.push(psi0.norm_sq());
    slices.push(psi0);
    for j in 0..n_steps {
        let next = step(&slices[j], theta, j)?;
        norms.push(next.norm_sq());
        slices.push(next);
    }
    Ok(SpinorHistory { lat, slices, norms })
}
