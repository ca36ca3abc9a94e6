//! Two-step discrete-time quantum walks on a 2D space-time lattice, and the
//! discrete geometry they carry.
//!
//! A site-dependent coin angle θ(j,p) drives a unitary walk whose stroboscopic
//! (two-step) map plays the role of a Dirac equation in curved 2D space-time.
//! From the walk operators alone this crate extracts, per lattice site:
//!
//! * transport velocities x± and a discrete 2-bein / inverse metric / volume
//!   density μ ([`geometry`]),
//! * a five-component discrete spin connection (𝒜⁰,𝒜¹) and (ℬ⁰,ℬ¹,ℬ²) plus a
//!   mass operator, fixed in the basis that diagonalises Wσ₃ ([`connection`]),
//! * local Lorentz boosts acting on all of the above, together with the exact
//!   recovery of boost gradients from transformed connections ([`lorentz`]),
//! * two discrete Riemann curvatures ρ* and ρˢ, their coordinate components,
//!   and a continuum-limit convergence harness ([`curvature`]).
//!
//! The `dqw-geom` binary drives batch runs from a small config file; see the
//! [`config`] and [`runner`] modules.

pub mod calculus;
pub mod config;
pub mod connection;
pub mod curvature;
pub mod field;
pub mod geometry;
pub mod lattice;
pub mod lorentz;
pub mod mat2;
pub mod output;
pub mod runner;
pub mod theta;
pub mod walk;

pub use field::{AngleField, Basis, ComplexField, Field, MatrixField, ScalarField, SpinorSlice};
pub use lattice::Lattice;
pub use mat2::Mat2;
pub use theta::ThetaSpec;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
