//! Field containers over the space-time grid.
//!
//! A [`Field<T>`] stores one value of `T` per site in a dense J×P layout,
//! together with the inclusive range of time slices on which the values are
//! meaningful. Stride-2 time stencils shrink that range; spatial stencils
//! wrap. Containers are immutable after construction, so per-site reads are
//! safe from any number of threads.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::lattice::Lattice;
use crate::mat2::Mat2;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("slice j={j} outside valid range {lo}..={hi}")]
    OutOfRange { j: usize, lo: usize, hi: usize },
    #[error("valid range would be empty (input valid to j={hi}, operation needs {need} more slices)")]
    EmptyRange { hi: usize, need: usize },
    #[error("basis mismatch: expected {expected:?}, got {got:?}")]
    BasisMismatch { expected: Basis, got: Basis },
}

/// Spinor-component basis tag.
///
/// `Original` is the walk basis (b_L, b_R); `Diagonal` is the site-dependent
/// basis (b₋, b₊) in which Wσ₃ is diagonal. Mixing the two in arithmetic is
/// an error, so every spinor container carries its tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Original,
    Diagonal,
}

#[derive(Clone, Debug)]
pub struct Field<T> {
    lat: Lattice,
    valid_lo: usize,
    valid_hi: usize,
    data: Vec<T>,
}

impl<T: Copy> Field<T> {
    /// Build a field by evaluating `f` on every site of the valid range.
    /// Slices outside the range are filled with `fill`.
    pub fn from_fn_filled(
        lat: Lattice,
        valid: (usize, usize),
        fill: T,
        f: impl Fn(usize, i64) -> T + Sync,
    ) -> Self
    where
        T: Send + Sync,
    {
        let (lo, hi) = valid;
        assert!(lo <= hi && hi < lat.j_slices(), "invalid slice range");
        let mut data = vec![fill; lat.n_sites()];
        let p_sites = lat.p_sites();
        use rayon::prelude::*;
        data[lo * p_sites..(hi + 1) * p_sites]
            .par_chunks_mut(p_sites)
            .enumerate()
            .for_each(|(dj, row)| {
                let j = lo + dj;
                for (p, slot) in row.iter_mut().enumerate() {
                    *slot = f(j, p as i64);
                }
            });
        Field {
            lat,
            valid_lo: lo,
            valid_hi: hi,
            data,
        }
    }

    pub fn lat(&self) -> Lattice {
        self.lat
    }

    /// Inclusive range of slices carrying meaningful values.
    pub fn valid_j(&self) -> (usize, usize) {
        (self.valid_lo, self.valid_hi)
    }

    pub fn check_j(&self, j: usize) -> Result<(), FieldError> {
        if j < self.valid_lo || j > self.valid_hi {
            Err(FieldError::OutOfRange {
                j,
                lo: self.valid_lo,
                hi: self.valid_hi,
            })
        } else {
            Ok(())
        }
    }

    /// Value at (j, p); p wraps periodically. Panics outside the valid range.
    pub fn get(&self, j: usize, p: i64) -> T {
        self.check_j(j).unwrap();
        self.data[self.lat.idx(j, p)]
    }

    pub fn try_get(&self, j: usize, p: i64) -> Result<T, FieldError> {
        self.check_j(j)?;
        Ok(self.data[self.lat.idx(j, p)])
    }

    /// Map entrywise, preserving the valid range.
    pub fn map<U: Copy + Send + Sync>(&self, f: impl Fn(T) -> U + Sync) -> Field<U>
    where
        T: Send + Sync,
    {
        let fill = f(self.data[self.valid_lo * self.lat.p_sites()]);
        Field::from_fn_filled(self.lat, self.valid_j(), fill, |j, p| f(self.get(j, p)))
    }

    /// Restrict the valid range to the intersection with `(lo, hi)`.
    pub fn restricted(mut self, lo: usize, hi: usize) -> Result<Self, FieldError> {
        let new_lo = self.valid_lo.max(lo);
        let new_hi = self.valid_hi.min(hi);
        if new_lo > new_hi {
            return Err(FieldError::EmptyRange {
                hi: self.valid_hi,
                need: lo.saturating_sub(self.valid_hi),
            });
        }
        self.valid_lo = new_lo;
        self.valid_hi = new_hi;
        Ok(self)
    }
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<C64>;
pub type MatrixField = Field<Mat2>;

/// Coin angles θ(j,p) evaluated on the whole grid, in radians.
#[derive(Clone, Debug)]
pub struct AngleField {
    lat: Lattice,
    theta: Vec<f64>,
}

impl AngleField {
    pub fn from_fn(lat: Lattice, f: impl Fn(usize, i64) -> f64) -> Self {
        let mut theta = Vec::with_capacity(lat.n_sites());
        for j in 0..lat.j_slices() {
            for p in 0..lat.p_sites() as i64 {
                theta.push(f(j, p));
            }
        }
        AngleField { lat, theta }
    }

    pub fn constant(lat: Lattice, value: f64) -> Self {
        AngleField {
            theta: vec![value; lat.n_sites()],
            lat,
        }
    }

    /// Independent uniform angles in [−amplitude, amplitude], reproducible
    /// from the seed.
    pub fn random(lat: Lattice, seed: u64, amplitude: f64) -> Self {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        AngleField {
            theta: (0..lat.n_sites())
                .map(|_| rng.random_range(-amplitude..=amplitude))
                .collect(),
            lat,
        }
    }

    pub fn lat(&self) -> Lattice {
        self.lat
    }

    pub fn get(&self, j: usize, p: i64) -> f64 {
        assert!(j < self.lat.j_slices(), "theta slice {j} out of range");
        self.theta[self.lat.idx(j, p)]
    }

    pub fn cos(&self, j: usize, p: i64) -> f64 {
        self.get(j, p).cos()
    }

    pub fn sin(&self, j: usize, p: i64) -> f64 {
        self.get(j, p).sin()
    }
}

/// One time slice of the two-component wave function.
#[derive(Clone, Debug)]
pub struct SpinorSlice {
    basis: Basis,
    amp: Vec<[C64; 2]>,
}

impl SpinorSlice {
    pub fn new(basis: Basis, amp: Vec<[C64; 2]>) -> Self {
        SpinorSlice { basis, amp }
    }

    pub fn zero(p_sites: usize, basis: Basis) -> Self {
        SpinorSlice {
            basis,
            amp: vec![[C64::ZERO; 2]; p_sites],
        }
    }

    /// δ-peaked state: `component` 0 (left) or 1 (right) set to 1 at `p0`.
    pub fn point(p_sites: usize, p0: i64, component: usize) -> Self {
        let mut s = SpinorSlice::zero(p_sites, Basis::Original);
        s.amp[crate::lattice::wrap_p(p0, p_sites)][component] = C64::ONE;
        s
    }

    /// Seeded random unit-norm state in the walk basis.
    pub fn random(p_sites: usize, seed: u64) -> Self {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amp = (0..p_sites)
            .map(|_| {
                [
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                ]
            })
            .collect();
        SpinorSlice::new(Basis::Original, amp).normalized()
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn expect_basis(&self, expected: Basis) -> Result<(), FieldError> {
        if self.basis != expected {
            return Err(FieldError::BasisMismatch {
                expected,
                got: self.basis,
            });
        }
        Ok(())
    }

    pub fn p_sites(&self) -> usize {
        self.amp.len()
    }

    pub fn get(&self, p: i64) -> [C64; 2] {
        self.amp[crate::lattice::wrap_p(p, self.amp.len())]
    }

    pub fn set(&mut self, p: i64, v: [C64; 2]) {
        let idx = crate::lattice::wrap_p(p, self.amp.len());
        self.amp[idx] = v;
    }

    pub fn amplitudes(&self) -> &[[C64; 2]] {
        &self.amp
    }

    /// Flat norm Σ_p |ψ^L|² + |ψ^R|² (the product the walk conserves).
    pub fn norm_sq(&self) -> f64 {
        self.amp
            .iter()
            .map(|a| a[0].norm_sqr() + a[1].norm_sqr())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.amp
            .iter()
            .flatten()
            .all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &SpinorSlice) -> f64 {
        self.amp
            .iter()
            .zip(&other.amp)
            .flat_map(|(a, b)| [(a[0] - b[0]).norm(), (a[1] - b[1]).norm()])
            .fold(0.0, f64::max)
    }

    /// Retag the slice after an explicit basis change.
    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }

    /// Normalize to unit flat norm (no-op on the zero state).
    pub fn normalized(mut self) -> Self {
        let n = self.norm_sq().sqrt();
        if n > 0.0 {
            for a in &mut self.amp {
                a[0] /= n;
                a[1] /= n;
            }
        }
        self
    }
}
