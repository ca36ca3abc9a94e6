//! Lattice bookkeeping: grid sizes, periodic spatial wrap, index maps.
//!
//! Space is periodic with an even number of sites P so that the stride-2
//! stencils (p±2) and the stride-1 coin lookups (p±1) wrap consistently and
//! sublattice parity is preserved. Time is stored, not wrapped: a field keeps
//! J slices and time derivatives exist only where both slices j and j+2 do.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("P must be even (got P={0}): stride-2 stencils require consistent sublattice parity under periodic wrap")]
    OddP(usize),
    #[error("P too small (got P={0}, need P >= 4)")]
    SmallP(usize),
    #[error("J too small (got J={0}, need J >= 3): a time derivative needs slices j and j+2")]
    SmallJ(usize),
    #[error("lattice spacing eps must be positive (got {0})")]
    BadEps(f64),
}

/// Dimensions of the space-time grid.
///
/// `p_sites` (P) spatial sites with periodic wrap, `j_slices` (J) stored time
/// slices, and the spacing ε relating grid indices to physical coordinates
/// via t = ε·j, x = ε·p.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    p_sites: usize,
    j_slices: usize,
    eps: f64,
}

impl Lattice {
    pub fn new(p_sites: usize, j_slices: usize, eps: f64) -> Result<Self, LatticeError> {
        if !p_sites.is_multiple_of(2) {
            return Err(LatticeError::OddP(p_sites));
        }
        if p_sites < 4 {
            return Err(LatticeError::SmallP(p_sites));
        }
        if j_slices < 3 {
            return Err(LatticeError::SmallJ(j_slices));
        }
        if eps.is_nan() || eps <= 0.0 {
            return Err(LatticeError::BadEps(eps));
        }
        Ok(Lattice {
            p_sites,
            j_slices,
            eps,
        })
    }

    pub fn p_sites(&self) -> usize {
        self.p_sites
    }

    pub fn j_slices(&self) -> usize {
        self.j_slices
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Physical time of slice j.
    pub fn t(&self, j: usize) -> f64 {
        self.eps * j as f64
    }

    /// Physical position of site p (after wrap).
    pub fn x(&self, p: i64) -> f64 {
        self.eps * self.wrap_p(p) as f64
    }

    /// Periodic wrap of a (possibly negative) spatial index into [0, P).
    pub fn wrap_p(&self, p: i64) -> usize {
        wrap_p(p, self.p_sites)
    }

    /// Flat index of site (j, p) in a row-major J×P layout.
    pub fn idx(&self, j: usize, p: i64) -> usize {
        debug_assert!(j < self.j_slices);
        j * self.p_sites + self.wrap_p(p)
    }

    pub fn n_sites(&self) -> usize {
        self.p_sites * self.j_slices
    }
}

/// `p mod P` mapped into [0, P).
pub fn wrap_p(p: i64, p_sites: usize) -> usize {
    let m = p_sites as i64;
    (((p % m) + m) % m) as usize
}
