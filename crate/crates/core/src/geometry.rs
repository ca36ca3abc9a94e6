//! Per-site geometry of the two-step walk.
//!
//! Writing the stroboscopic map as ψ_{j+2,p} = M₊ψ_{j,p+2} + M₀ψ_{j,p} +
//! M₋ψ_{j,p−2} and regrouping against the discrete derivatives yields the
//! operators W = M₊+M₋ and L = M₀ of the equation of motion
//!
//! ```text
//! D_j Ψ = (Wσ₃) D_p Ψ + ½(W + L − 𝟙) Ψ + W D_pp Ψ.
//! ```
//!
//! The eigen-structure of Wσ₃ at each site carries the geometry: its two real
//! eigenvalues are local transport velocities x±, which define a discrete
//! 2-bein, the inverse metric, and the volume density μ = (x₊−x₋)/2. The
//! operator r whose columns are the Wσ₃ eigenvectors (normalized against the
//! μ-weighted Hilbert product) changes into the basis in which the connection
//! and the mass are later fixed.
//!
//! Sites where Wσ₃ has complex or equal eigenvalues lose the Lorentzian
//! structure; they are flagged [`Degeneracy`] and masked downstream, never
//! patched.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::{AngleField, MatrixField};
use crate::lattice::Lattice;
use crate::mat2::Mat2;

/// Why a site fails the generic-geometry assumptions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    /// The characteristic discriminant is negative.
    ComplexEigenvalues,
    /// x₊ = x₋, so μ = 0 and the 2-bein is not invertible.
    EqualEigenvalues,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("site (j={j}, p={p}) is degenerate: {kind:?}")]
    Degenerate { j: usize, p: i64, kind: Degeneracy },
    #[error("geometry needs theta at slice j+1; j={j} exceeds valid range 0..={hi}")]
    OutOfRange { j: usize, hi: usize },
    #[error("lattice too small: geometry needs J >= 3")]
    TooFewSlices,
}

/// W as it appears in the equation of motion (entries mix θ at (j,p±1) and
/// (j+1,p)).
pub fn local_w(theta: &AngleField, j: usize, p: i64) -> Mat2 {
    let (m_plus, _, m_minus) = two_step_coefficients(theta, j, p);
    m_plus + m_minus
}

/// L = M₀, the zero-shift block of the stroboscopic map.
///
/// Derived from composition; its (L,L) entry carries s_{j,p−1}, not the
/// p+1 value, which the `two_step_matches_written_out_equations` walk test
/// pins down against the evolved state.
pub fn local_l(theta: &AngleField, j: usize, p: i64) -> Mat2 {
    let (_, m_zero, _) = two_step_coefficients(theta, j, p);
    m_zero
}

/// Wσ₃ = M₊ − M₋, the transport part of the two-step map.
pub fn w_sigma3(theta: &AngleField, j: usize, p: i64) -> Mat2 {
    let (m_plus, _, m_minus) = two_step_coefficients(theta, j, p);
    m_plus - m_minus
}

/// Exact coefficients (M₊, M₀, M₋) of the composed two-step map at one site:
/// ψ_{j+2,p} = M₊ ψ_{j,p+2} + M₀ ψ_{j,p} + M₋ ψ_{j,p−2}.
pub fn two_step_coefficients(theta: &AngleField, j: usize, p: i64) -> (Mat2, Mat2, Mat2) {
    let i = C64::new(0.0, 1.0);
    let c1 = C64::from(theta.cos(j + 1, p));
    let s1 = C64::from(theta.sin(j + 1, p));
    let (c_r, s_r) = (C64::from(theta.cos(j, p + 1)), C64::from(theta.sin(j, p + 1)));
    let (c_l, s_l) = (C64::from(theta.cos(j, p - 1)), C64::from(theta.sin(j, p - 1)));
    let m_plus = Mat2::new([[c1 * c_r, C64::ZERO], [i * s1 * c_r, C64::ZERO]]);
    let m_minus = Mat2::new([[C64::ZERO, i * s1 * c_l], [C64::ZERO, c1 * c_l]]);
    let m_zero = Mat2::new([[s1 * s_l, -i * c1 * s_r], [-i * c1 * s_l, s1 * s_r]]);
    (m_plus, m_zero, m_minus)
}

/// Real eigenvalues of Wσ₃ at a site, sorted ascending.
///
/// The characteristic polynomial is x² + c_{j+1,p} δ x − π with
/// δ = c_{j,p−1} − c_{j,p+1} and π = c_{j,p−1} c_{j,p+1}.
pub fn eigenvalues(theta: &AngleField, j: usize, p: i64) -> Result<(f64, f64), Degeneracy> {
    let c1 = theta.cos(j + 1, p);
    let c_l = theta.cos(j, p - 1);
    let c_r = theta.cos(j, p + 1);
    let delta = c_l - c_r;
    let pi = c_l * c_r;
    let disc = c1 * c1 * delta * delta + 4.0 * pi;
    if disc < 0.0 {
        return Err(Degeneracy::ComplexEigenvalues);
    }
    let root = disc.sqrt();
    let x_minus = 0.5 * (-c1 * delta - root);
    let x_plus = 0.5 * (-c1 * delta + root);
    if x_minus == x_plus {
        return Err(Degeneracy::EqualEigenvalues);
    }
    Ok((x_minus, x_plus))
}

/// 2-bein, inverse 2-bein, inverse metric and volume density from the
/// transport velocities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricData {
    /// e[μ][a]: coordinate index first (0 = time), frame index second.
    pub e: [[f64; 2]; 2],
    /// E[a][μ]: the matrix inverse, E^a_μ e^μ_b = δ^a_b.
    pub e_inv: [[f64; 2]; 2],
    pub g00: f64,
    pub g01: f64,
    pub g11: f64,
    /// Volume density μ = (x₊ − x₋)/2 = √(−det g^{μν}).
    pub mu: f64,
}

pub fn zweibein_and_metric(x_minus: f64, x_plus: f64) -> Result<MetricData, Degeneracy> {
    let half_sum = 0.5 * (x_plus + x_minus);
    let mu = 0.5 * (x_plus - x_minus);
    if mu == 0.0 {
        return Err(Degeneracy::EqualEigenvalues);
    }
    let e = [[1.0, 0.0], [half_sum, mu]];
    // e is lower triangular with unit (0,0) entry.
    let e_inv = [[1.0, 0.0], [-half_sum / mu, 1.0 / mu]];
    Ok(MetricData {
        e,
        e_inv,
        g00: 1.0,
        g01: half_sum,
        g11: x_plus * x_minus,
        mu,
    })
}

/// Eigenvector of `m` for eigenvalue `lam`, from whichever row of (m − λ𝟙)
/// is better conditioned.
fn eigenvector(m: &Mat2, lam: f64) -> [C64; 2] {
    let l = C64::from(lam);
    let a = [m.e[0][1], l - m.e[0][0]];
    let b = [l - m.e[1][1], m.e[1][0]];
    let na = a[0].norm_sqr() + a[1].norm_sqr();
    let nb = b[0].norm_sqr() + b[1].norm_sqr();
    if na >= nb {
        a
    } else {
        b
    }
}

/// Rescale so `v[anchor]` is real non-negative (falling back to the other
/// component when the anchor vanishes), then normalize to ‖v‖² = `target_sq`.
fn fix_phase_and_norm(mut v: [C64; 2], anchor: usize, target_sq: f64) -> [C64; 2] {
    let z = if v[anchor].norm() > 0.0 {
        v[anchor]
    } else {
        v[1 - anchor]
    };
    let phase = z / z.norm();
    let scale = (target_sq / (v[0].norm_sqr() + v[1].norm_sqr())).sqrt();
    let factor = phase.conj() * scale;
    v[0] *= factor;
    v[1] *= factor;
    v
}

/// The basis change r that diagonalises Wσ₃, and its exact inverse.
///
/// Columns are the eigenvectors b₋ (for `w_minus`) and b₊ (for `w_plus`),
/// each normalized against the μ-weighted product, μ‖b‖² = 1. The phase is
/// fixed by making the second component of b₋ and the first of b₊ real and
/// non-negative.
pub fn diagonalizing_basis(
    w_sig3: &Mat2,
    mu: f64,
    w_minus: f64,
    w_plus: f64,
) -> Result<(Mat2, Mat2), Degeneracy> {
    if mu == 0.0 || w_minus == w_plus {
        return Err(Degeneracy::EqualEigenvalues);
    }
    let target_sq = 1.0 / mu;
    let b_minus = fix_phase_and_norm(eigenvector(w_sig3, w_minus), 1, target_sq);
    let b_plus = fix_phase_and_norm(eigenvector(w_sig3, w_plus), 0, target_sq);
    let r = Mat2::new([[b_minus[0], b_plus[0]], [b_minus[1], b_plus[1]]]);
    let r_inv = r.inverse().ok_or(Degeneracy::EqualEigenvalues)?;
    Ok((r, r_inv))
}

/// Everything geometric at one nondegenerate site.
#[derive(Clone, Copy, Debug)]
pub struct GeometrySite {
    /// Transport velocities, ascending.
    pub x_minus: f64,
    pub x_plus: f64,
    /// Eigenvalues paired to the (b₋, b₊) branches: r⁻¹(Wσ₃)r = diag(w₋, w₊).
    /// b₋ takes the ascending x₋ when cos θ_{j+1,p} ≥ 0, the swap otherwise,
    /// which keeps r continuous through the flat coin and matches the closed
    /// form of the time-dependent example.
    pub w_minus: f64,
    pub w_plus: f64,
    pub metric: MetricData,
    pub r: Mat2,
    pub r_inv: Mat2,
}

pub fn geometry_site(theta: &AngleField, j: usize, p: i64) -> Result<GeometrySite, Degeneracy> {
    let (x_minus, x_plus) = eigenvalues(theta, j, p)?;
    let metric = zweibein_and_metric(x_minus, x_plus)?;
    let (w_minus, w_plus) = if theta.cos(j + 1, p) >= 0.0 {
        (x_minus, x_plus)
    } else {
        (x_plus, x_minus)
    };
    let wsig3 = w_sigma3(theta, j, p);
    let (r, r_inv) = diagonalizing_basis(&wsig3, metric.mu, w_minus, w_plus)?;
    Ok(GeometrySite {
        x_minus,
        x_plus,
        w_minus,
        w_plus,
        metric,
        r,
        r_inv,
    })
}

/// Matrix whose entries are all NaN, used to poison masked sites so that any
/// stencil touching them stays visibly invalid.
pub fn nan_mat() -> Mat2 {
    Mat2::new([[C64::new(f64::NAN, f64::NAN); 2]; 2])
}

/// Site-by-site geometry over the lattice. Valid on slices 0..=J−2 (slice j
/// needs θ at j+1).
#[derive(Clone, Debug)]
pub struct GeometryField {
    lat: Lattice,
    valid_hi: usize,
    sites: Vec<Result<GeometrySite, Degeneracy>>,
}

impl GeometryField {
    pub fn build(theta: &AngleField) -> Result<GeometryField, GeomError> {
        let lat = theta.lat();
        if lat.j_slices() < 3 {
            return Err(GeomError::TooFewSlices);
        }
        let valid_hi = lat.j_slices() - 2;
        let p_sites = lat.p_sites();
        let sites: Vec<_> = (0..=valid_hi)
            .into_par_iter()
            .flat_map_iter(|j| (0..p_sites as i64).map(move |p| (j, p)))
            .map(|(j, p)| geometry_site(theta, j, p))
            .collect();
        Ok(GeometryField {
            lat,
            valid_hi,
            sites,
        })
    }

    pub fn lat(&self) -> Lattice {
        self.lat
    }

    /// Inclusive range of slices with geometry.
    pub fn valid_j(&self) -> (usize, usize) {
        (0, self.valid_hi)
    }

    pub fn site(&self, j: usize, p: i64) -> Result<&GeometrySite, GeomError> {
        if j > self.valid_hi {
            return Err(GeomError::OutOfRange {
                j,
                hi: self.valid_hi,
            });
        }
        self.sites[j * self.lat.p_sites() + self.lat.wrap_p(p)]
            .as_ref()
            .map_err(|kind| GeomError::Degenerate { j, p, kind: *kind })
    }

    pub fn degeneracy(&self, j: usize, p: i64) -> Option<Degeneracy> {
        self.sites[j * self.lat.p_sites() + self.lat.wrap_p(p)]
            .as_ref()
            .err()
            .copied()
    }

    pub fn degenerate_count(&self) -> usize {
        self.sites.iter().filter(|s| s.is_err()).count()
    }

    fn matrix_field(&self, pick: impl Fn(&GeometrySite) -> Mat2 + Sync) -> MatrixField {
        MatrixField::from_fn_filled(self.lat, (0, self.valid_hi), nan_mat(), |j, p| {
            match self.site(j, p) {
                Ok(site) => pick(site),
                Err(_) => nan_mat(),
            }
        })
    }

    /// The basis-change field r (NaN at degenerate sites).
    pub fn r_field(&self) -> MatrixField {
        self.matrix_field(|s| s.r)
    }

    pub fn r_inv_field(&self) -> MatrixField {
        self.matrix_field(|s| s.r_inv)
    }

    /// diag(w₋, w₊) per site: Wσ₃ expressed in the diagonal basis.
    pub fn w_sig3_diag_field(&self) -> MatrixField {
        self.matrix_field(|s| Mat2::from_diag(C64::from(s.w_minus), C64::from(s.w_plus)))
    }
}
