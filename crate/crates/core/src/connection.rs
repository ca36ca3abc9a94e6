//! The discrete space-time connection (𝒜, ℬ) and the mass operator.
//!
//! Covariant discrete derivatives take the form
//!
//! ```text
//! 𝒟_j(𝒜)ψ = 𝒜¹ D_j ψ + 𝒜⁰ ψ
//! 𝒟_p(ℬ)ψ = ℬ¹ D_p ψ + ℬ⁰ ψ + ℬ² D_pp ψ
//! ```
//!
//! with coefficient fields that transform under a site-dependent change of
//! spinor basis r so that 𝒟ψ picks up only an overall factor of r. In the
//! walk basis the 1- and 2-components are pinned to 𝒜¹ = ℬ¹ = 𝟙, ℬ² = σ₃;
//! the 0-components and the mass are then fixed in the diagonal basis by
//! splitting the residual operator 𝓝 into its off-diagonal part (i𝓜) and
//! diagonal part (𝓞) and solving
//!
//! ```text
//! (Wσ₃)ℬ⁰ − 𝒜⁰ = 𝓞,   𝒜⁰ = diag(a, −a),  ℬ⁰ = diag(b, −b)
//! ```
//!
//! sitewise. Sites where Wσ₃ has equal diagonal-basis entries make the solve
//! singular; they are flagged and poisoned with NaN rather than regularized.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::calculus::{d_j, d_p, d_pp};
use crate::field::{AngleField, Basis, ComplexField, FieldError, MatrixField, SpinorSlice};
use crate::geometry::{self, GeomError, GeometryField};
use crate::mat2::Mat2;

#[derive(Debug, Error)]
pub enum ConnectionError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Coefficients (𝒜⁰, 𝒜¹) of the covariant time derivative, with a tag for
/// the basis their components refer to.
#[derive(Clone, Debug)]
pub struct TimeConnection {
    pub a0: MatrixField,
    pub a1: MatrixField,
    pub basis: Basis,
}

/// Coefficients (ℬ⁰, ℬ¹, ℬ²) of the covariant space derivative.
#[derive(Clone, Debug)]
pub struct SpaceConnection {
    pub b0: MatrixField,
    pub b1: MatrixField,
    pub b2: MatrixField,
    pub basis: Basis,
}

fn intersect(a: (usize, usize), b: (usize, usize)) -> Result<(usize, usize), FieldError> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if lo > hi {
        return Err(FieldError::EmptyRange { hi: a.1, need: b.0 });
    }
    Ok((lo, hi))
}

/// Basis change of a time connection by the operator field `r`:
///
/// ```text
/// 𝒜⁰ → r⁻¹ 𝒜⁰ r + r⁻¹ 𝒜¹ (D_j r)
/// 𝒜¹ → (r⁻¹ 𝒜¹ r)(𝟙 + 2 r⁻¹ D_j r)
/// ```
pub fn transform_time_connection(
    conn: &TimeConnection,
    r: &MatrixField,
    new_basis: Basis,
) -> Result<TimeConnection, ConnectionError> {
    let djr = d_j(r)?;
    let valid = intersect(
        intersect(conn.a0.valid_j(), conn.a1.valid_j())?,
        djr.valid_j(),
    )?;
    let fill = geometry::nan_mat();
    let a0 = MatrixField::from_fn_filled(r.lat(), valid, fill, |j, p| {
        let rinv = r.get(j, p).inverse().unwrap_or(fill);
        rinv * (conn.a0.get(j, p) * r.get(j, p) + conn.a1.get(j, p) * djr.get(j, p))
    });
    let a1 = MatrixField::from_fn_filled(r.lat(), valid, fill, |j, p| {
        let rinv = r.get(j, p).inverse().unwrap_or(fill);
        (rinv * conn.a1.get(j, p) * r.get(j, p))
            * (Mat2::identity() + (rinv * djr.get(j, p)) * 2.0)
    });
    Ok(TimeConnection {
        a0,
        a1,
        basis: new_basis,
    })
}

/// Basis change of a space connection by the operator field `r`:
///
/// ```text
/// ℬ⁰ → r⁻¹ ℬ⁰ r + r⁻¹ ℬ¹ (D_p r) + r⁻¹ ℬ² (D_pp r)
/// ℬ¹ → (r⁻¹ ℬ¹ r)(𝟙 + 2 r⁻¹ D_pp r) + 2 r⁻¹ ℬ² (D_p r)
/// ℬ² → (r⁻¹ ℬ² r)(𝟙 + 2 r⁻¹ D_pp r) + 2 r⁻¹ ℬ¹ (D_p r)
/// ```
pub fn transform_space_connection(
    conn: &SpaceConnection,
    r: &MatrixField,
    new_basis: Basis,
) -> Result<SpaceConnection, ConnectionError> {
    let dpr = d_p(r);
    let dppr = d_pp(r);
    let valid = intersect(
        intersect(conn.b0.valid_j(), conn.b1.valid_j())?,
        intersect(conn.b2.valid_j(), r.valid_j())?,
    )?;
    let fill = geometry::nan_mat();
    let lat = r.lat();
    let b0 = MatrixField::from_fn_filled(lat, valid, fill, |j, p| {
        let rinv = r.get(j, p).inverse().unwrap_or(fill);
        rinv * (conn.b0.get(j, p) * r.get(j, p)
            + conn.b1.get(j, p) * dpr.get(j, p)
            + conn.b2.get(j, p) * dppr.get(j, p))
    });
    let b1 = MatrixField::from_fn_filled(lat, valid, fill, |j, p| {
        let rinv = r.get(j, p).inverse().unwrap_or(fill);
        (rinv * conn.b1.get(j, p) * r.get(j, p))
            * (Mat2::identity() + (rinv * dppr.get(j, p)) * 2.0)
            + (rinv * conn.b2.get(j, p) * dpr.get(j, p)) * 2.0
    });
    let b2 = MatrixField::from_fn_filled(lat, valid, fill, |j, p| {
        let rinv = r.get(j, p).inverse().unwrap_or(fill);
        (rinv * conn.b2.get(j, p) * r.get(j, p))
            * (Mat2::identity() + (rinv * dppr.get(j, p)) * 2.0)
            + (rinv * conn.b1.get(j, p) * dpr.get(j, p)) * 2.0
    });
    Ok(SpaceConnection {
        b0,
        b1,
        b2,
        basis: new_basis,
    })
}

/// The residual operator of the equation of motion in the diagonal basis:
///
/// ```text
/// 𝓝 = r⁻¹ [ ½(W + L − 𝟙) r − D_j r + (Wσ₃)(D_p r + σ₃ D_pp r) ]
/// ```
pub fn compute_n(
    w: &MatrixField,
    l: &MatrixField,
    r: &MatrixField,
) -> Result<MatrixField, ConnectionError> {
    let djr = d_j(r)?;
    let dpr = d_p(r);
    let dppr = d_pp(r);
    let valid = intersect(intersect(w.valid_j(), l.valid_j())?, djr.valid_j())?;
    let fill = geometry::nan_mat();
    let n = MatrixField::from_fn_filled(r.lat(), valid, fill, |j, p| {
        let rv = r.get(j, p);
        let rinv = rv.inverse().unwrap_or(fill);
        let wv = w.get(j, p);
        let half_wl = (wv + l.get(j, p) - Mat2::identity()) * 0.5;
        let wsig3 = wv * Mat2::sigma3();
        rinv * (half_wl * rv - djr.get(j, p)
            + wsig3 * (dpr.get(j, p) + Mat2::sigma3() * dppr.get(j, p)))
    });
    Ok(n)
}

/// Split 𝓝 into the mass 𝓜 = −i·offdiag(𝓝) and the diagonal part 𝓞.
pub fn split_mass(n: &MatrixField) -> (MatrixField, MatrixField) {
    let minus_i = C64::new(0.0, -1.0);
    let mass = n.map(|m| m.offdiag_part().scale(minus_i));
    let o = n.map(|m| m.diag_part());
    (mass, o)
}

/// Solve (Wσ₃)ℬ⁰ − 𝒜⁰ = 𝓞 for trace-free diagonal 𝒜⁰ = diag(a, −a) and
/// ℬ⁰ = diag(b, −b):
///
/// ```text
/// b = (𝓞₋₋ + 𝓞₊₊) / (w₋ − w₊),   a = w₋ b − 𝓞₋₋
/// ```
///
/// Returns the per-site scalars (a, b), NaN where the site is degenerate or
/// w₋ = w₊, plus the count of such failures inside the valid range.
pub fn solve_a0_b0(
    o: &MatrixField,
    geom: &GeometryField,
) -> (ComplexField, ComplexField, usize) {
    let nanc = C64::new(f64::NAN, f64::NAN);
    let (lo, hi) = o.valid_j();
    let mut failures = 0usize;
    let lat = o.lat();
    let mut a_vals = vec![nanc; lat.n_sites()];
    let mut b_vals = vec![nanc; lat.n_sites()];
    for j in lo..=hi {
        for p in 0..lat.p_sites() as i64 {
            let site = match geom.site(j, p) {
                Ok(s) => s,
                Err(_) => {
                    failures += 1;
                    continue;
                }
            };
            if site.w_minus == site.w_plus {
                failures += 1;
                continue;
            }
            let ov = o.get(j, p);
            let b = (ov.e[0][0] + ov.e[1][1]) / (site.w_minus - site.w_plus);
            let a = site.w_minus * b - ov.e[0][0];
            a_vals[lat.idx(j, p)] = a;
            b_vals[lat.idx(j, p)] = b;
        }
    }
    let a = ComplexField::from_fn_filled(lat, (lo, hi), nanc, |j, p| a_vals[lat.idx(j, p)]);
    let b = ComplexField::from_fn_filled(lat, (lo, hi), nanc, |j, p| b_vals[lat.idx(j, p)]);
    (a, b, failures)
}

/// The walk's own space-time connection in the diagonal basis, with the mass
/// operator and the diagnostics the curvature layer needs.
#[derive(Clone, Debug)]
pub struct WalkConnection {
    pub time: TimeConnection,
    pub space: SpaceConnection,
    /// Mass operator 𝓜 (anti-diagonal in this basis).
    pub mass: MatrixField,
    /// The residual operator 𝓝 the split came from.
    pub n: MatrixField,
    /// diag(w₋, w₊) per site.
    pub w_sig3: MatrixField,
    /// Sites where the trace-free solve was impossible.
    pub solve_failures: usize,
}

impl WalkConnection {
    /// Run the full pipeline: geometry, basis change, 𝓝, mass, 0-component
    /// solve. Needs J ≥ 4 so that D_j of the basis field exists somewhere.
    pub fn build(theta: &AngleField) -> Result<(GeometryField, WalkConnection), ConnectionError> {
        let geom = GeometryField::build(theta)?;
        let conn = WalkConnection::from_geometry(theta, &geom)?;
        Ok((geom, conn))
    }

    pub fn from_geometry(
        theta: &AngleField,
        geom: &GeometryField,
    ) -> Result<WalkConnection, ConnectionError> {
        let lat = theta.lat();
        let (glo, ghi) = geom.valid_j();
        let fill = geometry::nan_mat();
        let w = MatrixField::from_fn_filled(lat, (glo, ghi), fill, |j, p| {
            geometry::local_w(theta, j, p)
        });
        let l = MatrixField::from_fn_filled(lat, (glo, ghi), fill, |j, p| {
            geometry::local_l(theta, j, p)
        });
        let r = geom.r_field();

        let n = compute_n(&w, &l, &r)?;
        let (mass, o) = split_mass(&n);
        let (a_diag, b_diag, solve_failures) = solve_a0_b0(&o, geom);

        // 1- and 2-components via the generic transformation laws applied to
        // the pinned walk-basis values (𝒜¹ = ℬ¹ = 𝟙, ℬ² = σ₃, 0-components
        // dropped).
        let zero = MatrixField::from_fn_filled(lat, (glo, ghi), fill, |_, _| Mat2::zero());
        let ident = MatrixField::from_fn_filled(lat, (glo, ghi), fill, |_, _| Mat2::identity());
        let sig3 = MatrixField::from_fn_filled(lat, (glo, ghi), fill, |_, _| Mat2::sigma3());
        let time_a = TimeConnection {
            a0: zero.clone(),
            a1: ident.clone(),
            basis: Basis::Original,
        };
        let space_a = SpaceConnection {
            b0: zero,
            b1: ident,
            b2: sig3,
            basis: Basis::Original,
        };
        let time_alpha = transform_time_connection(&time_a, &r, Basis::Diagonal)?;
        let space_alpha = transform_space_connection(&space_a, &r, Basis::Diagonal)?;

        let (nlo, nhi) = n.valid_j();
        let a0 = MatrixField::from_fn_filled(lat, (nlo, nhi), fill, |j, p| {
            let a = a_diag.get(j, p);
            Mat2::from_diag(a, -a)
        });
        let b0 = MatrixField::from_fn_filled(lat, (nlo, nhi), fill, |j, p| {
            let b = b_diag.get(j, p);
            Mat2::from_diag(b, -b)
        });

        Ok(WalkConnection {
            time: TimeConnection {
                a0,
                a1: time_alpha.a1,
                basis: Basis::Diagonal,
            },
            space: SpaceConnection {
                b0,
                b1: space_alpha.b1,
                b2: space_alpha.b2,
                basis: Basis::Diagonal,
            },
            mass,
            n,
            w_sig3: geom.w_sig3_diag_field(),
            solve_failures,
        })
    }

    /// Inclusive slice range on which every stored component is defined.
    pub fn valid_j(&self) -> (usize, usize) {
        self.time.a0.valid_j()
    }

    /// Components mapped back to the walk basis b_A = (b_L, b_R) via the
    /// inverse basis change, together with 𝓜 and Wσ₃ conjugated to match.
    pub fn to_original_basis(
        &self,
        geom: &GeometryField,
    ) -> Result<(TimeConnection, SpaceConnection, MatrixField, MatrixField), ConnectionError>
    {
        let r_inv = geom.r_inv_field();
        let r = geom.r_field();
        let time = transform_time_connection(&self.time, &r_inv, Basis::Original)?;
        let space = transform_space_connection(&self.space, &r_inv, Basis::Original)?;
        let fill = geometry::nan_mat();
        let conj = |field: &MatrixField| {
            MatrixField::from_fn_filled(field.lat(), field.valid_j(), fill, |j, p| {
                r.get(j, p) * field.get(j, p) * r_inv.get(j, p)
            })
        };
        Ok((time, space, conj(&self.mass), conj(&self.w_sig3)))
    }
}

/// 𝒟_j(𝒜)ψ at one site, from the slice pair (j, j+2).
pub fn cov_time_deriv_site(
    a0: &Mat2,
    a1: &Mat2,
    psi_j: &SpinorSlice,
    psi_j2: &SpinorSlice,
    p: i64,
) -> [C64; 2] {
    let v = psi_j.get(p);
    let v2 = psi_j2.get(p);
    let dj = [(v2[0] - v[0]) * 0.5, (v2[1] - v[1]) * 0.5];
    let t1 = a1.mul_vec(dj);
    let t0 = a0.mul_vec(v);
    [t1[0] + t0[0], t1[1] + t0[1]]
}

/// 𝒟_p(ℬ)ψ at one site, within a single slice.
pub fn cov_space_deriv_site(
    b0: &Mat2,
    b1: &Mat2,
    b2: &Mat2,
    psi: &SpinorSlice,
    p: i64,
) -> [C64; 2] {
    let vr = psi.get(p + 2);
    let vl = psi.get(p - 2);
    let v = psi.get(p);
    let dp = [(vr[0] - vl[0]) * 0.25, (vr[1] - vl[1]) * 0.25];
    let dpp = [
        (vr[0] + vl[0] - v[0] * 2.0) * 0.25,
        (vr[1] + vl[1] - v[1] * 2.0) * 0.25,
    ];
    let t1 = b1.mul_vec(dp);
    let t0 = b0.mul_vec(v);
    let t2 = b2.mul_vec(dpp);
    [t1[0] + t0[0] + t2[0], t1[1] + t0[1] + t2[1]]
}
