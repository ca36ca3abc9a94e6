//! Two discrete Riemann curvatures and the continuum-limit harness.
//!
//! Both curvatures probe how the connection's diagonal entries respond to
//! local boosts:
//!
//! * the slow curvature is built directly from the connection,
//!
//!   ```text
//!   ρˢ(Λ) = ½ D_j[ ℬ⁰(Λ)₋₋/ℬ¹₋₋ − ℬ⁰(Λ)₊₊/ℬ¹₊₊ ]
//!         − ½ D_p[ 𝒜⁰(Λ)₋₋/𝒜¹₋₋ − 𝒜⁰(Λ)₊₊/𝒜¹₊₊ ]
//!   ```
//!
//!   with the walk's curvature being ρˢ(0) (the denominators always stay the
//!   unboosted 1-components);
//!
//! * the reference curvature uses the exact boost-gradient recovery of
//!   [`crate::lorentz`] against a reference connection (𝒜*, ℬ*):
//!
//!   ```text
//!   ρ*(0) = −D_p L_j(𝒜*, 𝒜) + D_j L_p(ℬ*, ℬ).
//!   ```
//!
//! For references that are themselves boosts of the walk connection the two
//! notions agree to first order: ρ*(0) ≈ ρˢ(0) − ρˢ(Λ*), with the gap
//! shrinking quadratically in the boost amplitude.
//!
//! In the continuum limit of a time-only profile, ρˢ/ε² tends to half the
//! mixed Riemann component of the metric diag(1, −a²) with a = 1/cos θ (the
//! overall orientation is fixed once, in [`RHO_CONTINUUM_SIGN`], and pinned
//! by regression tests). The convergence harness measures the approach and
//! Richardson-extrapolates it.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::calculus::{d_j, d_p};
use crate::connection::{SpaceConnection, TimeConnection, WalkConnection};
use crate::field::{ComplexField, FieldError};
use crate::geometry::GeometryField;
use crate::lattice::{Lattice, LatticeError};
use crate::lorentz::{boost_connection, recover_dj_lambda, recover_dp_lambda, LorentzError, LorentzField};
use crate::theta::{build_angle_field, ThetaError, ThetaKind, ThetaSpec};

/// Orientation of ρˢ against the continuous mixed Riemann component,
/// determined empirically on the first convergence run and pinned by
/// regression tests: ρˢ/ε² → +½ ∂_t ω for synchronous metrics.
pub const RHO_CONTINUUM_SIGN: f64 = 1.0;

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Lorentz(#[from] LorentzError),
    #[error(transparent)]
    Connection(#[from] crate::connection::ConnectionError),
    #[error(transparent)]
    Geom(#[from] crate::geometry::GeomError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error("convergence study needs a time-only theta profile (got one that depends on x)")]
    ThetaDependsOnX,
    #[error("eps list must be nonempty, positive and strictly decreasing: {0:?}")]
    BadEpsList(Vec<f64>),
    #[error("probe time {t_probe} needs slice {j_probe}, but the curvature range ends at {hi}")]
    ProbeOutOfRange {
        t_probe: f64,
        j_probe: usize,
        hi: usize,
    },
}

/// A scalar curvature field: complex-valued internally (the imaginary part
/// is a numerical diagnostic), NaN on masked sites.
#[derive(Clone, Debug)]
pub struct CurvatureField {
    values: ComplexField,
    masked: usize,
}

impl CurvatureField {
    fn from_complex(values: ComplexField) -> CurvatureField {
        let (lo, hi) = values.valid_j();
        let mut masked = 0;
        for j in lo..=hi {
            for p in 0..values.lat().p_sites() as i64 {
                if !values.get(j, p).is_finite() {
                    masked += 1;
                }
            }
        }
        CurvatureField { values, masked }
    }

    pub fn lat(&self) -> Lattice {
        self.values.lat()
    }

    pub fn valid_j(&self) -> (usize, usize) {
        self.values.valid_j()
    }

    /// Real curvature value; `None` on masked (NaN) sites.
    pub fn value(&self, j: usize, p: i64) -> Option<f64> {
        let v = self.values.get(j, p);
        if v.is_finite() {
            Some(v.re)
        } else {
            None
        }
    }

    pub fn complex(&self, j: usize, p: i64) -> C64 {
        self.values.get(j, p)
    }

    /// Number of masked sites inside the valid range.
    pub fn masked_sites(&self) -> usize {
        self.masked
    }

    /// Largest imaginary residue over unmasked sites; should sit at rounding
    /// level for healthy inputs.
    pub fn max_imag(&self) -> f64 {
        let (lo, hi) = self.valid_j();
        let mut m: f64 = 0.0;
        for j in lo..=hi {
            for p in 0..self.lat().p_sites() as i64 {
                let v = self.values.get(j, p);
                if v.is_finite() {
                    m = m.max(v.im.abs());
                }
            }
        }
        m
    }

    /// Largest |self − other| over the common valid range, ignoring masked
    /// sites.
    pub fn max_abs_diff(&self, other: &CurvatureField) -> f64 {
        let (lo_a, hi_a) = self.valid_j();
        let (lo_b, hi_b) = other.valid_j();
        let (lo, hi) = (lo_a.max(lo_b), hi_a.min(hi_b));
        let mut m: f64 = 0.0;
        for j in lo..=hi {
            for p in 0..self.lat().p_sites() as i64 {
                let a = self.values.get(j, p);
                let b = other.values.get(j, p);
                if a.is_finite() && b.is_finite() {
                    m = m.max((a - b).norm());
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        let (lo, hi) = self.valid_j();
        let mut m: f64 = 0.0;
        for j in lo..=hi {
            for p in 0..self.lat().p_sites() as i64 {
                let v = self.values.get(j, p);
                if v.is_finite() {
                    m = m.max(v.norm());
                }
            }
        }
        m
    }
}

const NANC: C64 = C64::new(f64::NAN, f64::NAN);

/// The branch-difference of diagonal ratios feeding ρˢ.
fn diag_ratio_field(
    num: &crate::field::MatrixField,
    den: &crate::field::MatrixField,
) -> Result<ComplexField, FieldError> {
    let lo = num.valid_j().0.max(den.valid_j().0);
    let hi = num.valid_j().1.min(den.valid_j().1);
    if lo > hi {
        return Err(FieldError::EmptyRange {
            hi: num.valid_j().1,
            need: den.valid_j().0,
        });
    }
    Ok(ComplexField::from_fn_filled(
        num.lat(),
        (lo, hi),
        NANC,
        |j, p| {
            let n = num.get(j, p);
            let d = den.get(j, p);
            let (d_mm, d_pp) = (d.e[0][0], d.e[1][1]);
            if d_mm.norm() == 0.0 || d_pp.norm() == 0.0 {
                return NANC;
            }
            n.e[0][0] / d_mm - n.e[1][1] / d_pp
        },
    ))
}

fn rho_from_parts(
    a0: &crate::field::MatrixField,
    a1: &crate::field::MatrixField,
    b0: &crate::field::MatrixField,
    b1: &crate::field::MatrixField,
) -> Result<CurvatureField, CurvatureError> {
    let phi_b = diag_ratio_field(b0, b1)?;
    let phi_a = diag_ratio_field(a0, a1)?;
    let dj_b = d_j(&phi_b)?;
    let dp_a = d_p(&phi_a);
    let lo = dj_b.valid_j().0.max(dp_a.valid_j().0);
    let hi = dj_b.valid_j().1.min(dp_a.valid_j().1);
    let values = ComplexField::from_fn_filled(a0.lat(), (lo, hi), NANC, |j, p| {
        (dj_b.get(j, p) - dp_a.get(j, p)) * 0.5
    });
    Ok(CurvatureField::from_complex(values))
}

/// ρˢ(0) of the walk connection.
pub fn rho_slow(conn: &WalkConnection) -> Result<CurvatureField, CurvatureError> {
    rho_from_parts(&conn.time.a0, &conn.time.a1, &conn.space.b0, &conn.space.b1)
}

/// ρˢ(Λ): the boosted 0-components over the *unboosted* 1-components.
pub fn rho_slow_transformed(
    conn: &WalkConnection,
    lambda: &LorentzField,
) -> Result<CurvatureField, CurvatureError> {
    let (time_b, space_b) = boost_connection(&conn.time, &conn.space, lambda)?;
    rho_from_parts(&time_b.a0, &conn.time.a1, &space_b.b0, &conn.space.b1)
}

/// ρ*(0) against a reference connection:
/// −D_p L_j(𝒜*, 𝒜) + D_j L_p(ℬ*, ℬ).
pub fn rho_star(
    conn: &WalkConnection,
    a_ref: &TimeConnection,
    b_ref: &SpaceConnection,
) -> Result<CurvatureField, CurvatureError> {
    let lj = recover_dj_lambda(a_ref, &conn.time)?;
    let lp = recover_dp_lambda(b_ref, &conn.space)?;
    let dp_lj = d_p(&lj.values);
    let dj_lp = d_j(&lp.values)?;
    let lo = dp_lj.valid_j().0.max(dj_lp.valid_j().0);
    let hi = dp_lj.valid_j().1.min(dj_lp.valid_j().1);
    if lo > hi {
        return Err(CurvatureError::Field(FieldError::EmptyRange {
            hi: dp_lj.valid_j().1,
            need: lo,
        }));
    }
    let values = ComplexField::from_fn_filled(conn.time.a0.lat(), (lo, hi), NANC, |j, p| {
        dj_lp.get(j, p) - dp_lj.get(j, p)
    });
    Ok(CurvatureField::from_complex(values))
}

/// Contract the frame indices with the inverse 2-bein:
/// ρ_coord = ρ · (E⁰_j E¹_p − E⁰_p E¹_j).
pub fn mixed_to_coordinate(
    rho: &CurvatureField,
    geom: &GeometryField,
) -> Result<CurvatureField, CurvatureError> {
    let (lo, hi) = rho.valid_j();
    let ghi = geom.valid_j().1;
    let hi = hi.min(ghi);
    if lo > hi {
        return Err(CurvatureError::Field(FieldError::EmptyRange {
            hi: rho.valid_j().1,
            need: lo,
        }));
    }
    let values = ComplexField::from_fn_filled(rho.lat(), (lo, hi), NANC, |j, p| {
        match geom.site(j, p) {
            Ok(site) => {
                let e = &site.metric.e_inv;
                rho.complex(j, p) * (e[0][0] * e[1][1] - e[0][1] * e[1][0])
            }
            Err(_) => NANC,
        }
    });
    Ok(CurvatureField::from_complex(values))
}

/// The single 2D contraction of the coordinate curvature:
/// scalar = 2 μ² ρ_coord = −2 det(g^{μν}) ρ_coord.
///
/// Sign convention: for the synchronous continuum metric diag(1, −a²) this
/// gives scalar/(ε²/2) → 2ä/a, positive for an accelerating scale factor.
pub fn ricci_scalar(
    rho_coord: &CurvatureField,
    geom: &GeometryField,
) -> Result<CurvatureField, CurvatureError> {
    let (lo, hi) = rho_coord.valid_j();
    let hi = hi.min(geom.valid_j().1);
    let values = ComplexField::from_fn_filled(rho_coord.lat(), (lo, hi), NANC, |j, p| {
        match geom.site(j, p) {
            Ok(site) => {
                let mu = site.metric.mu;
                rho_coord.complex(j, p) * (2.0 * mu * mu)
            }
            Err(_) => NANC,
        }
    });
    Ok(CurvatureField::from_complex(values))
}

/// Analytic reference for time-only profiles: the metric diag(1, −a²) with
/// a = 1/cos θ has spin connection ω(t) = ȧ and mixed Riemann component
/// ∂_t ω = ä. Derivatives are taken by 5-point central differences on the
/// parsed expression, accurate to ~1e−10 — far below every tolerance that
/// consumes them.
#[derive(Clone, Debug)]
pub struct ContinuousOracle {
    source: OracleSource,
}

#[derive(Clone, Debug)]
enum OracleSource {
    /// a(t) = 1/cos θ(t) from a coin-angle profile.
    FromTheta(ThetaSpec),
    /// a(t) given directly.
    ScaleFactor(ThetaSpec),
}

impl ContinuousOracle {
    pub fn from_theta(theta: &ThetaSpec) -> Result<ContinuousOracle, CurvatureError> {
        if theta.kind() == ThetaKind::Full {
            return Err(CurvatureError::ThetaDependsOnX);
        }
        Ok(ContinuousOracle {
            source: OracleSource::FromTheta(theta.clone()),
        })
    }

    pub fn from_scale_factor(a: &ThetaSpec) -> Result<ContinuousOracle, CurvatureError> {
        if a.kind() == ThetaKind::Full {
            return Err(CurvatureError::ThetaDependsOnX);
        }
        Ok(ContinuousOracle {
            source: OracleSource::ScaleFactor(a.clone()),
        })
    }

    pub fn scale_factor(&self, t: f64) -> Result<f64, ThetaError> {
        match &self.source {
            OracleSource::FromTheta(spec) => {
                let theta = spec.eval_at(t, 0.0)?;
                let c = theta.cos();
                if c == 0.0 {
                    return Err(ThetaError::EvalAt {
                        t,
                        x: 0.0,
                        message: "cos theta vanishes; scale factor 1/cos theta undefined".into(),
                    });
                }
                Ok(1.0 / c)
            }
            OracleSource::ScaleFactor(spec) => spec.eval_at(t, 0.0),
        }
    }

    pub fn a_dot(&self, t: f64) -> Result<f64, ThetaError> {
        let h = 1e-3 * t.abs().max(1.0);
        let f = |u: f64| self.scale_factor(u);
        Ok((-f(t + 2.0 * h)? + 8.0 * f(t + h)? - 8.0 * f(t - h)? + f(t - 2.0 * h)?)
            / (12.0 * h))
    }

    pub fn a_ddot(&self, t: f64) -> Result<f64, ThetaError> {
        let h = 1e-3 * t.abs().max(1.0);
        let f = |u: f64| self.scale_factor(u);
        Ok((-f(t + 2.0 * h)? + 16.0 * f(t + h)? - 30.0 * f(t)? + 16.0 * f(t - h)?
            - f(t - 2.0 * h)?)
            / (12.0 * h * h))
    }

    /// ω_{101}(t) = ȧ for the synchronous metric.
    pub fn spin_connection(&self, t: f64) -> Result<f64, ThetaError> {
        self.a_dot(t)
    }

    /// 𝓡_{0101}(t) = ∂_t ω_{101} = ä.
    pub fn riemann_mixed(&self, t: f64) -> Result<f64, ThetaError> {
        self.a_ddot(t)
    }

    /// The value ρˢ/ε² converges to (orientation included).
    pub fn rho_limit(&self, t: f64) -> Result<f64, ThetaError> {
        Ok(RHO_CONTINUUM_SIGN * 0.5 * self.a_ddot(t)?)
    }
}

/// One lattice of a convergence sweep.
#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub j_probe: usize,
    /// ε·j_probe, the time actually probed.
    pub t_actual: f64,
    /// ρˢ/ε² at the probe; `None` when the probe site was masked.
    pub rho_over_eps2: Option<f64>,
    pub oracle: f64,
    pub error: Option<f64>,
    /// Observed order against the previous row.
    pub observed_order: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Richardson extrapolation from the two finest rows.
    pub extrapolated: Option<f64>,
    pub oracle_at_probe: f64,
}

/// Sweep ε over decreasing values, compute ρˢ at the slice nearest `t_probe`
/// on each lattice, and compare against the continuum oracle.
pub fn convergence_study(
    theta: &ThetaSpec,
    eps_list: &[f64],
    t_probe: f64,
    p_sites: usize,
) -> Result<ConvergenceStudy, CurvatureError> {
    if theta.kind() == ThetaKind::Full {
        return Err(CurvatureError::ThetaDependsOnX);
    }
    let ok = !eps_list.is_empty()
        && eps_list.iter().all(|e| *e > 0.0)
        && eps_list.windows(2).all(|w| w[1] < w[0]);
    if !ok {
        return Err(CurvatureError::BadEpsList(eps_list.to_vec()));
    }
    let oracle = ContinuousOracle::from_theta(theta)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &eps in eps_list {
        let j_probe = (t_probe / eps).round().max(0.0) as usize;
        let j_slices = j_probe + 8;
        let lat = Lattice::new(p_sites, j_slices, eps)?;
        let angle = build_angle_field(theta, lat)?;
        let (_, conn) = WalkConnection::build(&angle)?;
        let rho = rho_slow(&conn)?;
        if j_probe > rho.valid_j().1 {
            return Err(CurvatureError::ProbeOutOfRange {
                t_probe,
                j_probe,
                hi: rho.valid_j().1,
            });
        }
        let t_actual = eps * j_probe as f64;
        let oracle_val = oracle.rho_limit(t_actual)?;
        let value = rho.value(j_probe, 0).map(|v| v / (eps * eps));
        let error = value.map(|v| (v - oracle_val).abs());
        let observed_order = match (rows.last(), error) {
            (Some(prev), Some(err)) => match (prev.error, err) {
                (Some(pe), e) if pe > 0.0 && e > 0.0 => {
                    Some((pe / e).ln() / (prev.eps / eps).ln())
                }
                _ => None,
            },
            _ => None,
        };
        rows.push(ConvergenceRow {
            eps,
            j_probe,
            t_actual,
            rho_over_eps2: value,
            oracle: oracle_val,
            error,
            observed_order,
        });
    }
    let extrapolated = richardson(&rows);
    let oracle_at_probe = oracle.rho_limit(t_probe)?;
    Ok(ConvergenceStudy {
        rows,
        extrapolated,
        oracle_at_probe,
    })
}

/// Richardson extrapolation from the finest rows, independent of the
/// oracle: the convergence order is estimated from the differences of the
/// computed values themselves (three-point rule when the last two refinement
/// ratios agree, first order otherwise).
fn richardson(rows: &[ConvergenceRow]) -> Option<f64> {
    if rows.len() < 2 {
        return rows.last().and_then(|r| r.rho_over_eps2);
    }
    let fine = rows.last()?;
    let mid = &rows[rows.len() - 2];
    let (f, m) = (fine.rho_over_eps2?, mid.rho_over_eps2?);
    let r = mid.eps / fine.eps;
    let mut p = 1.0;
    if rows.len() >= 3 {
        let coarse = &rows[rows.len() - 3];
        let c = coarse.rho_over_eps2?;
        let r_prev = coarse.eps / mid.eps;
        let (d_coarse, d_fine) = (c - m, m - f);
        if (r_prev - r).abs() < 1e-12 && d_fine != 0.0 && (d_coarse / d_fine) > 0.0 {
            p = (d_coarse / d_fine).ln() / r.ln();
        }
    }
    Some(f + (f - m) / (r.powf(p) - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AngleField;

    fn scale_factor_theta() -> ThetaSpec {
        ThetaSpec::parse("arccos(1/(1+0.1*sin(t)))").unwrap()
    }

    fn build(theta: &AngleField) -> (GeometryField, WalkConnection) {
        WalkConnection::build(theta).unwrap()
    }

    #[test]
    fn constant_coin_is_flat() {
        for theta0 in [0.0, 0.4, -0.9] {
            let lat = Lattice::new(8, 10, 0.1).unwrap();
            let angle = AngleField::constant(lat, theta0);
            let (_, conn) = build(&angle);
            let rho = rho_slow(&conn).unwrap();
            assert_eq!(rho.masked_sites(), 0);
            assert!(rho.max_abs() < 1e-13, "theta={theta0}: {}", rho.max_abs());
        }
    }

    #[test]
    fn time_only_curvature_equals_dj_of_closed_form() {
        // For a j-only angle, ρˢ must equal D_j of the closed-form diagonal
        // space-connection entry
        //   b(j) = |c|^{-1/2}(κ D_j(|c|^{-1/2}κ) + σ D_j(|c|^{-1/2}σ))
        //        − (cos Δθ − 1)/(2|c|)
        // evaluated with the same stride-2 stencils.
        let eps = 0.05;
        let lat = Lattice::new(8, 44, eps).unwrap();
        let spec = scale_factor_theta();
        let angle = build_angle_field(&spec, lat).unwrap();
        let (_, conn) = build(&angle);
        let rho = rho_slow(&conn).unwrap();

        let theta_j = |j: usize| angle.get(j, 0);
        let c = |j: usize| theta_j(j).cos();
        let kappa = |j: usize| (theta_j(j + 1) / 2.0).cos();
        let sigma = |j: usize| (theta_j(j + 1) / 2.0).sin();
        let u = |j: usize| c(j).abs().powf(-0.5) * sigma(j);
        let v = |j: usize| c(j).abs().powf(-0.5) * kappa(j);
        let b_closed = |j: usize| {
            let dju = 0.5 * (u(j + 2) - u(j));
            let djv = 0.5 * (v(j + 2) - v(j));
            let dtheta = theta_j(j + 1) - theta_j(j);
            c(j).abs().powf(-0.5) * (kappa(j) * djv + sigma(j) * dju)
                - (dtheta.cos() - 1.0) / (2.0 * c(j).abs())
        };
        let (lo, hi) = rho.valid_j();
        for j in lo..=hi {
            let expect = 0.5 * (b_closed(j + 2) - b_closed(j));
            for p in 0..8 {
                let got = rho.value(j, p).unwrap();
                assert!(
                    (got - expect).abs() < 1e-12,
                    "j={j} p={p}: {got} vs {expect}"
                );
            }
        }
        assert!(rho.max_imag() < 1e-14);
    }

    #[test]
    fn constant_boost_leaves_rho_unchanged_exactly() {
        let lat = Lattice::new(8, 12, 0.1).unwrap();
        let angle = build_angle_field(&scale_factor_theta(), lat).unwrap();
        let (_, conn) = build(&angle);
        let rho0 = rho_slow(&conn).unwrap();
        let lam = LorentzField::constant(lat, 0.4).unwrap();
        let rho_b = rho_slow_transformed(&conn, &lam).unwrap();
        assert!(rho0.max_abs_diff(&rho_b) < 1e-14);
    }

    /// Smooth p-only boost profile used in the scaling tests: dominated by
    /// even orders, so the gauge gap scales cleanly as h².
    fn spatial_lambda(lat: Lattice, h: f64) -> LorentzField {
        let p_sites = lat.p_sites() as f64;
        LorentzField::from_fn(lat, (0, lat.j_slices() - 1), |_, p| {
            h * (2.0 * std::f64::consts::PI * p as f64 / p_sites).sin()
        })
        .unwrap()
    }

    #[test]
    fn gauge_gap_shrinks_quadratically() {
        let lat = Lattice::new(16, 14, 0.1).unwrap();
        let angle = build_angle_field(&scale_factor_theta(), lat).unwrap();
        let (_, conn) = build(&angle);
        let rho0 = rho_slow(&conn).unwrap();
        let mut gaps = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let lam = spatial_lambda(lat, h);
            let rho_b = rho_slow_transformed(&conn, &lam).unwrap();
            gaps.push(rho0.max_abs_diff(&rho_b));
        }
        let o1 = (gaps[0] / gaps[1]).log2();
        let o2 = (gaps[1] / gaps[2]).log2();
        assert!(o1 >= 2.0 && o2 >= 2.0, "orders {o1:.3}/{o2:.3}, gaps {gaps:?}");
    }

    #[test]
    fn fast_large_boosts_break_invariance_visibly() {
        // Outside the slow regime the gauge gap is not expected to vanish;
        // it just gets reported. Pin that it is far above rounding noise.
        let lat = Lattice::new(16, 14, 0.1).unwrap();
        let angle = build_angle_field(&scale_factor_theta(), lat).unwrap();
        let (_, conn) = build(&angle);
        let rho0 = rho_slow(&conn).unwrap();
        let lam = LorentzField::from_fn(lat, (0, 13), |j, p| {
            2.0 * ((p * p + 3 * j as i64) % 7) as f64 / 7.0 - 1.0
        })
        .unwrap();
        let rho_b = rho_slow_transformed(&conn, &lam).unwrap();
        let gap = rho0.max_abs_diff(&rho_b);
        assert!(gap > 1e-2, "expected a visible violation, got {gap:e}");
    }

    #[test]
    fn identical_reference_gives_zero_rho_star() {
        let lat = Lattice::new(8, 12, 0.1).unwrap();
        let angle = build_angle_field(&scale_factor_theta(), lat).unwrap();
        let (_, conn) = build(&angle);
        let rho = rho_star(&conn, &conn.time, &conn.space).unwrap();
        assert_eq!(rho.masked_sites(), 0);
        assert!(rho.max_abs() < 1e-13);
    }

    #[test]
    fn rho_star_approximates_rho_slow_difference() {
        let lat = Lattice::new(16, 14, 0.1).unwrap();
        let angle = build_angle_field(&scale_factor_theta(), lat).unwrap();
        let (_, conn) = build(&angle);
        let rho0 = rho_slow(&conn).unwrap();
        let mut gaps = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let lam = spatial_lambda(lat, h);
            let (a_ref, b_ref) = boost_connection(&conn.time, &conn.space, &lam).unwrap();
            let star = rho_star(&conn, &a_ref, &b_ref).unwrap();
            let rho_l = rho_slow_transformed(&conn, &lam).unwrap();
            // gap between ρ*(0) and ρˢ(0) − ρˢ(Λ*)
            let (lo, hi) = star.valid_j();
            let mut gap: f64 = 0.0;
            for j in lo..=hi {
                for p in 0..16 {
                    let lhs = star.value(j, p).unwrap();
                    let rhs = rho0.value(j, p).unwrap() - rho_l.value(j, p).unwrap();
                    gap = gap.max((lhs - rhs).abs());
                }
            }
            gaps.push(gap);
        }
        let o1 = (gaps[0] / gaps[1]).log2();
        let o2 = (gaps[1] / gaps[2]).log2();
        assert!(o1 >= 2.0 && o2 >= 2.0, "orders {o1:.3}/{o2:.3}, gaps {gaps:?}");
    }

    #[test]
    fn flat_reference_special_case() {
        // Flat connection boosted by Λ*: ρ*(0) lands on −ρˢ(Λ*) up to O(Λ*²).
        // Λ* varies in both directions so that ρˢ(Λ*) itself is nonzero.
        let lat = Lattice::new(16, 14, 0.1).unwrap();
        let angle = AngleField::constant(lat, 0.3);
        let (_, conn) = build(&angle);
        let mut gaps = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let lam = LorentzField::from_fn(lat, (0, 13), |j, p| {
                let u = 2.0 * std::f64::consts::PI * p as f64 / 16.0;
                let v = std::f64::consts::PI * j as f64 / 14.0;
                h * u.sin() * (1.0 + 0.5 * v.sin())
            })
            .unwrap();
            let (a_ref, b_ref) = boost_connection(&conn.time, &conn.space, &lam).unwrap();
            let star = rho_star(&conn, &a_ref, &b_ref).unwrap();
            let rho_l = rho_slow_transformed(&conn, &lam).unwrap();
            let (lo, hi) = star.valid_j();
            let mut gap: f64 = 0.0;
            let mut boosted_mag: f64 = 0.0;
            for j in lo..=hi {
                for p in 0..16 {
                    let lhs = star.value(j, p).unwrap();
                    let rhs = -rho_l.value(j, p).unwrap();
                    gap = gap.max((lhs - rhs).abs());
                    boosted_mag = boosted_mag.max(rhs.abs());
                }
            }
            assert!(boosted_mag > 0.0);
            gaps.push(gap);
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps {gaps:?}");
        assert!((gaps[0] / gaps[1]).log2() >= 1.9, "gaps {gaps:?}");
    }

    #[test]
    fn coordinate_contraction_scales_by_inverse_zweibein() {
        let lat = Lattice::new(8, 20, 0.05).unwrap();
        let angle = build_angle_field(&scale_factor_theta(), lat).unwrap();
        let (geom, conn) = build(&angle);
        let rho = rho_slow(&conn).unwrap();
        let coord = mixed_to_coordinate(&rho, &geom).unwrap();
        let (lo, hi) = coord.valid_j();
        for j in lo..=hi {
            let c = angle.get(j, 0).cos().abs();
            for p in 0..8 {
                let expect = rho.value(j, p).unwrap() / c;
                assert!((coord.value(j, p).unwrap() - expect).abs() < 1e-13);
            }
        }
        // flat sites leave the value unchanged, zero stays zero
        let flat = AngleField::constant(lat, 0.0);
        let (geom_f, conn_f) = build(&flat);
        let rho_f = rho_slow(&conn_f).unwrap();
        let coord_f = mixed_to_coordinate(&rho_f, &geom_f).unwrap();
        assert!(coord_f.max_abs() < 1e-13);
    }

    #[test]
    fn ricci_scalar_constant_curvature_profile() {
        // a(t) = cosh t has 2ä/a = 2 exactly in the continuum; the discrete
        // scalar normalized by ε²/2 must approach a constant 2.
        let eps = 0.02;
        let lat = Lattice::new(8, 60, eps).unwrap();
        let spec = ThetaSpec::parse("arccos(1/cosh(t))").unwrap();
        let angle = build_angle_field(&spec, lat).unwrap();
        let (geom, conn) = build(&angle);
        let rho = rho_slow(&conn).unwrap();
        let coord = mixed_to_coordinate(&rho, &geom).unwrap();
        let scalar = ricci_scalar(&coord, &geom).unwrap();
        let (lo, hi) = scalar.valid_j();
        for j in [lo + 10, (lo + hi) / 2, hi - 4] {
            let v = scalar.value(j, 0).unwrap() / (eps * eps / 2.0);
            assert!((v - 2.0).abs() < 0.1, "slice {j}: normalized scalar {v}");
        }
        // flat case
        let flat = AngleField::constant(lat, 0.2);
        let (geom_f, conn_f) = build(&flat);
        let rho_f = rho_slow(&conn_f).unwrap();
        let coord_f = mixed_to_coordinate(&rho_f, &geom_f).unwrap();
        let scalar_f = ricci_scalar(&coord_f, &geom_f).unwrap();
        assert!(scalar_f.max_abs() < 1e-13);
    }

    #[test]
    fn oracle_derivatives_match_analytic_values() {
        let oracle = ContinuousOracle::from_theta(&scale_factor_theta()).unwrap();
        for t in [0.3, 1.0, 2.0] {
            // a = 1 + 0.1 sin t exactly
            assert!((oracle.scale_factor(t).unwrap() - (1.0 + 0.1 * t.sin())).abs() < 1e-12);
            assert!((oracle.a_dot(t).unwrap() - 0.1 * t.cos()).abs() < 1e-9);
            assert!((oracle.a_ddot(t).unwrap() + 0.1 * t.sin()).abs() < 1e-8);
            assert!(
                (oracle.riemann_mixed(t).unwrap() - oracle.a_ddot(t).unwrap()).abs() < 1e-15
            );
        }
        let direct = ContinuousOracle::from_scale_factor(
            &ThetaSpec::parse("1+0.1*sin(t)").unwrap(),
        )
        .unwrap();
        assert!((direct.a_ddot(1.0).unwrap() + 0.1 * 1.0f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn trivial_profile_converges_exactly() {
        let spec = ThetaSpec::parse("0").unwrap();
        let study = convergence_study(&spec, &[0.1, 0.05], 1.0, 8).unwrap();
        for row in &study.rows {
            assert_eq!(row.error.map(|e| e == 0.0), Some(true));
        }
    }

    #[test]
    fn sinusoidal_profile_converges_with_order_at_least_one() {
        let study =
            convergence_study(&scale_factor_theta(), &[0.1, 0.05, 0.025], 2.0, 8).unwrap();
        let errs: Vec<f64> = study.rows.iter().map(|r| r.error.unwrap()).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "errors {errs:?}");
        for row in &study.rows[1..] {
            assert!(row.observed_order.unwrap() >= 1.0, "row {row:?}");
        }
        // The extrapolation should land well within 1% of the oracle.
        let ext = study.extrapolated.unwrap();
        let rel = (ext - study.oracle_at_probe).abs() / study.oracle_at_probe.abs();
        assert!(rel < 0.01, "extrapolated {ext} vs {}", study.oracle_at_probe);
    }

    #[test]
    fn richardson_window_is_stable() {
        let a = convergence_study(&scale_factor_theta(), &[0.1, 0.05, 0.025], 2.0, 8).unwrap();
        let b =
            convergence_study(&scale_factor_theta(), &[0.05, 0.025, 0.0125], 2.0, 8).unwrap();
        let (ea, eb) = (a.extrapolated.unwrap(), b.extrapolated.unwrap());
        assert!(
            (ea - eb).abs() <= 0.01 * a.oracle_at_probe.abs(),
            "window extrapolations {ea} vs {eb}"
        );
    }

    #[test]
    fn eps_list_validation() {
        let spec = scale_factor_theta();
        assert!(convergence_study(&spec, &[], 1.0, 8).is_err());
        assert!(convergence_study(&spec, &[0.1, 0.2], 1.0, 8).is_err());
        assert!(convergence_study(&spec, &[0.1, -0.05], 1.0, 8).is_err());
        let full = ThetaSpec::parse("t*x").unwrap();
        assert!(matches!(
            convergence_study(&full, &[0.1], 1.0, 8),
            Err(CurvatureError::ThetaDependsOnX)
        ));
    }
}
