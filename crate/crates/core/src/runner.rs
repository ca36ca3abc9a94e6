//! Mode dispatch for the batch driver.
//!
//! Each mode turns a validated [`RunConfig`] into one or more tables in the
//! output directory:
//!
//! * `simulate`   — per-slice flat norms (plus full state dumps on request),
//! * `geometry`   — transport velocities, inverse metric, volume density and
//!   the degeneracy mask per site,
//! * `connection` — diagonal 0-components of the space-time connection and
//!   the mass entries per site,
//! * `curvature`  — ρˢ (and ρ* when a boost profile Λ* is configured),
//! * `converge`   — the ε-sweep table of the continuum harness.
//!
//! All computation is deterministic for a fixed config; randomness only
//! enters through explicit seeds.

use std::path::PathBuf;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::config::{
    InitialKind, ModeName, OutputFormat, RunConfig, SpinComponent, ThetaSectionKind,
};
use crate::connection::{ConnectionError, WalkConnection};
use crate::curvature::{convergence_study, rho_slow, rho_star, CurvatureError, CurvatureField};
use crate::field::{AngleField, Basis, SpinorSlice};
use crate::geometry::GeometryField;
use crate::lattice::{Lattice, LatticeError};
use crate::lorentz::{boost_connection, LorentzError, LorentzField};
use crate::output::{Cell, OutputError, Table};
use crate::theta::{build_angle_field, eval_theta, ThetaError};
use crate::walk::{run as walk_run, WalkError};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeomError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Lorentz(#[from] LorentzError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("cannot create output directory {path}: {source}")]
    OutDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot read initial state {path}: {message}")]
    InitialState { path: PathBuf, message: String },
    #[error("mode {mode:?} needs {what}")]
    MissingParameter { mode: ModeName, what: &'static str },
}

/// What a run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

pub fn run_mode(cfg: &RunConfig) -> Result<RunSummary, RunnerError> {
    let lat = Lattice::new(cfg.lattice.p, cfg.lattice.j, cfg.lattice.eps)?;
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir).map_err(|source| RunnerError::OutDir {
        path: dir.clone(),
        source,
    })?;
    let mut files = Vec::new();
    let mut notes = Vec::new();

    let theta = angle_field(cfg, lat)?;
    let format = cfg.output.format;
    let meta_base = |valid: (usize, usize)| -> Vec<(&'static str, String)> {
        vec![
            ("P", lat.p_sites().to_string()),
            ("J", lat.j_slices().to_string()),
            ("eps", format!("{}", lat.eps())),
            ("valid_j", format!("{}..{}", valid.0, valid.1)),
            ("mode", format!("{:?}", cfg.mode.name).to_lowercase()),
        ]
    };

    match cfg.mode.name {
        ModeName::Simulate => {
            let n_steps = cfg.mode.n_steps.unwrap_or(lat.j_slices() - 1);
            let psi0 = initial_state(cfg, lat)?;
            let hist = walk_run(psi0, &theta, n_steps)?;
            let mut norms = Table::new("norms", &["j", "norm", "drift"]);
            let n0 = hist.norms()[0];
            for (j, n) in hist.norms().iter().enumerate() {
                norms.push(vec![
                    Cell::Int(j as i64),
                    Cell::Float(*n),
                    Cell::Float(n - n0),
                ]);
            }
            let meta = meta_base((0, n_steps));
            files.push(norms.write(format, &dir, &meta)?);
            notes.push(format!("max norm drift {:e}", hist.max_norm_drift()));

            let want_states = cfg
                .output
                .fields
                .as_ref()
                .is_some_and(|f| f.iter().any(|s| s == "states"));
            if want_states {
                let mut states = Table::new("states", &["j", "p", "re_l", "im_l", "re_r", "im_r"]);
                for j in 0..hist.n_slices() {
                    let slice = hist.slice(j);
                    for p in 0..lat.p_sites() as i64 {
                        let v = slice.get(p);
                        states.push(vec![
                            Cell::Int(j as i64),
                            Cell::Int(p),
                            Cell::Float(v[0].re),
                            Cell::Float(v[0].im),
                            Cell::Float(v[1].re),
                            Cell::Float(v[1].im),
                        ]);
                    }
                }
                files.push(states.write(format, &dir, &meta)?);
            }
        }
        ModeName::Geometry => {
            let geom = GeometryField::build(&theta)?;
            let mut t = Table::new(
                "geometry",
                &[
                    "j", "p", "x_minus", "x_plus", "g00", "g01", "g11", "mu", "degenerate",
                ],
            );
            let (lo, hi) = geom.valid_j();
            for j in lo..=hi {
                for p in 0..lat.p_sites() as i64 {
                    match geom.site(j, p) {
                        Ok(s) => t.push(vec![
                            Cell::Int(j as i64),
                            Cell::Int(p),
                            Cell::Float(s.x_minus),
                            Cell::Float(s.x_plus),
                            Cell::Float(s.metric.g00),
                            Cell::Float(s.metric.g01),
                            Cell::Float(s.metric.g11),
                            Cell::Float(s.metric.mu),
                            Cell::Text(String::new()),
                        ]),
                        Err(e) => t.push(vec![
                            Cell::Int(j as i64),
                            Cell::Int(p),
                            Cell::Float(f64::NAN),
                            Cell::Float(f64::NAN),
                            Cell::Float(f64::NAN),
                            Cell::Float(f64::NAN),
                            Cell::Float(f64::NAN),
                            Cell::Float(f64::NAN),
                            Cell::Text(match e {
                                crate::geometry::GeomError::Degenerate { kind, .. } => {
                                    format!("{kind:?}")
                                }
                                other => format!("{other}"),
                            }),
                        ]),
                    }
                }
            }
            notes.push(format!("degenerate sites: {}", geom.degenerate_count()));
            files.push(t.write(format, &dir, &meta_base(geom.valid_j()))?);
        }
        ModeName::Connection => {
            let (_, conn) = WalkConnection::build(&theta)?;
            let mut t = Table::new(
                "connection",
                &[
                    "j", "p", "a0_re", "a0_im", "b0_re", "b0_im", "m_mp_re", "m_mp_im", "m_pm_re",
                    "m_pm_im",
                ],
            );
            let (lo, hi) = conn.valid_j();
            for j in lo..=hi {
                for p in 0..lat.p_sites() as i64 {
                    let a = conn.time.a0.get(j, p).e[0][0];
                    let b = conn.space.b0.get(j, p).e[0][0];
                    let m = conn.mass.get(j, p);
                    t.push(vec![
                        Cell::Int(j as i64),
                        Cell::Int(p),
                        Cell::Float(a.re),
                        Cell::Float(a.im),
                        Cell::Float(b.re),
                        Cell::Float(b.im),
                        Cell::Float(m.e[0][1].re),
                        Cell::Float(m.e[0][1].im),
                        Cell::Float(m.e[1][0].re),
                        Cell::Float(m.e[1][0].im),
                    ]);
                }
            }
            if conn.solve_failures > 0 {
                notes.push(format!("solve failures: {}", conn.solve_failures));
            }
            files.push(t.write(format, &dir, &meta_base(conn.valid_j()))?);
        }
        ModeName::Curvature => {
            let (_, conn) = WalkConnection::build(&theta)?;
            let rho = rho_slow(&conn)?;
            let star = match &cfg.mode.lambda_star {
                Some(src) => {
                    let spec = crate::theta::ThetaSpec::parse(src)?;
                    let lam = LorentzField::from_fn(lat, (0, lat.j_slices() - 1), |j, p| {
                        eval_theta(&spec, &lat, j, p).unwrap_or(f64::NAN)
                    })?;
                    let (a_ref, b_ref) = boost_connection(&conn.time, &conn.space, &lam)?;
                    Some(rho_star(&conn, &a_ref, &b_ref)?)
                }
                None => None,
            };
            files.push(write_curvature(
                &rho,
                star.as_ref(),
                format,
                &dir,
                &meta_base(rho.valid_j()),
            )?);
            notes.push(format!(
                "masked sites: {}, max imaginary residue {:e}",
                rho.masked_sites(),
                rho.max_imag()
            ));
        }
        ModeName::Converge => {
            let spec = cfg
                .theta_spec()
                .ok()
                .flatten()
                .ok_or(RunnerError::MissingParameter {
                    mode: ModeName::Converge,
                    what: "a deterministic theta profile",
                })?;
            let eps_list = cfg
                .mode
                .eps_list
                .as_deref()
                .ok_or(RunnerError::MissingParameter {
                    mode: ModeName::Converge,
                    what: "eps_list",
                })?;
            let t_probe = cfg.mode.t_probe.ok_or(RunnerError::MissingParameter {
                mode: ModeName::Converge,
                what: "t_probe",
            })?;
            let study = convergence_study(&spec, eps_list, t_probe, lat.p_sites())?;
            let mut t = Table::new(
                "convergence",
                &[
                    "eps",
                    "j_probe",
                    "t_actual",
                    "rho_over_eps2",
                    "oracle",
                    "error",
                    "observed_order",
                ],
            );
            for row in &study.rows {
                t.push(vec![
                    Cell::Float(row.eps),
                    Cell::Int(row.j_probe as i64),
                    Cell::Float(row.t_actual),
                    Cell::Float(row.rho_over_eps2.unwrap_or(f64::NAN)),
                    Cell::Float(row.oracle),
                    Cell::Float(row.error.unwrap_or(f64::NAN)),
                    Cell::Float(row.observed_order.unwrap_or(f64::NAN)),
                ]);
            }
            let mut meta = meta_base((0, 0));
            meta.push((
                "extrapolated",
                crate::output::fmt_f64(study.extrapolated.unwrap_or(f64::NAN)),
            ));
            meta.push(("oracle_at_probe", format!("{}", study.oracle_at_probe)));
            files.push(t.write(format, &dir, &meta)?);
        }
    }
    Ok(RunSummary { files, notes })
}

fn write_curvature(
    rho: &CurvatureField,
    star: Option<&CurvatureField>,
    format: OutputFormat,
    dir: &std::path::Path,
    meta: &[(&str, String)],
) -> Result<PathBuf, RunnerError> {
    let mut columns = vec!["j", "p", "rho_s"];
    if star.is_some() {
        columns.push("rho_star");
    }
    let mut t = Table::new("curvature", &columns);
    let (lo, hi) = rho.valid_j();
    let (slo, shi) = star.map(|s| s.valid_j()).unwrap_or((lo, hi));
    let (lo, hi) = (lo.max(slo), hi.min(shi));
    for j in lo..=hi {
        for p in 0..rho.lat().p_sites() as i64 {
            let mut row = vec![
                Cell::Int(j as i64),
                Cell::Int(p),
                Cell::Float(rho.value(j, p).unwrap_or(f64::NAN)),
            ];
            if let Some(s) = star {
                row.push(Cell::Float(s.value(j, p).unwrap_or(f64::NAN)));
            }
            t.push(row);
        }
    }
    Ok(t.write(format, dir, meta)?)
}

/// The coin-angle field a config describes.
pub fn angle_field(cfg: &RunConfig, lat: Lattice) -> Result<AngleField, RunnerError> {
    match cfg.theta.kind {
        ThetaSectionKind::Random => {
            let seed = cfg.theta.seed.expect("validated");
            let amplitude = cfg.theta.amplitude.unwrap_or(1.0);
            Ok(AngleField::random(lat, seed, amplitude))
        }
        _ => {
            let spec = cfg
                .theta_spec()
                .expect("validated")
                .expect("non-random kind");
            Ok(build_angle_field(&spec, lat)?)
        }
    }
}

/// The initial spinor slice a config describes (walk basis, unit norm).
pub fn initial_state(cfg: &RunConfig, lat: Lattice) -> Result<SpinorSlice, RunnerError> {
    let p_sites = lat.p_sites();
    let init = &cfg.initial;
    let state = match init.kind {
        InitialKind::Point => {
            let position = init.position.unwrap_or(0);
            let mut s = SpinorSlice::zero(p_sites, Basis::Original);
            let amp = match init.component.unwrap_or(SpinComponent::Left) {
                SpinComponent::Left => [C64::ONE, C64::ZERO],
                SpinComponent::Right => [C64::ZERO, C64::ONE],
                SpinComponent::Both => {
                    let r = std::f64::consts::FRAC_1_SQRT_2;
                    [C64::from(r), C64::from(r)]
                }
            };
            s.set(position, amp);
            s
        }
        InitialKind::Gaussian => {
            let center = init.center.unwrap_or(p_sites as f64 / 2.0);
            let width = init.width.unwrap_or(p_sites as f64 / 8.0);
            let momentum = init.momentum.unwrap_or(0.0);
            let amp = (0..p_sites as i64)
                .map(|p| {
                    let d = p as f64 - center;
                    let envelope = (-d * d / (4.0 * width * width)).exp();
                    let phase = C64::new(0.0, momentum * p as f64).exp();
                    let v = envelope * phase;
                    [v, v]
                })
                .collect();
            SpinorSlice::new(Basis::Original, amp).normalized()
        }
        InitialKind::Uniform => {
            let amp = vec![[C64::ONE, C64::ONE]; p_sites];
            SpinorSlice::new(Basis::Original, amp).normalized()
        }
        InitialKind::Random => {
            use rand::Rng;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(init.seed.expect("validated"));
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
        InitialKind::File => {
            let path = init.path.clone().expect("validated");
            let text = std::fs::read_to_string(&path).map_err(|e| RunnerError::InitialState {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let mut s = SpinorSlice::zero(p_sites, Basis::Original);
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with('p') {
                    continue;
                }
                let parts: Vec<&str> = line.split(',').map(str::trim).collect();
                let parse = |s: &str| -> Result<f64, RunnerError> {
                    s.parse().map_err(|_| RunnerError::InitialState {
                        path: path.clone(),
                        message: format!("line {}: bad number `{s}`", lineno + 1),
                    })
                };
                if parts.len() != 5 {
                    return Err(RunnerError::InitialState {
                        path: path.clone(),
                        message: format!("line {}: expected p,re_l,im_l,re_r,im_r", lineno + 1),
                    });
                }
                let p = parse(parts[0])? as i64;
                s.set(
                    p,
                    [
                        C64::new(parse(parts[1])?, parse(parts[2])?),
                        C64::new(parse(parts[3])?, parse(parts[4])?),
                    ],
                );
            }
            s
        }
    };
    Ok(state)
}
