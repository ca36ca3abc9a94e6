//! Batch-run configuration.
//!
//! Experiments are described by a flat TOML file with five sections:
//!
//! ```toml
//! [lattice]
//! p = 64            # spatial sites, even
//! j = 48            # stored time slices
//! eps = 0.05        # lattice spacing
//!
//! [theta]
//! kind = "expression"              # constant | expression | scale_factor | random
//! expr = "arccos(1/(1+0.1*sin(t)))"
//!
//! [initial]                        # used by simulate; optional elsewhere
//! kind = "point"                   # point | gaussian | uniform | random | file
//! position = 0
//! component = "left"               # left | right | both
//!
//! [mode]
//! name = "simulate"                # simulate | geometry | connection | curvature | converge
//! n_steps = 40
//!
//! [output]
//! dir = "out"
//! format = "csv"                   # csv | json
//! ```
//!
//! Unknown keys are rejected. Semantic validation collects *all* violations
//! before reporting, so a config can be fixed in one pass. Randomness always
//! requires an explicit seed, which keeps identical configs bit-identical in
//! their outputs.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::lattice::Lattice;
use crate::theta::{ThetaKind, ThetaSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config syntax error: {0}")]
    Toml(String),
    #[error("invalid config:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub theta: ThetaSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub mode: ModeSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub p: usize,
    pub j: usize,
    pub eps: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSection {
    pub kind: ThetaSectionKind,
    /// Literal angle for `constant`.
    pub value: Option<f64>,
    /// Expression in t, x for `expression`.
    pub expr: Option<String>,
    /// Scale-factor expression a(t) for `scale_factor`; θ = arccos(1/a).
    pub a: Option<String>,
    /// Seed for `random`.
    pub seed: Option<u64>,
    /// Amplitude for `random` (radians, default 1.0).
    pub amplitude: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSectionKind {
    Constant,
    Expression,
    ScaleFactor,
    Random,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialKind,
    /// Site of the point state (default 0).
    pub position: Option<i64>,
    /// Component of the point state: left | right | both.
    pub component: Option<SpinComponent>,
    /// Gaussian packet parameters.
    pub center: Option<f64>,
    pub width: Option<f64>,
    pub momentum: Option<f64>,
    /// Seed for `random`.
    pub seed: Option<u64>,
    /// CSV state file for `file` (columns p,re_l,im_l,re_r,im_r).
    pub path: Option<PathBuf>,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            kind: InitialKind::Point,
            position: None,
            component: None,
            center: None,
            width: None,
            momentum: None,
            seed: None,
            path: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Point,
    Gaussian,
    Uniform,
    Random,
    File,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SpinComponent {
    Left,
    Right,
    Both,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub name: ModeName,
    /// simulate: number of steps (default J−1).
    pub n_steps: Option<usize>,
    /// curvature: optional boost profile Λ*(t,x) enabling the
    /// reference-connection curvature.
    pub lambda_star: Option<String>,
    /// converge: decreasing lattice spacings.
    pub eps_list: Option<Vec<f64>>,
    /// converge: probe time.
    pub t_probe: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Simulate,
    Geometry,
    Connection,
    Curvature,
    Converge,
}

impl std::str::FromStr for ModeName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simulate" => Ok(ModeName::Simulate),
            "geometry" => Ok(ModeName::Geometry),
            "connection" => Ok(ModeName::Connection),
            "curvature" => Ok(ModeName::Curvature),
            "converge" => Ok(ModeName::Converge),
            other => Err(format!(
                "unknown mode `{other}` (expected simulate|geometry|connection|curvature|converge)"
            )),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory (default "out").
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Extra artifacts: "states" dumps every stored slice in simulate mode.
    pub fields: Option<Vec<String>>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            format: OutputFormat::Csv,
            fields: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl RunConfig {
    /// Parse and fully validate a config file.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        let violations = cfg.validate();
        if violations.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(violations))
        }
    }

    /// Collect every semantic violation (empty means valid).
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Err(e) = Lattice::new(self.lattice.p, self.lattice.j, self.lattice.eps) {
            v.push(format!("[lattice] {e}"));
        }
        match self.theta_spec() {
            Ok(Some(_)) | Ok(None) => {}
            Err(e) => v.push(format!("[theta] {e}")),
        }
        if self.theta.kind == ThetaSectionKind::Random && self.theta.seed.is_none() {
            v.push("[theta] kind = \"random\" requires an explicit seed".into());
        }
        match self.mode.name {
            ModeName::Simulate => {
                if let Some(n) = self.mode.n_steps {
                    if self.lattice.j > 0 && n > self.lattice.j - 1 {
                        v.push(format!(
                            "[mode] n_steps = {n} exceeds J-1 = {}",
                            self.lattice.j - 1
                        ));
                    }
                }
                if self.initial.kind == InitialKind::Random && self.initial.seed.is_none() {
                    v.push("[initial] kind = \"random\" requires an explicit seed".into());
                }
                if self.initial.kind == InitialKind::File && self.initial.path.is_none() {
                    v.push("[initial] kind = \"file\" requires a path".into());
                }
            }
            ModeName::Converge => {
                match &self.mode.eps_list {
                    None => v.push("[mode] converge requires eps_list".into()),
                    Some(list) => {
                        let ok = !list.is_empty()
                            && list.iter().all(|e| *e > 0.0)
                            && list.windows(2).all(|w| w[1] < w[0]);
                        if !ok {
                            v.push(format!(
                                "[mode] eps_list must be nonempty, positive, strictly decreasing: {list:?}"
                            ));
                        }
                    }
                }
                if self.mode.t_probe.is_none() {
                    v.push("[mode] converge requires t_probe".into());
                }
                if self.theta.kind == ThetaSectionKind::Random {
                    v.push(
                        "[mode] converge needs a deterministic time profile, not random theta"
                            .into(),
                    );
                } else if let Ok(Some(spec)) = self.theta_spec() {
                    if spec.kind() == ThetaKind::Full {
                        v.push("[mode] converge needs a time-only theta profile".into());
                    }
                }
            }
            ModeName::Curvature => {
                if let Some(src) = &self.mode.lambda_star {
                    if let Err(e) = ThetaSpec::parse(src) {
                        v.push(format!("[mode] lambda_star: {e}"));
                    }
                }
            }
            _ => {}
        }
        v
    }

    /// The parsed coin-angle spec, `None` for the `random` family.
    pub fn theta_spec(&self) -> Result<Option<ThetaSpec>, String> {
        match self.theta.kind {
            ThetaSectionKind::Constant => {
                let value = self
                    .theta
                    .value
                    .ok_or("kind = \"constant\" requires value")?;
                Ok(Some(ThetaSpec::constant(value)))
            }
            ThetaSectionKind::Expression => {
                let expr = self
                    .theta
                    .expr
                    .as_deref()
                    .ok_or("kind = \"expression\" requires expr")?;
                ThetaSpec::parse(expr).map(Some).map_err(|e| e.to_string())
            }
            ThetaSectionKind::ScaleFactor => {
                let a = self
                    .theta
                    .a
                    .as_deref()
                    .ok_or("kind = \"scale_factor\" requires a")?;
                // validate a(t) on its own first for a pointed error
                ThetaSpec::parse(a).map_err(|e| e.to_string())?;
                ThetaSpec::parse(&format!("arccos(1/({a}))"))
                    .map(Some)
                    .map_err(|e| e.to_string())
            }
            ThetaSectionKind::Random => Ok(None),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[lattice]
p = 8
j = 6
eps = 0.1

[theta]
kind = "constant"
value = 0.3

[mode]
name = "geometry"
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.output.format, OutputFormat::Csv);
        assert_eq!(cfg.output_dir(), PathBuf::from("out"));
        assert_eq!(cfg.initial.kind, InitialKind::Point);
        assert!(cfg.theta_spec().unwrap().is_some());
    }

    #[test]
    fn odd_p_is_named_in_the_violation() {
        let cfg = MINIMAL.replace("p = 8", "p = 7");
        let err = RunConfig::from_toml(&cfg).unwrap_err();
        match err {
            ConfigError::Invalid(v) => {
                assert!(v.iter().any(|m| m.contains("P must be even")), "{v:?}")
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = MINIMAL.replace("eps = 0.1", "eps = 0.1\nwibble = 3");
        assert!(matches!(
            RunConfig::from_toml(&cfg),
            Err(ConfigError::Toml(_))
        ));
    }

    #[test]
    fn domain_problems_are_deferred_to_runtime() {
        // arccos(2+t) parses fine; the failure surfaces at evaluation.
        let cfg = MINIMAL
            .replace("kind = \"constant\"", "kind = \"expression\"")
            .replace("value = 0.3", "expr = \"arccos(2+t)\"");
        let cfg = RunConfig::from_toml(&cfg).unwrap();
        let spec = cfg.theta_spec().unwrap().unwrap();
        let lat = Lattice::new(8, 6, 0.1).unwrap();
        assert!(crate::theta::eval_theta(&spec, &lat, 0, 0).is_err());
    }

    #[test]
    fn violations_accumulate() {
        let text = r#"
[lattice]
p = 7
j = 2
eps = 0.1

[theta]
kind = "random"

[mode]
name = "converge"
"#;
        match RunConfig::from_toml(text).unwrap_err() {
            ConfigError::Invalid(v) => {
                assert!(v.len() >= 4, "want several violations, got {v:?}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn scale_factor_builds_arccos_profile() {
        let text = MINIMAL
            .replace("kind = \"constant\"", "kind = \"scale_factor\"")
            .replace("value = 0.3", "a = \"1+0.1*sin(t)\"");
        let cfg = RunConfig::from_toml(&text).unwrap();
        let spec = cfg.theta_spec().unwrap().unwrap();
        let v = spec.eval_at(std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        assert!((v - (1.0f64 / 1.1).acos()).abs() < 1e-15);
    }
}
