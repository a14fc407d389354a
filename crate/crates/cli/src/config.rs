//! Experiment configuration: schema, loading and model construction.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use kpp_core::model::CompetitionField;
use kpp_core::simulate::RunConfig;
use kpp_core::zoo::{self, GurtinParams, Sampled, ToadsParams};
use kpp_core::{Model, SquareMatrix};

/// Malformed, unreadable or inconsistent configuration (exit code 4).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub(crate) fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// A parsed config together with its raw document and hash.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub raw: Value,
    pub config: ExperimentConfig,
    /// SHA-256 of the canonical (sorted-key, compact) JSON form of `raw`.
    pub hash: String,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::from_str(&text, is_json).with_context(|| format!("loading {}", path.display()))
    }

    pub fn from_str(text: &str, json: bool) -> Result<Self> {
        let raw: Value = if json {
            serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| config_err(e.to_string()))?
        };
        Self::from_value(raw)
    }

    pub fn from_value(raw: Value) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_value(raw.clone()).map_err(|e| config_err(e.to_string()))?;
        let hash = config_hash(&raw);
        Ok(Self { raw, config, hash })
    }
}

pub fn config_hash(raw: &Value) -> String {
    let canonical = serde_json::to_string(raw).expect("JSON values always serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub speed: Option<SpeedBlock>,
    #[serde(default)]
    pub simulate: Option<SimulateBlock>,
    #[serde(default)]
    pub wave: Option<WaveBlock>,
    #[serde(default)]
    pub steady: Option<SteadyBlock>,
    #[serde(default)]
    pub spectra: Option<SpectraBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Perron–Frobenius residual.
    pub pf: f64,
    pub speed: f64,
    pub steady: f64,
    pub wave: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pf: 1e-12,
            speed: 1e-12,
            steady: 1e-13,
            wave: kpp_core::waves::DEFAULT_WAVE_TOL,
        }
    }
}

/// Inline model or a named builder from the zoo.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Inline {
        n: usize,
        d: Vec<f64>,
        #[serde(rename = "L")]
        l: SquareMatrix,
        competition: CompetitionField,
    },
    /// `L = r I + mutation M_Lap`, `C = c 1`, `d` defaulting to ones.
    LaplacianMutation {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default = "one")]
        r: f64,
        #[serde(default = "tenth")]
        mutation: f64,
        #[serde(default)]
        d: Option<Vec<f64>>,
        #[serde(rename = "C", default = "one")]
        c: f64,
    },
    /// `L = diag(r) + mutation M_Lap`.
    LvMutation {
        d: Vec<f64>,
        r: Vec<f64>,
        mutation: f64,
        #[serde(rename = "C")]
        c: SquareMatrix,
    },
    ToadsLocal(ToadsParams),
    ToadsNonlocal(ToadsNonlocalSpec),
    GurtinMaccamy(GurtinParams),
    /// Seeded random validated Lotka–Volterra model; `seed` defaults to the top-level seed.
    RandomLv {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn one() -> f64 {
    1.0
}

fn tenth() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToadsNonlocalSpec {
    #[serde(rename = "N")]
    pub n: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub r: f64,
    pub alpha: f64,
    pub kernel: Sampled,
}

impl Default for ToadsNonlocalSpec {
    fn default() -> Self {
        let p = ToadsParams::default();
        Self {
            n: p.n,
            theta_min: p.theta_min,
            theta_max: p.theta_max,
            r: p.r,
            alpha: p.alpha,
            kernel: Sampled::Gaussian {
                amplitude: 1.0,
                width: 1.0,
            },
        }
    }
}

impl ModelSpec {
    pub fn build(&self, default_seed: u64) -> kpp_core::Result<Model> {
        match self {
            ModelSpec::Inline { n, d, l, competition } => {
                if *n != d.len() {
                    return Err(kpp_core::KppError::InvalidInput(format!(
                        "n = {n} but d has {} entries",
                        d.len()
                    )));
                }
                Model::new(d.clone(), l.clone(), competition.clone())
            }
            ModelSpec::LaplacianMutation { n, r, mutation, d, c } => {
                let l = zoo::laplacian_matrix(*n)?.scaled(*mutation).shifted(*r);
                let d = d.clone().unwrap_or_else(|| vec![1.0; *n]);
                Model::lotka_volterra(d, l, SquareMatrix::from_fn(*n, |_, _| *c))
            }
            ModelSpec::LvMutation { d, r, mutation, c } => zoo::lv_mutation(d.clone(), r, *mutation, c.clone()),
            ModelSpec::ToadsLocal(p) => zoo::toads_local(p),
            ModelSpec::ToadsNonlocal(s) => {
                let p = ToadsParams {
                    n: s.n,
                    theta_min: s.theta_min,
                    theta_max: s.theta_max,
                    r: s.r,
                    alpha: s.alpha,
                };
                zoo::toads_nonlocal(&p, &s.kernel)
            }
            ModelSpec::GurtinMaccamy(p) => zoo::gurtin_maccamy(p),
            ModelSpec::RandomLv { n, seed } => zoo::random_lv_model(*n, seed.unwrap_or(default_seed)),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedBlock {
    /// Points of the log-spaced dispersion-curve grid around `μ_{c*}`.
    pub curve_points: usize,
}

impl Default for SpeedBlock {
    fn default() -> Self {
        Self { curve_points: 200 }
    }
}

/// A level vector: explicit values, or a named state of the model.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Values(Vec<f64>),
    Named(NamedLevel),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedLevel {
    /// The constant positive steady state.
    Steady,
    /// The saturation vector `k`.
    Saturation,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `level` for `x <= x0`, zero after.
    FrontLike {
        level: Level,
        #[serde(default)]
        x0: f64,
    },
    Bump {
        level: Level,
        #[serde(default)]
        center: f64,
        halfwidth: f64,
    },
    Constant {
        level: Level,
    },
    /// `base + amplitude sin(x / wavelength + i)` in component `i`.
    Oscillating {
        base: f64,
        amplitude: f64,
        wavelength: f64,
    },
    /// `factor k_i max(0, base + amplitude cos(x / wavelength + i))`.
    SaturationMultiple {
        factor: f64,
        #[serde(default = "base_default")]
        base: f64,
        #[serde(default = "amp_default")]
        amplitude: f64,
        #[serde(default = "wl_default")]
        wavelength: f64,
    },
}

fn base_default() -> f64 {
    0.6
}

fn amp_default() -> f64 {
    0.4
}

fn wl_default() -> f64 {
    5.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    pub domain: (f64, f64),
    pub m: usize,
    pub initial: InitialSpec,
    /// Use this fraction of the largest stable step instead of `run.dt`.
    pub dt_fraction: Option<f64>,
    pub run: RunConfig,
    /// Window for the log-sup-norm slope; defaults to `[t_end / 5, t_end]` when `λ_PF < 0`.
    pub decay_window: Option<(f64, f64)>,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        Self {
            domain: (-50.0, 50.0),
            m: 1001,
            initial: InitialSpec::FrontLike {
                level: Level::Named(NamedLevel::Steady),
                x0: 0.0,
            },
            dt_fraction: None,
            run: RunConfig::default(),
            decay_window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveMode {
    /// Envelope-bracketed solve, requires `c > c*`.
    Solve,
    /// Unbracketed attempt at any speed, judged by the wave shape.
    Probe,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveBlock {
    pub c: Option<f64>,
    /// `c = c_factor c*` when `c` is absent.
    pub c_factor: f64,
    pub radius: Option<f64>,
    pub m: Option<usize>,
    pub mode: WaveMode,
}

impl Default for WaveBlock {
    fn default() -> Self {
        Self {
            c: None,
            c_factor: 1.25,
            radius: None,
            m: None,
            mode: WaveMode::Solve,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftCheck {
    pub t_end: f64,
    pub dt: f64,
    pub m: usize,
    pub halfwidth: f64,
}

impl Default for DriftCheck {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt: 0.01,
            m: 201,
            halfwidth: 10.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadyBlock {
    /// Simulate from the constant state and report the drift.
    pub drift: Option<DriftCheck>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectraBlock {
    /// Speeds as multiples of `c*`.
    pub c_factors: Vec<f64>,
    /// Absolute speeds, used instead of `c_factors` when given.
    pub speeds: Option<Vec<f64>>,
    pub radii: Vec<f64>,
    pub m: usize,
    /// Offset for the sign test of `max_μ(κ_μ + μc)` around `c*`.
    pub sign_delta: f64,
    /// Number of seeded random matrices for the Perron–Frobenius invariance suite.
    pub invariance_cases: usize,
    pub invariance_n_max: usize,
}

impl Default for SpectraBlock {
    fn default() -> Self {
        Self {
            c_factors: vec![0.0, 0.5, 1.0],
            speeds: None,
            radii: vec![5.0, 10.0, 20.0, 30.0, 50.0],
            m: 2000,
            sign_delta: 1e-6,
            invariance_cases: 0,
            invariance_n_max: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Speed,
    Simulate,
    Wave,
    Steady,
    Spectra,
    Sweep,
}

impl CommandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::Speed => "speed",
            CommandName::Simulate => "simulate",
            CommandName::Wave => "wave",
            CommandName::Steady => "steady",
            CommandName::Spectra => "spectra",
            CommandName::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Commands run at every grid point; their summaries are concatenated.
    #[serde(default = "default_commands")]
    pub commands: Vec<CommandName>,
    /// One or two axes; the grid is their Cartesian product, first axis outermost.
    pub axes: Vec<Axis>,
}

fn default_commands() -> Vec<CommandName> {
    vec![CommandName::Speed]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted path into the config, with numeric segments indexing arrays
    /// (`model.alpha`, `model.L.0.1`).
    pub path: String,
    #[serde(default)]
    pub values: Option<Vec<Value>>,
    #[serde(default)]
    pub range: Option<AxisRange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub from: f64,
    pub to: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn points(&self) -> Result<Vec<Value>> {
        match (&self.values, &self.range) {
            (Some(v), None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(r)) => {
                if r.count == 0 {
                    return Err(config_err(format!("axis {}: count must be positive", self.path)));
                }
                if r.scale == Scale::Log && !(r.from > 0.0 && r.to > 0.0) {
                    return Err(config_err(format!("axis {}: log range needs positive ends", self.path)));
                }
                // integer ends with an integer step stay integers, so counts and seeds can be swept
                let span = r.to - r.from;
                let integral = r.scale == Scale::Linear
                    && r.from.fract() == 0.0
                    && r.to.fract() == 0.0
                    && (r.count == 1 || (span / (r.count - 1) as f64).fract() == 0.0);
                if integral {
                    let step = if r.count == 1 {
                        0
                    } else {
                        (span / (r.count - 1) as f64) as i64
                    };
                    return Ok((0..r.count as i64)
                        .map(|i| Value::from(r.from as i64 + i * step))
                        .collect());
                }
                let pts = (0..r.count).map(|i| {
                    let t = if r.count == 1 {
                        0.0
                    } else {
                        i as f64 / (r.count - 1) as f64
                    };
                    match r.scale {
                        Scale::Linear => r.from + t * (r.to - r.from),
                        Scale::Log => (r.from.ln() + t * (r.to.ln() - r.from.ln())).exp(),
                    }
                });
                Ok(pts.map(Value::from).collect())
            }
            _ => Err(config_err(format!(
                "axis {}: give exactly one of a nonempty `values` list or `range`",
                self.path
            ))),
        }
    }
}

/// Sets `path` in `doc`, creating missing object keys. Array indices must exist.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let segs: Vec<&str> = path.split('.').collect();
    for (k, seg) in segs.iter().enumerate() {
        let last = k + 1 == segs.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| config_err(format!("path {path}: `{seg}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| config_err(format!("path {path}: index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(config_err(format!("path {path}: `{seg}` does not address a container"))),
        };
    }
    Err(config_err("empty sweep path"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(from: f64, to: f64, count: usize, scale: Scale) -> Axis {
        Axis {
            path: "x".into(),
            values: None,
            range: Some(AxisRange { from, to, count, scale }),
        }
    }

    #[test]
    fn integer_ranges_stay_integer() {
        let pts = axis(0.0, 6.0, 4, Scale::Linear).points().unwrap();
        assert_eq!(
            pts,
            vec![Value::from(0), Value::from(2), Value::from(4), Value::from(6)]
        );
        let pts = axis(0.0, 1.0, 3, Scale::Linear).points().unwrap();
        assert_eq!(pts[1], Value::from(0.5));
        let pts = axis(1.0, 100.0, 3, Scale::Log).points().unwrap();
        assert!((pts[1].as_f64().unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn set_path_walks_objects_and_arrays() {
        let mut doc = serde_json::json!({"model": {"L": [[1.0, 2.0], [3.0, 4.0]]}});
        set_path(&mut doc, "model.L.0.1", Value::from(9.0)).unwrap();
        set_path(&mut doc, "wave.c", Value::from(1.0)).unwrap();
        assert_eq!(doc["model"]["L"][0][1], 9.0);
        assert_eq!(doc["wave"]["c"], 1.0);
        assert!(set_path(&mut doc, "model.L.5.0", Value::from(0.0)).is_err());
    }
}
