//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments run to the end of the line
//! model.p = 0.5
//! model.jump.kind = hyperexponential
//! model.jump.weights = 0.3, 0.7
//! model.jump.rates = 0.5, 2
//! costs.delta = 0.05
//! ```
//!
//! Every key can be overridden from the environment as `DIVCTL_` followed by
//! the upper-cased key with dots replaced by underscores
//! (`DIVCTL_COSTS_BETA=1.5`). Errors always name the offending key.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{self, CostParams, JumpLaw, ModelParams};
use crate::simulate::{SimConfig, SimError};
use crate::solution::Problem;

/// Every recognised key, in dump order.
pub const KEYS: &[&str] = &[
    "model.p",
    "model.sigma_p",
    "model.lambda",
    "model.jump.kind",
    "model.jump.rate",
    "model.jump.shape",
    "model.jump.weights",
    "model.jump.rates",
    "model.r",
    "model.sigma_r",
    "model.rho",
    "costs.delta",
    "costs.alpha",
    "costs.beta",
    "problem",
    "sim.dt",
    "sim.horizon",
    "sim.n_paths",
    "sim.seed",
    "sim.antithetic",
    "strategy.barrier",
    "strategy.inject",
    "output.format",
    "output.grid.min",
    "output.grid.max",
    "output.grid.points",
    "output.prefix",
    "output.paths",
    "sweep.param",
    "sweep.values",
    "sweep.x0",
];

pub const ENV_PREFIX: &str = "DIVCTL_";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("key `{key}` given twice (line {line})")]
    DuplicateKey { key: String, line: usize },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    /// The key the error is about, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey { key }
            | ConfigError::DuplicateKey { key, .. }
            | ConfigError::MissingKey { key }
            | ConfigError::InvalidValue { key, .. }
            | ConfigError::Invalid { key, .. } => Some(key),
        }
    }
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.to_string(), value: value.to_string(), reason: reason.into() }
}

/// Name of the environment variable overriding `key`.
pub fn env_var_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_ascii_uppercase().replace('.', "_"))
}

/// Parses the raw `key = value` pairs of a document.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, message: format!("expected `key = value`, got `{content}`") });
        };
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { key: key.to_string() });
        }
        if value.is_empty() {
            return Err(invalid(key, value, "empty value"));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey { key: key.to_string(), line });
        }
    }
    Ok(out)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(invalid(key, value, "must be finite")),
        Err(_) => Err(invalid(key, value, "not a number")),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|v| parse_f64(key, v.trim())).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false")),
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| invalid(key, value, "not a nonnegative integer"))
}

/// `MIN:MAX:N` grid of `N` equally spaced points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Upper limit on grid sizes accepted from user input.
pub const MAX_GRID_POINTS: usize = 1_000_000;

impl GridSpec {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self, String> {
        if !(min.is_finite() && max.is_finite()) {
            return Err("bounds must be finite".into());
        }
        if points == 0 || points > MAX_GRID_POINTS {
            return Err(format!("number of points must lie in 1..={MAX_GRID_POINTS}"));
        }
        if min > max || (points > 1 && min == max) {
            return Err("need MIN < MAX (or MIN = MAX with a single point)".into());
        }
        Ok(Self { min, max, points })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        // Interpolating each end separately cannot overflow for finite bounds.
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                if i + 1 == self.points { self.max } else { self.min * (1.0 - t) + self.max * t }
            })
            .collect()
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.points)
    }
}

/// Parses `MIN:MAX:N`.
pub fn parse_grid(spec: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let [min, max, n] = parts[..] else {
        return Err(format!("expected MIN:MAX:N, got `{spec}`"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    let points = n.trim().parse::<usize>().map_err(|_| format!("`{n}` is not a point count"))?;
    GridSpec::new(num(min)?, num(max)?, points)
}

/// Parameters a sweep may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Beta,
    Delta,
    Lambda,
    P,
    SigmaP,
    R,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::Alpha,
        SweepParam::Beta,
        SweepParam::Delta,
        SweepParam::Lambda,
        SweepParam::P,
        SweepParam::SigmaP,
        SweepParam::R,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Delta => "delta",
            SweepParam::Lambda => "lambda",
            SweepParam::P => "p",
            SweepParam::SigmaP => "sigma_p",
            SweepParam::R => "r",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s.trim())
    }

    /// Sets the parameter in a model/cost pair.
    pub fn apply(self, model: &mut ModelParams, costs: &mut CostParams, value: f64) {
        match self {
            SweepParam::Alpha => costs.alpha = value,
            SweepParam::Beta => costs.beta = value,
            SweepParam::Delta => costs.delta = value,
            SweepParam::Lambda => model.lambda = value,
            SweepParam::P => model.p = value,
            SweepParam::SigmaP => model.sigma_p = value,
            SweepParam::R => model.r = value,
        }
    }
}

/// One-parameter sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Starting surplus at which values are reported.
    pub x0: f64,
}

/// Parses a sweep from a parameter name and either `MIN:MAX:N` or a comma list.
pub fn parse_sweep(param: &str, values: &str) -> Result<SweepSpec, String> {
    let param = SweepParam::parse(param).ok_or_else(|| {
        let names: Vec<&str> = SweepParam::ALL.iter().map(|p| p.name()).collect();
        format!("unknown sweep parameter `{param}` (expected one of {})", names.join(", "))
    })?;
    let values = if values.contains(':') {
        parse_grid(values)?.values()
    } else {
        let list = values
            .split(',')
            .map(|v| match v.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(format!("`{}` is not a finite number", v.trim())),
            })
            .collect::<Result<Vec<f64>, String>>()?;
        if list.is_empty() {
            return Err("no sweep values".into());
        }
        list
    };
    Ok(SweepSpec { param, values, x0: 1.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub format: OutputFormat,
    /// Evaluation grid; when `max` is absent it defaults to twice the barrier.
    pub grid_min: f64,
    pub grid_max: Option<f64>,
    pub grid_points: usize,
    /// Path prefix of written artifacts; standard output when absent.
    pub prefix: Option<String>,
    /// Also write one CSV row per simulated path.
    pub paths: bool,
}

impl OutputConfig {
    /// The evaluation grid given the barrier of the solved problem.
    pub fn grid(&self, barrier: f64) -> Result<GridSpec, ConfigError> {
        let fallback = if barrier > 0.0 { 2.0 * barrier } else { 2.0 };
        let max = self.grid_max.unwrap_or(fallback.max(self.grid_min + 1.0));
        GridSpec::new(self.grid_min, max, self.grid_points)
            .map_err(|message| ConfigError::Invalid { key: "output.grid".into(), message })
    }
}

/// A fully parsed and validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub costs: CostParams,
    pub problem: Problem,
    pub sim: SimConfig,
    /// Barrier to simulate; the solved optimum when absent.
    pub barrier: Option<f64>,
    /// Reflect at zero; follows the problem when absent.
    pub inject: Option<bool>,
    pub output: OutputConfig,
    pub sweep: Option<SweepSpec>,
}

struct Reader<'a> {
    entries: &'a BTreeMap<String, String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::MissingKey { key: key.to_string() })
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.raw(key).map_or(Ok(default), |v| parse_f64(key, v))
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(key).map(|v| parse_f64(key, v)).transpose()
    }

    fn f64_required(&self, key: &str) -> Result<f64, ConfigError> {
        parse_f64(key, self.required(key)?)
    }

    fn bool_opt(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.raw(key).map(|v| parse_bool(key, v)).transpose()
    }

    fn unused(&self, key: &str, kind: &str) -> Result<(), ConfigError> {
        match self.raw(key) {
            Some(_) => Err(ConfigError::Invalid { key: key.to_string(), message: format!("not used by jump kind {kind}") }),
            None => Ok(()),
        }
    }

    fn jump(&self) -> Result<JumpLaw, ConfigError> {
        let key = "model.jump.kind";
        let kind = self.required(key)?;
        match kind.to_ascii_lowercase().as_str() {
            "exponential" => {
                for k in ["model.jump.shape", "model.jump.weights", "model.jump.rates"] {
                    self.unused(k, "exponential")?;
                }
                Ok(JumpLaw::exponential(self.f64_required("model.jump.rate")?))
            }
            "hyperexponential" | "hyper_exponential" => {
                for k in ["model.jump.shape", "model.jump.rate"] {
                    self.unused(k, "hyperexponential")?;
                }
                let weights = parse_list("model.jump.weights", self.required("model.jump.weights")?)?;
                let rates = parse_list("model.jump.rates", self.required("model.jump.rates")?)?;
                Ok(JumpLaw::hyper_exponential(weights, rates))
            }
            "erlang" => {
                for k in ["model.jump.weights", "model.jump.rates"] {
                    self.unused(k, "erlang")?;
                }
                let shape = parse_int::<u32>("model.jump.shape", self.required("model.jump.shape")?)?;
                Ok(JumpLaw::erlang(shape, self.f64_required("model.jump.rate")?))
            }
            _ => Err(invalid(key, kind, "expected exponential, hyperexponential or erlang")),
        }
    }
}

impl RunConfig {
    /// Parses a document without environment overrides.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_entries(&parse_entries(text)?)
    }

    /// Parses a document, then applies environment overrides and finally the
    /// explicit `(key, value)` overrides (command-line flags).
    pub fn load<I>(text: &str, env: I, overrides: &[(&str, String)]) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut entries = parse_entries(text)?;
        let env: BTreeMap<String, String> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        for key in KEYS {
            if let Some(value) = env.get(&env_var_name(key)) {
                entries.insert(key.to_string(), value.trim().to_string());
            }
        }
        for (key, value) in overrides {
            if !KEYS.contains(key) {
                return Err(ConfigError::UnknownKey { key: key.to_string() });
            }
            entries.insert(key.to_string(), value.clone());
        }
        Self::from_entries(&entries)
    }

    pub fn from_entries(entries: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        if let Some(key) = entries.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey { key: key.clone() });
        }
        let r = Reader { entries };
        let model = ModelParams {
            p: r.f64_required("model.p")?,
            sigma_p: r.f64_or("model.sigma_p", 0.0)?,
            lambda: r.f64_required("model.lambda")?,
            jump: r.jump()?,
            r: r.f64_or("model.r", 0.0)?,
            sigma_r: r.f64_or("model.sigma_r", 0.0)?,
            rho: r.f64_or("model.rho", 0.0)?,
        };
        let costs = CostParams::new(
            r.f64_required("costs.delta")?,
            r.f64_or("costs.alpha", 1.0)?,
            r.f64_or("costs.beta", 1.0)?,
        );
        if let Some(d) = model::validate(&model, &costs).into_iter().find(|d| d.is_error()) {
            return Err(ConfigError::Invalid { key: d.field, message: d.message });
        }
        let problem = match r.raw("problem") {
            None => Problem::Dividends,
            Some(v) => Problem::parse(v).ok_or_else(|| invalid("problem", v, "expected dividends, injections or combined"))?,
        };
        let defaults = SimConfig::default();
        let sim = SimConfig {
            dt: r.f64_or("sim.dt", defaults.dt)?,
            horizon: r.f64_or("sim.horizon", SimConfig::default_horizon(costs.delta, model.lambda))?,
            n_paths: r.raw("sim.n_paths").map_or(Ok(defaults.n_paths), |v| parse_int("sim.n_paths", v))?,
            seed: r.raw("sim.seed").map_or(Ok(defaults.seed), |v| parse_int("sim.seed", v))?,
            antithetic: r.bool_opt("sim.antithetic")?.unwrap_or(false),
        };
        sim.validate().map_err(|e| match e {
            SimError::InvalidConfig { field, message } => ConfigError::Invalid { key: field.to_string(), message },
            other => ConfigError::Invalid { key: "sim".into(), message: other.to_string() },
        })?;
        let barrier = r.f64_opt("strategy.barrier")?;
        if let Some(b) = barrier {
            if b < 0.0 {
                return Err(invalid("strategy.barrier", &b.to_string(), "must be nonnegative"));
            }
        }
        let format = match r.raw("output.format").map(str::to_ascii_lowercase).as_deref() {
            None | Some("csv") => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            Some(v) => return Err(invalid("output.format", v, "expected csv or json")),
        };
        let output = OutputConfig {
            format,
            grid_min: r.f64_or("output.grid.min", 0.0)?,
            grid_max: r.f64_opt("output.grid.max")?,
            grid_points: r.raw("output.grid.points").map_or(Ok(21), |v| parse_int("output.grid.points", v))?,
            prefix: r.raw("output.prefix").map(str::to_string),
            paths: r.bool_opt("output.paths")?.unwrap_or(false),
        };
        if let Some(max) = output.grid_max {
            GridSpec::new(output.grid_min, max, output.grid_points)
                .map_err(|message| ConfigError::Invalid { key: "output.grid".into(), message })?;
        } else if output.grid_points == 0 || output.grid_points > MAX_GRID_POINTS {
            return Err(invalid("output.grid.points", &output.grid_points.to_string(), "out of range"));
        }
        let sweep = match r.raw("sweep.param") {
            None => {
                for key in ["sweep.values", "sweep.x0"] {
                    if r.raw(key).is_some() {
                        return Err(ConfigError::MissingKey { key: "sweep.param".into() });
                    }
                }
                None
            }
            Some(param) => {
                let values = r.required("sweep.values")?;
                let mut spec = parse_sweep(param, values).map_err(|reason| {
                    let key = if SweepParam::parse(param).is_none() { "sweep.param" } else { "sweep.values" };
                    invalid(key, if key == "sweep.param" { param } else { values }, reason)
                })?;
                spec.x0 = r.f64_or("sweep.x0", spec.x0)?;
                if spec.x0 < 0.0 {
                    return Err(invalid("sweep.x0", &spec.x0.to_string(), "must be nonnegative"));
                }
                Some(spec)
            }
        };
        Ok(Self { model, costs, problem, sim, barrier, inject: r.bool_opt("strategy.inject")?, output, sweep })
    }

    /// Canonical document reproducing this run, every default spelled out.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let m = &self.model;
        put("model.p", m.p.to_string());
        put("model.sigma_p", m.sigma_p.to_string());
        put("model.lambda", m.lambda.to_string());
        match &m.jump {
            JumpLaw::Exponential { rate } => {
                put("model.jump.kind", "exponential".into());
                put("model.jump.rate", rate.to_string());
            }
            JumpLaw::Erlang { shape, rate } => {
                put("model.jump.kind", "erlang".into());
                put("model.jump.rate", rate.to_string());
                put("model.jump.shape", shape.to_string());
            }
            JumpLaw::HyperExponential { weights, rates } => {
                put("model.jump.kind", "hyperexponential".into());
                put("model.jump.weights", list(weights));
                put("model.jump.rates", list(rates));
            }
            JumpLaw::General(_) => put("model.jump.kind", "general".into()),
        }
        put("model.r", m.r.to_string());
        put("model.sigma_r", m.sigma_r.to_string());
        put("model.rho", m.rho.to_string());
        put("costs.delta", self.costs.delta.to_string());
        put("costs.alpha", self.costs.alpha.to_string());
        put("costs.beta", self.costs.beta.to_string());
        put("problem", self.problem.name().into());
        put("sim.dt", self.sim.dt.to_string());
        put("sim.horizon", self.sim.horizon.to_string());
        put("sim.n_paths", self.sim.n_paths.to_string());
        put("sim.seed", self.sim.seed.to_string());
        put("sim.antithetic", self.sim.antithetic.to_string());
        if let Some(b) = self.barrier {
            put("strategy.barrier", b.to_string());
        }
        if let Some(i) = self.inject {
            put("strategy.inject", i.to_string());
        }
        put("output.format", self.output.format.name().into());
        put("output.grid.min", self.output.grid_min.to_string());
        if let Some(max) = self.output.grid_max {
            put("output.grid.max", max.to_string());
        }
        put("output.grid.points", self.output.grid_points.to_string());
        if let Some(prefix) = &self.output.prefix {
            put("output.prefix", prefix.clone());
        }
        put("output.paths", self.output.paths.to_string());
        if let Some(s) = &self.sweep {
            put("sweep.param", s.param.name().into());
            put("sweep.values", list(&s.values));
            put("sweep.x0", s.x0.to_string());
        }
        out
    }

    /// Whether simulated strategies reflect at zero.
    pub fn injects(&self) -> bool {
        self.inject.unwrap_or(self.problem == Problem::Injections)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
# prototype
model.p = 0.5
model.sigma_p = 0.2
model.lambda = 1
model.jump.kind = exponential
model.jump.rate = 1   # mean one
costs.delta = 0.05
costs.beta = 1.2
";

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.model.jump, JumpLaw::exponential(1.0));
        assert_eq!(c.costs.alpha, 1.0);
        assert_eq!(c.problem, Problem::Dividends);
        assert_eq!(c.sim.horizon, 240.0);
        assert!(!c.injects());
    }

    #[test]
    fn dump_round_trips() {
        let text = format!(
            "{BASE}problem = combined\nsim.antithetic = true\nsim.n_paths = 64\nstrategy.barrier = 1.5\noutput.grid.max = 4\nsweep.param = beta\nsweep.values = 1.1:1.5:5\n"
        );
        let c = RunConfig::parse(&text).unwrap();
        let again = RunConfig::parse(&c.dump()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.dump(), c.dump());
    }

    #[test]
    fn errors_name_the_key() {
        let bad = BASE.replace("exponential", "gamma");
        assert_eq!(RunConfig::parse(&bad).unwrap_err().key(), Some("model.jump.kind"));
        let missing = BASE.replace("costs.delta = 0.05\n", "");
        assert_eq!(RunConfig::parse(&missing).unwrap_err().key(), Some("costs.delta"));
        let negative = BASE.replace("costs.beta = 1.2", "costs.beta = 0.5");
        assert_eq!(RunConfig::parse(&negative).unwrap_err().key(), Some("costs.beta"));
        let unknown = format!("{BASE}model.q = 1\n");
        assert_eq!(RunConfig::parse(&unknown).unwrap_err().key(), Some("model.q"));
        let twice = format!("{BASE}model.p = 1\n");
        assert_eq!(RunConfig::parse(&twice).unwrap_err().key(), Some("model.p"));
        let stray = format!("{BASE}model.jump.shape = 2\n");
        assert_eq!(RunConfig::parse(&stray).unwrap_err().key(), Some("model.jump.shape"));
        assert!(matches!(RunConfig::parse("model.p 0.5"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn environment_and_flags_override() {
        let env = vec![
            ("DIVCTL_COSTS_BETA".to_string(), "1.5".to_string()),
            ("DIVCTL_MODEL_JUMP_RATE".to_string(), "2".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ];
        let c = RunConfig::load(BASE, env, &[("problem", "injections".to_string())]).unwrap();
        assert_eq!(c.costs.beta, 1.5);
        assert_eq!(c.model.jump, JumpLaw::exponential(2.0));
        assert_eq!(c.problem, Problem::Injections);
        assert!(c.injects());
        assert_eq!(env_var_name("model.jump.kind"), "DIVCTL_MODEL_JUMP_KIND");
    }

    #[test]
    fn hyperexponential_and_erlang() {
        let text = BASE.replace("model.jump.rate = 1   # mean one", "model.jump.weights = 0.3, 0.7\nmodel.jump.rates = 0.5, 2")
            .replace("exponential", "hyperexponential");
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.model.jump, JumpLaw::hyper_exponential(vec![0.3, 0.7], vec![0.5, 2.0]));
        let text = BASE.replace("exponential", "erlang") + "model.jump.shape = 3\n";
        assert_eq!(RunConfig::parse(&text).unwrap().model.jump, JumpLaw::erlang(3, 1.0));
        let bad = BASE.replace("exponential", "hyperexponential").replace("model.jump.rate = 1   # mean one", "model.jump.weights = 0.3, 0.6\nmodel.jump.rates = 0.5, 2");
        assert_eq!(RunConfig::parse(&bad).unwrap_err().key(), Some("model.jump.weights"));
    }

    #[test]
    fn grids_and_sweeps() {
        let g = parse_grid("0:2:5").unwrap();
        assert_eq!(g.values(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_grid(&g.to_string()).unwrap(), g);
        assert!(parse_grid("1:0:3").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("nan:1:3").is_err());
        let s = parse_sweep("beta", "1.1, 1.2,1.5").unwrap();
        assert_eq!(s.param, SweepParam::Beta);
        assert_eq!(s.values, vec![1.1, 1.2, 1.5]);
        assert_eq!(parse_sweep("delta", "0.03:0.05:3").unwrap().values.len(), 3);
        assert!(parse_sweep("gamma", "1").is_err());
        assert!(parse_sweep("beta", "1,,2").is_err());
    }

    proptest::proptest! {
        #[test]
        fn parser_never_panics(text in "\\PC*") {
            let _ = RunConfig::parse(&text);
        }

        #[test]
        fn accepted_configs_round_trip(
            key in proptest::sample::select(KEYS.to_vec()),
            value in "[ -~]{0,16}",
        ) {
            if let Ok(c) = RunConfig::parse(&format!("{BASE}{key} = {value}\n")) {
                let again = RunConfig::parse(&c.dump()).unwrap();
                proptest::prop_assert_eq!(again.dump(), c.dump());
            }
        }

        #[test]
        fn grid_parser_never_panics(text in "[-0-9.e:]{0,24}") {
            if let Ok(g) = parse_grid(&text) {
                proptest::prop_assert_eq!(g.values().len(), g.points);
            }
        }

        #[test]
        fn grid_values_stay_finite_and_ordered(
            min in -1e308f64..1e308,
            width in 0.0f64..1.0,
            points in 2usize..50,
        ) {
            let max = min + width * (f64::MAX - min.max(0.0));
            proptest::prop_assume!(max > min);
            let values = GridSpec::new(min, max, points).unwrap().values();
            proptest::prop_assert!(values.iter().all(|v| v.is_finite()));
            proptest::prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
            proptest::prop_assert_eq!((values[0], values[points - 1]), (min, max));
        }
    }
}
