use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use ipm_core::control::{FbsmOptions, ObjectiveWeights};
use ipm_core::{ModelParams, State};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid configuration: {0}")]
    Invariant(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Published,
    ArtifactDefault,
    File,
    CommandLine,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Published => "published value",
            Self::ArtifactDefault => "artifact default, not a published value",
            Self::File => "config file",
            Self::CommandLine => "--set",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanSpec {
    Range { param: String, lo: f64, hi: f64, n: usize },
    Values { param: String, values: Vec<f64> },
}

impl ScanSpec {
    pub fn param(&self) -> &str {
        match self {
            Self::Range { param, .. } | Self::Values { param, .. } => param,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Range { lo, hi, n, .. } => ipm_core::hopf::alpha_grid(*lo, *hi, *n),
            Self::Values { values, .. } => values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: ModelParams,
    pub initial_state: State,
    pub t0: f64,
    /// `None` means the per-scenario default horizon.
    pub tf: Option<f64>,
    pub h: f64,
    pub weights: ObjectiveWeights,
    pub fbsm: FbsmOptions,
    pub transient_fraction: f64,
    pub scan: Option<ScanSpec>,
    pub output_dir: PathBuf,
    pub overrides: Vec<(String, String)>,
    pub sources: BTreeMap<String, Source>,
}

pub const SIMULATION_HORIZON: f64 = 600.0;
pub const CONTROL_HORIZON: f64 = 60.0;

const STATE_KEYS: [&str; 4] = ["X0", "S0", "I0", "A0"];
const WEIGHT_KEYS: [&str; 5] = ["P1", "P2", "P3", "Q", "R"];
const MISC_KEYS: [&str; 7] = ["t0", "tf", "h", "relaxation", "tolerance", "max_iter", "transient_fraction"];
const SCAN_KEYS: [&str; 5] = ["scan", "scan_lo", "scan_hi", "scan_n", "scan_values"];

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut sources = BTreeMap::new();
        for k in ModelParams::NAMES.iter().chain(&STATE_KEYS).chain(&WEIGHT_KEYS) {
            sources.insert(k.to_string(), Source::Published);
        }
        sources.insert("tf".into(), Source::Published);
        for k in ["phi", "t0", "h", "relaxation", "tolerance", "max_iter", "transient_fraction"] {
            sources.insert(k.to_string(), Source::ArtifactDefault);
        }
        Self {
            params: ModelParams::published(),
            initial_state: State::new(0.2, 0.07, 0.05, 0.5),
            t0: 0.0,
            tf: None,
            h: 0.05,
            weights: ObjectiveWeights::published(),
            fbsm: FbsmOptions::default(),
            transient_fraction: 0.5,
            scan: None,
            output_dir: PathBuf::from("out"),
            overrides: Vec::new(),
            sources,
        }
    }
}

#[derive(Default)]
struct ScanParts {
    param: Option<String>,
    lo: Option<f64>,
    hi: Option<f64>,
    n: Option<usize>,
    values: Option<Vec<f64>>,
}

pub struct ConfigBuilder {
    cfg: ScenarioConfig,
    scan: ScanParts,
}

fn number(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::Parse { line, msg: format!("`{key}` needs a finite number, got `{v}`") })
}

fn count(line: usize, key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse::<usize>()
        .map_err(|_| ConfigError::Parse { line, msg: format!("`{key}` needs a nonnegative integer, got `{v}`") })
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self { cfg: ScenarioConfig::default(), scan: ScanParts::default() }
    }

    /// Apply one `key = value` pair. `line` is 0 for command-line overrides.
    pub fn apply(&mut self, line: usize, key: &str, value: &str, source: Source) -> Result<(), ConfigError> {
        let cfg = &mut self.cfg;
        if ModelParams::NAMES.contains(&key) {
            cfg.params.set(key, number(line, key, value)?);
        } else if let Some(idx) = STATE_KEYS.iter().position(|k| *k == key) {
            let mut s = cfg.initial_state.to_array();
            s[idx] = number(line, key, value)?;
            cfg.initial_state = State::from_array(s);
        } else if WEIGHT_KEYS.contains(&key) {
            let v = number(line, key, value)?;
            let w = &mut cfg.weights;
            *match key {
                "P1" => &mut w.p1,
                "P2" => &mut w.p2,
                "P3" => &mut w.p3,
                "Q" => &mut w.q,
                _ => &mut w.r,
            } = v;
        } else if MISC_KEYS.contains(&key) {
            match key {
                "t0" => cfg.t0 = number(line, key, value)?,
                "tf" => cfg.tf = Some(number(line, key, value)?),
                "h" => cfg.h = number(line, key, value)?,
                "relaxation" => cfg.fbsm.relaxation = number(line, key, value)?,
                "tolerance" => cfg.fbsm.tol = number(line, key, value)?,
                "max_iter" => cfg.fbsm.max_iter = count(line, key, value)?,
                _ => cfg.transient_fraction = number(line, key, value)?,
            }
        } else if SCAN_KEYS.contains(&key) {
            let s = &mut self.scan;
            match key {
                "scan" => s.param = Some(value.to_string()),
                "scan_lo" => s.lo = Some(number(line, key, value)?),
                "scan_hi" => s.hi = Some(number(line, key, value)?),
                "scan_n" => s.n = Some(count(line, key, value)?),
                _ => {
                    let vals = value
                        .split(',')
                        .map(|t| number(line, key, t.trim()))
                        .collect::<Result<Vec<f64>, _>>()?;
                    s.values = Some(vals);
                }
            }
        } else if key == "output_dir" {
            cfg.output_dir = PathBuf::from(value);
        } else {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        }
        cfg.sources.insert(key.to_string(), source);
        if source == Source::CommandLine {
            cfg.overrides.push((key.to_string(), value.to_string()));
        }
        Ok(())
    }

    pub fn parse_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = split_pair(content).ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            self.apply(line, key, value, Source::File)?;
        }
        Ok(())
    }

    pub fn apply_override(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (key, value) = split_pair(pair)
            .ok_or_else(|| ConfigError::Parse { line: 0, msg: format!("--set expects key=value, got `{pair}`") })?;
        self.apply(0, key, value, Source::CommandLine)
    }

    pub fn finish(self) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = self.cfg;
        cfg.params.validate().map_err(|e| ConfigError::Invariant(e.to_string()))?;
        cfg.weights.validate().map_err(|e| ConfigError::Invariant(e.to_string()))?;
        if cfg.initial_state.to_array().iter().any(|v| *v < 0.0) {
            return Err(ConfigError::Invariant("initial state must be nonnegative".into()));
        }
        if !(cfg.h > 0.0) {
            return Err(ConfigError::Invariant("h must be positive".into()));
        }
        if let Some(tf) = cfg.tf {
            if tf <= cfg.t0 {
                return Err(ConfigError::Invariant(format!("tf = {tf} must exceed t0 = {}", cfg.t0)));
            }
        }
        if !(cfg.fbsm.relaxation > 0.0 && cfg.fbsm.relaxation <= 1.0) || !(cfg.fbsm.tol > 0.0) {
            return Err(ConfigError::Invariant("relaxation must lie in (0, 1] and tolerance be positive".into()));
        }
        if !(cfg.transient_fraction >= 0.0 && cfg.transient_fraction < 1.0) {
            return Err(ConfigError::Invariant("transient_fraction must lie in [0, 1)".into()));
        }
        cfg.scan = build_scan(self.scan, &cfg.params)?;
        Ok(cfg)
    }
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        Self::new()
    }
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty() && !v.is_empty()).then_some((k, v))
}

fn build_scan(s: ScanParts, params: &ModelParams) -> Result<Option<ScanSpec>, ConfigError> {
    let Some(param) = s.param else {
        if s.lo.is_some() || s.hi.is_some() || s.n.is_some() || s.values.is_some() {
            return Err(ConfigError::Invariant("scan bounds given without `scan = <parameter>`".into()));
        }
        return Ok(None);
    };
    if params.get(&param).is_none() {
        return Err(ConfigError::Invariant(format!("scan parameter `{param}` does not exist")));
    }
    let check = |v: f64| {
        let mut q = *params;
        q.set(&param, v);
        q.validate().map_err(|e| ConfigError::Invariant(format!("scan value {param} = {v}: {e}")))
    };
    if let Some(values) = s.values {
        if values.is_empty() {
            return Err(ConfigError::Invariant("scan_values is empty".into()));
        }
        for v in &values {
            check(*v)?;
        }
        return Ok(Some(ScanSpec::Values { param, values }));
    }
    match (s.lo, s.hi) {
        (Some(lo), Some(hi)) => {
            if lo >= hi {
                return Err(ConfigError::Invariant(format!("scan_lo = {lo} must be below scan_hi = {hi}")));
            }
            let n = s.n.unwrap_or(40);
            if n < 2 {
                return Err(ConfigError::Invariant("scan_n must be at least 2".into()));
            }
            check(lo)?;
            check(hi)?;
            Ok(Some(ScanSpec::Range { param, lo, hi, n }))
        }
        _ => Err(ConfigError::Invariant("scan needs scan_lo and scan_hi, or scan_values".into())),
    }
}

pub fn load_config(path: &Path) -> Result<ConfigBuilder, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    let mut b = ConfigBuilder::new();
    b.parse_text(&text)?;
    Ok(b)
}

impl ScenarioConfig {
    pub fn horizon(&self, default: f64) -> f64 {
        self.tf.unwrap_or(default)
    }

    /// Resolved values with their origin, one `key = value  # origin` per line.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let src = |k: &str| self.sources.get(k).copied().unwrap_or(Source::ArtifactDefault);
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}  # {}\n", src(k)));
        for k in ModelParams::NAMES {
            line(k, fmt_num(self.params.get(k).unwrap_or(f64::NAN)));
        }
        for (k, v) in STATE_KEYS.iter().zip(self.initial_state.to_array()) {
            line(k, fmt_num(v));
        }
        let w = self.weights;
        for (k, v) in WEIGHT_KEYS.iter().zip([w.p1, w.p2, w.p3, w.q, w.r]) {
            line(k, fmt_num(v));
        }
        line("t0", fmt_num(self.t0));
        line(
            "tf",
            match self.tf {
                Some(v) => fmt_num(v),
                None => format!("{SIMULATION_HORIZON} (simulation), {CONTROL_HORIZON} (optimal control)"),
            },
        );
        line("h", fmt_num(self.h));
        line("relaxation", fmt_num(self.fbsm.relaxation));
        line("tolerance", fmt_num(self.fbsm.tol));
        line("max_iter", self.fbsm.max_iter.to_string());
        line("transient_fraction", fmt_num(self.transient_fraction));
        match &self.scan {
            Some(ScanSpec::Range { param, lo, hi, n }) => {
                out.push_str(&format!("scan = {param}, [{}, {}], {n} points\n", fmt_num(*lo), fmt_num(*hi)))
            }
            Some(ScanSpec::Values { param, values }) => {
                let v: Vec<String> = values.iter().map(|x| fmt_num(*x)).collect();
                out.push_str(&format!("scan = {param}, values {}\n", v.join(", ")))
            }
            None => {}
        }
        for (k, v) in &self.overrides {
            out.push_str(&format!("override {k} = {v}\n"));
        }
        out
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let mut b = ConfigBuilder::new();
        b.parse_text(text)?;
        b.finish()
    }

    #[test]
    fn empty_file_gives_defaults_and_flags_phi() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg.params, ModelParams::published());
        let echo = cfg.echo();
        assert!(echo.contains("phi = 0.5  # artifact default"));
        assert!(echo.contains("alpha = 0.025  # published value"));
    }

    #[test]
    fn alpha_override() {
        let cfg = parse("alpha = 0.12 # blue line\n").unwrap();
        assert_eq!(cfg.params.alpha, 0.12);
        assert_eq!(cfg.sources["alpha"], Source::File);
    }

    #[test]
    fn inverted_efficiencies_rejected() {
        assert!(matches!(parse("m1 = 0.3\nm2 = 0.6\n"), Err(ConfigError::Invariant(_))));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            parse("r = 0.1\n\nbogus = 3\n"),
            Err(ConfigError::UnknownKey { line: 3, key: "bogus".into() })
        );
        assert!(matches!(parse("# c\nr = abc\n"), Err(ConfigError::Parse { line: 2, .. })));
        assert!(matches!(parse("r 0.1\n"), Err(ConfigError::Parse { line: 1, .. })));
    }

    #[test]
    fn scans() {
        let cfg = parse("scan = alpha\nscan_values = 0.12, 0.16, 0.18\n").unwrap();
        assert_eq!(cfg.scan.unwrap().values(), vec![0.12, 0.16, 0.18]);
        let cfg = parse("scan = alpha\nscan_lo = 0.1\nscan_hi = 0.2\nscan_n = 3\n").unwrap();
        assert_eq!(cfg.scan.unwrap().values(), vec![0.1, 0.15000000000000002, 0.2]);
        assert!(parse("scan = alpha\nscan_lo = 0.3\nscan_hi = 0.2\n").is_err());
        assert!(parse("scan = zeta\nscan_lo = 0.1\nscan_hi = 0.2\n").is_err());
    }

    #[test]
    fn command_line_overrides_are_recorded() {
        let mut b = ConfigBuilder::new();
        b.parse_text("gamma = 0.01\n").unwrap();
        b.apply_override("gamma=0.04").unwrap();
        let cfg = b.finish().unwrap();
        assert_eq!(cfg.params.gamma, 0.04);
        assert_eq!(cfg.overrides, vec![("gamma".to_string(), "0.04".to_string())]);
        assert_eq!(cfg.sources["gamma"], Source::CommandLine);
    }
}
