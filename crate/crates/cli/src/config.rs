//! Flat `key = value` experiment files.
//!
//! ```text
//! # headline problem
//! modes = 16
//! horizon = 2
//! xi = 1/3
//! region = internal
//! n = 8
//! data = smooth-decay
//! ```
//!
//! Blank lines and `#` comments are ignored; unknown or repeated keys are errors.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use beamctl_core::{ControlRegion, ModalState, Regularization};

use crate::Command;

/// A config problem, with the 1-based line it came from when there is one.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn missing(key: &str, command: Command) -> Self {
        Self { line: None, message: format!("missing key `{key}` required by `{}`", command.name()) }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Location of the sensor or control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum XiSpec {
    Rational(u64, u64),
    Float(f64),
}

impl XiSpec {
    pub fn value(&self) -> f64 {
        match *self {
            Self::Rational(p, q) => p as f64 / q as f64,
            Self::Float(x) => x,
        }
    }
}

/// Initial data.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSpec {
    /// `a_m = 1/(m+1)^2`, `beta = 0`.
    SmoothDecay,
    /// `a_k = 1`, everything else zero.
    SingleMode(usize),
    /// Explicit `a` and `beta` lists.
    Coefficients { a: Vec<f64>, beta: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    Internal,
    Pointwise,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub modes: usize,
    pub horizon: f64,
    pub xi: Option<XiSpec>,
    pub n: Option<u32>,
    pub n_list: Option<Vec<u32>>,
    pub regularization: Regularization,
    pub grid: usize,
    pub data: DataSpec,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tolerance: f64,
    pub region: Option<RegionKind>,
    pub kernel_step: f64,
    pub kernel_tmax: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            modes: 16,
            horizon: 2.0,
            xi: None,
            n: None,
            n_list: None,
            regularization: Regularization::default(),
            grid: 2048,
            data: DataSpec::SmoothDecay,
            seed: 0,
            out: None,
            tolerance: 1e-6,
            region: None,
            kernel_step: 0.01,
            kernel_tmax: 10.0,
        }
    }
}

const KEYS: &[&str] = &[
    "modes",
    "horizon",
    "xi",
    "n",
    "n_list",
    "epsilon",
    "regularization",
    "grid",
    "data",
    "a",
    "beta",
    "seed",
    "out",
    "tolerance",
    "region",
    "kernel_step",
    "kernel_tmax",
];

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::at(line, format!("`{key}`: cannot parse `{v}`")))
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse_num(line, key, v)?;
    if !x.is_finite() {
        return Err(ConfigError::at(line, format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_num(line, key, s.trim())).collect()
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn parse_xi(line: usize, v: &str) -> Result<XiSpec, ConfigError> {
    if let Some((p, q)) = v.split_once('/') {
        let p: u64 = parse_num(line, "xi", p.trim())?;
        let q: u64 = parse_num(line, "xi", q.trim())?;
        if p == 0 || p >= q {
            return Err(ConfigError::at(line, format!("xi = {p}/{q} must lie in (0, 1)")));
        }
        if gcd(p, q) != 1 {
            return Err(ConfigError::at(line, format!("xi = {p}/{q} is not in lowest terms")));
        }
        Ok(XiSpec::Rational(p, q))
    } else {
        Ok(XiSpec::Float(parse_f64(line, "xi", v)?))
    }
}

impl ExperimentConfig {
    /// Parses and validates a config for `command`.
    pub fn parse(text: &str, command: Command) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut lines: HashMap<&str, usize> = HashMap::new();
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let no = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| ConfigError::at(no, format!("expected `key = value`, found `{body}`")))?;
            let key = key.trim();
            let value = value.trim();
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::at(no, format!("unknown key `{key}`")));
            };
            if let Some(prev) = lines.insert(known, no) {
                return Err(ConfigError::at(no, format!("`{key}` already set on line {prev}")));
            }
            entries.push((no, known, value));
        }

        let mut reg_kind = "relative".to_string();
        let mut eps = None;
        let mut a = None;
        let mut beta = None;
        for &(no, key, v) in &entries {
            match key {
                "modes" => {
                    cfg.modes = parse_num(no, key, v)?;
                    if cfg.modes == 0 {
                        return Err(ConfigError::at(no, "`modes` must be at least 1"));
                    }
                }
                "horizon" => {
                    cfg.horizon = parse_f64(no, key, v)?;
                    if cfg.horizon <= 0.0 {
                        return Err(ConfigError::at(no, "`horizon` must be positive"));
                    }
                }
                "xi" => cfg.xi = Some(parse_xi(no, v)?),
                "n" => {
                    let n: u32 = parse_num(no, key, v)?;
                    if n == 0 {
                        return Err(ConfigError::at(no, "`n` must be positive"));
                    }
                    cfg.n = Some(n);
                }
                "n_list" => {
                    let list: Vec<u32> = parse_list(no, key, v)?;
                    if list.contains(&0) {
                        return Err(ConfigError::at(no, "`n_list` entries must be positive"));
                    }
                    if list.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(ConfigError::at(no, "`n_list` must be strictly increasing"));
                    }
                    cfg.n_list = Some(list);
                }
                "epsilon" => {
                    let e = parse_f64(no, key, v)?;
                    if e < 0.0 {
                        return Err(ConfigError::at(no, "`epsilon` must be non-negative"));
                    }
                    eps = Some(e);
                }
                "regularization" => {
                    if v != "relative" && v != "absolute" {
                        return Err(ConfigError::at(no, "`regularization` is `relative` or `absolute`"));
                    }
                    reg_kind = v.to_string();
                }
                "grid" => {
                    cfg.grid = parse_num(no, key, v)?;
                    if cfg.grid < 2 {
                        return Err(ConfigError::at(no, "`grid` must be at least 2"));
                    }
                }
                "data" => {
                    cfg.data = match v.split_whitespace().collect::<Vec<_>>().as_slice() {
                        ["smooth-decay"] => DataSpec::SmoothDecay,
                        ["single-mode", k] => DataSpec::SingleMode(parse_num(no, key, k)?),
                        ["coefficients"] => DataSpec::Coefficients { a: Vec::new(), beta: Vec::new() },
                        _ => {
                            return Err(ConfigError::at(
                                no,
                                format!("`data` is `smooth-decay`, `single-mode <k>` or `coefficients`, found `{v}`"),
                            ))
                        }
                    }
                }
                "a" => a = Some(parse_list::<f64>(no, key, v)?),
                "beta" => beta = Some(parse_list::<f64>(no, key, v)?),
                "seed" => cfg.seed = parse_num(no, key, v)?,
                "out" => cfg.out = Some(PathBuf::from(v)),
                "tolerance" => {
                    cfg.tolerance = parse_f64(no, key, v)?;
                    if cfg.tolerance <= 0.0 {
                        return Err(ConfigError::at(no, "`tolerance` must be positive"));
                    }
                }
                "region" => {
                    cfg.region = Some(match v {
                        "internal" => RegionKind::Internal,
                        "pointwise" => RegionKind::Pointwise,
                        _ => return Err(ConfigError::at(no, "`region` is `internal` or `pointwise`")),
                    })
                }
                "kernel_step" => {
                    cfg.kernel_step = parse_f64(no, key, v)?;
                    if !(cfg.kernel_step > 0.0 && cfg.kernel_step < 1.0) {
                        return Err(ConfigError::at(no, "`kernel_step` must lie in (0, 1)"));
                    }
                }
                "kernel_tmax" => {
                    cfg.kernel_tmax = parse_f64(no, key, v)?;
                    if cfg.kernel_tmax <= 0.0 {
                        return Err(ConfigError::at(no, "`kernel_tmax` must be positive"));
                    }
                }
                _ => unreachable!("key list and match arms agree"),
            }
        }
        let e = eps.unwrap_or(1e-10);
        cfg.regularization =
            if reg_kind == "absolute" { Regularization::Absolute(e) } else { Regularization::Relative(e) };

        match &mut cfg.data {
            DataSpec::Coefficients { a: ca, beta: cb } => {
                let a = a.ok_or_else(|| ConfigError::at(lines["data"], "`data = coefficients` needs an `a` list"))?;
                if a.len() != cfg.modes {
                    return Err(ConfigError::at(
                        lines["a"],
                        format!("`a` has {} entries but `modes` is {}", a.len(), cfg.modes),
                    ));
                }
                let b = beta.unwrap_or_else(|| vec![0.0; cfg.modes]);
                if b.len() != cfg.modes {
                    return Err(ConfigError::at(
                        lines["beta"],
                        format!("`beta` has {} entries but `modes` is {}", b.len(), cfg.modes),
                    ));
                }
                if a.iter().chain(&b).any(|v| !v.is_finite()) {
                    return Err(ConfigError::at(lines["a"], "coefficients must be finite"));
                }
                *ca = a;
                *cb = b;
            }
            DataSpec::SingleMode(k) => {
                if *k >= cfg.modes {
                    return Err(ConfigError::at(
                        lines["data"],
                        format!("mode {k} is not below `modes` = {}", cfg.modes),
                    ));
                }
                if a.is_some() || beta.is_some() {
                    return Err(ConfigError::at(lines["data"], "`a`/`beta` only go with `data = coefficients`"));
                }
            }
            DataSpec::SmoothDecay => {
                if a.is_some() || beta.is_some() {
                    let l = lines.get("a").or(lines.get("beta")).copied().unwrap_or(0);
                    return Err(ConfigError::at(l, "`a`/`beta` only go with `data = coefficients`"));
                }
            }
        }

        cfg.validate_for(command, &lines)?;
        Ok(cfg)
    }

    fn validate_for(&self, command: Command, lines: &HashMap<&str, usize>) -> Result<(), ConfigError> {
        let xi = self.xi.ok_or_else(|| ConfigError::missing("xi", command))?;
        let xi_line = lines["xi"];
        if command != Command::Simulate {
            if let XiSpec::Float(_) = xi {
                return Err(ConfigError::at(xi_line, format!("`{}` needs a rational xi written p/q", command.name())));
            }
        } else if !(0.0..=1.0).contains(&xi.value()) {
            return Err(ConfigError::at(xi_line, "xi must lie in [0, 1]"));
        }
        let check_window = |n: u32, line: usize| -> Result<(), ConfigError> {
            ControlRegion::internal(xi.value(), n).map(|_| ()).map_err(|e| ConfigError::at(line, e.to_string()))
        };
        match command {
            Command::Simulate | Command::StrategicCheck => {}
            Command::Observability => {
                let ns = self.n_values();
                if ns.is_empty() {
                    return Err(ConfigError::missing("n or n_list", command));
                }
                for n in ns {
                    let line = lines.get("n_list").or(lines.get("n")).copied().unwrap_or(0);
                    check_window(n, line)?;
                }
            }
            Command::Control => {
                let region = self.region.ok_or_else(|| ConfigError::missing("region", command))?;
                if region == RegionKind::Internal {
                    let n = self.n.ok_or_else(|| ConfigError::missing("n", command))?;
                    check_window(n, lines["n"])?;
                }
            }
            Command::Sweep => {
                let list = self.n_list.as_ref().ok_or_else(|| ConfigError::missing("n_list", command))?;
                if list.is_empty() {
                    return Err(ConfigError::at(lines["n_list"], "`n_list` is empty"));
                }
                check_window(list[0], lines["n_list"])?;
            }
        }
        Ok(())
    }

    /// Every `n` mentioned by `n` or `n_list`, ascending and deduplicated.
    pub fn n_values(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.n.into_iter().chain(self.n_list.iter().flatten().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn rational_xi(&self) -> Option<(u64, u64)> {
        match self.xi {
            Some(XiSpec::Rational(p, q)) => Some((p, q)),
            _ => None,
        }
    }

    pub fn initial_data(&self) -> ModalState {
        match &self.data {
            DataSpec::SmoothDecay => ModalState::smooth_decay(self.modes),
            DataSpec::SingleMode(k) => ModalState::single_mode(self.modes, *k).expect("validated mode index"),
            DataSpec::Coefficients { a, beta } => {
                ModalState::new(a.clone(), beta.clone()).expect("validated coefficients")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADLINE: &str = "modes = 16\nhorizon = 2\nxi = 1/3\nregion = internal\nn = 8\ndata = smooth-decay\n";

    #[test]
    fn parses_headline() {
        let c = ExperimentConfig::parse(HEADLINE, Command::Control).unwrap();
        assert_eq!(c.modes, 16);
        assert_eq!(c.xi, Some(XiSpec::Rational(1, 3)));
        assert_eq!(c.n, Some(8));
        assert_eq!(c.region, Some(RegionKind::Internal));
        assert_eq!(c.initial_data(), ModalState::smooth_decay(16));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = ExperimentConfig::parse("modes = 4\n\nbogus = 1\n", Command::Simulate).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().starts_with("line 3:"));

        let e = ExperimentConfig::parse("xi = 1/3\nxi = 1/2\n", Command::StrategicCheck).unwrap_err();
        assert_eq!(e.line, Some(2));

        let e = ExperimentConfig::parse("# c\nxi = 0.3\n", Command::StrategicCheck).unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(ExperimentConfig::parse("xi = 0.3\n", Command::Simulate).is_ok());

        let e = ExperimentConfig::parse("xi = 2/6\n", Command::StrategicCheck).unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn sweep_needs_nonempty_list() {
        let e = ExperimentConfig::parse("xi = 1/3\nn_list =\n", Command::Sweep).unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(ExperimentConfig::parse("xi = 1/3\n", Command::Sweep).is_err());
        assert!(ExperimentConfig::parse("xi = 1/3\nn_list = 8, 4\n", Command::Sweep).is_err());
        assert!(ExperimentConfig::parse("xi = 1/3\nn_list = 4, 8\n", Command::Sweep).is_ok());
    }

    #[test]
    fn window_is_checked() {
        let e = ExperimentConfig::parse("xi = 4/5\nregion = internal\nn = 4\n", Command::Control).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(ExperimentConfig::parse("xi = 4/5\nregion = pointwise\n", Command::Control).is_ok());
    }

    #[test]
    fn data_presets() {
        let c = ExperimentConfig::parse("xi = 1/2\nmodes = 3\ndata = single-mode 2\n", Command::Simulate).unwrap();
        assert_eq!(c.initial_data().a(), &[0.0, 0.0, 1.0]);
        let c = ExperimentConfig::parse(
            "xi = 1/2\nmodes = 2\ndata = coefficients\na = 1, 2\nbeta = 0.5, 0\n",
            Command::Simulate,
        )
        .unwrap();
        assert_eq!(c.initial_data().beta(), &[0.5, 0.0]);
        let e = ExperimentConfig::parse("xi = 1/2\nmodes = 3\ndata = coefficients\na = 1, 2\n", Command::Simulate)
            .unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(ExperimentConfig::parse("xi = 1/2\nmodes = 3\ndata = single-mode 3\n", Command::Simulate).is_err());
    }

    #[test]
    fn regularization_keys() {
        let c = ExperimentConfig::parse("xi = 1/3\nepsilon = 0\nregularization = absolute\n", Command::StrategicCheck)
            .unwrap();
        assert_eq!(c.regularization, Regularization::Absolute(0.0));
        let c = ExperimentConfig::parse("xi = 1/3\nepsilon = 1e-8\n", Command::StrategicCheck).unwrap();
        assert_eq!(c.regularization, Regularization::Relative(1e-8));
    }
}
