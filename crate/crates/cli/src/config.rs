//! Scenario parsing and resource limits.

use std::str::FromStr;

use serde::Serialize;
use squeezelax_core::{minimal_m, SqueezingParams};

use crate::error::{AppError, AppResult};

pub const MAX_SPINS: usize = 512;
pub const MAX_CUTOFF: usize = 512;
pub const DEFAULT_MAX_DIM: usize = 512;
pub const MAX_DIM_VAR: &str = "SQUEEZELAX_MAX_DIM";

/// Datasets are emitted in units where `gamma_p = 1`.
pub const GAMMA_P: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Limits {
    pub max_dim: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

impl Limits {
    pub fn from_env() -> AppResult<Self> {
        match std::env::var(MAX_DIM_VAR) {
            Ok(s) => Self::parse(&s),
            Err(std::env::VarError::NotPresent) => Ok(Self::default()),
            Err(e) => Err(AppError::config(format!("{MAX_DIM_VAR}: {e}"))),
        }
    }

    pub fn parse(s: &str) -> AppResult<Self> {
        let max_dim: usize = s.trim().parse().map_err(|_| {
            AppError::config(format!("{MAX_DIM_VAR}={s:?} is not a positive integer"))
        })?;
        if max_dim < 2 {
            return Err(AppError::config(format!(
                "{MAX_DIM_VAR} must be >= 2, got {max_dim}"
            )));
        }
        Ok(Self { max_dim })
    }

    pub fn check_spins(&self, spins: &[usize]) -> AppResult<()> {
        for &n in spins {
            if n == 0 {
                return Err(AppError::config("spin count must be >= 1"));
            }
            if n > MAX_SPINS {
                return Err(AppError::config(format!(
                    "{n} spins exceeds the limit {MAX_SPINS}"
                )));
            }
            if n + 1 > self.max_dim {
                return Err(AppError::config(format!(
                    "{n} spins needs dimension {} > {MAX_DIM_VAR}={}",
                    n + 1,
                    self.max_dim
                )));
            }
        }
        Ok(())
    }

    pub fn check_cutoff(&self, cutoff: usize) -> AppResult<()> {
        if cutoff < 2 || cutoff > MAX_CUTOFF.min(self.max_dim) {
            return Err(AppError::config(format!(
                "cutoff {cutoff} outside [2, {}]",
                MAX_CUTOFF.min(self.max_dim)
            )));
        }
        Ok(())
    }
}

/// Squeezing correlation: an explicit value or the minimum-uncertainty bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SqueezingM {
    Minimal,
    Value(f64),
}

impl FromStr for SqueezingM {
    type Err = AppError;

    fn from_str(s: &str) -> AppResult<Self> {
        if s.trim().eq_ignore_ascii_case("minimal") {
            return Ok(SqueezingM::Minimal);
        }
        parse_f64(s).map(SqueezingM::Value)
    }
}

pub fn squeezing(n: f64, m: SqueezingM) -> AppResult<SqueezingParams> {
    let m = match m {
        SqueezingM::Minimal => minimal_m(n)?,
        SqueezingM::Value(v) => v,
    };
    Ok(SqueezingParams::new(n, m, GAMMA_P)?)
}

fn parse_f64(s: &str) -> AppResult<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| AppError::config(format!("{s:?} is not a number")))?;
    if !v.is_finite() {
        return Err(AppError::config(format!("{s:?} is not finite")));
    }
    Ok(v)
}

/// Comma-separated integers; `a..b` expands to the inclusive range.
pub fn parse_spins(s: &str) -> AppResult<Vec<usize>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let int = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| AppError::config(format!("{x:?} is not a spin count")))
        };
        if let Some((a, b)) = item.split_once("..") {
            let (a, b) = (int(a)?, int(b.trim_start_matches('='))?);
            if a > b {
                return Err(AppError::config(format!("empty range {item}")));
            }
            out.extend(a..=b);
        } else {
            out.push(int(item)?);
        }
    }
    if out.is_empty() {
        return Err(AppError::config("empty spin list"));
    }
    Ok(out)
}

pub fn parse_list(s: &str) -> AppResult<Vec<f64>> {
    let out: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(parse_f64)
        .collect::<AppResult<_>>()?;
    if out.is_empty() {
        return Err(AppError::config("empty list"));
    }
    Ok(out)
}

/// Polar angles given in units of pi, each within `[0, 1]`.
pub fn parse_theta(s: &str) -> AppResult<Vec<f64>> {
    let out = parse_list(s)?;
    if let Some(bad) = out.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(AppError::config(format!(
            "theta {bad} (units of pi) outside [0, 1]"
        )));
    }
    Ok(out)
}

pub fn check_positive(name: &str, v: f64) -> AppResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(AppError::config(format!("--{name} must be > 0, got {v}")))
    }
}

/// Full description of a run, written alongside each dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub command: String,
    pub spins: Vec<usize>,
    pub squeezing_n: f64,
    pub squeezing_m: f64,
    pub minimal_uncertainty: bool,
    pub gamma_p: f64,
    pub theta_over_pi: Vec<f64>,
    pub phi: Vec<f64>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub rtol: f64,
    pub jobs: usize,
    pub seed: u64,
    pub max_dim: usize,
    pub version: &'static str,
}

impl Scenario {
    pub fn new(command: &str, p: &SqueezingParams, limits: Limits) -> Self {
        Self {
            command: command.to_string(),
            spins: Vec::new(),
            squeezing_n: p.n(),
            squeezing_m: p.m(),
            minimal_uncertainty: p.is_minimal_uncertainty(),
            gamma_p: p.gamma_p(),
            theta_over_pi: Vec::new(),
            phi: Vec::new(),
            t_final: None,
            dt: None,
            rtol: 0.0,
            jobs: 0,
            seed: 0,
            max_dim: limits.max_dim,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}
