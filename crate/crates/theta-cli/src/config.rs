//! Run configuration files.

use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use theta_core::padic::is_prime;
use theta_core::theta_match::{
    Battery, ContextSpec, MatchSettings, DEFAULT_PRECISION, MIN_PRECISION,
};
use theta_core::{Result, ThetaError};

pub const PRECISION_VAR: &str = "THETA_PRECISION";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiConfig {
    pub epsilon: String,
    pub d: i64,
}

impl Default for PsiConfig {
    fn default() -> Self {
        Self {
            epsilon: "1".into(),
            d: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    pub a: String,
    pub b: String,
    pub kappa: String,
    #[serde(default)]
    pub psi: PsiConfig,
    /// Inner level of the random battery functions.
    #[serde(rename = "M", default)]
    pub m: i64,
    /// Outer level of the random battery functions.
    #[serde(rename = "N", default = "default_n")]
    pub n: i64,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    #[serde(default = "default_window")]
    pub r_window: [i64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_bigcell: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_battery")]
    pub battery_size: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Parses "n" or "n/d".
pub fn parse_nonzero(name: &str, s: &str) -> Result<BigRational> {
    let x: BigRational = s
        .trim()
        .parse()
        .map_err(|_| ThetaError::Invalid(format!("{name} = {s:?} is not a rational number")))?;
    if x == BigRational::from_integer(0.into()) {
        return Err(ThetaError::Invalid(format!("{name} must be nonzero")));
    }
    Ok(x)
}

fn default_n() -> i64 {
    1
}

fn default_k_max() -> u32 {
    MatchSettings::default().k_max
}

fn default_window() -> [i64; 2] {
    let w = MatchSettings::default().r_window;
    [w.0, w.1]
}

fn default_battery() -> usize {
    Battery::default().size
}

fn default_classes() -> usize {
    Battery::default().classes
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ThetaError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| ThetaError::Invalid(format!("bad config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) || self.p == 2 {
            return Err(ThetaError::Invalid(format!(
                "p = {} must be an odd prime",
                self.p
            )));
        }
        for (name, x) in [
            ("a", &self.a),
            ("b", &self.b),
            ("kappa", &self.kappa),
            ("psi.epsilon", &self.psi.epsilon),
        ] {
            parse_nonzero(name, x)?;
        }
        if self.r_window[0] > self.r_window[1] {
            return Err(ThetaError::Invalid("r_window must be increasing".into()));
        }
        if self.m < 0 || self.n + self.m < 0 {
            return Err(ThetaError::Invalid(
                "battery levels must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Config value, then the environment variable, then the default.
    pub fn resolved_precision(&self) -> Result<u32> {
        let prec = match self.precision {
            Some(p) => p,
            None => match std::env::var(PRECISION_VAR) {
                Ok(s) => s.trim().parse().map_err(|_| {
                    ThetaError::Invalid(format!("{PRECISION_VAR}={s} is not a positive integer"))
                })?,
                Err(_) => DEFAULT_PRECISION,
            },
        };
        if prec < MIN_PRECISION {
            return Err(ThetaError::Invalid(format!(
                "precision {prec} is below {MIN_PRECISION}"
            )));
        }
        Ok(prec)
    }

    pub fn spec(&self) -> Result<ContextSpec> {
        Ok(ContextSpec {
            p: self.p,
            a: parse_nonzero("a", &self.a)?,
            b: parse_nonzero("b", &self.b)?,
            kappa: parse_nonzero("kappa", &self.kappa)?,
            psi_epsilon: parse_nonzero("psi.epsilon", &self.psi.epsilon)?,
            psi_d: self.psi.d,
        })
    }

    pub fn settings(&self) -> Result<MatchSettings> {
        let d = MatchSettings::default();
        Ok(MatchSettings {
            precision: self.resolved_precision()?,
            k_max: self.k_max,
            r_window: (self.r_window[0], self.r_window[1]),
            tol: self.tol.unwrap_or(d.tol),
            tol_bigcell: self.tol_bigcell.unwrap_or(d.tol_bigcell),
        })
    }

    pub fn battery(&self, seed: Option<u64>) -> Battery {
        Battery {
            seed: seed.unwrap_or(self.seed),
            size: self.battery_size,
            n: self.n,
            m: self.m,
            classes: self.classes,
            parity: None,
        }
    }
}
