//! Utility of an impact and the profits it induces.
//!
//! A group's profit is its outcome weighted by the utility of its impact,
//! `Pi_g = U(I_g) rho_g`, and the game's profit is the ratio-weighted mean.
//! Constant utility gives back the mean outcome and linear utility gives
//! minus the volatility.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GameConfig, GroupVector, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconomicsError {
    #[error("utility is defined for positive impacts only, got {0}")]
    NonPositiveImpact(f64),
    #[error("power utility exponent must lie in (0, 1), got {0}")]
    BadExponent(f64),
    #[error("unknown utility `{0}` (expected const, linear, pow:<d> or sat)")]
    UnknownUtility(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The utility families a game can be scored with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum UtilitySpec {
    /// `U(I) = 1`
    Constant,
    /// `U(I) = I`
    Linear,
    /// `U(I) = I^d` with `0 < d < 1`
    Power(f64),
    /// `U(I) = I / (I + 1)`
    Saturating,
}

impl UtilitySpec {
    pub fn power(d: f64) -> Result<Self, EconomicsError> {
        if d > 0.0 && d < 1.0 {
            Ok(Self::Power(d))
        } else {
            Err(EconomicsError::BadExponent(d))
        }
    }

    pub fn eval(&self, impact: f64) -> Result<f64, EconomicsError> {
        if !(impact > 0.0) {
            return Err(EconomicsError::NonPositiveImpact(impact));
        }
        Ok(match *self {
            Self::Constant => 1.0,
            Self::Linear => impact,
            Self::Power(d) => impact.powf(d),
            Self::Saturating => impact / (impact + 1.0),
        })
    }

    /// Name of the profit column in sweep tables, e.g. `pi_pow_0.5`.
    pub fn column_name(&self) -> String {
        match self {
            Self::Constant => "pi_const".into(),
            Self::Linear => "pi_linear".into(),
            Self::Power(d) => format!("pi_pow_{d}"),
            Self::Saturating => "pi_sat".into(),
        }
    }

    /// Inverse of [`UtilitySpec::column_name`].
    pub fn from_column_name(name: &str) -> Option<Self> {
        match name.strip_prefix("pi_")? {
            "const" => Some(Self::Constant),
            "linear" => Some(Self::Linear),
            "sat" => Some(Self::Saturating),
            rest => Self::power(rest.strip_prefix("pow_")?.parse().ok()?).ok(),
        }
    }

    /// Parses a comma separated list such as `const,linear,pow:0.5`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>, EconomicsError> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for UtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant => f.write_str("const"),
            Self::Linear => f.write_str("linear"),
            Self::Power(d) => write!(f, "pow:{d}"),
            Self::Saturating => f.write_str("sat"),
        }
    }
}

impl FromStr for UtilitySpec {
    type Err = EconomicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "const" => Ok(Self::Constant),
            "linear" => Ok(Self::Linear),
            "sat" => Ok(Self::Saturating),
            _ => match s.strip_prefix("pow:").map(str::parse::<f64>) {
                Some(Ok(d)) => Self::power(d),
                _ => Err(EconomicsError::UnknownUtility(s.to_string())),
            },
        }
    }
}

impl TryFrom<String> for UtilitySpec {
    type Error = EconomicsError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<UtilitySpec> for String {
    fn from(u: UtilitySpec) -> Self {
        u.to_string()
    }
}

/// `U(impact)`.
pub fn utility_eval(spec: UtilitySpec, impact: f64) -> Result<f64, EconomicsError> {
    spec.eval(impact)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfitReport {
    pub per_group: GroupVector,
    pub overall: f64,
}

/// Profits of each group and of the whole game for the outcomes `rho_g`.
pub fn profit(
    config: &GameConfig,
    rho_g: &GroupVector,
    spec: UtilitySpec,
) -> Result<ProfitReport, EconomicsError> {
    if rho_g.len() != config.n_groups() {
        return Err(ModelError::LengthMismatch {
            expected: config.n_groups(),
            found: rho_g.len(),
        }
        .into());
    }
    let per_group = config
        .impacts()
        .zip(rho_g.iter())
        .map(|(i, &r)| Ok(spec.eval(i)? * r))
        .collect::<Result<Vec<_>, EconomicsError>>()?;
    let per_group = GroupVector::new(per_group);
    let overall = config.group_mean(&per_group)?;
    Ok(ProfitReport { per_group, overall })
}
