//! Game configurations: impact groups, their population ratios and the
//! pattern-to-agent ratio `alpha`.
//!
//! A configuration is immutable once built. Ratios are renormalized on
//! construction so callers may pass raw head counts; group order is kept and
//! every per-group quantity elsewhere in the crate is indexed the same way.

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest admissible impact. Several closed-form observables divide by the
/// impact, so vanishing impacts are rejected instead of taking limits.
pub const MIN_IMPACT: f64 = 1e-6;

/// Lower bound of the first-group impact in two-group studies.
pub const MIN_IMPACT1: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("a game needs at least one group")]
    EmptyGroups,
    #[error("group {index}: ratio must be positive and finite, got {ratio}")]
    NonPositiveRatio { index: usize, ratio: f64 },
    #[error("group {index}: impact must be at least {MIN_IMPACT:e}, got {impact}")]
    ImpactTooSmall { index: usize, impact: f64 },
    #[error("alpha must be positive and finite, got {0}")]
    NonPositiveAlpha(f64),
    #[error("expected {expected} per-group values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("lambda1 must lie strictly inside (0, 1), got {0}")]
    Lambda1OutOfRange(f64),
    #[error("impact1 must lie in [{MIN_IMPACT1}, 1], got {0}")]
    Impact1OutOfRange(f64),
    #[error("invalid configuration document: {0}")]
    Json(String),
}

/// One homogeneous group of agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    /// Fraction of the population in this group.
    pub ratio: f64,
    /// Weight of each member's action in the aggregate.
    pub impact: f64,
}

/// Ratios, impacts and `alpha = P / N` of one game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameConfig {
    alpha: f64,
    groups: Vec<GroupSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    alpha: f64,
    groups: Vec<GroupSpec>,
}

impl GameConfig {
    /// Validates and builds a configuration, renormalizing the ratios to sum
    /// to one.
    pub fn new(groups: &[(f64, f64)], alpha: f64) -> Result<Self, ModelError> {
        if groups.is_empty() {
            return Err(ModelError::EmptyGroups);
        }
        for (index, &(ratio, impact)) in groups.iter().enumerate() {
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(ModelError::NonPositiveRatio { index, ratio });
            }
            if !(impact >= MIN_IMPACT && impact.is_finite()) {
                return Err(ModelError::ImpactTooSmall { index, impact });
            }
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ModelError::NonPositiveAlpha(alpha));
        }
        let total: f64 = groups.iter().map(|g| g.0).sum();
        let groups = groups
            .iter()
            .map(|&(ratio, impact)| GroupSpec {
                ratio: ratio / total,
                impact,
            })
            .collect();
        Ok(Self { alpha, groups })
    }

    /// Parses the JSON document `{"alpha": .., "groups": [{"ratio": .., "impact": ..}]}`.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ConfigDocument =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        let groups: Vec<_> = doc.groups.iter().map(|g| (g.ratio, g.impact)).collect();
        Self::new(&groups, doc.alpha)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Two groups with the second impact fixed by `<I^2> = 1`.
    pub fn two_group(lambda1: f64, impact1: f64, alpha: f64) -> Result<Self, ModelError> {
        if !(lambda1 > 0.0 && lambda1 < 1.0) {
            return Err(ModelError::Lambda1OutOfRange(lambda1));
        }
        if !(MIN_IMPACT1..=1.0).contains(&impact1) {
            return Err(ModelError::Impact1OutOfRange(impact1));
        }
        let impact2 = ((1.0 - lambda1 * impact1 * impact1) / (1.0 - lambda1)).sqrt();
        Self::new(&[(lambda1, impact1), (1.0 - lambda1, impact2)], alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn groups(&self) -> &[GroupSpec] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn impacts(&self) -> impl Iterator<Item = f64> + '_ {
        self.groups.iter().map(|g| g.impact)
    }

    pub fn ratios(&self) -> impl Iterator<Item = f64> + '_ {
        self.groups.iter().map(|g| g.ratio)
    }

    /// Same group shape with a different `alpha`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ModelError::NonPositiveAlpha(alpha));
        }
        Ok(Self {
            alpha,
            groups: self.groups.clone(),
        })
    }

    /// Ratio-weighted average `sum_g lambda_g v_g`.
    pub fn group_mean(&self, v: &GroupVector) -> Result<f64, ModelError> {
        if v.len() != self.groups.len() {
            return Err(ModelError::LengthMismatch {
                expected: self.groups.len(),
                found: v.len(),
            });
        }
        Ok(self.mean_by(|g, _| v[g]))
    }

    /// Ratio-weighted average of `f(group index, spec)`.
    pub fn mean_by(&self, mut f: impl FnMut(usize, &GroupSpec) -> f64) -> f64 {
        self.groups
            .iter()
            .enumerate()
            .map(|(g, spec)| spec.ratio * f(g, spec))
            .sum()
    }

    /// `<I^2>` over the groups.
    pub fn mean_sq_impact(&self) -> f64 {
        self.mean_by(|_, s| s.impact * s.impact)
    }

    /// Rescales all impacts by one factor so that `<I^2> = 1`.
    pub fn normalize_impacts(&self) -> Self {
        let m2 = self.mean_sq_impact();
        if (m2 - 1.0).abs() <= 4.0 * f64::EPSILON {
            return self.clone();
        }
        let c = m2.sqrt().recip();
        Self {
            alpha: self.alpha,
            groups: self
                .groups
                .iter()
                .map(|g| GroupSpec {
                    ratio: g.ratio,
                    impact: g.impact * c,
                })
                .collect(),
        }
    }
}

/// Shorthand for [`GameConfig::new`].
pub fn build_config(groups: &[(f64, f64)], alpha: f64) -> Result<GameConfig, ModelError> {
    GameConfig::new(groups, alpha)
}

/// Shorthand for [`GameConfig::two_group`].
pub fn two_group_config(lambda1: f64, impact1: f64, alpha: f64) -> Result<GameConfig, ModelError> {
    GameConfig::two_group(lambda1, impact1, alpha)
}

/// One real value per group, aligned with [`GameConfig::groups`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupVector(Vec<f64>);

impl GroupVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn from_fn(len: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..len).map(f).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GroupVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for GroupVector {
    type Output = f64;

    fn index(&self, g: usize) -> &f64 {
        &self.0[g]
    }
}

impl From<Vec<f64>> for GroupVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
