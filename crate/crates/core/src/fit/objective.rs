use serde::{Deserialize, Serialize};

use crate::data::ExperimentRecord;
use crate::error::{Error, Result};
use crate::laws::CoefficientSet;

/// Objective assigned to candidates whose predictions are unusable
/// (non-finite, or non-positive in log space).
pub const INVALID_OBJECTIVE: f64 = f64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    /// Mean of squared residuals.
    Mse,
    /// Mean Huber loss: `r^2/2` inside `delta`, `delta (|r| - delta/2)` outside.
    Huber { delta: f64 },
    /// Mean squared log ratio `(ln pred - ln obs)^2`, whatever the residual space.
    LogMse,
}

/// Space in which residuals are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualSpace {
    Loss,
    LogLoss,
}

/// Defaults to MSE in log-loss space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitObjectiveConfig {
    pub metric: Metric,
    pub space: ResidualSpace,
}

impl Default for FitObjectiveConfig {
    fn default() -> Self {
        FitObjectiveConfig { metric: Metric::Mse, space: ResidualSpace::LogLoss }
    }
}

impl FitObjectiveConfig {
    pub fn least_squares() -> Self {
        FitObjectiveConfig { metric: Metric::Mse, space: ResidualSpace::Loss }
    }

    pub fn validate(&self) -> Result<()> {
        match self.metric {
            Metric::Huber { delta } if !(delta > 0.0 && delta.is_finite()) => {
                Err(Error::InvalidArgument(format!("huber delta must be > 0, got {delta}")))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn residual(&self, predicted: f64, observed: f64) -> Option<f64> {
        let log_residual = |p: f64, o: f64| (p > 0.0).then(|| p.ln() - o.ln());
        match (self.metric, self.space) {
            (Metric::LogMse, _) | (_, ResidualSpace::LogLoss) => log_residual(predicted, observed),
            (_, ResidualSpace::Loss) => Some(predicted - observed),
        }
    }

    /// Weight turning the penalty into a reweighted square near `r`.
    pub(crate) fn irls_weight(&self, r: f64) -> f64 {
        match self.metric {
            Metric::Huber { delta } if r.abs() > delta => delta / r.abs(),
            _ => 1.0,
        }
    }

    pub(crate) fn penalty(&self, r: f64) -> f64 {
        match self.metric {
            Metric::Mse | Metric::LogMse => r * r,
            Metric::Huber { delta } => {
                let a = r.abs();
                if a <= delta {
                    0.5 * r * r
                } else {
                    delta * (a - 0.5 * delta)
                }
            }
        }
    }
}

/// Per-record residuals in the configured space, or `None` when some
/// prediction is unusable.
pub(crate) fn residuals(
    coeffs: &CoefficientSet,
    records: &[ExperimentRecord],
    config: &FitObjectiveConfig,
) -> Result<Option<Vec<f64>>> {
    let mut out = Vec::with_capacity(records.len());
    for (index, r) in records.iter().enumerate() {
        let predicted = coeffs.eval(&r.scale).map_err(|source| Error::Record { index, source })?;
        match config.residual(predicted, r.loss) {
            Some(res) if res.is_finite() => out.push(res),
            _ => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// Mean penalty, or [`INVALID_OBJECTIVE`] when unusable.
pub(crate) fn mean_penalty(residuals: Option<&[f64]>, config: &FitObjectiveConfig) -> f64 {
    match residuals {
        Some(r) if !r.is_empty() => {
            let mean = r.iter().map(|&x| config.penalty(x)).sum::<f64>() / r.len() as f64;
            if mean.is_finite() {
                mean
            } else {
                INVALID_OBJECTIVE
            }
        }
        _ => INVALID_OBJECTIVE,
    }
}

/// Mean per-record metric between predicted and observed loss. Zero iff
/// every prediction matches its observation.
pub fn objective(
    coeffs: &CoefficientSet,
    records: &[ExperimentRecord],
    config: &FitObjectiveConfig,
) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("objective needs at least one record".into()));
    }
    config.validate()?;
    Ok(mean_penalty(residuals(coeffs, records, config)?.as_deref(), config))
}
