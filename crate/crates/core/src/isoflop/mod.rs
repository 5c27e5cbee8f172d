//! Constant-compute curves, spike detection and cross-law divergence.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::log_spaced;
use crate::error::{DomainError, Error, Result};
use crate::laws::{CoefficientSet, ComputeBudget, LawId, ModelScale};

pub mod svg;

pub const DEFAULT_SAMPLES: usize = 256;
pub const DEFAULT_SPIKE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoflopSample {
    pub n: f64,
    pub d: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoflopCurve {
    pub law: LawId,
    pub budget: ComputeBudget,
    pub sparsity: f64,
    pub samples: Vec<IsoflopSample>,
}

impl IsoflopCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "d", "loss"])?;
        for p in &self.samples {
            w.write_record([p.n.to_string(), p.d.to_string(), p.loss.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `[1e-4, 1e4] * sqrt(C/6)` clipped to `[1e6, 1e13]`.
pub fn default_n_range(c: ComputeBudget) -> (f64, f64) {
    let root = (c.flops() / 6.0).sqrt();
    ((root * 1e-4).clamp(1e6, 1e13), (root * 1e4).clamp(1e6, 1e13))
}

/// Samples the law at log-spaced `n` with `d = C / (6n)`.
pub fn isoflop_curve(
    coeffs: &CoefficientSet,
    c: ComputeBudget,
    s: f64,
    n_min: f64,
    n_max: f64,
    samples: usize,
) -> Result<IsoflopCurve> {
    if !(n_min.is_finite() && n_max.is_finite() && n_min > 0.0 && n_min < n_max) {
        return Err(Error::InvalidArgument(format!("need 0 < n_min < n_max, got [{n_min}, {n_max}]")));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    let points = log_spaced(n_min, n_max, samples)
        .into_par_iter()
        .map(|n| {
            let d = c.flops() / (6.0 * n);
            coeffs.eval_at(n, d, s).map(|loss| IsoflopSample { n, d, loss })
        })
        .collect::<std::result::Result<Vec<_>, DomainError>>()?;
    Ok(IsoflopCurve { law: coeffs.law(), budget: c, sparsity: s, samples: points })
}

/// Lowest-loss sample; ties go to the smallest `n`.
pub fn curve_minimum(curve: &IsoflopCurve) -> IsoflopSample {
    argmin(curve).1
}

fn argmin(curve: &IsoflopCurve) -> (usize, IsoflopSample) {
    let mut best = 0;
    for (i, p) in curve.samples.iter().enumerate() {
        if p.loss < curve.samples[best].loss {
            best = i;
        }
    }
    (best, curve.samples[best])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeReport {
    pub spiky: bool,
    /// Relative excess of the smallest-`n` loss over the curve minimum.
    pub rise: f64,
    pub interior_minimum: bool,
}

/// A curve is spiky when its minimum lies strictly inside the sampled range
/// and the loss at the smallest `n` exceeds it by more than `rise_threshold`.
pub fn detect_spike(curve: &IsoflopCurve, rise_threshold: f64) -> Result<SpikeReport> {
    if !(rise_threshold > 0.0 && rise_threshold.is_finite()) {
        return Err(Error::InvalidArgument(format!("rise threshold must be positive, got {rise_threshold}")));
    }
    let (idx, min) = argmin(curve);
    let rise = (curve.samples[0].loss - min.loss) / min.loss;
    let interior = idx > 0 && idx + 1 < curve.samples.len();
    Ok(SpikeReport { spiky: interior && rise > rise_threshold, rise, interior_minimum: interior })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub scale: ModelScale,
    pub loss_a: f64,
    pub loss_b: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub law_a: LawId,
    pub law_b: LawId,
    pub max_abs_diff: f64,
    pub argmax: ModelScale,
    pub points: Vec<Divergence>,
}

impl DivergenceReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "d", "loss_a", "loss_b", "diff"])?;
        for p in &self.points {
            w.write_record([
                p.scale.n_active().to_string(),
                p.scale.d_tokens().to_string(),
                p.loss_a.to_string(),
                p.loss_b.to_string(),
                p.diff.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-point `|L_a - L_b|` over `grid` and its maximum (first occurrence).
pub fn compare_laws(a: &CoefficientSet, b: &CoefficientSet, grid: &[ModelScale]) -> Result<DivergenceReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("comparison grid is empty".into()));
    }
    let points = grid
        .par_iter()
        .map(|scale| {
            let loss_a = a.eval(scale)?;
            let loss_b = b.eval(scale)?;
            Ok(Divergence { scale: *scale, loss_a, loss_b, diff: (loss_a - loss_b).abs() })
        })
        .collect::<std::result::Result<Vec<_>, DomainError>>()?;
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.diff > points[best].diff {
            best = i;
        }
    }
    Ok(DivergenceReport {
        law_a: a.law(),
        law_b: b.law(),
        max_abs_diff: points[best].diff,
        argmax: points[best].scale,
        points,
    })
}
