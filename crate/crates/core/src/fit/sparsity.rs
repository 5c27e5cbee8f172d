use super::{objective, FitObjectiveConfig};
use crate::data::ExperimentRecord;
use crate::error::{Error, Result};
use crate::laws::{CoefficientSet, Generalized, Hoffmann};
use crate::scalar::{bracket, golden_section};

/// Least-squares estimate of the generalized law's sparsity factor `c`,
/// holding `e, a, b, alpha, beta` at `base` and the entropy exponent at
/// `gamma`. Every record must be sparse.
pub fn fit_sparsity_factor(records: &[ExperimentRecord], base: &Hoffmann, gamma: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to fit the sparsity factor".into()));
    }
    if let Some(i) = records.iter().position(|r| r.scale.sparsity() <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "record {i} is dense; the sparsity factor is fitted on sparse records only"
        )));
    }
    let config = FitObjectiveConfig::least_squares();
    let mut failure = None;
    let mut f = |c: f64| {
        let coeffs = CoefficientSet::Generalized(Generalized {
            e: base.e,
            a: base.a,
            b: base.b,
            c,
            alpha: base.alpha,
            beta: base.beta,
            gamma,
        });
        objective(&coeffs, records, &config).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            f64::INFINITY
        })
    };
    let (lo, _, hi) = bracket(&mut f, 0.0, 1.0)
        .ok_or_else(|| Error::InvalidArgument("objective has no minimum along the sparsity factor".into()))?;
    let c = golden_section(&mut f, lo, hi, 1e-15);
    match failure {
        Some(e) => Err(e),
        None => Ok(c),
    }
}
