//! Coefficient estimation from experiment records.
//!
//! Every method minimizes [`objective`] over a [`SearchSpace`] and returns a
//! [`FitResult`] carrying the full evaluation trace. Candidate evaluation
//! inside one optimizer step fans out over the rayon pool; results are merged
//! in candidate order, so outcomes do not depend on the thread count.

mod objective;
mod search;
mod simplex;
mod smbo;
mod space;
mod sparsity;
mod surrogate;

pub use objective::{objective, FitObjectiveConfig, Metric, ResidualSpace, INVALID_OBJECTIVE};
pub use search::{grid_search, random_search, MAX_GRID_EVALUATIONS};
pub use simplex::local_refine;
pub use smbo::smbo_fit;
pub use space::{Dimension, Entry, Scale, SearchSpace};
pub use sparsity::fit_sparsity_factor;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ExperimentRecord;
use crate::error::{Error, Result};
use crate::laws::{CoefficientSet, LawId};

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub index: usize,
    /// Coefficient values in the law's canonical order.
    pub candidate: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub law: LawId,
    pub method: String,
    pub coefficients: CoefficientSet,
    pub objective: f64,
    pub evaluations: usize,
    pub seed: Option<u64>,
    pub trace: Vec<TraceEntry>,
}

impl FitResult {
    /// Picks the lowest-objective trace entry; ties go to the lowest index.
    pub(crate) fn from_trace(
        law: LawId,
        method: &str,
        seed: Option<u64>,
        trace: Vec<TraceEntry>,
    ) -> Result<Self> {
        let best = trace
            .iter()
            .fold(None::<&TraceEntry>, |best, e| match best {
                Some(b) if b.objective <= e.objective => Some(b),
                _ => Some(e),
            })
            .ok_or_else(|| Error::InvalidArgument("empty trace".into()))?;
        Ok(FitResult {
            law,
            method: method.to_string(),
            coefficients: CoefficientSet::from_values(law, &best.candidate)?,
            objective: best.objective,
            evaluations: trace.len(),
            seed,
            trace,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit results always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes `index,objective,<coefficient names...>`.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string(), "objective".to_string()];
        header.extend(self.law.coefficient_names().iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for e in &self.trace {
            let mut row = vec![e.index.to_string(), e.objective.to_string()];
            row.extend(e.candidate.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Law, data and metric bundled for repeated evaluation.
pub(crate) struct Problem<'a> {
    pub law: LawId,
    pub records: &'a [ExperimentRecord],
    pub config: FitObjectiveConfig,
}

impl Problem<'_> {
    pub fn new(law: LawId, records: &[ExperimentRecord], config: FitObjectiveConfig) -> Result<Problem<'_>> {
        if records.is_empty() {
            return Err(Error::InvalidArgument("no experiment records to fit".into()));
        }
        config.validate()?;
        Ok(Problem { law, records, config })
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        let coeffs = CoefficientSet::from_values(self.law, values)?;
        objective(&coeffs, self.records, &self.config)
    }

    /// Objective together with the residual vector it was computed from.
    pub fn eval_residuals(&self, values: &[f64]) -> Result<(f64, Option<Vec<f64>>)> {
        let coeffs = CoefficientSet::from_values(self.law, values)?;
        let r = objective::residuals(&coeffs, self.records, &self.config)?;
        Ok((objective::mean_penalty(r.as_deref(), &self.config), r))
    }

    /// Evaluates candidates concurrently; output order matches input order.
    pub fn eval_batch(&self, candidates: &[Vec<f64>]) -> Result<Vec<f64>> {
        let results: Vec<Result<f64>> = candidates.par_iter().map(|c| self.eval(c)).collect();
        results.into_iter().collect()
    }
}

pub(crate) fn append_trace(trace: &mut Vec<TraceEntry>, candidates: Vec<Vec<f64>>, objectives: Vec<f64>) {
    for (candidate, objective) in candidates.into_iter().zip(objectives) {
        let index = trace.len();
        trace.push(TraceEntry { index, candidate, objective });
    }
}
