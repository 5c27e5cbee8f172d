use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{append_trace, FitObjectiveConfig, FitResult, Problem, SearchSpace, TraceEntry};
use crate::data::ExperimentRecord;
use crate::error::{Error, Result};

pub const MAX_GRID_EVALUATIONS: u64 = 10_000_000;

/// Exhaustive Cartesian grid, evaluated in row-major order (last coefficient
/// varies fastest). Each axis is spaced linearly or logarithmically per its
/// dimension's scale.
pub fn grid_search(
    space: &SearchSpace,
    records: &[ExperimentRecord],
    config: &FitObjectiveConfig,
    points_per_dim: usize,
) -> Result<FitResult> {
    if points_per_dim < 2 {
        return Err(Error::InvalidArgument("grid search needs at least 2 points per dimension".into()));
    }
    let total = (points_per_dim as u64)
        .checked_pow(space.len() as u32)
        .filter(|&t| t <= MAX_GRID_EVALUATIONS)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{points_per_dim}^{} grid points exceed the budget of {MAX_GRID_EVALUATIONS} evaluations",
                space.len()
            ))
        })? as usize;
    let problem = Problem::new(space.law(), records, *config)?;
    let dim = space.len();
    let candidate = |mut index: usize| {
        let mut unit = vec![0.0; dim];
        for slot in unit.iter_mut().rev() {
            *slot = (index % points_per_dim) as f64 / (points_per_dim - 1) as f64;
            index /= points_per_dim;
        }
        space.from_unit(&unit)
    };
    let trace: Vec<Result<TraceEntry>> = (0..total)
        .into_par_iter()
        .map(|index| {
            let c = candidate(index);
            problem.eval(&c).map(|objective| TraceEntry { index, candidate: c, objective })
        })
        .collect();
    let trace = trace.into_iter().collect::<Result<Vec<_>>>()?;
    FitResult::from_trace(space.law(), "grid", None, trace)
}

pub(crate) fn sample_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen::<f64>()).collect()
}

/// `budget` independent samples, uniform on each axis's scale.
pub fn random_search(
    space: &SearchSpace,
    records: &[ExperimentRecord],
    config: &FitObjectiveConfig,
    budget: usize,
    seed: u64,
) -> Result<FitResult> {
    if budget == 0 {
        return Err(Error::InvalidArgument("random search budget must be >= 1".into()));
    }
    let problem = Problem::new(space.law(), records, *config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<Vec<f64>> =
        (0..budget).map(|_| space.from_unit(&sample_unit(&mut rng, space.len()))).collect();
    let objectives = problem.eval_batch(&candidates)?;
    let mut trace = Vec::with_capacity(budget);
    append_trace(&mut trace, candidates, objectives);
    FitResult::from_trace(space.law(), "random", Some(seed), trace)
}
