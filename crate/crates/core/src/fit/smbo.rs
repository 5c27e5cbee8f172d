use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::objective::mean_penalty;
use super::search::sample_unit;
use super::surrogate::{GaussianProcess, ResidualModel};
use super::{append_trace, FitObjectiveConfig, FitResult, Problem, SearchSpace, INVALID_OBJECTIVE};
use crate::data::ExperimentRecord;
use crate::error::{Error, Result};

/// Number of best-so-far points the Gaussian process is trained on.
const TRAINING_POINTS: usize = 64;
const GLOBAL_CANDIDATES: usize = 128;
/// Restart candidates copying the best point with one or two coordinates
/// resampled uniformly.
const HOP_CANDIDATES: usize = 128;
/// Lower-confidence-bound weight on the posterior standard deviation.
const EXPLORATION: f64 = 1.96;
/// Trust-region half-width in unit coordinates.
const RADIUS_INITIAL: f64 = 0.1;
const RADIUS_MAX: f64 = 0.5;
const RADIUS_MIN: f64 = 1e-6;
/// Model steps improving the incumbent by less than this fraction count as
/// stalled.
const MIN_PROGRESS: f64 = 1e-3;
/// Runs past their short budget continue while they lead or still improve
/// by this fraction over the last `dim` steps.
const DESCENT: f64 = 0.2;
/// Restart candidates closer than this (times `sqrt(dim)`) to where an
/// earlier run ended are skipped while others remain.
const EXCLUSION: f64 = 0.15;

fn latin_hypercube(rng: &mut ChaCha8Rng, samples: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; samples];
    for j in 0..dim {
        let mut strata: Vec<usize> = (0..samples).collect();
        strata.shuffle(rng);
        for (p, s) in points.iter_mut().zip(strata) {
            p[j] = (s as f64 + rng.gen::<f64>()) / samples as f64;
        }
    }
    points
}

/// Surrogate targets: log objective, with unusable candidates pinned just
/// above the worst usable one.
fn targets(objectives: &[f64]) -> Vec<f64> {
    let logs: Vec<Option<f64>> =
        objectives.iter().map(|&o| (o < INVALID_OBJECTIVE).then(|| o.max(1e-300).ln())).collect();
    let worst = logs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let cap = if worst.is_finite() { worst + 1.0 } else { 0.0 };
    logs.into_iter().map(|l| l.unwrap_or(cap)).collect()
}

fn argmin(values: &[f64]) -> usize {
    values.iter().enumerate().fold(0, |best, (i, v)| if *v < values[best] { i } else { best })
}

fn distance2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Evaluated points with their residual vectors.
struct History {
    units: Vec<Vec<f64>>,
    objectives: Vec<f64>,
    residuals: Vec<Option<Vec<f64>>>,
}

/// Start of a new local run: the lower-confidence-bound minimizer of a
/// Gaussian process over the best points so far, among uniform samples and
/// copies of the best point with a coordinate or two resampled. Candidates
/// near the end points of earlier runs are skipped while others remain.
fn restart_point(rng: &mut ChaCha8Rng, history: &History, ended: &[usize], dim: usize) -> Vec<f64> {
    let mut pool: Vec<Vec<f64>> = (0..GLOBAL_CANDIDATES).map(|_| sample_unit(rng, dim)).collect();
    let best = &history.units[argmin(&history.objectives)];
    for _ in 0..HOP_CANDIDATES {
        let mut c = best.clone();
        let resets = if dim > 1 && rng.gen_bool(0.5) { 2 } else { 1 };
        for _ in 0..resets {
            let j = rng.gen_range(0..dim);
            c[j] = rng.gen();
        }
        pool.push(c);
    }
    let exclusion = EXCLUSION * EXCLUSION * dim as f64;
    let fresh: Vec<Vec<f64>> = pool
        .iter()
        .filter(|c| ended.iter().all(|&e| distance2(c, &history.units[e]) > exclusion))
        .cloned()
        .collect();
    if !fresh.is_empty() {
        pool = fresh;
    }
    let y = targets(&history.objectives);
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    order.truncate(TRAINING_POINTS);
    let gp = GaussianProcess::fit(
        order.iter().map(|&i| history.units[i].clone()).collect(),
        &order.iter().map(|&i| y[i]).collect::<Vec<_>>(),
        1.0,
    );
    let Some(gp) = gp else {
        return pool.swap_remove(0);
    };
    let scores: Vec<f64> = pool
        .par_iter()
        .map(|c| {
            let (mean, sd) = gp.predict(c);
            mean - EXPLORATION * sd
        })
        .collect();
    pool.swap_remove(argmin(&scores))
}

/// One trust-region descent. `incumbent` indexes the best point evaluated
/// since the run started.
struct LocalRun {
    incumbent: usize,
    radius: f64,
    stall: usize,
    steps: usize,
    /// Incumbent objective after each step of the run.
    progress: Vec<f64>,
}

enum Step {
    /// Model minimizer, with the model's predicted objective there.
    Model(f64),
    /// Point added to span a direction the model could not resolve.
    Geometry,
    Restart,
}

/// Next point of a local run. A linear model of the residual vector is
/// fitted to evaluated neighbours of the incumbent and its weighted
/// least-squares minimizer inside the trust region is proposed. When the
/// neighbours leave some direction unresolved, a point along that direction
/// is proposed instead.
fn local_point(history: &History, run: &LocalRun, config: &FitObjectiveConfig) -> (Vec<f64>, Step) {
    let center = &history.units[run.incumbent];
    let dim = center.len();
    let r0 = history.residuals[run.incumbent].as_deref().expect("incumbents have residuals");
    let reach = 4.0 * run.radius * run.radius * dim as f64;
    let mut near: Vec<usize> = (0..history.units.len())
        .filter(|&i| i != run.incumbent && history.residuals[i].is_some())
        .filter(|&i| {
            let d = distance2(&history.units[i], center);
            d > 0.0 && d <= reach
        })
        .collect();
    near.sort_by(|&a, &b| {
        distance2(&history.units[a], center).total_cmp(&distance2(&history.units[b], center)).then(a.cmp(&b))
    });
    near.truncate(3 * dim);
    let neighbours: Vec<(&[f64], &[f64])> =
        near.iter().map(|&i| (&history.units[i][..], history.residuals[i].as_deref().unwrap())).collect();
    let direction = match ResidualModel::fit(center, r0, &neighbours, run.radius) {
        Ok(model) => {
            let weights: Vec<f64> = r0.iter().map(|&r| config.irls_weight(r)).collect();
            if let Some(x) = model.step(&weights) {
                if distance2(&x, center) > 0.0 {
                    let predicted = mean_penalty(Some(&model.residuals_at(&x)), config);
                    return (x, Step::Model(predicted));
                }
            }
            let mut e = vec![0.0; dim];
            e[near.len() % dim] = 1.0;
            e
        }
        Err(direction) => direction,
    };
    let (x, room) = geometry_point(center, &direction, run.radius);
    if room >= 0.1 * run.radius {
        return (x, Step::Geometry);
    }
    // boundary blocks the direction; use its strongest axis, which always has
    // room on one side
    let k = (0..dim).fold(0, |b, j| if direction[j].abs() > direction[b].abs() { j } else { b });
    let mut axis = vec![0.0; dim];
    axis[k] = 1.0;
    (geometry_point(center, &axis, run.radius).0, Step::Geometry)
}

/// Point up to `radius` from `center` along `direction` (either sign),
/// whichever sign stays inside the unit box longer, and the distance moved.
fn geometry_point(center: &[f64], direction: &[f64], radius: f64) -> (Vec<f64>, f64) {
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let room = |sign: f64| -> f64 {
        center.iter().zip(direction).fold(radius, |t, (&c, &v)| {
            let v = sign * v / norm;
            if v > 0.0 {
                t.min((1.0 - c) / v)
            } else if v < 0.0 {
                t.min(-c / v)
            } else {
                t
            }
        })
    };
    let (plus, minus) = (room(1.0), room(-1.0));
    let (sign, t) = if plus >= minus { (1.0, plus) } else { (-1.0, minus) };
    let x = center.iter().zip(direction).map(|(&c, &v)| (c + sign * t * v / norm).clamp(0.0, 1.0)).collect();
    (x, t)
}

/// Sequential model-based optimization.
///
/// A Latin-hypercube initial design of `init_samples` points is followed by
/// `budget - init_samples` surrogate-guided steps organized as local runs.
/// Each run is a derivative-free trust-region descent on a linear model of
/// the per-record residuals, refitted from the evaluated neighbours of the
/// run's incumbent; the region grows or shrinks with the ratio of actual to
/// predicted improvement. Runs end when they stall, when the region
/// collapses, or after `3 * dim` steps unless they hold the overall best or
/// are still descending quickly. The next start is picked by lower
/// confidence bound of a Gaussian process fitted to the log objective of the
/// best points so far (see `restart_point`), or is a uniform sample when the
/// observed objectives are all equal.
pub fn smbo_fit(
    space: &SearchSpace,
    records: &[ExperimentRecord],
    config: &FitObjectiveConfig,
    budget: usize,
    init_samples: usize,
    seed: u64,
) -> Result<FitResult> {
    if init_samples < 2 || budget <= init_samples {
        return Err(Error::InvalidArgument(format!(
            "smbo needs budget > init_samples >= 2, got budget {budget}, init_samples {init_samples}"
        )));
    }
    let problem = Problem::new(space.law(), records, *config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = space.len();
    let stall_limit = dim + 3;
    let run_limit = 3 * dim;
    let extended_limit = 40 * dim;

    let units = latin_hypercube(&mut rng, init_samples, dim);
    let candidates: Vec<Vec<f64>> = units.iter().map(|u| space.from_unit(u)).collect();
    let evaluated: Vec<(f64, Option<Vec<f64>>)> =
        candidates.par_iter().map(|c| problem.eval_residuals(c)).collect::<Result<_>>()?;
    let (objectives, residuals): (Vec<f64>, Vec<_>) = evaluated.into_iter().unzip();
    let mut trace = Vec::with_capacity(budget);
    append_trace(&mut trace, candidates, objectives.clone());
    let mut history = History { units, objectives, residuals };

    let first = argmin(&history.objectives);
    let mut ended = Vec::new();
    let mut run = history.residuals[first].is_some().then_some(LocalRun {
        incumbent: first,
        radius: RADIUS_INITIAL,
        stall: 0,
        steps: 0,
        progress: Vec::new(),
    });
    while trace.len() < budget {
        let (next, step) = match &run {
            Some(r) => local_point(&history, r, config),
            None => (restart_point(&mut rng, &history, &ended, dim), Step::Restart),
        };
        let candidate = space.from_unit(&next);
        let (objective, residual) = problem.eval_residuals(&candidate)?;
        let usable = residual.is_some();
        history.units.push(next);
        history.objectives.push(objective);
        history.residuals.push(residual);
        append_trace(&mut trace, vec![candidate], vec![objective]);
        let index = history.objectives.len() - 1;
        let best_so_far = history.objectives.iter().copied().fold(f64::INFINITY, f64::min);

        run = match (run.take(), step) {
            (_, Step::Restart) => usable.then_some(LocalRun {
                incumbent: index,
                radius: RADIUS_INITIAL,
                stall: 0,
                steps: 0,
                progress: Vec::new(),
            }),
            (Some(mut r), step) => {
                let current = history.objectives[r.incumbent];
                r.steps += 1;
                if let Step::Model(predicted) = step {
                    let ratio = if usable && predicted < current {
                        (current - objective) / (current - predicted)
                    } else {
                        f64::NEG_INFINITY
                    };
                    if ratio >= 0.75 {
                        r.radius = (r.radius * 2.0).min(RADIUS_MAX);
                    } else if ratio < 0.1 {
                        r.radius *= 0.5;
                    }
                    if objective < current * (1.0 - MIN_PROGRESS) {
                        r.stall = 0;
                    } else {
                        r.stall += 1;
                    }
                }
                if objective < current {
                    r.incumbent = index;
                }
                let now = history.objectives[r.incumbent];
                r.progress.push(now);
                let leading = now <= best_so_far;
                let descending =
                    r.progress.len() > dim && now < (1.0 - DESCENT) * r.progress[r.progress.len() - 1 - dim];
                let within = r.steps < run_limit || ((leading || descending) && r.steps < extended_limit);
                if r.radius >= RADIUS_MIN && r.stall < stall_limit && within {
                    Some(r)
                } else {
                    ended.push(r.incumbent);
                    None
                }
            }
            (None, _) => None,
        };
    }
    FitResult::from_trace(space.law(), "smbo", Some(seed), trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{reference_grid, synthesize_dataset, GridSource};
    use crate::laws::{published_coefficients, LawId};

    fn setup() -> (SearchSpace, Vec<ExperimentRecord>) {
        let truth = published_coefficients(LawId::Hoffmann);
        let grid = reference_grid(GridSource::Hoffmann9).records;
        (SearchSpace::default_for(&truth), synthesize_dataset(&truth, &grid, 0.05, 2).unwrap())
    }

    #[test]
    fn one_guided_step() {
        let (space, records) = setup();
        let fit = smbo_fit(&space, &records, &FitObjectiveConfig::default(), 6, 5, 1).unwrap();
        assert_eq!(fit.trace.len(), 6);
        assert_eq!(fit.evaluations, 6);
    }

    #[test]
    fn deterministic_per_seed() {
        let (space, records) = setup();
        let a = smbo_fit(&space, &records, &FitObjectiveConfig::default(), 40, 10, 3).unwrap();
        let b = smbo_fit(&space, &records, &FitObjectiveConfig::default(), 40, 10, 3).unwrap();
        assert_eq!(a, b);
        let c = smbo_fit(&space, &records, &FitObjectiveConfig::default(), 40, 10, 4).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn rejects_bad_budget() {
        let (space, records) = setup();
        let cfg = FitObjectiveConfig::default();
        assert!(smbo_fit(&space, &records, &cfg, 5, 5, 0).is_err());
        assert!(smbo_fit(&space, &records, &cfg, 5, 1, 0).is_err());
    }

    #[test]
    fn latin_hypercube_stratifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts = latin_hypercube(&mut rng, 10, 3);
        for j in 0..3 {
            let mut strata: Vec<usize> = pts.iter().map(|p| (p[j] * 10.0) as usize).collect();
            strata.sort();
            assert_eq!(strata, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn invalid_objectives_are_capped() {
        let y = targets(&[1.0, INVALID_OBJECTIVE, 0.5]);
        assert_eq!(y[1], 1.0);
        assert_eq!(targets(&[INVALID_OBJECTIVE; 2]), vec![0.0, 0.0]);
    }
}
