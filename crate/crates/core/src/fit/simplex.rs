//! Nelder-Mead polish step.

use super::{FitObjectiveConfig, FitResult, Problem, TraceEntry};
use crate::data::ExperimentRecord;
use crate::error::{Error, Result};
use crate::laws::CoefficientSet;

/// Initial simplex edge, relative to each starting coefficient.
const INITIAL_STEP: f64 = 0.05;

struct SimplexRun {
    best: Vec<f64>,
    value: f64,
    iterations: usize,
}

/// Nelder-Mead with dimension-adaptive coefficients. Stops when every
/// vertex lies within `tolerance` (max-norm) of the best one, or after
/// `max_iters` iterations.
fn nelder_mead(
    f: &mut impl FnMut(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    max_iters: usize,
    tolerance: f64,
) -> SimplexRun {
    let n = start.len();
    let nf = n as f64;
    let (reflect, expand) = (1.0, 1.0 + 2.0 / nf);
    let contract = 0.75 - 1.0 / (2.0 * nf);
    let shrink = 1.0 - 1.0 / nf;

    let mut vertices: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += step;
        vertices.push(v);
    }
    let mut values: Vec<f64> = vertices.iter().map(|v| f(v)).collect();
    let toward = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
        from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
    };

    let mut iterations = 0;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        let diameter = vertices
            .iter()
            .flat_map(|v| v.iter().zip(&vertices[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < tolerance || iterations >= max_iters {
            return SimplexRun { best: vertices[best].clone(), value: values[best], iterations };
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&vertices[i]) {
                *c += x / nf;
            }
        }
        let reflected = toward(&centroid, &vertices[worst], -reflect);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = toward(&centroid, &vertices[worst], -reflect * expand);
            let fe = f(&expanded);
            if fe < fr {
                vertices[worst] = expanded;
                values[worst] = fe;
            } else {
                vertices[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            vertices[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let accepted = if fr < values[worst] {
            let c = toward(&centroid, &reflected, contract);
            let fc = f(&c);
            (fc <= fr).then_some((c, fc))
        } else {
            let c = toward(&centroid, &vertices[worst], contract);
            let fc = f(&c);
            (fc < values[worst]).then_some((c, fc))
        };
        if let Some((c, fc)) = accepted {
            vertices[worst] = c;
            values[worst] = fc;
            continue;
        }
        let anchor = vertices[best].clone();
        for &i in &order[1..] {
            vertices[i] = toward(&anchor, &vertices[i], shrink);
            values[i] = f(&vertices[i]);
        }
    }
}

/// Derivative-free descent from `start`.
///
/// Works in coordinates relative to the start (each coefficient divided by
/// its starting magnitude) and restarts the simplex while restarts keep
/// improving. `tolerance` bounds the final simplex diameter in those
/// relative units. The returned objective never exceeds the start's.
pub fn local_refine(
    start: &CoefficientSet,
    records: &[ExperimentRecord],
    config: &FitObjectiveConfig,
    max_iters: usize,
    tolerance: f64,
) -> Result<FitResult> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {tolerance}")));
    }
    let law = start.law();
    let problem = Problem::new(law, records, *config)?;
    let origin = start.values();
    let scale: Vec<f64> = origin.iter().map(|v| if *v == 0.0 { 1.0 } else { v.abs() }).collect();
    let absolute = |rel: &[f64]| -> Vec<f64> { rel.iter().zip(&scale).map(|(r, s)| r * s).collect() };

    let mut trace = Vec::new();
    let mut failure = None;
    let mut evaluate = |rel: &[f64]| -> f64 {
        let candidate = absolute(rel);
        let objective = match problem.eval(&candidate) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        };
        let index = trace.len();
        trace.push(TraceEntry { index, candidate, objective });
        objective
    };

    let mut current: Vec<f64> = origin.iter().zip(&scale).map(|(v, s)| v / s).collect();
    let mut current_value = evaluate(&current);
    let mut remaining = max_iters;
    while remaining > 0 {
        let run = nelder_mead(&mut evaluate, &current, INITIAL_STEP, remaining, tolerance);
        remaining -= run.iterations;
        let improved = run.value < current_value;
        if improved {
            current = run.best;
            current_value = run.value;
        }
        if !improved || run.iterations == 0 || current_value == 0.0 {
            break;
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    FitResult::from_trace(law, "local_refine", None, trace)
}
