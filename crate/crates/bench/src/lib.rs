//! Shared fixtures for the criterion benches.

use scalelaw_core::{synthesize_dataset, CoefficientSet, ExperimentRecord, ModelScale};

/// 8x8 log grid over n in [1e7, 1e11], d in [1e9, 1e13], at each sparsity.
pub fn scales(sparsities: &[f64]) -> Vec<ModelScale> {
    let mut out = Vec::with_capacity(64 * sparsities.len());
    for &s in sparsities {
        for i in 0..8 {
            for j in 0..8 {
                let n = 10f64.powf(7.0 + 4.0 * i as f64 / 7.0);
                let d = 10f64.powf(9.0 + 4.0 * j as f64 / 7.0);
                out.push(ModelScale::new(n, d, s).expect("grid is in range"));
            }
        }
    }
    out
}

/// Records from `truth` on [`scales`] with 5% multiplicative noise.
pub fn noisy_records(truth: &CoefficientSet, seed: u64) -> Vec<ExperimentRecord> {
    let sparsities: &[f64] = if truth.law().uses_sparsity() { &[0.0, 0.5, 0.9] } else { &[0.0] };
    synthesize_dataset(truth, &scales(sparsities), 0.05, seed).expect("published laws evaluate on the grid")
}
