#![allow(dead_code)]

use scalelaw_core::{synthesize_dataset, CoefficientSet, ExperimentRecord, LawId, ModelScale};

/// 8x8 log grid over n in [1e7, 1e11] and d in [1e9, 1e13], repeated at
/// sparsities 0, 0.5 and 0.9 for laws that read sparsity.
pub fn training_grid(law: LawId) -> Vec<ModelScale> {
    grid(law, 0.0)
}

/// Same ranges, shifted half a step so no point coincides with training.
pub fn held_out_grid(law: LawId) -> Vec<ModelScale> {
    grid(law, 0.5)
}

fn grid(law: LawId, offset: f64) -> Vec<ModelScale> {
    let sparsities: &[f64] = if law.uses_sparsity() { &[0.0, 0.5, 0.9] } else { &[0.0] };
    let steps = 8;
    let mut out = Vec::new();
    for &s in sparsities {
        for i in 0..steps {
            for j in 0..steps {
                let ti = ((i as f64 + offset) / (steps - 1) as f64).min(1.0);
                let tj = ((j as f64 + offset) / (steps - 1) as f64).min(1.0);
                let n = 10f64.powf(7.0 + 4.0 * ti);
                let d = 10f64.powf(9.0 + 4.0 * tj);
                out.push(ModelScale::new(n, d, s).unwrap());
            }
        }
    }
    out
}

pub fn dataset(truth: &CoefficientSet, noise: f64, seed: u64) -> Vec<ExperimentRecord> {
    synthesize_dataset(truth, &training_grid(truth.law()), noise, seed).unwrap()
}
