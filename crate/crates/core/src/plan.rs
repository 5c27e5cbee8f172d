//! Compute-optimal allocation of a training budget between parameters and
//! tokens.

use serde::{Deserialize, Serialize};

use crate::data::log_spaced;
use crate::error::DomainError;
use crate::laws::{
    check_sparsity, eval_generalized, eval_hoffmann, CoefficientSet, ComputeBudget, Generalized, Hoffmann,
};
use crate::scalar::golden_section;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMethod {
    ClosedForm,
    Numeric,
}

/// A point on the IsoFLOP curve. `n_opt` counts active parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub budget: ComputeBudget,
    pub sparsity: f64,
    pub n_opt: f64,
    pub d_opt: f64,
    pub predicted_loss: f64,
    pub method: PlanMethod,
}

fn closed_form_n(a: f64, b: f64, alpha: f64, beta: f64, c: ComputeBudget) -> f64 {
    let g = (a * alpha / (b * beta)).powf(1.0 / (alpha + beta));
    g * (c.flops() / 6.0).powf(beta / (alpha + beta))
}

pub fn optimal_allocation_dense(coeffs: &Hoffmann, c: ComputeBudget) -> Result<AllocationPlan, DomainError> {
    let n = closed_form_n(coeffs.a, coeffs.b, coeffs.alpha, coeffs.beta, c);
    let d = c.flops() / (6.0 * n);
    Ok(AllocationPlan {
        budget: c,
        sparsity: 0.0,
        n_opt: n,
        d_opt: d,
        predicted_loss: eval_hoffmann(coeffs, n, d)?,
        method: PlanMethod::ClosedForm,
    })
}

/// The entropy term `e(1-s)^gamma` is constant along an IsoFLOP curve, so
/// only the parameter coefficient changes.
pub fn optimal_allocation_sparse(
    coeffs: &Generalized,
    c: ComputeBudget,
    s: f64,
) -> Result<AllocationPlan, DomainError> {
    check_sparsity(s)?;
    let a_eff = coeffs.effective_param_coefficient(s);
    let n = closed_form_n(a_eff, coeffs.b, coeffs.alpha, coeffs.beta, c);
    let d = c.flops() / (6.0 * n);
    Ok(AllocationPlan {
        budget: c,
        sparsity: s,
        n_opt: n,
        d_opt: d,
        predicted_loss: eval_generalized(coeffs, n, d, s)?,
        method: PlanMethod::ClosedForm,
    })
}

const SCAN_POINTS: usize = 512;

/// Minimizes any law along the IsoFLOP curve for `n` in `[1, C/6]`:
/// a log-grid scan followed by golden-section refinement around the best
/// grid point.
pub fn optimal_allocation_numeric(
    coeffs: &CoefficientSet,
    c: ComputeBudget,
    s: f64,
) -> Result<AllocationPlan, DomainError> {
    check_sparsity(s)?;
    let hi = c.flops() / 6.0;
    if hi <= 1.0 {
        return Err(DomainError::Budget(c.flops()));
    }
    let loss = |n: f64| coeffs.eval_at(n, c.flops() / (6.0 * n), s);
    let grid = log_spaced(1.0, hi, SCAN_POINTS);
    let mut best = 0;
    let mut best_loss = f64::INFINITY;
    for (i, &n) in grid.iter().enumerate() {
        // At n = C/6 rounding can leave d a hair under 1.
        let l = loss(n).unwrap_or(f64::INFINITY);
        if l < best_loss {
            best = i;
            best_loss = l;
        }
    }
    if !best_loss.is_finite() {
        loss(grid[0])?;
        return Err(DomainError::Budget(c.flops()));
    }
    let lo = grid[best.saturating_sub(1)].ln();
    let up = grid[(best + 1).min(grid.len() - 1)].ln();
    let mut f = |x: f64| loss(x.exp()).unwrap_or(f64::INFINITY);
    let x = golden_section(&mut f, lo, up, 1e-13);
    let mut n = x.exp().clamp(1.0, hi);
    if f(n.ln()) > best_loss {
        n = grid[best];
    }
    let d = c.flops() / (6.0 * n);
    Ok(AllocationPlan {
        budget: c,
        sparsity: s,
        n_opt: n,
        d_opt: d,
        predicted_loss: loss(n)?,
        method: PlanMethod::Numeric,
    })
}

/// Closed form where one exists, numeric search otherwise.
pub fn optimal_allocation(
    coeffs: &CoefficientSet,
    c: ComputeBudget,
    s: f64,
) -> Result<AllocationPlan, DomainError> {
    match coeffs {
        CoefficientSet::Hoffmann(h) => {
            check_sparsity(s)?;
            optimal_allocation_dense(h, c)
        }
        CoefficientSet::Generalized(g) => optimal_allocation_sparse(g, c, s),
        _ => optimal_allocation_numeric(coeffs, c, s),
    }
}

/// Best sparsity from a finite grid. Ties go to the smallest sparsity.
pub fn optimal_sparsity(
    coeffs: &Generalized,
    c: ComputeBudget,
    s_grid: &[f64],
) -> Result<(f64, AllocationPlan), DomainError> {
    if s_grid.is_empty() {
        return Err(DomainError::Other("sparsity grid is empty".into()));
    }
    let mut best: Option<AllocationPlan> = None;
    for &s in s_grid {
        let plan = optimal_allocation_sparse(coeffs, c, s)?;
        best = match best {
            Some(b)
                if b.predicted_loss < plan.predicted_loss
                    || (b.predicted_loss == plan.predicted_loss && b.sparsity <= s) =>
            {
                Some(b)
            }
            _ => Some(plan),
        };
    }
    let plan = best.expect("non-empty grid");
    Ok((plan.sparsity, plan))
}

/// Parameter and data multipliers for a compute multiplier, following the
/// 10x compute -> 5.5x parameters, 1.8x data rule.
pub fn kaplan_guidance(compute_multiplier: f64) -> Result<(f64, f64), DomainError> {
    if !(compute_multiplier.is_finite() && compute_multiplier > 0.0) {
        return Err(DomainError::Other(format!(
            "compute multiplier must be positive, got {compute_multiplier}"
        )));
    }
    let p = 5.5f64.log10();
    let q = 1.8f64.log10();
    Ok((compute_multiplier.powf(p), compute_multiplier.powf(q)))
}
