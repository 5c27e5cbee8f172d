//! Closed-form loss laws, sparsity definitions and compute accounting.
//!
//! All evaluators are pure. Parameter and token counts are raw counts held
//! in `f64`; `+inf` is accepted and yields the law's limit.

mod coefficients;

pub use coefficients::{
    published_coefficients, published_literals, reformat_frantar, Abnar, CoefficientKind, CoefficientSet,
    Frantar, FrantarReform, Generalized, Hoffmann, Kaplan, LawId,
};

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// Largest accepted sparsity. `s = 1` would mean zero active parameters.
pub const MAX_SPARSITY: f64 = 1.0 - 1e-9;

/// Counts above this are not exactly representable as `f64`.
pub const MAX_EXACT_COUNT: f64 = 9_007_199_254_740_992.0;

pub(crate) fn check_params(n: f64) -> Result<(), DomainError> {
    if n >= 1.0 {
        Ok(())
    } else {
        Err(DomainError::ParamCount(n))
    }
}

pub(crate) fn check_tokens(d: f64) -> Result<(), DomainError> {
    if d >= 1.0 {
        Ok(())
    } else {
        Err(DomainError::TokenCount(d))
    }
}

pub(crate) fn check_sparsity(s: f64) -> Result<(), DomainError> {
    if (0.0..=MAX_SPARSITY).contains(&s) {
        Ok(())
    } else {
        Err(DomainError::Sparsity(s))
    }
}

fn check_inputs(n: f64, d: f64, s: f64) -> Result<(), DomainError> {
    check_params(n)?;
    check_tokens(d)?;
    check_sparsity(s)
}

/// A candidate model: active parameters, training tokens and sparsity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScale")]
pub struct ModelScale {
    n_active: f64,
    d_tokens: f64,
    sparsity: f64,
}

#[derive(Deserialize)]
struct RawScale {
    n_active: f64,
    d_tokens: f64,
    sparsity: f64,
}

impl TryFrom<RawScale> for ModelScale {
    type Error = DomainError;

    fn try_from(raw: RawScale) -> Result<Self, Self::Error> {
        ModelScale::new(raw.n_active, raw.d_tokens, raw.sparsity)
    }
}

impl ModelScale {
    pub fn new(n_active: f64, d_tokens: f64, sparsity: f64) -> Result<Self, DomainError> {
        if !n_active.is_finite() {
            return Err(DomainError::ParamCount(n_active));
        }
        if !d_tokens.is_finite() {
            return Err(DomainError::TokenCount(d_tokens));
        }
        check_inputs(n_active, d_tokens, sparsity)?;
        Ok(ModelScale { n_active, d_tokens, sparsity })
    }

    pub fn dense(n: f64, d: f64) -> Result<Self, DomainError> {
        Self::new(n, d, 0.0)
    }

    pub fn n_active(&self) -> f64 {
        self.n_active
    }

    pub fn d_tokens(&self) -> f64 {
        self.d_tokens
    }

    pub fn sparsity(&self) -> f64 {
        self.sparsity
    }

    /// `n_active / (1 - sparsity)`.
    pub fn total_params(&self) -> f64 {
        self.n_active / (1.0 - self.sparsity)
    }

    pub fn with_sparsity(&self, sparsity: f64) -> Result<Self, DomainError> {
        Self::new(self.n_active, self.d_tokens, sparsity)
    }

    /// Training FLOPs `6 N D` using active parameters.
    pub fn compute(&self) -> ComputeBudget {
        ComputeBudget(6.0 * self.n_active * self.d_tokens)
    }
}

/// Training compute in FLOPs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ComputeBudget(f64);

impl ComputeBudget {
    pub fn new(flops: f64) -> Result<Self, DomainError> {
        if flops.is_finite() && flops > 0.0 {
            Ok(ComputeBudget(flops))
        } else {
            Err(DomainError::Budget(flops))
        }
    }

    pub fn flops(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ComputeBudget {
    type Error = DomainError;

    fn try_from(flops: f64) -> Result<Self, Self::Error> {
        ComputeBudget::new(flops)
    }
}

impl From<ComputeBudget> for f64 {
    fn from(c: ComputeBudget) -> f64 {
        c.0
    }
}

pub fn eval_kaplan(coeffs: &Kaplan, n: f64, d: f64) -> Result<f64, DomainError> {
    check_params(n)?;
    check_tokens(d)?;
    Ok(((coeffs.n_c / n).powf(coeffs.alpha_n / coeffs.alpha_d) + coeffs.d_c / d).powf(coeffs.alpha_d))
}

pub fn eval_hoffmann(coeffs: &Hoffmann, n: f64, d: f64) -> Result<f64, DomainError> {
    check_params(n)?;
    check_tokens(d)?;
    Ok(coeffs.e + coeffs.a / n.powf(coeffs.alpha) + coeffs.b / d.powf(coeffs.beta))
}

/// Pruning law; `n` counts nonzero parameters.
pub fn eval_frantar(coeffs: &Frantar, n: f64, d: f64, s: f64) -> Result<f64, DomainError> {
    check_inputs(n, d, s)?;
    let sparsity_term = coeffs.a_s * (1.0 - s).powf(coeffs.b_s) + coeffs.c_s;
    Ok(sparsity_term * (1.0 / n).powf(coeffs.b_n) + (coeffs.a_d / d).powf(coeffs.b_d) + coeffs.c)
}

pub fn eval_frantar_reform(coeffs: &FrantarReform, n: f64, d: f64, s: f64) -> Result<f64, DomainError> {
    check_inputs(n, d, s)?;
    let sparsity_term = coeffs.a_s * (1.0 - s).powf(coeffs.b_s) + coeffs.c_s;
    Ok(coeffs.e + sparsity_term / n.powf(coeffs.alpha) + coeffs.b / d.powf(coeffs.beta))
}

/// MoE law; `n` counts active parameters.
pub fn eval_abnar(coeffs: &Abnar, n: f64, d: f64, s: f64) -> Result<f64, DomainError> {
    check_inputs(n, d, s)?;
    let dense = 1.0 - s;
    Ok(coeffs.e
        + coeffs.a / n.powf(coeffs.alpha)
        + coeffs.b / d.powf(coeffs.beta)
        + coeffs.c / dense.powf(coeffs.lambda)
        + coeffs.d_coef / (dense.powf(coeffs.delta) * n.powf(coeffs.gamma)))
}

/// Generalized dense/sparse law; `n` counts active parameters. At `s = 0`
/// every sparsity factor is exactly 1 and the result is bit-identical to
/// [`eval_hoffmann`] with the same `e, a, b, alpha, beta`.
pub fn eval_generalized(coeffs: &Generalized, n: f64, d: f64, s: f64) -> Result<f64, DomainError> {
    check_inputs(n, d, s)?;
    Ok(coeffs.e * (1.0 - s).powf(coeffs.gamma)
        + coeffs.effective_param_coefficient(s) / n.powf(coeffs.alpha)
        + coeffs.b / d.powf(coeffs.beta))
}

impl CoefficientSet {
    /// Evaluates the law. Dense laws (Kaplan, Hoffmann) ignore `s` beyond
    /// range-checking it.
    pub fn eval_at(&self, n: f64, d: f64, s: f64) -> Result<f64, DomainError> {
        match self {
            CoefficientSet::Kaplan(c) => {
                check_sparsity(s)?;
                eval_kaplan(c, n, d)
            }
            CoefficientSet::Hoffmann(c) => {
                check_sparsity(s)?;
                eval_hoffmann(c, n, d)
            }
            CoefficientSet::Frantar(c) => eval_frantar(c, n, d, s),
            CoefficientSet::FrantarReform(c) => eval_frantar_reform(c, n, d, s),
            CoefficientSet::Abnar(c) => eval_abnar(c, n, d, s),
            CoefficientSet::Generalized(c) => eval_generalized(c, n, d, s),
        }
    }

    pub fn eval(&self, scale: &ModelScale) -> Result<f64, DomainError> {
        self.eval_at(scale.n_active, scale.d_tokens, scale.sparsity)
    }
}

fn check_count(x: f64, total: f64, active: f64) -> Result<(), DomainError> {
    if x > MAX_EXACT_COUNT {
        return Err(DomainError::CountTooLarge(x));
    }
    if !x.is_finite() {
        return Err(DomainError::ActiveCount { total, active });
    }
    Ok(())
}

/// `(total - active) / total`.
pub fn sparsity_from_counts(total: f64, active: f64) -> Result<f64, DomainError> {
    check_count(total, total, active)?;
    check_count(active, total, active)?;
    if !(active >= 1.0 && active <= total) {
        return Err(DomainError::ActiveCount { total, active });
    }
    Ok((total - active) / total)
}

/// MoE sparsity `(E - K) / E` for `E` experts of which `K` are routed per token.
pub fn sparsity_from_experts(total_experts: u64, active_experts: u64) -> Result<f64, DomainError> {
    if active_experts < 1 || active_experts > total_experts {
        return Err(DomainError::ActiveCount { total: total_experts as f64, active: active_experts as f64 });
    }
    Ok((total_experts - active_experts) as f64 / total_experts as f64)
}

/// Training FLOPs `C = 6 N D`. Pass active or nonzero parameters for sparse models.
pub fn compute_flops(n: f64, d: f64) -> Result<ComputeBudget, DomainError> {
    check_params(n)?;
    check_tokens(d)?;
    ComputeBudget::new(6.0 * n * d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kaplan_unit_ratios() {
        let k = Kaplan::PUBLISHED;
        let l = eval_kaplan(&k, k.n_c, k.d_c).unwrap();
        assert!((l - 2f64.powf(0.103)).abs() < 1e-15);
        assert!((l - 1.0740).abs() < 1e-4);
    }

    #[test]
    fn limits_at_infinity() {
        let inf = f64::INFINITY;
        assert_eq!(eval_kaplan(&Kaplan::PUBLISHED, inf, inf).unwrap(), 0.0);
        assert_eq!(eval_hoffmann(&Hoffmann::PUBLISHED, inf, inf).unwrap(), 1.69);
        assert_eq!(eval_frantar_reform(&FrantarReform::PUBLISHED, inf, inf, 0.3).unwrap(), 0.651);
        assert!(eval_kaplan(&Kaplan::PUBLISHED, 1e200, 1e200).unwrap() < 1e-6);
    }

    #[test]
    fn unit_inputs_sum_coefficients() {
        assert_eq!(eval_hoffmann(&Hoffmann::PUBLISHED, 1.0, 1.0).unwrap(), 818.79);
        let g = eval_generalized(&Generalized::PUBLISHED, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(g, 818.79);
        let r = eval_frantar_reform(&FrantarReform::PUBLISHED, 1.0, 1.0, 0.0).unwrap();
        assert!((r - 124.722).abs() < 1e-12);
        let a = eval_abnar(&Abnar::PUBLISHED, 1.0, 1.0, 0.0).unwrap();
        assert!((a - 22086.8298).abs() < 1e-9);
        let f = &Frantar::PUBLISHED;
        let l = eval_frantar(f, 1.0, f.a_d, 0.0).unwrap();
        assert!((l - 63.451).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let h = Hoffmann::PUBLISHED;
        assert_eq!(eval_hoffmann(&h, 0.5, 1.0), Err(DomainError::ParamCount(0.5)));
        assert_eq!(eval_hoffmann(&h, 1.0, 0.0), Err(DomainError::TokenCount(0.0)));
        assert!(eval_hoffmann(&h, f64::NAN, 1.0).is_err());
        let g = Generalized::PUBLISHED;
        let err = eval_generalized(&g, 1.0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("sparsity out of [0,1)"));
        assert!(eval_generalized(&g, 1.0, 1.0, -0.1).is_err());
        assert!(eval_generalized(&g, 1.0, 1.0, MAX_SPARSITY).is_ok());
        assert!(eval_frantar(&Frantar::PUBLISHED, 1.0, 1.0, 1.0).is_err());
        assert!(eval_abnar(&Abnar::PUBLISHED, 1.0, 1.0, 1.5).is_err());
        assert!(CoefficientSet::Hoffmann(h).eval_at(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn frantar_decreases_with_sparsity() {
        let f = Frantar::PUBLISHED;
        let lo = eval_frantar(&f, 1e7, 1e10, 0.2).unwrap();
        let hi = eval_frantar(&f, 1e7, 1e10, 0.8).unwrap();
        assert!(lo > hi);
    }

    #[test]
    fn abnar_sparsity_effect_depends_on_size() {
        let a = Abnar::PUBLISHED;
        let at = |n, s| eval_abnar(&a, n, 1e11, s).unwrap();
        // the shrinking c-term wins only once the active-parameter term is small
        assert!(at(1e11, 0.5) < at(1e11, 0.0));
        assert!(at(1e9, 0.5) > at(1e9, 0.0));
    }

    #[test]
    fn generalized_equals_hoffmann_when_dense() {
        for &(n, d) in &[(1e6, 1e8), (7e10, 1.4e12), (3.3e8, 2e10)] {
            let g = eval_generalized(&Generalized::PUBLISHED, n, d, 0.0).unwrap();
            let h = eval_hoffmann(&Hoffmann::PUBLISHED, n, d).unwrap();
            assert_eq!(g.to_bits(), h.to_bits());
        }
    }

    #[test]
    fn sparsity_definitions() {
        let s = sparsity_from_counts(671e9, 37e9).unwrap();
        assert!((s * 100.0 - 94.49).abs() < 0.005);
        assert_eq!(sparsity_from_counts(5e9, 5e9).unwrap(), 0.0);
        assert_eq!(sparsity_from_counts(8e9, 1e9).unwrap(), 0.875);
        assert!(sparsity_from_counts(1e9, 2e9).is_err());
        assert!(sparsity_from_counts(1e9, 0.5).is_err());
        assert!(sparsity_from_counts(1e17, 1.0).is_err());

        assert_eq!(sparsity_from_experts(64, 8).unwrap(), 0.875);
        assert_eq!(sparsity_from_experts(16, 16).unwrap(), 0.0);
        assert_eq!(sparsity_from_experts(50, 1).unwrap(), 0.98);
        assert!(sparsity_from_experts(4, 8).is_err());
        assert!(sparsity_from_experts(4, 0).is_err());
    }

    #[test]
    fn flops() {
        assert_eq!(compute_flops(70e9, 1.4e12).unwrap().flops(), 5.88e23);
        assert_eq!(compute_flops(1.0, 1.0).unwrap().flops(), 6.0);
        assert!(compute_flops(0.0, 1.0).is_err());
        assert!(ComputeBudget::new(0.0).is_err());
        assert!(ComputeBudget::new(f64::INFINITY).is_err());
    }

    #[test]
    fn model_scale_invariants() {
        let m = ModelScale::new(1e9, 2e10, 0.75).unwrap();
        assert_eq!(m.total_params(), 4e9);
        assert!(m.total_params() >= m.n_active());
        assert!(ModelScale::new(0.0, 1.0, 0.0).is_err());
        assert!(ModelScale::new(1.0, f64::INFINITY, 0.0).is_err());
        assert!(ModelScale::new(1.0, 1.0, 1.0).is_err());
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<ModelScale>(&json).unwrap(), m);
        assert!(
            serde_json::from_str::<ModelScale>(r#"{"n_active":1.0,"d_tokens":1.0,"sparsity":1.0}"#).is_err()
        );
    }
}
