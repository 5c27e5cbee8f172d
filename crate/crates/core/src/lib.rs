//! Empirical scaling laws for dense and sparse language models.
//!
//! The crate evaluates five published loss laws plus the generalized
//! dense/sparse law, fits their coefficients to experiment records, derives
//! compute-optimal allocations, and analyses constant-compute (IsoFLOP)
//! curves.
//!
//! ```
//! use scalelaw_core::{published_coefficients, LawId, ModelScale};
//!
//! let coeffs = published_coefficients(LawId::Generalized);
//! let dense = coeffs.eval(&ModelScale::new(70e9, 1.4e12, 0.0).unwrap()).unwrap();
//! let hoffmann = published_coefficients(LawId::Hoffmann)
//!     .eval(&ModelScale::new(70e9, 1.4e12, 0.0).unwrap())
//!     .unwrap();
//! assert_eq!(dense, hoffmann);
//! ```

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod fit;
pub mod isoflop;
pub mod laws;
pub mod plan;
mod scalar;

pub use data::{
    derive_tokens_from_compute, parse_count, parse_records, parse_scales, reference_grid, synthesize_dataset,
    write_records, write_scales, ExperimentRecord, GridSource, ReferenceGrid,
};
pub use error::{DomainError, Error, Result};
pub use fit::{
    fit_sparsity_factor, grid_search, local_refine, objective, random_search, smbo_fit, Dimension,
    FitObjectiveConfig, FitResult, Metric, ResidualSpace, Scale, SearchSpace, TraceEntry,
};
pub use isoflop::{
    compare_laws, curve_minimum, default_n_range, detect_spike, isoflop_curve, Divergence, DivergenceReport,
    IsoflopCurve, IsoflopSample, SpikeReport,
};
pub use laws::{
    compute_flops, eval_abnar, eval_frantar, eval_frantar_reform, eval_generalized, eval_hoffmann,
    eval_kaplan, published_coefficients, published_literals, reformat_frantar, sparsity_from_counts,
    sparsity_from_experts, Abnar, CoefficientSet, ComputeBudget, Frantar, FrantarReform, Generalized,
    Hoffmann, Kaplan, LawId, ModelScale,
};
pub use plan::{
    kaplan_guidance, optimal_allocation, optimal_allocation_dense, optimal_allocation_numeric,
    optimal_allocation_sparse, optimal_sparsity, AllocationPlan, PlanMethod,
};
