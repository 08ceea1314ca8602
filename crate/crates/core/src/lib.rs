//! Exact and asymptotic statistics of uniform random permutations of `n`
//! elements whose cycles all have length at most `alpha`.
//!
//! Floating-point routines are generic over [`Scalar`] (`f32`, `f64`);
//! counts are exact big integers. The aliases below fix `f64`, which is
//! what the CLI and the tests use.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asym;
pub mod error;
pub mod exact;
pub mod quad;
pub mod saddle;
pub mod sample;
pub mod scalar;
pub mod stats;

pub use asym::{
    ei_asymptotic, eval_i, eval_t, eval_t_scaled, expand_m, expand_v, solve_xi, xi_two_term,
    ExpansionResult, TruncationReason, XiValue,
};
pub use error::{CycleError, Result};
pub use exact::{
    brute_force_oracle, count_constrained, count_exact, distribution_moments,
    exact_cycle_count_distribution, Constraint, CountTable, CycleCountDistribution, Limits,
};
pub use saddle::{
    h_derivatives, moments, regime_check, saddle_point_count_approx, solve_saddle, HDerivatives,
    MomentPair, RegimeReport, SaddleSolution,
};
pub use sample::{
    run_clt_experiment, sample_cycle_type, sample_permutation, CycleType, SampleRun, SampleSummary,
};
pub use scalar::Scalar;
pub use stats::{
    chi_square_gof, ks_exact_vs_normal, ks_sample_vs_normal, phi, ChiSquare, KsReport,
};

pub type SaddleSolutionF64 = SaddleSolution<f64>;
pub type SaddleSolutionF32 = SaddleSolution<f32>;
pub type MomentPairF64 = MomentPair<f64>;
pub type MomentPairF32 = MomentPair<f32>;
pub type HDerivativesF64 = HDerivatives<f64>;
pub type XiValueF64 = XiValue<f64>;
pub type XiValueF32 = XiValue<f32>;
pub type ExpansionF64 = ExpansionResult<f64>;
pub type ExpansionF32 = ExpansionResult<f32>;
