//! Penalized least-squares estimation in the Gaussian sequence model
//! `X ~ N(θ, Iₙ)`, θ in a closed convex set Θ.
//!
//! The crate computes the estimator `argmin_{α∈Θ} ½‖X − α‖² + f(α)`, the
//! penalized localized Gaussian width `m_θ(t)` with its concentration point
//! `t_θ`, Monte-Carlo checks of the loss tail and risk bounds around `t_θ`,
//! Bayes-risk lower bounds, and the arithmetic certificates for the universal
//! admissibility constant.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod cstar;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod linalg;
pub mod noise;
pub mod penalty;
pub mod quad;
pub mod risk;
pub mod width;

pub use error::{Error, Result};
pub use estimator::{check_lipschitz, pava, solve_penalized_lse, Method, Solution, SolveOptions, StepRule};
pub use geometry::{dykstra_project, ConstraintSet};
pub use noise::NoiseBatch;
pub use penalty::PenaltySpec;
pub use width::{
    estimate_m, find_t_theta, inner_sup, width_profile, InnerSup, TThetaResult, WidthOptions, WidthProfile,
};
pub use risk::{check_risk_bound, check_smoothness, check_tail_bound, simulate_risk, EstimatorSpec, RiskOptions};
pub use bayes::{
    avg_risk_under_prior, bayes_oracle_1d, chi_sq_gaussian, lecam_two_point, sample_pushforward_prior,
    small_ball_lower_bound, BoundReport, PriorSpec,
};
pub use cstar::{
    certificate, clip_risk, easy_case_constant, hard_case_constant, normalized_ratio_bound, sufficiency_check,
    HardCaseConstants,
};
