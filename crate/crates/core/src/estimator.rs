//! The penalized constrained least-squares estimator
//! `argmin_{α ∈ Θ} ½‖x − α‖² + f(α)`.
//!
//! Dispatch goes to an exact solve whenever the (set, penalty) pair admits
//! one. Otherwise a Dykstra-type proximal splitting is used when `f` has a
//! proximal map, and projected subgradient descent when it does not.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::ConstraintSet;
use crate::linalg::dist;
use crate::penalty::{soft_threshold, PenaltySpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Fixed(f64),
    /// `s_k = 1/√k`
    Diminishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100_000,
            step_rule: StepRule::Diminishing,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("solve options", "tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("solve options", "max_iter must be at least 1"));
        }
        if let StepRule::Fixed(s) = self.step_rule {
            if !(s > 0.0) {
                return Err(Error::invalid("solve options", "fixed step must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Pava,
    /// Dykstra projection onto an intersection.
    Dykstra,
    ProxSplitting,
    Subgradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub point: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub residual: f64,
    pub method: Method,
}

/// `½‖x − α‖² + f(α)`
pub fn objective(f: &PenaltySpec, x: &[f64], alpha: &[f64]) -> f64 {
    0.5 * x
        .iter()
        .zip(alpha)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        + f.value_unchecked(alpha)
}

fn finish(f: &PenaltySpec, x: &[f64], point: Vec<f64>, iterations: usize, residual: f64, method: Method) -> Solution {
    let objective = objective(f, x, &point);
    Solution {
        point,
        objective,
        iterations,
        residual,
        method,
    }
}

fn projection_method(set: &ConstraintSet) -> Method {
    match set {
        ConstraintSet::MonotoneCone { .. } => Method::Pava,
        ConstraintSet::Intersection { .. } => Method::Dykstra,
        _ => Method::ClosedForm,
    }
}

pub fn solve_penalized_lse(
    set: &ConstraintSet,
    f: &PenaltySpec,
    x: &[f64],
    opts: &SolveOptions,
) -> Result<Solution> {
    let n = set.dim();
    check_dim(n, x.len())?;
    opts.validate()?;
    f.validate(n)?;

    // Quadratic and linear penalties fold into the data term, leaving a projection.
    let shifted: Option<Vec<f64>> = match f {
        _ if f.is_zero() => Some(x.to_vec()),
        PenaltySpec::LinearForm { v } => Some(x.iter().zip(v).map(|(a, b)| a - b).collect()),
        PenaltySpec::Quadratic { lambda } => Some(x.iter().map(|a| a / (1.0 + lambda)).collect()),
        // On the monotone cone the range is the linear form λ(αₙ − α₁).
        PenaltySpec::Range { lambda } if matches!(set, ConstraintSet::MonotoneCone { .. }) => {
            let mut y = x.to_vec();
            if n > 1 {
                y[0] += lambda;
                y[n - 1] -= lambda;
            }
            Some(y)
        }
        _ => None,
    };
    if let Some(y) = shifted {
        let point = set.project(&y, opts.tol)?;
        return Ok(finish(f, x, point, 1, 0.0, projection_method(set)));
    }

    match (set, f) {
        (ConstraintSet::FullSpace { .. }, _) if f.has_prox() => {
            let point = f.prox(x, 1.0)?.expect("has_prox");
            Ok(finish(f, x, point, 1, 0.0, Method::ClosedForm))
        }
        // Separable: each coordinate is a 1-D convex problem whose constrained
        // minimizer is the clipped unconstrained one.
        (ConstraintSet::Box { lo, hi }, PenaltySpec::L1 { lambda }) => {
            let point = soft_threshold(x, *lambda)
                .into_iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect();
            Ok(finish(f, x, point, 1, 0.0, Method::ClosedForm))
        }
        _ if f.has_prox() => prox_splitting(set, f, x, opts),
        _ => projected_subgradient(set, f, x, opts),
    }
}

/// Dykstra-like proximal splitting for `prox_{f + ι_Θ}(x)`:
/// alternates the projection onto Θ and the prox of `f`, each with its own
/// correction term, and converges to the prox of the sum.
fn prox_splitting(set: &ConstraintSet, f: &PenaltySpec, x: &[f64], opts: &SolveOptions) -> Result<Solution> {
    let n = x.len();
    let inner_tol = opts.tol * 1e-2;
    let mut current = x.to_vec();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut y = set.project(x, inner_tol)?;
    let mut residual = f64::INFINITY;
    for k in 1..=opts.max_iter {
        let a: Vec<f64> = current.iter().zip(&p).map(|(c, d)| c + d).collect();
        y = set.project(&a, inner_tol)?;
        for ((pi, ai), yi) in p.iter_mut().zip(&a).zip(&y) {
            *pi = ai - yi;
        }
        let b: Vec<f64> = y.iter().zip(&q).map(|(c, d)| c + d).collect();
        let next = f.prox(&b, 1.0)?.expect("prox splitting requires a prox");
        for ((qi, bi), ni) in q.iter_mut().zip(&b).zip(&next) {
            *qi = bi - ni;
        }
        residual = dist(&next, &current).max(dist(&y, &next));
        current = next;
        if residual <= opts.tol {
            return Ok(finish(f, x, y, k, residual, Method::ProxSplitting));
        }
    }
    Err(Error::SolverNonConvergence {
        best: Box::new(finish(f, x, y, opts.max_iter, residual, Method::ProxSplitting)),
    })
}

/// Projected subgradient descent, keeping the best iterate seen. The residual
/// is the unit-step gradient-mapping norm `‖P_Θ(x − g_f) − α‖`.
fn projected_subgradient(
    set: &ConstraintSet,
    f: &PenaltySpec,
    x: &[f64],
    opts: &SolveOptions,
) -> Result<Solution> {
    let inner_tol = opts.tol * 1e-2;
    let mut alpha = set.project(x, inner_tol)?;
    let mut best = alpha.clone();
    let mut best_obj = objective(f, x, &alpha);
    let mut residual = f64::INFINITY;
    for k in 1..=opts.max_iter {
        let gf = f.subgradient(&alpha)?;
        let trial: Vec<f64> = x.iter().zip(&gf).map(|(a, g)| a - g).collect();
        residual = dist(&set.project(&trial, inner_tol)?, &alpha);
        if residual <= opts.tol {
            return Ok(finish(f, x, alpha, k, residual, Method::Subgradient));
        }
        let step = match opts.step_rule {
            StepRule::Fixed(s) => s,
            StepRule::Diminishing => 1.0 / (k as f64).sqrt(),
        };
        let moved: Vec<f64> = alpha
            .iter()
            .zip(x)
            .zip(&gf)
            .map(|((a, xi), g)| a - step * (a - xi + g))
            .collect();
        alpha = set.project(&moved, inner_tol)?;
        let obj = objective(f, x, &alpha);
        if obj < best_obj {
            best_obj = obj;
            best.clone_from(&alpha);
        }
    }
    Err(Error::SolverNonConvergence {
        best: Box::new(finish(f, x, best, opts.max_iter, residual, Method::Subgradient)),
    })
}

/// Exact projection onto the monotone cone by pooling adjacent violators.
pub fn pava(x: &[f64]) -> Vec<f64> {
    // (block sum, block length)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(x.len());
    for &v in x {
        let mut sum = v;
        let mut len = 1usize;
        while let Some(&(psum, plen)) = blocks.last() {
            if psum / plen as f64 > sum / len as f64 {
                sum += psum;
                len += plen;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push((sum, len));
    }
    let mut out = Vec::with_capacity(x.len());
    for (sum, len) in blocks {
        let mean = sum / len as f64;
        out.extend(std::iter::repeat_n(mean, len));
    }
    out
}

/// Largest observed `‖θ̂(x₁) − θ̂(x₂)‖ / ‖x₁ − x₂‖`; pairs with equal members are skipped.
pub fn check_lipschitz(
    set: &ConstraintSet,
    f: &PenaltySpec,
    pairs: &[(Vec<f64>, Vec<f64>)],
    opts: &SolveOptions,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("pairs", "need at least one pair"));
    }
    let mut worst: f64 = 0.0;
    for (a, b) in pairs {
        let d = dist(a, b);
        if d == 0.0 {
            continue;
        }
        let pa = solve_penalized_lse(set, f, a, opts)?;
        let pb = solve_penalized_lse(set, f, b, opts)?;
        worst = worst.max(dist(&pa.point, &pb.point) / d);
    }
    Ok(worst)
}
