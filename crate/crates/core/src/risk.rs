//! Monte-Carlo risk of the penalized LSE and competitors, and checks of the
//! loss tail and risk bounds stated in terms of `t_θ`.
//!
//! `t_θ` is replaced by its Monte-Carlo estimate throughout; its reported
//! standard error is folded into every pass/fail slack.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimator::{solve_penalized_lse, SolveOptions};
use crate::geometry::ConstraintSet;
use crate::linalg::{dist, dot, mean_stderr};
use crate::noise::{gaussian_vector, sub_seed, NoiseBatch};
use crate::penalty::PenaltySpec;
use crate::quad::{integrate_to_infinity, QuadOptions, Quadrature};
use crate::width::{find_t_theta, require_member, TThetaResult, WidthOptions};

/// Largest tolerated fraction of failed solves in one run.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;
/// Tail bounds at or above this level are reported but not tested.
pub const VACUOUS_LEVEL: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    PenalizedLse { set: ConstraintSet, penalty: PenaltySpec },
    Identity,
    Zero,
    /// `(1 − (n − 2)/‖X‖²) X`, without the positive part.
    JamesStein,
    /// `X` truncated to `[−a, a]`; one-dimensional.
    Clip { a: f64 },
}

impl EstimatorSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            EstimatorSpec::PenalizedLse { set, penalty } => {
                check_dim(set.validate()?, dim)?;
                penalty.validate(dim)
            }
            EstimatorSpec::Identity | EstimatorSpec::Zero => Ok(()),
            EstimatorSpec::JamesStein if dim < 3 => {
                Err(Error::invalid("estimator", "james_stein needs dimension at least 3"))
            }
            EstimatorSpec::JamesStein => Ok(()),
            EstimatorSpec::Clip { a } => {
                if dim != 1 {
                    Err(Error::invalid("estimator", "clip is one-dimensional"))
                } else if !(*a > 0.0) || !a.is_finite() {
                    Err(Error::invalid("estimator", "clip level must be positive"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn apply(&self, x: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
        Ok(match self {
            EstimatorSpec::PenalizedLse { set, penalty } => {
                solve_penalized_lse(set, penalty, x, opts)?.point
            }
            EstimatorSpec::Identity => x.to_vec(),
            EstimatorSpec::Zero => vec![0.0; x.len()],
            EstimatorSpec::JamesStein => {
                let s = 1.0 - (x.len() as f64 - 2.0) / dot(x, x);
                x.iter().map(|a| s * a).collect()
            }
            EstimatorSpec::Clip { a } => x.iter().map(|v| v.clamp(-a, *a)).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskOptions {
    pub width: WidthOptions,
    /// Batch size for estimating `t_θ`.
    pub ttheta_batch: usize,
}

impl Default for RiskOptions {
    fn default() -> Self {
        Self {
            width: WidthOptions::default(),
            ttheta_batch: 2000,
        }
    }
}

/// `t² + 2√84·t·min(√t, 1) + 84·min(t, 1)`
pub fn risk_bound(t: f64) -> f64 {
    let c = 84f64.sqrt();
    t * t + 2.0 * c * t * t.sqrt().min(1.0) + 84.0 * t.min(1.0)
}

fn risk_bound_slope(t: f64) -> f64 {
    let c = 84f64.sqrt();
    if t < 1.0 {
        2.0 * t + 3.0 * c * t.sqrt() + 84.0
    } else {
        2.0 * t + 2.0 * c
    }
}

/// `2·exp(−δ⁴ / (32(t + δ)²))`, uncapped.
pub fn tail_bound(t: f64, delta: f64) -> f64 {
    if t + delta == 0.0 {
        return 2.0;
    }
    2.0 * (-(delta.powi(4)) / (32.0 * (t + delta).powi(2))).exp()
}

/// `∫₀^∞ x·exp(−x⁴/(32(1 + x)²)) dx`, the constant that turns the tail bound
/// into the risk bound.
pub fn tail_moment_integral() -> Result<Quadrature> {
    integrate_to_infinity(
        |x| x * (-(x.powi(4)) / (32.0 * (1.0 + x).powi(2))).exp(),
        0.0,
        QuadOptions::default(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub theta: Vec<f64>,
    pub mean_sq_loss: f64,
    pub stderr: f64,
    pub reps: usize,
    pub failures: usize,
    pub t_theta: Option<TThetaResult>,
    pub risk_bound: Option<f64>,
    /// Risk standard error combined with the bound's sensitivity to `t̂_θ`.
    pub combined_stderr: Option<f64>,
    pub pass: Option<bool>,
}

pub(crate) struct Losses {
    /// Squared loss per member, `None` where the solver failed.
    pub per_member: Vec<Option<f64>>,
    pub failures: usize,
}

impl Losses {
    pub fn values(&self) -> Vec<f64> {
        self.per_member.iter().flatten().copied().collect()
    }
}

pub(crate) fn squared_losses(
    est: &EstimatorSpec,
    theta: &[f64],
    noise_seed: u64,
    reps: usize,
    opts: &SolveOptions,
) -> Result<Losses> {
    let n = theta.len();
    let results: Vec<Result<Option<f64>>> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let x: Vec<f64> = gaussian_vector(noise_seed, i as u64, n)
                .iter()
                .zip(theta)
                .map(|(z, t)| z + t)
                .collect();
            match est.apply(&x, opts) {
                Ok(e) => {
                    let d = dist(&e, theta);
                    Ok(Some(d * d))
                }
                Err(Error::SolverNonConvergence { .. } | Error::ProjectionNonConvergence { .. }) => {
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let per_member = results.into_iter().collect::<Result<Vec<_>>>()?;
    let failures = per_member.iter().filter(|l| l.is_none()).count();
    if failures as f64 > MAX_FAILURE_FRACTION * reps as f64 {
        return Err(Error::TooManyFailures { failures, total: reps });
    }
    Ok(Losses { per_member, failures })
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 2 {
        Err(Error::invalid("reps", "need at least 2 replications"))
    } else {
        Ok(())
    }
}

/// Mean squared loss over `reps` draws of `X = θ + Z`; for the penalized LSE
/// also the risk bound at `t̂_θ` and its pass flag.
pub fn simulate_risk(
    est: &EstimatorSpec,
    theta: &[f64],
    reps: usize,
    seed: u64,
    opts: &RiskOptions,
) -> Result<RiskReport> {
    check_reps(reps)?;
    est.validate(theta.len())?;
    if let EstimatorSpec::Zero = est {
        let l = dot(theta, theta);
        return Ok(RiskReport {
            theta: theta.to_vec(),
            mean_sq_loss: l,
            stderr: 0.0,
            reps,
            failures: 0,
            t_theta: None,
            risk_bound: None,
            combined_stderr: None,
            pass: None,
        });
    }
    let tt = match est {
        EstimatorSpec::PenalizedLse { set, penalty } => {
            require_member(set, theta)?;
            let batch = NoiseBatch::new(sub_seed(seed, "ttheta"), opts.ttheta_batch, theta.len());
            Some(find_t_theta(theta, set, penalty, &batch, &opts.width)?)
        }
        _ => None,
    };
    let losses = squared_losses(est, theta, sub_seed(seed, "loss"), reps, &opts.width.solve)?;
    let (mean, stderr) = mean_stderr(&losses.values());
    let mut report = RiskReport {
        theta: theta.to_vec(),
        mean_sq_loss: mean,
        stderr,
        reps,
        failures: losses.failures,
        t_theta: None,
        risk_bound: None,
        combined_stderr: None,
        pass: None,
    };
    if let Some(tt) = tt {
        let b = risk_bound(tt.t_theta);
        let s = (stderr.powi(2) + (risk_bound_slope(tt.t_theta) * tt.stderr).powi(2)).sqrt();
        report.risk_bound = Some(b);
        report.combined_stderr = Some(s);
        report.pass = Some(mean <= b + 3.0 * s);
        report.t_theta = Some(tt);
    }
    Ok(report)
}

pub fn check_risk_bound(
    set: &ConstraintSet,
    f: &PenaltySpec,
    theta: &[f64],
    reps: usize,
    seed: u64,
    opts: &RiskOptions,
) -> Result<RiskReport> {
    let est = EstimatorSpec::PenalizedLse {
        set: set.clone(),
        penalty: f.clone(),
    };
    simulate_risk(&est, theta, reps, seed, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub theta: Vec<f64>,
    pub t_theta_hat: f64,
    pub t_theta_stderr: f64,
    pub reps: usize,
    pub failures: usize,
    pub deltas: Vec<f64>,
    /// Empirical `P{L ≥ t̂_θ + δ}`.
    pub empirical: Vec<f64>,
    /// `min(1, 2·exp(−δ⁴/(32(t̂_θ + δ)²)))`.
    pub bounds: Vec<f64>,
    /// The bound with `t_θ` moved up by three standard errors at fixed threshold.
    pub corrected_bounds: Vec<f64>,
    pub binomial_stderr: Vec<f64>,
    /// False where the bound is at least [`VACUOUS_LEVEL`].
    pub tested: Vec<bool>,
    pub pass: bool,
}

/// Tail of the loss `L = ‖θ̂ − θ‖` beyond `t̂_θ + δ` against the exponential
/// concentration bound.
///
/// For a threshold `s = t̂_θ + δ` the bound `2·exp(−(s − t_θ)⁴/(32 s²))` grows
/// with `t_θ`, so the worst case within three standard errors is used.
pub fn check_tail_bound(
    set: &ConstraintSet,
    f: &PenaltySpec,
    theta: &[f64],
    deltas: &[f64],
    reps: usize,
    seed: u64,
    opts: &RiskOptions,
) -> Result<TailReport> {
    check_reps(reps)?;
    if deltas.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::invalid("deltas", "must be finite and nonnegative"));
    }
    let est = EstimatorSpec::PenalizedLse {
        set: set.clone(),
        penalty: f.clone(),
    };
    est.validate(theta.len())?;
    require_member(set, theta)?;
    let batch = NoiseBatch::new(sub_seed(seed, "ttheta"), opts.ttheta_batch, theta.len());
    let tt = find_t_theta(theta, set, f, &batch, &opts.width)?;
    let losses = squared_losses(&est, theta, sub_seed(seed, "loss"), reps, &opts.width.solve)?;
    let loss: Vec<f64> = losses.values().iter().map(|l| l.sqrt()).collect();
    let m = loss.len() as f64;

    let t = tt.t_theta;
    let shift = 3.0 * tt.stderr;
    let mut report = TailReport {
        theta: theta.to_vec(),
        t_theta_hat: t,
        t_theta_stderr: tt.stderr,
        reps,
        failures: losses.failures,
        deltas: deltas.to_vec(),
        empirical: Vec::new(),
        bounds: Vec::new(),
        corrected_bounds: Vec::new(),
        binomial_stderr: Vec::new(),
        tested: Vec::new(),
        pass: true,
    };
    for &d in deltas {
        let freq = loss.iter().filter(|l| **l >= t + d).count() as f64 / m;
        let bound = tail_bound(t, d).min(1.0);
        let corrected = tail_bound(t + shift.min(d), d - shift.min(d)).min(1.0);
        let se = (corrected * (1.0 - corrected) / m).sqrt();
        let tested = bound < VACUOUS_LEVEL;
        if tested && freq > corrected + 3.0 * se {
            report.pass = false;
        }
        report.empirical.push(freq);
        report.bounds.push(bound);
        report.corrected_bounds.push(corrected);
        report.binomial_stderr.push(se);
        report.tested.push(tested);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub distance: f64,
    pub risk1: f64,
    pub risk2: f64,
    /// Standard error of the paired difference `L₁ − 2L₂`.
    pub paired_stderr: f64,
    pub comparison_rhs: f64,
    pub comparison_pass: bool,
    pub t1: f64,
    pub t1_stderr: f64,
    pub t2: f64,
    pub t2_stderr: f64,
    pub ttheta_interval: (f64, f64),
    pub ttheta_pass: bool,
    pub failures: usize,
    pub pass: bool,
}

/// `[(t − √(d² + 4td))₊, t + √(d² + 4td)]`
pub fn ttheta_interval(t: f64, d: f64) -> (f64, f64) {
    let r = (d * d + 4.0 * t * d).sqrt();
    ((t - r).max(0.0), t + r)
}

/// Risk comparison `E₁ ≤ 2E₂ + 8‖θ₁ − θ₂‖²` on shared noise and stability
/// of `t̂_θ` between the two points.
pub fn check_smoothness(
    set: &ConstraintSet,
    f: &PenaltySpec,
    theta1: &[f64],
    theta2: &[f64],
    reps: usize,
    seed: u64,
    opts: &RiskOptions,
) -> Result<SmoothnessReport> {
    check_reps(reps)?;
    check_dim(theta1.len(), theta2.len())?;
    let est = EstimatorSpec::PenalizedLse {
        set: set.clone(),
        penalty: f.clone(),
    };
    est.validate(theta1.len())?;
    require_member(set, theta1)?;
    require_member(set, theta2)?;
    let d = dist(theta1, theta2);

    let noise = sub_seed(seed, "loss");
    let l1 = squared_losses(&est, theta1, noise, reps, &opts.width.solve)?;
    let l2 = squared_losses(&est, theta2, noise, reps, &opts.width.solve)?;
    let pairs: Vec<(f64, f64)> = l1
        .per_member
        .iter()
        .zip(&l2.per_member)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - 2.0 * b).collect();
    let (mean_diff, paired_stderr) = mean_stderr(&diffs);
    let risk1 = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
    let risk2 = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
    let comparison_rhs = 2.0 * risk2 + 8.0 * d * d;
    let comparison_pass = mean_diff <= 8.0 * d * d + 3.0 * paired_stderr;

    let batch = NoiseBatch::new(sub_seed(seed, "ttheta"), opts.ttheta_batch, theta1.len());
    let tt1 = find_t_theta(theta1, set, f, &batch, &opts.width)?;
    let tt2 = find_t_theta(theta2, set, f, &batch, &opts.width)?;
    let iv = ttheta_interval(tt1.t_theta, d);
    // Widen for the error in t̂_θ₁ (both ends are monotone in t only piecewise,
    // so take the envelope over ±3σ) and then for the error in t̂_θ₂.
    let lo_t = (tt1.t_theta - 3.0 * tt1.stderr).max(0.0);
    let hi_t = tt1.t_theta + 3.0 * tt1.stderr;
    let (a, b) = (ttheta_interval(lo_t, d), ttheta_interval(hi_t, d));
    let lo = iv.0.min(a.0).min(b.0) - 3.0 * tt2.stderr;
    let hi = iv.1.max(a.1).max(b.1) + 3.0 * tt2.stderr;
    let ttheta_pass = lo <= tt2.t_theta && tt2.t_theta <= hi;

    Ok(SmoothnessReport {
        theta1: theta1.to_vec(),
        theta2: theta2.to_vec(),
        distance: d,
        risk1,
        risk2,
        paired_stderr,
        comparison_rhs,
        comparison_pass,
        t1: tt1.t_theta,
        t1_stderr: tt1.stderr,
        t2: tt2.t_theta,
        t2_stderr: tt2.stderr,
        ttheta_interval: iv,
        ttheta_pass,
        failures: l1.failures + l2.failures,
        pass: comparison_pass && ttheta_pass,
    })
}

/// `E L² = 2∫₀^∞ x·P{L ≥ x} dx` on the empirical distribution of `losses`:
/// returns `(mean of L², trapezoid value of the tail integral)`.
pub fn tail_moment_identity(losses: &[f64], grid_points: usize) -> (f64, f64) {
    let m = losses.len() as f64;
    let direct = losses.iter().map(|l| l * l).sum::<f64>() / m;
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let top = sorted.last().copied().unwrap_or(0.0);
    if top <= 0.0 || grid_points < 2 {
        return (direct, 0.0);
    }
    let surv = |x: f64| {
        let below = sorted.partition_point(|l| *l < x);
        (sorted.len() - below) as f64 / m
    };
    let h = top / (grid_points - 1) as f64;
    let g = |i: usize| {
        let x = i as f64 * h;
        2.0 * x * surv(x)
    };
    let mut integral = 0.5 * (g(0) + g(grid_points - 1));
    for i in 1..grid_points - 1 {
        integral += g(i);
    }
    (direct, integral * h)
}

/// Euclidean norm of the loss vector for each replication, for callers that
/// want the raw loss sample rather than the summary.
pub fn loss_sample(
    est: &EstimatorSpec,
    theta: &[f64],
    reps: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<Vec<f64>> {
    check_reps(reps)?;
    est.validate(theta.len())?;
    let l = squared_losses(est, theta, sub_seed(seed, "loss"), reps, opts)?;
    Ok(l.values().iter().map(|v| v.sqrt()).collect())
}
