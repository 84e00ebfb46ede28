//! Monte-Carlo estimation of the penalized localized Gaussian width
//!
//! ```text
//! m_θ(t) = E sup_{α ∈ Θ, ‖α − θ‖ ≤ t} ⟨Z, α − θ⟩ − f(α)
//! G_θ(t) = m_θ(t) − t²/2,        t_θ = argmax_{t ≥ 0} G_θ(t)
//! ```
//!
//! The inner supremum is computed through its Lagrangian. For a multiplier
//! `μ > 0` the maximizer of `⟨z, α − θ⟩ − f(α) − (μ/2)‖α − θ‖²` over Θ is the
//! penalized estimator at data `θ + z/μ` with penalty `f/μ`, and its distance
//! to θ is nonincreasing and continuous in μ. A root-find on `log μ` matches
//! that distance to `t`. At the root the per-sample derivative of the
//! supremum in `t` is `μ·t`, which feeds the delta-method error bar on `t̂_θ`.
//!
//! One [`NoiseBatch`] is shared across all `t` (common random numbers), so the
//! sample `m̂` is itself nondecreasing and concave and golden-section search
//! on the sample `Ĝ` is exact up to its bracket.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimator::{solve_penalized_lse, SolveOptions};
use crate::geometry::ConstraintSet;
use crate::linalg::{dist, dot, mean_stderr, norm};
use crate::noise::NoiseBatch;
use crate::penalty::PenaltySpec;

/// Membership tolerance for the center point θ.
pub const THETA_TOL: f64 = 1e-7;
/// Hard stop for the doubling search on unbounded sets.
const T_HARD_CAP: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WidthOptions {
    pub solve: SolveOptions,
    /// Golden-section stops at bracket width `bracket_rel_tol · max(1, T_max)`.
    pub bracket_rel_tol: f64,
}

impl Default for WidthOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            bracket_rel_tol: 1e-3,
        }
    }
}

impl WidthOptions {
    /// Accuracy of a single inner supremum value.
    pub fn inner_tol(&self) -> f64 {
        self.solve.tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSup {
    pub value: f64,
    pub argmax: Vec<f64>,
    /// Lagrange multiplier of the ball constraint; zero when it is inactive.
    pub multiplier: f64,
    /// Derivative of the supremum in `t`, `μ·t`.
    pub slope: f64,
    pub solves: usize,
}

pub(crate) fn require_member(set: &ConstraintSet, theta: &[f64]) -> Result<()> {
    check_dim(set.dim(), theta.len())?;
    if set.contains(theta, THETA_TOL)? {
        Ok(())
    } else {
        Err(Error::invalid("theta", "must lie in the constraint set"))
    }
}

struct Probe {
    log_mu: f64,
    radius: f64,
    argmax: Vec<f64>,
}

/// `sup ⟨z, α − θ⟩ − f(α)` over `Θ ∩ {‖α − θ‖ ≤ t}`.
///
/// `theta` is assumed to lie in `set`; [`estimate_m`] and friends check it once
/// per batch rather than once per sample.
pub fn inner_sup(
    z: &[f64],
    theta: &[f64],
    t: f64,
    set: &ConstraintSet,
    f: &PenaltySpec,
    opts: &WidthOptions,
) -> Result<InnerSup> {
    let n = set.dim();
    check_dim(n, z.len())?;
    check_dim(n, theta.len())?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", "must be finite and nonnegative"));
    }
    let value_of = |alpha: &[f64]| {
        dot(z, alpha) - dot(z, theta) - f.value_unchecked(alpha)
    };
    if t == 0.0 {
        return Ok(InnerSup {
            value: -f.value_unchecked(theta),
            argmax: theta.to_vec(),
            multiplier: f64::INFINITY,
            slope: 0.0,
            solves: 0,
        });
    }

    let scale = t.max(1.0);
    let feas_slack = 1e-12 * scale;
    let value_tol = 1e-3 * opts.inner_tol();
    let mut solves = 0usize;
    let mut probe = |log_mu: f64| -> Result<Probe> {
        let mu = log_mu.exp();
        let data: Vec<f64> = theta.iter().zip(z).map(|(a, b)| a + b / mu).collect();
        let sol = solve_penalized_lse(set, &f.scaled(1.0 / mu), &data, &opts.solve)?;
        solves += 1;
        Ok(Probe {
            log_mu,
            radius: dist(&sol.point, theta),
            argmax: sol.point,
        })
    };
    let done = |p: &Probe| -> InnerSup {
        let mu = p.log_mu.exp();
        InnerSup {
            value: value_of(&p.argmax),
            argmax: p.argmax.clone(),
            multiplier: mu,
            slope: mu * t,
            solves: 0,
        }
    };

    // Exact for the unconstrained case: r(μ) = ‖z‖/μ.
    let zn = norm(z);
    let start = if zn > 0.0 { (zn / t).ln() } else { (1.0 / t).ln() };
    let first = probe(start)?;

    let (mut lo, mut hi) = if first.radius > t + feas_slack {
        let mut lo = first;
        let mut step = std::f64::consts::LN_2;
        loop {
            let next = probe(lo.log_mu + step)?;
            if next.radius <= t + feas_slack {
                break (lo, next);
            }
            if next.log_mu > 700.0 {
                return Err(Error::invalid("theta", "inner supremum cannot localize around theta"));
            }
            lo = next;
            step *= 2.0;
        }
    } else {
        let mut hi = first;
        loop {
            if t - hi.radius <= feas_slack {
                let mut out = done(&hi);
                out.solves = solves;
                return Ok(out);
            }
            let next = probe(hi.log_mu - std::f64::consts::LN_2)?;
            if next.radius > t + feas_slack {
                break (next, hi);
            }
            // The ball is inactive once shrinking μ stops moving the maximizer.
            if dist(&next.argmax, &hi.argmax) <= value_tol * scale || next.log_mu < -700.0 {
                let mut out = done(&next);
                out.multiplier = 0.0;
                out.slope = 0.0;
                out.solves = solves;
                return Ok(out);
            }
            hi = next;
        }
    };

    // Illinois false position on r(log μ) − t, with a bisection every third step.
    let mut f_lo = lo.radius - t;
    let mut f_hi = hi.radius - t;
    let mut last_side = 0i8;
    for iter in 0..200 {
        let mu_hi = hi.log_mu.exp();
        if mu_hi * t * (t - hi.radius) <= value_tol || hi.log_mu - lo.log_mu <= 1e-14 {
            break;
        }
        let width = hi.log_mu - lo.log_mu;
        let mut s = hi.log_mu - f_hi * width / (f_hi - f_lo);
        if iter % 3 == 2 || !(s > lo.log_mu && s < hi.log_mu) || !s.is_finite() {
            s = lo.log_mu + 0.5 * width;
        }
        let p = probe(s)?;
        if p.radius > t + feas_slack {
            f_lo = p.radius - t;
            lo = p;
            if last_side == -1 {
                f_hi *= 0.5;
            }
            last_side = -1;
        } else {
            f_hi = p.radius - t;
            hi = p;
            if last_side == 1 {
                f_lo *= 0.5;
            }
            last_side = 1;
            if t - hi.radius <= feas_slack {
                break;
            }
        }
    }
    let mut out = done(&hi);
    out.solves = solves;
    Ok(out)
}

/// Per-member inner values for one `t`, in batch order.
#[derive(Debug, Clone)]
pub(crate) struct BatchEval {
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub failures: usize,
}

pub(crate) fn evaluate_batch(
    zs: &[Vec<f64>],
    theta: &[f64],
    t: f64,
    set: &ConstraintSet,
    f: &PenaltySpec,
    opts: &WidthOptions,
) -> Result<BatchEval> {
    let results: Vec<Result<InnerSup>> = zs
        .par_iter()
        .map(|z| inner_sup(z, theta, t, set, f, opts))
        .collect();
    let mut values = Vec::with_capacity(zs.len());
    let mut slopes = Vec::with_capacity(zs.len());
    let mut failures = 0;
    for r in results {
        match r {
            Ok(s) => {
                values.push(s.value);
                slopes.push(s.slope);
            }
            Err(Error::SolverNonConvergence { .. } | Error::ProjectionNonConvergence { .. }) => {
                failures += 1
            }
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::invalid("batch", "every inner solve failed"));
    }
    Ok(BatchEval {
        values,
        slopes,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub failures: usize,
}

pub fn estimate_m(
    theta: &[f64],
    t: f64,
    set: &ConstraintSet,
    f: &PenaltySpec,
    batch: &NoiseBatch,
    opts: &WidthOptions,
) -> Result<MEstimate> {
    require_member(set, theta)?;
    check_dim(set.dim(), batch.dim)?;
    if t == 0.0 {
        return Ok(MEstimate {
            mean: -f.value(theta)?,
            stderr: 0.0,
            failures: 0,
        });
    }
    let eval = evaluate_batch(&batch.vectors(), theta, t, set, f, opts)?;
    let (mean, stderr) = mean_stderr(&eval.values);
    Ok(MEstimate {
        mean,
        stderr,
        failures: eval.failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthProfile {
    pub theta: Vec<f64>,
    pub tgrid: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    pub batch: NoiseBatch,
    pub failures: usize,
}

/// `m̂` over an increasing grid of radii, all on the same batch.
pub fn width_profile(
    theta: &[f64],
    tgrid: &[f64],
    set: &ConstraintSet,
    f: &PenaltySpec,
    batch: &NoiseBatch,
    opts: &WidthOptions,
) -> Result<WidthProfile> {
    require_member(set, theta)?;
    check_dim(set.dim(), batch.dim)?;
    if tgrid.is_empty()
        || tgrid[0] < 0.0
        || tgrid.windows(2).any(|w| !(w[0] < w[1]))
        || tgrid.iter().any(|t| !t.is_finite())
    {
        return Err(Error::invalid("tgrid", "must be nonempty, nonnegative and strictly increasing"));
    }
    let zs = batch.vectors();
    let mut m_hat = Vec::with_capacity(tgrid.len());
    let mut stderr = Vec::with_capacity(tgrid.len());
    let mut failures = 0;
    for &t in tgrid {
        if t == 0.0 {
            m_hat.push(-f.value(theta)?);
            stderr.push(0.0);
            continue;
        }
        let eval = evaluate_batch(&zs, theta, t, set, f, opts)?;
        let (m, s) = mean_stderr(&eval.values);
        failures += eval.failures;
        m_hat.push(m);
        stderr.push(s);
    }
    Ok(WidthProfile {
        theta: theta.to_vec(),
        tgrid: tgrid.to_vec(),
        m_hat,
        stderr,
        batch: *batch,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TThetaResult {
    pub t_theta: f64,
    pub g_at_max: f64,
    /// `m̂(t̂_θ)` on the same batch.
    pub m_at_max: f64,
    pub bracket: (f64, f64),
    /// Delta-method error of the sample argmax, combined with the bracket half-width.
    pub stderr: f64,
    pub t_max: f64,
    pub evaluations: usize,
    pub failures: usize,
}

struct GCache<'a> {
    zs: Vec<Vec<f64>>,
    theta: &'a [f64],
    set: &'a ConstraintSet,
    f: &'a PenaltySpec,
    opts: &'a WidthOptions,
    g0: f64,
    seen: Vec<(f64, f64, Option<BatchEval>)>,
    failures: usize,
}

impl GCache<'_> {
    fn g(&mut self, t: f64) -> Result<f64> {
        if let Some((_, g, _)) = self.seen.iter().find(|(s, _, _)| *s == t) {
            return Ok(*g);
        }
        if t == 0.0 {
            self.seen.push((0.0, self.g0, None));
            return Ok(self.g0);
        }
        let eval = evaluate_batch(&self.zs, self.theta, t, self.set, self.f, self.opts)?;
        self.failures += eval.failures;
        let m = eval.values.iter().sum::<f64>() / eval.values.len() as f64;
        let g = m - 0.5 * t * t;
        self.seen.push((t, g, Some(eval)));
        Ok(g)
    }

    fn eval_at(&self, t: f64) -> Option<&BatchEval> {
        self.seen
            .iter()
            .find(|(s, _, _)| *s == t)
            .and_then(|(_, _, e)| e.as_ref())
    }
}

/// Maximizes the sample `Ĝ(t) = m̂(t) − t²/2` over `t ≥ 0`.
///
/// Doubling from `t = 1` finds `T_max` once `Ĝ` has decreased over two
/// consecutive doublings (capped at the diameter for bounded sets), then
/// golden-section search narrows the bracket around the best evaluated point.
pub fn find_t_theta(
    theta: &[f64],
    set: &ConstraintSet,
    f: &PenaltySpec,
    batch: &NoiseBatch,
    opts: &WidthOptions,
) -> Result<TThetaResult> {
    require_member(set, theta)?;
    check_dim(set.dim(), batch.dim)?;
    let g0 = -f.value(theta)?;
    let cap = set.diameter();
    if cap == Some(0.0) {
        return Ok(TThetaResult {
            t_theta: 0.0,
            g_at_max: g0,
            m_at_max: g0,
            bracket: (0.0, 0.0),
            stderr: 0.0,
            t_max: 0.0,
            evaluations: 0,
            failures: 0,
        });
    }
    let mut cache = GCache {
        zs: batch.vectors(),
        theta,
        set,
        f,
        opts,
        g0,
        seen: Vec::new(),
        failures: 0,
    };

    let mut grid = vec![(0.0, g0)];
    let mut t = cap.map_or(1.0, |c| c.min(1.0));
    let mut falling = 0;
    let t_max = loop {
        let g = cache.g(t)?;
        let prev = grid.last().expect("grid starts at zero").1;
        falling = if g < prev { falling + 1 } else { 0 };
        grid.push((t, g));
        if falling >= 2 {
            break t;
        }
        if let Some(c) = cap {
            if t >= c {
                // Beyond the diameter m̂ is flat and Ĝ strictly decreasing.
                break t;
            }
        }
        if t >= T_HARD_CAP {
            return Err(Error::Bracket { cap: t });
        }
        t = cap.map_or(2.0 * t, |c| (2.0 * t).min(c));
    };

    // Concavity puts the maximizer between the neighbours of the best grid point.
    let best = grid
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("grid is nonempty");
    let mut a = grid[best.saturating_sub(1)].0;
    let mut b = grid[(best + 1).min(grid.len() - 1)].0;

    let width_tol = opts.bracket_rel_tol * t_max.max(1.0);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = cache.g(c)?;
    let mut gd = cache.g(d)?;
    while b - a > width_tol {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = cache.g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = cache.g(d)?;
        }
    }
    let mut t_hat = c;
    let mut g_hat = gc;
    for cand in [a, d, b] {
        let g = cache.g(cand)?;
        if g > g_hat {
            t_hat = cand;
            g_hat = g;
        }
    }

    let slope_se = match cache.eval_at(t_hat) {
        Some(e) => mean_stderr(&e.slopes).1,
        None => 0.0,
    };
    // |Ĝ''| ≥ 1, so the slope error bounds the argmax error.
    let half = 0.5 * (b - a);
    let stderr = (slope_se * slope_se + half * half).sqrt();

    Ok(TThetaResult {
        t_theta: t_hat,
        g_at_max: g_hat,
        m_at_max: g_hat + 0.5 * t_hat * t_hat,
        bracket: (a, b),
        stderr,
        t_max,
        evaluations: cache.seen.len(),
        failures: cache.failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeCheck {
    /// `max_i m̂(tᵢ) − m̂(tᵢ₊₁)`; nonpositive for a nondecreasing profile.
    pub monotone_violation: f64,
    /// Largest amount by which a point falls below the chord of its neighbours.
    pub concavity_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Nondecreasing and concave to within `10·inner_tol`.
pub fn check_profile_shape(profile: &WidthProfile, inner_tol: f64) -> ShapeCheck {
    let t = &profile.tgrid;
    let m = &profile.m_hat;
    let monotone_violation = m
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut concavity_violation = f64::NEG_INFINITY;
    for i in 1..t.len().saturating_sub(1) {
        let (l, r) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        let chord = (r * m[i - 1] + l * m[i + 1]) / (l + r);
        concavity_violation = concavity_violation.max(chord - m[i]);
    }
    let tolerance = 10.0 * inner_tol;
    ShapeCheck {
        monotone_violation,
        concavity_violation,
        tolerance,
        pass: monotone_violation <= tolerance && concavity_violation <= tolerance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Slack for comparing against `t̂_θ` instead of the exact sample argmax: the
/// argmax sits within the final bracket of width `w`.
fn argmax_slack(t: f64, t_hat: f64, w: f64, inner_tol: f64) -> f64 {
    w * (2.0 * t_hat + 1.0 + (t - t_hat).abs() + w) + 10.0 * inner_tol
}

/// Tangent-line inequality `m̂(t) ≤ m̂(t̂) + t̂(t − t̂)` and strong concavity
/// `Ĝ(t) − Ĝ(t̂) ≤ −(t − t̂)²/2` on the profile grid. The profile and `tt`
/// must come from the same batch.
pub fn check_ttheta_inequalities(
    profile: &WidthProfile,
    tt: &TThetaResult,
    inner_tol: f64,
) -> (Vec<InequalityRow>, Vec<InequalityRow>) {
    let th = tt.t_theta;
    let w = tt.bracket.1 - tt.bracket.0;
    let mut tangent = Vec::new();
    let mut curvature = Vec::new();
    for (&t, &m) in profile.tgrid.iter().zip(&profile.m_hat) {
        let slack = argmax_slack(t, th, w, inner_tol);
        let rhs = tt.m_at_max + th * (t - th);
        tangent.push(InequalityRow {
            t,
            lhs: m,
            rhs,
            slack,
            pass: m <= rhs + slack,
        });
        let lhs = (m - 0.5 * t * t) - tt.g_at_max;
        let rhs = -0.5 * (t - th) * (t - th);
        curvature.push(InequalityRow {
            t,
            lhs,
            rhs,
            slack,
            pass: lhs <= rhs + slack,
        });
    }
    (tangent, curvature)
}
