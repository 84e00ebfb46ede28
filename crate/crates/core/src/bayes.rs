//! Bayes-risk lower bounds and the priors they are evaluated on.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::ConstraintSet;
use crate::linalg::{dist, dot, mean_stderr};
use crate::noise::{gaussian_vector, stream_rng, sub_seed, NoiseBatch};
use crate::penalty::PenaltySpec;
use crate::risk::{EstimatorSpec, RiskOptions, MAX_FAILURE_FRACTION};
use crate::width::{estimate_m, find_t_theta, inner_sup, require_member, TThetaResult};

/// `‖Δ‖²` above which `exp(‖Δ‖²) − 1` is reported as saturated.
pub const CHI_SQ_SATURATION: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    TwoPoint {
        p1: Vec<f64>,
        p2: Vec<f64>,
        w1: f64,
        w2: f64,
    },
    Grid {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    /// Law of the maximizer of `⟨Z, α − θ*⟩ − f(α)` over `Θ ∩ B(θ*, ρ·t̂_θ*)`.
    Pushforward {
        theta_star: Vec<f64>,
        rho: f64,
        set: ConstraintSet,
        penalty: PenaltySpec,
        batch: NoiseBatch,
    },
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("prior", "weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("prior", format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// A discrete prior: atoms with weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atoms {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl PriorSpec {
    /// Uniform grid prior on `count` equispaced points of `[lo, hi]`.
    pub fn uniform_grid_1d(lo: f64, hi: f64, count: usize) -> PriorSpec {
        let step = if count > 1 { (hi - lo) / (count - 1) as f64 } else { 0.0 };
        PriorSpec::Grid {
            points: (0..count).map(|i| vec![lo + step * i as f64]).collect(),
            weights: vec![1.0 / count as f64; count],
        }
    }

    pub fn validate(&self) -> Result<usize> {
        match self {
            PriorSpec::TwoPoint { p1, p2, w1, w2 } => {
                check_dim(p1.len(), p2.len())?;
                check_weights(&[*w1, *w2])?;
                Ok(p1.len())
            }
            PriorSpec::Grid { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return Err(Error::invalid("prior", "need one weight per point"));
                }
                let n = points[0].len();
                for p in points {
                    check_dim(n, p.len())?;
                }
                check_weights(weights)?;
                Ok(n)
            }
            PriorSpec::Pushforward {
                theta_star,
                rho,
                set,
                penalty,
                batch,
            } => {
                let n = set.validate()?;
                penalty.validate(n)?;
                check_dim(n, batch.dim)?;
                if !(*rho >= 0.0) || rho * rho + 4.0 * rho >= 1.0 {
                    return Err(Error::invalid("prior", "rho must satisfy rho^2 + 4 rho < 1"));
                }
                if batch.count == 0 {
                    return Err(Error::invalid("prior", "empty batch"));
                }
                require_member(set, theta_star)?;
                Ok(n)
            }
        }
    }

    /// Discrete form of the prior; a pushforward prior is replaced by its
    /// equally weighted samples.
    pub fn atoms(&self, opts: &RiskOptions) -> Result<Atoms> {
        self.validate()?;
        Ok(match self {
            PriorSpec::TwoPoint { p1, p2, w1, w2 } => Atoms {
                points: vec![p1.clone(), p2.clone()],
                weights: vec![*w1, *w2],
            },
            PriorSpec::Grid { points, weights } => Atoms {
                points: points.clone(),
                weights: weights.clone(),
            },
            PriorSpec::Pushforward { .. } => {
                let s = sample_pushforward_prior(self, opts)?;
                let k = s.samples.len();
                Atoms {
                    points: s.samples,
                    weights: vec![1.0 / k as f64; k],
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Lecam,
    SmallBall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub method: BoundMethod,
    pub value: f64,
    /// Two-point distance (Le Cam).
    pub distance: Option<f64>,
    /// χ² radius used (small ball).
    pub info: Option<f64>,
    /// Squared radius at which some candidate ball first reaches the mass threshold.
    pub t_found: Option<f64>,
    pub candidates: usize,
    pub best_candidate: Option<usize>,
}

/// `¼·d²·max(0, 1 − d/2)` from the total-variation bound `TV ≤ d/2`.
pub fn lecam_two_point(theta0: &[f64], theta1: &[f64]) -> Result<BoundReport> {
    check_dim(theta0.len(), theta1.len())?;
    let d = dist(theta0, theta1);
    Ok(BoundReport {
        method: BoundMethod::Lecam,
        value: 0.25 * d * d * (1.0 - 0.5 * d).max(0.0),
        distance: Some(d),
        info: None,
        t_found: None,
        candidates: 2,
        best_candidate: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSq {
    pub value: f64,
    pub saturated: bool,
}

/// `χ²(N(θ₁, I) ‖ N(θ₂, I)) = exp(‖θ₁ − θ₂‖²) − 1`.
pub fn chi_sq_gaussian(theta1: &[f64], theta2: &[f64]) -> Result<ChiSq> {
    check_dim(theta1.len(), theta2.len())?;
    let d2 = dist(theta1, theta2).powi(2);
    Ok(ChiSq {
        value: d2.exp_m1(),
        saturated: d2 > CHI_SQ_SATURATION,
    })
}

/// `½·sup{t > 0 : max_a w{‖θ − a‖² ≤ t} < 1/(4(1 + I))}` with `a` ranging
/// over `candidates` (default: the atoms, plus θ* for a pushforward prior).
pub fn small_ball_lower_bound(
    prior: &PriorSpec,
    info: f64,
    candidates: Option<&[Vec<f64>]>,
    opts: &RiskOptions,
) -> Result<BoundReport> {
    if !(info >= 0.0) {
        return Err(Error::invalid("info", "must be nonnegative"));
    }
    let atoms = prior.atoms(opts)?;
    let owned;
    let cands: &[Vec<f64>] = match candidates {
        Some(c) => c,
        None => {
            let mut c = atoms.points.clone();
            if let PriorSpec::Pushforward { theta_star, .. } = prior {
                c.push(theta_star.clone());
            }
            owned = c;
            &owned
        }
    };
    if cands.is_empty() {
        return Err(Error::invalid("candidates", "need at least one candidate center"));
    }
    let n = atoms.points[0].len();
    for c in cands {
        check_dim(n, c.len())?;
    }
    let threshold = 0.25 / (1.0 + info);

    // The max-ball-mass function is a right-continuous step function, so the
    // supremum is the first squared radius at which any candidate reaches the
    // threshold.
    let firsts: Vec<f64> = cands
        .par_iter()
        .map(|a| {
            let mut d: Vec<(f64, f64)> = atoms
                .points
                .iter()
                .zip(&atoms.weights)
                .map(|(p, w)| (dist(p, a).powi(2), *w))
                .collect();
            d.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut mass = 0.0;
            for (r2, w) in d {
                mass += w;
                if mass >= threshold {
                    return r2;
                }
            }
            f64::INFINITY
        })
        .collect();
    let (best, t) = firsts
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, t)| (i, *t))
        .expect("candidates are nonempty");
    Ok(BoundReport {
        method: BoundMethod::SmallBall,
        value: 0.5 * t,
        distance: None,
        info: Some(info),
        t_found: Some(t),
        candidates: cands.len(),
        best_candidate: Some(best),
    })
}

/// `sup_{θ ∈ support} χ²(P_θ ‖ P_center)`, an admissible `I` for the small-ball bound.
pub fn info_radius(atoms: &Atoms, center: &[f64]) -> Result<ChiSq> {
    let mut worst = ChiSq {
        value: 0.0,
        saturated: false,
    };
    for (p, w) in atoms.points.iter().zip(&atoms.weights) {
        if *w > 0.0 {
            let c = chi_sq_gaussian(p, center)?;
            if c.value > worst.value {
                worst = c;
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushforwardSample {
    pub samples: Vec<Vec<f64>>,
    pub radius: f64,
    pub t_theta_star: TThetaResult,
    pub failures: usize,
}

/// `Ψ(Z)` for every `Z` in the prior's batch. `t̂_θ*` is estimated on an
/// independent batch derived from the prior's seed.
pub fn sample_pushforward_prior(prior: &PriorSpec, opts: &RiskOptions) -> Result<PushforwardSample> {
    let PriorSpec::Pushforward {
        theta_star,
        rho,
        set,
        penalty,
        batch,
    } = prior
    else {
        return Err(Error::invalid("prior", "not a pushforward prior"));
    };
    prior.validate()?;
    let tb = NoiseBatch::new(sub_seed(batch.seed, "ttheta"), opts.ttheta_batch, batch.dim);
    let tt = find_t_theta(theta_star, set, penalty, &tb, &opts.width)?;
    let radius = rho * tt.t_theta;
    let results: Vec<Result<Vec<f64>>> = (0..batch.count)
        .into_par_iter()
        .map(|i| {
            inner_sup(&batch.member(i), theta_star, radius, set, penalty, &opts.width).map(|s| s.argmax)
        })
        .collect();
    let mut samples = Vec::with_capacity(batch.count);
    let mut failures = 0;
    for r in results {
        match r {
            Ok(a) => samples.push(a),
            Err(Error::SolverNonConvergence { .. } | Error::ProjectionNonConvergence { .. }) => {
                failures += 1
            }
            Err(e) => return Err(e),
        }
    }
    if samples.is_empty() || failures as f64 > MAX_FAILURE_FRACTION * batch.count as f64 {
        return Err(Error::TooManyFailures {
            failures,
            total: batch.count,
        });
    }
    Ok(PushforwardSample {
        samples,
        radius,
        t_theta_star: tt,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaStarChoice {
    pub index: usize,
    /// `m̂_θ(ρ·t̂_θ)` per candidate.
    pub values: Vec<f64>,
    pub t_thetas: Vec<f64>,
}

/// Picks the candidate maximizing `m̂_θ(ρ·t̂_θ)`; all candidates share one batch.
pub fn choose_theta_star(
    candidates: &[Vec<f64>],
    rho: f64,
    set: &ConstraintSet,
    f: &PenaltySpec,
    batch: &NoiseBatch,
    opts: &RiskOptions,
) -> Result<ThetaStarChoice> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidates", "need at least one candidate"));
    }
    let mut values = Vec::with_capacity(candidates.len());
    let mut t_thetas = Vec::with_capacity(candidates.len());
    for c in candidates {
        let tt = find_t_theta(c, set, f, batch, &opts.width)?;
        values.push(estimate_m(c, rho * tt.t_theta, set, f, batch, &opts.width)?.mean);
        t_thetas.push(tt.t_theta);
    }
    let index = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("candidates are nonempty");
    Ok(ThetaStarChoice {
        index,
        values,
        t_thetas,
    })
}

/// Membership in `Θ ∩ B(center, radius)`.
pub fn in_localized_set(set: &ConstraintSet, center: &[f64], radius: f64, x: &[f64], tol: f64) -> Result<bool> {
    Ok(set.contains(x, tol)? && dist(x, center) <= radius + tol)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Bayes risk `E Var(θ | X)` of a one-dimensional discrete prior, by the
/// trapezoid rule over `x ∈ [min θ − 10, max θ + 10]`.
pub fn bayes_oracle_1d(prior: &PriorSpec, quad_points: usize) -> Result<f64> {
    if quad_points < 100 {
        return Err(Error::invalid("quad_points", "need at least 100"));
    }
    let atoms = match prior {
        PriorSpec::Pushforward { .. } => {
            return Err(Error::invalid("prior", "oracle needs an explicit discrete prior"))
        }
        _ => prior.atoms(&RiskOptions::default())?,
    };
    if atoms.points[0].len() != 1 {
        return Err(Error::invalid("prior", "oracle is one-dimensional"));
    }
    let th: Vec<f64> = atoms.points.iter().map(|p| p[0]).collect();
    let logw: Vec<f64> = atoms.weights.iter().map(|w| w.ln()).collect();
    let lo = th.iter().copied().fold(f64::INFINITY, f64::min) - 10.0;
    let hi = th.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 10.0;
    let h = (hi - lo) / (quad_points - 1) as f64;
    let ln_norm = -0.5 * (2.0 * std::f64::consts::PI).ln();

    let integrand = |x: f64| {
        let logs: Vec<f64> = th.iter().zip(&logw).map(|(t, lw)| lw - 0.5 * (x - t).powi(2)).collect();
        let lse = log_sum_exp(&logs);
        let post: Vec<f64> = logs.iter().map(|l| (l - lse).exp()).collect();
        let mean: f64 = post.iter().zip(&th).map(|(p, t)| p * t).sum();
        let var: f64 = post.iter().zip(&th).map(|(p, t)| p * (t - mean).powi(2)).sum();
        (lse + ln_norm).exp() * var
    };
    let mut total = 0.5 * (integrand(lo) + integrand(hi));
    for i in 1..quad_points - 1 {
        total += integrand(lo + h * i as f64);
    }
    Ok(total * h)
}

/// Prior-averaged risk `∫ E_θ‖δ(X) − θ‖² w(dθ)`: draw θ from the prior, then
/// `X = θ + Z`. Replication `i` uses the same noise stream as
/// [`crate::risk::simulate_risk`] with the same seed.
pub fn avg_risk_under_prior(
    est: &EstimatorSpec,
    prior: &PriorSpec,
    reps: usize,
    seed: u64,
    opts: &RiskOptions,
) -> Result<(f64, f64)> {
    if reps < 2 {
        return Err(Error::invalid("reps", "need at least 2 replications"));
    }
    let atoms = prior.atoms(opts)?;
    let n = atoms.points[0].len();
    est.validate(n)?;
    if let EstimatorSpec::Zero = est {
        let v = atoms.points.iter().zip(&atoms.weights).map(|(p, w)| w * dot(p, p)).sum();
        return Ok((v, 0.0));
    }
    let mut cumulative = Vec::with_capacity(atoms.weights.len());
    let mut acc = 0.0;
    for w in &atoms.weights {
        acc += w;
        cumulative.push(acc);
    }
    let prior_seed = sub_seed(seed, "prior");
    let noise_seed = sub_seed(seed, "loss");
    let results: Vec<Result<Option<f64>>> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let k = if atoms.points.len() == 1 {
                0
            } else {
                let u: f64 = stream_rng(prior_seed, i as u64).random::<f64>() * acc;
                cumulative.partition_point(|c| *c <= u).min(atoms.points.len() - 1)
            };
            let theta = &atoms.points[k];
            let x: Vec<f64> = gaussian_vector(noise_seed, i as u64, n)
                .iter()
                .zip(theta)
                .map(|(z, t)| z + t)
                .collect();
            match est.apply(&x, &opts.width.solve) {
                Ok(e) => Ok(Some(dist(&e, theta).powi(2))),
                Err(Error::SolverNonConvergence { .. } | Error::ProjectionNonConvergence { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let losses: Vec<Option<f64>> = results.into_iter().collect::<Result<_>>()?;
    let failures = losses.iter().filter(|l| l.is_none()).count();
    if failures as f64 > MAX_FAILURE_FRACTION * reps as f64 {
        return Err(Error::TooManyFailures { failures, total: reps });
    }
    let values: Vec<f64> = losses.into_iter().flatten().collect();
    Ok(mean_stderr(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;
    use crate::quad::normal_pdf;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lecam_values() {
        assert_eq!(lecam_two_point(&[0.0], &[1.0]).unwrap().value, 0.125);
        assert_eq!(lecam_two_point(&[0.3, 1.0], &[0.3, 1.0]).unwrap().value, 0.0);
        assert_eq!(lecam_two_point(&[0.0], &[2.0]).unwrap().value, 0.0);
        assert!(lecam_two_point(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn chi_sq_values() {
        assert_abs_diff_eq!(chi_sq_gaussian(&[0.0], &[1.0]).unwrap().value, std::f64::consts::E - 1.0, epsilon = 1e-15);
        assert_eq!(chi_sq_gaussian(&[2.0], &[2.0]).unwrap().value, 0.0);
        let c = chi_sq_gaussian(&[0.0], &[2f64.ln().sqrt()]).unwrap();
        assert_abs_diff_eq!(c.value, 1.0, epsilon = 1e-14);
        let c = chi_sq_gaussian(&[0.0], &[30.0]).unwrap();
        assert!(c.saturated);
        assert!(!chi_sq_gaussian(&[0.0], &[26.0]).unwrap().saturated);
    }

    #[test]
    fn small_ball_point_mass_and_large_info() {
        let o = RiskOptions::default();
        let point = PriorSpec::Grid {
            points: vec![vec![0.4]],
            weights: vec![1.0],
        };
        assert_eq!(small_ball_lower_bound(&point, 3.0, None, &o).unwrap().value, 0.0);
        let grid = PriorSpec::uniform_grid_1d(-1.0, 1.0, 101);
        assert_eq!(small_ball_lower_bound(&grid, 1e9, None, &o).unwrap().value, 0.0);
        assert!(small_ball_lower_bound(&grid, 0.0, Some(&[]), &o).is_err());
    }

    /// Direct enumeration: for each candidate count the atoms inside every
    /// candidate squared radius.
    #[test]
    fn small_ball_uniform_grid_enumeration() {
        let o = RiskOptions::default();
        let grid = PriorSpec::uniform_grid_1d(-1.0, 1.0, 101);
        let pts: Vec<f64> = (0..101).map(|i| -1.0 + 0.02 * i as f64).collect();
        let mut t_star = f64::INFINITY;
        for &a in &pts {
            let mut radii: Vec<f64> = pts.iter().map(|p| (p - a) * (p - a)).collect();
            radii.sort_by(f64::total_cmp);
            for &r in &radii {
                let inside = pts.iter().filter(|p| (*p - a) * (*p - a) <= r).count();
                if inside >= 26 {
                    t_star = t_star.min(r);
                    break;
                }
            }
        }
        let b = small_ball_lower_bound(&grid, 0.0, None, &o).unwrap();
        assert_abs_diff_eq!(b.value, 0.5 * t_star, epsilon = 1e-12);
        assert_abs_diff_eq!(b.value, 0.5 * 0.26 * 0.26, epsilon = 1e-12);
    }

    #[test]
    fn small_ball_nonincreasing_in_info() {
        let o = RiskOptions::default();
        let grid = PriorSpec::uniform_grid_1d(-3.0, 3.0, 200);
        let mut last = f64::INFINITY;
        for i in 0..30 {
            let v = small_ball_lower_bound(&grid, 0.2 * i as f64, None, &o).unwrap().value;
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn oracle_point_mass_and_gaussian() {
        let point = PriorSpec::Grid {
            points: vec![vec![1.5]],
            weights: vec![1.0],
        };
        assert_abs_diff_eq!(bayes_oracle_1d(&point, 400).unwrap(), 0.0, epsilon = 1e-15);
        // Discretized N(0, 1): conjugate value τ²/(1 + τ²) = ½.
        let pts: Vec<f64> = (0..1201).map(|i| -6.0 + 0.01 * i as f64).collect();
        let w: Vec<f64> = pts.iter().map(|x| normal_pdf(*x)).collect();
        let s: f64 = w.iter().sum();
        let prior = PriorSpec::Grid {
            points: pts.iter().map(|x| vec![*x]).collect(),
            weights: w.iter().map(|x| x / s).collect(),
        };
        assert_abs_diff_eq!(bayes_oracle_1d(&prior, 2000).unwrap(), 0.5, epsilon = 1e-4);
        assert!(bayes_oracle_1d(&point, 10).is_err());
    }

    #[test]
    fn oracle_two_point_between_bounds() {
        let prior = PriorSpec::TwoPoint {
            p1: vec![-0.5],
            p2: vec![0.5],
            w1: 0.5,
            w2: 0.5,
        };
        let v = bayes_oracle_1d(&prior, 1000).unwrap();
        assert!(v > 0.125 && v < 0.25, "{v}");
        // Closed form for ±μ: μ² E[1 − tanh²(μX)] under the mixture.
        let fine = {
            let (lo, hi, n) = (-12.0, 12.0, 200_000);
            let h = (hi - lo) / n as f64;
            (0..=n)
                .map(|i| {
                    let x = lo + h * i as f64;
                    let p = 0.5 * (normal_pdf(x - 0.5) + normal_pdf(x + 0.5));
                    let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
                    wt * p * 0.25 * (1.0 - (0.5 * x).tanh().powi(2))
                })
                .sum::<f64>()
                * h
        };
        assert_abs_diff_eq!(v, fine, epsilon = 1e-9);
    }

    #[test]
    fn avg_risk_paths() {
        let o = RiskOptions::default();
        let prior = PriorSpec::Grid {
            points: vec![vec![1.0, 0.0], vec![0.0, 2.0]],
            weights: vec![0.25, 0.75],
        };
        assert_eq!(avg_risk_under_prior(&EstimatorSpec::Zero, &prior, 10, 1, &o).unwrap(), (3.25, 0.0));

        let est = EstimatorSpec::PenalizedLse {
            set: ConstraintSet::cube(2, 1.0),
            penalty: PenaltySpec::L1 { lambda: 0.3 },
        };
        let point = PriorSpec::Grid {
            points: vec![vec![0.5, -0.5]],
            weights: vec![1.0],
        };
        let (m, s) = avg_risk_under_prior(&est, &point, 500, 7, &o).unwrap();
        let r = crate::risk::simulate_risk(&est, &[0.5, -0.5], 500, 7, &o).unwrap();
        assert_eq!((m, s), (r.mean_sq_loss, r.stderr));
    }

    #[test]
    fn penalized_risk_exceeds_bayes_risk() {
        let o = RiskOptions::default();
        let prior = PriorSpec::uniform_grid_1d(-1.0, 1.0, 101);
        let est = EstimatorSpec::PenalizedLse {
            set: ConstraintSet::Box { lo: vec![-1.0], hi: vec![1.0] },
            penalty: PenaltySpec::Zero,
        };
        let (m, s) = avg_risk_under_prior(&est, &prior, 20_000, 3, &o).unwrap();
        assert!(m >= bayes_oracle_1d(&prior, 2000).unwrap() - 3.0 * s);
    }

    #[test]
    fn pushforward_singleton_and_sphere() {
        let o = RiskOptions::default();
        let single = PriorSpec::Pushforward {
            theta_star: vec![0.5, 0.5],
            rho: 0.1,
            set: ConstraintSet::Singleton { point: vec![0.5, 0.5] },
            penalty: PenaltySpec::Zero,
            batch: NoiseBatch::new(1, 50, 2),
        };
        let s = sample_pushforward_prior(&single, &o).unwrap();
        assert!(s.samples.iter().all(|p| p == &vec![0.5, 0.5]));

        let batch = NoiseBatch::new(2, 200, 3);
        let theta_star = vec![1.0, -1.0, 0.0];
        let full = PriorSpec::Pushforward {
            theta_star: theta_star.clone(),
            rho: 0.0295,
            set: ConstraintSet::FullSpace { dim: 3 },
            penalty: PenaltySpec::Zero,
            batch,
        };
        let s = sample_pushforward_prior(&full, &o).unwrap();
        let r = s.radius;
        assert_abs_diff_eq!(r, 0.0295 * s.t_theta_star.t_theta, epsilon = 1e-15);
        for (i, p) in s.samples.iter().enumerate() {
            let z = batch.member(i);
            let nz = norm(&z);
            for k in 0..3 {
                assert_abs_diff_eq!(p[k], theta_star[k] + r * z[k] / nz, epsilon = 1e-9);
            }
            let set = ConstraintSet::FullSpace { dim: 3 };
            assert!(in_localized_set(&set, &theta_star, r, p, 1e-9).unwrap());
        }
    }

    #[test]
    fn theta_star_maximizes_localized_width() {
        let set = ConstraintSet::cube(3, 1.0);
        let cands = vec![vec![0.0; 3], vec![1.0, 1.0, 1.0], vec![0.0, 1.0, -1.0]];
        let batch = NoiseBatch::new(4, 300, 3);
        let o = RiskOptions {
            ttheta_batch: 300,
            ..RiskOptions::default()
        };
        let c = choose_theta_star(&cands, 0.0295, &set, &PenaltySpec::Zero, &batch, &o).unwrap();
        let best = c.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(c.values[c.index], best);
        assert!(c.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn prior_validation() {
        let bad = PriorSpec::TwoPoint {
            p1: vec![0.0],
            p2: vec![1.0],
            w1: 0.6,
            w2: 0.6,
        };
        assert!(bad.validate().is_err());
        let p = PriorSpec::Pushforward {
            theta_star: vec![0.0],
            rho: 0.3,
            set: ConstraintSet::FullSpace { dim: 1 },
            penalty: PenaltySpec::Zero,
            batch: NoiseBatch::new(1, 5, 1),
        };
        assert!(p.validate().is_err());
        let p: PriorSpec =
            serde_json::from_str(r#"{"kind":"two_point","p1":[0],"p2":[1],"w1":0.5,"w2":0.5}"#).unwrap();
        assert_eq!(p.validate().unwrap(), 1);
    }
}
