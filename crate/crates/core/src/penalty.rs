//! Real-valued convex penalties: value, a deterministic subgradient, and a
//! proximal map where one has a closed form.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltySpec {
    Zero,
    /// `λ‖α‖₁`
    L1 { lambda: f64 },
    /// `λ (maxᵢ αᵢ − minᵢ αᵢ)`; on the monotone cone this is `λ(αₙ − α₁)`.
    Range { lambda: f64 },
    /// `(λ/2)‖α‖²`
    Quadratic { lambda: f64 },
    /// `⟨v, α⟩`
    LinearForm { v: Vec<f64> },
}

impl PenaltySpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            PenaltySpec::Zero => Ok(()),
            PenaltySpec::L1 { lambda }
            | PenaltySpec::Range { lambda }
            | PenaltySpec::Quadratic { lambda } => {
                if *lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("penalty", "lambda must be finite and nonnegative"))
                }
            }
            PenaltySpec::LinearForm { v } => {
                check_dim(dim, v.len())?;
                if v.iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::invalid("penalty", "linear form must be finite"))
                }
            }
        }
    }

    /// `c · f` for `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> PenaltySpec {
        match self {
            PenaltySpec::Zero => PenaltySpec::Zero,
            PenaltySpec::L1 { lambda } => PenaltySpec::L1 { lambda: c * lambda },
            PenaltySpec::Range { lambda } => PenaltySpec::Range { lambda: c * lambda },
            PenaltySpec::Quadratic { lambda } => PenaltySpec::Quadratic { lambda: c * lambda },
            PenaltySpec::LinearForm { v } => PenaltySpec::LinearForm {
                v: v.iter().map(|x| c * x).collect(),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PenaltySpec::Zero => true,
            PenaltySpec::L1 { lambda }
            | PenaltySpec::Range { lambda }
            | PenaltySpec::Quadratic { lambda } => *lambda == 0.0,
            PenaltySpec::LinearForm { v } => v.iter().all(|x| *x == 0.0),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if let PenaltySpec::LinearForm { v } = self {
            check_dim(v.len(), x.len())?;
        }
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            PenaltySpec::Zero => 0.0,
            PenaltySpec::L1 { lambda } => lambda * x.iter().map(|a| a.abs()).sum::<f64>(),
            PenaltySpec::Range { lambda } => {
                let (lo, hi) = min_max(x);
                lambda * (hi - lo)
            }
            PenaltySpec::Quadratic { lambda } => 0.5 * lambda * dot(x, x),
            PenaltySpec::LinearForm { v } => dot(v, x),
        }
    }

    /// A subgradient at `x`. Ties break to the minimal-norm canonical element:
    /// zero for `|·|` at zero, first-index argmax/argmin for the range.
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        Ok(match self {
            PenaltySpec::Zero => vec![0.0; n],
            PenaltySpec::L1 { lambda } => x
                .iter()
                .map(|a| if *a == 0.0 { 0.0 } else { lambda * a.signum() })
                .collect(),
            PenaltySpec::Range { lambda } => {
                let mut g = vec![0.0; n];
                if n > 0 {
                    let (imin, imax) = arg_min_max(x);
                    if imin != imax {
                        g[imax] += lambda;
                        g[imin] -= lambda;
                    }
                }
                g
            }
            PenaltySpec::Quadratic { lambda } => x.iter().map(|a| lambda * a).collect(),
            PenaltySpec::LinearForm { v } => {
                check_dim(v.len(), n)?;
                v.clone()
            }
        })
    }

    /// `argmin_u ½‖u − x‖² + step·f(u)`, or `None` when no closed form is wired up (range).
    pub fn prox(&self, x: &[f64], step: f64) -> Result<Option<Vec<f64>>> {
        if !(step > 0.0) {
            return Err(Error::invalid("step", "must be positive"));
        }
        Ok(match self {
            PenaltySpec::Zero => Some(x.to_vec()),
            PenaltySpec::L1 { lambda } => Some(soft_threshold(x, step * lambda)),
            PenaltySpec::Quadratic { lambda } => {
                let s = 1.0 / (1.0 + step * lambda);
                Some(x.iter().map(|a| a * s).collect())
            }
            PenaltySpec::LinearForm { v } => {
                check_dim(v.len(), x.len())?;
                Some(x.iter().zip(v).map(|(a, b)| a - step * b).collect())
            }
            PenaltySpec::Range { .. } => None,
        })
    }

    pub fn has_prox(&self) -> bool {
        !matches!(self, PenaltySpec::Range { .. })
    }
}

pub fn soft_threshold(x: &[f64], t: f64) -> Vec<f64> {
    x.iter()
        .map(|a| a.signum() * (a.abs() - t).max(0.0))
        .collect()
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
            (lo.min(*a), hi.max(*a))
        })
}

fn arg_min_max(x: &[f64]) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, a) in x.iter().enumerate() {
        if *a < x[imin] {
            imin = i;
        }
        if *a > x[imax] {
            imax = i;
        }
    }
    (imin, imax)
}
