//! Arithmetic behind the universal admissibility constant: the lower
//! certificate from the hard and easy cases, and the clipping construction in
//! one dimension that pushes the constant down to one half.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, normal_cdf, normal_sf, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardCaseConstants {
    pub rho: f64,
    pub beta: f64,
    pub eta: f64,
    pub b: f64,
}

impl HardCaseConstants {
    /// ρ = 0.0295, β = 0.42, η = 10⁻²⁰, b = 51.53.
    pub const STANDARD: HardCaseConstants = HardCaseConstants {
        rho: 0.0295,
        beta: 0.42,
        eta: 1e-20,
        b: 51.53,
    };

    pub fn validate(&self) -> Result<()> {
        let HardCaseConstants { rho, beta, eta, b } = *self;
        if !(rho > 0.0) || rho * rho + 4.0 * rho >= 1.0 {
            return Err(Error::invalid("rho", "need rho > 0 and rho^2 + 4 rho < 1"));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::invalid("beta", "need 0 < beta < 1"));
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::invalid("eta", "need eta >= 0"));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::invalid("b", "need b > 0"));
        }
        Ok(())
    }

    /// `1 − √(ρ² + 4ρ)`
    fn shrink(&self) -> f64 {
        1.0 - (self.rho * self.rho + 4.0 * self.rho).sqrt()
    }
}

/// `ρ²(1 − β)²(1 − √(ρ² + 4ρ))² / (2(2 + 8ρ² + 4√84·b^{−1/2} + 168/b))`
pub fn hard_case_constant(c: &HardCaseConstants) -> Result<f64> {
    c.validate()?;
    let HardCaseConstants { rho, beta, b, .. } = *c;
    let num = rho * rho * (1.0 - beta).powi(2) * c.shrink().powi(2);
    let den = 2.0 * (2.0 + 8.0 * rho * rho + 4.0 * 84f64.sqrt() / b.sqrt() + 168.0 / b);
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EasyCase {
    /// `1/(12(b² + 2√84·b^{3/2} + 84b) + 32)`
    pub two_point: f64,
    pub one_over_32: f64,
    pub min: f64,
}

pub fn easy_case_constant(b: f64) -> Result<EasyCase> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::invalid("b", "need b >= 0"));
    }
    let poly = b * b + 2.0 * 84f64.sqrt() * b.powf(1.5) + 84.0 * b;
    let two_point = 1.0 / (12.0 * poly + 32.0);
    let one_over_32 = 1.0 / 32.0;
    Ok(EasyCase {
        two_point,
        one_over_32,
        min: two_point.min(one_over_32),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sufficiency {
    /// `ρβ(1 − √(ρ² + 4ρ))² − η/b²`
    pub gamma: f64,
    /// `γ²/(18ρ²) − ρ²`
    pub inner: f64,
    /// `log 12 / inner`; infinite when `inner ≤ 0`.
    pub rhs: f64,
    pub b_squared: f64,
    pub holds: bool,
    pub diagnostic: Option<String>,
}

/// The hard-case packing condition `log 12 · (γ²/(18ρ²) − ρ²)⁻¹ < b²`.
pub fn sufficiency_check(c: &HardCaseConstants) -> Result<Sufficiency> {
    c.validate()?;
    let HardCaseConstants { rho, beta, eta, b } = *c;
    let gamma = rho * beta * c.shrink().powi(2) - eta / (b * b);
    let inner = gamma * gamma / (18.0 * rho * rho) - rho * rho;
    let b_squared = b * b;
    let (rhs, holds, diagnostic) = if gamma <= 0.0 {
        (f64::INFINITY, false, Some(format!("gamma = {gamma:e} is not positive")))
    } else if inner <= 0.0 {
        (f64::INFINITY, false, Some(format!("inner expression {inner:e} is not positive")))
    } else {
        let rhs = 12f64.ln() / inner;
        (rhs, rhs < b_squared, None)
    };
    Ok(Sufficiency {
        gamma,
        inner,
        rhs,
        b_squared,
        holds,
        diagnostic,
    })
}

fn check_clip_args(a: f64, theta: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::invalid("a", "must be positive"));
    }
    if !(theta.abs() <= a) {
        return Err(Error::invalid("theta", "must lie in [-a, a]"));
    }
    Ok(())
}

/// `E(clip_a(θ + Z) − θ)²`: quadrature of `z²φ(z)` over the unclipped range
/// plus the two boundary atoms.
pub fn clip_risk(a: f64, theta: f64, opts: QuadOptions) -> Result<f64> {
    check_clip_args(a, theta)?;
    let (lo, hi) = (-a - theta, a - theta);
    let interior = integrate(|z| z * z * crate::quad::normal_pdf(z), lo, hi, opts)?.value;
    Ok(interior + hi * hi * normal_sf(hi) + lo * lo * normal_cdf(lo))
}

/// `2(1 − Φ(2a))(θ² + a²)`, a lower bound on [`clip_risk`].
pub fn clip_risk_lower_bound(a: f64, theta: f64) -> f64 {
    2.0 * normal_sf(2.0 * a) * (theta * theta + a * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBound {
    /// `max_θ θ²/clip_risk(a, θ)` over the grid: the zero estimator against clipping.
    pub sup_ratio: f64,
    pub argsup: f64,
    /// `1/(4(1 − Φ(2a)))`
    pub bound: f64,
}

/// Quadrature options used by the clipping experiments.
pub fn clip_quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-8,
        ..QuadOptions::default()
    }
}

pub fn normalized_ratio_bound(a: f64, grid_points: usize) -> Result<RatioBound> {
    check_clip_args(a, 0.0)?;
    if grid_points < 2 {
        return Err(Error::invalid("grid_points", "need at least 2"));
    }
    let opts = clip_quad_options();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..grid_points {
        let theta = (-a + 2.0 * a * i as f64 / (grid_points - 1) as f64).clamp(-a, a);
        let r = theta * theta / clip_risk(a, theta, opts)?;
        if r > best.0 {
            best = (r, theta);
        }
    }
    Ok(RatioBound {
        sup_ratio: best.0,
        argsup: best.1,
        bound: 0.25 / normal_sf(2.0 * a),
    })
}

/// Equispaced grid size for [`normalized_ratio_bound`].
pub const RATIO_GRID: usize = 2001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub hard_constant: f64,
    pub easy_constant: f64,
    pub sufficiency_rhs: f64,
    pub b_squared: f64,
    pub holds: bool,
    /// `min(hard, easy, 1/32)`, valid only when `holds`.
    pub cstar_lower: f64,
    /// `1/(4(1 − Φ(2a)))` at the smallest clipping level demonstrated.
    pub cstar_upper_demo: f64,
    pub clip_levels: Vec<f64>,
    pub ratios: Vec<RatioBound>,
}

pub fn certificate(c: &HardCaseConstants, clip_levels: &[f64]) -> Result<Certificate> {
    let hard = hard_case_constant(c)?;
    let easy = easy_case_constant(c.b)?;
    let suff = sufficiency_check(c)?;
    let ratios = clip_levels
        .iter()
        .map(|a| normalized_ratio_bound(*a, RATIO_GRID))
        .collect::<Result<Vec<_>>>()?;
    let upper = clip_levels
        .iter()
        .zip(&ratios)
        .min_by(|x, y| x.0.total_cmp(y.0))
        .map_or(f64::NAN, |(_, r)| r.bound);
    Ok(Certificate {
        hard_constant: hard,
        easy_constant: easy.two_point,
        sufficiency_rhs: suff.rhs,
        b_squared: suff.b_squared,
        holds: suff.holds,
        cstar_lower: if suff.holds { hard.min(easy.min) } else { 0.0 },
        cstar_upper_demo: upper,
        clip_levels: clip_levels.to_vec(),
        ratios,
    })
}
