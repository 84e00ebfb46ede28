//! Closed convex constraint sets and their Euclidean projections.
//!
//! Every set in the catalog exposes an exact projection except two:
//! weighted ellipsoids (scalar multiplier found by bisection) and
//! intersections (Dykstra's alternating projections).

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimator::pava;
use crate::linalg::{dist, norm};

pub const DYKSTRA_MAX_ITER: usize = 100_000;
const ELLIPSOID_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSet {
    FullSpace {
        dim: usize,
    },
    Singleton {
        point: Vec<f64>,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    L1Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{α : α₁ ≤ α₂ ≤ … ≤ αₙ}`
    MonotoneCone {
        dim: usize,
    },
    /// `{α : Σ wᵢ αᵢ² ≤ radius²}`
    WeightedEllipsoid {
        weights: Vec<f64>,
        radius: f64,
    },
    Intersection {
        sets: Vec<ConstraintSet>,
        /// A point known to lie in every member; required to certify nonemptiness.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        witness: Option<Vec<f64>>,
    },
}

impl ConstraintSet {
    /// `[-r, r]^n`
    pub fn cube(dim: usize, r: f64) -> Self {
        ConstraintSet::Box {
            lo: vec![-r; dim],
            hi: vec![r; dim],
        }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        ConstraintSet::Ball { center, radius }
    }

    pub fn l1_ball(center: Vec<f64>, radius: f64) -> Self {
        ConstraintSet::L1Ball { center, radius }
    }

    /// The ellipsoid `Σ_{i<n} αᵢ² + n^{-1/2} αₙ² ≤ 1` on which the LSE fails to be minimax.
    pub fn zhang_ellipsoid(dim: usize) -> Self {
        let mut weights = vec![1.0; dim];
        if let Some(last) = weights.last_mut() {
            *last = (dim as f64).powf(-0.5);
        }
        ConstraintSet::WeightedEllipsoid {
            weights,
            radius: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::FullSpace { dim } | ConstraintSet::MonotoneCone { dim } => *dim,
            ConstraintSet::Singleton { point } => point.len(),
            ConstraintSet::Box { lo, .. } => lo.len(),
            ConstraintSet::Ball { center, .. } | ConstraintSet::L1Ball { center, .. } => {
                center.len()
            }
            ConstraintSet::WeightedEllipsoid { weights, .. } => weights.len(),
            ConstraintSet::Intersection { sets, .. } => sets.first().map_or(0, |s| s.dim()),
        }
    }

    /// Checks the structural invariants of the descriptor and returns its dimension.
    pub fn validate(&self) -> Result<usize> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            ConstraintSet::FullSpace { dim } | ConstraintSet::MonotoneCone { dim } => {
                if *dim == 0 {
                    return Err(Error::invalid("set", "dimension must be positive"));
                }
            }
            ConstraintSet::Singleton { point } => {
                if point.is_empty() || !finite(point) {
                    return Err(Error::invalid("set", "singleton point must be finite and nonempty"));
                }
            }
            ConstraintSet::Box { lo, hi } => {
                check_dim(lo.len(), hi.len())?;
                if lo.is_empty() {
                    return Err(Error::invalid("set", "box must have positive dimension"));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || l.is_nan() || h.is_nan()) {
                    return Err(Error::invalid("set", "box requires lo <= hi coordinatewise"));
                }
            }
            ConstraintSet::Ball { center, radius } | ConstraintSet::L1Ball { center, radius } => {
                if center.is_empty() || !finite(center) {
                    return Err(Error::invalid("set", "ball center must be finite and nonempty"));
                }
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::invalid("set", "radius must be finite and nonnegative"));
                }
            }
            ConstraintSet::WeightedEllipsoid { weights, radius } => {
                if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                    return Err(Error::invalid("set", "ellipsoid weights must be strictly positive"));
                }
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::invalid("set", "radius must be finite and nonnegative"));
                }
            }
            ConstraintSet::Intersection { sets, witness } => {
                let first = sets
                    .first()
                    .ok_or_else(|| Error::invalid("set", "intersection needs at least one member"))?;
                let n = first.validate()?;
                for s in &sets[1..] {
                    check_dim(n, s.validate()?)?;
                }
                let w = witness.as_ref().ok_or_else(|| {
                    Error::invalid("set", "intersection requires a feasible witness point")
                })?;
                check_dim(n, w.len())?;
                for s in sets {
                    if !s.contains(w, 1e-9)? {
                        return Err(Error::invalid("set", "witness is not in every member"));
                    }
                }
            }
        }
        Ok(self.dim())
    }

    /// Euclidean projection of `x` onto the set. Only intersections consult `tol`.
    pub fn project(&self, x: &[f64], tol: f64) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            ConstraintSet::FullSpace { .. } => x.to_vec(),
            ConstraintSet::Singleton { point } => point.clone(),
            ConstraintSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect(),
            ConstraintSet::Ball { center, radius } => project_ball(center, *radius, x),
            ConstraintSet::L1Ball { center, radius } => project_l1_ball(center, *radius, x),
            ConstraintSet::MonotoneCone { .. } => pava(x),
            ConstraintSet::WeightedEllipsoid { weights, radius } => {
                project_ellipsoid(weights, *radius, x)
            }
            ConstraintSet::Intersection { sets, .. } => {
                return dykstra_project(sets, x, tol, DYKSTRA_MAX_ITER)
            }
        })
    }

    /// True iff the distance from `x` to the set is at most `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        let exact = match self {
            ConstraintSet::FullSpace { .. } => Some(true),
            ConstraintSet::MonotoneCone { .. } if x.windows(2).all(|w| w[0] <= w[1]) => Some(true),
            ConstraintSet::Intersection { sets, .. } => {
                // Each member must be within tol; cheaper and sharper than a Dykstra run.
                let mut all = true;
                for s in sets {
                    all &= s.contains(x, tol)?;
                }
                if !all {
                    return Ok(false);
                }
                None
            }
            _ => None,
        };
        if let Some(v) = exact {
            return Ok(v);
        }
        let p = self.project(x, (tol * 1e-2).max(1e-12))?;
        Ok(dist(&p, x) <= tol)
    }

    /// Largest distance between two points of the set; `None` when unbounded.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            ConstraintSet::FullSpace { .. } | ConstraintSet::MonotoneCone { .. } => None,
            ConstraintSet::Singleton { .. } => Some(0.0),
            ConstraintSet::Box { lo, hi } => Some(dist(lo, hi)),
            ConstraintSet::Ball { radius, .. } | ConstraintSet::L1Ball { radius, .. } => {
                Some(2.0 * radius)
            }
            ConstraintSet::WeightedEllipsoid { weights, radius } => {
                let wmin = weights.iter().cloned().fold(f64::INFINITY, f64::min);
                Some(2.0 * radius / wmin.sqrt())
            }
            ConstraintSet::Intersection { sets, .. } => sets
                .iter()
                .filter_map(|s| s.diameter())
                .min_by(|a, b| a.total_cmp(b)),
        }
    }
}

fn project_ball(center: &[f64], radius: f64, x: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    let r = norm(&d);
    if r <= radius {
        return x.to_vec();
    }
    let s = radius / r;
    center.iter().zip(&d).map(|(c, v)| c + s * v).collect()
}

/// Sort-and-threshold projection onto `{α : ‖α − c‖₁ ≤ r}`.
fn project_l1_ball(center: &[f64], radius: f64, x: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    let l1: f64 = v.iter().map(|a| a.abs()).sum();
    if l1 <= radius {
        return x.to_vec();
    }
    if radius == 0.0 {
        return center.to_vec();
    }
    let mut u: Vec<f64> = v.iter().map(|a| a.abs()).collect();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumsum += uj;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if uj - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .zip(center)
        .map(|(a, c)| c + a.signum() * (a.abs() - tau).max(0.0))
        .collect()
}

/// Projection onto `{α : Σ wᵢ αᵢ² ≤ r²}`: `pᵢ = xᵢ / (1 + λ wᵢ)` with the
/// multiplier `λ ≥ 0` found by bisection on the decreasing constraint value.
fn project_ellipsoid(weights: &[f64], radius: f64, x: &[f64]) -> Vec<f64> {
    let level = |lambda: f64| -> f64 {
        weights
            .iter()
            .zip(x)
            .map(|(w, v)| {
                let p = v / (1.0 + lambda * w);
                w * p * p
            })
            .sum()
    };
    let r2 = radius * radius;
    if level(0.0) <= r2 {
        return x.to_vec();
    }
    if radius == 0.0 {
        return vec![0.0; x.len()];
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while level(hi) > r2 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > ELLIPSOID_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if level(mid) > r2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `hi` is on the feasible side.
    weights
        .iter()
        .zip(x)
        .map(|(w, v)| v / (1.0 + hi * w))
        .collect()
}

/// Dykstra's alternating projections onto the intersection of `sets`.
///
/// Stops once a full sweep moves the iterate by less than `tol` and the
/// iterate is within `10·tol` of every member. An empty intersection never
/// satisfies the second condition and surfaces as non-convergence.
pub fn dykstra_project(
    sets: &[ConstraintSet],
    x: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    let first = sets
        .first()
        .ok_or_else(|| Error::invalid("set", "dykstra needs at least one set"))?;
    let n = first.dim();
    check_dim(n, x.len())?;
    for s in sets {
        check_dim(n, s.dim())?;
    }
    let inner_tol = tol * 1e-2;
    if sets.len() == 1 {
        return first.project(x, inner_tol);
    }

    let mut current = x.to_vec();
    let mut increments = vec![vec![0.0; n]; sets.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let start = current.clone();
        for (set, inc) in sets.iter().zip(increments.iter_mut()) {
            let shifted: Vec<f64> = current.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
            let next = set.project(&shifted, inner_tol)?;
            for ((i, s), p) in inc.iter_mut().zip(&shifted).zip(&next) {
                *i = s - p;
            }
            current = next;
        }
        let moved = dist(&start, &current);
        if moved < tol {
            let mut infeasibility: f64 = 0.0;
            for set in sets {
                let p = set.project(&current, inner_tol)?;
                infeasibility = infeasibility.max(dist(&p, &current));
            }
            residual = moved.max(infeasibility);
            if infeasibility <= 10.0 * tol {
                return Ok(current);
            }
        } else {
            residual = moved;
        }
    }
    Err(Error::ProjectionNonConvergence {
        last: current,
        residual,
        iterations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_vec(a: &[f64], b: &[f64], eps: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x, y, epsilon = eps);
        }
    }

    #[test]
    fn box_clips() {
        let p = ConstraintSet::cube(2, 1.0).project(&[2.0, 0.5], 1e-9).unwrap();
        assert_vec(&p, &[1.0, 0.5], 0.0);
    }

    #[test]
    fn ball_scales_radially() {
        let p = ConstraintSet::ball(vec![0.0, 0.0], 1.0).project(&[3.0, 4.0], 1e-9).unwrap();
        assert_vec(&p, &[0.6, 0.8], 1e-15);
    }

    #[test]
    fn monotone_cone_pools() {
        let p = ConstraintSet::MonotoneCone { dim: 2 }.project(&[2.0, 1.0], 1e-9).unwrap();
        assert_vec(&p, &[1.5, 1.5], 1e-15);
    }

    #[test]
    fn l1_ball_known_values() {
        let set = ConstraintSet::l1_ball(vec![0.0, 0.0, 0.0], 1.0);
        let p = set.project(&[3.0, 0.0, 0.0], 1e-9).unwrap();
        assert_vec(&p, &[1.0, 0.0, 0.0], 1e-15);
        let p = set.project(&[1.0, -1.0, 0.2], 1e-9).unwrap();
        assert_vec(&p, &[0.5, -0.5, 0.0], 1e-15);
        assert_vec(&set.project(&[0.1, 0.2, -0.3], 1e-9).unwrap(), &[0.1, 0.2, -0.3], 0.0);
    }

    #[test]
    fn ellipsoid_degenerates_to_ball() {
        let e = ConstraintSet::WeightedEllipsoid {
            weights: vec![1.0, 1.0],
            radius: 1.0,
        };
        let p = e.project(&[3.0, 4.0], 1e-9).unwrap();
        assert_vec(&p, &[0.6, 0.8], 1e-10);
        let z = ConstraintSet::WeightedEllipsoid {
            weights: vec![2.0, 3.0],
            radius: 0.0,
        };
        assert_vec(&z.project(&[3.0, 4.0], 1e-9).unwrap(), &[0.0, 0.0], 0.0);
    }

    #[test]
    fn zhang_ellipsoid_shape() {
        let e = ConstraintSet::zhang_ellipsoid(4);
        e.validate().unwrap();
        // The long axis sits on the last coordinate: radius n^{1/4}.
        assert!(e.contains(&[0.0, 0.0, 0.0, 4f64.powf(0.25)], 1e-9).unwrap());
        assert!(!e.contains(&[0.0, 0.0, 0.0, 1.5], 1e-6).unwrap());
        assert_abs_diff_eq!(e.diameter().unwrap(), 2.0 * 4f64.powf(0.25), epsilon = 1e-12);
    }

    #[test]
    fn contains_examples() {
        assert!(ConstraintSet::Box { lo: vec![0.0], hi: vec![1.0] }
            .contains(&[0.5], 0.0)
            .unwrap());
        assert!(!ConstraintSet::ball(vec![0.0, 0.0], 1.0)
            .contains(&[1.1, 0.0], 0.05)
            .unwrap());
        assert!(ConstraintSet::MonotoneCone { dim: 3 }
            .contains(&[1.0, 1.0, 2.0], 0.0)
            .unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = ConstraintSet::cube(2, 1.0).project(&[1.0], 1e-9).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, got: 1 }));
        assert!(ConstraintSet::cube(2, 1.0).contains(&[1.0, 2.0, 3.0], 0.0).is_err());
    }

    #[test]
    fn validation_rejects_bad_descriptors() {
        assert!(ConstraintSet::Box { lo: vec![1.0], hi: vec![0.0] }.validate().is_err());
        assert!(ConstraintSet::ball(vec![0.0], -1.0).validate().is_err());
        assert!(ConstraintSet::WeightedEllipsoid { weights: vec![1.0, 0.0], radius: 1.0 }
            .validate()
            .is_err());
        let no_witness = ConstraintSet::Intersection {
            sets: vec![ConstraintSet::cube(1, 1.0)],
            witness: None,
        };
        assert!(no_witness.validate().is_err());
        let bad_witness = ConstraintSet::Intersection {
            sets: vec![ConstraintSet::cube(1, 1.0), ConstraintSet::cube(1, 0.5)],
            witness: Some(vec![0.8]),
        };
        assert!(bad_witness.validate().is_err());
    }

    #[test]
    fn dykstra_duplicate_boxes() {
        let b = ConstraintSet::cube(2, 1.0);
        let p = dykstra_project(&[b.clone(), b], &[2.0, 2.0], 1e-10, 1000).unwrap();
        assert_vec(&p, &[1.0, 1.0], 1e-12);
    }

    #[test]
    fn dykstra_fixes_feasible_points() {
        let sets = [ConstraintSet::cube(2, 1.0), ConstraintSet::ball(vec![2.0, 0.0], 1.5)];
        let x = [0.8, 0.1];
        assert_vec(&dykstra_project(&sets, &x, 1e-10, 1000).unwrap(), &x, 1e-12);
    }

    /// Grid oracle: nearest feasible grid point of the box/ball lens.
    fn lens_grid_oracle(x: [f64; 2]) -> (f64, [f64; 2]) {
        let h = 1e-3;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for i in 0..=2000 {
            for j in 0..=2000 {
                let c = [-1.0 + h * i as f64, -1.0 + h * j as f64];
                if (c[0] - 2.0).powi(2) + c[1].powi(2) <= 2.25 {
                    let d = dist(&c, &x);
                    if d < best.0 {
                        best = (d, c);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn dykstra_lens_matches_grid_oracle() {
        let sets = [ConstraintSet::cube(2, 1.0), ConstraintSet::ball(vec![2.0, 0.0], 1.5)];
        // (0, 2) makes both constraints active; (2, 2) lands on a box corner inside the ball.
        for x in [[2.0, 2.0], [0.0, 2.0]] {
            let (d, c) = lens_grid_oracle(x);
            let p = dykstra_project(&sets, &x, 1e-10, 100_000).unwrap();
            // Grid spacing bounds the oracle error.
            assert_vec(&p, &c, 2e-3);
            assert!(dist(&p, &x) <= d + 1e-9);
        }
    }

    #[test]
    fn dykstra_reports_empty_intersection() {
        let sets = [
            ConstraintSet::Box { lo: vec![0.0], hi: vec![1.0] },
            ConstraintSet::Box { lo: vec![2.0], hi: vec![3.0] },
        ];
        match dykstra_project(&sets, &[1.5], 1e-8, 500) {
            Err(Error::ProjectionNonConvergence { last, residual, .. }) => {
                assert_eq!(last.len(), 1);
                assert!(residual > 0.5);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn json_descriptor_round_trip() {
        let s: ConstraintSet = serde_json::from_str(r#"{"kind":"box","lo":[-1,-1],"hi":[1,1]}"#).unwrap();
        assert_eq!(s, ConstraintSet::cube(2, 1.0));
        let s: ConstraintSet =
            serde_json::from_str(r#"{"kind":"monotone_cone","dim":3}"#).unwrap();
        assert_eq!(s, ConstraintSet::MonotoneCone { dim: 3 });
        assert!(serde_json::from_str::<ConstraintSet>(r#"{"kind":"box","lo":[0]}"#).is_err());
    }
}
