use proptest::prelude::*;
use seqlab_core::estimator::objective;
use seqlab_core::linalg::{dist, dot, sub};
use seqlab_core::{check_lipschitz, pava, solve_penalized_lse, ConstraintSet, Error, Method, PenaltySpec, SolveOptions};

const N: usize = 6;

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0..4.0f64, n)
}

fn sets() -> Vec<ConstraintSet> {
    vec![
        ConstraintSet::cube(N, 1.0),
        ConstraintSet::Box {
            lo: vec![-0.5, 0.0, -2.0, 1.0, -1.0, 0.0],
            hi: vec![0.5, 3.0, -1.0, 1.0, 1.0, 0.25],
        },
        ConstraintSet::ball(vec![0.5; N], 1.5),
        ConstraintSet::l1_ball(vec![0.0; N], 2.0),
        ConstraintSet::MonotoneCone { dim: N },
        ConstraintSet::zhang_ellipsoid(N),
        ConstraintSet::Intersection {
            sets: vec![ConstraintSet::cube(N, 1.0), ConstraintSet::ball(vec![0.0; N], 1.5)],
            witness: Some(vec![0.0; N]),
        },
    ]
}

fn isotonic_oracle(x: &[f64]) -> Vec<f64> {
    // Min-max formula: ŷᵢ = max_{j ≤ i} min_{k ≥ i} mean(x_j..=x_k).
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..=i)
                .map(|j| {
                    (i..n)
                        .map(|k| x[j..=k].iter().sum::<f64>() / (k - j + 1) as f64)
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn generic(set: &ConstraintSet) -> ConstraintSet {
    // Wrapping in an intersection hides the closed form from the dispatcher.
    ConstraintSet::Intersection {
        sets: vec![set.clone(), ConstraintSet::FullSpace { dim: set.dim() }],
        witness: Some(vec![0.0; set.dim()]),
    }
}

fn solve_best(set: &ConstraintSet, f: &PenaltySpec, x: &[f64], opts: &SolveOptions) -> Vec<f64> {
    match solve_penalized_lse(set, f, x, opts) {
        Ok(s) => s.point,
        Err(Error::SolverNonConvergence { best }) => best.point,
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_nonexpansive(x in vector(N), y in vector(N)) {
        for set in sets() {
            let px = set.project(&x, 1e-12).unwrap();
            let py = set.project(&y, 1e-12).unwrap();
            prop_assert!(set.contains(&px, 1e-6).unwrap(), "{set:?}");
            prop_assert!(dist(&set.project(&px, 1e-12).unwrap(), &px) <= 1e-6);
            prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-6);
            // ⟨x − Px, z − Px⟩ ≤ 0 for every z in the set.
            let vi = dot(&sub(&x, &px), &sub(&py, &px));
            prop_assert!(vi <= 1e-5 * (1.0 + dist(&x, &px)), "{set:?}: {vi}");
        }
    }

    #[test]
    fn pava_matches_min_max_formula(x in prop::collection::vec(-5.0..5.0f64, 1..9)) {
        let p = pava(&x);
        let oracle = isotonic_oracle(&x);
        for (a, b) in p.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn solutions_are_feasible(x in vector(N), lambda in 0.0..2.0f64) {
        let opts = SolveOptions::default();
        for set in sets() {
            for f in [
                PenaltySpec::Zero,
                PenaltySpec::L1 { lambda },
                PenaltySpec::Quadratic { lambda },
                PenaltySpec::LinearForm { v: vec![lambda; N] },
            ] {
                let s = solve_penalized_lse(&set, &f, &x, &opts).unwrap();
                prop_assert!(set.contains(&s.point, 1e-6).unwrap(), "{set:?} {f:?}");
            }
        }
    }

    #[test]
    fn closed_forms_agree_with_splitting(x in vector(N), lambda in 0.05..2.0f64) {
        let opts = SolveOptions { tol: 1e-9, ..Default::default() };
        let f = PenaltySpec::L1 { lambda };
        for set in [ConstraintSet::cube(N, 1.0), ConstraintSet::FullSpace { dim: N }] {
            let exact = solve_penalized_lse(&set, &f, &x, &opts).unwrap();
            prop_assert_eq!(exact.method, Method::ClosedForm);
            let split = solve_penalized_lse(&generic(&set), &f, &x, &opts).unwrap();
            prop_assert_eq!(split.method, Method::ProxSplitting);
            prop_assert!(dist(&exact.point, &split.point) <= 1e-4);
        }
    }

    #[test]
    fn monotone_range_shift_agrees_with_subgradient(x in vector(N), lambda in 0.05..1.0f64) {
        let f = PenaltySpec::Range { lambda };
        let set = ConstraintSet::MonotoneCone { dim: N };
        let exact = solve_penalized_lse(&set, &f, &x, &SolveOptions::default()).unwrap();
        let opts = SolveOptions { tol: 1e-6, max_iter: 20_000, ..Default::default() };
        let approx = solve_best(&generic(&set), &f, &x, &opts);
        let gap = objective(&f, &x, &approx) - exact.objective;
        prop_assert!(gap >= -1e-8, "exact solution beaten by {gap}");
        prop_assert!(gap <= 1e-3, "gap {gap}");
    }

    #[test]
    fn estimators_are_one_lipschitz(pairs in prop::collection::vec((vector(N), vector(N)), 4)) {
        let opts = SolveOptions::default();
        let cases = [
            (ConstraintSet::cube(N, 1.0), PenaltySpec::Zero),
            (ConstraintSet::MonotoneCone { dim: N }, PenaltySpec::Range { lambda: 0.5 }),
            (ConstraintSet::l1_ball(vec![0.0; N], 2.0), PenaltySpec::Zero),
            (ConstraintSet::FullSpace { dim: N }, PenaltySpec::L1 { lambda: 1.0 }),
            (ConstraintSet::cube(N, 1.0), PenaltySpec::L1 { lambda: 0.3 }),
        ];
        for (set, f) in cases {
            let l = check_lipschitz(&set, &f, &pairs, &opts).unwrap();
            prop_assert!(l <= 1.0 + 1e-6, "{set:?} {f:?}: {l}");
        }
    }
}

#[test]
fn oracle_reproduces_known_fit() {
    assert_eq!(isotonic_oracle(&[3.0, 1.0, 2.0]), vec![2.0, 2.0, 2.0]);
}
