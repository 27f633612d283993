//! Solver and transformation properties checked against the brute-force
//! vertex-enumeration oracle.

mod common;

use common::{dantzig, gen_any_lp, gen_feasible_bounded, oracle_solve, rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use seclp::linalg::{dot, gen_monomial, right_apply, right_apply_vec};
use seclp::solver::{simplex_solve, verify_solution, LpProblem, LpStatus};
use seclp::Rational;

#[test]
fn oracle_confirms_dantzig_fixture() {
    let (status, best) = oracle_solve(&dantzig());
    assert_eq!(status, LpStatus::Optimal);
    assert_eq!(best.unwrap(), rat(-36));
}

#[test]
fn simplex_agrees_with_oracle_on_random_instances() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x0401);
    for trial in 0..150 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=4);
        let p = gen_any_lp(n, m, 4, &mut rng);
        let sol = simplex_solve(&p);
        let (status, best) = oracle_solve(&p);
        assert_eq!(sol.status, status, "status mismatch on trial {trial}: {p:?}");
        if status == LpStatus::Optimal {
            assert_eq!(sol.objective, best, "objective mismatch on trial {trial}");
        }
    }
}

#[test]
fn feasibility_transport_under_monomial_transform() {
    // A vector x is feasible for (M, b) iff y = Q^-1 x is feasible for
    // (MQ, b), exactly.
    let mut rng = ChaCha20Rng::seed_from_u64(0x0402);
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=6);
        let p = gen_any_lp(n, m, 4, &mut rng);
        let q = gen_monomial(n, (1, 50), &mut rng).unwrap();
        let mq = right_apply(&p.constraints, &q).unwrap();
        let transformed = LpProblem {
            objective: right_apply_vec(&p.objective, &q).unwrap(),
            constraints: mq,
            rhs: p.rhs.clone(),
        };
        // Random candidate point, feasible or not.
        let x: Vec<Rational> = (0..n).map(|_| common::gen_entry(6, &mut rng)).collect();
        let y = q.invert().apply_vec(&x).unwrap();
        let fx = verify_solution(&p, &x).unwrap();
        let fy = verify_solution(&transformed, &y).unwrap();
        assert_eq!(fx.feasible, fy.feasible);
        // Objective transport: c'x = (c'Q)(Q^-1 x).
        assert_eq!(fx.objective, fy.objective);
    }
}

#[test]
fn transformation_preserves_optimum_exactly() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x0403);
    for trial in 0..100 {
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=5);
        let p = gen_feasible_bounded(n, m, 4, &mut rng);
        let q = gen_monomial(n, (1, 64), &mut rng).unwrap();
        let transformed = LpProblem {
            objective: right_apply_vec(&p.objective, &q).unwrap(),
            constraints: right_apply(&p.constraints, &q).unwrap(),
            rhs: p.rhs.clone(),
        };
        let original = simplex_solve(&p);
        let disguised = simplex_solve(&transformed);
        assert_eq!(original.status, LpStatus::Optimal, "trial {trial}");
        assert_eq!(disguised.status, LpStatus::Optimal, "trial {trial}");
        assert_eq!(original.objective, disguised.objective, "trial {trial}");
        // Mapping the disguised optimum back yields a feasible point of the
        // original with the same objective value.
        let x = q.apply_vec(&disguised.x.unwrap()).unwrap();
        let report = verify_solution(&p, &x).unwrap();
        assert!(report.feasible, "trial {trial}");
        assert_eq!(report.objective, original.objective.unwrap());
    }
}

#[test]
fn status_fidelity_under_transformation() {
    // Infeasible stays infeasible and unbounded stays unbounded: a monomial
    // matrix bijects the nonnegative orthant.
    let mut rng = ChaCha20Rng::seed_from_u64(0x0404);

    let infeasible = LpProblem {
        objective: vec![rat(1), rat(1)],
        constraints: seclp::linalg::Matrix::from_rows(vec![vec![rat(1), rat(1)]]).unwrap(),
        rhs: vec![rat(-3)],
    };
    let unbounded = LpProblem {
        objective: vec![rat(-1), rat(0)],
        constraints: seclp::linalg::Matrix::from_rows(vec![vec![rat(-1), rat(0)]]).unwrap(),
        rhs: vec![rat(-1)],
    };
    for p in [infeasible, unbounded] {
        let want = simplex_solve(&p).status;
        for _ in 0..25 {
            let q = gen_monomial(2, (1, 30), &mut rng).unwrap();
            let transformed = LpProblem {
                objective: right_apply_vec(&p.objective, &q).unwrap(),
                constraints: right_apply(&p.constraints, &q).unwrap(),
                rhs: p.rhs.clone(),
            };
            assert_eq!(simplex_solve(&transformed).status, want);
        }
    }
}

#[test]
fn oracle_and_simplex_agree_on_dantzig_slacks() {
    let p = dantzig();
    let sol = simplex_solve(&p);
    let report = verify_solution(&p, sol.x.as_ref().unwrap()).unwrap();
    // Rows 2 and 3 bind at the optimum.
    assert_eq!(report.slacks, vec![rat(2), rat(0), rat(0)]);
    assert_eq!(
        dot(&p.objective, sol.x.as_ref().unwrap()),
        sol.objective.unwrap()
    );
}
