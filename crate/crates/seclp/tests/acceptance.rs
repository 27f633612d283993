//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `--nocapture` to see them all).

mod common;

use std::time::Instant;

use common::{
    dantzig, gen_any_lp, gen_feasible_bounded, gen_generic_box, oracle_solve, rat, ratio,
    split_arbitrary,
};
use num_bigint::{BigInt, RandBigInt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use seclp::attack::{bednarz_enumerate, AttackInput};
use seclp::crypto::{add_cipher, decrypt, encrypt_with_rng, keygen, scalar_mul};
use seclp::linalg::{gen_monomial, right_apply, right_apply_vec, Matrix};
use seclp::protocols::{
    run_alg2, run_alg3, run_alg4, secure_scalar_product, Alg2Inputs, PartyShare, SessionConfig,
};
use seclp::runtime::PartyId;
use seclp::solver::{simplex_solve, verify_solution, LpProblem, LpStatus};

fn report(number: u32, name: &str, failures: &[String]) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("acceptance {number} {name}: {verdict}");
    assert!(
        failures.is_empty(),
        "criterion {number} ({name}) failed:\n{}",
        failures.join("\n")
    );
}

/// Criterion 1: homomorphic addition and scalar multiplication hold exactly
/// for 1000 random triples at 256-bit keys, within 30 seconds.
#[test]
fn criterion_1_homomorphic_correctness() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(0xc1);
    let kp = keygen(256, &mut rng).unwrap();
    let n = kp.public.modulus().clone();
    for trial in 0..1000 {
        let m1 = rng.gen_biguint_below(&n);
        let m2 = rng.gen_biguint_below(&n);
        let k: i64 = rng.gen();
        let c1 = encrypt_with_rng(&kp.public, &m1, &mut rng).unwrap();
        let c2 = encrypt_with_rng(&kp.public, &m2, &mut rng).unwrap();
        let sum = decrypt(&kp.private, &add_cipher(&c1, &c2, &kp.public).unwrap()).unwrap();
        if sum != (&m1 + &m2) % &n {
            failures.push(format!("trial {trial}: addition mismatch"));
        }
        let scaled = decrypt(
            &kp.private,
            &scalar_mul(&c1, &BigInt::from(k), &kp.public).unwrap(),
        )
        .unwrap();
        let expected = num_integer::Integer::mod_floor(
            &(BigInt::from(m1) * BigInt::from(k)),
            &BigInt::from(n.clone()),
        )
        .to_biguint()
        .unwrap();
        if scaled != expected {
            failures.push(format!("trial {trial}: scalar mismatch"));
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 30 {
        failures.push(format!("took {elapsed:?}, budget 30s"));
    }
    report(1, "homomorphic-correctness", &failures);
}

/// Criterion 2: 200 random signed vector pairs of length up to 64 produce
/// additive shares summing exactly to the dot product, within 60 seconds.
#[test]
fn criterion_2_scalar_product() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(0xc2);
    for trial in 0..200u64 {
        let len = rng.gen_range(1..=64);
        let x: Vec<BigInt> = (0..len).map(|_| BigInt::from(rng.gen_range(-1000i64..=1000))).collect();
        let y: Vec<BigInt> = (0..len).map(|_| BigInt::from(rng.gen_range(-1000i64..=1000))).collect();
        let want: BigInt = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let (out, _) = secure_scalar_product(&x, &y, 256, 1 << 16, trial).unwrap();
        if out.r_a.clone() + out.r_b.clone() != want {
            failures.push(format!("trial {trial}: shares do not sum to X.Y"));
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 60 {
        failures.push(format!("took {elapsed:?}, budget 60s"));
    }
    report(2, "alg1-scalar-product", &failures);
}

/// Criterion 3: monomial transformation preserves the optimum objective
/// exactly on 200 random feasible programs, and mapping the disguised
/// optimum back is feasible for the original.
#[test]
fn criterion_3_transformation_equivalence() {
    let mut failures = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(0xc3);
    for trial in 0..200 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=6);
        let p = gen_feasible_bounded(n, m, 4, &mut rng);
        let q = gen_monomial(n, (1, 1 << 16), &mut rng).unwrap();
        let transformed = LpProblem {
            objective: right_apply_vec(&p.objective, &q).unwrap(),
            constraints: right_apply(&p.constraints, &q).unwrap(),
            rhs: p.rhs.clone(),
        };
        let original = simplex_solve(&p);
        let disguised = simplex_solve(&transformed);
        if original.status != LpStatus::Optimal || disguised.status != LpStatus::Optimal {
            failures.push(format!("trial {trial}: unexpected status"));
            continue;
        }
        if original.objective != disguised.objective {
            failures.push(format!("trial {trial}: objective mismatch"));
        }
        let x = q.apply_vec(&disguised.x.unwrap()).unwrap();
        let check = verify_solution(&p, &x).unwrap();
        if !check.feasible || Some(check.objective) != original.objective {
            failures.push(format!("trial {trial}: mapped-back optimum not feasible-optimal"));
        }
    }
    report(3, "transformation-equivalence", &failures);
}

/// Criterion 4: the unpartitioned two-party protocol matches the
/// centralized objective exactly on the classic fixture and 100 random
/// instances, with the documented message-kind structure.
#[test]
fn criterion_4_alg2_end_to_end() {
    let mut failures = Vec::new();
    let fixture = dantzig();
    let cfg = SessionConfig::for_tests(0xc4);
    let (outcomes, transcript) = run_alg2(
        Alg2Inputs::new(
            fixture.objective.clone(),
            fixture.constraints.clone(),
            fixture.rhs.clone(),
        ),
        &cfg,
    )
    .unwrap();
    if outcomes[1].objective != Some(rat(-36)) {
        failures.push("fixture objective != -36".into());
    }
    // Table-1 realization: P1 receives the key, the shared permutation and
    // the three encrypted matrices; P2 receives the two encrypted results
    // plus the reveal-phase traffic.
    let p1_kinds = transcript.received_kinds(PartyId(1));
    let expected_p1 = vec!["enc_m", "enc_mq2", "enc_q2", "perm", "pk", "status", "x_star", "y_star"];
    if p1_kinds != expected_p1 {
        failures.push(format!("P1 kinds {p1_kinds:?} != {expected_p1:?}"));
    }
    let p2_kinds = transcript.received_kinds(PartyId(2));
    let expected_p2 = vec!["enc_s", "enc_v", "q1y"];
    if p2_kinds != expected_p2 {
        failures.push(format!("P2 kinds {p2_kinds:?} != {expected_p2:?}"));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(0xc40);
    for trial in 0..100u64 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let p = gen_feasible_bounded(n, m, 4, &mut rng);
        let want = simplex_solve(&p);
        let cfg = SessionConfig::for_tests(41000 + trial);
        let (outcomes, _) = run_alg2(
            Alg2Inputs::new(p.objective.clone(), p.constraints.clone(), p.rhs.clone()),
            &cfg,
        )
        .unwrap();
        if outcomes[1].objective != want.objective {
            failures.push(format!("trial {trial}: objective mismatch"));
        }
    }
    report(4, "alg2-end-to-end", &failures);
}

/// Criterion 5: the arbitrary-partition two-party protocol matches the
/// centralized objective on 100 random splits; the helper receives only the
/// key and ciphertext kinds before the solution broadcast, and the solver
/// decrypts only the transformed aggregates.
#[test]
fn criterion_5_alg3_end_to_end() {
    let mut failures = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(0xc5);
    for trial in 0..100u64 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let p = gen_feasible_bounded(n, m, 4, &mut rng);
        let want = simplex_solve(&p);
        let shares = split_arbitrary(&p, 2, &mut rng);
        let cfg = SessionConfig::for_tests(51000 + trial);
        let (outcomes, transcript) = run_alg3(shares, &cfg).unwrap();
        if outcomes[0].objective != want.objective {
            failures.push(format!("trial {trial}: objective mismatch"));
        }
        // Transformation phase: exactly {pk, enc_m1, enc_c1}; the rest is
        // the status broadcast and reveal-mode reconstruction.
        let transform_kinds: Vec<String> = transcript
            .received_kinds(PartyId(2))
            .into_iter()
            .filter(|k| !matches!(k.as_str(), "status" | "recon_v" | "recon_den" | "recon_enc" | "x_star"))
            .collect();
        if transform_kinds != vec!["enc_c1", "enc_m1", "pk"] {
            failures.push(format!("trial {trial}: P2 received {transform_kinds:?}"));
        }
        if !transcript.decrypted_steps(PartyId(2)).is_empty() {
            failures.push(format!("trial {trial}: helper decrypted something"));
        }
        let solver_decrypts = transcript.decrypted_steps(PartyId(1));
        if solver_decrypts != vec!["mq", "cq", "b"] {
            failures.push(format!("trial {trial}: P1 decrypted {solver_decrypts:?}"));
        }
    }
    report(5, "alg3-end-to-end", &failures);
}

/// Criterion 6: multi-party runs for 3 and 4 parties, 50 random instances
/// each: published shares sum exactly to the monomial-chain product, the
/// objective matches the centralized solve, and the whole set finishes
/// within 5 minutes at 256-bit keys.
#[test]
fn criterion_6_alg4_end_to_end() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(0xc6);
    for &l in &[3usize, 4] {
        for trial in 0..50u64 {
            let n = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=3);
            let p = gen_feasible_bounded(n, m, 4, &mut rng);
            let want = simplex_solve(&p);
            let mut shares = split_arbitrary(&p, l, &mut rng);
            for s in &mut shares {
                s.transform = Some(gen_monomial(n, (1, 64), &mut rng).unwrap());
            }
            let q_total = shares
                .iter()
                .skip(1)
                .fold(shares[0].transform.clone().unwrap(), |acc, s| {
                    acc.compose(s.transform.as_ref().unwrap()).unwrap()
                });
            let want_mq = right_apply(&p.constraints, &q_total).unwrap();
            let want_cq = right_apply_vec(&p.objective, &q_total).unwrap();

            let cfg = SessionConfig::for_tests(61000 + 100 * l as u64 + trial);
            let (outcomes, _) = run_alg4(shares, &cfg).unwrap();
            let mut sum_m = Matrix::zeros(p.constraints.rows(), n);
            let mut sum_c = vec![rat(0); n];
            let mut sum_b = vec![rat(0); p.rhs.len()];
            for o in &outcomes {
                if o.objective != want.objective {
                    failures.push(format!("l={l} trial {trial}: objective mismatch"));
                    break;
                }
                let pubshare = o.published.as_ref().unwrap();
                sum_m = sum_m.add(&pubshare.constraints).unwrap();
                sum_c = seclp::linalg::add_vecs(&sum_c, &pubshare.objective).unwrap();
                sum_b = seclp::linalg::add_vecs(&sum_b, &pubshare.rhs).unwrap();
            }
            if sum_m != want_mq || sum_c != want_cq || sum_b != p.rhs {
                failures.push(format!("l={l} trial {trial}: published shares do not telescope"));
            }
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 300 {
        failures.push(format!("took {elapsed:?}, budget 300s"));
    }
    report(6, "alg4-end-to-end", &failures);
}

/// Criterion 7: on 20 generic dimension-4 disclosures the enumeration
/// recovers exactly the generating monomial in under 10 seconds each, and
/// under the arbitrary-partition visibility (no plaintext objective, no full
/// solution) at least two candidates always survive.
#[test]
fn criterion_7_attack_demonstration() {
    let mut failures = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(0xc7);
    for trial in 0..20 {
        let p = gen_generic_box(4, &mut rng);
        let q = gen_monomial(4, (2, 1 << 10), &mut rng).unwrap();
        let disguised = LpProblem {
            objective: right_apply_vec(&p.objective, &q).unwrap(),
            constraints: right_apply(&p.constraints, &q).unwrap(),
            rhs: p.rhs.clone(),
        };
        let y_star = simplex_solve(&disguised).x.unwrap();
        let x_star = q.apply_vec(&y_star).unwrap();

        let started = Instant::now();
        let full = bednarz_enumerate(&AttackInput {
            objective: Some(p.objective.clone()),
            transformed_objective: disguised.objective.clone(),
            y_star: Some(y_star.clone()),
            x_star: Some(x_star),
        })
        .unwrap();
        let elapsed = started.elapsed();
        if elapsed.as_secs() >= 10 {
            failures.push(format!("trial {trial}: enumeration took {elapsed:?}"));
        }
        if !full.unique || full.candidates[0] != q {
            failures.push(format!(
                "trial {trial}: expected unique recovery, got {} candidates",
                full.candidates.len()
            ));
        }

        let partitioned_view = bednarz_enumerate(&AttackInput {
            objective: None,
            transformed_objective: disguised.objective.clone(),
            y_star: Some(y_star),
            x_star: None,
        })
        .unwrap();
        if partitioned_view.candidates.len() < 2 {
            failures.push(format!(
                "trial {trial}: partitioned visibility left {} candidate(s)",
                partitioned_view.candidates.len()
            ));
        }
    }
    report(7, "attack-demonstration", &failures);
}

/// Criterion 8: the simplex solver agrees exactly with the brute-force
/// vertex-enumeration oracle on 500 random instances, and the classic
/// degenerate cycling instance terminates under the lowest-index rule.
#[test]
fn criterion_8_solver_oracle_agreement() {
    let mut failures = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(0xc8);
    for trial in 0..500 {
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=5);
        let p = gen_any_lp(n, m, 4, &mut rng);
        let sol = simplex_solve(&p);
        let (status, best) = oracle_solve(&p);
        if sol.status != status {
            failures.push(format!("trial {trial}: status {:?} vs oracle {:?}", sol.status, status));
        } else if status == LpStatus::Optimal && sol.objective != best {
            failures.push(format!("trial {trial}: objective mismatch"));
        }
    }
    // Beale's cycling example; the largest-coefficient rule loops on it.
    let beale = LpProblem {
        objective: vec![ratio(-3, 4), rat(150), ratio(-1, 50), rat(6)],
        constraints: Matrix::from_rows(vec![
            vec![ratio(1, 4), rat(-60), ratio(-1, 25), rat(9)],
            vec![ratio(1, 2), rat(-90), ratio(-1, 50), rat(3)],
            vec![rat(0), rat(0), rat(1), rat(0)],
        ])
        .unwrap(),
        rhs: vec![rat(0), rat(0), rat(1)],
    };
    let sol = simplex_solve(&beale);
    if sol.status != LpStatus::Optimal || sol.objective != Some(ratio(-1, 20)) {
        failures.push("degenerate instance not solved".into());
    }
    report(8, "solver-oracle-agreement", &failures);
}

/// Criterion 9: every protocol repeated with the same seed produces
/// byte-identical transcripts and outputs.
#[test]
fn criterion_9_determinism() {
    let mut failures = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(0xc9);
    let p = gen_feasible_bounded(3, 2, 4, &mut rng);

    let inputs = Alg2Inputs::new(p.objective.clone(), p.constraints.clone(), p.rhs.clone());
    let cfg = SessionConfig::for_tests(91);
    let (o1, t1) = run_alg2(inputs.clone(), &cfg).unwrap();
    let (o2, t2) = run_alg2(inputs, &cfg).unwrap();
    if t1.export_text() != t2.export_text() {
        failures.push("alg2 transcripts differ".into());
    }
    if o1[1].objective != o2[1].objective || o1[0].x_star != o2[0].x_star {
        failures.push("alg2 outputs differ".into());
    }

    let shares2: Vec<PartyShare> = split_arbitrary(&p, 2, &mut rng);
    let cfg = SessionConfig::for_tests(92);
    let (o1, t1) = run_alg3(shares2.clone(), &cfg).unwrap();
    let (o2, t2) = run_alg3(shares2, &cfg).unwrap();
    if t1.export_text() != t2.export_text() {
        failures.push("alg3 transcripts differ".into());
    }
    if o1[0].objective != o2[0].objective || o1[0].x_star != o2[0].x_star {
        failures.push("alg3 outputs differ".into());
    }

    let shares4 = split_arbitrary(&p, 4, &mut rng);
    let cfg = SessionConfig::for_tests(93);
    let (o1, t1) = run_alg4(shares4.clone(), &cfg).unwrap();
    let (o2, t2) = run_alg4(shares4, &cfg).unwrap();
    if t1.export_text() != t2.export_text() {
        failures.push("alg4 transcripts differ".into());
    }
    for (a, b) in o1.iter().zip(&o2) {
        if a.objective != b.objective || a.x_star != b.x_star {
            failures.push("alg4 outputs differ".into());
        }
    }
    report(9, "determinism", &failures);
}
