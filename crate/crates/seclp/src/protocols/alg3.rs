//! Two-party transformation with arbitrarily partitioned data.
//!
//! Both parties hold additive shares of the whole program: `M = M1 + M2`,
//! `c = c1 + c2`, `b = b1 + b2`. The solver generates the keypair and sends
//! encryptions of its shares; the helper folds in its own shares under the
//! homomorphism, right-multiplies by its private monomial and returns the
//! result together with its encrypted right-hand-side share. The solver
//! right-multiplies by its own monomial and decrypts only the fully
//! transformed program `(M Q_h Q_s, c' Q_h Q_s, b)`: the helper's raw
//! shares and monomial never appear in any plaintext the solver sees, and
//! the helper receives nothing but ciphertexts and the solver's public key.

use std::collections::BTreeMap;

use num_traits::FromPrimitive;

use crate::crypto::keygen;
use crate::encoding::{decrypt_matrix, decrypt_vec, encrypt_matrix, encrypt_vec};
use crate::runtime::{run_session, Exposure, PartyCtx, PartyId, PartyProgram, Transcript};
use crate::solver::{simplex_solve, LpProblem, LpStatus};
use crate::Rational;

use super::{
    check_magnitudes, check_share_shapes, party_monomial, parse_status, payload, recon,
    recv_parsed, status_payload, transformed_objective, PartyShare, ProtocolError,
    ProtocolOutcome, ReconstructMode, SessionConfig, TransformedProblem,
};

/// Runs the two-party arbitrary-partition protocol. `shares[0]` belongs to
/// P1 and `shares[1]` to P2; `cfg.solver_party` picks who solves (default
/// P1). Outcome order is `[P1, P2]`.
pub fn run_alg3(
    shares: Vec<PartyShare>,
    cfg: &SessionConfig,
) -> Result<(Vec<ProtocolOutcome>, Transcript), ProtocolError> {
    if shares.len() != 2 {
        return Err(ProtocolError::TooFewParties {
            min: 2,
            got: shares.len(),
        });
    }
    let (_m, n) = check_share_shapes(&shares)?;
    for s in &shares {
        check_magnitudes(s, cfg.magnitude_bound)?;
    }
    let solver = cfg.solver_party;
    if solver.0 != 1 && solver.0 != 2 {
        return Err(ProtocolError::Shape(format!(
            "solver party {solver} does not exist in a two-party session"
        )));
    }
    let helper = PartyId(3 - solver.0);

    let mut programs: Vec<Option<PartyProgram<'_, ProtocolOutcome>>> = vec![None, None];
    let mut share_iter = shares.into_iter();
    let share1 = share_iter.next().unwrap();
    let share2 = share_iter.next().unwrap();
    let (solver_share, helper_share) = if solver.0 == 1 {
        (share1, share2)
    } else {
        (share2, share1)
    };

    programs[solver.0 - 1] = Some(solver_program(solver_share, solver, helper, cfg.clone(), n));
    programs[helper.0 - 1] = Some(helper_program(helper_share, solver, helper, cfg.clone(), n));

    let programs: Vec<PartyProgram<'_, ProtocolOutcome>> =
        programs.into_iter().map(Option::unwrap).collect();
    let (outcomes, transcript) = run_session(programs, cfg.seed)?;
    Ok((outcomes, transcript))
}

fn solver_program<'a>(
    share: PartyShare,
    solver: PartyId,
    helper: PartyId,
    cfg: SessionConfig,
    n: usize,
) -> PartyProgram<'a, ProtocolOutcome> {
    Box::new(move |ctx: &mut PartyCtx| {
        let kp = keygen(cfg.key_bits, &mut ctx.rng).map_err(|e| ctx.fail(e))?;
        cfg.scale
            .check_capacity(
                &kp.public,
                &Rational::from_u64(cfg.magnitude_bound).unwrap(),
                n,
                cfg.coeff_max(),
            )
            .map_err(|e| ctx.fail(e))?;
        ctx.send(helper, "pk", payload(|w| w.put_public_key(&kp.public)));

        let m1_enc = encrypt_matrix(&share.constraints, 1, &kp.public, &cfg.scale, &mut ctx.rng)
            .map_err(|e| ctx.fail(e))?;
        let c1_enc = encrypt_vec(&share.objective, 1, &kp.public, &cfg.scale, &mut ctx.rng)
            .map_err(|e| ctx.fail(e))?;
        ctx.send(helper, "enc_m1", payload(|w| w.put_cipher_matrix(&m1_enc)));
        ctx.send(helper, "enc_c1", payload(|w| w.put_cipher_matrix(&c1_enc)));

        let mq2_enc = recv_parsed(ctx, helper, "enc_mq2", |r| r.get_cipher_matrix())?;
        let cq2_enc = recv_parsed(ctx, helper, "enc_cq2", |r| r.get_cipher_matrix())?;
        let b2_enc = recv_parsed(ctx, helper, "enc_b2", |r| r.get_cipher_matrix())?;

        let q_s = party_monomial(share.transform.clone(), n, &cfg, ctx)?;
        let mq_enc = mq2_enc
            .right_mul_monomial(&q_s, &kp.public)
            .map_err(|e| ctx.fail(e))?;
        let cq_enc = cq2_enc
            .right_mul_monomial(&q_s, &kp.public)
            .map_err(|e| ctx.fail(e))?;

        let mq = decrypt_matrix(&mq_enc, &kp.private, &cfg.scale).map_err(|e| ctx.fail(e))?;
        ctx.log_values("mq", Exposure::Decrypted, mq.cells());
        let cq = decrypt_vec(&cq_enc, &kp.private, &cfg.scale).map_err(|e| ctx.fail(e))?;
        ctx.log_values("cq", Exposure::Decrypted, &cq);
        let b2 = decrypt_vec(&b2_enc, &kp.private, &cfg.scale).map_err(|e| ctx.fail(e))?;
        ctx.log_values("b", Exposure::Decrypted, &b2);
        let b = crate::linalg::add_vecs(&share.rhs, &b2).map_err(|e| ctx.fail(e))?;

        let problem = LpProblem {
            objective: cq.clone(),
            constraints: mq.clone(),
            rhs: b.clone(),
        };
        let solution = simplex_solve(&problem);
        let mut outcome = ProtocolOutcome::new(ctx.id(), solution.status);
        outcome.transformed = Some(TransformedProblem {
            mq,
            cq: cq.clone(),
            b,
            solver_party: solver,
        });
        match solution.status {
            LpStatus::Optimal => {
                let y_star = solution.x.unwrap();
                ctx.log_values("y_star", Exposure::Local, &y_star);
                let objective_value = transformed_objective(&cq, &y_star);
                outcome.objective = Some(objective_value.clone());
                ctx.send(
                    helper,
                    "status",
                    status_payload(LpStatus::Optimal, Some(&objective_value)),
                );
                // x* = Q_helper (Q_solver y*): chain order [helper, solver].
                let chain = [helper, solver];
                match cfg.mode {
                    ReconstructMode::Reveal => {
                        let x_star = recon::reveal_participant(
                            ctx,
                            &q_s,
                            &chain,
                            solver,
                            Some(y_star),
                        )?;
                        outcome.x_star = Some(x_star);
                    }
                    ReconstructMode::Shares => {
                        let pks = BTreeMap::from([(solver, kp.public.clone())]);
                        let x_share = recon::shares_participant(
                            ctx,
                            &q_s,
                            &chain,
                            solver,
                            Some(y_star),
                            Some(&kp),
                            &pks,
                            cfg.coeff_max(),
                            cfg.zero_masks,
                        )?;
                        outcome.x_share = Some(x_share);
                    }
                }
            }
            status => {
                ctx.send(helper, "status", status_payload(status, None));
            }
        }
        Ok(outcome)
    })
}

fn helper_program<'a>(
    share: PartyShare,
    solver: PartyId,
    helper: PartyId,
    cfg: SessionConfig,
    n: usize,
) -> PartyProgram<'a, ProtocolOutcome> {
    Box::new(move |ctx: &mut PartyCtx| {
        let pk = recv_parsed(ctx, solver, "pk", |r| r.get_public_key())?;
        cfg.scale
            .check_capacity(
                &pk,
                &Rational::from_u64(cfg.magnitude_bound).unwrap(),
                n,
                cfg.coeff_max(),
            )
            .map_err(|e| ctx.fail(e))?;
        let m1_enc = recv_parsed(ctx, solver, "enc_m1", |r| r.get_cipher_matrix())?;
        let c1_enc = recv_parsed(ctx, solver, "enc_c1", |r| r.get_cipher_matrix())?;

        // Enc(M) = Enc(M1) * Enc(M2), then transform by the private monomial.
        let m2_enc = encrypt_matrix(&share.constraints, 1, &pk, &cfg.scale, &mut ctx.rng)
            .map_err(|e| ctx.fail(e))?;
        let c2_enc = encrypt_vec(&share.objective, 1, &pk, &cfg.scale, &mut ctx.rng)
            .map_err(|e| ctx.fail(e))?;
        let m_enc = m1_enc.add(&m2_enc, &pk).map_err(|e| ctx.fail(e))?;
        let c_enc = c1_enc.add(&c2_enc, &pk).map_err(|e| ctx.fail(e))?;

        let q_h = party_monomial(share.transform.clone(), n, &cfg, ctx)?;
        let mq2_enc = m_enc
            .right_mul_monomial(&q_h, &pk)
            .map_err(|e| ctx.fail(e))?;
        let cq2_enc = c_enc
            .right_mul_monomial(&q_h, &pk)
            .map_err(|e| ctx.fail(e))?;
        let b2_enc = encrypt_vec(&share.rhs, 1, &pk, &cfg.scale, &mut ctx.rng)
            .map_err(|e| ctx.fail(e))?;

        ctx.send(solver, "enc_mq2", payload(|w| w.put_cipher_matrix(&mq2_enc)));
        ctx.send(solver, "enc_cq2", payload(|w| w.put_cipher_matrix(&cq2_enc)));
        ctx.send(solver, "enc_b2", payload(|w| w.put_cipher_matrix(&b2_enc)));

        let status_bytes = ctx.recv(solver, "status")?;
        let (status, obj) = parse_status(ctx, &status_bytes)?;
        let mut outcome = ProtocolOutcome::new(ctx.id(), status);
        outcome.objective = obj;
        if status != LpStatus::Optimal {
            return Ok(outcome);
        }
        let chain = [helper, solver];
        match cfg.mode {
            ReconstructMode::Reveal => {
                let x_star = recon::reveal_participant(ctx, &q_h, &chain, solver, None)?;
                outcome.x_star = Some(x_star);
            }
            ReconstructMode::Shares => {
                let pks = BTreeMap::from([(solver, pk.clone())]);
                let x_share = recon::shares_participant(
                    ctx,
                    &q_h,
                    &chain,
                    solver,
                    None,
                    None,
                    &pks,
                    cfg.coeff_max(),
                    cfg.zero_masks,
                )?;
                outcome.x_share = Some(x_share);
            }
        }
        Ok(outcome)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rat, ratio, Matrix};
    use crate::RationalMatrix;

    /// Splits the Dantzig instance into two arbitrary additive shares.
    fn split_dantzig(seed: i64) -> Vec<PartyShare> {
        let m = Matrix::from_rows(vec![
            vec![rat(1), rat(0)],
            vec![rat(0), rat(2)],
            vec![rat(3), rat(2)],
        ])
        .unwrap();
        let c = vec![rat(-3), rat(-5)];
        let b = vec![rat(4), rat(12), rat(18)];
        // A fixed pseudo-random first share keyed off `seed`.
        let mut k = seed;
        let mut next = || {
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ratio((k % 19) - 9, 4)
        };
        let m1 = RationalMatrix::from_vec(
            3,
            2,
            (0..6).map(|_| next()).collect(),
        )
        .unwrap();
        let c1: Vec<Rational> = (0..2).map(|_| next()).collect();
        let b1: Vec<Rational> = (0..3).map(|_| next()).collect();
        let m2 = m.sub(&m1).unwrap();
        let c2 = crate::linalg::sub_vecs(&c, &c1).unwrap();
        let b2 = crate::linalg::sub_vecs(&b, &b1).unwrap();
        vec![PartyShare::new(m1, c1, b1), PartyShare::new(m2, c2, b2)]
    }

    #[test]
    fn end_to_end_objective_matches_centralized() {
        let cfg = SessionConfig::for_tests(31);
        let (outcomes, _) = run_alg3(split_dantzig(5), &cfg).unwrap();
        assert_eq!(outcomes[0].status, LpStatus::Optimal);
        assert_eq!(outcomes[0].objective.as_ref().unwrap(), &rat(-36));
        assert_eq!(outcomes[1].objective.as_ref().unwrap(), &rat(-36));
        assert_eq!(outcomes[0].x_star.as_ref().unwrap(), &vec![rat(2), rat(6)]);
        assert_eq!(outcomes[1].x_star.as_ref().unwrap(), &vec![rat(2), rat(6)]);
    }

    #[test]
    fn degenerate_share_reduces_to_direct_solve() {
        let m = Matrix::from_rows(vec![
            vec![rat(1), rat(0)],
            vec![rat(0), rat(2)],
            vec![rat(3), rat(2)],
        ])
        .unwrap();
        let zero_m = Matrix::zeros(3, 2);
        let shares = vec![
            PartyShare::new(m, vec![rat(-3), rat(-5)], vec![rat(4), rat(12), rat(18)]),
            PartyShare {
                constraints: zero_m,
                objective: vec![rat(0), rat(0)],
                rhs: vec![rat(0), rat(0), rat(0)],
                transform: Some(crate::linalg::Monomial::identity(2)),
            },
        ];
        let cfg = SessionConfig::for_tests(32);
        let (outcomes, _) = run_alg3(shares, &cfg).unwrap();
        assert_eq!(outcomes[0].objective.as_ref().unwrap(), &rat(-36));
    }

    #[test]
    fn identity_chain_returns_y_star_unchanged() {
        // With both transforms pinned to the identity, the disguised program
        // equals the original and x* = y*.
        let m = Matrix::from_rows(vec![
            vec![rat(1), rat(0)],
            vec![rat(0), rat(2)],
            vec![rat(3), rat(2)],
        ])
        .unwrap();
        let full = PartyShare {
            constraints: m.clone(),
            objective: vec![rat(-3), rat(-5)],
            rhs: vec![rat(4), rat(12), rat(18)],
            transform: Some(crate::linalg::Monomial::identity(2)),
        };
        let empty = PartyShare {
            constraints: Matrix::zeros(3, 2),
            objective: vec![rat(0), rat(0)],
            rhs: vec![rat(0), rat(0), rat(0)],
            transform: Some(crate::linalg::Monomial::identity(2)),
        };
        let cfg = SessionConfig::for_tests(38);
        let (outcomes, _) = run_alg3(vec![full, empty], &cfg).unwrap();
        let transformed = outcomes[0].transformed.as_ref().unwrap();
        assert_eq!(transformed.mq, m);
        let y_star = simplex_solve(&LpProblem {
            objective: transformed.cq.clone(),
            constraints: transformed.mq.clone(),
            rhs: transformed.b.clone(),
        })
        .x
        .unwrap();
        assert_eq!(outcomes[0].x_star.as_ref().unwrap(), &y_star);
    }

    #[test]
    fn helper_receives_only_key_and_ciphertexts() {
        let cfg = SessionConfig::for_tests(33);
        let (_, t) = run_alg3(split_dantzig(7), &cfg).unwrap();
        // Transformation phase: {pk, enc_m1, enc_c1}; then the status
        // broadcast and the reveal-mode reconstruction vector.
        assert_eq!(
            t.received_kinds(PartyId(2)),
            vec!["enc_c1", "enc_m1", "pk", "recon_v", "status"]
        );
        // The helper holds no key: its decrypted log is empty.
        assert!(t.decrypted_steps(PartyId(2)).is_empty());
        // The solver decrypts exactly the transformed aggregates.
        assert_eq!(t.decrypted_steps(PartyId(1)), vec!["mq", "cq", "b"]);
    }

    #[test]
    fn shares_mode_sums_to_reveal_solution() {
        let mut cfg = SessionConfig::for_tests(34);
        cfg.mode = ReconstructMode::Shares;
        let (outcomes, t) = run_alg3(split_dantzig(9), &cfg).unwrap();
        let sum = crate::linalg::add_vecs(
            outcomes[0].x_share.as_ref().unwrap(),
            outcomes[1].x_share.as_ref().unwrap(),
        )
        .unwrap();
        assert_eq!(sum, vec![rat(2), rat(6)]);
        // Nobody saw x* in the clear.
        assert!(outcomes.iter().all(|o| o.x_star.is_none()));
        assert_eq!(
            t.received_kinds(PartyId(2)),
            vec!["enc_c1", "enc_m1", "pk", "recon_den", "recon_enc", "status"]
        );
    }

    #[test]
    fn solver_party_two_works() {
        let mut cfg = SessionConfig::for_tests(35);
        cfg.solver_party = PartyId(2);
        let (outcomes, t) = run_alg3(split_dantzig(11), &cfg).unwrap();
        assert_eq!(outcomes[0].objective.as_ref().unwrap(), &rat(-36));
        assert!(outcomes[1].transformed.is_some());
        assert!(outcomes[0].transformed.is_none());
        assert_eq!(t.decrypted_steps(PartyId(2)), vec!["mq", "cq", "b"]);
    }

    #[test]
    fn helper_never_sees_solver_share_plaintext() {
        let shares = split_dantzig(13);
        let sensitive: Vec<Rational> = shares[0]
            .constraints
            .cells()
            .iter()
            .chain(&shares[0].objective)
            .filter(|v| !num_traits::Zero::is_zero(*v))
            .cloned()
            .collect();
        let cfg = SessionConfig::for_tests(36);
        let (_, t) = run_alg3(shares, &cfg).unwrap();
        let report = t.assert_absent(PartyId(2), |v| sensitive.contains(v));
        // Reveal-mode reconstruction values are the only plaintext the helper
        // sees; anything else would be a leak.
        for v in &report.violations {
            assert!(
                matches!(v.step.as_str(), "recon_v" | "x_star"),
                "solver share leaked at step {}",
                v.step
            );
        }
    }

    #[test]
    fn rejects_wrong_party_count() {
        let shares = split_dantzig(15);
        let cfg = SessionConfig::for_tests(37);
        assert!(matches!(
            run_alg3(shares[..1].to_vec(), &cfg),
            Err(ProtocolError::TooFewParties { .. })
        ));
    }
}
