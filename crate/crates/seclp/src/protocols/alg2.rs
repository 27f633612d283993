//! Two-party transformation where P1 owns the objective and P2 owns the
//! constraints.
//!
//! The disguise is `Q = Q1 + Q2`. A sum of two independent monomial matrices
//! is generally not monomial, so the parties agree on one permutation at
//! session start (P2 samples it and sends it over) and keep private positive
//! coefficient vectors; the sum then has exactly one nonzero per row and
//! column. P2 generates the keypair, sends encryptions of `M`, `Q2` and
//! `M Q2`; P1 folds in its own `Q1` and the objective homomorphically and
//! returns `S' = Enc(M(Q1+Q2))` and `V' = Enc(c'(Q1+Q2))`, which P2 decrypts
//! and solves. Neither `c` nor `M` ever crosses in plaintext.

use num_traits::FromPrimitive;
use rand::Rng;

use crate::crypto::keygen;
use crate::encoding::{decrypt_matrix, decrypt_vec, encrypt_matrix, encrypt_vec};
use crate::linalg::{right_apply, right_apply_vec, Monomial};
use crate::runtime::{run_session, Exposure, PartyCtx, PartyId, PartyProgram, Transcript};
use crate::solver::{simplex_solve, LpProblem, LpStatus};
use crate::{Rational, RationalMatrix, RationalVector};

use super::{
    check_magnitudes, parse_payload, parse_status, payload, recv_parsed, status_payload,
    transformed_objective, PartyShare, ProtocolError, ProtocolOutcome, ReconstructMode,
    SessionConfig, TransformedProblem,
};

/// The constraint holder P2 solves in this protocol (the objective holder
/// cannot: it never sees the transformed constraints).
pub const ALG2_SOLVER: PartyId = PartyId(2);

/// Inputs of the unpartitioned two-party protocol.
#[derive(Debug, Clone)]
pub struct Alg2Inputs {
    /// Objective vector, private to P1.
    pub objective: RationalVector,
    /// Constraint matrix, private to P2.
    pub constraints: RationalMatrix,
    /// Right-hand side, private to P2 (P2 solves, so it never moves).
    pub rhs: RationalVector,
    /// Pinned coefficient vectors for tests; sampled from session randomness
    /// when absent.
    pub q1_coeffs: Option<Vec<u64>>,
    pub q2_coeffs: Option<Vec<u64>>,
    /// Pinned shared permutation; P2 samples one when absent.
    pub perm: Option<Vec<usize>>,
}

impl Alg2Inputs {
    pub fn new(
        objective: RationalVector,
        constraints: RationalMatrix,
        rhs: RationalVector,
    ) -> Self {
        Self {
            objective,
            constraints,
            rhs,
            q1_coeffs: None,
            q2_coeffs: None,
            perm: None,
        }
    }
}

fn coeff_monomial(
    perm: &[usize],
    pinned: Option<Vec<u64>>,
    cfg: &SessionConfig,
    rng: &mut impl Rng,
) -> Result<Monomial<Rational>, crate::linalg::LinalgError> {
    let n = perm.len();
    let coeffs: Vec<Rational> = match pinned {
        Some(v) => v
            .into_iter()
            .map(|k| Rational::from_u64(k).unwrap())
            .collect(),
        None => {
            let (lo, hi) = cfg.coeff_range;
            (0..n)
                .map(|_| Rational::from_u64(rng.gen_range(lo..=hi)).unwrap())
                .collect()
        }
    };
    Monomial::new(perm.to_vec(), coeffs)
}

/// Runs the protocol; outcome order is `[P1, P2]`.
pub fn run_alg2(
    inputs: Alg2Inputs,
    cfg: &SessionConfig,
) -> Result<(Vec<ProtocolOutcome>, Transcript), ProtocolError> {
    let n = inputs.objective.len();
    let m = inputs.constraints.rows();
    if inputs.constraints.cols() != n || inputs.rhs.len() != m {
        return Err(ProtocolError::Shape(format!(
            "c has {} entries, M is {}x{}, b has {}",
            n,
            m,
            inputs.constraints.cols(),
            inputs.rhs.len()
        )));
    }
    check_magnitudes(
        &PartyShare::new(
            inputs.constraints.clone(),
            inputs.objective.clone(),
            inputs.rhs.clone(),
        ),
        cfg.magnitude_bound,
    )?;
    if let Some(p) = &inputs.perm {
        Monomial::<Rational>::new(p.clone(), vec![Rational::from_u64(1).unwrap(); p.len()])
            .map_err(ProtocolError::Linalg)?;
    }

    let _scale = cfg.scale;
    let mode = cfg.mode;
    let objective = inputs.objective;
    let constraints = inputs.constraints;
    let rhs = inputs.rhs;
    let q1_coeffs = inputs.q1_coeffs;
    let q2_coeffs = inputs.q2_coeffs;
    let pinned_perm = inputs.perm;
    let cfg1 = cfg.clone();
    let cfg2 = cfg.clone();

    // P1: objective holder.
    let p1: PartyProgram<'_, ProtocolOutcome> = Box::new(move |ctx: &mut PartyCtx| {
        let cfg = cfg1;
        let pk_bytes = ctx.recv(PartyId(2), "pk")?;
        let pk = parse_payload(ctx, &pk_bytes, |r| r.get_public_key())?;
        let perm_bytes = ctx.recv(PartyId(2), "perm")?;
        let perm = parse_payload(ctx, &perm_bytes, |r| r.get_perm())?;
        ctx.log_values(
            "perm",
            Exposure::Received,
            &perm
                .iter()
                .map(|&p| Rational::from_usize(p).unwrap())
                .collect::<Vec<_>>(),
        );
        cfg.scale
            .check_capacity(&pk, &Rational::from_u64(cfg.magnitude_bound).unwrap(), perm.len(), cfg.coeff_max())
            .map_err(|e| ctx.fail(e))?;

        let m_enc = recv_parsed(ctx, PartyId(2), "enc_m", |r| r.get_cipher_matrix())?;
        let q2_enc = recv_parsed(ctx, PartyId(2), "enc_q2", |r| r.get_cipher_matrix())?;
        let mq2_enc = recv_parsed(ctx, PartyId(2), "enc_mq2", |r| r.get_cipher_matrix())?;

        let q1 = coeff_monomial(&perm, q1_coeffs, &cfg, &mut ctx.rng).map_err(|e| ctx.fail(e))?;

        // S' = Enc(M Q1) * Enc(M Q2) = Enc(M (Q1 + Q2))
        let s_enc = m_enc
            .right_mul_monomial(&q1, &pk)
            .and_then(|mq1| mq1.add(&mq2_enc, &pk))
            .map_err(|e| ctx.fail(e))?;

        // V' = Enc(c'Q2) * Enc(c'Q1) = Enc(c'(Q1 + Q2))
        let cq1 = right_apply_vec(&objective, &q1).map_err(|e| ctx.fail(e))?;
        let cq1_enc =
            encrypt_vec(&cq1, 1, &pk, &cfg.scale, &mut ctx.rng).map_err(|e| ctx.fail(e))?;
        let v_enc = q2_enc
            .left_mul_plain_vec(&objective, 1, &pk, &cfg.scale)
            .and_then(|cq2| cq2.add(&cq1_enc, &pk))
            .map_err(|e| ctx.fail(e))?;

        ctx.send(PartyId(2), "enc_s", payload(|w| w.put_cipher_matrix(&s_enc)));
        ctx.send(PartyId(2), "enc_v", payload(|w| w.put_cipher_matrix(&v_enc)));

        // Solve outcome arrives from P2.
        let status_bytes = ctx.recv(PartyId(2), "status")?;
        let (status, obj) = parse_status(ctx, &status_bytes)?;
        let mut outcome = ProtocolOutcome::new(ctx.id(), status);
        outcome.objective = obj;
        if status != LpStatus::Optimal {
            return Ok(outcome);
        }
        let y_bytes = ctx.recv(PartyId(2), "y_star")?;
        let y_star = parse_payload(ctx, &y_bytes, |r| r.get_rational_vec())?;
        ctx.log_values("y_star", Exposure::Received, &y_star);
        let q1y = q1.apply_vec(&y_star).map_err(|e| ctx.fail(e))?;
        match mode {
            ReconstructMode::Reveal => {
                ctx.send(PartyId(2), "q1y", payload(|w| w.put_rational_vec(&q1y)));
                let x_bytes = ctx.recv(PartyId(2), "x_star")?;
                let x_star = parse_payload(ctx, &x_bytes, |r| r.get_rational_vec())?;
                ctx.log_values("x_star", Exposure::Received, &x_star);
                outcome.x_star = Some(x_star);
            }
            ReconstructMode::Shares => {
                outcome.x_share = Some(q1y);
            }
        }
        Ok(outcome)
    });

    // P2: constraint holder and solver.
    let p2: PartyProgram<'_, ProtocolOutcome> = Box::new(move |ctx: &mut PartyCtx| {
        let cfg = cfg2;
        let n = constraints.cols();
        let kp = keygen(cfg.key_bits, &mut ctx.rng).map_err(|e| ctx.fail(e))?;
        cfg.scale
            .check_capacity(
                &kp.public,
                &Rational::from_u64(cfg.magnitude_bound).unwrap(),
                n,
                cfg.coeff_max(),
            )
            .map_err(|e| ctx.fail(e))?;
        let perm = match pinned_perm {
            Some(p) => p,
            None => {
                use rand::seq::SliceRandom;
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(&mut ctx.rng);
                p
            }
        };
        ctx.send(PartyId(1), "pk", payload(|w| w.put_public_key(&kp.public)));
        ctx.send(PartyId(1), "perm", payload(|w| w.put_perm(&perm)));

        let q2 = coeff_monomial(&perm, q2_coeffs, &cfg, &mut ctx.rng).map_err(|e| ctx.fail(e))?;
        let mq2 = right_apply(&constraints, &q2).map_err(|e| ctx.fail(e))?;

        let m_enc = encrypt_matrix(&constraints, 1, &kp.public, &cfg.scale, &mut ctx.rng)
            .map_err(|e| ctx.fail(e))?;
        let q2_enc = encrypt_matrix(&q2.dense(), 0, &kp.public, &cfg.scale, &mut ctx.rng)
            .map_err(|e| ctx.fail(e))?;
        let mq2_enc = encrypt_matrix(&mq2, 1, &kp.public, &cfg.scale, &mut ctx.rng)
            .map_err(|e| ctx.fail(e))?;
        ctx.send(PartyId(1), "enc_m", payload(|w| w.put_cipher_matrix(&m_enc)));
        ctx.send(PartyId(1), "enc_q2", payload(|w| w.put_cipher_matrix(&q2_enc)));
        ctx.send(
            PartyId(1),
            "enc_mq2",
            payload(|w| w.put_cipher_matrix(&mq2_enc)),
        );

        let s_enc = recv_parsed(ctx, PartyId(1), "enc_s", |r| r.get_cipher_matrix())?;
        let v_enc = recv_parsed(ctx, PartyId(1), "enc_v", |r| r.get_cipher_matrix())?;
        let s = decrypt_matrix(&s_enc, &kp.private, &cfg.scale).map_err(|e| ctx.fail(e))?;
        ctx.log_values("s", Exposure::Decrypted, s.cells());
        let v = decrypt_vec(&v_enc, &kp.private, &cfg.scale).map_err(|e| ctx.fail(e))?;
        ctx.log_values("v", Exposure::Decrypted, &v);

        let transformed = LpProblem {
            objective: v.clone(),
            constraints: s.clone(),
            rhs: rhs.clone(),
        };
        let solution = simplex_solve(&transformed);
        let mut outcome = ProtocolOutcome::new(ctx.id(), solution.status);
        outcome.transformed = Some(TransformedProblem {
            mq: s,
            cq: v.clone(),
            b: rhs.clone(),
            solver_party: ctx.id(),
        });
        match solution.status {
            LpStatus::Optimal => {
                let y_star = solution.x.unwrap();
                let objective_value = transformed_objective(&v, &y_star);
                ctx.log_values("y_star", Exposure::Local, &y_star);
                outcome.objective = Some(objective_value.clone());
                ctx.send(
                    PartyId(1),
                    "status",
                    status_payload(LpStatus::Optimal, Some(&objective_value)),
                );
                ctx.send(
                    PartyId(1),
                    "y_star",
                    payload(|w| w.put_rational_vec(&y_star)),
                );
                let q2y = q2.apply_vec(&y_star).map_err(|e| ctx.fail(e))?;
                match mode {
                    ReconstructMode::Reveal => {
                        let q1y_bytes = ctx.recv(PartyId(1), "q1y")?;
                        let q1y = parse_payload(ctx, &q1y_bytes, |r| r.get_rational_vec())?;
                        ctx.log_values("q1y", Exposure::Received, &q1y);
                        let x_star = crate::linalg::add_vecs(&q1y, &q2y)
                            .map_err(|e| ctx.fail(e))?;
                        ctx.log_values("x_star", Exposure::Local, &x_star);
                        ctx.send(
                            PartyId(1),
                            "x_star",
                            payload(|w| w.put_rational_vec(&x_star)),
                        );
                        outcome.x_star = Some(x_star);
                    }
                    ReconstructMode::Shares => {
                        outcome.x_share = Some(q2y);
                    }
                }
            }
            status => {
                ctx.send(PartyId(1), "status", status_payload(status, None));
            }
        }
        Ok(outcome)
    });

    let (outcomes, transcript) = run_session(vec![p1, p2], cfg.seed)?;
    Ok((outcomes, transcript))
}
