//! Multi-party transformation with masked chains and a final secure sum.
//!
//! Every party holds an additive share of the program and a private
//! monomial. Each share is encrypted under its owner's key and walked
//! through the parties in the fixed order `P1..Pl`, each applying its own
//! monomial homomorphically; every non-owner also folds in a random mask
//! encrypted under the owner's key. The owner decrypts a blinded
//! `M_i Q_1...Q_l + sum of masks`, subtracts the masks it generated for
//! everyone else and publishes the result to the solver. Because every mask
//! enters exactly once positively (inside some owner's decryption) and once
//! negatively (in its generator's published share), the published shares sum
//! exactly to `(sum M_i) Q_1...Q_l`. Right-hand-side shares aggregate the
//! same way with plaintext pairwise masks, revealing only the total `b`.
//!
//! Visiting order is identical for every chain: monomial matrices do not
//! commute, so a per-owner order would break the final sum.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{FromPrimitive, One};

use crate::crypto::{keygen, KeyPair, PublicKey};
use crate::encoding::{
    decrypt_matrix, decrypt_vec, encrypt_matrix, encrypt_vec, mask_bound, sample_mask_int,
    CipherMatrix,
};
use crate::linalg::Matrix;
use crate::runtime::{run_session, Exposure, PartyCtx, PartyId, PartyProgram, Transcript};
use crate::solver::{simplex_solve, LpProblem, LpStatus};
use crate::{Rational, RationalMatrix, RationalVector};

use super::{
    chain_residue_bound, check_magnitudes, check_share_shapes, party_monomial, parse_status,
    payload, recon, recv_parsed, status_payload, transformed_objective, MaskMatrix, PartyShare,
    ProtocolError, ProtocolOutcome, PublishedShare, ReconstructMode, SessionConfig,
    TransformedProblem,
};

/// Plaintext masks for the right-hand-side secure sum are 128-bit integers
/// over the scale denominator; arithmetic is exact rationals, so the range
/// only affects hiding, not correctness.
const B_MASK_BITS: u64 = 127;

/// Runs the multi-party protocol for `l = shares.len() >= 3` parties.
/// Outcomes are returned in party order.
pub fn run_alg4(
    shares: Vec<PartyShare>,
    cfg: &SessionConfig,
) -> Result<(Vec<ProtocolOutcome>, Transcript), ProtocolError> {
    let l = shares.len();
    if l < 3 {
        return Err(ProtocolError::TooFewParties { min: 3, got: l });
    }
    let (_m, n) = check_share_shapes(&shares)?;
    for s in &shares {
        check_magnitudes(s, cfg.magnitude_bound)?;
    }
    let solver = cfg.solver_party;
    if solver.0 < 1 || solver.0 > l {
        return Err(ProtocolError::Shape(format!(
            "solver party {solver} does not exist among {l} parties"
        )));
    }

    let programs: Vec<PartyProgram<'_, ProtocolOutcome>> = shares
        .into_iter()
        .enumerate()
        .map(|(idx, share)| party_program(share, PartyId(idx + 1), l, n, solver, cfg.clone()))
        .collect();
    let (outcomes, transcript) = run_session(programs, cfg.seed)?;
    Ok((outcomes, transcript))
}

fn party_program<'a>(
    share: PartyShare,
    me: PartyId,
    l: usize,
    n: usize,
    solver: PartyId,
    cfg: SessionConfig,
) -> PartyProgram<'a, ProtocolOutcome> {
    Box::new(move |ctx: &mut PartyCtx| {
        let kp = keygen(cfg.key_bits, &mut ctx.rng).map_err(|e| ctx.fail(e))?;
        let pks = exchange_keys(ctx, &kp)?;
        for pk in pks.values() {
            cfg.scale
                .check_capacity(
                    pk,
                    &Rational::from_u64(cfg.magnitude_bound).unwrap(),
                    n,
                    cfg.coeff_max(),
                )
                .map_err(|e| ctx.fail(e))?;
        }
        let q_me = party_monomial(share.transform.clone(), n, &cfg, ctx)?;

        // Chain residues can grow by one coefficient per visit.
        let chain_bound = chain_residue_bound(&cfg, l as u32);

        let mut my_masks: BTreeMap<PartyId, MaskMatrix> = BTreeMap::new();
        let mut my_masked: Option<(RationalMatrix, RationalVector)> = None;

        for owner_idx in 1..=l {
            let owner = PartyId(owner_idx);
            let owner_pk = &pks[&owner];
            let mut current: Option<(CipherMatrix, CipherMatrix)> = None;
            if me == owner {
                let m_enc =
                    encrypt_matrix(&share.constraints, 1, owner_pk, &cfg.scale, &mut ctx.rng)
                        .map_err(|e| ctx.fail(e))?;
                let c_enc = encrypt_vec(&share.objective, 1, owner_pk, &cfg.scale, &mut ctx.rng)
                    .map_err(|e| ctx.fail(e))?;
                current = Some((m_enc, c_enc));
            }
            // Transform leg: every party applies its monomial in the fixed
            // global order. The chain is encrypted under the owner's key, so
            // the unmasked intermediates are opaque to every visitor.
            let mut prev = owner;
            for visitor_idx in 1..=l {
                let visitor = PartyId(visitor_idx);
                if visitor != prev {
                    hop(ctx, me, prev, visitor, &mut current)?;
                }
                if me == visitor {
                    let (m_enc, c_enc) = current.take().expect("visitor holds the chain");
                    let m_enc = m_enc
                        .right_mul_monomial(&q_me, owner_pk)
                        .map_err(|e| ctx.fail(e))?;
                    let c_enc = c_enc
                        .right_mul_monomial(&q_me, owner_pk)
                        .map_err(|e| ctx.fail(e))?;
                    current = Some((m_enc, c_enc));
                }
                prev = visitor;
            }
            // Mask leg: every non-owner blinds the fully transformed share.
            // Masks ride after all monomials so each one survives into the
            // owner's decryption untransformed and cancels exactly against
            // its generator's published subtraction.
            for visitor_idx in 1..=l {
                let visitor = PartyId(visitor_idx);
                if visitor == owner {
                    continue;
                }
                if visitor != prev {
                    hop(ctx, me, prev, visitor, &mut current)?;
                }
                if me == visitor {
                    let (m_enc, c_enc) = current.take().expect("visitor holds the chain");
                    let h = mask_bound(owner_pk.modulus(), &chain_bound, 2 * (l as u64 - 1))
                        .map_err(|e| ctx.fail(e))?;
                    let (r_mask, s_mask) =
                        sample_masks(m_enc.rows(), n, &h, &cfg, cfg.zero_masks, &mut ctx.rng);
                    let r_enc = encrypt_matrix(&r_mask, 1, owner_pk, &cfg.scale, &mut ctx.rng)
                        .map_err(|e| ctx.fail(e))?;
                    let s_enc = encrypt_vec(&s_mask, 1, owner_pk, &cfg.scale, &mut ctx.rng)
                        .map_err(|e| ctx.fail(e))?;
                    let m_enc = m_enc.add(&r_enc, owner_pk).map_err(|e| ctx.fail(e))?;
                    let c_enc = c_enc.add(&s_enc, owner_pk).map_err(|e| ctx.fail(e))?;
                    my_masks.insert(
                        owner,
                        MaskMatrix {
                            owner: me,
                            target: owner,
                            constraints: r_mask,
                            objective: s_mask,
                        },
                    );
                    current = Some((m_enc, c_enc));
                }
                prev = visitor;
            }
            if prev != owner {
                hop(ctx, me, prev, owner, &mut current)?;
            }
            if me == owner {
                let (m_enc, c_enc) = current.take().expect("owner gets its chain back");
                let masked_m =
                    decrypt_matrix(&m_enc, &kp.private, &cfg.scale).map_err(|e| ctx.fail(e))?;
                ctx.log_values("m_share", Exposure::Decrypted, masked_m.cells());
                let masked_c =
                    decrypt_vec(&c_enc, &kp.private, &cfg.scale).map_err(|e| ctx.fail(e))?;
                ctx.log_values("c_share", Exposure::Decrypted, &masked_c);
                my_masked = Some((masked_m, masked_c));
            }
        }

        // Subtract every mask this party generated for other owners.
        let (mut pub_m, mut pub_c) = my_masked.expect("every owner decrypted its chain");
        for mask in my_masks.values() {
            pub_m = pub_m.sub(&mask.constraints).map_err(|e| ctx.fail(e))?;
            pub_c = crate::linalg::sub_vecs(&pub_c, &mask.objective).map_err(|e| ctx.fail(e))?;
        }

        // Right-hand-side secure sum with plaintext pairwise masks.
        let pub_b = rhs_secure_sum(ctx, &share.rhs, &cfg)?;

        let published = PublishedShare {
            constraints: pub_m.clone(),
            objective: pub_c.clone(),
            rhs: pub_b.clone(),
        };

        // Publish to the solver, which aggregates and solves.
        let mut outcome;
        let chain: Vec<PartyId> = (1..=l).map(PartyId).collect();
        if me == solver {
            let mut mq = pub_m;
            let mut cq = pub_c;
            let mut b = pub_b;
            for other in ctx.others().collect::<Vec<_>>() {
                let m_pub = recv_parsed(ctx, other, "m_pub", |r| r.get_rational_matrix())?;
                ctx.log_values("m_pub", Exposure::Received, m_pub.cells());
                let c_pub = recv_parsed(ctx, other, "c_pub", |r| r.get_rational_vec())?;
                ctx.log_values("c_pub", Exposure::Received, &c_pub);
                let b_pub = recv_parsed(ctx, other, "b_pub", |r| r.get_rational_vec())?;
                ctx.log_values("b_pub", Exposure::Received, &b_pub);
                mq = mq.add(&m_pub).map_err(|e| ctx.fail(e))?;
                cq = crate::linalg::add_vecs(&cq, &c_pub).map_err(|e| ctx.fail(e))?;
                b = crate::linalg::add_vecs(&b, &b_pub).map_err(|e| ctx.fail(e))?;
            }
            let problem = LpProblem {
                objective: cq.clone(),
                constraints: mq.clone(),
                rhs: b.clone(),
            };
            let solution = simplex_solve(&problem);
            outcome = ProtocolOutcome::new(me, solution.status);
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
                    for other in ctx.others().collect::<Vec<_>>() {
                        ctx.send(
                            other,
                            "status",
                            status_payload(LpStatus::Optimal, Some(&objective_value)),
                        );
                    }
                    match cfg.mode {
                        ReconstructMode::Reveal => {
                            let x_star = recon::reveal_participant(
                                ctx,
                                &q_me,
                                &chain,
                                solver,
                                Some(y_star),
                            )?;
                            outcome.x_star = Some(x_star);
                        }
                        ReconstructMode::Shares => {
                            let x_share = recon::shares_participant(
                                ctx,
                                &q_me,
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
                    for other in ctx.others().collect::<Vec<_>>() {
                        ctx.send(other, "status", status_payload(status, None));
                    }
                }
            }
        } else {
            ctx.send(solver, "m_pub", payload(|w| w.put_rational_matrix(&pub_m)));
            ctx.send(solver, "c_pub", payload(|w| w.put_rational_vec(&pub_c)));
            ctx.send(solver, "b_pub", payload(|w| w.put_rational_vec(&pub_b)));
            let status_bytes = ctx.recv(solver, "status")?;
            let (status, obj) = parse_status(ctx, &status_bytes)?;
            outcome = ProtocolOutcome::new(me, status);
            outcome.objective = obj;
            if status == LpStatus::Optimal {
                match cfg.mode {
                    ReconstructMode::Reveal => {
                        let x_star =
                            recon::reveal_participant(ctx, &q_me, &chain, solver, None)?;
                        outcome.x_star = Some(x_star);
                    }
                    ReconstructMode::Shares => {
                        let x_share = recon::shares_participant(
                            ctx,
                            &q_me,
                            &chain,
                            solver,
                            None,
                            Some(&kp),
                            &pks,
                            cfg.coeff_max(),
                            cfg.zero_masks,
                        )?;
                        outcome.x_share = Some(x_share);
                    }
                }
            }
        }
        outcome.published = Some(published);
        Ok(outcome)
    })
}

/// Broadcast own public key, collect everyone else's.
fn exchange_keys(
    ctx: &mut PartyCtx,
    kp: &KeyPair,
) -> Result<BTreeMap<PartyId, PublicKey>, crate::runtime::SessionError> {
    for other in ctx.others().collect::<Vec<_>>() {
        ctx.send(other, "pk", payload(|w| w.put_public_key(&kp.public)));
    }
    let mut pks = BTreeMap::from([(ctx.id(), kp.public.clone())]);
    for other in ctx.others().collect::<Vec<_>>() {
        let pk = recv_parsed(ctx, other, "pk", |r| r.get_public_key())?;
        pks.insert(other, pk);
    }
    Ok(pks)
}

/// One chain hop: `prev` forwards the accumulated pair to `next`.
fn hop(
    ctx: &mut PartyCtx,
    me: PartyId,
    prev: PartyId,
    next: PartyId,
    current: &mut Option<(CipherMatrix, CipherMatrix)>,
) -> Result<(), crate::runtime::SessionError> {
    if me == prev {
        let (m_enc, c_enc) = current.take().expect("sender holds the chain");
        ctx.send(next, "m_chain", payload(|w| w.put_cipher_matrix(&m_enc)));
        ctx.send(next, "c_chain", payload(|w| w.put_cipher_matrix(&c_enc)));
    } else if me == next {
        let m_enc = recv_parsed(ctx, prev, "m_chain", |r| r.get_cipher_matrix())?;
        let c_enc = recv_parsed(ctx, prev, "c_chain", |r| r.get_cipher_matrix())?;
        *current = Some((m_enc, c_enc));
    }
    Ok(())
}

/// Uniform masks at the data's scale exponent: integers in `[-h, h]` over
/// the scale denominator.
fn sample_masks(
    rows: usize,
    n: usize,
    h: &BigInt,
    cfg: &SessionConfig,
    zero: bool,
    rng: &mut rand_chacha::ChaCha20Rng,
) -> (RationalMatrix, RationalVector) {
    let delta = BigInt::from(cfg.scale.delta());
    let mut draw = |count: usize| -> Vec<Rational> {
        (0..count)
            .map(|_| {
                if zero {
                    Rational::from_integer(BigInt::from(0))
                } else {
                    Rational::new(sample_mask_int(h, rng), delta.clone())
                }
            })
            .collect()
    };
    let r = Matrix::from_vec(rows, n, draw(rows * n)).unwrap();
    let s = draw(n);
    (r, s)
}

/// Pairwise-mask secure sum for the right-hand-side shares: send one random
/// vector to every other party, publish `b_i - sum(sent) + sum(received)`.
fn rhs_secure_sum(
    ctx: &mut PartyCtx,
    rhs: &[Rational],
    cfg: &SessionConfig,
) -> Result<RationalVector, crate::runtime::SessionError> {
    let delta = BigInt::from(cfg.scale.delta());
    let bound = BigInt::one() << B_MASK_BITS;
    let mut published = rhs.to_vec();
    for other in ctx.others().collect::<Vec<_>>() {
        let mask: Vec<Rational> = (0..rhs.len())
            .map(|_| {
                if cfg.zero_masks {
                    Rational::from_integer(BigInt::from(0))
                } else {
                    Rational::new(sample_mask_int(&bound, &mut ctx.rng), delta.clone())
                }
            })
            .collect();
        ctx.send(other, "b_mask", payload(|w| w.put_rational_vec(&mask)));
        published = crate::linalg::sub_vecs(&published, &mask).map_err(|e| ctx.fail(e))?;
    }
    for other in ctx.others().collect::<Vec<_>>() {
        let mask = recv_parsed(ctx, other, "b_mask", |r| r.get_rational_vec())?;
        ctx.log_values("b_mask", Exposure::Received, &mask);
        published = crate::linalg::add_vecs(&published, &mask).map_err(|e| ctx.fail(e))?;
    }
    Ok(published)
}
