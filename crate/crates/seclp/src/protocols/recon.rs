//! Solution reconstruction over a chain of monomial holders.
//!
//! The disguised program's optimum `y*` maps back through the composed
//! transformation: `x* = Q_{c1} Q_{c2} ... Q_{cl} y*`, applied rightmost
//! first. In reveal mode the intermediate vector walks the chain in
//! plaintext and the final holder broadcasts `x*`. In shares mode every
//! exchange happens under the current holder's key: the monomial owner
//! applies its matrix homomorphically and subtracts a fresh mask, keeping
//! the mask sum as its own additive share, so the parties end with vectors
//! summing to `x*` and nobody sees the whole solution.
//!
//! Shares are carried as integer numerator vectors over one public common
//! denominator (derived from `y*`), so every monomial application stays in
//! exact integer arithmetic under encryption.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::crypto::{decrypt, encrypt_with_rng, scalar_mul, Ciphertext, KeyPair, PublicKey};
use crate::encoding::{residue_of_int, sample_mask_int, signed_of_residue};
use crate::runtime::{Exposure, PartyCtx, PartyId, SessionError};
use crate::{Rational, RationalMonomial, RationalVector};

use super::{common_denominator, max_bits, parse_payload, payload};

/// Message kinds used by reconstruction; exposed so transcript tests can
/// whitelist them.
pub const KIND_RECON_V: &str = "recon_v";
pub const KIND_RECON_DEN: &str = "recon_den";
pub const KIND_RECON_ENC: &str = "recon_enc";
pub const KIND_RECON_MASKED: &str = "recon_masked";
pub const KIND_X_STAR: &str = "x_star";

/// Reveal-mode participant. `chain` lists the monomial owners in composition
/// order (`x* = Q_chain[0] ... Q_chain[last] y*`); the rightmost owner
/// transforms first. Returns `x*`.
pub(crate) fn reveal_participant(
    ctx: &mut PartyCtx,
    my_q: &RationalMonomial,
    chain: &[PartyId],
    solver: PartyId,
    y_star: Option<RationalVector>,
) -> Result<RationalVector, SessionError> {
    let me = ctx.id();
    let mut holder = solver;
    let mut current: Option<RationalVector> = if me == solver { y_star } else { None };
    for &owner in chain.iter().rev() {
        if holder != owner {
            if me == holder {
                let v = current.take().expect("holder carries the vector");
                ctx.send(owner, KIND_RECON_V, payload(|w| w.put_rational_vec(&v)));
            } else if me == owner {
                let bytes = ctx.recv(holder, KIND_RECON_V)?;
                let v = parse_payload(ctx, &bytes, |r| r.get_rational_vec())?;
                ctx.log_values(KIND_RECON_V, Exposure::Received, &v);
                current = Some(v);
            }
        }
        if me == owner {
            let v = current.take().expect("owner holds the vector at its turn");
            current = Some(my_q.apply_vec(&v).map_err(|e| ctx.fail(e))?);
        }
        holder = owner;
    }
    // The first chain entry now holds x* and broadcasts it.
    if me == holder {
        let x = current.expect("final holder has x*");
        for other in ctx.others().collect::<Vec<_>>() {
            ctx.send(other, KIND_X_STAR, payload(|w| w.put_rational_vec(&x)));
        }
        ctx.log_values(KIND_X_STAR, Exposure::Local, &x);
        Ok(x)
    } else {
        let bytes = ctx.recv(holder, KIND_X_STAR)?;
        let x = parse_payload(ctx, &bytes, |r| r.get_rational_vec())?;
        ctx.log_values(KIND_X_STAR, Exposure::Received, &x);
        Ok(x)
    }
}

/// Shares-mode participant. Every party returns its additive share of `x*`.
///
/// `keypair` must be present for any party that can hold a share before the
/// last stage (the solver always; every party in the multi-party protocol).
/// `public_keys` maps each party to its encryption key. Masks are budgeted
/// from the smallest key window, the broadcast share magnitude and the
/// worst-case coefficient growth so chained masked values always decode
/// unambiguously; the budget is a deterministic function of public data, so
/// every party derives the same one.
#[allow(clippy::too_many_arguments)]
pub(crate) fn shares_participant(
    ctx: &mut PartyCtx,
    my_q: &RationalMonomial,
    chain: &[PartyId],
    solver: PartyId,
    y_star: Option<RationalVector>,
    keypair: Option<&KeyPair>,
    public_keys: &BTreeMap<PartyId, PublicKey>,
    coeff_max: u64,
    zero_masks: bool,
) -> Result<RationalVector, SessionError> {
    let me = ctx.id();
    let n = my_q.dim();

    // The solver derives the common denominator and magnitude of y*'s
    // integer form and broadcasts both.
    let denominator: BigInt;
    let value_bits: u64;
    let mut my_ints: Option<Vec<BigInt>> = None;
    if me == solver {
        let y = y_star.expect("solver supplies y*");
        let (ints, den) = common_denominator(&y);
        let bits = max_bits(&ints);
        for other in ctx.others().collect::<Vec<_>>() {
            ctx.send(
                other,
                KIND_RECON_DEN,
                payload(|w| {
                    w.put_bigint(&den);
                    w.put_u64(bits);
                }),
            );
        }
        denominator = den;
        value_bits = bits;
        my_ints = Some(ints);
    } else {
        let bytes = ctx.recv(solver, KIND_RECON_DEN)?;
        let (den, bits) = parse_payload(ctx, &bytes, |r| {
            let den = r.get_bigint()?;
            let bits = r.get_u64()?;
            Ok((den, bits))
        })?;
        ctx.log_values(
            KIND_RECON_DEN,
            Exposure::Received,
            &[Rational::from_integer(den.clone())],
        );
        denominator = den;
        value_bits = bits;
    }

    let windows: Vec<BigUint> = public_keys
        .values()
        .map(|pk| crate::encoding::signed_window(pk.modulus()))
        .collect();
    let value_bound = BigUint::from(1u32) << value_bits;
    let budget = super::recon_mask_budget(&windows, &value_bound, chain.len() as u32, coeff_max)
        .map_err(|e| ctx.fail(e))?;

    // Holder set starts at the solver and grows by each stage's owner.
    let mut holders: Vec<PartyId> = vec![solver];
    let mask_bound = BigInt::from(budget);

    for &owner in chain.iter().rev() {
        let mut accumulated: Vec<BigInt> = vec![BigInt::zero(); n];
        let exchange_holders: Vec<PartyId> =
            holders.iter().copied().filter(|&h| h != owner).collect();
        for holder in exchange_holders {
            if me == holder {
                let ints = my_ints.as_ref().expect("holder has a share");
                let kp = keypair.expect("holder needs its keypair to exchange");
                let mut w = crate::wire::Writer::new();
                w.put_u32(ints.len() as u32);
                for v in ints {
                    let c = encrypt_with_rng(
                        &kp.public,
                        &residue_of_int(v, kp.public.modulus()),
                        &mut ctx.rng,
                    )
                    .map_err(|e| ctx.fail(e))?;
                    w.put_biguint(c.value());
                }
                ctx.send(owner, KIND_RECON_ENC, w.finish());
                let bytes = ctx.recv(owner, KIND_RECON_MASKED)?;
                let cells = parse_payload(ctx, &bytes, |r| {
                    let len = r.get_u32()? as usize;
                    (0..len)
                        .map(|_| Ok(Ciphertext::from_parts(r.get_biguint()?, kp.public.key_id())))
                        .collect::<Result<Vec<_>, _>>()
                })?;
                let mut new_ints = Vec::with_capacity(cells.len());
                for c in &cells {
                    let residue = decrypt(&kp.private, c).map_err(|e| ctx.fail(e))?;
                    new_ints.push(signed_of_residue(&residue, kp.public.modulus()));
                }
                ctx.log_values(
                    "x_share",
                    Exposure::Decrypted,
                    &new_ints
                        .iter()
                        .map(|v| Rational::from_integer(v.clone()))
                        .collect::<Vec<_>>(),
                );
                my_ints = Some(new_ints);
            } else if me == owner {
                let holder_pk = &public_keys[&holder];
                let bytes = ctx.recv(holder, KIND_RECON_ENC)?;
                let cells = parse_payload(ctx, &bytes, |r| {
                    let len = r.get_u32()? as usize;
                    (0..len)
                        .map(|_| {
                            Ok(Ciphertext::from_parts(r.get_biguint()?, holder_pk.key_id()))
                        })
                        .collect::<Result<Vec<_>, _>>()
                })?;
                if cells.len() != n {
                    return Err(ctx.fail(format!(
                        "share vector length {} does not match dimension {n}",
                        cells.len()
                    )));
                }
                // Homomorphic monomial application plus mask subtraction.
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    let src = &cells[my_q.perm()[i]];
                    let coeff = my_q.coeffs()[i]
                        .to_integer();
                    let moved = scalar_mul(src, &coeff, holder_pk).map_err(|e| ctx.fail(e))?;
                    let t = if zero_masks {
                        BigInt::zero()
                    } else {
                        sample_mask_int(&mask_bound, &mut ctx.rng)
                    };
                    let blind = encrypt_with_rng(
                        holder_pk,
                        &residue_of_int(&(-&t), holder_pk.modulus()),
                        &mut ctx.rng,
                    )
                    .map_err(|e| ctx.fail(e))?;
                    let masked = crate::crypto::add_cipher(&moved, &blind, holder_pk)
                        .map_err(|e| ctx.fail(e))?;
                    accumulated[i] += &t;
                    out.push(masked);
                }
                let mut w = crate::wire::Writer::new();
                w.put_u32(out.len() as u32);
                for c in &out {
                    w.put_biguint(c.value());
                }
                ctx.send(holder, KIND_RECON_MASKED, w.finish());
            }
        }
        if me == owner {
            // Own previous share (if any) transforms locally; mask sums join it.
            let own_prev = my_ints.take().unwrap_or_else(|| vec![BigInt::zero(); n]);
            let moved: Vec<BigInt> = (0..n)
                .map(|i| {
                    let coeff = my_q.coeffs()[i].to_integer();
                    &own_prev[my_q.perm()[i]] * coeff
                })
                .collect();
            my_ints = Some(
                moved
                    .into_iter()
                    .zip(&accumulated)
                    .map(|(m, t)| m + t)
                    .collect(),
            );
        }
        if !holders.contains(&owner) {
            holders.push(owner);
            holders.sort();
        }
    }

    let ints = my_ints.unwrap_or_else(|| vec![BigInt::zero(); n]);
    Ok(ints
        .into_iter()
        .map(|v| Rational::new(v, denominator.clone()))
        .collect())
}
