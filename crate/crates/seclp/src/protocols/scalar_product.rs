//! Secure two-party scalar product.
//!
//! P1 holds `X`, P2 holds `Y`, both integer vectors. P1 generates a keypair
//! and sends encryptions of its entries; P2 exponentiates them by its own
//! entries, multiplies the results (homomorphic dot product), blinds with a
//! random `r_B` and returns the blinded ciphertext. P1 decrypts `r_A`, so
//! `r_A + r_B = X . Y` exactly while neither vector crosses in the clear.

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};

use crate::crypto::{add_cipher, decrypt, encrypt_with_rng, keygen, scalar_mul, Ciphertext};
use crate::encoding::{mask_bound, residue_of_int, sample_mask_int, signed_of_residue};
use crate::runtime::{run_session, Exposure, PartyCtx, PartyId, PartyProgram, Transcript};
use crate::wire::Writer;
use crate::Rational;

use super::{parse_payload, payload, ProtocolError};

/// Both parties' additive shares of the dot product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarProductOutcome {
    pub r_a: BigInt,
    pub r_b: BigInt,
}

/// Runs the protocol in a deterministic session and returns the two shares
/// plus the transcript.
///
/// `entry_bound` is the public bound both parties check their entries
/// against; it sizes the blinding range so that `r_A` never wraps.
pub fn secure_scalar_product(
    x: &[BigInt],
    y: &[BigInt],
    key_bits: u64,
    entry_bound: u64,
    seed: u64,
) -> Result<(ScalarProductOutcome, Transcript), ProtocolError> {
    if x.len() != y.len() {
        return Err(ProtocolError::Shape(format!(
            "vector lengths {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let bound = BigInt::from(entry_bound);
    if x.iter().any(|v| v.abs() > bound) || y.iter().any(|v| v.abs() > bound) {
        return Err(ProtocolError::MagnitudeBound { bound: entry_bound });
    }
    let len = x.len();
    // |X . Y| <= len * entry_bound^2, known to both parties.
    let product_bound = BigUint::from(len) * BigUint::from(entry_bound).pow(2);

    let x = x.to_vec();
    let y = y.to_vec();

    let p1: PartyProgram<'_, BigInt> = Box::new(move |ctx: &mut PartyCtx| {
        let kp = keygen(key_bits, &mut ctx.rng).map_err(|e| ctx.fail(e))?;
        let pk = kp.public.clone();
        ctx.send(
            PartyId(2),
            "pk",
            payload(|w| w.put_public_key(&pk)),
        );
        let mut w = Writer::new();
        w.put_u32(x.len() as u32);
        for xi in &x {
            let c = encrypt_with_rng(&pk, &residue_of_int(xi, pk.modulus()), &mut ctx.rng)
                .map_err(|e| ctx.fail(e))?;
            w.put_biguint(c.value());
        }
        ctx.send(PartyId(2), "enc_x", w.finish());

        let blinded = ctx.recv(PartyId(2), "enc_w")?;
        let value = parse_payload(ctx, &blinded, |r| r.get_biguint())?;
        let cipher = Ciphertext::from_parts(value, pk.key_id());
        let residue = decrypt(&kp.private, &cipher).map_err(|e| ctx.fail(e))?;
        let r_a = signed_of_residue(&residue, pk.modulus());
        ctx.log_values(
            "r_a",
            Exposure::Decrypted,
            &[Rational::from_integer(r_a.clone())],
        );
        Ok(r_a)
    });

    let p2: PartyProgram<'_, BigInt> = Box::new(move |ctx: &mut PartyCtx| {
        let pk_bytes = ctx.recv(PartyId(1), "pk")?;
        let pk = parse_payload(ctx, &pk_bytes, |r| r.get_public_key())?;
        let enc_bytes = ctx.recv(PartyId(1), "enc_x")?;
        let cells = parse_payload(ctx, &enc_bytes, |r| {
            let len = r.get_u32()? as usize;
            (0..len)
                .map(|_| Ok(Ciphertext::from_parts(r.get_biguint()?, pk.key_id())))
                .collect::<Result<Vec<_>, _>>()
        })?;
        if cells.len() != y.len() {
            return Err(ctx.fail(format!(
                "received {} ciphertexts for a vector of length {}",
                cells.len(),
                y.len()
            )));
        }
        // w = prod c_i^{y_i} encrypts X . Y.
        let mut acc: Option<Ciphertext> = None;
        for (c, yi) in cells.iter().zip(&y) {
            if yi.is_zero() {
                continue;
            }
            let term = scalar_mul(c, yi, &pk).map_err(|e| ctx.fail(e))?;
            acc = Some(match acc {
                None => term,
                Some(prev) => add_cipher(&prev, &term, &pk).map_err(|e| ctx.fail(e))?,
            });
        }
        let w = match acc {
            Some(c) => c,
            None => encrypt_with_rng(&pk, &BigUint::zero(), &mut ctx.rng)
                .map_err(|e| ctx.fail(e))?,
        };
        let h = mask_bound(pk.modulus(), &product_bound, 1).map_err(|e| ctx.fail(e))?;
        let r_b = sample_mask_int(&h, &mut ctx.rng);
        let blind = encrypt_with_rng(&pk, &residue_of_int(&(-&r_b), pk.modulus()), &mut ctx.rng)
            .map_err(|e| ctx.fail(e))?;
        let w_blinded = add_cipher(&w, &blind, &pk).map_err(|e| ctx.fail(e))?;
        ctx.send(
            PartyId(1),
            "enc_w",
            payload(|wr| wr.put_biguint(w_blinded.value())),
        );
        ctx.log_values(
            "r_b",
            Exposure::Local,
            &[Rational::from_integer(r_b.clone())],
        );
        Ok(r_b)
    });

    let (outputs, transcript) = run_session(vec![p1, p2], seed)?;
    let mut it = outputs.into_iter();
    Ok((
        ScalarProductOutcome {
            r_a: it.next().unwrap(),
            r_b: it.next().unwrap(),
        },
        transcript,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn shares_sum_to_dot_product() {
        let (out, _) = secure_scalar_product(
            &ints(&[1, 2, 3]),
            &ints(&[4, 5, 6]),
            256,
            1 << 16,
            7,
        )
        .unwrap();
        assert_eq!(out.r_a + out.r_b, BigInt::from(32));
    }

    #[test]
    fn zero_vector_gives_zero() {
        let (out, _) =
            secure_scalar_product(&ints(&[9, -3, 7]), &ints(&[0, 0, 0]), 256, 1 << 16, 3).unwrap();
        assert_eq!(out.r_a + out.r_b, BigInt::zero());
    }

    #[test]
    fn negative_entries_handled() {
        let (out, _) = secure_scalar_product(&ints(&[1]), &ints(&[-7]), 256, 1 << 16, 11).unwrap();
        assert_eq!(out.r_a + out.r_b, BigInt::from(-7));
    }

    #[test]
    fn rejects_length_mismatch_and_oversized_entries() {
        assert!(matches!(
            secure_scalar_product(&ints(&[1, 2]), &ints(&[1]), 256, 1 << 16, 0),
            Err(ProtocolError::Shape(_))
        ));
        assert!(matches!(
            secure_scalar_product(&ints(&[1 << 40]), &ints(&[1]), 256, 1 << 16, 0),
            Err(ProtocolError::MagnitudeBound { .. })
        ));
    }

    #[test]
    fn transcript_shows_only_ciphertext_flows() {
        let (_, t) = secure_scalar_product(&ints(&[5, -2]), &ints(&[3, 8]), 256, 1 << 16, 5).unwrap();
        assert_eq!(t.received_kinds(PartyId(1)), vec!["enc_w"]);
        assert_eq!(t.received_kinds(PartyId(2)), vec!["enc_x", "pk"]);
        // P2 never decrypts anything.
        assert!(t.decrypted_steps(PartyId(2)).is_empty());
    }
}
