//! Additively homomorphic public-key cryptosystem (Paillier construction).
//!
//! The generator is fixed to `g = n + 1`, so encryption is
//! `c = (1 + m*n) * r^n mod n^2` and decryption uses the closed form
//! `m = L(c^lambda mod n^2) * mu mod n` with `L(u) = (u - 1) / n` and
//! `mu = lambda^-1 mod n`. Multiplying ciphertexts adds plaintexts;
//! raising a ciphertext to an integer power scales its plaintext.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Smallest key size accepted; keeps the property suites fast while ruling
/// out toy moduli that the encoding layer cannot use.
pub const MIN_KEY_BITS: u64 = 128;

/// Default production key size.
pub const DEFAULT_KEY_BITS: u64 = 2048;

const MILLER_RABIN_ROUNDS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("key size {bits} below the {MIN_KEY_BITS}-bit floor")]
    KeyTooSmall { bits: u64 },
    #[error("plaintext out of range [0, n)")]
    PlaintextOutOfRange,
    #[error("nonce is not coprime to the modulus")]
    BadNonce,
    #[error("ciphertext key {found:#x} does not match key {expected:#x}")]
    KeyMismatch { expected: u64, found: u64 },
    #[error("malformed key file: {0}")]
    KeyFormat(String),
}

/// Opaque identifier tying ciphertexts to the key that produced them.
pub type KeyId = u64;

fn fingerprint(n: &BigUint) -> KeyId {
    let digest = Sha256::digest(n.to_bytes_be());
    u64::from_be_bytes(digest[..8].try_into().unwrap())
}

/// Public half of a keypair. The generator `n + 1` is implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    n: BigUint,
    n_squared: BigUint,
    key_id: KeyId,
}

impl PublicKey {
    pub fn from_modulus(n: BigUint) -> Self {
        let key_id = fingerprint(&n);
        let n_squared = &n * &n;
        Self {
            n,
            n_squared,
            key_id,
        }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn modulus_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn generator(&self) -> BigUint {
        &self.n + 1u32
    }

    pub fn key_id(&self) -> KeyId {
        self.key_id
    }

    /// Samples a nonce in `(0, n)` coprime to `n`.
    pub fn random_nonce<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        loop {
            let r = rng.gen_biguint_range(&BigUint::one(), &self.n);
            if r.gcd(&self.n).is_one() {
                return r;
            }
        }
    }
}

/// Private half of a keypair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivateKey {
    lambda: BigUint,
    mu: BigUint,
    n: BigUint,
    n_squared: BigUint,
    key_id: KeyId,
}

impl PrivateKey {
    pub fn key_id(&self) -> KeyId {
        self.key_id
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }
}

#[derive(Debug, Clone)]
pub struct KeyPair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

/// Ciphertext in `[0, n^2)` tagged with its key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    value: BigUint,
    key_id: KeyId,
}

impl Ciphertext {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn key_id(&self) -> KeyId {
        self.key_id
    }

    /// Reassembles a ciphertext received off the wire.
    pub fn from_parts(value: BigUint, key_id: KeyId) -> Self {
        Self { value, key_id }
    }
}

/// Generates a keypair with two distinct equal-bit-length primes.
pub fn keygen<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Result<KeyPair, CryptoError> {
    if bits < MIN_KEY_BITS {
        return Err(CryptoError::KeyTooSmall { bits });
    }
    let half = bits / 2;
    loop {
        let p = gen_prime(half, rng);
        let q = gen_prime(bits - half, rng);
        if p == q {
            continue;
        }
        let n = &p * &q;
        if n.bits() != bits {
            continue;
        }
        let lambda = (&p - 1u32).lcm(&(&q - 1u32));
        // g = n + 1 makes L(g^lambda mod n^2) = lambda, so mu = lambda^-1 mod n.
        let Some(mu) = lambda.modinv(&n) else {
            continue;
        };
        let public = PublicKey::from_modulus(n.clone());
        let private = PrivateKey {
            lambda,
            mu,
            n_squared: public.n_squared.clone(),
            n,
            key_id: public.key_id,
        };
        return Ok(KeyPair { public, private });
    }
}

/// Encrypts `m` under `pk` with the supplied nonce.
pub fn encrypt(pk: &PublicKey, m: &BigUint, nonce: &BigUint) -> Result<Ciphertext, CryptoError> {
    if m >= &pk.n {
        return Err(CryptoError::PlaintextOutOfRange);
    }
    if nonce.is_zero() || nonce >= &pk.n || !nonce.gcd(&pk.n).is_one() {
        return Err(CryptoError::BadNonce);
    }
    // (1 + n)^m = 1 + m*n (mod n^2)
    let gm = (BigUint::one() + m * &pk.n) % &pk.n_squared;
    let rn = nonce.modpow(&pk.n, &pk.n_squared);
    Ok(Ciphertext {
        value: (gm * rn) % &pk.n_squared,
        key_id: pk.key_id,
    })
}

/// Encrypts with a fresh random nonce.
pub fn encrypt_with_rng<R: RngCore + ?Sized>(
    pk: &PublicKey,
    m: &BigUint,
    rng: &mut R,
) -> Result<Ciphertext, CryptoError> {
    let nonce = pk.random_nonce(rng);
    encrypt(pk, m, &nonce)
}

/// Decrypts a ciphertext produced under the paired public key.
pub fn decrypt(sk: &PrivateKey, c: &Ciphertext) -> Result<BigUint, CryptoError> {
    if c.key_id != sk.key_id {
        return Err(CryptoError::KeyMismatch {
            expected: sk.key_id,
            found: c.key_id,
        });
    }
    let u = c.value.modpow(&sk.lambda, &sk.n_squared);
    let l = (u - 1u32) / &sk.n;
    Ok((l * &sk.mu) % &sk.n)
}

/// Homomorphic addition: the product of ciphertexts encrypts the sum.
pub fn add_cipher(a: &Ciphertext, b: &Ciphertext, pk: &PublicKey) -> Result<Ciphertext, CryptoError> {
    if a.key_id != b.key_id || a.key_id != pk.key_id {
        return Err(CryptoError::KeyMismatch {
            expected: pk.key_id,
            found: if a.key_id != pk.key_id { a.key_id } else { b.key_id },
        });
    }
    Ok(Ciphertext {
        value: (&a.value * &b.value) % &pk.n_squared,
        key_id: a.key_id,
    })
}

/// Homomorphic scaling: raising a ciphertext to `k` multiplies the plaintext
/// by `k` in `Z_n`. Negative scalars are reduced modulo `n` first.
pub fn scalar_mul(c: &Ciphertext, k: &BigInt, pk: &PublicKey) -> Result<Ciphertext, CryptoError> {
    if c.key_id != pk.key_id {
        return Err(CryptoError::KeyMismatch {
            expected: pk.key_id,
            found: c.key_id,
        });
    }
    let exp = k.mod_floor(&BigInt::from(pk.n.clone()));
    let exp = exp.to_biguint().expect("mod_floor result is nonnegative");
    Ok(Ciphertext {
        value: c.value.modpow(&exp, &pk.n_squared),
        key_id: c.key_id,
    })
}

/// Serializes a keypair as decimal fields, one per line.
pub fn keypair_to_text(kp: &KeyPair) -> String {
    format!(
        "n={}\nlambda={}\nmu={}\nkey_id={}\n",
        kp.public.n, kp.private.lambda, kp.private.mu, kp.public.key_id
    )
}

/// Serializes the public half only.
pub fn public_key_to_text(pk: &PublicKey) -> String {
    format!("n={}\nkey_id={}\n", pk.n, pk.key_id)
}

/// Parses the output of [`keypair_to_text`].
pub fn keypair_from_text(text: &str) -> Result<KeyPair, CryptoError> {
    let mut n = None;
    let mut lambda = None;
    let mut mu = None;
    let mut key_id = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (field, value) = line
            .split_once('=')
            .ok_or_else(|| CryptoError::KeyFormat(format!("missing `=` in `{line}`")))?;
        let parse_big = |v: &str| {
            v.parse::<BigUint>()
                .map_err(|_| CryptoError::KeyFormat(format!("bad integer in `{field}`")))
        };
        match field {
            "n" => n = Some(parse_big(value)?),
            "lambda" => lambda = Some(parse_big(value)?),
            "mu" => mu = Some(parse_big(value)?),
            "key_id" => {
                key_id = Some(value.parse::<u64>().map_err(|_| {
                    CryptoError::KeyFormat("bad integer in `key_id`".into())
                })?)
            }
            other => return Err(CryptoError::KeyFormat(format!("unknown field `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| CryptoError::KeyFormat("missing field `n`".into()))?;
    let lambda = lambda.ok_or_else(|| CryptoError::KeyFormat("missing field `lambda`".into()))?;
    let mu = mu.ok_or_else(|| CryptoError::KeyFormat("missing field `mu`".into()))?;
    let stated_id = key_id.ok_or_else(|| CryptoError::KeyFormat("missing field `key_id`".into()))?;
    let public = PublicKey::from_modulus(n.clone());
    if public.key_id != stated_id {
        return Err(CryptoError::KeyFormat(
            "key_id does not match modulus fingerprint".into(),
        ));
    }
    let private = PrivateKey {
        lambda,
        mu,
        n_squared: public.n_squared.clone(),
        n,
        key_id: public.key_id,
    };
    Ok(KeyPair { public, private })
}

/// Miller-Rabin probable prime of exactly `bits` bits. The top two bits are
/// forced so that the product of two such primes has full length.
fn gen_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    assert!(bits >= 8, "prime size too small");
    let top = BigUint::from(3u32) << (bits - 2);
    loop {
        let mut candidate = rng.gen_biguint(bits) | &top;
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, rng) {
            return candidate;
        }
    }
}

const SMALL_PRIMES: [u32; 46] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211,
];

fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rng: &mut R) -> bool {
    for p in SMALL_PRIMES {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    // n - 1 = d * 2^s with d odd
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().expect("n > 2 is odd here");
    let d = &n_minus_1 >> s;
    let two = BigUint::from(2u32);
    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
