//! Signed fixed-point embedding of rationals into the plaintext group.
//!
//! A rational `q` at scale exponent `e` is stored as the residue
//! `q * delta^e mod n`, where `delta` is a power of two. Residues below `n/2`
//! decode as nonnegative, the rest as negative, so sign recovery is
//! unambiguous as long as magnitudes stay below `n / (2 * delta^e)`.
//! Homomorphic right-multiplication by a matrix encoded at exponent `f`
//! raises the scale exponent of the product by `f`; monomial transformation
//! coefficients are plain integers (exponent 0) so the exponent is unchanged
//! along the protocol pipelines.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::RngCore;
use thiserror::Error;

use crate::crypto::{
    add_cipher, decrypt, encrypt_with_rng, scalar_mul, Ciphertext, CryptoError, KeyId, PrivateKey,
    PublicKey,
};
use crate::linalg::{Matrix, Monomial};
use crate::{Rational, RationalMatrix};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodingError {
    #[error("magnitude overflow{} (|value|*delta^e exceeds n/2)", at_suffix(.at))]
    MagnitudeOverflow { at: Option<(usize, usize)> },
    #[error("value not representable at this exponent{} (denominator does not divide delta^e)", at_suffix(.at))]
    NotRepresentable { at: Option<(usize, usize)> },
    #[error("scale exponent {exp} exceeds configured maximum {max}")]
    ExponentOverflow { exp: u32, max: u32 },
    #[error("cipher matrices are incompatible: {0}")]
    Incompatible(String),
    #[error("capacity check failed: {0}")]
    Capacity(String),
    #[error("mask range is empty: data bound leaves no room under n/2")]
    MaskRangeEmpty,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

fn at_suffix(at: &Option<(usize, usize)>) -> String {
    match at {
        Some((r, c)) => format!(" at ({r}, {c})"),
        None => String::new(),
    }
}

/// Fixed-point scale parameters shared by every party in a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleConfig {
    /// Base-two logarithm of the scale `delta`.
    pub delta_log2: u32,
    /// Largest scale exponent any ciphertext may reach.
    pub max_exp: u32,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            delta_log2: 20,
            max_exp: 3,
        }
    }
}

impl ScaleConfig {
    pub fn new(delta_log2: u32, max_exp: u32) -> Self {
        Self { delta_log2, max_exp }
    }

    /// The scale base `delta = 2^delta_log2`.
    pub fn delta(&self) -> BigUint {
        BigUint::one() << self.delta_log2
    }

    /// `delta^e`.
    pub fn delta_pow(&self, e: u32) -> BigUint {
        BigUint::one() << (self.delta_log2 as u64 * e as u64)
    }

    /// Aborts the pipeline if the configured scale cannot hold the session's
    /// worst case: `delta^max_exp * max_magnitude * n_dim * coeff_max^max_exp`
    /// must stay below `n/2`.
    pub fn check_capacity(
        &self,
        pk: &PublicKey,
        max_magnitude: &Rational,
        n_dim: usize,
        coeff_max: u64,
    ) -> Result<(), EncodingError> {
        let mag = max_magnitude.abs().ceil().to_integer().to_biguint().unwrap();
        let worst = self.delta_pow(self.max_exp)
            * mag.max(BigUint::one())
            * BigUint::from(n_dim.max(1))
            * BigUint::from(coeff_max).pow(self.max_exp);
        let window = signed_window(pk.modulus());
        if worst >= window {
            return Err(EncodingError::Capacity(format!(
                "worst-case magnitude needs {} bits, modulus window has {}",
                worst.bits(),
                window.bits()
            )));
        }
        Ok(())
    }
}

/// Largest magnitude representable with unambiguous sign: `(n - 1) / 2`.
pub fn signed_window(n: &BigUint) -> BigUint {
    (n - 1u32) >> 1
}

/// Maps a signed integer into `[0, n)`.
pub fn residue_of_int(v: &BigInt, n: &BigUint) -> BigUint {
    v.mod_floor(&BigInt::from(n.clone()))
        .to_biguint()
        .expect("mod_floor is nonnegative")
}

/// Interprets a residue in `[0, n)` as a signed integer in `(-n/2, n/2]`.
pub fn signed_of_residue(v: &BigUint, n: &BigUint) -> BigInt {
    if v <= &signed_window(n) {
        BigInt::from(v.clone())
    } else {
        BigInt::from(v.clone()) - BigInt::from(n.clone())
    }
}

/// A plaintext-group residue with its scale exponent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedValue {
    pub residue: BigUint,
    pub scale_exp: u32,
}

/// Encodes a rational at scale exponent `e`: nonnegative `q` maps to
/// `q * delta^e`, negative `q` to `n + q * delta^e`.
pub fn encode_signed(
    q: &Rational,
    e: u32,
    pk: &PublicKey,
    cfg: &ScaleConfig,
) -> Result<BigUint, EncodingError> {
    encode_at(q, e, pk, cfg, None)
}

fn encode_at(
    q: &Rational,
    e: u32,
    pk: &PublicKey,
    cfg: &ScaleConfig,
    at: Option<(usize, usize)>,
) -> Result<BigUint, EncodingError> {
    let scaled = q * Rational::from_integer(BigInt::from(cfg.delta_pow(e)));
    if !scaled.is_integer() {
        return Err(EncodingError::NotRepresentable { at });
    }
    let scaled = scaled.to_integer();
    let window = BigInt::from(signed_window(pk.modulus()));
    if scaled.abs() > window {
        return Err(EncodingError::MagnitudeOverflow { at });
    }
    Ok(residue_of_int(&scaled, pk.modulus()))
}

/// Inverse of [`encode_signed`] on its valid domain.
pub fn decode_signed(v: &BigUint, e: u32, n: &BigUint, cfg: &ScaleConfig) -> Rational {
    let signed = signed_of_residue(v, n);
    Rational::new(signed, BigInt::from(cfg.delta_pow(e)))
}

/// Matrix of ciphertexts sharing one key and one scale exponent.
#[derive(Debug, Clone)]
pub struct CipherMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<Ciphertext>,
    scale_exp: u32,
    key_id: KeyId,
}

impl CipherMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scale_exp(&self) -> u32 {
        self.scale_exp
    }

    pub fn key_id(&self) -> KeyId {
        self.key_id
    }

    pub fn cells(&self) -> &[Ciphertext] {
        &self.cells
    }

    pub fn cell(&self, r: usize, c: usize) -> &Ciphertext {
        &self.cells[r * self.cols + c]
    }

    /// Reassembles a matrix received off the wire.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        cells: Vec<Ciphertext>,
        scale_exp: u32,
        key_id: KeyId,
    ) -> Result<Self, EncodingError> {
        if rows == 0 || cols == 0 || cells.len() != rows * cols {
            return Err(EncodingError::Incompatible(format!(
                "{}x{} shape with {} cells",
                rows,
                cols,
                cells.len()
            )));
        }
        if cells.iter().any(|c| c.key_id() != key_id) {
            return Err(EncodingError::Incompatible("mixed key ids".into()));
        }
        Ok(Self {
            rows,
            cols,
            cells,
            scale_exp,
            key_id,
        })
    }

    /// Cellwise homomorphic sum; both operands must share key, exponent and shape.
    pub fn add(&self, other: &Self, pk: &PublicKey) -> Result<Self, EncodingError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(EncodingError::Incompatible(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.scale_exp != other.scale_exp {
            return Err(EncodingError::Incompatible(format!(
                "scale exponents {} vs {}",
                self.scale_exp, other.scale_exp
            )));
        }
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| add_cipher(a, b, pk))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            cells,
            scale_exp: self.scale_exp,
            key_id: self.key_id,
        })
    }

    /// Homomorphic right-multiplication by a monomial matrix with integer
    /// coefficients. Column `perm[k]` of the result is cell `k` of the input
    /// raised to `q_k`, so each output cell costs exactly one ciphertext
    /// exponentiation, and the scale exponent is unchanged (integer
    /// multipliers live at exponent zero).
    pub fn right_mul_monomial(
        &self,
        q: &Monomial<Rational>,
        pk: &PublicKey,
    ) -> Result<Self, EncodingError> {
        if self.cols != q.dim() {
            return Err(EncodingError::Incompatible(format!(
                "{} columns vs monomial dimension {}",
                self.cols,
                q.dim()
            )));
        }
        let coeffs = q
            .integer_coeffs()
            .map_err(|e| EncodingError::Incompatible(e.to_string()))?;
        let mut cells = vec![None; self.rows * self.cols];
        for (k, coeff) in coeffs.iter().enumerate() {
            let target = q.perm()[k];
            for r in 0..self.rows {
                let scaled = scalar_mul(self.cell(r, k), coeff, pk)?;
                cells[r * self.cols + target] = Some(scaled);
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            cells: cells.into_iter().map(Option::unwrap).collect(),
            scale_exp: self.scale_exp,
            key_id: self.key_id,
        })
    }

    /// Homomorphic left-multiplication by a plaintext row vector encoded at
    /// exponent `mult_exp`: output cell `j` decrypts to `sum_k c_k * M_kj`.
    /// The scale exponent of the result is the sum of both exponents.
    pub fn left_mul_plain_vec(
        &self,
        c: &[Rational],
        mult_exp: u32,
        pk: &PublicKey,
        cfg: &ScaleConfig,
    ) -> Result<Self, EncodingError> {
        if self.rows != c.len() {
            return Err(EncodingError::Incompatible(format!(
                "{} rows vs vector length {}",
                self.rows,
                c.len()
            )));
        }
        let out_exp = self.scale_exp + mult_exp;
        if out_exp > cfg.max_exp {
            return Err(EncodingError::ExponentOverflow {
                exp: out_exp,
                max: cfg.max_exp,
            });
        }
        let factors = c
            .iter()
            .enumerate()
            .map(|(k, v)| {
                Ok(signed_of_residue(
                    &encode_at(v, mult_exp, pk, cfg, Some((0, k)))?,
                    pk.modulus(),
                ))
            })
            .collect::<Result<Vec<_>, EncodingError>>()?;
        let mut cells = Vec::with_capacity(self.cols);
        for j in 0..self.cols {
            let mut acc: Option<Ciphertext> = None;
            for (k, factor) in factors.iter().enumerate() {
                if factor.is_zero() {
                    continue;
                }
                let term = scalar_mul(self.cell(k, j), factor, pk)?;
                acc = Some(match acc {
                    None => term,
                    Some(prev) => add_cipher(&prev, &term, pk)?,
                });
            }
            let cell = match acc {
                Some(cell) => cell,
                None => scalar_mul(self.cell(0, j), &BigInt::zero(), pk)?,
            };
            cells.push(cell);
        }
        Ok(Self {
            rows: 1,
            cols: self.cols,
            cells,
            scale_exp: out_exp,
            key_id: self.key_id,
        })
    }

    /// General homomorphic right-multiplication by a plaintext rational
    /// matrix encoded at exponent `mult_exp`. Each output cell is a product
    /// of input cells raised to encoded multipliers, so the result's scale
    /// exponent is the sum of both exponents.
    pub fn right_mul_plain(
        &self,
        plain: &RationalMatrix,
        mult_exp: u32,
        pk: &PublicKey,
        cfg: &ScaleConfig,
    ) -> Result<Self, EncodingError> {
        if self.cols != plain.rows() {
            return Err(EncodingError::Incompatible(format!(
                "{} columns vs {} rows",
                self.cols,
                plain.rows()
            )));
        }
        let out_exp = self.scale_exp + mult_exp;
        if out_exp > cfg.max_exp {
            return Err(EncodingError::ExponentOverflow {
                exp: out_exp,
                max: cfg.max_exp,
            });
        }
        let mut residues = Vec::with_capacity(plain.rows() * plain.cols());
        for k in 0..plain.rows() {
            for j in 0..plain.cols() {
                residues.push(signed_of_residue(
                    &encode_at(&plain[(k, j)], mult_exp, pk, cfg, Some((k, j)))?,
                    pk.modulus(),
                ));
            }
        }
        let mut cells = Vec::with_capacity(self.rows * plain.cols());
        for r in 0..self.rows {
            for j in 0..plain.cols() {
                let mut acc: Option<Ciphertext> = None;
                for k in 0..self.cols {
                    let factor = &residues[k * plain.cols() + j];
                    if factor.is_zero() {
                        continue;
                    }
                    let term = scalar_mul(self.cell(r, k), factor, pk)?;
                    acc = Some(match acc {
                        None => term,
                        Some(prev) => add_cipher(&prev, &term, pk)?,
                    });
                }
                let cell = match acc {
                    Some(c) => c,
                    // All multipliers zero: encrypt a fresh zero.
                    None => scalar_mul(self.cell(r, 0), &BigInt::zero(), pk)?,
                };
                cells.push(cell);
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: plain.cols(),
            cells,
            scale_exp: out_exp,
            key_id: self.key_id,
        })
    }
}

/// Encrypts a rational matrix elementwise at scale exponent `e`, choosing a
/// fresh nonce per cell.
pub fn encrypt_matrix<R: RngCore + ?Sized>(
    m: &RationalMatrix,
    e: u32,
    pk: &PublicKey,
    cfg: &ScaleConfig,
    rng: &mut R,
) -> Result<CipherMatrix, EncodingError> {
    if e > cfg.max_exp {
        return Err(EncodingError::ExponentOverflow {
            exp: e,
            max: cfg.max_exp,
        });
    }
    let mut cells = Vec::with_capacity(m.rows() * m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let residue = encode_at(&m[(r, c)], e, pk, cfg, Some((r, c)))?;
            cells.push(encrypt_with_rng(pk, &residue, rng)?);
        }
    }
    Ok(CipherMatrix {
        rows: m.rows(),
        cols: m.cols(),
        cells,
        scale_exp: e,
        key_id: pk.key_id(),
    })
}

/// Encrypts a vector as a 1-row cipher matrix.
pub fn encrypt_vec<R: RngCore + ?Sized>(
    v: &[Rational],
    e: u32,
    pk: &PublicKey,
    cfg: &ScaleConfig,
    rng: &mut R,
) -> Result<CipherMatrix, EncodingError> {
    let m = Matrix::from_vec(1, v.len(), v.to_vec())
        .map_err(|err| EncodingError::Incompatible(err.to_string()))?;
    encrypt_matrix(&m, e, pk, cfg, rng)
}

/// Decrypts and decodes a cipher matrix at its tracked scale exponent.
pub fn decrypt_matrix(
    c: &CipherMatrix,
    sk: &PrivateKey,
    cfg: &ScaleConfig,
) -> Result<RationalMatrix, EncodingError> {
    if c.scale_exp > cfg.max_exp {
        return Err(EncodingError::ExponentOverflow {
            exp: c.scale_exp,
            max: cfg.max_exp,
        });
    }
    let mut data = Vec::with_capacity(c.cells.len());
    for cell in &c.cells {
        let residue = decrypt(sk, cell)?;
        data.push(decode_signed(&residue, c.scale_exp, sk.modulus(), cfg));
    }
    Matrix::from_vec(c.rows, c.cols, data).map_err(|e| EncodingError::Incompatible(e.to_string()))
}

/// Decrypts a 1-row cipher matrix into a vector.
pub fn decrypt_vec(
    c: &CipherMatrix,
    sk: &PrivateKey,
    cfg: &ScaleConfig,
) -> Result<Vec<Rational>, EncodingError> {
    Ok(decrypt_matrix(c, sk, cfg)?.cells().to_vec())
}

/// Largest mask magnitude `h` such that a value bounded by `data_bound`
/// plus `parts` masks drawn from `[-h, h]` still decodes unambiguously.
pub fn mask_bound(
    n: &BigUint,
    data_bound: &BigUint,
    parts: u64,
) -> Result<BigInt, EncodingError> {
    let window = signed_window(n);
    if data_bound >= &window || parts == 0 {
        return Err(EncodingError::MaskRangeEmpty);
    }
    let h = (&window - data_bound) / BigUint::from(parts);
    if h.is_zero() {
        return Err(EncodingError::MaskRangeEmpty);
    }
    Ok(BigInt::from(h))
}

/// Samples a signed integer uniformly from `[-bound, bound]`.
pub fn sample_mask_int<R: RngCore + ?Sized>(bound: &BigInt, rng: &mut R) -> BigInt {
    use num_bigint::RandBigInt;
    rng.gen_bigint_range(&(-bound.clone()), &(bound + 1))
}

impl EncodedValue {
    pub fn decode(&self, n: &BigUint, cfg: &ScaleConfig) -> Rational {
        decode_signed(&self.residue, self.scale_exp, n, cfg)
    }
}
