//! Length-prefixed big-endian payload encodings.
//!
//! Every protocol message body is built from these primitives so transcripts
//! are bit-exact and hashable: integers carry a four-byte big-endian length
//! prefix over their magnitude bytes, signed integers an explicit sign byte,
//! and aggregates encode their dimensions ahead of their cells.

use num_bigint::{BigInt, BigUint, Sign};
use thiserror::Error;

use crate::crypto::{Ciphertext, KeyId, PublicKey};
use crate::encoding::CipherMatrix;
use crate::linalg::{Matrix, Monomial};
use crate::{Rational, RationalMatrix};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("payload truncated: needed {needed} more bytes")]
    Truncated { needed: usize },
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("trailing bytes after payload")]
    Trailing,
}

/// Append-only payload writer.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_biguint(&mut self, v: &BigUint) {
        let bytes = v.to_bytes_be();
        self.put_u32(bytes.len() as u32);
        self.buf.extend_from_slice(&bytes);
    }

    pub fn put_bigint(&mut self, v: &BigInt) {
        let sign = match v.sign() {
            Sign::Minus => 2u8,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        };
        self.buf.push(sign);
        self.put_biguint(v.magnitude());
    }

    pub fn put_rational(&mut self, v: &Rational) {
        self.put_bigint(v.numer());
        self.put_bigint(v.denom());
    }

    pub fn put_rational_vec(&mut self, v: &[Rational]) {
        self.put_u32(v.len() as u32);
        for x in v {
            self.put_rational(x);
        }
    }

    pub fn put_rational_matrix(&mut self, m: &RationalMatrix) {
        self.put_u32(m.rows() as u32);
        self.put_u32(m.cols() as u32);
        for x in m.cells() {
            self.put_rational(x);
        }
    }

    pub fn put_public_key(&mut self, pk: &PublicKey) {
        self.put_biguint(pk.modulus());
        self.put_u64(pk.key_id());
    }

    pub fn put_cipher_matrix(&mut self, m: &CipherMatrix) {
        self.put_u32(m.rows() as u32);
        self.put_u32(m.cols() as u32);
        self.put_u32(m.scale_exp());
        self.put_u64(m.key_id());
        for c in m.cells() {
            self.put_biguint(c.value());
        }
    }

    pub fn put_perm(&mut self, perm: &[usize]) {
        self.put_u32(perm.len() as u32);
        for &p in perm {
            self.put_u32(p as u32);
        }
    }

    pub fn put_monomial(&mut self, q: &Monomial<Rational>) {
        self.put_perm(q.perm());
        for c in q.coeffs() {
            self.put_rational(c);
        }
    }
}

/// Sequential payload reader.
pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    /// Errors unless the payload was fully consumed.
    pub fn finish(self) -> Result<(), WireError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(WireError::Trailing)
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() < n {
            return Err(WireError::Truncated {
                needed: n - self.buf.len(),
            });
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    pub fn get_u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn get_u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn get_biguint(&mut self) -> Result<BigUint, WireError> {
        let len = self.get_u32()? as usize;
        Ok(BigUint::from_bytes_be(self.take(len)?))
    }

    pub fn get_bigint(&mut self) -> Result<BigInt, WireError> {
        let sign = self.take(1)?[0];
        let mag = self.get_biguint()?;
        match sign {
            0 => Ok(BigInt::from(0)),
            1 => Ok(BigInt::from_biguint(Sign::Plus, mag)),
            2 => Ok(BigInt::from_biguint(Sign::Minus, mag)),
            other => Err(WireError::Malformed(format!("bad sign byte {other}"))),
        }
    }

    pub fn get_rational(&mut self) -> Result<Rational, WireError> {
        let numer = self.get_bigint()?;
        let denom = self.get_bigint()?;
        if denom.sign() != Sign::Plus {
            return Err(WireError::Malformed("nonpositive denominator".into()));
        }
        Ok(Rational::new(numer, denom))
    }

    pub fn get_rational_vec(&mut self) -> Result<Vec<Rational>, WireError> {
        let len = self.get_u32()? as usize;
        (0..len).map(|_| self.get_rational()).collect()
    }

    pub fn get_rational_matrix(&mut self) -> Result<RationalMatrix, WireError> {
        let rows = self.get_u32()? as usize;
        let cols = self.get_u32()? as usize;
        let cells = (0..rows * cols)
            .map(|_| self.get_rational())
            .collect::<Result<Vec<_>, _>>()?;
        Matrix::from_vec(rows, cols, cells).map_err(|e| WireError::Malformed(e.to_string()))
    }

    pub fn get_public_key(&mut self) -> Result<PublicKey, WireError> {
        let n = self.get_biguint()?;
        let stated = self.get_u64()?;
        let pk = PublicKey::from_modulus(n);
        if pk.key_id() != stated {
            return Err(WireError::Malformed("key id mismatch".into()));
        }
        Ok(pk)
    }

    pub fn get_cipher_matrix(&mut self) -> Result<CipherMatrix, WireError> {
        let rows = self.get_u32()? as usize;
        let cols = self.get_u32()? as usize;
        let scale_exp = self.get_u32()?;
        let key_id: KeyId = self.get_u64()?;
        let cells = (0..rows * cols)
            .map(|_| Ok(Ciphertext::from_parts(self.get_biguint()?, key_id)))
            .collect::<Result<Vec<_>, WireError>>()?;
        CipherMatrix::from_parts(rows, cols, cells, scale_exp, key_id)
            .map_err(|e| WireError::Malformed(e.to_string()))
    }

    pub fn get_perm(&mut self) -> Result<Vec<usize>, WireError> {
        let len = self.get_u32()? as usize;
        (0..len).map(|_| Ok(self.get_u32()? as usize)).collect()
    }

    pub fn get_monomial(&mut self) -> Result<Monomial<Rational>, WireError> {
        let perm = self.get_perm()?;
        let coeffs = perm
            .iter()
            .map(|_| self.get_rational())
            .collect::<Result<Vec<_>, _>>()?;
        Monomial::new(perm, coeffs).map_err(|e| WireError::Malformed(e.to_string()))
    }
}
