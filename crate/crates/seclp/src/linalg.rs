//! Exact dense matrix/vector arithmetic and monomial matrix algebra.
//!
//! A monomial matrix (generalized permutation matrix) has exactly one nonzero
//! entry per row and per column. With positive entries it maps the nonnegative
//! orthant onto itself, which is what makes it usable as a linear-program
//! disguise: `x >= 0` iff `Q^-1 x >= 0`.

use num_bigint::BigInt;
use num_traits::{FromPrimitive, One};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::num::Scalar;
use crate::Rational;

/// Errors from dimension or structure violations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("monomial coefficient at row {row} is not positive")]
    NonPositiveCoefficient { row: usize },
    #[error("permutation is not a bijection on 0..{dim}")]
    InvalidPermutation { dim: usize },
    #[error("invalid coefficient range [{lo}, {hi}]")]
    InvalidCoefficientRange { lo: u64, hi: u64 },
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyDimensions { rows: usize, cols: usize },
}

/// Dense row-major matrix over a scalar type.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    /// Builds a matrix from a row-major cell vector.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyDimensions { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{} cells", rows * cols),
                found: format!("{} cells", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{c} columns in every row"),
                found: "ragged rows".into(),
            });
        }
        Self::from_vec(r, c, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks(self.cols)
    }

    /// Elementwise sum.
    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Elementwise difference.
    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Dense matrix product.
    pub fn mul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{} rows", self.cols),
                found: format!("{} rows", other.rows),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a.clone() * other[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + t;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[S]) -> Result<Vec<S>, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("vector of length {}", self.cols),
                found: format!("length {}", v.len()),
            });
        }
        Ok(self
            .iter_rows()
            .map(|row| dot(row, v))
            .collect())
    }

    pub fn map<T: Scalar>(&self, f: impl FnMut(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                found: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(())
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.cols + c]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.cols + c]
    }
}

/// Dot product of two equal-length slices.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Elementwise vector sum.
pub fn add_vecs<S: Scalar>(a: &[S], b: &[S]) -> Result<Vec<S>, LinalgError> {
    if a.len() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("length {}", a.len()),
            found: format!("length {}", b.len()),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect())
}

/// Elementwise vector difference.
pub fn sub_vecs<S: Scalar>(a: &[S], b: &[S]) -> Result<Vec<S>, LinalgError> {
    if a.len() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("length {}", a.len()),
            found: format!("length {}", b.len()),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect())
}

/// Monomial matrix stored sparsely as a permutation plus per-row coefficients.
///
/// Row `i` has its single nonzero entry `coeffs[i]` in column `perm[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<S> {
    perm: Vec<usize>,
    coeffs: Vec<S>,
}

impl<S: Scalar> Monomial<S> {
    /// Builds a monomial matrix, validating that `perm` is a bijection and
    /// every coefficient is strictly positive.
    pub fn new(perm: Vec<usize>, coeffs: Vec<S>) -> Result<Self, LinalgError> {
        let n = perm.len();
        if coeffs.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{n} coefficients"),
                found: format!("{}", coeffs.len()),
            });
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(LinalgError::InvalidPermutation { dim: n });
            }
            seen[p] = true;
        }
        for (row, q) in coeffs.iter().enumerate() {
            if *q <= S::zero() {
                return Err(LinalgError::NonPositiveCoefficient { row });
            }
        }
        Ok(Self { perm, coeffs })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            coeffs: vec![S::one(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Dense expansion.
    pub fn dense(&self) -> Matrix<S> {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, self.perm[i])] = self.coeffs[i].clone();
        }
        m
    }

    /// Product with another monomial matrix; the result is again monomial.
    pub fn compose(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("dimension {}", self.dim()),
                found: format!("dimension {}", other.dim()),
            });
        }
        // (AB)[i, other.perm[self.perm[i]]] = a_i * b_{self.perm[i]}
        let perm = self.perm.iter().map(|&p| other.perm[p]).collect();
        let coeffs = self
            .perm
            .iter()
            .zip(&self.coeffs)
            .map(|(&p, a)| a.clone() * other.coeffs[p].clone())
            .collect();
        Ok(Self { perm, coeffs })
    }

    /// Exact inverse; coefficients become reciprocals.
    pub fn invert(&self) -> Self {
        let n = self.dim();
        let mut perm = vec![0; n];
        let mut coeffs = vec![S::one(); n];
        for i in 0..n {
            perm[self.perm[i]] = i;
            coeffs[self.perm[i]] = S::one() / self.coeffs[i].clone();
        }
        Self { perm, coeffs }
    }

    /// Left application to a column vector: `(Qy)_i = q_i * y[perm[i]]`.
    pub fn apply_vec(&self, y: &[S]) -> Result<Vec<S>, LinalgError> {
        if y.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("length {}", self.dim()),
                found: format!("length {}", y.len()),
            });
        }
        Ok(self
            .perm
            .iter()
            .zip(&self.coeffs)
            .map(|(&p, q)| q.clone() * y[p].clone())
            .collect())
    }
}

/// Right-multiplies a rectangular matrix by a monomial matrix: column
/// `perm[i]` of `MQ` is `q_i` times column `i` of `M`.
pub fn right_apply<S: Scalar>(m: &Matrix<S>, q: &Monomial<S>) -> Result<Matrix<S>, LinalgError> {
    if m.cols() != q.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("{} columns", q.dim()),
            found: format!("{} columns", m.cols()),
        });
    }
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..q.dim() {
        let target = q.perm()[i];
        for r in 0..m.rows() {
            out[(r, target)] = q.coeffs()[i].clone() * m[(r, i)].clone();
        }
    }
    Ok(out)
}

/// Right-multiplies a row vector by a monomial matrix: `(cQ)[perm[i]] = q_i * c[i]`.
pub fn right_apply_vec<S: Scalar>(c: &[S], q: &Monomial<S>) -> Result<Vec<S>, LinalgError> {
    if c.len() != q.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("length {}", q.dim()),
            found: format!("length {}", c.len()),
        });
    }
    let mut out = vec![S::zero(); c.len()];
    for i in 0..q.dim() {
        out[q.perm()[i]] = q.coeffs()[i].clone() * c[i].clone();
    }
    Ok(out)
}

/// Samples a monomial matrix with a uniformly random permutation and integer
/// coefficients uniform in `[lo, hi]`.
pub fn gen_monomial<S: Scalar, R: Rng + ?Sized>(
    n: usize,
    coeff_range: (u64, u64),
    rng: &mut R,
) -> Result<Monomial<S>, LinalgError> {
    let (lo, hi) = coeff_range;
    if n == 0 {
        return Err(LinalgError::EmptyDimensions { rows: 0, cols: 0 });
    }
    if lo < 1 || lo > hi {
        return Err(LinalgError::InvalidCoefficientRange { lo, hi });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let coeffs = (0..n)
        .map(|_| {
            let k = rng.gen_range(lo..=hi);
            S::from_u64(k).expect("small integer representable in scalar")
        })
        .collect();
    Monomial::new(perm, coeffs)
}

impl Monomial<Rational> {
    /// Coefficients as integers; errors if any coefficient has a denominator.
    pub fn integer_coeffs(&self) -> Result<Vec<BigInt>, LinalgError> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(row, q)| {
                if q.is_integer() {
                    Ok(q.to_integer())
                } else {
                    Err(LinalgError::NonPositiveCoefficient { row })
                }
            })
            .collect()
    }

    /// Largest coefficient as an integer, for capacity planning.
    pub fn max_coeff(&self) -> BigInt {
        self.coeffs
            .iter()
            .map(|q| q.ceil().to_integer())
            .max()
            .unwrap_or_else(BigInt::one)
    }
}

/// Convenience constructor for rational scalars from integer literals.
pub fn rat(n: i64) -> Rational {
    Rational::from_i64(n).unwrap()
}

/// Convenience constructor for a rational from a numerator/denominator pair.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}
