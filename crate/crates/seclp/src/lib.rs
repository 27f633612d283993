//! Secure collaborative linear programming.
//!
//! This crate solves linear programs whose objective, constraint matrix and
//! right-hand side are partitioned across mutually untrusting parties. The
//! constraint matrix and objective are disguised by a secret monomial
//! (generalized permutation) matrix applied under an additively homomorphic
//! cryptosystem, so an untrusted party can solve the disguised program and
//! the participants can map the solution back without revealing their shares.
//!
//! Main pieces:
//!
//! * [`crypto`]: Paillier keys, encryption and the two homomorphic operations.
//! * [`encoding`]: signed fixed-point embedding of rationals into the
//!   plaintext group, with scale-exponent tracking across matrix operations.
//! * [`linalg`]: exact dense matrix arithmetic and monomial matrix algebra,
//!   generic over the scalar type.
//! * [`solver`]: two-phase simplex over any ordered field scalar, plus the
//!   line-oriented problem file format.
//! * [`runtime`]: deterministic in-process multi-party execution with full
//!   transcript capture.
//! * [`protocols`]: the secure scalar product, the two-party and multi-party
//!   transformation protocols, and solution reconstruction.
//! * [`attack`]: the monomial-enumeration inference attack, usable as an
//!   adversarial audit over protocol transcripts.

pub mod attack;
pub mod crypto;
pub mod encoding;
pub mod linalg;
pub mod num;
pub mod protocols;
pub mod runtime;
pub mod solver;
pub mod wire;

/// Exact rational scalar used by the encrypted pipeline.
pub type Rational = num_rational::BigRational;

/// Dense matrix of exact rationals.
pub type RationalMatrix = linalg::Matrix<Rational>;

/// Vector of exact rationals.
pub type RationalVector = Vec<Rational>;

/// Monomial matrix over exact rationals.
pub type RationalMonomial = linalg::Monomial<Rational>;
