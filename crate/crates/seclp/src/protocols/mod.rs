//! The secure transformation protocols.
//!
//! Four protocols run over the [`crate::runtime`] session machinery:
//!
//! * [`secure_scalar_product`]: two parties end with additive shares of the
//!   dot product of their private integer vectors.
//! * [`run_alg2`]: objective holder and constraint holder jointly disguise
//!   the program with a monomial matrix `Q1 + Q2` built over a shared
//!   permutation; the constraint holder solves.
//! * [`run_alg3`]: two parties with arbitrary additive shares of the whole
//!   program compose their private monomials `Q2 * Q1` under the solver's
//!   key; the solver decrypts only the fully transformed program.
//! * [`run_alg4`]: three or more parties chain every share through every
//!   party's monomial under the owner's key, blinded with random masks that
//!   cancel exactly in the final aggregation.
//!
//! Solution reconstruction is shared: `reveal` mode walks the monomial chain
//! in plaintext so every party learns `x*`; `shares` mode applies each
//! monomial homomorphically under the current holder's key with fresh masks,
//! leaving each party with an additive share of `x*` and nobody with the
//! whole vector.

mod alg2;
mod alg3;
mod alg4;
pub mod partition;
mod recon;
mod scalar_product;

pub use alg2::{run_alg2, Alg2Inputs, ALG2_SOLVER};
pub use alg3::run_alg3;
pub use alg4::run_alg4;
pub use partition::{format_partition, parse_partition, PartitionFile};
pub use scalar_product::{secure_scalar_product, ScalarProductOutcome};

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::crypto::CryptoError;
use crate::encoding::{EncodingError, ScaleConfig};
use crate::linalg::LinalgError;
use crate::runtime::{PartyCtx, PartyId, SessionError};
use crate::solver::{LpStatus, SolverError};
use crate::wire::{Reader, WireError, Writer};
use crate::{Rational, RationalMatrix, RationalMonomial, RationalVector};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("protocol requires at least {min} parties, got {got}")]
    TooFewParties { min: usize, got: usize },
    #[error("party shares disagree in shape: {0}")]
    Shape(String),
    #[error("input magnitude exceeds the declared session bound {bound}")]
    MagnitudeBound { bound: u64 },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// How the optimal solution is handed back to the participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructMode {
    /// Every party learns the full original solution `x*`.
    Reveal,
    /// Parties end with additive shares of `x*`; nobody holds it whole.
    Shares,
}

/// Session-wide parameters agreed out of band by all parties.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub key_bits: u64,
    pub scale: ScaleConfig,
    /// Inclusive range monomial coefficients are drawn from.
    pub coeff_range: (u64, u64),
    /// Public bound on the magnitude of any input entry; each party checks
    /// its own shares against it and the mask budget is derived from it.
    pub magnitude_bound: u64,
    pub seed: u64,
    pub solver_party: PartyId,
    pub mode: ReconstructMode,
    /// Test hook: force every blinding mask to zero.
    pub zero_masks: bool,
}

impl SessionConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            key_bits: 2048,
            scale: ScaleConfig::default(),
            coeff_range: (1, 1 << 16),
            magnitude_bound: 1 << 20,
            seed,
            solver_party: PartyId(1),
            mode: ReconstructMode::Reveal,
            zero_masks: false,
        }
    }

    /// Small keys and scales sized for fast property suites.
    pub fn for_tests(seed: u64) -> Self {
        Self {
            key_bits: 256,
            scale: ScaleConfig::new(8, 3),
            coeff_range: (1, 64),
            magnitude_bound: 1 << 12,
            seed,
            solver_party: PartyId(1),
            mode: ReconstructMode::Reveal,
            zero_masks: false,
        }
    }

    pub fn coeff_max(&self) -> u64 {
        self.coeff_range.1
    }
}

/// One party's additive share of the collaborative program, plus optionally
/// a pinned transformation matrix (sampled from the session randomness when
/// absent).
#[derive(Debug, Clone)]
pub struct PartyShare {
    pub constraints: RationalMatrix,
    pub objective: RationalVector,
    pub rhs: RationalVector,
    pub transform: Option<RationalMonomial>,
}

impl PartyShare {
    pub fn new(
        constraints: RationalMatrix,
        objective: RationalVector,
        rhs: RationalVector,
    ) -> Self {
        Self {
            constraints,
            objective,
            rhs,
            transform: None,
        }
    }

    fn dims(&self) -> (usize, usize) {
        (self.constraints.rows(), self.constraints.cols())
    }
}

/// Validates that all shares describe the same problem shape.
pub(crate) fn check_share_shapes(shares: &[PartyShare]) -> Result<(usize, usize), ProtocolError> {
    let (m, n) = shares[0].dims();
    for (i, s) in shares.iter().enumerate() {
        let (mr, nr) = s.dims();
        if mr != m || nr != n || s.objective.len() != n || s.rhs.len() != m {
            return Err(ProtocolError::Shape(format!(
                "share {} is {}x{} with |c|={} |b|={}, expected {}x{}",
                i + 1,
                mr,
                nr,
                s.objective.len(),
                s.rhs.len(),
                m,
                n
            )));
        }
    }
    Ok((m, n))
}

/// Validates every entry of a share against the declared magnitude bound.
pub(crate) fn check_magnitudes(share: &PartyShare, bound: u64) -> Result<(), ProtocolError> {
    let limit = Rational::from_integer(bound.into());
    let all = share
        .constraints
        .cells()
        .iter()
        .chain(&share.objective)
        .chain(&share.rhs);
    for v in all {
        if v.abs() > limit {
            return Err(ProtocolError::MagnitudeBound { bound });
        }
    }
    Ok(())
}

/// Blinding material one party generated for another party's chain: a
/// random matrix for the constraint share and a random vector for the
/// objective share, entered once under encryption and cancelled once in the
/// generator's published share.
#[derive(Debug, Clone)]
pub struct MaskMatrix {
    /// Party that generated (and later subtracts) the masks.
    pub owner: PartyId,
    /// Party whose chain the masks blind.
    pub target: PartyId,
    pub constraints: RationalMatrix,
    pub objective: RationalVector,
}

/// The disguised program as held by the solver party.
#[derive(Debug, Clone)]
pub struct TransformedProblem {
    pub mq: RationalMatrix,
    pub cq: RationalVector,
    pub b: RationalVector,
    pub solver_party: PartyId,
}

/// A party's published masked share in the multi-party aggregation.
#[derive(Debug, Clone)]
pub struct PublishedShare {
    pub constraints: RationalMatrix,
    pub objective: RationalVector,
    pub rhs: RationalVector,
}

/// What one party ends a protocol run with.
#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    pub party: PartyId,
    pub status: LpStatus,
    /// Objective value of the optimum (identical at every party once the
    /// status broadcast arrives; equals the original program's optimum).
    pub objective: Option<Rational>,
    /// Full solution, present in reveal mode.
    pub x_star: Option<RationalVector>,
    /// This party's additive share of the solution, present in shares mode.
    pub x_share: Option<RationalVector>,
    /// The disguised program, present at the solver party.
    pub transformed: Option<TransformedProblem>,
    /// This party's published masked share (multi-party protocol only).
    pub published: Option<PublishedShare>,
}

impl ProtocolOutcome {
    pub(crate) fn new(party: PartyId, status: LpStatus) -> Self {
        Self {
            party,
            status,
            objective: None,
            x_star: None,
            x_share: None,
            transformed: None,
            published: None,
        }
    }
}

// --- payload helpers -------------------------------------------------------

pub(crate) fn payload(build: impl FnOnce(&mut Writer)) -> Vec<u8> {
    let mut w = Writer::new();
    build(&mut w);
    w.finish()
}

pub(crate) fn parse_payload<T>(
    ctx: &PartyCtx,
    bytes: &[u8],
    parse: impl FnOnce(&mut Reader) -> Result<T, WireError>,
) -> Result<T, SessionError> {
    let mut r = Reader::new(bytes);
    let value = parse(&mut r).map_err(|e| ctx.fail(e))?;
    r.finish().map_err(|e| ctx.fail(e))?;
    Ok(value)
}

/// Receives the next message of `kind` from `from` and parses its payload.
pub(crate) fn recv_parsed<T>(
    ctx: &mut PartyCtx,
    from: PartyId,
    kind: &str,
    parse: impl FnOnce(&mut Reader) -> Result<T, WireError>,
) -> Result<T, SessionError> {
    let bytes = ctx.recv(from, kind)?;
    parse_payload(ctx, &bytes, parse)
}

/// Status broadcast payload: status tag plus the objective when optimal.
pub(crate) fn status_payload(status: LpStatus, objective: Option<&Rational>) -> Vec<u8> {
    payload(|w| {
        w.put_u32(match status {
            LpStatus::Optimal => 0,
            LpStatus::Infeasible => 1,
            LpStatus::Unbounded => 2,
        });
        match objective {
            Some(v) => {
                w.put_u32(1);
                w.put_rational(v);
            }
            None => w.put_u32(0),
        }
    })
}

pub(crate) fn parse_status(
    ctx: &PartyCtx,
    bytes: &[u8],
) -> Result<(LpStatus, Option<Rational>), SessionError> {
    parse_payload(ctx, bytes, |r| {
        let status = match r.get_u32()? {
            0 => LpStatus::Optimal,
            1 => LpStatus::Infeasible,
            2 => LpStatus::Unbounded,
            other => return Err(WireError::Malformed(format!("bad status tag {other}"))),
        };
        let objective = match r.get_u32()? {
            0 => None,
            _ => Some(r.get_rational()?),
        };
        Ok((status, objective))
    })
}

/// Derives the session bound on any residue that can appear in a transform
/// chain of `stages` monomial multiplications: `mag * delta * coeff^stages`.
pub(crate) fn chain_residue_bound(cfg: &SessionConfig, stages: u32) -> BigUint {
    BigUint::from(cfg.magnitude_bound)
        * cfg.scale.delta()
        * BigUint::from(cfg.coeff_max()).pow(stages)
}

/// Mask magnitude for the share-mode reconstruction exchanges: a fixed
/// budget of half the smallest window, split across all `l` stages and the
/// worst-case coefficient growth, so chained masked values always decode.
pub(crate) fn recon_mask_budget(
    windows: &[BigUint],
    value_bound: &BigUint,
    stages: u32,
    coeff_max: u64,
) -> Result<BigUint, ProtocolError> {
    let min_window = windows.iter().min().cloned().unwrap_or_default();
    let growth = BigUint::from(coeff_max).pow(stages) * BigUint::from(stages.max(1));
    let budget = (&min_window >> 2u32) / &growth;
    let worst_value = value_bound * BigUint::from(coeff_max).pow(stages);
    if budget.is_zero() || worst_value > (&min_window >> 2u32) {
        return Err(ProtocolError::Encoding(EncodingError::MaskRangeEmpty));
    }
    Ok(budget)
}

/// Common denominator representation of a rational vector: `v = ints / den`.
pub(crate) fn common_denominator(v: &[Rational]) -> (Vec<num_bigint::BigInt>, num_bigint::BigInt) {
    use num_integer::Integer;
    let mut den = num_bigint::BigInt::one();
    for x in v {
        den = den.lcm(x.denom());
    }
    let ints = v
        .iter()
        .map(|x| x.numer() * (&den / x.denom()))
        .collect();
    (ints, den)
}

/// Bit length of the largest magnitude in an integer vector.
pub(crate) fn max_bits(v: &[num_bigint::BigInt]) -> u64 {
    v.iter().map(|x| x.magnitude().bits()).max().unwrap_or(0)
}

/// Objective value broadcast sanity: the transformed objective evaluated at
/// the transformed optimum equals the original objective at `x*`.
pub(crate) fn transformed_objective(cq: &[Rational], y: &[Rational]) -> Rational {
    crate::linalg::dot(cq, y)
}

/// Samples a monomial for a party, honoring a pinned transform if present.
pub(crate) fn party_monomial(
    share_transform: Option<RationalMonomial>,
    n: usize,
    cfg: &SessionConfig,
    ctx: &mut PartyCtx,
) -> Result<RationalMonomial, SessionError> {
    match share_transform {
        Some(q) => {
            if q.dim() != n {
                return Err(ctx.fail(format!(
                    "pinned transform has dimension {}, expected {n}",
                    q.dim()
                )));
            }
            Ok(q)
        }
        None => crate::linalg::gen_monomial(n, cfg.coeff_range, &mut ctx.rng)
            .map_err(|e| ctx.fail(e)),
    }
}
