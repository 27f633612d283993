//! Monomial-recovery inference attack and transcript audit.
//!
//! An adversary that knows the disguised objective `c'Q` can enumerate all
//! permutations a monomial `Q` could use; knowing the original `c'` as well
//! pins each permutation's coefficients (`q_i = (c'Q)_{pi(i)} / c_i`, all
//! required positive), and a disclosed solution pair `(y*, x* = Q y*)`
//! filters the survivors down further: on generic instances to exactly the
//! true `Q`. The audit entry point replays that adversary against what a
//! protocol party actually saw in its transcript: the unpartitioned two-party
//! protocol discloses enough for unique recovery, while the
//! arbitrary-partition protocols starve the attack of `c'` and `x*`.

use thiserror::Error;

use num_traits::{One, Signed, Zero};

use crate::linalg::Monomial;
use crate::runtime::{PartyId, Transcript};
use crate::solver::SolverError;
use crate::{Rational, RationalMonomial, RationalVector};

/// Enumeration is cut off above this dimension (9! = 362880 permutations).
pub const MAX_ATTACK_DIM: usize = 9;

#[derive(Debug, Error, PartialEq)]
pub enum AttackError {
    #[error("evidence vectors disagree in dimension: {0}")]
    Dimensions(String),
    #[error("dimension {n} exceeds the enumeration bound {MAX_ATTACK_DIM}")]
    TooLarge { n: usize },
    #[error("no transformed objective visible to the attacker")]
    NoEvidence,
    #[error(transparent)]
    Parse(#[from] SolverError),
}

/// Everything the adversary knows.
#[derive(Debug, Clone, Default)]
pub struct AttackInput {
    /// Original objective `c'` (optional side knowledge).
    pub objective: Option<RationalVector>,
    /// Disguised objective `c'Q` (required).
    pub transformed_objective: RationalVector,
    /// Disguised optimum `y*` (optional).
    pub y_star: Option<RationalVector>,
    /// Original optimum `x* = Q y*` (optional).
    pub x_star: Option<RationalVector>,
}

/// Candidates consistent with all supplied evidence, exactly.
#[derive(Debug, Clone)]
pub struct AttackResult {
    pub candidates: Vec<RationalMonomial>,
    pub unique: bool,
}

impl AttackInput {
    fn dim(&self) -> Result<usize, AttackError> {
        let n = self.transformed_objective.len();
        if n == 0 {
            return Err(AttackError::NoEvidence);
        }
        for (name, v) in [
            ("ct", &self.objective),
            ("ystar", &self.y_star),
            ("xstar", &self.x_star),
        ] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(AttackError::Dimensions(format!(
                        "{name} has length {}, ctq has {n}",
                        v.len()
                    )));
                }
            }
        }
        Ok(n)
    }
}

/// Enumerates every monomial matrix consistent with the evidence.
///
/// For each permutation the coefficients are solved from the available
/// equations; rows with no determining equation keep the canonical
/// coefficient 1, so each surviving permutation contributes one
/// representative candidate.
pub fn bednarz_enumerate(input: &AttackInput) -> Result<AttackResult, AttackError> {
    let n = input.dim()?;
    if n > MAX_ATTACK_DIM {
        return Err(AttackError::TooLarge { n });
    }
    let ctq = &input.transformed_objective;
    let mut candidates = Vec::new();
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut coeffs = vec![Rational::one(); n];

    // Depth-first assignment of pi(row) = col with positivity pruning at
    // every level.
    #[allow(clippy::too_many_arguments)]
    fn descend(
        row: usize,
        n: usize,
        input: &AttackInput,
        ctq: &[Rational],
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        coeffs: &mut Vec<Rational>,
        candidates: &mut Vec<RationalMonomial>,
    ) {
        if row == n {
            if let Ok(q) = Monomial::new(perm.clone(), coeffs.clone()) {
                candidates.push(q);
            }
            return;
        }
        for col in 0..n {
            if used[col] {
                continue;
            }
            // Coefficient forced by the objective equation, if available.
            let mut q: Option<Rational> = None;
            if let Some(ct) = &input.objective {
                if ct[row].is_zero() {
                    if !ctq[col].is_zero() {
                        continue;
                    }
                } else {
                    let v = ctq[col].clone() / ct[row].clone();
                    if !v.is_positive() {
                        continue;
                    }
                    q = Some(v);
                }
            }
            // Coefficient forced by the solution equation, if available.
            if let (Some(y), Some(x)) = (&input.y_star, &input.x_star) {
                if y[col].is_zero() {
                    if !x[row].is_zero() {
                        continue;
                    }
                } else {
                    let v = x[row].clone() / y[col].clone();
                    if !v.is_positive() {
                        continue;
                    }
                    match &q {
                        Some(prev) if *prev != v => continue,
                        _ => q = Some(v),
                    }
                }
            }
            perm[row] = col;
            used[col] = true;
            coeffs[row] = q.unwrap_or_else(Rational::one);
            descend(row + 1, n, input, ctq, perm, used, coeffs, candidates);
            used[col] = false;
            perm[row] = usize::MAX;
        }
    }

    descend(
        0,
        n,
        input,
        ctq,
        &mut perm,
        &mut used,
        &mut coeffs,
        &mut candidates,
    );
    let unique = candidates.len() == 1;
    Ok(AttackResult { candidates, unique })
}

/// Which protocol's disclosure surface the audit models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditScenario {
    /// Unpartitioned two-party run: the solver P2 saw `c'Q`, `y*` and (in
    /// reveal mode) `x*` itself.
    Alg2,
    /// Arbitrary-partition run: the solver saw `c'Q` and `y*` but `c'` is
    /// split across parties and `x*` only exists as shares.
    Alg3,
}

/// Extra knowledge granted to the adversary beyond the transcript (the
/// attack's premise that the original objective leaked, or a deliberately
/// injected solution for negative controls).
#[derive(Debug, Clone, Default)]
pub struct DisclosedEvidence {
    pub objective: Option<RationalVector>,
    pub y_star: Option<RationalVector>,
    pub x_star: Option<RationalVector>,
}

/// Assembles the attacker party's visible evidence from its transcript log,
/// merges in disclosed side knowledge and runs the enumeration.
pub fn audit_protocol_run(
    transcript: &Transcript,
    attacker: PartyId,
    scenario: AuditScenario,
    disclosed: &DisclosedEvidence,
) -> Result<AttackResult, AttackError> {
    let ctq_step = match scenario {
        AuditScenario::Alg2 => "v",
        AuditScenario::Alg3 => "cq",
    };
    let transformed_objective = transcript.values_at(attacker, ctq_step);
    if transformed_objective.is_empty() {
        return Err(AttackError::NoEvidence);
    }
    let take = |from_transcript: Vec<Rational>, injected: &Option<RationalVector>| {
        injected.clone().or({
            if from_transcript.is_empty() {
                None
            } else {
                Some(from_transcript)
            }
        })
    };
    let input = AttackInput {
        objective: disclosed.objective.clone(),
        transformed_objective,
        y_star: take(transcript.values_at(attacker, "y_star"), &disclosed.y_star),
        x_star: take(transcript.values_at(attacker, "x_star"), &disclosed.x_star),
    };
    bednarz_enumerate(&input)
}

/// Parses the evidence file format used by the command-line audit:
///
/// ```text
/// evidence <n>
/// ctq <n rationals>
/// ct <n rationals>        (optional)
/// ystar <n rationals>     (optional)
/// xstar <n rationals>     (optional)
/// ```
pub fn parse_evidence(text: &str) -> Result<AttackInput, AttackError> {
    use crate::solver::parse_rationals;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (line_no, header) = lines.next().ok_or(AttackError::NoEvidence)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 2 || parts[0] != "evidence" {
        return Err(SolverError::Parse {
            line: line_no,
            msg: "expected header `evidence <n>`".into(),
        }
        .into());
    }
    let n: usize = parts[1].parse().map_err(|_| SolverError::Parse {
        line: line_no,
        msg: format!("bad dimension `{}`", parts[1]),
    })?;
    let mut input = AttackInput::default();
    for (line_no, line) in lines {
        let (field, rest) = line.split_once(char::is_whitespace).ok_or_else(|| {
            SolverError::Parse {
                line: line_no,
                msg: format!("expected `<field> <values>`, found `{line}`"),
            }
        })?;
        let values = parse_rationals(rest, n, line_no)?;
        match field {
            "ctq" => input.transformed_objective = values,
            "ct" => input.objective = Some(values),
            "ystar" => input.y_star = Some(values),
            "xstar" => input.x_star = Some(values),
            other => {
                return Err(SolverError::Parse {
                    line: line_no,
                    msg: format!("unknown evidence field `{other}`"),
                }
                .into())
            }
        }
    }
    if input.transformed_objective.is_empty() {
        return Err(AttackError::NoEvidence);
    }
    Ok(input)
}
