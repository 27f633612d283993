//! Exact two-phase simplex over any ordered field scalar.
//!
//! Problems are held in the canonical form `min c'x  s.t.  Mx <= b, x >= 0`.
//! Pivoting follows Bland's rule (lowest-index entering and leaving variable),
//! which guarantees termination on degenerate instances and makes every solve
//! deterministic. With rational scalars every comparison and every reported
//! value is exact.

use std::fmt;
use std::str::FromStr;


use thiserror::Error;

use crate::linalg::{dot, Matrix};
use crate::num::Scalar;

/// Constraint relation in a raw (not yet canonical) problem row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
}

/// Optimization direction of a raw problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Problem as read from input: mixed `<=`/`>=` rows, either sense.
#[derive(Debug, Clone)]
pub struct RawProblem<S> {
    pub sense: Sense,
    pub objective: Vec<S>,
    pub rows: Vec<(Vec<S>, Relation, S)>,
}

/// Canonical minimization problem: `min c'x  s.t.  Mx <= b, x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<S> {
    pub objective: Vec<S>,
    pub constraints: Matrix<S>,
    pub rhs: Vec<S>,
}

/// Canonical problem plus whether the original sense was `max` (in which case
/// reported objectives must be negated back).
#[derive(Debug, Clone)]
pub struct Canonical<S> {
    pub problem: LpProblem<S>,
    pub maximized: bool,
}

impl<S: Scalar> Canonical<S> {
    /// Maps a canonical objective value back to the original sense.
    pub fn report_objective(&self, canonical_value: &S) -> S {
        if self.maximized {
            -canonical_value.clone()
        } else {
            canonical_value.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpStatus::Optimal => write!(f, "Optimal"),
            LpStatus::Infeasible => write!(f, "Infeasible"),
            LpStatus::Unbounded => write!(f, "Unbounded"),
        }
    }
}

/// Solver outcome; `x` and `objective` are present iff the status is Optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub x: Option<Vec<S>>,
    pub objective: Option<S>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("inconsistent dimensions: {0}")]
    Dimensions(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Normalizes a raw problem: `>=` rows are negated into `<=` rows and a
/// maximization objective is negated into a minimization one.
pub fn canonicalize<S: Scalar>(raw: &RawProblem<S>) -> Result<Canonical<S>, SolverError> {
    let n = raw.objective.len();
    if n == 0 {
        return Err(SolverError::Dimensions("empty objective".into()));
    }
    let mut rows = Vec::with_capacity(raw.rows.len());
    let mut rhs = Vec::with_capacity(raw.rows.len());
    for (i, (coeffs, rel, r)) in raw.rows.iter().enumerate() {
        if coeffs.len() != n {
            return Err(SolverError::Dimensions(format!(
                "row {} has {} coefficients, expected {}",
                i + 1,
                coeffs.len(),
                n
            )));
        }
        match rel {
            Relation::Le => {
                rows.push(coeffs.clone());
                rhs.push(r.clone());
            }
            Relation::Ge => {
                rows.push(coeffs.iter().map(|v| -v.clone()).collect());
                rhs.push(-r.clone());
            }
        }
    }
    let maximized = raw.sense == Sense::Maximize;
    let objective = if maximized {
        raw.objective.iter().map(|v| -v.clone()).collect()
    } else {
        raw.objective.clone()
    };
    let constraints =
        Matrix::from_rows(rows).map_err(|e| SolverError::Dimensions(e.to_string()))?;
    Ok(Canonical {
        problem: LpProblem {
            objective,
            constraints,
            rhs,
        },
        maximized,
    })
}

/// Solves a canonical problem with the two-phase simplex method.
pub fn simplex_solve<S: Scalar>(p: &LpProblem<S>) -> LpSolution<S> {
    Tableau::new(p).solve()
}

/// Per-row feasibility data for a candidate point.
#[derive(Debug, Clone)]
pub struct FeasibilityReport<S> {
    /// `b_i - (Mx)_i` per constraint row; negative means violated.
    pub slacks: Vec<S>,
    /// Indices of rows with negative slack.
    pub violated_rows: Vec<usize>,
    /// Indices of variables with negative value.
    pub negative_vars: Vec<usize>,
    pub objective: S,
    pub feasible: bool,
}

/// Reports exact per-row slack, nonnegativity violations and the objective
/// value of `x` for problem `p`.
pub fn verify_solution<S: Scalar>(
    p: &LpProblem<S>,
    x: &[S],
) -> Result<FeasibilityReport<S>, SolverError> {
    if x.len() != p.objective.len() {
        return Err(SolverError::Dimensions(format!(
            "solution length {} vs {} variables",
            x.len(),
            p.objective.len()
        )));
    }
    let mx = p
        .constraints
        .mul_vec(x)
        .map_err(|e| SolverError::Dimensions(e.to_string()))?;
    let slacks: Vec<S> = p
        .rhs
        .iter()
        .zip(&mx)
        .map(|(b, v)| b.clone() - v.clone())
        .collect();
    let violated_rows: Vec<usize> = slacks
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < S::zero())
        .map(|(i, _)| i)
        .collect();
    let negative_vars: Vec<usize> = x
        .iter()
        .enumerate()
        .filter(|(_, v)| **v < S::zero())
        .map(|(i, _)| i)
        .collect();
    let feasible = violated_rows.is_empty() && negative_vars.is_empty();
    Ok(FeasibilityReport {
        slacks,
        violated_rows,
        negative_vars,
        objective: dot(&p.objective, x),
        feasible,
    })
}

/// Dense simplex tableau. Column layout: `n` structural variables, then `m`
/// slacks, then any artificials; the last column is the right-hand side.
struct Tableau<S> {
    rows: Vec<Vec<S>>,
    basis: Vec<usize>,
    objective: Vec<S>,
    n_struct: usize,
    n_total: usize,
}

impl<S: Scalar> Tableau<S> {
    fn new(p: &LpProblem<S>) -> Self {
        let m = p.constraints.rows();
        let n = p.objective.len();
        let mut artificial_rows = Vec::new();
        for (i, b) in p.rhs.iter().enumerate() {
            if *b < S::zero() {
                artificial_rows.push(i);
            }
        }
        let n_total = n + m + artificial_rows.len();
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut art = 0;
        for i in 0..m {
            let mut row = vec![S::zero(); n_total + 1];
            let negate = p.rhs[i] < S::zero();
            for (j, slot) in row.iter_mut().enumerate().take(n) {
                let v = p.constraints[(i, j)].clone();
                *slot = if negate { -v } else { v };
            }
            row[n + i] = if negate { -S::one() } else { S::one() };
            row[n_total] = if negate {
                -p.rhs[i].clone()
            } else {
                p.rhs[i].clone()
            };
            if negate {
                let a_col = n + m + art;
                row[a_col] = S::one();
                basis.push(a_col);
                art += 1;
            } else {
                basis.push(n + i);
            }
            rows.push(row);
        }
        Tableau {
            rows,
            basis,
            objective: p.objective.clone(),
            n_struct: n,
            n_total,
        }
    }

    fn solve(mut self) -> LpSolution<S> {
        let m = self.rows.len();
        let n_art = self.n_total - self.n_struct - m;
        if n_art > 0 {
            // Phase 1: minimize the sum of artificial variables.
            let mut cost = vec![S::zero(); self.n_total];
            for slot in cost.iter_mut().skip(self.n_struct + m) {
                *slot = S::one();
            }
            match self.optimize(&cost, self.n_total) {
                PivotOutcome::Optimal => {}
                PivotOutcome::Unbounded => unreachable!("phase-1 objective is bounded below by 0"),
            }
            if self.objective_value(&cost) > S::zero() {
                return LpSolution {
                    status: LpStatus::Infeasible,
                    x: None,
                    objective: None,
                };
            }
            self.evict_artificials(m);
        }

        // Phase 2 over structural + slack columns only.
        let limit = self.n_struct + m;
        let mut cost = vec![S::zero(); self.n_total];
        cost[..self.n_struct].clone_from_slice(&self.objective);
        match self.optimize(&cost, limit) {
            PivotOutcome::Optimal => {}
            PivotOutcome::Unbounded => {
                return LpSolution {
                    status: LpStatus::Unbounded,
                    x: None,
                    objective: None,
                }
            }
        }
        let mut x = vec![S::zero(); self.n_struct];
        for (r, &bv) in self.basis.iter().enumerate() {
            if bv < self.n_struct {
                x[bv] = self.rows[r][self.n_total].clone();
            }
        }
        let objective = dot(&self.objective, &x);
        LpSolution {
            status: LpStatus::Optimal,
            x: Some(x),
            objective: Some(objective),
        }
    }

    fn objective_value(&self, cost: &[S]) -> S {
        let mut total = S::zero();
        for (r, &bv) in self.basis.iter().enumerate() {
            if !cost[bv].is_zero() {
                total = total + cost[bv].clone() * self.rows[r][self.n_total].clone();
            }
        }
        total
    }

    /// Reduced cost of column `j` under the given cost vector.
    fn reduced_cost(&self, cost: &[S], j: usize) -> S {
        let mut z = S::zero();
        for (r, &bv) in self.basis.iter().enumerate() {
            if !cost[bv].is_zero() {
                z = z + cost[bv].clone() * self.rows[r][j].clone();
            }
        }
        cost[j].clone() - z
    }

    /// Bland-rule simplex loop over columns `0..limit`.
    fn optimize(&mut self, cost: &[S], limit: usize) -> PivotOutcome {
        loop {
            // Entering: lowest index with negative reduced cost.
            let mut entering = None;
            for j in 0..limit {
                if self.basis.contains(&j) {
                    continue;
                }
                if self.reduced_cost(cost, j) < S::zero() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(e) = entering else {
                return PivotOutcome::Optimal;
            };
            // Leaving: min ratio; ties broken by lowest basic-variable index.
            let mut leave: Option<(usize, S)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][e];
                if *a <= S::zero() {
                    continue;
                }
                let ratio = self.rows[r][self.n_total].clone() / a.clone();
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        if ratio < best
                            || (ratio == best && self.basis[r] < self.basis[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return PivotOutcome::Unbounded;
            };
            self.pivot(row, e);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..=self.n_total {
                let delta = factor.clone() * self.rows[row][j].clone();
                self.rows[r][j] = self.rows[r][j].clone() - delta;
            }
        }
        self.basis[row] = col;
    }

    /// Pivots any remaining zero-level artificial variables out of the basis;
    /// rows where that is impossible are redundant and dropped.
    fn evict_artificials(&mut self, m: usize) {
        let art_start = self.n_struct + m;
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= art_start {
                let col = (0..art_start).find(|&j| !self.rows[r][j].is_zero());
                match col {
                    Some(j) => self.pivot(r, j),
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }
}

enum PivotOutcome {
    Optimal,
    Unbounded,
}

/// Parses the line-oriented problem format:
///
/// ```text
/// lp <m> <n> <min|max>
/// <n objective rationals>
/// <n rationals> <'<=' or '>='> <rhs>     (m such rows)
/// ```
///
/// Rationals are written as `p/q` or plain integers, in lowest terms.
pub fn parse_problem(text: &str) -> Result<RawProblem<crate::Rational>, SolverError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| SolverError::Parse {
            line: 1,
            msg: "empty problem file".into(),
        })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "lp" {
        return Err(SolverError::Parse {
            line: line_no,
            msg: "expected header `lp <m> <n> <min|max>`".into(),
        });
    }
    let m: usize = parts[1].parse().map_err(|_| SolverError::Parse {
        line: line_no,
        msg: format!("bad row count `{}`", parts[1]),
    })?;
    let n: usize = parts[2].parse().map_err(|_| SolverError::Parse {
        line: line_no,
        msg: format!("bad column count `{}`", parts[2]),
    })?;
    let sense = match parts[3] {
        "min" => Sense::Minimize,
        "max" => Sense::Maximize,
        other => {
            return Err(SolverError::Parse {
                line: line_no,
                msg: format!("bad sense `{other}`"),
            })
        }
    };

    let (line_no, obj_line) = lines.next().ok_or_else(|| SolverError::Parse {
        line: line_no + 1,
        msg: "missing objective line".into(),
    })?;
    let objective = parse_rationals(obj_line, n, line_no)?;

    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let (line_no, row_line) = lines.next().ok_or_else(|| SolverError::Parse {
            line: 0,
            msg: format!("expected {m} constraint rows"),
        })?;
        let toks: Vec<&str> = row_line.split_whitespace().collect();
        if toks.len() != n + 2 {
            return Err(SolverError::Parse {
                line: line_no,
                msg: format!("expected {} tokens, found {}", n + 2, toks.len()),
            });
        }
        let coeffs = parse_rationals(&toks[..n].join(" "), n, line_no)?;
        let rel = match toks[n] {
            "<=" => Relation::Le,
            ">=" => Relation::Ge,
            other => {
                return Err(SolverError::Parse {
                    line: line_no,
                    msg: format!("bad relation `{other}`"),
                })
            }
        };
        let rhs = parse_rational(toks[n + 1], line_no)?;
        rows.push((coeffs, rel, rhs));
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(SolverError::Parse {
            line: line_no,
            msg: "trailing content after last constraint row".into(),
        });
    }
    Ok(RawProblem {
        sense,
        objective,
        rows,
    })
}

/// Serializes a raw problem in the format accepted by [`parse_problem`].
pub fn format_problem(raw: &RawProblem<crate::Rational>) -> String {
    let mut out = String::new();
    let sense = match raw.sense {
        Sense::Minimize => "min",
        Sense::Maximize => "max",
    };
    out.push_str(&format!(
        "lp {} {} {}\n",
        raw.rows.len(),
        raw.objective.len(),
        sense
    ));
    out.push_str(&join_rationals(&raw.objective));
    out.push('\n');
    for (coeffs, rel, rhs) in &raw.rows {
        let rel = match rel {
            Relation::Le => "<=",
            Relation::Ge => ">=",
        };
        out.push_str(&format!("{} {} {}\n", join_rationals(coeffs), rel, rhs));
    }
    out
}

pub(crate) fn join_rationals(vals: &[crate::Rational]) -> String {
    vals.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub(crate) fn parse_rational(tok: &str, line: usize) -> Result<crate::Rational, SolverError> {
    crate::Rational::from_str(tok).map_err(|e| SolverError::Parse {
        line,
        msg: format!("bad rational `{tok}`: {e}"),
    })
}

pub(crate) fn parse_rationals(
    text: &str,
    expect: usize,
    line: usize,
) -> Result<Vec<crate::Rational>, SolverError> {
    let vals: Vec<crate::Rational> = text
        .split_whitespace()
        .map(|t| parse_rational(t, line))
        .collect::<Result<_, _>>()?;
    if vals.len() != expect {
        return Err(SolverError::Parse {
            line,
            msg: format!("expected {expect} rationals, found {}", vals.len()),
        });
    }
    Ok(vals)
}
