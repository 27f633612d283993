//! Shared test support: an independent brute-force LP oracle and instance
//! generators.
//!
//! The oracle never pivots: it enumerates every basic point of the
//! constraint system by solving all n-row square subsystems exactly, checks
//! feasibility, and separately decides unboundedness by enumerating the
//! normalized recession cone. It shares no code path with the simplex
//! implementation it is used to check.

#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use num_traits::{FromPrimitive, One, Signed, Zero};
use rand::Rng;
use seclp::linalg::{dot, Matrix};
use seclp::protocols::PartyShare;
use seclp::solver::{LpProblem, LpStatus};
use seclp::{Rational, RationalMatrix, RationalVector};

/// Exact Gaussian elimination; `None` when the system is singular.
pub fn solve_square(a: &RationalMatrix, b: &[Rational]) -> Option<RationalVector> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|r| {
            let mut row: Vec<Rational> = a.row(r).to_vec();
            row.push(b[r].clone());
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = v.clone() / p.clone();
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..=n {
                    let delta = f.clone() * m[col][c].clone();
                    m[r][c] = m[r][c].clone() - delta;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

fn subsets(count: usize, pick: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(start: usize, count: usize, pick: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == pick {
            out.push(current.clone());
            return;
        }
        for i in start..count {
            current.push(i);
            rec(i + 1, count, pick, current, out);
            current.pop();
        }
    }
    rec(0, count, pick, &mut current, &mut out);
    out
}

/// All feasible basic points of `Mx <= b, x >= 0`.
fn feasible_vertices(p: &LpProblem<Rational>) -> Vec<RationalVector> {
    let n = p.objective.len();
    let m = p.constraints.rows();
    // Row system: the m constraint rows followed by the n sign rows -x_i <= 0.
    let mut rows: Vec<(RationalVector, Rational)> = Vec::with_capacity(m + n);
    for r in 0..m {
        rows.push((p.constraints.row(r).to_vec(), p.rhs[r].clone()));
    }
    for i in 0..n {
        let mut row = vec![Rational::zero(); n];
        row[i] = -Rational::one();
        rows.push((row, Rational::zero()));
    }
    let mut vertices: Vec<RationalVector> = Vec::new();
    for subset in subsets(rows.len(), n) {
        let a = Matrix::from_rows(subset.iter().map(|&i| rows[i].0.clone()).collect()).unwrap();
        let rhs: RationalVector = subset.iter().map(|&i| rows[i].1.clone()).collect();
        let Some(x) = solve_square(&a, &rhs) else {
            continue;
        };
        if x.iter().any(|v| v.is_negative()) {
            continue;
        }
        let mx = p.constraints.mul_vec(&x).unwrap();
        if mx.iter().zip(&p.rhs).any(|(lhs, rhs)| lhs > rhs) {
            continue;
        }
        if !vertices.contains(&x) {
            vertices.push(x);
        }
    }
    vertices
}

/// True when the recession cone `Md <= 0, d >= 0` contains a direction with
/// negative objective, decided by enumerating the cone's normalization
/// `sum d_i = 1`.
fn has_improving_ray(p: &LpProblem<Rational>) -> bool {
    let n = p.objective.len();
    let m = p.constraints.rows();
    let mut rows: Vec<(RationalVector, Rational)> = Vec::new();
    for r in 0..m {
        rows.push((p.constraints.row(r).to_vec(), Rational::zero()));
    }
    for i in 0..n {
        let mut row = vec![Rational::zero(); n];
        row[i] = -Rational::one();
        rows.push((row, Rational::zero()));
    }
    rows.push((vec![Rational::one(); n], Rational::one()));
    rows.push((vec![-Rational::one(); n], -Rational::one()));

    for subset in subsets(rows.len(), n) {
        let a = Matrix::from_rows(subset.iter().map(|&i| rows[i].0.clone()).collect()).unwrap();
        let rhs: RationalVector = subset.iter().map(|&i| rows[i].1.clone()).collect();
        let Some(d) = solve_square(&a, &rhs) else {
            continue;
        };
        if d.iter().any(|v| v.is_negative()) {
            continue;
        }
        let md = p.constraints.mul_vec(&d).unwrap();
        if md.iter().any(|v| v.is_positive()) {
            continue;
        }
        let total: Rational = d.iter().cloned().sum();
        if total != Rational::one() {
            continue;
        }
        if dot(&p.objective, &d).is_negative() {
            return true;
        }
    }
    false
}

/// Brute-force LP oracle: status plus exact optimum.
pub fn oracle_solve(p: &LpProblem<Rational>) -> (LpStatus, Option<Rational>) {
    let vertices = feasible_vertices(p);
    if vertices.is_empty() {
        return (LpStatus::Infeasible, None);
    }
    if has_improving_ray(p) {
        return (LpStatus::Unbounded, None);
    }
    let best = vertices
        .iter()
        .map(|v| dot(&p.objective, v))
        .min()
        .unwrap();
    (LpStatus::Optimal, Some(best))
}

pub fn rat(n: i64) -> Rational {
    Rational::from_i64(n).unwrap()
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// `min -3x1 - 5x2  s.t.  x1 <= 4, 2x2 <= 12, 3x1 + 2x2 <= 18`; the optimum
/// is (2, 6) with objective -36 (checked against the oracle in the suites).
pub fn dantzig() -> LpProblem<Rational> {
    LpProblem {
        objective: vec![rat(-3), rat(-5)],
        constraints: Matrix::from_rows(vec![
            vec![rat(1), rat(0)],
            vec![rat(0), rat(2)],
            vec![rat(3), rat(2)],
        ])
        .unwrap(),
        rhs: vec![rat(4), rat(12), rat(18)],
    }
}

/// Random rational with denominator dividing 4 and numerator magnitude up to
/// `4 * mag` (so entries are representable at any scale with delta >= 4).
pub fn gen_entry<R: Rng>(mag: i64, rng: &mut R) -> Rational {
    ratio(rng.gen_range(-4 * mag..=4 * mag), 4)
}

/// Unconstrained random instance; may be infeasible or unbounded.
pub fn gen_any_lp<R: Rng>(n: usize, m: usize, mag: i64, rng: &mut R) -> LpProblem<Rational> {
    LpProblem {
        objective: (0..n).map(|_| gen_entry(mag, rng)).collect(),
        constraints: Matrix::from_vec(
            m,
            n,
            (0..m * n).map(|_| gen_entry(mag, rng)).collect(),
        )
        .unwrap(),
        rhs: (0..m).map(|_| gen_entry(mag, rng)).collect(),
    }
}

/// Random feasible bounded instance: b is chosen above `M x0` for a random
/// nonnegative x0, and box rows keep the region bounded.
pub fn gen_feasible_bounded<R: Rng>(
    n: usize,
    m: usize,
    mag: i64,
    rng: &mut R,
) -> LpProblem<Rational> {
    let core = Matrix::from_vec(m, n, (0..m * n).map(|_| gen_entry(mag, rng)).collect()).unwrap();
    let x0: RationalVector = (0..n).map(|_| ratio(rng.gen_range(0..=4 * mag), 4)).collect();
    let slack: RationalVector = (0..m).map(|_| ratio(rng.gen_range(0..=4 * mag), 4)).collect();
    let b_core = core
        .mul_vec(&x0)
        .unwrap()
        .into_iter()
        .zip(slack)
        .map(|(v, s)| v + s)
        .collect::<Vec<_>>();

    let mut rows: Vec<RationalVector> = core.iter_rows().map(|r| r.to_vec()).collect();
    let mut rhs = b_core;
    for i in 0..n {
        let mut row = vec![Rational::zero(); n];
        row[i] = Rational::one();
        rows.push(row);
        let bound = x0[i].clone() + ratio(rng.gen_range(1..=4 * mag), 4);
        rhs.push(bound);
    }
    LpProblem {
        objective: (0..n).map(|_| gen_entry(mag, rng)).collect(),
        constraints: Matrix::from_rows(rows).unwrap(),
        rhs,
    }
}

/// Splits a problem into `l` random additive shares (arbitrary partitioning).
pub fn split_arbitrary<R: Rng>(p: &LpProblem<Rational>, l: usize, rng: &mut R) -> Vec<PartyShare> {
    let m = p.constraints.rows();
    let n = p.objective.len();
    let mut shares = Vec::with_capacity(l);
    let mut rem_m = p.constraints.clone();
    let mut rem_c = p.objective.clone();
    let mut rem_b = p.rhs.clone();
    for _ in 0..l - 1 {
        let mi = Matrix::from_vec(m, n, (0..m * n).map(|_| gen_entry(4, rng)).collect()).unwrap();
        let ci: RationalVector = (0..n).map(|_| gen_entry(4, rng)).collect();
        let bi: RationalVector = (0..m).map(|_| gen_entry(4, rng)).collect();
        rem_m = rem_m.sub(&mi).unwrap();
        rem_c = seclp::linalg::sub_vecs(&rem_c, &ci).unwrap();
        rem_b = seclp::linalg::sub_vecs(&rem_b, &bi).unwrap();
        shares.push(PartyShare::new(mi, ci, bi));
    }
    shares.push(PartyShare::new(rem_m, rem_c, rem_b));
    shares
}

/// Horizontal partitioning: each party owns whole rows (and a slice of the
/// objective); a special case of additive shares with zero rows elsewhere.
pub fn split_horizontal(p: &LpProblem<Rational>, l: usize) -> Vec<PartyShare> {
    let m = p.constraints.rows();
    let n = p.objective.len();
    (0..l)
        .map(|i| {
            let mut mi = Matrix::zeros(m, n);
            let mut bi = vec![Rational::zero(); m];
            let mut ci = vec![Rational::zero(); n];
            for r in 0..m {
                if r % l == i {
                    for c in 0..n {
                        mi[(r, c)] = p.constraints[(r, c)].clone();
                    }
                    bi[r] = p.rhs[r].clone();
                }
            }
            for c in 0..n {
                if c % l == i {
                    ci[c] = p.objective[c].clone();
                }
            }
            PartyShare::new(mi, ci, bi)
        })
        .collect()
}

/// Vertical partitioning: each party owns whole columns of every row.
pub fn split_vertical(p: &LpProblem<Rational>, l: usize) -> Vec<PartyShare> {
    let m = p.constraints.rows();
    let n = p.objective.len();
    (0..l)
        .map(|i| {
            let mut mi = Matrix::zeros(m, n);
            let mut ci = vec![Rational::zero(); n];
            let mut bi = vec![Rational::zero(); m];
            for c in 0..n {
                if c % l == i {
                    for r in 0..m {
                        mi[(r, c)] = p.constraints[(r, c)].clone();
                    }
                    ci[c] = p.objective[c].clone();
                }
            }
            // The RHS has no column structure; give it to the first party.
            if i == 0 {
                bi = p.rhs.clone();
            }
            PartyShare::new(mi, ci, bi)
        })
        .collect()
}

/// Generic disclosure instance for the attack suites: a box program whose
/// optimum has strictly positive pairwise-distinct coordinates,
/// pairwise-distinct nonzero objective entries, and pairwise-distinct
/// products `c_i * x*_i`. Zero optimum coordinates would void the
/// `x* = Q y*` filter, and colliding products make two permutations satisfy
/// both ratio equations at once.
pub fn gen_generic_box<R: Rng>(n: usize, rng: &mut R) -> LpProblem<Rational> {
    loop {
        let mut bounds: Vec<Rational> = Vec::new();
        while bounds.len() < n {
            let b = ratio(rng.gen_range(4..=40), 4);
            if !bounds.contains(&b) {
                bounds.push(b);
            }
        }
        let mut objective: Vec<Rational> = Vec::new();
        while objective.len() < n {
            let c = ratio(-rng.gen_range(1..=60), 4);
            if !objective.contains(&c) {
                objective.push(c);
            }
        }
        // The optimum of this box program is exactly the bound vector.
        let products: Vec<Rational> = objective
            .iter()
            .zip(&bounds)
            .map(|(c, b)| c.clone() * b.clone())
            .collect();
        let distinct = products
            .iter()
            .enumerate()
            .all(|(i, p)| products[..i].iter().all(|q| q != p));
        if !distinct {
            continue;
        }
        return LpProblem {
            objective,
            constraints: Matrix::identity(n),
            rhs: bounds,
        };
    }
}
