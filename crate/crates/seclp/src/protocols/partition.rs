//! Partition file format: the solver's problem format extended with
//! `share <party-index>` section headers.
//!
//! ```text
//! lp <m> <n> <min|max>
//! share 1
//! <n objective-share rationals>
//! <n rationals> <'<=' or '>='> <rhs-share>     (m rows)
//! share 2
//! ...
//! ```
//!
//! Every section declares the same relation per row (the relation belongs to
//! the global constraint); `>=` rows are negated in every share and a `max`
//! objective is negated in every share, so the parsed shares are canonical.

use crate::linalg::Matrix;
use crate::solver::{parse_rational, parse_rationals, Relation, SolverError};
use crate::Rational;

use super::PartyShare;

/// Parsed, canonicalized partition file.
#[derive(Debug, Clone)]
pub struct PartitionFile {
    pub shares: Vec<PartyShare>,
    /// True when the original objective was a maximization; reported
    /// objective values must be negated back.
    pub maximized: bool,
}

pub fn parse_partition(text: &str) -> Result<PartitionFile, SolverError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();

    let (line_no, header) = lines.next().ok_or_else(|| SolverError::Parse {
        line: 1,
        msg: "empty partition file".into(),
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
    let maximized = match parts[3] {
        "min" => false,
        "max" => true,
        other => {
            return Err(SolverError::Parse {
                line: line_no,
                msg: format!("bad sense `{other}`"),
            })
        }
    };

    type RawShare = (Vec<Rational>, Vec<Vec<Rational>>, Vec<Relation>, Vec<Rational>);
    let mut raw_shares: Vec<RawShare> = Vec::new();
    while let Some((line_no, line)) = lines.next() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 || toks[0] != "share" {
            return Err(SolverError::Parse {
                line: line_no,
                msg: format!("expected `share <index>`, found `{line}`"),
            });
        }
        let index: usize = toks[1].parse().map_err(|_| SolverError::Parse {
            line: line_no,
            msg: format!("bad share index `{}`", toks[1]),
        })?;
        if index != raw_shares.len() + 1 {
            return Err(SolverError::Parse {
                line: line_no,
                msg: format!(
                    "share sections must be numbered in order; expected {} found {index}",
                    raw_shares.len() + 1
                ),
            });
        }
        let (obj_line_no, obj_line) = lines.next().ok_or_else(|| SolverError::Parse {
            line: line_no,
            msg: "missing objective-share line".into(),
        })?;
        let objective = parse_rationals(obj_line, n, obj_line_no)?;
        let mut rows = Vec::with_capacity(m);
        let mut relations = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for _ in 0..m {
            let (row_no, row_line) = lines.next().ok_or_else(|| SolverError::Parse {
                line: obj_line_no,
                msg: format!("expected {m} constraint rows in share {index}"),
            })?;
            let toks: Vec<&str> = row_line.split_whitespace().collect();
            if toks.len() != n + 2 {
                return Err(SolverError::Parse {
                    line: row_no,
                    msg: format!("expected {} tokens, found {}", n + 2, toks.len()),
                });
            }
            rows.push(parse_rationals(&toks[..n].join(" "), n, row_no)?);
            relations.push(match toks[n] {
                "<=" => Relation::Le,
                ">=" => Relation::Ge,
                other => {
                    return Err(SolverError::Parse {
                        line: row_no,
                        msg: format!("bad relation `{other}`"),
                    })
                }
            });
            rhs.push(parse_rational(toks[n + 1], row_no)?);
        }
        raw_shares.push((objective, rows, relations, rhs));
    }
    if raw_shares.is_empty() {
        return Err(SolverError::Parse {
            line: line_no,
            msg: "partition file has no share sections".into(),
        });
    }
    let relations = raw_shares[0].2.clone();
    for (i, share) in raw_shares.iter().enumerate() {
        if share.2 != relations {
            return Err(SolverError::Parse {
                line: 0,
                msg: format!(
                    "share {} declares different row relations than share 1",
                    i + 1
                ),
            });
        }
    }

    let shares = raw_shares
        .into_iter()
        .map(|(mut objective, mut rows, relations, mut rhs)| {
            for (r, rel) in relations.iter().enumerate() {
                if *rel == Relation::Ge {
                    for v in rows[r].iter_mut() {
                        *v = -v.clone();
                    }
                    rhs[r] = -rhs[r].clone();
                }
            }
            if maximized {
                for v in objective.iter_mut() {
                    *v = -v.clone();
                }
            }
            let constraints = Matrix::from_rows(rows)
                .map_err(|e| SolverError::Dimensions(e.to_string()))?;
            Ok(PartyShare::new(constraints, objective, rhs))
        })
        .collect::<Result<Vec<_>, SolverError>>()?;

    Ok(PartitionFile { shares, maximized })
}

/// Writes canonical (`min`, all-`<=`) shares in the partition format.
pub fn format_partition(shares: &[PartyShare]) -> String {
    let m = shares[0].constraints.rows();
    let n = shares[0].constraints.cols();
    let mut out = format!("lp {m} {n} min\n");
    for (i, share) in shares.iter().enumerate() {
        out.push_str(&format!("share {}\n", i + 1));
        out.push_str(&crate::solver::join_rationals(&share.objective));
        out.push('\n');
        for r in 0..m {
            out.push_str(&format!(
                "{} <= {}\n",
                crate::solver::join_rationals(share.constraints.row(r)),
                share.rhs[r]
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rat, ratio};

    #[test]
    fn parse_two_share_file() {
        let text = "lp 1 2 min\n\
                    share 1\n\
                    1/2 -1\n\
                    1 0 <= 3\n\
                    share 2\n\
                    -1/2 0\n\
                    0 1 <= 4\n";
        let pf = parse_partition(text).unwrap();
        assert_eq!(pf.shares.len(), 2);
        assert!(!pf.maximized);
        assert_eq!(pf.shares[0].objective, vec![ratio(1, 2), rat(-1)]);
        assert_eq!(pf.shares[1].rhs, vec![rat(4)]);
        assert_eq!(format_partition(&pf.shares), text);
    }

    #[test]
    fn ge_rows_negate_in_every_share() {
        let text = "lp 1 1 min\n\
                    share 1\n\
                    1\n\
                    2 >= 3\n\
                    share 2\n\
                    0\n\
                    1 >= 1\n";
        let pf = parse_partition(text).unwrap();
        assert_eq!(pf.shares[0].constraints.row(0), &[rat(-2)]);
        assert_eq!(pf.shares[0].rhs, vec![rat(-3)]);
        assert_eq!(pf.shares[1].constraints.row(0), &[rat(-1)]);
        assert_eq!(pf.shares[1].rhs, vec![rat(-1)]);
    }

    #[test]
    fn max_objective_negates_shares() {
        let text = "lp 1 1 max\n\
                    share 1\n\
                    5\n\
                    1 <= 2\n";
        let pf = parse_partition(text).unwrap();
        assert!(pf.maximized);
        assert_eq!(pf.shares[0].objective, vec![rat(-5)]);
    }

    #[test]
    fn mismatched_relations_rejected() {
        let text = "lp 1 1 min\n\
                    share 1\n\
                    1\n\
                    1 <= 2\n\
                    share 2\n\
                    0\n\
                    1 >= 2\n";
        assert!(parse_partition(text).is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_partition("lp 1 1 min\nshare 1\nbogus\n1 <= 2\n").unwrap_err();
        assert!(matches!(err, SolverError::Parse { line: 3, .. }));
        let err = parse_partition("lp 1 1 min\nshare 2\n1\n1 <= 2\n").unwrap_err();
        assert!(matches!(err, SolverError::Parse { line: 2, .. }));
    }
}
