//! DIMACS CNF reader and writer.

use std::fmt::Write as _;

use thiserror::Error;

use crate::cnf::Cnf;
use crate::lit::Lit;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: missing or malformed `p cnf` header")]
    Header { line: usize },
    #[error("line {line}: malformed literal `{token}`")]
    Literal { line: usize, token: String },
    #[error("line {line}: literal {lit} exceeds declared variable count {vars}")]
    VarOutOfRange { line: usize, lit: i64, vars: u32 },
    #[error("declared {declared} clauses but found {found}")]
    ClauseCount { declared: usize, found: usize },
}

pub fn export_dimacs(f: &Cnf) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", f.num_vars(), f.num_clauses());
    for c in f.clauses() {
        for l in c {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}

/// Parses DIMACS text. Comment lines (`c ...`) are skipped anywhere; a final
/// clause missing its terminating `0` is accepted at end of input.
pub fn import_dimacs(text: &str) -> Result<Cnf, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut cnf = Cnf::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut found = 0usize;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('c') || t.starts_with('%') {
            continue;
        }
        if t.starts_with('p') {
            if header.is_some() {
                return Err(DimacsError::Header { line });
            }
            let parts: Vec<&str> = t.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(DimacsError::Header { line });
            }
            let vars = parts[2].parse::<u32>().map_err(|_| DimacsError::Header { line })?;
            let clauses = parts[3]
                .parse::<usize>()
                .map_err(|_| DimacsError::Header { line })?;
            cnf = Cnf::with_vars(vars);
            header = Some((vars, clauses));
            continue;
        }
        let (vars, _) = header.ok_or(DimacsError::Header { line })?;
        for tok in t.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| DimacsError::Literal {
                line,
                token: tok.to_string(),
            })?;
            if v == 0 {
                cnf.add_clause(&current);
                current.clear();
                found += 1;
            } else {
                if v.unsigned_abs() > vars as u64 {
                    return Err(DimacsError::VarOutOfRange { line, lit: v, vars });
                }
                current.push(Lit::from_dimacs(v).expect("nonzero"));
            }
        }
    }
    let (_, declared) = header.ok_or(DimacsError::Header {
        line: last_line.max(1),
    })?;
    if !current.is_empty() {
        cnf.add_clause(&current);
        found += 1;
    }
    if found != declared {
        return Err(DimacsError::ClauseCount { declared, found });
    }
    Ok(cnf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_clause_export() {
        let mut f = Cnf::new();
        f.add_clause(&[Lit::from_dimacs(1).unwrap()]);
        assert_eq!(export_dimacs(&f), "p cnf 1 1\n1 0\n");
    }

    #[test]
    fn import_with_comments_and_wrapped_clause() {
        let f = import_dimacs("c hello\np cnf 3 2\n1 -2\n 3 0\n-1 0\n").unwrap();
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.num_clauses(), 2);
        assert_eq!(f.clauses()[0].len(), 3);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(import_dimacs("1 2 0\n"), Err(DimacsError::Header { .. })));
        assert!(matches!(import_dimacs("p cnf x 1\n"), Err(DimacsError::Header { .. })));
        assert!(matches!(
            import_dimacs("p cnf 1 1\n1 a 0\n"),
            Err(DimacsError::Literal { .. })
        ));
        assert!(matches!(
            import_dimacs("p cnf 1 1\n2 0\n"),
            Err(DimacsError::VarOutOfRange { .. })
        ));
        assert!(matches!(
            import_dimacs("p cnf 1 2\n1 0\n"),
            Err(DimacsError::ClauseCount { .. })
        ));
    }
}
