//! Fault localization from unsat cores of failing runs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stitch_sat::{minimize_core, solve, SolveOptions, Tracking, Verdict};
use thiserror::Error;

use crate::encode::{encode_trace_refutation, EncodeError};
use crate::interp::Input;
use crate::lang::{Method, Program, Span, StmtId};
use crate::scope::Scope;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocalizeError {
    #[error("counterexample {index}: {source}")]
    Replay { index: usize, source: EncodeError },
    #[error("counterexample {0}: refutation not unsatisfiable")]
    NotRefuted(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuspiciousReport {
    /// Number of cores each statement appeared in.
    pub hits: BTreeMap<StmtId, usize>,
    pub cores: usize,
    pub selected: BTreeSet<StmtId>,
    pub spans: BTreeMap<StmtId, Span>,
}

#[derive(Clone, Copy, Debug)]
pub struct LocalizeOptions {
    /// Fraction of cores a statement must appear in; 1.0 is intersection.
    pub threshold: f64,
    pub conflict_budget: Option<u64>,
    pub seed: u64,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        LocalizeOptions {
            threshold: 1.0,
            conflict_budget: None,
            seed: 0,
        }
    }
}

/// Statements named by a minimized core of the run of `m` on `cex`.
pub fn core_statements(
    prog: &Program,
    m: &Method,
    scope: Scope,
    cex: &Input,
    opts: &LocalizeOptions,
) -> Result<Option<BTreeSet<StmtId>>, EncodeError> {
    let enc = encode_trace_refutation(prog, m, scope, cex)?;
    let so = SolveOptions {
        tracking: Tracking::Only(enc.soft_groups()),
        conflict_budget: opts.conflict_budget,
        seed: opts.seed,
    };
    match solve(&enc.cnf, &[], &so) {
        Verdict::Unsat { core, .. } => {
            let min = minimize_core(&enc.cnf, &core, &so);
            Ok(Some(enc.statements_of(&min.groups)))
        }
        _ => Ok(None),
    }
}

pub fn localize(
    prog: &Program,
    m: &Method,
    scope: Scope,
    cexs: &[Input],
    opts: &LocalizeOptions,
) -> Result<SuspiciousReport, LocalizeError> {
    let cores: Vec<BTreeSet<StmtId>> = cexs
        .par_iter()
        .enumerate()
        .map(|(index, cex)| match core_statements(prog, m, scope, cex, opts) {
            Ok(Some(s)) => Ok(s),
            Ok(None) => Err(LocalizeError::NotRefuted(index)),
            Err(source) => Err(LocalizeError::Replay { index, source }),
        })
        .collect::<Result<_, _>>()?;
    let mut hits: BTreeMap<StmtId, usize> = BTreeMap::new();
    for c in &cores {
        for s in c {
            *hits.entry(*s).or_insert(0) += 1;
        }
    }
    let need = (opts.threshold * cores.len() as f64).ceil().max(1.0) as usize;
    let selected: BTreeSet<StmtId> = hits
        .iter()
        .filter(|(_, &h)| h >= need)
        .map(|(s, _)| *s)
        .collect();
    let spans = selected
        .iter()
        .filter_map(|s| m.spans.0.get(s).map(|sp| (*s, *sp)))
        .collect();
    Ok(SuspiciousReport {
        hits,
        cores: cores.len(),
        selected,
        spans,
    })
}

/// Gives every selected statement `budget` and all others zero.
pub fn annotate(m: &Method, r: &SuspiciousReport, budget: u32) -> Method {
    let b = r.selected.iter().map(|s| (*s, budget)).collect();
    m.with_budgets(&b)
}
