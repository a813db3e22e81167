//! Bounded verification: fault detection and acceptance of fix candidates.

use std::collections::BTreeSet;

use stitch_sat::{GroupSolver, SolveOptions, Tracking, Verdict};
use thiserror::Error;

use crate::encode::{encode_correctness, Conjunct};
use crate::interp::{execute, Input, InputPool, RunOutcome};
use crate::lang::{Method, Program, StmtId};
use crate::scope::Scope;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub input: Input,
    pub outcome: RunOutcome,
    pub trace: Vec<StmtId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Detection {
    /// No violating input in scope. `vacuous` when no input in scope even
    /// satisfies the precondition.
    Correct { vacuous: bool },
    Faulty(Counterexample),
    /// The solver gave up.
    Unknown,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("decoded input does not reproduce a violation (outcome {0:?})")]
    ReplayMismatch(RunOutcome),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    pub conflict_budget: Option<u64>,
    pub seed: u64,
}

impl VerifyOptions {
    fn solve_options(&self, tracking: Tracking) -> SolveOptions {
        SolveOptions {
            tracking,
            conflict_budget: self.conflict_budget,
            seed: self.seed,
        }
    }
}

/// Up to `limit` distinct counterexamples, each found after blocking the
/// previous ones. The flag is false if the solver gave up on the way.
pub fn detect_many(
    prog: &Program,
    m: &Method,
    scope: Scope,
    limit: usize,
    opts: &VerifyOptions,
) -> Result<(Vec<Counterexample>, Detection), VerifyError> {
    let enc = encode_correctness(prog, m, scope);
    let ens = enc.group_id(Conjunct::Ensures).expect("ensures group");
    let mut gs = GroupSolver::new(&enc.cnf, &opts.solve_options(Tracking::Only(BTreeSet::from([ens]))));
    let all = BTreeSet::from([ens]);
    let mut found: Vec<Counterexample> = Vec::new();
    loop {
        if found.len() == limit {
            let first = found[0].clone();
            return Ok((found, Detection::Faulty(first)));
        }
        match gs.solve_with(&all, &[]) {
            Verdict::Sat(model) => {
                let input = enc.decode(&model);
                let ex = execute(prog, m, scope, &input);
                if !ex.outcome.is_violation() {
                    return Err(VerifyError::ReplayMismatch(ex.outcome));
                }
                gs.add_hard_clause(&enc.blocking_clause(&input));
                found.push(Counterexample {
                    input,
                    outcome: ex.outcome,
                    trace: ex.trace,
                });
            }
            Verdict::Unsat { .. } => {
                if let Some(first) = found.first() {
                    let first = first.clone();
                    return Ok((found, Detection::Faulty(first)));
                }
                // Correct; check whether any input satisfies the precondition.
                let vacuous = matches!(gs.solve_with(&BTreeSet::new(), &[]), Verdict::Unsat { .. });
                return Ok((found, Detection::Correct { vacuous }));
            }
            Verdict::Unknown => {
                let d = match found.first() {
                    Some(f) => Detection::Faulty(f.clone()),
                    None => Detection::Unknown,
                };
                return Ok((found, d));
            }
        }
    }
}

pub fn detect(prog: &Program, m: &Method, scope: Scope, opts: &VerifyOptions) -> Result<Detection, VerifyError> {
    detect_many(prog, m, scope, 1, opts).map(|(_, d)| d)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Acceptance {
    Accepted,
    Rejected(Counterexample),
    /// The solver gave up; the candidate is treated as rejected.
    Unknown,
}

/// Verifies a candidate that passed the sieve. A counterexample is added to
/// the pool.
pub fn accept(
    prog: &Program,
    candidate: &Method,
    scope: Scope,
    pool: &mut InputPool,
    opts: &VerifyOptions,
) -> Result<Acceptance, VerifyError> {
    Ok(match detect(prog, candidate, scope, opts)? {
        Detection::Correct { .. } => Acceptance::Accepted,
        Detection::Faulty(cex) => {
            // The pool checks the precondition again; a decoded input always
            // satisfies it.
            let _ = pool.add(prog, candidate, scope, cex.input.clone());
            Acceptance::Rejected(cex)
        }
        Detection::Unknown => {
            log::warn!("solver gave up on candidate `{}`", candidate.name);
            Acceptance::Unknown
        }
    })
}
