//! Variabilization of the bottom-most mutable statements and the feedback
//! telling the driver how many of them can be skipped for a failing input.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use stitch_sat::{solve, SolveOptions, Tracking, Verdict};
use thiserror::Error;

use crate::encode::{encode_unrolled, unroll, EncodeError, Goal, InputMode, UKind, UnrolledMethod};
use crate::interp::{Input, Machine};
use crate::lang::{expr_type, Expr, ExprCtx, Method, Param, Program, StmtId, Type};
use crate::mutate::{apply, MutationTable, VectorIter};
use crate::scope::Scope;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PruneError {
    #[error("level {level} out of range 1..={max}")]
    Level { level: usize, max: usize },
    #[error("statement {0} has no expression to variabilize")]
    NotVariabilizable(StmtId),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// One fresh variable standing for the value a statement computes in one
/// replication.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreshVar {
    pub name: String,
    pub stmt: StmtId,
    pub replica: u32,
    pub role: Role,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    /// Right-hand side of an assignment.
    Value,
    /// Object written by a field assignment.
    Target,
    Guard,
    Returned,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variabilized {
    pub body: UnrolledMethod,
    pub level: usize,
    pub fresh: Vec<FreshVar>,
}

fn static_type(prog: &Program, m: &Method, e: &Expr) -> Type {
    expr_type(prog, m, e, ExprCtx::Body).expect("typed method")
}

/// Replaces every replication of the statements `positions[..level]` by a
/// version reading fresh unconstrained variables.
pub fn variabilize(
    prog: &Program,
    m: &Method,
    positions: &[StmtId],
    level: usize,
    scope: &Scope,
) -> Result<Variabilized, PruneError> {
    if level == 0 || level > positions.len() {
        return Err(PruneError::Level {
            level,
            max: positions.len(),
        });
    }
    let mut body = unroll(m, scope.unroll);
    let mut fresh: Vec<FreshVar> = Vec::new();
    let mut extra: Vec<Param> = Vec::new();
    for &id in &positions[..level] {
        let mut err = None;
        let mut mk = |replica: u32, role: Role, ty: Type| -> Expr {
            let name = format!("${}_{}_{:?}", id, replica, role).to_lowercase();
            fresh.push(FreshVar {
                name: name.clone(),
                stmt: id,
                replica,
                role,
            });
            extra.push(Param {
                name: name.clone(),
                ty,
            });
            Expr::Var(name)
        };
        body.for_each_replica_mut(id, &mut |s| {
            let r = s.replica;
            match &mut s.kind {
                UKind::Assign { var, value } => {
                    let t = m.var_type(var).expect("declared variable");
                    *value = mk(r, Role::Value, t);
                }
                UKind::FieldAssign {
                    target,
                    field,
                    value,
                } => {
                    let tt = static_type(prog, m, target);
                    let ft = match &tt {
                        Type::Ref(rec) => prog
                            .record(rec)
                            .and_then(|d| d.field_type(field))
                            .cloned()
                            .expect("declared field"),
                        _ => unreachable!("field assignment on non-reference"),
                    };
                    *target = mk(r, Role::Target, tt);
                    *value = mk(r, Role::Value, ft);
                }
                UKind::If { cond, .. } | UKind::ScopeCheck { cond } => {
                    *cond = mk(r, Role::Guard, Type::Bool);
                }
                UKind::Return(e) => {
                    let t = m.ret.clone().unwrap_or_else(|| static_type(prog, m, e));
                    *e = mk(r, Role::Returned, t);
                }
                UKind::New { .. } | UKind::Skip => err = Some(PruneError::NotVariabilizable(id)),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    body.extra = extra;
    Ok(Variabilized { body, level, fresh })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelVerdict {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    pub stmt: StmtId,
    pub verdict: LevelVerdict,
    pub millis: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    /// Number of consecutive unsatisfiable levels from the bottom.
    pub k: usize,
    pub trail: Vec<LevelResult>,
}

/// Whether some values for the variabilized statements let the run from
/// `input` satisfy the contract (or leave the scope).
pub fn level_verdict(
    prog: &Program,
    m: &Method,
    positions: &[StmtId],
    level: usize,
    input: &Input,
    scope: Scope,
    conflict_budget: Option<u64>,
) -> Result<LevelVerdict, PruneError> {
    let v = variabilize(prog, m, positions, level, &scope)?;
    let enc = encode_unrolled(
        prog,
        m,
        &v.body,
        scope,
        &InputMode::Pinned(input.clone()),
        Goal::Feasibility,
    )?;
    let opts = SolveOptions {
        tracking: Tracking::None,
        conflict_budget,
        seed: 0,
    };
    Ok(match solve(&enc.cnf, &[], &opts) {
        Verdict::Sat(_) => LevelVerdict::Sat,
        Verdict::Unsat { .. } => LevelVerdict::Unsat,
        Verdict::Unknown => LevelVerdict::Unknown,
    })
}

/// Ascends levels 1, 2, ... and stops at the first level that is not
/// unsatisfiable. `positions` are the mutable statements of the base
/// method, bottom-most first.
pub fn get_feedback(
    prog: &Program,
    m: &Method,
    positions: &[StmtId],
    input: &Input,
    scope: Scope,
    conflict_budget: Option<u64>,
) -> Result<Feedback, PruneError> {
    let mut fb = Feedback::default();
    for level in 1..=positions.len() {
        let t = Instant::now();
        let verdict = level_verdict(prog, m, positions, level, input, scope, conflict_budget)?;
        fb.trail.push(LevelResult {
            level,
            stmt: positions[level - 1],
            verdict,
            millis: t.elapsed().as_secs_f64() * 1000.0,
        });
        if verdict != LevelVerdict::Unsat {
            break;
        }
        fb.k = level;
    }
    Ok(fb)
}

/// Outcome of brute-forcing every vector that a feedback of `k` skips.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SoundnessReport {
    pub checked: usize,
    /// Skipped vectors whose mutant does not fail on the input.
    pub passing: Vec<Vec<u32>>,
}

impl SoundnessReport {
    pub fn sound(&self) -> bool {
        self.passing.is_empty()
    }
}

/// Applies every vector agreeing with `v` on positions `k..` to `base` and
/// runs it on `input`. With `k == 0` nothing is skipped.
pub fn prune_soundness_oracle(
    prog: &Program,
    base: &Method,
    table: &MutationTable,
    v: &[u32],
    k: usize,
    input: &Input,
    scope: Scope,
) -> SoundnessReport {
    let mut report = SoundnessReport::default();
    if k == 0 {
        return report;
    }
    let arities = table.arities();
    let mut it = VectorIter::new(&arities[..k]);
    while let Some(low) = it.next() {
        let mut w = low;
        w.extend_from_slice(&v[k..]);
        let Ok(mutant) = apply(base, table, &w) else {
            continue;
        };
        report.checked += 1;
        let ex = Machine::new(prog, &mutant, scope).execute(input);
        if !ex.outcome.is_violation() {
            report.passing.push(w);
        }
    }
    report
}
