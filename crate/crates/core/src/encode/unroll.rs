//! Loop unrolling into a loop-free body whose statements remember the
//! original statement id and which replication they are.

use std::collections::BTreeMap;

use crate::lang::{Expr, Method, Param, Stmt, StmtId, StmtKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UKind {
    Assign {
        var: String,
        value: Expr,
    },
    FieldAssign {
        target: Expr,
        field: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then_branch: Vec<UStmt>,
        else_branch: Vec<UStmt>,
    },
    /// Guard evaluated after the last unrolled iteration: if it still holds,
    /// the run needs more iterations than the bound and leaves the scope.
    ScopeCheck {
        cond: Expr,
    },
    Return(Expr),
    New {
        var: String,
        record: String,
    },
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UStmt {
    pub origin: StmtId,
    pub replica: u32,
    pub kind: UKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnrolledMethod {
    pub body: Vec<UStmt>,
    /// Unconstrained variables introduced by rewriting, treated as extra
    /// inputs of the method.
    pub extra: Vec<Param>,
}

impl UnrolledMethod {
    /// Every unrolled statement in preorder.
    pub fn statements(&self) -> Vec<&UStmt> {
        fn go<'a>(b: &'a [UStmt], out: &mut Vec<&'a UStmt>) {
            for s in b {
                out.push(s);
                if let UKind::If {
                    then_branch,
                    else_branch,
                    ..
                } = &s.kind
                {
                    go(then_branch, out);
                    go(else_branch, out);
                }
            }
        }
        let mut out = Vec::new();
        go(&self.body, &mut out);
        out
    }

    /// Calls `f` on every replication of `origin`, outermost first.
    pub fn for_each_replica_mut(&mut self, origin: StmtId, f: &mut dyn FnMut(&mut UStmt)) {
        fn go(b: &mut [UStmt], origin: StmtId, f: &mut dyn FnMut(&mut UStmt)) {
            for s in b {
                if s.origin == origin {
                    f(s);
                }
                if let UKind::If {
                    then_branch,
                    else_branch,
                    ..
                } = &mut s.kind
                {
                    go(then_branch, origin, f);
                    go(else_branch, origin, f);
                }
            }
        }
        go(&mut self.body, origin, f)
    }

    /// Number of replications of each original statement.
    pub fn replication_map(&self) -> BTreeMap<StmtId, u32> {
        let mut m = BTreeMap::new();
        for s in self.statements() {
            *m.entry(s.origin).or_insert(0) += 1;
        }
        m
    }
}

/// Unrolls every loop `bound` times. The guard of a loop is replicated
/// `bound + 1` times: one per iteration plus the final scope check.
pub fn unroll(m: &Method, bound: u32) -> UnrolledMethod {
    let mut counters = BTreeMap::new();
    UnrolledMethod {
        body: unroll_block(&m.body, bound, &mut counters),
        extra: Vec::new(),
    }
}

fn next_replica(counters: &mut BTreeMap<StmtId, u32>, id: StmtId) -> u32 {
    let c = counters.entry(id).or_insert(0);
    *c += 1;
    *c - 1
}

fn unroll_block(b: &[Stmt], bound: u32, counters: &mut BTreeMap<StmtId, u32>) -> Vec<UStmt> {
    b.iter()
        .map(|s| unroll_stmt(s, bound, counters))
        .collect()
}

fn unroll_stmt(s: &Stmt, bound: u32, counters: &mut BTreeMap<StmtId, u32>) -> UStmt {
    let mk = |kind, counters: &mut BTreeMap<StmtId, u32>| UStmt {
        origin: s.id,
        replica: next_replica(counters, s.id),
        kind,
    };
    match &s.kind {
        StmtKind::Assign { var, value } => mk(
            UKind::Assign {
                var: var.clone(),
                value: value.clone(),
            },
            counters,
        ),
        StmtKind::FieldAssign {
            target,
            field,
            value,
        } => mk(
            UKind::FieldAssign {
                target: target.clone(),
                field: field.clone(),
                value: value.clone(),
            },
            counters,
        ),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let replica = next_replica(counters, s.id);
            UStmt {
                origin: s.id,
                replica,
                kind: UKind::If {
                    cond: cond.clone(),
                    then_branch: unroll_block(then_branch, bound, counters),
                    else_branch: unroll_block(else_branch, bound, counters),
                },
            }
        }
        StmtKind::While { cond, body } => unroll_loop(s.id, cond, body, bound, 0, counters),
        StmtKind::Return(e) => mk(UKind::Return(e.clone()), counters),
        StmtKind::New { var, record } => mk(
            UKind::New {
                var: var.clone(),
                record: record.clone(),
            },
            counters,
        ),
        StmtKind::Skip => mk(UKind::Skip, counters),
    }
}

fn unroll_loop(
    id: StmtId,
    cond: &Expr,
    body: &[Stmt],
    bound: u32,
    iter: u32,
    counters: &mut BTreeMap<StmtId, u32>,
) -> UStmt {
    let replica = next_replica(counters, id);
    if iter == bound {
        return UStmt {
            origin: id,
            replica,
            kind: UKind::ScopeCheck { cond: cond.clone() },
        };
    }
    let mut then_branch = unroll_block(body, bound, counters);
    then_branch.push(unroll_loop(id, cond, body, bound, iter + 1, counters));
    UStmt {
        origin: id,
        replica,
        kind: UKind::If {
            cond: cond.clone(),
            then_branch,
            else_branch: Vec::new(),
        },
    }
}
