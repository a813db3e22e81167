//! Intra-statement mutation operators, per-statement mutation lists, vector
//! application and structural hashing of mutants.

pub mod iter;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use iter::VectorIter;

use crate::lang::{
    expr_to_string, expr_type, method_to_string, BinOp, Expr, ExprCtx, Method, Program, Stmt,
    StmtId, StmtKind, Type, UnOp,
};

/// Mutation operators, declared in canonical (name) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operator {
    /// Unary minus deletion.
    AODU,
    /// Unary minus insertion on integer variables and fields.
    AOIU,
    /// Binary arithmetic operator replacement.
    AORB,
    /// Negation deletion.
    COD,
    /// Negation insertion on boolean subexpressions.
    COI,
    /// Connector replacement among `&&`, `||`, `^`.
    COR,
    /// Integer literal replacement.
    CRCR,
    /// Navigation chain mutation: add, remove or replace a field.
    PRV,
    /// Relational operator replacement.
    ROR,
    /// Variable replacement by a variable of the same type.
    VRR,
}

impl Operator {
    pub const ALL: [Operator; 10] = [
        Operator::AODU,
        Operator::AOIU,
        Operator::AORB,
        Operator::COD,
        Operator::COI,
        Operator::COR,
        Operator::CRCR,
        Operator::PRV,
        Operator::ROR,
        Operator::VRR,
    ];
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MutateError {
    #[error("unknown mutation operator `{0}`")]
    UnknownOperator(String),
    #[error("vector has {got} positions, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("index {index} out of range at position {pos} (arity {arity})")]
    OutOfRange { pos: usize, index: u32, arity: u32 },
    #[error("statement {0} has no budget left")]
    Budget(StmtId),
}

impl FromStr for Operator {
    type Err = MutateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Operator::ALL
            .iter()
            .copied()
            .find(|o| o.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| MutateError::UnknownOperator(s.to_string()))
    }
}

/// Which expression of a statement a mutation rewrites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    /// Object expression on the left of a field assignment.
    Target,
    /// Right-hand side of an assignment.
    Value,
    /// Guard of an `if` or `while`.
    Cond,
    /// Returned expression.
    Returned,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mutation {
    pub op: Operator,
    pub site: Site,
    /// Path of the rewritten subexpression within the site expression.
    pub path: Vec<usize>,
    pub before: Expr,
    pub after: Expr,
    /// The whole site expression after rewriting.
    pub expr: Expr,
}

impl Mutation {
    pub fn describe(&self) -> String {
        format!(
            "{}: {} -> {}",
            self.op,
            expr_to_string(&self.before),
            expr_to_string(&self.after)
        )
    }
}

/// Mutable expressions of a statement, in source order.
pub fn sites(s: &Stmt) -> Vec<(Site, &Expr)> {
    match &s.kind {
        StmtKind::Assign { value, .. } => vec![(Site::Value, value)],
        StmtKind::FieldAssign { target, value, .. } => {
            vec![(Site::Target, target), (Site::Value, value)]
        }
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![(Site::Cond, cond)],
        StmtKind::Return(e) => vec![(Site::Returned, e)],
        StmtKind::New { .. } | StmtKind::Skip => vec![],
    }
}

fn site_mut(s: &mut Stmt, site: Site) -> &mut Expr {
    match (&mut s.kind, site) {
        (StmtKind::Assign { value, .. }, Site::Value) => value,
        (StmtKind::FieldAssign { target, .. }, Site::Target) => target,
        (StmtKind::FieldAssign { value, .. }, Site::Value) => value,
        (StmtKind::If { cond, .. }, Site::Cond) | (StmtKind::While { cond, .. }, Site::Cond) => cond,
        (StmtKind::Return(e), Site::Returned) => e,
        _ => panic!("statement has no such site"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalog {
    pub ops: BTreeSet<Operator>,
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog {
            ops: Operator::ALL.into_iter().collect(),
        }
    }
}

fn ty(p: &Program, m: &Method, e: &Expr) -> Option<Type> {
    expr_type(p, m, e, ExprCtx::Body).ok()
}

/// Whether `e` may stand at `site` of `s`.
fn fits(p: &Program, m: &Method, s: &Stmt, site: Site, e: &Expr) -> bool {
    let Some(t) = ty(p, m, e) else {
        return false;
    };
    match (&s.kind, site) {
        (StmtKind::Assign { var, .. }, Site::Value) => {
            m.var_type(var).is_some_and(|vt| vt.accepts(&t))
        }
        (StmtKind::FieldAssign { field, .. }, Site::Target) => match &t {
            Type::Ref(r) => p.record(r).and_then(|d| d.field_type(field)).is_some_and(|ft| {
                // The value must still fit the field.
                match &s.kind {
                    StmtKind::FieldAssign { value, .. } => {
                        ty(p, m, value).is_some_and(|vt| ft.accepts(&vt))
                    }
                    _ => false,
                }
            }),
            _ => false,
        },
        (StmtKind::FieldAssign { target, field, .. }, Site::Value) => ty(p, m, target)
            .and_then(|tt| match tt {
                Type::Ref(r) => p.record(&r).and_then(|d| d.field_type(field)).cloned(),
                _ => None,
            })
            .is_some_and(|ft| ft.accepts(&t)),
        (_, Site::Cond) => t == Type::Bool,
        (_, Site::Returned) => m.ret.as_ref().is_some_and(|rt| rt.accepts(&t)),
        _ => false,
    }
}

impl Catalog {
    pub fn with_ops(ops: impl IntoIterator<Item = Operator>) -> Catalog {
        Catalog {
            ops: ops.into_iter().collect(),
        }
    }

    /// Every single mutation of `s`, in canonical order, without duplicates
    /// and without mutations that leave the statement unchanged.
    pub fn statement_mutations(&self, p: &Program, m: &Method, s: &Stmt) -> Vec<Mutation> {
        let mut raw = Vec::new();
        for &op in &self.ops {
            for (site, e) in sites(s) {
                for path in e.paths() {
                    let sub = e.at_path(&path).expect("valid path");
                    let parent = path
                        .split_last()
                        .map(|(_, pre)| e.at_path(pre).expect("valid path"));
                    for after in replacements(p, m, op, sub, parent) {
                        let expr = e.replace_at(&path, after.clone());
                        if &expr == e || !fits(p, m, s, site, &expr) {
                            continue;
                        }
                        raw.push(Mutation {
                            op,
                            site,
                            path: path.clone(),
                            before: sub.clone(),
                            after,
                            expr,
                        });
                    }
                }
            }
        }
        let mut seen = BTreeSet::new();
        raw.into_iter()
            .filter(|mu| seen.insert((mu.site, expr_to_string(&mu.expr))))
            .collect()
    }

    /// Mutation lists of the statements with positive budget, bottom-most
    /// statement first.
    pub fn obtain_mutants(&self, p: &Program, m: &Method) -> MutationTable {
        let positions = m.mutable_from_bottom();
        let lists = positions
            .iter()
            .map(|id| self.statement_mutations(p, m, m.statement(*id).unwrap()))
            .collect();
        MutationTable { positions, lists }
    }
}

/// Replacement candidates for subexpression `e` under operator `op`.
fn replacements(p: &Program, m: &Method, op: Operator, e: &Expr, parent: Option<&Expr>) -> Vec<Expr> {
    let t = ty(p, m, e);
    match op {
        Operator::AODU => match e {
            Expr::Unary(UnOp::Neg, a) => vec![(**a).clone()],
            _ => vec![],
        },
        Operator::AOIU => {
            let is_ref = matches!(e, Expr::Var(_) | Expr::Field(..));
            let under_neg = matches!(parent, Some(Expr::Unary(UnOp::Neg, _)));
            if is_ref && !under_neg && t == Some(Type::Int) {
                vec![Expr::un(UnOp::Neg, e.clone())]
            } else {
                vec![]
            }
        }
        Operator::AORB => match e {
            Expr::Binary(op, a, b) if op.is_arith() => BinOp::ARITH
                .iter()
                .filter(|o| *o != op)
                .map(|o| Expr::Binary(*o, a.clone(), b.clone()))
                .collect(),
            _ => vec![],
        },
        Operator::COD => match e {
            Expr::Unary(UnOp::Not, a) => vec![(**a).clone()],
            _ => vec![],
        },
        Operator::COI => {
            let is_not = matches!(e, Expr::Unary(UnOp::Not, _));
            let under_not = matches!(parent, Some(Expr::Unary(UnOp::Not, _)));
            if t == Some(Type::Bool) && !is_not && !under_not {
                vec![Expr::un(UnOp::Not, e.clone())]
            } else {
                vec![]
            }
        }
        Operator::COR => match e {
            Expr::Binary(op, a, b) if op.is_connector() => BinOp::COND
                .iter()
                .filter(|o| *o != op)
                .map(|o| Expr::Binary(*o, a.clone(), b.clone()))
                .collect(),
            _ => vec![],
        },
        Operator::CRCR => match e {
            Expr::Int(c) => {
                let mut out: Vec<i64> = Vec::new();
                for v in [0, 1, -1, c + 1, c - 1, -c] {
                    if v != *c && !out.contains(&v) {
                        out.push(v);
                    }
                }
                out.into_iter().map(Expr::Int).collect()
            }
            _ => vec![],
        },
        Operator::PRV => {
            // Only whole chains, not their proper prefixes.
            if matches!(parent, Some(Expr::Field(..))) {
                return vec![];
            }
            let Some((root, fields)) = e.as_chain() else {
                return vec![];
            };
            let Some(t) = t else { return vec![] };
            navigation_mutants(p, m, root, &fields, &t)
        }
        Operator::ROR => match e {
            Expr::Binary(op, a, b) if op.is_relational() => {
                let operands_int = ty(p, m, a) == Some(Type::Int);
                let choices: Vec<BinOp> = if operands_int {
                    BinOp::REL.to_vec()
                } else {
                    vec![BinOp::Eq, BinOp::Ne]
                };
                choices
                    .into_iter()
                    .filter(|o| o != op)
                    .map(|o| Expr::Binary(o, a.clone(), b.clone()))
                    .collect()
            }
            _ => vec![],
        },
        Operator::VRR => match (e, &t) {
            (Expr::Var(v), Some(t)) => m
                .variables()
                .into_iter()
                .filter(|w| &w.name != v && &w.ty == t)
                .map(|w| Expr::Var(w.name))
                .collect(),
            _ => vec![],
        },
    }
}

/// Chains obtained by removing, replacing or inserting one field, keeping
/// the chain's type.
fn navigation_mutants(p: &Program, m: &Method, root: &str, fields: &[&str], t: &Type) -> Vec<Expr> {
    let mut out = Vec::new();
    let keep = |e: Expr, out: &mut Vec<Expr>| {
        if ty(p, m, &e).as_ref() == Some(t) {
            out.push(e);
        }
    };
    // Field names available on the record reached after `j` steps.
    let names_at = |j: usize| -> Vec<String> {
        let base = Expr::chain(root, &fields[..j]);
        match ty(p, m, &base) {
            Some(Type::Ref(r)) => p
                .record(&r)
                .map(|d| d.fields.iter().map(|f| f.name.clone()).collect())
                .unwrap_or_default(),
            _ => vec![],
        }
    };
    for j in 0..fields.len() {
        let mut fs = fields.to_vec();
        fs.remove(j);
        keep(Expr::chain(root, &fs), &mut out);
    }
    for j in 0..fields.len() {
        for g in names_at(j) {
            if g == fields[j] {
                continue;
            }
            let mut fs = fields.to_vec();
            fs[j] = &g;
            keep(Expr::chain(root, &fs), &mut out);
        }
    }
    for j in 0..=fields.len() {
        for g in names_at(j) {
            let mut fs = fields.to_vec();
            fs.insert(j, &g);
            keep(Expr::chain(root, &fs), &mut out);
        }
    }
    out
}

/// Per mutable statement (bottom-most first) its list of mutations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MutationTable {
    pub positions: Vec<StmtId>,
    pub lists: Vec<Vec<Mutation>>,
}

impl MutationTable {
    pub fn arities(&self) -> Vec<u32> {
        self.lists.iter().map(|l| l.len() as u32).collect()
    }

    /// Number of vectors with exactly one non-zero position.
    pub fn single_mutations(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }
}

/// Applies vector `v` to `m`: position `i` with `v[i] > 0` replaces the
/// statement at `table.positions[i]` by its `v[i]`-th mutation and spends
/// one unit of its budget.
pub fn apply(m: &Method, table: &MutationTable, v: &[u32]) -> Result<Method, MutateError> {
    if v.len() != table.positions.len() {
        return Err(MutateError::Length {
            expected: table.positions.len(),
            got: v.len(),
        });
    }
    let mut out = m.clone();
    for (pos, (&j, &id)) in v.iter().zip(&table.positions).enumerate() {
        if j == 0 {
            continue;
        }
        let list = &table.lists[pos];
        if j as usize > list.len() {
            return Err(MutateError::OutOfRange {
                pos,
                index: j,
                arity: list.len() as u32,
            });
        }
        let mu = &list[j as usize - 1];
        let s = out.statement_mut(id).expect("statement exists");
        if s.budget == 0 {
            return Err(MutateError::Budget(id));
        }
        s.budget -= 1;
        *site_mut(s, mu.site) = mu.expr.clone();
    }
    Ok(out)
}

/// Applies one mutation to one statement, spending its budget.
pub fn apply_one(m: &Method, id: StmtId, mu: &Mutation) -> Result<Method, MutateError> {
    let mut out = m.clone();
    let s = out.statement_mut(id).expect("statement exists");
    if s.budget == 0 {
        return Err(MutateError::Budget(id));
    }
    s.budget -= 1;
    *site_mut(s, mu.site) = mu.expr.clone();
    Ok(out)
}

/// Structural hash of a method, ignoring budgets and statement ids.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MutantId(pub [u8; 32]);

impl fmt::Display for MutantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0[..8] {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl MutantId {
    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for MutantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MutantId({self})")
    }
}

pub fn mutant_hash(m: &Method) -> MutantId {
    let text = method_to_string(&m.with_budgets(&BTreeMap::new()));
    MutantId(Sha256::digest(text.as_bytes()).into())
}

/// How a mutant was derived: the chain of vectors from the original
/// method.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub steps: Vec<ProvenanceStep>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceStep {
    pub base: String,
    pub vector: Vec<u32>,
    /// Statement id and description of each applied mutation.
    pub mutations: Vec<(StmtId, String)>,
}

impl Provenance {
    pub fn depth(&self) -> usize {
        self.steps.iter().map(|s| s.mutations.len()).sum()
    }

    pub fn extend(&self, base: &Method, table: &MutationTable, v: &[u32]) -> Provenance {
        let mut out = self.clone();
        out.steps.push(ProvenanceStep {
            base: mutant_hash(base).to_string(),
            vector: v.to_vec(),
            mutations: v
                .iter()
                .enumerate()
                .filter(|(_, j)| **j > 0)
                .map(|(i, j)| (table.positions[i], table.lists[i][*j as usize - 1].describe()))
                .collect(),
        });
        out
    }
}

/// Number of candidates when iterating `d` rounds of `b` single
/// mutations: `(b^(d+1) - 1) / (b - 1)`. `None` on overflow.
pub fn estimate_space(b: u64, d: u32) -> Option<u64> {
    if b < 2 {
        return None;
    }
    let top = b.checked_pow(d + 1)?;
    Some((top - 1) / (b - 1))
}
