use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Statement identifier, unique within a method. Assigned in source
/// preorder starting at 1.
pub type StmtId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Int,
    Bool,
    Ref(String),
    /// Type of the `null` literal; compatible with every `Ref`.
    Null,
}

impl Type {
    pub fn is_ref(&self) -> bool {
        matches!(self, Type::Ref(_) | Type::Null)
    }

    /// Whether a value of type `other` may be stored where `self` is expected.
    pub fn accepts(&self, other: &Type) -> bool {
        match (self, other) {
            (Type::Ref(_), Type::Null) => true,
            (a, b) => a == b,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::Bool => write!(f, "bool"),
            Type::Ref(r) => write!(f, "{r}"),
            Type::Null => write!(f, "null"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Xor,
}

impl BinOp {
    pub const ARITH: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mod];
    pub const REL: [BinOp; 6] = [BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne];
    pub const COND: [BinOp; 3] = [BinOp::And, BinOp::Or, BinOp::Xor];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Xor => "^",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Xor => 3,
            BinOp::Eq | BinOp::Ne => 4,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 7,
        }
    }

    pub fn is_arith(self) -> bool {
        Self::ARITH.contains(&self)
    }

    pub fn is_relational(self) -> bool {
        Self::REL.contains(&self)
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_connector(self) -> bool {
        Self::COND.contains(&self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Null,
    Var(String),
    Field(Box<Expr>, String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `\old(e)`, ensures only.
    Old(Box<Expr>),
    /// `\result`, ensures only.
    Result,
    /// `reach(from, field, to)`: `to` is reachable from `from` by following
    /// `field` zero or more times (null is reachable from any acyclic chain).
    Reach(Box<Expr>, String, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn field(base: Expr, f: &str) -> Expr {
        Expr::Field(Box::new(base), f.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn un(op: UnOp, a: Expr) -> Expr {
        Expr::Unary(op, Box::new(a))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::And, a, b)
    }

    /// Splits a navigation chain `v.f1.….fk` into its root variable and
    /// field list. `None` for anything else.
    pub fn as_chain(&self) -> Option<(&str, Vec<&str>)> {
        match self {
            Expr::Var(v) => Some((v.as_str(), Vec::new())),
            Expr::Field(base, f) => {
                let (root, mut fields) = base.as_chain()?;
                fields.push(f.as_str());
                Some((root, fields))
            }
            _ => None,
        }
    }

    pub fn chain(root: &str, fields: &[&str]) -> Expr {
        fields
            .iter()
            .fold(Expr::var(root), |acc, f| Expr::field(acc, f))
    }

    /// Direct children in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Null | Expr::Var(_) | Expr::Result => vec![],
            Expr::Field(b, _) | Expr::Unary(_, b) | Expr::Old(b) => vec![b],
            Expr::Binary(_, a, b) | Expr::Reach(a, _, b) => vec![a, b],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Null | Expr::Var(_) | Expr::Result => vec![],
            Expr::Field(b, _) | Expr::Unary(_, b) | Expr::Old(b) => vec![b],
            Expr::Binary(_, a, b) | Expr::Reach(a, _, b) => vec![a, b],
        }
    }

    /// Subexpression at a preorder path (sequence of child indices).
    pub fn at_path(&self, path: &[usize]) -> Option<&Expr> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.children().get(*i)?.at_path(rest),
        }
    }

    /// Replaces the subexpression at `path`, returning the new tree.
    pub fn replace_at(&self, path: &[usize], with: Expr) -> Expr {
        let mut out = self.clone();
        {
            let mut cur = &mut out;
            for &i in path {
                cur = cur.children_mut().into_iter().nth(i).expect("valid path");
            }
            *cur = with;
        }
        out
    }

    /// All subexpression paths in preorder.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        fn go(e: &Expr, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            out.push(prefix.clone());
            for (i, c) in e.children().into_iter().enumerate() {
                prefix.push(i);
                go(c, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn mentions(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.mentions(pred))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
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
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Return(Expr),
    New {
        var: String,
        record: String,
    },
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub id: StmtId,
    /// `//mutGenLimit` budget; zero means immutable.
    pub budget: u32,
    pub kind: StmtKind,
}

impl Stmt {
    pub fn new(id: StmtId, kind: StmtKind) -> Stmt {
        Stmt { id, budget: 0, kind }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Contract {
    pub requires: Expr,
    pub ensures: Expr,
    pub invariant: Expr,
}

impl Default for Contract {
    fn default() -> Self {
        Contract {
            requires: Expr::Bool(true),
            ensures: Expr::Bool(true),
            invariant: Expr::Bool(true),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

/// Statement id to source position. Not part of structural equality.
#[derive(Clone, Debug, Default)]
pub struct SourceSpans(pub BTreeMap<StmtId, Span>);

impl PartialEq for SourceSpans {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for SourceSpans {}

impl std::hash::Hash for SourceSpans {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Method {
    pub name: String,
    /// Record type of the implicit `this`, if any.
    pub receiver: Option<String>,
    pub params: Vec<Param>,
    pub locals: Vec<Param>,
    /// `None` for void methods.
    pub ret: Option<Type>,
    pub contract: Contract,
    pub body: Vec<Stmt>,
    pub spans: SourceSpans,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RecordDecl {
    pub name: String,
    pub fields: Vec<Param>,
}

impl RecordDecl {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn field_type(&self, name: &str) -> Option<&Type> {
        self.fields.iter().find(|f| f.name == name).map(|f| &f.ty)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Program {
    pub records: Vec<RecordDecl>,
    pub methods: Vec<Method>,
}

impl Program {
    pub fn record(&self, name: &str) -> Option<&RecordDecl> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn method_mut(&mut self, name: &str) -> Option<&mut Method> {
        self.methods.iter_mut().find(|m| m.name == name)
    }

    /// Replaces the method of the same name.
    pub fn with_method(&self, m: Method) -> Program {
        let mut p = self.clone();
        if let Some(slot) = p.method_mut(&m.name) {
            *slot = m;
        }
        p
    }
}

impl Method {
    /// Declared type of a variable visible in the body (`this`, params, locals).
    pub fn var_type(&self, name: &str) -> Option<Type> {
        if name == "this" {
            return self.receiver.as_ref().map(|r| Type::Ref(r.clone()));
        }
        self.params
            .iter()
            .chain(self.locals.iter())
            .find(|p| p.name == name)
            .map(|p| p.ty.clone())
    }

    /// Variables in declaration order: `this`, params, locals.
    pub fn variables(&self) -> Vec<Param> {
        let mut out = Vec::new();
        if let Some(r) = &self.receiver {
            out.push(Param {
                name: "this".into(),
                ty: Type::Ref(r.clone()),
            });
        }
        out.extend(self.params.iter().cloned());
        out.extend(self.locals.iter().cloned());
        out
    }

    /// All statements in source preorder.
    pub fn statements(&self) -> Vec<&Stmt> {
        fn go<'a>(b: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
            for s in b {
                out.push(s);
                match &s.kind {
                    StmtKind::If {
                        then_branch,
                        else_branch,
                        ..
                    } => {
                        go(then_branch, out);
                        go(else_branch, out);
                    }
                    StmtKind::While { body, .. } => go(body, out),
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        go(&self.body, &mut out);
        out
    }

    pub fn statement(&self, id: StmtId) -> Option<&Stmt> {
        self.statements().into_iter().find(|s| s.id == id)
    }

    pub fn statement_mut(&mut self, id: StmtId) -> Option<&mut Stmt> {
        fn go(b: &mut [Stmt], id: StmtId) -> Option<&mut Stmt> {
            for s in b {
                if s.id == id {
                    return Some(s);
                }
                let found = match &mut s.kind {
                    StmtKind::If {
                        then_branch,
                        else_branch,
                        ..
                    } => go(then_branch, id).or_else(|| go(else_branch, id)),
                    StmtKind::While { body, .. } => go(body, id),
                    _ => None,
                };
                if found.is_some() {
                    return found;
                }
            }
            None
        }
        go(&mut self.body, id)
    }

    /// Ids of statements with a positive budget, numbered from the bottom:
    /// element 0 is the last mutable statement in the method.
    pub fn mutable_from_bottom(&self) -> Vec<StmtId> {
        let mut ids: Vec<StmtId> = self
            .statements()
            .into_iter()
            .filter(|s| s.budget > 0)
            .map(|s| s.id)
            .collect();
        ids.reverse();
        ids
    }

    pub fn total_budget(&self) -> u32 {
        self.statements().iter().map(|s| s.budget).sum()
    }

    pub fn budgets(&self) -> BTreeMap<StmtId, u32> {
        self.statements()
            .into_iter()
            .map(|s| (s.id, s.budget))
            .collect()
    }

    /// Sets every statement's budget from `budgets`, zero elsewhere.
    pub fn with_budgets(&self, budgets: &BTreeMap<StmtId, u32>) -> Method {
        let mut m = self.clone();
        let ids: Vec<StmtId> = m.statements().iter().map(|s| s.id).collect();
        for id in ids {
            let b = budgets.get(&id).copied().unwrap_or(0);
            m.statement_mut(id).unwrap().budget = b;
        }
        m
    }

    /// Largest nesting depth of `while` loops.
    pub fn loop_depth(&self) -> u32 {
        fn go(b: &[Stmt]) -> u32 {
            b.iter()
                .map(|s| match &s.kind {
                    StmtKind::If {
                        then_branch,
                        else_branch,
                        ..
                    } => go(then_branch).max(go(else_branch)),
                    StmtKind::While { body, .. } => 1 + go(body),
                    _ => 0,
                })
                .max()
                .unwrap_or(0)
        }
        go(&self.body)
    }
}
