use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::LangError;

const RESERVED: &[&str] = &[
    "record", "method", "var", "if", "else", "while", "return", "new", "null", "true", "false",
    "this", "requires", "ensures", "invariant", "reach", "int", "bool",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: StmtId,
    last_started: Option<StmtId>,
    budgets: BTreeMap<StmtId, u32>,
    spans: BTreeMap<StmtId, Span>,
}

/// Parses and name-resolves a whole program. Statement ids are assigned in
/// preorder from 1 in each method.
pub fn parse(src: &str) -> Result<Program, LangError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        next_id: 1,
        last_started: None,
        budgets: BTreeMap::new(),
        spans: BTreeMap::new(),
    };
    let prog = p.program()?;
    resolve(&prog, &p.toks)?;
    Ok(prog)
}

/// Parses a standalone expression (no name resolution).
pub fn parse_expr(src: &str) -> Result<Expr, LangError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        next_id: 1,
        last_started: None,
        budgets: BTreeMap::new(),
        spans: BTreeMap::new(),
    };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

impl Parser {
    fn absorb_budgets(&mut self) -> Result<(), LangError> {
        while let Tok::Budget(k) = self.toks[self.pos].tok {
            let span = self.toks[self.pos].span;
            let Some(id) = self.last_started else {
                return Err(LangError::Syntax {
                    span,
                    msg: "budget annotation does not follow a statement".into(),
                });
            };
            if self.budgets.insert(id, k).is_some() {
                return Err(LangError::Syntax {
                    span,
                    msg: "statement already carries a budget annotation".into(),
                });
            }
            self.pos += 1;
        }
        Ok(())
    }

    fn peek(&mut self) -> Result<&Tok, LangError> {
        self.absorb_budgets()?;
        Ok(&self.toks[self.pos].tok)
    }

    fn peek2(&mut self) -> Result<&Tok, LangError> {
        self.absorb_budgets()?;
        let mut j = self.pos + 1;
        while matches!(self.toks.get(j).map(|t| &t.tok), Some(Tok::Budget(_))) {
            j += 1;
        }
        Ok(&self.toks[j.min(self.toks.len() - 1)].tok)
    }

    fn span(&mut self) -> Result<Span, LangError> {
        self.absorb_budgets()?;
        Ok(self.toks[self.pos].span)
    }

    fn bump(&mut self) -> Result<Token, LangError> {
        self.absorb_budgets()?;
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        Ok(t)
    }

    fn err<T>(&mut self, msg: impl Into<String>) -> Result<T, LangError> {
        Err(LangError::Syntax {
            span: self.span()?,
            msg: msg.into(),
        })
    }

    fn is_sym(&mut self, s: &str) -> Result<bool, LangError> {
        Ok(matches!(self.peek()?, Tok::Sym(x) if *x == s))
    }

    fn is_kw(&mut self, s: &str) -> Result<bool, LangError> {
        Ok(matches!(self.peek()?, Tok::Ident(x) if x == s))
    }

    fn eat_sym(&mut self, s: &str) -> Result<bool, LangError> {
        if self.is_sym(s)? {
            self.bump()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), LangError> {
        if self.eat_sym(s)? {
            Ok(())
        } else {
            let found = describe(self.peek()?);
            self.err(format!("expected `{s}`, found {found}"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), LangError> {
        if self.is_kw(s)? {
            self.bump()?;
            Ok(())
        } else {
            let found = describe(self.peek()?);
            self.err(format!("expected `{s}`, found {found}"))
        }
    }

    fn expect_eof(&mut self) -> Result<(), LangError> {
        if *self.peek()? == Tok::Eof {
            Ok(())
        } else {
            let found = describe(self.peek()?);
            self.err(format!("expected end of input, found {found}"))
        }
    }

    fn ident(&mut self) -> Result<String, LangError> {
        match self.peek()?.clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.bump()?;
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn ty(&mut self) -> Result<Type, LangError> {
        if self.is_kw("int")? {
            self.bump()?;
            return Ok(Type::Int);
        }
        if self.is_kw("bool")? {
            self.bump()?;
            return Ok(Type::Bool);
        }
        Ok(Type::Ref(self.ident()?))
    }

    fn program(&mut self) -> Result<Program, LangError> {
        let mut prog = Program::default();
        loop {
            if *self.peek()? == Tok::Eof {
                return Ok(prog);
            }
            if self.is_kw("record")? {
                prog.records.push(self.record()?);
            } else if self.is_kw("method")? {
                prog.methods.push(self.method()?);
            } else {
                let found = describe(self.peek()?);
                return self.err(format!("expected `record` or `method`, found {found}"));
            }
        }
    }

    fn record(&mut self) -> Result<RecordDecl, LangError> {
        self.expect_kw("record")?;
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut fields = Vec::new();
        while !self.eat_sym("}")? {
            let f = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            self.expect_sym(";")?;
            fields.push(Param { name: f, ty });
        }
        Ok(RecordDecl { name, fields })
    }

    fn params(&mut self) -> Result<Vec<Param>, LangError> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if self.eat_sym(")")? {
            return Ok(out);
        }
        loop {
            let name = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            out.push(Param { name, ty });
            if self.eat_sym(")")? {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    fn method(&mut self) -> Result<Method, LangError> {
        self.expect_kw("method")?;
        self.next_id = 1;
        self.last_started = None;
        self.budgets.clear();
        self.spans.clear();
        let first = self.ident()?;
        let (receiver, name) = if self.eat_sym(".")? {
            (Some(first), self.ident()?)
        } else {
            (None, first)
        };
        let params = self.params()?;
        let ret = if self.eat_sym(":")? {
            Some(self.ty()?)
        } else {
            None
        };
        let mut contract = Contract::default();
        loop {
            let kind = match self.peek()? {
                Tok::Ident(k) if ["requires", "ensures", "invariant"].contains(&k.as_str()) => {
                    k.clone()
                }
                _ => break,
            };
            self.bump()?;
            let e = self.expr()?;
            self.expect_sym(";")?;
            let slot = match kind.as_str() {
                "requires" => &mut contract.requires,
                "ensures" => &mut contract.ensures,
                _ => &mut contract.invariant,
            };
            *slot = match std::mem::replace(slot, Expr::Bool(true)) {
                Expr::Bool(true) => e,
                prev => Expr::and(prev, e),
            };
        }
        self.expect_sym("{")?;
        let mut locals = Vec::new();
        while self.is_kw("var")? {
            self.bump()?;
            let name = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            self.expect_sym(";")?;
            locals.push(Param { name, ty });
        }
        let body = self.block_rest()?;
        // Annotations trailing the final statement.
        self.absorb_budgets()?;
        let mut m = Method {
            name,
            receiver,
            params,
            locals,
            ret,
            contract,
            body,
            spans: SourceSpans(std::mem::take(&mut self.spans)),
        };
        let budgets = std::mem::take(&mut self.budgets);
        m = m.with_budgets(&budgets);
        Ok(m)
    }

    /// Statements up to and including the closing `}`.
    fn block_rest(&mut self) -> Result<Vec<Stmt>, LangError> {
        let mut out = Vec::new();
        loop {
            if self.eat_sym("}")? {
                return Ok(out);
            }
            if *self.peek()? == Tok::Eof {
                return self.err("unexpected end of input, expected `}`");
            }
            out.push(self.stmt()?);
        }
    }

    fn block(&mut self) -> Result<Vec<Stmt>, LangError> {
        self.expect_sym("{")?;
        self.block_rest()
    }

    fn begin_stmt(&mut self) -> Result<StmtId, LangError> {
        let span = self.span()?;
        let id = self.next_id;
        self.next_id += 1;
        self.last_started = Some(id);
        self.spans.insert(id, span);
        Ok(id)
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        let id = self.begin_stmt()?;
        let kind = if self.eat_sym(";")? {
            StmtKind::Skip
        } else if self.is_kw("if")? {
            self.bump()?;
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then_branch = self.block()?;
            let else_branch = if self.is_kw("else")? {
                self.bump()?;
                if self.is_kw("if")? {
                    vec![self.stmt()?]
                } else {
                    self.block()?
                }
            } else {
                Vec::new()
            };
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            }
        } else if self.is_kw("while")? {
            self.bump()?;
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let body = self.block()?;
            StmtKind::While { cond, body }
        } else if self.is_kw("return")? {
            self.bump()?;
            let e = self.expr()?;
            self.expect_sym(";")?;
            StmtKind::Return(e)
        } else if matches!(self.peek()?, Tok::Ident(_))
            && matches!(self.peek2()?, Tok::Sym("="))
            && !self.is_kw("this")?
        {
            let var = self.ident()?;
            self.expect_sym("=")?;
            if self.is_kw("new")? {
                self.bump()?;
                let record = self.ident()?;
                self.expect_sym(";")?;
                StmtKind::New { var, record }
            } else {
                let value = self.expr()?;
                self.expect_sym(";")?;
                StmtKind::Assign { var, value }
            }
        } else {
            let lhs = self.postfix()?;
            let Expr::Field(target, field) = lhs else {
                return self.err("expected a statement");
            };
            self.expect_sym("=")?;
            let value = self.expr()?;
            self.expect_sym(";")?;
            StmtKind::FieldAssign {
                target: *target,
                field,
                value,
            }
        };
        Ok(Stmt {
            id,
            budget: 0,
            kind,
        })
    }

    pub fn expr(&mut self) -> Result<Expr, LangError> {
        self.binary(1)
    }

    fn binop(&mut self) -> Result<Option<BinOp>, LangError> {
        let Tok::Sym(s) = self.peek()? else {
            return Ok(None);
        };
        let s = *s;
        Ok([BinOp::ARITH.as_slice(), &BinOp::REL, &BinOp::COND]
            .concat()
            .into_iter()
            .find(|op| op.symbol() == s))
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop()? {
            if op.precedence() < min_prec {
                break;
            }
            self.bump()?;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        if self.eat_sym("!")? {
            return Ok(Expr::un(UnOp::Not, self.unary()?));
        }
        if self.eat_sym("-")? {
            if let Tok::Int(v) = *self.peek()? {
                self.bump()?;
                return Ok(Expr::Int(-v));
            }
            return Ok(Expr::un(UnOp::Neg, self.unary()?));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, LangError> {
        let mut e = self.primary()?;
        while self.eat_sym(".")? {
            let f = self.ident()?;
            e = Expr::Field(Box::new(e), f);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let t = self.peek()?.clone();
        match t {
            Tok::Int(v) => {
                self.bump()?;
                Ok(Expr::Int(v))
            }
            Tok::Sym("(") => {
                self.bump()?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Builtin(b) if b == "result" => {
                self.bump()?;
                Ok(Expr::Result)
            }
            Tok::Builtin(b) if b == "old" => {
                self.bump()?;
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(Expr::Old(Box::new(e)))
            }
            Tok::Builtin(b) => self.err(format!("unknown builtin `\\{b}`")),
            Tok::Ident(s) => match s.as_str() {
                "true" | "false" => {
                    self.bump()?;
                    Ok(Expr::Bool(s == "true"))
                }
                "null" => {
                    self.bump()?;
                    Ok(Expr::Null)
                }
                "this" => {
                    self.bump()?;
                    Ok(Expr::var("this"))
                }
                "reach" => {
                    self.bump()?;
                    self.expect_sym("(")?;
                    let from = self.expr()?;
                    self.expect_sym(",")?;
                    let f = self.ident()?;
                    self.expect_sym(",")?;
                    let to = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(Expr::Reach(Box::new(from), f, Box::new(to)))
                }
                _ => Ok(Expr::Var(self.ident()?)),
            },
            t => self.err(format!("expected expression, found {}", describe(&t))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Builtin(b) => format!("`\\{b}`"),
        Tok::Budget(k) => format!("`//mutGenLimit {k}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Duplicate-name and unknown-name checks.
fn resolve(p: &Program, toks: &[Token]) -> Result<(), LangError> {
    let origin = toks.first().map(|t| t.span).unwrap_or(Span { line: 1, col: 1 });
    let dup = |what: &'static str, name: &str| LangError::Duplicate {
        span: origin,
        what,
        name: name.to_string(),
    };
    let mut seen = BTreeSet::new();
    for r in &p.records {
        if !seen.insert(r.name.as_str()) {
            return Err(dup("record", &r.name));
        }
    }
    let mut all_fields = BTreeSet::new();
    for r in &p.records {
        let mut fs = BTreeSet::new();
        for f in &r.fields {
            if !fs.insert(f.name.as_str()) {
                return Err(dup("field", &f.name));
            }
            all_fields.insert(f.name.as_str());
            check_type(p, &f.ty, origin)?;
        }
    }
    let mut ms = BTreeSet::new();
    for m in &p.methods {
        if !ms.insert(m.name.as_str()) {
            return Err(dup("method", &m.name));
        }
        let mspan = m.spans.0.values().next().copied().unwrap_or(origin);
        if let Some(r) = &m.receiver {
            check_type(p, &Type::Ref(r.clone()), mspan)?;
        }
        let mut vars = BTreeSet::new();
        if m.receiver.is_some() {
            vars.insert("this");
        }
        for v in m.params.iter().chain(m.locals.iter()) {
            if !vars.insert(v.name.as_str()) {
                return Err(LangError::Duplicate {
                    span: mspan,
                    what: "variable",
                    name: v.name.clone(),
                });
            }
            check_type(p, &v.ty, mspan)?;
        }
        if let Some(t) = &m.ret {
            check_type(p, t, mspan)?;
        }
        let names = Names {
            vars: &vars,
            fields: &all_fields,
        };
        for e in [&m.contract.requires, &m.contract.ensures, &m.contract.invariant] {
            names.expr(e, mspan)?;
        }
        for s in m.statements() {
            let span = m.spans.0.get(&s.id).copied().unwrap_or(mspan);
            match &s.kind {
                StmtKind::Assign { var, value } => {
                    names.var(var, span)?;
                    names.expr(value, span)?;
                }
                StmtKind::FieldAssign {
                    target,
                    field,
                    value,
                } => {
                    names.expr(target, span)?;
                    names.field(field, span)?;
                    names.expr(value, span)?;
                }
                StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => names.expr(cond, span)?,
                StmtKind::Return(e) => names.expr(e, span)?,
                StmtKind::New { var, record } => {
                    names.var(var, span)?;
                    check_type(p, &Type::Ref(record.clone()), span)?;
                }
                StmtKind::Skip => {}
            }
        }
    }
    Ok(())
}

fn check_type(p: &Program, t: &Type, span: Span) -> Result<(), LangError> {
    if let Type::Ref(r) = t {
        if p.record(r).is_none() {
            return Err(LangError::Unknown {
                span,
                what: "record",
                name: r.clone(),
            });
        }
    }
    Ok(())
}

struct Names<'a> {
    vars: &'a BTreeSet<&'a str>,
    fields: &'a BTreeSet<&'a str>,
}

impl Names<'_> {
    fn var(&self, v: &str, span: Span) -> Result<(), LangError> {
        if self.vars.contains(v) {
            Ok(())
        } else {
            Err(LangError::Unknown {
                span,
                what: "variable",
                name: v.to_string(),
            })
        }
    }

    fn field(&self, f: &str, span: Span) -> Result<(), LangError> {
        if self.fields.contains(f) {
            Ok(())
        } else {
            Err(LangError::Unknown {
                span,
                what: "field",
                name: f.to_string(),
            })
        }
    }

    fn expr(&self, e: &Expr, span: Span) -> Result<(), LangError> {
        match e {
            Expr::Var(v) => self.var(v, span)?,
            Expr::Field(_, f) | Expr::Reach(_, f, _) => self.field(f, span)?,
            _ => {}
        }
        for c in e.children() {
            self.expr(c, span)?;
        }
        Ok(())
    }
}
