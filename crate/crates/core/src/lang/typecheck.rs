use super::ast::*;
use super::LangError;

/// Where an expression occurs; decides which names and builtins are legal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExprCtx {
    Body,
    Requires,
    Ensures,
    Invariant,
}

/// A program that passed [`typecheck`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedProgram(Program);

impl TypedProgram {
    pub fn program(&self) -> &Program {
        &self.0
    }

    pub fn into_program(self) -> Program {
        self.0
    }

    pub fn method(&self, name: &str) -> Option<&Method> {
        self.0.method(name)
    }
}

pub fn typecheck(p: Program) -> Result<TypedProgram, LangError> {
    for m in &p.methods {
        check_method(&p, m)?;
    }
    Ok(TypedProgram(p))
}

pub fn check_method(p: &Program, m: &Method) -> Result<(), LangError> {
    let mspan = m.spans.0.values().next().copied().unwrap_or(Span { line: 1, col: 1 });
    for (ctx, e) in [
        (ExprCtx::Requires, &m.contract.requires),
        (ExprCtx::Ensures, &m.contract.ensures),
        (ExprCtx::Invariant, &m.contract.invariant),
    ] {
        let t = expr_type(p, m, e, ctx).map_err(|msg| LangError::Type { span: mspan, msg })?;
        if t != Type::Bool {
            return Err(LangError::Type {
                span: mspan,
                msg: format!("contract clause has type {t}, expected bool"),
            });
        }
    }
    for s in m.statements() {
        let span = m.spans.0.get(&s.id).copied().unwrap_or(mspan);
        check_stmt(p, m, s).map_err(|msg| LangError::Type { span, msg })?;
    }
    Ok(())
}

fn check_stmt(p: &Program, m: &Method, s: &Stmt) -> Result<(), String> {
    let ty = |e: &Expr| expr_type(p, m, e, ExprCtx::Body);
    match &s.kind {
        StmtKind::Assign { var, value } => {
            if var == "this" {
                return Err("cannot assign to `this`".into());
            }
            let vt = m.var_type(var).ok_or_else(|| format!("unknown variable `{var}`"))?;
            let et = ty(value)?;
            if !vt.accepts(&et) {
                return Err(format!("cannot assign {et} to `{var}` of type {vt}"));
            }
        }
        StmtKind::FieldAssign {
            target,
            field,
            value,
        } => {
            let ft = field_type(p, &ty(target)?, field)?;
            let et = ty(value)?;
            if !ft.accepts(&et) {
                return Err(format!("cannot assign {et} to field `{field}` of type {ft}"));
            }
        }
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => {
            let t = ty(cond)?;
            if t != Type::Bool {
                return Err(format!("condition has type {t}, expected bool"));
            }
        }
        StmtKind::Return(e) => {
            let Some(rt) = &m.ret else {
                return Err("return with a value in a void method".into());
            };
            let et = ty(e)?;
            if !rt.accepts(&et) {
                return Err(format!("cannot return {et} from a method returning {rt}"));
            }
        }
        StmtKind::New { var, record } => {
            let vt = m.var_type(var).ok_or_else(|| format!("unknown variable `{var}`"))?;
            if vt != Type::Ref(record.clone()) || var == "this" {
                return Err(format!("cannot store a new {record} in `{var}` of type {vt}"));
            }
        }
        StmtKind::Skip => {}
    }
    Ok(())
}

fn field_type(p: &Program, base: &Type, field: &str) -> Result<Type, String> {
    let Type::Ref(r) = base else {
        return Err(format!("cannot read field `{field}` of a {base} value"));
    };
    let rec = p.record(r).ok_or_else(|| format!("unknown record `{r}`"))?;
    rec.field_type(field)
        .cloned()
        .ok_or_else(|| format!("record {r} has no field `{field}`"))
}

/// Type of `e` in context `ctx`, or a message describing the first error.
pub fn expr_type(p: &Program, m: &Method, e: &Expr, ctx: ExprCtx) -> Result<Type, String> {
    ty_in(p, m, e, ctx, false)
}

fn ty_in(p: &Program, m: &Method, e: &Expr, ctx: ExprCtx, in_old: bool) -> Result<Type, String> {
    let sub = |x: &Expr| ty_in(p, m, x, ctx, in_old);
    match e {
        Expr::Int(_) => Ok(Type::Int),
        Expr::Bool(_) => Ok(Type::Bool),
        Expr::Null => Ok(Type::Null),
        Expr::Var(v) => {
            let t = m.var_type(v).ok_or_else(|| format!("unknown variable `{v}`"))?;
            let is_local = m.locals.iter().any(|l| &l.name == v);
            match ctx {
                ExprCtx::Body => {}
                ExprCtx::Invariant if v != "this" => {
                    return Err(format!("invariant may only mention `this`, found `{v}`"))
                }
                _ if is_local => {
                    return Err(format!("local variable `{v}` is not visible in contracts"))
                }
                _ => {}
            }
            Ok(t)
        }
        Expr::Field(b, f) => field_type(p, &sub(b)?, f),
        Expr::Unary(UnOp::Neg, a) => match sub(a)? {
            Type::Int => Ok(Type::Int),
            t => Err(format!("operand of `-` has type {t}, expected int")),
        },
        Expr::Unary(UnOp::Not, a) => match sub(a)? {
            Type::Bool => Ok(Type::Bool),
            t => Err(format!("operand of `!` has type {t}, expected bool")),
        },
        Expr::Binary(op, a, b) => {
            let (ta, tb) = (sub(a)?, sub(b)?);
            let sym = op.symbol();
            if op.is_arith() || op.is_ordering() {
                if ta.is_ref() && op.is_ordering() {
                    return Err(format!("references cannot be compared with `{sym}`"));
                }
                if ta != Type::Int || tb != Type::Int {
                    return Err(format!("operands of `{sym}` have types {ta} and {tb}, expected int"));
                }
                Ok(if op.is_arith() { Type::Int } else { Type::Bool })
            } else if op.is_connector() {
                if ta != Type::Bool || tb != Type::Bool {
                    return Err(format!("operands of `{sym}` have types {ta} and {tb}, expected bool"));
                }
                Ok(Type::Bool)
            } else {
                let ok = match (&ta, &tb) {
                    (Type::Int, Type::Int) | (Type::Bool, Type::Bool) => true,
                    (Type::Null, t) | (t, Type::Null) => t.is_ref(),
                    (Type::Ref(x), Type::Ref(y)) => x == y,
                    _ => false,
                };
                if !ok {
                    return Err(format!("cannot compare {ta} with {tb} using `{sym}`"));
                }
                Ok(Type::Bool)
            }
        }
        Expr::Old(a) => {
            if ctx != ExprCtx::Ensures {
                return Err("`\\old` is only allowed in ensures clauses".into());
            }
            if in_old {
                return Err("nested `\\old`".into());
            }
            ty_in(p, m, a, ctx, true)
        }
        Expr::Result => {
            if ctx != ExprCtx::Ensures {
                return Err("`\\result` is only allowed in ensures clauses".into());
            }
            m.ret
                .clone()
                .ok_or_else(|| "`\\result` used in a void method".to_string())
        }
        Expr::Reach(a, f, b) => {
            if ctx == ExprCtx::Body {
                return Err("`reach` is only allowed in contracts".into());
            }
            let ta = sub(a)?;
            let ft = field_type(p, &ta, f)?;
            if ft != ta {
                return Err(format!("`reach` needs a field of type {ta}, `{f}` has type {ft}"));
            }
            let tb = sub(b)?;
            if !ta.accepts(&tb) {
                return Err(format!("`reach` target has type {tb}, expected {ta}"));
            }
            Ok(Type::Bool)
        }
    }
}
