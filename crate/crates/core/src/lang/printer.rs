use std::fmt::Write;

use super::ast::*;

/// Renders an expression with the minimal parentheses the parser needs.
pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &Expr, ctx: u8) {
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Null => out.push_str("null"),
        Expr::Var(v) => out.push_str(v),
        Expr::Result => out.push_str("\\result"),
        Expr::Field(b, f) => {
            write_operand(out, b);
            out.push('.');
            out.push_str(f);
        }
        Expr::Unary(op, a) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            let wrap = matches!(**a, Expr::Binary(..) | Expr::Int(_));
            if wrap {
                out.push('(');
                write_expr(out, a, 0);
                out.push(')');
            } else {
                write_expr(out, a, 8);
            }
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            let wrap = p < ctx;
            if wrap {
                out.push('(');
            }
            write_expr(out, a, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, p + 1);
            if wrap {
                out.push(')');
            }
        }
        Expr::Old(a) => {
            out.push_str("\\old(");
            write_expr(out, a, 0);
            out.push(')');
        }
        Expr::Reach(a, f, b) => {
            out.push_str("reach(");
            write_expr(out, a, 0);
            let _ = write!(out, ", {f}, ");
            write_expr(out, b, 0);
            out.push(')');
        }
    }
}

/// Receiver position of `.f`: anything that is not itself postfix-shaped
/// needs parentheses.
fn write_operand(out: &mut String, e: &Expr) {
    match e {
        Expr::Var(_) | Expr::Field(..) | Expr::Result | Expr::Old(_) | Expr::Null => {
            write_expr(out, e, 9)
        }
        _ => {
            out.push('(');
            write_expr(out, e, 0);
            out.push(')');
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn budget_suffix(s: &Stmt) -> String {
    if s.budget > 0 {
        format!(" //mutGenLimit {}", s.budget)
    } else {
        String::new()
    }
}

pub fn write_block(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        write_stmt(out, s, depth);
    }
}

pub fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    let ann = budget_suffix(s);
    match &s.kind {
        StmtKind::Assign { var, value } => {
            let _ = writeln!(out, "{var} = {};{ann}", expr_to_string(value));
        }
        StmtKind::FieldAssign {
            target,
            field,
            value,
        } => {
            let mut lhs = String::new();
            write_operand(&mut lhs, target);
            let _ = writeln!(out, "{lhs}.{field} = {};{ann}", expr_to_string(value));
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = writeln!(out, "if ({}) {{{ann}", expr_to_string(cond));
            write_block(out, then_branch, depth + 1);
            indent(out, depth);
            if else_branch.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                write_block(out, else_branch, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "while ({}) {{{ann}", expr_to_string(cond));
            write_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Return(e) => {
            let _ = writeln!(out, "return {};{ann}", expr_to_string(e));
        }
        StmtKind::New { var, record } => {
            let _ = writeln!(out, "{var} = new {record};{ann}");
        }
        StmtKind::Skip => {
            let _ = writeln!(out, ";{ann}");
        }
    }
}

pub fn method_to_string(m: &Method) -> String {
    let mut out = String::new();
    out.push_str("method ");
    if let Some(r) = &m.receiver {
        let _ = write!(out, "{r}.");
    }
    let params: Vec<String> = m.params.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect();
    let _ = write!(out, "{}({})", m.name, params.join(", "));
    if let Some(t) = &m.ret {
        let _ = write!(out, ": {t}");
    }
    out.push('\n');
    for (kw, e) in [
        ("requires", &m.contract.requires),
        ("ensures", &m.contract.ensures),
        ("invariant", &m.contract.invariant),
    ] {
        if *e != Expr::Bool(true) {
            let _ = writeln!(out, "  {kw} {};", expr_to_string(e));
        }
    }
    out.push_str("{\n");
    for l in &m.locals {
        let _ = writeln!(out, "  var {}: {};", l.name, l.ty);
    }
    write_block(&mut out, &m.body, 1);
    out.push_str("}\n");
    out
}

pub fn record_to_string(r: &RecordDecl) -> String {
    let mut out = format!("record {} {{\n", r.name);
    for f in &r.fields {
        let _ = writeln!(out, "  {}: {};", f.name, f.ty);
    }
    out.push_str("}\n");
    out
}

pub fn program_to_string(p: &Program) -> String {
    let mut parts: Vec<String> = p.records.iter().map(record_to_string).collect();
    parts.extend(p.methods.iter().map(method_to_string));
    parts.join("\n")
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_expr;
    use super::*;

    fn rt(src: &str) {
        let e = parse_expr(src).unwrap();
        let printed = expr_to_string(&e);
        assert_eq!(parse_expr(&printed).unwrap(), e, "{src} -> {printed}");
    }

    #[test]
    fn expressions_round_trip() {
        for s in [
            "a - (b - c)",
            "(a - b) - c",
            "-(5)",
            "-5 * x",
            "a - -5",
            "!(a && b) || c",
            "(x.next).value + 1",
            "a == b ^ c == d",
            "(a ^ b) == c",
            "-(-5)",
            "--x",
            "reach(this.head, next, null)",
            "\\old(this.size) + 1 == \\result",
        ] {
            rt(s);
        }
    }

    #[test]
    fn minimal_parens() {
        assert_eq!(expr_to_string(&parse_expr("(a * b) + c").unwrap()), "a * b + c");
        assert_eq!(expr_to_string(&parse_expr("a * (b + c)").unwrap()), "a * (b + c)");
    }
}
