//! The object language: records, methods with contracts, and per-statement
//! mutation budgets written as `//mutGenLimit k` comments.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod typecheck;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use parser::{parse, parse_expr};
pub use printer::{expr_to_string, method_to_string, program_to_string};
pub use typecheck::{check_method, expr_type, typecheck, ExprCtx, TypedProgram};

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LangError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: duplicate {what} `{name}`")]
    Duplicate {
        span: Span,
        what: &'static str,
        name: String,
    },
    #[error("{span}: unknown {what} `{name}`")]
    Unknown {
        span: Span,
        what: &'static str,
        name: String,
    },
    #[error("{span}: type error: {msg}")]
    Type { span: Span, msg: String },
}

/// Parses and typechecks in one step.
pub fn load(src: &str) -> Result<TypedProgram, LangError> {
    typecheck(parse(src)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LIST: &str = "
record Node { value: int; next: Node; }
record List { head: Node; size: int; }
";

    fn prog(body: &str) -> String {
        format!("{LIST}\nmethod List.m(n: int): int\n{{\n{body}\n}}\n")
    }

    #[test]
    fn trailing_annotation_sets_budget() {
        let p = parse(&prog("var x: int;\nx = x + 1; //mutGenLimit 2\nreturn x;")).unwrap();
        let m = &p.methods[0];
        assert_eq!(m.body[0].budget, 2);
        assert!(matches!(m.body[0].kind, StmtKind::Assign { .. }));
        assert_eq!(m.body[1].budget, 0);
    }

    #[test]
    fn empty_body_is_valid() {
        let p = load(&format!("{LIST}\nmethod List.noop() {{ }}")).unwrap();
        assert!(p.program().methods[0].body.is_empty());
    }

    #[test]
    fn undeclared_variable_is_reported() {
        let err = parse(&prog("var y: int;\ny = z;")).unwrap_err();
        assert!(err.to_string().contains("unknown variable"), "{err}");
    }

    #[test]
    fn int_condition_is_rejected() {
        let err = load(&prog("if (n) { return 1; }\nreturn 0;")).unwrap_err();
        assert!(matches!(err, LangError::Type { .. }), "{err}");
    }

    #[test]
    fn navigation_has_field_type() {
        let p = parse(&prog("var current: Node;\ncurrent = this.head;\nreturn 0;")).unwrap();
        let m = &p.methods[0];
        let e = parse_expr("current.next").unwrap();
        assert_eq!(
            expr_type(&p, m, &e, ExprCtx::Body),
            Ok(Type::Ref("Node".into()))
        );
    }

    #[test]
    fn result_in_void_method_is_rejected() {
        let src = format!("{LIST}\nmethod List.clear()\n  ensures \\result == 0;\n{{ }}");
        let err = load(&src).unwrap_err();
        assert!(err.to_string().contains("void"), "{err}");
    }

    #[test]
    fn result_in_requires_is_rejected() {
        let src = format!("{LIST}\nmethod List.f(): int\n  requires \\result == 0;\n{{ return 0; }}");
        assert!(load(&src).is_err());
    }

    #[test]
    fn refs_are_not_ordered() {
        let err = load(&prog("var a: Node;\nif (a < a) { }\nreturn 0;")).unwrap_err();
        assert!(err.to_string().contains("cannot be compared"), "{err}");
    }

    #[test]
    fn skip_prints_as_semicolon() {
        let p = parse(&prog(";\nreturn 0;")).unwrap();
        assert_eq!(p.methods[0].body[0].kind, StmtKind::Skip);
        let text = program_to_string(&p);
        assert!(text.contains("\n  ;\n"));
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn unknown_field_and_record() {
        assert!(parse(&prog("var a: Node;\na = this.tail;\nreturn 0;")).is_err());
        assert!(parse(&prog("var a: Nope;\nreturn 0;")).is_err());
    }

    #[test]
    fn duplicate_names() {
        let src = format!("{LIST}\nrecord Node {{ x: int; }}");
        assert!(matches!(parse(&src), Err(LangError::Duplicate { .. })));
        assert!(parse(&prog("var n: int;\nreturn 0;")).is_err());
    }

    #[test]
    fn annotation_on_compound_header() {
        let p = parse(&prog(
            "var i: int;\nwhile (i < n) { //mutGenLimit 3\n  i = i + 1;\n}\nreturn i;",
        ))
        .unwrap();
        let m = &p.methods[0];
        assert_eq!(m.body[0].budget, 3);
        assert_eq!(m.statement(2).unwrap().budget, 0);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse(&prog("return 0")).unwrap_err();
        match err {
            LangError::Syntax { span, .. } => assert!(span.line > 1),
            e => panic!("{e}"),
        }
    }
}
