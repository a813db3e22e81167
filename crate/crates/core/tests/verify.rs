use std::collections::BTreeSet;

use stitch_core::corpus::{reference_program, two_fault_add};
use stitch_core::interp::{execute, InputPool};
use stitch_core::lang::{self, parse_expr, Program, StmtKind};
use stitch_core::localize::{annotate, localize, LocalizeOptions};
use stitch_core::verify::{accept, detect, detect_many, Acceptance, Detection, VerifyOptions};
use stitch_core::Scope;

fn with_value(p: &Program, method: &str, id: u32, e: &str) -> Program {
    let mut m = p.method(method).unwrap().clone();
    match &mut m.statement_mut(id).unwrap().kind {
        StmtKind::Assign { value, .. } | StmtKind::FieldAssign { value, .. } => *value = parse_expr(e).unwrap(),
        k => panic!("{k:?}"),
    }
    p.with_method(m)
}

#[test]
fn references_are_correct_and_not_vacuous() {
    for (stem, methods) in [("sllist", vec!["contains", "getNode", "insert"]), ("set", vec!["add"])] {
        let p = reference_program(stem).unwrap();
        for name in methods {
            let d = detect(&p, p.method(name).unwrap(), Scope::default(), &VerifyOptions::default()).unwrap();
            assert_eq!(d, Detection::Correct { vacuous: false }, "{name}");
        }
    }
}

#[test]
fn unsatisfiable_precondition_is_vacuous() {
    let p = lang::load("record C { x: int; }\nmethod C.m()\n  requires this.x != this.x;\n  ensures false;\n{\n  this.x = 1;\n}\n")
        .unwrap()
        .into_program();
    let d = detect(&p, &p.methods[0], Scope::default(), &VerifyOptions::default()).unwrap();
    assert_eq!(d, Detection::Correct { vacuous: true });
}

#[test]
fn distinct_counterexamples_all_replay() {
    let c = two_fault_add();
    let p = c.load();
    let m = p.method("add").unwrap();
    let (cexs, d) = detect_many(&p, m, c.scope, 5, &VerifyOptions::default()).unwrap();
    assert!(matches!(d, Detection::Faulty(_)));
    assert_eq!(cexs.len(), 5);
    let distinct: BTreeSet<_> = cexs.iter().map(|c| c.input.to_json()).collect();
    assert_eq!(distinct.len(), 5);
    for cex in &cexs {
        let ex = execute(&p, m, c.scope, &cex.input);
        assert!(ex.outcome.is_violation());
        assert_eq!(ex.outcome, cex.outcome);
    }
}

#[test]
fn rejected_candidate_extends_pool() {
    let c = two_fault_add();
    let p = c.load();
    let m = p.method("add").unwrap().clone();
    let mut pool = InputPool::new();
    match accept(&p, &m, c.scope, &mut pool, &VerifyOptions::default()).unwrap() {
        Acceptance::Rejected(cex) => assert!(pool.contains(&cex.input)),
        a => panic!("{a:?}"),
    }
    let fixed = with_value(&with_value(&p, "add", 1, "this.head"), "add", 13, "this.size + 1");
    let fm = fixed.method("add").unwrap();
    assert_eq!(accept(&fixed, fm, c.scope, &mut pool, &VerifyOptions::default()).unwrap(), Acceptance::Accepted);
    assert_eq!(pool.len(), 1);
}

#[test]
fn localization_blames_the_seeded_statement() {
    let p = reference_program("sllist").unwrap();
    let bad = with_value(&p, "getNode", 7, "current_index - 1");
    let m = bad.method("getNode").unwrap();
    let s = Scope::default();
    let (cexs, _) = detect_many(&bad, m, s, 3, &VerifyOptions::default()).unwrap();
    let inputs: Vec<_> = cexs.into_iter().map(|c| c.input).collect();
    let r = localize(&bad, m, s, &inputs, &LocalizeOptions::default()).unwrap();
    assert_eq!(r.cores, 3);
    assert!(r.selected.contains(&7), "{r:?}");
    assert!(r.selected.iter().all(|id| r.hits[id] == 3));
    let a = annotate(m, &r, 2);
    assert_eq!(a.statement(7).unwrap().budget, 2);
    assert_eq!(a.total_budget() as usize, 2 * r.selected.len());
}

#[test]
fn lower_threshold_blames_at_least_as_much() {
    let c = two_fault_add();
    let p = c.load();
    let m = p.method("add").unwrap();
    let (cexs, _) = detect_many(&p, m, c.scope, 4, &VerifyOptions::default()).unwrap();
    let inputs: Vec<_> = cexs.into_iter().map(|c| c.input).collect();
    let all = localize(&p, m, c.scope, &inputs, &LocalizeOptions::default()).unwrap();
    let half = localize(&p, m, c.scope, &inputs, &LocalizeOptions { threshold: 0.5, ..LocalizeOptions::default() }).unwrap();
    assert!(all.selected.is_subset(&half.selected));
    assert!(!half.selected.is_empty());
}
