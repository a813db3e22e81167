use std::collections::BTreeMap;

use stitch_core::corpus::{sources, two_fault_add};
use stitch_core::interp::{execute, HeapState, Input, Value};
use stitch_core::lang::{self, parse_expr, Program, StmtKind};
use stitch_core::mutate::{apply, Catalog};
use stitch_core::prune::{get_feedback, prune_soundness_oracle, variabilize, LevelVerdict, Role};
use stitch_core::verify::{detect, Detection, VerifyOptions};
use stitch_core::Scope;

fn load(src: &str) -> Program {
    lang::load(src).unwrap().into_program()
}

fn set_expr(p: &Program, method: &str, id: u32, e: &str) -> Program {
    let mut m = p.method(method).unwrap().clone();
    match &mut m.statement_mut(id).unwrap().kind {
        StmtKind::Assign { value: v, .. } | StmtKind::FieldAssign { value: v, .. } => {
            *v = parse_expr(e).unwrap()
        }
        k => panic!("{k:?}"),
    }
    p.with_method(m)
}

/// Set with one node holding `v`; the caller adds `v` again.
fn set_with_one(p: &Program, v: i64, size: i64) -> Input {
    let s = Scope::default();
    let mut heap = HeapState::empty(p, &s);
    let set = p.records.iter().position(|r| r.name == "Set").unwrap();
    let node = p.records.iter().position(|r| r.name == "SNode").unwrap();
    heap.records[node].slots[0].alive = true;
    heap.records[node].slots[0].fields[0] = Value::Int(v);
    heap.records[set].slots[0].alive = true;
    heap.records[set].slots[0].fields[0] = Value::Ref(Some(0));
    heap.records[set].slots[0].fields[1] = Value::Int(size);
    Input {
        receiver: Some(0),
        args: vec![Value::Int(v)],
        heap,
    }
}

#[test]
fn size_assignment_becomes_a_fresh_value() {
    let c = two_fault_add();
    let p = c.load();
    let m = p.method("add").unwrap();
    let positions = m.mutable_from_bottom();
    assert_eq!(positions, vec![13, 1]);
    let v = variabilize(&p, m, &positions, 1, &Scope::default()).unwrap();
    // `this.size = ...` is a field write: fresh object and fresh value.
    let roles: Vec<_> = v.fresh.iter().map(|f| (f.stmt, f.role)).collect();
    assert_eq!(roles, vec![(13, Role::Target), (13, Role::Value)]);
    assert_eq!(v.body.extra[1].ty, lang::Type::Int);
    let all = variabilize(&p, m, &positions, 2, &Scope::default()).unwrap();
    assert_eq!(all.fresh.len(), 3);
    assert!(variabilize(&p, m, &positions, 3, &Scope::default()).is_err());
    assert!(variabilize(&p, m, &positions, 0, &Scope::default()).is_err());
}

#[test]
fn loop_body_statement_gets_one_variable_per_iteration() {
    let p = load(sources::SLLIST);
    let m = p.method("getNode").unwrap().with_budgets(&BTreeMap::from([(7, 1), (4, 1)]));
    let positions = m.mutable_from_bottom();
    let v = variabilize(&p, &m, &positions, 1, &Scope::default()).unwrap();
    assert_eq!(v.fresh.len(), 3);
    // The guard is replicated once more for the final check.
    let v = variabilize(&p, &m, &positions, 2, &Scope::default()).unwrap();
    assert_eq!(v.fresh.iter().filter(|f| f.role == Role::Guard).count(), 4);
}

#[test]
fn two_fault_add_level_one_is_unsat() {
    let c = two_fault_add();
    let p = c.load();
    let m = p.method("add").unwrap();
    let input = set_with_one(&p, 2, 1);
    assert!(execute(&p, m, c.scope, &input).outcome.is_violation());
    let fb = get_feedback(&p, m, &m.mutable_from_bottom(), &input, c.scope, None).unwrap();
    assert_eq!(fb.trail[0].verdict, LevelVerdict::Unsat);
    assert_eq!(fb.trail[0].stmt, 13);
    assert_eq!(fb.k, 1);
    // Every mutation of the size assignment fails on this input.
    let table = Catalog::default().obtain_mutants(&p, m);
    let r = prune_soundness_oracle(&p, m, &table, &[0, 0], 1, &input, c.scope);
    assert_eq!(r.checked, table.lists[0].len() + 1);
    assert!(r.sound());
}

#[test]
fn fault_in_bottom_statement_gives_no_feedback() {
    let p = set_expr(&load(sources::SLLIST), "getNode", 7, "current_index - 1");
    let m = p.method("getNode").unwrap().with_budgets(&BTreeMap::from([(7, 1)]));
    let s = Scope::default();
    let Detection::Faulty(cex) = detect(&p, &m, s, &VerifyOptions::default()).unwrap() else {
        panic!("faulty");
    };
    let fb = get_feedback(&p, &m, &[7], &cex.input, s, None).unwrap();
    assert_eq!(fb.k, 0);
    assert_eq!(fb.trail.len(), 1);
    assert_eq!(fb.trail[0].verdict, LevelVerdict::Sat);
    // Brute force: some mutation of statement 7 passes on the input.
    let table = Catalog::default().obtain_mutants(&p, &m);
    let fixes = (1..=table.lists[0].len() as u32)
        .filter(|j| {
            let mu = apply(&m, &table, &[*j]).unwrap();
            !execute(&p, &mu, s, &cex.input).outcome.is_violation()
        })
        .count();
    assert!(fixes > 0);
}

#[test]
fn false_postcondition_prunes_every_level() {
    let p = load(
        "record C { x: int; }
method C.f(n: int)
  ensures false;
{
  this.x = n + 1; //mutGenLimit 1
  this.x = this.x * 2; //mutGenLimit 1
}
",
    );
    let m = p.method("f").unwrap();
    let s = Scope::default();
    let Detection::Faulty(cex) = detect(&p, m, s, &VerifyOptions::default()).unwrap() else {
        panic!("faulty");
    };
    let positions = m.mutable_from_bottom();
    let fb = get_feedback(&p, m, &positions, &cex.input, s, None).unwrap();
    assert_eq!(fb.k, positions.len());
    assert!(fb.trail.iter().all(|l| l.verdict == LevelVerdict::Unsat));
}

#[test]
fn zero_feedback_checks_nothing() {
    let c = two_fault_add();
    let p = c.load();
    let m = p.method("add").unwrap();
    let table = Catalog::default().obtain_mutants(&p, m);
    let r = prune_soundness_oracle(&p, m, &table, &[0, 0], 0, &set_with_one(&p, 2, 1), c.scope);
    assert_eq!(r.checked, 0);
    assert!(r.sound());
}
