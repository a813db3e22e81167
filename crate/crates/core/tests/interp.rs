use stitch_core::corpus::sources;
use stitch_core::interp::{
    execute, sieve, HeapState, Input, InputPool, PoolError, RunOutcome, SieveResult, Value,
};
use stitch_core::lang::{self, parse_expr, Program, StmtKind};
use stitch_core::Scope;

fn sllist() -> Program {
    lang::load(sources::SLLIST).unwrap().into_program()
}

/// List object in slot 0 of SLList whose nodes occupy Node slots 0..n.
fn list_input(p: &Program, scope: &Scope, values: &[i64], arg: Value) -> Input {
    let mut heap = HeapState::empty(p, scope);
    let list = &mut heap.records[1].slots[0];
    list.alive = true;
    list.fields[0] = Value::Ref(if values.is_empty() { None } else { Some(0) });
    for (i, v) in values.iter().enumerate() {
        let n = &mut heap.records[0].slots[i];
        n.alive = true;
        n.fields[0] = Value::Int(*v);
        n.fields[1] = Value::Ref(if i + 1 < values.len() {
            Some(i as u32 + 1)
        } else {
            None
        });
    }
    Input {
        receiver: Some(0),
        args: vec![arg],
        heap,
    }
}

#[test]
fn get_node_returns_second_node() {
    let p = sllist();
    let s = Scope::default();
    let m = p.method("getNode").unwrap();
    let ex = execute(&p, m, s, &list_input(&p, &s, &[4, 7], Value::Int(1)));
    assert_eq!(ex.outcome, RunOutcome::PassedContract);
    assert_eq!(ex.result, Some(Value::Ref(Some(1))));
}

fn with_if_cond(p: &Program, method: &str, cond: &str) -> Program {
    let mut m = p.method(method).unwrap().clone();
    let id = m
        .statements()
        .iter()
        .find(|s| matches!(s.kind, StmtKind::If { .. }))
        .unwrap()
        .id;
    if let StmtKind::If { cond: c, .. } = &mut m.statement_mut(id).unwrap().kind {
        *c = parse_expr(cond).unwrap();
    }
    p.with_method(m)
}

#[test]
fn negated_index_test_returns_wrong_node() {
    let p = with_if_cond(&sllist(), "getNode", "i != current_index");
    let s = Scope::default();
    let m = p.method("getNode").unwrap();
    let ex = execute(&p, m, s, &list_input(&p, &s, &[4, 7], Value::Int(0)));
    assert_eq!(ex.outcome, RunOutcome::ViolatedPost);
}

#[test]
fn dereferencing_null_traps() {
    let src = "record R { f: int; }\nmethod g(): int\n{\n  var x: R;\n  var y: int;\n  x = null;\n  y = x.f;\n  return y;\n}\n";
    let p = lang::load(src).unwrap().into_program();
    let s = Scope::default();
    let input = Input {
        receiver: None,
        args: vec![],
        heap: HeapState::empty(&p, &s),
    };
    let ex = execute(&p, &p.methods[0], s, &input);
    assert_eq!(ex.outcome, RunOutcome::NullDeref { stmt: 2 });
}

#[test]
fn pool_rejects_pre_violations_and_duplicates() {
    let p = sllist();
    let s = Scope::default();
    let m = p.method("getNode").unwrap();
    let mut pool = InputPool::new();
    let a = list_input(&p, &s, &[1, 2], Value::Int(0));
    assert_eq!(pool.add(&p, m, s, a.clone()), Ok(true));
    assert_eq!(pool.add(&p, m, s, a), Ok(false));
    assert_eq!(pool.len(), 1);
    // A cyclic list breaks the invariant.
    let mut cyc = list_input(&p, &s, &[1, 2], Value::Int(0));
    cyc.heap.records[0].slots[1].fields[1] = Value::Ref(Some(0));
    assert_eq!(pool.add(&p, m, s, cyc), Err(PoolError::PreViolated));
}

#[test]
fn sieve_returns_first_failing_input() {
    let p = sllist();
    let s = Scope::default();
    let m = p.method("getNode").unwrap();
    let bad = with_if_cond(&p, "getNode", "i == current_index + 1");
    let mut pool = InputPool::new();
    // Out of range for both versions, so it passes.
    pool.add(&p, m, s, list_input(&p, &s, &[1, 2], Value::Int(5)))
        .unwrap();
    pool.add(&p, m, s, list_input(&p, &s, &[1, 2], Value::Int(0)))
        .unwrap();
    assert_eq!(sieve(&p, m, s, &pool), SieveResult::Pass);
    match sieve(&bad, bad.method("getNode").unwrap(), s, &pool) {
        SieveResult::Fail { index, .. } => assert_eq!(index, 1),
        r => panic!("{r:?}"),
    }
}

#[test]
fn input_json_is_canonical() {
    let p = sllist();
    let s = Scope::default();
    let a = list_input(&p, &s, &[3], Value::Int(0));
    let text = a.to_json();
    assert_eq!(Input::from_json(&text).unwrap(), a);
    assert_eq!(Input::from_json(&text).unwrap().to_json(), text);
}

#[test]
fn loops_past_the_bound_leave_the_scope() {
    let src = "method spin(n: int): int\n{\n  while (n > 0) {\n    n = n - 1;\n  }\n  return n;\n}\n";
    let p = lang::load(src).unwrap().into_program();
    let s = Scope::new(1, 8, 2).unwrap();
    let run = |n| {
        let input = Input {
            receiver: None,
            args: vec![Value::Int(n)],
            heap: HeapState::empty(&p, &s),
        };
        execute(&p, &p.methods[0], s, &input).outcome
    };
    assert_eq!(run(2), RunOutcome::PassedContract);
    assert!(run(3).is_out_of_scope());
}

#[test]
fn corpus_programs_load() {
    for src in [sources::SLLIST, sources::BSTREE, sources::SET] {
        lang::load(src).unwrap();
    }
}
