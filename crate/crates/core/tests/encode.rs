use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stitch_core::corpus::sources;
use stitch_core::encode::circuit::read_bits;
use stitch_core::encode::{
    encode, encode_correctness, encode_trace_refutation, Conjunct, EncodeError, Goal, InputMode,
};
use stitch_core::interp::{execute, random_input, HeapState, Input, Value};
use stitch_core::lang::{self, parse_expr, Program, StmtKind};
use stitch_core::Scope;
use stitch_sat::{import_dimacs, minimize_core, solve, GroupSolver, SolveOptions, Tracking, Verdict};

fn load(src: &str) -> Program {
    lang::load(src).unwrap().into_program()
}

fn set_assign(p: &Program, method: &str, id: u32, value: &str) -> Program {
    let mut m = p.method(method).unwrap().clone();
    match &mut m.statement_mut(id).unwrap().kind {
        StmtKind::Assign { value: v, .. } | StmtKind::FieldAssign { value: v, .. } => {
            *v = parse_expr(value).unwrap()
        }
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => *cond = parse_expr(value).unwrap(),
        k => panic!("{k:?}"),
    }
    let out = p.with_method(m);
    lang::typecheck(out.clone()).unwrap();
    out
}

fn sat_model(p: &Program, name: &str, scope: Scope) -> Option<Vec<bool>> {
    let enc = encode_correctness(p, p.method(name).unwrap(), scope);
    match solve(&enc.cnf, &[], &SolveOptions::default()) {
        Verdict::Sat(m) => Some(m),
        Verdict::Unsat { .. } => None,
        Verdict::Unknown => panic!("unknown"),
    }
}

/// Solves the correctness encoding and replays the decoded input.
fn detect_and_replay(p: &Program, name: &str, scope: Scope) -> Option<Input> {
    let m = p.method(name).unwrap();
    let enc = encode_correctness(p, m, scope);
    match solve(&enc.cnf, &[], &SolveOptions::default()) {
        Verdict::Sat(model) => {
            let input = enc.decode(&model);
            let ex = execute(p, m, scope, &input);
            assert!(ex.outcome.is_violation(), "replay gave {:?}", ex.outcome);
            Some(input)
        }
        Verdict::Unsat { .. } => None,
        Verdict::Unknown => panic!("unknown"),
    }
}

#[test]
fn identity_assignment_is_correct() {
    let p = load("record C { x: int; }\nmethod C.same()\n  ensures this.x == \\old(this.x);\n{\n  this.x = this.x;\n}\n");
    assert!(detect_and_replay(&p, "same", Scope::default()).is_none());
}

#[test]
fn increment_breaks_frame_condition() {
    let p = load("record C { x: int; }\nmethod C.inc()\n  ensures this.x == \\old(this.x);\n{\n  this.x = this.x + 1;\n}\n");
    assert!(detect_and_replay(&p, "inc", Scope::new(3, 8, 3).unwrap()).is_some());
}

#[test]
fn get_node_is_correct_and_decrement_fault_is_found() {
    let p = load(sources::SLLIST);
    let s = Scope::new(3, 8, 3).unwrap();
    assert!(detect_and_replay(&p, "getNode", s).is_none());
    let bad = set_assign(&p, "getNode", 7, "current_index - 1");
    assert!(detect_and_replay(&bad, "getNode", s).is_some());
}

#[test]
fn false_postcondition_with_empty_body() {
    let p = load("record C { x: int; }\nmethod C.nop()\n  ensures false;\n{\n}\n");
    assert!(detect_and_replay(&p, "nop", Scope::default()).is_some());
}

#[test]
fn all_ones_decodes_to_minus_one() {
    let p = load("method f(x: int)\n  requires x == -1;\n  ensures false;\n{\n}\n");
    let s = Scope::new(1, 8, 1).unwrap();
    let m = p.method("f").unwrap();
    let enc = encode_correctness(&p, m, s);
    let model = sat_model(&p, "f", s).unwrap();
    let bits = enc.inputs.args[0].bits().to_vec();
    assert_eq!(read_bits(&bits, &model), 255);
    assert_eq!(enc.decode(&model).args[0], Value::Int(-1));
}

#[test]
fn correct_corpus_methods_verify() {
    let s = Scope::new(3, 8, 3).unwrap();
    for (src, names) in [
        (sources::SLLIST, &["contains", "getNode", "insert"][..]),
        (sources::SET, &["add"][..]),
        (sources::BSTREE, &["contains", "insert"][..]),
    ] {
        let p = load(src);
        for n in names {
            assert!(detect_and_replay(&p, n, s).is_none(), "{n}");
        }
    }
}

#[test]
fn refutation_of_failing_run_blames_the_fault() {
    let p = load(sources::SLLIST);
    let s = Scope::new(3, 8, 3).unwrap();
    let bad = set_assign(&p, "getNode", 7, "current_index - 1");
    let cex = detect_and_replay(&bad, "getNode", s).unwrap();
    let m = bad.method("getNode").unwrap();
    let enc = encode_trace_refutation(&bad, m, s, &cex).unwrap();
    let soft = enc.soft_groups();
    let opts = SolveOptions {
        tracking: Tracking::Only(soft.clone()),
        ..SolveOptions::default()
    };
    let core = match solve(&enc.cnf, &[], &opts) {
        Verdict::Unsat { core, .. } => core,
        v => panic!("{v:?}"),
    };
    assert!(!core.is_empty());
    let min = minimize_core(&enc.cnf, &core, &opts);
    // The core itself must still be contradictory.
    let kept = enc.cnf.restrict(|g| !soft.contains(&g) || min.groups.contains(&g));
    assert!(solve(&kept, &[], &SolveOptions::default()).is_unsat());
    let stmts = enc.statements_of(&min.groups);
    assert!(stmts.contains(&7), "{stmts:?}");
}

#[test]
fn refutation_rejects_passing_input() {
    let p = load(sources::SLLIST);
    let s = Scope::default();
    let m = p.method("getNode").unwrap();
    let mut heap = HeapState::empty(&p, &s);
    heap.records[1].slots[0].alive = true;
    let input = Input {
        receiver: Some(0),
        args: vec![Value::Int(0)],
        heap,
    };
    assert!(matches!(
        encode_trace_refutation(&p, m, s, &input),
        Err(EncodeError::NotAViolation(_))
    ));
}

/// Pins random inputs into the symbolic encoding of each method and checks
/// the verdict against the interpreter.
fn differential(p: &Program, name: &str, scope: Scope, n: usize, seed: u64) -> usize {
    let m = p.method(name).unwrap();
    let enc = encode_correctness(p, m, scope);
    let mut gs = GroupSolver::new(&enc.cnf, &SolveOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let input = random_input(p, m, &scope, &mut rng);
        let interp_bad = execute(p, m, scope, &input).outcome.is_violation();
        let enc_bad = match gs.solve_all(&enc.input_literals(&input)) {
            Verdict::Sat(model) => {
                assert_eq!(enc.decode(&model), input);
                true
            }
            Verdict::Unsat { .. } => false,
            Verdict::Unknown => panic!("unknown"),
        };
        assert_eq!(enc_bad, interp_bad, "{name} on {}", input.to_json());
    }
    n
}

#[test]
fn encoder_agrees_with_interpreter() {
    let s = Scope::new(3, 4, 3).unwrap();
    let sl = load(sources::SLLIST);
    let variants = [
        (sl.clone(), "getNode"),
        (set_assign(&sl, "getNode", 7, "current_index - 1"), "getNode"),
        (set_assign(&sl, "getNode", 5, "i != current_index"), "getNode"),
        (set_assign(&sl, "getNode", 8, "current.next.next"), "getNode"),
        (sl.clone(), "insert"),
        (set_assign(&sl, "insert", 9, "this.head.next"), "insert"),
        (sl.clone(), "contains"),
    ];
    let mut total = 0;
    for (i, (p, n)) in variants.iter().enumerate() {
        total += differential(p, n, s, 150, i as u64);
    }
    assert!(total >= 1000);
}

#[test]
fn pinned_and_assumed_inputs_agree_with_replay() {
    let p = load(sources::SET);
    let s = Scope::new(3, 4, 3).unwrap();
    let bad = set_assign(&p, "add", 13, "this.size - 1");
    let m = bad.method("add").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let input = random_input(&bad, m, &s, &mut rng);
        let expect = execute(&bad, m, s, &input).outcome.is_violation();
        for mode in [InputMode::Pinned(input.clone()), InputMode::Assumed(input.clone())] {
            let enc = encode(&bad, m, s, &mode, Goal::Violation).unwrap();
            let got = solve(&enc.cnf, &[], &SolveOptions::default()).is_sat();
            assert_eq!(got, expect);
        }
    }
}

#[test]
fn dimacs_export_with_group_sidecar() {
    let p = load(sources::SLLIST);
    let m = p.method("getNode").unwrap();
    let enc = encode_correctness(&p, m, Scope::new(2, 4, 2).unwrap());
    let back = import_dimacs(&enc.to_dimacs()).unwrap();
    assert_eq!(back.num_clauses(), enc.cnf.num_clauses());
    let side: serde_json::Value = serde_json::from_str(&enc.group_map_json()).unwrap();
    assert_eq!(
        side["clause_groups"].as_array().unwrap().len(),
        enc.cnf.num_clauses()
    );
    let codes: BTreeSet<_> = enc
        .groups
        .iter()
        .filter(|c| matches!(c, Conjunct::Code { .. }))
        .collect();
    assert!(!codes.is_empty());
}
