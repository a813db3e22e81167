//! Translation of a contract-annotated method at a scope into CNF, with
//! every clause tagged by the contract clause or statement replication it
//! came from.

pub mod circuit;
pub mod symbolic;
pub mod unroll;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use stitch_sat::{export_dimacs, Cnf, GroupId, Lit};
use thiserror::Error;

use crate::interp::{self, HeapState, Input, InputError, Machine, RecordHeap, RunOutcome, Slot, Value};
use crate::lang::{Method, Program, StmtId, Type};
use crate::scope::Scope;
use circuit::{read_bits, signed, Circuit};
use symbolic::{Exec, Flags, Sym, SymSlot, SymState};
pub use unroll::{unroll, UKind, UStmt, UnrolledMethod};

/// Origin of a clause group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Conjunct {
    /// Constants and input domain constraints.
    Frame,
    /// Unit clauses fixing the input to a concrete value.
    Input,
    Requires,
    InvariantPre,
    Code { stmt: StmtId, replica: u32 },
    InvariantPost,
    Ensures,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputMode {
    /// Any well-formed input in scope.
    Symbolic,
    /// Input folded in as constants.
    Pinned(Input),
    /// Symbolic input forced by unit clauses in the `Input` group, so the
    /// code stays visible to unsat cores.
    Assumed(Input),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Goal {
    /// Some pre-satisfying in-scope run breaks the contract.
    Violation,
    /// The run satisfies the contract; unsat for a failing input.
    Refutation,
    /// The run satisfies the contract or leaves the scope.
    Feasibility,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("malformed input: {0}")]
    Input(#[from] InputError),
    #[error("input does not violate the contract (outcome {0:?})")]
    NotAViolation(RunOutcome),
}

/// Symbols of the method input.
#[derive(Clone, Debug)]
pub struct InputSymbols {
    pub receiver: Option<Vec<Lit>>,
    pub args: Vec<Sym>,
    pub heap: Vec<Vec<SymSlot>>,
    pub extra: Vec<Sym>,
}

pub struct Encoding {
    pub cnf: Cnf,
    /// Indexed by group id.
    pub groups: Vec<Conjunct>,
    pub inputs: InputSymbols,
    pub goal: Goal,
    pub scope: Scope,
    pub trapped: Lit,
    pub excluded: Lit,
    arg_types: Vec<Type>,
    field_types: Vec<Vec<Type>>,
    record_names: Vec<String>,
}

impl Encoding {
    pub fn conjunct(&self, g: GroupId) -> Conjunct {
        self.groups[g.0 as usize]
    }

    pub fn group_id(&self, c: Conjunct) -> Option<GroupId> {
        self.groups
            .iter()
            .position(|&x| x == c)
            .map(|i| GroupId(i as u32))
    }

    /// Groups that may be dropped when looking for cores: everything but the
    /// frame and the input pinning.
    pub fn soft_groups(&self) -> BTreeSet<GroupId> {
        (0..self.groups.len() as u32)
            .map(GroupId)
            .filter(|g| !matches!(self.conjunct(*g), Conjunct::Frame | Conjunct::Input))
            .collect()
    }

    /// Statement ids named by a set of groups.
    pub fn statements_of(&self, groups: &BTreeSet<GroupId>) -> BTreeSet<StmtId> {
        groups
            .iter()
            .filter_map(|g| match self.conjunct(*g) {
                Conjunct::Code { stmt, .. } => Some(stmt),
                _ => None,
            })
            .collect()
    }

    /// Reads the method input out of a model.
    pub fn decode(&self, model: &[bool]) -> Input {
        let w = self.scope.int_width;
        let read = |s: &Sym, t: &Type| -> Value {
            match (s, t) {
                (Sym::Bool(l), _) => Value::Bool(l.eval(model)),
                (Sym::Bits(b), Type::Int) => Value::Int(signed(read_bits(b, model), w)),
                (Sym::Bits(b), _) => Value::Ref(code_to_ref(read_bits(b, model))),
            }
        };
        let heap = HeapState {
            records: self
                .inputs
                .heap
                .iter()
                .enumerate()
                .map(|(r, slots)| RecordHeap {
                    record: self.record_names[r].clone(),
                    slots: slots
                        .iter()
                        .map(|s| Slot {
                            alive: s.alive.eval(model),
                            fields: s
                                .fields
                                .iter()
                                .zip(&self.field_types[r])
                                .map(|(v, t)| read(v, t))
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        Input {
            receiver: self
                .inputs
                .receiver
                .as_ref()
                .and_then(|b| code_to_ref(read_bits(b, model))),
            args: self
                .inputs
                .args
                .iter()
                .zip(&self.arg_types)
                .map(|(s, t)| read(s, t))
                .collect(),
            heap,
        }
    }

    pub fn to_dimacs(&self) -> String {
        export_dimacs(&self.cnf)
    }

    /// Sidecar for the DIMACS export: group of every clause, by index.
    pub fn group_map_json(&self) -> String {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            groups: &'a [Conjunct],
            clause_groups: Vec<u32>,
        }
        let s = Sidecar {
            groups: &self.groups,
            clause_groups: self.cnf.groups().iter().map(|g| g.0).collect(),
        };
        serde_json::to_string(&s).expect("group map serializes")
    }
}

fn code_to_ref(code: u64) -> Option<u32> {
    if code == 0 {
        None
    } else {
        Some(code as u32 - 1)
    }
}

#[derive(Default)]
struct Groups {
    list: Vec<Conjunct>,
    index: HashMap<Conjunct, GroupId>,
}

impl Groups {
    fn get(&mut self, c: Conjunct) -> GroupId {
        if let Some(g) = self.index.get(&c) {
            return *g;
        }
        let g = GroupId(self.list.len() as u32);
        self.list.push(c);
        self.index.insert(c, g);
        g
    }
}

/// Encodes `m` at `scope` after unrolling its loops.
pub fn encode(
    prog: &Program,
    m: &Method,
    scope: Scope,
    mode: &InputMode,
    goal: Goal,
) -> Result<Encoding, EncodeError> {
    encode_unrolled(prog, m, &unroll(m, scope.unroll), scope, mode, goal)
}

/// Negated-contract encoding: satisfiable exactly when some in-scope input
/// satisfying the precondition leads to an in-scope contract violation.
pub fn encode_correctness(prog: &Program, m: &Method, scope: Scope) -> Encoding {
    encode(prog, m, scope, &InputMode::Symbolic, Goal::Violation).expect("symbolic input")
}

/// Positive-contract encoding of the run on a failing input. Errors if the
/// input does not fail.
pub fn encode_trace_refutation(
    prog: &Program,
    m: &Method,
    scope: Scope,
    cex: &Input,
) -> Result<Encoding, EncodeError> {
    let mach = Machine::new(prog, m, scope);
    mach.check_input(cex)?;
    let ex = mach.execute(cex);
    if !ex.outcome.is_violation() {
        return Err(EncodeError::NotAViolation(ex.outcome));
    }
    encode(prog, m, scope, &InputMode::Assumed(cex.clone()), Goal::Refutation)
}

/// Encodes an already unrolled (and possibly rewritten) body of `m`.
pub fn encode_unrolled(
    prog: &Program,
    m: &Method,
    body: &UnrolledMethod,
    scope: Scope,
    mode: &InputMode,
    goal: Goal,
) -> Result<Encoding, EncodeError> {
    if let InputMode::Pinned(i) | InputMode::Assumed(i) = mode {
        Machine::new(prog, m, scope).check_input(i)?;
    }
    let mut groups = Groups::default();
    let frame = groups.get(Conjunct::Frame);
    let g_req = groups.get(Conjunct::Requires);
    let g_inv_pre = groups.get(Conjunct::InvariantPre);
    let g_inv_post = groups.get(Conjunct::InvariantPost);
    let g_ens = groups.get(Conjunct::Ensures);
    let g_input = match mode {
        InputMode::Assumed(_) => Some(groups.get(Conjunct::Input)),
        _ => None,
    };
    let mut c = Circuit::new(frame);
    let fls = c.fls();

    let mut all_vars = m.variables();
    all_vars.extend(body.extra.iter().cloned());
    let field_types: Vec<Vec<Type>> = prog
        .records
        .iter()
        .map(|r| r.fields.iter().map(|f| f.ty.clone()).collect())
        .collect();

    let mut code_group = |stmt: u32, replica: u32| groups.get(Conjunct::Code { stmt, replica });
    let mut ex = Exec {
        c: &mut c,
        prog,
        method: m,
        scope,
        vars: all_vars
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), (i, p.ty.clone())))
            .collect(),
        records: prog
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), i))
            .collect(),
        flags: Flags {
            trapped: fls,
            returned: fls,
            excluded: fls,
        },
        result: None,
        group_of: &mut code_group,
    };

    let (inputs, pin) = build_inputs(&mut ex, m, body, &field_types, mode);
    ex.c.set_group(frame);
    domain_constraints(&mut ex, m, body, &inputs, &field_types);
    if let Some(g) = g_input {
        ex.c.set_group(g);
        for l in &pin {
            ex.c.assert(*l);
        }
    }

    let mut env: Vec<Sym> = Vec::new();
    if let Some(r) = &inputs.receiver {
        env.push(Sym::Bits(r.clone()));
    }
    env.extend(inputs.args.iter().cloned());
    for l in &m.locals {
        env.push(ex.default_sym(&l.ty));
    }
    env.extend(inputs.extra.iter().cloned());
    let entry = SymState {
        env,
        heap: inputs.heap.clone(),
    };
    ex.result = m.ret.as_ref().map(|t| ex.default_sym(t));

    let mut st = entry.clone();
    let t = ex.c.tru();
    ex.exec_block(&body.body, t, &mut st);
    let flags = ex.flags;

    let contract = &m.contract;
    ex.c.set_group(g_req);
    let req = ex.holds(&contract.requires, &entry, None);
    ex.c.assert(req);
    ex.c.set_group(g_inv_pre);
    let inv_pre = ex.holds(&contract.invariant, &entry, None);
    ex.c.assert(inv_pre);
    let post = SymState {
        env: entry.env.clone(),
        heap: st.heap.clone(),
    };
    ex.c.set_group(g_inv_post);
    let inv_post = ex.holds(&contract.invariant, &post, None);
    ex.c.set_group(g_ens);
    let ens = ex.holds(&contract.ensures, &post, Some(&entry));
    match goal {
        Goal::Violation => {
            ex.c.set_group(g_ens);
            ex.c.assert(!flags.excluded);
            let ok = ex.c.and(ens, inv_post);
            let bad = ex.c.or(flags.trapped, !ok);
            ex.c.assert(bad);
        }
        Goal::Refutation => {
            ex.c.set_group(g_inv_post);
            ex.c.assert(inv_post);
            ex.c.set_group(g_ens);
            ex.c.assert(ens);
            ex.c.assert(!flags.trapped);
        }
        Goal::Feasibility => {
            ex.c.set_group(g_ens);
            let ok = ex.c.and_all(&[!flags.trapped, ens, inv_post]);
            let fine = ex.c.or(flags.excluded, ok);
            ex.c.assert(fine);
        }
    }
    drop(ex);

    let arg_types = m.params.iter().map(|p| p.ty.clone()).collect();
    Ok(Encoding {
        cnf: c.cnf,
        groups: groups.list,
        inputs,
        goal,
        scope,
        trapped: flags.trapped,
        excluded: flags.excluded,
        arg_types,
        field_types,
        record_names: prog.records.iter().map(|r| r.name.clone()).collect(),
    })
}

/// Creates the input symbols. For `Assumed` inputs also returns the literals
/// that pin them.
fn build_inputs(
    ex: &mut Exec<'_>,
    m: &Method,
    body: &UnrolledMethod,
    field_types: &[Vec<Type>],
    mode: &InputMode,
) -> (InputSymbols, Vec<Lit>) {
    let rb = ex.scope.ref_bits();
    let n = ex.scope.objects as usize;
    let mut inputs = match mode {
        InputMode::Pinned(i) => InputSymbols {
            receiver: m.receiver.as_ref().map(|_| {
                ex.c
                    .bv_const(i.receiver.map_or(0, |s| s as i64 + 1), rb)
            }),
            args: i.args.iter().map(|v| ex.const_sym(*v)).collect(),
            heap: i
                .heap
                .records
                .iter()
                .map(|rh| {
                    rh.slots
                        .iter()
                        .map(|s| SymSlot {
                            alive: ex.c.constant(s.alive),
                            fields: s.fields.iter().map(|v| ex.const_sym(*v)).collect(),
                        })
                        .collect()
                })
                .collect(),
            extra: Vec::new(),
        },
        InputMode::Symbolic | InputMode::Assumed(_) => InputSymbols {
            receiver: m.receiver.as_ref().map(|_| ex.c.fresh_bits(rb)),
            args: m.params.iter().map(|p| ex.fresh_sym(&p.ty)).collect(),
            heap: field_types
                .iter()
                .map(|fts| {
                    (0..n)
                        .map(|_| SymSlot {
                            alive: ex.c.fresh(),
                            fields: fts.iter().map(|t| ex.fresh_sym(t)).collect(),
                        })
                        .collect()
                })
                .collect(),
            extra: Vec::new(),
        },
    };
    inputs.extra = body.extra.iter().map(|p| ex.fresh_sym(&p.ty)).collect();

    let pin = match mode {
        InputMode::Assumed(i) => input_literals(&inputs, i),
        _ => Vec::new(),
    };
    (inputs, pin)
}

/// Restricts symbolic inputs to well-formed heaps: references are null or
/// point to live slots of their record, the receiver is live, and dead
/// slots hold default values.
fn domain_constraints(
    ex: &mut Exec<'_>,
    m: &Method,
    body: &UnrolledMethod,
    inputs: &InputSymbols,
    field_types: &[Vec<Type>],
) {
    let n = ex.scope.objects as usize;
    let rb = ex.scope.ref_bits();
    let max = ex.c.bv_const(n as i64, rb);
    let alive_of = |ex: &mut Exec<'_>, rec: usize, code: &[Lit]| -> Lit {
        let mut any = ex.c.fls();
        for s in 0..n {
            let hit = ex.points_to(code, s);
            let a = ex.c.and(hit, inputs.heap[rec][s].alive);
            any = ex.c.or(any, a);
        }
        any
    };
    let ref_ok = |ex: &mut Exec<'_>, rec: usize, code: &[Lit]| {
        let null = ex.c.bv_is_zero(code);
        let live = alive_of(ex, rec, code);
        let ok = ex.c.or(null, live);
        ex.c.assert(ok);
    };
    if let (Some(r), Some(code)) = (&m.receiver, &inputs.receiver) {
        let rec = ex.records[r];
        let live = alive_of(ex, rec, code);
        ex.c.assert(live);
    }
    for (p, s) in m.params.iter().zip(&inputs.args) {
        if let Type::Ref(r) = &p.ty {
            let rec = ex.records[r];
            ref_ok(ex, rec, s.bits());
        }
    }
    for (p, s) in body.extra.iter().zip(&inputs.extra) {
        if p.ty.is_ref() {
            let le = ex.c.bv_ule(s.bits(), &max);
            ex.c.assert(le);
        }
    }
    for (rec, slots) in inputs.heap.iter().enumerate() {
        for slot in slots {
            for (f, t) in slot.fields.iter().zip(&field_types[rec]) {
                let d = ex.default_sym(t);
                let is_default = ex.eq(f, &d);
                let dead_ok = ex.c.or(slot.alive, is_default);
                ex.c.assert(dead_ok);
                if let Type::Ref(r) = t {
                    let target = ex.records[r];
                    ref_ok(ex, target, f.bits());
                }
            }
        }
    }
}

/// Encodes, solves and decodes a violating input for `m`, if any. `Unknown`
/// when the solver gives up. Used by tests and by the verifier.
pub fn find_violation(
    prog: &Program,
    m: &Method,
    scope: Scope,
    blocked: &[Input],
    opts: &stitch_sat::SolveOptions,
) -> Search {
    let enc = encode_correctness(prog, m, scope);
    let mut gs = stitch_sat::GroupSolver::new(&enc.cnf, opts);
    for b in blocked {
        gs.add_hard_clause(&enc.blocking_clause(b));
    }
    match gs.solve_all(&[]) {
        stitch_sat::Verdict::Sat(model) => {
            let input = enc.decode(&model);
            let ex = interp::execute(prog, m, scope, &input);
            Search::Found { input, outcome: ex.outcome }
        }
        stitch_sat::Verdict::Unsat { .. } => Search::None,
        stitch_sat::Verdict::Unknown => Search::Unknown,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Search {
    Found { input: Input, outcome: RunOutcome },
    None,
    Unknown,
}

/// Literals that hold exactly when the symbolic input equals `input`.
fn input_literals(syms: &InputSymbols, input: &Input) -> Vec<Lit> {
    let mut out = Vec::new();
    let mut fix = |s: &Sym, v: Value| match (s, v) {
        (Sym::Bool(l), Value::Bool(b)) => out.push(if b { *l } else { !*l }),
        (Sym::Bits(bits), v) => {
            let raw = match v {
                Value::Int(i) => i,
                Value::Ref(r) => r.map_or(0, |s| s as i64 + 1),
                Value::Bool(_) => panic!("input kind mismatch"),
            };
            for (i, l) in bits.iter().enumerate() {
                out.push(if raw >> i & 1 == 1 { *l } else { !*l });
            }
        }
        _ => panic!("input kind mismatch"),
    };
    if let Some(r) = &syms.receiver {
        fix(&Sym::Bits(r.clone()), Value::Ref(input.receiver));
    }
    for (s, v) in syms.args.iter().zip(&input.args) {
        fix(s, *v);
    }
    for (slots, rh) in syms.heap.iter().zip(&input.heap.records) {
        for (ss, cs) in slots.iter().zip(&rh.slots) {
            fix(&Sym::Bool(ss.alive), Value::Bool(cs.alive));
            for (f, v) in ss.fields.iter().zip(&cs.fields) {
                fix(f, *v);
            }
        }
    }
    out
}

impl Encoding {
    /// Assumptions fixing the symbolic input to `input`.
    pub fn input_literals(&self, input: &Input) -> Vec<Lit> {
        input_literals(&self.inputs, input)
    }

    /// Clause excluding exactly `input` from the models of a symbolic
    /// encoding.
    pub fn blocking_clause(&self, input: &Input) -> Vec<Lit> {
        self.input_literals(input).into_iter().map(|l| !l).collect()
    }
}

/// Replications per statement, for reporting.
pub fn replication_counts(m: &Method, scope: &Scope) -> BTreeMap<StmtId, u32> {
    unroll(m, scope.unroll).replication_map()
}
