use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::value::{HeapState, Input, Value};
use crate::lang::{BinOp, Expr, Method, Program, Stmt, StmtId, StmtKind, Type, UnOp};
use crate::scope::Scope;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub unroll: u32,
    pub max_steps: u64,
}

impl Limits {
    /// `max_steps` is the larger of `unroll * statements * 4` and the
    /// worst-case step count of an in-scope run, so the step guard never
    /// fires before the loop bound does.
    pub fn for_method(m: &Method, scope: &Scope) -> Limits {
        let count = m.statements().len() as u64;
        let cheap = scope.unroll as u64 * count.max(1) * 4;
        Limits {
            unroll: scope.unroll,
            max_steps: cheap.max(worst_case_steps(&m.body, scope.unroll as u64)),
        }
    }
}

fn worst_case_steps(b: &[Stmt], u: u64) -> u64 {
    b.iter()
        .map(|s| match &s.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => 1 + worst_case_steps(then_branch, u).max(worst_case_steps(else_branch, u)),
            StmtKind::While { body, .. } => (u + 1) + u * worst_case_steps(body, u),
            _ => 1,
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trap {
    NullDeref,
    DivByZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Exceeded {
    /// A loop wanted more iterations than the unroll bound.
    Loop { stmt: StmtId },
    /// `new` found no free slot.
    Heap { stmt: StmtId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RunOutcome {
    PassedContract,
    /// The input does not satisfy requires and invariant.
    PreViolated,
    ViolatedPost,
    ViolatedInvariant,
    NullDeref { stmt: StmtId },
    DivByZero { stmt: StmtId },
    ScopeExceeded(Exceeded),
    StepLimit,
}

impl RunOutcome {
    /// An in-scope run that breaks the contract.
    pub fn is_violation(&self) -> bool {
        matches!(
            self,
            RunOutcome::ViolatedPost
                | RunOutcome::ViolatedInvariant
                | RunOutcome::NullDeref { .. }
                | RunOutcome::DivByZero { .. }
        )
    }

    /// Runs outside the bounded universe; neither pass nor fail.
    pub fn is_out_of_scope(&self) -> bool {
        matches!(self, RunOutcome::ScopeExceeded(_) | RunOutcome::StepLimit)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    pub outcome: RunOutcome,
    pub result: Option<Value>,
    pub final_heap: HeapState,
    /// Ids of executed statements in order (guards once per evaluation).
    pub trace: Vec<StmtId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InputError {
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("argument `{0}` has the wrong kind of value")]
    ArgKind(String),
    #[error("value out of range for the integer width: {0}")]
    IntRange(i64),
    #[error("heap does not match the program's records and scope")]
    HeapShape,
    #[error("reference to a dead or missing slot")]
    Dangling,
    #[error("dead slot with non-default fields")]
    DirtyDeadSlot,
    #[error("receiver missing or dead")]
    Receiver,
}

#[derive(Clone, Debug)]
struct State {
    env: Vec<Value>,
    heap: HeapState,
}

enum Stop {
    Trap(Trap, StmtId),
    Scope(Exceeded),
    Steps,
}

enum Flow {
    Normal,
    Returned,
}

/// Concrete interpreter for one method of a program at a given scope.
pub struct Machine<'a> {
    pub prog: &'a Program,
    pub method: &'a Method,
    pub scope: Scope,
    pub limits: Limits,
    vars: HashMap<String, usize>,
    var_types: Vec<Type>,
    records: HashMap<String, usize>,
}

impl<'a> Machine<'a> {
    pub fn new(prog: &'a Program, method: &'a Method, scope: Scope) -> Machine<'a> {
        let limits = Limits::for_method(method, &scope);
        Self::with_limits(prog, method, scope, limits)
    }

    pub fn with_limits(prog: &'a Program, method: &'a Method, scope: Scope, limits: Limits) -> Machine<'a> {
        let vs = method.variables();
        Machine {
            prog,
            method,
            scope,
            limits,
            vars: vs.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect(),
            var_types: vs.into_iter().map(|p| p.ty).collect(),
            records: prog
                .records
                .iter()
                .enumerate()
                .map(|(i, r)| (r.name.clone(), i))
                .collect(),
        }
    }

    pub fn record_index(&self, name: &str) -> usize {
        self.records[name]
    }

    fn value_ok(&self, v: Value, t: &Type, heap: &HeapState) -> Result<(), InputError> {
        match (v, t) {
            (Value::Int(i), Type::Int) => {
                if i < self.scope.int_min() || i > self.scope.int_max() {
                    return Err(InputError::IntRange(i));
                }
                Ok(())
            }
            (Value::Bool(_), Type::Bool) => Ok(()),
            (Value::Ref(None), Type::Ref(_)) => Ok(()),
            (Value::Ref(Some(s)), Type::Ref(r)) => {
                let rh = &heap.records[self.records[r]];
                match rh.slots.get(s as usize) {
                    Some(slot) if slot.alive => Ok(()),
                    _ => Err(InputError::Dangling),
                }
            }
            _ => Err(InputError::ArgKind(t.to_string())),
        }
    }

    /// Structural well-formedness (not the contract).
    pub fn check_input(&self, input: &Input) -> Result<(), InputError> {
        let heap = &input.heap;
        if heap.records.len() != self.prog.records.len() {
            return Err(InputError::HeapShape);
        }
        for (rh, rd) in heap.records.iter().zip(&self.prog.records) {
            if rh.record != rd.name || rh.slots.len() != self.scope.objects as usize {
                return Err(InputError::HeapShape);
            }
            for slot in &rh.slots {
                if slot.fields.len() != rd.fields.len() {
                    return Err(InputError::HeapShape);
                }
                for (v, f) in slot.fields.iter().zip(&rd.fields) {
                    if slot.alive {
                        self.value_ok(*v, &f.ty, heap)?;
                    } else if *v != Value::default_of(&f.ty) {
                        return Err(InputError::DirtyDeadSlot);
                    }
                }
            }
        }
        if input.args.len() != self.method.params.len() {
            return Err(InputError::Arity {
                expected: self.method.params.len(),
                got: input.args.len(),
            });
        }
        for (v, p) in input.args.iter().zip(&self.method.params) {
            self.value_ok(*v, &p.ty, heap)
                .map_err(|e| match e {
                    InputError::ArgKind(_) => InputError::ArgKind(p.name.clone()),
                    e => e,
                })?;
        }
        match (&self.method.receiver, input.receiver) {
            (None, None) => Ok(()),
            (Some(r), Some(s)) => {
                let rh = &heap.records[self.records[r]];
                if rh.slots.get(s as usize).is_some_and(|x| x.alive) {
                    Ok(())
                } else {
                    Err(InputError::Receiver)
                }
            }
            _ => Err(InputError::Receiver),
        }
    }

    fn initial_state(&self, input: &Input) -> State {
        let mut env = Vec::with_capacity(self.var_types.len());
        if self.method.receiver.is_some() {
            env.push(Value::Ref(input.receiver));
        }
        env.extend(input.args.iter().copied());
        for l in &self.method.locals {
            env.push(Value::default_of(&l.ty));
        }
        State {
            env,
            heap: input.heap.clone(),
        }
    }

    /// Requires and invariant on the input; false on any trap.
    pub fn satisfies_pre(&self, input: &Input) -> bool {
        if self.check_input(input).is_err() {
            return false;
        }
        let st = self.initial_state(input);
        self.holds(&self.method.contract.requires, &st, None, None)
            && self.holds(&self.method.contract.invariant, &st, None, None)
    }

    fn holds(&self, e: &Expr, st: &State, old: Option<&State>, result: Option<Value>) -> bool {
        matches!(self.eval(e, st, old, result), Ok(Value::Bool(true)))
    }

    /// Runs the method on `input` and checks the contract.
    pub fn execute(&self, input: &Input) -> Execution {
        let mut trace = Vec::new();
        if !self.satisfies_pre(input) {
            return Execution {
                outcome: RunOutcome::PreViolated,
                result: None,
                final_heap: input.heap.clone(),
                trace,
            };
        }
        let entry = self.initial_state(input);
        let mut st = entry.clone();
        let mut steps = 0u64;
        let mut result = None;
        let run = self.exec_block(&self.method.body, &mut st, &mut result, &mut steps, &mut trace);
        let outcome = match run {
            Err(Stop::Trap(Trap::NullDeref, stmt)) => RunOutcome::NullDeref { stmt },
            Err(Stop::Trap(Trap::DivByZero, stmt)) => RunOutcome::DivByZero { stmt },
            Err(Stop::Scope(x)) => RunOutcome::ScopeExceeded(x),
            Err(Stop::Steps) => RunOutcome::StepLimit,
            Ok(_) => {
                if result.is_none() {
                    result = self.method.ret.as_ref().map(Value::default_of);
                }
                // Contracts see parameters with their entry values.
                let post = State {
                    env: entry.env.clone(),
                    heap: st.heap.clone(),
                };
                if !self.holds(&self.method.contract.ensures, &post, Some(&entry), result) {
                    RunOutcome::ViolatedPost
                } else if !self.holds(&self.method.contract.invariant, &post, None, None) {
                    RunOutcome::ViolatedInvariant
                } else {
                    RunOutcome::PassedContract
                }
            }
        };
        Execution {
            outcome,
            result,
            final_heap: st.heap,
            trace,
        }
    }

    fn exec_block(
        &self,
        b: &[Stmt],
        st: &mut State,
        result: &mut Option<Value>,
        steps: &mut u64,
        trace: &mut Vec<StmtId>,
    ) -> Result<Flow, Stop> {
        for s in b {
            if let Flow::Returned = self.exec_stmt(s, st, result, steps, trace)? {
                return Ok(Flow::Returned);
            }
        }
        Ok(Flow::Normal)
    }

    fn tick(&self, s: &Stmt, steps: &mut u64, trace: &mut Vec<StmtId>) -> Result<(), Stop> {
        *steps += 1;
        if *steps > self.limits.max_steps {
            return Err(Stop::Steps);
        }
        trace.push(s.id);
        Ok(())
    }

    fn exec_stmt(
        &self,
        s: &Stmt,
        st: &mut State,
        result: &mut Option<Value>,
        steps: &mut u64,
        trace: &mut Vec<StmtId>,
    ) -> Result<Flow, Stop> {
        let trap = |t| Stop::Trap(t, s.id);
        match &s.kind {
            StmtKind::Assign { var, value } => {
                self.tick(s, steps, trace)?;
                let v = self.eval(value, st, None, None).map_err(trap)?;
                st.env[self.vars[var]] = v;
            }
            StmtKind::FieldAssign {
                target,
                field,
                value,
            } => {
                self.tick(s, steps, trace)?;
                let obj = self.eval(target, st, None, None).map_err(trap)?;
                let v = self.eval(value, st, None, None).map_err(trap)?;
                let Some(slot) = obj.as_ref() else {
                    return Err(trap(Trap::NullDeref));
                };
                let rec = self.rec_of(target).expect("typed target");
                let fi = self.prog.records[rec].field_index(field).expect("typed field");
                st.heap.slot_mut(rec, slot).fields[fi] = v;
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.tick(s, steps, trace)?;
                let c = self.eval(cond, st, None, None).map_err(trap)?.as_bool();
                let branch = if c { then_branch } else { else_branch };
                return self.exec_block(branch, st, result, steps, trace);
            }
            StmtKind::While { cond, body } => {
                let mut iters = 0;
                loop {
                    self.tick(s, steps, trace)?;
                    let c = self.eval(cond, st, None, None).map_err(trap)?.as_bool();
                    if !c {
                        break;
                    }
                    if iters == self.limits.unroll {
                        return Err(Stop::Scope(Exceeded::Loop { stmt: s.id }));
                    }
                    iters += 1;
                    if let Flow::Returned = self.exec_block(body, st, result, steps, trace)? {
                        return Ok(Flow::Returned);
                    }
                }
            }
            StmtKind::Return(e) => {
                self.tick(s, steps, trace)?;
                *result = Some(self.eval(e, st, None, None).map_err(trap)?);
                return Ok(Flow::Returned);
            }
            StmtKind::New { var, record } => {
                self.tick(s, steps, trace)?;
                let rec = self.records[record];
                let Some(free) = st.heap.records[rec].slots.iter().position(|x| !x.alive) else {
                    return Err(Stop::Scope(Exceeded::Heap { stmt: s.id }));
                };
                let slot = st.heap.slot_mut(rec, free as u32);
                slot.alive = true;
                for (v, f) in slot.fields.iter_mut().zip(&self.prog.records[rec].fields) {
                    *v = Value::default_of(&f.ty);
                }
                st.env[self.vars[var]] = Value::Ref(Some(free as u32));
            }
            StmtKind::Skip => {
                self.tick(s, steps, trace)?;
            }
        }
        Ok(Flow::Normal)
    }

    /// Record index of a reference-typed expression.
    fn rec_of(&self, e: &Expr) -> Option<usize> {
        let t = match e {
            Expr::Var(v) => self.var_types[self.vars[v]].clone(),
            Expr::Field(b, f) => {
                let r = self.rec_of(b)?;
                self.prog.records[r].field_type(f)?.clone()
            }
            Expr::Old(a) => return self.rec_of(a),
            Expr::Result => self.method.ret.clone()?,
            _ => return None,
        };
        match t {
            Type::Ref(r) => Some(self.records[&r]),
            _ => None,
        }
    }

    fn eval(&self, e: &Expr, st: &State, old: Option<&State>, result: Option<Value>) -> Result<Value, Trap> {
        let sc = &self.scope;
        Ok(match e {
            Expr::Int(v) => Value::Int(sc.wrap(*v)),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Null => Value::Ref(None),
            Expr::Var(v) => st.env[self.vars[v]],
            Expr::Result => result.expect("result available in ensures"),
            Expr::Old(a) => self.eval(a, old.expect("old state available"), None, result)?,
            Expr::Field(b, f) => {
                let Some(slot) = self.eval(b, st, old, result)?.as_ref() else {
                    return Err(Trap::NullDeref);
                };
                let rec = self.rec_of(b).expect("typed base");
                let fi = self.prog.records[rec].field_index(f).expect("typed field");
                st.heap.slot(rec, slot).fields[fi]
            }
            Expr::Unary(UnOp::Neg, a) => Value::Int(sc.wrap(-self.eval(a, st, old, result)?.as_int())),
            Expr::Unary(UnOp::Not, a) => Value::Bool(!self.eval(a, st, old, result)?.as_bool()),
            Expr::Binary(BinOp::And, a, b) => {
                if !self.eval(a, st, old, result)?.as_bool() {
                    Value::Bool(false)
                } else {
                    self.eval(b, st, old, result)?
                }
            }
            Expr::Binary(BinOp::Or, a, b) => {
                if self.eval(a, st, old, result)?.as_bool() {
                    Value::Bool(true)
                } else {
                    self.eval(b, st, old, result)?
                }
            }
            Expr::Binary(op, a, b) => {
                let x = self.eval(a, st, old, result)?;
                let y = self.eval(b, st, old, result)?;
                binop(*op, x, y, sc)?
            }
            Expr::Reach(a, f, b) => {
                let from = self.eval(a, st, old, result)?;
                let to = self.eval(b, st, old, result)?;
                let rec = self.rec_of(a).expect("typed reach");
                let fi = self.prog.records[rec].field_index(f).expect("typed field");
                let mut cur = from.as_ref();
                let mut found = false;
                for _ in 0..=sc.objects {
                    if cur == to.as_ref() {
                        found = true;
                        break;
                    }
                    cur = match cur {
                        Some(s) => st.heap.slot(rec, s).fields[fi].as_ref(),
                        None => None,
                    };
                }
                Value::Bool(found)
            }
        })
    }
}

pub fn binop(op: BinOp, x: Value, y: Value, sc: &Scope) -> Result<Value, Trap> {
    Ok(match op {
        BinOp::Add => Value::Int(sc.wrap(x.as_int() + y.as_int())),
        BinOp::Sub => Value::Int(sc.wrap(x.as_int() - y.as_int())),
        BinOp::Mul => Value::Int(sc.wrap(x.as_int() * y.as_int())),
        BinOp::Div | BinOp::Mod => {
            let (a, b) = (x.as_int(), y.as_int());
            if b == 0 {
                return Err(Trap::DivByZero);
            }
            Value::Int(sc.wrap(if op == BinOp::Div { a / b } else { a % b }))
        }
        BinOp::Lt => Value::Bool(x.as_int() < y.as_int()),
        BinOp::Le => Value::Bool(x.as_int() <= y.as_int()),
        BinOp::Gt => Value::Bool(x.as_int() > y.as_int()),
        BinOp::Ge => Value::Bool(x.as_int() >= y.as_int()),
        BinOp::Eq => Value::Bool(x == y),
        BinOp::Ne => Value::Bool(x != y),
        BinOp::Xor => Value::Bool(x.as_bool() ^ y.as_bool()),
        BinOp::And => Value::Bool(x.as_bool() && y.as_bool()),
        BinOp::Or => Value::Bool(x.as_bool() || y.as_bool()),
    })
}
