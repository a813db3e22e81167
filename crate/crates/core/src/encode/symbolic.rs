//! Symbolic execution of an unrolled method over the bounded heap. Every
//! statement update is guarded by an "active" literal, so branches run one
//! after the other on a shared state instead of being merged.

use std::collections::HashMap;

use stitch_sat::{GroupId, Lit};

use super::circuit::Circuit;
use super::unroll::{UKind, UStmt};
use crate::lang::{BinOp, Expr, Method, Program, Type, UnOp};
use crate::scope::Scope;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sym {
    Bool(Lit),
    /// Integers in two's complement, references as slot codes (0 is null,
    /// `s + 1` is slot `s`). Least significant bit first.
    Bits(Vec<Lit>),
}

impl Sym {
    pub fn lit(&self) -> Lit {
        match self {
            Sym::Bool(l) => *l,
            Sym::Bits(_) => panic!("expected a boolean"),
        }
    }

    pub fn bits(&self) -> &[Lit] {
        match self {
            Sym::Bits(b) => b,
            Sym::Bool(_) => panic!("expected a bitvector"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SymSlot {
    pub alive: Lit,
    pub fields: Vec<Sym>,
}

#[derive(Clone, Debug)]
pub struct SymState {
    pub env: Vec<Sym>,
    /// Per record type, per slot.
    pub heap: Vec<Vec<SymSlot>>,
}

/// Control flags of the run so far.
#[derive(Clone, Copy, Debug)]
pub struct Flags {
    pub trapped: Lit,
    pub returned: Lit,
    pub excluded: Lit,
}

pub struct Exec<'a> {
    pub c: &'a mut Circuit,
    pub prog: &'a Program,
    pub method: &'a Method,
    pub scope: Scope,
    pub vars: HashMap<String, (usize, Type)>,
    pub records: HashMap<String, usize>,
    pub flags: Flags,
    pub result: Option<Sym>,
    /// Maps (statement, replica) to the group of its clauses.
    pub group_of: &'a mut dyn FnMut(u32, u32) -> GroupId,
}

impl<'a> Exec<'a> {
    pub fn default_sym(&self, t: &Type) -> Sym {
        match t {
            Type::Int => Sym::Bits(self.c.bv_const(0, self.scope.int_width)),
            Type::Bool => Sym::Bool(self.c.fls()),
            Type::Ref(_) | Type::Null => Sym::Bits(self.c.bv_const(0, self.scope.ref_bits())),
        }
    }

    pub fn fresh_sym(&mut self, t: &Type) -> Sym {
        match t {
            Type::Int => Sym::Bits(self.c.fresh_bits(self.scope.int_width)),
            Type::Bool => Sym::Bool(self.c.fresh()),
            Type::Ref(_) | Type::Null => Sym::Bits(self.c.fresh_bits(self.scope.ref_bits())),
        }
    }

    pub fn const_sym(&self, v: crate::interp::Value) -> Sym {
        use crate::interp::Value;
        match v {
            Value::Int(i) => Sym::Bits(self.c.bv_const(i, self.scope.int_width)),
            Value::Bool(b) => Sym::Bool(self.c.constant(b)),
            Value::Ref(r) => Sym::Bits(
                self.c
                    .bv_const(r.map_or(0, |s| s as i64 + 1), self.scope.ref_bits()),
            ),
        }
    }

    pub fn ite(&mut self, cond: Lit, t: &Sym, e: &Sym) -> Sym {
        match (t, e) {
            (Sym::Bool(a), Sym::Bool(b)) => Sym::Bool(self.c.ite(cond, *a, *b)),
            (Sym::Bits(a), Sym::Bits(b)) => Sym::Bits(self.c.bv_ite(cond, a, b)),
            _ => panic!("ite over mismatched kinds"),
        }
    }

    pub fn eq(&mut self, a: &Sym, b: &Sym) -> Lit {
        match (a, b) {
            (Sym::Bool(x), Sym::Bool(y)) => self.c.iff(*x, *y),
            (Sym::Bits(x), Sym::Bits(y)) => self.c.bv_eq(x, y),
            _ => panic!("comparing mismatched kinds"),
        }
    }

    /// Literal true when reference `code` denotes slot `s`.
    pub fn points_to(&mut self, code: &[Lit], s: usize) -> Lit {
        let k = self.c.bv_const(s as i64 + 1, code.len() as u32);
        self.c.bv_eq(code, &k)
    }

    /// Static record index of a reference-typed expression.
    pub fn rec_of(&self, e: &Expr) -> usize {
        match self.type_of(e) {
            Type::Ref(r) => self.records[&r],
            t => panic!("expected a reference, found {t}"),
        }
    }

    fn type_of(&self, e: &Expr) -> Type {
        match e {
            Expr::Var(v) => self.vars[v].1.clone(),
            Expr::Field(b, f) => {
                let r = self.rec_of(b);
                self.prog.records[r].field_type(f).expect("typed field").clone()
            }
            Expr::Old(a) => self.type_of(a),
            Expr::Result => self.method.ret.clone().expect("typed result"),
            Expr::Null => Type::Null,
            Expr::Int(_) => Type::Int,
            _ => Type::Bool,
        }
    }

    fn read_field(&mut self, st: &SymState, rec: usize, code: &[Lit], fi: usize) -> Sym {
        let slots = &st.heap[rec];
        let mut v = slots[slots.len() - 1].fields[fi].clone();
        for s in (0..slots.len() - 1).rev() {
            let hit = self.points_to(code, s);
            v = self.ite(hit, &slots[s].fields[fi], &v);
        }
        v
    }

    /// Value of `e` and the condition under which evaluating it traps.
    pub fn eval(
        &mut self,
        e: &Expr,
        st: &SymState,
        old: Option<&SymState>,
    ) -> (Sym, Lit) {
        let no = self.c.fls();
        match e {
            Expr::Int(v) => (
                Sym::Bits(self.c.bv_const(self.scope.wrap(*v), self.scope.int_width)),
                no,
            ),
            Expr::Bool(b) => (Sym::Bool(self.c.constant(*b)), no),
            Expr::Null => (self.default_sym(&Type::Null), no),
            Expr::Var(v) => (st.env[self.vars[v].0].clone(), no),
            Expr::Result => (self.result.clone().expect("result in ensures"), no),
            Expr::Old(a) => {
                let o = old.expect("old state in ensures");
                self.eval(a, o, None)
            }
            Expr::Field(b, f) => {
                let (vb, tb) = self.eval(b, st, old);
                let rec = self.rec_of(b);
                let fi = self.prog.records[rec].field_index(f).expect("typed field");
                let null = self.c.bv_is_zero(vb.bits());
                let trap = self.c.or(tb, null);
                (self.read_field(st, rec, vb.bits(), fi), trap)
            }
            Expr::Unary(UnOp::Neg, a) => {
                let (va, ta) = self.eval(a, st, old);
                (Sym::Bits(self.c.bv_neg(va.bits())), ta)
            }
            Expr::Unary(UnOp::Not, a) => {
                let (va, ta) = self.eval(a, st, old);
                (Sym::Bool(!va.lit()), ta)
            }
            Expr::Binary(op, a, b) => {
                let (va, ta) = self.eval(a, st, old);
                let (vb, tb) = self.eval(b, st, old);
                self.binary(*op, va, ta, vb, tb)
            }
            Expr::Reach(a, f, b) => {
                let (from, ta) = self.eval(a, st, old);
                let (to, tb) = self.eval(b, st, old);
                let rec = self.rec_of(a);
                let fi = self.prog.records[rec].field_index(f).expect("typed field");
                let mut cur = from.bits().to_vec();
                let mut found = self.c.fls();
                for i in 0..=self.scope.objects {
                    let here = self.c.bv_eq(&cur, to.bits());
                    found = self.c.or(found, here);
                    if i < self.scope.objects {
                        let null = self.c.bv_is_zero(&cur);
                        let next = self.read_field(st, rec, &cur, fi);
                        cur = self.c.bv_ite(null, &cur, next.bits());
                    }
                }
                let trap = self.c.or(ta, tb);
                (Sym::Bool(found), trap)
            }
        }
    }

    fn binary(&mut self, op: BinOp, va: Sym, ta: Lit, vb: Sym, tb: Lit) -> (Sym, Lit) {
        if matches!(op, BinOp::Eq | BinOp::Ne) {
            let e = self.eq(&va, &vb);
            let trap = self.c.or(ta, tb);
            return (Sym::Bool(if op == BinOp::Eq { e } else { !e }), trap);
        }
        let c = &mut *self.c;
        match op {
            BinOp::And => {
                let a = va.lit();
                let late = c.and(a, tb);
                (Sym::Bool(c.and(a, vb.lit())), c.or(ta, late))
            }
            BinOp::Or => {
                let a = va.lit();
                let late = c.and(!a, tb);
                (Sym::Bool(c.or(a, vb.lit())), c.or(ta, late))
            }
            _ => {
                let trap = c.or(ta, tb);
                match op {
                    BinOp::Add => (Sym::Bits(c.bv_add(va.bits(), vb.bits())), trap),
                    BinOp::Sub => (Sym::Bits(c.bv_sub(va.bits(), vb.bits())), trap),
                    BinOp::Mul => (Sym::Bits(c.bv_mul(va.bits(), vb.bits())), trap),
                    BinOp::Div | BinOp::Mod => {
                        let zero = c.bv_is_zero(vb.bits());
                        let trap = c.or(trap, zero);
                        let (q, r) = c.bv_sdivrem(va.bits(), vb.bits());
                        (Sym::Bits(if op == BinOp::Div { q } else { r }), trap)
                    }
                    BinOp::Lt => (Sym::Bool(c.bv_slt(va.bits(), vb.bits())), trap),
                    BinOp::Le => (Sym::Bool(!c.bv_slt(vb.bits(), va.bits())), trap),
                    BinOp::Gt => (Sym::Bool(c.bv_slt(vb.bits(), va.bits())), trap),
                    BinOp::Ge => (Sym::Bool(!c.bv_slt(va.bits(), vb.bits())), trap),
                    BinOp::Xor => (Sym::Bool(c.xor(va.lit(), vb.lit())), trap),
                    BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Ne => unreachable!(),
                }
            }
        }
    }

    /// `e` holds: evaluates to true without trapping.
    pub fn holds(&mut self, e: &Expr, st: &SymState, old: Option<&SymState>) -> Lit {
        let (v, t) = self.eval(e, st, old);
        self.c.and(v.lit(), !t)
    }

    fn active(&mut self, path: Lit) -> Lit {
        let f = self.flags;
        self.c
            .and_all(&[path, !f.trapped, !f.returned, !f.excluded])
    }

    fn trap_if(&mut self, act: Lit, t: Lit) {
        let hit = self.c.and(act, t);
        self.flags.trapped = self.c.or(self.flags.trapped, hit);
    }

    pub fn exec_block(&mut self, b: &[UStmt], path: Lit, st: &mut SymState) {
        for s in b {
            self.exec_stmt(s, path, st);
        }
    }

    fn exec_stmt(&mut self, s: &UStmt, path: Lit, st: &mut SymState) {
        let g = (self.group_of)(s.origin, s.replica);
        self.c.set_group(g);
        let act = self.active(path);
        if self.c.value_of(act) == Some(false) {
            return;
        }
        match &s.kind {
            UKind::Assign { var, value } => {
                let (v, t) = self.eval(value, st, None);
                self.trap_if(act, t);
                let i = self.vars[var].0;
                st.env[i] = self.ite(act, &v, &st.env[i].clone());
            }
            UKind::FieldAssign {
                target,
                field,
                value,
            } => {
                let (x, tx) = self.eval(target, st, None);
                let (v, tv) = self.eval(value, st, None);
                let null = self.c.bv_is_zero(x.bits());
                let t = self.c.or_all(&[tx, tv, null]);
                self.trap_if(act, t);
                let rec = self.rec_of(target);
                let fi = self.prog.records[rec].field_index(field).expect("typed field");
                for slot in 0..st.heap[rec].len() {
                    let hit = self.points_to(x.bits(), slot);
                    let w = self.c.and(act, hit);
                    let old = st.heap[rec][slot].fields[fi].clone();
                    st.heap[rec][slot].fields[fi] = self.ite(w, &v, &old);
                }
            }
            UKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let (v, t) = self.eval(cond, st, None);
                self.trap_if(act, t);
                let cv = v.lit();
                let pt = self.c.and(path, cv);
                let pe = self.c.and(path, !cv);
                self.exec_block(then_branch, pt, st);
                self.exec_block(else_branch, pe, st);
            }
            UKind::ScopeCheck { cond } => {
                let (v, t) = self.eval(cond, st, None);
                self.trap_if(act, t);
                let over = self.c.and_all(&[act, v.lit(), !t]);
                self.flags.excluded = self.c.or(self.flags.excluded, over);
            }
            UKind::Return(e) => {
                let (v, t) = self.eval(e, st, None);
                self.trap_if(act, t);
                let prev = self.result.clone().expect("non-void method");
                self.result = Some(self.ite(act, &v, &prev));
                self.flags.returned = self.c.or(self.flags.returned, act);
            }
            UKind::New { var, record } => {
                let rec = self.records[record];
                let n = st.heap[rec].len();
                let mut all_before = self.c.tru();
                let mut picks = Vec::with_capacity(n);
                for s in 0..n {
                    let alive = st.heap[rec][s].alive;
                    let p = self.c.and_all(&[act, !alive, all_before]);
                    picks.push(p);
                    all_before = self.c.and(all_before, alive);
                }
                let none = self.c.and(act, all_before);
                self.flags.excluded = self.c.or(self.flags.excluded, none);
                let fields: Vec<Type> = self.prog.records[rec]
                    .fields
                    .iter()
                    .map(|f| f.ty.clone())
                    .collect();
                for (s, &p) in picks.iter().enumerate() {
                    let slot = &st.heap[rec][s];
                    let alive = self.c.or(slot.alive, p);
                    let old = slot.fields.clone();
                    let mut nf = Vec::with_capacity(old.len());
                    for (v, t) in old.iter().zip(&fields) {
                        let d = self.default_sym(t);
                        nf.push(self.ite(p, &d, v));
                    }
                    st.heap[rec][s] = SymSlot { alive, fields: nf };
                }
                let w = self.scope.ref_bits();
                let code: Vec<Lit> = (0..w)
                    .map(|bit| {
                        let ps: Vec<Lit> = picks
                            .iter()
                            .enumerate()
                            .filter(|(s, _)| (s + 1) >> bit & 1 == 1)
                            .map(|(_, &p)| p)
                            .collect();
                        self.c.or_all(&ps)
                    })
                    .collect();
                let i = self.vars[var].0;
                let took = self.c.and(act, !none);
                st.env[i] = self.ite(took, &Sym::Bits(code), &st.env[i].clone());
            }
            UKind::Skip => {}
        }
    }
}
