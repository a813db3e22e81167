//! Tseitin gate builder with constant folding and per-group structural
//! hashing, plus LSB-first bitvector arithmetic.

use std::collections::HashMap;

use stitch_sat::{Cnf, GroupId, Lit};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Gate {
    And(Lit, Lit),
    Xor(Lit, Lit),
    Ite(Lit, Lit, Lit),
}

pub struct Circuit {
    pub cnf: Cnf,
    t: Lit,
    group: GroupId,
    cache: HashMap<(GroupId, Gate), Lit>,
}

impl Circuit {
    /// `frame` receives the unit clause defining the constant true.
    pub fn new(frame: GroupId) -> Circuit {
        let mut cnf = Cnf::new();
        let t = cnf.new_var().pos();
        cnf.add_clause_in(frame, &[t]);
        Circuit {
            cnf,
            t,
            group: frame,
            cache: HashMap::new(),
        }
    }

    pub fn set_group(&mut self, g: GroupId) {
        self.group = g;
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn tru(&self) -> Lit {
        self.t
    }

    pub fn fls(&self) -> Lit {
        !self.t
    }

    pub fn constant(&self, b: bool) -> Lit {
        if b {
            self.t
        } else {
            !self.t
        }
    }

    pub fn value_of(&self, l: Lit) -> Option<bool> {
        if l == self.t {
            Some(true)
        } else if l == !self.t {
            Some(false)
        } else {
            None
        }
    }

    pub fn fresh(&mut self) -> Lit {
        self.cnf.new_var().pos()
    }

    pub fn fresh_bits(&mut self, w: u32) -> Vec<Lit> {
        (0..w).map(|_| self.fresh()).collect()
    }

    fn clause(&mut self, lits: &[Lit]) {
        let g = self.group;
        self.cnf.add_clause_in(g, lits);
    }

    /// Forces `l` in the current group. A constant false literal still
    /// yields a clause, so the contradiction is attributed to the group.
    pub fn assert(&mut self, l: Lit) {
        if l == self.t {
            return;
        }
        self.clause(&[l]);
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        match (self.value_of(a), self.value_of(b)) {
            (Some(false), _) | (_, Some(false)) => return self.fls(),
            (Some(true), _) => return b,
            (_, Some(true)) => return a,
            _ => {}
        }
        if a == b {
            return a;
        }
        if a == !b {
            return self.fls();
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let key = (self.group, Gate::And(a, b));
        if let Some(&x) = self.cache.get(&key) {
            return x;
        }
        let x = self.fresh();
        self.clause(&[!x, a]);
        self.clause(&[!x, b]);
        self.clause(&[x, !a, !b]);
        self.cache.insert(key, x);
        x
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn and_all(&mut self, ls: &[Lit]) -> Lit {
        ls.iter().fold(self.tru(), |acc, &l| self.and(acc, l))
    }

    pub fn or_all(&mut self, ls: &[Lit]) -> Lit {
        ls.iter().fold(self.fls(), |acc, &l| self.or(acc, l))
    }

    pub fn implies(&mut self, a: Lit, b: Lit) -> Lit {
        self.or(!a, b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        match (self.value_of(a), self.value_of(b)) {
            (Some(x), Some(y)) => return self.constant(x ^ y),
            (Some(false), _) => return b,
            (Some(true), _) => return !b,
            (_, Some(false)) => return a,
            (_, Some(true)) => return !a,
            _ => {}
        }
        if a == b {
            return self.fls();
        }
        if a == !b {
            return self.tru();
        }
        // Normalize polarity so xor(a, b) and xor(!a, !b) share a gate.
        let flip = a.is_negated() ^ b.is_negated();
        let (a, b) = (strip(a), strip(b));
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let key = (self.group, Gate::Xor(a, b));
        let x = match self.cache.get(&key) {
            Some(&x) => x,
            None => {
                let x = self.fresh();
                self.clause(&[!x, a, b]);
                self.clause(&[!x, !a, !b]);
                self.clause(&[x, !a, b]);
                self.clause(&[x, a, !b]);
                self.cache.insert(key, x);
                x
            }
        };
        if flip {
            !x
        } else {
            x
        }
    }

    pub fn iff(&mut self, a: Lit, b: Lit) -> Lit {
        !self.xor(a, b)
    }

    pub fn ite(&mut self, c: Lit, t: Lit, e: Lit) -> Lit {
        match self.value_of(c) {
            Some(true) => return t,
            Some(false) => return e,
            None => {}
        }
        if t == e {
            return t;
        }
        match (self.value_of(t), self.value_of(e)) {
            (Some(true), _) => return self.or(c, e),
            (Some(false), _) => return self.and(!c, e),
            (_, Some(true)) => return self.or(!c, t),
            (_, Some(false)) => return self.and(c, t),
            _ => {}
        }
        if t == c {
            return self.or(c, e);
        }
        if e == !c {
            return self.or(!c, t);
        }
        if t == !e {
            return self.iff(c, t);
        }
        let key = (self.group, Gate::Ite(c, t, e));
        if let Some(&x) = self.cache.get(&key) {
            return x;
        }
        let x = self.fresh();
        self.clause(&[!c, !t, x]);
        self.clause(&[!c, t, !x]);
        self.clause(&[c, !e, x]);
        self.clause(&[c, e, !x]);
        self.clause(&[!t, !e, x]);
        self.clause(&[t, e, !x]);
        self.cache.insert(key, x);
        x
    }

    // Bitvectors, least significant bit first.

    pub fn bv_const(&self, v: i64, w: u32) -> Vec<Lit> {
        (0..w).map(|i| self.constant(v >> i & 1 == 1)).collect()
    }

    /// Constant value of a bitvector, if every bit is constant.
    pub fn bv_value(&self, a: &[Lit]) -> Option<u64> {
        let mut v = 0u64;
        for (i, &l) in a.iter().enumerate() {
            if self.value_of(l)? {
                v |= 1 << i;
            }
        }
        Some(v)
    }

    pub fn bv_ite(&mut self, c: Lit, t: &[Lit], e: &[Lit]) -> Vec<Lit> {
        t.iter().zip(e).map(|(&x, &y)| self.ite(c, x, y)).collect()
    }

    pub fn bv_eq(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let bits: Vec<Lit> = a.iter().zip(b).map(|(&x, &y)| self.iff(x, y)).collect();
        self.and_all(&bits)
    }

    /// `a + b + cin`, truncated to the width of `a`.
    fn add_carry(&mut self, a: &[Lit], b: &[Lit], cin: Lit) -> Vec<Lit> {
        let mut c = cin;
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let p = self.xor(x, y);
            out.push(self.xor(p, c));
            let g = self.and(x, y);
            let pc = self.and(p, c);
            c = self.or(g, pc);
        }
        out
    }

    pub fn bv_add(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let f = self.fls();
        self.add_carry(a, b, f)
    }

    pub fn bv_sub(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let nb: Vec<Lit> = b.iter().map(|&l| !l).collect();
        let t = self.tru();
        self.add_carry(a, &nb, t)
    }

    pub fn bv_neg(&mut self, a: &[Lit]) -> Vec<Lit> {
        let zero = self.bv_const(0, a.len() as u32);
        self.bv_sub(&zero, a)
    }

    pub fn bv_mul(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let w = a.len();
        let mut acc = self.bv_const(0, w as u32);
        for (i, &bi) in b.iter().enumerate() {
            let mut pp = vec![self.fls(); w];
            for j in 0..w - i {
                pp[i + j] = self.and(a[j], bi);
            }
            acc = self.bv_add(&acc, &pp);
        }
        acc
    }

    /// Unsigned `a < b`.
    pub fn bv_ult(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let mut lt = self.fls();
        for (&x, &y) in a.iter().zip(b) {
            let here = self.and(!x, y);
            let same = self.iff(x, y);
            let keep = self.and(same, lt);
            lt = self.or(here, keep);
        }
        lt
    }

    pub fn bv_ule(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        !self.bv_ult(b, a)
    }

    /// Signed `a < b`.
    pub fn bv_slt(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let w = a.len();
        let mut a2 = a.to_vec();
        let mut b2 = b.to_vec();
        a2[w - 1] = !a2[w - 1];
        b2[w - 1] = !b2[w - 1];
        self.bv_ult(&a2, &b2)
    }

    /// Restoring division; unspecified results when `b` is zero.
    pub fn bv_udivrem(&mut self, a: &[Lit], b: &[Lit]) -> (Vec<Lit>, Vec<Lit>) {
        let w = a.len();
        let mut q = vec![self.fls(); w];
        let mut r = self.bv_const(0, w as u32);
        let mut bx = b.to_vec();
        bx.push(self.fls());
        for i in (0..w).rev() {
            let mut shifted = Vec::with_capacity(w + 1);
            shifted.push(a[i]);
            shifted.extend_from_slice(&r);
            let lt = self.bv_ult(&shifted, &bx);
            let ge = !lt;
            let diff = self.bv_sub(&shifted, &bx);
            let next = self.bv_ite(ge, &diff, &shifted);
            r = next[..w].to_vec();
            q[i] = ge;
        }
        (q, r)
    }

    /// Truncating signed division and remainder.
    pub fn bv_sdivrem(&mut self, a: &[Lit], b: &[Lit]) -> (Vec<Lit>, Vec<Lit>) {
        let w = a.len();
        let (sa, sb) = (a[w - 1], b[w - 1]);
        let na = self.bv_neg(a);
        let nb = self.bv_neg(b);
        let ma = self.bv_ite(sa, &na, a);
        let mb = self.bv_ite(sb, &nb, b);
        let (q, r) = self.bv_udivrem(&ma, &mb);
        let nq = self.bv_neg(&q);
        let nr = self.bv_neg(&r);
        let qs = self.xor(sa, sb);
        (self.bv_ite(qs, &nq, &q), self.bv_ite(sa, &nr, &r))
    }

    pub fn bv_is_zero(&mut self, a: &[Lit]) -> Lit {
        let ns: Vec<Lit> = a.iter().map(|&l| !l).collect();
        self.and_all(&ns)
    }
}

fn strip(l: Lit) -> Lit {
    if l.is_negated() {
        !l
    } else {
        l
    }
}

/// Reads a bitvector from a model as an unsigned number.
pub fn read_bits(bits: &[Lit], model: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .map(|(i, l)| (l.eval(model) as u64) << i)
        .sum()
}

/// Sign-extends the low `w` bits of `v`.
pub fn signed(v: u64, w: u32) -> i64 {
    let v = v as i64;
    if v >> (w - 1) & 1 == 1 {
        v - (1i64 << w)
    } else {
        v
    }
}
