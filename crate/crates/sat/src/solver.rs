//! Incremental CDCL solver.
//!
//! - two watched literals with blocker literals
//! - first-UIP learning with local clause minimization
//! - VSIDS variable activity on a binary heap, phase saving
//! - Luby restarts and activity-based learnt clause reduction
//! - MiniSat-style assumptions; a failed run reports the subset of
//!   assumptions responsible for the refutation

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lit::{Lit, Var};

const LUBY_UNIT: u64 = 100;
const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;

/// Outcome of a single [`Solver::solve`] call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    /// Unsatisfiable under the given assumptions. Carries the failed
    /// assumptions (empty when the clause set alone is unsatisfiable).
    Unsat(Vec<Lit>),
    /// The conflict budget ran out.
    Unknown,
}

#[derive(Clone, Copy, Debug)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

#[derive(Clone, Debug)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    removed: bool,
    activity: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub solves: u64,
}

pub struct Solver {
    ok: bool,
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    heap: VarHeap,
    seen: Vec<bool>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    var_inc: f64,
    cla_inc: f64,
    max_learnts: f64,
    model: Vec<bool>,
    rng: ChaCha8Rng,
    pub stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new(0)
    }
}

impl Solver {
    pub fn new(seed: u64) -> Self {
        Solver {
            ok: true,
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            polarity: Vec::new(),
            activity: Vec::new(),
            heap: VarHeap::default(),
            seen: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            var_inc: 1.0,
            cla_inc: 1.0,
            max_learnts: 0.0,
            model: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: SolverStats::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.assigns.len() as u32);
        self.assigns.push(0);
        self.level.push(0);
        self.reason.push(None);
        self.polarity.push(true);
        // Seeded jitter breaks ties between otherwise identical variables.
        self.activity.push(self.rng.gen::<f64>() * 1e-5);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.insert(v.0, &self.activity);
        v
    }

    pub fn ensure_vars(&mut self, n: usize) {
        while self.assigns.len() < n {
            self.new_var();
        }
    }

    fn value_lit(&self, l: Lit) -> i8 {
        let a = self.assigns[l.var().index()];
        if l.is_negated() {
            -a
        } else {
            a
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a clause. Must only be called between solves. Returns `false`
    /// once the clause set is known to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        debug_assert_eq!(self.decision_level(), 0);
        if let Some(max) = lits.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        let mut ls = lits.to_vec();
        ls.sort_unstable();
        ls.dedup();
        let mut out = Vec::with_capacity(ls.len());
        for (i, &l) in ls.iter().enumerate() {
            if i + 1 < ls.len() && ls[i + 1] == !l {
                return true; // tautology
            }
            match self.value_lit(l) {
                1 => return true,
                -1 => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                let cref = self.alloc_clause(out, false);
                self.attach(cref);
                true
            }
        }
    }

    fn alloc_clause(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.clauses.push(Clause {
            lits,
            learnt,
            removed: false,
            activity: 0.0,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn attach(&mut self, cref: u32) {
        let c = &self.clauses[cref as usize];
        let (a, b) = (c.lits[0], c.lits[1]);
        self.watches[a.code()].push(Watcher { cref, blocker: b });
        self.watches[b.code()].push(Watcher { cref, blocker: a });
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        let v = l.var().index();
        debug_assert_eq!(self.assigns[v], 0);
        self.assigns[v] = if l.is_negated() { -1 } else { 1 };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value_lit(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].removed {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                if first != w.blocker && self.value_lit(first) == 1 {
                    ws[j] = Watcher {
                        cref: w.cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value_lit(l) != -1 {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[l.code()].push(Watcher {
                            cref: w.cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                j += 1;
                if self.value_lit(first) == -1 {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increase(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit::new(Var(0), false)];
        let mut path_count = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            self.bump_clause(confl);
            let start = if p.is_some() { 1 } else { 0 };
            let lits = self.clauses[confl as usize].lits.clone();
            for &q in &lits[start..] {
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] as usize >= self.decision_level() {
                        path_count += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            self.seen[pl.var().index()] = false;
            path_count -= 1;
            if path_count == 0 {
                break;
            }
            confl = self.reason[pl.var().index()].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();

        // Local minimization: drop literals implied by others already present.
        let mut kept = vec![learnt[0]];
        for &q in &learnt[1..] {
            let v = q.var().index();
            let redundant = match self.reason[v] {
                None => false,
                Some(r) => self.clauses[r as usize].lits[1..].iter().all(|l| {
                    let u = l.var().index();
                    self.seen[u] || self.level[u] == 0
                }),
            };
            if !redundant {
                kept.push(q);
            }
        }
        for &q in &learnt {
            self.seen[q.var().index()] = false;
        }
        let mut learnt = kept;

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var().index()] as usize
        };
        (learnt, bt)
    }

    /// Collects the assumptions that imply `!p` (where `p` is the assumption
    /// found false), including `p` itself.
    fn analyze_final(&mut self, p: Lit) -> Vec<Lit> {
        let mut out = vec![p];
        if self.decision_level() == 0 {
            return out;
        }
        self.seen[p.var().index()] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            if !self.seen[v] {
                continue;
            }
            match self.reason[v] {
                None => out.push(l),
                Some(r) => {
                    for &q in &self.clauses[r as usize].lits[1..] {
                        if self.level[q.var().index()] > 0 {
                            self.seen[q.var().index()] = true;
                        }
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[p.var().index()] = false;
        out
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.assigns[v] = 0;
            self.reason[v] = None;
            self.polarity[v] = l.is_negated();
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop_max(&self.activity) {
            if self.assigns[v as usize] == 0 {
                return Some(Lit::new(Var(v), self.polarity[v as usize]));
            }
        }
        None
    }

    fn locked(&self, cref: u32) -> bool {
        let c = &self.clauses[cref as usize];
        let l = c.lits[0];
        self.value_lit(l) == 1 && self.reason[l.var().index()] == Some(cref)
    }

    fn reduce_db(&mut self) {
        let mut refs: Vec<u32> = self
            .learnts
            .iter()
            .copied()
            .filter(|&c| !self.clauses[c as usize].removed)
            .collect();
        refs.sort_by(|a, b| {
            self.clauses[*a as usize]
                .activity
                .partial_cmp(&self.clauses[*b as usize].activity)
                .unwrap()
        });
        let half = refs.len() / 2;
        let mut keep = Vec::with_capacity(refs.len());
        for (i, &c) in refs.iter().enumerate() {
            let cl = &self.clauses[c as usize];
            if i < half && cl.lits.len() > 2 && !self.locked(c) {
                let cl = &mut self.clauses[c as usize];
                cl.removed = true;
                cl.lits = Vec::new();
            } else {
                keep.push(c);
            }
        }
        self.learnts = keep;
    }

    fn search(
        &mut self,
        nof_conflicts: u64,
        assumptions: &[Lit],
        budget_left: &mut Option<u64>,
    ) -> Option<SolveResult> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if let Some(b) = budget_left.as_mut() {
                    *b = b.saturating_sub(1);
                }
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(SolveResult::Unsat(Vec::new()));
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.alloc_clause(learnt, true);
                    self.attach(cref);
                    self.bump_clause(cref);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;
            } else {
                if *budget_left == Some(0) {
                    return Some(SolveResult::Unknown);
                }
                if conflicts >= nof_conflicts {
                    self.cancel_until(0);
                    return None;
                }
                if self.learnts.len() as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let p = assumptions[self.decision_level()];
                    match self.value_lit(p) {
                        1 => self.trail_lim.push(self.trail.len()),
                        -1 => return Some(SolveResult::Unsat(self.analyze_final(p))),
                        _ => {
                            next = Some(p);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(p) => p,
                    None => match self.pick_branch() {
                        Some(p) => {
                            self.stats.decisions += 1;
                            p
                        }
                        None => return Some(SolveResult::Sat),
                    },
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, None);
            }
        }
    }

    /// Solves under `assumptions`. `conflict_budget` bounds the number of
    /// conflicts for this call; exhausting it yields [`SolveResult::Unknown`].
    pub fn solve(&mut self, assumptions: &[Lit], conflict_budget: Option<u64>) -> SolveResult {
        self.stats.solves += 1;
        self.model.clear();
        if !self.ok {
            return SolveResult::Unsat(Vec::new());
        }
        if let Some(max) = assumptions.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        self.max_learnts = (self.clauses.len() as f64 / 3.0).max(2000.0);
        let mut budget = conflict_budget;
        let mut round = 0u32;
        let result = loop {
            let limit = luby(2.0, round) * LUBY_UNIT as f64;
            match self.search(limit as u64, assumptions, &mut budget) {
                Some(r) => break r,
                None => {
                    self.stats.restarts += 1;
                    round += 1;
                    self.max_learnts *= 1.05;
                }
            }
        };
        if result == SolveResult::Sat {
            self.model = self.assigns.iter().map(|&a| a == 1).collect();
        }
        self.cancel_until(0);
        result
    }

    /// Model of the last satisfiable call, indexed by variable.
    pub fn model(&self) -> &[bool] {
        &self.model
    }

    /// Whether the clause set (ignoring assumptions) is still possibly satisfiable.
    pub fn is_ok(&self) -> bool {
        self.ok
    }
}

/// Element `i` of the Luby sequence scaled by powers of `y`.
fn luby(y: f64, mut x: u32) -> f64 {
    let mut size = 1u32;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

/// Max-heap of variables keyed by activity.
#[derive(Default, Clone, Debug)]
struct VarHeap {
    heap: Vec<u32>,
    index: Vec<Option<usize>>,
}

impl VarHeap {
    fn contains(&self, v: u32) -> bool {
        self.index.get(v as usize).copied().flatten().is_some()
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.index.len() <= v as usize {
            self.index.resize(v as usize + 1, None);
        }
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.index[v as usize] = Some(i);
        self.sift_up(i, act);
    }

    fn increase(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.index.get(v as usize).copied().flatten() {
            self.sift_up(i, act);
        }
    }

    fn pop_max(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.pop().unwrap();
        self.index[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.index[last as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.index[pv as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.index[v as usize] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let cv = self.heap[c];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.index[cv as usize] = Some(i);
            i = c;
        }
        self.heap[i] = v;
        self.index[v as usize] = Some(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(x: i64) -> Lit {
        Lit::from_dimacs(x).unwrap()
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<f64> = (0..15).map(|i| luby(2.0, i)).collect();
        assert_eq!(
            seq,
            vec![1., 1., 2., 1., 1., 2., 4., 1., 1., 2., 1., 1., 2., 4., 8.]
        );
    }

    #[test]
    fn unit_conflict_at_level_zero() {
        let mut s = Solver::new(0);
        assert!(s.add_clause(&[lit(1)]));
        assert!(!s.add_clause(&[lit(-1)]));
        assert_eq!(s.solve(&[], None), SolveResult::Unsat(vec![]));
    }

    #[test]
    fn assumption_flips_answer() {
        let mut s = Solver::new(0);
        s.add_clause(&[lit(1), lit(2)]);
        assert_eq!(s.solve(&[lit(-1)], None), SolveResult::Sat);
        assert!(s.model()[1]);
        match s.solve(&[lit(-1), lit(-2)], None) {
            SolveResult::Unsat(core) => {
                let mut core = core;
                core.sort();
                assert_eq!(core, vec![lit(-1), lit(-2)]);
            }
            other => panic!("{other:?}"),
        }
        // Still satisfiable afterwards.
        assert_eq!(s.solve(&[], None), SolveResult::Sat);
    }

    #[test]
    fn pigeonhole_three_into_two() {
        // p(i,j): pigeon i in hole j; var = 2*i + j + 1
        let p = |i: i64, j: i64| 2 * i + j + 1;
        let mut s = Solver::new(1);
        for i in 0..3 {
            s.add_clause(&[lit(p(i, 0)), lit(p(i, 1))]);
        }
        for j in 0..2 {
            for a in 0..3 {
                for b in a + 1..3 {
                    s.add_clause(&[lit(-p(a, j)), lit(-p(b, j))]);
                }
            }
        }
        assert!(matches!(s.solve(&[], None), SolveResult::Unsat(_)));
    }

    #[test]
    fn budget_yields_unknown() {
        // Pigeonhole 7 into 6 needs far more than one conflict.
        let n = 7i64;
        let h = 6i64;
        let p = |i: i64, j: i64| h * i + j + 1;
        let mut s = Solver::new(1);
        for i in 0..n {
            let c: Vec<Lit> = (0..h).map(|j| lit(p(i, j))).collect();
            s.add_clause(&c);
        }
        for j in 0..h {
            for a in 0..n {
                for b in a + 1..n {
                    s.add_clause(&[lit(-p(a, j)), lit(-p(b, j))]);
                }
            }
        }
        assert_eq!(s.solve(&[], Some(1)), SolveResult::Unknown);
    }
}
