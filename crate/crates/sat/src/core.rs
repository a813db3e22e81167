//! Group-level solving: each tracked clause group gets a fresh selector
//! literal, and the failed selectors of an unsatisfiable run form the core.

use std::collections::{BTreeMap, BTreeSet};

use crate::cnf::{Cnf, GroupId};
use crate::lit::Lit;
use crate::solver::{SolveResult, Solver};

/// Which groups get selectors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Tracking {
    /// No selectors; cores are always empty.
    #[default]
    None,
    /// Every group is tracked.
    All,
    /// Only the listed groups are tracked; the rest are hard.
    Only(BTreeSet<GroupId>),
}

impl Tracking {
    fn tracks(&self, g: GroupId) -> bool {
        match self {
            Tracking::None => false,
            Tracking::All => true,
            Tracking::Only(s) => s.contains(&g),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tracking: Tracking,
    pub conflict_budget: Option<u64>,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tracking: Tracking::None,
            conflict_budget: None,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn tracking_all() -> Self {
        SolveOptions {
            tracking: Tracking::All,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Total assignment over the formula's variables.
    Sat(Vec<bool>),
    /// `core` lists the tracked groups used by the refutation and `failed`
    /// the caller's assumptions that took part in it.
    Unsat {
        core: BTreeSet<GroupId>,
        failed: Vec<Lit>,
    },
    /// Resource limit hit. Never to be read as unsatisfiable.
    Unknown,
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, Verdict::Unsat { .. })
    }
}

/// A loaded solver with one selector per tracked group, reusable across
/// several queries over subsets of the groups.
pub struct GroupSolver {
    solver: Solver,
    num_vars: u32,
    selectors: BTreeMap<GroupId, Lit>,
    by_selector: BTreeMap<Lit, GroupId>,
    conflict_budget: Option<u64>,
}

impl GroupSolver {
    pub fn new(cnf: &Cnf, opts: &SolveOptions) -> Self {
        let mut solver = Solver::new(opts.seed);
        solver.ensure_vars(cnf.num_vars() as usize);
        let mut next = cnf.num_vars();
        let mut selectors = BTreeMap::new();
        let mut by_selector = BTreeMap::new();
        let mut buf = Vec::new();
        for (g, clause) in cnf.iter() {
            buf.clear();
            buf.extend_from_slice(clause);
            if opts.tracking.tracks(g) {
                let sel = *selectors.entry(g).or_insert_with(|| {
                    let l = crate::lit::Var(next).pos();
                    next += 1;
                    by_selector.insert(l, g);
                    l
                });
                buf.push(!sel);
            }
            solver.add_clause(&buf);
        }
        solver.ensure_vars(next as usize);
        GroupSolver {
            solver,
            num_vars: cnf.num_vars(),
            selectors,
            by_selector,
            conflict_budget: opts.conflict_budget,
        }
    }

    pub fn tracked_groups(&self) -> impl Iterator<Item = GroupId> + '_ {
        self.selectors.keys().copied()
    }

    /// Solves with only `enabled` among the tracked groups switched on.
    pub fn solve_with(&mut self, enabled: &BTreeSet<GroupId>, assumptions: &[Lit]) -> Verdict {
        let mut assume: Vec<Lit> = assumptions.to_vec();
        for (g, sel) in &self.selectors {
            if enabled.contains(g) {
                assume.push(*sel);
            } else {
                assume.push(!*sel);
            }
        }
        match self.solver.solve(&assume, self.conflict_budget) {
            SolveResult::Sat => {
                Verdict::Sat(self.solver.model()[..self.num_vars as usize].to_vec())
            }
            SolveResult::Unsat(failed) => {
                let mut core = BTreeSet::new();
                let mut user = Vec::new();
                for l in failed {
                    if let Some(g) = self.by_selector.get(&l) {
                        core.insert(*g);
                    } else if assumptions.contains(&l) {
                        user.push(l);
                    }
                }
                Verdict::Unsat { core, failed: user }
            }
            SolveResult::Unknown => Verdict::Unknown,
        }
    }

    pub fn solve_all(&mut self, assumptions: &[Lit]) -> Verdict {
        let all: BTreeSet<GroupId> = self.selectors.keys().copied().collect();
        self.solve_with(&all, assumptions)
    }

    /// Permanently adds a hard clause (e.g. to block a model).
    pub fn add_hard_clause(&mut self, lits: &[Lit]) {
        self.solver.add_clause(lits);
    }

    pub fn stats(&self) -> &crate::solver::SolverStats {
        &self.solver.stats
    }
}

/// One-shot solve of `cnf` under `assumptions`.
pub fn solve(cnf: &Cnf, assumptions: &[Lit], opts: &SolveOptions) -> Verdict {
    let mut gs = GroupSolver::new(cnf, opts);
    let verdict = gs.solve_all(assumptions);
    if let Verdict::Sat(model) = &verdict {
        debug_assert!(cnf.is_satisfied_by(model), "solver returned a non-model");
    }
    verdict
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimizedCore {
    pub groups: BTreeSet<GroupId>,
    /// True when every remaining group was shown necessary.
    pub minimal: bool,
}

/// Deletion-based core minimization. `opts.tracking` names the soft groups
/// (`Tracking::None` is read as all groups soft): soft groups outside `core`
/// are dropped, the remaining groups stay as hard background. On budget
/// exhaustion the best core found so far is returned.
pub fn minimize_core(cnf: &Cnf, core: &BTreeSet<GroupId>, opts: &SolveOptions) -> MinimizedCore {
    let soft = match &opts.tracking {
        Tracking::None => Tracking::All,
        t => t.clone(),
    };
    let kept = cnf.restrict(|g| !soft.tracks(g) || core.contains(&g));
    let opts = SolveOptions {
        tracking: Tracking::Only(core.clone()),
        ..opts.clone()
    };
    let mut gs = GroupSolver::new(&kept, &opts);
    let mut current = core.clone();
    let mut minimal = true;
    let order: Vec<GroupId> = core.iter().copied().collect();
    for g in order {
        if !current.contains(&g) {
            continue;
        }
        let mut trial = current.clone();
        trial.remove(&g);
        match gs.solve_with(&trial, &[]) {
            Verdict::Unsat { core: smaller, .. } => {
                current = smaller.intersection(&trial).copied().collect();
            }
            Verdict::Sat(_) => {}
            Verdict::Unknown => minimal = false,
        }
    }
    MinimizedCore {
        groups: current,
        minimal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(x: i64) -> Lit {
        Lit::from_dimacs(x).unwrap()
    }

    fn trivial_unsat() -> Cnf {
        let mut f = Cnf::new();
        f.add_clause_in(GroupId(1), &[lit(1), lit(2)]);
        f.add_clause_in(GroupId(2), &[lit(-1)]);
        f.add_clause_in(GroupId(3), &[lit(-2)]);
        f
    }

    #[test]
    fn core_covers_all_three_groups() {
        let f = trivial_unsat();
        match solve(&f, &[], &SolveOptions::tracking_all()) {
            Verdict::Unsat { core, .. } => {
                assert_eq!(core, [1, 2, 3].into_iter().map(GroupId).collect())
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn assumption_gives_model() {
        let mut f = Cnf::new();
        f.add_clause(&[lit(1), lit(2)]);
        match solve(&f, &[lit(-1)], &SolveOptions::default()) {
            Verdict::Sat(m) => {
                assert!(!m[0]);
                assert!(m[1]);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn minimization_drops_irrelevant_group() {
        let mut f = trivial_unsat();
        f.add_clause_in(GroupId(4), &[lit(3)]);
        let all: BTreeSet<GroupId> = (1..=4).map(GroupId).collect();
        let m = minimize_core(&f, &all, &SolveOptions::default());
        assert_eq!(m.groups, [1, 2, 3].into_iter().map(GroupId).collect());
        assert!(m.minimal);
    }

    #[test]
    fn minimal_core_is_unchanged() {
        let f = trivial_unsat();
        let core: BTreeSet<GroupId> = (1..=3).map(GroupId).collect();
        let m = minimize_core(&f, &core, &SolveOptions::default());
        assert_eq!(m.groups, core);
    }

    #[test]
    fn untracked_groups_are_hard() {
        let f = trivial_unsat();
        let opts = SolveOptions {
            tracking: Tracking::Only([GroupId(1)].into_iter().collect()),
            ..SolveOptions::default()
        };
        match solve(&f, &[], &opts) {
            Verdict::Unsat { core, .. } => assert_eq!(core, [GroupId(1)].into_iter().collect()),
            v => panic!("{v:?}"),
        }
    }
}
