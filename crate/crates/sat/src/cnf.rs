use crate::lit::{Lit, Var};

/// Identifies a group of clauses. Cores are reported over groups.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GroupId(pub u32);

impl GroupId {
    pub const DEFAULT: GroupId = GroupId(0);
}

/// A CNF formula whose clauses each belong to exactly one group.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    groups: Vec<GroupId>,
}

impl Cnf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vars(num_vars: u32) -> Self {
        Cnf {
            num_vars,
            ..Self::default()
        }
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.num_vars);
        self.num_vars += 1;
        v
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.add_clause_in(GroupId::DEFAULT, lits);
    }

    /// Adds a clause to `group`, growing the variable count if a literal
    /// mentions a variable not yet declared.
    pub fn add_clause_in(&mut self, group: GroupId, lits: &[Lit]) {
        for l in lits {
            if l.var().0 >= self.num_vars {
                self.num_vars = l.var().0 + 1;
            }
        }
        self.clauses.push(lits.to_vec());
        self.groups.push(group);
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn group_of(&self, clause: usize) -> GroupId {
        self.groups[clause]
    }

    pub fn groups(&self) -> &[GroupId] {
        &self.groups
    }

    pub fn iter(&self) -> impl Iterator<Item = (GroupId, &[Lit])> {
        self.groups
            .iter()
            .copied()
            .zip(self.clauses.iter().map(|c| c.as_slice()))
    }

    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.eval(model)))
    }

    /// Index of the first clause the model falsifies.
    pub fn first_falsified(&self, model: &[bool]) -> Option<usize> {
        self.clauses
            .iter()
            .position(|c| !c.iter().any(|l| l.eval(model)))
    }

    /// The sub-formula made of the clauses whose group is accepted by `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(GroupId) -> bool) -> Cnf {
        let mut out = Cnf::with_vars(self.num_vars);
        for (g, c) in self.iter() {
            if keep(g) {
                out.add_clause_in(g, c);
            }
        }
        out
    }
}
