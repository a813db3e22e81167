use std::fmt;
use std::ops::Not;

/// A propositional variable, 0-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, false)
    }

    pub fn neg(self) -> Lit {
        Lit::new(self, true)
    }
}

/// A literal, packed as `var * 2 + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, negated: bool) -> Lit {
        Lit(var.0 << 1 | negated as u32)
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// DIMACS integer for this literal (variables are 1-based there).
    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64 + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    /// Inverse of [`Lit::to_dimacs`]. `0` is not a literal.
    pub fn from_dimacs(value: i64) -> Option<Lit> {
        if value == 0 || value.unsigned_abs() > u32::MAX as u64 / 2 {
            return None;
        }
        let var = Var(value.unsigned_abs() as u32 - 1);
        Some(Lit::new(var, value < 0))
    }

    /// Evaluate under a total assignment indexed by variable.
    pub fn eval(self, model: &[bool]) -> bool {
        model[self.var().index()] ^ self.is_negated()
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_mapping() {
        let l = Var(0).pos();
        assert_eq!(l.to_dimacs(), 1);
        assert_eq!((!l).to_dimacs(), -1);
        assert_eq!(Lit::from_dimacs(-3), Some(Var(2).neg()));
        assert_eq!(Lit::from_dimacs(0), None);
    }

    #[test]
    fn negation_is_involutive() {
        let l = Var(17).neg();
        assert_eq!(!!l, l);
        assert_ne!(!l, l);
        assert_eq!((!l).var(), l.var());
    }
}
