//! Mixed-radix enumeration of mutation vectors. Position 0 is the least
//! significant digit and corresponds to the bottom-most mutable statement.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorIter {
    arities: Vec<u32>,
    current: Vec<u32>,
    /// `current` has not been handed out yet.
    fresh: bool,
    done: bool,
}

impl VectorIter {
    pub fn new(arities: &[u32]) -> VectorIter {
        VectorIter {
            arities: arities.to_vec(),
            current: vec![0; arities.len()],
            fresh: true,
            done: false,
        }
    }

    /// Starts at an arbitrary vector.
    pub fn starting_at(arities: &[u32], v: &[u32]) -> VectorIter {
        assert_eq!(arities.len(), v.len());
        assert!(v.iter().zip(arities).all(|(x, k)| x <= k));
        VectorIter {
            arities: arities.to_vec(),
            current: v.to_vec(),
            fresh: true,
            done: false,
        }
    }

    pub fn arities(&self) -> &[u32] {
        &self.arities
    }

    /// The most recently returned vector (or the next one, if fresh).
    pub fn current(&self) -> &[u32] {
        &self.current
    }

    pub fn has_next(&self) -> bool {
        !self.done && (self.fresh || self.current.iter().zip(&self.arities).any(|(x, k)| x < k))
    }

    pub fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        if !self.fresh {
            self.advance_one_starting_at(0);
            if self.done {
                return None;
            }
        }
        self.fresh = false;
        Some(self.current.clone())
    }

    /// Zeroes positions `lo..=hi`.
    pub fn set_to_zero_range(&mut self, lo: usize, hi: usize) {
        for x in &mut self.current[lo..=hi] {
            *x = 0;
        }
    }

    /// Adds one at position `i`, carrying into higher positions. Lower
    /// positions are left alone. The result is the next vector returned;
    /// carrying out of the last position ends the enumeration.
    pub fn advance_one_starting_at(&mut self, i: usize) {
        let mut pos = i;
        loop {
            if pos >= self.current.len() {
                self.done = true;
                return;
            }
            if self.current[pos] < self.arities[pos] {
                self.current[pos] += 1;
                self.fresh = true;
                return;
            }
            self.current[pos] = 0;
            pos += 1;
        }
    }

    /// Stops the enumeration.
    pub fn finish(&mut self) {
        self.done = true;
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Index of `v` in the enumeration order.
    pub fn rank(&self, v: &[u32]) -> u128 {
        let mut r = 0u128;
        let mut w = 1u128;
        for (x, k) in v.iter().zip(&self.arities) {
            r += *x as u128 * w;
            w *= *k as u128 + 1;
        }
        r
    }

    pub fn total(&self) -> u128 {
        self.arities.iter().map(|k| *k as u128 + 1).product()
    }

    /// Rank of the vector `next` will return, or the total if finished.
    pub fn next_rank(&self) -> u128 {
        if self.done {
            self.total()
        } else if self.fresh {
            self.rank(&self.current)
        } else {
            self.rank(&self.current) + 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carry_skips_saturated_positions() {
        let (k4, k5) = (6, 9);
        let a = [7, 7, 7, k4, k5, 7, 7];
        let mut it = VectorIter::starting_at(&a, &[3, 2, 5, k4, k5, 2, 4]);
        it.next();
        it.advance_one_starting_at(3);
        assert_eq!(it.next().unwrap(), vec![3, 2, 5, 0, 0, 3, 4]);
    }

    #[test]
    fn small_order() {
        let mut it = VectorIter::new(&[1, 1]);
        let mut all = Vec::new();
        while it.has_next() {
            all.push(it.next().unwrap());
        }
        assert_eq!(all, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
        assert!(it.next().is_none());
    }

    #[test]
    fn empty_arity_list_yields_one_vector() {
        let mut it = VectorIter::new(&[]);
        assert_eq!(it.next(), Some(vec![]));
        assert!(!it.has_next());
    }
}
