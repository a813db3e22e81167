use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScopeError {
    #[error("scope values must be positive")]
    NotPositive,
    #[error("integer width {0} exceeds the supported maximum of 16")]
    WidthTooLarge(u32),
}

/// Bounds for analysis: objects per record type, integer bit width and
/// loop iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scope {
    pub objects: u32,
    pub int_width: u32,
    pub unroll: u32,
}

impl Default for Scope {
    fn default() -> Self {
        Scope {
            objects: 3,
            int_width: 8,
            unroll: 3,
        }
    }
}

impl Scope {
    pub fn new(objects: u32, int_width: u32, unroll: u32) -> Result<Scope, ScopeError> {
        if objects == 0 || int_width == 0 || unroll == 0 {
            return Err(ScopeError::NotPositive);
        }
        if int_width > 16 {
            return Err(ScopeError::WidthTooLarge(int_width));
        }
        Ok(Scope {
            objects,
            int_width,
            unroll,
        })
    }

    pub fn int_min(&self) -> i64 {
        -(1i64 << (self.int_width - 1))
    }

    pub fn int_max(&self) -> i64 {
        (1i64 << (self.int_width - 1)) - 1
    }

    /// Two's complement wraparound into the signed range.
    pub fn wrap(&self, v: i64) -> i64 {
        let w = self.int_width;
        let m = v & ((1i64 << w) - 1);
        if m >> (w - 1) & 1 == 1 {
            m - (1i64 << w)
        } else {
            m
        }
    }

    /// Bits for a reference: code 0 is null, code s+1 is slot s.
    pub fn ref_bits(&self) -> u32 {
        32 - self.objects.leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_is_twos_complement() {
        let s = Scope::new(1, 8, 1).unwrap();
        assert_eq!(s.wrap(255), -1);
        assert_eq!(s.wrap(128), -128);
        assert_eq!(s.wrap(-129), 127);
        assert_eq!(s.wrap(5), 5);
    }

    #[test]
    fn ref_bits_cover_null_and_slots() {
        for (n, b) in [(1, 1), (2, 2), (3, 2), (4, 3), (7, 3), (8, 4)] {
            assert_eq!(Scope::new(n, 4, 1).unwrap().ref_bits(), b);
        }
    }

    #[test]
    fn rejects_bad_scopes() {
        assert!(Scope::new(0, 8, 1).is_err());
        assert!(Scope::new(1, 17, 1).is_err());
    }
}
