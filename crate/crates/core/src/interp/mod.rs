//! Concrete execution with contract checking, plus the pool of failing
//! inputs used to discard candidates cheaply.

mod exec;
pub mod gen;
mod value;

use thiserror::Error;

pub use exec::{binop, Exceeded, Execution, InputError, Limits, Machine, RunOutcome, Trap};
pub use gen::{random_input, random_valid_input};
pub use value::{HeapState, Input, RecordHeap, Slot, Value};

use crate::lang::{Method, Program};
use crate::scope::Scope;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PoolError {
    #[error("malformed input: {0}")]
    Malformed(#[from] InputError),
    #[error("input violates the precondition")]
    PreViolated,
}

/// Append-only, duplicate-free sequence of inputs for one method.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InputPool {
    inputs: Vec<Input>,
}

impl InputPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Input] {
        &self.inputs
    }

    pub fn contains(&self, input: &Input) -> bool {
        self.inputs.contains(input)
    }

    /// Adds `input` after checking it against `method`'s precondition.
    /// Returns whether the pool grew.
    pub fn add(
        &mut self,
        prog: &Program,
        method: &Method,
        scope: Scope,
        input: Input,
    ) -> Result<bool, PoolError> {
        let m = Machine::new(prog, method, scope);
        m.check_input(&input)?;
        if !m.satisfies_pre(&input) {
            return Err(PoolError::PreViolated);
        }
        if self.contains(&input) {
            return Ok(false);
        }
        self.inputs.push(input);
        Ok(true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SieveResult {
    Pass,
    /// First pooled input on which the candidate breaks its contract.
    Fail {
        index: usize,
        input: Input,
        outcome: RunOutcome,
    },
}

impl SieveResult {
    pub fn passed(&self) -> bool {
        matches!(self, SieveResult::Pass)
    }
}

/// Runs `candidate` on every pooled input in order. Runs that leave the
/// scope count as passing.
pub fn sieve(prog: &Program, candidate: &Method, scope: Scope, pool: &InputPool) -> SieveResult {
    let m = Machine::new(prog, candidate, scope);
    for (index, input) in pool.inputs().iter().enumerate() {
        let ex = m.execute(input);
        if ex.outcome.is_violation() {
            return SieveResult::Fail {
                index,
                input: input.clone(),
                outcome: ex.outcome,
            };
        }
    }
    SieveResult::Pass
}

/// Convenience: one execution with default limits.
pub fn execute(prog: &Program, method: &Method, scope: Scope, input: &Input) -> Execution {
    Machine::new(prog, method, scope).execute(input)
}
