use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{Program, Type};
use crate::scope::Scope;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Int(i64),
    Bool(bool),
    /// Slot index within the record type given by the static type; `None`
    /// is null.
    Ref(Option<u32>),
}

impl Value {
    pub fn default_of(t: &Type) -> Value {
        match t {
            Type::Int => Value::Int(0),
            Type::Bool => Value::Bool(false),
            Type::Ref(_) | Type::Null => Value::Ref(None),
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Value::Int(v) => v,
            v => panic!("expected int, found {v}"),
        }
    }

    pub fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            v => panic!("expected bool, found {v}"),
        }
    }

    pub fn as_ref(self) -> Option<u32> {
        match self {
            Value::Ref(r) => r,
            v => panic!("expected reference, found {v}"),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Ref(None) => write!(f, "null"),
            Value::Ref(Some(s)) => write!(f, "#{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub alive: bool,
    pub fields: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordHeap {
    pub record: String,
    pub slots: Vec<Slot>,
}

/// Bounded heap: for every record type (in declaration order) exactly
/// `scope.objects` slots.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HeapState {
    pub records: Vec<RecordHeap>,
}

impl HeapState {
    /// All slots dead, fields at their defaults.
    pub fn empty(p: &Program, scope: &Scope) -> HeapState {
        HeapState {
            records: p
                .records
                .iter()
                .map(|r| RecordHeap {
                    record: r.name.clone(),
                    slots: (0..scope.objects)
                        .map(|_| Slot {
                            alive: false,
                            fields: r.fields.iter().map(|f| Value::default_of(&f.ty)).collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn slot(&self, rec: usize, s: u32) -> &Slot {
        &self.records[rec].slots[s as usize]
    }

    pub fn slot_mut(&mut self, rec: usize, s: u32) -> &mut Slot {
        &mut self.records[rec].slots[s as usize]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("heap serializes")
    }
}

/// A method input: receiver slot, argument values and the pre-state heap.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Input {
    pub receiver: Option<u32>,
    pub args: Vec<Value>,
    pub heap: HeapState,
}

impl Input {
    /// Canonical JSON form; equal inputs serialize identically.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("input serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Input> {
        serde_json::from_str(s)
    }
}
