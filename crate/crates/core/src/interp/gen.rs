//! Random well-formed inputs for a method at a scope.

use rand::Rng;

use super::value::{HeapState, Input, Value};
use crate::lang::{Method, Program, Type};
use crate::scope::Scope;

fn value<R: Rng>(rng: &mut R, t: &Type, scope: &Scope, live: &dyn Fn(&str) -> Vec<u32>) -> Value {
    match t {
        Type::Int => {
            // Small values most of the time so that equalities happen.
            let v = if rng.gen_bool(0.8) {
                rng.gen_range(-2..=4)
            } else {
                rng.gen_range(scope.int_min()..=scope.int_max())
            };
            Value::Int(v)
        }
        Type::Bool => Value::Bool(rng.gen()),
        Type::Ref(r) => {
            let slots = live(r);
            if slots.is_empty() || rng.gen_bool(0.3) {
                Value::Ref(None)
            } else {
                Value::Ref(Some(slots[rng.gen_range(0..slots.len())]))
            }
        }
        Type::Null => Value::Ref(None),
    }
}

/// Draws a structurally valid input; it need not satisfy the precondition.
pub fn random_input<R: Rng>(prog: &Program, m: &Method, scope: &Scope, rng: &mut R) -> Input {
    let mut heap = HeapState::empty(prog, scope);
    for rh in &mut heap.records {
        for slot in &mut rh.slots {
            slot.alive = rng.gen_bool(0.6);
        }
    }
    if let Some(r) = &m.receiver {
        let ri = prog.records.iter().position(|d| &d.name == r).unwrap();
        if !heap.records[ri].slots.iter().any(|s| s.alive) {
            heap.records[ri].slots[0].alive = true;
        }
    }
    let snapshot = heap.clone();
    let live = |r: &str| -> Vec<u32> {
        let rh = snapshot.records.iter().find(|x| x.record == r).unwrap();
        (0..rh.slots.len() as u32)
            .filter(|&s| rh.slots[s as usize].alive)
            .collect()
    };
    for (rh, rd) in heap.records.iter_mut().zip(&prog.records) {
        for slot in &mut rh.slots {
            if slot.alive {
                for (v, f) in slot.fields.iter_mut().zip(&rd.fields) {
                    *v = value(rng, &f.ty, scope, &live);
                }
            }
        }
    }
    let receiver = m.receiver.as_ref().map(|r| {
        let l = live(r);
        l[rng.gen_range(0..l.len())]
    });
    let args = m
        .params
        .iter()
        .map(|p| value(rng, &p.ty, scope, &live))
        .collect();
    Input {
        receiver,
        args,
        heap,
    }
}

/// Draws until the input satisfies the precondition, up to `tries` times.
pub fn random_valid_input<R: Rng>(
    prog: &Program,
    m: &Method,
    scope: &Scope,
    rng: &mut R,
    tries: usize,
) -> Option<Input> {
    let mach = super::Machine::new(prog, m, *scope);
    (0..tries)
        .map(|_| random_input(prog, m, scope, rng))
        .find(|i| mach.satisfies_pre(i))
}
