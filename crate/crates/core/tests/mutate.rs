use std::collections::BTreeMap;

use proptest::prelude::*;
use stitch_core::corpus::sources;
use stitch_core::lang::{self, expr_to_string, method_to_string, Method, Program, StmtKind};
use stitch_core::mutate::{
    apply, apply_one, estimate_space, mutant_hash, Catalog, Operator, VectorIter,
};

fn load(src: &str) -> Program {
    lang::load(src).unwrap().into_program()
}

const COUNTER: &str = "record C { size: int; }
method C.dec(n: int)
{
  var size: int;
  size = size - 1; //mutGenLimit 1
  this.size = size;
}
";

fn rendered(p: &Program, m: &Method, id: u32, ops: &[Operator]) -> Vec<String> {
    let s = m.statement(id).unwrap();
    Catalog::with_ops(ops.iter().copied())
        .statement_mutations(p, m, s)
        .iter()
        .map(|mu| expr_to_string(&mu.expr))
        .collect()
}

#[test]
fn arithmetic_replacement_on_decrement() {
    let p = load(COUNTER);
    let m = p.method("dec").unwrap();
    let got = rendered(&p, m, 1, &[Operator::AORB]);
    for want in ["size + 1", "size * 1", "size / 1", "size % 1"] {
        assert!(got.iter().any(|g| g == want), "{want} missing from {got:?}");
    }
    assert!(!got.iter().any(|g| g == "size - 1"));
}

#[test]
fn navigation_chain_mutants() {
    let p = load(
        "record T { key: int; left: T; right: T; }
method T.pick(): T
{
  var root: T;
  root = this;
  return root.left.right; //mutGenLimit 1
}
",
    );
    let m = p.method("pick").unwrap();
    let got = rendered(&p, m, 2, &[Operator::PRV]);
    for want in ["root.right", "root.right.right", "root.left.left.right"] {
        assert!(got.iter().any(|g| g == want), "{want} missing from {got:?}");
    }
}

#[test]
fn zero_budget_statements_get_no_list() {
    let p = load(sources::SLLIST);
    let m = p.method("getNode").unwrap().with_budgets(&BTreeMap::new());
    let t = Catalog::default().obtain_mutants(&p, &m);
    assert!(t.positions.is_empty() && t.lists.is_empty());
}

#[test]
fn positions_count_from_the_bottom() {
    let p = load(sources::SLLIST);
    let m = p
        .method("getNode")
        .unwrap()
        .with_budgets(&BTreeMap::from([(1, 1), (7, 1), (8, 1)]));
    let t = Catalog::default().obtain_mutants(&p, &m);
    assert_eq!(t.positions, vec![8, 7, 1]);
    assert_eq!(t.single_mutations(), t.arities().iter().sum::<u32>() as usize);
}

#[test]
fn every_mutation_typechecks_and_has_no_duplicates() {
    for src in [sources::SLLIST, sources::SET, sources::BSTREE] {
        let p = load(src);
        for m in &p.methods {
            let all: BTreeMap<u32, u32> = m.statements().iter().map(|s| (s.id, 1)).collect();
            let m = m.with_budgets(&all);
            let t = Catalog::default().obtain_mutants(&p, &m);
            for (pos, list) in t.lists.iter().enumerate() {
                let id = t.positions[pos];
                let mut seen = std::collections::BTreeSet::new();
                for mu in list {
                    let out = apply_one(&m, id, mu).unwrap();
                    assert_ne!(out, m);
                    lang::typecheck(p.with_method(out.clone()))
                        .unwrap_or_else(|e| panic!("{}: {e}", mu.describe()));
                    assert!(seen.insert(method_to_string(&out)));
                }
            }
        }
    }
}

#[test]
fn zero_vector_and_first_mutation() {
    let p = load(sources::SLLIST);
    let m = p
        .method("getNode")
        .unwrap()
        .with_budgets(&BTreeMap::from([(7, 1), (8, 1)]));
    let t = Catalog::default().obtain_mutants(&p, &m);
    assert_eq!(apply(&m, &t, &[0, 0]).unwrap(), m);
    let one = apply(&m, &t, &[1, 0]).unwrap();
    assert_eq!(one.statement(8).unwrap().budget, 0);
    assert_eq!(one.statement(7).unwrap(), m.statement(7).unwrap());
    assert_ne!(one.statement(8).unwrap().kind, m.statement(8).unwrap().kind);
    // Budget already spent.
    let t2 = Catalog::default().obtain_mutants(&p, &m);
    assert!(apply(&one, &t2, &[1, 0]).is_err());
}

#[test]
fn different_derivations_give_equal_ids() {
    let p = load(sources::SLLIST);
    let m = p
        .method("getNode")
        .unwrap()
        .with_budgets(&BTreeMap::from([(1, 1), (7, 1), (8, 1)]));
    let cat = Catalog::default();
    let t = cat.obtain_mutants(&p, &m);
    // Positions: [8, 7, 1]. Mutate 1 and 8 first, then 7.
    let a = apply(&m, &t, &[2, 0, 1]).unwrap();
    let ta = cat.obtain_mutants(&p, &a);
    let a = apply(&a, &ta, &[3]).unwrap();
    // Mutate 1 first, then 7 and 8 together.
    let b = apply(&m, &t, &[0, 0, 1]).unwrap();
    let tb = cat.obtain_mutants(&p, &b);
    let b = apply(&b, &tb, &[2, 3]).unwrap();
    assert_eq!(mutant_hash(&a), mutant_hash(&b));
    assert_ne!(mutant_hash(&a), mutant_hash(&m));
}

#[test]
fn reprint_preserves_id() {
    let p = load(sources::SET);
    let m = p
        .method("add")
        .unwrap()
        .with_budgets(&BTreeMap::from([(13, 1)]));
    let t = Catalog::default().obtain_mutants(&p, &m);
    for j in 1..=t.lists[0].len() as u32 {
        let mu = apply(&m, &t, &[j]).unwrap();
        let text = lang::program_to_string(&p.with_method(mu.clone()));
        let back = load(&text);
        assert_eq!(mutant_hash(back.method("add").unwrap()), mutant_hash(&mu));
    }
}

#[test]
fn assignment_targets_are_never_rewritten() {
    let p = load(sources::SLLIST);
    let m = p.method("getNode").unwrap();
    let all: BTreeMap<u32, u32> = m.statements().iter().map(|s| (s.id, 1)).collect();
    let m = m.with_budgets(&all);
    for s in m.statements() {
        if let StmtKind::Assign { var, .. } = &s.kind {
            for mu in Catalog::default().statement_mutations(&p, &m, s) {
                let out = apply_one(&m, s.id, &mu).unwrap();
                match &out.statement(s.id).unwrap().kind {
                    StmtKind::Assign { var: v2, .. } => assert_eq!(v2, var),
                    k => panic!("{k:?}"),
                }
            }
        }
    }
}

#[test]
fn operator_names_round_trip() {
    for op in Operator::ALL {
        assert_eq!(op.to_string().parse::<Operator>().unwrap(), op);
    }
    assert!("XYZ".parse::<Operator>().is_err());
}

#[test]
fn space_estimate() {
    assert_eq!(estimate_space(3, 2), Some(13));
    assert_eq!(estimate_space(2, 0), Some(1));
    assert_eq!(estimate_space(40, 1), Some(41));
    assert!(estimate_space(40, 2).unwrap() >= 40 * estimate_space(40, 1).unwrap());
    assert_eq!(estimate_space(u64::MAX, 3), None);
}

/// Exhaustive order check: every vector is in bounds, each one is larger
/// than the last when read from the most significant position, and the
/// count is the product of the arities plus one.
fn check_order(arities: &[u32]) {
    let mut it = VectorIter::new(arities);
    let total: u128 = arities.iter().map(|k| *k as u128 + 1).product();
    let mut prev: Option<Vec<u32>> = None;
    let mut n = 0u128;
    while let Some(v) = it.next() {
        assert!(v.iter().zip(arities).all(|(x, k)| x <= k));
        let key: Vec<u32> = v.iter().rev().copied().collect();
        if let Some(p) = &prev {
            assert!(*p < key, "{arities:?} {v:?}");
        } else {
            assert!(v.iter().all(|x| *x == 0));
        }
        assert_eq!(it.rank(&v), n);
        prev = Some(key);
        n += 1;
    }
    assert_eq!(n, total);
    assert!(!it.has_next());
}

#[test]
fn iterator_order_for_all_small_arity_tuples() {
    let mut checked = 0;
    for len in 0..=4usize {
        let mut ar = vec![0u32; len];
        loop {
            let prod: u64 = ar.iter().map(|k| *k as u64 + 1).product();
            if prod <= 10_000 {
                check_order(&ar);
                checked += 1;
            }
            // Next arity tuple with entries up to 12.
            let mut i = 0;
            while i < len && ar[i] == 12 {
                ar[i] = 0;
                i += 1;
            }
            if i == len {
                break;
            }
            ar[i] += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn successor_of_zero_vector() {
    let mut it = VectorIter::new(&[2, 3, 4]);
    assert_eq!(it.next().unwrap(), vec![0, 0, 0]);
    assert_eq!(it.next().unwrap(), vec![1, 0, 0]);
}

proptest! {
    #[test]
    fn skip_lands_on_next_vector_with_higher_prefix(
        arities in proptest::collection::vec(0u32..5, 1..6),
        seed in any::<u64>(),
        k in 0usize..6,
    ) {
        let total: u128 = arities.iter().map(|a| *a as u128 + 1).product();
        let mut it = VectorIter::new(&arities);
        let steps = (seed as u128) % total;
        for _ in 0..=steps {
            it.next();
        }
        let v = it.current().to_vec();
        let k = k.min(arities.len() - 1);
        if k > 0 {
            it.set_to_zero_range(0, k - 1);
        }
        it.advance_one_starting_at(k);
        // Brute force: first vector after v whose positions >= k differ.
        let mut bf = VectorIter::starting_at(&arities, &v);
        bf.next();
        let want = loop {
            match bf.next() {
                None => break None,
                Some(w) if w[k..] != v[k..] => break Some(w),
                _ => {}
            }
        };
        prop_assert_eq!(it.next(), want);
    }
}
