//! Randomized checks against an independent reference solver.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stitch_sat::{
    export_dimacs, import_dimacs, minimize_core, solve, Cnf, GroupId, Lit, SolveOptions, Verdict,
};

fn random_3sat(rng: &mut ChaCha8Rng, vars: u32, clauses: usize) -> Cnf {
    let mut f = Cnf::with_vars(vars);
    for i in 0..clauses {
        let mut c = Vec::new();
        while c.len() < 3 {
            let v = rng.gen_range(1..=vars as i64);
            let l = if rng.gen_bool(0.5) { v } else { -v };
            if !c.iter().any(|x: &i64| x.abs() == v) {
                c.push(l);
            }
        }
        let lits: Vec<Lit> = c.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect();
        f.add_clause_in(GroupId(i as u32), &lits);
    }
    f
}

fn reference_is_sat(f: &Cnf) -> bool {
    let mut s = varisat::Solver::new();
    let text = export_dimacs(f);
    s.add_dimacs_cnf(text.as_bytes()).unwrap();
    s.solve().unwrap()
}

#[test]
fn ratio_three_n50_is_sat_and_model_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let f = random_3sat(&mut rng, 50, 150);
        match solve(&f, &[], &SolveOptions::default()) {
            Verdict::Sat(m) => assert!(f.is_satisfied_by(&m)),
            v => panic!("expected sat, got {v:?}"),
        }
    }
}

#[test]
fn agrees_with_reference_near_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut unsat = 0;
    for _ in 0..200 {
        let n = rng.gen_range(10..40);
        let f = random_3sat(&mut rng, n, (n as f64 * 4.3) as usize);
        let ours = solve(&f, &[], &SolveOptions::tracking_all());
        let theirs = reference_is_sat(&f);
        match ours {
            Verdict::Sat(m) => {
                assert!(theirs);
                assert!(f.is_satisfied_by(&m));
            }
            Verdict::Unsat { core, .. } => {
                assert!(!theirs);
                unsat += 1;
                let sub = f.restrict(|g| core.contains(&g));
                assert!(!reference_is_sat(&sub), "core is satisfiable");
            }
            Verdict::Unknown => panic!("no budget was set"),
        }
    }
    assert!(unsat > 20, "threshold sampling produced too few unsat instances");
}

#[test]
fn minimized_cores_resolve_unsat_and_are_deletion_minimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 15 {
        let f = random_3sat(&mut rng, 12, 80);
        let Verdict::Unsat { core, .. } = solve(&f, &[], &SolveOptions::tracking_all()) else {
            continue;
        };
        let m = minimize_core(&f, &core, &SolveOptions::default());
        assert!(m.minimal);
        assert!(m.groups.is_subset(&core));
        let sub = f.restrict(|g| m.groups.contains(&g));
        assert!(!reference_is_sat(&sub));
        for g in &m.groups {
            let without: BTreeSet<GroupId> = m.groups.iter().copied().filter(|x| x != g).collect();
            let sub = f.restrict(|h| without.contains(&h));
            assert!(reference_is_sat(&sub), "group {g:?} was removable");
        }
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimacs_round_trip_preserves_clause_multiset(
        clauses in prop::collection::vec(
            prop::collection::vec((1i64..20, any::<bool>()), 1..6), 0..30)
    ) {
        let mut f = Cnf::with_vars(20);
        for c in &clauses {
            let lits: Vec<Lit> = c.iter()
                .map(|&(v, neg)| Lit::from_dimacs(if neg { -v } else { v }).unwrap())
                .collect();
            f.add_clause(&lits);
        }
        let g = import_dimacs(&export_dimacs(&f)).unwrap();
        let mut a: Vec<Vec<Lit>> = f.clauses().to_vec();
        let mut b: Vec<Vec<Lit>> = g.clauses().to_vec();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        prop_assert_eq!(f.num_vars(), g.num_vars());
    }
}
