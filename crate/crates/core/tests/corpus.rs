use std::collections::BTreeSet;

use stitch_core::corpus::{self, export, import, manifest, seed_bugs, seed_script, two_fault_add, CorpusError, SeedStep};
use stitch_core::lang::{self, method_to_string};
use stitch_core::mutate::Operator;
use stitch_core::verify::{detect, Detection, VerifyOptions};
use stitch_core::Scope;

#[test]
fn manifest_shape_and_faultiness() {
    let t = std::time::Instant::now();
    let cases = manifest(3).unwrap();
    eprintln!("manifest built in {:?}", t.elapsed());
    assert!(cases.len() >= 6 * 3 * 3 + 1);
    let methods: BTreeSet<_> = cases.iter().map(|c| (c.program.clone(), c.method.clone())).collect();
    assert!(methods.len() >= 6);
    for c in &cases {
        let p = c.load();
        let m = p.method(&c.method).unwrap();
        // Budgets written into the source are the ground truth.
        let written: std::collections::BTreeMap<_, _> =
            m.budgets().into_iter().filter(|(_, b)| *b > 0).collect();
        assert_eq!(written, c.budgets, "{}", c.name);
        if !c.script.is_empty() {
            assert_eq!(c.script.len(), c.bugs(), "{}", c.name);
        }
        let d = detect(&p, m, c.scope, &VerifyOptions::default()).unwrap();
        assert!(matches!(d, Detection::Faulty(_)), "{}", c.name);
        let reference = corpus::reference_program(&c.program).unwrap();
        assert!(corpus::reversible(&reference, &p, &c.method, &c.budgets), "{}", c.name);
    }
    let names: BTreeSet<_> = cases.iter().map(|c| c.name.clone()).collect();
    assert_eq!(names.len(), cases.len());
}

#[test]
fn decrement_fault_in_get_node_is_detected() {
    let p = corpus::reference_program("sllist").unwrap();
    let step = SeedStep {
        stmt: 7,
        op: Operator::AORB,
        index: 0,
        description: String::new(),
    };
    let (bad, budgets) = seed_script(&p, "getNode", &[step], Scope::default()).unwrap();
    assert_eq!(budgets.get(&7), Some(&1));
    let text = method_to_string(bad.method("getNode").unwrap());
    assert!(text.contains("current_index - 1"), "{text}");
}

#[test]
fn zero_mutations_rejected() {
    let p = corpus::reference_program("sllist").unwrap();
    assert!(matches!(
        seed_bugs(&p, "sllist", "getNode", 0, Scope::default(), 1),
        Err(CorpusError::NoMutations)
    ));
    assert!(matches!(
        seed_script(&p, "getNode", &[], Scope::default()),
        Err(CorpusError::NoMutations)
    ));
}

#[test]
fn export_import_round_trip() {
    let dir = std::env::temp_dir().join(format!("stitch-corpus-{}", std::process::id()));
    let c = two_fault_add();
    export(&[c.clone()], &dir).unwrap();
    let back = import(&dir).unwrap();
    assert_eq!(back, vec![c.clone()]);
    let text = std::fs::read_to_string(dir.join(format!("{}.imp", c.name))).unwrap();
    lang::load(&text).unwrap();
    std::fs::remove_dir_all(dir).unwrap();
}
