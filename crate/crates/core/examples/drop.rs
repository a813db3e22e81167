//! Drops one seeded statement from the annotations of every multi-statement
//! case and repairs with and without pruning.

use std::collections::BTreeMap;

use stitch_core::corpus::manifest;
use stitch_core::repair::{repair, Localization, RepairConfig};

fn main() {
    let cases = manifest(3).expect("manifest");
    println!("case\tdropped\tprune\toutcome\tvisited\tms");
    for c in cases.iter().filter(|c| c.budgets.len() >= 2) {
        let p = c.load();
        let dropped = *c.budgets.keys().next().unwrap();
        let budgets: BTreeMap<_, _> = c.budgets.iter().filter(|(k, _)| **k != dropped).map(|(k, v)| (*k, *v)).collect();
        for prune in [true, false] {
            let cfg = RepairConfig {
                scope: c.scope,
                prune,
                max_depth: budgets.values().sum::<u32>() as usize,
                localization: Localization::Oracle(budgets.clone()),
                ..RepairConfig::default()
            };
            let r = repair(&p, &c.method, &cfg).expect("repair");
            println!("{}\t{}\t{}\t{:?}\t{}\t{:.0}", c.name, dropped, prune, r.outcome, r.counters.visited(), r.millis);
        }
    }
}
