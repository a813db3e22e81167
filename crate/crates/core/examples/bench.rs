//! Repairs every manifest case with and without pruning and prints one
//! line per case.

use std::time::Instant;

use stitch_core::corpus::manifest;
use stitch_core::repair::{repair, Localization, RepairConfig};

fn main() {
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let cases = manifest(3).expect("manifest");
    println!("case\tbugs\tprune\toutcome\tvisited\tskipped\tms");
    for c in cases {
        if only.is_some_and(|n| n != c.bugs()) {
            continue;
        }
        let p = c.load();
        for prune in [true, false] {
            let cfg = RepairConfig {
                scope: c.scope,
                prune,
                max_depth: c.budgets.values().sum::<u32>() as usize,
                localization: Localization::Oracle(c.budgets.clone()),
                ..RepairConfig::default()
            };
            let t = Instant::now();
            let r = repair(&p, &c.method, &cfg).expect("repair");
            println!(
                "{}\t{}\t{}\t{:?}\t{}\t{}\t{}",
                c.name,
                c.bugs(),
                prune,
                r.outcome,
                r.counters.visited(),
                r.counters.pruned_skipped,
                t.elapsed().as_millis()
            );
        }
    }
}
