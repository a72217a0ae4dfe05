use bellcert::polytope::*;
use bellcert::scenario::Scenario;
use bellcert::value::{format_rat, Rat};
use std::collections::BTreeMap;
use std::time::Instant;

fn best_guess(b: &bellcert::scenario::Behavior<Rat>) -> Rat {
    (0..b.scenario().num_inputs())
        .map(|x| b.max_entry_at(x))
        .min()
        .unwrap()
}

fn main() {
    let trials: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1500);
    let seed: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let s = Scenario::new(3, 2, 2).unwrap();
    let p = ns_parametrization(s);
    let t0 = Instant::now();
    let vs = sample_vertices(&p, trials, seed).unwrap();
    println!(
        "(3,2,2): {} unique vertices from {trials} trials (seed {seed}) in {:?}",
        vs.len(),
        t0.elapsed()
    );
    let mut hist: BTreeMap<String, usize> = BTreeMap::new();
    for b in vs.vertices() {
        *hist.entry(format_rat(&best_guess(b))).or_default() += 1;
    }
    println!("min-over-input max-entry histogram: {hist:?}");
}
