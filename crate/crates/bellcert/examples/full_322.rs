// Temporary scaffolding: full vertex enumeration of the (3,2,2)
// no-signaling polytope with flatness statistics.
use bellcert::polytope::{enumerate_vertices, ns_parametrization, zero_count};
use bellcert::value::{format_rat, Rat};
use bellcert::Scenario;
use std::collections::BTreeMap;

fn main() {
    let s = Scenario::new(3, 2, 2).unwrap();
    let p = ns_parametrization(s);
    let start = std::time::Instant::now();
    let set = enumerate_vertices(&p, 32).unwrap();
    println!("{} vertices in {:?}", set.len(), start.elapsed());
    let mut by_minmax: BTreeMap<String, usize> = BTreeMap::new();
    let mut example: Option<&bellcert::Behavior<Rat>> = None;
    let mut best: Option<Rat> = None;
    for v in set.vertices() {
        let mm = (0..s.num_inputs())
            .map(|x| v.max_entry_at(x))
            .min()
            .unwrap();
        assert!(zero_count(v).unwrap().passed);
        if best.as_ref().map(|b| mm < *b).unwrap_or(true) {
            best = Some(mm.clone());
            example = Some(v);
        }
        *by_minmax.entry(format_rat(&mm)).or_default() += 1;
    }
    println!("min-input max entry histogram: {by_minmax:?}");
    if let Some(v) = example {
        println!("flattest vertex:");
        for x in 0..s.num_inputs() {
            let row: Vec<String> = (0..s.num_outputs())
                .map(|a| format_rat(v.prob(a, x)))
                .collect();
            println!("  x={x}: {}", row.join(" "));
        }
    }
}
