// Temporary scaffolding: structure statistics of the min-input-max = 1/6
// vertices of (3,2,2), from full enumeration.
use bellcert::polytope::{enumerate_vertices, ns_parametrization};
use bellcert::value::{format_rat, Rat, Scalar};
use bellcert::Scenario;
use std::collections::BTreeMap;

fn main() {
    let s = Scenario::new(3, 2, 2).unwrap();
    let p = ns_parametrization(s);
    let set = enumerate_vertices(&p, 32).unwrap();
    eprintln!("{} vertices", set.len());
    let sixth = Rat::from_ratio(1, 6);
    let mut zero_hist: BTreeMap<usize, usize> = BTreeMap::new();
    let mut gmax_hist: BTreeMap<String, usize> = BTreeMap::new();
    let mut row_profile_hist: BTreeMap<String, usize> = BTreeMap::new();
    let mut flat_input_hist: BTreeMap<usize, usize> = BTreeMap::new();
    let mut flat_row_hist: BTreeMap<String, usize> = BTreeMap::new();
    let mut count = 0usize;
    let mut printed = 0usize;
    for v in set.vertices() {
        let mm = (0..8).map(|x| v.max_entry_at(x)).min().unwrap();
        if mm != sixth {
            continue;
        }
        count += 1;
        let mut zeros = 0usize;
        let mut profile: Vec<String> = Vec::new();
        let mut flat_inputs = 0usize;
        for x in 0..8 {
            let mut row: Vec<Rat> = (0..8).map(|a| v.prob(a, x).clone()).collect();
            zeros += row.iter().filter(|e| *e == &Rat::from_ratio(0, 1)).count();
            row.sort();
            let key: Vec<String> = row.iter().map(format_rat).collect();
            profile.push(key.join(","));
            if v.max_entry_at(x) == sixth {
                flat_inputs += 1;
                *flat_row_hist.entry(key.join(",")).or_default() += 1;
            }
        }
        profile.sort();
        *zero_hist.entry(zeros).or_default() += 1;
        *gmax_hist.entry(format_rat(&v.max_entry())).or_default() += 1;
        *row_profile_hist.entry(profile.join(" | ")).or_default() += 1;
        *flat_input_hist.entry(flat_inputs).or_default() += 1;
        if printed < 2 {
            printed += 1;
            eprintln!("example flat vertex #{printed}:");
            for x in 0..8 {
                let row: Vec<String> = (0..8).map(|a| format_rat(v.prob(a, x))).collect();
                eprintln!("  x={x}: {}", row.join(" "));
            }
        }
    }
    println!("flat vertices: {count}");
    println!("total zero count histogram: {zero_hist:?}");
    println!("global max entry histogram: {gmax_hist:?}");
    println!("flat inputs per vertex: {flat_input_hist:?}");
    println!("sorted flat-row patterns: {flat_row_hist:?}");
    println!("distinct sorted row profiles: {}", row_profile_hist.len());
    for (k, n) in row_profile_hist.iter().take(5) {
        println!("  [{n}] {k}");
    }
}
