// Temporary scaffolding: sample (3,2,2) vertices with random objectives
// over the polytope intersected with a global entry cap, which excludes
// near-deterministic vertices from the feasible region.
use bellcert::optim::{solve_lp, LinearProgram, LpStatus};
use bellcert::polytope::ns_parametrization;
use bellcert::value::{format_rat, Rat, Scalar};
use bellcert::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::collections::BTreeSet;

fn main() {
    let s = Scenario::new(3, 2, 2).unwrap();
    let p = ns_parametrization(s);
    let pos = p.positivity_rows();
    let ni = s.num_inputs();
    let dim = p.dimension();
    let trials: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(50);
    let cap_num: i64 = std::env::args()
        .nth(2)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1);
    let cap_den: i64 = std::env::args()
        .nth(3)
        .and_then(|a| a.parse().ok())
        .unwrap_or(3);
    let cap = Rat::from_ratio(cap_num, cap_den);
    let mut le: Vec<(Vec<Rat>, Rat)> = pos
        .iter()
        .map(|(c, k)| {
            (
                c.iter().map(|&v| Rat::from_int(-v)).collect(),
                Rat::from_int(*k),
            )
        })
        .collect();
    for (c, k) in &pos {
        // entry <= cap: coeffs.z + k <= cap
        le.push((
            c.iter().map(|&v| Rat::from_int(v)).collect(),
            cap.clone() - Rat::from_int(*k),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut found: BTreeSet<Vec<Rat>> = BTreeSet::new();
    let mut hits = 0usize;
    let start = std::time::Instant::now();
    for _ in 0..trials {
        let objective: Vec<Rat> = (0..dim)
            .map(|_| Rat::from_int(rng.gen_range(-1000i64..=1000)))
            .collect();
        let lp = LinearProgram {
            num_vars: dim,
            objective,
            eq: vec![],
            le: le.clone(),
        };
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        if p.is_extreme(&sol.point) {
            hits += 1;
            found.insert(sol.point);
        }
    }
    let mut hist: BTreeMap<String, usize> = BTreeMap::new();
    for z in &found {
        let b = p.reconstruct(z).unwrap();
        let mm = (0..ni).map(|x| b.max_entry_at(x)).min().unwrap();
        *hist.entry(format_rat(&mm)).or_default() += 1;
    }
    println!(
        "cap {}/{}: {trials} trials, {hits} extreme hits, {} distinct, histogram {hist:?}, {:?}",
        cap_num,
        cap_den,
        found.len(),
        start.elapsed()
    );
}
