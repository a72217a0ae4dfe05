// Temporary scaffolding: for each zero pair at input 0 of (3,2,2), fix the
// input-0 distribution to six 1/6 entries and two zeros, run seeded random
// objectives over that affine slice, and count NS-extreme survivors.
use bellcert::optim::{solve_lp, LinearProgram, LpStatus};
use bellcert::polytope::{face_vertices, ns_parametrization};
use bellcert::value::{format_rat, Rat, Scalar};
use bellcert::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn main() {
    let s = Scenario::new(3, 2, 2).unwrap();
    let p = ns_parametrization(s);
    let pos = p.positivity_rows();
    let ni = s.num_inputs();
    let dim = p.dimension();
    let le_base: Vec<(Vec<Rat>, Rat)> = pos
        .iter()
        .map(|(c, k)| {
            (
                c.iter().map(|&v| Rat::from_int(-v)).collect(),
                Rat::from_int(*k),
            )
        })
        .collect();
    let trials: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(40);
    let only: Option<(usize, usize)> = match (std::env::args().nth(2), std::env::args().nth(3)) {
        (Some(a), Some(b)) => Some((a.parse().unwrap(), b.parse().unwrap())),
        _ => None,
    };
    for z1 in 0..8usize {
        for z2 in (z1 + 1)..8 {
            if let Some(pair) = only {
                if pair != (z1, z2) {
                    continue;
                }
            }
            let mut eq = Vec::new();
            for a in 0..8 {
                let (c, k) = &pos[a * ni];
                let target = if a == z1 || a == z2 {
                    Rat::from_int(0)
                } else {
                    Rat::from_ratio(1, 6)
                };
                eq.push((
                    c.iter().map(|&v| Rat::from_int(v)).collect::<Vec<_>>(),
                    target - Rat::from_int(*k),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(7 + (z1 * 8 + z2) as u64);
            let mut found: BTreeSet<Vec<Rat>> = BTreeSet::new();
            let mut feasible = true;
            for _ in 0..trials {
                // Minimize the total probability mass on a random set of
                // cells away from the flat input: maximizing the number of
                // simultaneous zeros drives the basic solution toward a
                // degenerate (polytope-extreme) slice vertex.
                let mut objective = vec![Rat::from_int(0); dim];
                let mut picked = 0usize;
                while picked < 24 {
                    let cell = rng.gen_range(0..64usize);
                    if cell % ni == 0 {
                        continue; // flat input already pinned
                    }
                    let (c, _) = &pos[cell];
                    for (j, &cj) in c.iter().enumerate() {
                        objective[j] -= Rat::from_int(cj);
                    }
                    picked += 1;
                }
                let lp = LinearProgram {
                    num_vars: dim,
                    objective,
                    eq: eq.clone(),
                    le: le_base.clone(),
                };
                let sol = solve_lp(&lp).unwrap();
                if sol.status == LpStatus::Infeasible {
                    feasible = false;
                    break;
                }
                assert_eq!(sol.status, LpStatus::Optimal);
                if p.is_extreme(&sol.point) {
                    found.insert(sol.point);
                    continue;
                }
                // Not a polytope vertex: enumerate the face spanned by the
                // solution's zero cells; its vertices are polytope vertices.
                let b = p.reconstruct(&sol.point).unwrap();
                let cells: BTreeSet<usize> = (0..64)
                    .filter(|&cell| b.prob(cell / ni, cell % ni).is_zero())
                    .collect();
                for v in face_vertices(&p, &cells).unwrap() {
                    assert!(p.is_extreme(&v), "face vertex not extreme");
                    found.insert(v);
                }
            }
            if !feasible {
                println!("pair ({z1},{z2}): slice infeasible");
                continue;
            }
            let mut min_max: Option<Rat> = None;
            for z in &found {
                let b = p.reconstruct(z).unwrap();
                let mm = (0..ni).map(|x| b.max_entry_at(x)).min().unwrap();
                if min_max.as_ref().map(|m| mm < *m).unwrap_or(true) {
                    min_max = Some(mm);
                }
            }
            println!(
                "pair ({z1},{z2}): {} NS-extreme distinct, min-input max entry {}",
                found.len(),
                min_max.map(|m| format_rat(&m)).unwrap_or_else(|| "-".into())
            );
        }
    }
}
