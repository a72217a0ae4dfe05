// Temporary scaffolding: zero-forcing walk inside the flat slice of
// (3,2,2). Fix input 0 to six 1/6 entries and two zeros, then repeatedly
// pick a random remaining cell, minimize it over the current face of the
// slice, and pin it (plus every incidental zero of the LP solution) to
// zero whenever the minimum is zero. The walk ends at a slice vertex and
// favors heavily degenerate ones, which are the polytope-extreme points.
use bellcert::optim::{solve_lp, LinearProgram, LpStatus};
use bellcert::polytope::{face_vertices, ns_parametrization};
use bellcert::value::{format_rat, Rat, Scalar};
use bellcert::Scenario;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn main() {
    let s = Scenario::new(3, 2, 2).unwrap();
    let p = ns_parametrization(s);
    let pos = p.positivity_rows();
    let ni = s.num_inputs();
    let dim = p.dimension();
    let walks: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(10);
    let (z1, z2) = (0usize, 3usize);
    let le_base: Vec<(Vec<Rat>, Rat)> = pos
        .iter()
        .map(|(c, k)| {
            (
                c.iter().map(|&v| Rat::from_int(-v)).collect(),
                Rat::from_int(*k),
            )
        })
        .collect();
    let mut eq_base = Vec::new();
    for a in 0..8 {
        let (c, k) = &pos[a * ni];
        let target = if a == z1 || a == z2 {
            Rat::from_int(0)
        } else {
            Rat::from_ratio(1, 6)
        };
        eq_base.push((
            c.iter().map(|&v| Rat::from_int(v)).collect::<Vec<_>>(),
            target - Rat::from_int(*k),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut extreme = 0usize;
    let mut flat = 0usize;
    let mut lp_count = 0usize;
    let start = std::time::Instant::now();
    for w in 0..walks {
        let mut eq = eq_base.clone();
        let mut zeroed: BTreeSet<usize> = BTreeSet::new();
        let mut dead: BTreeSet<usize> = BTreeSet::new();
        let mut order: Vec<usize> = (0..64).filter(|c| c % ni != 0).collect();
        order.shuffle(&mut rng);
        let mut last: Option<Vec<Rat>> = None;
        for &cell in &order {
            if zeroed.contains(&cell) || dead.contains(&cell) {
                continue;
            }
            let (c, _) = &pos[cell];
            let objective: Vec<Rat> = c.iter().map(|&v| Rat::from_int(-v)).collect();
            let lp = LinearProgram {
                num_vars: dim,
                objective,
                eq: eq.clone(),
                le: le_base.clone(),
            };
            lp_count += 1;
            let sol = solve_lp(&lp).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
            let b = p.reconstruct(&sol.point).unwrap();
            if p.is_extreme(&sol.point) {
                let mm = (0..ni).map(|x| b.max_entry_at(x)).min().unwrap();
                println!("  intermediate extreme: min-input-max={}", format_rat(&mm));
            }
            if !b.prob(cell / ni, cell % ni).is_zero() {
                dead.insert(cell);
                continue;
            }
            // Pin this cell and every incidental zero of the solution.
            for other in 0..64usize {
                if other % ni == 0 || zeroed.contains(&other) {
                    continue;
                }
                if b.prob(other / ni, other % ni).is_zero() {
                    let (oc, ok) = &pos[other];
                    eq.push((
                        oc.iter().map(|&v| Rat::from_int(v)).collect(),
                        Rat::from_int(-*ok),
                    ));
                    zeroed.insert(other);
                }
            }
            last = Some(sol.point);
        }
        if let Some(z) = last {
            let b = p.reconstruct(&z).unwrap();
            let mm = (0..ni).map(|x| b.max_entry_at(x)).min().unwrap();
            let ex = p.is_extreme(&z);
            if ex {
                extreme += 1;
                if mm == Rat::from_ratio(1, 6) {
                    flat += 1;
                }
                println!("walk {w}: endpoint extreme, min-input-max={}", format_rat(&mm));
            } else {
                // Enumerate the face spanned by the endpoint's zero set.
                let cells: BTreeSet<usize> = (0..64)
                    .filter(|&cell| b.prob(cell / ni, cell % ni).is_zero())
                    .collect();
                let mut face_flat = 0usize;
                let mut face_best: Option<Rat> = None;
                let verts = face_vertices(&p, &cells).unwrap();
                for v in &verts {
                    assert!(p.is_extreme(v));
                    extreme += 1;
                    let vb = p.reconstruct(v).unwrap();
                    let vm = (0..ni).map(|x| vb.max_entry_at(x)).min().unwrap();
                    if vm == Rat::from_ratio(1, 6) {
                        flat += 1;
                        face_flat += 1;
                    }
                    if face_best.as_ref().map(|fb| vm < *fb).unwrap_or(true) {
                        face_best = Some(vm);
                    }
                }
                println!(
                    "walk {w}: zeros={} endpoint mm={} face: {} vertices, {} flat, best {}",
                    cells.len(),
                    format_rat(&mm),
                    verts.len(),
                    face_flat,
                    face_best.map(|r| format_rat(&r)).unwrap_or_else(|| "-".into())
                );
            }
        }
    }
    println!(
        "{walks} walks: {extreme} extreme, {flat} flat, {lp_count} LPs, {:?}",
        start.elapsed()
    );
}
