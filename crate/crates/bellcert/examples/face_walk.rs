// Temporary scaffolding: face-walk vertex sampling prototype for (3,2,2).
// From a current vertex, select a random rank-(dim-k) subset of its zero
// cells, enumerate the spanned k-face exactly, and move to a flat-favoring
// vertex of that face. All visited points are genuine polytope vertices.
use bellcert::optim::{solve_lp, LinearProgram, LpStatus};
use bellcert::polytope::{face_vertices, ns_parametrization};
use bellcert::value::{format_rat, Rat, Scalar};
use bellcert::Scenario;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

fn rank(rows: &[Vec<Rat>]) -> usize {
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    if m.is_empty() {
        return 0;
    }
    let ncols = m[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        if let Some(piv) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) {
            m.swap(rank, piv);
            let inv = m[rank][col].clone();
            for r in 0..m.len() {
                if r != rank && !m[r][col].is_zero() {
                    let f = m[r][col].clone() / inv.clone();
                    for c in col..ncols {
                        let delta = f.clone() * m[rank][c].clone();
                        m[r][c] = m[r][c].clone() - delta;
                    }
                }
            }
            rank += 1;
            if rank == m.len() {
                break;
            }
        }
    }
    rank
}

fn main() {
    let s = Scenario::new(3, 2, 2).unwrap();
    let p = ns_parametrization(s);
    let pos = p.positivity_rows();
    let ni = s.num_inputs();
    let no = s.num_outputs();
    let dim = p.dimension();
    let trials: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(200);
    let seed: u64 = std::env::args()
        .nth(2)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows_rat: Vec<Vec<Rat>> = pos
        .iter()
        .map(|(c, _)| c.iter().map(|&v| Rat::from_int(v)).collect())
        .collect();
    let le: Vec<(Vec<Rat>, Rat)> = pos
        .iter()
        .map(|(c, k)| {
            (
                c.iter().map(|&v| Rat::from_int(-v)).collect(),
                Rat::from_int(*k),
            )
        })
        .collect();
    let sixth = Rat::from_ratio(1, 6);
    let start = std::time::Instant::now();
    let mut found: BTreeSet<Vec<Rat>> = BTreeSet::new();
    let mut hist: BTreeMap<String, usize> = BTreeMap::new();
    let mut current: Option<Vec<Rat>> = None;
    let mut best = Rat::from_int(1);
    let mut stale = 0usize;
    let mut first_flat: Option<(usize, std::time::Duration)> = None;
    let mmt = |z: &Vec<Rat>| -> (Rat, Rat) {
        let b = p.reconstruct(z).unwrap();
        let maxes: Vec<Rat> = (0..ni).map(|x| b.max_entry_at(x)).collect();
        let m = maxes.iter().min().cloned().unwrap();
        let total: Rat = maxes.into_iter().sum();
        (m, total)
    };
    for t in 0..trials {
        if current.is_none() || stale > 40 {
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
            assert!(p.is_extreme(&sol.point));
            current = Some(sol.point);
            stale = 0;
        }
        let z = current.clone().unwrap();
        let b = p.reconstruct(&z).unwrap();
        let zero_cells: Vec<usize> = (0..no * ni)
            .filter(|&cell| b.prob(cell / ni, cell % ni).is_zero())
            .collect();
        let k = if stale > 15 {
            rng.gen_range(8..=10usize)
        } else {
            rng.gen_range(4..=8usize)
        };
        let target = dim - k;
        let mut shuffled = zero_cells.clone();
        shuffled.shuffle(&mut rng);
        let mut picked: Vec<usize> = Vec::new();
        let mut picked_rows: Vec<Vec<Rat>> = Vec::new();
        for cell in shuffled {
            if picked_rows.len() == target {
                break;
            }
            picked_rows.push(rows_rat[cell].clone());
            if rank(&picked_rows) == picked_rows.len() {
                picked.push(cell);
            } else {
                picked_rows.pop();
            }
        }
        if picked.len() < target {
            stale += 1;
            continue;
        }
        let face: BTreeSet<usize> = picked.into_iter().collect();
        let verts = face_vertices(&p, &face).unwrap();
        let mut face_best: Option<((Rat, Rat), Vec<Rat>)> = None;
        for v in verts {
            let phi = mmt(&v);
            if phi.0 == sixth && first_flat.is_none() {
                first_flat = Some((t, start.elapsed()));
            }
            if phi.0 < best {
                best = phi.0.clone();
                stale = 0;
            }
            if found.insert(v.clone()) {
                *hist.entry(format_rat(&phi.0)).or_default() += 1;
            }
            if face_best.as_ref().map(|(fb, _)| phi < *fb).unwrap_or(true) {
                face_best = Some((phi, v));
            }
        }
        if let Some((phi, v)) = face_best {
            let cur = mmt(&z);
            if phi <= cur || rng.gen_bool(0.3) {
                current = Some(v);
            }
        }
        stale += 1;
    }
    println!(
        "{trials} trials: {} distinct vertices, best {}, first flat {:?}, histogram {:?}, {:?}",
        found.len(),
        format_rat(&best),
        first_flat,
        hist,
        start.elapsed()
    );
}
