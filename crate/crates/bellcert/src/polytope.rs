//! The no-signaling polytope: minimal parametrization, exact vertex
//! enumeration and sampling, and zero-count certificates for extreme
//! points.
//!
//! A no-signaling behavior is determined by the marginal probabilities
//! `p(a_J|x_J)` over all nonempty party subsets `J`, with every output
//! restricted to the first `d-1` values; the polytope dimension is
//! `(M(d-1)+1)^N - 1`. The full table is recovered by inclusion-exclusion
//! over the parties that output `d-1`, which makes every table entry an
//! affine form in the free coordinates — the positivity of those forms is
//! the entire facet description used by the enumeration and sampling code.

use crate::error::{Error, Result};
use crate::optim::{solve_lp, LinearProgram, LpStatus};
use crate::scenario::{is_no_signaling, marginal, Behavior, Scenario, DEFAULT_TOL};
use crate::value::{format_rat, Rat, Scalar};
use num::bigint::BigInt;
use num::{Integer, One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeSet;

/// One free coordinate: the marginal `p(a_J|x_J)` with all `a_j <= d-2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coordinate {
    /// Party subset bitmask (bit `j` = party `j`).
    pub mask: usize,
    /// Output substring over the subset's parties, ascending, each in `0..d-1`.
    pub outputs: Vec<usize>,
    /// Input substring over the subset's parties, ascending.
    pub inputs: Vec<usize>,
}

/// Affine form of one table entry in the free coordinates.
#[derive(Debug, Clone)]
struct ReconRow {
    constant: i64,
    /// `(coordinate index, +-1)` terms.
    terms: Vec<(usize, i64)>,
}

/// Minimal free-parameter representation of the no-signaling polytope.
#[derive(Debug, Clone)]
pub struct NSParametrization {
    scenario: Scenario,
    coords: Vec<Coordinate>,
    /// One affine form per table entry, index `a_idx * M^N + x_idx`.
    rows: Vec<ReconRow>,
}

/// Build the parametrization for a scenario.
pub fn ns_parametrization(s: Scenario) -> NSParametrization {
    let n = s.parties;
    let d = s.outputs_per_input;
    let m = s.inputs_per_party;
    let mut coords = Vec::new();
    let mut offsets = vec![0usize; 1 << n];
    for mask in 1..(1usize << n) {
        offsets[mask] = coords.len();
        let parties = s.subset_parties(mask);
        let k = parties.len();
        for out_idx in 0..(d - 1).pow(k as u32) {
            let outputs = unpack(out_idx, d - 1, k);
            for in_idx in 0..m.pow(k as u32) {
                coords.push(Coordinate {
                    mask,
                    outputs: outputs.clone(),
                    inputs: unpack(in_idx, m, k),
                });
            }
        }
    }

    let coord_index = |mask: usize, outputs: &[usize], inputs: &[usize]| -> usize {
        let k = mask.count_ones() as usize;
        offsets[mask] + pack(outputs, d - 1) * m.pow(k as u32) + pack(inputs, m)
    };

    // p(a_K, a_D = d-1 | x) = sum over T subset of D of (-1)^|T| times the
    // marginal p(a_K, b_T | x_{K u T}) summed over b_T in {0..d-2}^T.
    let ni = s.num_inputs();
    let mut rows = Vec::with_capacity(s.table_len());
    for a_idx in 0..s.num_outputs() {
        let a = s.output_digits(a_idx);
        let kmask: usize = (0..n).filter(|&j| a[j] < d - 1).map(|j| 1 << j).sum();
        let dmask = ((1usize << n) - 1) ^ kmask;
        for x_idx in 0..ni {
            let x = s.input_digits(x_idx);
            let mut constant = 0i64;
            let mut terms: Vec<(usize, i64)> = Vec::new();
            let mut t = dmask;
            loop {
                let sign = if (t.count_ones() as usize) % 2 == 0 { 1 } else { -1 };
                let jmask = kmask | t;
                if jmask == 0 {
                    constant += sign;
                } else {
                    let parties = s.subset_parties(jmask);
                    let tsize = t.count_ones() as usize;
                    for b_idx in 0..(d - 1).pow(tsize as u32) {
                        let b = unpack(b_idx, d - 1, tsize);
                        let mut outputs = Vec::with_capacity(parties.len());
                        let mut bpos = 0;
                        for &j in &parties {
                            if t >> j & 1 == 1 {
                                outputs.push(b[bpos]);
                                bpos += 1;
                            } else {
                                outputs.push(a[j]);
                            }
                        }
                        let inputs = s.restrict(&x, jmask);
                        terms.push((coord_index(jmask, &outputs, &inputs), sign));
                    }
                }
                if t == 0 {
                    break;
                }
                t = (t - 1) & dmask;
            }
            rows.push(ReconRow { constant, terms });
        }
    }

    NSParametrization {
        scenario: s,
        coords,
        rows,
    }
}

impl NSParametrization {
    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// Polytope dimension, `(M(d-1)+1)^N - 1`.
    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    pub fn coordinates(&self) -> &[Coordinate] {
        &self.coords
    }

    /// Read the free coordinates off a behavior. Input substrings are
    /// completed by zeros, which for a no-signaling behavior is the unique
    /// marginal.
    pub fn extract<T: Scalar>(&self, b: &Behavior<T>) -> Result<Vec<T>> {
        if b.scenario() != self.scenario {
            return Err(Error::ScenarioMismatch("coordinate extraction".into()));
        }
        let s = self.scenario;
        let d = s.outputs_per_input;
        let mut out = Vec::with_capacity(self.coords.len());
        for c in &self.coords {
            let mut x = vec![0usize; s.parties];
            for (pos, &j) in s.subset_parties(c.mask).iter().enumerate() {
                x[j] = c.inputs[pos];
            }
            let marg = marginal(b, c.mask, &x)?;
            out.push(marg.probs[pack(&c.outputs, d)].clone());
        }
        Ok(out)
    }

    /// Evaluate the affine form of one table entry at a coordinate vector.
    fn entry<T: Scalar>(&self, row: usize, z: &[T]) -> T {
        let r = &self.rows[row];
        let mut v = T::from_int(r.constant);
        for &(ci, sign) in &r.terms {
            if sign > 0 {
                v = v + z[ci].clone();
            } else {
                v = v - z[ci].clone();
            }
        }
        v
    }

    /// Rebuild the full behavior table from coordinates. Normalization and
    /// no-signaling hold identically; entry positivity is validated.
    pub fn reconstruct<T: Scalar>(&self, z: &[T]) -> Result<Behavior<T>> {
        if z.len() != self.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coords.len(),
                got: z.len(),
            });
        }
        let table: Vec<T> = (0..self.scenario.table_len())
            .map(|row| self.entry(row, z))
            .collect();
        Behavior::from_table(self.scenario, table)
    }

    /// Positivity facets as dense rows `(coeffs, constant)` meaning
    /// `coeffs . z + constant >= 0`, one per table entry, indexed
    /// `output * num_inputs + input`. These are the polytope's only
    /// facet inequalities; use them to build faces or custom LPs over
    /// the free coordinates.
    pub fn positivity_rows(&self) -> Vec<(Vec<i64>, i64)> {
        let dim = self.coords.len();
        self.rows
            .iter()
            .map(|r| {
                let mut coeffs = vec![0i64; dim];
                for &(ci, sign) in &r.terms {
                    coeffs[ci] += sign;
                }
                (coeffs, r.constant)
            })
            .collect()
    }

    /// Exact extremality test: at least `dim` tight positivity facets whose
    /// gradients have full rank.
    pub fn is_extreme(&self, z: &[Rat]) -> bool {
        let dim = self.coords.len();
        let mut tight: Vec<Vec<Rat>> = Vec::new();
        for (coeffs, constant) in self.positivity_rows() {
            let mut v = Rat::from_int(constant);
            for (ci, &c) in coeffs.iter().enumerate() {
                if c != 0 {
                    v += Rat::from_int(c) * &z[ci];
                }
            }
            if Zero::is_zero(&v) {
                tight.push(coeffs.into_iter().map(Rat::from_int).collect());
            }
        }
        tight.len() >= dim && rat_rank(tight) == dim
    }
}

/// A deduplicated set of exact no-signaling vertices.
#[derive(Debug, Clone)]
pub struct VertexSet {
    scenario: Scenario,
    vertices: Vec<Behavior<Rat>>,
}

impl VertexSet {
    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Behavior<Rat>] {
        &self.vertices
    }

    pub fn contains(&self, b: &Behavior<Rat>) -> bool {
        self.vertices.iter().any(|v| v == b)
    }

    /// CSV export: `vertex,output,input,value` with exact `"p/q"` entries.
    pub fn to_csv(&self) -> String {
        let ni = self.scenario.num_inputs();
        let mut out = String::from("vertex,output,input,value\n");
        for (id, v) in self.vertices.iter().enumerate() {
            for a in 0..self.scenario.num_outputs() {
                for x in 0..ni {
                    out.push_str(&format!("{id},{a},{x},{}\n", format_rat(v.prob(a, x))));
                }
            }
        }
        out
    }
}

/// All `(d^M)^N` local deterministic behaviors.
pub fn local_deterministic_vertices(s: Scenario) -> Result<VertexSet> {
    let d = s.outputs_per_input;
    let m = s.inputs_per_party;
    let per_party = d.pow(m as u32);
    let total = per_party.checked_pow(s.parties as u32).filter(|&t| t <= 1_000_000);
    let Some(total) = total else {
        return Err(Error::BudgetExceeded(format!(
            "deterministic strategy count (d^M)^N exceeds 10^6 for ({},{},{})",
            s.parties, s.inputs_per_party, s.outputs_per_input
        )));
    };
    let mut vertices = Vec::with_capacity(total);
    for idx in 0..total {
        let per = unpack(idx, per_party, s.parties);
        let strategy: Vec<Vec<usize>> = per.iter().map(|&si| unpack(si, d, m)).collect();
        vertices.push(Behavior::deterministic(s, &strategy)?);
    }
    Ok(VertexSet {
        scenario: s,
        vertices,
    })
}

/// Exact vertex enumeration by the double-description method, gated on the
/// polytope dimension. The feasible set is homogenized to a pointed cone in
/// `R^{dim+1}`; the initial cone is the simplex `{z >= 0, sum z <= dim * t}`
/// (implied by the facets, since every coordinate is a probability), and
/// positivity facets are inserted one at a time with the combinatorial
/// adjacency test on tight-set bitsets.
pub fn enumerate_vertices(p: &NSParametrization, max_dim: usize) -> Result<VertexSet> {
    let dim = p.dimension();
    if dim > max_dim {
        return Err(Error::BudgetExceeded(format!(
            "polytope dimension {dim} exceeds enumeration limit {max_dim}"
        )));
    }
    let rows: Vec<(Vec<Rat>, Rat)> = p
        .positivity_rows()
        .into_iter()
        .map(|(coeffs, constant)| {
            (
                coeffs.into_iter().map(Rat::from_int).collect(),
                Rat::from_int(constant),
            )
        })
        .collect();
    let mut vertices = Vec::new();
    for z in dd_vertices(&rows, dim)? {
        let b = p.reconstruct(&z)?;
        debug_assert!(is_no_signaling(&b, DEFAULT_TOL).passed);
        debug_assert!(p.is_extreme(&z));
        vertices.push(b);
    }
    Ok(VertexSet {
        scenario: p.scenario,
        vertices,
    })
}

/// Double-description vertex enumeration of `{z : coeffs . z + constant >= 0}`.
/// The rows must imply `0 <= z_i <= 1` for every coordinate (true for any
/// probability parametrization), which keeps the initial cone valid.
pub(crate) fn dd_vertices(rows: &[(Vec<Rat>, Rat)], dim: usize) -> Result<Vec<Vec<Rat>>> {
    // Homogeneous facet rows h acting on (z, t): h . (z, t) >= 0.
    let mut pending: Vec<Vec<BigInt>> = Vec::new();
    for (coeffs, constant) in rows {
        let mut scale = BigInt::one();
        for c in coeffs.iter().chain(std::iter::once(constant)) {
            scale = num::integer::lcm(scale, c.denom().clone());
        }
        let mut h: Vec<BigInt> = coeffs
            .iter()
            .map(|c| (c * Rat::new(scale.clone(), BigInt::one())).to_integer())
            .collect();
        h.push((constant * Rat::new(scale.clone(), BigInt::one())).to_integer());
        normalize_primitive(&mut h);
        if h.iter().all(|v| v.is_zero()) {
            continue;
        }
        if !pending.contains(&h) {
            pending.push(h);
        }
    }

    let total_cons = dim + 1 + pending.len();
    let words = total_cons.div_ceil(64);

    let mut cons: Vec<Vec<BigInt>> = Vec::with_capacity(total_cons);
    for i in 0..dim {
        let mut h = vec![BigInt::zero(); dim + 1];
        h[i] = BigInt::one();
        cons.push(h);
    }
    let mut simplex_row = vec![BigInt::from(-1); dim + 1];
    simplex_row[dim] = BigInt::from(dim as i64);
    cons.push(simplex_row);

    struct Ray {
        v: Vec<BigInt>,
        tight: Vec<u64>,
    }
    let tight_of = |v: &[BigInt], cons: &[Vec<BigInt>]| -> Vec<u64> {
        let mut bits = vec![0u64; words];
        for (c, h) in cons.iter().enumerate() {
            if dot(h, v).is_zero() {
                bits[c / 64] |= 1 << (c % 64);
            }
        }
        bits
    };

    let mut rays: Vec<Ray> = Vec::new();
    {
        let mut apex = vec![BigInt::zero(); dim + 1];
        apex[dim] = BigInt::one();
        let mut initial = vec![apex];
        for i in 0..dim {
            let mut v = vec![BigInt::zero(); dim + 1];
            v[i] = BigInt::from(dim as i64);
            v[dim] = BigInt::one();
            initial.push(v);
        }
        for v in initial {
            let tight = tight_of(&v, &cons);
            rays.push(Ray { v, tight });
        }
    }

    for h in pending {
        let vals: Vec<BigInt> = rays.iter().map(|r| dot(&h, &r.v)).collect();
        let cidx = cons.len();
        let plus: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        let minus: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();

        if minus.is_empty() {
            for (i, r) in rays.iter_mut().enumerate() {
                if vals[i].is_zero() {
                    r.tight[cidx / 64] |= 1 << (cidx % 64);
                }
            }
            cons.push(h);
            continue;
        }

        // New rays from adjacent (+,-) pairs: v+ * r- - v- * r+ lies on h.
        let mut created: BTreeSet<Vec<BigInt>> = BTreeSet::new();
        for &ip in &plus {
            for &im in &minus {
                let mut shared = vec![0u64; words];
                let mut count = 0u32;
                for w in 0..words {
                    shared[w] = rays[ip].tight[w] & rays[im].tight[w];
                    count += shared[w].count_ones();
                }
                if (count as usize) < dim.saturating_sub(1) {
                    continue;
                }
                let blocked = rays.iter().enumerate().any(|(k, r)| {
                    k != ip
                        && k != im
                        && (0..words).all(|w| shared[w] & !r.tight[w] == 0)
                });
                if blocked {
                    continue;
                }
                let mut v: Vec<BigInt> = (0..=dim)
                    .map(|c| &vals[ip] * &rays[im].v[c] - &vals[im] * &rays[ip].v[c])
                    .collect();
                normalize_primitive(&mut v);
                created.insert(v);
            }
        }

        cons.push(h);
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + created.len());
        for (i, r) in rays.into_iter().enumerate() {
            if vals[i].is_negative() {
                continue;
            }
            let mut r = r;
            if vals[i].is_zero() {
                r.tight[cidx / 64] |= 1 << (cidx % 64);
            }
            next.push(r);
        }
        for v in created {
            let tight = tight_of(&v, &cons);
            next.push(Ray { v, tight });
        }
        rays = next;
    }

    let mut ray_vecs: Vec<Vec<BigInt>> = rays.into_iter().map(|r| r.v).collect();
    ray_vecs.sort();
    ray_vecs.dedup();
    let mut points = Vec::with_capacity(ray_vecs.len());
    for v in ray_vecs {
        let t = v[dim].clone();
        if !t.is_positive() {
            return Err(Error::InvalidInput(
                "enumeration produced a recession ray; polytope should be bounded".into(),
            ));
        }
        let z: Vec<Rat> = (0..dim).map(|i| Rat::new(v[i].clone(), t.clone())).collect();
        points.push(z);
    }
    Ok(points)
}

/// Probabilistic vertex search by a face walk. Each trial enumerates the
/// small face spanned by a random rank-deficient subset of the current
/// vertex's zero cells; faces are spanned by genuine vertices, so every
/// point collected is an exact extreme point. The walk then moves to the
/// face vertex with the flattest output statistics (lexicographically: the
/// smallest min-over-inputs maximum entry, then the smallest total of
/// per-input maxima), occasionally accepting a non-improving move, and
/// restarts from a fresh random-objective LP vertex when it stalls.
///
/// The seeded random objectives alone make the search probabilistically
/// complete — every vertex optimizes an open set of objectives — but they
/// land on near-deterministic vertices almost always (their normal cones
/// dominate), so the face walk supplies the drift toward the rare
/// maximally random vertices, whose near-simple facet structure gives them
/// vanishing normal-cone volume. Deterministic given `(count, seed)`.
pub fn sample_vertices(p: &NSParametrization, count: usize, seed: u64) -> Result<VertexSet> {
    let dim = p.dimension();
    let s = p.scenario;
    let ni = s.num_inputs();
    let pos = p.positivity_rows();
    let pos_rat: Vec<Vec<Rat>> = pos
        .iter()
        .map(|(coeffs, _)| coeffs.iter().map(|&c| Rat::from_int(c)).collect())
        .collect();
    let le: Vec<(Vec<Rat>, Rat)> = pos
        .iter()
        .map(|(coeffs, constant)| {
            (
                coeffs.iter().map(|&c| Rat::from_int(-c)).collect(),
                Rat::from_int(*constant),
            )
        })
        .collect();
    // Flatness potential driving the walk.
    let flatness = |b: &Behavior<Rat>| -> (Rat, Rat) {
        let maxes: Vec<Rat> = (0..ni).map(|x| b.max_entry_at(x)).collect();
        let min = maxes.iter().min().cloned().expect("at least one input");
        (min, maxes.into_iter().sum())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found: BTreeSet<Vec<Rat>> = BTreeSet::new();
    let mut current: Option<(Vec<Rat>, (Rat, Rat))> = None;
    let mut stale = 0usize;
    for _ in 0..count {
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
            let sol = solve_lp(&lp)?;
            if sol.status != LpStatus::Optimal {
                return Err(Error::Lp(format!(
                    "vertex sampling LP unexpectedly {:?}",
                    sol.status
                )));
            }
            let phi = flatness(&p.reconstruct(&sol.point)?);
            found.insert(sol.point.clone());
            current = Some((sol.point, phi));
            stale = 0;
        }
        let (z, cur_phi) = current.clone().expect("walk seeded above");
        let b = p.reconstruct(&z)?;
        let mut zero_cells: Vec<usize> = (0..pos.len())
            .filter(|&cell| Scalar::is_zero(b.prob(cell / ni, cell % ni)))
            .collect();
        zero_cells.shuffle(&mut rng);
        // Face codimension: large enough to escape the current vertex's
        // neighborhood, small enough to keep double description cheap.
        // Escalate when the walk stops improving.
        let k_hi = if stale > 15 { 10 } else { 8 }.min(dim.saturating_sub(1)).max(1);
        let k_lo = 4.min(k_hi);
        let k = rng.gen_range(k_lo..=k_hi);
        let target = dim - k;
        let mut picked: BTreeSet<usize> = BTreeSet::new();
        let mut picked_rows: Vec<Vec<Rat>> = Vec::new();
        for cell in zero_cells {
            if picked_rows.len() == target {
                break;
            }
            picked_rows.push(pos_rat[cell].clone());
            if rat_rank(picked_rows.clone()) == picked_rows.len() {
                picked.insert(cell);
            } else {
                picked_rows.pop();
            }
        }
        stale += 1;
        if picked.len() < target {
            continue;
        }
        let mut face_best: Option<((Rat, Rat), Vec<Rat>)> = None;
        for v in face_vertices(p, &picked)? {
            let phi = flatness(&p.reconstruct(&v)?);
            if phi.0 < cur_phi.0 {
                stale = 0;
            }
            found.insert(v.clone());
            if face_best.as_ref().map(|(fb, _)| phi < *fb).unwrap_or(true) {
                face_best = Some((phi, v));
            }
        }
        if let Some((phi, v)) = face_best {
            if phi <= cur_phi || rng.gen_bool(0.3) {
                current = Some((v, phi));
            }
        }
    }
    let mut vertices = Vec::with_capacity(found.len());
    for z in found {
        debug_assert!(p.is_extreme(&z));
        vertices.push(p.reconstruct(&z)?);
    }
    Ok(VertexSet {
        scenario: p.scenario,
        vertices,
    })
}

/// Exact vertex enumeration of the face `{p : p(a|x) = 0 for the given
/// table cells}`. Faces of the polytope are spanned by polytope vertices,
/// so every returned point is a genuine extreme point; the zero equalities
/// are eliminated by row reduction and the remaining (typically small)
/// polytope is enumerated by double description.
pub fn face_vertices(p: &NSParametrization, zero_cells: &BTreeSet<usize>) -> Result<Vec<Vec<Rat>>> {
    let dim = p.dimension();
    let pos = p.positivity_rows();
    // Reduced row echelon form of the zero equalities over the free
    // coordinates, augmented with the constant column.
    let mut eqs: Vec<Vec<Rat>> = zero_cells
        .iter()
        .map(|&cell| {
            let (c, k) = &pos[cell];
            let mut row: Vec<Rat> = c.iter().map(|&v| Rat::from_int(v)).collect();
            row.push(Rat::from_int(-*k));
            row
        })
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r0 = 0;
    for col in 0..dim {
        let Some(rp) = (r0..eqs.len()).find(|&r| !Zero::is_zero(&eqs[r][col])) else {
            continue;
        };
        eqs.swap(r0, rp);
        let pv = eqs[r0][col].clone();
        for v in eqs[r0].iter_mut() {
            *v /= pv.clone();
        }
        for r in 0..eqs.len() {
            if r != r0 && !Zero::is_zero(&eqs[r][col]) {
                let f = eqs[r][col].clone();
                for i in 0..=dim {
                    let d = f.clone() * &eqs[r0][i];
                    eqs[r][i] -= d;
                }
            }
        }
        pivots.push((r0, col));
        r0 += 1;
        if r0 == eqs.len() {
            break;
        }
    }
    if eqs[r0..].iter().any(|r| !Zero::is_zero(&r[dim])) {
        return Ok(Vec::new()); // inconsistent zero pattern: empty face
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let free: Vec<usize> = (0..dim).filter(|c| !pivot_cols.contains(c)).collect();
    // Affine expression of each original coordinate over the free ones.
    let expr: Vec<(Vec<Rat>, Rat)> = (0..dim)
        .map(|i| {
            if let Some(fi) = free.iter().position(|&f| f == i) {
                let mut v = vec![Rat::from_int(0); free.len()];
                v[fi] = Rat::from_int(1);
                (v, Rat::from_int(0))
            } else {
                let &(r, _) = pivots.iter().find(|&&(_, c)| c == i).unwrap();
                let v: Vec<Rat> = free.iter().map(|&f| -eqs[r][f].clone()).collect();
                (v, eqs[r][dim].clone())
            }
        })
        .collect();
    let lift = |w: &[Rat]| -> Vec<Rat> {
        expr.iter()
            .map(|(v, k)| {
                let mut acc = k.clone();
                for (j, c) in v.iter().enumerate() {
                    acc += c.clone() * &w[j];
                }
                acc
            })
            .collect()
    };
    if free.is_empty() {
        // Zero-dimensional face: a single candidate point, kept if feasible.
        let z = lift(&[]);
        let feasible = pos.iter().all(|(c, k)| {
            let mut acc = Rat::from_int(*k);
            for (i, &ci) in c.iter().enumerate() {
                if ci != 0 {
                    acc += Rat::from_int(ci) * &z[i];
                }
            }
            !acc.is_negative()
        });
        return Ok(if feasible { vec![z] } else { Vec::new() });
    }
    // Remaining positivity rows, rewritten over the free coordinates.
    let face_rows: Vec<(Vec<Rat>, Rat)> = pos
        .iter()
        .enumerate()
        .filter(|(cell, _)| !zero_cells.contains(cell))
        .map(|(_, (c, k))| {
            let mut coeffs = vec![Rat::from_int(0); free.len()];
            let mut constant = Rat::from_int(*k);
            for (i, &ci) in c.iter().enumerate() {
                if ci != 0 {
                    let ci = Rat::from_int(ci);
                    for (j, e) in expr[i].0.iter().enumerate() {
                        coeffs[j] += ci.clone() * e;
                    }
                    constant += ci * &expr[i].1;
                }
            }
            (coeffs, constant)
        })
        .collect();
    Ok(dd_vertices(&face_rows, free.len())?
        .iter()
        .map(|w| lift(w))
        .collect())
}

/// Zero pattern of a behavior against the extremality bound `(d-1)^N`.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroCountReport {
    /// `n(x0)` = number of zero entries of `p(.|x0)`, per input index.
    pub per_input: Vec<usize>,
    /// `n = min over x0 of n(x0)`.
    pub min_count: usize,
    /// `(d-1)^N`.
    pub bound: usize,
    /// `min_count >= bound`.
    pub passed: bool,
}

/// Count exact zeros per input column. Rational mode only: a floating zero
/// is ambiguous.
pub fn zero_count<T: Scalar>(b: &Behavior<T>) -> Result<ZeroCountReport> {
    if !T::EXACT {
        return Err(Error::RationalModeRequired);
    }
    let s = b.scenario();
    let per_input: Vec<usize> = (0..s.num_inputs())
        .map(|x| {
            (0..s.num_outputs())
                .filter(|&a| b.prob(a, x).is_zero())
                .count()
        })
        .collect();
    let min_count = per_input.iter().copied().min().unwrap_or(0);
    let bound = (s.outputs_per_input - 1).pow(s.parties as u32);
    Ok(ZeroCountReport {
        per_input,
        min_count,
        bound,
        passed: min_count >= bound,
    })
}

/// Universal lower bound `1/(d^N - (d-1)^N)` on the largest probability any
/// no-signaling extreme point assigns at any input.
pub fn ns_randomness_bound(s: Scenario) -> Rat {
    let d = s.outputs_per_input as i64;
    let n = s.parties as u32;
    Rat::from_ratio(1, d.pow(n) - (d - 1).pow(n))
}

/// Rank of a rational matrix by Gaussian elimination.
pub(crate) fn rat_rank(mut rows: Vec<Vec<Rat>>) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&r| !Zero::is_zero(&rows[r][col])) else {
            continue;
        };
        rows.swap(rank, piv);
        let p = rows[rank][col].clone();
        for v in rows[rank].iter_mut() {
            *v /= p.clone();
        }
        let prow = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || Zero::is_zero(&row[col]) {
                continue;
            }
            let f = row[col].clone();
            for (c, v) in row.iter_mut().enumerate() {
                *v -= f.clone() * prow[c].clone();
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Divide by the gcd of all entries (no-op for the zero vector).
fn normalize_primitive(v: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for x in v.iter() {
        g = g.gcd(x);
    }
    if g > BigInt::one() {
        for x in v.iter_mut() {
            *x /= &g;
        }
    }
}

fn pack(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &v| acc * base + v)
}

fn unpack(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for j in (0..len).rev() {
        out[j] = idx % base;
        idx /= base;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scen(n: usize, m: usize, d: usize) -> Scenario {
        Scenario::new(n, m, d).unwrap()
    }

    #[test]
    fn dimension_matches_formula() {
        for (n, m, d, want) in [(2, 2, 2, 8), (3, 2, 2, 26), (2, 2, 3, 24), (2, 3, 2, 15)] {
            let p = ns_parametrization(scen(n, m, d));
            assert_eq!(p.dimension(), want, "({n},{m},{d})");
            assert_eq!(p.dimension(), (m * (d - 1) + 1).pow(n as u32) - 1);
        }
    }

    /// Independent dimension oracle: table size minus the rank of the
    /// normalization + no-signaling equality system.
    #[test]
    fn dimension_matches_equality_system_rank() {
        for (n, m, d) in [(2, 2, 2), (2, 2, 3), (2, 3, 2)] {
            let s = scen(n, m, d);
            let tl = s.table_len();
            let ni = s.num_inputs();
            let mut rows: Vec<Vec<Rat>> = Vec::new();
            // Normalization per input.
            for x in 0..ni {
                let mut row = vec![Rat::from_int(0); tl];
                for a in 0..s.num_outputs() {
                    row[a * ni + x] = Rat::from_int(1);
                }
                rows.push(row);
            }
            // No-signaling: marginals of all-but-k agree across x_k.
            for k in 0..n {
                let others = ((1usize << n) - 1) ^ (1 << k);
                for x_idx in 0..ni {
                    let x = s.input_digits(x_idx);
                    if x[k] == 0 {
                        continue;
                    }
                    let mut x0 = x.clone();
                    x0[k] = 0;
                    let x0_idx = s.input_index(&x0);
                    for sub in 0..d.pow((n - 1) as u32) {
                        let mut row = vec![Rat::from_int(0); tl];
                        for a_idx in 0..s.num_outputs() {
                            let a = s.output_digits(a_idx);
                            if pack(&s.restrict(&a, others), d) == sub {
                                row[a_idx * ni + x_idx] += Rat::from_int(1);
                                row[a_idx * ni + x0_idx] -= Rat::from_int(1);
                            }
                        }
                        rows.push(row);
                    }
                }
            }
            let rank = rat_rank(rows);
            let p = ns_parametrization(s);
            assert_eq!(tl - rank, p.dimension(), "({n},{m},{d})");
        }
    }

    #[test]
    fn extract_reconstruct_round_trip() {
        let s = scen(2, 2, 2);
        let p = ns_parametrization(s);
        let pr: Behavior<Rat> = Behavior::pr_box();
        let uni: Behavior<Rat> = Behavior::uniform(s);
        let det: Behavior<Rat> = Behavior::deterministic(s, &[vec![0, 1], vec![1, 0]]).unwrap();
        let mix = pr.mix(&det, Rat::from_ratio(2, 5)).unwrap();
        for b in [pr, uni, det, mix] {
            let z = p.extract(&b).unwrap();
            assert_eq!(p.reconstruct(&z).unwrap(), b);
        }
        // Ternary outputs as well.
        let s3 = scen(2, 2, 3);
        let p3 = ns_parametrization(s3);
        let u3: Behavior<Rat> = Behavior::uniform(s3);
        let z = p3.extract(&u3).unwrap();
        assert_eq!(p3.reconstruct(&z).unwrap(), u3);
    }

    #[test]
    fn deterministic_vertex_counts_and_point_mass() {
        let v = local_deterministic_vertices(scen(2, 2, 2)).unwrap();
        assert_eq!(v.len(), 16);
        assert!(v.vertices().iter().all(|b| b.max_entry() == Rat::from_int(1)));
        assert_eq!(local_deterministic_vertices(scen(3, 2, 2)).unwrap().len(), 64);
    }

    #[test]
    fn enumerate_222_vertices() {
        let s = scen(2, 2, 2);
        let p = ns_parametrization(s);
        let vs = enumerate_vertices(&p, 10).unwrap();
        assert_eq!(vs.len(), 24);
        let det = local_deterministic_vertices(s).unwrap();
        for b in det.vertices() {
            assert!(vs.contains(b));
        }
        assert!(vs.contains(&Behavior::pr_box()));
        // The 8 nonlocal vertices all have maximal entry exactly 1/2.
        let nonlocal: Vec<_> = vs
            .vertices()
            .iter()
            .filter(|b| !det.contains(b))
            .collect();
        assert_eq!(nonlocal.len(), 8);
        for b in nonlocal {
            assert_eq!(b.max_entry(), Rat::from_ratio(1, 2));
        }
        // Every vertex satisfies the zero-count and max-entry bounds.
        let bound = ns_randomness_bound(s);
        for b in vs.vertices() {
            assert!(zero_count(b).unwrap().passed);
            assert!(b.max_entry() >= bound);
            assert!(is_no_signaling(b, DEFAULT_TOL).passed);
        }
    }

    #[test]
    fn enumeration_budget_enforced() {
        let p = ns_parametrization(scen(3, 2, 2));
        assert!(matches!(
            enumerate_vertices(&p, 10),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn sampled_222_vertices_are_enumerated_ones() {
        let s = scen(2, 2, 2);
        let p = ns_parametrization(s);
        let all = enumerate_vertices(&p, 10).unwrap();
        let sampled = sample_vertices(&p, 60, 7).unwrap();
        assert!(!sampled.is_empty());
        for b in sampled.vertices() {
            assert!(all.contains(b));
        }
        // Determinism.
        let again = sample_vertices(&p, 60, 7).unwrap();
        assert_eq!(sampled.vertices(), again.vertices());
    }

    #[test]
    fn zero_count_examples() {
        let pr: Behavior<Rat> = Behavior::pr_box();
        let rep = zero_count(&pr).unwrap();
        assert_eq!(rep.per_input, vec![2, 2, 2, 2]);
        assert_eq!(rep.bound, 1);
        assert!(rep.passed);

        let uni: Behavior<Rat> = Behavior::uniform(scen(2, 2, 2));
        let rep = zero_count(&uni).unwrap();
        assert_eq!(rep.min_count, 0);
        assert!(!rep.passed);

        let det: Behavior<Rat> =
            Behavior::deterministic(scen(2, 2, 2), &[vec![0, 0], vec![0, 0]]).unwrap();
        let rep = zero_count(&det).unwrap();
        assert!(rep.per_input.iter().all(|&n| n == 3));

        let f: Behavior<f64> = Behavior::uniform(scen(2, 2, 2));
        assert!(matches!(zero_count(&f), Err(Error::RationalModeRequired)));
    }

    #[test]
    fn randomness_bound_values() {
        assert_eq!(ns_randomness_bound(scen(2, 2, 2)), Rat::from_ratio(1, 3));
        assert_eq!(ns_randomness_bound(scen(3, 2, 2)), Rat::from_ratio(1, 7));
        assert_eq!(ns_randomness_bound(scen(2, 2, 3)), Rat::from_ratio(1, 5));
    }

    #[test]
    fn csv_export_shape() {
        let s = scen(2, 2, 2);
        let vs = local_deterministic_vertices(s).unwrap();
        let csv = vs.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "vertex,output,input,value");
        assert_eq!(lines.len(), 1 + 16 * 16);
        assert!(lines[1].starts_with("0,0,0,"));
    }

    // Scaffolding experiment, not part of the suite: enumerate all (3,2,2)
    // vertices whose input-0 distribution is exactly (1/6 x6, 0, 0) for a
    // given zero pair, by eliminating the fixed coordinates and running the
    // double description on the 19-dimensional slice.
    #[test]
    #[ignore]
    fn slice_322_flat_ground_truth() {
        let s = Scenario::new(3, 2, 2).unwrap();
        let p = ns_parametrization(s);
        let pos = p.positivity_rows();
        let ni = s.num_inputs();
        let dim = p.dimension();
        for &(z1, z2) in &[(6usize, 7usize), (5, 6), (0, 7)] {
            // Augmented equality system [coeffs | rhs] fixing input 0.
            let mut eqs: Vec<Vec<Rat>> = Vec::new();
            for a in 0..s.num_outputs() {
                let (c, k) = &pos[a * ni];
                let target = if a == z1 || a == z2 {
                    Rat::from_int(0)
                } else {
                    Rat::from_ratio(1, 6)
                };
                let mut row: Vec<Rat> = c.iter().map(|&v| Rat::from_int(v)).collect();
                row.push(target - Rat::from_int(*k));
                eqs.push(row);
            }
            // Reduced row echelon form over the coordinate columns.
            let mut pivots: Vec<(usize, usize)> = Vec::new();
            let mut r0 = 0;
            for col in 0..dim {
                let Some(rp) = (r0..eqs.len()).find(|&r| !Zero::is_zero(&eqs[r][col])) else {
                    continue;
                };
                eqs.swap(r0, rp);
                let pv = eqs[r0][col].clone();
                for v in eqs[r0].iter_mut() {
                    *v /= pv.clone();
                }
                for r in 0..eqs.len() {
                    if r != r0 && !Zero::is_zero(&eqs[r][col]) {
                        let f = eqs[r][col].clone();
                        for i in 0..=dim {
                            let d = f.clone() * &eqs[r0][i];
                            eqs[r][i] -= d;
                        }
                    }
                }
                pivots.push((r0, col));
                r0 += 1;
            }
            assert!(
                eqs[r0..].iter().all(|r| Zero::is_zero(&r[dim])),
                "inconsistent slice"
            );
            let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
            let free: Vec<usize> = (0..dim).filter(|c| !pivot_cols.contains(c)).collect();
            // Affine expression of each original coordinate over free coords.
            let expr: Vec<(Vec<Rat>, Rat)> = (0..dim)
                .map(|i| {
                    if let Some(fi) = free.iter().position(|&f| f == i) {
                        let mut v = vec![Rat::from_int(0); free.len()];
                        v[fi] = Rat::from_int(1);
                        (v, Rat::from_int(0))
                    } else {
                        let &(r, _) = pivots.iter().find(|&&(_, c)| c == i).unwrap();
                        let v: Vec<Rat> =
                            free.iter().map(|&f| -eqs[r][f].clone()).collect();
                        (v, eqs[r][dim].clone())
                    }
                })
                .collect();
            let slice_rows: Vec<(Vec<Rat>, Rat)> = pos
                .iter()
                .map(|(c, k)| {
                    let mut coeffs = vec![Rat::from_int(0); free.len()];
                    let mut constant = Rat::from_int(*k);
                    for (i, &ci) in c.iter().enumerate() {
                        if ci != 0 {
                            let ci = Rat::from_int(ci);
                            for (j, e) in expr[i].0.iter().enumerate() {
                                coeffs[j] += ci.clone() * e;
                            }
                            constant += ci * &expr[i].1;
                        }
                    }
                    (coeffs, constant)
                })
                .collect();
            let start = std::time::Instant::now();
            let pts = dd_vertices(&slice_rows, free.len()).unwrap();
            let mut extreme = 0usize;
            let mut shown = false;
            for w in &pts {
                let z: Vec<Rat> = expr
                    .iter()
                    .map(|(v, k)| {
                        let mut acc = k.clone();
                        for (j, c) in v.iter().enumerate() {
                            acc += c.clone() * &w[j];
                        }
                        acc
                    })
                    .collect();
                if p.is_extreme(&z) {
                    extreme += 1;
                    if !shown {
                        shown = true;
                        let b = p.reconstruct(&z).unwrap();
                        println!("example flat vertex (zero pair {z1},{z2}):");
                        for x in 0..ni {
                            let row: Vec<String> = (0..s.num_outputs())
                                .map(|a| crate::value::format_rat(b.prob(a, x)))
                                .collect();
                            println!("  x={x}: {}", row.join(" "));
                        }
                    }
                }
            }
            println!(
                "zero pair ({z1},{z2}): {} slice vertices, {} NS-extreme, {:?}",
                pts.len(),
                extreme,
                start.elapsed()
            );
        }
    }
}
