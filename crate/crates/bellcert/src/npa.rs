//! Level-1+ABC moment-matrix relaxation for the tripartite dichotomic
//! scenario.
//!
//! The model tracks expectations of words in the six observables
//! A0,A1,B0,B1,C0,C1 over the fixed 15-word basis
//! (I, singles, the four "odd" triples A0B1C1, A1B0C1, A1B1C0, A0B0C0,
//! and the four Mermin triples A1B0C0, A0B1C0, A0B0C1, A1B1C1).
//! Saturating the Mermin functional at 4 turns the four Mermin triples
//! into stabilizers of the state, and propagating them pins every moment
//! except the six single-party expectations; a rank-one bordering argument
//! then forces those to zero as well, leaving a unique moment matrix.

use crate::error::{Error, Result};
use crate::optim::{solve_sdp, SdpStatus, SemidefiniteProgram};
use crate::value::Rat;
use nalgebra::DMatrix;
use num::{Signed, Zero};
use std::collections::BTreeMap;

pub const BASIS_SIZE: usize = 15;

/// A signed word in the six observables: per party an ordered list of
/// input indices. Parties commute with each other; within a party the
/// order matters and each letter squares to the identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OperatorWord {
    /// `parts[party]` = ordered observable indices, each 0 or 1.
    pub parts: [Vec<u8>; 3],
    /// Global sign, +1 or -1.
    pub sign: i8,
}

impl OperatorWord {
    pub fn new(parts: [Vec<u8>; 3]) -> Result<Self> {
        if parts.iter().flatten().any(|&i| i > 1) {
            return Err(Error::InvalidInput("observable index must be 0 or 1".into()));
        }
        Ok(OperatorWord { parts, sign: 1 })
    }

    pub fn identity() -> Self {
        OperatorWord {
            parts: [vec![], vec![], vec![]],
            sign: 1,
        }
    }

    /// One single-input letter per party: `A_a B_b C_c`.
    pub fn triple(a: u8, b: u8, c: u8) -> Self {
        OperatorWord {
            parts: [vec![a], vec![b], vec![c]],
            sign: 1,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.parts.iter().all(|p| p.is_empty())
    }

    /// Cancel adjacent equal letters within each party until none remain.
    pub fn reduce(&self) -> Self {
        let parts = self.parts.clone().map(|p| {
            let mut stack: Vec<u8> = Vec::with_capacity(p.len());
            for l in p {
                if stack.last() == Some(&l) {
                    stack.pop();
                } else {
                    stack.push(l);
                }
            }
            stack
        });
        OperatorWord {
            parts,
            sign: self.sign,
        }
    }

    /// Hermitian adjoint: each party's letter string reversed.
    pub fn adjoint(&self) -> Self {
        let parts = self.parts.clone().map(|mut p| {
            p.reverse();
            p
        });
        OperatorWord {
            parts,
            sign: self.sign,
        }
    }

    /// Operator product: concatenate per party, then reduce.
    pub fn multiply(&self, other: &OperatorWord) -> Self {
        let mut parts = self.parts.clone();
        for (p, q) in parts.iter_mut().zip(&other.parts) {
            p.extend_from_slice(q);
        }
        OperatorWord {
            parts,
            sign: self.sign * other.sign,
        }
    }

    /// Unsigned class key identifying a word with its adjoint: expectations
    /// in a real-symmetric moment matrix satisfy `<W> = <W adjoint>`.
    pub fn class_key(&self) -> [Vec<u8>; 3] {
        let r = self.reduce();
        let adj = r.adjoint();
        if adj.parts < r.parts {
            adj.parts
        } else {
            r.parts
        }
    }

    /// Human-readable form like `A0A1.B0` (identity prints `I`).
    pub fn label(&self) -> String {
        let mut s = String::new();
        for (party, letters) in ["A", "B", "C"].iter().zip(&self.parts) {
            for l in letters {
                s.push_str(party);
                s.push_str(&l.to_string());
            }
        }
        if s.is_empty() {
            s.push('I');
        }
        if self.sign < 0 {
            format!("-{s}")
        } else {
            s
        }
    }
}

/// The paper-ordered 15-word basis.
pub fn basis() -> Vec<OperatorWord> {
    let w = |a: &[u8], b: &[u8], c: &[u8]| OperatorWord {
        parts: [a.to_vec(), b.to_vec(), c.to_vec()],
        sign: 1,
    };
    vec![
        OperatorWord::identity(),
        w(&[0], &[], &[]),
        w(&[1], &[], &[]),
        w(&[], &[0], &[]),
        w(&[], &[1], &[]),
        w(&[], &[], &[0]),
        w(&[], &[], &[1]),
        OperatorWord::triple(0, 1, 1),
        OperatorWord::triple(1, 0, 1),
        OperatorWord::triple(1, 1, 0),
        OperatorWord::triple(0, 0, 0),
        OperatorWord::triple(1, 0, 0),
        OperatorWord::triple(0, 1, 0),
        OperatorWord::triple(0, 0, 1),
        OperatorWord::triple(1, 1, 1),
    ]
}

/// Moment-matrix model: the class of every entry plus the equality ties
/// that make equal-class entries carry one shared value.
#[derive(Debug, Clone)]
pub struct MomentModel {
    pub basis: Vec<OperatorWord>,
    /// `entry_class[i][j]` = class id of `reduce(basis[i]^dagger basis[j])`.
    pub entry_class: Vec<Vec<usize>>,
    /// Canonical word key per class id.
    pub class_words: Vec<[Vec<u8>; 3]>,
    pub identity_class: usize,
    /// Entry ties `((i1,j1),(i2,j2))`: one chain per class over its
    /// upper-triangle occurrences.
    pub ties: Vec<((usize, usize), (usize, usize))>,
}

/// Build the model mechanically from word reduction.
pub fn build_moment_model() -> MomentModel {
    let basis = basis();
    let mut class_ids: BTreeMap<[Vec<u8>; 3], usize> = BTreeMap::new();
    let mut class_words = Vec::new();
    let mut entry_class = vec![vec![0usize; BASIS_SIZE]; BASIS_SIZE];
    for i in 0..BASIS_SIZE {
        for j in 0..BASIS_SIZE {
            let key = basis[i].adjoint().multiply(&basis[j]).class_key();
            let id = *class_ids.entry(key.clone()).or_insert_with(|| {
                class_words.push(key);
                class_words.len() - 1
            });
            entry_class[i][j] = id;
        }
    }
    let identity_class = entry_class[0][0];
    // Chain of ties per class over upper-triangle entries; equivalent to
    // the all-pairs set but minimal.
    let mut occurrences: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for i in 0..BASIS_SIZE {
        for j in i..BASIS_SIZE {
            occurrences
                .entry(entry_class[i][j])
                .or_default()
                .push((i, j));
        }
    }
    let mut ties = Vec::new();
    for (class, occ) in &occurrences {
        if *class == identity_class {
            continue; // diagonal handled by the fixed value 1
        }
        for pair in occ.windows(2) {
            ties.push((pair[0], pair[1]));
        }
    }
    MomentModel {
        basis,
        entry_class,
        class_words,
        identity_class,
        ties,
    }
}

impl MomentModel {
    pub fn num_classes(&self) -> usize {
        self.class_words.len()
    }

    /// Class id of an arbitrary word, if it occurs in the grid.
    pub fn class_of(&self, w: &OperatorWord) -> Option<usize> {
        let key = w.class_key();
        self.class_words.iter().position(|k| *k == key)
    }

    /// First grid occurrence of a class (upper triangle).
    pub fn entry_of_class(&self, class: usize) -> Option<(usize, usize)> {
        for i in 0..BASIS_SIZE {
            for j in i..BASIS_SIZE {
                if self.entry_class[i][j] == class {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Golden-file dump: basis labels, entry class grid, fixed entries,
    /// tie count.
    pub fn to_json(&self) -> serde_json::Value {
        let class_labels: Vec<String> = self
            .class_words
            .iter()
            .map(|k| {
                OperatorWord {
                    parts: k.clone(),
                    sign: 1,
                }
                .label()
            })
            .collect();
        serde_json::json!({
            "basis": self.basis.iter().map(OperatorWord::label).collect::<Vec<_>>(),
            "classes": class_labels,
            "entry_class": self.entry_class,
            "fixed": { "diagonal": 1 },
            "tie_count": self.ties.len(),
        })
    }
}

/// Mermin functional `B` with `1/2 tr(B Gamma) = <001>+<010>+<100>-<111>`,
/// i.e. `C + C^T` for `C` carrying `(1,1,1,-1)` on the identity row at the
/// four Mermin triple columns.
pub fn mermin_functional() -> DMatrix<f64> {
    let mut b = DMatrix::zeros(BASIS_SIZE, BASIS_SIZE);
    for (col, sign) in [(11usize, 1.0), (12, 1.0), (13, 1.0), (14, -1.0)] {
        b[(0, col)] = sign;
        b[(col, 0)] = sign;
    }
    b
}

/// Probability functional `M_a` with `1/2 tr(M_a Gamma) = p(a|000)`,
/// expanding the input-(0,0,0) probability into correlators readable from
/// the moment matrix.
pub fn probability_functional(a: [usize; 3]) -> Result<DMatrix<f64>> {
    if a.iter().any(|&v| v > 1) {
        return Err(Error::InvalidInput("outcome bits must be 0 or 1".into()));
    }
    let sign = |bits: &[usize]| -> f64 {
        if bits.iter().sum::<usize>() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let mut m = DMatrix::zeros(BASIS_SIZE, BASIS_SIZE);
    m[(0, 0)] = 0.25; // constant term 1/8
    // Singles <A0>, <B0>, <C0> live at (I, basis single with input 0).
    let singles = [(1usize, [0usize]), (3, [1]), (5, [2])];
    for &(col, parties) in &singles {
        let c = 0.125 * sign(&[a[parties[0]]]);
        m[(0, col)] += c;
        m[(col, 0)] += c;
    }
    // Pairs <A0B0>, <A0C0>, <B0C0> at the single-single entries.
    let pairs = [((1usize, 3usize), [0usize, 1]), ((1, 5), [0, 2]), ((3, 5), [1, 2])];
    for &((r, c), parties) in &pairs {
        let v = 0.125 * sign(&[a[parties[0]], a[parties[1]]]);
        m[(r, c)] += v;
        m[(c, r)] += v;
    }
    // Triple <A0B0C0> at (I, A0B0C0).
    let t = 0.125 * sign(&a);
    m[(0, 10)] += t;
    m[(10, 0)] += t;
    Ok(m)
}

/// Status of a moment class after stabilizer propagation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassStatus {
    /// Pinned to -1, 0, or +1.
    Fixed(i8),
    /// Equal to `sign` times another class (given by its canonical word).
    Tied { word: [Vec<u8>; 3], sign: i8 },
    Free,
}

/// Result of propagating the Mermin-saturation stabilizers through the
/// word universe.
#[derive(Debug, Clone)]
pub struct PropagationState {
    model: MomentModel,
    node_of: BTreeMap<[Vec<u8>; 3], usize>,
    parent: Vec<usize>,
    sign: Vec<i8>,
    value: Vec<Option<i8>>,
    /// Human-readable derivation log, replayable for auditing.
    pub log: Vec<String>,
}

impl PropagationState {
    fn find(&mut self, mut i: usize) -> (usize, i8) {
        let mut s = 1i8;
        while self.parent[i] != i {
            s *= self.sign[i];
            i = self.parent[i];
        }
        (i, s)
    }

    fn node(&mut self, key: [Vec<u8>; 3]) -> usize {
        if let Some(&n) = self.node_of.get(&key) {
            return n;
        }
        let n = self.parent.len();
        self.parent.push(n);
        self.sign.push(1);
        self.value.push(None);
        self.node_of.insert(key, n);
        n
    }

    /// Enforce `x_i = s * x_j`. Returns true if anything changed.
    fn union(&mut self, i: usize, j: usize, s: i8, why: &str) -> Result<bool> {
        let (ri, si) = self.find(i);
        let (rj, sj) = self.find(j);
        if ri == rj {
            if si != s * sj {
                // x = -x: the shared value must be zero.
                match self.value[ri] {
                    Some(0) => return Ok(false),
                    Some(_) => {
                        return Err(Error::PropagationContradiction(format!(
                            "class forced to both signs of a nonzero value ({why})"
                        )))
                    }
                    None => {
                        self.value[ri] = Some(0);
                        self.log.push(format!("fix 0 (sign clash): {why}"));
                        return Ok(true);
                    }
                }
            }
            return Ok(false);
        }
        // Merge rj into ri: x_j = (si/s/sj-ish) ... derive relative sign.
        // x_i = si * root_i, x_j = sj * root_j, want x_i = s * x_j
        // => root_i = si * s * sj * root_j.
        let rel = si * s * sj;
        self.parent[rj] = ri;
        self.sign[rj] = rel;
        match (self.value[ri], self.value[rj].take()) {
            (None, Some(v)) => self.value[ri] = Some(rel * v),
            (Some(u), Some(v)) if u != rel * v => {
                return Err(Error::PropagationContradiction(format!(
                    "conflicting fixed values {u} vs {} ({why})",
                    rel * v
                )))
            }
            _ => {}
        }
        self.log.push(format!("tie: {why}"));
        Ok(true)
    }

    fn fix(&mut self, i: usize, v: i8, why: &str) -> Result<bool> {
        let (r, s) = self.find(i);
        let rv = s * v;
        match self.value[r] {
            Some(u) if u == rv => Ok(false),
            Some(u) => Err(Error::PropagationContradiction(format!(
                "class already fixed to {u}, refix to {rv} ({why})"
            ))),
            None => {
                self.value[r] = Some(rv);
                self.log.push(format!("fix {v}: {why}"));
                Ok(true)
            }
        }
    }

    /// Status of a model class id.
    pub fn status(&mut self, class: usize) -> ClassStatus {
        let key = self.model.class_words[class].clone();
        let n = self.node_of[&key];
        let (r, s) = self.find(n);
        if let Some(v) = self.value[r] {
            return ClassStatus::Fixed(s * v);
        }
        // Representative: the canonical word of the root node, preferring a
        // single-party word when one is in the root's class.
        let root_key = self
            .node_of
            .iter()
            .filter(|&(_, &n2)| {
                let mut probe = n2;
                while self.parent[probe] != probe {
                    probe = self.parent[probe];
                }
                probe == r
            })
            .map(|(k, _)| k.clone())
            .min_by_key(|k| (k.iter().map(Vec::len).sum::<usize>(), k.clone()))
            .expect("root key exists");
        if root_key == key {
            ClassStatus::Free
        } else {
            // sign between this class and the representative word.
            let rep_node = self.node_of[&root_key];
            let mut probe = rep_node;
            let mut rep_sign = 1i8;
            while self.parent[probe] != probe {
                rep_sign *= self.sign[probe];
                probe = self.parent[probe];
            }
            ClassStatus::Tied {
                word: root_key,
                sign: s * rep_sign,
            }
        }
    }

    /// The reconstructed moment matrix with every free class set to the
    /// supplied value of its representative word (keyed by label).
    pub fn gamma_with_free(&mut self, free_values: &BTreeMap<String, f64>) -> Result<DMatrix<f64>> {
        let mut g = DMatrix::zeros(BASIS_SIZE, BASIS_SIZE);
        for i in 0..BASIS_SIZE {
            for j in 0..BASIS_SIZE {
                let class = self.model.entry_class[i][j];
                g[(i, j)] = match self.status(class) {
                    ClassStatus::Fixed(v) => v as f64,
                    ClassStatus::Free => {
                        let label = OperatorWord {
                            parts: self.model.class_words[class].clone(),
                            sign: 1,
                        }
                        .label();
                        *free_values.get(&label).ok_or_else(|| {
                            Error::InvalidInput(format!("no value for free class {label}"))
                        })?
                    }
                    ClassStatus::Tied { word, sign } => {
                        let label = OperatorWord {
                            parts: word.clone(),
                            sign: 1,
                        }
                        .label();
                        sign as f64
                            * *free_values.get(&label).ok_or_else(|| {
                                Error::InvalidInput(format!("no value for tied class {label}"))
                            })?
                    }
                };
            }
        }
        Ok(g)
    }
}

/// The four Mermin-saturation stabilizers with their eigenvalues.
fn stabilizers() -> [(OperatorWord, i8); 4] {
    [
        (OperatorWord::triple(0, 0, 1), 1),
        (OperatorWord::triple(0, 1, 0), 1),
        (OperatorWord::triple(1, 0, 0), 1),
        (OperatorWord::triple(1, 1, 1), -1),
    ]
}

/// Propagate the Mermin-saturation constraints: seed the four stabilizer
/// classes with their eigenvalues, close the word universe under left and
/// right stabilizer multiplication (`<P R> = <R P> = s <P>` whenever
/// `R |psi> = s |psi>`), and replay the block-O double-expression argument
/// that pins the odd triples and the same-party pair correlators to zero.
pub fn propagate_stabilizers(model: &MomentModel) -> Result<PropagationState> {
    let mut st = PropagationState {
        model: model.clone(),
        node_of: BTreeMap::new(),
        parent: Vec::new(),
        sign: Vec::new(),
        value: Vec::new(),
        log: Vec::new(),
    };
    // Seed all model classes.
    for key in model.class_words.clone() {
        st.node(key);
    }
    let id_node = st.node(OperatorWord::identity().class_key());
    st.fix(id_node, 1, "identity normalization")?;
    for (r, s) in stabilizers() {
        let n = st.node(r.class_key());
        st.fix(n, s, &format!("Mermin saturation pins {}", r.label()))?;
    }

    // Fixpoint closure, restricted to classes that actually occur as
    // moment-matrix entries: ties through words outside the grid would
    // impose conditions the semidefinite relaxation does not contain.
    loop {
        let mut changed = false;
        let keys: Vec<[Vec<u8>; 3]> = st.node_of.keys().cloned().collect();
        for key in keys {
            let word = OperatorWord {
                parts: key.clone(),
                sign: 1,
            };
            let n = st.node(key);
            for (r, s) in stabilizers() {
                for rep in [word.clone(), word.adjoint()] {
                    for prod in [rep.multiply(&r), r.multiply(&rep)] {
                        let pk = prod.reduce().class_key();
                        if !model.class_words.contains(&pk) {
                            continue;
                        }
                        let pn = st.node(pk);
                        let why = format!(
                            "<{}> = {}<{}> via stabilizer {}",
                            prod.label(),
                            if s < 0 { "-" } else { "" },
                            rep.label(),
                            r.label()
                        );
                        changed |= st.union(pn, n, s, &why)?;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    // Block-O double expression: the 4x4 block between the odd triples
    // (rows) and the Mermin triples (columns) equals both a rank-one
    // pattern in the odd-triple moments and a pattern in the same-party
    // pair correlators; equating the 12 off-diagonal equations forces all
    // seven symbols to zero. The closure above already derives these ties;
    // here the equations are replayed explicitly and verified to end in
    // fixed zeros, failing loudly otherwise.
    let odd = [7usize, 8, 9, 10];
    for (k, &row) in odd.iter().enumerate() {
        for (l, col) in (11..15).enumerate() {
            if k == l {
                continue;
            }
            let word = model.basis[row].adjoint().multiply(&model.basis[col]);
            let n = st.node(word.reduce().class_key());
            let (r, _) = st.find(n);
            if st.value[r] != Some(0) {
                return Err(Error::PropagationContradiction(format!(
                    "block-O entry {} not pinned to zero",
                    word.label()
                )));
            }
        }
    }
    for pair in [[0u8, 1], [1, 0]] {
        // Same-party two-input correlators <A0A1>, <B0B1>, <C0C1>.
        for party in 0..3 {
            let mut parts = [vec![], vec![], vec![]];
            parts[party] = pair.to_vec();
            let n = st.node(OperatorWord { parts, sign: 1 }.class_key());
            let (r, _) = st.find(n);
            if st.value[r] != Some(0) {
                return Err(Error::PropagationContradiction(
                    "same-party pair correlator not pinned to zero".into(),
                ));
            }
        }
    }
    st.log.push("block-O argument verified: odd triples and same-party pairs are zero".into());
    Ok(st)
}

/// The unique Mermin-saturating moment matrix, exact rational form:
/// identity diagonal, `(1,1,1,-1)` border on the Mermin triples, and the
/// rank-one `q3^T q3` pattern on both triple blocks; zero elsewhere.
#[derive(Debug, Clone)]
pub struct GammaReference {
    pub matrix: Vec<Vec<Rat>>,
}

pub fn gamma_reference() -> GammaReference {
    let q3 = [1i64, 1, 1, -1];
    let mut m = vec![vec![Rat::zero(); BASIS_SIZE]; BASIS_SIZE];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Rat::from_integer(1.into());
    }
    for k in 0..4 {
        let v = Rat::from_integer(q3[k].into());
        m[0][11 + k] = v.clone();
        m[11 + k][0] = v;
        for l in 0..4 {
            let p = Rat::from_integer((q3[k] * q3[l]).into());
            m[7 + k][7 + l] = p.clone();
            m[11 + k][11 + l] = p;
        }
    }
    GammaReference { matrix: m }
}

impl GammaReference {
    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(BASIS_SIZE, BASIS_SIZE, |i, j| {
            crate::value::Scalar::to_f64(&self.matrix[i][j])
        })
    }

    /// Exact positive-semidefiniteness via rational LDL^T with diagonal
    /// pivoting: a zero pivot must come with an all-zero residual row.
    pub fn is_psd(&self) -> bool {
        rational_psd(&self.matrix)
    }
}

/// LDL^T PSD test over the rationals.
pub(crate) fn rational_psd(m: &[Vec<Rat>]) -> bool {
    let n = m.len();
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    for k in 0..n {
        if a[k][k].is_negative() {
            return false;
        }
        if a[k][k].is_zero() {
            // Residual row must vanish or the matrix is indefinite.
            if (k..n).any(|j| !a[k][j].is_zero()) {
                return false;
            }
            continue;
        }
        for i in (k + 1)..n {
            let f = &a[i][k] / &a[k][k];
            for j in k..n {
                let d = &f * &a[k][j];
                a[i][j] -= d;
            }
        }
    }
    true
}

/// Outcome of an epsilon-relaxed SDP run over a shrinking schedule.
#[derive(Debug, Clone)]
pub struct RelaxationReport {
    /// `(epsilon, optimum)` per schedule point.
    pub values: Vec<(f64, f64)>,
    /// Aitken-extrapolated epsilon -> 0 value.
    pub extrapolated: f64,
    /// Maximum-norm distance of the tightest solution to the reference
    /// moment matrix.
    pub gamma_distance: f64,
}

fn sdp_constraints(model: &MomentModel) -> Vec<(DMatrix<f64>, f64)> {
    let mut eq = Vec::new();
    for i in 0..BASIS_SIZE {
        let mut a = DMatrix::zeros(BASIS_SIZE, BASIS_SIZE);
        a[(i, i)] = 2.0; // 1/2 tr(A Gamma) = Gamma_ii = 1
        eq.push((a, 1.0));
    }
    for &((i1, j1), (i2, j2)) in &model.ties {
        let mut a = DMatrix::zeros(BASIS_SIZE, BASIS_SIZE);
        let bump = |a: &mut DMatrix<f64>, i: usize, j: usize, v: f64| {
            if i == j {
                a[(i, j)] += 2.0 * v;
            } else {
                a[(i, j)] += v;
                a[(j, i)] += v;
            }
        };
        bump(&mut a, i1, j1, 1.0);
        bump(&mut a, i2, j2, -1.0);
        eq.push((a, 0.0));
    }
    eq
}

fn aitken(values: &[(f64, f64)]) -> f64 {
    if values.len() < 3 {
        return values.last().map(|&(_, v)| v).unwrap_or(f64::NAN);
    }
    let n = values.len();
    let (p1, p2, p3) = (values[n - 3].1, values[n - 2].1, values[n - 1].1);
    let denom = (p3 - p2) - (p2 - p1);
    if denom.abs() < 1e-14 {
        return p3;
    }
    p3 - (p3 - p2) * (p3 - p2) / denom
}

fn run_relaxed(
    model: &MomentModel,
    objective: DMatrix<f64>,
    epsilons: &[f64],
    mermin_floor: Option<f64>,
) -> Result<RelaxationReport> {
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(0.0..=1e-3).contains(&e) || e == 0.0) {
        return Err(Error::InvalidInput(
            "epsilon schedule must be nonempty with entries in (0, 1e-3]".into(),
        ));
    }
    let eq = sdp_constraints(model);
    let reference = gamma_reference().to_f64();
    let eye = DMatrix::identity(BASIS_SIZE, BASIS_SIZE);
    // The Mermin floor is imposed as an equality at `floor - eps`: the
    // optimum of the floor form sits on that boundary (the value function
    // is concave in the Mermin level and minimal at the saturating level),
    // and the equality form keeps a usable central path where a slack
    // variable of size epsilon would not.
    let solve_at = |eps: f64, init: Option<DMatrix<f64>>| -> Result<_> {
        let mut eq_run = eq.clone();
        if mermin_floor.is_some() {
            eq_run.push((mermin_functional(), mermin_floor.unwrap() - eps));
        }
        let sdp = SemidefiniteProgram {
            dim: BASIS_SIZE,
            objective: objective.clone(),
            eq: eq_run,
            ge: vec![],
            init,
        };
        let sol = solve_sdp(&sdp, 1e-8)?;
        // A stalled but feasible iterate is a certified lower bound within
        // `n * gap` of the optimum, which is enough for the schedule.
        let usable = sol.status == SdpStatus::Optimal
            || (sol.status == SdpStatus::Stalled
                && sol.gap.abs() <= 1e-3
                && sol.max_residual <= 1e-8);
        if !usable {
            return Err(Error::Sdp(format!(
                "relaxed solve at eps={eps} ended {:?} (gap {:.2e}, residual {:.2e})",
                sol.status, sol.gap, sol.max_residual
            )));
        }
        Ok(sol)
    };
    // Warm start: the entire feasible set at level `4 - eps` lies within
    // O(eps) of the semidefinite boundary, so a cold start barely moves for
    // tiny eps. The blend `G_M + (eps/eps') (X' - G_M)` of the previous
    // optimizer keeps every equality exactly (all are affine with the same
    // value at G_M except the Mermin row, which is linear in the blend) and
    // stays semidefinite; a small admixture of the centered reference point
    // restores strict interiority.
    let blend_start = |eps: f64, prev: &Option<(f64, DMatrix<f64>)>| {
        let centered = &reference * (1.0 - eps / 4.0) + &eye * (eps / 4.0);
        match prev {
            Some((eps_prev, g_prev)) if eps < *eps_prev => {
                let alpha = eps / eps_prev;
                let scaled = &reference * (1.0 - alpha) + g_prev * alpha;
                Some(scaled * 0.75 + centered * 0.25)
            }
            _ => Some(centered),
        }
    };
    let mut values = Vec::new();
    let mut last_gamma = None;
    let mut prev: Option<(f64, DMatrix<f64>)> = None;
    for &eps in epsilons {
        let sol = if mermin_floor.is_some() {
            // Continuation: approach small eps through intermediate levels
            // so each warm start is close to the new optimizer.
            let mut cur = prev
                .as_ref()
                .map(|(e, _)| *e)
                .unwrap_or(1e-3)
                .min(1e-3)
                .max(eps);
            loop {
                // Below 1e-6 the feasible set is so thin that even warm starts
                // freeze on decade steps; half-decade steps keep moving.
                let factor = if cur <= 1e-6 { 10f64.powf(-0.5) } else { 1e-1 };
                let next = (cur * factor).max(eps);
                let sol = solve_at(next, blend_start(next, &prev))?;
                let g = (&sol.gamma + sol.gamma.transpose()) * 0.5;
                prev = Some((next, g));
                if next <= eps {
                    break sol;
                }
                cur = next;
            }
        } else {
            solve_at(eps, None)?
        };
        values.push((eps, sol.value));
        last_gamma = Some(sol.gamma);
    }
    let reference = gamma_reference().to_f64();
    let gamma_distance = last_gamma
        .map(|g| (g - reference).amax())
        .unwrap_or(f64::NAN);
    Ok(RelaxationReport {
        extrapolated: aitken(&values),
        values,
        gamma_distance,
    })
}

/// Maximum of `p(a|000)` over the level-1+ABC set with Mermin value at
/// least `4 - eps`, for each epsilon in the schedule, with extrapolation.
pub fn certify_max_randomness_sdp(
    model: &MomentModel,
    a: [usize; 3],
    epsilons: &[f64],
) -> Result<RelaxationReport> {
    run_relaxed(model, probability_functional(a)?, epsilons, Some(4.0))
}

/// Maximum of a single-party expectation (by basis index 1..=6) under the
/// relaxed Mermin constraint; with `mermin_constrained = false` the
/// constraint is dropped and the maximum is the trivial 1.
pub fn max_single_expectation_sdp(
    model: &MomentModel,
    single_basis_index: usize,
    epsilons: &[f64],
    mermin_constrained: bool,
) -> Result<RelaxationReport> {
    if !(1..=6).contains(&single_basis_index) {
        return Err(Error::InvalidInput(
            "single-party expectations sit at basis indices 1..=6".into(),
        ));
    }
    let mut obj = DMatrix::zeros(BASIS_SIZE, BASIS_SIZE);
    obj[(0, single_basis_index)] = 1.0;
    obj[(single_basis_index, 0)] = 1.0;
    run_relaxed(
        model,
        obj,
        epsilons,
        if mermin_constrained { Some(4.0) } else { None },
    )
}

/// Moment matrix of an actual quantum realization: `psi` an 8-amplitude
/// tripartite state and one 2x2 dichotomic observable per party and input.
/// Used as the soundness oracle for the model's equality structure.
pub fn embed_quantum(
    psi: &crate::quantum::StateVector,
    observables: &[[crate::quantum::Observable; 2]; 3],
) -> Result<DMatrix<f64>> {
    if psi.num_qubits() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: psi.num_qubits(),
        });
    }
    let words = basis();
    // phi_i = O_i |psi>, applying within-party letters right to left.
    let mut applied = Vec::with_capacity(BASIS_SIZE);
    for w in &words {
        let mut amps = psi.amplitudes().to_vec();
        for party in 0..3 {
            for &letter in w.parts[party].iter().rev() {
                apply_party(&mut amps, party, observables[party][letter as usize].matrix());
            }
        }
        applied.push(amps);
    }
    let mut g = DMatrix::zeros(BASIS_SIZE, BASIS_SIZE);
    for i in 0..BASIS_SIZE {
        for j in 0..BASIS_SIZE {
            let v: num_complex::Complex64 = applied[i]
                .iter()
                .zip(&applied[j])
                .map(|(x, y)| x.conj() * y)
                .sum();
            g[(i, j)] = v.re;
        }
    }
    Ok(g)
}

fn apply_party(amps: &mut [num_complex::Complex64], party: usize, m: &nalgebra::Matrix2<num_complex::Complex64>) {
    let stride = 1usize << (2 - party);
    let mut base = 0;
    while base < amps.len() {
        for off in 0..stride {
            let i0 = base + off;
            let i1 = i0 + stride;
            let a0 = amps[i0];
            let a1 = amps[i1];
            amps[i0] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
            amps[i1] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
        }
        base += 2 * stride;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{ghz_state, Observable, StateVector};
    use num_complex::Complex64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn word(a: &[u8], b: &[u8], c: &[u8]) -> OperatorWord {
        OperatorWord::new([a.to_vec(), b.to_vec(), c.to_vec()]).unwrap()
    }

    #[test]
    fn reduce_examples() {
        // (A0B1C1)^dag (A0B0C0) -> B1B0 C1C0.
        let w = OperatorWord::triple(0, 1, 1)
            .adjoint()
            .multiply(&OperatorWord::triple(0, 0, 0))
            .reduce();
        assert_eq!(w, word(&[], &[1, 0], &[1, 0]));
        // Word times its own adjoint reduces to identity.
        let v = OperatorWord::triple(1, 0, 1);
        assert!(v.adjoint().multiply(&v).reduce().is_identity());
        // Nested cancellation.
        assert!(word(&[0, 1, 1, 0], &[], &[]).reduce().is_identity());
    }

    #[test]
    fn reduce_idempotent_and_adjoint_compatible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let parts = [(); 3].map(|_| {
                (0..rng.gen_range(0..5))
                    .map(|_| rng.gen_range(0..2u8))
                    .collect::<Vec<_>>()
            });
            let w = OperatorWord::new(parts).unwrap();
            let r = w.reduce();
            assert_eq!(r.reduce(), r);
            assert_eq!(w.adjoint().reduce(), r.adjoint());
            assert_eq!(w.class_key(), w.adjoint().class_key());
        }
    }

    #[test]
    fn model_grid_structure() {
        let m = build_moment_model();
        for i in 0..BASIS_SIZE {
            assert_eq!(m.entry_class[i][i], m.identity_class);
        }
        // (row A1B0C0, col A1) reduces to B0C0, like (row I, col-free word B0C0).
        let b0c0 = word(&[], &[0], &[0]);
        assert_eq!(m.entry_class[11][2], m.class_of(&b0c0).unwrap());
        // Symmetric classes: entry (i,j) and (j,i) carry adjoint words,
        // identified by the class key.
        for i in 0..BASIS_SIZE {
            for j in 0..BASIS_SIZE {
                assert_eq!(m.entry_class[i][j], m.entry_class[j][i]);
            }
        }
    }

    // Independent census oracle: distinct classes are detected by the
    // moments of random quantum realizations (two independent draws), not
    // by word reduction.
    #[test]
    fn class_census_matches_random_realization_oracle() {
        let m = build_moment_model();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let random_obs = |rng: &mut ChaCha8Rng| -> [[Observable; 2]; 3] {
            [(); 3].map(|_| {
                [(); 2].map(|_| {
                    // Random dichotomic observable cos t Z + sin t (cos p X + sin p Y).
                    let t = rng.gen_range(0.0..std::f64::consts::PI);
                    let p = rng.gen_range(0.0..std::f64::consts::TAU);
                    let z = Complex64::from_polar(t.sin(), p);
                    Observable::new(nalgebra::Matrix2::new(
                        Complex64::new(t.cos(), 0.0),
                        z.conj(),
                        z,
                        Complex64::new(-t.cos(), 0.0),
                    ))
                    .unwrap()
                })
            })
        };
        let random_state = |rng: &mut ChaCha8Rng| -> StateVector {
            let mut amps: Vec<Complex64> = (0..8)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in amps.iter_mut() {
                *a /= norm;
            }
            StateVector::new(amps).unwrap()
        };
        let g1 = embed_quantum(&random_state(&mut rng), &random_obs(&mut rng)).unwrap();
        let g2 = embed_quantum(&random_state(&mut rng), &random_obs(&mut rng)).unwrap();
        // Same class => equal moments in every realization.
        for i in 0..BASIS_SIZE {
            for j in 0..BASIS_SIZE {
                for k in 0..BASIS_SIZE {
                    for l in 0..BASIS_SIZE {
                        if m.entry_class[i][j] == m.entry_class[k][l] {
                            assert!((g1[(i, j)] - g1[(k, l)]).abs() < 1e-9);
                        }
                    }
                }
            }
        }
        // Distinct classes => distinguished by at least one of two draws.
        let nc = m.num_classes();
        for c1 in 0..nc {
            for c2 in (c1 + 1)..nc {
                let (i, j) = m.entry_of_class(c1).unwrap();
                let (k, l) = m.entry_of_class(c2).unwrap();
                let separated = (g1[(i, j)] - g1[(k, l)]).abs() > 1e-6
                    || (g2[(i, j)] - g2[(k, l)]).abs() > 1e-6;
                assert!(separated, "classes {c1} and {c2} never separated");
            }
        }
        // Census frozen after the first run, cross-checked by the oracle above:
        // 52 classes; ties = 105 off-diagonal upper entries minus the 51
        // non-identity chain heads.
        assert_eq!(nc, 52);
        assert_eq!(m.ties.len(), 105 - (nc - 1));
    }

    #[test]
    fn mermin_functional_structure() {
        let b = mermin_functional();
        assert_eq!(b, b.transpose());
        assert_eq!(b.iter().filter(|v| **v != 0.0).count(), 8);
        let gm = gamma_reference().to_f64();
        assert!((0.5 * (&b * &gm).trace() - 4.0).abs() < 1e-12);
        // Deterministic embeddings never beat the local bound 2.
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(1.0, 0.0);
        let psi = StateVector::new(amps).unwrap();
        for strat in 0..64u32 {
            let obs: [[Observable; 2]; 3] = std::array::from_fn(|p| {
                std::array::from_fn(|x| {
                    let sign = if strat >> (2 * p + x) & 1 == 0 { 1.0 } else { -1.0 };
                    Observable::new(nalgebra::Matrix2::identity() * Complex64::new(sign, 0.0))
                        .unwrap()
                })
            });
            let g = embed_quantum(&psi, &obs).unwrap();
            assert!(0.5 * (&b * &g).trace() <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn probability_functional_structure() {
        let gm = gamma_reference().to_f64();
        let mut total = DMatrix::zeros(BASIS_SIZE, BASIS_SIZE);
        for bits in 0..8usize {
            let a = [bits >> 2 & 1, bits >> 1 & 1, bits & 1];
            let m = probability_functional(a).unwrap();
            assert_eq!(m, m.transpose());
            assert!((0.5 * (&m * &gm).trace() - 0.125).abs() < 1e-12);
            total += m;
        }
        // Normalization telescopes to the identity entry alone.
        assert!((total[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(total.iter().skip(1).enumerate().all(|(k, v)| {
            let (i, j) = ((k + 1) % BASIS_SIZE, (k + 1) / BASIS_SIZE);
            (i, j) == (0, 0) || v.abs() < 1e-12
        }));
        // Deterministic embedding: outcome (0,0,0) from the all-plus strategy.
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(1.0, 0.0);
        let psi = StateVector::new(amps).unwrap();
        let obs: [[Observable; 2]; 3] = std::array::from_fn(|_| {
            std::array::from_fn(|_| Observable::new(nalgebra::Matrix2::identity()).unwrap())
        });
        let g = embed_quantum(&psi, &obs).unwrap();
        let m = probability_functional([0, 0, 0]).unwrap();
        assert!((0.5 * (&m * &g).trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagation_pins_everything_but_singles() {
        let model = build_moment_model();
        let mut st = propagate_stabilizers(&model).unwrap();
        // <A1> tied to <B0C0> (stabilizer A1B0C0), up to representative choice.
        let a1 = model.class_of(&word(&[1], &[], &[])).unwrap();
        let b0c0 = model.class_of(&word(&[], &[0], &[0])).unwrap();
        match (st.status(a1), st.status(b0c0)) {
            (ClassStatus::Free, ClassStatus::Tied { word: w, sign: 1 }) => {
                assert_eq!(w, model.class_words[a1]);
            }
            (s1, s2) => panic!("unexpected statuses {s1:?} / {s2:?}"),
        }
        // Odd triples w,x,y,z fixed to zero.
        for t in [(0, 1, 1), (1, 0, 1), (1, 1, 0), (0, 0, 0)] {
            let c = model
                .class_of(&OperatorWord::triple(t.0, t.1, t.2))
                .unwrap();
            assert_eq!(st.status(c), ClassStatus::Fixed(0));
        }
        // Same-party pair correlators fixed to zero.
        for party in 0..3 {
            let mut parts = [vec![], vec![], vec![]];
            parts[party] = vec![0, 1];
            let c = model
                .class_of(&OperatorWord { parts, sign: 1 })
                .unwrap();
            assert_eq!(st.status(c), ClassStatus::Fixed(0));
        }
        // Every class is now fixed or tied to one of the six singles.
        let singles: Vec<[Vec<u8>; 3]> = (1..=6)
            .map(|i| model.basis[i].class_key())
            .collect();
        for c in 0..model.num_classes() {
            match st.status(c) {
                ClassStatus::Fixed(_) => {}
                ClassStatus::Free => {
                    assert!(singles.contains(&model.class_words[c]), "free non-single");
                }
                ClassStatus::Tied { word, .. } => {
                    assert!(singles.contains(&word), "tied to non-single {word:?}");
                }
            }
        }
        // With singles at zero the propagation reproduces the reference
        // matrix entry for entry.
        let zeros: BTreeMap<String, f64> = (1..=6)
            .map(|i| (model.basis[i].label(), 0.0))
            .collect();
        let g = st.gamma_with_free(&zeros).unwrap();
        assert_eq!(g, gamma_reference().to_f64());
    }

    #[test]
    fn gamma_reference_properties() {
        let gr = gamma_reference();
        assert!(gr.is_psd());
        let g = gr.to_f64();
        assert_eq!(g, g.transpose());
        // Mermin entries +1,+1,+1,-1 on the identity row.
        assert_eq!(
            (g[(0, 11)], g[(0, 12)], g[(0, 13)], g[(0, 14)]),
            (1.0, 1.0, 1.0, -1.0)
        );
        // Single- and two-party correlator entries vanish.
        for j in 1..7 {
            assert_eq!(g[(0, j)], 0.0);
            for i in 1..7 {
                if i != j {
                    assert_eq!(g[(i, j)], 0.0);
                }
            }
        }
        // A strictly negative perturbation of the same shape is caught.
        let mut bad = gr.matrix.clone();
        bad[0][1] = Rat::from_integer(2.into());
        bad[1][0] = Rat::from_integer(2.into());
        assert!(!rational_psd(&bad));
    }

    #[test]
    fn quantum_embedding_soundness() {
        let model = build_moment_model();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let obs: [[Observable; 2]; 3] = std::array::from_fn(|_| {
                std::array::from_fn(|_| {
                    let t = rng.gen_range(0.0..std::f64::consts::PI);
                    let p = rng.gen_range(0.0..std::f64::consts::TAU);
                    let z = Complex64::from_polar(t.sin(), p);
                    Observable::new(nalgebra::Matrix2::new(
                        Complex64::new(t.cos(), 0.0),
                        z.conj(),
                        z,
                        Complex64::new(-t.cos(), 0.0),
                    ))
                    .unwrap()
                })
            });
            let mut amps: Vec<Complex64> = (0..8)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in amps.iter_mut() {
                *a /= norm;
            }
            let g = embed_quantum(&StateVector::new(amps).unwrap(), &obs).unwrap();
            // Diagonal 1, all class ties satisfied, PSD within tolerance.
            for i in 0..BASIS_SIZE {
                assert!((g[(i, i)] - 1.0).abs() < 1e-9);
            }
            for &((i1, j1), (i2, j2)) in &model.ties {
                assert!((g[(i1, j1)] - g[(i2, j2)]).abs() < 1e-9);
            }
            let eig = g.symmetric_eigenvalues();
            assert!(eig.iter().all(|&v| v > -1e-9));
        }
        // The maximal-Mermin realization embeds to the reference matrix.
        let obs: [[Observable; 2]; 3] = std::array::from_fn(|_| {
            [
                Observable::equatorial(0.0),
                Observable::equatorial(std::f64::consts::FRAC_PI_2),
            ]
        });
        let g = embed_quantum(
            &ghz_state(3, std::f64::consts::FRAC_PI_2).unwrap(),
            &obs,
        )
        .unwrap();
        assert!((g - gamma_reference().to_f64()).amax() < 1e-12);
    }

    const EPS_SCHEDULE: [f64; 3] = [1e-4, 1e-6, 1e-8];

    #[test]
    fn sdp_certifies_uniform_outcomes() {
        let model = build_moment_model();
        for bits in 0..8usize {
            let a = [bits >> 2 & 1, bits >> 1 & 1, bits & 1];
            let rep = certify_max_randomness_sdp(&model, a, &EPS_SCHEDULE).unwrap();
            assert!(
                (rep.extrapolated - 0.125).abs() < 1e-4,
                "a={a:?}: {}",
                rep.extrapolated
            );
            // Relaxation monotone: shrinking eps can only lower the optimum,
            // and every relaxed value stays at or above 1/8.
            for w in rep.values.windows(2) {
                assert!(w[1].1 <= w[0].1 + 1e-9);
            }
            assert!(rep.values.iter().all(|&(_, v)| v >= 0.125 - 1e-9));
        }
    }

    #[test]
    fn sdp_solution_approaches_reference_matrix() {
        let model = build_moment_model();
        let rep = certify_max_randomness_sdp(&model, [0, 0, 0], &EPS_SCHEDULE).unwrap();
        assert!(rep.gamma_distance < 1e-3, "distance {}", rep.gamma_distance);
    }

    #[test]
    fn sdp_single_expectations_vanish() {
        let model = build_moment_model();
        // The constrained single-expectation optimum is sqrt(eps), so a
        // decade schedule is geometric and the extrapolation is exact up to
        // solver error; it also keeps every solve in the fully converged
        // regime.
        for idx in 1..=6usize {
            let rep = max_single_expectation_sdp(&model, idx, &[1e-4, 1e-5, 1e-6], true).unwrap();
            for (&(eps, v), expect) in rep.values.iter().zip([1e-2, 10f64.powf(-2.5), 1e-3]) {
                assert!((v - expect).abs() < 1e-4, "eps={eps}: {v} vs {expect}");
            }
            assert!(
                rep.extrapolated.abs() < 1e-4,
                "single {idx}: {}",
                rep.extrapolated
            );
        }
        // Without the Mermin constraint a single expectation reaches 1.
        let free = max_single_expectation_sdp(&model, 2, &[1e-6], false).unwrap();
        assert!((free.values[0].1 - 1.0).abs() < 1e-6, "{}", free.values[0].1);
    }

    #[test]
    fn moment_model_json_shape() {
        let m = build_moment_model();
        let j = m.to_json();
        assert_eq!(j["basis"][0], "I");
        assert_eq!(j["basis"][14], "A1B1C1");
        assert_eq!(j["tie_count"], m.ties.len());
    }
}
