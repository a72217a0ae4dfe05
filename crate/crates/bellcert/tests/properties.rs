//! Property-based invariants over randomized behaviors, transformations
//! and quantum realizations.

use bellcert::npa::{build_moment_model, embed_quantum, MomentModel};
use bellcert::polytope::{enumerate_vertices, ns_parametrization, VertexSet};
use bellcert::quantum::{ghz_state, Observable};
use bellcert::randomness::{apply_transformation, correlator_sign, Transformation};
use bellcert::scenario::{
    behavior_from_correlators, correlators_from_behavior, is_no_signaling,
};
use bellcert::{Behavior, Rat, Scalar, Scenario};
use proptest::prelude::*;
use std::sync::OnceLock;

fn s222() -> Scenario {
    Scenario::new(2, 2, 2).unwrap()
}

fn vertices_222() -> &'static VertexSet {
    static V: OnceLock<VertexSet> = OnceLock::new();
    V.get_or_init(|| enumerate_vertices(&ns_parametrization(s222()), 16).unwrap())
}

fn moment_model() -> &'static MomentModel {
    static M: OnceLock<MomentModel> = OnceLock::new();
    M.get_or_init(build_moment_model)
}

/// Exact rational convex mixture of the (2,2,2) vertices.
fn mix(weights: &[u32]) -> Behavior<Rat> {
    let verts = vertices_222();
    let total: i64 = weights.iter().map(|&w| w as i64).sum::<i64>().max(1);
    let s = verts.scenario();
    let mut table = vec![Rat::zero(); s.table_len()];
    for (v, &w) in verts.vertices().iter().zip(weights) {
        if w == 0 {
            continue;
        }
        let w = Rat::from_ratio(w as i64, total);
        for (cell, acc) in table.iter_mut().enumerate() {
            let a = cell / s.num_inputs();
            let x = cell % s.num_inputs();
            *acc += w.clone() * v.prob(a, x);
        }
    }
    let used: i64 = weights.iter().map(|&w| w as i64).sum();
    if used == 0 {
        return Behavior::uniform(s);
    }
    Behavior::from_table(s, table).unwrap()
}

fn ns_behavior() -> impl Strategy<Value = Behavior<Rat>> {
    proptest::collection::vec(0u32..100, 24).prop_map(|w| mix(&w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// The correlator table is a lossless encoding of a no-signaling
    /// behavior: converting there and back is the identity, exactly.
    #[test]
    fn correlator_round_trip(b in ns_behavior()) {
        prop_assert!(is_no_signaling(&b, 0.0).passed);
        let t = correlators_from_behavior(&b).unwrap();
        prop_assert_eq!(behavior_from_correlators(&t).unwrap(), b);
    }

    /// An input-conditioned output flip multiplies each correlator
    /// `<x_J>` by `(-1)^(|J| - H(x_J, s_J))`.
    #[test]
    fn transformation_sign_rule(b in ns_behavior(), bits in proptest::collection::vec(0usize..2, 2)) {
        let s = b.scenario();
        let tr = Transformation::new(bits.clone()).unwrap();
        let tb = apply_transformation(&b, &tr).unwrap();
        let c0 = correlators_from_behavior(&b).unwrap();
        let c1 = correlators_from_behavior(&tb).unwrap();
        for mask in 1..(1usize << 2) {
            let parties = s.subset_parties(mask);
            let s_sub: Vec<usize> = parties.iter().map(|&j| bits[j]).collect();
            for idx in 0..s.num_substrings(mask) {
                let mut digits = vec![0usize; parties.len()];
                let mut rem = idx;
                for d in digits.iter_mut().rev() {
                    *d = rem % s.inputs_per_party;
                    rem /= s.inputs_per_party;
                }
                let sign = correlator_sign(&digits, &s_sub).unwrap();
                let expect = if sign == 1 {
                    c0.value(mask, idx).clone()
                } else {
                    -c0.value(mask, idx).clone()
                };
                prop_assert_eq!(c1.value(mask, idx).clone(), expect);
            }
        }
    }

    /// Transformations are involutive and preserve no-signaling.
    #[test]
    fn transformation_involutive(b in ns_behavior(), bits in proptest::collection::vec(0usize..2, 2)) {
        let tr = Transformation::new(bits).unwrap();
        let tb = apply_transformation(&b, &tr).unwrap();
        prop_assert!(is_no_signaling(&tb, 0.0).passed);
        prop_assert_eq!(apply_transformation(&tb, &tr).unwrap(), b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Soundness of the moment-matrix model: the matrix of any actual
    /// quantum realization satisfies every generated equality tie and is
    /// positive semidefinite (up to roundoff).
    #[test]
    fn quantum_embedding_satisfies_model(
        phase in 0.0..std::f64::consts::TAU,
        angles in proptest::array::uniform6(0.0..std::f64::consts::TAU),
    ) {
        let psi = ghz_state(3, phase).unwrap();
        let obs = std::array::from_fn::<_, 3, _>(|p| {
            std::array::from_fn::<_, 2, _>(|i| Observable::equatorial(angles[p * 2 + i]))
        });
        let g = embed_quantum(&psi, &obs).unwrap();
        let model = moment_model();
        for &((i1, j1), (i2, j2)) in &model.ties {
            prop_assert!((g[(i1, j1)] - g[(i2, j2)]).abs() <= 1e-9);
        }
        prop_assert!(g.symmetric_eigenvalues().iter().all(|&e| e >= -1e-9));
    }
}
