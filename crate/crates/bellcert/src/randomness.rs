//! Guessing probabilities and randomness certificates.
//!
//! Two certification routes:
//!
//! * an exact LP computing the adversarial guessing probability over the
//!   no-signaling set, together with the optimal convex decomposition, and
//! * a symmetry argument: output-flip transformations that leave a Bell
//!   functional invariant force every correlator at a target input to
//!   vanish at the unique maximal violation, so all `2^N` outcomes are
//!   equally likely there.

use crate::error::{Error, Result};
use crate::inequalities::BellInequality;
use crate::optim::{solve_lp, LinearProgram, LpStatus};
use crate::scenario::{is_no_signaling, Behavior, DEFAULT_TOL};
use crate::value::{format_rat, Rat, Scalar};
use serde::Serialize;

/// An input-conditioned output relabeling: party `j`'s outcome is flipped
/// exactly when `x_j = s_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transformation {
    /// Bit string `s`, one bit per party.
    pub bits: Vec<usize>,
}

impl Transformation {
    pub fn new(bits: Vec<usize>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidInput("transformation bits must be 0/1".into()));
        }
        Ok(Transformation { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn bitstring(&self) -> String {
        self.bits.iter().map(|b| b.to_string()).collect()
    }
}

/// Apply the flips: `p'(a|x) = p(a xor flip(x) | x)` with
/// `flip_j = [x_j = s_j]`. Involutive; preserves no-signaling.
pub fn apply_transformation<T: Scalar>(b: &Behavior<T>, t: &Transformation) -> Result<Behavior<T>> {
    let s = b.scenario();
    if !s.is_dichotomic() {
        return Err(Error::NotDichotomic(s.outputs_per_input));
    }
    if t.len() != s.parties {
        return Err(Error::DimensionMismatch {
            expected: s.parties,
            got: t.len(),
        });
    }
    let ni = s.num_inputs();
    let mut table = vec![T::zero(); s.table_len()];
    for x_idx in 0..ni {
        let x = s.input_digits(x_idx);
        let flip: Vec<usize> = (0..s.parties)
            .map(|j| usize::from(x[j] == t.bits[j]))
            .collect();
        for a_idx in 0..s.num_outputs() {
            let a = s.output_digits(a_idx);
            let src: Vec<usize> = (0..s.parties).map(|j| a[j] ^ flip[j]).collect();
            table[a_idx * ni + x_idx] = b.prob(s.output_index(&src), x_idx).clone();
        }
    }
    Behavior::from_table(s, table)
}

/// Sign picked up by the correlator `<x_J>` under a transformation:
/// `(-1)^(|J| - H(x_J, s_J))` with `H` the Hamming distance.
pub fn correlator_sign(x_sub: &[usize], s_sub: &[usize]) -> Result<i32> {
    if x_sub.len() != s_sub.len() {
        return Err(Error::DimensionMismatch {
            expected: x_sub.len(),
            got: s_sub.len(),
        });
    }
    let h = x_sub
        .iter()
        .zip(s_sub)
        .filter(|(x, s)| x != s)
        .count();
    Ok(if (x_sub.len() - h) % 2 == 0 { 1 } else { -1 })
}

/// The structured transformation family for even `N`: the all-zeros string
/// plus the `N-1` strings with `s_N = 1` and exactly one other bit set.
/// Every member has even Hamming weight, hence fixes each even-support
/// full-correlator term.
pub fn invariant_transformation_family(n: usize) -> Result<Vec<Transformation>> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "structured family needs even N >= 2, got {n}"
        )));
    }
    let mut out = vec![Transformation::new(vec![0; n])?];
    for k in 0..n - 1 {
        let mut bits = vec![0; n];
        bits[k] = 1;
        bits[n - 1] = 1;
        out.push(Transformation::new(bits)?);
    }
    Ok(out)
}

/// Symmetry-based conclusion that every outcome at `x_prime` has
/// probability `1/2^N`, conditional on the uniqueness of the maximal
/// violation of `inequality`.
#[derive(Debug, Clone)]
pub struct SymmetryCertificate {
    pub inequality: BellInequality,
    pub x_prime: Vec<usize>,
    /// Transformations that fix every inequality term.
    pub family: Vec<Transformation>,
    /// Per nonempty subset `J` (as a party list): a family member flipping
    /// the sign of `<x'_J>`.
    pub witnesses: Vec<(Vec<usize>, Transformation)>,
    pub uniqueness_assumed: bool,
    /// `1/2^N`.
    pub outcome_probability: Rat,
}

impl SymmetryCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        let witnesses: serde_json::Map<String, serde_json::Value> = self
            .witnesses
            .iter()
            .map(|(parties, t)| {
                let key = parties
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                (key, serde_json::json!(t.bitstring()))
            })
            .collect();
        serde_json::json!({
            "inequality": self.inequality.to_json(),
            "x_prime": self.x_prime,
            "family": self.family.iter().map(|t| t.bitstring()).collect::<Vec<_>>(),
            "witnesses": witnesses,
            "uniqueness_assumed": self.uniqueness_assumed,
            "outcome_probability": format_rat(&self.outcome_probability),
        })
    }
}

/// Does `t` leave every term of `b` with sign `+1`?
fn fixes_inequality(b: &BellInequality, t: &Transformation) -> bool {
    let s = b.scenario();
    b.terms().all(|(mask, sub, _)| {
        let parties = s.subset_parties(mask);
        let x_sub = unpack(sub, s.inputs_per_party, parties.len());
        let s_sub: Vec<usize> = parties.iter().map(|&j| t.bits[j]).collect();
        matches!(correlator_sign(&x_sub, &s_sub), Ok(1))
    })
}

/// Certify that all `2^N` outcomes at `x_prime` are equally likely at the
/// (assumed unique) maximal violation of `inequality`.
///
/// For even `N` the structured family is tried first; if it leaves subsets
/// uncovered — and always for odd `N` — all `2^N` bit strings fixing the
/// inequality are searched. Failure lists the uncovered subsets.
pub fn certify_uniform_output(
    inequality: &BellInequality,
    x_prime: &[usize],
    uniqueness_assumed: bool,
) -> Result<SymmetryCertificate> {
    if !uniqueness_assumed {
        return Err(Error::InvalidInput(
            "certificate is conditional on unique maximal violation; set the flag explicitly"
                .into(),
        ));
    }
    let s = inequality.scenario();
    let n = s.parties;
    let full = (1usize << n) - 1;
    if inequality.terms().any(|(mask, _, _)| mask != full) {
        return Err(Error::InvalidInput(
            "symmetry certification requires a full-correlator inequality".into(),
        ));
    }
    if x_prime.len() != n || x_prime.iter().any(|&x| x >= s.inputs_per_party) {
        return Err(Error::InvalidInput("bad target input string".into()));
    }

    let structured = if n % 2 == 0 {
        invariant_transformation_family(n)?
            .into_iter()
            .filter(|t| fixes_inequality(inequality, t))
            .collect()
    } else {
        Vec::new()
    };

    let search = |family: &[Transformation]| -> (Vec<(Vec<usize>, Transformation)>, Vec<Vec<usize>>) {
        let mut witnesses = Vec::new();
        let mut uncovered = Vec::new();
        for mask in 1..=full {
            let parties = s.subset_parties(mask);
            let x_sub: Vec<usize> = parties.iter().map(|&j| x_prime[j]).collect();
            let hit = family.iter().find(|t| {
                let s_sub: Vec<usize> = parties.iter().map(|&j| t.bits[j]).collect();
                matches!(correlator_sign(&x_sub, &s_sub), Ok(-1))
            });
            match hit {
                Some(t) => witnesses.push((parties, t.clone())),
                None => uncovered.push(parties),
            }
        }
        (witnesses, uncovered)
    };

    let (family, witnesses) = {
        let (w, uncovered) = search(&structured);
        if uncovered.is_empty() && !structured.is_empty() {
            (structured, w)
        } else {
            // Generic fallback: all bit strings fixing the inequality.
            let generic: Vec<Transformation> = (0..1usize << n)
                .map(|bits| {
                    Transformation::new((0..n).map(|j| bits >> (n - 1 - j) & 1).collect()).unwrap()
                })
                .filter(|t| fixes_inequality(inequality, t))
                .collect();
            let (w, uncovered) = search(&generic);
            if !uncovered.is_empty() {
                return Err(Error::CertificationFailed(uncovered));
            }
            (generic, w)
        }
    };

    Ok(SymmetryCertificate {
        inequality: inequality.clone(),
        x_prime: x_prime.to_vec(),
        family,
        witnesses,
        uniqueness_assumed,
        outcome_probability: Rat::from_ratio(1, 1 << n),
    })
}

/// One component of an optimal guessing decomposition.
#[derive(Debug, Clone)]
pub struct DecompositionTerm<T: Scalar> {
    pub weight: T,
    pub behavior: Behavior<T>,
    /// The adversary's guess for this component, as an output string.
    pub best_outcome: Vec<usize>,
}

/// Result of a guessing-probability computation.
#[derive(Debug, Clone)]
pub struct GuessingReport<T: Scalar> {
    pub x0: Vec<usize>,
    pub guessing_probability: T,
    pub min_entropy_bits: f64,
    pub decomposition: Vec<DecompositionTerm<T>>,
    /// Correlation set the adversary optimizes over.
    pub set_tag: &'static str,
}

impl<T: Scalar> GuessingReport<T> {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "x0": self.x0,
            "guessing_probability": self.guessing_probability.to_json(),
            "min_entropy_bits": self.min_entropy_bits,
            "set": self.set_tag,
            "decomposition": self.decomposition.iter().map(|d| serde_json::json!({
                "weight": d.weight.to_json(),
                "best_outcome": d.best_outcome,
                "behavior": d.behavior.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Adversarial guessing probability of the full outcome string at `x0`
/// over the no-signaling set.
///
/// Single LP over `d^N` subnormalized no-signaling components, one per
/// possible guess `a`: maximize `sum_a q_a(a|x0)` subject to each `q_a`
/// satisfying the no-signaling equalities and `sum_a q_a = b` entrywise.
/// At the optimum each component's most likely outcome at `x0` is its
/// label, so the decomposition read off the nonzero components achieves
/// the reported value.
pub fn guessing_probability_ns<T: Scalar>(
    b: &Behavior<T>,
    x0: &[usize],
) -> Result<GuessingReport<T>> {
    let s = b.scenario();
    if x0.len() != s.parties || x0.iter().any(|&x| x >= s.inputs_per_party) {
        return Err(Error::InvalidInput("bad guessing input string".into()));
    }
    let ns = is_no_signaling(b, DEFAULT_TOL);
    if !ns.passed {
        return Err(Error::Signaling(format!("{}", ns.worst_violation)));
    }
    let no = s.num_outputs();
    let ni = s.num_inputs();
    let tl = s.table_len();
    let x0_idx = s.input_index(x0);
    let num_vars = no * tl;

    let mut eq: Vec<(Vec<T>, T)> = Vec::new();
    // Components sum to the observed behavior.
    for cell in 0..tl {
        let mut row = vec![T::zero(); num_vars];
        for comp in 0..no {
            row[comp * tl + cell] = T::one();
        }
        eq.push((row, b.table()[cell].clone()));
    }
    // No-signaling inside every component: the marginal of all parties but
    // k must agree between x and the same input with x_k zeroed.
    for comp in 0..no {
        for k in 0..s.parties {
            for x_idx in 0..ni {
                let x = s.input_digits(x_idx);
                if x[k] == 0 {
                    continue;
                }
                let mut x_base = x.clone();
                x_base[k] = 0;
                let base_idx = s.input_index(&x_base);
                let others = ((1usize << s.parties) - 1) ^ (1 << k);
                for sub in 0..s.outputs_per_input.pow((s.parties - 1) as u32) {
                    let mut row = vec![T::zero(); num_vars];
                    for a_idx in 0..no {
                        let a = s.output_digits(a_idx);
                        if pack(&s.restrict(&a, others), s.outputs_per_input) == sub {
                            let i = comp * tl + a_idx * ni + x_idx;
                            row[i] = row[i].clone() + T::one();
                            let j = comp * tl + a_idx * ni + base_idx;
                            row[j] = row[j].clone() - T::one();
                        }
                    }
                    eq.push((row, T::zero()));
                }
            }
        }
    }

    let mut objective = vec![T::zero(); num_vars];
    for comp in 0..no {
        objective[comp * tl + comp * ni + x0_idx] = T::one();
    }

    let sol = solve_lp(&LinearProgram {
        num_vars,
        objective,
        eq,
        le: vec![],
    })?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("guessing LP {:?}", sol.status)));
    }

    let mut decomposition = Vec::new();
    for comp in 0..no {
        let weight: T = (0..no)
            .map(|a| sol.point[comp * tl + a * ni + x0_idx].clone())
            .sum();
        let nonzero = if T::EXACT {
            !Scalar::is_zero(&weight)
        } else {
            weight.to_f64() > DEFAULT_TOL
        };
        if !nonzero {
            continue;
        }
        let table: Vec<T> = (0..tl)
            .map(|cell| sol.point[comp * tl + cell].clone() / weight.clone())
            .collect();
        decomposition.push(DecompositionTerm {
            weight,
            behavior: Behavior::from_table(s, table)?,
            best_outcome: s.output_digits(comp),
        });
    }

    let g = sol.value.clone();
    Ok(GuessingReport {
        x0: x0.to_vec(),
        min_entropy_bits: min_entropy(g.to_f64())?,
        guessing_probability: g,
        decomposition,
        set_tag: "NS",
    })
}

/// `-log2(G)` in bits.
pub fn min_entropy(g: f64) -> Result<f64> {
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "guessing probability {g} outside (0, 1]"
        )));
    }
    Ok(-g.log2())
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
    use crate::inequalities::{mermin3, parity_family};
    use crate::scenario::correlators_from_behavior;

    fn s222() -> Scenario {
        Scenario::new(2, 2, 2).unwrap()
    }

    #[test]
    fn pr_box_guessing_is_half() {
        let pr: Behavior<Rat> = Behavior::pr_box();
        for x0 in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let rep = guessing_probability_ns(&pr, &x0).unwrap();
            assert_eq!(rep.guessing_probability, Rat::from_ratio(1, 2));
            assert!((rep.min_entropy_bits - 1.0).abs() < 1e-12);
            check_decomposition(&pr, &rep);
        }
    }

    #[test]
    fn deterministic_guessing_is_one() {
        let b: Behavior<Rat> =
            Behavior::deterministic(s222(), &[vec![0, 1], vec![1, 1]]).unwrap();
        let rep = guessing_probability_ns(&b, &[1, 0]).unwrap();
        assert_eq!(rep.guessing_probability, Rat::from_int(1));
        assert_eq!(rep.min_entropy_bits, 0.0);
    }

    #[test]
    fn uniform_guessing_is_one() {
        let b: Behavior<Rat> = Behavior::uniform(s222());
        let rep = guessing_probability_ns(&b, &[0, 0]).unwrap();
        assert_eq!(rep.guessing_probability, Rat::from_int(1));
        check_decomposition(&b, &rep);
    }

    #[test]
    fn mixed_pr_guessing_interpolates() {
        // w * PR + (1-w) * deterministic: adversary keeps the deterministic
        // part and pays 1/2 only on the PR weight.
        let pr: Behavior<Rat> = Behavior::pr_box();
        let det: Behavior<Rat> =
            Behavior::deterministic(s222(), &[vec![0, 0], vec![0, 0]]).unwrap();
        let w = Rat::from_ratio(1, 3);
        let b = pr.mix(&det, w.clone()).unwrap();
        let rep = guessing_probability_ns(&b, &[0, 0]).unwrap();
        assert_eq!(rep.guessing_probability, Rat::from_ratio(5, 6));
        check_decomposition(&b, &rep);
        // Bound from the scenario.
        assert!(rep.guessing_probability >= crate::polytope::ns_randomness_bound(s222()));
    }

    #[test]
    fn signaling_input_rejected() {
        let s = s222();
        let ni = 4;
        let mut table = vec![Rat::from_int(0); 16];
        for x_idx in 0..4 {
            let x = s.input_digits(x_idx);
            for a_idx in 0..4 {
                let a = s.output_digits(a_idx);
                let p1 = if x[1] == 0 {
                    Rat::from_int(usize::from(a[0] == 0) as i64)
                } else {
                    Rat::from_ratio(1, 2)
                };
                table[a_idx * ni + x_idx] = p1 * Rat::from_ratio(1, 2);
            }
        }
        let b = Behavior::from_table(s, table).unwrap();
        assert!(matches!(
            guessing_probability_ns(&b, &[0, 0]),
            Err(Error::Signaling(_))
        ));
    }

    fn check_decomposition(b: &Behavior<Rat>, rep: &GuessingReport<Rat>) {
        let mut weight_sum = Rat::from_int(0);
        let mut g = Rat::from_int(0);
        let mut mixed = vec![Rat::from_int(0); b.scenario().table_len()];
        let x0_idx = b.scenario().input_index(&rep.x0);
        for term in &rep.decomposition {
            weight_sum += &term.weight;
            assert!(is_no_signaling(&term.behavior, DEFAULT_TOL).passed);
            let best = term.behavior.max_entry_at(x0_idx);
            let guessed = term
                .behavior
                .prob(b.scenario().output_index(&term.best_outcome), x0_idx);
            assert_eq!(*guessed, best, "component guess must be its max entry");
            g += term.weight.clone() * best;
            for (cell, v) in mixed.iter_mut().enumerate() {
                *v += term.weight.clone() * term.behavior.table()[cell].clone();
            }
        }
        assert_eq!(weight_sum, Rat::from_int(1));
        assert_eq!(g, rep.guessing_probability);
        assert_eq!(&mixed[..], b.table());
    }

    #[test]
    fn transformation_involution_and_ns() {
        let pr: Behavior<Rat> = Behavior::pr_box();
        for bits in [[0, 0], [1, 0], [0, 1], [1, 1]] {
            let t = Transformation::new(bits.to_vec()).unwrap();
            let once = apply_transformation(&pr, &t).unwrap();
            assert!(is_no_signaling(&once, DEFAULT_TOL).passed);
            let twice = apply_transformation(&once, &t).unwrap();
            assert_eq!(twice, pr);
        }
        let uni: Behavior<Rat> = Behavior::uniform(s222());
        let t = Transformation::new(vec![0, 0]).unwrap();
        assert_eq!(apply_transformation(&uni, &t).unwrap(), uni);
    }

    #[test]
    fn sign_rule_matches_transformed_correlators() {
        let s = s222();
        let pr: Behavior<Rat> = Behavior::pr_box();
        let det: Behavior<Rat> =
            Behavior::deterministic(s, &[vec![0, 1], vec![1, 1]]).unwrap();
        let b = pr.mix(&det, Rat::from_ratio(1, 4)).unwrap();
        for bits in [[0, 0], [1, 0], [0, 1], [1, 1]] {
            let t = Transformation::new(bits.to_vec()).unwrap();
            let tb = apply_transformation(&b, &t).unwrap();
            let c0 = correlators_from_behavior(&b).unwrap();
            let c1 = correlators_from_behavior(&tb).unwrap();
            for mask in 1..4usize {
                let parties = s.subset_parties(mask);
                for sub in 0..s.num_substrings(mask) {
                    let x_sub = unpack(sub, 2, parties.len());
                    let s_sub: Vec<usize> = parties.iter().map(|&j| t.bits[j]).collect();
                    let sign = correlator_sign(&x_sub, &s_sub).unwrap();
                    let expect = if sign == 1 {
                        c0.value(mask, sub).clone()
                    } else {
                        -c0.value(mask, sub).clone()
                    };
                    assert_eq!(*c1.value(mask, sub), expect);
                }
            }
        }
    }

    #[test]
    fn sign_examples() {
        assert_eq!(
            correlator_sign(&[1, 1, 1, 0], &[0, 0, 0, 0]).unwrap(),
            -1
        );
        assert_eq!(correlator_sign(&[1], &[1]).unwrap(), -1);
        assert!(correlator_sign(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn structured_family_n4() {
        let fam = invariant_transformation_family(4).unwrap();
        let strings: Vec<Vec<usize>> = fam.iter().map(|t| t.bits.clone()).collect();
        assert_eq!(
            strings,
            vec![
                vec![0, 0, 0, 0],
                vec![1, 0, 0, 1],
                vec![0, 1, 0, 1],
                vec![0, 0, 1, 1]
            ]
        );
        assert_eq!(
            invariant_transformation_family(2)
                .unwrap()
                .iter()
                .map(|t| t.bits.clone())
                .collect::<Vec<_>>(),
            vec![vec![0, 0], vec![1, 1]]
        );
        assert!(invariant_transformation_family(3).is_err());
        // Each member fixes every parity-family term.
        let p4 = parity_family(4).unwrap();
        for t in &fam {
            assert!(fixes_inequality(&p4, t));
        }
    }

    #[test]
    fn certify_parity_family_even() {
        for n in [2usize, 4, 6] {
            let p = parity_family(n).unwrap();
            let mut x_prime = vec![1; n];
            x_prime[n - 1] = 0;
            let cert = certify_uniform_output(&p, &x_prime, true).unwrap();
            assert_eq!(cert.witnesses.len(), (1 << n) - 1);
            assert_eq!(cert.outcome_probability, Rat::from_ratio(1, 1 << n));
        }
    }

    #[test]
    fn certify_mermin3_generic() {
        let cert = certify_uniform_output(&mermin3(), &[0, 0, 0], true).unwrap();
        assert_eq!(cert.witnesses.len(), 7);
        assert_eq!(cert.outcome_probability, Rat::from_ratio(1, 8));
        // Odd N has no structured family; the generic search found these.
        assert!(cert.family.iter().all(|t| fixes_inequality(&cert.inequality, t)));
    }

    #[test]
    fn certification_requires_uniqueness_flag() {
        let p = parity_family(4).unwrap();
        assert!(certify_uniform_output(&p, &[1, 1, 1, 0], false).is_err());
    }

    #[test]
    fn min_entropy_examples() {
        assert_eq!(min_entropy(0.125).unwrap(), 3.0);
        assert_eq!(min_entropy(1.0).unwrap(), 0.0);
        assert_eq!(min_entropy(0.5).unwrap(), 1.0);
        assert!(min_entropy(0.0).is_err());
        assert!(min_entropy(1.5).is_err());
    }

    #[test]
    fn report_json_has_rational_weights() {
        let pr: Behavior<Rat> = Behavior::pr_box();
        let rep = guessing_probability_ns(&pr, &[0, 0]).unwrap();
        let v = rep.to_json();
        assert_eq!(v["guessing_probability"], "1/2");
        assert_eq!(v["set"], "NS");
        assert!(v["decomposition"].as_array().unwrap().len() >= 1);
    }
}
