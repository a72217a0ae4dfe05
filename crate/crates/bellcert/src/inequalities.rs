//! Bell inequalities in correlator form, with local and algebraic bounds.
//!
//! An inequality is a finite linear functional `sum c_{J,x_J} <x_J>` on
//! correlator tables of dichotomic scenarios. The *local bound* is its
//! maximum over local deterministic strategies; the *algebraic bound*
//! `sum |c|` is the maximum over all sign assignments, reachable only by
//! stronger-than-classical correlations.

use crate::error::{Error, Result};
use crate::scenario::{correlators_from_behavior, Behavior, CorrelatorTable, Scenario};
use crate::value::{format_rat, parse_rat, Rat, Scalar};
use num::Signed;
use std::collections::BTreeMap;

/// A Bell functional `sum over (J, x_J) of c * <x_J>`, `d = 2` only.
#[derive(Debug, Clone, PartialEq)]
pub struct BellInequality {
    scenario: Scenario,
    /// Nonzero coefficients keyed by `(subset mask, packed input substring)`.
    terms: BTreeMap<(usize, usize), Rat>,
}

impl BellInequality {
    /// Build from `(mask, input substring, coefficient)` triples.
    pub fn new(scenario: Scenario, terms: Vec<(usize, Vec<usize>, Rat)>) -> Result<Self> {
        if !scenario.is_dichotomic() {
            return Err(Error::NotDichotomic(scenario.outputs_per_input));
        }
        let mut map = BTreeMap::new();
        for (mask, inputs, coeff) in terms {
            if mask == 0 || mask >= 1 << scenario.parties {
                return Err(Error::InvalidInput(format!("bad party subset mask {mask}")));
            }
            if inputs.len() != mask.count_ones() as usize
                || inputs.iter().any(|&x| x >= scenario.inputs_per_party)
            {
                return Err(Error::InvalidInput("bad input substring".into()));
            }
            if coeff.is_zero() {
                continue;
            }
            let key = (mask, scenario.substring_index(mask, &inputs));
            *map.entry(key).or_insert_with(|| Rat::from_int(0)) += coeff;
        }
        map.retain(|_, c| !Scalar::is_zero(c));
        Ok(BellInequality {
            scenario,
            terms: map,
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// Coefficient of `<x_J>`; zero if absent.
    pub fn coefficient(&self, mask: usize, inputs: &[usize]) -> Rat {
        self.terms
            .get(&(mask, self.scenario.substring_index(mask, inputs)))
            .cloned()
            .unwrap_or_else(|| Rat::from_int(0))
    }

    /// Nonzero terms as `(mask, packed substring, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &Rat)> {
        self.terms.iter().map(|(&(m, x), c)| (m, x, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Evaluate on a correlator table.
    pub fn evaluate_correlators<T: Scalar>(&self, t: &CorrelatorTable<T>) -> Result<T> {
        if t.scenario() != self.scenario {
            return Err(Error::ScenarioMismatch("inequality evaluation".into()));
        }
        Ok(self
            .terms
            .iter()
            .map(|(&(mask, sub), c)| T::from_rat(c) * t.value(mask, sub).clone())
            .sum())
    }

    /// Evaluate on a behavior (through its correlators).
    pub fn evaluate<T: Scalar>(&self, b: &Behavior<T>) -> Result<T> {
        self.evaluate_correlators(&correlators_from_behavior(b)?)
    }

    /// Maximum over all local deterministic strategies, computed by full
    /// enumeration (guarded at 10^6 strategies).
    pub fn local_bound(&self) -> Result<Rat> {
        let s = self.scenario;
        let per_party = 2usize.pow(s.inputs_per_party as u32);
        let total = per_party
            .checked_pow(s.parties as u32)
            .filter(|&t| t <= 1_000_000)
            .ok_or_else(|| {
                Error::BudgetExceeded("deterministic strategy count exceeds 10^6".into())
            })?;
        let mut best: Option<Rat> = None;
        for idx in 0..total {
            // Party j's answer to input x is bit x of digit j.
            let mut digits = vec![0usize; s.parties];
            let mut rem = idx;
            for j in (0..s.parties).rev() {
                digits[j] = rem % per_party;
                rem /= per_party;
            }
            let mut value = Rat::from_int(0);
            for (&(mask, sub), c) in &self.terms {
                let parties = s.subset_parties(mask);
                let inputs = unpack(sub, s.inputs_per_party, parties.len());
                let mut parity = 0usize;
                for (pos, &j) in parties.iter().enumerate() {
                    parity += digits[j] >> inputs[pos] & 1;
                }
                if parity % 2 == 0 {
                    value += c;
                } else {
                    value -= c;
                }
            }
            best = match best {
                Some(b) if b >= value => Some(b),
                _ => Some(value),
            };
        }
        Ok(best.unwrap_or_else(|| Rat::from_int(0)))
    }

    /// `sum |c|`: the maximum over all (not necessarily physical) sign
    /// assignments of the correlators.
    pub fn algebraic_bound(&self) -> Rat {
        self.terms.values().map(Signed::abs).sum()
    }

    /// Coefficients `beta_{a,x}` on table entries such that
    /// `sum beta p(a|x) = sum c <x_J>`, with every substring term charged to
    /// its zero-completed full input. Length `d^N * M^N`, table layout.
    pub fn probability_coefficients(&self) -> Vec<Rat> {
        let s = self.scenario;
        let ni = s.num_inputs();
        let mut beta = vec![Rat::from_int(0); s.table_len()];
        for (&(mask, sub), c) in &self.terms {
            let parties = s.subset_parties(mask);
            let inputs = unpack(sub, s.inputs_per_party, parties.len());
            let mut x = vec![0usize; s.parties];
            for (pos, &j) in parties.iter().enumerate() {
                x[j] = inputs[pos];
            }
            let x_idx = s.input_index(&x);
            for a_idx in 0..s.num_outputs() {
                let a = s.output_digits(a_idx);
                let parity: usize = parties.iter().map(|&j| a[j]).sum();
                if parity % 2 == 0 {
                    beta[a_idx * ni + x_idx] += c;
                } else {
                    beta[a_idx * ni + x_idx] -= c;
                }
            }
        }
        beta
    }

    pub fn to_json(&self) -> serde_json::Value {
        let s = self.scenario;
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(&(mask, sub), c)| {
                let parties = s.subset_parties(mask);
                serde_json::json!({
                    "subset": parties,
                    "inputs": unpack(sub, s.inputs_per_party, parties.len()),
                    "coeff": format_rat(c),
                })
            })
            .collect();
        serde_json::json!({ "scenario": s, "terms": terms })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let scenario: Scenario = serde_json::from_value(
            v.get("scenario")
                .ok_or_else(|| Error::InvalidInput("missing scenario".into()))?
                .clone(),
        )?;
        let terms = v
            .get("terms")
            .and_then(|t| t.as_array())
            .ok_or_else(|| Error::InvalidInput("missing terms".into()))?;
        let mut list = Vec::with_capacity(terms.len());
        for t in terms {
            let subset: Vec<usize> = serde_json::from_value(
                t.get("subset")
                    .ok_or_else(|| Error::InvalidInput("term missing subset".into()))?
                    .clone(),
            )?;
            let inputs: Vec<usize> = serde_json::from_value(
                t.get("inputs")
                    .ok_or_else(|| Error::InvalidInput("term missing inputs".into()))?
                    .clone(),
            )?;
            let coeff = t
                .get("coeff")
                .and_then(|c| c.as_str())
                .and_then(parse_rat)
                .ok_or_else(|| Error::InvalidInput("term missing coeff".into()))?;
            let mask = subset.iter().map(|&j| 1usize << j).sum();
            list.push((mask, inputs, coeff));
        }
        BellInequality::new(scenario, list)
    }
}

/// The CHSH inequality `<00> + <01> + <10> - <11> <= 2`.
pub fn chsh() -> BellInequality {
    let s = Scenario::new(2, 2, 2).unwrap();
    let terms = (0..4)
        .map(|xy: usize| {
            let sign = if xy == 3 { -1 } else { 1 };
            (0b11, vec![xy >> 1, xy & 1], Rat::from_int(sign))
        })
        .collect();
    BellInequality::new(s, terms).unwrap()
}

/// The tripartite Mermin inequality
/// `<001> + <010> + <100> - <111> <= 2`, algebraic maximum 4.
pub fn mermin3() -> BellInequality {
    let s = Scenario::new(3, 2, 2).unwrap();
    let terms = vec![
        (0b111, vec![0, 0, 1], Rat::from_int(1)),
        (0b111, vec![0, 1, 0], Rat::from_int(1)),
        (0b111, vec![1, 0, 0], Rat::from_int(1)),
        (0b111, vec![1, 1, 1], Rat::from_int(-1)),
    ];
    BellInequality::new(s, terms).unwrap()
}

/// Quadratic form behind the parity-family signs, written as the nested sum
/// `sum_j x_j * (sum_{k>j} x_k)` mod 2.
pub fn parity_sign_exponent(x: &[usize]) -> usize {
    let n = x.len();
    let mut f = 0usize;
    for j in 0..n {
        let suffix: usize = x[j + 1..n].iter().sum();
        f += x[j] * suffix;
    }
    f % 2
}

/// The N-party full-correlator family
/// `sum over even-parity x of (-1)^{f(x)} <x> <= local bound < 2^{N-1}`:
/// terms exactly on inputs with `sum x_j` even, sign from
/// [`parity_sign_exponent`], `2^{N-1}` terms in total.
pub fn parity_family(n: usize) -> Result<BellInequality> {
    if n < 2 {
        return Err(Error::InvalidInput(
            "parity family needs at least 2 parties".into(),
        ));
    }
    let s = Scenario::new(n, 2, 2)?;
    let full = (1usize << n) - 1;
    let mut terms = Vec::new();
    for x_idx in 0..s.num_inputs() {
        let x = s.input_digits(x_idx);
        if x.iter().sum::<usize>() % 2 != 0 {
            continue;
        }
        let sign = if parity_sign_exponent(&x) == 0 { 1 } else { -1 };
        terms.push((full, x, Rat::from_int(sign)));
    }
    BellInequality::new(s, terms)
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
    use crate::polytope::local_deterministic_vertices;

    fn rat(n: i64) -> Rat {
        Rat::from_int(n)
    }

    /// Independent pairwise-product implementation of the sign exponent.
    fn f_pairwise(x: &[usize]) -> usize {
        let mut f = 0;
        for j in 0..x.len() {
            for k in j + 1..x.len() {
                f += x[j] * x[k];
            }
        }
        f % 2
    }

    #[test]
    fn sign_exponent_implementations_agree() {
        for n in 2..=6usize {
            for idx in 0..1usize << n {
                let x: Vec<usize> = (0..n).map(|j| idx >> (n - 1 - j) & 1).collect();
                assert_eq!(parity_sign_exponent(&x), f_pairwise(&x), "{x:?}");
            }
        }
    }

    #[test]
    fn mermin3_coefficients() {
        let m = mermin3();
        assert_eq!(m.coefficient(0b111, &[0, 0, 1]), rat(1));
        assert_eq!(m.coefficient(0b111, &[1, 1, 1]), rat(-1));
        assert_eq!(m.coefficient(0b111, &[0, 0, 0]), rat(0));
        assert_eq!(m.coefficient(0b011, &[0, 0]), rat(0));
        assert_eq!(m.num_terms(), 4);
    }

    #[test]
    fn parity_family_structure() {
        let p3 = parity_family(3).unwrap();
        assert_eq!(p3.num_terms(), 4);
        for (mask, sub, _) in p3.terms() {
            assert_eq!(mask, 0b111);
            let x = unpack(sub, 2, 3);
            assert_eq!(x.iter().sum::<usize>() % 2, 0);
        }
        // N=4, x=(1,1,0,0): even parity, f = 1 -> coefficient -1.
        let p4 = parity_family(4).unwrap();
        assert_eq!(p4.coefficient(0b1111, &[1, 1, 0, 0]), rat(-1));
        assert_eq!(p4.coefficient(0b1111, &[0, 0, 0, 0]), rat(1));
        assert_eq!(p4.num_terms(), 8);
        // N=2: terms on {00, 11} with signs (+, -).
        let p2 = parity_family(2).unwrap();
        assert_eq!(p2.num_terms(), 2);
        assert_eq!(p2.coefficient(0b11, &[0, 0]), rat(1));
        assert_eq!(p2.coefficient(0b11, &[1, 1]), rat(-1));
    }

    #[test]
    fn chsh_on_pr_box_reaches_algebraic_bound() {
        let c = chsh();
        let pr: Behavior<Rat> = Behavior::pr_box();
        assert_eq!(c.evaluate(&pr).unwrap(), rat(4));
        assert_eq!(c.algebraic_bound(), rat(4));
        assert_eq!(c.local_bound().unwrap(), rat(2));
    }

    #[test]
    fn mermin3_bounds_and_deterministic_values() {
        let m = mermin3();
        assert_eq!(m.local_bound().unwrap(), rat(2));
        assert_eq!(m.algebraic_bound(), rat(4));
        let det = local_deterministic_vertices(m.scenario()).unwrap();
        for b in det.vertices() {
            assert!(m.evaluate(b).unwrap() <= rat(2));
        }
    }

    #[test]
    fn parity_family_bounds() {
        // The local/algebraic gap opens only from three parties on: at N=2
        // the two-term functional <00> - <11> is classically saturable.
        let p2 = parity_family(2).unwrap();
        assert_eq!(p2.local_bound().unwrap(), rat(2));
        assert_eq!(p2.algebraic_bound(), rat(2));
        for n in 3..=5usize {
            let p = parity_family(n).unwrap();
            assert_eq!(p.algebraic_bound(), rat(1 << (n - 1)));
            let local = p.local_bound().unwrap();
            assert!(local < p.algebraic_bound(), "N={n}: {local}");
        }
    }

    #[test]
    fn evaluation_is_linear() {
        let c = chsh();
        let pr: Behavior<Rat> = Behavior::pr_box();
        let uni: Behavior<Rat> = Behavior::uniform(pr.scenario());
        let w = Rat::from_ratio(3, 7);
        let mix = pr.mix(&uni, w.clone()).unwrap();
        let lhs = c.evaluate(&mix).unwrap();
        let rhs = w.clone() * c.evaluate(&pr).unwrap()
            + (rat(1) - w) * c.evaluate(&uni).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn probability_form_matches_correlator_form() {
        let s = Scenario::new(2, 2, 2).unwrap();
        let c = chsh();
        let beta = c.probability_coefficients();
        for b in [
            Behavior::<Rat>::pr_box(),
            Behavior::uniform(s),
            Behavior::deterministic(s, &[vec![0, 1], vec![1, 1]]).unwrap(),
        ] {
            let direct = c.evaluate(&b).unwrap();
            let ni = s.num_inputs();
            let via_beta: Rat = (0..s.table_len())
                .map(|i| beta[i].clone() * b.prob(i / ni, i % ni).clone())
                .sum();
            assert_eq!(direct, via_beta);
        }
    }

    #[test]
    fn json_round_trip() {
        for ineq in [chsh(), mermin3(), parity_family(4).unwrap()] {
            let v = ineq.to_json();
            let back = BellInequality::from_json(&v).unwrap();
            assert_eq!(ineq, back);
        }
    }

    #[test]
    fn float_evaluation_matches_rational() {
        let m = mermin3();
        let uni_r: Behavior<Rat> = Behavior::uniform(m.scenario());
        let uni_f: Behavior<f64> = Behavior::uniform(m.scenario());
        assert_eq!(
            m.evaluate(&uni_r).unwrap().to_f64(),
            m.evaluate(&uni_f).unwrap()
        );
    }
}
