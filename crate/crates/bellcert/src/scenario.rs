//! Bell scenarios, behaviors, correlator tables and their conversions.
//!
//! A *behavior* is the full table of conditional probabilities `p(a|x)` of
//! an `(N, M, d)` Bell experiment. For dichotomic scenarios (`d = 2`) the
//! same information can be carried by correlators `<x_J>` over all party
//! subsets `J`, related to the probabilities by
//!
//! ```text
//! p(a|x) = 2^-N * sum_J (-1)^(sum_{k in J} a_k) <x_J>
//! ```
//!
//! Index convention: an output string `a = (a_1, .., a_N)` maps to the
//! integer `sum_j a_j d^(N-1-j)` (party 1 most significant); input strings
//! use the same convention in base `M`.

use crate::error::{Error, Result};
use crate::value::Scalar;
use serde::{Deserialize, Serialize};

/// The triple `(N, M, d)` fixing parties, inputs per party and outputs per
/// input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(rename = "N")]
    pub parties: usize,
    #[serde(rename = "M")]
    pub inputs_per_party: usize,
    #[serde(rename = "d")]
    pub outputs_per_input: usize,
}

impl Scenario {
    pub fn new(parties: usize, inputs_per_party: usize, outputs_per_input: usize) -> Result<Self> {
        if parties < 1 || inputs_per_party < 1 || outputs_per_input < 2 {
            return Err(Error::InvalidInput(format!(
                "scenario requires N >= 1, M >= 1, d >= 2, got ({parties},{inputs_per_party},{outputs_per_input})"
            )));
        }
        Ok(Scenario {
            parties,
            inputs_per_party,
            outputs_per_input,
        })
    }

    /// Number of full output strings, `d^N`.
    pub fn num_outputs(&self) -> usize {
        self.outputs_per_input.pow(self.parties as u32)
    }

    /// Number of full input strings, `M^N`.
    pub fn num_inputs(&self) -> usize {
        self.inputs_per_party.pow(self.parties as u32)
    }

    /// Table size `d^N * M^N`.
    pub fn table_len(&self) -> usize {
        self.num_outputs() * self.num_inputs()
    }

    pub fn is_dichotomic(&self) -> bool {
        self.outputs_per_input == 2
    }

    /// Pack an output string into its index (party 1 most significant).
    pub fn output_index(&self, a: &[usize]) -> usize {
        pack(a, self.outputs_per_input)
    }

    /// Unpack an output index into the output string.
    pub fn output_digits(&self, idx: usize) -> Vec<usize> {
        unpack(idx, self.outputs_per_input, self.parties)
    }

    pub fn input_index(&self, x: &[usize]) -> usize {
        pack(x, self.inputs_per_party)
    }

    pub fn input_digits(&self, idx: usize) -> Vec<usize> {
        unpack(idx, self.inputs_per_party, self.parties)
    }

    /// All party subsets as bitmasks, `0..2^N` (bit `j` = party `j`).
    pub fn subsets(&self) -> impl Iterator<Item = usize> {
        0..(1usize << self.parties)
    }

    /// Parties of a subset mask in ascending order.
    pub fn subset_parties(&self, mask: usize) -> Vec<usize> {
        (0..self.parties).filter(|j| mask >> j & 1 == 1).collect()
    }

    /// Pack an input substring over `mask`'s parties (ascending, first party
    /// most significant, base `M`).
    pub fn substring_index(&self, mask: usize, x_sub: &[usize]) -> usize {
        debug_assert_eq!(x_sub.len(), mask.count_ones() as usize);
        pack(x_sub, self.inputs_per_party)
    }

    /// Number of input substrings for a subset, `M^|J|`.
    pub fn num_substrings(&self, mask: usize) -> usize {
        self.inputs_per_party.pow(mask.count_ones())
    }

    /// Extract the substring of `x` on `mask`'s parties.
    pub fn restrict(&self, x: &[usize], mask: usize) -> Vec<usize> {
        self.subset_parties(mask).iter().map(|&j| x[j]).collect()
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

/// Full conditional distribution `p(a|x)` of a Bell experiment.
///
/// Immutable after construction; the numeric mode (exact rational vs
/// floating) is the type parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior<T: Scalar> {
    scenario: Scenario,
    /// Flat table, index `a_idx * M^N + x_idx`.
    table: Vec<T>,
}

/// Default tolerance for floating-mode validation.
pub const DEFAULT_TOL: f64 = 1e-9;

impl<T: Scalar> Behavior<T> {
    /// Validate entry count, nonnegativity and per-input normalization.
    ///
    /// No-signaling is *not* asserted here; see [`is_no_signaling`].
    pub fn from_table(scenario: Scenario, entries: Vec<T>) -> Result<Self> {
        if entries.len() != scenario.table_len() {
            return Err(Error::DimensionMismatch {
                expected: scenario.table_len(),
                got: entries.len(),
            });
        }
        let ni = scenario.num_inputs();
        for (i, v) in entries.iter().enumerate() {
            let neg = if T::EXACT {
                *v < T::zero()
            } else {
                v.to_f64() < -DEFAULT_TOL
            };
            if neg {
                return Err(Error::NegativeEntry {
                    output: i / ni,
                    input: i % ni,
                    value: format!("{v}"),
                });
            }
        }
        for x in 0..ni {
            let sum: T = (0..scenario.num_outputs())
                .map(|a| entries[a * ni + x].clone())
                .sum();
            let ok = if T::EXACT {
                sum == T::one()
            } else {
                (sum.to_f64() - 1.0).abs() <= DEFAULT_TOL
            };
            if !ok {
                return Err(Error::NotNormalized {
                    input: x,
                    sum: format!("{sum}"),
                });
            }
        }
        Ok(Behavior {
            scenario,
            table: entries,
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    /// `p(a|x)` by indices.
    pub fn prob(&self, a_idx: usize, x_idx: usize) -> &T {
        &self.table[a_idx * self.scenario.num_inputs() + x_idx]
    }

    /// Uniform behavior, `p(a|x) = 1/d^N`.
    pub fn uniform(scenario: Scenario) -> Self {
        let v = T::from_ratio(1, scenario.num_outputs() as i64);
        Behavior {
            scenario,
            table: vec![v; scenario.table_len()],
        }
    }

    /// Local deterministic behavior: party `j` answers `strategy[j][x_j]`.
    pub fn deterministic(scenario: Scenario, strategy: &[Vec<usize>]) -> Result<Self> {
        if strategy.len() != scenario.parties
            || strategy.iter().any(|s| s.len() != scenario.inputs_per_party)
        {
            return Err(Error::InvalidInput("strategy shape mismatch".into()));
        }
        let ni = scenario.num_inputs();
        let mut table = vec![T::zero(); scenario.table_len()];
        for x_idx in 0..ni {
            let x = scenario.input_digits(x_idx);
            let a: Vec<usize> = (0..scenario.parties).map(|j| strategy[j][x[j]]).collect();
            table[scenario.output_index(&a) * ni + x_idx] = T::one();
        }
        Ok(Behavior { scenario, table })
    }

    /// The PR box in the `(2,2,2)` scenario: `p = 1/2` iff
    /// `a_1 + a_2 = x_1 * x_2 (mod 2)`.
    pub fn pr_box() -> Self {
        let s = Scenario::new(2, 2, 2).unwrap();
        let half = T::from_ratio(1, 2);
        let mut table = vec![T::zero(); 16];
        for x_idx in 0..4 {
            let x = s.input_digits(x_idx);
            for a_idx in 0..4 {
                let a = s.output_digits(a_idx);
                if (a[0] + a[1]) % 2 == (x[0] * x[1]) % 2 {
                    table[a_idx * 4 + x_idx] = half.clone();
                }
            }
        }
        Behavior { scenario: s, table }
    }

    /// Convex mixture `w * self + (1-w) * other`.
    pub fn mix(&self, other: &Behavior<T>, weight: T) -> Result<Behavior<T>> {
        if self.scenario != other.scenario {
            return Err(Error::ScenarioMismatch("mixing".into()));
        }
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(p, q)| weight.clone() * p.clone() + (T::one() - weight.clone()) * q.clone())
            .collect();
        Ok(Behavior {
            scenario: self.scenario,
            table,
        })
    }

    /// Largest table entry at input `x_idx`.
    pub fn max_entry_at(&self, x_idx: usize) -> T {
        let ni = self.scenario.num_inputs();
        let mut best = self.table[x_idx].clone();
        for a in 1..self.scenario.num_outputs() {
            let v = &self.table[a * ni + x_idx];
            if *v > best {
                best = v.clone();
            }
        }
        best
    }

    /// Largest table entry over all inputs.
    pub fn max_entry(&self) -> T {
        (0..self.scenario.num_inputs())
            .map(|x| self.max_entry_at(x))
            .fold(None::<T>, |acc, v| match acc {
                Some(a) if a >= v => Some(a),
                _ => Some(v),
            })
            .unwrap()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ni = self.scenario.num_inputs();
        let rows: Vec<Vec<serde_json::Value>> = (0..self.scenario.num_outputs())
            .map(|a| (0..ni).map(|x| self.table[a * ni + x].to_json()).collect())
            .collect();
        serde_json::json!({
            "scenario": self.scenario,
            "mode": T::MODE,
            "p": rows,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let scenario: Scenario = serde_json::from_value(
            v.get("scenario")
                .ok_or_else(|| Error::InvalidInput("missing scenario".into()))?
                .clone(),
        )?;
        let mode = v.get("mode").and_then(|m| m.as_str()).unwrap_or("");
        if mode != T::MODE {
            return Err(Error::InvalidInput(format!(
                "behavior mode {mode:?} does not match requested {:?}",
                T::MODE
            )));
        }
        let rows = v
            .get("p")
            .and_then(|p| p.as_array())
            .ok_or_else(|| Error::InvalidInput("missing p table".into()))?;
        let mut entries = Vec::with_capacity(scenario.table_len());
        for row in rows {
            let row = row
                .as_array()
                .ok_or_else(|| Error::InvalidInput("p rows must be arrays".into()))?;
            for e in row {
                entries.push(
                    T::from_json(e)
                        .ok_or_else(|| Error::InvalidInput(format!("bad entry {e}")))?,
                );
            }
        }
        Behavior::from_table(scenario, entries)
    }
}

/// Marginal distribution of a party subset at a fixed input substring.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDistribution<T: Scalar> {
    /// Parties of the subset, ascending.
    pub parties: Vec<usize>,
    /// Input substring on those parties.
    pub inputs: Vec<usize>,
    /// Probabilities over the `d^|J|` output substrings.
    pub probs: Vec<T>,
}

/// Marginal of `b` over subset `mask` at full input `x`, obtained by
/// summing out the other parties.
pub fn marginal<T: Scalar>(
    b: &Behavior<T>,
    mask: usize,
    x: &[usize],
) -> Result<MarginalDistribution<T>> {
    let s = b.scenario();
    if mask == 0 {
        return Err(Error::EmptySubset);
    }
    let parties = s.subset_parties(mask);
    let d = s.outputs_per_input;
    let x_idx = s.input_index(x);
    let mut probs = vec![T::zero(); d.pow(parties.len() as u32)];
    for a_idx in 0..s.num_outputs() {
        let a = s.output_digits(a_idx);
        let sub = s.restrict(&a, mask);
        probs[pack(&sub, d)] = probs[pack(&sub, d)].clone() + b.prob(a_idx, x_idx).clone();
    }
    Ok(MarginalDistribution {
        parties,
        inputs: s.restrict(x, mask),
        probs,
    })
}

/// Outcome of a no-signaling check.
#[derive(Debug, Clone)]
pub struct NoSignalingReport<T: Scalar> {
    pub passed: bool,
    /// Largest absolute deviation between marginals that should coincide.
    pub worst_violation: T,
}

/// Check Eq.-style no-signaling: for every party `k`, the marginal of the
/// remaining parties is independent of `x_k`. Exact in rational mode; max
/// absolute deviation at most `tol` in floating mode.
pub fn is_no_signaling<T: Scalar>(b: &Behavior<T>, tol: f64) -> NoSignalingReport<T> {
    let s = b.scenario();
    let n = s.parties;
    let ni = s.num_inputs();
    let mut worst = T::zero();
    if n == 1 {
        return NoSignalingReport {
            passed: true,
            worst_violation: worst,
        };
    }
    for k in 0..n {
        // Group inputs by their digits away from party k.
        let mut seen: std::collections::HashMap<Vec<usize>, Vec<usize>> =
            std::collections::HashMap::new();
        for x_idx in 0..ni {
            let mut x = s.input_digits(x_idx);
            x[k] = 0;
            seen.entry(x).or_default().push(x_idx);
        }
        let others_mask = ((1usize << n) - 1) ^ (1 << k);
        for group in seen.values() {
            let base = marginal(b, others_mask, &s.input_digits(group[0])).unwrap();
            for &x_idx in &group[1..] {
                let m = marginal(b, others_mask, &s.input_digits(x_idx)).unwrap();
                for (p, q) in base.probs.iter().zip(&m.probs) {
                    let dev = (p.clone() - q.clone()).abs();
                    if dev > worst {
                        worst = dev;
                    }
                }
            }
        }
    }
    let passed = if T::EXACT {
        worst.is_zero()
    } else {
        worst.to_f64() <= tol
    };
    NoSignalingReport {
        passed,
        worst_violation: worst,
    }
}

/// Correlator values `<x_J>` for all subsets `J` and all input substrings.
/// Dichotomic scenarios only; the empty-set value is fixed to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTable<T: Scalar> {
    scenario: Scenario,
    /// `values[mask][substring_idx]`, `values[0] = [1]`.
    values: Vec<Vec<T>>,
}

impl<T: Scalar> CorrelatorTable<T> {
    pub fn new(scenario: Scenario, values: Vec<Vec<T>>) -> Result<Self> {
        if !scenario.is_dichotomic() {
            return Err(Error::NotDichotomic(scenario.outputs_per_input));
        }
        if values.len() != 1 << scenario.parties {
            return Err(Error::DimensionMismatch {
                expected: 1 << scenario.parties,
                got: values.len(),
            });
        }
        for (mask, row) in values.iter().enumerate() {
            if row.len() != scenario.num_substrings(mask) {
                return Err(Error::DimensionMismatch {
                    expected: scenario.num_substrings(mask),
                    got: row.len(),
                });
            }
            for v in row {
                let bad = if T::EXACT {
                    v.abs() > T::one()
                } else {
                    v.abs().to_f64() > 1.0 + DEFAULT_TOL
                };
                if bad {
                    return Err(Error::CorrelatorOutOfRange(format!("{v}")));
                }
            }
        }
        if values[0] != vec![T::one()] {
            return Err(Error::InvalidInput("empty-set correlator must be 1".into()));
        }
        Ok(CorrelatorTable { scenario, values })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// `<x_J>` for subset `mask` and packed input substring.
    pub fn value(&self, mask: usize, substring_idx: usize) -> &T {
        &self.values[mask][substring_idx]
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }
}

/// Compute all correlators of a dichotomic behavior: `<x_J>` is the parity
/// expectation `sum_{a_J} (-1)^(sum a_k) p(a_J|x_J)` of the `J`-marginal.
///
/// Marginals are taken at the completion of `x_J` by zeros; for
/// no-signaling behaviors the completion is irrelevant.
pub fn correlators_from_behavior<T: Scalar>(b: &Behavior<T>) -> Result<CorrelatorTable<T>> {
    let s = b.scenario();
    if !s.is_dichotomic() {
        return Err(Error::NotDichotomic(s.outputs_per_input));
    }
    let mut values = Vec::with_capacity(1 << s.parties);
    for mask in s.subsets() {
        if mask == 0 {
            values.push(vec![T::one()]);
            continue;
        }
        let parties = s.subset_parties(mask);
        let mut row = Vec::with_capacity(s.num_substrings(mask));
        for sub_idx in 0..s.num_substrings(mask) {
            let sub = unpack(sub_idx, s.inputs_per_party, parties.len());
            let mut x = vec![0; s.parties];
            for (pos, &j) in parties.iter().enumerate() {
                x[j] = sub[pos];
            }
            let m = marginal(b, mask, &x)?;
            let mut corr = T::zero();
            for (a_sub_idx, p) in m.probs.iter().enumerate() {
                if a_sub_idx.count_ones() % 2 == 0 {
                    corr = corr + p.clone();
                } else {
                    corr = corr - p.clone();
                }
            }
            row.push(corr);
        }
        values.push(row);
    }
    CorrelatorTable::new(s, values)
}

/// Reconstruct a behavior from its correlator table via
/// `p(a|x) = 2^-N sum_J (-1)^(sum_{k in J} a_k) <x_J>`.
pub fn behavior_from_correlators<T: Scalar>(t: &CorrelatorTable<T>) -> Result<Behavior<T>> {
    let s = t.scenario();
    let ni = s.num_inputs();
    let scale = T::from_ratio(1, s.num_outputs() as i64);
    let mut table = vec![T::zero(); s.table_len()];
    for x_idx in 0..ni {
        let x = s.input_digits(x_idx);
        for a_idx in 0..s.num_outputs() {
            let mut sum = T::zero();
            for mask in s.subsets() {
                // Parity of a on the subset: bits of a_idx are packed with
                // party 1 most significant, so party j sits at bit N-1-j.
                let mut parity = 0usize;
                for j in 0..s.parties {
                    if mask >> j & 1 == 1 {
                        parity += a_idx >> (s.parties - 1 - j) & 1;
                    }
                }
                let sub = s.restrict(&x, mask);
                let v = t.value(mask, pack(&sub, s.inputs_per_party)).clone();
                if parity % 2 == 0 {
                    sum = sum + v;
                } else {
                    sum = sum - v;
                }
            }
            let p = scale.clone() * sum;
            let neg = if T::EXACT {
                p < T::zero()
            } else {
                p.to_f64() < -DEFAULT_TOL
            };
            if neg {
                return Err(Error::ReconstructedNegative {
                    output: a_idx,
                    input: x_idx,
                    value: format!("{p}"),
                });
            }
            table[a_idx * ni + x_idx] = p;
        }
    }
    Behavior::from_table(s, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Rat;

    fn s222() -> Scenario {
        Scenario::new(2, 2, 2).unwrap()
    }

    #[test]
    fn indexing_round_trip() {
        let s = Scenario::new(3, 2, 3).unwrap();
        for idx in 0..s.num_outputs() {
            assert_eq!(s.output_index(&s.output_digits(idx)), idx);
        }
        // Party 1 most significant: a = (1, 0, 2) in base 3 -> 1*9 + 0*3 + 2.
        assert_eq!(s.output_index(&[1, 0, 2]), 11);
    }

    #[test]
    fn uniform_behavior_is_valid() {
        let b: Behavior<Rat> = Behavior::uniform(s222());
        assert_eq!(*b.prob(0, 0), Rat::from_ratio(1, 4));
        assert!(is_no_signaling(&b, DEFAULT_TOL).passed);
    }

    #[test]
    fn pr_box_is_valid_and_no_signaling() {
        let b: Behavior<Rat> = Behavior::pr_box();
        // p(00|00) = 1/2, p(01|00) = 0.
        assert_eq!(*b.prob(0, 0), Rat::from_ratio(1, 2));
        assert_eq!(*b.prob(1, 0), Rat::from_int(0));
        let rep = is_no_signaling(&b, DEFAULT_TOL);
        assert!(rep.passed);
        assert!(rep.worst_violation.is_zero());
    }

    #[test]
    fn unnormalized_column_rejected() {
        let mut entries = vec![Rat::from_ratio(1, 4); 16];
        entries[0] = Rat::from_ratio(3, 20); // column 0 sums to 0.9
        let err = Behavior::from_table(s222(), entries).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { input: 0, .. }));
    }

    #[test]
    fn dimension_and_negativity_rejected() {
        assert!(matches!(
            Behavior::<Rat>::from_table(s222(), vec![Rat::from_int(0); 3]).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
        let mut entries = vec![Rat::from_ratio(1, 4); 16];
        entries[0] = Rat::from_ratio(-1, 4);
        entries[4] = Rat::from_ratio(3, 4);
        assert!(matches!(
            Behavior::from_table(s222(), entries).unwrap_err(),
            Error::NegativeEntry { .. }
        ));
    }

    #[test]
    fn pr_marginals_are_uniform() {
        let b: Behavior<Rat> = Behavior::pr_box();
        for x_idx in 0..4 {
            let m = marginal(&b, 0b01, &b.scenario().input_digits(x_idx)).unwrap();
            assert_eq!(m.probs, vec![Rat::from_ratio(1, 2); 2]);
        }
    }

    #[test]
    fn deterministic_marginal_is_point_mass() {
        let s = s222();
        let b: Behavior<Rat> = Behavior::deterministic(s, &[vec![0, 0], vec![0, 0]]).unwrap();
        let m = marginal(&b, 0b10, &[1, 1]).unwrap();
        assert_eq!(m.probs, vec![Rat::from_int(1), Rat::from_int(0)]);
        assert_eq!(b.max_entry(), Rat::from_int(1));
    }

    #[test]
    fn empty_subset_rejected() {
        let b: Behavior<Rat> = Behavior::uniform(s222());
        assert!(matches!(marginal(&b, 0, &[0, 0]), Err(Error::EmptySubset)));
    }

    #[test]
    fn signaling_behavior_detected() {
        // Party 1 outputs 0 with certainty if x_2 = 0, uniformly otherwise;
        // party 2 always uniform and independent.
        let s = s222();
        let ni = 4;
        let mut table = vec![Rat::from_int(0); 16];
        for x_idx in 0..4 {
            let x = s.input_digits(x_idx);
            for a_idx in 0..4 {
                let a = s.output_digits(a_idx);
                let p1 = if x[1] == 0 {
                    if a[0] == 0 {
                        Rat::from_int(1)
                    } else {
                        Rat::from_int(0)
                    }
                } else {
                    Rat::from_ratio(1, 2)
                };
                table[a_idx * ni + x_idx] = p1 * Rat::from_ratio(1, 2);
            }
        }
        let b = Behavior::from_table(s, table).unwrap();
        let rep = is_no_signaling(&b, DEFAULT_TOL);
        assert!(!rep.passed);
        assert_eq!(rep.worst_violation, Rat::from_ratio(1, 2));
    }

    #[test]
    fn pr_correlators() {
        let b: Behavior<Rat> = Behavior::pr_box();
        let t = correlators_from_behavior(&b).unwrap();
        // Singles vanish.
        for mask in [0b01, 0b10] {
            for x in 0..2 {
                assert!(t.value(mask, x).is_zero());
            }
        }
        // <x_1 x_2> = (-1)^(x1*x2).
        for x_idx in 0..4 {
            let x = b.scenario().input_digits(x_idx);
            let expect = if x[0] * x[1] == 1 { -1 } else { 1 };
            assert_eq!(*t.value(0b11, x_idx), Rat::from_int(expect));
        }
    }

    #[test]
    fn uniform_and_deterministic_correlators() {
        let u: Behavior<Rat> = Behavior::uniform(s222());
        let t = correlators_from_behavior(&u).unwrap();
        for mask in 1..4usize {
            for v in &t.values()[mask] {
                assert!(v.is_zero());
            }
        }
        let det: Behavior<Rat> =
            Behavior::deterministic(s222(), &[vec![0, 0], vec![0, 0]]).unwrap();
        let t = correlators_from_behavior(&det).unwrap();
        for mask in s222().subsets() {
            for v in &t.values()[mask] {
                assert_eq!(*v, Rat::from_int(1));
            }
        }
    }

    #[test]
    fn correlator_round_trip_pr() {
        let b: Behavior<Rat> = Behavior::pr_box();
        let t = correlators_from_behavior(&b).unwrap();
        let b2 = behavior_from_correlators(&t).unwrap();
        assert_eq!(b, b2);
    }

    #[test]
    fn zero_correlators_give_uniform() {
        let s = s222();
        let mut values: Vec<Vec<Rat>> = vec![vec![Rat::from_int(1)]];
        for mask in 1..4usize {
            values.push(vec![Rat::from_int(0); s.num_substrings(mask)]);
        }
        let t = CorrelatorTable::new(s, values).unwrap();
        let b = behavior_from_correlators(&t).unwrap();
        assert_eq!(b, Behavior::uniform(s));
    }

    #[test]
    fn out_of_range_correlator_rejected() {
        let s = s222();
        let mut values: Vec<Vec<Rat>> = vec![vec![Rat::from_int(1)]];
        for mask in 1..4usize {
            values.push(vec![Rat::from_int(0); s.num_substrings(mask)]);
        }
        values[1][0] = Rat::from_int(2);
        assert!(matches!(
            CorrelatorTable::new(s, values).unwrap_err(),
            Error::CorrelatorOutOfRange(_)
        ));
    }

    #[test]
    fn invalid_table_reconstruction_rejected() {
        // <x_1> = 1 and <x_1 x_2> = -1 at x = (0,0) forces p(0,a_2|00) < 0.
        let s = s222();
        let mut values: Vec<Vec<Rat>> = vec![vec![Rat::from_int(1)]];
        values.push(vec![Rat::from_int(1); 2]); // party 1 singles
        values.push(vec![Rat::from_int(0); 2]); // party 2 singles
        values.push(vec![Rat::from_int(-1); 4]);
        let t = CorrelatorTable::new(s, values).unwrap();
        assert!(matches!(
            behavior_from_correlators(&t).unwrap_err(),
            Error::ReconstructedNegative { .. }
        ));
    }

    #[test]
    fn behavior_json_round_trip() {
        let b: Behavior<Rat> = Behavior::pr_box();
        let v = b.to_json();
        assert_eq!(v["mode"], "rational");
        let b2: Behavior<Rat> = Behavior::from_json(&v).unwrap();
        assert_eq!(b, b2);

        let u: Behavior<f64> = Behavior::uniform(s222());
        let v = u.to_json();
        assert_eq!(v["mode"], "float");
        let u2: Behavior<f64> = Behavior::from_json(&v).unwrap();
        assert_eq!(u, u2);
    }
}
