//! Dense N-qubit simulation of dichotomic projective measurements.
//!
//! Produces floating-point behaviors from a pure state and one observable
//! per party and input. The workhorse settings are *equatorial*:
//! `cos t X + sin t Y`, whose tensor products on a GHZ state give the
//! closed-form correlator `cos(sum of angles - phase)` — the mechanism
//! behind maximal violations of the parity inequality family.

use crate::error::{Error, Result};
use crate::value::Scalar;
use crate::inequalities::BellInequality;
use crate::scenario::{Behavior, Scenario};
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

const HERMITIAN_TOL: f64 = 1e-12;

/// Pure state of `N` qubits, unit norm.
#[derive(Debug, Clone)]
pub struct StateVector {
    amps: Vec<Complex64>,
    qubits: usize,
}

impl StateVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "state length {len} is not a power of two >= 2"
            )));
        }
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!(
                "state norm^2 = {norm2}, not 1"
            )));
        }
        Ok(StateVector {
            qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// `(|0..0> + e^{i phase} |1..1>) / sqrt(2)`.
pub fn ghz_state(n: usize, phase: f64) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::InvalidInput("GHZ state needs at least 2 qubits".into()));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = Complex64::new(r, 0.0);
    amps[(1 << n) - 1] = Complex64::from_polar(r, phase);
    StateVector::new(amps)
}

/// A dichotomic (+-1-valued) single-qubit observable.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: Matrix2<Complex64>,
    /// Set when built by [`Observable::equatorial`].
    angle: Option<f64>,
}

impl Observable {
    /// Validates Hermiticity and `O^2 = I`.
    pub fn new(matrix: Matrix2<Complex64>) -> Result<Self> {
        let herm_dev = (matrix - matrix.adjoint()).norm();
        if herm_dev > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!(
                "observable not Hermitian (deviation {herm_dev:.2e})"
            )));
        }
        let sq_dev = (matrix * matrix - Matrix2::identity()).norm();
        if sq_dev > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!(
                "observable does not square to identity (deviation {sq_dev:.2e})"
            )));
        }
        Ok(Observable {
            matrix,
            angle: None,
        })
    }

    /// `cos t X + sin t Y = [[0, e^{-it}], [e^{it}, 0]]`.
    pub fn equatorial(theta: f64) -> Self {
        let z = Complex64::from_polar(1.0, theta);
        let matrix = Matrix2::new(
            Complex64::new(0.0, 0.0),
            z.conj(),
            z,
            Complex64::new(0.0, 0.0),
        );
        Observable {
            matrix,
            angle: Some(theta),
        }
    }

    /// Pauli Z, `diag(1, -1)`.
    pub fn pauli_z() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Observable {
            matrix: Matrix2::new(one, 0.0.into(), 0.0.into(), -one),
            angle: None,
        }
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.matrix
    }

    pub fn angle(&self) -> Option<f64> {
        self.angle
    }

    /// Projector onto outcome `a` (eigenvalue `(-1)^a`): `(I + (-1)^a O)/2`.
    pub fn projector(&self, a: usize) -> Matrix2<Complex64> {
        let sign = if a == 0 { 1.0 } else { -1.0 };
        (Matrix2::identity() + self.matrix * Complex64::new(sign, 0.0))
            * Complex64::new(0.5, 0.0)
    }

    /// Unitary whose row `a` is the adjoint eigenvector for outcome `a`,
    /// so `|(U psi)_a|^2` is the outcome probability.
    fn measurement_basis(&self) -> Matrix2<Complex64> {
        let pick = |p: Matrix2<Complex64>| -> Vector2<Complex64> {
            let c0 = p.column(0).norm();
            let c1 = p.column(1).norm();
            let v = if c0 >= c1 { p.column(0) } else { p.column(1) };
            let n = v.norm();
            Vector2::new(v[0] / n, v[1] / n)
        };
        let vp = pick(self.projector(0));
        let vm = pick(self.projector(1));
        Matrix2::new(vp[0].conj(), vp[1].conj(), vm[0].conj(), vm[1].conj())
    }
}

/// One observable per party and input.
#[derive(Debug, Clone)]
pub struct MeasurementAssignment {
    /// `observables[party][input]`.
    pub observables: Vec<Vec<Observable>>,
}

impl MeasurementAssignment {
    pub fn new(observables: Vec<Vec<Observable>>) -> Result<Self> {
        if observables.is_empty()
            || observables
                .iter()
                .any(|row| row.len() != observables[0].len() || row.is_empty())
        {
            return Err(Error::InvalidInput(
                "assignment must be a nonempty rectangular party x input grid".into(),
            ));
        }
        Ok(MeasurementAssignment { observables })
    }

    pub fn parties(&self) -> usize {
        self.observables.len()
    }

    pub fn inputs_per_party(&self) -> usize {
        self.observables[0].len()
    }
}

/// Equatorial measurement angles plus the GHZ phase: the serialized form of
/// a maximal-violation realization.
#[derive(Debug, Clone, PartialEq)]
pub struct EquatorialSettings {
    /// `angles[party][input]`, radians.
    pub angles: Vec<Vec<f64>>,
    /// GHZ phase, radians.
    pub phase: f64,
}

impl EquatorialSettings {
    pub fn assignment(&self) -> MeasurementAssignment {
        MeasurementAssignment::new(
            self.angles
                .iter()
                .map(|row| row.iter().map(|&t| Observable::equatorial(t)).collect())
                .collect(),
        )
        .expect("angle grid is rectangular")
    }

    pub fn state(&self) -> Result<StateVector> {
        ghz_state(self.angles.len(), self.phase)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "angles": self.angles, "phase": self.phase })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let angles: Vec<Vec<f64>> = serde_json::from_value(
            v.get("angles")
                .ok_or_else(|| Error::InvalidInput("missing angles".into()))?
                .clone(),
        )?;
        let phase = v
            .get("phase")
            .and_then(|p| p.as_f64())
            .ok_or_else(|| Error::InvalidInput("missing phase".into()))?;
        Ok(EquatorialSettings { angles, phase })
    }
}

/// Apply a 2x2 matrix to qubit `j` (party `j`, most significant first).
fn apply_single_qubit(amps: &mut [Complex64], n: usize, j: usize, m: &Matrix2<Complex64>) {
    let stride = 1usize << (n - 1 - j);
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

/// Expectation `<psi| O_1 x .. x O_N |psi>`, one observable per party.
pub fn correlator(psi: &StateVector, observables: &[Observable]) -> Result<f64> {
    let n = psi.num_qubits();
    if observables.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: observables.len(),
        });
    }
    let mut work = psi.amps.clone();
    for (j, o) in observables.iter().enumerate() {
        apply_single_qubit(&mut work, n, j, &o.matrix);
    }
    let val: Complex64 = psi
        .amps
        .iter()
        .zip(&work)
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert!(val.im.abs() < 1e-10);
    Ok(val.re)
}

/// Full behavior `p(a|x) = |<a-basis| U(x) psi>|^2` of a state under an
/// assignment; always no-signaling by construction.
pub fn quantum_behavior(
    psi: &StateVector,
    m: &MeasurementAssignment,
) -> Result<Behavior<f64>> {
    let n = psi.num_qubits();
    if m.parties() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.parties(),
        });
    }
    let s = Scenario::new(n, m.inputs_per_party(), 2)?;
    let ni = s.num_inputs();
    let mut table = vec![0.0f64; s.table_len()];
    for x_idx in 0..ni {
        let x = s.input_digits(x_idx);
        let mut work = psi.amps.clone();
        for j in 0..n {
            apply_single_qubit(&mut work, n, j, &m.observables[j][x[j]].measurement_basis());
        }
        for (a_idx, amp) in work.iter().enumerate() {
            table[a_idx * ni + x_idx] = amp.norm_sqr();
        }
    }
    Behavior::from_table(s, table)
}

/// Value of a full-correlator functional under equatorial settings on a
/// GHZ state, via `<x> = cos(sum_j angles[j][x_j] - phase)`.
pub fn equatorial_value(ineq: &BellInequality, settings: &EquatorialSettings) -> f64 {
    let s = ineq.scenario();
    let mut total = 0.0;
    for (mask, sub, c) in ineq.terms() {
        debug_assert_eq!(mask, (1 << s.parties) - 1, "full-correlator terms only");
        let mut sum = -settings.phase;
        let mut rem = sub;
        for j in (0..s.parties).rev() {
            sum += settings.angles[j][rem % s.inputs_per_party];
            rem /= s.inputs_per_party;
        }
        total += c.to_f64() * sum.cos();
    }
    total
}

/// Coordinate-descent polish of equatorial settings (angles and phase) for
/// a full-correlator functional.
fn refine(ineq: &BellInequality, settings: &mut EquatorialSettings) -> f64 {
    let mut best = equatorial_value(ineq, settings);
    for _sweep in 0..4 {
        for p in 0..=settings.angles.iter().map(Vec::len).sum::<usize>() {
            let read = |s: &EquatorialSettings, p: usize| -> f64 {
                if p == 0 {
                    s.phase
                } else {
                    let mut q = p - 1;
                    for row in &s.angles {
                        if q < row.len() {
                            return row[q];
                        }
                        q -= row.len();
                    }
                    unreachable!()
                }
            };
            let write = |s: &mut EquatorialSettings, p: usize, v: f64| {
                if p == 0 {
                    s.phase = v;
                } else {
                    let mut q = p - 1;
                    for row in s.angles.iter_mut() {
                        if q < row.len() {
                            row[q] = v;
                            return;
                        }
                        q -= row.len();
                    }
                }
            };
            // Golden-section over a shrinking bracket around the current value.
            let center = read(settings, p);
            let (mut lo, mut hi) = (center - 0.4, center + 0.4);
            const PHI: f64 = 0.618_033_988_749_894_9;
            for _ in 0..60 {
                let a = hi - PHI * (hi - lo);
                let b = lo + PHI * (hi - lo);
                write(settings, p, a);
                let fa = equatorial_value(ineq, settings);
                write(settings, p, b);
                let fb = equatorial_value(ineq, settings);
                if fa > fb {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            let mid = 0.5 * (lo + hi);
            write(settings, p, mid);
            let f = equatorial_value(ineq, settings);
            if f >= best {
                best = f;
            } else {
                write(settings, p, center);
            }
        }
    }
    best
}

/// Equatorial realization of the parity family's algebraic maximum
/// `2^{N-1}`: per-party angles `0` (input 0) and `pi/2` (input 1), GHZ
/// phase `0`, polished by coordinate descent. Fails loudly if the reached
/// value is below `2^{N-1} - 1e-6`.
pub fn maximal_parity_settings(n: usize) -> Result<(EquatorialSettings, f64)> {
    if !(2..=12).contains(&n) {
        return Err(Error::BudgetExceeded(format!(
            "dense simulation capped at 12 qubits, got {n}"
        )));
    }
    let ineq = crate::inequalities::parity_family(n)?;
    let mut settings = EquatorialSettings {
        angles: vec![vec![0.0, std::f64::consts::FRAC_PI_2]; n],
        phase: 0.0,
    };
    let value = refine(&ineq, &mut settings);
    let target = (1u64 << (n - 1)) as f64;
    if value < target - 1e-6 {
        return Err(Error::OptimizerStalled {
            target,
            best: value,
        });
    }
    Ok((settings, value))
}

/// Equatorial realization of the tripartite Mermin maximum 4: the same
/// X/Y angles with GHZ phase `pi/2`.
pub fn maximal_mermin3_settings() -> (EquatorialSettings, f64) {
    let ineq = crate::inequalities::mermin3();
    let mut settings = EquatorialSettings {
        angles: vec![vec![0.0, std::f64::consts::FRAC_PI_2]; 3],
        phase: std::f64::consts::FRAC_PI_2,
    };
    let value = refine(&ineq, &mut settings);
    (settings, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequalities::{mermin3, parity_family};
    use crate::scenario::{correlators_from_behavior, is_no_signaling, DEFAULT_TOL};

    #[test]
    fn ghz_amplitudes_norm_orthogonality() {
        let g0 = ghz_state(3, 0.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((g0.amplitudes()[0].re - r).abs() < 1e-15);
        assert!((g0.amplitudes()[7].re - r).abs() < 1e-15);
        assert!(g0.amplitudes()[1..7].iter().all(|a| a.norm() == 0.0));
        let gpi = ghz_state(3, std::f64::consts::PI).unwrap();
        assert!(g0.inner(&gpi).norm() < 1e-15);
        assert!(ghz_state(1, 0.0).is_err());
    }

    #[test]
    fn observable_validation() {
        let x = Observable::equatorial(0.0);
        assert!((x.matrix() * x.matrix() - Matrix2::identity()).norm() < 1e-15);
        // Projectors sum to identity.
        let o = Observable::equatorial(1.2345);
        assert!((o.projector(0) + o.projector(1) - Matrix2::identity()).norm() < 1e-15);
        // Non-involutive matrix rejected.
        let bad = Matrix2::new(
            Complex64::new(2.0, 0.0),
            0.0.into(),
            0.0.into(),
            Complex64::new(-2.0, 0.0),
        );
        assert!(Observable::new(bad).is_err());
    }

    #[test]
    fn ghz_stabilizer_correlators() {
        let g = ghz_state(3, 0.0).unwrap();
        let x = Observable::equatorial(0.0);
        // X x X x X stabilizes GHZ(0).
        let v = correlator(&g, &[x.clone(), x.clone(), x.clone()]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // A single Z sees a maximally mixed qubit.
        let id_pair = [Observable::pauli_z(), identity_obs(), identity_obs()];
        let v = correlator(&g, &id_pair).unwrap();
        assert!(v.abs() < 1e-12);
    }

    fn identity_obs() -> Observable {
        Observable::new(Matrix2::identity()).unwrap()
    }

    #[test]
    fn z_measurements_on_product_state_are_deterministic() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(1.0, 0.0);
        let psi = StateVector::new(amps).unwrap();
        let m = MeasurementAssignment::new(vec![
            vec![Observable::pauli_z(), Observable::pauli_z()];
            3
        ])
        .unwrap();
        let b = quantum_behavior(&psi, &m).unwrap();
        for x in 0..b.scenario().num_inputs() {
            assert!((b.prob(0, x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mermin3_maximal_violation() {
        let (settings, value) = maximal_mermin3_settings();
        assert!((value - 4.0).abs() < 1e-9, "analytic value {value}");
        let b = quantum_behavior(&settings.state().unwrap(), &settings.assignment()).unwrap();
        assert!(is_no_signaling(&b, DEFAULT_TOL).passed);
        let v = mermin3().evaluate(&b).unwrap();
        assert!((v - 4.0).abs() < 1e-9, "behavior value {v}");
    }

    #[test]
    fn parity_family_reaches_algebraic_bound() {
        for n in 2..=6usize {
            let (settings, value) = maximal_parity_settings(n).unwrap();
            let target = (1u64 << (n - 1)) as f64;
            assert!((value - target).abs() < 1e-9, "N={n}: {value}");
            // Cross-check the closed form against the dense simulation.
            let b =
                quantum_behavior(&settings.state().unwrap(), &settings.assignment()).unwrap();
            let v = parity_family(n).unwrap().evaluate(&b).unwrap();
            assert!((v - target).abs() < 1e-9, "N={n} behavior value {v}");
        }
        assert!(maximal_parity_settings(13).is_err());
    }

    #[test]
    fn uniform_outcomes_at_certificate_input() {
        for n in [4usize, 6] {
            let (settings, _) = maximal_parity_settings(n).unwrap();
            let b =
                quantum_behavior(&settings.state().unwrap(), &settings.assignment()).unwrap();
            let s = b.scenario();
            let mut x_prime = vec![1usize; n];
            x_prime[n - 1] = 0;
            let x_idx = s.input_index(&x_prime);
            let want = 1.0 / (1u64 << n) as f64;
            for a in 0..s.num_outputs() {
                assert!((b.prob(a, x_idx) - want).abs() < 1e-9, "N={n} a={a}");
            }
            // All proper-subset correlators at x' vanish.
            let t = correlators_from_behavior(&b).unwrap();
            for mask in 1..(1usize << n) - 1 {
                let parties = s.subset_parties(mask);
                let sub: Vec<usize> = parties.iter().map(|&j| x_prime[j]).collect();
                let v = t.value(mask, s.substring_index(mask, &sub));
                assert!(v.abs() < 1e-9, "N={n} mask={mask}: {v}");
            }
        }
    }

    #[test]
    fn behavior_correlators_match_direct_computation() {
        let (settings, _) = maximal_parity_settings(3).unwrap();
        let psi = settings.state().unwrap();
        let b = quantum_behavior(&psi, &settings.assignment()).unwrap();
        let t = correlators_from_behavior(&b).unwrap();
        let s = b.scenario();
        for x_idx in 0..s.num_inputs() {
            let x = s.input_digits(x_idx);
            let obs: Vec<Observable> = (0..3)
                .map(|j| Observable::equatorial(settings.angles[j][x[j]]))
                .collect();
            let direct = correlator(&psi, &obs).unwrap();
            let full = (1usize << 3) - 1;
            assert!((t.value(full, x_idx) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn settings_json_round_trip() {
        let (settings, _) = maximal_parity_settings(4).unwrap();
        let back = EquatorialSettings::from_json(&settings.to_json()).unwrap();
        assert_eq!(settings, back);
    }
}
