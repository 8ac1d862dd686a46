//! Dense statevector simulator and the swap-test circuits that mimic HOM
//! interference.
//!
//! Qubit `q` of an `n`-qubit register is bit `n - 1 - q` of the basis index,
//! so amplitudes follow the Kronecker order of [`PureState::tensor`]. Outcome
//! bit strings list the measured qubits in the order they were registered.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::qstate::{rotation_matrix, BlochAngles, Mat2, PauliAxis, PureState, Transform};
use crate::rng;
use crate::C64;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Ry { target: usize, theta: f64 },
    Rz { target: usize, phi: f64 },
    Cnot { control: usize, target: usize },
    Toffoli { controls: [usize; 2], target: usize },
    ControlledSwap { control: usize, a: usize, b: usize },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => vec![q],
            Gate::Ry { target, .. } | Gate::Rz { target, .. } => vec![target],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Toffoli { controls, target } => vec![controls[0], controls[1], target],
            Gate::ControlledSwap { control, a, b } => vec![control, a, b],
        }
    }

    fn validate(&self, num_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= num_qubits) {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits,
            });
        }
        for (i, a) in qs.iter().enumerate() {
            if qs[i + 1..].contains(a) {
                return Err(Error::InvalidCircuit(format!("{self:?} repeats qubit {a}")));
            }
        }
        Ok(())
    }

    fn single_qubit_matrix(&self) -> Option<(usize, Mat2)> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            Gate::H(q) => Some((q, Mat2::new(h.into(), h.into(), h.into(), (-h).into()))),
            Gate::X(q) => Some((q, PauliAxis::Axis2.matrix())),
            Gate::Y(q) => Some((q, PauliAxis::Axis3.matrix())),
            Gate::Z(q) => Some((q, PauliAxis::Axis1.matrix())),
            Gate::Ry { target, theta } => Some((target, rotation_matrix(PauliAxis::Axis3, theta))),
            Gate::Rz { target, phi } => Some((target, rotation_matrix(PauliAxis::Axis1, phi))),
            _ => None,
        }
    }

    /// Controlled-swap as CNOT · Toffoli · CNOT; every other gate maps to itself.
    pub fn decompose(&self) -> Vec<Gate> {
        match *self {
            Gate::ControlledSwap { control, a, b } => vec![
                Gate::Cnot {
                    control: b,
                    target: a,
                },
                Gate::Toffoli {
                    controls: [control, a],
                    target: b,
                },
                Gate::Cnot {
                    control: b,
                    target: a,
                },
            ],
            g => vec![g],
        }
    }
}

/// Gates realising `u` on qubit `q`.
pub fn transform_gates(u: &Transform, q: usize) -> Vec<Gate> {
    match *u {
        Transform::Identity => vec![],
        Transform::Pauli(PauliAxis::Axis1) => vec![Gate::Z(q)],
        Transform::Pauli(PauliAxis::Axis2) => vec![Gate::X(q)],
        Transform::Pauli(PauliAxis::Axis3) => vec![Gate::Y(q)],
        Transform::Rotation { axis, theta } => match axis {
            PauliAxis::Axis1 => vec![Gate::Rz { target: q, phi: theta }],
            PauliAxis::Axis2 => vec![Gate::H(q), Gate::Rz { target: q, phi: theta }, Gate::H(q)],
            PauliAxis::Axis3 => vec![Gate::Ry { target: q, theta }],
        },
        Transform::Euler { alpha, beta, gamma } => vec![
            Gate::Rz { target: q, phi: gamma },
            Gate::Ry { target: q, theta: beta },
            Gate::Rz { target: q, phi: alpha },
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    measured: Vec<usize>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::InvalidCircuit(format!(
                "{num_qubits} qubits (supported: 1..={MAX_QUBITS})"
            )));
        }
        Ok(Self {
            num_qubits,
            gates: Vec::new(),
            measured: Vec::new(),
        })
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<&mut Self> {
        for g in gates {
            self.push(g)?;
        }
        Ok(self)
    }

    pub fn measure(&mut self, qubits: &[usize]) -> Result<&mut Self> {
        for &q in qubits {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
            if self.measured.contains(&q) {
                return Err(Error::InvalidCircuit(format!("qubit {q} measured twice")));
            }
            self.measured.push(q);
        }
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn measured(&self) -> &[usize] {
        &self.measured
    }

    /// Applies every gate to `initial`.
    pub fn evolve(&self, initial: &PureState) -> Result<PureState> {
        if initial.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.num_qubits,
                got: initial.dim(),
            });
        }
        let mut amps = initial.amplitudes().to_vec();
        for gate in &self.gates {
            for g in gate.decompose() {
                apply_gate(&mut amps, self.num_qubits, &g);
            }
        }
        Ok(PureState::from_raw(amps))
    }
}

fn mask(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

fn apply_gate(amps: &mut [C64], n: usize, gate: &Gate) {
    if let Some((q, m)) = gate.single_qubit_matrix() {
        let bit = mask(n, q);
        for i in 0..amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a0, a1) = (amps[i], amps[j]);
                amps[i] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
                amps[j] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
            }
        }
        return;
    }
    let (controls, target) = match *gate {
        Gate::Cnot { control, target } => (mask(n, control), target),
        Gate::Toffoli { controls, target } => (mask(n, controls[0]) | mask(n, controls[1]), target),
        _ => unreachable!("composite gates are decomposed before application"),
    };
    let bit = mask(n, target);
    for i in 0..amps.len() {
        if i & controls == controls && i & bit == 0 {
            amps.swap(i, i | bit);
        }
    }
}

/// Measurement record: Born probabilities (`shots == 0`) or sampled counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutcomeDistribution {
    Exact(BTreeMap<String, f64>),
    Sampled {
        shots: u64,
        counts: BTreeMap<String, u64>,
    },
}

impl OutcomeDistribution {
    pub fn shots(&self) -> u64 {
        match self {
            Self::Exact(_) => 0,
            Self::Sampled { shots, .. } => *shots,
        }
    }

    /// Probability (exact) or relative frequency (sampled) of `bits`.
    pub fn frequency(&self, bits: &str) -> f64 {
        match self {
            Self::Exact(p) => p.get(bits).copied().unwrap_or(0.0),
            Self::Sampled { shots, counts } => {
                counts.get(bits).copied().unwrap_or(0) as f64 / (*shots).max(1) as f64
            }
        }
    }

    pub fn count(&self, bits: &str) -> Option<u64> {
        match self {
            Self::Exact(_) => None,
            Self::Sampled { counts, .. } => Some(counts.get(bits).copied().unwrap_or(0)),
        }
    }

    pub fn outcomes(&self) -> Vec<&str> {
        match self {
            Self::Exact(p) => p.keys().map(String::as_str).collect(),
            Self::Sampled { counts, .. } => counts.keys().map(String::as_str).collect(),
        }
    }
}

fn marginal(state: &PureState, measured: &[usize]) -> BTreeMap<String, f64> {
    let n = state.num_qubits();
    let mut out = BTreeMap::new();
    for (i, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p <= 1e-30 {
            continue;
        }
        let key: String = measured
            .iter()
            .map(|&q| if i & mask(n, q) != 0 { '1' } else { '0' })
            .collect();
        *out.entry(key).or_insert(0.0) += p;
    }
    out
}

/// Multinomial draw as a chain of conditional binomials, in key order.
fn sample_counts<R: Rng + ?Sized>(
    probs: &BTreeMap<String, f64>,
    shots: u64,
    rng: &mut R,
) -> BTreeMap<String, u64> {
    let mut remaining = shots;
    let mut mass: f64 = probs.values().sum();
    let mut counts = BTreeMap::new();
    let last = probs.len().saturating_sub(1);
    for (i, (key, &p)) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let k = if i == last {
            remaining
        } else {
            binomial(remaining, (p / mass).clamp(0.0, 1.0), rng)
        };
        if k > 0 {
            counts.insert(key.clone(), k);
        }
        remaining -= k;
        mass -= p;
    }
    counts
}

pub(crate) fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0))
        .expect("probability clamped to [0, 1]")
        .sample(rng)
}

/// Runs `circuit` on `initial`. With `shots == 0` the exact Born marginal of
/// the measured qubits is returned, otherwise `shots` i.i.d. outcomes drawn
/// with a generator seeded by `seed`.
pub fn run(
    circuit: &Circuit,
    initial: &PureState,
    shots: u64,
    seed: u64,
) -> Result<OutcomeDistribution> {
    run_with_rng(circuit, initial, shots, &mut rng::stream(seed, &[]))
}

pub fn run_with_rng<R: Rng + ?Sized>(
    circuit: &Circuit,
    initial: &PureState,
    shots: u64,
    rng: &mut R,
) -> Result<OutcomeDistribution> {
    if circuit.measured.is_empty() {
        return Err(Error::InvalidCircuit("no measured qubits".into()));
    }
    let state = circuit.evolve(initial)?;
    let probs = marginal(&state, &circuit.measured);
    if shots == 0 {
        return Ok(OutcomeDistribution::Exact(probs));
    }
    Ok(OutcomeDistribution::Sampled {
        shots,
        counts: sample_counts(&probs, shots, rng),
    })
}

/// A swap-test circuit together with the outcomes that play the role of a
/// HOM coincidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapTest {
    pub circuit: Circuit,
    pub coincidence_outcomes: Vec<String>,
}

impl SwapTest {
    pub fn is_coincidence(&self, bits: &str) -> bool {
        self.coincidence_outcomes.iter().any(|c| c == bits)
    }

    pub fn coincidence_probability(&self, dist: &OutcomeDistribution) -> f64 {
        self.coincidence_outcomes
            .iter()
            .map(|c| dist.frequency(c))
            .sum()
    }

    pub fn initial_state(&self) -> PureState {
        PureState::zero(self.circuit.num_qubits())
    }

    pub fn run(&self, shots: u64, seed: u64) -> Result<OutcomeDistribution> {
        run(&self.circuit, &self.initial_state(), shots, seed)
    }

    /// Exact coincidence probability.
    pub fn exact_coincidence(&self) -> Result<f64> {
        Ok(self.coincidence_probability(&self.run(0, 0)?))
    }

    /// Number of coincidences in `shots` sampled runs.
    pub fn sample_coincidences<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Result<u64> {
        let dist = run_with_rng(&self.circuit, &self.initial_state(), shots, rng)?;
        Ok(self
            .coincidence_outcomes
            .iter()
            .filter_map(|c| dist.count(c))
            .sum())
    }
}

fn swap_test_gates(ancilla: usize, a: usize, b: usize) -> [Gate; 3] {
    [
        Gate::H(ancilla),
        Gate::ControlledSwap {
            control: ancilla,
            a,
            b,
        },
        Gate::H(ancilla),
    ]
}

fn angle_prep(q: usize, angles: &BlochAngles) -> [Gate; 2] {
    [
        Gate::Ry {
            target: q,
            theta: angles.theta,
        },
        Gate::Rz {
            target: q,
            phi: angles.phi,
        },
    ]
}

fn frame_gates(frame: &[Transform], q: usize) -> Vec<Gate> {
    frame.iter().flat_map(|u| transform_gates(u, q)).collect()
}

/// Three-qubit swap test: `|ψ⟩` on A, `U|ψ⟩` on B, ancilla C measured.
/// Ancilla `1` is the coincidence outcome, with probability
/// `(1 - |⟨ψ|U|ψ⟩|²) / 2`.
pub fn build_swap_test_single(angles: BlochAngles, u: Transform) -> SwapTest {
    build_swap_test_single_framed(angles, &[], u)
}

/// As [`build_swap_test_single`], with `frame` applied to both inputs after
/// preparation and before `U`.
pub fn build_swap_test_single_framed(angles: BlochAngles, frame: &[Transform], u: Transform) -> SwapTest {
    let (a, b, anc) = (0, 1, 2);
    let mut c = Circuit::new(3).expect("3 qubits");
    let mut gates = Vec::new();
    for q in [a, b] {
        gates.extend(angle_prep(q, &angles));
        gates.extend(frame_gates(frame, q));
    }
    gates.extend(transform_gates(&u, b));
    gates.extend(swap_test_gates(anc, a, b));
    c.extend(gates).and_then(|c| c.measure(&[anc])).expect("valid layout");
    SwapTest {
        circuit: c,
        coincidence_outcomes: vec!["1".into()],
    }
}

/// `c0 |00⟩ + c1 |11⟩` on `(q0, q1)`.
fn schmidt_prep(q0: usize, q1: usize, c0: C64, c1: C64) -> [Gate; 3] {
    [
        Gate::Ry {
            target: q0,
            theta: 2.0 * c1.norm().atan2(c0.norm()),
        },
        Gate::Rz {
            target: q0,
            phi: c1.arg() - c0.arg(),
        },
        Gate::Cnot {
            control: q0,
            target: q1,
        },
    ]
}

fn check_normalized(name: &'static str, c: [C64; 2]) -> Result<()> {
    let n = c[0].norm_sqr() + c[1].norm_sqr();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::OutOfRange {
            name,
            value: n,
            range: "|c0|² + |c1|² = 1",
        });
    }
    Ok(())
}

const TWO_MODE: (usize, usize, usize, usize, usize, usize) = (0, 1, 2, 3, 4, 5);

fn two_mode_circuit(prep: Vec<Gate>) -> SwapTest {
    let (a_pol, a_bin, b_pol, b_bin, anc1, anc2) = TWO_MODE;
    let mut c = Circuit::new(6).expect("6 qubits");
    c.extend(prep)
        .and_then(|c| c.extend(swap_test_gates(anc1, a_pol, b_pol)))
        .and_then(|c| c.extend(swap_test_gates(anc2, a_bin, b_bin)))
        .and_then(|c| c.measure(&[anc1, anc2]))
        .expect("valid layout");
    SwapTest {
        circuit: c,
        coincidence_outcomes: vec!["01".into(), "10".into()],
    }
}

/// Six-qubit swap test for two-mode photons: A = `α0|00⟩ + α1|11⟩`,
/// B = `β0|00⟩ + β1|11⟩` (polarization, time bin). One ancilla per mode pair;
/// outcomes `01` and `10` are coincidences, with total probability
/// `|α0 β1 - α1 β0|² / 2` for real coefficients.
pub fn build_swap_test_two_mode(alpha: [C64; 2], beta: [C64; 2]) -> Result<SwapTest> {
    check_normalized("alpha", alpha)?;
    check_normalized("beta", beta)?;
    let (a_pol, a_bin, b_pol, b_bin, ..) = TWO_MODE;
    let mut prep = schmidt_prep(a_pol, a_bin, alpha[0], alpha[1]).to_vec();
    prep.extend(schmidt_prep(b_pol, b_bin, beta[0], beta[1]));
    Ok(two_mode_circuit(prep))
}

/// Two-mode swap test for an internally entangled source
/// `√p |φ⟩|t0⟩ + √(1-p) |φ⊥⟩|t1⟩` on both inputs, `U ⊗ I` on B.
pub fn build_swap_test_internal(
    p: f64,
    direction: BlochAngles,
    frame: &[Transform],
    u: Transform,
) -> Result<SwapTest> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let (a_pol, a_bin, b_pol, b_bin, ..) = TWO_MODE;
    let (c0, c1) = (C64::from(p.sqrt()), C64::from((1.0 - p).sqrt()));
    let mut prep = Vec::new();
    for (pol, bin) in [(a_pol, a_bin), (b_pol, b_bin)] {
        prep.extend(schmidt_prep(pol, bin, c0, c1));
        prep.extend(angle_prep(pol, &direction));
        prep.extend(frame_gates(frame, pol));
    }
    prep.extend(transform_gates(&u, b_pol));
    Ok(two_mode_circuit(prep))
}

/// Five-qubit swap test (A, B, env_A, env_B, ancilla) where each system qubit
/// is entangled with its own environment so that its reduced state is
/// `λ |φ⟩⟨φ| + (1-λ) |φ⊥⟩⟨φ⊥|`. Ancilla `1` is the coincidence outcome.
pub fn build_swap_test_external(lambda: f64, direction: BlochAngles, u: Transform) -> Result<SwapTest> {
    build_swap_test_external_framed(lambda, direction, &[], u)
}

pub fn build_swap_test_external_framed(
    lambda: f64,
    direction: BlochAngles,
    frame: &[Transform],
    u: Transform,
) -> Result<SwapTest> {
    check_range("lambda", lambda, 0.0, 1.0, "[0, 1]")?;
    let (a, b, env_a, env_b, anc) = (0, 1, 2, 3, 4);
    let env_angle = 2.0 * (1.0 - lambda).sqrt().asin();
    let mut gates = Vec::new();
    for (sys, env) in [(a, env_a), (b, env_b)] {
        gates.push(Gate::Ry {
            target: env,
            theta: env_angle,
        });
        gates.push(Gate::Cnot {
            control: env,
            target: sys,
        });
        gates.extend(angle_prep(sys, &direction));
        gates.extend(frame_gates(frame, sys));
    }
    gates.extend(transform_gates(&u, b));
    gates.extend(swap_test_gates(anc, a, b));
    let mut c = Circuit::new(5)?;
    c.extend(gates)?.measure(&[anc])?;
    Ok(SwapTest {
        circuit: c,
        coincidence_outcomes: vec!["1".into()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{partial_trace, state_from_angles, stokes_of, DensityMatrix, StokesVector};
    use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

    fn c(re: f64) -> C64 {
        C64::from(re)
    }

    #[test]
    fn empty_circuit_measures_ground_state() {
        let mut circ = Circuit::new(3).unwrap();
        circ.measure(&[0, 1, 2]).unwrap();
        let d = run(&circ, &PureState::zero(3), 0, 1).unwrap();
        assert_eq!(d, OutcomeDistribution::Exact([("000".to_string(), 1.0)].into()));
    }

    #[test]
    fn hadamard_is_fair_coin() {
        let mut circ = Circuit::new(1).unwrap();
        circ.push(Gate::H(0)).unwrap().measure(&[0]).unwrap();
        let d = run(&circ, &PureState::zero(1), 0, 1).unwrap();
        assert!((d.frequency("0") - 0.5).abs() < 1e-15);
        assert!((d.frequency("1") - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampled_mode_tracks_exact_mode() {
        let st = build_swap_test_single(BlochAngles::new(1.0, 0.4), Transform::Pauli(PauliAxis::Axis2));
        let exact = st.run(0, 0).unwrap();
        let shots = 1_000_000;
        let sampled = st.run(shots, 99).unwrap();
        assert_eq!(sampled.shots(), shots);
        for k in exact.outcomes() {
            let p = exact.frequency(k);
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            assert!((sampled.frequency(k) - p).abs() <= 5.0 * sigma, "{k}");
        }
        assert_eq!(st.run(shots, 99).unwrap(), sampled);
    }

    #[test]
    fn rejects_bad_circuits() {
        let mut circ = Circuit::new(2).unwrap();
        assert!(circ.push(Gate::Cnot { control: 1, target: 1 }).is_err());
        assert!(circ.push(Gate::H(2)).is_err());
        assert!(circ.measure(&[0, 0]).is_err());
        assert!(Circuit::new(13).is_err());
        let mut circ = Circuit::new(2).unwrap();
        circ.measure(&[0]).unwrap();
        assert!(matches!(
            run(&circ, &PureState::zero(3), 0, 0),
            Err(Error::DimensionMismatch { .. })
        ));
        let empty = Circuit::new(1).unwrap();
        assert!(run(&empty, &PureState::zero(1), 0, 0).is_err());
    }

    // Direct permutation: exchange bits a and b where the control bit is set.
    fn fredkin_oracle(amps: &[C64], n: usize, ctl: usize, a: usize, b: usize) -> Vec<C64> {
        let bit = |i: usize, q: usize| (i >> (n - 1 - q)) & 1;
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        for (i, amp) in amps.iter().enumerate() {
            let mut j = i;
            if bit(i, ctl) == 1 && bit(i, a) != bit(i, b) {
                j ^= (1 << (n - 1 - a)) | (1 << (n - 1 - b));
            }
            out[j] = *amp;
        }
        out
    }

    #[test]
    fn controlled_swap_decomposition_is_a_fredkin_gate() {
        let amps: Vec<C64> = (0..16)
            .map(|k| C64::new((k as f64 * 0.3).cos(), (k as f64 * 0.7).sin()))
            .collect();
        let psi = PureState::normalized(amps).unwrap();
        let mut circ = Circuit::new(4).unwrap();
        circ.push(Gate::ControlledSwap { control: 3, a: 0, b: 2 }).unwrap();
        let got = circ.evolve(&psi).unwrap();
        let want = fredkin_oracle(psi.amplitudes(), 4, 3, 0, 2);
        for (g, w) in got.amplitudes().iter().zip(&want) {
            assert!((g - w).norm() < 1e-15);
        }
    }

    #[test]
    fn every_gate_is_unitary() {
        let gates = [
            Gate::H(0),
            Gate::Y(1),
            Gate::Ry { target: 2, theta: 0.7 },
            Gate::Rz { target: 0, phi: -1.3 },
            Gate::Cnot { control: 2, target: 0 },
            Gate::Toffoli { controls: [0, 2], target: 1 },
            Gate::ControlledSwap { control: 1, a: 2, b: 0 },
        ];
        for g in gates {
            let mut circ = Circuit::new(3).unwrap();
            circ.push(g).unwrap();
            let cols: Vec<PureState> = (0..8)
                .map(|k| circ.evolve(&PureState::basis(3, k)).unwrap())
                .collect();
            for i in 0..8 {
                for j in 0..8 {
                    let ip = cols[i].inner(&cols[j]).unwrap();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - c(want)).norm() < 1e-12, "{g:?}");
                }
            }
        }
    }

    #[test]
    fn transform_gates_realise_transform_matrices() {
        let transforms = [
            Transform::Identity,
            Transform::Pauli(PauliAxis::Axis1),
            Transform::Pauli(PauliAxis::Axis2),
            Transform::Pauli(PauliAxis::Axis3),
            Transform::Rotation { axis: PauliAxis::Axis2, theta: 0.9 },
            Transform::Rotation { axis: PauliAxis::Axis1, theta: -0.4 },
            Transform::Rotation { axis: PauliAxis::Axis3, theta: 2.2 },
            Transform::Euler { alpha: 0.3, beta: 1.1, gamma: -2.0 },
        ];
        let psi = state_from_angles(1.3, 0.2);
        for u in transforms {
            let mut circ = Circuit::new(1).unwrap();
            circ.extend(transform_gates(&u, 0)).unwrap();
            let got = circ.evolve(&psi).unwrap();
            let want = psi.apply(&u.matrix()).unwrap();
            // equal up to global phase
            assert!((got.inner(&want).unwrap().norm() - 1.0).abs() < 1e-12, "{u:?}");
        }
    }

    #[test]
    fn single_swap_test_examples() {
        let any = BlochAngles::new(0.8, 2.5);
        assert!(build_swap_test_single(any, Transform::Identity).exact_coincidence().unwrap() < 1e-15);

        let ground = BlochAngles::new(0.0, 0.0);
        let p = build_swap_test_single(ground, Transform::Pauli(PauliAxis::Axis2))
            .exact_coincidence()
            .unwrap();
        assert!((p - 0.5).abs() < 1e-12);

        // s = (0.6, 0.64, -0.48)
        let s = StokesVector::new(0.6, 0.64, -0.48);
        let angles = BlochAngles::from_stokes(&s);
        let p = build_swap_test_single(angles, Transform::Pauli(PauliAxis::Axis1))
            .exact_coincidence()
            .unwrap();
        assert!((p - (1.0 - 0.36) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_swap_test_matches_overlap_for_random_pairs() {
        let mut rng = rng::stream(5, &[]);
        for _ in 0..200 {
            let angles = BlochAngles::new(rng.random_range(0.0..PI), rng.random_range(0.0..TAU));
            let u = Transform::Euler {
                alpha: rng.random_range(-PI..PI),
                beta: rng.random_range(0.0..PI),
                gamma: rng.random_range(-PI..PI),
            };
            let psi = state_from_angles(angles.theta, angles.phi);
            let overlap = psi.inner(&psi.apply(&u.matrix()).unwrap()).unwrap().norm_sqr();
            let p = build_swap_test_single(angles, u).exact_coincidence().unwrap();
            assert!((p - (1.0 - overlap) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_mode_examples() {
        let h = FRAC_1_SQRT_2;
        let a = [c(0.6), C64::new(0.0, 0.8)];
        let p = build_swap_test_two_mode(a, a).unwrap().exact_coincidence().unwrap();
        assert!(p.abs() < 1e-12);

        let p = build_swap_test_two_mode([c(1.0), c(0.0)], [c(0.0), c(1.0)])
            .unwrap()
            .exact_coincidence()
            .unwrap();
        assert!((p - 0.5).abs() < 1e-12);

        let alpha = [c(0.8f64.sqrt()), c(0.2f64.sqrt())];
        let beta = [c(h), c(h)];
        let closed = 0.5 * (alpha[0] * beta[1] - alpha[1] * beta[0]).norm_sqr();
        assert!((closed - 0.05).abs() < 1e-12);
        let p = build_swap_test_two_mode(alpha, beta).unwrap().exact_coincidence().unwrap();
        assert!((p - closed).abs() < 1e-12);

        assert!(build_swap_test_two_mode([c(1.0), c(1.0)], beta).is_err());
    }

    #[test]
    fn external_examples() {
        let dir = BlochAngles::new(1.2, 0.3);
        let p = build_swap_test_external(1.0, dir, Transform::Identity)
            .unwrap()
            .exact_coincidence()
            .unwrap();
        assert!(p.abs() < 1e-12);
        let p = build_swap_test_external(0.5, dir, Transform::Identity)
            .unwrap()
            .exact_coincidence()
            .unwrap();
        assert!((p - 0.25).abs() < 1e-12);

        for axis in PauliAxis::ALL {
            let dir = BlochAngles::new(0.9, 2.0);
            let s = dir.stokes().component(axis);
            let lam: f64 = 0.8;
            let oracle = (1.0 - s * s * (2.0 * lam - 1.0).powi(2)) / 2.0 - lam * (1.0 - lam);
            let p = build_swap_test_external(lam, dir, Transform::Pauli(axis))
                .unwrap()
                .exact_coincidence()
                .unwrap();
            assert!((p - oracle).abs() < 1e-12, "{axis:?}");
        }
        assert!(build_swap_test_external(1.5, dir, Transform::Identity).is_err());
    }

    #[test]
    fn external_preparation_yields_requested_reduced_state() {
        let dir = BlochAngles::new(2.0, 5.0);
        let lam = 0.7;
        let st = build_swap_test_external(lam, dir, Transform::Identity).unwrap();
        let state = st.circuit.evolve(&st.initial_state()).unwrap();
        let s = stokes_of(&state, 0).unwrap();
        let want = dir.stokes().scaled(2.0 * lam - 1.0);
        assert!((s.norm() - want.norm()).abs() < 1e-12);
        for (g, w) in s.to_array().iter().zip(want.to_array()) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn external_identity_is_determinant_for_random_inputs() {
        let mut rng = rng::stream(11, &[]);
        for _ in 0..200 {
            let lam = rng.random_range(0.0..1.0);
            let dir = BlochAngles::new(rng.random_range(0.0..PI), rng.random_range(0.0..TAU));
            let rho = DensityMatrix::from_stokes(&dir.stokes().scaled(2.0 * lam - 1.0));
            let p = build_swap_test_external(lam, dir, Transform::Identity)
                .unwrap()
                .exact_coincidence()
                .unwrap();
            assert!((p - rho.determinant()).abs() < 1e-12);
            let s2 = dir.stokes().scaled(2.0 * lam - 1.0).norm().powi(2);
            assert!((p - 0.25 * (1.0 - s2)).abs() < 1e-12);
        }
    }

    #[test]
    fn internal_preparation_reduces_to_partially_polarized_light() {
        let dir = BlochAngles::new(0.7, 1.9);
        let st = build_swap_test_internal(0.85, dir, &[], Transform::Identity).unwrap();
        let state = st.circuit.evolve(&st.initial_state()).unwrap();
        let rho = partial_trace(&state, &[0]).unwrap();
        let want = dir.stokes().scaled(0.7);
        let s = stokes_of(&rho, 0).unwrap();
        for (g, w) in s.to_array().iter().zip(want.to_array()) {
            assert!((g - w).abs() < 1e-12);
        }
        assert!(st.exact_coincidence().unwrap().abs() < 1e-12);
    }

    #[test]
    fn sampled_coincidences_converge_over_a_sweep() {
        let mut rng = rng::stream(3, &[]);
        let shots = 2_000u64;
        let mut inside = 0;
        let cases = 1000;
        for k in 0..cases {
            let angles = BlochAngles::new(rng.random_range(0.0..PI), rng.random_range(0.0..TAU));
            let u = Transform::Pauli(PauliAxis::from_index(k % 3).unwrap());
            let st = build_swap_test_single(angles, u);
            let p = st.exact_coincidence().unwrap();
            let hits = st.sample_coincidences(shots, &mut rng).unwrap();
            let err = (hits as f64 / shots as f64 - p).abs();
            if err <= 5.0 * (p * (1.0 - p) / shots as f64).sqrt() + 1e-12 {
                inside += 1;
            }
        }
        assert!(inside as f64 >= 0.99 * cases as f64, "{inside}/{cases}");
    }

    #[test]
    fn same_seed_same_counts() {
        let st = build_swap_test_external(0.6, BlochAngles::new(1.0, 1.0), Transform::Pauli(PauliAxis::Axis3)).unwrap();
        assert_eq!(st.run(5000, 42).unwrap(), st.run(5000, 42).unwrap());
        assert_ne!(st.run(5000, 42).unwrap(), st.run(5000, 43).unwrap());
    }
}
