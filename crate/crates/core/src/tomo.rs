//! Polarization tomography from HOM coincidences.
//!
//! Four coincidence settings (`U = I, σ1, σ2, σ3`) give the Stokes magnitudes
//! and the purity. Two rotated settings fix the relative signs `s2·s3` and
//! `s1·s3`, and the single-count ratio behind a polarization-dependent loss
//! fixes the sign of `s1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boson::{self, InternalSpace, PhotonState};
use crate::circuit::{self, binomial};
use crate::error::{check_range, Error, Result};
use crate::hom::{self, SourceModel};
use crate::qstate::{DensityMatrix, PauliAxis, PureState, StokesVector, Transform};
use crate::rng;
use crate::C64;

/// Magnitudes below this carry no usable sign information.
pub const DEGENERATE_TOL: f64 = 0.02;
const WARN_NEGATIVE: f64 = -0.05;
const EXACT_CLASSIFY_TOL: f64 = 1e-9;
const EXACT_SIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceSet {
    pub p_identity: f64,
    pub p_axis: [f64; 3],
    /// 0 for exact probabilities.
    pub shots_per_setting: u64,
}

impl CoincidenceSet {
    /// Exact coincidences of a source.
    pub fn exact(source: &SourceModel) -> Self {
        Self {
            p_identity: hom::coincidence_identity(source),
            p_axis: PauliAxis::ALL.map(|a| hom::coincidence_pauli(source, a)),
            shots_per_setting: 0,
        }
    }

    /// Coincidences two copies of `rho` would produce, `(1 - tr(ρ U ρ U†)) / 2`.
    pub fn implied_by(rho: &DensityMatrix, shots_per_setting: u64) -> Result<Self> {
        let p = |u: &Transform| -> Result<f64> {
            let urho = rho.conjugate(&u.matrix())?;
            Ok((1.0 - rho.overlap(&urho)?) / 2.0)
        };
        Ok(Self {
            p_identity: p(&Transform::Identity)?,
            p_axis: [
                p(&Transform::Pauli(PauliAxis::Axis1))?,
                p(&Transform::Pauli(PauliAxis::Axis2))?,
                p(&Transform::Pauli(PauliAxis::Axis3))?,
            ],
            shots_per_setting,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub eta0: f64,
    pub eta1: f64,
    pub eta_h: f64,
    pub eta_v: f64,
    /// Photon pairs spent on the single-count step.
    pub pairs_n: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            eta0: 1.0,
            eta1: 1.0,
            eta_h: 0.9,
            eta_v: 0.7,
            pairs_n: 1_000_000,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("eta0", self.eta0, 0.0, 1.0, "[0, 1]")?;
        check_range("eta1", self.eta1, 0.0, 1.0, "[0, 1]")?;
        check_range("eta_h", self.eta_h, 0.0, 1.0, "[0, 1]")?;
        check_range("eta_v", self.eta_v, 0.0, 1.0, "[0, 1]")?;
        if self.eta_h == self.eta_v {
            return Err(Error::Config("eta_h and eta_v must differ".into()));
        }
        if self.pairs_n == 0 {
            return Err(Error::Config("pairs_n must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    PureInternal,
    ExternalOrMixture,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::PureInternal => "PureInternal",
            Classification::ExternalOrMixture => "ExternalOrMixture",
        })
    }
}

/// How well the sign of one Stokes component is determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignStatus {
    Determined,
    /// The component is below the degeneracy threshold; its sign is moot.
    Irrelevant,
    /// The component is not small but the data that fix its sign are.
    LowConfidence,
}

/// `|s_j| = √max(0, 1 - 2(p_j + p_I))`. The flag is raised when a
/// pre-clamp value falls below -0.05.
pub fn estimate_abs_stokes(c: &CoincidenceSet) -> ([f64; 3], bool) {
    let mut warn = false;
    let abs = c.p_axis.map(|p| {
        let x = 1.0 - 2.0 * (p + c.p_identity);
        warn |= x < WARN_NEGATIVE;
        x.max(0.0).sqrt().min(1.0)
    });
    (abs, warn)
}

pub fn estimate_dop(abs: &[f64; 3]) -> f64 {
    abs.iter().map(|x| x * x).sum::<f64>().sqrt().clamp(0.0, 1.0)
}

pub fn classify(p_identity: f64, shots: u64) -> Classification {
    let tol = if shots == 0 {
        EXACT_CLASSIFY_TOL
    } else {
        let p = p_identity.clamp(0.0, 1.0);
        EXACT_CLASSIFY_TOL.max(3.0 * (p * (1.0 - p) / shots as f64).sqrt())
    };
    if p_identity <= tol {
        Classification::PureInternal
    } else {
        Classification::ExternalOrMixture
    }
}

/// Rotation used to separate the two sign hypotheses of a pair of components
/// whose magnitudes subtend `xi`.
pub fn rotation_angle(xi: f64) -> Result<f64> {
    check_range("xi", xi, 0.0, std::f64::consts::FRAC_PI_2, "[0, π/2]")?;
    Ok(if xi < std::f64::consts::FRAC_PI_4 {
        std::f64::consts::FRAC_PI_4 - xi / 2.0
    } else {
        -xi / 2.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignDecision {
    /// +1 if `s_a` and `s_b` share a sign.
    pub sign: i8,
    pub predicted_same: f64,
    pub predicted_opposite: f64,
    pub confident: bool,
}

/// Decides `sign(s_a s_b)` from `|s_a'|` measured after rotating the pair by
/// `theta` (`s_a' = s_a cos θ - s_b sin θ`). Predictions closer than `tol`
/// are reported as not confident.
pub fn sign_product(pre_abs: (f64, f64), post_abs_a: f64, theta: f64, tol: f64) -> SignDecision {
    let (a, b) = pre_abs;
    let (c, s) = (theta.cos(), theta.sin());
    let same = (a * c - b * s).abs();
    let opposite = (a * c + b * s).abs();
    let sign = if (post_abs_a - same).abs() <= (post_abs_a - opposite).abs() {
        1
    } else {
        -1
    };
    SignDecision {
        sign,
        predicted_same: same,
        predicted_opposite: opposite,
        confident: (same - opposite).abs() > tol
            && a >= DEGENERATE_TOL
            && b >= DEGENERATE_TOL,
    }
}

/// `η_H ρ_HH + η_V ρ_VV`.
pub fn pdl_transmission(rho: &DensityMatrix, det: &DetectorConfig) -> f64 {
    det.eta_h * rho.get(0, 0).re + det.eta_v * rho.get(1, 1).re
}

/// Single counts in detectors 0 (behind the PDL) and 1, and coincidences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountTriple {
    pub c0: f64,
    pub c1: f64,
    pub c01: f64,
}

fn click(eta: f64) -> f64 {
    1.0 - (1.0 - eta).powi(2)
}

/// Expected counts for `pairs_n` pairs, or binomial draws around them when
/// `rng` is given.
pub fn simulate_counts<R: Rng + ?Sized>(
    p_coinc: f64,
    eta_pdl: f64,
    det: &DetectorConfig,
    rng: Option<&mut R>,
) -> Result<CountTriple> {
    det.validate()?;
    check_range("p_coinc", p_coinc, 0.0, 1.0, "[0, 1]")?;
    check_range("eta_pdl", eta_pdl, 0.0, 1.0, "[0, 1]")?;
    let n = det.pairs_n;
    let q0 = 0.5 * click(det.eta0) * eta_pdl;
    let q1 = 0.5 * click(det.eta1);
    let q01 = p_coinc * det.eta0 * det.eta1 * eta_pdl;
    Ok(match rng {
        None => CountTriple {
            c0: n as f64 * q0,
            c1: n as f64 * q1,
            c01: n as f64 * q01,
        },
        Some(rng) => CountTriple {
            c0: binomial(n, q0, rng) as f64,
            c1: binomial(n, q1, rng) as f64,
            c01: binomial(n, q01, rng) as f64,
        },
    })
}

/// Estimated PDL transmission from the single-count ratio.
pub fn pdl_estimate(c0: f64, c1: f64, det: &DetectorConfig) -> Result<f64> {
    if c1 <= 0.0 {
        return Err(Error::OutOfRange {
            name: "c1",
            value: c1,
            range: "(0, inf)",
        });
    }
    if click(det.eta0) <= 0.0 {
        return Err(Error::OutOfRange {
            name: "eta0",
            value: det.eta0,
            range: "(0, 1]",
        });
    }
    Ok(c0 / c1 * click(det.eta1) / click(det.eta0))
}

/// +1 when the estimated transmission sits on the `η_H` side of the midpoint.
pub fn sign_s1(c0: f64, c1: f64, det: &DetectorConfig) -> Result<i8> {
    let eta = pdl_estimate(c0, c1, det)?;
    let mid = (det.eta_h + det.eta_v) / 2.0;
    let toward_h = if det.eta_h > det.eta_v {
        eta >= mid
    } else {
        eta <= mid
    };
    Ok(if toward_h { 1 } else { -1 })
}

/// How coincidence probabilities are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Closed-form expressions.
    #[default]
    Analytic,
    /// State-vector simulation of the swap-test circuits.
    Circuit,
    /// Second-quantized beamsplitter simulation.
    Boson,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Analytic => "analytic",
            Backend::Circuit => "circuit",
            Backend::Boson => "boson",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(Backend::Analytic),
            "circuit" => Ok(Backend::Circuit),
            "boson" => Ok(Backend::Boson),
            other => Err(Error::Config(format!("unknown backend '{other}'"))),
        }
    }
}

fn framed_direction(source: &SourceModel, frame: &[Transform]) -> Result<PureState> {
    frame
        .iter()
        .try_fold(source.direction_state(), |psi, u| psi.apply(&u.matrix()))
}

fn polarization_photon(psi: &PureState) -> Result<PhotonState> {
    let a = psi.amplitudes();
    PhotonState::polarization(a[0], a[1])
}

fn boson_coincidence(source: &SourceModel, frame: &[Transform], u: &Transform) -> Result<f64> {
    let phi = framed_direction(source, frame)?;
    let perp = phi.orthogonal()?;
    match *source {
        SourceModel::PurePolarized { .. } => {
            let ph = polarization_photon(&phi)?;
            let u = InternalSpace::Polarization.lift(&u.matrix());
            boson::hom_coincidence(&ph, &ph, &u)
        }
        SourceModel::InternalEntangled { p, .. } => {
            let (x, y) = (C64::from(p.sqrt()), C64::from((1.0 - p).sqrt()));
            let (f, g) = (phi.amplitudes(), perp.amplitudes());
            let ph = PhotonState::new(
                InternalSpace::PolarizationTimeBin,
                vec![x * f[0], y * g[0], x * f[1], y * g[1]],
            )?;
            let u = InternalSpace::PolarizationTimeBin.lift(&u.matrix());
            boson::hom_coincidence(&ph, &ph, &u)
        }
        SourceModel::ExternallyMixed { lambda, .. } => {
            // two independent copies of λ|φ⟩⟨φ| + (1-λ)|φ⊥⟩⟨φ⊥|
            let comps = [(lambda, polarization_photon(&phi)?), (1.0 - lambda, polarization_photon(&perp)?)];
            let u = InternalSpace::Polarization.lift(&u.matrix());
            let mut total = 0.0;
            for (wa, a) in &comps {
                for (wb, b) in &comps {
                    if wa * wb > 0.0 {
                        total += wa * wb * boson::hom_coincidence(a, b, &u)?;
                    }
                }
            }
            Ok(total)
        }
    }
}

fn swap_test(source: &SourceModel, frame: &[Transform], u: &Transform) -> Result<circuit::SwapTest> {
    let angles = source.angles();
    match *source {
        SourceModel::PurePolarized { .. } => {
            Ok(circuit::build_swap_test_single_framed(angles, frame, *u))
        }
        SourceModel::InternalEntangled { p, .. } => {
            circuit::build_swap_test_internal(p, angles, frame, *u)
        }
        SourceModel::ExternallyMixed { lambda, .. } => {
            circuit::build_swap_test_external_framed(lambda, angles, frame, *u)
        }
    }
}

impl Backend {
    /// Exact coincidence probability with `frame` applied to both photons and
    /// `u` to the second one.
    pub fn coincidence(&self, source: &SourceModel, frame: &[Transform], u: &Transform) -> Result<f64> {
        source.validate()?;
        match self {
            Backend::Analytic => Ok(hom::coincidence_unitary(&source.transformed_by_all(frame), u)),
            Backend::Circuit => swap_test(source, frame, u)?.exact_coincidence(),
            Backend::Boson => boson_coincidence(source, frame, u),
        }
    }

    /// Estimated coincidence probability; exact when `shots == 0`.
    pub fn estimate<R: Rng + ?Sized>(
        &self,
        source: &SourceModel,
        frame: &[Transform],
        u: &Transform,
        shots: u64,
        rng: &mut R,
    ) -> Result<f64> {
        if shots == 0 {
            return self.coincidence(source, frame, u);
        }
        let k = match self {
            Backend::Circuit => swap_test(source, frame, u)?.sample_coincidences(shots, rng)?,
            _ => binomial(shots, self.coincidence(source, frame, u)?, rng),
        };
        Ok(k as f64 / shots as f64)
    }
}

// stream indices for the measurement settings of one tomography run
const STREAM_IDENTITY: u64 = 0;
const STREAM_AXIS: [u64; 3] = [1, 2, 3];
const STREAM_ROTATED: [u64; 2] = [4, 5];
const STREAM_COUNTS: u64 = 6;

/// The four base settings `U = I, σ1, σ2, σ3`.
pub fn measure_coincidences(
    backend: Backend,
    source: &SourceModel,
    shots: u64,
    seed: u64,
) -> Result<CoincidenceSet> {
    let est = |u: Transform, stream: u64| {
        backend.estimate(source, &[], &u, shots, &mut rng::stream(seed, &[stream]))
    };
    Ok(CoincidenceSet {
        p_identity: est(Transform::Identity, STREAM_IDENTITY)?,
        p_axis: [
            est(Transform::Pauli(PauliAxis::Axis1), STREAM_AXIS[0])?,
            est(Transform::Pauli(PauliAxis::Axis2), STREAM_AXIS[1])?,
            est(Transform::Pauli(PauliAxis::Axis3), STREAM_AXIS[2])?,
        ],
        shots_per_setting: shots,
    })
}

/// One rotated setting: both photons rotated about `axis` by `theta`, then
/// `|s_measured|` re-estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationStep {
    pub axis: PauliAxis,
    pub measured: PauliAxis,
    pub xi: f64,
    pub theta: f64,
    pub p_axis: f64,
    pub measured_abs: f64,
    pub decision: SignDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesRecord {
    pub backend: Backend,
    pub s: StokesVector,
    pub abs_stokes: [f64; 3],
    pub dop: f64,
    /// `1 - 2 p_I`, the purity of the photon's full state.
    pub global_purity: f64,
    pub classification: Classification,
    pub sign_confidence: [SignStatus; 3],
    pub global_sign_ambiguous: bool,
    pub estimator_warning: bool,
    pub coincidences: CoincidenceSet,
    pub rotations: [RotationStep; 2],
    pub counts: CountTriple,
    pub eta_pdl_estimate: f64,
}

impl StokesRecord {
    /// Whether any nonzero component has an undetermined sign.
    pub fn has_sign_warning(&self) -> bool {
        self.global_sign_ambiguous
            || self.sign_confidence.contains(&SignStatus::LowConfidence)
    }
}

fn rotation_step(
    backend: Backend,
    source: &SourceModel,
    base: &CoincidenceSet,
    abs: &[f64; 3],
    axis: PauliAxis,
    measured: PauliAxis,
    other: PauliAxis,
    seed: u64,
    stream: u64,
) -> Result<RotationStep> {
    let (a, b) = (abs[measured.index()], abs[other.index()]);
    // for the first step the pair is (s2, s3) with ξ measured from s2, for
    // the second (s3, s1) with ξ measured from s1
    let xi = match axis {
        PauliAxis::Axis2 => a.atan2(b),
        _ => b.atan2(a),
    }
    .clamp(0.0, std::f64::consts::FRAC_PI_2);
    let theta = rotation_angle(xi)?;
    let shots = base.shots_per_setting;
    let frame = [Transform::Rotation { axis, theta }];
    let p_axis = backend.estimate(
        source,
        &frame,
        &Transform::Pauli(measured),
        shots,
        &mut rng::stream(seed, &[stream]),
    )?;
    let measured_abs = (1.0 - 2.0 * (p_axis + base.p_identity)).max(0.0).sqrt();
    let tol = if shots == 0 {
        EXACT_SIGN_TOL
    } else {
        2.0 / (shots as f64).sqrt()
    };
    Ok(RotationStep {
        axis,
        measured,
        xi,
        theta,
        p_axis,
        measured_abs,
        decision: sign_product((a, b), measured_abs, theta, tol),
    })
}

/// Runs the complete protocol: four base settings, two rotated settings and
/// the single-count step. `shots == 0` gives exact probabilities and exact
/// count expectations.
pub fn full_tomography(
    backend: Backend,
    source: &SourceModel,
    shots: u64,
    det: &DetectorConfig,
    seed: u64,
) -> Result<StokesRecord> {
    source.validate()?;
    det.validate()?;
    let base = measure_coincidences(backend, source, shots, seed)?;
    let (abs, estimator_warning) = estimate_abs_stokes(&base);
    let global_purity = (1.0 - 2.0 * base.p_identity).clamp(0.0, 1.0);
    let classification = classify(base.p_identity, shots);

    use PauliAxis::*;
    let r1 = rotation_step(backend, source, &base, &abs, Axis1, Axis2, Axis3, seed, STREAM_ROTATED[0])?;
    let r2 = rotation_step(backend, source, &base, &abs, Axis2, Axis3, Axis1, seed, STREAM_ROTATED[1])?;

    let eta_pdl = pdl_transmission(&source.polarization_state(), det);
    let p_coinc = base.p_axis[0];
    let counts = if shots == 0 {
        simulate_counts::<rng::StreamRng>(p_coinc, eta_pdl, det, None)?
    } else {
        simulate_counts(p_coinc, eta_pdl, det, Some(&mut rng::stream(seed, &[STREAM_COUNTS])))?
    };
    let eta_pdl_estimate = pdl_estimate(counts.c0, counts.c1, det)?;
    let sign1 = sign_s1(counts.c0, counts.c1, det)?;
    let sign3 = sign1 * r2.decision.sign;
    let sign2 = sign3 * r1.decision.sign;

    let small = abs.map(|x| x < DEGENERATE_TOL);
    let status3 = if small[2] {
        SignStatus::Irrelevant
    } else if small[0] || !r2.decision.confident {
        SignStatus::LowConfidence
    } else {
        SignStatus::Determined
    };
    let status2 = if small[1] {
        SignStatus::Irrelevant
    } else if small[2] || status3 == SignStatus::LowConfidence || !r1.decision.confident {
        SignStatus::LowConfidence
    } else {
        SignStatus::Determined
    };
    let status1 = if small[0] {
        SignStatus::Irrelevant
    } else {
        SignStatus::Determined
    };
    let global_sign_ambiguous = small[0] && !(small[1] && small[2]);

    let mut s = StokesVector::new(
        f64::from(sign1) * abs[0],
        f64::from(sign2) * abs[1],
        f64::from(sign3) * abs[2],
    );
    let norm = s.norm();
    if norm > 1.0 {
        s = s.scaled(1.0 / norm);
    }
    Ok(StokesRecord {
        backend,
        s,
        abs_stokes: abs,
        dop: s.norm(),
        global_purity,
        classification,
        sign_confidence: [status1, status2, status3],
        global_sign_ambiguous,
        estimator_warning,
        coincidences: base,
        rotations: [r1, r2],
        counts,
        eta_pdl_estimate,
    })
}

/// Standard single-qubit tomography: `shots` projective measurements per
/// Pauli axis, linear inversion, then projection onto the Bloch ball.
/// `shots == 0` returns the exact reduced polarization state.
pub fn standard_qst(source: &SourceModel, shots: u64, seed: u64) -> Result<(DensityMatrix, StokesVector)> {
    source.validate()?;
    let truth = source.mean_stokes();
    let mut s = if shots == 0 {
        truth
    } else {
        let est = |axis: PauliAxis| {
            let p_plus = ((1.0 + truth.component(axis)) / 2.0).clamp(0.0, 1.0);
            let k = binomial(shots, p_plus, &mut rng::stream(seed, &[axis.index() as u64]));
            2.0 * k as f64 / shots as f64 - 1.0
        };
        StokesVector::new(est(PauliAxis::Axis1), est(PauliAxis::Axis2), est(PauliAxis::Axis3))
    };
    // the eigenvalues are (1 ± |s|)/2: clamping the negative one to zero and
    // renormalizing puts s on the sphere
    let n = s.norm();
    if n > 1.0 {
        s = s.scaled(1.0 / n);
    }
    Ok((DensityMatrix::from_stokes(&s), s))
}

/// `Σ_j ((1 - ⟨s_j⟩²)/2 - p_I - p_j)²` against the theory source.
pub fn error_epsilon(theory: &SourceModel, measured: &CoincidenceSet) -> f64 {
    let s = theory.mean_stokes().to_array();
    (0..3)
        .map(|j| ((1.0 - s[j] * s[j]) / 2.0 - measured.p_identity - measured.p_axis[j]).powi(2))
        .sum()
}
