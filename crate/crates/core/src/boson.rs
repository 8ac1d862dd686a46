//! Second-quantized two-photon interference.
//!
//! A two-photon state is stored as amplitudes over unordered pairs of mode
//! labels, one entry per pair, so exchange symmetry holds by construction.
//! An entry `c` for a pair of distinct modes stands for `c · a† b† |0⟩`; for a
//! doubly occupied mode it stands for `c · (a†)² / √2 |0⟩`. With that
//! normalization `Σ |c|²` is the total probability.
//!
//! Linear mode transformations (polarization optics, the beamsplitter) are
//! applied to the symmetric coefficient matrix `G` of
//! `Σ_{k,l} G_kl k† l† |0⟩` as `G → M G Mᵀ`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{unitarity_deviation, Mat2};
use crate::C64;

const NORM_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-12;
const DROP_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Port {
    Zero,
    One,
}

impl Port {
    fn index(self) -> usize {
        match self {
            Port::Zero => 0,
            Port::One => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TimeBin {
    T0,
    T1,
}

/// Internal (non-spatial) label of a photon mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InternalLabel {
    pub pol: Polarization,
    pub bin: Option<TimeBin>,
}

impl InternalLabel {
    pub const fn pol(pol: Polarization) -> Self {
        Self { pol, bin: None }
    }

    pub const fn pol_bin(pol: Polarization, bin: TimeBin) -> Self {
        Self { pol, bin: Some(bin) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    pub port: Port,
    pub internal: InternalLabel,
}

impl ModeLabel {
    pub const fn new(port: Port, internal: InternalLabel) -> Self {
        Self { port, internal }
    }
}

/// Internal label space: polarization alone or polarization × time bin.
/// Basis order is polarization-major, matching `U ⊗ I` Kronecker products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InternalSpace {
    Polarization,
    PolarizationTimeBin,
}

impl InternalSpace {
    pub fn dim(self) -> usize {
        self.labels().len()
    }

    pub fn labels(self) -> Vec<InternalLabel> {
        use Polarization::*;
        use TimeBin::*;
        match self {
            InternalSpace::Polarization => vec![InternalLabel::pol(H), InternalLabel::pol(V)],
            InternalSpace::PolarizationTimeBin => vec![
                InternalLabel::pol_bin(H, T0),
                InternalLabel::pol_bin(H, T1),
                InternalLabel::pol_bin(V, T0),
                InternalLabel::pol_bin(V, T1),
            ],
        }
    }

    fn index_of(self, label: &InternalLabel) -> Option<usize> {
        self.labels().iter().position(|l| l == label)
    }

    /// Embeds a polarization operator as `U ⊗ I`.
    pub fn lift(self, u: &Mat2) -> DMatrix<C64> {
        let u = DMatrix::from_fn(2, 2, |i, j| u[(i, j)]);
        match self {
            InternalSpace::Polarization => u,
            InternalSpace::PolarizationTimeBin => u.kronecker(&DMatrix::identity(2, 2)),
        }
    }
}

/// Internal state of one photon.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonState {
    space: InternalSpace,
    amplitudes: Vec<C64>,
}

impl PhotonState {
    pub fn new(space: InternalSpace, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: amplitudes.len(),
            });
        }
        let n: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn polarization(h: C64, v: C64) -> Result<Self> {
        Self::new(InternalSpace::Polarization, vec![h, v])
    }

    /// `α |H, t0⟩ + β |V, t1⟩`.
    pub fn time_bin_entangled(alpha: C64, beta: C64) -> Result<Self> {
        let z = C64::new(0.0, 0.0);
        Self::new(InternalSpace::PolarizationTimeBin, vec![alpha, z, z, beta])
    }

    pub fn space(&self) -> InternalSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PhotonState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn transformed(&self, u: &DMatrix<C64>) -> Result<Self> {
        check_unitary(self.space, u)?;
        let v = u * nalgebra::DVector::from_column_slice(&self.amplitudes);
        Ok(Self {
            space: self.space,
            amplitudes: v.iter().copied().collect(),
        })
    }
}

fn check_unitary(space: InternalSpace, u: &DMatrix<C64>) -> Result<()> {
    if u.nrows() != space.dim() || u.ncols() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: u.nrows(),
        });
    }
    let dev = unitarity_deviation(u);
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    space: InternalSpace,
    amplitudes: BTreeMap<(ModeLabel, ModeLabel), C64>,
}

fn ordered(a: ModeLabel, b: ModeLabel) -> (ModeLabel, ModeLabel) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TwoPhotonState {
    pub fn space(&self) -> InternalSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &BTreeMap<(ModeLabel, ModeLabel), C64> {
        &self.amplitudes
    }

    /// Amplitude of the (unordered) pair `{a, b}`.
    pub fn amplitude(&self, a: ModeLabel, b: ModeLabel) -> C64 {
        self.amplitudes
            .get(&ordered(a, b))
            .copied()
            .unwrap_or_default()
    }

    pub fn total_probability(&self) -> f64 {
        self.amplitudes.values().map(|c| c.norm_sqr()).sum()
    }

    fn modes(&self) -> Vec<ModeLabel> {
        [Port::Zero, Port::One]
            .into_iter()
            .flat_map(|p| self.space.labels().into_iter().map(move |l| ModeLabel::new(p, l)))
            .collect()
    }

    fn mode_index(&self, m: &ModeLabel) -> usize {
        m.port.index() * self.space.dim()
            + self.space.index_of(&m.internal).expect("label in space")
    }

    fn coefficient_matrix(&self) -> DMatrix<C64> {
        let n = 2 * self.space.dim();
        let mut g = DMatrix::<C64>::zeros(n, n);
        for (&(a, b), &c) in &self.amplitudes {
            let (i, j) = (self.mode_index(&a), self.mode_index(&b));
            if i == j {
                g[(i, i)] += c / 2f64.sqrt();
            } else {
                g[(i, j)] += c / 2.0;
                g[(j, i)] += c / 2.0;
            }
        }
        g
    }

    fn from_coefficient_matrix(space: InternalSpace, g: &DMatrix<C64>) -> Self {
        let mut out = Self {
            space,
            amplitudes: BTreeMap::new(),
        };
        let modes = out.modes();
        for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate().skip(i) {
                let c = if i == j {
                    g[(i, i)] * 2f64.sqrt()
                } else {
                    g[(i, j)] + g[(j, i)]
                };
                if c.norm() > DROP_TOL {
                    out.amplitudes.insert(ordered(*a, *b), c);
                }
            }
        }
        out
    }

    fn transform_modes(&self, m: &DMatrix<C64>) -> Self {
        let g = self.coefficient_matrix();
        Self::from_coefficient_matrix(self.space, &(m * g * m.transpose()))
    }
}

/// `a†(ψ_a) b†(ψ_b) |0⟩`: photon `psi_a` enters port 0, `psi_b` port 1.
pub fn inject(psi_a: &PhotonState, psi_b: &PhotonState) -> Result<TwoPhotonState> {
    if psi_a.space != psi_b.space {
        return Err(Error::DimensionMismatch {
            expected: psi_a.space.dim(),
            got: psi_b.space.dim(),
        });
    }
    let labels = psi_a.space.labels();
    let mut amplitudes = BTreeMap::new();
    for (la, ca) in labels.iter().zip(&psi_a.amplitudes) {
        for (lb, cb) in labels.iter().zip(&psi_b.amplitudes) {
            let c = ca * cb;
            if c.norm() > DROP_TOL {
                let key = ordered(ModeLabel::new(Port::Zero, *la), ModeLabel::new(Port::One, *lb));
                amplitudes.insert(key, c);
            }
        }
    }
    Ok(TwoPhotonState {
        space: psi_a.space,
        amplitudes,
    })
}

/// Applies `u` to the internal labels of modes in `port`, identity elsewhere.
pub fn apply_internal_unitary(
    state: &TwoPhotonState,
    port: Port,
    u: &DMatrix<C64>,
) -> Result<TwoPhotonState> {
    check_unitary(state.space, u)?;
    let d = state.space.dim();
    let mut m = DMatrix::<C64>::identity(2 * d, 2 * d);
    let off = port.index() * d;
    m.view_mut((off, off), (d, d)).copy_from(u);
    Ok(state.transform_modes(&m))
}

/// Symmetric beamsplitter: `a† → (a† + i b†)/√2`, `b† → (b† + i a†)/√2`,
/// internal labels untouched.
pub fn beamsplit(state: &TwoPhotonState) -> TwoPhotonState {
    let d = state.space.dim();
    let t = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    let r = C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let mut m = DMatrix::<C64>::zeros(2 * d, 2 * d);
    for k in 0..d {
        m[(k, k)] = t;
        m[(d + k, d + k)] = t;
        m[(d + k, k)] = r;
        m[(k, d + k)] = r;
    }
    state.transform_modes(&m)
}

/// Probability that the two photons leave through different ports.
pub fn coincidence_probability(state: &TwoPhotonState) -> f64 {
    state
        .amplitudes
        .iter()
        .filter(|((a, b), _)| a.port != b.port)
        .map(|(_, c)| c.norm_sqr())
        .sum()
}

/// Full HOM pipeline: inject, apply `u` on the port-1 photon, beamsplit,
/// read out coincidences.
pub fn hom_coincidence(psi_a: &PhotonState, psi_b: &PhotonState, u: &DMatrix<C64>) -> Result<f64> {
    let state = apply_internal_unitary(&inject(psi_a, psi_b)?, Port::One, u)?;
    Ok(coincidence_probability(&beamsplit(&state)))
}
