//! Few-qubit linear algebra: pure states, density matrices, Pauli operators,
//! Stokes vectors, partial traces and the usual scalar figures of merit.
//!
//! Axis convention: `s1 = ⟨Z⟩`, `s2 = ⟨X⟩`, `s3 = ⟨Y⟩`, with `|H⟩ = |0⟩` and
//! `|V⟩ = |1⟩`. Multi-qubit amplitudes use the textbook Kronecker order:
//! qubit 0 is the most significant bit of the basis index.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub type Mat2 = Matrix2<C64>;

const NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliAxis {
    Axis1,
    Axis2,
    Axis3,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::Axis1, PauliAxis::Axis2, PauliAxis::Axis3];

    pub fn index(self) -> usize {
        match self {
            PauliAxis::Axis1 => 0,
            PauliAxis::Axis2 => 1,
            PauliAxis::Axis3 => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// `σ1 = Z`, `σ2 = X`, `σ3 = Y`.
    pub fn matrix(self) -> Mat2 {
        match self {
            PauliAxis::Axis1 => Mat2::new(ONE, ZERO, ZERO, -ONE),
            PauliAxis::Axis2 => Mat2::new(ZERO, ONE, ONE, ZERO),
            PauliAxis::Axis3 => Mat2::new(ZERO, -I, I, ZERO),
        }
    }

    /// The two remaining axes in cyclic order. A positive rotation about
    /// `self` turns the first of them towards the second.
    pub fn plane(self) -> (PauliAxis, PauliAxis) {
        match self {
            PauliAxis::Axis1 => (PauliAxis::Axis2, PauliAxis::Axis3),
            PauliAxis::Axis2 => (PauliAxis::Axis3, PauliAxis::Axis1),
            PauliAxis::Axis3 => (PauliAxis::Axis1, PauliAxis::Axis2),
        }
    }
}

/// `exp(-i θ σ_axis / 2)`.
pub fn rotation_matrix(axis: PauliAxis, theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    Mat2::identity() * C64::from(c) - axis.matrix() * (I * s)
}

/// A single-qubit polarization transformation applied to one input photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    Pauli(PauliAxis),
    Rotation { axis: PauliAxis, theta: f64 },
    /// `R1(alpha) · R3(beta) · R1(gamma)`, i.e. `RZ · RY · RZ`.
    Euler { alpha: f64, beta: f64, gamma: f64 },
}

impl Transform {
    pub fn matrix(&self) -> Mat2 {
        match *self {
            Transform::Identity => Mat2::identity(),
            Transform::Pauli(axis) => axis.matrix(),
            Transform::Rotation { axis, theta } => rotation_matrix(axis, theta),
            Transform::Euler { alpha, beta, gamma } => {
                rotation_matrix(PauliAxis::Axis1, alpha)
                    * rotation_matrix(PauliAxis::Axis3, beta)
                    * rotation_matrix(PauliAxis::Axis1, gamma)
            }
        }
    }
}

/// Largest entry of `|U†U - 1|`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let prod = u.adjoint() * u;
    let id = DMatrix::<C64>::identity(u.nrows(), u.ncols());
    (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub const fn new(s1: f64, s2: f64, s3: f64) -> Self {
        Self { s1, s2, s3 }
    }

    pub fn from_array(s: [f64; 3]) -> Self {
        Self::new(s[0], s[1], s[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }

    pub fn component(&self, axis: PauliAxis) -> f64 {
        self.to_array()[axis.index()]
    }

    pub fn norm(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    pub fn scaled(self, k: f64) -> Self {
        Self::new(self.s1 * k, self.s2 * k, self.s3 * k)
    }

    pub fn is_physical(&self) -> bool {
        self.to_array().iter().all(|s| s.abs() <= 1.0 + 1e-9) && self.norm() <= 1.0 + 1e-9
    }
}

/// Polar angles of a point on the Poincaré sphere: `s = (cos θ, cos φ sin θ, sin φ sin θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    pub const fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn stokes(&self) -> StokesVector {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        StokesVector::new(ct, cp * st, sp * st)
    }

    /// Direction of `s`; the zero vector maps to `θ = 0`.
    pub fn from_stokes(s: &StokesVector) -> Self {
        let n = s.norm();
        if n == 0.0 {
            return Self::new(0.0, 0.0);
        }
        let theta = (s.s1 / n).clamp(-1.0, 1.0).acos();
        let phi = s.s3.atan2(s.s2).rem_euclid(std::f64::consts::TAU);
        Self::new(theta, phi)
    }

    pub fn along(axis: PauliAxis) -> Self {
        use std::f64::consts::FRAC_PI_2;
        match axis {
            PauliAxis::Axis1 => Self::new(0.0, 0.0),
            PauliAxis::Axis2 => Self::new(FRAC_PI_2, 0.0),
            PauliAxis::Axis3 => Self::new(FRAC_PI_2, FRAC_PI_2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two().max(2),
                got: len,
            });
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm2));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Like [`PureState::new`] but rescales to unit norm first.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(amplitudes)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[index] = ONE;
        Self {
            num_qubits,
            amplitudes,
        }
    }

    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn qubit(a0: C64, a1: C64) -> Result<Self> {
        Self::new(vec![a0, a1])
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub(crate) fn from_raw(amplitudes: Vec<C64>) -> Self {
        debug_assert!(amplitudes.len().is_power_of_two());
        Self {
            num_qubits: amplitudes.len().trailing_zeros() as usize,
            amplitudes,
        }
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Self {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes,
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Applies a 2×2 matrix to a single-qubit state.
    pub fn apply(&self, u: &Mat2) -> Result<PureState> {
        if self.num_qubits != 1 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.dim(),
            });
        }
        let a = &self.amplitudes;
        Ok(Self::from_raw(vec![
            u[(0, 0)] * a[0] + u[(0, 1)] * a[1],
            u[(1, 0)] * a[0] + u[(1, 1)] * a[1],
        ]))
    }

    /// Single-qubit state orthogonal to `self` (Bloch antipode).
    pub fn orthogonal(&self) -> Result<PureState> {
        if self.num_qubits != 1 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.dim(),
            });
        }
        let a = &self.amplitudes;
        Ok(Self::from_raw(vec![-a[1].conj(), a[0].conj()]))
    }

    pub fn density(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        DensityMatrix::from_raw(&v * v.adjoint())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let dim = entries.nrows();
        if !entries.is_square() || dim < 2 || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: dim.next_power_of_two().max(2),
                got: entries.ncols(),
            });
        }
        let herm = (&entries - entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotPhysical(format!("not Hermitian ({herm:e})")));
        }
        let rho = Self::from_raw(entries);
        let tr = rho.trace();
        if (tr - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::NotPhysical(format!("trace {tr}")));
        }
        if let Some(&min) = rho.eigenvalues().first() {
            if min < -EIGEN_TOL {
                return Err(Error::NotPhysical(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(entries: DMatrix<C64>) -> Self {
        Self {
            num_qubits: entries.nrows().trailing_zeros() as usize,
            entries,
        }
    }

    /// `(I + s1 σ1 + s2 σ2 + s3 σ3) / 2`. Not validated: `‖s‖ > 1` gives a
    /// non-positive matrix.
    pub fn from_stokes(s: &StokesVector) -> Self {
        let m = (Mat2::identity()
            + PauliAxis::Axis1.matrix() * C64::from(s.s1)
            + PauliAxis::Axis2.matrix() * C64::from(s.s2)
            + PauliAxis::Axis3.matrix() * C64::from(s.s3))
            * C64::from(0.5);
        Self::from_raw(DMatrix::from_iterator(2, 2, m.iter().copied()))
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1 << num_qubits;
        Self::from_raw(DMatrix::identity(dim, dim) * C64::from(1.0 / dim as f64))
    }

    /// `Σ w_k |ψ_k⟩⟨ψ_k|`.
    pub fn mixture(components: &[(f64, &PureState)]) -> Result<Self> {
        let (_, first) = components.first().ok_or(Error::EmptyKeep)?;
        let dim = first.dim();
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for (w, psi) in components {
            if psi.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: psi.dim(),
                });
            }
            acc += psi.density().entries * C64::from(*w);
        }
        Self::new(acc)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.entries.clone().symmetric_eigenvalues();
        let mut ev: Vec<f64> = eig.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `U ρ U†` for a single-qubit `ρ`.
    pub fn conjugate(&self, u: &Mat2) -> Result<Self> {
        if self.num_qubits != 1 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.dim(),
            });
        }
        let u = DMatrix::from_iterator(2, 2, u.iter().copied());
        Ok(Self::from_raw(&u * &self.entries * u.adjoint()))
    }

    /// `tr(self · other)`.
    pub fn overlap(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok((&self.entries * &other.entries).trace().re)
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant().re
    }
}

/// Anything that can be reduced to a density matrix on a subset of qubits.
pub trait QubitState {
    fn num_qubits(&self) -> usize;
    fn reduce(&self, keep: &[usize]) -> DensityMatrix;
}

/// Splits a basis index into (kept-bits index, traced-bits index).
fn split_index(x: usize, n: usize, keep: &[usize]) -> (usize, usize) {
    let (mut k, mut e) = (0, 0);
    for q in 0..n {
        let bit = (x >> (n - 1 - q)) & 1;
        if keep.binary_search(&q).is_ok() {
            k = (k << 1) | bit;
        } else {
            e = (e << 1) | bit;
        }
    }
    (k, e)
}

impl QubitState for PureState {
    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn reduce(&self, keep: &[usize]) -> DensityMatrix {
        let n = self.num_qubits;
        let dk = 1 << keep.len();
        let de = 1 << (n - keep.len());
        let mut m = DMatrix::<C64>::zeros(dk, de);
        for (x, a) in self.amplitudes.iter().enumerate() {
            let (k, e) = split_index(x, n, keep);
            m[(k, e)] = *a;
        }
        DensityMatrix::from_raw(&m * m.adjoint())
    }
}

impl QubitState for DensityMatrix {
    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn reduce(&self, keep: &[usize]) -> DensityMatrix {
        let n = self.num_qubits;
        let dk = 1 << keep.len();
        let dim = self.dim();
        let split: Vec<(usize, usize)> = (0..dim).map(|x| split_index(x, n, keep)).collect();
        let mut out = DMatrix::<C64>::zeros(dk, dk);
        for (x, &(kx, ex)) in split.iter().enumerate() {
            for (y, &(ky, ey)) in split.iter().enumerate() {
                if ex == ey {
                    out[(kx, ky)] += self.entries[(x, y)];
                }
            }
        }
        DensityMatrix::from_raw(out)
    }
}

fn normalize_keep(num_qubits: usize, keep: &[usize]) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    if let Some(&index) = keep.iter().find(|&&q| q >= num_qubits) {
        return Err(Error::QubitOutOfRange { index, num_qubits });
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    Ok(keep)
}

/// Reduced density matrix on `keep` (kept qubits stay in ascending order).
pub fn partial_trace<S: QubitState + ?Sized>(state: &S, keep: &[usize]) -> Result<DensityMatrix> {
    let keep = normalize_keep(state.num_qubits(), keep)?;
    Ok(state.reduce(&keep))
}

/// Stokes vector of the reduced state on `qubit`.
pub fn stokes_of<S: QubitState + ?Sized>(state: &S, qubit: usize) -> Result<StokesVector> {
    let rho = partial_trace(state, &[qubit])?;
    Ok(stokes_of_qubit(&rho))
}

pub(crate) fn stokes_of_qubit(rho: &DensityMatrix) -> StokesVector {
    let r = rho.entries();
    let (r00, r01, r11) = (r[(0, 0)], r[(0, 1)], r[(1, 1)]);
    // tr(ρZ), tr(ρX), tr(ρY) for Hermitian ρ
    StokesVector::new((r00 - r11).re, 2.0 * r01.re, -2.0 * r01.im)
}

/// `√(1 - 4 det ρ)` for a single-qubit density matrix.
pub fn dop_of(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: rho.dim(),
        });
    }
    let arg = 1.0 - 4.0 * rho.determinant();
    if !(-EIGEN_TOL..=1.0 + EIGEN_TOL).contains(&arg) {
        return Err(Error::NotPhysical(format!("1 - 4 det ρ = {arg:e}")));
    }
    Ok(arg.max(0.0).sqrt().min(1.0))
}

/// `tr(ρ²)`.
pub fn purity_of(rho: &DensityMatrix) -> f64 {
    rho.entries().iter().map(|z| z.norm_sqr()).sum()
}

/// Von Neumann entropy in bits.
pub fn entropy_of(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues()
        .into_iter()
        .filter(|&l| l > 1e-15)
        .map(|l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

pub fn rotate_about_axis(state: &PureState, axis: PauliAxis, theta: f64) -> Result<PureState> {
    state.apply(&rotation_matrix(axis, theta))
}

/// `R1(φ) · R3(θ) |0⟩`, whose Stokes vector is `(cos θ, cos φ sin θ, sin φ sin θ)`.
pub fn state_from_angles(theta: f64, phi: f64) -> PureState {
    let u = rotation_matrix(PauliAxis::Axis1, phi) * rotation_matrix(PauliAxis::Axis3, theta);
    PureState::from_raw(vec![u[(0, 0)], u[(1, 0)]])
}
