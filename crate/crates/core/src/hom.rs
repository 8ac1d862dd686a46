//! Closed-form coincidence probabilities for the three source families.
//!
//! These are the ground truth the circuit and bosonic simulations are checked
//! against. The phase between the two branches of an internally entangled
//! photon never enters a coincidence probability, so the models omit it.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::qstate::{
    state_from_angles, BlochAngles, DensityMatrix, PauliAxis, PureState, StokesVector, Transform,
};

const UNIT_TOL: f64 = 1e-9;

/// Single-photon source whose polarization is characterised.
///
/// `direction` is the unit Stokes vector of `|φ⟩`; the weight (`p` or
/// `lambda`) is the population of `|φ⟩` against `|φ⊥⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceModel {
    /// `|φ⟩`, no other degree of freedom involved.
    PurePolarized { direction: StokesVector },
    /// `√p |φ⟩|ξ⟩ + √(1-p) |φ⊥⟩|ξ⊥⟩`: polarization entangled with a second
    /// degree of freedom of the same photon (time bin).
    InternalEntangled { p: f64, direction: StokesVector },
    /// `λ |φ⟩⟨φ| + (1-λ) |φ⊥⟩⟨φ⊥|`: entanglement with an environment, or an
    /// incoherent mixture.
    ExternallyMixed { lambda: f64, direction: StokesVector },
}

fn unit_direction(direction: StokesVector) -> Result<StokesVector> {
    let n = direction.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::OutOfRange {
            name: "direction norm",
            value: n,
            range: "{1}",
        });
    }
    Ok(direction)
}

impl SourceModel {
    pub fn pure(stokes: StokesVector) -> Result<Self> {
        Ok(Self::PurePolarized {
            direction: unit_direction(stokes)?,
        })
    }

    pub fn internal(p: f64, direction: StokesVector) -> Result<Self> {
        check_range("p", p, 0.0, 1.0, "[0, 1]")?;
        Ok(Self::InternalEntangled {
            p,
            direction: unit_direction(direction)?,
        })
    }

    pub fn external(lambda: f64, direction: StokesVector) -> Result<Self> {
        check_range("lambda", lambda, 0.0, 1.0, "[0, 1]")?;
        Ok(Self::ExternallyMixed {
            lambda,
            direction: unit_direction(direction)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::PurePolarized { direction } => Self::pure(direction).map(drop),
            Self::InternalEntangled { p, direction } => Self::internal(p, direction).map(drop),
            Self::ExternallyMixed { lambda, direction } => {
                Self::external(lambda, direction).map(drop)
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::PurePolarized { .. } => "pure",
            Self::InternalEntangled { .. } => "internal",
            Self::ExternallyMixed { .. } => "external",
        }
    }

    pub fn direction(&self) -> StokesVector {
        match *self {
            Self::PurePolarized { direction }
            | Self::InternalEntangled { direction, .. }
            | Self::ExternallyMixed { direction, .. } => direction,
        }
    }

    pub fn angles(&self) -> BlochAngles {
        BlochAngles::from_stokes(&self.direction())
    }

    /// Population of `|φ⟩`.
    pub fn weight(&self) -> f64 {
        match *self {
            Self::PurePolarized { .. } => 1.0,
            Self::InternalEntangled { p, .. } => p,
            Self::ExternallyMixed { lambda, .. } => lambda,
        }
    }

    /// `⟨s⟩ = (2w - 1) · direction`, the Stokes vector of the reduced
    /// polarization state.
    pub fn mean_stokes(&self) -> StokesVector {
        self.direction().scaled(2.0 * self.weight() - 1.0)
    }

    pub fn dop(&self) -> f64 {
        (2.0 * self.weight() - 1.0).abs()
    }

    /// Whether the photon (all of its degrees of freedom) is in a pure state.
    pub fn is_globally_pure(&self) -> bool {
        !matches!(self, Self::ExternallyMixed { .. })
    }

    /// Reduced polarization density matrix.
    pub fn polarization_state(&self) -> DensityMatrix {
        DensityMatrix::from_stokes(&self.mean_stokes())
    }

    /// `|φ⟩` prepared as `R1(φ) R3(θ) |0⟩`.
    pub fn direction_state(&self) -> PureState {
        let a = self.angles();
        state_from_angles(a.theta, a.phi)
    }

    /// The same source after `u` acts on the polarization of the photon.
    pub fn transformed(&self, u: &Transform) -> Self {
        let dir = DensityMatrix::from_stokes(&self.direction())
            .conjugate(&u.matrix())
            .map(|rho| crate::qstate::stokes_of_qubit(&rho))
            .unwrap_or_else(|_| self.direction());
        let n = dir.norm();
        let dir = dir.scaled(1.0 / n);
        match *self {
            Self::PurePolarized { .. } => Self::PurePolarized { direction: dir },
            Self::InternalEntangled { p, .. } => Self::InternalEntangled { p, direction: dir },
            Self::ExternallyMixed { lambda, .. } => Self::ExternallyMixed {
                lambda,
                direction: dir,
            },
        }
    }

    pub fn transformed_by_all(&self, frame: &[Transform]) -> Self {
        frame.iter().fold(*self, |src, u| src.transformed(u))
    }
}

/// `(1 - F) / 2`.
pub fn coincidence_from_fidelity(fidelity: f64) -> Result<f64> {
    check_range("fidelity", fidelity, 0.0, 1.0, "[0, 1]")?;
    Ok((1.0 - fidelity) / 2.0)
}

/// Coincidence probability with `U = σ_axis`.
pub fn coincidence_pauli(source: &SourceModel, axis: PauliAxis) -> f64 {
    match *source {
        SourceModel::PurePolarized { .. } | SourceModel::InternalEntangled { .. } => {
            let s = source.mean_stokes().component(axis);
            (1.0 - s * s) / 2.0
        }
        SourceModel::ExternallyMixed { lambda, direction } => {
            let s = direction.component(axis);
            let d = 2.0 * lambda - 1.0;
            (1.0 - s * s * d * d) / 2.0 - lambda * (1.0 - lambda)
        }
    }
}

/// Coincidence probability with `U = I`: zero for globally pure photons,
/// `λ(1 - λ)` for mixtures.
pub fn coincidence_identity(source: &SourceModel) -> f64 {
    match *source {
        SourceModel::ExternallyMixed { lambda, .. } => lambda * (1.0 - lambda),
        _ => 0.0,
    }
}

/// Fidelity `F(U)` between the two beamsplitter inputs for an arbitrary
/// polarization transformation `U`, evaluated from the source's states.
pub fn fidelity_with(source: &SourceModel, u: &Transform) -> f64 {
    let m = u.matrix();
    let phi = source.direction_state();
    let expect = |psi: &PureState| {
        psi.apply(&m)
            .and_then(|upsi| psi.inner(&upsi))
            .expect("single-qubit states")
    };
    match *source {
        SourceModel::PurePolarized { .. } => expect(&phi).norm_sqr(),
        SourceModel::InternalEntangled { p, .. } => {
            let perp = phi.orthogonal().expect("single qubit");
            (expect(&phi) * p + expect(&perp) * (1.0 - p)).norm_sqr()
        }
        SourceModel::ExternallyMixed { .. } => {
            let rho = source.polarization_state();
            let urho = rho.conjugate(&m).expect("single qubit");
            rho.overlap(&urho).expect("equal dimensions")
        }
    }
}

/// `(1 - F(U)) / 2` for an arbitrary `U`.
pub fn coincidence_unitary(source: &SourceModel, u: &Transform) -> f64 {
    ((1.0 - fidelity_with(source, u)) / 2.0).clamp(0.0, 0.5)
}

/// Coincidence-to-accidental ratio `(η p_ph / (p_dc ΔT))²`.
///
/// `p_dc` is a dark-count probability per nanosecond and `delta_t` the gate
/// width in nanoseconds.
pub fn rca(eta: f64, p_ph: f64, p_dc: f64, delta_t: f64) -> Result<f64> {
    let positive = |name, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::OutOfRange {
                name,
                value: v,
                range: "(0, inf)",
            })
        }
    };
    positive("eta", eta)?;
    positive("p_ph", p_ph)?;
    check_range("p_ph", p_ph, 0.0, 1.0, "(0, 1]")?;
    positive("p_dc", p_dc)?;
    positive("delta_t", delta_t)?;
    let ratio = eta * p_ph / (p_dc * delta_t);
    Ok(ratio * ratio)
}
