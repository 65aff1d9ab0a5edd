//! Classical and Gaussian-state quantum dynamics of a particle in a rotating,
//! anisotropic three-dimensional harmonic trap.
//!
//! All physics is written in the co-rotating frame with unit mass and
//! `ħ = 1`. Modules are generic over the scalar type ([`scalar::Real`]); the
//! aliases at the crate root fix it to `f64`.
//!
//! Normal modes follow the `X(t) = X̄ exp(+iωt)` convention, so eigenvalues
//! of the dynamics matrix are `λ = iω`. The region-dependent sign rules in
//! [`quantum`] depend on this choice.

pub mod error;
pub mod gravity;
pub mod invariants;
pub mod io;
pub mod modes;
pub mod numerics;
pub mod quantum;
pub mod scalar;
pub mod stability;
pub mod trap;

pub use error::{ConfigError, ConfigIssue, Error, Result};
pub use nalgebra;
pub use nalgebra::Complex;
pub use scalar::Real;

pub type TrapPotential = trap::TrapPotential<f64>;
pub type RotationSpec = trap::RotationSpec<f64>;
pub type TrapConfig = trap::TrapConfig<f64>;
pub type ValidatedConfig = trap::ValidatedConfig<f64>;
pub type PhaseVector = trap::PhaseVector<f64>;
pub type DynamicsMatrix = trap::DynamicsMatrix<f64>;
pub type CharPolyCoeffs = trap::CharPolyCoeffs<f64>;
pub type ChiRoots = stability::ChiRoots<f64>;
pub type RegionMap = stability::RegionMap<f64>;
pub type ScanTable = stability::ScanTable<f64>;
pub type ModeVector = modes::ModeVector<f64>;
pub type ModeSet = modes::ModeSet<f64>;
pub type ResonanceReport = gravity::ResonanceReport<f64>;
pub type QuadraticInvariant = invariants::QuadraticInvariant<f64>;
pub type GaussianState = quantum::GaussianState<f64>;
pub type WignerForm = quantum::WignerForm<f64>;
pub type OmegaRange = numerics::OmegaRange<f64>;
pub type PhaseTrajectory = numerics::Trajectory<f64, trap::PhaseVector<f64>>;
