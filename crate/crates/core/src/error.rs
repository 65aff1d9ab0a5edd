use thiserror::Error;

/// A single reason a [`TrapConfig`](crate::trap::TrapConfig) was rejected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigIssue {
    #[error("potential matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NonSymmetricPotential { asymmetry: f64 },
    #[error("potential matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NonPositivePotential { min_eigenvalue: f64 },
    #[error("rotation axis has zero length")]
    ZeroAxis,
    #[error("rotation axis is not unit length (|n| = {norm})")]
    AxisNotUnit { norm: f64 },
    #[error("rotation rate is negative ({omega})")]
    NegativeOmega { omega: f64 },
    #[error("frequency unit must be positive ({unit})")]
    NonPositiveFrequencyUnit { unit: f64 },
    #[error("configuration contains non-finite values")]
    NonFinite,
}

/// All issues found while validating a configuration.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid trap configuration: {}", .issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl ConfigError {
    pub fn contains(&self, pred: impl Fn(&ConfigIssue) -> bool) -> bool {
        self.issues.iter().any(pred)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("characteristic polynomial has odd powers (max coefficient {max:e})")]
    OddPowersPresent { max: f64 },
    #[error("root classification is ambiguous: {reason}")]
    AmbiguousClassification { reason: String },
    #[error("Omega bracket too small: cubic discriminant still negative at {omega_max}")]
    BracketTooSmall { omega_max: f64 },
    #[error("invalid Omega range: {reason}")]
    InvalidRange { reason: String },
    #[error("dynamics matrix is defective or has degenerate frequencies (eigenvector condition {condition:e})")]
    DefectiveMatrix { condition: f64 },
    #[error("frequencies could not be paired into +/- partners")]
    UnpairedFrequencies,
    #[error("mode vector vanishes identically")]
    DegenerateModeVector,
    #[error("resonance coefficient D vanishes (trap symmetric about the rotation axis)")]
    DegenerateD,
    #[error("time step too large: dt * |M|_1 = {product} > 0.1")]
    StepTooLarge { product: f64 },
    #[error("invalid integration parameters: {reason}")]
    InvalidIntegration { reason: String },
    #[error("trajectory too short: spans {span} but at least {required} is needed")]
    InsufficientSpan { span: f64, required: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("eigenvalue iteration failed to converge")]
    ConvergenceFailure,
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is nearly singular (condition {condition:e})")]
    NearSingular { condition: f64 },
    #[error("position matrix D became singular (condition {condition:e})")]
    SingularD { condition: f64 },
    #[error("configuration lies in an instability region; no normalizable stationary state exists")]
    InInstabilityRegion,
    #[error("selected mode frequencies are degenerate")]
    DegenerateFrequencies,
    #[error("mode position matrix is singular (condition {condition:e})")]
    SingularModeMatrix { condition: f64 },
    #[error("no root of the squared constraint satisfies the original constraint")]
    NoValidRoot,
    #[error("kappa is complex: (Vx - Omega^2)/(Vy - Omega^2) = {ratio} < 0")]
    ComplexKappa { ratio: f64 },
    #[error("state is not normalizable (smallest eigenvalue of Re K = {min_eigenvalue:e})")]
    NotNormalizable { min_eigenvalue: f64 },
    #[error("Wigner form is not in the span of the invariants (relative residual {residual:e})")]
    NotInSpan { residual: f64 },
    #[error("operation requires an axis-aligned planar configuration")]
    WrongDimension,
    #[error("configuration is not stable; mode amplitudes are undefined")]
    UnstableConfig,
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "ConfigError",
            Error::OddPowersPresent { .. } => "OddPowersPresent",
            Error::AmbiguousClassification { .. } => "AmbiguousClassification",
            Error::BracketTooSmall { .. } => "BracketTooSmall",
            Error::InvalidRange { .. } => "InvalidRange",
            Error::DefectiveMatrix { .. } => "DefectiveMatrix",
            Error::UnpairedFrequencies => "UnpairedFrequencies",
            Error::DegenerateModeVector => "DegenerateModeVector",
            Error::DegenerateD => "DegenerateD",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::InvalidIntegration { .. } => "InvalidIntegration",
            Error::InsufficientSpan { .. } => "InsufficientSpan",
            Error::NonFiniteState { .. } => "NonFiniteState",
            Error::ConvergenceFailure => "ConvergenceFailure",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::NearSingular { .. } => "NearSingular",
            Error::SingularD { .. } => "SingularD",
            Error::InInstabilityRegion => "InInstabilityRegion",
            Error::DegenerateFrequencies => "DegenerateFrequencies",
            Error::SingularModeMatrix { .. } => "SingularModeMatrix",
            Error::NoValidRoot => "NoValidRoot",
            Error::ComplexKappa { .. } => "ComplexKappa",
            Error::NotNormalizable { .. } => "NotNormalizable",
            Error::NotInSpan { .. } => "NotInSpan",
            Error::WrongDimension => "WrongDimension",
            Error::UnstableConfig => "UnstableConfig",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
