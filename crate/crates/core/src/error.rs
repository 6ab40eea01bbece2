use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,

    #[error("1 + L is identically zero or the closed loop is not realizable")]
    DegenerateLoop,

    #[error("transfer function with zero numerator is not invertible")]
    NonInvertible,

    #[error("result is not proper (numerator degree {num} > denominator degree {den})")]
    NonProper { num: usize, den: usize },

    #[error("evaluation point hits a pole")]
    PoleHit,

    #[error("sampling times differ ({0} s vs {1} s)")]
    SamplingMismatch(f64, f64),

    #[error("sampling time must be positive and finite, got {0}")]
    InvalidSamplingTime(f64),

    #[error("root finding failed to converge on a degree-{0} polynomial")]
    RootFinding(usize),

    #[error("fractional order {0} outside (-1, 1)")]
    AlphaOutOfRange(f64),

    #[error("invalid Oustaloup settings: {0}")]
    InvalidOustaloup(String),

    #[error("invalid fractional transfer function: {0}")]
    InvalidFracTf(String),

    #[error("invalid reference model: {0}")]
    InvalidReference(String),

    #[error("reference model unstable: pole radii {radii:?}")]
    ReferenceModelUnstable { radii: Vec<f64> },

    #[error("bilinear substitution collapsed the denominator")]
    DegenerateDenominator,

    #[error("signal contains a non-finite sample at index {0}")]
    NonFiniteSample(usize),

    #[error("signal must contain at least one sample")]
    EmptySignal,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("reference input must satisfy r[0] != 0")]
    ZeroLeadingReference,

    #[error("leading sample {0:e} is numerically zero; triangular Toeplitz system is singular")]
    SingularLeadingSample(f64),

    #[error("controller is not invertible as a causal system: {0}")]
    ControllerNotInvertible(String),

    #[error("algebraic loop is singular (1 + d_p * d_c = {0:e})")]
    AlgebraicLoopSingular(f64),

    #[error("controller is not biproper at this parameter vector")]
    NotBiproper,

    #[error("invalid controller parameters: {0}")]
    InvalidController(String),

    #[error("|L| does not cross 1 inside the search band")]
    NoCrossing,

    #[error("frequency {0} rad/s is at or above Nyquist ({1} rad/s)")]
    AboveNyquist(f64, f64),

    #[error("invalid settings: {0}")]
    InvalidSettings(String),
}
