use thiserror::Error;

use crate::group::GroupElement;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {name} = {value} lies outside [0, 1]")]
    Domain { name: &'static str, value: f64 },

    #[error("rectangle bounds are unordered: ({a1}, {b1}] x ({a2}, {b2}]")]
    UnorderedBounds { a1: f64, b1: f64, a2: f64, b2: f64 },

    #[error("rectangle ({a1}, {b1}] x ({a2}, {b2}] has negative mass {mass}")]
    NegativeMass { a1: f64, b1: f64, a2: f64, b2: f64, mass: f64 },

    #[error("invalid grid copula: {0}")]
    InvalidGrid(String),

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("marginal normalization did not converge after {sweeps} sweeps (deviation {deviation:e})")]
    NormalizationFailed { sweeps: usize, deviation: f64 },

    #[error("resolution must be at least 1")]
    ZeroResolution,

    #[error("biconvex form did not converge: last value {value} at resolution {resolution}, step difference {difference:e}")]
    NonConvergence { value: f64, resolution: usize, difference: f64 },

    #[error("generator is not Gamma-invariant: deviation {deviation:e} under {witness} at ({u1}, {u2})")]
    NotGammaInvariant { deviation: f64, witness: GroupElement, u1: f64, u2: f64 },

    #[error("generator is degenerate: [M, A] = {m_form} is not above 1/4")]
    DegenerateGenerator { m_form: f64 },

    #[error("sample size {n} is below the minimal valid size {n_a}")]
    SampleTooSmall { n: usize, n_a: usize },

    #[error("no valid sample size found up to {0}")]
    NotFound(usize),

    #[error("central-square mass and comonotone form disagree at n = {n}: mass {mass:e}, excess {excess:e}")]
    InconsistentSampleSize { n: usize, mass: f64, excess: f64 },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("cannot sample directly from {0}; materialize it to a grid first")]
    UnsupportedSampler(&'static str),

    #[error("interpolation parameter q = {0} lies outside [0, 1]")]
    InvalidInterpolation(f64),

    #[error("unknown group element {0:?}")]
    UnknownElement(String),

    #[error("unknown subgroup {0:?}")]
    UnknownSubgroup(String),

    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),

    #[error("invalid study configuration: {0}")]
    InvalidConfig(String),

    #[error("copula spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
