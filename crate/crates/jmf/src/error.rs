//! Error type shared by all numerical routines.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integrand returned a non-finite value at a quadrature node")]
    NonFiniteSample,
    #[error("Cauchy radius {radius} exceeds the distance {bound} to the nearest singularity")]
    RadiusTooLarge { radius: f64, bound: f64 },
    #[error("series truncation insufficient: last term {last:.3e} exceeds tolerance {tol:.3e}")]
    TruncationInsufficient { last: f64, tol: f64 },
    #[error("evaluation point within {dist:.3e} of a pole")]
    PoleCollision { dist: f64 },
    #[error("integration path passes through a pole of the form")]
    PathThroughPole,
    #[error("leading Laurent coefficient vanishes: declared pole order too high")]
    LeadingCoefficientVanishes,
    #[error("nested finite differences lost too many significant digits")]
    StepUnderflow,
    #[error("heat-operator precondition failed: |H_M g| = {residual:.3e}")]
    HeatPreconditionFailed { residual: f64 },
    #[error("series has vanishing leading coefficient, cannot invert")]
    LeadingZero,
    #[error("expansion band contains a pole line at height {height}")]
    BandContainsPole { height: f64 },
    #[error("form parse error: {0}")]
    Parse(String),
    #[error("exponent sum is odd: index would not be integral")]
    IndexNotIntegral,
    #[error("exponent sum is not positive: index must be a positive integer")]
    IndexNotPositive,
}

pub type Result<T> = std::result::Result<T, Error>;
