use thiserror::Error;

use crate::quad::Axis;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite integrand on the {axis} axis at node {node} (x = {abscissa})")]
    Evaluation {
        axis: Axis,
        node: usize,
        abscissa: f64,
    },

    #[error("state {0} vanishes identically and cannot be normalized")]
    UndefinedNormalization(String),

    #[error("state {0} vanishes identically; its first-order correction is undefined")]
    UndefinedCorrection(String),

    #[error(
        "adjacent loop samples {sample} and {next} have overlap magnitude {magnitude:.3e}; \
         increase the step count or reduce the loop radius"
    )]
    StepResolution {
        sample: usize,
        next: usize,
        magnitude: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        function,
        detail: detail.into(),
    }
}
