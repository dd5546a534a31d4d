use thiserror::Error;

/// Errors raised by the calculators, blocks, and simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A calculator input fell outside its mathematical domain.
    #[error("domain error: {name} = {value} ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The tail-sizing denominator vanished.
    #[error("singular sizing configuration: {term} is zero")]
    SingularSizing { term: &'static str },

    /// A block or scenario parameter violates its invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A signal became non-finite during a run.
    #[error("run diverged at step {step} (t = {time:.4} s): {signal} is not finite")]
    Diverged {
        step: usize,
        time: f64,
        signal: &'static str,
    },

    /// One leg of an A/B comparison failed.
    #[error("leg {leg} failed: {source}")]
    Leg {
        leg: char,
        #[source]
        source: Box<Error>,
    },

    /// The response never crossed the 10 % threshold of the commanded step.
    #[error("no response: output never reached 10% of the commanded step")]
    NoResponse,

    /// Commanded step of zero magnitude.
    #[error("degenerate step: start and target are both {0}")]
    DegenerateStep(f64),

    /// Every vertex of the starting simplex diverged.
    #[error("untunable start: all initial simplex points diverged")]
    UntunableStart,

    /// Malformed trace or configuration input.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for the divergence family, including a diverged A/B leg.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Diverged { .. } => true,
            Error::Leg { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            reason: "must be strictly positive",
        })
    }
}
