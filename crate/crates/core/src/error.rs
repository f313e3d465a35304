use thiserror::Error;

/// Errors raised by the arithmetic, geometry, gluing and dynamics layers.
///
/// Variants are grouped by the layer that produces them; [`Error::is_hypothesis`]
/// separates violations of the construction's hypotheses from malformed input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("elements over different primes ({0} and {1}) cannot be combined")]
    PrimeMismatch(u32, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent {0} is not a half-integer")]
    NotHalfInteger(String),
    #[error("zero polynomial has no {0}")]
    ZeroPolynomial(&'static str),
    #[error("zero denominator")]
    ZeroDenominator,

    #[error("radius must be finite")]
    InfiniteRadius,
    #[error("at least two centers are required to compute separations")]
    TooFewCenters,
    #[error("centers {0} and {1} coincide")]
    DuplicateCenters(usize, usize),
    #[error("map has a pole in ball {0}")]
    PoleInBall(String),
    #[error("map is constant on ball {0}; its image is a single point")]
    ConstantOnBall(String),
    #[error("value {0} lies outside the image of the ball")]
    OutsideImage(String),

    #[error("balls not pairwise disjoint: ball {0} meets ball {1}")]
    Overlapping(usize, usize),
    #[error("ball {0} is not closed")]
    NotClosed(usize),
    #[error("ball {index}: radius must be strictly smaller than delta ({detail})")]
    RadiusNotBelowDelta { index: usize, detail: String },
    #[error("a single ball needs an explicit delta override")]
    MissingDeltaOverride,
    #[error("override list has {found} entries, expected {expected}")]
    OverrideLength { expected: usize, found: usize },
    #[error("ball {index}: M override {given} is below the minimal admissible {minimal}")]
    MOverrideTooSmall { index: usize, given: u32, minimal: u32 },
    #[error("ball {index}: c override has the wrong absolute value ({detail})")]
    BadCOverride { index: usize, detail: String },
    #[error("model {model}: declared image {declared} differs from computed image {computed}")]
    ImageMismatch {
        model: usize,
        declared: String,
        computed: String,
    },
    #[error("model {model} maps ball {ball} outside the closed unit ball (image {image})")]
    NotInUnitBall {
        model: usize,
        ball: usize,
        image: String,
    },
    #[error("model {model} has a pole in ball {ball}")]
    ModelPole { model: usize, ball: usize },
    #[error("model {model} is constant on ball {ball}")]
    ModelConstant { model: usize, ball: usize },
    #[error("epsilon {eps_prime} is not strictly smaller than {eps}")]
    EpsilonNotSmaller { eps: String, eps_prime: String },
    #[error("sub-disk is not contained in the domain of model {0}")]
    SubdiskOutside(usize),
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),

    #[error("{0} is not a fixed point")]
    NotFixed(String),
    #[error("Hensel condition fails at {0}")]
    HenselCondition(String),
    #[error("Newton iteration did not reach the target after {0} steps")]
    NoConvergence(usize),
    #[error("invalid witness disk {index}: {reason}")]
    BadWitness { index: usize, reason: String },

    #[error("parse error at {path}: {reason}")]
    Parse { path: String, reason: String },
}

impl Error {
    /// True for failures of the construction's hypotheses (as opposed to
    /// malformed input or arithmetic misuse).
    pub fn is_hypothesis(&self) -> bool {
        matches!(
            self,
            Error::Overlapping(..)
                | Error::NotClosed(_)
                | Error::RadiusNotBelowDelta { .. }
                | Error::MissingDeltaOverride
                | Error::OverrideLength { .. }
                | Error::MOverrideTooSmall { .. }
                | Error::BadCOverride { .. }
                | Error::ImageMismatch { .. }
                | Error::NotInUnitBall { .. }
                | Error::ModelPole { .. }
                | Error::ModelConstant { .. }
                | Error::PoleInBall(_)
                | Error::ConstantOnBall(_)
                | Error::TooFewCenters
                | Error::DuplicateCenters(..)
                | Error::BadWitness { .. }
                | Error::NotHalfInteger(_)
        )
    }

    pub(crate) fn parse(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
