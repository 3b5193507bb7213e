use thiserror::Error;

use crate::logic::LogicError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("strategy profile does not cover every agent")]
    PartialProfile,
    #[error("history is incompatible with the profile: {0}")]
    IncompatibleHistory(String),
    #[error("coalition of {size} agents exceeds the cap of {cap}")]
    CoalitionTooLarge { size: usize, cap: usize },
    #[error("agent `{0}` is not in the responsibility scope")]
    AgentNotInScope(String),
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("unknown reward structure `{0}`")]
    UnknownReward(String),
    #[error("value is not a single polynomial over the parameter space: {0}")]
    NonPolynomial(String),
    #[error("evaluation does not assign parameter `{0}`")]
    MissingParameter(String),
    #[error("agent `{0}` is not parametrised and has no constant strategy")]
    MissingConstantStrategy(String),
    #[error("no equilibrium found: {0}")]
    NoSolutionFound(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
