//! Games, strategies, rewards, histories and the textual model format.

mod format;
mod game;
mod reward;
mod strategy;

use std::fmt;

use thiserror::Error;

pub use format::{parse_model, parse_profiles, serialize_model, ModelFile};
pub use game::{
    validate_game, ActionId, AgentId, AtomId, Distribution, Game, JointAction, RawAvailability, RawGame, RawState,
    RawTransition, StateId, PROBABILITY_TOLERANCE,
};
pub use reward::{ActionRule, RewardStructure};
pub use strategy::{Coalition, History, Strategy, StrategyProfile};

/// A single well-formedness violation found by [`validate_game`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Empty(&'static str),
    NoActions(String),
    NoInitialState,
    MultipleInitialStates,
    DuplicateIdentifier {
        kind: &'static str,
        name: String,
    },
    UnknownIdentifier {
        kind: &'static str,
        name: String,
    },
    EmptyAvailability {
        state: String,
        agent: String,
    },
    UnavailableAction {
        state: String,
        agent: String,
        action: String,
    },
    ArityMismatch {
        state: String,
        expected: usize,
        found: usize,
    },
    DuplicateTransition {
        state: String,
        joint: String,
    },
    MissingTransition {
        state: String,
        joint: String,
    },
    DistributionNotNormalized {
        state: String,
        joint: String,
        sum: f64,
    },
    ProbabilityOutOfRange {
        context: String,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty(what) => write!(f, "no {what} declared"),
            Violation::NoActions(agent) => write!(f, "agent {agent} has no actions"),
            Violation::NoInitialState => write!(f, "no initial state"),
            Violation::MultipleInitialStates => write!(f, "more than one initial state"),
            Violation::DuplicateIdentifier { kind, name } => write!(f, "duplicate {kind} `{name}`"),
            Violation::UnknownIdentifier { kind, name } => write!(f, "unknown {kind} `{name}`"),
            Violation::EmptyAvailability { state, agent } => {
                write!(f, "agent {agent} has no available action at {state}")
            }
            Violation::UnavailableAction { state, agent, action } => {
                write!(f, "action {action} of {agent} is not available at {state}")
            }
            Violation::ArityMismatch { state, expected, found } => {
                write!(f, "joint action at {state} has {found} components, expected {expected}")
            }
            Violation::DuplicateTransition { state, joint } => {
                write!(f, "transition {state} {joint} defined more than once")
            }
            Violation::MissingTransition { state, joint } => {
                write!(f, "missing transition for {state} {joint}")
            }
            Violation::DistributionNotNormalized { state, joint, sum } => {
                write!(f, "distribution of {state} {joint} sums to {sum}")
            }
            Violation::ProbabilityOutOfRange { context, value } => {
                write!(f, "probability {value} outside [0,1] in {context}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid model: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("invalid strategy: {0}")]
    Strategy(String),
    #[error("invalid reward structure: {0}")]
    Reward(String),
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("strategy profile does not cover every agent")]
    PartialProfile,
    #[error("invalid history: {0}")]
    InvalidHistory(String),
}
