//! Exact finite-horizon probabilities, rewards and game values, plus a
//! Monte Carlo estimator used as a testing oracle.

mod adversarial;
mod chain;
mod matrix;
mod montecarlo;

pub use adversarial::{
    extremal_probability, game_value_probability, robust_expected_reward, AdversaryPolicy, Direction, Extremal,
    GameValue, PolicyEntry, RewardAdversary,
};
pub(crate) use chain::Track;
pub use chain::{expected_reward, path_probability, sat_probability, InducedChain, Step};
pub use matrix::{matrix_game_value, MatrixGame, MatrixSolution};
pub use montecarlo::{monte_carlo, Estimate, Target, BLOCK_SIZE};
