//! Markov chains induced by full strategy profiles.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::logic::{Outcome, Progress};
use crate::model::{Game, History, RewardStructure, StateId, StrategyProfile};

/// One positive entry of the step kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    /// Index into `game.joint_actions(state)`.
    pub joint: usize,
    pub next: StateId,
    pub prob: f64,
}

/// The chain a full profile induces: per state, a distribution over
/// (joint action, successor) pairs.
#[derive(Clone, Debug)]
pub struct InducedChain<'g> {
    game: &'g Game,
    kernel: Vec<Vec<Step>>,
}

impl<'g> InducedChain<'g> {
    pub fn new(game: &'g Game, profile: &StrategyProfile) -> Result<Self> {
        if !profile.is_full() {
            return Err(Error::PartialProfile);
        }
        let kernel = (0..game.num_states())
            .map(|s| {
                let mut row = Vec::new();
                for (idx, (ja, dist)) in game.moves(s).enumerate() {
                    let w = profile.fixed_weight(s, ja);
                    if w <= 0.0 {
                        continue;
                    }
                    for (next, p) in dist.iter() {
                        row.push(Step {
                            joint: idx,
                            next,
                            prob: w * p,
                        });
                    }
                }
                row
            })
            .collect();
        Ok(Self { game, kernel })
    }

    pub fn game(&self) -> &'g Game {
        self.game
    }

    pub fn row(&self, state: StateId) -> &[Step] {
        &self.kernel[state]
    }
}

/// Probability of `history` under a full profile.
pub fn path_probability(game: &Game, profile: &StrategyProfile, history: &History) -> Result<f64> {
    if !profile.is_full() {
        return Err(Error::PartialProfile);
    }
    history.validate(game)?;
    let mut prob = 1.0;
    for (j, ja) in history.joint_actions.iter().enumerate() {
        let s = history.states[j];
        let w = profile.fixed_weight(s, ja);
        if w <= 0.0 {
            return Err(Error::IncompatibleHistory(format!(
                "step {j}: the profile never plays {} at {}",
                game.format_joint(ja),
                game.state_name(s)
            )));
        }
        let delta = game.transition(s, ja).map_or(0.0, |d| d.prob(history.states[j + 1]));
        prob *= w * delta;
    }
    Ok(prob)
}

/// Status of a history prefix with respect to an outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Track {
    Open(Progress),
    Satisfied,
}

impl Track {
    /// Initial track, or `None` if the outcome already fails at `s`.
    pub(crate) fn start(outcome: &Outcome, s: StateId) -> Option<Self> {
        Self::classify(outcome, outcome.start(s))
    }

    pub(crate) fn advance(self, outcome: &Outcome, position: usize, s: StateId) -> Option<Self> {
        match self {
            Track::Satisfied => Some(Track::Satisfied),
            Track::Open(p) => Self::classify(outcome, outcome.observe(p, position, s)),
        }
    }

    fn classify(outcome: &Outcome, p: Progress) -> Option<Self> {
        match outcome.verdict(p) {
            Some(true) => Some(Track::Satisfied),
            Some(false) => None,
            None => Some(Track::Open(p)),
        }
    }

    pub(crate) fn key(self) -> u64 {
        match self {
            Track::Satisfied => u64::MAX,
            Track::Open(p) => p.key(),
        }
    }
}

/// Probability that a history from `start` satisfies `outcome`.
pub fn sat_probability(game: &Game, profile: &StrategyProfile, outcome: &Outcome, start: StateId) -> Result<f64> {
    let chain = InducedChain::new(game, profile)?;
    Ok(chain_sat_probability(&chain, outcome, start))
}

pub(crate) fn chain_sat_probability(chain: &InducedChain<'_>, outcome: &Outcome, start: StateId) -> f64 {
    let mut satisfied = 0.0;
    let mut frontier: BTreeMap<(StateId, Progress), f64> = BTreeMap::new();
    match Track::start(outcome, start) {
        None => return 0.0,
        Some(Track::Satisfied) => return 1.0,
        Some(Track::Open(p)) => {
            frontier.insert((start, p), 1.0);
        }
    }
    let mut position = 0;
    while !frontier.is_empty() {
        position += 1;
        let mut next_frontier = BTreeMap::new();
        for (&(s, p), &mass) in &frontier {
            for step in chain.row(s) {
                match Track::Open(p).advance(outcome, position, step.next) {
                    None => {}
                    Some(Track::Satisfied) => satisfied += mass * step.prob,
                    Some(Track::Open(q)) => *next_frontier.entry((step.next, q)).or_insert(0.0) += mass * step.prob,
                }
            }
        }
        frontier = next_frontier;
    }
    satisfied
}

/// Expected accumulated reward over length-k histories, counting only the
/// histories that satisfy the outcome. Action rewards are summed over steps
/// `0..k` and state rewards over positions `0..=k`.
pub fn expected_reward(
    game: &Game,
    profile: &StrategyProfile,
    reward: &RewardStructure,
    outcome: &Outcome,
    start: StateId,
) -> Result<f64> {
    let chain = InducedChain::new(game, profile)?;
    Ok(chain_expected_reward(&chain, reward, outcome, start))
}

pub(crate) fn chain_expected_reward(
    chain: &InducedChain<'_>,
    reward: &RewardStructure,
    outcome: &Outcome,
    start: StateId,
) -> f64 {
    let game = chain.game();
    let k = outcome.horizon();
    // (probability mass, probability-weighted accumulated reward)
    let mut frontier: BTreeMap<(StateId, Track), (f64, f64)> = BTreeMap::new();
    let Some(t0) = Track::start(outcome, start) else {
        return 0.0;
    };
    frontier.insert((start, t0), (1.0, 0.0));
    for position in 1..=k {
        let mut next_frontier: BTreeMap<(StateId, Track), (f64, f64)> = BTreeMap::new();
        for (&(s, track), &(mass, acc)) in &frontier {
            let joints = game.joint_actions(s);
            for step in chain.row(s) {
                let Some(t) = track.advance(outcome, position, step.next) else {
                    continue;
                };
                let r = reward.reward_of(s, &joints[step.joint]);
                let e = next_frontier.entry((step.next, t)).or_insert((0.0, 0.0));
                e.0 += mass * step.prob;
                e.1 += step.prob * (acc + mass * r);
            }
        }
        frontier = next_frontier;
    }
    frontier
        .iter()
        .filter(|((_, t), _)| *t == Track::Satisfied)
        .map(|(&(s, _), &(mass, acc))| acc + mass * reward.state_reward(s))
        .sum()
}
