use std::fmt;

use super::game::{ActionId, AgentId, Game, JointAction, StateId, PROBABILITY_TOLERANCE};
use super::ModelError;

/// A set of agents, stored as a bitmask over agent indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition(u64);

impl Coalition {
    pub const MAX_AGENTS: usize = 64;

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn grand(num_agents: usize) -> Self {
        assert!(num_agents <= Self::MAX_AGENTS);
        if num_agents == 64 {
            Self(u64::MAX)
        } else {
            Self((1u64 << num_agents) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(agent: AgentId) -> Self {
        Self(1 << agent)
    }

    pub fn from_members(members: impl IntoIterator<Item = AgentId>) -> Self {
        Self(members.into_iter().fold(0, |acc, a| acc | (1 << a)))
    }

    pub fn contains(self, agent: AgentId) -> bool {
        self.0 & (1 << agent) != 0
    }

    pub fn with(self, agent: AgentId) -> Self {
        Self(self.0 | (1 << agent))
    }

    pub fn without(self, agent: AgentId) -> Self {
        Self(self.0 & !(1 << agent))
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        Self(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in ascending order.
    pub fn members(self) -> impl Iterator<Item = AgentId> {
        (0..64).filter(move |&i| self.0 & (1 << i) != 0)
    }

    /// Every subset of `self`, ordered by size and then lexicographically by
    /// sorted member list.
    pub fn subsets(self) -> Vec<Coalition> {
        let members: Vec<AgentId> = self.members().collect();
        let mut out = Vec::with_capacity(1 << members.len());
        for mask in 0u64..(1u64 << members.len()) {
            out.push(Coalition::from_members(
                members
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &a)| a),
            ));
        }
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.members().cmp(b.members())));
        out
    }

    pub fn names(self, game: &Game) -> Vec<String> {
        self.members().map(|a| game.agent_name(a).to_string()).collect()
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.members().map(|a| a.to_string()).collect();
        write!(f, "{{{}}}", m.join(","))
    }
}

/// A memoryless randomised strategy for a single agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    agent: AgentId,
    /// `choice[state][action]` over the agent's full action list.
    choice: Vec<Vec<f64>>,
}

impl Strategy {
    pub fn new(game: &Game, agent: AgentId, choice: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        if agent >= game.num_agents() {
            return Err(ModelError::UnknownAgent(agent.to_string()));
        }
        if choice.len() != game.num_states() {
            return Err(ModelError::Strategy(format!(
                "strategy for {} covers {} states, game has {}",
                game.agent_name(agent),
                choice.len(),
                game.num_states()
            )));
        }
        let n_actions = game.actions(agent).len();
        for (s, row) in choice.iter().enumerate() {
            if row.len() != n_actions {
                return Err(ModelError::Strategy(format!(
                    "strategy for {} at {} has {} entries, expected {}",
                    game.agent_name(agent),
                    game.state_name(s),
                    row.len(),
                    n_actions
                )));
            }
            let mut total = 0.0;
            for (a, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(ModelError::Strategy(format!(
                        "probability {p} of {} at {} outside [0,1]",
                        game.action_name(agent, a),
                        game.state_name(s)
                    )));
                }
                if p > 0.0 && !game.is_available(s, agent, a) {
                    return Err(ModelError::Strategy(format!(
                        "{} plays unavailable action {} at {}",
                        game.agent_name(agent),
                        game.action_name(agent, a),
                        game.state_name(s)
                    )));
                }
                total += p;
            }
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(ModelError::Strategy(format!(
                    "strategy for {} at {} sums to {total}",
                    game.agent_name(agent),
                    game.state_name(s)
                )));
            }
        }
        Ok(Self { agent, choice })
    }

    pub fn uniform(game: &Game, agent: AgentId) -> Self {
        let n_actions = game.actions(agent).len();
        let choice = (0..game.num_states())
            .map(|s| {
                let avail = game.available(s, agent);
                let mut row = vec![0.0; n_actions];
                for &a in avail {
                    row[a] = 1.0 / avail.len() as f64;
                }
                row
            })
            .collect();
        Self { agent, choice }
    }

    /// Deterministic strategy choosing `pick(state)` everywhere.
    pub fn pure(game: &Game, agent: AgentId, pick: impl Fn(StateId) -> ActionId) -> Result<Self, ModelError> {
        let n_actions = game.actions(agent).len();
        let choice = (0..game.num_states())
            .map(|s| {
                let mut row = vec![0.0; n_actions];
                row[pick(s)] = 1.0;
                row
            })
            .collect();
        Self::new(game, agent, choice)
    }

    pub fn agent(&self) -> AgentId {
        self.agent
    }

    pub fn prob(&self, state: StateId, action: ActionId) -> f64 {
        self.choice[state][action]
    }

    pub fn row(&self, state: StateId) -> &[f64] {
        &self.choice[state]
    }
}

/// Strategies for a (possibly partial) set of agents.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyProfile {
    entries: Vec<Option<Strategy>>,
}

impl StrategyProfile {
    pub fn empty(num_agents: usize) -> Self {
        Self {
            entries: vec![None; num_agents],
        }
    }

    pub fn from_strategies(game: &Game, strategies: impl IntoIterator<Item = Strategy>) -> Result<Self, ModelError> {
        let mut p = Self::empty(game.num_agents());
        for s in strategies {
            p.set(s)?;
        }
        Ok(p)
    }

    pub fn uniform(game: &Game) -> Self {
        Self {
            entries: (0..game.num_agents())
                .map(|i| Some(Strategy::uniform(game, i)))
                .collect(),
        }
    }

    pub fn set(&mut self, strategy: Strategy) -> Result<(), ModelError> {
        let agent = strategy.agent;
        let slot = self
            .entries
            .get_mut(agent)
            .ok_or_else(|| ModelError::UnknownAgent(agent.to_string()))?;
        *slot = Some(strategy);
        Ok(())
    }

    pub fn get(&self, agent: AgentId) -> Option<&Strategy> {
        self.entries.get(agent).and_then(Option::as_ref)
    }

    pub fn num_agents(&self) -> usize {
        self.entries.len()
    }

    pub fn scope(&self) -> Coalition {
        Coalition::from_members(
            self.entries
                .iter()
                .enumerate()
                .filter(|(_, e)| e.is_some())
                .map(|(i, _)| i),
        )
    }

    pub fn is_full(&self) -> bool {
        self.entries.iter().all(Option::is_some)
    }

    /// `σ_J`: keeps only the strategies of `coalition`.
    pub fn restrict(&self, coalition: Coalition) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| if coalition.contains(i) { e.clone() } else { None })
                .collect(),
        }
    }

    /// Probability that the fixed agents jointly play their part of `joint`
    /// at `state`; agents outside the scope contribute a factor of one.
    pub fn fixed_weight(&self, state: StateId, joint: &JointAction) -> f64 {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|s| s.prob(state, joint.action(i))))
            .product()
    }

    pub fn require_full(&self) -> Result<(), ModelError> {
        if self.is_full() {
            Ok(())
        } else {
            Err(ModelError::PartialProfile)
        }
    }
}

/// A finite history `s0 a0 s1 … s_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct History {
    pub states: Vec<StateId>,
    pub joint_actions: Vec<JointAction>,
}

impl History {
    pub fn new(states: Vec<StateId>, joint_actions: Vec<JointAction>) -> Result<Self, ModelError> {
        if states.is_empty() || joint_actions.len() + 1 != states.len() {
            return Err(ModelError::InvalidHistory(
                "a history needs exactly one more state than joint actions".into(),
            ));
        }
        Ok(Self { states, joint_actions })
    }

    pub fn initial(state: StateId) -> Self {
        Self {
            states: vec![state],
            joint_actions: vec![],
        }
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.joint_actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joint_actions.is_empty()
    }

    pub fn push(&mut self, joint: JointAction, state: StateId) {
        self.joint_actions.push(joint);
        self.states.push(state);
    }

    /// Checks availability and positive transition probability of every step.
    pub fn validate(&self, game: &Game) -> Result<(), ModelError> {
        for (j, ja) in self.joint_actions.iter().enumerate() {
            let s = self.states[j];
            let next = self.states[j + 1];
            let dist = game.transition(s, ja).ok_or_else(|| {
                ModelError::InvalidHistory(format!(
                    "step {j}: {} is not available at {}",
                    game.format_joint(ja),
                    game.state_name(s)
                ))
            })?;
            if dist.prob(next) <= 0.0 {
                return Err(ModelError::InvalidHistory(format!(
                    "step {j}: {} cannot reach {} from {}",
                    game.format_joint(ja),
                    game.state_name(next),
                    game.state_name(s)
                )));
            }
        }
        Ok(())
    }

    pub fn display(&self, game: &Game) -> String {
        let mut out = game.state_name(self.states[0]).to_string();
        for (ja, &s) in self.joint_actions.iter().zip(&self.states[1..]) {
            out.push_str(&format!(" -{}-> {}", game.format_joint(ja), game.state_name(s)));
        }
        out
    }
}
