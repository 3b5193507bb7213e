use super::game::{ActionId, Game, JointAction, StateId};
use super::ModelError;

/// An action-reward rule. `state == None` matches every state and `None`
/// pattern entries are per-agent wildcards.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionRule {
    pub state: Option<StateId>,
    pub pattern: Vec<Option<ActionId>>,
    pub value: f64,
}

impl ActionRule {
    pub fn matches(&self, state: StateId, joint: &JointAction) -> bool {
        self.state.is_none_or(|s| s == state)
            && self
                .pattern
                .iter()
                .zip(&joint.0)
                .all(|(p, a)| p.is_none_or(|p| p == *a))
    }
}

/// State rewards plus additive action-reward rules.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardStructure {
    name: String,
    state_rewards: Vec<f64>,
    rules: Vec<ActionRule>,
}

impl RewardStructure {
    pub fn new(game: &Game, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            state_rewards: vec![0.0; game.num_states()],
            rules: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Adds `value` to the state reward of `state`.
    pub fn add_state_reward(&mut self, state: StateId, value: f64) -> Result<(), ModelError> {
        if !value.is_finite() {
            return Err(ModelError::Reward(format!("non-finite state reward {value}")));
        }
        let slot = self
            .state_rewards
            .get_mut(state)
            .ok_or_else(|| ModelError::UnknownState(state.to_string()))?;
        *slot += value;
        Ok(())
    }

    pub fn add_rule(&mut self, rule: ActionRule) -> Result<(), ModelError> {
        if !rule.value.is_finite() {
            return Err(ModelError::Reward(format!("non-finite action reward {}", rule.value)));
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn state_reward(&self, state: StateId) -> f64 {
        self.state_rewards[state]
    }

    pub fn state_rewards(&self) -> &[f64] {
        &self.state_rewards
    }

    pub fn rules(&self) -> &[ActionRule] {
        &self.rules
    }

    /// Sum of all rules matching `(state, joint)`; zero when none match.
    pub fn action_reward(&self, state: StateId, joint: &JointAction) -> f64 {
        self.rules
            .iter()
            .filter(|r| r.matches(state, joint))
            .map(|r| r.value)
            .sum()
    }

    /// `r_s(state) + r_a(state, joint)`.
    pub fn reward_of(&self, state: StateId, joint: &JointAction) -> f64 {
        self.state_reward(state) + self.action_reward(state, joint)
    }

    pub fn is_zero(&self) -> bool {
        self.state_rewards.iter().all(|&r| r == 0.0) && self.rules.iter().all(|r| r.value == 0.0)
    }
}
