//! Backward counterfactual responsibility: coalition values, Shapley-based
//! degrees, attributable value, and the qualitative notion with witnesses.

mod report;
mod support;

use rayon::prelude::*;

pub use report::{ResponsibilityReport, TableRow};
pub use support::{check_avoidable, check_disjoint, compatible_history_count, find_history};

use crate::engine::{extremal_probability, Direction};
use crate::error::{Error, Result};
use crate::logic::Outcome;
use crate::model::{AgentId, Coalition, Game, History, StateId, StrategyProfile};
use crate::scalar::Scalar;

/// Whether coalition values take the adversarial minimum or maximum.
pub type Mode = Direction;

/// Default cap on the size of a responsibility scope.
pub const DEFAULT_CAP: usize = 12;

/// `v(A)` for every subset `A` of a scope.
#[derive(Clone, Debug, PartialEq)]
pub struct CoalitionValueTable {
    pub scope: Coalition,
    pub mode: Mode,
    pub horizon: usize,
    /// Subsets of the scope ordered by size, then lexicographically.
    pub entries: Vec<(Coalition, f64)>,
}

impl CoalitionValueTable {
    pub fn value(&self, coalition: Coalition) -> Option<f64> {
        self.entries.iter().find(|(c, _)| *c == coalition).map(|&(_, v)| v)
    }

    fn lookup(&self, coalition: Coalition) -> f64 {
        self.value(coalition).expect("coalition within scope")
    }

    /// Shapley degree of `agent` over the table's scope.
    pub fn degree(&self, agent: AgentId) -> Option<f64> {
        if !self.scope.contains(agent) {
            return None;
        }
        Some(shapley_value(self.scope, agent, |c| self.lookup(c)))
    }

    /// `v(scope) − v(∅)`.
    pub fn upsilon(&self) -> f64 {
        self.lookup(self.scope) - self.lookup(Coalition::empty())
    }
}

/// `Σ_{J ⊆ A∖{i}} |J|!(|A|−|J|−1)!/|A|! · (v(J∪{i}) − v(J))`, summed in
/// subset order.
pub fn shapley_value<T: Scalar>(scope: Coalition, agent: AgentId, v: impl Fn(Coalition) -> T) -> T {
    let n = scope.len();
    let fact = |k: usize| (1..=k).fold(T::one(), |acc, x| acc * T::from_usize_lossy(x));
    let total = fact(n);
    scope
        .without(agent)
        .subsets()
        .into_iter()
        .map(|j| {
            let weight = fact(j.len()) * fact(n - j.len() - 1) / total;
            let marginal = v(j.with(agent)) - v(j);
            if marginal == T::zero() {
                T::zero()
            } else {
                weight * marginal
            }
        })
        .sum()
}

/// A responsibility question: profile `σ`, outcome `φ`, evaluated from a
/// start state.
#[derive(Clone, Copy, Debug)]
pub struct Attribution<'a> {
    pub game: &'a Game,
    pub profile: &'a StrategyProfile,
    pub outcome: &'a Outcome,
    pub start: StateId,
    pub mode: Mode,
}

/// A coalition `J` and a history showing agent `i` bears qualitative bCR.
#[derive(Clone, Debug, PartialEq)]
pub struct BcrWitness {
    pub agent: AgentId,
    pub coalition: Coalition,
    /// A `σ_J`-compatible history violating the outcome.
    pub history: History,
    /// Number of `σ_{J∪{i}}`-compatible length-k histories, all satisfying.
    pub compatible_histories: u64,
}

impl<'a> Attribution<'a> {
    pub fn new(game: &'a Game, profile: &'a StrategyProfile, outcome: &'a Outcome) -> Result<Self> {
        if !profile.is_full() {
            return Err(Error::PartialProfile);
        }
        Ok(Self {
            game,
            profile,
            outcome,
            start: game.initial(),
            mode: Mode::Min,
        })
    }

    pub fn from_state(mut self, start: StateId) -> Self {
        self.start = start;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// `v_{σ,φ}(A)`: the agents of `A` follow `σ`, all others optimise in `mode`.
    pub fn coalition_value(&self, coalition: Coalition) -> f64 {
        let fixed = self.profile.restrict(coalition);
        extremal_probability(self.game, &fixed, self.outcome, self.mode, self.start).value
    }

    pub fn value_table(&self, scope: Coalition, cap: usize) -> Result<CoalitionValueTable> {
        if scope.len() > cap {
            return Err(Error::CoalitionTooLarge { size: scope.len(), cap });
        }
        let subsets = scope.subsets();
        let values: Vec<f64> = subsets.par_iter().map(|&c| self.coalition_value(c)).collect();
        Ok(CoalitionValueTable {
            scope,
            mode: self.mode,
            horizon: self.outcome.horizon(),
            entries: subsets.into_iter().zip(values).collect(),
        })
    }

    pub fn bcr_degree(&self, agent: AgentId, scope: Coalition, cap: usize) -> Result<f64> {
        if !scope.contains(agent) {
            return Err(Error::AgentNotInScope(self.game.agent_name(agent).to_string()));
        }
        let table = self.value_table(scope, cap)?;
        Ok(table.degree(agent).expect("agent checked against scope"))
    }

    /// `Υ = v(Ag) − v(∅)`.
    pub fn attributable_value(&self) -> f64 {
        self.coalition_value(Coalition::grand(self.game.num_agents())) - self.coalition_value(Coalition::empty())
    }

    /// Smallest `J ⊆ Ag∖{i}` such that some `σ_J`-compatible history
    /// violates the outcome while every `σ_{J∪{i}}`-compatible one satisfies it.
    pub fn qualitative_bcr(&self, agent: AgentId) -> Option<BcrWitness> {
        let others = Coalition::grand(self.game.num_agents()).without(agent);
        for j in others.subsets() {
            let restricted = self.profile.restrict(j.with(agent));
            if find_history(self.game, &restricted, self.outcome, false, self.start).is_some() {
                continue;
            }
            let fixed = self.profile.restrict(j);
            if let Some(history) = find_history(self.game, &fixed, self.outcome, false, self.start) {
                return Some(BcrWitness {
                    agent,
                    coalition: j,
                    history,
                    compatible_histories: compatible_history_count(
                        self.game,
                        &restricted,
                        self.outcome.horizon(),
                        self.start,
                    ),
                });
            }
        }
        None
    }

    pub fn report(&self, scope: Coalition, cap: usize) -> Result<ResponsibilityReport> {
        let table = self.value_table(scope, cap)?;
        Ok(ResponsibilityReport::new(self.game, &table))
    }
}
