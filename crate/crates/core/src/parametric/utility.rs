//! Responsibility-aware utilities `u_i = payoff_i − λ·D^i`, either derived
//! from a parametric system or read from an override file.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::polynomial::{parse_polynomial, variables};
use super::psmas::{Poly, Psmas};
use super::symbolic::{all_histories, decision_states, symbolic_expected_payoff, symbolic_responsibility};
use crate::engine::expected_reward;
use crate::error::{Error, Result};
use crate::logic::Outcome;
use crate::model::{ActionId, AgentId, Coalition, Game, RewardStructure, StateId};
use crate::responsibility::{Attribution, Mode, DEFAULT_CAP};

#[derive(Clone, Debug, PartialEq)]
pub struct UtilityFunction {
    pub agent: AgentId,
    pub payoff: Poly,
    pub responsibility: Poly,
    pub lambda: f64,
    pub combined: Poly,
}

/// One agent's decision at one state: a probability per available action.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceBlock {
    pub agent: AgentId,
    pub state: StateId,
    pub actions: Vec<ActionId>,
    /// Index of the first action's coordinate.
    pub offset: usize,
    /// False when the state cannot be visited before the horizon.
    pub reachable: bool,
}

/// Strategy coordinates: the concatenated per-block action probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpace {
    pub agent_names: Vec<String>,
    pub state_names: Vec<String>,
    pub action_names: Vec<Vec<String>>,
    pub blocks: Vec<SpaceBlock>,
    pub dim: usize,
    /// Reported parameters: name and coordinate.
    pub named: Vec<(String, usize)>,
}

impl ParamSpace {
    fn new(game: &Game, cells: Vec<(AgentId, StateId)>) -> Self {
        let mut blocks = Vec::new();
        let mut dim = 0;
        for (agent, state) in cells {
            let actions = game.available(state, agent).to_vec();
            blocks.push(SpaceBlock {
                agent,
                state,
                offset: dim,
                reachable: true,
                actions: actions.clone(),
            });
            dim += actions.len();
        }
        Self {
            agent_names: game.agents().to_vec(),
            state_names: game.states().to_vec(),
            action_names: (0..game.num_agents()).map(|i| game.actions(i).to_vec()).collect(),
            blocks,
            dim,
            named: Vec::new(),
        }
    }

    pub fn block_label(&self, b: &SpaceBlock) -> String {
        format!("{}@{}", self.agent_names[b.agent], self.state_names[b.state])
    }

    pub fn action_name(&self, b: &SpaceBlock, a: ActionId) -> &str {
        &self.action_names[b.agent][a]
    }

    /// Marks blocks outside `states` as unreachable.
    pub fn restrict_to(&mut self, states: &BTreeSet<StateId>) {
        for b in &mut self.blocks {
            b.reachable = states.contains(&b.state);
        }
    }

    /// Agents owning at least one block, ascending.
    pub fn agents(&self) -> Vec<AgentId> {
        let mut a: Vec<AgentId> = self.blocks.iter().map(|b| b.agent).collect();
        a.sort_unstable();
        a.dedup();
        a
    }

    /// Sets block `b` to play its `k`-th action purely.
    pub fn set_pure(&self, y: &mut [f64], b: &SpaceBlock, k: usize) {
        for j in 0..b.actions.len() {
            y[b.offset + j] = if j == k { 1.0 } else { 0.0 };
        }
    }
}

/// Utilities as functions of strategy coordinates.
pub trait Utilities: Sync {
    fn space(&self) -> &ParamSpace;

    fn utility(&self, agent: AgentId, y: &[f64]) -> f64;

    /// Whether any utility can depend on block `b`; `None` if unknown.
    fn depends_on_block(&self, _b: &SpaceBlock) -> Option<bool> {
        None
    }
}

/// Polynomial utilities over named variables bound to coordinates.
#[derive(Clone, Debug)]
pub struct PolyUtilities {
    space: ParamSpace,
    /// Variable bound to each coordinate, if any.
    coord_var: Vec<Option<usize>>,
    num_vars: usize,
    polys: BTreeMap<AgentId, Poly>,
}

impl PolyUtilities {
    /// Utilities over the full parameter set of `psmas`.
    pub fn from_psmas(psmas: &Psmas, utilities: &[UtilityFunction]) -> Self {
        let cells = psmas.blocks().iter().map(|b| (b.agent, b.state)).collect();
        let mut space = ParamSpace::new(psmas.game(), cells);
        let mut coord_var = vec![None; space.dim];
        for (sb, pb) in space.blocks.iter().zip(psmas.blocks()) {
            for (k, &v) in pb.vars.iter().enumerate() {
                coord_var[sb.offset + k] = Some(v);
            }
        }
        space.named = psmas.vars().iter().cloned().zip(0..).collect();
        Self {
            space,
            coord_var,
            num_vars: psmas.vars().len(),
            polys: utilities.iter().map(|u| (u.agent, u.combined.clone())).collect(),
        }
    }

    /// Reads `param NAME = AGENT STATE ACTION` and `u AGENT = POLY` lines.
    /// Within a block at most one action may stay undeclared; its
    /// probability is implied by the others.
    pub fn from_override(text: &str, game: &Game) -> Result<Self> {
        let mut params: Vec<(String, AgentId, StateId, ActionId)> = Vec::new();
        let mut raw_utils: Vec<(usize, AgentId, String)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let lineno = n + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Invalid(format!("utility file line {lineno}: {m}"));
            let (head, rhs) = line.split_once('=').ok_or_else(|| err("expected `=`".into()))?;
            let head: Vec<&str> = head.split_whitespace().collect();
            match head.as_slice() {
                ["param", name] => {
                    let parts: Vec<&str> = rhs.split_whitespace().collect();
                    let [agent, state, action] = parts.as_slice() else {
                        return Err(err("expected `param NAME = AGENT STATE ACTION`".into()));
                    };
                    let i = game
                        .agent_id(agent)
                        .ok_or_else(|| err(format!("unknown agent `{agent}`")))?;
                    let s = game
                        .state_id(state)
                        .ok_or_else(|| err(format!("unknown state `{state}`")))?;
                    let a = game
                        .action_id(i, action)
                        .filter(|&a| game.is_available(s, i, a))
                        .ok_or_else(|| err(format!("action `{action}` is not available to {agent} at {state}")))?;
                    if params.iter().any(|p| p.0 == *name) {
                        return Err(err(format!("parameter `{name}` declared twice")));
                    }
                    if params.iter().any(|p| (p.1, p.2, p.3) == (i, s, a)) {
                        return Err(err(format!("{agent} {state} {action} already has a parameter")));
                    }
                    params.push((name.to_string(), i, s, a));
                }
                ["u", agent] => {
                    let i = game
                        .agent_id(agent)
                        .ok_or_else(|| err(format!("unknown agent `{agent}`")))?;
                    if raw_utils.iter().any(|u| u.1 == i) {
                        return Err(err(format!("second utility for {agent}")));
                    }
                    raw_utils.push((lineno, i, rhs.trim().to_string()));
                }
                _ => return Err(err("expected a `param` or `u` declaration".into())),
            }
        }
        let vars: Arc<[String]> = variables(params.iter().map(|p| p.0.clone()));
        let mut cells: Vec<(AgentId, StateId)> = params.iter().map(|p| (p.1, p.2)).collect();
        cells.sort_unstable();
        cells.dedup();
        let mut space = ParamSpace::new(game, cells);
        let mut coord_var = vec![None; space.dim];
        for (v, p) in params.iter().enumerate() {
            let b = space
                .blocks
                .iter()
                .find(|b| (b.agent, b.state) == (p.1, p.2))
                .expect("block for every parameter");
            let k = b.actions.iter().position(|&a| a == p.3).expect("available action");
            coord_var[b.offset + k] = Some(v);
        }
        for b in &space.blocks {
            let undeclared = (0..b.actions.len())
                .filter(|k| coord_var[b.offset + k].is_none())
                .count();
            if undeclared > 1 {
                return Err(Error::Invalid(format!(
                    "utility file: {} leaves {undeclared} actions without a parameter",
                    space.block_label(b)
                )));
            }
        }
        let mut polys = BTreeMap::new();
        for (lineno, i, text) in raw_utils {
            let p = parse_polynomial(&text, &vars)
                .map_err(|e| Error::Invalid(format!("utility file line {lineno}: {e}")))?;
            polys.insert(i, p);
        }
        for i in space.agents() {
            if !polys.contains_key(&i) {
                return Err(Error::Invalid(format!(
                    "utility file: no utility for {}",
                    game.agent_name(i)
                )));
            }
        }
        space.named = params
            .iter()
            .enumerate()
            .map(|(v, p)| {
                let b = space
                    .blocks
                    .iter()
                    .find(|b| (b.agent, b.state) == (p.1, p.2))
                    .expect("block");
                let k = b.actions.iter().position(|&a| a == p.3).expect("action");
                debug_assert_eq!(coord_var[b.offset + k], Some(v));
                (p.0.clone(), b.offset + k)
            })
            .collect();
        Ok(Self {
            space,
            coord_var,
            num_vars: vars.len(),
            polys,
        })
    }

    /// Marks blocks at states not visited within `horizon` steps of `start`
    /// as unreachable.
    pub fn within_horizon(mut self, psmas: &Psmas, horizon: usize, start: StateId) -> Self {
        self.space.restrict_to(&decision_states(psmas, horizon, start));
        self
    }

    pub fn polynomial(&self, agent: AgentId) -> Option<&Poly> {
        self.polys.get(&agent)
    }

    fn vars_at(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.num_vars];
        for (c, v) in self.coord_var.iter().enumerate() {
            if let Some(v) = v {
                x[*v] = y[c];
            }
        }
        x
    }
}

impl Utilities for PolyUtilities {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn utility(&self, agent: AgentId, y: &[f64]) -> f64 {
        self.polys.get(&agent).map_or(0.0, |p| p.eval(&self.vars_at(y)))
    }

    fn depends_on_block(&self, b: &SpaceBlock) -> Option<bool> {
        let vars: Vec<usize> = (0..b.actions.len())
            .filter_map(|k| self.coord_var[b.offset + k])
            .collect();
        Some(self.polys.values().any(|p| vars.iter().any(|&v| p.depends_on(v))))
    }
}

/// Per-agent reward structures used as payoffs.
pub type Payoffs<'a> = BTreeMap<AgentId, &'a RewardStructure>;

/// Symbolic utilities `payoff − λ·D` for every parametrised agent. The
/// payoff is the expected reward over all length-k histories, `k` being the
/// horizon of the outcome; the degree is taken over the whole agent set.
pub fn utility(
    psmas: &Psmas,
    lambda: f64,
    payoffs: &Payoffs<'_>,
    outcome: &Outcome,
    mode: Mode,
    start: StateId,
) -> Result<Vec<UtilityFunction>> {
    let horizon = all_histories(psmas, outcome.horizon());
    psmas
        .parametrized()
        .members()
        .filter(|&i| i < psmas.game().num_agents())
        .map(|i| {
            let reward = payoffs
                .get(&i)
                .ok_or_else(|| Error::UnknownReward(format!("payoff of {}", psmas.game().agent_name(i))))?;
            let payoff = symbolic_expected_payoff(psmas, reward, &horizon, start);
            let responsibility = if lambda == 0.0 {
                psmas.zero()
            } else {
                symbolic_responsibility(psmas, outcome, i, mode, start)?
            };
            let combined = &payoff - &responsibility.scale(lambda);
            Ok(UtilityFunction {
                agent: i,
                payoff,
                responsibility,
                lambda,
                combined,
            })
        })
        .collect()
}

/// Utilities evaluated numerically at each point; used when the degree is
/// not a polynomial.
pub struct NumericUtilities<'a> {
    psmas: &'a Psmas,
    space: ParamSpace,
    lambda: f64,
    payoffs: Payoffs<'a>,
    horizon: Outcome,
    outcome: &'a Outcome,
    mode: Mode,
    start: StateId,
}

impl<'a> NumericUtilities<'a> {
    pub fn new(
        psmas: &'a Psmas,
        lambda: f64,
        payoffs: Payoffs<'a>,
        outcome: &'a Outcome,
        mode: Mode,
        start: StateId,
    ) -> Result<Self> {
        for i in psmas
            .parametrized()
            .members()
            .filter(|&i| i < psmas.game().num_agents())
        {
            if !payoffs.contains_key(&i) {
                return Err(Error::UnknownReward(format!(
                    "payoff of {}",
                    psmas.game().agent_name(i)
                )));
            }
        }
        let cells = psmas.blocks().iter().map(|b| (b.agent, b.state)).collect();
        let mut space = ParamSpace::new(psmas.game(), cells);
        space.named = psmas.vars().iter().cloned().zip(0..).collect();
        space.restrict_to(&decision_states(psmas, outcome.horizon(), start));
        Ok(Self {
            psmas,
            space,
            lambda,
            payoffs,
            horizon: all_histories(psmas, outcome.horizon()),
            outcome,
            mode,
            start,
        })
    }
}

impl Utilities for NumericUtilities<'_> {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn utility(&self, agent: AgentId, y: &[f64]) -> f64 {
        let Ok(profile) = self.psmas.profile_at(y) else {
            return f64::NAN;
        };
        let game = self.psmas.game();
        let payoff = expected_reward(game, &profile, self.payoffs[&agent], &self.horizon, self.start)
            .expect("profile_at yields a full profile");
        if self.lambda == 0.0 {
            return payoff;
        }
        let degree = Attribution::new(game, &profile, self.outcome)
            .and_then(|a| {
                a.from_state(self.start).with_mode(self.mode).bcr_degree(
                    agent,
                    Coalition::grand(game.num_agents()),
                    DEFAULT_CAP,
                )
            })
            .unwrap_or(f64::NAN);
        payoff - self.lambda * degree
    }
}
