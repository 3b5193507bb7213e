//! Parametric systems: strategy probabilities of selected agents become
//! variables and transition probabilities become polynomials.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::polynomial::Polynomial;
use crate::error::{Error, Result};
use crate::model::{
    validate_game, ActionId, AgentId, Coalition, Game, JointAction, RawGame, RawState, RawTransition, StateId,
    Strategy, StrategyProfile, PROBABILITY_TOLERANCE,
};

pub type Poly = Polynomial<f64>;

/// The probability that `agent` plays `action` at `state`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Param {
    pub agent: AgentId,
    pub state: StateId,
    pub action: ActionId,
}

/// The variables of one agent at one state, one per available action.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub agent: AgentId,
    pub state: StateId,
    pub actions: Vec<ActionId>,
    /// Variable index of each action; contiguous.
    pub vars: Vec<usize>,
}

/// A named parameter assignment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Evaluation(pub BTreeMap<String, f64>);

/// Result of the admissibility check; empty when admissible.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Admissibility {
    pub violations: Vec<String>,
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Psmas {
    game: Game,
    parametrized: Coalition,
    constants: StrategyProfile,
    params: Vec<Param>,
    vars: Arc<[String]>,
    blocks: Vec<Block>,
    index: HashMap<Param, usize>,
    /// `[state][joint index]` → successors with their polynomial weight.
    transitions: Vec<Vec<Vec<(StateId, Poly)>>>,
}

/// Parametrises the strategies of `agents`; every other agent must have a
/// constant strategy in `constants`.
pub fn build_psmas(game: &Game, agents: Coalition, constants: &StrategyProfile) -> Result<Psmas> {
    if agents.is_empty() {
        return Err(Error::Invalid("no agent to parametrise".into()));
    }
    for i in 0..game.num_agents() {
        if !agents.contains(i) && constants.get(i).is_none() {
            return Err(Error::MissingConstantStrategy(game.agent_name(i).to_string()));
        }
    }
    let mut params = Vec::new();
    let mut names = Vec::new();
    let mut blocks = Vec::new();
    for i in agents.members().filter(|&i| i < game.num_agents()) {
        for s in 0..game.num_states() {
            let mut vars = Vec::new();
            for &a in game.available(s, i) {
                vars.push(params.len());
                params.push(Param {
                    agent: i,
                    state: s,
                    action: a,
                });
                names.push(format!(
                    "x[{},{},{}]",
                    game.agent_name(i),
                    game.state_name(s),
                    game.action_name(i, a)
                ));
            }
            blocks.push(Block {
                agent: i,
                state: s,
                actions: game.available(s, i).to_vec(),
                vars,
            });
        }
    }
    let vars: Arc<[String]> = names.into();
    let index: HashMap<Param, usize> = params.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let fixed = constants.restrict(Coalition::grand(game.num_agents()).difference(agents));

    let transitions = (0..game.num_states())
        .map(|s| {
            game.moves(s)
                .map(|(ja, dist)| {
                    let mut mono = vec![0u32; vars.len()];
                    for i in agents.members().filter(|&i| i < game.num_agents()) {
                        mono[index[&Param {
                            agent: i,
                            state: s,
                            action: ja.action(i),
                        }]] += 1;
                    }
                    let w = fixed.fixed_weight(s, ja);
                    dist.iter()
                        .filter(|_| w > 0.0)
                        .map(|(next, p)| (next, Polynomial::from_terms(&vars, [(mono.clone(), w * p)])))
                        .collect()
                })
                .collect()
        })
        .collect();

    Ok(Psmas {
        game: game.clone(),
        parametrized: agents,
        constants: fixed,
        params,
        vars,
        blocks,
        index,
        transitions,
    })
}

impl Psmas {
    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn parametrized(&self) -> Coalition {
        self.parametrized
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn vars(&self) -> &Arc<[String]> {
        &self.vars
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn var_index(&self, agent: AgentId, state: StateId, action: ActionId) -> Option<usize> {
        self.index.get(&Param { agent, state, action }).copied()
    }

    /// Polynomial weight of each successor of `(state, joint)`.
    pub fn transition(&self, state: StateId, joint: &JointAction) -> Option<&[(StateId, Poly)]> {
        let k = self.game.joint_index(state, joint)?;
        Some(&self.transitions[state][k])
    }

    /// `(joint index, successor, weight)` for every outgoing edge of `state`.
    pub fn edges(&self, state: StateId) -> impl Iterator<Item = (usize, StateId, &Poly)> + '_ {
        self.transitions[state]
            .iter()
            .enumerate()
            .flat_map(|(k, row)| row.iter().map(move |(s, p)| (k, *s, p)))
    }

    pub fn zero(&self) -> Poly {
        Polynomial::zero(&self.vars)
    }

    pub fn one(&self) -> Poly {
        Polynomial::constant(&self.vars, 1.0)
    }

    /// Eliminates the last variable of every block via `x_last = 1 − Σ others`.
    pub fn reduce(&self, p: &Poly) -> Poly {
        let mut out = p.clone();
        for b in &self.blocks {
            let (&last, rest) = b.vars.split_last().expect("blocks are non-empty");
            let mut q = self.one();
            for &v in rest {
                q = &q - &Polynomial::var(&self.vars, v);
            }
            out = out.substitute(last, &q);
        }
        out
    }

    /// Variables left after [`Psmas::reduce`].
    pub fn free_vars(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .flat_map(|b| b.vars[..b.vars.len() - 1].iter().copied())
            .collect()
    }

    pub fn point(&self, eval: &Evaluation) -> Result<Vec<f64>> {
        self.vars
            .iter()
            .map(|v| eval.0.get(v).copied().ok_or_else(|| Error::MissingParameter(v.clone())))
            .collect()
    }

    pub fn evaluation(&self, point: &[f64]) -> Evaluation {
        Evaluation(self.vars.iter().cloned().zip(point.iter().copied()).collect())
    }

    /// Checks that parameters lie in `[0,1]`, sum to one per block, and that
    /// every transition weight is a probability.
    pub fn admissible(&self, eval: &Evaluation) -> Result<Admissibility> {
        let x = self.point(eval)?;
        Ok(self.admissible_point(&x))
    }

    pub fn admissible_point(&self, x: &[f64]) -> Admissibility {
        let tol = PROBABILITY_TOLERANCE;
        let mut violations = Vec::new();
        for s in 0..self.game.num_states() {
            for (k, next, p) in self.edges(s) {
                let w = p.eval(x);
                if !(-tol..=1.0 + tol).contains(&w) {
                    let ja = &self.game.joint_actions(s)[k];
                    violations.push(format!(
                        "(1) weight {w} of {} {} -> {}",
                        self.game.state_name(s),
                        self.game.format_joint(ja),
                        self.game.state_name(next)
                    ));
                }
            }
        }
        for (v, &value) in self.vars.iter().zip(x) {
            if !(-tol..=1.0 + tol).contains(&value) {
                violations.push(format!("(2) {v} = {value} is outside [0,1]"));
            }
        }
        for b in &self.blocks {
            let sum: f64 = b.vars.iter().map(|&v| x[v]).sum();
            if (sum - 1.0).abs() > tol {
                violations.push(format!(
                    "(3) parameters of {} at {} sum to {sum}",
                    self.game.agent_name(b.agent),
                    self.game.state_name(b.state)
                ));
            }
        }
        Admissibility { violations }
    }

    /// The full strategy profile an admissible point describes.
    pub fn profile_at(&self, x: &[f64]) -> Result<StrategyProfile> {
        let mut profile = self.constants.clone();
        for i in self.parametrized.members().filter(|&i| i < self.game.num_agents()) {
            let choice = (0..self.game.num_states())
                .map(|s| {
                    (0..self.game.actions(i).len())
                        .map(|a| self.var_index(i, s, a).map_or(0.0, |v| x[v].max(0.0)))
                        .collect()
                })
                .collect();
            profile.set(Strategy::new(&self.game, i, choice)?)?;
        }
        Ok(profile)
    }

    /// Point playing `choice(block)` purely in every block.
    pub fn pure_point(&self, mut choice: impl FnMut(&Block) -> ActionId) -> Vec<f64> {
        let mut x = vec![0.0; self.vars.len()];
        for b in &self.blocks {
            let a = choice(b);
            let k = b.actions.iter().position(|&c| c == a).expect("available action");
            x[b.vars[k]] = 1.0;
        }
        x
    }

    /// The Markov chain obtained by substituting `x`, as a game with a single
    /// one-action agent.
    pub fn instantiate(&self, x: &[f64]) -> Result<Game> {
        let g = &self.game;
        let mut raw = RawGame {
            agents: vec!["chain".into()],
            actions: vec![("chain".into(), vec!["step".into()])],
            atoms: Some(g.atoms().to_vec()),
            ..RawGame::default()
        };
        for s in 0..g.num_states() {
            raw.states.push(RawState {
                name: g.state_name(s).to_string(),
                initial: s == g.initial(),
                labels: g.labels(s).iter().map(|&a| g.atoms()[a].clone()).collect(),
            });
            let mut succ: BTreeMap<StateId, f64> = BTreeMap::new();
            for (_, next, p) in self.edges(s) {
                *succ.entry(next).or_insert(0.0) += p.eval(x);
            }
            raw.transitions.push(RawTransition {
                state: g.state_name(s).to_string(),
                pattern: vec![None],
                successors: succ
                    .into_iter()
                    .filter(|&(_, p)| p != 0.0)
                    // Merged weights may drift just past 1 by rounding.
                    .map(|(t, p)| {
                        let p = if (-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&p) {
                            p.clamp(0.0, 1.0)
                        } else {
                            p
                        };
                        (g.state_name(t).to_string(), p)
                    })
                    .collect(),
            });
        }
        Ok(validate_game(&raw)?)
    }
}
