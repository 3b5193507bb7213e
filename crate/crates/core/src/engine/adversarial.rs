//! Backward induction against adversaries: extremal probabilities over the
//! unfixed agents, and zero-sum coalition game values.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::chain::Track;
use super::matrix::{matrix_game_value, MatrixGame};
use crate::logic::{Outcome, Relation};
use crate::model::{ActionId, AgentId, Coalition, Game, JointAction, RewardStructure, StateId, StrategyProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Direction::Min => candidate < incumbent,
            Direction::Max => candidate > incumbent,
        }
    }

    /// Direction in which a coalition pushes a value to meet `relation`.
    pub fn toward(relation: Relation) -> Self {
        if relation.is_lower_bound() {
            Direction::Max
        } else {
            Direction::Min
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::Min => Direction::Max,
            Direction::Max => Direction::Min,
        }
    }
}

/// One decision of a step-indexed deterministic adversary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyEntry {
    pub step: usize,
    pub state: StateId,
    /// Outcome progress at this node, as an opaque key.
    pub progress: u64,
    /// One action per adversary agent, in agent order.
    pub actions: Vec<ActionId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversaryPolicy {
    pub agents: Vec<AgentId>,
    pub entries: Vec<PolicyEntry>,
}

impl AdversaryPolicy {
    /// The adversary's choice at the root, if it has one.
    pub fn root_choice(&self) -> Option<&[ActionId]> {
        self.entries.iter().find(|e| e.step == 0).map(|e| e.actions.as_slice())
    }

    pub fn describe(&self, game: &Game) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| {
                let acts: Vec<String> = self
                    .agents
                    .iter()
                    .zip(&e.actions)
                    .map(|(&i, &a)| format!("{}={}", game.agent_name(i), game.action_name(i, a)))
                    .collect();
                format!("step {} at {}: {}", e.step, game.state_name(e.state), acts.join(","))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extremal {
    pub value: f64,
    pub policy: AdversaryPolicy,
}

fn project(joint: &JointAction, agents: &[AgentId]) -> Vec<ActionId> {
    agents.iter().map(|&i| joint.action(i)).collect()
}

struct ExtremalSolver<'a> {
    game: &'a Game,
    fixed: &'a StrategyProfile,
    outcome: &'a Outcome,
    direction: Direction,
    adversary: Vec<AgentId>,
    memo: HashMap<(usize, StateId, u64), f64>,
    policy: BTreeMap<(usize, StateId, u64), Vec<ActionId>>,
}

impl ExtremalSolver<'_> {
    fn value(&mut self, pos: usize, s: StateId, track: Option<Track>) -> f64 {
        let p = match track {
            None => return 0.0,
            Some(Track::Satisfied) => return 1.0,
            Some(Track::Open(p)) => p,
        };
        let key = (pos, s, p.key());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let game = self.game;
        let mut groups: BTreeMap<Vec<ActionId>, f64> = BTreeMap::new();
        for (ja, dist) in game.moves(s) {
            let w = self.fixed.fixed_weight(s, ja);
            let entry = groups.entry(project(ja, &self.adversary)).or_insert(0.0);
            if w <= 0.0 {
                continue;
            }
            let mut cont = 0.0;
            for (next, q) in dist.iter() {
                let t = Track::Open(p).advance(self.outcome, pos + 1, next);
                cont += q * self.value(pos + 1, next, t);
            }
            *entry += w * cont;
        }
        let mut best: Option<(&Vec<ActionId>, f64)> = None;
        for (choice, &v) in &groups {
            if best.is_none_or(|(_, b)| self.direction.better(v, b)) {
                best = Some((choice, v));
            }
        }
        let (choice, v) = best.expect("every state has a joint action");
        self.policy.insert(key, choice.clone());
        self.memo.insert(key, v);
        v
    }
}

/// Optimal probability of `outcome` from `start` when the agents in the
/// scope of `fixed` follow it and all others act as one adversary choosing
/// in `direction`. Ties go to the lexicographically smallest choice.
pub fn extremal_probability(
    game: &Game,
    fixed: &StrategyProfile,
    outcome: &Outcome,
    direction: Direction,
    start: StateId,
) -> Extremal {
    let scope = fixed.scope();
    let adversary: Vec<AgentId> = (0..game.num_agents()).filter(|&i| !scope.contains(i)).collect();
    let mut solver = ExtremalSolver {
        game,
        fixed,
        outcome,
        direction,
        adversary: adversary.clone(),
        memo: HashMap::new(),
        policy: BTreeMap::new(),
    };
    let value = solver.value(0, start, Track::start(outcome, start));
    let entries = solver
        .policy
        .into_iter()
        .map(|((step, state, progress), actions)| PolicyEntry {
            step,
            state,
            progress,
            actions,
        })
        .collect();
    Extremal {
        value,
        policy: AdversaryPolicy {
            agents: adversary,
            entries,
        },
    }
}

/// Value of a finite-horizon zero-sum game with its verdict against a bound.
#[derive(Clone, Debug, PartialEq)]
pub struct GameValue {
    pub value: f64,
    pub verdict: bool,
    /// Coalition's mixed choice at the root: (coalition actions, probability).
    pub root_strategy: Vec<(Vec<ActionId>, f64)>,
}

/// Step game at one node: rows are coalition choices, columns adversary
/// choices. Returns the value for a coalition optimising in `dir` and its
/// mixed row strategy.
fn solve_step(
    rows: &BTreeMap<Vec<ActionId>, BTreeMap<Vec<ActionId>, f64>>,
    dir: Direction,
) -> (f64, Vec<(Vec<ActionId>, f64)>) {
    let cols: Vec<&Vec<ActionId>> = rows.values().next().map(|r| r.keys().collect()).unwrap_or_default();
    let sign = if dir == Direction::Max { 1.0 } else { -1.0 };
    let matrix: Vec<Vec<f64>> = rows
        .values()
        .map(|r| cols.iter().map(|c| sign * r[*c]).collect())
        .collect();
    let game = MatrixGame::new(matrix).expect("step games are non-empty and finite");
    let sol = matrix_game_value(&game);
    let strategy = rows.keys().cloned().zip(sol.row).collect();
    (sign * sol.value, strategy)
}

struct GameSolver<'a> {
    game: &'a Game,
    outcome: &'a Outcome,
    coalition: Vec<AgentId>,
    adversary: Vec<AgentId>,
    dir: Direction,
    memo: HashMap<(usize, StateId, u64), f64>,
}

impl GameSolver<'_> {
    fn step_rows(
        &mut self,
        pos: usize,
        s: StateId,
        p: crate::logic::Progress,
    ) -> BTreeMap<Vec<ActionId>, BTreeMap<Vec<ActionId>, f64>> {
        let game = self.game;
        let mut rows: BTreeMap<Vec<ActionId>, BTreeMap<Vec<ActionId>, f64>> = BTreeMap::new();
        for (ja, dist) in game.moves(s) {
            let mut cont = 0.0;
            for (next, q) in dist.iter() {
                let t = Track::Open(p).advance(self.outcome, pos + 1, next);
                cont += q * self.value(pos + 1, next, t);
            }
            rows.entry(project(ja, &self.coalition))
                .or_default()
                .insert(project(ja, &self.adversary), cont);
        }
        rows
    }

    fn value(&mut self, pos: usize, s: StateId, track: Option<Track>) -> f64 {
        let p = match track {
            None => return 0.0,
            Some(Track::Satisfied) => return 1.0,
            Some(Track::Open(p)) => p,
        };
        let key = (pos, s, p.key());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let rows = self.step_rows(pos, s, p);
        let (v, _) = solve_step(&rows, self.dir);
        self.memo.insert(key, v);
        v
    }
}

fn split_agents(game: &Game, coalition: Coalition) -> (Vec<AgentId>, Vec<AgentId>) {
    (0..game.num_agents()).partition(|&i| coalition.contains(i))
}

/// `⟨⟨A⟩⟩P⋈p[ψ]` from `start`: the coalition optimises toward the bound,
/// the remaining agents oppose it, each node solved as a matrix game.
pub fn game_value_probability(
    game: &Game,
    coalition: Coalition,
    outcome: &Outcome,
    relation: Relation,
    bound: f64,
    start: StateId,
    tolerance: f64,
) -> GameValue {
    let (members, adversary) = split_agents(game, coalition);
    let dir = Direction::toward(relation);
    let mut solver = GameSolver {
        game,
        outcome,
        coalition: members,
        adversary,
        dir,
        memo: HashMap::new(),
    };
    let (value, root_strategy) = match Track::start(outcome, start) {
        None => (0.0, Vec::new()),
        Some(Track::Satisfied) => (1.0, Vec::new()),
        Some(Track::Open(p)) => {
            let rows = solver.step_rows(0, start, p);
            solve_step(&rows, dir)
        }
    };
    GameValue {
        value,
        verdict: relation.holds(value, bound, tolerance),
        root_strategy,
    }
}

/// How the agents outside the coalition behave for the reward operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardAdversary {
    /// They oppose the bound direction.
    #[default]
    Hostile,
    /// They cooperate with the coalition.
    Any,
}

struct RewardSolver<'a> {
    game: &'a Game,
    outcome: &'a Outcome,
    reward: &'a RewardStructure,
    coalition: Vec<AgentId>,
    adversary: Vec<AgentId>,
    dir: Direction,
    mode: RewardAdversary,
    horizon: usize,
    memo: HashMap<(usize, StateId, u64, u64), f64>,
}

impl RewardSolver<'_> {
    fn step_rows(
        &mut self,
        pos: usize,
        s: StateId,
        track: Track,
        acc: f64,
    ) -> BTreeMap<Vec<ActionId>, BTreeMap<Vec<ActionId>, f64>> {
        let game = self.game;
        let mut rows: BTreeMap<Vec<ActionId>, BTreeMap<Vec<ActionId>, f64>> = BTreeMap::new();
        for (ja, dist) in game.moves(s) {
            let acc2 = acc + self.reward.reward_of(s, ja);
            let mut cont = 0.0;
            for (next, q) in dist.iter() {
                let t = track.advance(self.outcome, pos + 1, next);
                cont += q * self.value(pos + 1, next, t, acc2);
            }
            rows.entry(project(ja, &self.coalition))
                .or_default()
                .insert(project(ja, &self.adversary), cont);
        }
        rows
    }

    fn solve(&self, rows: &BTreeMap<Vec<ActionId>, BTreeMap<Vec<ActionId>, f64>>) -> (f64, Vec<(Vec<ActionId>, f64)>) {
        match self.mode {
            RewardAdversary::Hostile => solve_step(rows, self.dir),
            RewardAdversary::Any => {
                let mut best: Option<(&Vec<ActionId>, f64)> = None;
                for (row, cells) in rows {
                    for &v in cells.values() {
                        if best.is_none_or(|(_, b)| self.dir.better(v, b)) {
                            best = Some((row, v));
                        }
                    }
                }
                let (row, v) = best.expect("non-empty step game");
                (
                    v,
                    rows.keys()
                        .map(|r| (r.clone(), if r == row { 1.0 } else { 0.0 }))
                        .collect(),
                )
            }
        }
    }

    fn value(&mut self, pos: usize, s: StateId, track: Option<Track>, acc: f64) -> f64 {
        let Some(track) = track else { return 0.0 };
        if pos >= self.horizon {
            return match track {
                Track::Satisfied => acc + self.reward.state_reward(s),
                Track::Open(_) => 0.0,
            };
        }
        let key = (pos, s, track.key(), acc.to_bits());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let rows = self.step_rows(pos, s, track, acc);
        let (v, _) = self.solve(&rows);
        self.memo.insert(key, v);
        v
    }
}

/// `⟨⟨A⟩⟩R{r}⋈q[ψ]` from `start` over length-k histories, with the reward
/// accumulated so far part of the induction state.
#[allow(clippy::too_many_arguments)]
pub fn robust_expected_reward(
    game: &Game,
    coalition: Coalition,
    reward: &RewardStructure,
    outcome: &Outcome,
    relation: Relation,
    bound: f64,
    mode: RewardAdversary,
    start: StateId,
    tolerance: f64,
) -> GameValue {
    let (members, adversary) = split_agents(game, coalition);
    let horizon = outcome.horizon();
    let mut solver = RewardSolver {
        game,
        outcome,
        reward,
        coalition: members,
        adversary,
        dir: Direction::toward(relation),
        mode,
        horizon,
        memo: HashMap::new(),
    };
    let (value, root_strategy) = match Track::start(outcome, start) {
        None => (0.0, Vec::new()),
        Some(t) if horizon == 0 => (solver.value(0, start, Some(t), 0.0), Vec::new()),
        Some(t) => {
            let rows = solver.step_rows(0, start, t, 0.0);
            solver.solve(&rows)
        }
    };
    GameValue {
        value,
        verdict: relation.holds(value, bound, tolerance),
        root_strategy,
    }
}
