//! Random games and brute-force oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use respgames::logic::{PathFormula, StateFormula};
use respgames::model::{
    validate_game, AgentId, Coalition, Game, JointAction, RawAvailability, RawGame, RawState, RawTransition,
    RewardStructure, StateId, Strategy, StrategyProfile,
};

pub const ATOMS: [&str; 3] = ["a", "b", "c"];

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_agents: usize,
    pub max_actions: usize,
    pub max_states: usize,
    /// Agent 0 has two actions that never influence transitions.
    pub dummy: bool,
    /// Agents 0 and 1 are interchangeable.
    pub symmetric: bool,
    /// Some actions are unavailable at some states.
    pub restrict: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            max_agents: 3,
            max_actions: 2,
            max_states: 4,
            dummy: false,
            symmetric: false,
            restrict: true,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn product(sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for set in sets {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                set.iter().map(move |&a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out
}

fn distribution(rng: &mut ChaCha8Rng, states: usize) -> Vec<(usize, f64)> {
    let mut targets: Vec<usize> = (0..states).collect();
    targets.shuffle(rng);
    let n = rng.gen_range(1..=states.min(3));
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut out: Vec<(usize, f64)> = targets[..n]
        .iter()
        .zip(&weights)
        .map(|(&t, w)| (t, w / total))
        .collect();
    let rest: f64 = out[..n - 1].iter().map(|x| x.1).sum();
    out[n - 1].1 = 1.0 - rest;
    out
}

pub fn random_game(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Game {
    let min_agents = if cfg.symmetric { 2 } else { 1 };
    let n = rng.gen_range(min_agents..=cfg.max_agents.max(min_agents));
    let m = rng.gen_range(1..=cfg.max_states);
    let mut n_actions: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=cfg.max_actions)).collect();
    if cfg.symmetric {
        n_actions[0] = 2;
        n_actions[1] = 2;
    }
    if cfg.dummy {
        n_actions[0] = 2;
    }
    let agents: Vec<String> = (0..n).map(|i| format!("A{i}")).collect();
    let action_name = |i: usize, a: usize| {
        if cfg.symmetric && i < 2 {
            format!("x{a}")
        } else {
            format!("a{i}_{a}")
        }
    };
    let mut raw = RawGame {
        agents: agents.clone(),
        actions: (0..n)
            .map(|i| {
                (
                    agents[i].clone(),
                    (0..n_actions[i]).map(|a| action_name(i, a)).collect(),
                )
            })
            .collect(),
        atoms: Some(ATOMS.iter().map(|s| s.to_string()).collect()),
        ..RawGame::default()
    };
    for s in 0..m {
        raw.states.push(RawState {
            name: format!("s{s}"),
            initial: s == 0,
            labels: ATOMS
                .iter()
                .filter(|_| rng.gen_bool(0.4))
                .map(|s| s.to_string())
                .collect(),
        });
    }
    for s in 0..m {
        let mut avail: Vec<Vec<usize>> = (0..n).map(|i| (0..n_actions[i]).collect()).collect();
        if cfg.restrict {
            for (i, set) in avail.iter_mut().enumerate() {
                let pinned = (cfg.symmetric && i < 2) || (cfg.dummy && i == 0);
                if set.len() > 1 && !pinned && rng.gen_bool(0.2) {
                    set.remove(rng.gen_range(0..set.len()));
                    raw.availability.push(RawAvailability {
                        state: format!("s{s}"),
                        agent: agents[i].clone(),
                        actions: set.iter().map(|&a| action_name(i, a)).collect(),
                    });
                }
            }
        }
        let mut table: BTreeMap<Vec<usize>, Vec<(usize, f64)>> = BTreeMap::new();
        for joint in product(&avail) {
            let mut key = joint.clone();
            if cfg.dummy {
                key[0] = 0;
            }
            if cfg.symmetric && key[1] < key[0] {
                key.swap(0, 1);
            }
            let dist = table.entry(key).or_insert_with(|| distribution(rng, m)).clone();
            raw.transitions.push(RawTransition {
                state: format!("s{s}"),
                pattern: joint
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| Some(action_name(i, a)))
                    .collect(),
                successors: dist.into_iter().map(|(t, p)| (format!("s{t}"), p)).collect(),
            });
        }
    }
    validate_game(&raw).expect("generated game is valid")
}

fn random_row(rng: &mut ChaCha8Rng, game: &Game, s: StateId, i: AgentId) -> Vec<f64> {
    let avail = game.available(s, i);
    let mut row = vec![0.0; game.actions(i).len()];
    if rng.gen_bool(0.3) {
        row[*avail.choose(rng).unwrap()] = 1.0;
    } else {
        let w: Vec<f64> = avail.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        for (&a, x) in avail.iter().zip(&w) {
            row[a] = x / total;
        }
    }
    row
}

pub fn random_strategy(rng: &mut ChaCha8Rng, game: &Game, i: AgentId) -> Strategy {
    let choice = (0..game.num_states()).map(|s| random_row(rng, game, s, i)).collect();
    Strategy::new(game, i, choice).expect("valid strategy")
}

/// A full profile; with `symmetric`, agents 0 and 1 play alike.
pub fn random_profile(rng: &mut ChaCha8Rng, game: &Game, symmetric: bool) -> StrategyProfile {
    let mut p = StrategyProfile::empty(game.num_agents());
    for i in 0..game.num_agents() {
        if symmetric && i == 1 {
            let rows = (0..game.num_states())
                .map(|s| p.get(0).unwrap().row(s).to_vec())
                .collect();
            p.set(Strategy::new(game, 1, rows).unwrap()).unwrap();
        } else {
            p.set(random_strategy(rng, game, i)).unwrap();
        }
    }
    p
}

/// Completes the agents outside `fixed` with random memoryless strategies.
pub fn complete(rng: &mut ChaCha8Rng, game: &Game, fixed: &StrategyProfile) -> StrategyProfile {
    let mut p = fixed.clone();
    for i in 0..game.num_agents() {
        if p.get(i).is_none() {
            p.set(random_strategy(rng, game, i)).unwrap();
        }
    }
    p
}

pub fn random_state_formula(rng: &mut ChaCha8Rng, depth: usize) -> StateFormula {
    match if depth == 0 {
        rng.gen_range(0..4)
    } else {
        rng.gen_range(0..7)
    } {
        0 => StateFormula::True,
        1..=3 => StateFormula::atom(ATOMS[rng.gen_range(0..ATOMS.len())]),
        4 => StateFormula::not(random_state_formula(rng, depth - 1)),
        5 => StateFormula::and(
            random_state_formula(rng, depth - 1),
            random_state_formula(rng, depth - 1),
        ),
        _ => StateFormula::or(
            random_state_formula(rng, depth - 1),
            random_state_formula(rng, depth - 1),
        ),
    }
}

/// A random bounded path formula with horizon at most `max_k`.
pub fn random_path_formula(rng: &mut ChaCha8Rng, max_k: usize) -> PathFormula {
    let k = rng.gen_range(1..=max_k);
    match rng.gen_range(0..4) {
        0 => PathFormula::next(random_state_formula(rng, 1)),
        1 => PathFormula::eventually(k, random_state_formula(rng, 1)),
        2 => PathFormula::always(k, random_state_formula(rng, 1)),
        _ => {
            let l = random_state_formula(rng, 1);
            let r = random_state_formula(rng, 1);
            PathFormula::until(l, k, r)
        }
    }
}

/// Propositional satisfaction, evaluated directly on labels.
pub fn holds(game: &Game, phi: &StateFormula, s: StateId) -> bool {
    match phi {
        StateFormula::True => true,
        StateFormula::False => false,
        StateFormula::Atom(a) => game.labels(s).iter().any(|&l| game.atoms()[l] == *a),
        StateFormula::Not(p) => !holds(game, p, s),
        StateFormula::And(a, b) => holds(game, a, s) && holds(game, b, s),
        other => panic!("not propositional: {other}"),
    }
}

pub fn horizon(psi: &PathFormula) -> usize {
    match psi {
        PathFormula::Next(_) => 1,
        PathFormula::Eventually(k, _) | PathFormula::Always(k, _) | PathFormula::Until(_, k, _) => *k,
    }
}

/// Bounded path semantics on a state sequence covering the horizon.
pub fn path_holds(game: &Game, psi: &PathFormula, states: &[StateId]) -> bool {
    match psi {
        PathFormula::Next(p) => holds(game, p, states[1]),
        PathFormula::Eventually(k, p) => states[..=*k].iter().any(|&s| holds(game, p, s)),
        PathFormula::Always(k, p) => states[..=*k].iter().all(|&s| holds(game, p, s)),
        PathFormula::Until(l, k, r) => {
            (0..=*k).any(|j| holds(game, r, states[j]) && states[..j].iter().all(|&s| holds(game, l, s)))
        }
    }
}

/// Probability of a joint action at `s` under the agents of `p` that have
/// a strategy.
pub fn weight(p: &StrategyProfile, s: StateId, joint: &JointAction) -> f64 {
    (0..joint.len())
        .filter_map(|i| p.get(i).map(|st| st.prob(s, joint.action(i))))
        .product()
}

/// Every positive-probability length-k history from `start` under the full
/// profile `p`, with its probability.
pub fn enumerate(
    game: &Game,
    p: &StrategyProfile,
    k: usize,
    start: StateId,
) -> Vec<(Vec<StateId>, Vec<JointAction>, f64)> {
    let mut out = vec![(vec![start], Vec::new(), 1.0)];
    for _ in 0..k {
        let mut next = Vec::new();
        for (states, acts, pr) in out {
            let s = *states.last().unwrap();
            for (ja, dist) in game.moves(s) {
                let w = weight(p, s, ja);
                if w == 0.0 {
                    continue;
                }
                for (t, q) in dist.iter() {
                    let mut st = states.clone();
                    st.push(t);
                    let mut ac = acts.clone();
                    ac.push(ja.clone());
                    next.push((st, ac, pr * w * q));
                }
            }
        }
        out = next;
    }
    out
}

pub fn brute_sat(game: &Game, p: &StrategyProfile, psi: &PathFormula, start: StateId) -> f64 {
    enumerate(game, p, horizon(psi), start)
        .into_iter()
        .filter(|(st, _, _)| path_holds(game, psi, st))
        .map(|x| x.2)
        .sum()
}

/// Expected reward over length-k histories satisfying `psi`: action rewards
/// on steps 0..k-1 plus state rewards on positions 0..k.
pub fn brute_reward(game: &Game, p: &StrategyProfile, r: &RewardStructure, psi: &PathFormula, start: StateId) -> f64 {
    enumerate(game, p, horizon(psi), start)
        .into_iter()
        .filter(|(st, _, _)| path_holds(game, psi, st))
        .map(|(st, acts, pr)| {
            let acc: f64 = acts.iter().zip(&st).map(|(ja, &s)| r.action_reward(s, ja)).sum::<f64>()
                + st.iter().map(|&s| r.state_reward(s)).sum::<f64>();
            pr * acc
        })
        .sum()
}

/// Extremal satisfaction probability over history-dependent adversaries,
/// by full expansion of the history tree.
pub fn brute_extremal(game: &Game, fixed: &StrategyProfile, psi: &PathFormula, start: StateId, min: bool) -> f64 {
    fn go(
        game: &Game,
        fixed: &StrategyProfile,
        psi: &PathFormula,
        k: usize,
        states: &mut Vec<StateId>,
        min: bool,
    ) -> f64 {
        if states.len() == k + 1 {
            return if path_holds(game, psi, states) { 1.0 } else { 0.0 };
        }
        let s = *states.last().unwrap();
        let adversary: Vec<AgentId> = (0..game.num_agents()).filter(|&i| fixed.get(i).is_none()).collect();
        let mut by_choice: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (ja, dist) in game.moves(s) {
            let key: Vec<usize> = adversary.iter().map(|&i| ja.action(i)).collect();
            let w = weight(fixed, s, ja);
            let mut v = 0.0;
            if w > 0.0 {
                for (t, q) in dist.iter() {
                    states.push(t);
                    v += q * go(game, fixed, psi, k, states, min);
                    states.pop();
                }
            }
            *by_choice.entry(key).or_insert(0.0) += w * v;
        }
        let vals = by_choice.values().copied();
        if min {
            vals.fold(f64::INFINITY, f64::min)
        } else {
            vals.fold(f64::NEG_INFINITY, f64::max)
        }
    }
    go(game, fixed, psi, horizon(psi), &mut vec![start], min)
}

/// Shapley value by averaging marginal contributions over all orderings.
pub fn permutation_shapley(n: usize, agent: AgentId, v: impl Fn(Coalition) -> f64) -> f64 {
    let mut order: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    let mut count = 0usize;
    permute(&mut order, 0, &mut |perm| {
        let pos = perm.iter().position(|&x| x == agent).unwrap();
        let before = Coalition::from_members(perm[..pos].iter().copied());
        total += v(before.with(agent)) - v(before);
        count += 1;
    });
    total / count as f64
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

pub fn random_reward(rng: &mut ChaCha8Rng, game: &Game) -> RewardStructure {
    use respgames::model::ActionRule;
    let mut r = RewardStructure::new(game, "r");
    for s in 0..game.num_states() {
        if rng.gen_bool(0.5) {
            r.add_state_reward(s, rng.gen_range(-2.0..2.0)).unwrap();
        }
        if rng.gen_bool(0.5) {
            let agent = rng.gen_range(0..game.num_agents());
            let action = *game.available(s, agent).choose(rng).unwrap();
            let mut pattern = vec![None; game.num_agents()];
            pattern[agent] = Some(action);
            r.add_rule(ActionRule {
                state: Some(s),
                pattern,
                value: rng.gen_range(-2.0..2.0),
            })
            .unwrap();
        }
    }
    r
}
