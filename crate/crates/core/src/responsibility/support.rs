//! Exhaustive reasoning over the support graph: histories that are possible
//! when fixed agents stay inside their strategy support.

use std::collections::HashSet;

use crate::engine::{extremal_probability, Direction, Track};
use crate::logic::Outcome;
use crate::model::{Game, History, JointAction, StateId, StrategyProfile};

fn compatible(fixed: &StrategyProfile, s: StateId, ja: &JointAction) -> bool {
    fixed.fixed_weight(s, ja) > 0.0
}

struct Search<'a> {
    game: &'a Game,
    fixed: &'a StrategyProfile,
    outcome: &'a Outcome,
    horizon: usize,
    target: bool,
    dead: HashSet<(usize, StateId, u64)>,
}

impl Search<'_> {
    fn verdict(track: Option<Track>) -> Option<bool> {
        match track {
            None => Some(false),
            Some(Track::Satisfied) => Some(true),
            Some(Track::Open(_)) => None,
        }
    }

    fn go(&mut self, pos: usize, s: StateId, track: Option<Track>, path: &mut Vec<(JointAction, StateId)>) -> bool {
        match Self::verdict(track) {
            Some(v) if v == self.target => {
                self.extend(pos, s, path);
                return true;
            }
            Some(_) => return false,
            None => {}
        }
        let t = track.expect("open track");
        let key = (pos, s, t.key());
        if self.dead.contains(&key) {
            return false;
        }
        let game = self.game;
        for (ja, dist) in game.moves(s) {
            if !compatible(self.fixed, s, ja) {
                continue;
            }
            for next in dist.support() {
                path.push((ja.clone(), next));
                let t2 = t.advance(self.outcome, pos + 1, next);
                if self.go(pos + 1, next, t2, path) {
                    return true;
                }
                path.pop();
            }
        }
        self.dead.insert(key);
        false
    }

    /// Pads a decided prefix to full length with the first compatible moves.
    fn extend(&self, mut pos: usize, mut s: StateId, path: &mut Vec<(JointAction, StateId)>) {
        while pos < self.horizon {
            let (ja, dist) = self
                .game
                .moves(s)
                .find(|(ja, _)| compatible(self.fixed, s, ja))
                .expect("a full strategy plays some action");
            let next = dist.support().next().expect("distributions are non-empty");
            path.push((ja.clone(), next));
            s = next;
            pos += 1;
        }
    }
}

/// A length-k history compatible with the fixed agents' supports on which
/// the outcome evaluates to `target`; agents outside the scope play any
/// available action.
pub fn find_history(
    game: &Game,
    fixed: &StrategyProfile,
    outcome: &Outcome,
    target: bool,
    start: StateId,
) -> Option<History> {
    let mut search = Search {
        game,
        fixed,
        outcome,
        horizon: outcome.horizon(),
        target,
        dead: HashSet::new(),
    };
    let mut path = Vec::new();
    if !search.go(0, start, Track::start(outcome, start), &mut path) {
        return None;
    }
    let mut h = History::initial(start);
    for (ja, s) in path {
        h.push(ja, s);
    }
    Some(h)
}

/// Number of compatible length-`k` histories from `start`, saturating.
pub fn compatible_history_count(game: &Game, fixed: &StrategyProfile, k: usize, start: StateId) -> u64 {
    let mut counts = vec![0u64; game.num_states()];
    counts[start] = 1;
    for _ in 0..k {
        let mut next = vec![0u64; game.num_states()];
        for (s, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (ja, dist) in game.moves(s) {
                if !compatible(fixed, s, ja) {
                    continue;
                }
                for t in dist.support() {
                    next[t] = next[t].saturating_add(c);
                }
            }
        }
        counts = next;
    }
    counts.into_iter().fold(0u64, u64::saturating_add)
}

/// No history of the support graph satisfies both outcomes.
pub fn check_disjoint(game: &Game, a: &Outcome, b: &Outcome, start: StateId) -> bool {
    let both = Outcome::all(vec![a.clone(), b.clone()]).expect("two single-connective outcomes");
    let free = StrategyProfile::empty(game.num_agents());
    find_history(game, &free, &both, true, start).is_none()
}

/// Some strategy profile keeps the probability of the outcome below one.
pub fn check_avoidable(game: &Game, outcome: &Outcome, start: StateId, tolerance: f64) -> bool {
    let free = StrategyProfile::empty(game.num_agents());
    extremal_probability(game, &free, outcome, Direction::Min, start).value < 1.0 - tolerance
}
