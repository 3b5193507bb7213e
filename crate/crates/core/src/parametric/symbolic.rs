//! Probabilities, payoffs and responsibility degrees as polynomials in the
//! strategy parameters.

use std::collections::{BTreeMap, BTreeSet};

use super::psmas::{Block, Poly, Psmas};
use crate::engine::{extremal_probability, Track};
use crate::error::{Error, Result};
use crate::logic::{Outcome, PathFormula, StateFormula};
use crate::model::{AgentId, Coalition, RewardStructure, StateId};
use crate::responsibility::Mode;

/// Sum over satisfying histories of the product of transition polynomials.
pub fn symbolic_sat_probability(psmas: &Psmas, outcome: &Outcome, start: StateId) -> Poly {
    let mut satisfied = psmas.zero();
    let mut frontier: BTreeMap<(StateId, Track), Poly> = BTreeMap::new();
    match Track::start(outcome, start) {
        None => return satisfied,
        Some(Track::Satisfied) => return psmas.one(),
        Some(t) => {
            frontier.insert((start, t), psmas.one());
        }
    }
    let mut position = 0;
    while !frontier.is_empty() {
        position += 1;
        let mut next_frontier: BTreeMap<(StateId, Track), Poly> = BTreeMap::new();
        for ((s, track), mass) in &frontier {
            for (_, next, w) in psmas.edges(*s) {
                let contribution = mass * w;
                match track.advance(outcome, position, next) {
                    None => {}
                    Some(Track::Satisfied) => satisfied = &satisfied + &contribution,
                    Some(t) => {
                        let e = next_frontier.entry((next, t)).or_insert_with(|| psmas.zero());
                        *e = &*e + &contribution;
                    }
                }
            }
        }
        frontier = next_frontier;
    }
    satisfied
}

/// Expected accumulated reward over satisfying length-k histories, with the
/// same index convention as the numeric engine.
pub fn symbolic_expected_payoff(psmas: &Psmas, reward: &RewardStructure, outcome: &Outcome, start: StateId) -> Poly {
    let game = psmas.game();
    let k = outcome.horizon();
    let Some(t0) = Track::start(outcome, start) else {
        return psmas.zero();
    };
    // (probability, probability-weighted accumulated reward)
    let mut frontier: BTreeMap<(StateId, Track), (Poly, Poly)> = BTreeMap::new();
    frontier.insert((start, t0), (psmas.one(), psmas.zero()));
    for position in 1..=k {
        let mut next_frontier: BTreeMap<(StateId, Track), (Poly, Poly)> = BTreeMap::new();
        for ((s, track), (mass, acc)) in &frontier {
            let joints = game.joint_actions(*s);
            for (j, next, w) in psmas.edges(*s) {
                let Some(t) = track.advance(outcome, position, next) else {
                    continue;
                };
                let r = reward.reward_of(*s, &joints[j]);
                let e = next_frontier
                    .entry((next, t))
                    .or_insert_with(|| (psmas.zero(), psmas.zero()));
                e.0 = &e.0 + &(mass * w);
                let gained = &(acc + &mass.scale(r)) * w;
                e.1 = &e.1 + &gained;
            }
        }
        frontier = next_frontier;
    }
    frontier
        .iter()
        .filter(|((_, t), _)| *t == Track::Satisfied)
        .fold(psmas.zero(), |sum, ((s, _), (mass, acc))| {
            &sum + &(acc + &mass.scale(reward.state_reward(*s)))
        })
}

/// Outcome satisfied by every history of length `k`.
pub fn all_histories(psmas: &Psmas, k: usize) -> Outcome {
    Outcome::compile(psmas.game(), &PathFormula::always(k, StateFormula::True)).expect("propositional outcome")
}

/// Points per parameter of the dominance grid.
pub const GRID_POINTS: usize = 21;
/// Largest dominance grid evaluated before giving up.
pub const MAX_GRID: usize = 200_000;
/// Largest number of pure adversary responses compared per coalition.
pub const MAX_CANDIDATES: usize = 4096;

/// States whose actions can influence a length-k history from `start`.
pub(crate) fn decision_states(psmas: &Psmas, k: usize, start: StateId) -> BTreeSet<StateId> {
    let game = psmas.game();
    let mut layer = BTreeSet::from([start]);
    let mut seen = BTreeSet::new();
    for _ in 0..k {
        seen.extend(layer.iter().copied());
        layer = layer.iter().flat_map(|&s| game.successors(s)).collect();
    }
    seen
}

/// `D^i` as a polynomial over the parameters of all agents.
///
/// For each coalition `J`, every pure stationary response of the others
/// yields a candidate polynomial for `v(J)`. A candidate that is extremal
/// at every point of a 21-point-per-parameter grid, and agrees with the
/// numeric engine at sampled points, is taken as `v(J)`; otherwise the
/// degree is not a single polynomial.
pub fn symbolic_responsibility(
    psmas: &Psmas,
    outcome: &Outcome,
    agent: AgentId,
    mode: Mode,
    start: StateId,
) -> Result<Poly> {
    let game = psmas.game();
    let n = game.num_agents();
    let all = Coalition::grand(n);
    if psmas.parametrized() != all {
        return Err(Error::Invalid(
            "symbolic responsibility needs every agent parametrised".into(),
        ));
    }
    if agent >= n {
        return Err(Error::AgentNotInScope(agent.to_string()));
    }
    let k = outcome.horizon();
    let relevant = decision_states(psmas, k, start);
    let values: Vec<(Coalition, Poly)> = all
        .subsets()
        .into_iter()
        .map(|j| coalition_polynomial(psmas, outcome, j, mode, start, &relevant).map(|p| (j, p)))
        .collect::<Result<_>>()?;
    let lookup = |c: Coalition| &values.iter().find(|(j, _)| *j == c).expect("all subsets").1;
    let fact = |m: usize| (1..=m).map(|x| x as f64).product::<f64>();
    let mut degree = psmas.zero();
    for j in all.without(agent).subsets() {
        let w = fact(j.len()) * fact(n - j.len() - 1) / fact(n);
        let marginal = lookup(j.with(agent)) - lookup(j);
        degree = &degree + &marginal.scale(w);
    }
    Ok(degree.chop(1e-14))
}

fn coalition_polynomial(
    psmas: &Psmas,
    outcome: &Outcome,
    coalition: Coalition,
    mode: Mode,
    start: StateId,
    relevant: &BTreeSet<StateId>,
) -> Result<Poly> {
    let adversary_blocks: Vec<&Block> = psmas
        .blocks()
        .iter()
        .filter(|b| !coalition.contains(b.agent) && relevant.contains(&b.state))
        .collect();
    let count = adversary_blocks
        .iter()
        .try_fold(1usize, |acc, b| acc.checked_mul(b.actions.len()))
        .filter(|&c| c <= MAX_CANDIDATES)
        .ok_or_else(|| Error::NonPolynomial(format!("too many adversary responses for {coalition}")))?;
    let full = symbolic_sat_probability(psmas, outcome, start);

    let mut candidates = Vec::with_capacity(count);
    for code in 0..count {
        let mut rest = code;
        let mut poly = full.clone();
        for b in &adversary_blocks {
            let pick = rest % b.actions.len();
            rest /= b.actions.len();
            for (k, &v) in b.vars.iter().enumerate() {
                poly = poly.partial_eval(v, if k == pick { 1.0 } else { 0.0 });
            }
        }
        candidates.push(poly);
    }

    let member_blocks: Vec<&Block> = psmas
        .blocks()
        .iter()
        .filter(|b| coalition.contains(b.agent) && relevant.contains(&b.state) && b.actions.len() > 1)
        .collect();
    let grid = simplex_grid(psmas, &member_blocks)?;
    let tol = crate::model::PROBABILITY_TOLERANCE;
    let values: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| grid.iter().map(|x| c.eval(x)).collect())
        .collect();
    let best_at: Vec<f64> = (0..grid.len())
        .map(|g| {
            let col = values.iter().map(|v| v[g]);
            match mode {
                Mode::Min => col.fold(f64::INFINITY, f64::min),
                Mode::Max => col.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    let dominant = values.iter().position(|v| {
        v.iter().zip(&best_at).all(|(&x, &b)| match mode {
            Mode::Min => x <= b + tol,
            Mode::Max => x >= b - tol,
        })
    });
    let Some(d) = dominant else {
        return Err(Error::NonPolynomial(format!(
            "the optimal response against {coalition} changes across the parameter space"
        )));
    };

    // Step-indexed adversaries may beat every stationary one.
    let step = (grid.len() / 7).max(1);
    for (g, x) in grid.iter().enumerate().step_by(step) {
        let profile = psmas.profile_at(x)?;
        let numeric = extremal_probability(psmas.game(), &profile.restrict(coalition), outcome, mode, start).value;
        if (numeric - values[d][g]).abs() > tol {
            return Err(Error::NonPolynomial(format!(
                "history-dependent responses against {coalition} beat every stationary one"
            )));
        }
    }
    Ok(candidates.swap_remove(d))
}

/// Full-coordinate points with each listed block on a grid of its simplex;
/// other blocks play their first action.
fn simplex_grid(psmas: &Psmas, blocks: &[&Block]) -> Result<Vec<Vec<f64>>> {
    let base = psmas.pure_point(|b| b.actions[0]);
    let mut points = vec![base];
    let steps = GRID_POINTS - 1;
    for b in blocks {
        let compositions = compositions(steps, b.actions.len());
        if points.len().saturating_mul(compositions.len()) > MAX_GRID {
            return Err(Error::NonPolynomial("dominance grid too large".into()));
        }
        let mut next = Vec::with_capacity(points.len() * compositions.len());
        for p in &points {
            for c in &compositions {
                let mut q = p.clone();
                for (k, &v) in b.vars.iter().enumerate() {
                    q[v] = c[k] as f64 / steps as f64;
                }
                next.push(q);
            }
        }
        points = next;
    }
    Ok(points)
}

/// All ways to write `total` as an ordered sum of `parts` non-negative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_path_formula;
    use crate::model::{parse_model, StrategyProfile};
    use crate::parametric::polynomial::parse_polynomial;
    use crate::parametric::psmas::build_psmas;

    fn junction_psmas() -> (crate::model::ModelFile, Psmas) {
        let m = parse_model(include_str!("../../fixtures/junction.csg")).unwrap();
        let p = build_psmas(&m.game, Coalition::grand(2), &StrategyProfile::empty(2)).unwrap();
        (m, p)
    }

    fn outcome(p: &Psmas, psi: &str) -> Outcome {
        Outcome::compile(p.game(), &parse_path_formula(psi).unwrap()).unwrap()
    }

    /// Reduced polynomial renamed to `x1` (A1 brakes) and `x2` (A2 brakes).
    fn assert_in_x1_x2(p: &Psmas, poly: &Poly, expected: &str) {
        let r = p.reduce(poly);
        let x1 = p.var_index(0, 0, 0).unwrap();
        let x2 = p.var_index(1, 0, 0).unwrap();
        let vars = crate::parametric::polynomial::variables(["x1", "x2"]);
        let mapping: Vec<usize> = (0..p.vars().len()).map(|v| if v == x2 { 1 } else { 0 }).collect();
        for (m, _) in r.terms() {
            for (v, &e) in m.iter().enumerate() {
                assert!(e == 0 || v == x1 || v == x2, "unexpected variable {}", p.vars()[v]);
            }
        }
        let got = r.remap(&vars, &mapping);
        let want = crate::parametric::polynomial::parse_polynomial(expected, &vars).unwrap();
        assert!(got.max_coefficient_diff(&want) < 1e-12, "{got} != {want}");
    }

    #[test]
    fn next_crash_polynomial() {
        let (_, p) = junction_psmas();
        let poly = symbolic_sat_probability(&p, &outcome(&p, r#"X "crash""#), 0);
        assert_in_x1_x2(&p, &poly, "1 - 0.8*x1 - 0.4*x2 + 0.32*x1*x2");
        assert_eq!(
            p.reduce(&symbolic_sat_probability(&p, &outcome(&p, "X true"), 0)),
            p.one()
        );
    }

    #[test]
    fn constant_not_brake_gives_certain_crash() {
        let m = parse_model(include_str!("../../fixtures/junction.csg")).unwrap();
        let p = build_psmas(&m.game, Coalition::singleton(0), &m.profiles["p_nb"]).unwrap();
        let poly = symbolic_sat_probability(&p, &outcome(&p, r#"X "crash""#), 0);
        let x = p.pure_point(|b| b.actions[1]);
        assert_eq!(poly.eval(&x), 1.0);
    }

    #[test]
    fn payoff_polynomial() {
        let (m, p) = junction_psmas();
        let poly = symbolic_expected_payoff(&p, &m.rewards["r1"], &outcome(&p, "X true"), 0);
        assert_in_x1_x2(&p, &poly, "-1 + 3.4*x1 + 1.2*x2 - 0.96*x1*x2");
        let zero = RewardStructure::new(p.game(), "zero");
        assert!(symbolic_expected_payoff(&p, &zero, &outcome(&p, "X true"), 0).is_zero());
    }

    #[test]
    fn responsibility_polynomial_at_not_brake() {
        let (_, p) = junction_psmas();
        let o = outcome(&p, r#"X "crash""#);
        let d1 = symbolic_responsibility(&p, &o, 0, Mode::Min, 0).unwrap();
        let nb = p.pure_point(|b| b.actions[1]);
        assert!((d1.eval(&nb) - 0.64).abs() < 1e-12);
        let d2 = symbolic_responsibility(&p, &o, 1, Mode::Min, 0).unwrap();
        assert!((d2.eval(&nb) - 0.24).abs() < 1e-12);
    }

    #[test]
    fn single_agent_degree_is_a_difference() {
        let m = parse_model(
            "agents A\nactions A { a b }\nstate s init\nstate g { goal }\n\
             trans s (a) { g:0.5 s:0.5 }\ntrans s (b) { g:0.1 s:0.9 }\ntrans g (*) { g:1 }\n",
        )
        .unwrap();
        let p = build_psmas(&m.game, Coalition::singleton(0), &StrategyProfile::empty(1)).unwrap();
        let o = outcome(&p, r#"X "goal""#);
        let d = symbolic_responsibility(&p, &o, 0, Mode::Min, 0).unwrap();
        let vars = p.vars().clone();
        let expected = parse_polynomial("0.5*x[A,s,a] + 0.1*x[A,s,b] - 0.1", &vars).unwrap();
        assert!(d.max_coefficient_diff(&expected) < 1e-12);
    }

    #[test]
    fn crossing_responses_are_not_polynomial() {
        let m = parse_model(
            "agents P Q\nactions P { a b }\nactions Q { c d }\nstate s init\nstate g { goal }\nstate f\n\
             trans s (a,c) { g:1 }\ntrans s (b,c) { f:1 }\ntrans s (a,d) { f:1 }\ntrans s (b,d) { g:1 }\n\
             trans g (*,*) { g:1 }\ntrans f (*,*) { f:1 }\n",
        )
        .unwrap();
        let p = build_psmas(&m.game, Coalition::grand(2), &StrategyProfile::empty(2)).unwrap();
        let o = outcome(&p, r#"X "goal""#);
        assert!(matches!(
            symbolic_responsibility(&p, &o, 0, Mode::Min, 0),
            Err(Error::NonPolynomial(_))
        ));
    }
}
