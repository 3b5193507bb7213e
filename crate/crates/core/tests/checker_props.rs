mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use respgames::checker::{CheckContext, Checker};
use respgames::logic::{parse_formula, parse_state_formula, Formula, PathFormula, Relation, StateFormula};
use respgames::model::{Game, StrategyProfile};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 200,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

const RELATIONS: [Relation; 4] = [Relation::Le, Relation::Lt, Relation::Ge, Relation::Gt];

fn coalition(rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..3).filter(|_| rng.gen_bool(0.5)).map(|i| format!("A{i}")).collect()
}

fn path(rng: &mut ChaCha8Rng, depth: usize) -> PathFormula {
    let k = rng.gen_range(1..=3);
    match rng.gen_range(0..4) {
        0 => PathFormula::Next(Box::new(formula(rng, depth))),
        1 => PathFormula::Eventually(k, Box::new(formula(rng, depth))),
        2 => PathFormula::Always(k, Box::new(formula(rng, depth))),
        _ => {
            let left = Box::new(formula(rng, depth));
            PathFormula::Until(left, k, Box::new(formula(rng, depth)))
        }
    }
}

/// Random formulas with coalition operators nested below `depth`.
fn formula(rng: &mut ChaCha8Rng, depth: usize) -> StateFormula {
    if depth == 0 {
        return random_state_formula(rng, 1);
    }
    let relation = RELATIONS[rng.gen_range(0..4)];
    let bound = rng.gen_range(0..=8) as f64 / 8.0;
    match rng.gen_range(0..6) {
        0 => StateFormula::Prob {
            coalition: coalition(rng),
            relation,
            bound,
            path: Box::new(path(rng, depth - 1)),
        },
        1 => StateFormula::Reward {
            coalition: coalition(rng),
            reward: "r".into(),
            relation,
            bound: bound * 10.0 - 3.0,
            path: Box::new(path(rng, depth - 1)),
        },
        2 => StateFormula::Resp {
            coalition: coalition(rng),
            relation,
            bound,
            agent: "A0".into(),
            profile: "sigma".into(),
            path: Box::new(path(rng, depth - 1)),
        },
        3 => StateFormula::not(formula(rng, depth - 1)),
        4 => StateFormula::and(formula(rng, depth - 1), formula(rng, depth - 1)),
        _ => StateFormula::or(formula(rng, depth - 1), formula(rng, depth - 1)),
    }
}

fn context(game: &Game) -> CheckContext {
    CheckContext::new(game.clone())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn display_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let phi = formula(&mut r, 3);
        prop_assert_eq!(parse_state_formula(&phi.to_string()).unwrap(), phi.clone());
        prop_assert_eq!(parse_formula(&phi.to_string()).unwrap(), Formula::State(phi));
        let psi = path(&mut r, 2);
        prop_assert_eq!(parse_formula(&psi.to_string()).unwrap(), Formula::Path(psi));
    }

    #[test]
    fn propositional_sat_sets_follow_labels(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &GenConfig::default());
        let phi = random_state_formula(&mut r, 3);
        let ctx = context(&g);
        let set = Checker::new(&ctx).sat_set(&phi).unwrap();
        for (s, &b) in set.iter().enumerate() {
            prop_assert_eq!(b, holds(&g, &phi, s));
        }
    }

    #[test]
    fn probability_operator_with_all_or_no_agents(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &GenConfig::default());
        let psi = random_path_formula(&mut r, 3);
        let relation = RELATIONS[r.gen_range(0..4)];
        let bound = r.gen_range(0..=4) as f64 / 4.0;
        let none = StrategyProfile::empty(g.num_agents());
        let ctx = context(&g);
        let mut checker = Checker::new(&ctx);
        let everyone: Vec<String> = g.agents().to_vec();
        for (coalition, all) in [(everyone, true), (vec![], false)] {
            let phi = StateFormula::Prob { coalition, relation, bound, path: Box::new(psi.clone()) };
            for s in 0..g.num_states() {
                let v = checker.eval_state(s, &phi).unwrap();
                // The coalition pushes towards the bound it must meet.
                let min = relation.is_lower_bound() != all;
                let oracle = brute_extremal(&g, &none, &psi, s, min);
                prop_assert!((v.value.unwrap() - oracle).abs() <= 1e-9, "{phi} at s{s}");
                prop_assert_eq!(v.truth, relation.holds(oracle, bound, ctx.tolerance));
            }
        }
    }

    #[test]
    fn nested_operators_use_per_state_values(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &GenConfig::default());
        let inner = random_path_formula(&mut r, 2);
        let bound = r.gen_range(1..=3) as f64 / 4.0;
        let everyone: Vec<String> = g.agents().to_vec();
        let nested = StateFormula::Prob {
            coalition: everyone.clone(),
            relation: Relation::Ge,
            bound,
            path: Box::new(inner.clone()),
        };
        let none = StrategyProfile::empty(g.num_agents());
        let ctx = context(&g);
        let mut checker = Checker::new(&ctx);
        let set = checker.sat_set(&nested).unwrap();
        for (s, &b) in set.iter().enumerate() {
            let best = brute_extremal(&g, &none, &inner, s, false);
            prop_assert_eq!(b, best >= bound - ctx.tolerance);
        }
        // One step ahead under the full grand coalition: the chance of
        // reaching a state in the set.
        let outer = StateFormula::Prob {
            coalition: everyone,
            relation: Relation::Ge,
            bound: 0.0,
            path: Box::new(PathFormula::next(nested)),
        };
        let v = checker.check(&outer).unwrap().value.unwrap();
        let full = complete(&mut r, &g, &none);
        let reach: f64 = enumerate(&g, &full, 1, 0).iter().filter(|h| set[h.0[1]]).map(|h| h.2).sum();
        prop_assert!(v >= reach - 1e-12);
        prop_assert!(v <= 1.0 + 1e-12);
    }
}
