//! Fixed games where intuitive properties of responsibility degrees break,
//! alongside the junction figures they must not disturb.

mod common;

use common::brute_extremal;
use respgames::logic::{parse_path_formula, Outcome, PathFormula};
use respgames::model::{parse_model, Coalition, Game, StrategyProfile};
use respgames::responsibility::{check_avoidable, check_disjoint, Attribution, DEFAULT_CAP};

const OR: &str = r#"X !(!"p" & !"q")"#;

/// One agent picks `a` or `b` in `s0`; each action splits evenly between two
/// labelled successors. The profile plays `chosen`.
fn one_shot(a: [&str; 2], b: [&str; 2], chosen: &str) -> (Game, StrategyProfile) {
    let mut text = String::from("agents A\nactions A { a b }\natoms { p q }\nstate s0 init { }\n");
    let mut names: Vec<&str> = vec![];
    for labels in a.iter().chain(&b) {
        if !names.contains(labels) {
            let atoms = labels.chars().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
            text += &format!("state t_{} {{ {} }}\n", names.len(), atoms);
            names.push(*labels);
        }
    }
    let idx = |l: &str| names.iter().position(|n| *n == l).unwrap();
    for (act, succ) in [("a", a), ("b", b)] {
        if succ[0] == succ[1] {
            text += &format!("trans s0 ({act}) {{ t_{}:1.0 }}\n", idx(succ[0]));
        } else {
            text += &format!("trans s0 ({act}) {{ t_{}:0.5 t_{}:0.5 }}\n", idx(succ[0]), idx(succ[1]));
        }
    }
    for i in 0..names.len() {
        text += &format!("trans t_{i} (*) {{ t_{i}:1.0 }}\n");
    }
    text += &format!("profile s {{ A s0 {{ {chosen}:1.0 }} }}\n");
    let mut file = parse_model(&text).unwrap();
    let p = file.profiles.remove("s").unwrap();
    (file.game, p)
}

fn compile(g: &Game, text: &str) -> (PathFormula, Outcome) {
    let psi = parse_path_formula(text).unwrap();
    let o = Outcome::compile(g, &psi).unwrap();
    (psi, o)
}

/// Degree of the only agent, checked against the tree-expansion oracle.
fn degree(g: &Game, p: &StrategyProfile, text: &str) -> f64 {
    let (psi, o) = compile(g, text);
    let d = Attribution::new(g, p, &o)
        .unwrap()
        .bcr_degree(0, Coalition::grand(1), DEFAULT_CAP)
        .unwrap();
    let oracle =
        brute_extremal(g, p, &psi, 0, true) - brute_extremal(g, &p.restrict(Coalition::empty()), &psi, 0, true);
    assert!((d - oracle).abs() < 1e-12);
    d
}

#[test]
fn junction_figures() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/junction.csg")).unwrap();
    let file = parse_model(&text).unwrap();
    let (g, p) = (&file.game, &file.profiles["p_nb"]);
    let (_, o) = compile(g, r#"X "crash""#);
    let a = Attribution::new(g, p, &o).unwrap();
    let all = Coalition::grand(2);
    assert!((a.bcr_degree(0, all, DEFAULT_CAP).unwrap() - 0.64).abs() < 1e-12);
    assert!((a.bcr_degree(1, all, DEFAULT_CAP).unwrap() - 0.24).abs() < 1e-12);
    assert!((a.attributable_value() - 0.88).abs() < 1e-12);
    let w = a.qualitative_bcr(1).unwrap();
    assert_eq!(w.coalition, Coalition::singleton(0));
}

#[test]
fn implication_does_not_order_degrees() {
    // p only ever appears together with q, so X p implies X q.
    let (g, p) = one_shot(["pq", ""], ["q", ""], "a");
    let (_, narrow) = compile(&g, r#"X "p""#);
    assert!(check_avoidable(&g, &narrow, 0, 1e-9));
    let d_p = degree(&g, &p, r#"X "p""#);
    let d_q = degree(&g, &p, r#"X "q""#);
    assert!((d_p - 0.5).abs() < 1e-12);
    assert!(d_q.abs() < 1e-12);
    assert!(d_p > d_q);
}

#[test]
fn disjoint_outcomes_are_not_additive() {
    let (g, p) = one_shot(["p", ""], ["q", ""], "a");
    let (_, op) = compile(&g, r#"X "p""#);
    let (_, oq) = compile(&g, r#"X "q""#);
    assert!(check_disjoint(&g, &op, &oq, 0));
    assert!(check_avoidable(&g, &op, 0, 1e-9) && check_avoidable(&g, &oq, 0, 1e-9));
    let d_p = degree(&g, &p, r#"X "p""#);
    let d_q = degree(&g, &p, r#"X "q""#);
    let d_or = degree(&g, &p, OR);
    assert!((d_p - 0.5).abs() < 1e-12 && d_q.abs() < 1e-12);
    assert!(d_or.abs() < 1e-12);
    assert!((d_or - (d_p + d_q)).abs() > 0.4);
}

#[test]
fn disjunction_degree_can_exceed_the_sum() {
    let (g, p) = one_shot(["pq", ""], ["p", "q"], "b");
    let d_p = degree(&g, &p, r#"X "p""#);
    let d_q = degree(&g, &p, r#"X "q""#);
    let d_or = degree(&g, &p, OR);
    assert!(d_p.abs() < 1e-12 && d_q.abs() < 1e-12);
    assert!((d_or - 0.5).abs() < 1e-12);
}

#[test]
fn disjunction_value_can_exceed_the_sum_against_an_adversary() {
    // Each action forces one disjunct; the adversary dodges either alone.
    let (g, p) = one_shot(["p", "p"], ["q", "q"], "a");
    let none = p.restrict(Coalition::empty());
    let v = |text: &str| {
        let (psi, o) = compile(&g, text);
        let a = Attribution::new(&g, &p, &o)
            .unwrap()
            .coalition_value(Coalition::empty());
        assert!((a - brute_extremal(&g, &none, &psi, 0, true)).abs() < 1e-12);
        a
    };
    assert_eq!(v(r#"X "p""#), 0.0);
    assert_eq!(v(r#"X "q""#), 0.0);
    assert_eq!(v(OR), 1.0);
}
