//! Formulas of the responsibility-extended strategy logic: syntax trees,
//! parser, and compiled bounded path objectives.

mod ast;
mod outcome;
mod parser;

use thiserror::Error;

pub use ast::{Formula, NameRef, PathFormula, Relation, StateFormula};
pub use outcome::{path_sat, Combine, Objective, Outcome, Progress, Propositional, StateLabeler};
pub use parser::{parse_formula, parse_path_formula, parse_state_formula};

use crate::model::Game;

#[derive(Debug, Error, PartialEq)]
pub enum LogicError {
    #[error("formula syntax error at column {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("probability bound {bound} at column {position} is outside [0,1]")]
    BoundOutOfRange { position: usize, bound: f64 },
    #[error("unknown agent `{0}` in formula")]
    UnknownAgent(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("agent `{agent}` is not a member of the coalition of `{formula}`")]
    AgentNotInCoalition { agent: String, formula: String },
    #[error("coalition operator `{0}` needs a model checker context")]
    NestedOperator(String),
    #[error("history of length {length} does not determine a formula of horizon {horizon}")]
    HistoryTooShort { length: usize, horizon: usize },
    #[error("outcomes combined with different connectives")]
    MixedCombination,
    #[error("an outcome needs at least one path formula")]
    EmptyOutcome,
    #[error("too many path formulas in one outcome ({0})")]
    TooManyParts(usize),
}

/// Checks that every agent and atom named in `phi` exists in `game`, and that
/// the responsibility operator's agent belongs to its coalition.
pub fn check_names(phi: &StateFormula, game: &Game) -> Result<(), LogicError> {
    let mut first_error = None;
    phi.visit_names(&mut |name| {
        if first_error.is_some() {
            return;
        }
        match name {
            NameRef::Agent(a) if game.agent_id(a).is_none() => {
                first_error = Some(LogicError::UnknownAgent(a.to_string()))
            }
            NameRef::Atom(a) if game.atom_id(a).is_none() => first_error = Some(LogicError::UnknownAtom(a.to_string())),
            _ => {}
        }
    });
    if let Some(e) = first_error {
        return Err(e);
    }
    check_resp_membership(phi)
}

fn check_resp_membership(phi: &StateFormula) -> Result<(), LogicError> {
    match phi {
        StateFormula::True | StateFormula::False | StateFormula::Atom(_) => Ok(()),
        StateFormula::Not(p) => check_resp_membership(p),
        StateFormula::And(a, b) => {
            check_resp_membership(a)?;
            check_resp_membership(b)
        }
        StateFormula::Prob { path, .. } | StateFormula::Reward { path, .. } => path_membership(path),
        StateFormula::Resp {
            coalition, agent, path, ..
        } => {
            if !coalition.contains(agent) {
                return Err(LogicError::AgentNotInCoalition {
                    agent: agent.clone(),
                    formula: phi.to_string(),
                });
            }
            path_membership(path)
        }
    }
}

fn path_membership(psi: &PathFormula) -> Result<(), LogicError> {
    match psi {
        PathFormula::Next(p) | PathFormula::Eventually(_, p) | PathFormula::Always(_, p) => check_resp_membership(p),
        PathFormula::Until(a, _, b) => {
            check_resp_membership(a)?;
            check_resp_membership(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_model, History, JointAction};

    fn junction() -> Game {
        parse_model(include_str!("../../fixtures/junction.csg")).unwrap().game
    }

    fn hist(states: &[usize], joints: &[[usize; 2]]) -> History {
        History::new(
            states.to_vec(),
            joints.iter().map(|j| JointAction(j.to_vec())).collect(),
        )
        .unwrap()
    }

    const B: usize = 0;
    const NB: usize = 1;

    #[test]
    fn next_crash_on_single_step_histories() {
        let g = junction();
        let next_crash = parse_path_formula(r#"X "crash""#).unwrap();
        let mut lab = Propositional(&g);
        assert!(path_sat(&hist(&[0, 1], &[[NB, NB]]), &next_crash, &mut lab).unwrap());
        assert!(!path_sat(&hist(&[0, 2], &[[B, B]]), &next_crash, &mut lab).unwrap());
    }

    #[test]
    fn eventually_crash_on_two_step_histories() {
        let g = junction();
        let f2 = parse_path_formula(r#"F<=2 "crash""#).unwrap();
        let mut lab = Propositional(&g);
        assert!(!path_sat(&hist(&[0, 2, 2], &[[B, B], [B, B]]), &f2, &mut lab).unwrap());
        assert!(path_sat(&hist(&[0, 1, 1], &[[NB, NB], [B, NB]]), &f2, &mut lab).unwrap());
    }

    #[test]
    fn short_histories_only_when_decided() {
        let g = junction();
        let f2 = parse_path_formula(r#"F<=2 "crash""#).unwrap();
        let mut lab = Propositional(&g);
        assert!(path_sat(&hist(&[0, 1], &[[NB, NB]]), &f2, &mut lab).unwrap());
        assert!(matches!(
            path_sat(&hist(&[0, 2], &[[B, B]]), &f2, &mut lab),
            Err(LogicError::HistoryTooShort { .. })
        ));
    }

    #[test]
    fn name_checks() {
        let g = junction();
        let bad_agent = parse_state_formula(r#"<<A9>> P>=0.5 [ X "crash" ]"#).unwrap();
        assert_eq!(check_names(&bad_agent, &g), Err(LogicError::UnknownAgent("A9".into())));
        let bad_atom = parse_state_formula(r#""boom""#).unwrap();
        assert_eq!(check_names(&bad_atom, &g), Err(LogicError::UnknownAtom("boom".into())));
        let outside = parse_state_formula(r#"<<A2>> D<=0 [ BCR(A1, p, X "crash") ]"#).unwrap();
        assert!(matches!(
            check_names(&outside, &g),
            Err(LogicError::AgentNotInCoalition { .. })
        ));
    }

    #[test]
    fn nested_operators_need_a_checker() {
        let g = junction();
        let psi = parse_path_formula(r#"X <<A1>> P>=0.5 [ X "crash" ]"#).unwrap();
        assert!(matches!(Outcome::compile(&g, &psi), Err(LogicError::NestedOperator(_))));
    }

    #[test]
    fn disjunction_and_conjunction_of_outcomes() {
        let g = junction();
        let crash = Outcome::compile(&g, &parse_path_formula(r#"X "crash""#).unwrap()).unwrap();
        let pass = Outcome::compile(&g, &parse_path_formula(r#"X "pass""#).unwrap()).unwrap();
        let either = Outcome::any(vec![crash.clone(), pass.clone()]).unwrap();
        let both = Outcome::all(vec![crash, pass]).unwrap();
        assert_eq!(either.evaluate_states(&[0, 1]), Some(true));
        assert_eq!(either.evaluate_states(&[0, 2]), Some(true));
        assert_eq!(both.evaluate_states(&[0, 1]), Some(false));
    }
}
