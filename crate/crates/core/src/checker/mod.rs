//! Recursive evaluation of state formulas with the probability, reward and
//! responsibility operators.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use serde_json::{json, Value};

use crate::engine::{game_value_probability, robust_expected_reward, GameValue, RewardAdversary};
use crate::error::{Error, Result};
use crate::logic::{check_names, LogicError, Outcome, PathFormula, StateFormula, StateLabeler};
use crate::model::{ActionId, AgentId, Coalition, Game, ModelFile, RewardStructure, StateId, StrategyProfile};
use crate::responsibility::{Attribution, Mode, DEFAULT_CAP};

/// Everything a formula may refer to, plus evaluation settings.
#[derive(Clone, Debug)]
pub struct CheckContext {
    pub game: Game,
    pub profiles: BTreeMap<String, StrategyProfile>,
    pub rewards: BTreeMap<String, RewardStructure>,
    pub tolerance: f64,
    pub r_adversary: RewardAdversary,
    pub mode: Mode,
    pub cap: usize,
}

impl CheckContext {
    pub fn new(game: Game) -> Self {
        Self {
            game,
            profiles: BTreeMap::new(),
            rewards: BTreeMap::new(),
            tolerance: crate::model::PROBABILITY_TOLERANCE,
            r_adversary: RewardAdversary::Hostile,
            mode: Mode::Min,
            cap: DEFAULT_CAP,
        }
    }

    pub fn from_model(model: ModelFile) -> Self {
        let mut ctx = Self::new(model.game);
        ctx.profiles = model.profiles;
        ctx.rewards = model.rewards;
        ctx
    }

    pub fn profile(&self, name: &str) -> Result<&StrategyProfile> {
        let p = self
            .profiles
            .get(name)
            .ok_or_else(|| Error::UnknownProfile(name.to_string()))?;
        p.require_full()?;
        Ok(p)
    }

    pub fn reward(&self, name: &str) -> Result<&RewardStructure> {
        self.rewards
            .get(name)
            .ok_or_else(|| Error::UnknownReward(name.to_string()))
    }

    pub fn coalition(&self, names: &[String]) -> Result<Coalition> {
        names.iter().try_fold(Coalition::empty(), |c, n| {
            self.game
                .agent_id(n)
                .map(|i| c.with(i))
                .ok_or_else(|| LogicError::UnknownAgent(n.clone()).into())
        })
    }

    fn agent(&self, name: &str) -> Result<AgentId> {
        self.game
            .agent_id(name)
            .ok_or_else(|| LogicError::UnknownAgent(name.to_string()).into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub formula: String,
    pub state: String,
    pub truth: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

/// Evaluates formulas against a context, caching satisfaction sets.
pub struct Checker<'c> {
    ctx: &'c CheckContext,
    sat_sets: HashMap<String, Vec<bool>>,
}

impl<'c> Checker<'c> {
    pub fn new(ctx: &'c CheckContext) -> Self {
        Self {
            ctx,
            sat_sets: HashMap::new(),
        }
    }

    pub fn context(&self) -> &'c CheckContext {
        self.ctx
    }

    /// Truth of `phi` at the initial state.
    pub fn check(&mut self, phi: &StateFormula) -> Result<Verdict> {
        self.eval_state(self.ctx.game.initial(), phi)
    }

    pub fn eval_state(&mut self, s: StateId, phi: &StateFormula) -> Result<Verdict> {
        check_names(phi, &self.ctx.game)?;
        self.eval(s, phi)
    }

    /// States satisfying `phi`; memoised per formula.
    pub fn sat_set(&mut self, phi: &StateFormula) -> Result<Vec<bool>> {
        let key = phi.to_string();
        if let Some(set) = self.sat_sets.get(&key) {
            return Ok(set.clone());
        }
        check_names(phi, &self.ctx.game)?;
        let set = (0..self.ctx.game.num_states())
            .map(|s| self.eval(s, phi).map(|v| v.truth))
            .collect::<Result<Vec<_>>>()?;
        self.sat_sets.insert(key, set.clone());
        Ok(set)
    }

    /// Compiles a path formula, first computing the satisfaction sets of
    /// nested coalition operators.
    pub fn outcome(&mut self, psi: &PathFormula) -> Result<Outcome> {
        let operands: Vec<&StateFormula> = match psi {
            PathFormula::Next(p) | PathFormula::Eventually(_, p) | PathFormula::Always(_, p) => vec![p],
            PathFormula::Until(a, _, b) => vec![a, b],
        };
        for phi in operands {
            self.sat_set(phi)?;
        }
        let mut cached = Cached(&self.sat_sets);
        Ok(Outcome::compile_with(psi, &mut cached)?)
    }

    fn verdict(&self, s: StateId, phi: &StateFormula, truth: bool) -> Verdict {
        Verdict {
            formula: phi.to_string(),
            state: self.ctx.game.state_name(s).to_string(),
            truth,
            value: None,
            witness: None,
        }
    }

    fn eval(&mut self, s: StateId, phi: &StateFormula) -> Result<Verdict> {
        let game = &self.ctx.game;
        let tol = self.ctx.tolerance;
        Ok(match phi {
            StateFormula::True => self.verdict(s, phi, true),
            StateFormula::False => self.verdict(s, phi, false),
            StateFormula::Atom(a) => {
                let id = game.atom_id(a).ok_or_else(|| LogicError::UnknownAtom(a.clone()))?;
                self.verdict(s, phi, game.has_label(s, id))
            }
            StateFormula::Not(p) => {
                let inner = self.eval(s, p)?;
                self.verdict(s, phi, !inner.truth)
            }
            StateFormula::And(a, b) => {
                let truth = self.eval(s, a)?.truth && self.eval(s, b)?.truth;
                self.verdict(s, phi, truth)
            }
            StateFormula::Prob {
                coalition,
                relation,
                bound,
                path,
            } => {
                let c = self.ctx.coalition(coalition)?;
                let outcome = self.outcome(path)?;
                let gv = game_value_probability(game, c, &outcome, *relation, *bound, s, tol);
                self.quantitative(s, phi, c, gv)
            }
            StateFormula::Reward {
                coalition,
                reward,
                relation,
                bound,
                path,
            } => {
                let c = self.ctx.coalition(coalition)?;
                let r = self.ctx.reward(reward)?;
                let outcome = self.outcome(path)?;
                let gv = robust_expected_reward(game, c, r, &outcome, *relation, *bound, self.ctx.r_adversary, s, tol);
                self.quantitative(s, phi, c, gv)
            }
            StateFormula::Resp {
                coalition,
                relation,
                bound,
                agent,
                profile,
                path,
            } => {
                let scope = self.ctx.coalition(coalition)?;
                let i = self.ctx.agent(agent)?;
                let sigma = self.ctx.profile(profile)?;
                let outcome = self.outcome(path)?;
                let attribution = Attribution::new(game, sigma, &outcome)?
                    .from_state(s)
                    .with_mode(self.ctx.mode);
                let degree = attribution.bcr_degree(i, scope, self.ctx.cap)?;
                let report = attribution.report(scope, self.ctx.cap)?;
                let mut v = self.verdict(s, phi, relation.holds(degree, *bound, tol));
                v.value = Some(degree);
                v.witness = Some(serde_json::to_value(report).expect("report serialises"));
                v
            }
        })
    }

    fn quantitative(&self, s: StateId, phi: &StateFormula, c: Coalition, gv: GameValue) -> Verdict {
        let mut v = self.verdict(s, phi, gv.verdict);
        v.value = Some(gv.value);
        if !c.is_empty() && !gv.root_strategy.is_empty() {
            v.witness = Some(json!({ "strategy": describe_strategy(&self.ctx.game, c, &gv.root_strategy) }));
        }
        v
    }
}

fn describe_strategy(game: &Game, c: Coalition, strategy: &[(Vec<ActionId>, f64)]) -> Value {
    let members: Vec<AgentId> = c.members().collect();
    Value::Array(
        strategy
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(acts, p)| {
                let mut m = serde_json::Map::new();
                for (&i, &a) in members.iter().zip(acts) {
                    m.insert(
                        game.agent_name(i).to_string(),
                        Value::String(game.action_name(i, a).to_string()),
                    );
                }
                json!({ "actions": m, "p": p })
            })
            .collect(),
    )
}

struct Cached<'m>(&'m HashMap<String, Vec<bool>>);

impl StateLabeler for Cached<'_> {
    fn sat_set(&mut self, phi: &StateFormula) -> Result<Vec<bool>, LogicError> {
        self.0
            .get(&phi.to_string())
            .cloned()
            .ok_or_else(|| LogicError::NestedOperator(phi.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_state_formula;
    use crate::model::parse_model;

    fn ctx() -> CheckContext {
        CheckContext::from_model(parse_model(include_str!("../../fixtures/junction.csg")).unwrap())
    }

    fn check(ctx: &CheckContext, s: StateId, f: &str) -> Verdict {
        Checker::new(ctx)
            .eval_state(s, &parse_state_formula(f).unwrap())
            .unwrap()
    }

    #[test]
    fn responsibility_operator_on_brake_profile() {
        let c = ctx();
        let v = check(&c, 0, r#"<<A1,A2>> D<=0 [ BCR(A1, p_brake, F<=2 "crash") ]"#);
        assert!(v.truth);
        assert!(v.value.unwrap().abs() < 1e-12);
    }

    #[test]
    fn labels_and_probabilities() {
        let c = ctx();
        assert!(check(&c, 1, r#""crash""#).truth);
        assert!(check(&c, 0, r#""init""#).truth);
        assert!(check(&c, 0, r#"!"crash""#).truth);
        let v = check(&c, 0, r#"<<A1>> P<=0.2 [ X "crash" ]"#);
        assert!(v.truth);
        assert!((v.value.unwrap() - 0.2).abs() < 1e-12);
        assert!(check(&c, 0, r#"<<A1,A2>> P>=1 [ X "crash" ]"#).truth);
        assert!(!check(&c, 0, r#"<<A1,A2>> P>=1 [ X "pass" ]"#).truth);
    }

    #[test]
    fn sat_sets() {
        let c = ctx();
        let mut ch = Checker::new(&c);
        let f = |t: &str| parse_state_formula(t).unwrap();
        assert_eq!(ch.sat_set(&f(r#""crash""#)).unwrap(), vec![false, true, false]);
        assert_eq!(ch.sat_set(&f("true")).unwrap(), vec![true; 3]);
        assert_eq!(
            ch.sat_set(&f(r#""init" & !"crash""#)).unwrap(),
            vec![true, false, false]
        );
    }

    #[test]
    fn nested_operator_inside_a_path() {
        let c = ctx();
        // From s1 and s2 everything is a self-loop, so only s0 can fail.
        let v = check(&c, 0, r#"<<A1,A2>> P>=1 [ X <<A1>> P>=1 [ G<=2 !"init" ] ]"#);
        assert!(v.truth);
    }

    #[test]
    fn unknown_names() {
        let c = ctx();
        let mut ch = Checker::new(&c);
        let f = |t: &str| parse_state_formula(t).unwrap();
        assert!(matches!(
            ch.check(&f(r#"<<A1>> D<=0 [ BCR(A1, nope, X "crash") ]"#)),
            Err(Error::UnknownProfile(_))
        ));
        assert!(matches!(
            ch.check(&f(r#"<<A1>> R{nope}>=0 [ X "crash" ]"#)),
            Err(Error::UnknownReward(_))
        ));
        assert!(matches!(
            ch.check(&f(r#""boom""#)),
            Err(Error::Logic(LogicError::UnknownAtom(_)))
        ));
    }
}
