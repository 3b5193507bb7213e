use std::fmt;

/// Comparison operator of a quantitative bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Relation {
    /// Compares `value ⋈ bound`. A value within `tol` of the bound satisfies
    /// the non-strict relations and fails the strict ones.
    pub fn holds(self, value: f64, bound: f64, tol: f64) -> bool {
        match self {
            Relation::Le => value <= bound + tol,
            Relation::Lt => value < bound - tol,
            Relation::Ge => value >= bound - tol,
            Relation::Gt => value > bound + tol,
        }
    }

    /// `true` for lower bounds (`≥`, `>`), where the coalition pushes the value up.
    pub fn is_lower_bound(self) -> bool {
        matches!(self, Relation::Ge | Relation::Gt)
    }

    pub fn negate(self) -> Self {
        match self {
            Relation::Le => Relation::Gt,
            Relation::Lt => Relation::Ge,
            Relation::Ge => Relation::Lt,
            Relation::Gt => Relation::Le,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateFormula {
    True,
    False,
    Atom(String),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    /// `<<A>> P⋈p [ψ]`
    Prob {
        coalition: Vec<String>,
        relation: Relation,
        bound: f64,
        path: Box<PathFormula>,
    },
    /// `<<A>> R{r}⋈q [ψ]`
    Reward {
        coalition: Vec<String>,
        reward: String,
        relation: Relation,
        bound: f64,
        path: Box<PathFormula>,
    },
    /// `<<A>> D⋈d [BCR(i, σ, ψ)]`
    Resp {
        coalition: Vec<String>,
        relation: Relation,
        bound: f64,
        agent: String,
        profile: String,
        path: Box<PathFormula>,
    },
}

/// Bounded path formulas. `F` and `G` are native nodes rather than sugar.
#[derive(Clone, Debug, PartialEq)]
pub enum PathFormula {
    Next(Box<StateFormula>),
    Until(Box<StateFormula>, usize, Box<StateFormula>),
    Eventually(usize, Box<StateFormula>),
    Always(usize, Box<StateFormula>),
}

/// Either kind of formula, as returned by the top-level parser.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    State(StateFormula),
    Path(PathFormula),
}

impl StateFormula {
    pub fn atom(name: impl Into<String>) -> Self {
        StateFormula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(phi: StateFormula) -> Self {
        StateFormula::Not(Box::new(phi))
    }

    pub fn and(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    /// `a ∨ b` as `¬(¬a ∧ ¬b)`.
    pub fn or(a: StateFormula, b: StateFormula) -> Self {
        Self::not(Self::and(Self::not(a), Self::not(b)))
    }

    /// Whether the formula is free of coalition operators.
    pub fn is_propositional(&self) -> bool {
        match self {
            StateFormula::True | StateFormula::False | StateFormula::Atom(_) => true,
            StateFormula::Not(p) => p.is_propositional(),
            StateFormula::And(a, b) => a.is_propositional() && b.is_propositional(),
            _ => false,
        }
    }

    /// Coalitions, agents and atoms referenced anywhere in the formula.
    pub fn visit_names(&self, f: &mut impl FnMut(NameRef<'_>)) {
        match self {
            StateFormula::True | StateFormula::False => {}
            StateFormula::Atom(a) => f(NameRef::Atom(a)),
            StateFormula::Not(p) => p.visit_names(f),
            StateFormula::And(a, b) => {
                a.visit_names(f);
                b.visit_names(f);
            }
            StateFormula::Prob { coalition, path, .. } => {
                coalition.iter().for_each(|a| f(NameRef::Agent(a)));
                path.visit_names(f);
            }
            StateFormula::Reward {
                coalition,
                reward,
                path,
                ..
            } => {
                coalition.iter().for_each(|a| f(NameRef::Agent(a)));
                f(NameRef::Reward(reward));
                path.visit_names(f);
            }
            StateFormula::Resp {
                coalition,
                agent,
                profile,
                path,
                ..
            } => {
                coalition.iter().for_each(|a| f(NameRef::Agent(a)));
                f(NameRef::Agent(agent));
                f(NameRef::Profile(profile));
                path.visit_names(f);
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum NameRef<'a> {
    Agent(&'a str),
    Atom(&'a str),
    Reward(&'a str),
    Profile(&'a str),
}

impl PathFormula {
    /// The step bound `k` of the formula: 1 for `X`, the bound otherwise.
    pub fn horizon(&self) -> usize {
        match self {
            PathFormula::Next(_) => 1,
            PathFormula::Until(_, k, _) | PathFormula::Eventually(k, _) | PathFormula::Always(k, _) => *k,
        }
    }

    pub fn next(phi: StateFormula) -> Self {
        PathFormula::Next(Box::new(phi))
    }

    pub fn until(left: StateFormula, k: usize, right: StateFormula) -> Self {
        PathFormula::Until(Box::new(left), k, Box::new(right))
    }

    pub fn eventually(k: usize, phi: StateFormula) -> Self {
        PathFormula::Eventually(k, Box::new(phi))
    }

    pub fn always(k: usize, phi: StateFormula) -> Self {
        PathFormula::Always(k, Box::new(phi))
    }

    pub fn visit_names(&self, f: &mut impl FnMut(NameRef<'_>)) {
        match self {
            PathFormula::Next(p) | PathFormula::Eventually(_, p) | PathFormula::Always(_, p) => p.visit_names(f),
            PathFormula::Until(a, _, b) => {
                a.visit_names(f);
                b.visit_names(f);
            }
        }
    }
}

fn write_unary(f: &mut fmt::Formatter<'_>, phi: &StateFormula) -> fmt::Result {
    match phi {
        StateFormula::And(..) => write!(f, "({phi})"),
        _ => write!(f, "{phi}"),
    }
}

fn write_coalition(f: &mut fmt::Formatter<'_>, coalition: &[String]) -> fmt::Result {
    write!(f, "<<{}>>", coalition.join(","))
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFormula::True => f.write_str("true"),
            StateFormula::False => f.write_str("false"),
            StateFormula::Atom(a) => write!(f, "\"{a}\""),
            StateFormula::Not(p) => {
                f.write_str("!")?;
                write_unary(f, p)
            }
            StateFormula::And(a, b) => {
                write!(f, "{a} & ")?;
                write_unary(f, b)
            }
            StateFormula::Prob {
                coalition,
                relation,
                bound,
                path,
            } => {
                write_coalition(f, coalition)?;
                write!(f, " P{relation}{bound} [ {path} ]")
            }
            StateFormula::Reward {
                coalition,
                reward,
                relation,
                bound,
                path,
            } => {
                write_coalition(f, coalition)?;
                write!(f, " R{{{reward}}}{relation}{bound} [ {path} ]")
            }
            StateFormula::Resp {
                coalition,
                relation,
                bound,
                agent,
                profile,
                path,
            } => {
                write_coalition(f, coalition)?;
                write!(f, " D{relation}{bound} [ BCR({agent}, {profile}, {path}) ]")
            }
        }
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Next(p) => write!(f, "X {p}"),
            PathFormula::Until(a, k, b) => write!(f, "{a} U<={k} {b}"),
            PathFormula::Eventually(k, p) => write!(f, "F<={k} {p}"),
            PathFormula::Always(k, p) => write!(f, "G<={k} {p}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::State(s) => s.fmt(f),
            Formula::Path(p) => p.fmt(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizons() {
        let crash = StateFormula::atom("crash");
        assert_eq!(PathFormula::next(crash.clone()).horizon(), 1);
        assert_eq!(PathFormula::eventually(2, crash.clone()).horizon(), 2);
        assert_eq!(
            PathFormula::until(StateFormula::atom("init"), 3, StateFormula::atom("pass")).horizon(),
            3
        );
        assert_eq!(PathFormula::always(0, crash).horizon(), 0);
    }

    #[test]
    fn strict_relations_fail_at_the_bound() {
        assert!(Relation::Le.holds(0.2 + 1e-12, 0.2, 1e-9));
        assert!(!Relation::Lt.holds(0.2 - 1e-12, 0.2, 1e-9));
        assert!(Relation::Ge.holds(0.2 - 1e-12, 0.2, 1e-9));
        assert!(!Relation::Gt.holds(0.2 + 1e-12, 0.2, 1e-9));
        for r in [Relation::Le, Relation::Lt, Relation::Ge, Relation::Gt] {
            for v in [0.0, 0.2, 0.2 + 1e-12, 0.5] {
                assert_ne!(r.holds(v, 0.2, 1e-9), r.negate().holds(v, 0.2, 1e-9));
            }
        }
    }

    #[test]
    fn display_parenthesises_nested_conjunctions() {
        let a = StateFormula::atom("a");
        let b = StateFormula::atom("b");
        let c = StateFormula::atom("c");
        let phi = StateFormula::and(a.clone(), StateFormula::and(b.clone(), c.clone()));
        assert_eq!(phi.to_string(), "\"a\" & (\"b\" & \"c\")");
        assert_eq!(
            StateFormula::not(StateFormula::and(a, b)).to_string(),
            "!(\"a\" & \"b\")"
        );
    }
}
