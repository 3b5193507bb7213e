//! Path formulas compiled against a game: every state subformula is replaced
//! by its satisfaction set so the engines only track a small status per part.

use crate::model::{Game, History, StateId};

use super::ast::{PathFormula, StateFormula};
use super::LogicError;

/// Produces satisfaction sets for state formulas appearing inside paths.
pub trait StateLabeler {
    fn sat_set(&mut self, phi: &StateFormula) -> Result<Vec<bool>, LogicError>;
}

/// Labels purely propositional formulas from the game's labelling function.
pub struct Propositional<'a>(pub &'a Game);

impl StateLabeler for Propositional<'_> {
    fn sat_set(&mut self, phi: &StateFormula) -> Result<Vec<bool>, LogicError> {
        propositional_sat_set(self.0, phi)
    }
}

pub(crate) fn propositional_sat_set(game: &Game, phi: &StateFormula) -> Result<Vec<bool>, LogicError> {
    let n = game.num_states();
    Ok(match phi {
        StateFormula::True => vec![true; n],
        StateFormula::False => vec![false; n],
        StateFormula::Atom(a) => {
            let id = game.atom_id(a).ok_or_else(|| LogicError::UnknownAtom(a.clone()))?;
            (0..n).map(|s| game.has_label(s, id)).collect()
        }
        StateFormula::Not(p) => propositional_sat_set(game, p)?.into_iter().map(|b| !b).collect(),
        StateFormula::And(a, b) => propositional_sat_set(game, a)?
            .into_iter()
            .zip(propositional_sat_set(game, b)?)
            .map(|(x, y)| x && y)
            .collect(),
        _ => return Err(LogicError::NestedOperator(phi.to_string())),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Next,
    Until(usize),
    Always(usize),
}

/// One bounded path objective over explicit state sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    kind: Kind,
    /// Hold set of `U` (all-true for `F`); unused otherwise.
    left: Vec<bool>,
    /// Target of `X`/`U`/`F`, invariant of `G`.
    right: Vec<bool>,
}

impl Objective {
    fn horizon(&self) -> usize {
        match self.kind {
            Kind::Next => 1,
            Kind::Until(k) | Kind::Always(k) => k,
        }
    }

    /// Status at `position` in state `s`, given the part was still open.
    fn classify(&self, position: usize, s: StateId) -> Status {
        match self.kind {
            Kind::Next => {
                if position == 0 {
                    Status::Open
                } else if self.right[s] {
                    Status::Sat
                } else {
                    Status::Viol
                }
            }
            Kind::Until(k) => {
                if self.right[s] {
                    Status::Sat
                } else if !self.left[s] || position >= k {
                    Status::Viol
                } else {
                    Status::Open
                }
            }
            Kind::Always(k) => {
                if !self.right[s] {
                    Status::Viol
                } else if position >= k {
                    Status::Sat
                } else {
                    Status::Open
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Open,
    Sat,
    Viol,
}

/// How the parts of an outcome combine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    Any,
    All,
}

/// Per-part status as two bitmasks: parts still open, parts satisfied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Progress {
    open: u32,
    sat: u32,
}

impl Progress {
    pub fn key(self) -> u64 {
        (self.open as u64) | ((self.sat as u64) << 32)
    }
}

/// A compiled outcome: one or more bounded objectives joined by `Any`/`All`.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    parts: Vec<Objective>,
    combine: Combine,
}

impl Outcome {
    pub const MAX_PARTS: usize = 32;

    /// Compiles a path formula whose state subformulas are propositional.
    pub fn compile(game: &Game, psi: &PathFormula) -> Result<Self, LogicError> {
        Self::compile_with(psi, &mut Propositional(game))
    }

    pub fn compile_with(psi: &PathFormula, labeler: &mut dyn StateLabeler) -> Result<Self, LogicError> {
        let part = match psi {
            PathFormula::Next(p) => {
                let right = labeler.sat_set(p)?;
                Objective {
                    kind: Kind::Next,
                    left: vec![true; right.len()],
                    right,
                }
            }
            PathFormula::Until(a, k, b) => Objective {
                kind: Kind::Until(*k),
                left: labeler.sat_set(a)?,
                right: labeler.sat_set(b)?,
            },
            PathFormula::Eventually(k, p) => {
                let right = labeler.sat_set(p)?;
                Objective {
                    kind: Kind::Until(*k),
                    left: vec![true; right.len()],
                    right,
                }
            }
            PathFormula::Always(k, p) => {
                let right = labeler.sat_set(p)?;
                Objective {
                    kind: Kind::Always(*k),
                    left: vec![true; right.len()],
                    right,
                }
            }
        };
        Ok(Self {
            parts: vec![part],
            combine: Combine::Any,
        })
    }

    fn join(outcomes: Vec<Outcome>, combine: Combine) -> Result<Self, LogicError> {
        let mut parts = Vec::new();
        for o in outcomes {
            if o.parts.len() > 1 && o.combine != combine {
                return Err(LogicError::MixedCombination);
            }
            parts.extend(o.parts);
        }
        if parts.is_empty() {
            return Err(LogicError::EmptyOutcome);
        }
        if parts.len() > Self::MAX_PARTS {
            return Err(LogicError::TooManyParts(parts.len()));
        }
        Ok(Self { parts, combine })
    }

    /// Satisfied when any of the given outcomes is (the disjunction of outcomes).
    pub fn any(outcomes: Vec<Outcome>) -> Result<Self, LogicError> {
        Self::join(outcomes, Combine::Any)
    }

    /// Satisfied when all of the given outcomes are.
    pub fn all(outcomes: Vec<Outcome>) -> Result<Self, LogicError> {
        Self::join(outcomes, Combine::All)
    }

    pub fn horizon(&self) -> usize {
        self.parts.iter().map(Objective::horizon).max().unwrap_or(0)
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    fn all_mask(&self) -> u32 {
        if self.parts.len() == 32 {
            u32::MAX
        } else {
            (1u32 << self.parts.len()) - 1
        }
    }

    /// Progress after observing `s` as the first state of a history.
    pub fn start(&self, s: StateId) -> Progress {
        self.observe(
            Progress {
                open: self.all_mask(),
                sat: 0,
            },
            0,
            s,
        )
    }

    /// Progress after observing state `s` at `position` (≥ 1 for successors).
    pub fn observe(&self, progress: Progress, position: usize, s: StateId) -> Progress {
        let mut p = progress;
        for (i, part) in self.parts.iter().enumerate() {
            let bit = 1u32 << i;
            if p.open & bit == 0 {
                continue;
            }
            match part.classify(position, s) {
                Status::Open => {}
                Status::Sat => {
                    p.open &= !bit;
                    p.sat |= bit;
                }
                Status::Viol => p.open &= !bit,
            }
        }
        p
    }

    /// `Some(truth)` once the outcome is decided.
    pub fn verdict(&self, p: Progress) -> Option<bool> {
        let all = self.all_mask();
        let violated = all & !p.open & !p.sat;
        match self.combine {
            Combine::Any => {
                if p.sat != 0 {
                    Some(true)
                } else if p.open == 0 {
                    Some(false)
                } else {
                    None
                }
            }
            Combine::All => {
                if violated != 0 {
                    Some(false)
                } else if p.sat == all {
                    Some(true)
                } else {
                    None
                }
            }
        }
    }

    /// Evaluates a state sequence; `None` if it ends before the verdict is determined.
    pub fn evaluate_states(&self, states: &[StateId]) -> Option<bool> {
        let (&first, rest) = states.split_first()?;
        let mut p = self.start(first);
        if let Some(v) = self.verdict(p) {
            return Some(v);
        }
        for (i, &s) in rest.iter().enumerate() {
            p = self.observe(p, i + 1, s);
            if let Some(v) = self.verdict(p) {
                return Some(v);
            }
        }
        None
    }
}

/// Satisfaction of a path formula by a finite history.
pub fn path_sat(history: &History, psi: &PathFormula, labeler: &mut dyn StateLabeler) -> Result<bool, LogicError> {
    let outcome = Outcome::compile_with(psi, labeler)?;
    outcome
        .evaluate_states(&history.states)
        .ok_or(LogicError::HistoryTooShort {
            length: history.len(),
            horizon: psi.horizon(),
        })
}
