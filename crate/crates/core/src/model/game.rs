use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::{ModelError, Violation};

/// Tolerance used for every probability-sum check in the model layer.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

pub type StateId = usize;
pub type AgentId = usize;
/// Index into an agent's declared action list.
pub type ActionId = usize;
pub type AtomId = usize;

/// One action per agent, in agent order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction(pub Vec<ActionId>);

impl JointAction {
    pub fn action(&self, agent: AgentId) -> ActionId {
        self.0[agent]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Sparse probability distribution over successor states, sorted by state and
/// holding strictly positive entries only.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    entries: Vec<(StateId, f64)>,
}

impl Distribution {
    /// Builds a distribution, merging duplicate successors and dropping zeros.
    /// Normalisation is checked by the caller.
    pub fn from_entries(entries: impl IntoIterator<Item = (StateId, f64)>) -> Self {
        let mut merged: Vec<(StateId, f64)> = Vec::new();
        let mut sorted: Vec<(StateId, f64)> = entries.into_iter().collect();
        sorted.sort_by_key(|(s, _)| *s);
        for (s, p) in sorted {
            match merged.last_mut() {
                Some((last, acc)) if *last == s => *acc += p,
                _ => merged.push((s, p)),
            }
        }
        merged.retain(|(_, p)| *p != 0.0);
        Self { entries: merged }
    }

    pub fn point(state: StateId) -> Self {
        Self {
            entries: vec![(state, 1.0)],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn prob(&self, state: StateId) -> f64 {
        self.entries
            .binary_search_by_key(&state, |(s, _)| *s)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.entries.iter().map(|(s, _)| *s)
    }
}

/// A validated concurrent stochastic multi-player game.
///
/// Identifiers are interned to dense indices; names are kept for I/O.
/// Transitions are stored per state in the order produced by
/// [`Game::joint_actions`].
#[derive(Clone, Debug)]
pub struct Game {
    agents: Vec<String>,
    states: Vec<String>,
    initial: StateId,
    actions: Vec<Vec<String>>,
    availability: Vec<Vec<Vec<ActionId>>>,
    atoms: Vec<String>,
    labels: Vec<Vec<AtomId>>,
    joint: Vec<Vec<JointAction>>,
    transitions: Vec<Vec<Distribution>>,
    agent_index: HashMap<String, AgentId>,
    state_index: HashMap<String, StateId>,
    action_index: Vec<HashMap<String, ActionId>>,
    atom_index: HashMap<String, AtomId>,
}

impl PartialEq for Game {
    fn eq(&self, other: &Self) -> bool {
        self.agents == other.agents
            && self.states == other.states
            && self.initial == other.initial
            && self.actions == other.actions
            && self.availability == other.availability
            && self.atoms == other.atoms
            && self.labels == other.labels
            && self.transitions == other.transitions
    }
}

impl Game {
    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn actions(&self, agent: AgentId) -> &[String] {
        &self.actions[agent]
    }

    pub fn agent_name(&self, agent: AgentId) -> &str {
        &self.agents[agent]
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.states[state]
    }

    pub fn action_name(&self, agent: AgentId, action: ActionId) -> &str {
        &self.actions[agent][action]
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agent_index.get(name).copied()
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn action_id(&self, agent: AgentId, name: &str) -> Option<ActionId> {
        self.action_index.get(agent)?.get(name).copied()
    }

    pub fn atom_id(&self, name: &str) -> Option<AtomId> {
        self.atom_index.get(name).copied()
    }

    /// `Act_i(s)`, in declaration order.
    pub fn available(&self, state: StateId, agent: AgentId) -> &[ActionId] {
        &self.availability[state][agent]
    }

    pub fn is_available(&self, state: StateId, agent: AgentId, action: ActionId) -> bool {
        self.availability[state][agent].contains(&action)
    }

    pub fn labels(&self, state: StateId) -> &[AtomId] {
        &self.labels[state]
    }

    pub fn has_label(&self, state: StateId, atom: AtomId) -> bool {
        self.labels[state].binary_search(&atom).is_ok()
    }

    /// Cartesian product of the availability sets at `state`, ordered
    /// lexicographically by agent then action.
    pub fn joint_actions(&self, state: StateId) -> &[JointAction] {
        &self.joint[state]
    }

    /// Checked variant of [`Game::joint_actions`] for names coming from users.
    pub fn joint_actions_checked(&self, state: StateId) -> Result<&[JointAction], ModelError> {
        self.joint
            .get(state)
            .map(Vec::as_slice)
            .ok_or(ModelError::UnknownState(state.to_string()))
    }

    /// Pairs every available joint action at `state` with its distribution.
    pub fn moves(&self, state: StateId) -> impl Iterator<Item = (&JointAction, &Distribution)> {
        self.joint[state].iter().zip(&self.transitions[state])
    }

    pub fn joint_index(&self, state: StateId, joint: &JointAction) -> Option<usize> {
        if joint.len() != self.agents.len() {
            return None;
        }
        let mut index = 0;
        for (agent, &action) in joint.0.iter().enumerate() {
            let avail = &self.availability[state][agent];
            let pos = avail.iter().position(|&a| a == action)?;
            index = index * avail.len() + pos;
        }
        Some(index)
    }

    pub fn transition(&self, state: StateId, joint: &JointAction) -> Option<&Distribution> {
        self.joint_index(state, joint).map(|i| &self.transitions[state][i])
    }

    /// States reachable in one step from `state` under some available joint action.
    pub fn successors(&self, state: StateId) -> BTreeSet<StateId> {
        self.transitions[state].iter().flat_map(|d| d.support()).collect()
    }

    pub fn format_joint(&self, joint: &JointAction) -> String {
        let names: Vec<&str> = joint
            .0
            .iter()
            .enumerate()
            .map(|(agent, &a)| self.action_name(agent, a))
            .collect();
        format!("({})", names.join(","))
    }
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "game: {} agents, {} states, {} atoms, initial {}",
            self.agents.len(),
            self.states.len(),
            self.atoms.len(),
            self.states[self.initial]
        )
    }
}

/// Name-based, unvalidated game description as produced by the model parser
/// or assembled programmatically.
#[derive(Clone, Debug, Default)]
pub struct RawGame {
    pub agents: Vec<String>,
    /// `(agent, actions)` declarations.
    pub actions: Vec<(String, Vec<String>)>,
    /// Explicit atom set; when absent the union of all labels is used.
    pub atoms: Option<Vec<String>>,
    pub states: Vec<RawState>,
    pub availability: Vec<RawAvailability>,
    pub transitions: Vec<RawTransition>,
}

#[derive(Clone, Debug, Default)]
pub struct RawState {
    pub name: String,
    pub initial: bool,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RawAvailability {
    pub state: String,
    pub agent: String,
    pub actions: Vec<String>,
}

/// A transition rule; `None` in the pattern is the `*` wildcard.
#[derive(Clone, Debug)]
pub struct RawTransition {
    pub state: String,
    pub pattern: Vec<Option<String>>,
    pub successors: Vec<(String, f64)>,
}

fn intern(names: &[String], kind: &'static str, out: &mut Vec<Violation>) -> HashMap<String, usize> {
    let mut map = HashMap::new();
    for (i, name) in names.iter().enumerate() {
        if map.insert(name.clone(), i).is_some() {
            out.push(Violation::DuplicateIdentifier {
                kind,
                name: name.clone(),
            });
        }
    }
    map
}

/// Validates a raw description, reporting every violated invariant at once.
pub fn validate_game(raw: &RawGame) -> Result<Game, ModelError> {
    let mut violations = Vec::new();

    if raw.agents.is_empty() {
        violations.push(Violation::Empty("agents"));
    }
    if raw.states.is_empty() {
        violations.push(Violation::Empty("states"));
    }
    let agent_index = intern(&raw.agents, "agent", &mut violations);
    let state_names: Vec<String> = raw.states.iter().map(|s| s.name.clone()).collect();
    let state_index = intern(&state_names, "state", &mut violations);

    let mut actions: Vec<Option<Vec<String>>> = vec![None; raw.agents.len()];
    for (agent, acts) in &raw.actions {
        match agent_index.get(agent) {
            Some(&i) => {
                if actions[i].is_some() {
                    violations.push(Violation::DuplicateIdentifier {
                        kind: "action declaration",
                        name: agent.clone(),
                    });
                }
                actions[i] = Some(acts.clone());
            }
            None => violations.push(Violation::UnknownIdentifier {
                kind: "agent",
                name: agent.clone(),
            }),
        }
    }
    let actions: Vec<Vec<String>> = actions
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let a = a.unwrap_or_default();
            if a.is_empty() {
                violations.push(Violation::NoActions(raw.agents[i].clone()));
            }
            a
        })
        .collect();
    let action_index: Vec<HashMap<String, ActionId>> = actions
        .iter()
        .map(|acts| intern(acts, "action", &mut violations))
        .collect();

    let atoms: Vec<String> = match &raw.atoms {
        Some(atoms) => atoms.clone(),
        None => {
            let mut seen = Vec::new();
            for state in &raw.states {
                for l in &state.labels {
                    if !seen.contains(l) {
                        seen.push(l.clone());
                    }
                }
            }
            seen
        }
    };
    let atom_index = intern(&atoms, "atom", &mut violations);

    let mut labels = Vec::with_capacity(raw.states.len());
    for state in &raw.states {
        let mut ls = Vec::new();
        for l in &state.labels {
            match atom_index.get(l) {
                Some(&a) => ls.push(a),
                None => violations.push(Violation::UnknownIdentifier {
                    kind: "atom",
                    name: l.clone(),
                }),
            }
        }
        ls.sort_unstable();
        ls.dedup();
        labels.push(ls);
    }

    let initials: Vec<usize> = raw
        .states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.initial)
        .map(|(i, _)| i)
        .collect();
    let initial = match initials.as_slice() {
        [i] => *i,
        [] => {
            if !raw.states.is_empty() {
                violations.push(Violation::NoInitialState);
            }
            0
        }
        _ => {
            violations.push(Violation::MultipleInitialStates);
            initials[0]
        }
    };

    let n_states = raw.states.len();
    let n_agents = raw.agents.len();
    let mut availability: Vec<Vec<Vec<ActionId>>> = (0..n_states)
        .map(|_| actions.iter().map(|a| (0..a.len()).collect()).collect())
        .collect();
    for av in &raw.availability {
        let (Some(&s), Some(&i)) = (state_index.get(&av.state), agent_index.get(&av.agent)) else {
            if !state_index.contains_key(&av.state) {
                violations.push(Violation::UnknownIdentifier {
                    kind: "state",
                    name: av.state.clone(),
                });
            }
            if !agent_index.contains_key(&av.agent) {
                violations.push(Violation::UnknownIdentifier {
                    kind: "agent",
                    name: av.agent.clone(),
                });
            }
            continue;
        };
        let mut set = Vec::new();
        for a in &av.actions {
            match action_index[i].get(a) {
                Some(&id) => set.push(id),
                None => violations.push(Violation::UnknownIdentifier {
                    kind: "action",
                    name: a.clone(),
                }),
            }
        }
        set.sort_unstable();
        set.dedup();
        if set.is_empty() {
            violations.push(Violation::EmptyAvailability {
                state: av.state.clone(),
                agent: av.agent.clone(),
            });
        }
        availability[s][i] = set;
    }

    let joint: Vec<Vec<JointAction>> = availability.iter().map(|per_agent| product(per_agent)).collect();

    let mut transitions: Vec<Vec<Option<Distribution>>> = joint.iter().map(|js| vec![None; js.len()]).collect();
    for tr in &raw.transitions {
        let Some(&s) = state_index.get(&tr.state) else {
            violations.push(Violation::UnknownIdentifier {
                kind: "state",
                name: tr.state.clone(),
            });
            continue;
        };
        if tr.pattern.len() != n_agents {
            violations.push(Violation::ArityMismatch {
                state: tr.state.clone(),
                expected: n_agents,
                found: tr.pattern.len(),
            });
            continue;
        }
        let mut choices: Vec<Vec<ActionId>> = Vec::with_capacity(n_agents);
        let mut ok = true;
        for (i, p) in tr.pattern.iter().enumerate() {
            match p {
                None => choices.push(availability[s][i].clone()),
                Some(name) => match action_index[i].get(name) {
                    Some(&a) if availability[s][i].contains(&a) => choices.push(vec![a]),
                    Some(_) => {
                        violations.push(Violation::UnavailableAction {
                            state: tr.state.clone(),
                            agent: raw.agents[i].clone(),
                            action: name.clone(),
                        });
                        ok = false;
                    }
                    None => {
                        violations.push(Violation::UnknownIdentifier {
                            kind: "action",
                            name: name.clone(),
                        });
                        ok = false;
                    }
                },
            }
        }
        if !ok {
            continue;
        }
        let mut entries = Vec::new();
        for (succ, p) in &tr.successors {
            match state_index.get(succ) {
                Some(&t) => {
                    if !(0.0..=1.0).contains(p) || !p.is_finite() {
                        violations.push(Violation::ProbabilityOutOfRange {
                            context: format!("transition from {}", tr.state),
                            value: *p,
                        });
                    }
                    entries.push((t, *p));
                }
                None => violations.push(Violation::UnknownIdentifier {
                    kind: "state",
                    name: succ.clone(),
                }),
            }
        }
        let dist = Distribution::from_entries(entries);
        for ja in product(&choices) {
            let idx = joint_position(&availability[s], &ja);
            let label = joint_label(&actions, &ja);
            if transitions[s][idx].is_some() {
                violations.push(Violation::DuplicateTransition {
                    state: tr.state.clone(),
                    joint: label.clone(),
                });
            }
            let total = dist.total();
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                violations.push(Violation::DistributionNotNormalized {
                    state: tr.state.clone(),
                    joint: label,
                    sum: total,
                });
            }
            transitions[s][idx] = Some(dist.clone());
        }
    }

    let mut complete = Vec::with_capacity(n_states);
    for (s, row) in transitions.into_iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (j, d) in row.into_iter().enumerate() {
            match d {
                Some(d) => out.push(d),
                None => {
                    violations.push(Violation::MissingTransition {
                        state: raw.states[s].name.clone(),
                        joint: joint_label(&actions, &joint[s][j]),
                    });
                    out.push(Distribution::from_entries([]));
                }
            }
        }
        complete.push(out);
    }

    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }

    Ok(Game {
        agents: raw.agents.clone(),
        states: state_names,
        initial,
        actions,
        availability,
        atoms,
        labels,
        joint,
        transitions: complete,
        agent_index,
        state_index,
        action_index,
        atom_index,
    })
}

fn joint_position(avail: &[Vec<ActionId>], ja: &JointAction) -> usize {
    ja.0.iter().zip(avail).fold(0, |acc, (a, set)| {
        acc * set.len() + set.iter().position(|x| x == a).expect("action is available")
    })
}

fn joint_label(actions: &[Vec<String>], ja: &JointAction) -> String {
    let names: Vec<&str> = ja.0.iter().enumerate().map(|(i, &a)| actions[i][a].as_str()).collect();
    format!("({})", names.join(","))
}

/// Lexicographic Cartesian product, first factor varying slowest.
pub(crate) fn product(sets: &[Vec<usize>]) -> Vec<JointAction> {
    let mut out = vec![Vec::with_capacity(sets.len())];
    for set in sets {
        let mut next = Vec::with_capacity(out.len() * set.len());
        for prefix in &out {
            for &x in set {
                let mut v = prefix.clone();
                v.push(x);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(JointAction).collect()
}
