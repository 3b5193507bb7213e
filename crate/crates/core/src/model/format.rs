//! Line-oriented text format for games, reward structures and named profiles.
//!
//! ```text
//! agents A1 A2
//! actions A1 { b1 nb1 }
//! state s0 init { init }
//! available s0 A1 { b1 nb1 }
//! trans s0 (nb1,nb2) { s1:1.0 }
//! reward r1 state s1 -3
//! reward r1 action s0 (b1,*) 3
//! profile p_nb { A1 s0 { nb1:1.0 } A2 s0 { nb2:1.0 } }
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::game::{validate_game, Game, RawAvailability, RawGame, RawState, RawTransition};
use super::reward::{ActionRule, RewardStructure};
use super::strategy::{Strategy, StrategyProfile};
use super::ModelError;

/// A parsed model: the game plus its named reward structures and profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub game: Game,
    pub rewards: BTreeMap<String, RewardStructure>,
    pub profiles: BTreeMap<String, StrategyProfile>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Star,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ModelError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let content = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = content.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            let single = match c {
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                ':' => Some(Tok::Colon),
                '*' => Some(Tok::Star),
                _ => None,
            };
            if let Some(tok) = single {
                out.push(Token {
                    tok,
                    line: line_no,
                    column,
                });
                i += 1;
            } else if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
                let start = i;
                i += 1;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric()
                        || chars[i] == '.'
                        || ((chars[i] == '-' || chars[i] == '+') && matches!(chars[i - 1], 'e' | 'E')))
                {
                    i += 1;
                }
                let raw: String = chars[start..i].iter().collect();
                let value: f64 = raw
                    .parse()
                    .map_err(|_| syntax(line_no, column, format!("invalid number `{raw}`")))?;
                if !value.is_finite() {
                    return Err(syntax(line_no, column, format!("non-finite number `{raw}`")));
                }
                out.push(Token {
                    tok: Tok::Number(value),
                    line: line_no,
                    column,
                });
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '\'' | '.')) {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: line_no,
                    column,
                });
            } else {
                return Err(syntax(line_no, column, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(out)
}

/// `(agent, state or None for *, [(action, prob)])`
type RawProfileEntry = (String, Option<String>, Vec<(String, f64)>);

struct RawProfile {
    name: String,
    line: usize,
    entries: Vec<RawProfileEntry>,
}

enum RawRewardItem {
    State {
        name: String,
        state: String,
        value: f64,
    },
    Action {
        name: String,
        state: Option<String>,
        pattern: Vec<Option<String>>,
        value: f64,
    },
}

#[derive(Default)]
struct Statements {
    raw: RawGame,
    saw_agents: bool,
    rewards: Vec<RawRewardItem>,
    profiles: Vec<RawProfile>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.column)).unwrap_or((self.end_line, 1))
    }

    fn err(&self, message: impl Into<String>) -> ModelError {
        let (l, c) = self.here();
        syntax(l, c, message)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ModelError> {
        match self.peek() {
            Some(t) if t.tok == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ModelError> {
        match self.peek() {
            Some(Token { tok: Tok::Ident(s), .. }) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, ModelError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Number(v), ..
            }) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek().is_some_and(|t| &t.tok == tok)
    }

    fn ident_block(&mut self, what: &str) -> Result<Vec<String>, ModelError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        while !self.at(&Tok::RBrace) {
            out.push(self.ident(what)?);
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(out)
    }

    fn weighted_block(&mut self, what: &str) -> Result<Vec<(String, f64)>, ModelError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        while !self.at(&Tok::RBrace) {
            let name = self.ident(what)?;
            self.expect(Tok::Colon, "`:`")?;
            let p = self.number("probability")?;
            out.push((name, p));
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(out)
    }

    fn pattern(&mut self) -> Result<Vec<Option<String>>, ModelError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut out = Vec::new();
        loop {
            if self.at(&Tok::Star) {
                self.pos += 1;
                out.push(None);
            } else {
                out.push(Some(self.ident("action or `*`")?));
            }
            if self.at(&Tok::Comma) {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(out)
    }

    fn statements(&mut self) -> Result<Statements, ModelError> {
        let mut st = Statements::default();
        while let Some(tok) = self.next() {
            let keyword = match &tok.tok {
                Tok::Ident(k) => k.clone(),
                _ => return Err(syntax(tok.line, tok.column, "expected a declaration keyword")),
            };
            match keyword.as_str() {
                "agents" => {
                    if st.saw_agents {
                        return Err(syntax(tok.line, tok.column, "duplicate `agents` declaration"));
                    }
                    st.saw_agents = true;
                    while let Some(Token {
                        tok: Tok::Ident(name),
                        line,
                        ..
                    }) = self.peek()
                    {
                        if *line != tok.line {
                            break;
                        }
                        st.raw.agents.push(name.clone());
                        self.pos += 1;
                    }
                }
                "actions" => {
                    let agent = self.ident("agent name")?;
                    let acts = self.ident_block("action name")?;
                    st.raw.actions.push((agent, acts));
                }
                "atoms" => {
                    let atoms = self.ident_block("atom name")?;
                    st.raw.atoms.get_or_insert_with(Vec::new).extend(atoms);
                }
                "state" => {
                    let name = self.ident("state name")?;
                    let mut initial = false;
                    if let Some(Token { tok: Tok::Ident(w), .. }) = self.peek() {
                        if w == "init" {
                            initial = true;
                            self.pos += 1;
                        }
                    }
                    let labels = if self.at(&Tok::LBrace) {
                        self.ident_block("atom name")?
                    } else {
                        Vec::new()
                    };
                    st.raw.states.push(RawState { name, initial, labels });
                }
                "available" => {
                    let state = self.ident("state name")?;
                    let agent = self.ident("agent name")?;
                    let actions = self.ident_block("action name")?;
                    st.raw.availability.push(RawAvailability { state, agent, actions });
                }
                "trans" => {
                    let state = self.ident("state name")?;
                    let pattern = self.pattern()?;
                    let successors = self.weighted_block("successor state")?;
                    st.raw.transitions.push(RawTransition {
                        state,
                        pattern,
                        successors,
                    });
                }
                "reward" => {
                    let name = self.ident("reward structure name")?;
                    let kind = self.ident("`state` or `action`")?;
                    match kind.as_str() {
                        "state" => {
                            let state = self.ident("state name")?;
                            let value = self.number("reward value")?;
                            st.rewards.push(RawRewardItem::State { name, state, value });
                        }
                        "action" => {
                            let state = if self.at(&Tok::Star) {
                                self.pos += 1;
                                None
                            } else if self.at(&Tok::LParen) {
                                None
                            } else {
                                Some(self.ident("state name, `*` or `(`")?)
                            };
                            let pattern = self.pattern()?;
                            let value = self.number("reward value")?;
                            st.rewards.push(RawRewardItem::Action {
                                name,
                                state,
                                pattern,
                                value,
                            });
                        }
                        _ => {
                            return Err(syntax(
                                tok.line,
                                tok.column,
                                format!("expected `state` or `action` after reward name, found `{kind}`"),
                            ))
                        }
                    }
                }
                "profile" => {
                    let name = self.ident("profile name")?;
                    self.expect(Tok::LBrace, "`{`")?;
                    let mut entries = Vec::new();
                    while !self.at(&Tok::RBrace) {
                        let agent = self.ident("agent name")?;
                        let state = if self.at(&Tok::Star) {
                            self.pos += 1;
                            None
                        } else {
                            Some(self.ident("state name or `*`")?)
                        };
                        let dist = self.weighted_block("action name")?;
                        entries.push((agent, state, dist));
                    }
                    self.expect(Tok::RBrace, "`}`")?;
                    st.profiles.push(RawProfile {
                        name,
                        line: tok.line,
                        entries,
                    });
                }
                other => return Err(syntax(tok.line, tok.column, format!("unknown declaration `{other}`"))),
            }
        }
        Ok(st)
    }
}

fn parse_statements(text: &str) -> Result<Statements, ModelError> {
    let toks = lex(text)?;
    let end_line = text.lines().count().max(1);
    let mut parser = Parser { toks, pos: 0, end_line };
    parser.statements()
}

/// Parses a complete model file.
pub fn parse_model(text: &str) -> Result<ModelFile, ModelError> {
    let st = parse_statements(text)?;
    if !st.saw_agents {
        return Err(syntax(1, 1, "expected `agents` declaration"));
    }
    let game = validate_game(&st.raw)?;
    let rewards = resolve_rewards(&game, &st.rewards)?;
    let profiles = resolve_profiles(&game, &st.profiles)?;
    Ok(ModelFile {
        game,
        rewards,
        profiles,
    })
}

/// Parses a file holding only `profile` blocks against an existing game.
pub fn parse_profiles(text: &str, game: &Game) -> Result<BTreeMap<String, StrategyProfile>, ModelError> {
    let st = parse_statements(text)?;
    if st.saw_agents
        || !st.raw.states.is_empty()
        || !st.raw.transitions.is_empty()
        || !st.raw.actions.is_empty()
        || !st.rewards.is_empty()
    {
        return Err(syntax(1, 1, "a profile file may only contain `profile` blocks"));
    }
    resolve_profiles(game, &st.profiles)
}

fn resolve_rewards(game: &Game, items: &[RawRewardItem]) -> Result<BTreeMap<String, RewardStructure>, ModelError> {
    let mut out: BTreeMap<String, RewardStructure> = BTreeMap::new();
    for item in items {
        match item {
            RawRewardItem::State { name, state, value } => {
                let s = game
                    .state_id(state)
                    .ok_or_else(|| ModelError::UnknownState(state.clone()))?;
                out.entry(name.clone())
                    .or_insert_with(|| RewardStructure::new(game, name.clone()))
                    .add_state_reward(s, *value)?;
            }
            RawRewardItem::Action {
                name,
                state,
                pattern,
                value,
            } => {
                let state = state
                    .as_ref()
                    .map(|s| game.state_id(s).ok_or_else(|| ModelError::UnknownState(s.clone())))
                    .transpose()?;
                if pattern.len() != game.num_agents() {
                    return Err(ModelError::Reward(format!(
                        "pattern of `{name}` has {} components, expected {}",
                        pattern.len(),
                        game.num_agents()
                    )));
                }
                let pattern = pattern
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        p.as_ref()
                            .map(|a| {
                                game.action_id(i, a).ok_or_else(|| {
                                    ModelError::Reward(format!("unknown action `{a}` for agent {}", game.agent_name(i)))
                                })
                            })
                            .transpose()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                out.entry(name.clone())
                    .or_insert_with(|| RewardStructure::new(game, name.clone()))
                    .add_rule(ActionRule {
                        state,
                        pattern,
                        value: *value,
                    })?;
            }
        }
    }
    Ok(out)
}

fn resolve_profiles(game: &Game, raw: &[RawProfile]) -> Result<BTreeMap<String, StrategyProfile>, ModelError> {
    let mut out = BTreeMap::new();
    for p in raw {
        if out.contains_key(&p.name) {
            return Err(ModelError::Profile(format!(
                "profile `{}` defined twice (line {})",
                p.name, p.line
            )));
        }
        let mut rows: Vec<Option<Vec<Vec<f64>>>> = vec![None; game.num_agents()];
        // wildcard entries first so explicit states override them
        let ordered = p
            .entries
            .iter()
            .filter(|e| e.1.is_none())
            .chain(p.entries.iter().filter(|e| e.1.is_some()));
        for (agent, state, dist) in ordered {
            let i = game
                .agent_id(agent)
                .ok_or_else(|| ModelError::UnknownAgent(agent.clone()))?;
            let table = rows[i].get_or_insert_with(|| {
                let u = Strategy::uniform(game, i);
                (0..game.num_states()).map(|s| u.row(s).to_vec()).collect()
            });
            let states: Vec<usize> = match state {
                Some(s) => vec![game.state_id(s).ok_or_else(|| ModelError::UnknownState(s.clone()))?],
                None => (0..game.num_states()).collect(),
            };
            for s in states {
                let mut row = vec![0.0; game.actions(i).len()];
                for (a, prob) in dist {
                    let id = game.action_id(i, a).ok_or_else(|| {
                        ModelError::Profile(format!("profile `{}`: unknown action `{a}` for {agent}", p.name))
                    })?;
                    row[id] += prob;
                }
                table[s] = row;
            }
        }
        let mut profile = StrategyProfile::empty(game.num_agents());
        for (i, table) in rows.into_iter().enumerate() {
            if let Some(table) = table {
                let strat = Strategy::new(game, i, table)
                    .map_err(|e| ModelError::Profile(format!("profile `{}`: {e}", p.name)))?;
                profile.set(strat)?;
            }
        }
        out.insert(p.name.clone(), profile);
    }
    Ok(out)
}

fn write_pattern(out: &mut String, game: &Game, pattern: impl Iterator<Item = (usize, Option<usize>)>) {
    let parts: Vec<String> = pattern
        .map(|(agent, a)| a.map_or("*".to_string(), |a| game.action_name(agent, a).to_string()))
        .collect();
    let _ = write!(out, "({})", parts.join(","));
}

/// Writes a model in the text format; `parse_model` reads it back to an
/// equal [`ModelFile`].
pub fn serialize_model(
    game: &Game,
    profiles: &BTreeMap<String, StrategyProfile>,
    rewards: &BTreeMap<String, RewardStructure>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "agents {}", game.agents().join(" "));
    for i in 0..game.num_agents() {
        let _ = writeln!(
            out,
            "actions {} {{ {} }}",
            game.agent_name(i),
            game.actions(i).join(" ")
        );
    }
    let _ = writeln!(out, "atoms {{ {} }}", game.atoms().join(" "));
    for s in 0..game.num_states() {
        let labels: Vec<&str> = game.labels(s).iter().map(|&a| game.atoms()[a].as_str()).collect();
        let init = if s == game.initial() { " init" } else { "" };
        let _ = writeln!(out, "state {}{init} {{ {} }}", game.state_name(s), labels.join(" "));
    }
    for s in 0..game.num_states() {
        for i in 0..game.num_agents() {
            let avail = game.available(s, i);
            if avail.len() != game.actions(i).len() {
                let names: Vec<&str> = avail.iter().map(|&a| game.action_name(i, a)).collect();
                let _ = writeln!(
                    out,
                    "available {} {} {{ {} }}",
                    game.state_name(s),
                    game.agent_name(i),
                    names.join(" ")
                );
            }
        }
    }
    for s in 0..game.num_states() {
        for (ja, dist) in game.moves(s) {
            let succ: Vec<String> = dist
                .iter()
                .map(|(t, p)| format!("{}:{}", game.state_name(t), p))
                .collect();
            let _ = writeln!(
                out,
                "trans {} {} {{ {} }}",
                game.state_name(s),
                game.format_joint(ja),
                succ.join(" ")
            );
        }
    }
    for (name, r) in rewards {
        for (s, &v) in r.state_rewards().iter().enumerate() {
            if v != 0.0 {
                let _ = writeln!(out, "reward {name} state {} {v}", game.state_name(s));
            }
        }
        for rule in r.rules() {
            let scope = rule.state.map_or("*", |s| game.state_name(s));
            let _ = write!(out, "reward {name} action {scope} ");
            write_pattern(&mut out, game, rule.pattern.iter().copied().enumerate());
            let _ = writeln!(out, " {}", rule.value);
        }
    }
    for (name, profile) in profiles {
        let _ = writeln!(out, "profile {name} {{");
        for i in 0..game.num_agents() {
            let Some(strat) = profile.get(i) else { continue };
            for s in 0..game.num_states() {
                let entries: Vec<String> = strat
                    .row(s)
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(a, p)| format!("{}:{}", game.action_name(i, a), p))
                    .collect();
                let _ = writeln!(
                    out,
                    "  {} {} {{ {} }}",
                    game.agent_name(i),
                    game.state_name(s),
                    entries.join(" ")
                );
            }
        }
        let _ = writeln!(out, "}}");
    }
    out
}
