//! Recursive-descent parser for state and path formulas.
//!
//! ```text
//! state := and
//! and   := unary ('&' unary)*
//! unary := '!' unary | primary
//! primary := '"atom"' | 'true' | 'false' | '(' state ')' | '<<' ids '>>' tail
//! tail  := 'P' rel num '[' path ']'
//!        | 'R' '{' id '}' rel num '[' path ']'
//!        | 'D' rel num '[' 'BCR' '(' id ',' id ',' path ')' ']'
//! path  := 'X' state | 'F<=' int state | 'G<=' int state | state 'U<=' int state
//! ```

use super::ast::{Formula, PathFormula, Relation, StateFormula};
use super::LogicError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Number(f64, String),
    Rel(Relation),
    LAngle2,
    RAngle2,
    Not,
    And,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    /// 1-based character column.
    pos: usize,
}

fn err(pos: usize, message: impl Into<String>) -> LogicError {
    LogicError::Syntax {
        position: pos,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, LogicError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        let two = |n: char| chars.get(i + 1) == Some(&n);
        let (tok, len) = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '<' if two('<') => (Tok::LAngle2, 2),
            '>' if two('>') => (Tok::RAngle2, 2),
            '<' if two('=') => (Tok::Rel(Relation::Le), 2),
            '>' if two('=') => (Tok::Rel(Relation::Ge), 2),
            '<' => (Tok::Rel(Relation::Lt), 1),
            '>' => (Tok::Rel(Relation::Gt), 1),
            '!' => (Tok::Not, 1),
            '&' => (Tok::And, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ',' => (Tok::Comma, 1),
            '"' => {
                let end = chars[i + 1..]
                    .iter()
                    .position(|&c| c == '"')
                    .ok_or_else(|| err(pos, "unterminated atom name"))?;
                let name: String = chars[i + 1..i + 1 + end].iter().collect();
                if name.is_empty() {
                    return Err(err(pos, "empty atom name"));
                }
                (Tok::Str(name), end + 2)
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut j = i + 1;
                while j < chars.len()
                    && (chars[j].is_ascii_digit()
                        || chars[j] == '.'
                        || matches!(chars[j], 'e' | 'E')
                        || (matches!(chars[j], '-' | '+') && matches!(chars[j - 1], 'e' | 'E')))
                {
                    j += 1;
                }
                let raw: String = chars[i..j].iter().collect();
                let v: f64 = raw.parse().map_err(|_| err(pos, format!("invalid number `{raw}`")))?;
                if !v.is_finite() {
                    return Err(err(pos, format!("non-finite number `{raw}`")));
                }
                (Tok::Number(v, raw), j - i)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || matches!(chars[j], '_' | '\'' | '.')) {
                    j += 1;
                }
                (Tok::Ident(chars[i..j].iter().collect()), j - i)
            }
            other => return Err(err(pos, format!("unexpected character `{other}`"))),
        };
        out.push(Token { tok, pos });
        i += len;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.at + k).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.pos)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, LogicError> {
        Err(err(self.pos(), message))
    }

    fn bump(&mut self) {
        self.at += 1;
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), LogicError> {
        if self.eat(&want) {
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn ident(&mut self, what: &str) -> Result<String, LogicError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.fail(format!("expected {what}")),
        }
    }

    fn number(&mut self) -> Result<f64, LogicError> {
        match self.peek() {
            Some(Tok::Number(v, _)) => {
                let v = *v;
                self.bump();
                Ok(v)
            }
            _ => self.fail("expected a number"),
        }
    }

    fn bound_int(&mut self) -> Result<usize, LogicError> {
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Number(_, raw)) if raw.chars().all(|c| c.is_ascii_digit()) => {
                let k = raw.parse().map_err(|_| err(pos, "step bound too large"))?;
                self.bump();
                Ok(k)
            }
            _ => self.fail("expected a non-negative integer step bound"),
        }
    }

    fn relation(&mut self) -> Result<Relation, LogicError> {
        match self.peek() {
            Some(Tok::Rel(r)) => {
                let r = *r;
                self.bump();
                Ok(r)
            }
            _ => self.fail("expected one of <=, <, >=, >"),
        }
    }

    fn bounded(&mut self) -> Result<usize, LogicError> {
        self.expect(Tok::Rel(Relation::Le), "`<=` after temporal operator")?;
        self.bound_int()
    }

    fn state(&mut self) -> Result<StateFormula, LogicError> {
        let mut left = self.unary()?;
        while self.eat(&Tok::And) {
            let right = self.unary()?;
            left = StateFormula::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<StateFormula, LogicError> {
        if self.eat(&Tok::Not) {
            return Ok(StateFormula::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<StateFormula, LogicError> {
        match self.peek().cloned() {
            Some(Tok::Str(name)) => {
                self.bump();
                Ok(StateFormula::Atom(name))
            }
            Some(Tok::Ident(kw)) if kw == "true" => {
                self.bump();
                Ok(StateFormula::True)
            }
            Some(Tok::Ident(kw)) if kw == "false" => {
                self.bump();
                Ok(StateFormula::False)
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.state()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::LAngle2) => {
                self.bump();
                self.coalition_operator()
            }
            _ => self.fail("expected a state formula"),
        }
    }

    fn coalition_operator(&mut self) -> Result<StateFormula, LogicError> {
        let mut coalition = Vec::new();
        if !self.eat(&Tok::RAngle2) {
            loop {
                coalition.push(self.ident("agent name")?);
                if self.eat(&Tok::RAngle2) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `>>`")?;
            }
        }
        let op = self.ident("P, R or D")?;
        match op.as_str() {
            "P" => {
                let relation = self.relation()?;
                let pos = self.pos();
                let bound = self.number()?;
                if !(0.0..=1.0).contains(&bound) {
                    return Err(LogicError::BoundOutOfRange { position: pos, bound });
                }
                self.expect(Tok::LBracket, "`[`")?;
                let path = self.path()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(StateFormula::Prob {
                    coalition,
                    relation,
                    bound,
                    path: Box::new(path),
                })
            }
            "R" => {
                self.expect(Tok::LBrace, "`{` after R")?;
                let reward = self.ident("reward structure name")?;
                self.expect(Tok::RBrace, "`}`")?;
                let relation = self.relation()?;
                let bound = self.number()?;
                self.expect(Tok::LBracket, "`[`")?;
                let path = self.path()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(StateFormula::Reward {
                    coalition,
                    reward,
                    relation,
                    bound,
                    path: Box::new(path),
                })
            }
            "D" => {
                let relation = self.relation()?;
                let bound = self.number()?;
                self.expect(Tok::LBracket, "`[`")?;
                if !self.keyword("BCR") {
                    return self.fail("expected BCR(agent, profile, path)");
                }
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let agent = self.ident("agent name")?;
                self.expect(Tok::Comma, "`,`")?;
                let profile = self.ident("profile name")?;
                self.expect(Tok::Comma, "`,`")?;
                let path = self.path()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(StateFormula::Resp {
                    coalition,
                    relation,
                    bound,
                    agent,
                    profile,
                    path: Box::new(path),
                })
            }
            other => self.fail(format!("unknown coalition operator `{other}`")),
        }
    }

    fn starts_path_keyword(&self) -> bool {
        match self.peek() {
            Some(Tok::Ident(k)) if k == "X" => true,
            Some(Tok::Ident(k)) if k == "F" || k == "G" => {
                matches!(self.peek_at(1), Some(Tok::Rel(Relation::Le)))
            }
            _ => false,
        }
    }

    fn path(&mut self) -> Result<PathFormula, LogicError> {
        if self.keyword("X") {
            self.bump();
            return Ok(PathFormula::Next(Box::new(self.state()?)));
        }
        if self.starts_path_keyword() {
            let is_f = self.keyword("F");
            self.bump();
            let k = self.bounded()?;
            let phi = Box::new(self.state()?);
            return Ok(if is_f {
                PathFormula::Eventually(k, phi)
            } else {
                PathFormula::Always(k, phi)
            });
        }
        let left = self.state()?;
        if !self.keyword("U") {
            return self.fail("expected `U<=k` (or start the path with X, F<=k, G<=k)");
        }
        self.bump();
        let k = self.bounded()?;
        let right = self.state()?;
        Ok(PathFormula::Until(Box::new(left), k, Box::new(right)))
    }

    fn finish(&self) -> Result<(), LogicError> {
        if self.at < self.toks.len() {
            self.fail("unexpected trailing input")
        } else {
            Ok(())
        }
    }
}

fn parser(text: &str) -> Result<Parser, LogicError> {
    let toks = lex(text)?;
    Ok(Parser {
        toks,
        at: 0,
        end: text.chars().count() + 1,
    })
}

pub fn parse_state_formula(text: &str) -> Result<StateFormula, LogicError> {
    let mut p = parser(text)?;
    let phi = p.state()?;
    p.finish()?;
    Ok(phi)
}

pub fn parse_path_formula(text: &str) -> Result<PathFormula, LogicError> {
    let mut p = parser(text)?;
    let psi = p.path()?;
    p.finish()?;
    Ok(psi)
}

/// Parses either a state or a path formula.
pub fn parse_formula(text: &str) -> Result<Formula, LogicError> {
    let mut p = parser(text)?;
    if p.starts_path_keyword() {
        let psi = p.path()?;
        p.finish()?;
        return Ok(Formula::Path(psi));
    }
    let phi = p.state()?;
    if p.keyword("U") {
        p.bump();
        let k = p.bounded()?;
        let right = p.state()?;
        p.finish()?;
        return Ok(Formula::Path(PathFormula::Until(Box::new(phi), k, Box::new(right))));
    }
    p.finish()?;
    Ok(Formula::State(phi))
}
