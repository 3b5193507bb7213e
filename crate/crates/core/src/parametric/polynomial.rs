//! Sparse multivariate polynomials over a fixed, named variable set.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exponent of each variable, in variable order.
pub type Monomial = Vec<u32>;

/// Terms are keyed by exponent vector; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    vars: Arc<[String]>,
    terms: BTreeMap<Monomial, T>,
}

/// Builds a shared variable list.
pub fn variables<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Arc<[String]> {
    names.into_iter().map(Into::into).collect::<Vec<_>>().into()
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(vars: &Arc<[String]>) -> Self {
        Self {
            vars: vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &Arc<[String]>, c: T) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars.len()], c);
        p
    }

    pub fn var(vars: &Arc<[String]>, i: usize) -> Self {
        let mut m = vec![0; vars.len()];
        m[i] = 1;
        let mut p = Self::zero(vars);
        p.add_term(m, T::one());
        p
    }

    pub fn from_terms(vars: &Arc<[String]>, terms: impl IntoIterator<Item = (Monomial, T)>) -> Self {
        let mut p = Self::zero(vars);
        for (m, c) in terms {
            assert_eq!(m.len(), vars.len(), "monomial arity");
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: T) {
        if c == T::zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum == T::zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn vars(&self) -> &Arc<[String]> {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, T)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.iter().all(|&e| e == 0))
    }

    pub fn coefficient(&self, m: &[u32]) -> T {
        self.terms.get(m).copied().unwrap_or_else(T::zero)
    }

    pub fn constant_term(&self) -> T {
        self.coefficient(&vec![0; self.vars.len()])
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m[i] > 0)
    }

    fn check_vars(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.vars, &other.vars) || self.vars == other.vars,
            "polynomials over different variable sets"
        );
    }

    pub fn scale(&self, k: T) -> Self {
        let mut p = Self::zero(&self.vars);
        for (m, &c) in &self.terms {
            p.add_term(m.clone(), c * k);
        }
        p
    }

    pub fn eval(&self, point: &[T]) -> T {
        assert_eq!(point.len(), self.vars.len(), "evaluation point arity");
        self.terms
            .iter()
            .map(|(m, &c)| {
                m.iter()
                    .zip(point)
                    .filter(|(&e, _)| e > 0)
                    .fold(c, |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    pub fn partial_derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(&self.vars);
        for (m, &c) in &self.terms {
            if m[i] == 0 {
                continue;
            }
            let mut d = m.clone();
            d[i] -= 1;
            p.add_term(d, c * T::from_usize_lossy(m[i] as usize));
        }
        p
    }

    /// Fixes variable `i` to `value`; the variable set is unchanged.
    pub fn partial_eval(&self, i: usize, value: T) -> Self {
        let mut p = Self::zero(&self.vars);
        for (m, &c) in &self.terms {
            let mut r = m.clone();
            let e = std::mem::replace(&mut r[i], 0);
            p.add_term(r, c * value.powi(e as i32));
        }
        p
    }

    /// Replaces variable `i` by the polynomial `q`.
    pub fn substitute(&self, i: usize, q: &Self) -> Self {
        self.check_vars(q);
        let mut powers: Vec<Self> = vec![Self::constant(&self.vars, T::one())];
        let mut p = Self::zero(&self.vars);
        for (m, &c) in &self.terms {
            let e = m[i] as usize;
            while powers.len() <= e {
                let next = &powers[powers.len() - 1] * q;
                powers.push(next);
            }
            let mut rest = m.clone();
            rest[i] = 0;
            let mono = Self::from_terms(&self.vars, [(rest, c)]);
            p = &p + &(&mono * &powers[e]);
        }
        p
    }

    /// Drops terms with `|c| ≤ eps`.
    pub fn chop(&self, eps: T) -> Self {
        Self {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > eps)
                .map(|(m, &c)| (m.clone(), c))
                .collect(),
        }
    }

    /// Re-expresses the polynomial over `vars`, sending variable `j` to
    /// `mapping[j]`.
    pub fn remap(&self, vars: &Arc<[String]>, mapping: &[usize]) -> Self {
        let mut p = Self::zero(vars);
        for (m, &c) in &self.terms {
            let mut r = vec![0; vars.len()];
            for (j, &e) in m.iter().enumerate() {
                r[mapping[j]] += e;
            }
            p.add_term(r, c);
        }
        p
    }

    /// Largest coefficient difference to `other`.
    pub fn max_coefficient_diff(&self, other: &Self) -> T {
        let d = self - other;
        d.terms.values().fold(T::zero(), |acc, c| acc.max(c.abs()))
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        self.check_vars(rhs);
        let mut p = self.clone();
        for (m, &c) in &rhs.terms {
            p.add_term(m.clone(), c);
        }
        p
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        self.check_vars(rhs);
        let mut p = self.clone();
        for (m, &c) in &rhs.terms {
            p.add_term(m.clone(), -c);
        }
        p
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    // Exponents add when monomials multiply.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Self) -> Polynomial<T> {
        self.check_vars(rhs);
        let mut p = Polynomial::zero(&self.vars);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                let m: Monomial = a.iter().zip(b).map(|(x, y)| x + y).collect();
                p.add_term(m, ca * cb);
            }
        }
        p
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        self.scale(-T::one())
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl<T: Scalar> $tr for Polynomial<T> {
            type Output = Polynomial<T>;
            fn $f(self, rhs: Self) -> Polynomial<T> {
                (&self).$f(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl<T: Scalar> fmt::Display for Polynomial<T> {
    /// Terms by ascending degree, earlier variables first, e.g.
    /// `-1 + x1 + 0.4*x2 - 1.6*x1*x2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut terms: Vec<(&Monomial, T)> = self.terms.iter().map(|(m, &c)| (m, c)).collect();
        terms.sort_by_key(|(m, _)| (m.iter().sum::<u32>(), Reverse(*m)));
        for (k, (m, c)) in terms.into_iter().enumerate() {
            let negative = c < T::zero();
            let mag = c.abs();
            match (k, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let factors: Vec<String> = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        self.vars[i].clone()
                    } else {
                        format!("{}^{e}", self.vars[i])
                    }
                })
                .collect();
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == T::one() {
                f.write_str(&factors.join("*"))?;
            } else {
                write!(f, "{mag}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Parses `+ - * ^ ( )` expressions over numbers and the given variables.
pub fn parse_polynomial(text: &str, vars: &Arc<[String]>) -> Result<Polynomial<f64>> {
    let mut p = PolyParser {
        chars: text.char_indices().collect(),
        pos: 0,
        vars,
    };
    let poly = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error("unexpected input"));
    }
    Ok(poly)
}

struct PolyParser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    vars: &'a Arc<[String]>,
}

impl PolyParser<'_> {
    fn error(&self, msg: &str) -> Error {
        let col = self.chars.get(self.pos).map_or_else(|| self.chars.len(), |&(i, _)| i) + 1;
        Error::Invalid(format!("polynomial: {msg} at column {col}"))
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn expr(&mut self) -> Result<Polynomial<f64>> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                '-' => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial<f64>> {
        let mut acc = self.unary()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial<f64>> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(-&self.unary()?);
        }
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let digits: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
            let e: u32 = digits.parse().map_err(|_| self.error("expected an exponent"))?;
            let mut r = Polynomial::constant(self.vars, 1.0);
            for _ in 0..e {
                r = &r * &base;
            }
            return Ok(r);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial<f64>> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|&(_, c)| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E')
                {
                    let is_exp = matches!(self.chars[self.pos].1, 'e' | 'E');
                    self.pos += 1;
                    if is_exp && self.chars.get(self.pos).is_some_and(|&(_, c)| c == '-' || c == '+') {
                        self.pos += 1;
                    }
                }
                let text: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
                let v: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
                Ok(Polynomial::constant(self.vars, v))
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                let mut depth = 0;
                while let Some(&(_, c)) = self.chars.get(self.pos) {
                    match c {
                        '[' => depth += 1,
                        ']' if depth > 0 => depth -= 1,
                        _ if depth > 0 => {}
                        _ if c.is_alphanumeric() || c == '_' => {}
                        _ => break,
                    }
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
                let i = self
                    .vars
                    .iter()
                    .position(|v| *v == name)
                    .ok_or_else(|| Error::Invalid(format!("polynomial: unknown variable `{name}`")))?;
                Ok(Polynomial::var(self.vars, i))
            }
            _ => Err(self.error("expected a number, variable or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn junction_u1() -> Polynomial<f64> {
        parse_polynomial("1*x1 + 0.4*x2 - 1.6*x1*x2 - 1", &variables(["x1", "x2"])).unwrap()
    }

    #[test]
    fn evaluation_and_derivative() {
        let u = junction_u1();
        assert_eq!(u.eval(&[0.0, 0.0]), -1.0);
        let d = u.partial_derivative(0);
        let expected = parse_polynomial("1 - 1.6*x2", u.vars()).unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn zero_products_vanish() {
        let u = junction_u1();
        let z = Polynomial::zero(u.vars());
        assert!((&u * &z).is_zero());
        assert!((&u - &u).is_zero());
    }

    #[test]
    fn display_orders_by_degree() {
        assert_eq!(junction_u1().to_string(), "-1 + x1 + 0.4*x2 - 1.6*x1*x2");
        let v = variables(["a"]);
        assert_eq!(parse_polynomial("(a - 1)^2", &v).unwrap().to_string(), "1 - 2*a + a^2");
    }

    #[test]
    fn substitution_and_partial_evaluation() {
        let v = variables(["x", "y"]);
        let p = parse_polynomial("x*y + 2*x", &v).unwrap();
        let one_minus_y = parse_polynomial("1 - y", &v).unwrap();
        let q = p.substitute(0, &one_minus_y);
        assert_eq!(q, parse_polynomial("2 - y - y^2", &v).unwrap());
        assert_eq!(p.partial_eval(0, 0.5), parse_polynomial("0.5*y + 1", &v).unwrap());
    }

    #[test]
    fn bracketed_names_and_errors() {
        let v = variables(["x[A1,s0,b1]"]);
        let p = parse_polynomial("3*x[A1,s0,b1]", &v).unwrap();
        assert_eq!(p.eval(&[2.0]), 6.0);
        assert!(parse_polynomial("3*z", &v).is_err());
        assert!(parse_polynomial("3 +", &v).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let v = variables(["x"]);
        let p = Polynomial::<f32>::var(&v, 0).scale(2.0);
        assert_eq!(p.eval(&[1.5]), 3.0);
    }
}
