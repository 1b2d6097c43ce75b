use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{format_rational, Rational};

/// `S_i` or its adjoint `S_i*`, one-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Letter {
    Gen(usize),
    Adj(usize),
}

impl Letter {
    pub fn index(self) -> usize {
        match self {
            Letter::Gen(i) | Letter::Adj(i) => i,
        }
    }

    pub fn adjoint(self) -> Letter {
        match self {
            Letter::Gen(i) => Letter::Adj(i),
            Letter::Adj(i) => Letter::Gen(i),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Gen(i) => write!(f, "S{i}"),
            Letter::Adj(i) => write!(f, "S{i}*"),
        }
    }
}

/// A product `L_1 L_2 ... L_m` of letters; `L_m` acts first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OperatorWord {
    letters: Vec<Letter>,
}

impl OperatorWord {
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidConfig("empty operator word".into()));
        }
        if let Some(l) = letters.iter().find(|l| l.index() == 0) {
            return Err(Error::IndexOutOfRange { index: l.index(), arity: "indices start at 1".into() });
        }
        Ok(OperatorWord { letters })
    }

    pub fn gen(i: usize) -> Result<Self> {
        Self::new(vec![Letter::Gen(i)])
    }

    pub fn adj(i: usize) -> Result<Self> {
        Self::new(vec![Letter::Adj(i)])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn max_index(&self) -> usize {
        self.letters.iter().map(|l| l.index()).max().unwrap_or(0)
    }

    /// Reversed, with every letter replaced by its adjoint.
    pub fn adjoint(&self) -> OperatorWord {
        OperatorWord { letters: self.letters.iter().rev().map(|l| l.adjoint()).collect() }
    }

    /// `self · other`.
    pub fn then(&self, other: &OperatorWord) -> OperatorWord {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        OperatorWord { letters }
    }
}

impl fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for OperatorWord {
    type Err = Error;
    /// Space separated letters such as `S2 S1*`.
    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .split_whitespace()
            .map(|tok| {
                let bad = || Error::InvalidConfig(format!("`{tok}` is not a letter S<i> or S<i>*"));
                let body = tok.strip_prefix('S').ok_or_else(bad)?;
                let (digits, star) = match body.strip_suffix('*') {
                    Some(d) => (d, true),
                    None => (body, false),
                };
                let i: usize = digits.parse().map_err(|_| bad())?;
                Ok(if star { Letter::Adj(i) } else { Letter::Gen(i) })
            })
            .collect::<Result<Vec<_>>>()?;
        OperatorWord::new(letters)
    }
}

/// Finite rational combination of words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorExpr {
    terms: Vec<(Rational, OperatorWord)>,
}

impl From<OperatorWord> for OperatorExpr {
    fn from(w: OperatorWord) -> Self {
        OperatorExpr { terms: vec![(Rational::one(), w)] }
    }
}

impl OperatorExpr {
    pub fn new(terms: Vec<(Rational, OperatorWord)>) -> Result<Self> {
        let terms: Vec<_> = terms.into_iter().filter(|(c, _)| !c.is_zero()).collect();
        if terms.is_empty() {
            return Err(Error::InvalidConfig("operator expression has no terms".into()));
        }
        Ok(OperatorExpr { terms })
    }

    pub fn terms(&self) -> &[(Rational, OperatorWord)] {
        &self.terms
    }

    pub fn max_index(&self) -> usize {
        self.terms.iter().map(|(_, w)| w.max_index()).max().unwrap_or(0)
    }

    pub fn adjoint(&self) -> OperatorExpr {
        OperatorExpr { terms: self.terms.iter().map(|(c, w)| (c.clone(), w.adjoint())).collect() }
    }

    /// `self · other`, expanded term by term.
    pub fn product(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                terms.push((a * b, u.then(v)));
            }
        }
        OperatorExpr { terms }
    }

    /// `w · self`.
    pub fn prefixed(&self, w: &OperatorWord) -> OperatorExpr {
        OperatorExpr { terms: self.terms.iter().map(|(c, u)| (c.clone(), w.then(u))).collect() }
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (c, w)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if !c.is_one() {
                write!(f, "({}) ", format_rational(c))?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

fn power(letter: Letter, n: usize) -> Vec<Letter> {
    vec![letter; n]
}

/// `S_2^{n-1} S_1`, the image of the n-th generator of the infinite algebra.
pub fn embedding_word(n: usize) -> Result<OperatorWord> {
    if n == 0 {
        return Err(Error::IndexOutOfRange { index: 0, arity: "inf".into() });
    }
    let mut letters = power(Letter::Gen(2), n - 1);
    letters.push(Letter::Gen(1));
    OperatorWord::new(letters)
}

/// `S_2^{n-1} (S_1 S_2 S_1* + S_1 S_1 S_2*)`.
pub fn alternative_embedding(n: usize) -> Result<OperatorExpr> {
    if n == 0 {
        return Err(Error::IndexOutOfRange { index: 0, arity: "inf".into() });
    }
    use Letter::{Adj, Gen};
    let core = OperatorExpr::new(vec![
        (Rational::one(), OperatorWord::new(vec![Gen(1), Gen(2), Adj(1)])?),
        (Rational::one(), OperatorWord::new(vec![Gen(1), Gen(1), Adj(2)])?),
    ])?;
    if n == 1 {
        return Ok(core);
    }
    Ok(core.prefixed(&OperatorWord::new(power(Gen(2), n - 1))?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_letters() {
        let w: OperatorWord = "S2 S1*  S10".parse().unwrap();
        assert_eq!(w.letters(), &[Letter::Gen(2), Letter::Adj(1), Letter::Gen(10)]);
        assert_eq!(w.to_string().parse::<OperatorWord>().unwrap(), w);
        for bad in ["", "T1", "S", "S0", "S1**", "s1"] {
            assert!(bad.parse::<OperatorWord>().is_err(), "{bad}");
        }
    }

    #[test]
    fn adjoint_reverses() {
        let w = OperatorWord::new(vec![Letter::Gen(2), Letter::Gen(1), Letter::Adj(3)]).unwrap();
        assert_eq!(w.adjoint().to_string(), "S3 S1* S2*");
        assert_eq!(w.adjoint().adjoint(), w);
    }

    #[test]
    fn embedding_words() {
        assert_eq!(embedding_word(1).unwrap().to_string(), "S1");
        assert_eq!(embedding_word(3).unwrap().to_string(), "S2 S2 S1");
        assert_eq!(alternative_embedding(2).unwrap().to_string(), "S2 S1 S2 S1* + S2 S1 S1 S2*");
    }

    #[test]
    fn product_expands() {
        let a = alternative_embedding(1).unwrap();
        let p = a.adjoint().product(&a);
        assert_eq!(p.terms().len(), 4);
        assert_eq!(p.terms()[0].1.to_string(), "S1 S2* S1* S1 S2 S1*");
    }

    #[test]
    fn rejects_empty_and_zero_index() {
        assert!(OperatorWord::new(vec![]).is_err());
        assert!(OperatorWord::gen(0).is_err());
        assert!(embedding_word(0).is_err());
    }
}
