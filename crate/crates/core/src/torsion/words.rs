//! Words in a free group and formal integral combinations of them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A freely reduced word: letters `(generator index, nonzero exponent)`, no two
/// adjacent letters on the same generator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Word(Vec<(usize, i64)>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn generator(g: usize) -> Self {
        Word(vec![(g, 1)])
    }

    pub fn from_letters(letters: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut w = Word::identity();
        for (g, e) in letters {
            w.push(g, e);
        }
        w
    }

    fn push(&mut self, g: usize, e: i64) {
        if e == 0 {
            return;
        }
        match self.0.last_mut() {
            Some(last) if last.0 == g => {
                last.1 += e;
                if last.1 == 0 {
                    self.0.pop();
                }
            }
            _ => self.0.push((g, e)),
        }
    }

    pub fn letters(&self) -> &[(usize, i64)] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &(g, e) in &other.0 {
            w.push(g, e);
        }
        w
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&(g, e)| (g, -e)).collect())
    }

    /// Image in `Z^n`: total exponent of each generator.
    pub fn abelianize(&self, generators: usize) -> Vec<i64> {
        let mut v = vec![0; generators];
        for &(g, e) in &self.0 {
            v[g] += e;
        }
        v
    }

    /// Parses `a b^-1 a^2`, `ab^-1`, `a*b` or `1`/empty for the identity.
    /// Generator names are matched greedily, longest first.
    pub fn parse(text: &str, generators: &[String]) -> Result<Word> {
        let mut order: Vec<usize> = (0..generators.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(generators[i].len()));
        let chars: Vec<char> = text.chars().collect();
        let mut pos = 0;
        let mut w = Word::identity();
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "1" {
            return Ok(w);
        }
        while pos < chars.len() {
            let c = chars[pos];
            if c.is_whitespace() || c == '*' || c == '.' {
                pos += 1;
                continue;
            }
            let rest: String = chars[pos..].iter().collect();
            let Some(&g) = order.iter().find(|&&i| !generators[i].is_empty() && rest.starts_with(&generators[i])) else {
                return Err(Error::parse(format!("word '{text}'"), format!("unknown generator at offset {pos}")));
            };
            pos += generators[g].chars().count();
            let mut exponent = 1i64;
            if pos < chars.len() && chars[pos] == '^' {
                pos += 1;
                let start = pos;
                if pos < chars.len() && (chars[pos] == '-' || chars[pos] == '+') {
                    pos += 1;
                }
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    pos += 1;
                }
                let digits: String = chars[start..pos].iter().collect();
                exponent = digits
                    .parse()
                    .map_err(|_| Error::parse(format!("word '{text}'"), format!("bad exponent '{digits}'")))?;
            }
            w.push(g, exponent);
        }
        Ok(w)
    }

    pub fn display<'a>(&'a self, generators: &'a [String]) -> impl fmt::Display + 'a {
        WordDisplay { word: self, generators }
    }
}

struct WordDisplay<'a> {
    word: &'a Word,
    generators: &'a [String],
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_identity() {
            return write!(f, "1");
        }
        for (i, &(g, e)) in self.word.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            let name = self.generators.get(g).map(String::as_str).unwrap_or("?");
            if e == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{e}")?;
            }
        }
        Ok(())
    }
}

/// `Σ n_w w` with integer coefficients, zero terms dropped.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupRingElement {
    terms: BTreeMap<Word, i64>,
}

impl GroupRingElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(1, Word::identity())
    }

    pub fn monomial(coefficient: i64, word: Word) -> Self {
        let mut e = Self::zero();
        e.add_term(coefficient, word);
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i64, Word)>) -> Self {
        let mut e = Self::zero();
        for (n, w) in terms {
            e.add_term(n, w);
        }
        e
    }

    /// `g - 1`.
    pub fn generator_minus_one(g: usize) -> Self {
        Self::from_terms([(1, Word::generator(g)), (-1, Word::identity())])
    }

    /// `1 + g + ... + g^{n-1}`.
    pub fn norm_element(g: usize, n: usize) -> Self {
        Self::from_terms((0..n).map(|k| (1, Word::from_letters([(g, k as i64)]))))
    }

    pub fn add_term(&mut self, coefficient: i64, word: Word) {
        if coefficient == 0 {
            return;
        }
        let entry = self.terms.entry(word.clone()).or_insert(0);
        *entry += coefficient;
        if *entry == 0 {
            self.terms.remove(&word);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Word)> {
        self.terms.iter().map(|(w, &n)| (n, w))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut e = self.clone();
        for (n, w) in other.terms() {
            e.add_term(n, w.clone());
        }
        e
    }

    pub fn neg(&self) -> Self {
        Self::from_terms(self.terms().map(|(n, w)| (-n, w.clone())))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut e = Self::zero();
        for (n, a) in self.terms() {
            for (m, b) in other.terms() {
                e.add_term(n * m, a.mul(b));
            }
        }
        e
    }

    /// Left multiplication by a group element.
    pub fn left_mul_word(&self, g: &Word) -> Self {
        Self::from_terms(self.terms().map(|(n, w)| (n, g.mul(w))))
    }

    pub fn right_mul_word(&self, g: &Word) -> Self {
        Self::from_terms(self.terms().map(|(n, w)| (n, w.mul(g))))
    }

    /// Image in `Z[Z^n]`, keyed by exponent vectors.
    pub fn abelianize(&self, generators: usize) -> BTreeMap<Vec<i64>, i64> {
        let mut out = BTreeMap::new();
        for (n, w) in self.terms() {
            let key = w.abelianize(generators);
            let entry = out.entry(key.clone()).or_insert(0);
            *entry += n;
            if *entry == 0 {
                out.remove(&key);
            }
        }
        out
    }

    /// `Σ n_w` (augmentation).
    pub fn augmentation(&self) -> i64 {
        self.terms().map(|(n, _)| n).sum()
    }

    /// `±g` when the element is a single signed group element.
    pub fn as_unit(&self) -> Option<(i64, &Word)> {
        let mut it = self.terms();
        match (it.next(), it.next()) {
            (Some((n, w)), None) if n.abs() == 1 => Some((n, w)),
            _ => None,
        }
    }

    /// Parses the document form `[["+1", "t"], ["-1", ""]]`.
    pub fn parse_pairs(pairs: &[(String, String)], generators: &[String]) -> Result<Self> {
        let mut e = Self::zero();
        for (coef, word) in pairs {
            let n: i64 = coef
                .trim()
                .trim_start_matches('+')
                .parse()
                .map_err(|_| Error::parse(format!("coefficient '{coef}'"), "expected a signed integer"))?;
            e.add_term(n, Word::parse(word, generators)?);
        }
        Ok(e)
    }

    pub fn to_pairs(&self, generators: &[String]) -> Vec<(String, String)> {
        self.terms()
            .map(|(n, w)| {
                let word = if w.is_identity() { String::new() } else { w.display(generators).to_string() };
                (format!("{n:+}"), word)
            })
            .collect()
    }
}
