//! Alphabets, strings and the two string metrics.
//!
//! A [`Str`] stores only its nonempty letters as indices into an
//! [`Alphabet`]. The infinite tail of empty letters that formally follows every
//! string is never materialized; distance code treats any position past the
//! end as the empty letter.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported number of nonempty letters (indices are stored as `u8`).
pub const MAX_ALPHABET: usize = 255;

/// An ordered set of nonempty letters. The empty letter is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    letters: Vec<char>,
}

impl Alphabet {
    pub fn new<I: IntoIterator<Item = char>>(letters: I) -> Result<Self> {
        let letters: Vec<char> = letters.into_iter().collect();
        if letters.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet must contain at least one letter".into()));
        }
        if letters.len() > MAX_ALPHABET {
            return Err(Error::InvalidAlphabet(format!(
                "{} letters exceeds the supported maximum of {MAX_ALPHABET}",
                letters.len()
            )));
        }
        for (i, c) in letters.iter().enumerate() {
            if letters[..i].contains(c) {
                return Err(Error::InvalidAlphabet(format!("duplicate letter {c:?}")));
            }
        }
        Ok(Alphabet { letters })
    }

    /// Alphabet made of the characters of `text`, in order of appearance.
    pub fn from_letters(text: &str) -> Result<Self> {
        Self::new(text.chars())
    }

    /// Sorted set of the characters appearing in `texts`.
    pub fn infer<'a, I: IntoIterator<Item = &'a str>>(texts: I) -> Result<Self> {
        let mut seen: Vec<char> = texts.into_iter().flat_map(str::chars).collect();
        seen.sort_unstable();
        seen.dedup();
        Self::new(seen)
    }

    /// Number of nonempty letters (`z - 1`).
    pub fn size(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn letter(&self, index: u8) -> Option<char> {
        self.letters.get(index as usize).copied()
    }

    pub fn index_of(&self, c: char) -> Option<u8> {
        self.letters.iter().position(|&l| l == c).map(|i| i as u8)
    }

    /// Maps each character of `text` through the alphabet. Positions in errors are 1-based.
    pub fn parse(&self, text: &str) -> Result<Str> {
        text.chars()
            .enumerate()
            .map(|(i, ch)| self.index_of(ch).ok_or(Error::UnknownSymbol { position: i + 1, ch }))
            .collect::<Result<Vec<u8>>>()
            .map(Str)
    }

    pub fn render(&self, s: &Str) -> String {
        s.0.iter().map(|&i| self.letters.get(i as usize).copied().unwrap_or('?')).collect()
    }

    /// Checks that every symbol of `s` belongs to this alphabet.
    pub fn check(&self, s: &Str) -> Result<()> {
        match s.0.iter().find(|&&i| i as usize >= self.size()) {
            Some(&i) => Err(Error::AlphabetMismatch { index: i as usize, size: self.size() }),
            None => Ok(()),
        }
    }

    pub fn concat(&self, s: &Str, t: &Str) -> Result<Str> {
        self.check(s)?;
        self.check(t)?;
        Ok(s.concat(t))
    }

    pub fn distance(&self, kind: DistanceKind, s: &Str, t: &Str) -> Result<usize> {
        self.check(s)?;
        self.check(t)?;
        Ok(kind.distance(s, t))
    }
}

/// A finite string over an alphabet, stored as letter indices.
///
/// Ordering is shortlex: shorter strings first, then lexicographic by letter
/// index. This is the tie-break order used throughout the crate.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Str(Vec<u8>);

impl Str {
    pub fn new(symbols: Vec<u8>) -> Self {
        Str(symbols)
    }

    /// The empty string `o`.
    pub fn empty() -> Self {
        Str(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn into_symbols(self) -> Vec<u8> {
        self.0
    }

    /// Letter at 0-based position `j`, or `None` for the empty letter.
    pub fn get(&self, j: usize) -> Option<u8> {
        self.0.get(j).copied()
    }

    pub fn concat(&self, other: &Str) -> Str {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Str(v)
    }
}

impl From<Vec<u8>> for Str {
    fn from(v: Vec<u8>) -> Self {
        Str(v)
    }
}

impl From<&[u8]> for Str {
    fn from(v: &[u8]) -> Self {
        Str(v.to_vec())
    }
}

impl Ord for Str {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Str {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Str {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Str{:?}", self.0)
    }
}

/// The integer-valued string metrics supported by the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    /// Hamming distance on empty-letter padded strings.
    ExtHamming,
    Levenshtein,
}

impl DistanceKind {
    pub fn distance(self, s: &Str, t: &Str) -> usize {
        match self {
            DistanceKind::ExtHamming => ext_hamming(s.symbols(), t.symbols()),
            DistanceKind::Levenshtein => levenshtein(s.symbols(), t.symbols()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::ExtHamming => "ext-hamming",
            DistanceKind::Levenshtein => "levenshtein",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ext-hamming" | "ext_hamming" | "hamming" => Ok(DistanceKind::ExtHamming),
            "levenshtein" => Ok(DistanceKind::Levenshtein),
            other => Err(Error::InvalidParameter(format!("unknown distance {other:?}"))),
        }
    }
}

/// Number of padded positions at which `s` and `t` differ.
pub fn ext_hamming(s: &[u8], t: &[u8]) -> usize {
    let (short, long) = if s.len() <= t.len() { (s, t) } else { (t, s) };
    let mismatches = short.iter().zip(long).filter(|(a, b)| a != b).count();
    mismatches + (long.len() - short.len())
}

/// Unit-cost edit distance (insertions, deletions, substitutions).
pub fn levenshtein(s: &[u8], t: &[u8]) -> usize {
    if s.is_empty() {
        return t.len();
    }
    if t.is_empty() {
        return s.len();
    }
    let mut prev: Vec<usize> = (0..=t.len()).collect();
    let mut cur = vec![0usize; t.len() + 1];
    for (i, &a) in s.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &b) in t.iter().enumerate() {
            let sub = prev[j] + usize::from(a != b);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[t.len()]
}
