//! Finite binary strings.
//!
//! `Bits` is the shared vocabulary type for machine programs, machine
//! outputs, measure supports and basis encodings. The total order is
//! length-lexicographic ("", "0", "1", "00", ...), which is also the
//! canonical enumeration order used by the reference machines.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("invalid character {0:?} in bitstring (expected '0' or '1')")]
    InvalidChar(char),
    #[error("length-lex index {0} does not fit the supported range")]
    IndexOverflow(u64),
}

/// A finite string over {0,1}.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bits {
    raw: Vec<bool>,
}

impl Bits {
    pub fn empty() -> Self {
        Bits { raw: Vec::new() }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits {
            raw: iter.into_iter().collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Bits {
            raw: vec![false; n],
        }
    }

    pub fn ones(n: usize) -> Self {
        Bits { raw: vec![true; n] }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.raw.get(i).copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.raw.push(bit);
    }

    pub fn pop(&mut self) -> Option<bool> {
        self.raw.pop()
    }

    pub fn extend_from(&mut self, other: &Bits) {
        self.raw.extend_from_slice(&other.raw);
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn slice(&self, start: usize, end: usize) -> Bits {
        Bits {
            raw: self.raw[start..end].to_vec(),
        }
    }

    pub fn prefix(&self, n: usize) -> Bits {
        self.slice(0, n.min(self.len()))
    }

    /// True when `self` is a (not necessarily proper) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Bits) -> bool {
        self.len() <= other.len() && other.raw[..self.len()] == self.raw[..]
    }

    /// True when one of the two strings extends the other.
    pub fn comparable(&self, other: &Bits) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.raw.iter().copied()
    }

    /// Numeric value of the bits read MSB-first. Empty string has value 0.
    pub fn value(&self) -> u64 {
        assert!(self.len() <= 63, "bitstring too long for a u64 value");
        self.raw.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// Position in the length-lexicographic enumeration "", "0", "1", "00", ...
    pub fn lengthlex_index(&self) -> u64 {
        assert!(self.len() <= 62, "bitstring too long for a u64 index");
        (1u64 << self.len()) - 1 + self.value()
    }

    /// Inverse of [`lengthlex_index`](Self::lengthlex_index).
    pub fn from_lengthlex_index(k: u64) -> Result<Bits, BitsError> {
        let m = k.checked_add(1).ok_or(BitsError::IndexOverflow(k))?;
        let len = 63 - m.leading_zeros() as usize;
        let mut raw = Vec::with_capacity(len);
        for i in (0..len).rev() {
            raw.push((m >> i) & 1 == 1);
        }
        Ok(Bits { raw })
    }

    /// All strings of the given exact length, in lexicographic order.
    pub fn all_of_length(n: usize) -> Vec<Bits> {
        assert!(n <= 24, "exhaustive enumeration capped at length 24");
        let mut out = Vec::with_capacity(1 << n);
        let mut cur = Bits::zeros(n);
        loop {
            out.push(cur.clone());
            // binary increment; stop after all-ones
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if !cur.raw[i] {
                    cur.raw[i] = true;
                    for b in cur.raw[i + 1..].iter_mut() {
                        *b = false;
                    }
                    break;
                }
            }
        }
    }

    /// All strings of length at most `n`, in length-lex order.
    pub fn all_up_to_length(n: usize) -> Vec<Bits> {
        (0..=n).flat_map(Bits::all_of_length).collect()
    }

    /// Bits of a byte slice, MSB-first within each byte.
    pub fn from_bytes(bytes: &[u8]) -> Bits {
        let mut raw = Vec::with_capacity(bytes.len() * 8);
        for &byte in bytes {
            for i in (0..8).rev() {
                raw.push((byte >> i) & 1 == 1);
            }
        }
        Bits { raw }
    }
}

impl PartialOrd for Bits {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bits {
    /// Length-lexicographic order.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.raw.cmp(&other.raw))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.raw {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b\"{}\"", self)
    }
}

impl FromStr for Bits {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut raw = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => raw.push(false),
                '1' => raw.push(true),
                other => return Err(BitsError::InvalidChar(other)),
            }
        }
        Ok(Bits { raw })
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Convenience macro-free constructor used across tests.
pub fn bits(s: &str) -> Bits {
    s.parse().expect("literal bitstring")
}
