//! Bounded epoch labels.
//!
//! An epoch is a pair `(s, A)` over `X = {1, .., K}` with `K = k^2 + 1`,
//! `s ∈ X` and `A ⊆ X`, `|A| = k`. `a ≻ b` iff `b.s ∈ a.A` and `a.s ∉ b.A`.
//! The relation is antisymmetric but neither total nor transitive;
//! [`next_epoch`] produces a label that dominates any `k` given labels.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest supported `k`: `K = k^2 + 1` must fit in the 128-bit set.
pub const MAX_K: u8 = 11;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpochError {
    #[error("k must lie in 2..={MAX_K}, got {0}")]
    BadK(u8),
    #[error("s = {s} outside 1..={big_k}")]
    BadS { s: u8, big_k: u8 },
    #[error("label set must hold exactly {k} elements of 1..={big_k}")]
    BadSet { k: u8, big_k: u8 },
    #[error("epochs built with different k ({0} vs {1})")]
    Mismatch(u8, u8),
    #[error("next_epoch needs exactly {expected} labels, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("malformed epoch text {0:?}")]
    Parse(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Epoch {
    k: u8,
    s: u8,
    /// bit `i` set iff `i ∈ A`
    set: u128,
}

/// Outcome of comparing two epochs with `≻`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpochOrder {
    Greater,
    /// `b ≻ a` or `a = b`
    NotGreater,
    Incomparable,
}

/// `K = k^2 + 1`
pub fn label_space(k: u8) -> u8 {
    k * k + 1
}

impl Epoch {
    pub fn new(k: u8, s: u8, members: &[u8]) -> Result<Self, EpochError> {
        if !(2..=MAX_K).contains(&k) {
            return Err(EpochError::BadK(k));
        }
        let big_k = label_space(k);
        if s == 0 || s > big_k {
            return Err(EpochError::BadS { s, big_k });
        }
        let mut set = 0u128;
        for &a in members {
            if a == 0 || a > big_k {
                return Err(EpochError::BadSet { k, big_k });
            }
            set |= 1 << a;
        }
        if set.count_ones() != u32::from(k) || members.len() != usize::from(k) {
            return Err(EpochError::BadSet { k, big_k });
        }
        Ok(Epoch { k, s, set })
    }

    /// A fixed well-formed label: `(1, {1..k})`.
    pub fn initial(k: u8) -> Result<Self, EpochError> {
        let members: Vec<u8> = (1..=k).collect();
        Epoch::new(k, 1, &members)
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn s(&self) -> u8 {
        self.s
    }

    pub fn contains(&self, x: u8) -> bool {
        x < 128 && self.set & (1 << x) != 0
    }

    pub fn members(&self) -> impl Iterator<Item = u8> + '_ {
        (1..=label_space(self.k)).filter(move |&x| self.contains(x))
    }

    /// Every label of the scheme for parameter `k`, in a fixed order.
    /// `K * C(K, k)` labels, e.g. 50 for `k = 2`.
    pub fn all(k: u8) -> Result<Vec<Epoch>, EpochError> {
        if !(2..=MAX_K).contains(&k) {
            return Err(EpochError::BadK(k));
        }
        let big_k = label_space(k);
        let mut sets = Vec::new();
        subsets(big_k, k, 1, 0, &mut sets);
        let mut out = Vec::with_capacity(sets.len() * usize::from(big_k));
        for s in 1..=big_k {
            for &set in &sets {
                out.push(Epoch { k, s, set });
            }
        }
        Ok(out)
    }

    pub fn compare(&self, other: &Epoch) -> Result<EpochOrder, EpochError> {
        if self.k != other.k {
            return Err(EpochError::Mismatch(self.k, other.k));
        }
        Ok(self.order(other))
    }

    fn order(&self, other: &Epoch) -> EpochOrder {
        if self.dominates(other) {
            EpochOrder::Greater
        } else if self == other || other.dominates(self) {
            EpochOrder::NotGreater
        } else {
            EpochOrder::Incomparable
        }
    }

    /// `self ≻ other`, without the parameter check.
    pub fn dominates(&self, other: &Epoch) -> bool {
        self.contains(other.s) && !other.contains(self.s)
    }

    /// `self ⪰ other`
    pub fn dominates_or_eq(&self, other: &Epoch) -> bool {
        self == other || self.dominates(other)
    }
}

fn subsets(big_k: u8, left: u8, from: u8, acc: u128, out: &mut Vec<u128>) {
    if left == 0 {
        out.push(acc);
        return;
    }
    for x in from..=big_k {
        if big_k - x + 1 < left {
            break;
        }
        subsets(big_k, left - 1, x + 1, acc | (1 << x), out);
    }
}

/// Tri-state `a ≻ b`.
pub fn epoch_gt(a: &Epoch, b: &Epoch) -> Result<EpochOrder, EpochError> {
    a.compare(b)
}

/// `a ⪰ b`
pub fn epoch_geq(a: &Epoch, b: &Epoch) -> Result<bool, EpochError> {
    if a.k != b.k {
        return Err(EpochError::Mismatch(a.k, b.k));
    }
    Ok(a.dominates_or_eq(b))
}

/// A label greater than each of exactly `k` inputs.
///
/// `s` is the smallest element of `X` outside every input set; `A` holds the
/// inputs' `s` values padded with the smallest absent elements of `X`.
pub fn next_epoch(labels: &[Epoch]) -> Result<Epoch, EpochError> {
    let k = labels.first().map(|e| e.k).ok_or(EpochError::Arity { expected: 2, got: 0 })?;
    if labels.len() != usize::from(k) {
        return Err(EpochError::Arity { expected: usize::from(k), got: labels.len() });
    }
    if let Some(e) = labels.iter().find(|e| e.k != k) {
        return Err(EpochError::Mismatch(k, e.k));
    }
    let big_k = label_space(k);
    let union = labels.iter().fold(0u128, |acc, e| acc | e.set);
    let s = (1..=big_k).find(|&x| union & (1 << x) == 0).expect("|A_1 ∪ .. ∪ A_k| <= k^2 < K");
    let mut set = labels.iter().fold(0u128, |acc, e| acc | (1 << e.s));
    for x in 1..=big_k {
        if set.count_ones() == u32::from(k) {
            break;
        }
        set |= 1 << x;
    }
    Ok(Epoch { k, s, set })
}

/// Index of an epoch that is `⪰` every other one, the smallest such index
/// when several equal maxima exist; `None` when there is no such epoch.
pub fn max_epoch(labels: &[Epoch]) -> Option<usize> {
    (0..labels.len()).find(|&i| labels.iter().all(|other| labels[i].dominates_or_eq(other)))
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{{", self.s)?;
        for (i, a) in self.members().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("})")
    }
}

impl fmt::Debug for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Epoch {
    type Err = EpochError;

    /// Parses `(s,{a1,a2,...})`; `k` is the number of listed elements.
    fn from_str(text: &str) -> Result<Self, EpochError> {
        let err = || EpochError::Parse(text.into());
        let inner = text.trim().strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(err)?;
        let (s, rest) = inner.split_once(',').ok_or_else(err)?;
        let rest = rest.trim().strip_prefix('{').and_then(|r| r.strip_suffix('}')).ok_or_else(err)?;
        let s: u8 = s.trim().parse().map_err(|_| err())?;
        let members =
            rest.split(',').map(|a| a.trim().parse::<u8>().map_err(|_| err())).collect::<Result<Vec<_>, _>>()?;
        let k = u8::try_from(members.len()).map_err(|_| err())?;
        Epoch::new(k, s, &members)
    }
}

impl Serialize for Epoch {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Epoch {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `(epoch, seq)` timestamp of a multi-writer write. `seq` is bounded by the
/// configured `SEQ_BOUND`; reaching it forces a new epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Timestamp {
    pub epoch: Epoch,
    pub seq: u64,
}
