//! Shared domain types: process identities, bounded sequence numbers,
//! register payloads and the protocol messages.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::epoch::Epoch;

/// Data value written into a register. Desk-scale payloads are integers.
pub type Value = u64;

/// Write sequence number. Wide enough for the production modulus `2^64 + 1`.
pub type SeqNo = u128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Writer,
    Reader,
    Server,
    Client,
    /// Bookkeeping records emitted by the simulator itself.
    Engine,
}

impl Role {
    fn as_str(self) -> &'static str {
        match self {
            Role::Writer => "writer",
            Role::Reader => "reader",
            Role::Server => "server",
            Role::Client => "client",
            Role::Engine => "engine",
        }
    }
}

/// A process: `server:3`, `writer:1`, `client:2`, ...
///
/// Server indices live in `1..=n`, client indices in `1..=m`. The SWSR
/// writer and reader both use index 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessId {
    pub role: Role,
    pub index: u32,
}

impl ProcessId {
    pub const WRITER: ProcessId = ProcessId { role: Role::Writer, index: 1 };
    pub const READER: ProcessId = ProcessId { role: Role::Reader, index: 1 };
    pub const ENGINE: ProcessId = ProcessId { role: Role::Engine, index: 0 };

    pub const fn server(index: u32) -> Self {
        ProcessId { role: Role::Server, index }
    }

    pub const fn client(index: u32) -> Self {
        ProcessId { role: Role::Client, index }
    }

    pub fn is_server(&self) -> bool {
        self.role == Role::Server
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.role.as_str(), self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed process id {0:?}, expected role:index")]
pub struct ParsePidError(pub String);

impl FromStr for ProcessId {
    type Err = ParsePidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParsePidError(s.into());
        let (role, index) = s.split_once(':').ok_or_else(err)?;
        let role = match role {
            "writer" => Role::Writer,
            "reader" => Role::Reader,
            "server" => Role::Server,
            "client" => Role::Client,
            "engine" => Role::Engine,
            _ => return Err(err()),
        };
        let index = index.parse().map_err(|_| err())?;
        Ok(ProcessId { role, index })
    }
}

impl Serialize for ProcessId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProcessId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SeqError {
    #[error("modulus {0} must be odd and at least 3")]
    BadModulus(SeqNo),
    #[error("sequence number {value} is outside [0, {modulus})")]
    OutOfRange { value: SeqNo, modulus: SeqNo },
    #[error("sequence numbers use different moduli ({0} vs {1})")]
    ModulusMismatch(SeqNo, SeqNo),
}

/// Odd modulus `M >= 3` of the write-sequence-number ring.
///
/// With `M` odd the clockwise and anti-clockwise distances between two
/// distinct points are never equal, so `>_cd` needs no tie rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modulus(SeqNo);

impl Modulus {
    /// `2^64 + 1`, the ring size used by the full-scale register.
    pub const PRODUCTION: Modulus = Modulus((1u128 << 64) + 1);
    /// Small ring used by tests and the acceptance suite.
    pub const DESK: Modulus = Modulus(17);

    pub fn new(m: SeqNo) -> Result<Self, SeqError> {
        if m < 3 || m.is_multiple_of(2) {
            return Err(SeqError::BadModulus(m));
        }
        Ok(Modulus(m))
    }

    pub fn get(self) -> SeqNo {
        self.0
    }

    /// Number of writes the ring can order unambiguously: `(M - 1) / 2`.
    pub fn lifespan(self) -> SeqNo {
        (self.0 - 1) / 2
    }

    /// Out-of-range values (left behind by a corrupting fault) are reduced
    /// on every access.
    pub fn reduce(self, x: SeqNo) -> SeqNo {
        x % self.0
    }

    pub fn next(self, x: SeqNo) -> SeqNo {
        (self.reduce(x) + 1) % self.0
    }

    /// `x >_cd y`: the clockwise distance from `y` to `x` is non-zero and at
    /// most `(M - 1) / 2`.
    pub fn cd_greater(self, x: SeqNo, y: SeqNo) -> bool {
        let (x, y) = (self.reduce(x), self.reduce(y));
        let d = (x + self.0 - y) % self.0;
        d != 0 && d <= self.lifespan()
    }

    pub fn cd_geq(self, x: SeqNo, y: SeqNo) -> bool {
        self.reduce(x) == self.reduce(y) || self.cd_greater(x, y)
    }
}

/// Small moduli serialize as integers; anything beyond `i64::MAX` (such as
/// the production value) as a decimal string, which every text format can
/// carry.
impl Serialize for Modulus {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.collect_str(&self.0),
        }
    }
}

impl<'de> Deserialize<'de> for Modulus {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Modulus;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an odd modulus >= 3, as an integer or decimal string")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Modulus, E> {
                Modulus::new(v.into()).map_err(E::custom)
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Modulus, E> {
                let v = u64::try_from(v).map_err(E::custom)?;
                self.visit_u64(v)
            }
            fn visit_u128<E: serde::de::Error>(self, v: u128) -> Result<Modulus, E> {
                Modulus::new(v).map_err(E::custom)
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Modulus, E> {
                let v: SeqNo = v.trim().parse().map_err(E::custom)?;
                Modulus::new(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

impl TryFrom<SeqNo> for Modulus {
    type Error = SeqError;
    fn try_from(m: SeqNo) -> Result<Self, SeqError> {
        Modulus::new(m)
    }
}

impl From<Modulus> for SeqNo {
    fn from(m: Modulus) -> SeqNo {
        m.0
    }
}

/// Serde adapter for [`SeqNo`]: an integer when it fits in `u64`, a decimal
/// string otherwise. Buffered formats (flattened or tagged structures)
/// cannot hold 128-bit integers.
pub mod seqno {
    use super::SeqNo;
    use core::fmt;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &SeqNo, s: S) -> Result<S::Ok, S::Error> {
        match u64::try_from(*v) {
            Ok(x) => s.serialize_u64(x),
            Err(_) => s.collect_str(v),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SeqNo, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = SeqNo;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a sequence number")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<SeqNo, E> {
                Ok(v.into())
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<SeqNo, E> {
                u64::try_from(v).map(Into::into).map_err(E::custom)
            }
            fn visit_u128<E: serde::de::Error>(self, v: u128) -> Result<SeqNo, E> {
                Ok(v)
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<SeqNo, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// A sequence number bound to its ring. The checked counterpart of the
/// `Modulus` helpers: construction rejects out-of-range values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundedSeq {
    value: SeqNo,
    modulus: Modulus,
}

impl BoundedSeq {
    pub fn new(value: SeqNo, modulus: Modulus) -> Result<Self, SeqError> {
        if value >= modulus.get() {
            return Err(SeqError::OutOfRange { value, modulus: modulus.get() });
        }
        Ok(BoundedSeq { value, modulus })
    }

    pub fn value(self) -> SeqNo {
        self.value
    }

    pub fn modulus(self) -> Modulus {
        self.modulus
    }

    pub fn next(self) -> Self {
        BoundedSeq { value: self.modulus.next(self.value), modulus: self.modulus }
    }

    pub fn cd_greater(self, other: BoundedSeq) -> Result<bool, SeqError> {
        self.same_ring(other)?;
        Ok(self.modulus.cd_greater(self.value, other.value))
    }

    pub fn cd_geq(self, other: BoundedSeq) -> Result<bool, SeqError> {
        self.same_ring(other)?;
        Ok(self.modulus.cd_geq(self.value, other.value))
    }

    fn same_ring(self, other: BoundedSeq) -> Result<(), SeqError> {
        if self.modulus != other.modulus {
            return Err(SeqError::ModulusMismatch(self.modulus.get(), other.modulus.get()));
        }
        Ok(())
    }
}

/// Checked `x >_cd y` over raw integers.
pub fn cd_greater(x: SeqNo, y: SeqNo, m: SeqNo) -> Result<bool, SeqError> {
    let m = Modulus::new(m)?;
    BoundedSeq::new(x, m)?.cd_greater(BoundedSeq::new(y, m)?)
}

/// Checked `(x + 1) mod M`.
pub fn next_seq(x: SeqNo, m: SeqNo) -> Result<SeqNo, SeqError> {
    let m = Modulus::new(m)?;
    Ok(BoundedSeq::new(x, m)?.next().value())
}

/// `(v, epoch, seq)` stored in each SWMR register of the multi-writer
/// construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub value: Value,
    pub epoch: Epoch,
    pub seq: u64,
}

/// What a client writes into an underlying register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Int(Value),
    Triple(Triple),
}

impl Payload {
    pub fn value(&self) -> Value {
        match self {
            Payload::Int(v) => *v,
            Payload::Triple(t) => t.value,
        }
    }
}

/// Content of a server's `last_val` / `helping_val`: a bare payload for the
/// regular register, a `(wsn, payload)` pair for the atomic ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Word {
    Bare(Payload),
    Numbered {
        #[serde(with = "seqno")]
        wsn: SeqNo,
        payload: Payload,
    },
}

impl Word {
    pub fn payload(&self) -> Payload {
        match self {
            Word::Bare(p) => *p,
            Word::Numbered { payload, .. } => *payload,
        }
    }

    pub fn wsn(&self) -> Option<SeqNo> {
        match self {
            Word::Bare(_) => None,
            Word::Numbered { wsn, .. } => Some(*wsn),
        }
    }
}

/// A protocol message. `reg` names the register instance (always 1 for the
/// single-writer constructions, the owner's index for the SWMR registers of
/// the multi-writer construction).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub reg: u32,
    pub body: Body,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    /// client -> servers
    Write(Word),
    /// server -> writer; one helping value per reader slot (`None` is ⊥)
    AckWrite(Vec<Option<Word>>),
    /// client -> servers
    Read { new_read: bool },
    /// server -> reader
    AckRead { last_val: Word, helping_val: Option<Word> },
    /// client -> servers; the reader slots whose helping value is refreshed
    NewHelpVal { slots: Vec<u32>, word: Word },
}

impl Body {
    pub fn is_client_to_server(&self) -> bool {
        matches!(self, Body::Write(_) | Body::Read { .. } | Body::NewHelpVal { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cd_greater_examples() {
        assert_eq!(cd_greater(5, 3, 17), Ok(true));
        assert_eq!(cd_greater(3, 3, 17), Ok(false));
        assert!(Modulus::DESK.cd_geq(3, 3));
        assert_eq!(cd_greater(3, 15, 17), Ok(true));
        assert_eq!(cd_greater(15, 3, 17), Ok(false));
    }

    #[test]
    fn next_seq_examples() {
        assert_eq!(next_seq(0, 17), Ok(1));
        assert_eq!(next_seq(16, 17), Ok(0));
        let x = next_seq(7, 17).unwrap();
        assert_eq!(x, 8);
        assert_eq!(cd_greater(x, 7, 17), Ok(true));
    }

    #[test]
    fn rejects_even_or_small_modulus() {
        assert_eq!(Modulus::new(16), Err(SeqError::BadModulus(16)));
        assert_eq!(Modulus::new(1), Err(SeqError::BadModulus(1)));
        assert!(cd_greater(1, 2, 18).is_err());
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(cd_greater(17, 3, 17), Err(SeqError::OutOfRange { value: 17, modulus: 17 }));
        assert!(next_seq(40, 17).is_err());
    }

    #[test]
    fn mismatched_rings() {
        let a = BoundedSeq::new(1, Modulus::new(17).unwrap()).unwrap();
        let b = BoundedSeq::new(1, Modulus::new(19).unwrap()).unwrap();
        assert_eq!(a.cd_greater(b), Err(SeqError::ModulusMismatch(17, 19)));
    }

    #[test]
    fn corrupted_values_are_reduced() {
        let m = Modulus::DESK;
        assert!(m.cd_greater(17 + 5, 3));
        assert_eq!(m.next(33), 0);
    }

    #[test]
    fn production_modulus_has_no_overflow() {
        let m = Modulus::PRODUCTION;
        let top = m.get() - 1;
        assert!(m.cd_greater(0, top));
        assert!(!m.cd_greater(top, 0));
        assert_eq!(m.next(top), 0);
    }

    #[test]
    fn pid_round_trips_through_text() {
        for pid in [ProcessId::server(3), ProcessId::WRITER, ProcessId::client(2)] {
            let s = alloc::format!("{pid}");
            assert_eq!(s.parse::<ProcessId>().unwrap(), pid);
        }
        assert!("server".parse::<ProcessId>().is_err());
        assert!("moon:1".parse::<ProcessId>().is_err());
    }
}
