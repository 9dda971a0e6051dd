//! Transient corruption: seeded random, domain-valid values for every
//! variable the injector may overwrite.
//!
//! The engine decides which state a [`FaultScope`](crate::scenario::FaultScope)
//! reaches; this module only draws the replacement values.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::atomic::ReaderMemory;
use crate::epoch::{label_space, Epoch};
use crate::scenario::RegisterKind;
use crate::server::RegState;
use crate::types::{Body, Message, Modulus, Payload, SeqNo, Triple, Value, Word};

/// Corrupted and junk values are drawn from `1..JUNK_VALUES`. Workload
/// values produced by the generators start above it, so a read that returns
/// a junk value is always attributable.
pub const JUNK_VALUES: Value = 1000;

/// Draws words shaped for one register construction.
#[derive(Clone, Copy, Debug)]
pub struct WordGen {
    pub kind: RegisterKind,
    pub modulus: Modulus,
    pub k: u8,
    pub seq_bound: u64,
    pub registers: u32,
    pub slots: u32,
}

impl WordGen {
    pub fn value<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        rng.gen_range(1..JUNK_VALUES)
    }

    pub fn epoch<R: Rng + ?Sized>(&self, rng: &mut R) -> Epoch {
        let big_k = label_space(self.k);
        let mut pool: Vec<u8> = (1..=big_k).collect();
        pool.shuffle(rng);
        let s = rng.gen_range(1..=big_k);
        Epoch::new(self.k, s, &pool[..usize::from(self.k)]).expect("k validated by the scenario")
    }

    pub fn wsn<R: Rng + ?Sized>(&self, rng: &mut R) -> SeqNo {
        let m = self.modulus.get();
        // u128 ranges are not uniform-sampled by every rand backend; two
        // u64 halves reduced modulo M are close enough for fault injection
        let raw = (u128::from(rng.gen::<u64>()) << 64) | u128::from(rng.gen::<u64>());
        raw % m
    }

    pub fn payload<R: Rng + ?Sized>(&self, rng: &mut R) -> Payload {
        match self.kind {
            RegisterKind::Mwmr => Payload::Triple(Triple {
                value: self.value(rng),
                epoch: self.epoch(rng),
                seq: rng.gen_range(0..=self.seq_bound + 1),
            }),
            _ => Payload::Int(self.value(rng)),
        }
    }

    pub fn word<R: Rng + ?Sized>(&self, rng: &mut R) -> Word {
        match self.kind {
            RegisterKind::SwsrRegular => Word::Bare(self.payload(rng)),
            _ => Word::Numbered { wsn: self.wsn(rng), payload: self.payload(rng) },
        }
    }

    pub fn opt_word<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Word> {
        rng.gen_bool(0.5).then(|| self.word(rng))
    }

    pub fn helping<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Option<Word>> {
        (0..self.slots).map(|_| self.opt_word(rng)).collect()
    }

    pub fn reg_state<R: Rng + ?Sized>(&self, rng: &mut R) -> RegState {
        RegState { last_val: self.word(rng), helping: self.helping(rng) }
    }

    pub fn memory<R: Rng + ?Sized>(&self, rng: &mut R) -> ReaderMemory {
        ReaderMemory { pwsn: self.wsn(rng), pv: self.payload(rng) }
    }

    /// A well-typed client-to-server message, as found in a corrupted link.
    pub fn message<R: Rng + ?Sized>(&self, rng: &mut R) -> Message {
        let reg = rng.gen_range(1..=self.registers);
        let body = match rng.gen_range(0..3) {
            0 => Body::Write(self.word(rng)),
            1 => Body::Read { new_read: rng.gen_bool(0.5) },
            _ => {
                let slots = (1..=self.slots).filter(|_| rng.gen_bool(0.5)).collect();
                Body::NewHelpVal { slots, word: self.word(rng) }
            }
        };
        Message { reg, body }
    }

    /// A well-typed server-to-client message.
    pub fn reply<R: Rng + ?Sized>(&self, rng: &mut R) -> Body {
        if rng.gen_bool(0.5) {
            Body::AckWrite(self.helping(rng))
        } else {
            Body::AckRead { last_val: self.word(rng), helping_val: self.opt_word(rng) }
        }
    }

    /// A reader `pwsn` in the half ring strictly ahead of `wsn`.
    pub fn future_of<R: Rng + ?Sized>(&self, wsn: SeqNo, rng: &mut R) -> SeqNo {
        let ahead = rng.gen_range(1..=self.modulus.lifespan().min(u128::from(u64::MAX)) as u64);
        self.modulus.reduce(wsn + SeqNo::from(ahead))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gen(kind: RegisterKind) -> WordGen {
        WordGen { kind, modulus: Modulus::DESK, k: 3, seq_bound: 8, registers: 3, slots: 3 }
    }

    #[test]
    fn words_are_domain_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in [RegisterKind::SwsrRegular, RegisterKind::SwsrAtomic, RegisterKind::Mwmr] {
            let g = gen(kind);
            for _ in 0..200 {
                match g.word(&mut rng) {
                    Word::Bare(Payload::Int(v)) => {
                        assert_eq!(kind, RegisterKind::SwsrRegular);
                        assert!((1..JUNK_VALUES).contains(&v));
                    }
                    Word::Numbered { wsn, payload } => {
                        assert!(wsn < 17);
                        if let Payload::Triple(t) = payload {
                            assert_eq!(t.epoch.k(), 3);
                            assert!(t.seq <= 9);
                        }
                    }
                    w => panic!("unexpected shape {w:?}"),
                }
                let m = g.message(&mut rng);
                assert!((1..=3).contains(&m.reg) && m.body.is_client_to_server());
            }
        }
    }

    #[test]
    fn future_pwsn_is_ahead() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = gen(RegisterKind::SwsrAtomic);
        for w in 0..17 {
            for _ in 0..20 {
                let p = g.future_of(w, &mut rng);
                assert!(Modulus::DESK.cd_greater(p, w), "{p} not ahead of {w}");
            }
        }
    }
}
