//! Byzantine server behaviour.
//!
//! A Byzantine server receives exactly what a correct one would and may
//! answer anything well-typed, or nothing. It cannot forge messages from
//! other processes: replies always go back over its own authenticated link
//! to the client that reached it.
//!
//! Every strategy keeps a shadow [`RegState`] updated by the honest
//! handler, so that strategies which lie selectively know what the honest
//! answer would have been.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::fault::WordGen;
use crate::scenario::Strategy;
use crate::server::{self, RegState, Sender, ServerOptions};
use crate::types::{Body, Word};

/// What a strategy has observed of one register, across all Byzantine
/// servers.
#[derive(Clone, Debug, Default)]
struct Seen {
    /// Distinct written words in first-seen order.
    writes: Vec<Word>,
    first_help: Option<Word>,
}

#[derive(Clone, Debug)]
pub struct Adversary {
    pub strategy: Strategy,
    seen: BTreeMap<u32, Seen>,
    /// Per register: the helping value a poisoner insists on.
    bogus: BTreeMap<u32, Word>,
}

impl Adversary {
    pub fn new(strategy: Strategy) -> Self {
        Adversary { strategy, seen: BTreeMap::new(), bogus: BTreeMap::new() }
    }

    /// Reply of a Byzantine server to a delivery of `body` on register
    /// `reg`. `shadow` is the server's honest state.
    #[allow(clippy::too_many_arguments)]
    pub fn respond<R: Rng + ?Sized>(
        &mut self,
        shadow: &mut RegState,
        from: Sender,
        reg: u32,
        body: &Body,
        gen: &WordGen,
        rng: &mut R,
    ) -> Option<Body> {
        let previous_last = shadow.last_val;
        let honest = server::handle(shadow, from, body, ServerOptions::default());
        let seen = self.seen.entry(reg).or_default();
        match body {
            Body::Write(w) if from.owner && !seen.writes.contains(w) => seen.writes.push(*w),
            Body::NewHelpVal { word, .. } if from.owner && seen.first_help.is_none() => seen.first_help = Some(*word),
            _ => {}
        }
        let honest = honest?;
        let slots = shadow.helping.len();
        match self.strategy {
            Strategy::Silent => None,
            Strategy::RandomReply => {
                let seen = &self.seen[&reg];
                let pick = |rng: &mut R| -> Word {
                    if !seen.writes.is_empty() && rng.gen_bool(0.5) {
                        seen.writes[rng.gen_range(0..seen.writes.len())]
                    } else {
                        gen.word(rng)
                    }
                };
                Some(match honest {
                    Body::AckWrite(_) => {
                        Body::AckWrite((0..slots).map(|_| rng.gen_bool(0.5).then(|| pick(rng))).collect())
                    }
                    _ => {
                        let last_val = pick(rng);
                        let helping_val = rng.gen_bool(0.5).then(|| pick(rng));
                        Body::AckRead { last_val, helping_val }
                    }
                })
            }
            Strategy::Equivocate => Some(match honest {
                // the writer sees an honest server
                Body::AckWrite(h) => Body::AckWrite(h),
                // the reader is pulled between the two newest writes: the
                // older one as last_val, the newer one as helping value
                _ => {
                    let writes = &self.seen[&reg].writes;
                    let newest = writes.last().copied().unwrap_or(shadow.last_val);
                    let older = if writes.len() >= 2 { writes[writes.len() - 2] } else { previous_last };
                    Body::AckRead { last_val: older, helping_val: Some(newest) }
                }
            }),
            Strategy::HelpPoisoner => {
                let bogus = *self.bogus.entry(reg).or_insert_with(|| gen.word(rng));
                Some(match honest {
                    Body::AckWrite(_) => Body::AckWrite(vec![Some(bogus); slots]),
                    _ => Body::AckRead { last_val: shadow.last_val, helping_val: Some(bogus) },
                })
            }
            Strategy::StaleReplay => {
                let seen = &self.seen[&reg];
                let oldest = seen.writes.first().copied().unwrap_or(shadow.last_val);
                Some(match honest {
                    Body::AckWrite(_) => Body::AckWrite(vec![seen.first_help; slots]),
                    _ => Body::AckRead { last_val: oldest, helping_val: seen.first_help },
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::RegisterKind;
    use crate::types::{Modulus, Payload};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(v: u64) -> Word {
        Word::Bare(Payload::Int(v))
    }

    const WRITER: Sender = Sender { owner: true, slot: 0 };
    const READER: Sender = Sender { owner: false, slot: 1 };

    fn gen() -> WordGen {
        WordGen { kind: RegisterKind::SwsrRegular, modulus: Modulus::DESK, k: 2, seq_bound: 8, registers: 1, slots: 1 }
    }

    fn drive(strategy: Strategy) -> (Option<Body>, Option<Body>) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut adv = Adversary::new(strategy);
        let mut shadow = RegState::new(w(0), 1);
        let g = gen();
        adv.respond(&mut shadow, WRITER, 1, &Body::Write(w(1)), &g, &mut rng);
        let ack = adv.respond(&mut shadow, WRITER, 1, &Body::Write(w(2)), &g, &mut rng);
        let read = adv.respond(&mut shadow, READER, 1, &Body::Read { new_read: true }, &g, &mut rng);
        (ack, read)
    }

    #[test]
    fn silent_never_replies() {
        assert_eq!(drive(Strategy::Silent), (None, None));
    }

    #[test]
    fn equivocator_splits_writer_and_reader() {
        let (ack, read) = drive(Strategy::Equivocate);
        assert_eq!(ack, Some(Body::AckWrite(vec![None])));
        assert_eq!(read, Some(Body::AckRead { last_val: w(1), helping_val: Some(w(2)) }));
    }

    #[test]
    fn stale_replay_answers_with_the_oldest_write() {
        let (_, read) = drive(Strategy::StaleReplay);
        assert_eq!(read, Some(Body::AckRead { last_val: w(1), helping_val: None }));
    }

    #[test]
    fn poisoner_keeps_one_bogus_value() {
        let (ack, read) = drive(Strategy::HelpPoisoner);
        let Some(Body::AckWrite(h)) = ack else { panic!() };
        let Some(Body::AckRead { last_val, helping_val }) = read else { panic!() };
        assert_eq!(last_val, w(2));
        assert_eq!(helping_val, h[0]);
        assert!(helping_val.is_some());
    }

    #[test]
    fn replies_are_well_typed() {
        let (ack, read) = drive(Strategy::RandomReply);
        assert!(matches!(ack, Some(Body::AckWrite(h)) if h.len() == 1));
        assert!(matches!(read, Some(Body::AckRead { .. })));
    }
}
