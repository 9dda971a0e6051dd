//! The regular register: the writer's two-phase write and the reader's
//! retry loop, as resumable state machines.
//!
//! The write machine is shared by every construction; the atomic and
//! multi-reader registers only change the word that is written and the
//! number of helping slots.

use alloc::vec::Vec;

use crate::client::{first_quorum, AckKind, BcastId, Input, Io, Note, Round, Thresholds};
use crate::types::{Body, Message, Word};

#[derive(Clone, Debug)]
enum WritePhase {
    AwaitAcks(Round),
    BroadcastHelp(BcastId),
    Done,
}

/// `WRITE(w)`, wait for acks, then `NEW_HELP_VAL(w)` for every reader slot
/// whose helping values do not already agree on some `w' != ⊥`.
#[derive(Clone, Debug)]
pub struct WriteRound {
    pub reg: u32,
    pub word: Word,
    slots: u32,
    phase: WritePhase,
    /// Slots refreshed by this write's `NEW_HELP_VAL`.
    pub helped: Vec<u32>,
    pub invoked: u64,
}

impl WriteRound {
    pub fn start(io: &mut dyn Io, reg: u32, word: Word, slots: u32, th: &Thresholds) -> Self {
        let invoked = io.now();
        let round = Round::start(io, Message { reg, body: Body::Write(word) }, AckKind::Write, th);
        WriteRound { reg, word, slots, phase: WritePhase::AwaitAcks(round), helped: Vec::new(), invoked }
    }

    /// Advances the machine; true once the write has returned.
    pub fn step(&mut self, io: &mut dyn Io, input: &Input<'_>, th: &Thresholds) -> bool {
        match &mut self.phase {
            WritePhase::AwaitAcks(round) => {
                round.feed(input);
                if !round.ready(th) {
                    return false;
                }
                self.helped = failing_slots(round.acks(), self.slots, th.write_help);
                if self.helped.is_empty() {
                    self.finish(io);
                    return true;
                }
                let body = Body::NewHelpVal { slots: self.helped.clone(), word: self.word };
                let id = io.broadcast(Message { reg: self.reg, body });
                self.phase = WritePhase::BroadcastHelp(id);
                false
            }
            WritePhase::BroadcastHelp(id) => {
                if matches!(input, Input::BcastDone(done) if done == id) {
                    self.finish(io);
                    return true;
                }
                false
            }
            WritePhase::Done => true,
        }
    }

    fn finish(&mut self, io: &mut dyn Io) {
        self.phase = WritePhase::Done;
        io.note(Note::WriteReturned { reg: self.reg, word: self.word, invoked: self.invoked });
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, WritePhase::Done)
    }
}

/// Reader slots for which no `w != ⊥` is reported by `threshold` of the
/// `ACK_WRITE` messages. Missing entries in a malformed ack count as ⊥.
pub fn failing_slots(acks: &[(u32, Body)], slots: u32, threshold: usize) -> Vec<u32> {
    (1..=slots)
        .filter(|&slot| {
            let helping = acks.iter().filter_map(|(_, body)| match body {
                Body::AckWrite(h) => h.get(slot as usize - 1).copied().flatten(),
                _ => None,
            });
            first_quorum(helping, threshold).is_none()
        })
        .collect()
}

/// Which test let a read return.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Enough identical `last_val`s.
    LastVal,
    /// A `last_val` quorum not newer than the reader's previous value; the
    /// previous value is returned instead.
    Previous,
    /// Enough identical non-⊥ helping values.
    Helping,
}

#[derive(Clone, Debug)]
pub struct RegularRead {
    reg: u32,
    round: Round,
    pub rounds: u32,
}

impl RegularRead {
    /// Broadcasts `READ(true)`; later iterations send `READ(false)`.
    pub fn start(io: &mut dyn Io, reg: u32, th: &Thresholds) -> Self {
        let round = Round::start(io, Message { reg, body: Body::Read { new_read: true } }, AckKind::Read, th);
        RegularRead { reg, round, rounds: 1 }
    }

    pub fn step(&mut self, io: &mut dyn Io, input: &Input<'_>, th: &Thresholds) -> Option<(Word, Branch)> {
        self.round.feed(input);
        if !self.round.ready(th) {
            return None;
        }
        let acks = self.round.acks();
        if let Some(v) = first_quorum(last_vals(acks), th.read_last) {
            return Some((v, Branch::LastVal));
        }
        if let Some(w) = first_quorum(helping_vals(acks), th.read_help) {
            return Some((w, Branch::Helping));
        }
        let msg = Message { reg: self.reg, body: Body::Read { new_read: false } };
        self.round = Round::start(io, msg, AckKind::Read, th);
        self.rounds += 1;
        None
    }
}

pub(crate) fn last_vals(acks: &[(u32, Body)]) -> impl Iterator<Item = Word> + '_ {
    acks.iter().filter_map(|(_, b)| match b {
        Body::AckRead { last_val, .. } => Some(*last_val),
        _ => None,
    })
}

pub(crate) fn helping_vals(acks: &[(u32, Body)]) -> impl Iterator<Item = Word> + '_ {
    acks.iter().filter_map(|(_, b)| match b {
        Body::AckRead { helping_val, .. } => *helping_val,
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::testing::FakeIo;
    use crate::scenario::Timing;
    use crate::types::Payload;
    use alloc::vec;

    fn w(v: u64) -> Word {
        Word::Bare(Payload::Int(v))
    }

    fn th() -> Thresholds {
        Thresholds::new(9, 1, Timing::Async { d_max: 10 }, false)
    }

    fn ack_write(h: Option<Word>) -> Body {
        Body::AckWrite(vec![h])
    }

    fn ack_read(last: u64, help: Option<u64>) -> Body {
        Body::AckRead { last_val: w(last), helping_val: help.map(w) }
    }

    fn feed_all(m: &mut WriteRound, io: &mut FakeIo, tag: BcastId, acks: &[Body]) -> bool {
        let mut done = false;
        for (i, a) in acks.iter().enumerate() {
            done = m.step(io, &Input::Reply { from: i as u32 + 1, tag, body: a }, &th());
        }
        done
    }

    #[test]
    fn all_bottom_acks_trigger_help() {
        let mut io = FakeIo::default();
        let mut m = WriteRound::start(&mut io, 1, w(7), 1, &th());
        assert_eq!(io.sent[0].body, Body::Write(w(7)));
        m.step(&mut io, &Input::BcastDone(1), &th());
        let acks = vec![ack_write(None); 8];
        assert!(!feed_all(&mut m, &mut io, 1, &acks));
        assert_eq!(io.sent[1].body, Body::NewHelpVal { slots: vec![1], word: w(7) });
        assert!(!m.step(&mut io, &Input::BcastDone(1), &th()));
        assert!(m.step(&mut io, &Input::BcastDone(2), &th()));
    }

    #[test]
    fn five_matching_acks_skip_help() {
        let mut io = FakeIo::default();
        let mut m = WriteRound::start(&mut io, 1, w(7), 1, &th());
        m.step(&mut io, &Input::BcastDone(1), &th());
        let mut acks = vec![ack_write(Some(w(3))); 5];
        acks.extend(vec![ack_write(None); 3]);
        assert!(feed_all(&mut m, &mut io, 1, &acks));
        assert_eq!(io.sent.len(), 1);
        assert!(m.helped.is_empty());
    }

    #[test]
    fn four_matching_acks_are_not_enough() {
        let mut acks: Vec<(u32, Body)> = (1..=4).map(|s| (s, ack_write(Some(w(3))))).collect();
        acks.extend((5..=8).map(|s| (s, ack_write(None))));
        assert_eq!(failing_slots(&acks, 1, 5), vec![1]);
        assert!(failing_slots(&acks, 1, 3).is_empty());
    }

    #[test]
    fn per_slot_predicate() {
        // slot 2 was reset by a reader; slots 1 and 3 still agree
        let acks: Vec<(u32, Body)> = (1..=8).map(|s| (s, Body::AckWrite(vec![Some(w(1)), None, Some(w(1))]))).collect();
        assert_eq!(failing_slots(&acks, 3, 5), vec![2]);
        // a malformed ack with a short vector counts as ⊥
        let short: Vec<(u32, Body)> = (1..=8).map(|s| (s, Body::AckWrite(vec![]))).collect();
        assert_eq!(failing_slots(&short, 1, 5), vec![1]);
    }

    #[test]
    fn read_returns_last_val_quorum() {
        let mut io = FakeIo::default();
        let mut r = RegularRead::start(&mut io, 1, &th());
        assert_eq!(io.sent[0].body, Body::Read { new_read: true });
        r.step(&mut io, &Input::BcastDone(1), &th());
        let mut out = None;
        let acks = [ack_read(4, None), ack_read(4, None), ack_read(9, None), ack_read(4, None)];
        for (i, a) in acks.iter().cycle().take(8).enumerate() {
            out = out.or(r.step(&mut io, &Input::Reply { from: i as u32 + 1, tag: 1, body: a }, &th()));
        }
        assert_eq!(out, Some((w(4), Branch::LastVal)));
    }

    #[test]
    fn read_falls_back_to_helping_then_retries() {
        let mut io = FakeIo::default();
        let mut r = RegularRead::start(&mut io, 1, &th());
        r.step(&mut io, &Input::BcastDone(1), &th());
        // eight distinct last values, no helping quorum: retry with READ(false)
        for s in 1..=8u32 {
            let a = ack_read(100 + u64::from(s), if s <= 2 { Some(6) } else { None });
            assert_eq!(r.step(&mut io, &Input::Reply { from: s, tag: 1, body: &a }, &th()), None);
        }
        assert_eq!(io.sent[1].body, Body::Read { new_read: false });
        assert_eq!(r.rounds, 2);
        r.step(&mut io, &Input::BcastDone(2), &th());
        let mut out = None;
        for s in 1..=8u32 {
            let a = ack_read(200 + u64::from(s), if s <= 3 { Some(6) } else { None });
            out = out.or(r.step(&mut io, &Input::Reply { from: s, tag: 2, body: &a }, &th()));
        }
        assert_eq!(out, Some((w(6), Branch::Helping)));
    }
}
