//! The practically atomic register: bounded write sequence numbers on the
//! writer side, and on the reader side a sanity round followed by the
//! regular read loop guarded by the reader's previous `(pwsn, pv)` pair.

use serde::{Deserialize, Serialize};

use crate::client::{first_quorum, AckKind, Input, Io, Round, Thresholds};
use crate::regular::{helping_vals, last_vals, Branch, WriteRound};
use crate::types::{Body, Message, Modulus, Payload, SeqNo, Word};

/// The reader's record of the newest value it has returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReaderMemory {
    #[serde(with = "crate::types::seqno")]
    pub pwsn: SeqNo,
    pub pv: Payload,
}

/// Bumps the writer's sequence number and starts the write of
/// `(wsn, payload)`.
pub fn start_write(
    io: &mut dyn Io,
    reg: u32,
    wsn: &mut SeqNo,
    modulus: Modulus,
    payload: Payload,
    slots: u32,
    th: &Thresholds,
) -> WriteRound {
    *wsn = modulus.next(*wsn);
    WriteRound::start(io, reg, Word::Numbered { wsn: *wsn, payload }, slots, th)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadOptions {
    pub modulus: Modulus,
    /// Mutation: return the quorum value even when it is not newer than
    /// `pwsn`.
    pub skip_inversion_guard: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadOutcome {
    pub payload: Payload,
    pub wsn: SeqNo,
    pub branch: Branch,
}

#[derive(Clone, Debug)]
enum Phase {
    Sanity(Round),
    Loop(Round),
}

#[derive(Clone, Debug)]
pub struct AtomicRead {
    reg: u32,
    phase: Phase,
    pub rounds: u32,
}

fn numbered(w: Word) -> Option<(SeqNo, Payload)> {
    match w {
        Word::Numbered { wsn, payload } => Some((wsn, payload)),
        Word::Bare(_) => None,
    }
}

impl AtomicRead {
    /// Starts with the sanity round, `READ(false)`.
    pub fn start(io: &mut dyn Io, reg: u32, th: &Thresholds) -> Self {
        let round = Round::start(io, Message { reg, body: Body::Read { new_read: false } }, AckKind::Read, th);
        AtomicRead { reg, phase: Phase::Sanity(round), rounds: 1 }
    }

    pub fn step(
        &mut self,
        io: &mut dyn Io,
        input: &Input<'_>,
        th: &Thresholds,
        mem: &mut ReaderMemory,
        opts: ReadOptions,
    ) -> Option<ReadOutcome> {
        let m = opts.modulus;
        match &mut self.phase {
            Phase::Sanity(round) => {
                round.feed(input);
                if !round.ready(th) {
                    return None;
                }
                let helping = helping_vals(round.acks()).filter(|w| numbered(*w).is_some());
                if let Some((wsn, v)) = first_quorum(helping, th.read_help).and_then(numbered) {
                    if m.cd_greater(mem.pwsn, wsn) {
                        mem.pwsn = wsn;
                        mem.pv = v;
                    }
                }
                self.next_round(io, true, th);
                None
            }
            Phase::Loop(round) => {
                round.feed(input);
                if !round.ready(th) {
                    return None;
                }
                let acks = round.acks();
                let last = last_vals(acks).filter(|w| numbered(*w).is_some());
                if let Some((wsn, v)) = first_quorum(last, th.read_last).and_then(numbered) {
                    if m.cd_greater(wsn, mem.pwsn) {
                        mem.pwsn = wsn;
                        mem.pv = v;
                        return Some(ReadOutcome { payload: v, wsn, branch: Branch::LastVal });
                    }
                    if opts.skip_inversion_guard {
                        return Some(ReadOutcome { payload: v, wsn, branch: Branch::LastVal });
                    }
                    return Some(ReadOutcome { payload: mem.pv, wsn: mem.pwsn, branch: Branch::Previous });
                }
                let helping = helping_vals(acks).filter(|w| numbered(*w).is_some());
                if let Some((wsn, w)) = first_quorum(helping, th.read_help).and_then(numbered) {
                    mem.pwsn = wsn;
                    mem.pv = w;
                    return Some(ReadOutcome { payload: w, wsn, branch: Branch::Helping });
                }
                self.next_round(io, false, th);
                None
            }
        }
    }

    fn next_round(&mut self, io: &mut dyn Io, new_read: bool, th: &Thresholds) {
        let msg = Message { reg: self.reg, body: Body::Read { new_read } };
        self.phase = Phase::Loop(Round::start(io, msg, AckKind::Read, th));
        self.rounds += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::testing::FakeIo;
    use crate::client::BcastId;
    use crate::scenario::Timing;
    use alloc::vec;
    use alloc::vec::Vec;

    fn th() -> Thresholds {
        Thresholds::new(9, 1, Timing::Async { d_max: 10 }, false)
    }

    fn nw(wsn: SeqNo, v: u64) -> Word {
        Word::Numbered { wsn, payload: Payload::Int(v) }
    }

    const OPTS: ReadOptions = ReadOptions { modulus: Modulus::DESK, skip_inversion_guard: false };

    /// Feeds completion plus eight identical acks to the round `tag`.
    fn answer(
        r: &mut AtomicRead,
        io: &mut FakeIo,
        mem: &mut ReaderMemory,
        tag: BcastId,
        acks: &[Body],
        opts: ReadOptions,
    ) -> Option<ReadOutcome> {
        let mut out = r.step(io, &Input::BcastDone(tag), &th(), mem, opts);
        for (i, a) in acks.iter().enumerate() {
            out = out.or(r.step(io, &Input::Reply { from: i as u32 + 1, tag, body: a }, &th(), mem, opts));
        }
        out
    }

    fn acks(last: Word, help: Option<Word>) -> Vec<Body> {
        vec![Body::AckRead { last_val: last, helping_val: help }; 8]
    }

    #[test]
    fn write_bumps_wsn() {
        let mut io = FakeIo::default();
        let mut wsn = 4;
        let m = start_write(&mut io, 1, &mut wsn, Modulus::DESK, Payload::Int(9), 1, &th());
        assert_eq!(wsn, 5);
        assert_eq!(io.sent[0].body, Body::Write(nw(5, 9)));
        assert_eq!(m.word, nw(5, 9));
        let mut wsn = 16;
        start_write(&mut io, 1, &mut wsn, Modulus::DESK, Payload::Int(9), 1, &th());
        assert_eq!(wsn, 0);
    }

    #[test]
    fn newer_quorum_is_adopted() {
        let mut io = FakeIo::default();
        let mut mem = ReaderMemory { pwsn: 2, pv: Payload::Int(20) };
        let mut r = AtomicRead::start(&mut io, 1, &th());
        assert_eq!(io.sent[0].body, Body::Read { new_read: false });
        assert_eq!(answer(&mut r, &mut io, &mut mem, 1, &acks(nw(5, 50), None), OPTS), None);
        assert_eq!(io.sent[1].body, Body::Read { new_read: true });
        let out = answer(&mut r, &mut io, &mut mem, 2, &acks(nw(5, 50), None), OPTS).unwrap();
        assert_eq!((out.payload, out.branch), (Payload::Int(50), Branch::LastVal));
        assert_eq!(mem, ReaderMemory { pwsn: 5, pv: Payload::Int(50) });
    }

    #[test]
    fn older_quorum_returns_previous_value() {
        let mut io = FakeIo::default();
        let mut mem = ReaderMemory { pwsn: 5, pv: Payload::Int(50) };
        let mut r = AtomicRead::start(&mut io, 1, &th());
        answer(&mut r, &mut io, &mut mem, 1, &acks(nw(3, 30), None), OPTS);
        let out = answer(&mut r, &mut io, &mut mem, 2, &acks(nw(3, 30), None), OPTS).unwrap();
        assert_eq!((out.payload, out.branch), (Payload::Int(50), Branch::Previous));
        assert_eq!(mem.pwsn, 5);
    }

    #[test]
    fn guard_mutation_returns_the_older_value() {
        let opts = ReadOptions { skip_inversion_guard: true, ..OPTS };
        let mut io = FakeIo::default();
        let mut mem = ReaderMemory { pwsn: 5, pv: Payload::Int(50) };
        let mut r = AtomicRead::start(&mut io, 1, &th());
        answer(&mut r, &mut io, &mut mem, 1, &acks(nw(3, 30), None), opts);
        let out = answer(&mut r, &mut io, &mut mem, 2, &acks(nw(3, 30), None), opts).unwrap();
        assert_eq!(out.payload, Payload::Int(30));
    }

    #[test]
    fn helping_branch_adopts_unconditionally() {
        let mut io = FakeIo::default();
        let mut mem = ReaderMemory { pwsn: 9, pv: Payload::Int(90) };
        let mut r = AtomicRead::start(&mut io, 1, &th());
        answer(&mut r, &mut io, &mut mem, 1, &acks(nw(1, 1), None), OPTS);
        let split: Vec<Body> =
            (0..8).map(|i| Body::AckRead { last_val: nw(i, i as u64), helping_val: Some(nw(6, 60)) }).collect();
        let out = answer(&mut r, &mut io, &mut mem, 2, &split, OPTS).unwrap();
        assert_eq!((out.payload, out.wsn, out.branch), (Payload::Int(60), 6, Branch::Helping));
        assert_eq!(mem, ReaderMemory { pwsn: 6, pv: Payload::Int(60) });
    }

    #[test]
    fn sanity_round_lowers_a_future_pwsn() {
        let mut io = FakeIo::default();
        // pwsn corrupted to 10, the servers' helping value carries wsn 4
        let mut mem = ReaderMemory { pwsn: 10, pv: Payload::Int(999) };
        let mut r = AtomicRead::start(&mut io, 1, &th());
        answer(&mut r, &mut io, &mut mem, 1, &acks(nw(4, 40), Some(nw(4, 40))), OPTS);
        assert_eq!(mem, ReaderMemory { pwsn: 4, pv: Payload::Int(40) });
        // the loop sees last_val (4, 40), not newer than pwsn: returns pv = 40
        let out = answer(&mut r, &mut io, &mut mem, 2, &acks(nw(4, 40), None), OPTS).unwrap();
        assert_eq!((out.payload, out.branch), (Payload::Int(40), Branch::Previous));
    }

    #[test]
    fn sanity_round_keeps_an_older_pwsn() {
        let mut io = FakeIo::default();
        let mut mem = ReaderMemory { pwsn: 2, pv: Payload::Int(20) };
        let mut r = AtomicRead::start(&mut io, 1, &th());
        answer(&mut r, &mut io, &mut mem, 1, &acks(nw(4, 40), Some(nw(4, 40))), OPTS);
        assert_eq!(mem.pwsn, 2);
    }
}
