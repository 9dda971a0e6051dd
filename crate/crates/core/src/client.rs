//! Plumbing shared by the client-side state machines: the environment
//! interface, machine inputs, quorum thresholds and the broadcast-then-wait
//! round that every operation is built from.

use alloc::vec::Vec;

use crate::scenario::Timing;
use crate::types::{Body, Message, Word};

/// Protocol-level milestones a machine reports to its environment for the
/// trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Note {
    /// A write round on register `reg` has returned.
    WriteReturned { reg: u32, word: Word, invoked: u64 },
    /// A read of register `reg` inside a multi-writer operation has
    /// returned `word`.
    SubRead { reg: u32, word: Word },
}

pub type BcastId = u64;
pub type TimerId = u64;

/// What a client machine may ask of its environment.
pub trait Io {
    fn now(&self) -> u64;
    /// Starts an ss-broadcast; completion arrives later as
    /// [`Input::BcastDone`].
    fn broadcast(&mut self, msg: Message) -> BcastId;
    fn set_timer(&mut self, after: u64) -> TimerId;
    fn note(&mut self, note: Note);
}

#[derive(Clone, Copy, Debug)]
pub enum Input<'a> {
    BcastDone(BcastId),
    /// A server reply, tagged with the broadcast whose delivery caused it.
    Reply {
        from: u32,
        tag: BcastId,
        body: &'a Body,
    },
    Timer(TimerId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wait {
    /// Asynchronous links: `n - t` distinct servers.
    Count(usize),
    /// Synchronous links: all `n` servers or the time-out, whichever first.
    AllOrTimeout { n: usize, timeout: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Thresholds {
    pub wait: Wait,
    /// Acks with one identical helping value that let the writer skip
    /// `NEW_HELP_VAL`.
    pub write_help: usize,
    pub read_last: usize,
    pub read_help: usize,
}

impl Thresholds {
    pub fn new(n: u32, t: u32, timing: Timing, weak_help: bool) -> Self {
        let (n, t) = (n as usize, t as usize);
        match timing {
            Timing::Async { .. } => Thresholds {
                wait: Wait::Count(n - t),
                write_help: if weak_help { 2 * t + 1 } else { 4 * t + 1 },
                read_last: 2 * t + 1,
                read_help: 2 * t + 1,
            },
            Timing::Sync { delta } => Thresholds {
                wait: Wait::AllOrTimeout { n, timeout: 2 * delta + 1 },
                write_help: t + 1,
                read_last: t + 1,
                read_help: t + 1,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AckKind {
    Write,
    Read,
}

impl AckKind {
    fn matches(self, body: &Body) -> bool {
        matches!((self, body), (AckKind::Write, Body::AckWrite(_)) | (AckKind::Read, Body::AckRead { .. }))
    }
}

/// One `ss_broadcast` followed by a wait for acknowledgments.
///
/// Acks are matched to the round by the tag of the delivery they answer.
/// At most one ack per server is kept and the collection starts empty, so
/// surplus or stale acks left over from a corrupted state are discarded.
#[derive(Clone, Debug)]
pub struct Round {
    pub tag: BcastId,
    expect: AckKind,
    done: bool,
    timer: Option<TimerId>,
    expired: bool,
    acks: Vec<(u32, Body)>,
}

impl Round {
    pub fn start(io: &mut dyn Io, msg: Message, expect: AckKind, th: &Thresholds) -> Round {
        let tag = io.broadcast(msg);
        let timer = match th.wait {
            Wait::AllOrTimeout { timeout, .. } => Some(io.set_timer(timeout)),
            Wait::Count(_) => None,
        };
        Round { tag, expect, done: false, timer, expired: false, acks: Vec::new() }
    }

    pub fn feed(&mut self, input: &Input<'_>) {
        match *input {
            Input::BcastDone(id) if id == self.tag => self.done = true,
            Input::Timer(id) if Some(id) == self.timer => self.expired = true,
            Input::Reply { from, tag, body }
                if tag == self.tag && self.expect.matches(body) && !self.acks.iter().any(|(s, _)| *s == from) =>
            {
                self.acks.push((from, body.clone()));
            }
            _ => {}
        }
    }

    /// The broadcast has returned and the wait condition holds.
    pub fn ready(&self, th: &Thresholds) -> bool {
        self.done
            && match th.wait {
                Wait::Count(k) => self.acks.len() >= k,
                Wait::AllOrTimeout { n, .. } => self.expired || self.acks.len() >= n,
            }
    }

    /// Collected acks in arrival order.
    pub fn acks(&self) -> &[(u32, Body)] {
        &self.acks
    }
}

/// The first word to be reported by `threshold` entries, scanning in
/// arrival order. When several words reach the threshold the one whose
/// threshold-th report arrived first wins.
pub fn first_quorum<I>(items: I, threshold: usize) -> Option<Word>
where
    I: IntoIterator<Item = Word>,
{
    let mut counts: Vec<(Word, usize)> = Vec::new();
    for w in items {
        let c = match counts.iter_mut().find(|(x, _)| *x == w) {
            Some((_, c)) => {
                *c += 1;
                *c
            }
            None => {
                counts.push((w, 1));
                1
            }
        };
        if c >= threshold {
            return Some(w);
        }
    }
    None
}
