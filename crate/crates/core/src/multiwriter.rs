//! The multi-writer register built from one single-writer multi-reader
//! register per client, ordered by `(epoch, seq)` timestamps.
//!
//! [`plan_write`] and [`plan_read`] are the pure decision steps over a
//! client's view `reg_i[1..m]`; [`MwmrOp`] is the machine that collects the
//! view with `m` sequential register reads and then performs the write.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::atomic::{self, AtomicRead, ReadOptions, ReaderMemory};
use crate::client::{Input, Io, Note, Thresholds};
use crate::epoch::{max_epoch, next_epoch, Epoch};
use crate::regular::WriteRound;
use crate::types::{Payload, SeqNo, Triple, Value, Word};

/// `(epoch, seq, writer)`: the stamp that orders multi-writer writes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct WriteStamp {
    pub epoch: Epoch,
    pub seq: u64,
    pub writer: u32,
}

impl WriteStamp {
    /// `self ≻_to other`: a dominating epoch, or the same epoch and a larger
    /// `(seq, writer)` pair.
    pub fn after(&self, other: &WriteStamp) -> bool {
        if self.epoch == other.epoch {
            (self.seq, self.writer) > (other.seq, other.writer)
        } else {
            self.epoch.dominates(&other.epoch)
        }
    }

    /// Three-way comparison under `≻_to`; `None` when neither stamp is
    /// after the other and they differ.
    pub fn compare(&self, other: &WriteStamp) -> Option<Ordering> {
        if self == other {
            Some(Ordering::Equal)
        } else if self.after(other) {
            Some(Ordering::Greater)
        } else if other.after(self) {
            Some(Ordering::Less)
        } else {
            None
        }
    }
}

/// Epochs of the view, with labels of the wrong size replaced by the
/// initial label and the list padded with duplicates up to `k` entries.
fn view_epochs(view: &[Triple], k: u8) -> Vec<Epoch> {
    let fallback = Epoch::initial(k).expect("k validated by the scenario");
    let mut out: Vec<Epoch> = view.iter().map(|t| if t.epoch.k() == k { t.epoch } else { fallback }).collect();
    while out.len() < usize::from(k) {
        out.push(*out.last().unwrap_or(&fallback));
    }
    out
}

/// Shared by writes and reads: no maximal epoch in the view, or some entry
/// carrying the maximal epoch has exhausted its sequence numbers.
pub fn needs_new_epoch(view: &[Triple], seq_bound: u64, k: u8) -> bool {
    let epochs = view_epochs(view, k);
    match max_epoch(&epochs[..view.len()]) {
        None => true,
        Some(i) => view.iter().zip(&epochs).any(|(t, e)| *e == epochs[i] && t.seq >= seq_bound),
    }
}

/// `(max epoch, seq_max, min)`: the maximal epoch of the view, the largest
/// sequence number carried with it and the smallest index holding that
/// pair. `None` if the view has no maximal epoch.
pub fn view_max(view: &[Triple], k: u8) -> Option<(Epoch, u64, usize)> {
    let epochs = view_epochs(view, k);
    let top = epochs[max_epoch(&epochs[..view.len()])?];
    let seq_max = view.iter().zip(&epochs).filter(|(_, e)| **e == top).map(|(t, _)| t.seq).max()?;
    let min = view.iter().zip(&epochs).position(|(t, e)| *e == top && t.seq == seq_max)?;
    Some((top, seq_max, min))
}

fn fresh_epoch(view: &[Triple], k: u8) -> Epoch {
    next_epoch(&view_epochs(view, k)).expect("labels normalized to k")
}

/// The write, once the view is known. Returns the triple to write into
/// the client's own register; `view[i]` may be replaced by a fresh-epoch
/// entry first.
pub fn plan_write(view: &mut [Triple], i: usize, v: Value, seq_bound: u64, k: u8) -> Triple {
    if needs_new_epoch(view, seq_bound, k) {
        view[i] = Triple { value: v, epoch: fresh_epoch(view, k), seq: 0 };
    }
    let (epoch, seq_max, _) = view_max(view, k).unwrap_or((view[i].epoch, view[i].seq, i));
    Triple { value: v, epoch, seq: seq_max + 1 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadPlan {
    /// Fresh-epoch triple written back into the client's own register.
    pub repair: Option<Triple>,
    /// Index (0-based) whose value is returned.
    pub min: usize,
    pub value: Value,
}

/// The read, once the view is known. When the view needs a new epoch the
/// reader re-stamps its own entry and returns the smallest index holding
/// the maximal `(epoch, seq)`.
pub fn plan_read(view: &mut [Triple], i: usize, seq_bound: u64, k: u8) -> ReadPlan {
    let mut repair = None;
    if needs_new_epoch(view, seq_bound, k) {
        view[i] = Triple { value: view[i].value, epoch: fresh_epoch(view, k), seq: 0 };
        repair = Some(view[i]);
    }
    let min = view_max(view, k).map(|(_, _, min)| min).unwrap_or(i);
    ReadPlan { repair, min, value: view[min].value }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MwmrKind {
    Write(Value),
    Read,
}

#[derive(Clone, Debug)]
enum Stage {
    Reading { j: u32, read: AtomicRead },
    Writing { round: WriteRound },
    Done,
}

/// Everything an operation needs from its client besides the environment.
pub struct MwmrCtx<'a> {
    pub th: &'a Thresholds,
    /// Reader memory per register, index `j - 1`.
    pub mems: &'a mut [ReaderMemory],
    /// Sequence number of the client's own register.
    pub wsn: &'a mut SeqNo,
    pub read_opts: ReadOptions,
    pub seq_bound: u64,
    pub k: u8,
    pub m: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MwmrOutcome {
    /// The value read, `None` for writes.
    pub value: Option<Value>,
    /// Timestamp of the value written or returned.
    pub stamp: WriteStamp,
}

#[derive(Clone, Debug)]
pub struct MwmrOp {
    /// The client's index, 1-based.
    i: u32,
    kind: MwmrKind,
    view: Vec<Triple>,
    stage: Stage,
    outcome: Option<MwmrOutcome>,
}

fn as_triple(p: Payload, k: u8) -> Triple {
    match p {
        Payload::Triple(t) => t,
        // a malformed payload can only come from corrupted state
        Payload::Int(value) => Triple { value, epoch: Epoch::initial(k).expect("k validated by the scenario"), seq: 0 },
    }
}

impl MwmrOp {
    pub fn start(io: &mut dyn Io, i: u32, kind: MwmrKind, ctx: &mut MwmrCtx<'_>) -> Self {
        let read = AtomicRead::start(io, 1, ctx.th);
        MwmrOp { i, kind, view: Vec::new(), stage: Stage::Reading { j: 1, read }, outcome: None }
    }

    pub fn step(&mut self, io: &mut dyn Io, input: &Input<'_>, ctx: &mut MwmrCtx<'_>) -> Option<MwmrOutcome> {
        match &mut self.stage {
            Stage::Reading { j, read } => {
                let mem = &mut ctx.mems[*j as usize - 1];
                let out = read.step(io, input, ctx.th, mem, ctx.read_opts)?;
                let word = Word::Numbered { wsn: out.wsn, payload: out.payload };
                io.note(Note::SubRead { reg: *j, word });
                self.view.push(as_triple(out.payload, ctx.k));
                if *j < ctx.m {
                    let next = *j + 1;
                    self.stage = Stage::Reading { j: next, read: AtomicRead::start(io, next, ctx.th) };
                    return None;
                }
                self.after_view(io, ctx)
            }
            Stage::Writing { round } => {
                if !round.step(io, input, ctx.th) {
                    return None;
                }
                self.stage = Stage::Done;
                self.outcome
            }
            Stage::Done => self.outcome,
        }
    }

    fn after_view(&mut self, io: &mut dyn Io, ctx: &mut MwmrCtx<'_>) -> Option<MwmrOutcome> {
        let i = self.i as usize - 1;
        let write = match self.kind {
            MwmrKind::Write(v) => {
                let t = plan_write(&mut self.view, i, v, ctx.seq_bound, ctx.k);
                let stamp = WriteStamp { epoch: t.epoch, seq: t.seq, writer: self.i };
                self.outcome = Some(MwmrOutcome { value: None, stamp });
                Some(t)
            }
            MwmrKind::Read => {
                let plan = plan_read(&mut self.view, i, ctx.seq_bound, ctx.k);
                let t = self.view[plan.min];
                let stamp = WriteStamp { epoch: t.epoch, seq: t.seq, writer: plan.min as u32 + 1 };
                self.outcome = Some(MwmrOutcome { value: Some(plan.value), stamp });
                plan.repair
            }
        };
        match write {
            Some(t) => {
                let round =
                    atomic::start_write(io, self.i, ctx.wsn, ctx.read_opts.modulus, Payload::Triple(t), ctx.m, ctx.th);
                self.stage = Stage::Writing { round };
                None
            }
            None => {
                self.stage = Stage::Done;
                self.outcome
            }
        }
    }
}
