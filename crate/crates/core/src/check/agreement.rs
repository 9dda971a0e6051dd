//! Server agreement when a write returns.
//!
//! At every write return after `τ_no_tr` enough correct servers must hold
//! the written value as `last_val`, and for every reader slot enough must
//! hold one identical non-⊥ helping value. A correct server whose slot was
//! reset by a `READ(true)` of that slot's reader delivered during the write
//! counts towards the helping quorum: the reset is the protocol working as
//! intended, not a disagreement.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Property, Verdict};
use crate::client::BcastId;
use crate::trace::{EventKind, Trace};
use crate::types::{Body, ProcessId, Role, Word};

fn slot_of(pid: ProcessId) -> Option<u32> {
    match pid.role {
        Role::Reader => Some(1),
        Role::Client => Some(pid.index),
        _ => None,
    }
}

/// `help_threshold` overrides the helping quorum; by default `4t + 1`
/// asynchronously and `t + 1` synchronously.
pub fn check_agreement(trace: &Trace, help_threshold: Option<usize>) -> Verdict {
    let h = &trace.header;
    let (n, t) = (h.n as usize, h.t as usize);
    let (need_last, default_help) = if h.timing.is_sync() { (n - t, t + 1) } else { (n - 2 * t, 4 * t + 1) };
    let need_help = help_threshold.unwrap_or(default_help);
    // READ(true) broadcasts: id -> (register, slot)
    let mut resets: BTreeMap<BcastId, (u32, u32)> = BTreeMap::new();
    // (register, slot, server) -> delivery times of READ(true)
    let mut reset_at: BTreeMap<(u32, u32, u32), Vec<u64>> = BTreeMap::new();
    let mut checked = 0u64;
    for ev in &trace.events {
        match &ev.kind {
            EventKind::Broadcast { id, reg, body: Body::Read { new_read: true } } => {
                if let Some(slot) = slot_of(ev.pid) {
                    resets.insert(*id, (*reg, slot));
                }
            }
            EventKind::Deliver { id: Some(id), .. } => {
                if let Some((reg, slot)) = resets.get(id) {
                    reset_at.entry((*reg, *slot, ev.pid.index)).or_default().push(ev.time);
                }
            }
            EventKind::Snapshot { reg, word, invoked, servers } if *invoked >= h.tau_no_tr => {
                checked += 1;
                let last = servers.iter().filter(|s| s.last_val == *word).count();
                if last < need_last {
                    return Verdict::fail(
                        Property::Agreement,
                        format!(
                            "write by {} on register {reg} returned at {} with last_val on {last} correct servers (need {need_last})",
                            ev.pid, ev.time
                        ),
                        vec![],
                    )
                    .with_checked(checked);
                }
                let slots = servers.first().map_or(0, |s| s.helping.len()) as u32;
                for slot in 1..=slots {
                    let mut counts: Vec<(Word, usize)> = Vec::new();
                    for s in servers {
                        if let Some(w) = s.helping.get(slot as usize - 1).copied().flatten() {
                            match counts.iter_mut().find(|(x, _)| *x == w) {
                                Some((_, c)) => *c += 1,
                                None => counts.push((w, 1)),
                            }
                        }
                    }
                    let best = counts.iter().map(|(_, c)| *c).max().unwrap_or(0);
                    let reset = servers
                        .iter()
                        .filter(|s| s.helping.get(slot as usize - 1).copied().flatten().is_none())
                        .filter(|s| {
                            reset_at
                                .get(&(*reg, slot, s.server))
                                .is_some_and(|ts| ts.iter().any(|x| *x >= *invoked && *x <= ev.time))
                        })
                        .count();
                    if best + reset < need_help {
                        return Verdict::fail(
                            Property::Agreement,
                            format!(
                                "write by {} on register {reg} returned at {} with {best} identical helping values for slot {slot} ({reset} reset by the reader, need {need_help})",
                                ev.pid, ev.time
                            ),
                            vec![],
                        )
                        .with_checked(checked);
                    }
                }
            }
            _ => {}
        }
    }
    if checked == 0 {
        return Verdict::not_applicable(Property::Agreement, "no write returned after tau_no_tr");
    }
    Verdict::pass(Property::Agreement, checked)
}
