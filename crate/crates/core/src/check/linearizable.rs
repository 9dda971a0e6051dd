//! Exhaustive linearizability oracle for small windows of a history.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use super::{Outcome, Property, Verdict};
use crate::trace::{History, OpRecord};
use crate::types::Value;

pub const DEFAULT_LIMIT: usize = 10;

/// Whether some total order of `ops` that respects real-time precedence
/// has every read return the value of the write just before it. The value
/// before the first write is free but fixed: every read ordered before the
/// first write must return the same value.
///
/// All operations must have returned; `ops.len()` must not exceed 32.
pub fn linearizable(ops: &[OpRecord]) -> bool {
    assert!(ops.len() <= 32, "window too large");
    let mut failed = BTreeSet::new();
    dfs(ops, 0, None, &mut failed)
}

fn dfs(ops: &[OpRecord], placed: u32, cur: Option<Value>, failed: &mut BTreeSet<(u32, Option<Value>)>) -> bool {
    if placed.count_ones() as usize == ops.len() {
        return true;
    }
    if failed.contains(&(placed, cur)) {
        return false;
    }
    let unplaced = |j: usize| placed & (1 << j) == 0;
    for (i, op) in ops.iter().enumerate() {
        if !unplaced(i) || (0..ops.len()).any(|j| unplaced(j) && j != i && ops[j].precedes(op)) {
            continue;
        }
        let next = if op.is_write() {
            op.value
        } else {
            match cur {
                None => op.value,
                Some(v) if op.value == Some(v) => cur,
                Some(_) => continue,
            }
        };
        if dfs(ops, placed | (1 << i), next, failed) {
            return true;
        }
    }
    failed.insert((placed, cur));
    false
}

/// Splits the completed operations invoked at or after `from` into windows
/// of at most `limit` operations, cutting only at quiescent points where
/// every earlier operation has returned. Segments longer than `limit` are
/// returned separately as skipped.
pub fn windows(history: &History, from: u64, limit: usize) -> (Vec<Vec<OpRecord>>, usize) {
    let ops: Vec<&OpRecord> = history.ops.iter().filter(|o| o.invoke >= from && o.ret.is_some()).collect();
    let mut segments: Vec<Vec<OpRecord>> = Vec::new();
    let mut horizon = 0u64;
    for o in ops {
        if segments.is_empty() || o.invoke > horizon {
            segments.push(Vec::new());
        }
        horizon = horizon.max(o.ret.unwrap_or(u64::MAX));
        segments.last_mut().expect("pushed above").push(o.clone());
    }
    let mut out: Vec<Vec<OpRecord>> = Vec::new();
    let mut skipped = 0;
    let mut acc: Vec<OpRecord> = Vec::new();
    for seg in segments {
        if seg.len() > limit {
            skipped += 1;
            if !acc.is_empty() {
                out.push(core::mem::take(&mut acc));
            }
            continue;
        }
        if acc.len() + seg.len() > limit {
            out.push(core::mem::take(&mut acc));
        }
        acc.extend(seg);
    }
    if !acc.is_empty() {
        out.push(acc);
    }
    (out, skipped)
}

/// Every window of at most `limit` operations after `stab` is linearizable.
pub fn check_linearizable_small(history: &History, stab: u64, limit: usize) -> Verdict {
    let (ws, skipped) = windows(history, stab, limit.min(32));
    for w in &ws {
        if !linearizable(w) {
            let ids: Vec<u64> = w.iter().map(|o| o.id).collect();
            return Verdict::fail(Property::Linearizable, format!("window {ids:?} is not linearizable"), ids);
        }
    }
    if ws.is_empty() && skipped > 0 {
        return Verdict::not_applicable(Property::Linearizable, "every quiescent segment exceeds the window limit");
    }
    let mut v = Verdict::pass(Property::Linearizable, ws.len() as u64);
    if skipped > 0 {
        v.witness = Some(format!("{skipped} oversized segments skipped"));
    }
    debug_assert_eq!(v.outcome, Outcome::Pass);
    v
}
