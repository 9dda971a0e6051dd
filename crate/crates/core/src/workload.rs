//! Workload generators used by sweeps, the schedule search and the
//! acceptance suite.
//!
//! Written values are unique within a workload and lie above
//! [`JUNK_VALUES`], so checkers can match reads to writes by value and a
//! corrupted value can never pass for a written one.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fault::JUNK_VALUES;
use crate::scenario::{OpKind, OpSpec, RegisterKind};
use crate::types::Value;

/// The value written by the `i`-th write of a generated workload.
pub fn value_for(i: usize) -> Value {
    JUNK_VALUES + 1 + i as Value
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MixedShape {
    pub kind: RegisterKind,
    /// Client processes (ignored for single-reader registers).
    pub m: u32,
    /// Operations in the random phase.
    pub ops: usize,
    /// Share of writes in the random phase, in percent.
    pub write_pct: u32,
    /// Length of the random phase in ticks.
    pub span: u64,
    /// Time of the first operation; at or after `τ_no_tr`.
    pub start: u64,
    /// Quiet gap that isolates the stabilizing operations.
    pub gap: u64,
}

impl MixedShape {
    pub fn new(kind: RegisterKind, m: u32) -> Self {
        MixedShape { kind, m, ops: 24, write_pct: 40, span: 1500, start: 1, gap: 1000 }
    }
}

fn clients(shape: &MixedShape) -> u32 {
    if shape.kind.is_single_writer() {
        1
    } else {
        shape.m
    }
}

fn may_write(shape: &MixedShape, c: u32) -> bool {
    match shape.kind {
        RegisterKind::Swmr => c == 1,
        _ => true,
    }
}

/// Post-fault writes, then every reader in isolation, then a random mix
/// of overlapping operations.
///
/// The leading write fixes `τ_1w`; on a multi-writer register every client
/// writes once, so each underlying register holds a post-fault value. The
/// isolated reads, one per client and spaced by `shape.gap`, let every
/// reader stabilize before the random phase.
pub fn mixed(shape: &MixedShape, seed: u64) -> Vec<OpSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0005_eed0_f0b5);
    let mut out = Vec::new();
    let mut writes = 0usize;
    let mut write = |time: u64, client: u32, out: &mut Vec<OpSpec>| {
        out.push(OpSpec::write(time, client, value_for(writes)));
        writes += 1;
    };
    let k = clients(shape);
    let mut t = shape.start;
    for c in (1..=k).filter(|c| *c == 1 || shape.kind == RegisterKind::Mwmr) {
        write(t, c, &mut out);
        t += shape.gap;
    }
    for c in 1..=k {
        out.push(OpSpec::read(t, c));
        t += shape.gap;
    }
    let mut timed: Vec<(u64, u32, OpKind)> = (0..shape.ops)
        .map(|_| {
            let at = t + rng.gen_range(0..shape.span);
            let c = rng.gen_range(1..=k);
            let w = may_write(shape, c) && rng.gen_range(0..100) < shape.write_pct;
            (at, c, if w { OpKind::Write } else { OpKind::Read })
        })
        .collect();
    timed.sort_by_key(|x| x.0);
    for (at, c, kind) in timed {
        match kind {
            OpKind::Write => write(at, c, &mut out),
            OpKind::Read => out.push(OpSpec::read(at, c)),
        }
    }
    out
}

/// The schedule-search workload on a single-writer register: a warm-up
/// write, an isolated read, then a write contested by back-to-back reads.
pub fn contested(start: u64, reads: usize) -> Vec<OpSpec> {
    let mut out = Vec::from([OpSpec::write(start, 1, value_for(0)), OpSpec::read(start + 100, 1)]);
    out.push(OpSpec::write(start + 200, 1, value_for(1)));
    for _ in 0..reads {
        out.push(OpSpec::read(start + 200, 1));
    }
    out
}

/// Back-to-back writes racing back-to-back reads on a single-writer
/// register, after a warm-up write and an isolated read. Reads keep
/// overlapping writes, so they often complete through helping values.
pub fn churn(start: u64, writes: usize, reads: usize) -> Vec<OpSpec> {
    let mut out = Vec::from([OpSpec::write(start, 1, value_for(0)), OpSpec::read(start + 100, 1)]);
    for i in 1..=writes {
        out.push(OpSpec::write(start + 200, 1, value_for(i)));
    }
    for _ in 0..reads {
        out.push(OpSpec::read(start + 200, 1));
    }
    out
}

/// Wrap-around construction on a single-writer atomic register: a write
/// and a read, then `gap` writes with no read in between, then a final
/// read. Everything is sequential.
pub fn wraparound(start: u64, gap: usize, spacing: u64) -> Vec<OpSpec> {
    let mut out = Vec::from([OpSpec::write(start, 1, value_for(0)), OpSpec::read(start + spacing, 1)]);
    for i in 1..=gap {
        out.push(OpSpec::write(start + spacing * (i as u64 + 1), 1, value_for(i)));
    }
    out.push(OpSpec::read(start + spacing * (gap as u64 + 2), 1));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_are_unique_and_above_junk() {
        let s = MixedShape::new(RegisterKind::Mwmr, 3);
        let w = mixed(&s, 9);
        let mut vals: Vec<Value> = w.iter().filter_map(|o| o.value).collect();
        assert!(vals.iter().all(|v| *v > JUNK_VALUES));
        let n = vals.len();
        vals.sort();
        vals.dedup();
        assert_eq!(vals.len(), n);
    }

    #[test]
    fn swmr_writes_only_from_client_one() {
        let s = MixedShape { ops: 200, ..MixedShape::new(RegisterKind::Swmr, 3) };
        assert!(mixed(&s, 1).iter().filter(|o| o.kind == OpKind::Write).all(|o| o.client == 1));
    }

    #[test]
    fn generation_is_deterministic() {
        let s = MixedShape::new(RegisterKind::SwsrAtomic, 1);
        assert_eq!(mixed(&s, 4), mixed(&s, 4));
        assert_ne!(mixed(&s, 4), mixed(&s, 5));
    }

    #[test]
    fn wraparound_shape() {
        let w = wraparound(1, 9, 100);
        assert_eq!(w.iter().filter(|o| o.kind == OpKind::Write).count(), 10);
        assert_eq!(w.last().unwrap().kind, OpKind::Read);
    }
}
