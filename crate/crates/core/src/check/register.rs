//! Register semantics over an operation history: liveness, regularity,
//! absence of new/old inversion and the multi-writer write order.
//!
//! Written values are unique per run, so a read is matched to the write
//! whose value it returned.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Property, Verdict};
use crate::multiwriter::WriteStamp;
use crate::scenario::RegisterKind;
use crate::trace::{History, OpRecord, Stamp};
use crate::types::Modulus;

/// Fails iff some invocation has no matching return or the run stopped on
/// its event budget.
pub fn check_liveness(history: &History, max_events_hit: bool) -> Verdict {
    if let Some(op) = history.ops.iter().find(|o| o.ret.is_none()) {
        let why = if max_events_hit { "event budget exhausted" } else { "run quiesced" };
        return Verdict::fail(
            Property::Liveness,
            format!("op {} ({:?} by {}, invoked at {}) never returned; {why}", op.id, op.kind, op.client, op.invoke),
            vec![op.id],
        );
    }
    if max_events_hit {
        return Verdict::fail(Property::Liveness, "event budget exhausted".into(), Vec::new());
    }
    Verdict::pass(Property::Liveness, history.ops.len() as u64)
}

fn stamp_of(op: &OpRecord) -> Option<WriteStamp> {
    match op.stamp {
        Some(Stamp::Ts(s)) => Some(s),
        _ => None,
    }
}

/// Writes in invocation order with their positions.
fn writes(history: &History) -> Vec<&OpRecord> {
    history.writes().collect()
}

fn write_of<'a>(ws: &[&'a OpRecord], value: Option<u64>) -> Option<(usize, &'a OpRecord)> {
    let v = value?;
    ws.iter().position(|w| w.value == Some(v)).map(|i| (i, ws[i]))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RegularityOptions {
    /// Lifespan-aware mode: a read is exempt when the write it returned lies
    /// more than `(M - 1) / 2` writes before the last write completed
    /// before it. Single-writer registers only.
    pub lifespan_aware: bool,
}

/// Every read invoked at or after `stab` returns the value of the last
/// write completed before it or of a write concurrent with it.
///
/// With several writers "the last write completed before R" is every
/// completed write that no other completed write follows in real time.
pub fn check_regularity(
    history: &History,
    kind: RegisterKind,
    stab: u64,
    opts: &RegularityOptions,
    modulus: Modulus,
) -> Verdict {
    let ws = writes(history);
    let mut checked = 0u64;
    for r in history.reads().filter(|r| r.invoke >= stab && r.ret.is_some()) {
        let completed: Vec<(usize, &OpRecord)> =
            ws.iter().enumerate().filter(|(_, w)| w.precedes(r)).map(|(i, w)| (i, *w)).collect();
        let last: Vec<(usize, &OpRecord)> = if kind == RegisterKind::Mwmr {
            completed.iter().filter(|(_, w)| !completed.iter().any(|(_, x)| w.precedes(x))).copied().collect()
        } else {
            completed.last().copied().into_iter().collect()
        };
        if last.is_empty() {
            // nothing to compare against
            continue;
        }
        checked += 1;
        let ok = |w: &OpRecord| w.value == r.value;
        if last.iter().any(|(_, w)| ok(w)) || ws.iter().any(|w| w.concurrent(r) && ok(w)) {
            continue;
        }
        if opts.lifespan_aware && kind != RegisterKind::Mwmr {
            if let Some((pos, _)) = write_of(&ws, r.value) {
                if pos < last[0].0 && (last[0].0 - pos) as u128 > modulus.lifespan() {
                    continue;
                }
            }
        }
        let base = last[0].1;
        return Verdict::fail(
            Property::Regularity,
            format!(
                "read {} [{}, {}] returned {:?}; last completed write {} wrote {:?}",
                r.id,
                r.invoke,
                r.ret.unwrap_or_default(),
                r.value,
                base.id,
                base.value
            ),
            vec![r.id, base.id],
        )
        .with_checked(checked);
    }
    Verdict::pass(Property::Regularity, checked)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InversionOptions {
    /// Skip read pairs separated by more than this many writes: writes
    /// invoked after the first read was invoked and before the second read
    /// returned.
    pub max_separation: Option<u64>,
}

/// Number of writes that can move the register between `r1` and `r2`.
pub fn separation(history: &History, r1: &OpRecord, r2: &OpRecord) -> u64 {
    let end = r2.ret.unwrap_or(u64::MAX);
    history.writes().filter(|w| w.invoke > r1.invoke && w.invoke < end).count() as u64
}

/// Fails iff two reads after `stab`, the first returning before the second
/// is invoked, return writes in the opposite order. Writes are ordered by
/// invocation for one writer and by `≻_to` for several.
pub fn check_no_inversion(history: &History, kind: RegisterKind, stab: u64, opts: &InversionOptions) -> Verdict {
    let ws = writes(history);
    let reads: Vec<(&OpRecord, usize, &OpRecord)> = history
        .reads()
        .filter(|r| r.invoke >= stab && r.ret.is_some())
        .filter_map(|r| write_of(&ws, r.value).map(|(i, w)| (r, i, w)))
        .collect();
    let mut checked = 0u64;
    for (r1, p1, w1) in &reads {
        for (r2, p2, w2) in &reads {
            if !r1.precedes(r2) {
                continue;
            }
            if let Some(max) = opts.max_separation {
                if separation(history, r1, r2) > max {
                    continue;
                }
            }
            checked += 1;
            let inverted = if kind == RegisterKind::Mwmr {
                match (stamp_of(w1), stamp_of(w2)) {
                    (Some(a), Some(b)) => a.after(&b),
                    _ => false,
                }
            } else {
                p2 < p1
            };
            if inverted {
                return Verdict::fail(
                    Property::NoInversion,
                    format!(
                        "read {} returned {:?} (write {}) but the later read {} returned the older {:?} (write {})",
                        r1.id, r1.value, w1.id, r2.id, r2.value, w2.id
                    ),
                    vec![r1.id, r2.id, w1.id, w2.id],
                )
                .with_checked(checked);
            }
        }
    }
    Verdict::pass(Property::NoInversion, checked)
}

/// `≻_to` restricted to the writes invoked at or after `tau` is a strict
/// total order (antisymmetric, total, transitive), and it extends the
/// real-time order of those writes.
pub fn check_write_total_order(history: &History, tau: u64) -> Verdict {
    let ws: Vec<(&OpRecord, WriteStamp)> = history
        .writes()
        .filter(|w| w.invoke >= tau && w.ret.is_some())
        .filter_map(|w| stamp_of(w).map(|s| (w, s)))
        .collect();
    let fail = |what: &str, ops: Vec<&OpRecord>| {
        let ids: Vec<u64> = ops.iter().map(|o| o.id).collect();
        Verdict::fail(Property::WriteTotalOrder, format!("{what}: writes {ids:?}"), ids)
    };
    for (i, (a, sa)) in ws.iter().enumerate() {
        for (b, sb) in &ws[i + 1..] {
            match (sa.after(sb), sb.after(sa)) {
                (true, true) => return fail("not antisymmetric", vec![a, b]),
                (false, false) => return fail("incomparable", vec![a, b]),
                _ => {}
            }
            if a.precedes(b) && !sb.after(sa) || b.precedes(a) && !sa.after(sb) {
                return fail("order contradicts real time", vec![a, b]);
            }
        }
    }
    for (a, sa) in &ws {
        for (b, sb) in &ws {
            if !sa.after(sb) {
                continue;
            }
            for (c, sc) in &ws {
                if sb.after(sc) && !sa.after(sc) {
                    return fail("not transitive", vec![a, b, c]);
                }
            }
        }
    }
    Verdict::pass(Property::WriteTotalOrder, ws.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epoch::Epoch;
    use crate::scenario::OpKind;
    use crate::types::ProcessId;

    fn op(id: u64, kind: OpKind, invoke: u64, ret: u64, value: u64) -> OpRecord {
        OpRecord {
            id,
            client: if kind == OpKind::Write { ProcessId::WRITER } else { ProcessId::READER },
            kind,
            invoke,
            ret: Some(ret),
            value: Some(value),
            stamp: None,
            branch: None,
        }
    }

    fn w(id: u64, i: u64, r: u64, v: u64) -> OpRecord {
        op(id, OpKind::Write, i, r, v)
    }

    fn rd(id: u64, i: u64, r: u64, v: u64) -> OpRecord {
        op(id, OpKind::Read, i, r, v)
    }

    fn regular(ops: Vec<OpRecord>) -> Verdict {
        check_regularity(&History { ops }, RegisterKind::SwsrRegular, 0, &Default::default(), Modulus::DESK)
    }

    #[test]
    fn sequential_read_sees_last_write() {
        assert!(regular(vec![w(0, 0, 10, 1), rd(1, 20, 30, 1)]).passed());
        assert!(regular(vec![w(0, 0, 10, 1), w(1, 12, 18, 2), rd(2, 20, 30, 1)]).failed());
    }

    #[test]
    fn concurrent_write_may_be_returned() {
        let ops = vec![w(0, 0, 10, 1), w(1, 15, 40, 2), rd(2, 20, 30, 2)];
        assert!(regular(ops.clone()).passed());
        let mut ops = ops;
        ops[2].value = Some(1);
        assert!(regular(ops).passed());
    }

    #[test]
    fn unknown_value_fails() {
        let v = regular(vec![w(0, 0, 10, 1), rd(1, 20, 30, 77)]);
        assert!(v.failed());
        assert_eq!(v.ops, vec![1, 0]);
    }

    #[test]
    fn liveness() {
        let mut ops = vec![w(0, 0, 10, 1)];
        assert!(check_liveness(&History { ops: ops.clone() }, false).passed());
        assert!(check_liveness(&History { ops: ops.clone() }, true).failed());
        ops.push(OpRecord { ret: None, ..rd(1, 20, 0, 0) });
        assert_eq!(check_liveness(&History { ops }, false).ops, vec![1]);
    }

    #[test]
    fn inversion_detected_and_separation_respected() {
        let ops = vec![w(0, 0, 10, 1), w(1, 20, 60, 2), rd(2, 25, 30, 2), rd(3, 35, 40, 1)];
        let h = History { ops };
        assert!(check_no_inversion(&h, RegisterKind::SwsrRegular, 0, &Default::default()).failed());
        let far = InversionOptions { max_separation: Some(0) };
        // write 1 is invoked before read 2, so the pair is separated by 0 writes
        assert!(check_no_inversion(&h, RegisterKind::SwsrRegular, 0, &far).failed());
        assert_eq!(separation(&h, &h.ops[2], &h.ops[3]), 0);
    }

    #[test]
    fn lifespan_exemption() {
        // nine writes after the value the read returns, M = 17
        let mut ops = vec![w(0, 0, 1, 100)];
        for i in 1..=9 {
            ops.push(w(i, i * 10, i * 10 + 1, 100 + i));
        }
        ops.push(rd(10, 200, 210, 100));
        let h = History { ops };
        let strict = check_regularity(&h, RegisterKind::SwsrAtomic, 0, &Default::default(), Modulus::DESK);
        assert!(strict.failed());
        let aware = RegularityOptions { lifespan_aware: true };
        assert!(check_regularity(&h, RegisterKind::SwsrAtomic, 0, &aware, Modulus::DESK).passed());
        // with eight intervening writes the exemption does not apply
        let mut h8 = h.clone();
        h8.ops.remove(1);
        assert!(check_regularity(&h8, RegisterKind::SwsrAtomic, 0, &aware, Modulus::DESK).failed());
    }

    fn mw(id: u64, i: u64, r: u64, v: u64, epoch: Epoch, seq: u64, writer: u32) -> OpRecord {
        OpRecord {
            client: ProcessId::client(writer),
            stamp: Some(Stamp::Ts(WriteStamp { epoch, seq, writer })),
            ..w(id, i, r, v)
        }
    }

    #[test]
    fn total_order() {
        let e = Epoch::initial(3).unwrap();
        let ok = History { ops: vec![mw(0, 0, 5, 1, e, 1, 1), mw(1, 2, 9, 2, e, 1, 2), mw(2, 10, 12, 3, e, 2, 1)] };
        assert!(check_write_total_order(&ok, 0).passed());
        let dup = History { ops: vec![mw(0, 0, 5, 1, e, 1, 1), mw(1, 2, 9, 2, e, 1, 1)] };
        assert!(check_write_total_order(&dup, 0).failed());
        let a = Epoch::new(3, 1, &[2, 3, 4]).unwrap();
        let b = Epoch::new(3, 2, &[1, 5, 6]).unwrap();
        let inc = History { ops: vec![mw(0, 0, 5, 1, a, 1, 1), mw(1, 2, 9, 2, b, 1, 2)] };
        assert!(check_write_total_order(&inc, 0).failed());
        // pre-τ writes are excluded
        assert!(check_write_total_order(&inc, 1).passed());
        let backwards = History { ops: vec![mw(0, 0, 5, 1, e, 3, 1), mw(1, 6, 9, 2, e, 2, 2)] };
        assert!(check_write_total_order(&backwards, 0).failed());
    }
}
