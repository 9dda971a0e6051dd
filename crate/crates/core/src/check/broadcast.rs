//! The six ss-broadcast properties, checked from transport-level trace
//! events.
//!
//! On data-link traces only broadcasts invoked after every link of the
//! sender has drained its garbage are held to the contract. Deliveries
//! without a broadcast id are accepted while they precede, on their link,
//! every delivery of a checked broadcast: they are initial link content.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Property, Verdict};
use crate::client::BcastId;
use crate::scenario::{FaultScope, Transport};
use crate::trace::{EventKind, Trace};
use crate::types::ProcessId;

struct Bcast {
    sender: ProcessId,
    reg: u32,
    index: usize,
    time: u64,
    complete: Option<u64>,
    checked: bool,
}

struct Delivery {
    index: usize,
    time: u64,
    server: u32,
    from: ProcessId,
    reg: u32,
    id: Option<BcastId>,
}

fn fail(what: &str, detail: String) -> Verdict {
    Verdict::fail(Property::Ssbroadcast, format!("{what}: {detail}"), Vec::new())
}

pub fn check_ssbroadcast(trace: &Trace) -> Verdict {
    let h = &trace.header;
    let need = (h.n - 2 * h.t) as usize;
    let datalink = matches!(h.transport, Transport::Datalink { .. });
    let mut bcasts: BTreeMap<BcastId, Bcast> = BTreeMap::new();
    let mut deliveries: Vec<Delivery> = Vec::new();
    let mut last_link_fault: Option<usize> = None;
    // (client, server) -> index of the first LinkClean after the last fault
    let mut clean: BTreeMap<(ProcessId, u32), usize> = BTreeMap::new();
    let mut stopped_early = false;
    for (index, ev) in trace.events.iter().enumerate() {
        match &ev.kind {
            EventKind::Broadcast { id, reg, .. } => {
                bcasts.insert(
                    *id,
                    Bcast { sender: ev.pid, reg: *reg, index, time: ev.time, complete: None, checked: true },
                );
            }
            EventKind::Complete { id } => {
                if let Some(b) = bcasts.get_mut(id) {
                    b.complete.get_or_insert(ev.time);
                }
            }
            EventKind::Deliver { id, from, reg, .. } => {
                if h.is_correct(ev.pid.index) {
                    deliveries.push(Delivery {
                        index,
                        time: ev.time,
                        server: ev.pid.index,
                        from: *from,
                        reg: *reg,
                        id: *id,
                    });
                }
            }
            EventKind::Fault { scope: FaultScope::Links | FaultScope::All } => {
                last_link_fault = Some(index);
                clean.clear();
            }
            EventKind::LinkClean { client, server } => {
                clean.entry((*client, *server)).or_insert(index);
            }
            EventKind::End { max_events_hit, .. } => stopped_early = *max_events_hit,
            _ => {}
        }
    }
    if datalink && last_link_fault.is_some() {
        for b in bcasts.values_mut() {
            b.checked = (1..=h.n).all(|s| clean.get(&(b.sender, s)).is_some_and(|c| *c < b.index));
        }
    }
    let correct: Vec<u32> = h.correct_servers().collect();

    // per (server, sender): delivered checked ids in trace order
    let mut per_link: BTreeMap<(u32, ProcessId), Vec<(usize, BcastId)>> = BTreeMap::new();
    for d in &deliveries {
        if let Some(id) = d.id {
            let Some(b) = bcasts.get(&id) else {
                return fail("validity", format!("server {} delivered unknown broadcast {id}", d.server));
            };
            if b.sender != d.from || b.reg != d.reg || d.index < b.index {
                return fail("validity", format!("server {} delivered broadcast {id} with the wrong origin", d.server));
            }
            if b.checked {
                per_link.entry((d.server, d.from)).or_default().push((d.index, id));
            }
        }
    }
    for d in deliveries.iter().filter(|d| d.id.is_none()) {
        if let Some(v) = per_link.get(&(d.server, d.from)) {
            if v.first().is_some_and(|(i, _)| *i < d.index) {
                return fail(
                    "validity",
                    format!(
                        "server {} delivered a message from {} that no broadcast sent, at {}",
                        d.server, d.from, d.time
                    ),
                );
            }
        }
    }
    for ((server, sender), v) in &per_link {
        if let Some(w) = v.windows(2).find(|w| w[0].1 == w[1].1) {
            return fail("no duplication", format!("server {server} delivered broadcast {} twice", w[0].1));
        }
        if let Some(w) = v.windows(2).find(|w| w[0].1 > w[1].1) {
            return fail(
                "order delivery",
                format!("server {server} delivered {} from {sender} after {}", w[1].1, w[0].1),
            );
        }
    }
    let mut checked = 0u64;
    for (id, b) in bcasts.iter().filter(|(_, b)| b.checked) {
        checked += 1;
        let got: Vec<(u32, u64)> =
            deliveries.iter().filter(|d| d.id == Some(*id)).map(|d| (d.server, d.time)).collect();
        let Some(done) = b.complete else {
            if stopped_early {
                continue;
            }
            return fail("termination", format!("broadcast {id} by {} at {} never returned", b.sender, b.time));
        };
        let inside = correct.iter().filter(|s| got.iter().any(|(x, t)| x == *s && *t < done)).count();
        if inside < need {
            return fail(
                "synchronized delivery",
                format!("broadcast {id} returned at {done} after only {inside} correct deliveries (need {need})"),
            );
        }
        if !stopped_early {
            if let Some(s) = correct.iter().find(|s| !got.iter().any(|(x, _)| x == *s)) {
                return fail("eventual delivery", format!("server {s} never delivered broadcast {id}"));
            }
        }
    }
    Verdict::pass(Property::Ssbroadcast, checked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{RegisterKind, Timing};
    use crate::trace::{TraceEvent, TraceHeader};
    use crate::types::{Body, Modulus};
    use alloc::vec;

    fn header() -> TraceHeader {
        TraceHeader {
            scenario: String::new(),
            seed: 0,
            tau_no_tr: 0,
            n: 4,
            t: 1,
            m: 1,
            register: RegisterKind::SwsrRegular,
            timing: Timing::Sync { delta: 3 },
            transport: Transport::Oracle,
            modulus: Modulus::DESK,
            seq_bound: 8,
            byzantine: vec![4],
            max_events: 100,
        }
    }

    fn ev(time: u64, pid: ProcessId, kind: EventKind) -> TraceEvent {
        TraceEvent { time, pid, kind }
    }

    fn bcast(id: BcastId, time: u64) -> TraceEvent {
        ev(time, ProcessId::WRITER, EventKind::Broadcast { id, reg: 1, body: Body::Read { new_read: true } })
    }

    fn deliver(id: Option<BcastId>, s: u32, time: u64) -> TraceEvent {
        ev(time, ProcessId::server(s), EventKind::Deliver { id, from: ProcessId::WRITER, reg: 1, body: None })
    }

    fn complete(id: BcastId, time: u64) -> TraceEvent {
        ev(time, ProcessId::WRITER, EventKind::Complete { id })
    }

    fn end() -> TraceEvent {
        ev(99, ProcessId::ENGINE, EventKind::End { events: 1, max_events_hit: false })
    }

    fn good() -> Vec<TraceEvent> {
        vec![bcast(0, 0), deliver(Some(0), 1, 1), deliver(Some(0), 2, 2), complete(0, 3), deliver(Some(0), 3, 4), end()]
    }

    fn check(events: Vec<TraceEvent>) -> Verdict {
        check_ssbroadcast(&Trace { header: header(), events })
    }

    #[test]
    fn clean_trace_passes() {
        assert!(check(good()).passed());
    }

    #[test]
    fn each_property_can_fail() {
        let mut e = good();
        e.remove(3);
        assert!(check(e).witness.unwrap().starts_with("termination"));
        let mut e = good();
        e.remove(4);
        assert!(check(e).witness.unwrap().starts_with("eventual"));
        let mut e = good();
        e[2].time = 5;
        let e2 = e.remove(2);
        e.insert(4, e2);
        assert!(check(e).witness.unwrap().starts_with("synchronized"));
        let mut e = good();
        e.insert(5, deliver(Some(0), 1, 6));
        assert!(check(e).witness.unwrap().starts_with("no duplication"));
        let mut e = good();
        e.insert(5, deliver(None, 1, 6));
        assert!(check(e).witness.unwrap().starts_with("validity"));
        let mut e = good();
        e.insert(1, bcast(1, 0));
        e.insert(2, deliver(Some(1), 1, 1));
        e.push(complete(1, 10));
        e.push(deliver(Some(1), 2, 11));
        e.push(deliver(Some(1), 3, 11));
        assert!(check(e).witness.unwrap().starts_with("order"));
    }

    #[test]
    fn initial_link_content_is_tolerated() {
        let mut e = good();
        e.insert(0, deliver(None, 1, 0));
        assert!(check(e).passed());
    }

    #[test]
    fn byzantine_deliveries_are_ignored() {
        let mut e = good();
        e.insert(5, deliver(Some(0), 4, 6));
        e.insert(5, deliver(Some(0), 4, 6));
        assert!(check(e).passed());
    }
}
