//! Post-hoc trace checkers.
//!
//! Checkers read ground truth that protocol code never sees: which servers
//! are Byzantine, `τ_no_tr`, and real-time invocation and return events.
//! Each returns a [`Verdict`]; failures carry a witness naming the
//! offending operations or broadcast.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::scenario::RegisterKind;
use crate::trace::{History, OpRecord, Trace};
use crate::types::ProcessId;

pub mod agreement;
pub mod broadcast;
pub mod linearizable;
pub mod register;

pub use agreement::check_agreement;
pub use broadcast::check_ssbroadcast;
pub use linearizable::{check_linearizable_small, linearizable};
pub use register::{
    check_liveness, check_no_inversion, check_regularity, check_write_total_order, InversionOptions, RegularityOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Liveness,
    Regularity,
    NoInversion,
    WriteTotalOrder,
    Linearizable,
    Ssbroadcast,
    Agreement,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Liveness,
        Property::Regularity,
        Property::NoInversion,
        Property::WriteTotalOrder,
        Property::Linearizable,
        Property::Ssbroadcast,
        Property::Agreement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Liveness => "liveness",
            Property::Regularity => "regularity",
            Property::NoInversion => "no_inversion",
            Property::WriteTotalOrder => "write_total_order",
            Property::Linearizable => "linearizable",
            Property::Ssbroadcast => "ssbroadcast",
            Property::Agreement => "agreement",
        }
    }

    pub fn from_name(s: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Properties that make sense for traces of `kind`.
    pub fn defaults(kind: RegisterKind) -> Vec<Property> {
        let mut v = alloc::vec![Property::Liveness, Property::Regularity, Property::Ssbroadcast, Property::Agreement];
        if kind.is_atomic() {
            v.push(Property::NoInversion);
            v.push(Property::Linearizable);
        }
        if kind == RegisterKind::Mwmr {
            v.push(Property::WriteTotalOrder);
        }
        v.sort();
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// The precondition does not hold, e.g. no operation qualifies as a
    /// stabilization point.
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub property: Property,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    /// Operation ids involved in the witness.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ops: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stab_point: Option<u64>,
    /// How many items (reads, pairs, windows, broadcasts, snapshots) were
    /// examined.
    pub checked: u64,
}

impl Verdict {
    pub fn pass(property: Property, checked: u64) -> Self {
        Verdict { property, outcome: Outcome::Pass, witness: None, ops: Vec::new(), stab_point: None, checked }
    }

    pub fn fail(property: Property, witness: String, ops: Vec<u64>) -> Self {
        Verdict { property, outcome: Outcome::Fail, witness: Some(witness), ops, stab_point: None, checked: 0 }
    }

    pub fn not_applicable(property: Property, why: &str) -> Self {
        Verdict {
            property,
            outcome: Outcome::NotApplicable,
            witness: Some(String::from(why)),
            ops: Vec::new(),
            stab_point: None,
            checked: 0,
        }
    }

    pub fn with_stab(mut self, stab: Option<u64>) -> Self {
        self.stab_point = stab;
        self
    }

    pub fn with_checked(mut self, checked: u64) -> Self {
        self.checked = checked;
        self
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Fail
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{}: {:?}", self.property.name(), self.outcome);
        if let Some(p) = self.stab_point {
            s.push_str(&format!(" (stab_point {p}, checked {})", self.checked));
        } else {
            s.push_str(&format!(" (checked {})", self.checked));
        }
        if let Some(w) = &self.witness {
            s.push_str(" - ");
            s.push_str(w);
        }
        s
    }
}

/// Time from which the register's semantics are required to hold.
///
/// * regular register: `τ_1w`, the return of the first write invoked at or
///   after `τ_no_tr`;
/// * atomic registers: the return of the first read invoked after `τ_1w`
///   that is not concurrent with any write, taken per reader and maximized
///   over readers that read after `τ_1w`;
/// * multi-writer register: every underlying register must first have been
///   written after `τ_no_tr` (the latest such first write returning at
///   `τ_all`); then, per client, the first operation invoked after `τ_all`
///   that is concurrent with no other operation; the point is the latest
///   return among those, and an isolated operation always ends it.
///
/// `None` when no operation qualifies.
pub fn estimate_stab_point(trace: &Trace, history: &History) -> Option<u64> {
    let tau = trace.header.tau_no_tr;
    if trace.header.register == RegisterKind::Mwmr {
        return mwmr_stab_point(trace.header.m, tau, history);
    }
    let tau_1w = history.writes().find(|w| w.invoke >= tau)?.ret?;
    if !trace.header.register.is_atomic() {
        return Some(tau_1w);
    }
    let mut readers: Vec<_> = history.reads().map(|r| r.client).collect();
    readers.sort();
    readers.dedup();
    let mut point = tau_1w;
    for c in readers {
        let mine = || history.reads().filter(move |r| r.client == c && r.invoke > tau_1w);
        if mine().next().is_none() {
            continue;
        }
        let isolated = mine().find(|r| r.ret.is_some() && history.writes().all(|w| !w.concurrent(r)))?;
        point = point.max(isolated.ret?);
    }
    Some(point)
}

fn mwmr_stab_point(m: u32, tau: u64, history: &History) -> Option<u64> {
    let mut all = tau;
    for c in (1..=m).map(ProcessId::client) {
        let first = history.writes().find(|w| w.client == c && w.invoke >= tau)?;
        all = all.max(first.ret?);
    }
    let isolated = |o: &&OpRecord| o.ret.is_some() && history.ops.iter().all(|p| p.id == o.id || !p.concurrent(o));
    let mut point = all;
    for c in (1..=m).map(ProcessId::client) {
        let first = history.ops.iter().filter(|o| o.client == c && o.invoke > all).find(isolated)?;
        point = point.max(first.ret?);
    }
    Some(point)
}

/// Per-run checker configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckOptions {
    pub regularity: RegularityOptions,
    pub inversion: InversionOptions,
    /// Helping agreement threshold override; `None` uses `4t + 1`
    /// asynchronously and `t + 1` synchronously.
    pub help_threshold: Option<usize>,
    /// Largest window for the linearizability search.
    pub window: usize,
}

impl CheckOptions {
    pub fn strict() -> Self {
        CheckOptions { window: linearizable::DEFAULT_LIMIT, ..Default::default() }
    }
}

/// Runs `props` over `trace`.
pub fn check_trace(trace: &Trace, props: &[Property], opts: &CheckOptions) -> Vec<Verdict> {
    let history = trace.history();
    let stab = estimate_stab_point(trace, &history);
    let need_stab = |p: Property, f: &dyn Fn(u64) -> Verdict| match stab {
        Some(s) => f(s).with_stab(Some(s)),
        None => Verdict::not_applicable(p, "no operation qualifies as a stabilization point"),
    };
    let window = if opts.window == 0 { linearizable::DEFAULT_LIMIT } else { opts.window };
    props
        .iter()
        .map(|&p| match p {
            Property::Liveness => check_liveness(&history, trace.max_events_hit()),
            Property::Regularity => need_stab(p, &|s| {
                check_regularity(&history, trace.header.register, s, &opts.regularity, trace.header.modulus)
            }),
            Property::NoInversion => {
                need_stab(p, &|s| check_no_inversion(&history, trace.header.register, s, &opts.inversion))
            }
            Property::WriteTotalOrder => need_stab(p, &|s| check_write_total_order(&history, s)),
            Property::Linearizable => need_stab(p, &|s| check_linearizable_small(&history, s, window)),
            Property::Ssbroadcast => check_ssbroadcast(trace),
            Property::Agreement => check_agreement(trace, opts.help_threshold),
        })
        .collect()
}
