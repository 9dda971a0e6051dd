//! Event log of one simulation run and the operation history derived from
//! it.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::client::BcastId;
use crate::multiwriter::WriteStamp;
use crate::regular::Branch;
use crate::scenario::{FaultScope, OpKind, RegisterKind, Timing, Transport};
use crate::types::{Body, Modulus, ProcessId, SeqNo, Value, Word};

/// Ground truth about the run that protocol code never sees but the
/// checkers may use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub scenario: String,
    pub seed: u64,
    pub tau_no_tr: u64,
    pub n: u32,
    pub t: u32,
    pub m: u32,
    pub register: RegisterKind,
    pub timing: Timing,
    pub transport: Transport,
    pub modulus: Modulus,
    pub seq_bound: u64,
    pub byzantine: Vec<u32>,
    pub max_events: u64,
}

impl TraceHeader {
    pub fn is_correct(&self, server: u32) -> bool {
        !self.byzantine.contains(&server)
    }

    pub fn correct_servers(&self) -> impl Iterator<Item = u32> + '_ {
        (1..=self.n).filter(|s| self.is_correct(*s))
    }
}

/// The timestamp attached to a written or returned value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stamp {
    Wsn(#[serde(with = "crate::types::seqno")] SeqNo),
    Ts(WriteStamp),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerView {
    pub server: u32,
    pub last_val: Word,
    pub helping: Vec<Option<Word>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkDir {
    /// client to server
    Forward,
    /// server to client
    Backward,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    Invoke {
        op: u64,
        op_kind: OpKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<Value>,
    },
    Return {
        op: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<Value>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stamp: Option<Stamp>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        branch: Option<Branch>,
    },
    /// A client invoked `ss_broadcast`.
    Broadcast {
        id: BcastId,
        reg: u32,
        body: Body,
    },
    /// `ss_deliver` at the event's server. `id` is `None` for a message
    /// that originates in the initial link state; its body is then
    /// recorded.
    Deliver {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<BcastId>,
        from: ProcessId,
        reg: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        body: Option<Body>,
    },
    /// The broadcast returned to its invoker.
    Complete {
        id: BcastId,
    },
    /// A server reply reached the event's client.
    Reply {
        from: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tag: Option<BcastId>,
        body: Body,
    },
    /// A register read inside a multi-writer operation returned.
    SubRead {
        reg: u32,
        word: Word,
    },
    /// Correct servers' state when a write round on `reg` returned.
    Snapshot {
        reg: u32,
        word: Word,
        invoked: u64,
        servers: Vec<ServerView>,
    },
    Fault {
        scope: FaultScope,
    },
    /// A packet from the initial link content, or an ack it provoked,
    /// arrived.
    Garbage {
        client: ProcessId,
        server: u32,
        dir: LinkDir,
    },
    /// Both directions of the link between `client` and `server` drained
    /// after the last garbage packet.
    LinkClean {
        client: ProcessId,
        server: u32,
    },
    /// A sender finished the two-phase handshake for broadcast `id` with
    /// `server`.
    Handshake {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<BcastId>,
        server: u32,
    },
    End {
        events: u64,
        max_events_hit: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: u64,
    pub pid: ProcessId,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpRecord {
    pub id: u64,
    pub client: ProcessId,
    pub kind: OpKind,
    pub invoke: u64,
    pub ret: Option<u64>,
    /// The value written, or the value a completed read returned.
    pub value: Option<Value>,
    pub stamp: Option<Stamp>,
    pub branch: Option<Branch>,
}

impl OpRecord {
    pub fn is_write(&self) -> bool {
        self.kind == OpKind::Write
    }

    /// `self` returned strictly before `other` was invoked.
    pub fn precedes(&self, other: &OpRecord) -> bool {
        self.ret.is_some_and(|r| r < other.invoke)
    }

    pub fn concurrent(&self, other: &OpRecord) -> bool {
        !self.precedes(other) && !other.precedes(self)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct History {
    /// Ordered by invocation time, then operation id.
    pub ops: Vec<OpRecord>,
}

impl History {
    pub fn writes(&self) -> impl Iterator<Item = &OpRecord> {
        self.ops.iter().filter(|o| o.is_write())
    }

    pub fn reads(&self) -> impl Iterator<Item = &OpRecord> {
        self.ops.iter().filter(|o| !o.is_write())
    }
}

impl Trace {
    pub fn history(&self) -> History {
        let mut ops: BTreeMap<u64, OpRecord> = BTreeMap::new();
        for ev in &self.events {
            match &ev.kind {
                EventKind::Invoke { op, op_kind, value } => {
                    ops.insert(
                        *op,
                        OpRecord {
                            id: *op,
                            client: ev.pid,
                            kind: *op_kind,
                            invoke: ev.time,
                            ret: None,
                            value: *value,
                            stamp: None,
                            branch: None,
                        },
                    );
                }
                EventKind::Return { op, value, stamp, branch } => {
                    if let Some(rec) = ops.get_mut(op) {
                        rec.ret = Some(ev.time);
                        if rec.kind == OpKind::Read {
                            rec.value = *value;
                        }
                        rec.stamp = *stamp;
                        rec.branch = *branch;
                    }
                }
                _ => {}
            }
        }
        let mut ops: Vec<OpRecord> = ops.into_values().collect();
        ops.sort_by_key(|o| (o.invoke, o.id));
        History { ops }
    }

    /// Whether the run stopped on the event budget.
    pub fn max_events_hit(&self) -> bool {
        self.events.iter().rev().any(|e| matches!(e.kind, EventKind::End { max_events_hit: true, .. }))
    }
}
