//! Experiment description: system size, timing model, transport, register
//! construction, adversary, fault schedule and workload.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epoch::MAX_K;
use crate::types::{Modulus, ProcessId, Value};

pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum Timing {
    /// Message delays are finite but unknown; the simulator draws them from
    /// `[1, d_max]`.
    Async { d_max: u64 },
    /// Every message arrives within `delta` ticks.
    Sync { delta: u64 },
}

impl Timing {
    pub fn max_delay(self) -> u64 {
        match self {
            Timing::Async { d_max } => d_max,
            Timing::Sync { delta } => delta,
        }
    }

    pub fn is_sync(self) -> bool {
        matches!(self, Timing::Sync { .. })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Transport {
    #[default]
    Oracle,
    /// Alternating-bit handshakes over links holding at most `cap` packets
    /// per direction.
    Datalink { cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegisterKind {
    SwsrRegular,
    SwsrAtomic,
    /// One atomic register written by `client:1` and read by every client.
    Swmr,
    Mwmr,
}

impl RegisterKind {
    pub fn is_atomic(self) -> bool {
        !matches!(self, RegisterKind::SwsrRegular)
    }

    pub fn is_single_writer(self) -> bool {
        matches!(self, RegisterKind::SwsrRegular | RegisterKind::SwsrAtomic)
    }
}

/// How message delays are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    /// Uniform over `[1, max]`.
    #[default]
    Uniform,
    /// Either 1 or `max`, each with probability 1/2.
    Bimodal,
    /// Delays are fixed per directed client-server link for the whole run.
    /// Each client is fast (every link delay 1) or slow (each link uniform
    /// over `[1, max]`) with probability 1/2. Engine-injected garbage still
    /// uses the bimodal draw.
    PerLink,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Silent,
    RandomReply,
    Equivocate,
    HelpPoisoner,
    StaleReplay,
}

impl Strategy {
    pub const ALL: [Strategy; 5] =
        [Strategy::Silent, Strategy::RandomReply, Strategy::Equivocate, Strategy::HelpPoisoner, Strategy::StaleReplay];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Silent => "silent",
            Strategy::RandomReply => "random_reply",
            Strategy::Equivocate => "equivocate",
            Strategy::HelpPoisoner => "help_poisoner",
            Strategy::StaleReplay => "stale_replay",
        }
    }

    pub fn from_name(s: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    #[serde(default)]
    pub strategy: Strategy,
    /// Server indices under adversary control. When absent, `t` servers are
    /// drawn from the run's seed.
    #[serde(default)]
    pub byzantine: Option<Vec<u32>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultScope {
    /// `last_val` and helping values of every server.
    Servers,
    /// Writer sequence numbers and reader `(pwsn, pv)` pairs.
    Clients,
    /// Reader `pwsn` moved into the half ring ahead of the writer.
    ReaderFuture,
    /// Garbage packets on links, arbitrary receiver state.
    Links,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub time: u64,
    pub scope: FaultScope,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Read,
    Write,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpSpec {
    /// Earliest invocation time; a client still busy with an earlier
    /// operation invokes this one right after that operation returns.
    pub time: u64,
    pub client: u32,
    pub kind: OpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
}

impl OpSpec {
    pub fn write(time: u64, client: u32, value: Value) -> Self {
        OpSpec { time, client, kind: OpKind::Write, value: Some(value) }
    }

    pub fn read(time: u64, client: u32) -> Self {
        OpSpec { time, client, kind: OpKind::Read, value: None }
    }
}

/// Deliberately broken protocol variants, used to check that the checkers
/// are not vacuous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// Servers ignore `new_read` and never reset the helping value.
    SkipHelpingReset,
    /// The atomic reader returns a quorum value even when its sequence
    /// number is not newer than `pwsn`.
    SkipInversionGuard,
    /// The writer's helping predicate needs only `2t + 1` matching acks.
    WeakHelpPredicate,
}

fn default_m() -> u32 {
    1
}

fn default_modulus() -> Modulus {
    Modulus::PRODUCTION
}

fn default_seq_bound() -> u64 {
    8
}

fn default_max_events() -> u64 {
    DEFAULT_MAX_EVENTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub n: u32,
    pub t: u32,
    /// Number of client processes (multi-reader and multi-writer registers).
    #[serde(default = "default_m")]
    pub m: u32,
    pub timing: Timing,
    #[serde(default)]
    pub transport: Transport,
    #[serde(default)]
    pub scheduler: Scheduler,
    pub register: RegisterKind,
    #[serde(default = "default_modulus")]
    pub modulus: Modulus,
    #[serde(default = "default_seq_bound")]
    pub seq_bound: u64,
    #[serde(default)]
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
    /// No transient fault happens at or after this time. Protocol code never
    /// sees it; only the injector and the checkers do.
    #[serde(default)]
    pub tau_no_tr: u64,
    pub workload: Vec<OpSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
    #[serde(default)]
    pub mutations: Vec<Mutation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("asynchronous links need n >= 8t + 1 (t < n/8), got n = {n}, t = {t}")]
    AsyncThreshold { n: u32, t: u32 },
    #[error("synchronous links need n >= 3t + 1 (t < n/3), got n = {n}, t = {t}")]
    SyncThreshold { n: u32, t: u32 },
    #[error("n must be positive")]
    NoServers,
    #[error("message delay bound must be at least 1 tick")]
    ZeroDelay,
    #[error("link capacity must be at least 1")]
    ZeroCapacity,
    #[error("the data-link transport is only modelled for asynchronous links")]
    DatalinkNeedsAsync,
    #[error("{0:?} needs m >= 1, single-writer single-reader registers need m = 1")]
    BadClientCount(RegisterKind),
    #[error("multi-writer registers support at most {MAX_K} clients")]
    TooManyClients,
    #[error("seq_bound must be at least 1")]
    ZeroSeqBound,
    #[error("fault at time {time} is not before tau_no_tr = {tau_no_tr}")]
    FaultAfterStabilization { time: u64, tau_no_tr: u64 },
    #[error("workload entry {index}: client {client} outside 1..={m}")]
    BadClient { index: usize, client: u32, m: u32 },
    #[error("workload entry {index}: only client 1 writes this register")]
    NotTheWriter { index: usize },
    #[error("workload entry {index}: writes need a value")]
    MissingValue { index: usize },
    #[error("workload entry {index}: reads carry no value")]
    ValueOnRead { index: usize },
    #[error("byzantine set has {got} servers but t = {t}")]
    TooManyByzantine { got: usize, t: u32 },
    #[error("byzantine server {0} is not in 1..=n or listed twice")]
    BadByzantine(u32),
    #[error("max_events must be positive")]
    ZeroBudget,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let (n, t) = (self.n, self.t);
        if n == 0 {
            return Err(ScenarioError::NoServers);
        }
        match self.timing {
            Timing::Async { .. } if n < 8 * t + 1 => return Err(ScenarioError::AsyncThreshold { n, t }),
            Timing::Sync { .. } if n < 3 * t + 1 => return Err(ScenarioError::SyncThreshold { n, t }),
            _ => {}
        }
        if self.timing.max_delay() == 0 {
            return Err(ScenarioError::ZeroDelay);
        }
        if let Transport::Datalink { cap } = self.transport {
            if cap == 0 {
                return Err(ScenarioError::ZeroCapacity);
            }
            if self.timing.is_sync() {
                return Err(ScenarioError::DatalinkNeedsAsync);
            }
        }
        if self.m == 0 || (self.register.is_single_writer() && self.m != 1) {
            return Err(ScenarioError::BadClientCount(self.register));
        }
        if self.register == RegisterKind::Mwmr && self.m > u32::from(MAX_K) {
            return Err(ScenarioError::TooManyClients);
        }
        if self.seq_bound == 0 {
            return Err(ScenarioError::ZeroSeqBound);
        }
        if self.max_events == 0 {
            return Err(ScenarioError::ZeroBudget);
        }
        for f in &self.faults {
            if f.time >= self.tau_no_tr {
                return Err(ScenarioError::FaultAfterStabilization { time: f.time, tau_no_tr: self.tau_no_tr });
            }
        }
        for (index, op) in self.workload.iter().enumerate() {
            if op.client == 0 || op.client > self.m {
                return Err(ScenarioError::BadClient { index, client: op.client, m: self.m });
            }
            match op.kind {
                OpKind::Write if op.value.is_none() => return Err(ScenarioError::MissingValue { index }),
                OpKind::Read if op.value.is_some() => return Err(ScenarioError::ValueOnRead { index }),
                OpKind::Write if self.register == RegisterKind::Swmr && op.client != 1 => {
                    return Err(ScenarioError::NotTheWriter { index })
                }
                _ => {}
            }
        }
        if let Some(set) = &self.adversary.byzantine {
            if set.len() > t as usize {
                return Err(ScenarioError::TooManyByzantine { got: set.len(), t });
            }
            for (i, &s) in set.iter().enumerate() {
                if s == 0 || s > n || set[..i].contains(&s) {
                    return Err(ScenarioError::BadByzantine(s));
                }
            }
        }
        Ok(())
    }

    pub fn has_mutation(&self, m: Mutation) -> bool {
        self.mutations.contains(&m)
    }

    /// Number of underlying register instances held by every server.
    pub fn registers(&self) -> u32 {
        match self.register {
            RegisterKind::Mwmr => self.m,
            _ => 1,
        }
    }

    /// Helping slots per register instance.
    pub fn slots(&self) -> u32 {
        match self.register {
            RegisterKind::SwsrRegular | RegisterKind::SwsrAtomic => 1,
            RegisterKind::Swmr | RegisterKind::Mwmr => self.m,
        }
    }

    /// Label parameter of the epoch scheme: one label per client, at least 2.
    pub fn epoch_k(&self) -> u8 {
        self.m.max(2) as u8
    }

    /// The process that runs operations for workload client `c` of kind
    /// `kind`.
    pub fn client_pid(&self, client: u32, kind: OpKind) -> ProcessId {
        match (self.register, kind) {
            (RegisterKind::SwsrRegular | RegisterKind::SwsrAtomic, OpKind::Write) => ProcessId::WRITER,
            (RegisterKind::SwsrRegular | RegisterKind::SwsrAtomic, OpKind::Read) => ProcessId::READER,
            _ => ProcessId::client(client),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn base() -> Scenario {
        Scenario {
            name: String::new(),
            n: 9,
            t: 1,
            m: 1,
            timing: Timing::Async { d_max: 10 },
            transport: Transport::Oracle,
            scheduler: Scheduler::Uniform,
            register: RegisterKind::SwsrRegular,
            modulus: Modulus::DESK,
            seq_bound: 8,
            adversary: AdversarySpec::default(),
            faults: vec![FaultSpec { time: 0, scope: FaultScope::Servers }],
            tau_no_tr: 1,
            workload: vec![OpSpec::write(0, 1, 7), OpSpec::read(5, 1)],
            seed: 1,
            max_events: DEFAULT_MAX_EVENTS,
            mutations: vec![],
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(base().validate(), Ok(()));
        let s = Scenario { n: 8, ..base() };
        assert_eq!(s.validate(), Err(ScenarioError::AsyncThreshold { n: 8, t: 1 }));
        let s = Scenario { n: 4, timing: Timing::Sync { delta: 5 }, ..base() };
        assert_eq!(s.validate(), Ok(()));
        let s = Scenario { n: 3, timing: Timing::Sync { delta: 5 }, ..base() };
        assert_eq!(s.validate(), Err(ScenarioError::SyncThreshold { n: 3, t: 1 }));
    }

    #[test]
    fn faults_must_precede_tau_no_tr() {
        let s = Scenario { tau_no_tr: 0, ..base() };
        assert!(matches!(s.validate(), Err(ScenarioError::FaultAfterStabilization { .. })));
    }

    #[test]
    fn workload_shape() {
        let mut s = base();
        s.workload.push(OpSpec { time: 1, client: 1, kind: OpKind::Write, value: None });
        assert_eq!(s.validate(), Err(ScenarioError::MissingValue { index: 2 }));
        let mut s = base();
        s.workload.push(OpSpec::read(1, 2));
        assert!(matches!(s.validate(), Err(ScenarioError::BadClient { .. })));
        let s = Scenario { register: RegisterKind::Swmr, m: 3, workload: vec![OpSpec::write(0, 2, 1)], ..base() };
        assert_eq!(s.validate(), Err(ScenarioError::NotTheWriter { index: 0 }));
    }

    #[test]
    fn byzantine_set() {
        let mut s = base();
        s.adversary.byzantine = Some(vec![3, 4]);
        assert!(matches!(s.validate(), Err(ScenarioError::TooManyByzantine { .. })));
        s.adversary.byzantine = Some(vec![10]);
        assert_eq!(s.validate(), Err(ScenarioError::BadByzantine(10)));
    }

    #[test]
    fn datalink_requires_async() {
        let s =
            Scenario { n: 4, timing: Timing::Sync { delta: 3 }, transport: Transport::Datalink { cap: 3 }, ..base() };
        assert_eq!(s.validate(), Err(ScenarioError::DatalinkNeedsAsync));
    }
}
