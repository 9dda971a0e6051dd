//! Deterministic discrete-event engine.
//!
//! Events are ordered by `(time, insertion sequence)`, every random choice
//! comes from one ChaCha stream seeded by the scenario, and all per-process
//! state lives in vectors indexed by process. A scenario therefore maps to
//! exactly one trace.
//!
//! Handlers take zero simulated time: everything a delivery or reply
//! triggers is stamped with the time of that event.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary::Adversary;
use crate::atomic::{self, AtomicRead, ReadOptions, ReaderMemory};
use crate::client::{BcastId, Input, Io, Note, Thresholds, TimerId};
use crate::epoch::Epoch;
use crate::fault::WordGen;
use crate::multiwriter::{MwmrCtx, MwmrKind, MwmrOp};
use crate::regular::{Branch, RegularRead, WriteRound};
use crate::scenario::{
    FaultScope, Mutation, OpKind, OpSpec, RegisterKind, Scenario, ScenarioError, Scheduler, Transport,
};
use crate::server::{self, RegState, Sender, ServerOptions};
use crate::trace::{EventKind, LinkDir, ServerView, Stamp, Trace, TraceEvent, TraceHeader};
use crate::transport::{oracle_plan, AckPacket, DataPacket, Link};
use crate::types::{Body, Message, Payload, ProcessId, SeqNo, Triple, Value, Word};

/// Runs `sc` to quiescence or until its event budget is spent.
pub fn run(sc: &Scenario) -> Result<Trace, ScenarioError> {
    sc.validate()?;
    let mut engine = Engine::new(sc);
    engine.execute();
    Ok(Trace { header: engine.header, events: engine.events })
}

/// The value every register holds before anything else happens.
pub fn initial_word(kind: RegisterKind, k: u8) -> Word {
    match kind {
        RegisterKind::SwsrRegular => Word::Bare(Payload::Int(0)),
        RegisterKind::SwsrAtomic | RegisterKind::Swmr => Word::Numbered { wsn: 0, payload: Payload::Int(0) },
        RegisterKind::Mwmr => Word::Numbered { wsn: 0, payload: Payload::Triple(initial_triple(k)) },
    }
}

fn initial_triple(k: u8) -> Triple {
    Triple { value: 0, epoch: Epoch::initial(k).expect("k validated by the scenario"), seq: 0 }
}

#[derive(Clone, Debug)]
enum Ev {
    Invoke(usize),
    Deliver { server: u32, client: usize, id: Option<BcastId>, msg: Message },
    Complete(BcastId),
    Reply { client: usize, from: u32, tag: Option<BcastId>, body: Body },
    Timer { client: usize, id: TimerId },
    Fault(FaultScope),
    Data { client: usize, server: u32, pkt: DataPacket },
    Ack { client: usize, server: u32, pkt: AckPacket },
}

#[derive(Debug)]
struct Entry {
    time: u64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Debug)]
enum Machine {
    Write(WriteRound),
    Regular(RegularRead),
    Atomic(AtomicRead),
    Multi(MwmrOp),
}

#[derive(Debug)]
struct Running {
    op: u64,
    machine: Machine,
}

struct Ret {
    value: Option<Value>,
    stamp: Option<Stamp>,
    branch: Option<Branch>,
}

#[derive(Debug)]
struct Client {
    pid: ProcessId,
    /// 1-based index among clients; the owned register in the multi-writer
    /// construction.
    index: u32,
    slot: u32,
    owns: Option<u32>,
    ops: VecDeque<(u64, OpSpec)>,
    running: Option<Running>,
    wsn: SeqNo,
    /// Reader memory per register.
    mems: Vec<ReaderMemory>,
}

struct LinkSlot {
    link: Link,
    fwd_floor: u64,
    bwd_floor: u64,
}

struct Bcast {
    client: usize,
    handshakes: usize,
    completed: bool,
}

struct Engine<'s> {
    sc: &'s Scenario,
    header: TraceHeader,
    events: Vec<TraceEvent>,
    queue: BinaryHeap<Entry>,
    seq: u64,
    now: u64,
    rng: ChaCha8Rng,
    th: Thresholds,
    read_opts: ReadOptions,
    server_opts: ServerOptions,
    gen: WordGen,
    correct: Vec<bool>,
    /// `[server - 1][reg - 1]`; Byzantine entries are shadow states.
    servers: Vec<Vec<RegState>>,
    adversary: Adversary,
    clients: Vec<Client>,
    bcasts: Vec<Bcast>,
    /// `[client][server - 1]`: time of the latest oracle delivery.
    oracle_floor: Vec<Vec<u64>>,
    /// `[server - 1][client]`: time of the latest reply.
    reply_floor: Vec<Vec<u64>>,
    links: Vec<Vec<LinkSlot>>,
    /// `[client][server - 1]`: fixed (outbound, inbound) delays under the
    /// per-link scheduler.
    link_delay: Vec<Vec<(u64, u64)>>,
    next_timer: TimerId,
}

impl<'s> Engine<'s> {
    fn new(sc: &'s Scenario) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
        let n = sc.n as usize;
        let byzantine = match &sc.adversary.byzantine {
            Some(b) => {
                let mut b = b.clone();
                b.sort_unstable();
                b
            }
            None => {
                let mut all: Vec<u32> = (1..=sc.n).collect();
                all.shuffle(&mut rng);
                let mut b = all[..sc.t as usize].to_vec();
                b.sort_unstable();
                b
            }
        };
        let correct: Vec<bool> = (1..=sc.n).map(|s| !byzantine.contains(&s)).collect();
        let k = sc.epoch_k();
        let header = TraceHeader {
            scenario: sc.name.clone(),
            seed: sc.seed,
            tau_no_tr: sc.tau_no_tr,
            n: sc.n,
            t: sc.t,
            m: sc.m,
            register: sc.register,
            timing: sc.timing,
            transport: sc.transport,
            modulus: sc.modulus,
            seq_bound: sc.seq_bound,
            byzantine,
            max_events: sc.max_events,
        };
        let init = initial_word(sc.register, k);
        let regs = sc.registers();
        let servers = (0..n).map(|_| (0..regs).map(|_| RegState::new(init, sc.slots())).collect()).collect();
        let mem = ReaderMemory { pwsn: 0, pv: init.payload() };
        let clients: Vec<Client> = match sc.register {
            RegisterKind::SwsrRegular | RegisterKind::SwsrAtomic => vec![
                Client::new(ProcessId::WRITER, 1, 0, Some(1), regs, mem),
                Client::new(ProcessId::READER, 1, 1, None, regs, mem),
            ],
            RegisterKind::Swmr => {
                (1..=sc.m).map(|i| Client::new(ProcessId::client(i), i, i, (i == 1).then_some(1), regs, mem)).collect()
            }
            RegisterKind::Mwmr => {
                (1..=sc.m).map(|i| Client::new(ProcessId::client(i), i, i, Some(i), regs, mem)).collect()
            }
        };
        let links = match sc.transport {
            Transport::Oracle => Vec::new(),
            Transport::Datalink { cap } => (0..clients.len())
                .map(|_| (0..n).map(|_| LinkSlot { link: Link::new(cap), fwd_floor: 0, bwd_floor: 0 }).collect())
                .collect(),
        };
        let link_delay = match sc.scheduler {
            Scheduler::PerLink => {
                let d = sc.timing.max_delay();
                (0..clients.len())
                    .map(|_| {
                        let fast = rng.gen_bool(0.5);
                        (0..n)
                            .map(|_| if fast { (1, 1) } else { (rng.gen_range(1..=d), rng.gen_range(1..=d)) })
                            .collect()
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        let mut e = Engine {
            sc,
            header,
            events: Vec::new(),
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0,
            rng,
            th: Thresholds::new(sc.n, sc.t, sc.timing, sc.has_mutation(Mutation::WeakHelpPredicate)),
            read_opts: ReadOptions {
                modulus: sc.modulus,
                skip_inversion_guard: sc.has_mutation(Mutation::SkipInversionGuard),
            },
            server_opts: ServerOptions { skip_helping_reset: sc.has_mutation(Mutation::SkipHelpingReset) },
            gen: WordGen {
                kind: sc.register,
                modulus: sc.modulus,
                k,
                seq_bound: sc.seq_bound,
                registers: regs,
                slots: sc.slots(),
            },
            correct,
            servers,
            adversary: Adversary::new(sc.adversary.strategy),
            oracle_floor: vec![vec![0; n]; clients.len()],
            reply_floor: vec![vec![0; clients.len()]; n],
            clients,
            bcasts: Vec::new(),
            links,
            link_delay,
            next_timer: 0,
        };
        for f in &sc.faults {
            e.push(f.time, Ev::Fault(f.scope));
        }
        for (i, op) in sc.workload.iter().enumerate() {
            let c = e.client_of(op);
            e.clients[c].ops.push_back((i as u64, *op));
        }
        for c in 0..e.clients.len() {
            if let Some((_, op)) = e.clients[c].ops.front() {
                let t = op.time;
                e.push(t, Ev::Invoke(c));
            }
        }
        e
    }

    fn client_of(&self, op: &OpSpec) -> usize {
        match self.sc.register {
            RegisterKind::SwsrRegular | RegisterKind::SwsrAtomic => match op.kind {
                OpKind::Write => 0,
                OpKind::Read => 1,
            },
            _ => op.client as usize - 1,
        }
    }

    fn push(&mut self, time: u64, ev: Ev) {
        self.seq += 1;
        self.queue.push(Entry { time, seq: self.seq, ev });
    }

    fn log(&mut self, pid: ProcessId, kind: EventKind) {
        self.events.push(TraceEvent { time: self.now, pid, kind });
    }

    fn delay(&mut self) -> u64 {
        let d = self.sc.timing.max_delay();
        match self.sc.scheduler {
            Scheduler::Uniform => self.rng.gen_range(1..=d),
            Scheduler::Bimodal | Scheduler::PerLink => {
                if self.rng.gen_bool(0.5) {
                    1
                } else {
                    d
                }
            }
        }
    }

    /// Delay of a protocol message between client `c` and server index `s`.
    fn delay_on(&mut self, c: usize, s: usize, inbound: bool) -> u64 {
        match self.link_delay.get(c).and_then(|l| l.get(s)) {
            Some(&(out, back)) => {
                if inbound {
                    back
                } else {
                    out
                }
            }
            None => self.delay(),
        }
    }

    fn need(&self) -> usize {
        (self.sc.n - 2 * self.sc.t) as usize
    }

    fn execute(&mut self) {
        let mut processed = 0u64;
        let mut hit = false;
        while let Some(entry) = self.queue.pop() {
            if processed >= self.sc.max_events {
                hit = true;
                break;
            }
            processed += 1;
            self.now = entry.time;
            self.dispatch(entry.ev);
        }
        self.log(ProcessId::ENGINE, EventKind::End { events: processed, max_events_hit: hit });
    }

    fn dispatch(&mut self, ev: Ev) {
        match ev {
            Ev::Invoke(c) => self.invoke(c),
            Ev::Deliver { server, client, id, msg } => self.deliver(server, client, id, msg),
            Ev::Complete(id) => {
                let c = self.bcasts[id as usize].client;
                let pid = self.clients[c].pid;
                self.log(pid, EventKind::Complete { id });
                self.step(c, Input::BcastDone(id));
            }
            Ev::Reply { client, from, tag, body } => {
                let pid = self.clients[client].pid;
                self.log(pid, EventKind::Reply { from, tag, body: body.clone() });
                if let Some(tag) = tag {
                    self.step(client, Input::Reply { from, tag, body: &body });
                }
            }
            Ev::Timer { client, id } => self.step(client, Input::Timer(id)),
            Ev::Fault(scope) => self.fault(scope),
            Ev::Data { client, server, pkt } => self.on_data(client, server, pkt),
            Ev::Ack { client, server, pkt } => self.on_ack(client, server, pkt),
        }
    }

    // ---- clients ----

    fn invoke(&mut self, c: usize) {
        if self.clients[c].running.is_some() {
            return;
        }
        let Some((op, spec)) = self.clients[c].ops.pop_front() else { return };
        let pid = self.clients[c].pid;
        self.log(pid, EventKind::Invoke { op, op_kind: spec.kind, value: spec.value });
        let th = self.th;
        let modulus = self.sc.modulus;
        let slots = self.sc.slots();
        let index = self.clients[c].index;
        let mut mems = core::mem::take(&mut self.clients[c].mems);
        let mut wsn = self.clients[c].wsn;
        let value = spec.value.unwrap_or_default();
        let (seq_bound, k, m, opts) = (self.sc.seq_bound, self.gen.k, self.sc.m, self.read_opts);
        let machine = {
            let mut io = ClientIo { eng: self, c };
            match (io.eng.sc.register, spec.kind) {
                (RegisterKind::SwsrRegular, OpKind::Write) => {
                    Machine::Write(WriteRound::start(&mut io, 1, Word::Bare(Payload::Int(value)), slots, &th))
                }
                (RegisterKind::SwsrRegular, OpKind::Read) => Machine::Regular(RegularRead::start(&mut io, 1, &th)),
                (RegisterKind::SwsrAtomic | RegisterKind::Swmr, OpKind::Write) => {
                    Machine::Write(atomic::start_write(&mut io, 1, &mut wsn, modulus, Payload::Int(value), slots, &th))
                }
                (RegisterKind::SwsrAtomic | RegisterKind::Swmr, OpKind::Read) => {
                    Machine::Atomic(AtomicRead::start(&mut io, 1, &th))
                }
                (RegisterKind::Mwmr, kind) => {
                    let kind = match kind {
                        OpKind::Write => MwmrKind::Write(value),
                        OpKind::Read => MwmrKind::Read,
                    };
                    let mut ctx = MwmrCtx { th: &th, mems: &mut mems, wsn: &mut wsn, read_opts: opts, seq_bound, k, m };
                    Machine::Multi(MwmrOp::start(&mut io, index, kind, &mut ctx))
                }
            }
        };
        self.clients[c].mems = mems;
        self.clients[c].wsn = wsn;
        self.clients[c].running = Some(Running { op, machine });
    }

    fn step(&mut self, c: usize, input: Input<'_>) {
        let Some(mut run) = self.clients[c].running.take() else { return };
        let mut mems = core::mem::take(&mut self.clients[c].mems);
        let mut wsn = self.clients[c].wsn;
        let th = self.th;
        let (seq_bound, k, m, opts) = (self.sc.seq_bound, self.gen.k, self.sc.m, self.read_opts);
        let ret = {
            let mut io = ClientIo { eng: self, c };
            match &mut run.machine {
                Machine::Write(w) => w.step(&mut io, &input, &th).then(|| Ret {
                    value: None,
                    stamp: w.word.wsn().map(Stamp::Wsn),
                    branch: None,
                }),
                Machine::Regular(r) => r.step(&mut io, &input, &th).map(|(w, b)| Ret {
                    value: Some(w.payload().value()),
                    stamp: None,
                    branch: Some(b),
                }),
                Machine::Atomic(r) => r.step(&mut io, &input, &th, &mut mems[0], opts).map(|o| Ret {
                    value: Some(o.payload.value()),
                    stamp: Some(Stamp::Wsn(o.wsn)),
                    branch: Some(o.branch),
                }),
                Machine::Multi(op) => {
                    let mut ctx = MwmrCtx { th: &th, mems: &mut mems, wsn: &mut wsn, read_opts: opts, seq_bound, k, m };
                    op.step(&mut io, &input, &mut ctx).map(|o| Ret {
                        value: o.value,
                        stamp: Some(Stamp::Ts(o.stamp)),
                        branch: None,
                    })
                }
            }
        };
        self.clients[c].mems = mems;
        self.clients[c].wsn = wsn;
        match ret {
            None => self.clients[c].running = Some(run),
            Some(r) => {
                let pid = self.clients[c].pid;
                let value = if matches!(run.machine, Machine::Write(_)) { None } else { r.value };
                self.log(pid, EventKind::Return { op: run.op, value, stamp: r.stamp, branch: r.branch });
                if let Some((_, next)) = self.clients[c].ops.front() {
                    let t = next.time.max(self.now + 1);
                    self.push(t, Ev::Invoke(c));
                }
            }
        }
    }

    fn broadcast(&mut self, c: usize, msg: Message) -> BcastId {
        let id = self.bcasts.len() as BcastId;
        self.bcasts.push(Bcast { client: c, handshakes: 0, completed: false });
        let pid = self.clients[c].pid;
        self.log(pid, EventKind::Broadcast { id, reg: msg.reg, body: msg.body.clone() });
        let n = self.sc.n as usize;
        match self.sc.transport {
            Transport::Oracle => {
                let delays: Vec<u64> = (0..n).map(|s| self.delay_on(c, s, false)).collect();
                let plan = oracle_plan(
                    self.now,
                    &delays,
                    &self.oracle_floor[c],
                    &self.correct,
                    self.need(),
                    self.sc.timing.is_sync(),
                );
                for (s, &t) in plan.deliver_at.iter().enumerate() {
                    self.oracle_floor[c][s] = t;
                    self.push(t, Ev::Deliver { server: s as u32 + 1, client: c, id: Some(id), msg: msg.clone() });
                }
                self.push(plan.complete_at, Ev::Complete(id));
            }
            Transport::Datalink { .. } => {
                for s in 0..n {
                    self.links[c][s].link.enqueue(id, msg.clone());
                    self.pump(c, s as u32 + 1);
                }
            }
        }
        id
    }

    fn note(&mut self, c: usize, note: Note) {
        let pid = self.clients[c].pid;
        match note {
            Note::WriteReturned { reg, word, invoked } => {
                let servers = (1..=self.sc.n)
                    .filter(|s| self.correct[*s as usize - 1])
                    .map(|s| {
                        let st = &self.servers[s as usize - 1][reg as usize - 1];
                        ServerView { server: s, last_val: st.last_val, helping: st.helping.clone() }
                    })
                    .collect();
                self.log(pid, EventKind::Snapshot { reg, word, invoked, servers });
            }
            Note::SubRead { reg, word } => self.log(pid, EventKind::SubRead { reg, word }),
        }
    }

    // ---- servers ----

    fn deliver(&mut self, server: u32, c: usize, id: Option<BcastId>, msg: Message) {
        let from = self.clients[c].pid;
        let body = id.is_none().then(|| msg.body.clone());
        self.log(ProcessId::server(server), EventKind::Deliver { id, from, reg: msg.reg, body });
        if msg.reg == 0 || msg.reg > self.sc.registers() {
            return;
        }
        let cl = &self.clients[c];
        let sender = Sender { owner: cl.owns == Some(msg.reg), slot: cl.slot };
        let state = &mut self.servers[server as usize - 1][msg.reg as usize - 1];
        let reply = if self.correct[server as usize - 1] {
            server::handle(state, sender, &msg.body, self.server_opts)
        } else {
            self.adversary.respond(state, sender, msg.reg, &msg.body, &self.gen, &mut self.rng)
        };
        if let Some(body) = reply {
            self.send_reply(server, c, id, body);
        }
    }

    fn send_reply(&mut self, server: u32, c: usize, tag: Option<BcastId>, body: Body) {
        let d = self.delay_on(c, server as usize - 1, true);
        let floor = &mut self.reply_floor[server as usize - 1][c];
        let t = (self.now + d).max(*floor);
        *floor = t;
        self.push(t, Ev::Reply { client: c, from: server, tag, body });
    }

    // ---- data links ----

    fn pump(&mut self, c: usize, server: u32) {
        let s = server as usize - 1;
        let data = self.links[c][s].link.pump_forward();
        for pkt in data {
            let t = (self.now + self.delay_on(c, s, false)).max(self.links[c][s].fwd_floor);
            self.links[c][s].fwd_floor = t;
            self.push(t, Ev::Data { client: c, server, pkt });
        }
        let acks = self.links[c][s].link.pump_backward();
        for pkt in acks {
            let t = (self.now + self.delay_on(c, s, true)).max(self.links[c][s].bwd_floor);
            self.links[c][s].bwd_floor = t;
            self.push(t, Ev::Ack { client: c, server, pkt });
        }
    }

    fn on_data(&mut self, c: usize, server: u32, pkt: DataPacket) {
        let s = server as usize - 1;
        let client = self.clients[c].pid;
        if pkt.origin.is_none() {
            self.log(ProcessId::server(server), EventKind::Garbage { client, server, dir: LinkDir::Forward });
        }
        let arrival = self.links[c][s].link.on_data(pkt);
        if let Some((msg, origin)) = arrival.deliver {
            self.deliver(server, c, origin, msg);
        }
        self.pump(c, server);
        self.check_clean(c, server);
    }

    fn on_ack(&mut self, c: usize, server: u32, pkt: AckPacket) {
        let s = server as usize - 1;
        let client = self.clients[c].pid;
        if pkt.origin.is_none() {
            self.log(client, EventKind::Garbage { client, server, dir: LinkDir::Backward });
        }
        if let Some(id) = self.links[c][s].link.on_ack(pkt) {
            self.log(client, EventKind::Handshake { id: Some(id), server });
            if self.correct[s] {
                let need = self.need();
                let b = &mut self.bcasts[id as usize];
                b.handshakes += 1;
                if b.handshakes >= need && !b.completed {
                    b.completed = true;
                    self.push(self.now, Ev::Complete(id));
                }
            }
        }
        self.pump(c, server);
        self.check_clean(c, server);
    }

    fn check_clean(&mut self, c: usize, server: u32) {
        let l = &mut self.links[c][server as usize - 1].link;
        if l.dirty && l.clean() {
            l.dirty = false;
            let client = self.clients[c].pid;
            self.log(ProcessId::ENGINE, EventKind::LinkClean { client, server });
        }
    }

    // ---- transient faults ----

    fn fault(&mut self, scope: FaultScope) {
        self.log(ProcessId::ENGINE, EventKind::Fault { scope });
        let all = scope == FaultScope::All;
        if all || scope == FaultScope::Servers {
            self.corrupt_servers();
        }
        if all || scope == FaultScope::Clients {
            self.corrupt_clients();
        }
        if (all || scope == FaultScope::ReaderFuture) && self.sc.register.is_atomic() {
            self.corrupt_reader_future();
        }
        if all || scope == FaultScope::Links {
            self.corrupt_links();
        }
    }

    fn corrupt_servers(&mut self) {
        let g = self.gen;
        for r in 0..self.sc.registers() as usize {
            // a register nobody writes after the fault must still be
            // readable, so the multi-writer registers get one common value
            let common = (self.sc.register == RegisterKind::Mwmr).then(|| g.word(&mut self.rng));
            for s in 0..self.sc.n as usize {
                let mut st = g.reg_state(&mut self.rng);
                if let Some(w) = common {
                    st.last_val = w;
                }
                self.servers[s][r] = st;
            }
        }
    }

    fn corrupt_clients(&mut self) {
        let g = self.gen;
        for cl in &mut self.clients {
            cl.wsn = g.wsn(&mut self.rng);
            for mem in &mut cl.mems {
                *mem = g.memory(&mut self.rng);
            }
        }
    }

    fn corrupt_reader_future(&mut self) {
        let g = self.gen;
        let owner_wsn: Vec<SeqNo> = (1..=self.sc.registers())
            .map(|r| self.clients.iter().find(|c| c.owns == Some(r)).map_or(0, |c| c.wsn))
            .collect();
        for cl in &mut self.clients {
            for (j, mem) in cl.mems.iter_mut().enumerate() {
                mem.pwsn = g.future_of(owner_wsn[j], &mut self.rng);
                mem.pv = g.payload(&mut self.rng);
            }
        }
    }

    fn corrupt_links(&mut self) {
        let g = self.gen;
        let n = self.sc.n;
        for c in 0..self.clients.len() {
            for server in 1..=n {
                let s = server as usize - 1;
                match self.sc.transport {
                    Transport::Oracle => {
                        for _ in 0..self.rng.gen_range(0..=2) {
                            let t = (self.now + self.delay()).max(self.oracle_floor[c][s]);
                            self.oracle_floor[c][s] = t;
                            let msg = g.message(&mut self.rng);
                            self.push(t, Ev::Deliver { server, client: c, id: None, msg });
                        }
                    }
                    Transport::Datalink { cap } => {
                        let fwd = self.rng.gen_range(0..=cap);
                        let bwd = self.rng.gen_range(0..=cap);
                        let last =
                            self.rng.gen_bool(0.5).then(|| (self.rng.gen_range(0..=1), g.message(&mut self.rng)));
                        let (fwd, bwd) = self.links[c][s].link.preload(fwd, bwd, last);
                        for _ in 0..fwd {
                            let pkt = DataPacket {
                                bit: self.rng.gen_range(0..=1),
                                msg: g.message(&mut self.rng),
                                origin: None,
                            };
                            let t = (self.now + self.delay()).max(self.links[c][s].fwd_floor);
                            self.links[c][s].fwd_floor = t;
                            self.push(t, Ev::Data { client: c, server, pkt });
                        }
                        for _ in 0..bwd {
                            let pkt = AckPacket { bit: self.rng.gen_range(0..=1), origin: None };
                            let t = (self.now + self.delay()).max(self.links[c][s].bwd_floor);
                            self.links[c][s].bwd_floor = t;
                            self.push(t, Ev::Ack { client: c, server, pkt });
                        }
                        self.check_clean(c, server);
                    }
                }
                for _ in 0..self.rng.gen_range(0..=1) {
                    let body = g.reply(&mut self.rng);
                    self.send_reply(server, c, None, body);
                }
            }
        }
    }
}

impl Client {
    fn new(pid: ProcessId, index: u32, slot: u32, owns: Option<u32>, regs: u32, mem: ReaderMemory) -> Self {
        Client { pid, index, slot, owns, ops: VecDeque::new(), running: None, wsn: 0, mems: vec![mem; regs as usize] }
    }
}

/// The environment as seen by one client's machine.
struct ClientIo<'a, 's> {
    eng: &'a mut Engine<'s>,
    c: usize,
}

impl Io for ClientIo<'_, '_> {
    fn now(&self) -> u64 {
        self.eng.now
    }

    fn broadcast(&mut self, msg: Message) -> BcastId {
        self.eng.broadcast(self.c, msg)
    }

    fn set_timer(&mut self, after: u64) -> TimerId {
        self.eng.next_timer += 1;
        let id = self.eng.next_timer;
        let t = self.eng.now + after;
        self.eng.push(t, Ev::Timer { client: self.c, id });
        id
    }

    fn note(&mut self, note: Note) {
        self.eng.note(self.c, note);
    }
}
