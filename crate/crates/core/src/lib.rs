//! Stabilizing Byzantine-tolerant read/write registers.
//!
//! This crate holds everything that does not need an operating system:
//! the register protocols written as resumable state machines, the bounded
//! epoch labeling scheme, both ss-broadcast realizations, a deterministic
//! discrete-event simulator that drives them, and the post-hoc trace
//! checkers. File formats, the command line, and parallel batch execution
//! live in the `stabreg` companion crate.
//!
//! The crate is `no_std` and only requires `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod adversary;
pub mod atomic;
pub mod check;
pub mod client;
pub mod epoch;
pub mod fault;
pub mod multiwriter;
pub mod regular;
pub mod scenario;
pub mod search;
pub mod server;
pub mod sim;
pub mod trace;
pub mod transport;
pub mod types;
pub mod workload;

pub use epoch::{Epoch, EpochOrder, Timestamp};
pub use scenario::{Scenario, ScenarioError};
pub use sim::run;
pub use trace::{Trace, TraceEvent};
pub use types::{Body, Message, Modulus, Payload, ProcessId, Role, Triple, Value, Word};
