//! Server-side state and message handlers shared by every construction.
//!
//! A server holds one [`RegState`] per register instance. Handlers are pure
//! functions of the state and the delivered message and take zero simulated
//! time. Byzantine servers never run them; see [`crate::adversary`].

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::types::{Body, Word};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegState {
    pub last_val: Word,
    /// One helping value per reader slot; `None` is ⊥.
    pub helping: Vec<Option<Word>>,
}

impl RegState {
    pub fn new(initial: Word, slots: u32) -> Self {
        RegState { last_val: initial, helping: vec![None; slots as usize] }
    }

    fn slot_mut(&mut self, slot: u32) -> Option<&mut Option<Word>> {
        self.helping.get_mut((slot as usize).checked_sub(1)?)
    }

    pub fn helping_of(&self, slot: u32) -> Option<Word> {
        self.helping.get((slot as usize).checked_sub(1)?).copied().flatten()
    }
}

/// Who sent a delivered message, as far as a server can tell from the
/// authenticated channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sender {
    /// The sender owns (is the sole writer of) the addressed register.
    pub owner: bool,
    /// Reader slot of the sender.
    pub slot: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ServerOptions {
    /// Mutation: `READ(true)` does not reset the helping value.
    pub skip_helping_reset: bool,
}

/// Applies `body` to `state` and returns the reply to send back, if any.
///
/// `WRITE` and `NEW_HELP_VAL` are accepted only from the register's owner;
/// server-to-client message kinds are ignored.
pub fn handle(state: &mut RegState, from: Sender, body: &Body, opts: ServerOptions) -> Option<Body> {
    match body {
        Body::Write(word) if from.owner => {
            state.last_val = *word;
            Some(Body::AckWrite(state.helping.clone()))
        }
        Body::NewHelpVal { slots, word } if from.owner => {
            for &s in slots {
                if let Some(h) = state.slot_mut(s) {
                    *h = Some(*word);
                }
            }
            None
        }
        Body::Read { new_read } => {
            let slot = state.slot_mut(from.slot)?;
            if *new_read && !opts.skip_helping_reset {
                *slot = None;
            }
            let helping_val = *slot;
            Some(Body::AckRead { last_val: state.last_val, helping_val })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Payload;

    fn w(v: u64) -> Word {
        Word::Bare(Payload::Int(v))
    }

    const WRITER: Sender = Sender { owner: true, slot: 1 };
    const READER: Sender = Sender { owner: false, slot: 1 };

    #[test]
    fn write_acks_current_helping() {
        let mut s = RegState::new(w(0), 1);
        let reply = handle(&mut s, WRITER, &Body::Write(w(5)), ServerOptions::default());
        assert_eq!(reply, Some(Body::AckWrite(vec![None])));
        assert_eq!(s.last_val, w(5));

        s.helping[0] = Some(w(3));
        let reply = handle(&mut s, WRITER, &Body::Write(w(6)), ServerOptions::default());
        assert_eq!(reply, Some(Body::AckWrite(vec![Some(w(3))])));
        assert_eq!(s.last_val, w(6));
    }

    #[test]
    fn new_help_val_touches_only_helping() {
        let mut s = RegState::new(w(1), 1);
        let body = Body::NewHelpVal { slots: vec![1], word: w(9) };
        assert_eq!(handle(&mut s, WRITER, &body, ServerOptions::default()), None);
        assert_eq!(s.helping_of(1), Some(w(9)));
        assert_eq!(s.last_val, w(1));
        let body = Body::NewHelpVal { slots: vec![1], word: w(10) };
        handle(&mut s, WRITER, &body, ServerOptions::default());
        assert_eq!(s.helping_of(1), Some(w(10)));
    }

    #[test]
    fn read_resets_then_replies() {
        let mut s = RegState::new(w(4), 1);
        s.helping[0] = Some(w(2));
        let reply = handle(&mut s, READER, &Body::Read { new_read: false }, ServerOptions::default());
        assert_eq!(reply, Some(Body::AckRead { last_val: w(4), helping_val: Some(w(2)) }));
        let reply = handle(&mut s, READER, &Body::Read { new_read: true }, ServerOptions::default());
        assert_eq!(reply, Some(Body::AckRead { last_val: w(4), helping_val: None }));
        assert_eq!(s.helping_of(1), None);
    }

    #[test]
    fn skip_reset_mutation_keeps_helping() {
        let mut s = RegState::new(w(4), 1);
        s.helping[0] = Some(w(2));
        let opts = ServerOptions { skip_helping_reset: true };
        let reply = handle(&mut s, READER, &Body::Read { new_read: true }, opts);
        assert_eq!(reply, Some(Body::AckRead { last_val: w(4), helping_val: Some(w(2)) }));
    }

    #[test]
    fn non_owner_cannot_write() {
        let mut s = RegState::new(w(4), 2);
        assert_eq!(handle(&mut s, READER, &Body::Write(w(8)), ServerOptions::default()), None);
        let body = Body::NewHelpVal { slots: vec![1, 2], word: w(8) };
        handle(&mut s, READER, &body, ServerOptions::default());
        assert_eq!(s, RegState::new(w(4), 2));
    }

    #[test]
    fn per_slot_helping() {
        let mut s = RegState::new(w(0), 3);
        let body = Body::NewHelpVal { slots: vec![2, 7], word: w(5) };
        handle(&mut s, WRITER, &body, ServerOptions::default());
        assert_eq!(s.helping, vec![None, Some(w(5)), None]);
        let r2 = Sender { owner: false, slot: 2 };
        handle(&mut s, r2, &Body::Read { new_read: true }, ServerOptions::default());
        assert_eq!(s.helping, vec![None, None, None]);
    }
}
