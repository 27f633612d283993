//! Deterministic in-process protocol execution.
//!
//! Parties run as sequential programs over a simulated network of reliable,
//! ordered point-to-point channels. A party blocks until the exact message it
//! awaits is available; if every unfinished party is blocked the session
//! reports a deadlock naming the blocked parties and the kinds they expected.
//! Every message is recorded, along with each party's plaintext-exposure log
//! (values it received in the clear or obtained by decryption), so security
//! claims about what a party could learn are checkable after the fact.
//!
//! Scheduling cannot influence results: each party's randomness is derived
//! from the session seed and its index, parties are sequential, and the
//! exported transcript orders messages canonically by (round, from, to).

use std::collections::{HashMap, VecDeque};
use std::sync::{Condvar, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::Rational;

/// One-based party index, `P1..Pl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartyId(pub usize);

impl std::fmt::Display for PartyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// A single protocol message. `round` increases strictly per (from, to) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub from: PartyId,
    pub to: PartyId,
    pub round: u64,
    pub kind: String,
    pub payload: Vec<u8>,
}

/// How a plaintext value became visible to a party.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exposure {
    /// Parsed out of a received message in the clear.
    Received,
    /// Obtained by decrypting a ciphertext.
    Decrypted,
    /// Computed locally as a protocol output (e.g. the solver's optimum).
    Local,
}

/// Plaintext values a party saw at one protocol step.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueRecord {
    pub step: String,
    pub exposure: Exposure,
    pub values: Vec<Rational>,
}

/// Everything one party sent, consumed and learned.
#[derive(Debug, Clone, Default)]
pub struct PartyLog {
    pub sent: Vec<Message>,
    pub received: Vec<Message>,
    pub values: Vec<ValueRecord>,
}

/// Ordered record of a whole session.
#[derive(Debug, Clone)]
pub struct Transcript {
    /// All messages, sorted by (round, from, to).
    pub messages: Vec<Message>,
    /// Indexed by party (entry 0 is P1).
    pub party_logs: Vec<PartyLog>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("deadlock: {party} waits for `{kind}` from {from} which is never sent")]
    Deadlock {
        party: PartyId,
        from: PartyId,
        kind: String,
    },
    #[error("{party} expected `{expected}` from {from} but the next message is `{found}`")]
    UnexpectedMessage {
        party: PartyId,
        from: PartyId,
        expected: String,
        found: String,
    },
    #[error("message `{kind}` from {from} to {to} was never received")]
    Undelivered {
        from: PartyId,
        to: PartyId,
        kind: String,
    },
    #[error("{party}: {msg}")]
    Party { party: PartyId, msg: String },
    #[error("session aborted because another party failed")]
    Aborted,
}

struct NetState {
    queues: HashMap<(usize, usize), VecDeque<Message>>,
    seq: HashMap<(usize, usize), u64>,
    all_messages: Vec<Message>,
    /// party index -> (from, kind) it is blocked on
    waiting: HashMap<usize, (usize, String)>,
    finished: usize,
    parties: usize,
    poisoned: bool,
}

struct Network {
    state: Mutex<NetState>,
    cond: Condvar,
}

impl Network {
    fn new(parties: usize) -> Self {
        Self {
            state: Mutex::new(NetState {
                queues: HashMap::new(),
                seq: HashMap::new(),
                all_messages: Vec::new(),
                waiting: HashMap::new(),
                finished: 0,
                parties,
                poisoned: false,
            }),
            cond: Condvar::new(),
        }
    }
}

/// Handle a party program uses to talk to the session.
pub struct PartyCtx<'n> {
    id: PartyId,
    parties: usize,
    net: &'n Network,
    pub rng: ChaCha20Rng,
    log: PartyLog,
}

impl<'n> PartyCtx<'n> {
    pub fn id(&self) -> PartyId {
        self.id
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    /// All party ids except this one, in index order.
    pub fn others(&self) -> impl Iterator<Item = PartyId> + '_ {
        let me = self.id.0;
        (1..=self.parties).filter(move |&i| i != me).map(PartyId)
    }

    /// Sends `payload` to `to` under the protocol-step tag `kind`.
    pub fn send(&mut self, to: PartyId, kind: &str, payload: Vec<u8>) {
        let mut st = self.net.state.lock().unwrap();
        let seq = st.seq.entry((self.id.0, to.0)).or_insert(0);
        *seq += 1;
        let msg = Message {
            from: self.id,
            to,
            round: *seq,
            kind: kind.to_string(),
            payload,
        };
        st.queues
            .entry((self.id.0, to.0))
            .or_default()
            .push_back(msg.clone());
        st.all_messages.push(msg.clone());
        self.log.sent.push(msg);
        self.net.cond.notify_all();
    }

    /// Blocks until the next message from `from` arrives; it must carry the
    /// expected kind (channels are ordered, so anything else is a protocol
    /// error, not a reordering).
    pub fn recv(&mut self, from: PartyId, kind: &str) -> Result<Vec<u8>, SessionError> {
        let mut st = self.net.state.lock().unwrap();
        loop {
            if st.poisoned {
                return Err(SessionError::Aborted);
            }
            if let Some(queue) = st.queues.get_mut(&(from.0, self.id.0)) {
                if let Some(front) = queue.front() {
                    if front.kind != kind {
                        let found = front.kind.clone();
                        st.poisoned = true;
                        self.net.cond.notify_all();
                        return Err(SessionError::UnexpectedMessage {
                            party: self.id,
                            from,
                            expected: kind.to_string(),
                            found,
                        });
                    }
                    let msg = queue.pop_front().unwrap();
                    self.log.received.push(msg.clone());
                    return Ok(msg.payload);
                }
            }
            st.waiting.insert(self.id.0, (from.0, kind.to_string()));
            // Deadlock: every unfinished party is registered as waiting and
            // none of them has a deliverable message pending.
            if st.waiting.len() + st.finished == st.parties {
                let stuck = st.waiting.iter().all(|(&p, &(f, _))| {
                    st.queues.get(&(f, p)).is_none_or(|q| q.is_empty())
                });
                if stuck {
                    st.poisoned = true;
                    let (f, k) = st.waiting.remove(&self.id.0).unwrap();
                    self.net.cond.notify_all();
                    return Err(SessionError::Deadlock {
                        party: self.id,
                        from: PartyId(f),
                        kind: k,
                    });
                }
            }
            st = self.net.cond.wait(st).unwrap();
            st.waiting.remove(&self.id.0);
        }
    }

    /// Records plaintext values this party saw, with how it saw them.
    pub fn log_values(&mut self, step: &str, exposure: Exposure, values: &[Rational]) {
        self.log.values.push(ValueRecord {
            step: step.to_string(),
            exposure,
            values: values.to_vec(),
        });
    }

    /// Fails the session with a party-level error message.
    pub fn fail<E: std::fmt::Display>(&self, err: E) -> SessionError {
        SessionError::Party {
            party: self.id,
            msg: err.to_string(),
        }
    }
}

/// Boxed party program.
pub type PartyProgram<'a, O> =
    Box<dyn FnOnce(&mut PartyCtx) -> Result<O, SessionError> + Send + 'a>;

/// Runs one program per party to completion and returns their outputs in
/// party order together with the full transcript. Execution is deterministic
/// in `seed`.
pub fn run_session<O: Send>(
    programs: Vec<PartyProgram<'_, O>>,
    seed: u64,
) -> Result<(Vec<O>, Transcript), SessionError> {
    let parties = programs.len();
    let net = Network::new(parties);

    let results: Vec<(Result<O, SessionError>, PartyLog)> = std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(parties);
        for (idx, program) in programs.into_iter().enumerate() {
            let net = &net;
            handles.push(scope.spawn(move || {
                let id = PartyId(idx + 1);
                let mut ctx = PartyCtx {
                    id,
                    parties,
                    net,
                    rng: party_rng(seed, idx + 1),
                    log: PartyLog::default(),
                };
                let out = program(&mut ctx);
                {
                    let mut st = net.state.lock().unwrap();
                    st.finished += 1;
                    if out.is_err() {
                        st.poisoned = true;
                    }
                    // A finish can expose a deadlock among the remaining parties.
                    net.cond.notify_all();
                }
                (out, ctx.log)
            }));
        }
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut outputs = Vec::with_capacity(parties);
    let mut party_logs = Vec::with_capacity(parties);
    let mut first_err: Option<SessionError> = None;
    for (result, log) in results {
        match result {
            Ok(o) => outputs.push(o),
            Err(e) => {
                // Prefer a concrete diagnosis over the poisoned-session echo.
                if first_err.is_none() || matches!(first_err, Some(SessionError::Aborted)) {
                    first_err = Some(e);
                }
            }
        }
        party_logs.push(log);
    }
    if let Some(err) = first_err {
        return Err(err);
    }

    let st = net.state.into_inner().unwrap();
    for queue in st.queues.values() {
        if let Some(msg) = queue.front() {
            return Err(SessionError::Undelivered {
                from: msg.from,
                to: msg.to,
                kind: msg.kind.clone(),
            });
        }
    }
    let mut messages = st.all_messages;
    messages.sort_by_key(|m| (m.round, m.from.0, m.to.0));
    Ok((
        outputs,
        Transcript {
            messages,
            party_logs,
        },
    ))
}

fn party_rng(seed: u64, party: usize) -> ChaCha20Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_be_bytes());
    hasher.update((party as u64).to_be_bytes());
    ChaCha20Rng::from_seed(hasher.finalize().into())
}

/// One offending value found by [`Transcript::assert_absent`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub step: String,
    pub exposure: Exposure,
    pub value: Rational,
}

/// Report of a forbidden-plaintext scan over one party's log.
#[derive(Debug, Clone, PartialEq)]
pub struct AssertReport {
    pub party: PartyId,
    pub violations: Vec<Violation>,
}

impl AssertReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Transcript {
    pub fn party_log(&self, party: PartyId) -> &PartyLog {
        &self.party_logs[party.0 - 1]
    }

    /// Kinds of all messages the party consumed, sorted (a multiset).
    pub fn received_kinds(&self, party: PartyId) -> Vec<String> {
        let mut kinds: Vec<String> = self
            .party_log(party)
            .received
            .iter()
            .map(|m| m.kind.clone())
            .collect();
        kinds.sort();
        kinds
    }

    /// Scans every plaintext value the party received or decrypted and
    /// reports those matching `forbidden`.
    pub fn assert_absent(
        &self,
        party: PartyId,
        forbidden: impl Fn(&Rational) -> bool,
    ) -> AssertReport {
        let mut violations = Vec::new();
        for record in &self.party_log(party).values {
            if record.exposure == Exposure::Local {
                continue;
            }
            for v in &record.values {
                if forbidden(v) {
                    violations.push(Violation {
                        step: record.step.clone(),
                        exposure: record.exposure,
                        value: v.clone(),
                    });
                }
            }
        }
        AssertReport { party, violations }
    }

    /// Plaintext values the party saw under a given step tag.
    pub fn values_at(&self, party: PartyId, step: &str) -> Vec<Rational> {
        self.party_log(party)
            .values
            .iter()
            .filter(|r| r.step == step)
            .flat_map(|r| r.values.iter().cloned())
            .collect()
    }

    /// Step tags in this party's decrypted-value log.
    pub fn decrypted_steps(&self, party: PartyId) -> Vec<String> {
        let mut steps: Vec<String> = self
            .party_log(party)
            .values
            .iter()
            .filter(|r| r.exposure == Exposure::Decrypted)
            .map(|r| r.step.clone())
            .collect();
        steps.dedup();
        steps
    }

    /// Canonical text export: one `round|from|to|kind|payload-hash` line per
    /// message, in (round, from, to) order.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            let hash = Sha256::digest(&m.payload);
            out.push_str(&format!(
                "{}|{}|{}|{}|{}\n",
                m.round,
                m.from,
                m.to,
                m.kind,
                hex(&hash)
            ));
        }
        out
    }

    /// Hash of the canonical export, for quick determinism checks.
    pub fn digest(&self) -> String {
        hex(&Sha256::digest(self.export_text().as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
