//! Append-only, hash-chained log of everything sent over either channel.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::channel::Basis;
use super::PartyId;
use crate::bitcore::BitVector;
use crate::report::{AbortStage, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recipient {
    Party(PartyId),
    Broadcast,
}

/// Which public register a reading belongs to. Trent's own register has no
/// variant: it is never sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Register {
    Y1,
    Y0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Payload {
    DecoyAnnouncement {
        circuit: usize,
        positions: Vec<usize>,
        bases: Vec<Basis>,
    },
    DecoyReadings {
        circuit: usize,
        readings: Vec<bool>,
    },
    DecoyTally {
        circuit: usize,
        decoys: u64,
        mismatches: u64,
    },
    SacrificeAnnouncement {
        circuit: usize,
        positions: Vec<usize>,
    },
    SacrificeReadings {
        circuit: usize,
        readings: Vec<bool>,
    },
    ValidationTally {
        circuit: usize,
        checked: u64,
        mismatches: u64,
    },
    Abort {
        stage: AbortStage,
    },
    RegisterReading {
        circuit: usize,
        register: Register,
        value: BitVector,
    },
    Verdicts {
        verdicts: Vec<Verdict>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub sender: PartyId,
    pub receiver: Recipient,
    pub payload: Payload,
    pub authenticated: bool,
}

impl ClassicalMessage {
    pub fn new(sender: PartyId, receiver: Recipient, payload: Payload) -> Self {
        Self {
            sender,
            receiver,
            payload,
            authenticated: true,
        }
    }
}

/// A sequence of qubits handed to the quantum channel. Decoy positions stay
/// with the sender until the check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumEvent {
    pub circuit: usize,
    pub sender: PartyId,
    pub receiver: PartyId,
    pub qubits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "lowercase")]
pub enum Event {
    Quantum(QuantumEvent),
    Classical(ClassicalMessage),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub index: u64,
    pub event: Event,
    /// Hex SHA-256 over the previous digest, the index and the event.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

const GENESIS: &str = "";

fn chain_digest(prev: &str, index: u64, event: &Event) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prev.as_bytes());
    hasher.update(index.to_le_bytes());
    hasher.update(serde_json::to_vec(event).expect("event serializes"));
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, event: Event) {
        let index = self.entries.len() as u64;
        let digest = chain_digest(self.head(), index, &event);
        self.entries.push(TranscriptEntry {
            index,
            event,
            digest,
        });
    }

    pub fn extend<I: IntoIterator<Item = Event>>(&mut self, events: I) {
        for e in events {
            self.append(e);
        }
    }

    pub fn send(&mut self, sender: PartyId, receiver: Recipient, payload: Payload) {
        self.append(Event::Classical(ClassicalMessage::new(sender, receiver, payload)));
    }

    pub fn head(&self) -> &str {
        self.entries.last().map_or(GENESIS, |e| e.digest.as_str())
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn classical(&self) -> impl Iterator<Item = &ClassicalMessage> {
        self.entries.iter().filter_map(|e| match &e.event {
            Event::Classical(m) => Some(m),
            Event::Quantum(_) => None,
        })
    }

    pub fn quantum(&self) -> impl Iterator<Item = &QuantumEvent> {
        self.entries.iter().filter_map(|e| match &e.event {
            Event::Quantum(q) => Some(q),
            Event::Classical(_) => None,
        })
    }

    /// Recomputes the chain; false if any entry was altered, dropped or
    /// reordered, or any message is unauthenticated.
    pub fn verify(&self) -> bool {
        let mut prev = GENESIS.to_string();
        for (i, entry) in self.entries.iter().enumerate() {
            if entry.index != i as u64 {
                return false;
            }
            if let Event::Classical(m) = &entry.event {
                if !m.authenticated {
                    return false;
                }
            }
            let digest = chain_digest(&prev, entry.index, &entry.event);
            if digest != entry.digest {
                return false;
            }
            prev = digest;
        }
        true
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}
