//! Qubits in flight: GHZ₃ triplets, decoys and the sequences carrying them.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PartyId;
use crate::qsim::{SimError, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    Computational,
    Hadamard,
}

impl Basis {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random() {
            Basis::Hadamard
        } else {
            Basis::Computational
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoyState {
    Zero,
    One,
    Plus,
    Minus,
}

impl DecoyState {
    pub const ALL: [DecoyState; 4] = [
        DecoyState::Zero,
        DecoyState::One,
        DecoyState::Plus,
        DecoyState::Minus,
    ];

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.random_range(0..4)]
    }

    pub fn basis(self) -> Basis {
        match self {
            DecoyState::Zero | DecoyState::One => Basis::Computational,
            DecoyState::Plus | DecoyState::Minus => Basis::Hadamard,
        }
    }

    /// Reading expected when measured in [`DecoyState::basis`].
    pub fn bit(self) -> bool {
        matches!(self, DecoyState::One | DecoyState::Minus)
    }

    pub fn prepare(self) -> StateVector {
        let mut state = StateVector::zero(1).expect("one qubit");
        if self.bit() {
            state.apply_x(0).expect("qubit 0");
        }
        if self.basis() == Basis::Hadamard {
            state.apply_hadamard(0).expect("qubit 0");
        }
        state
    }
}

/// Measures `qubit` in `basis`, leaving it in the eigenstate that was read.
pub fn measure_in_basis<R: Rng + ?Sized>(
    state: &mut StateVector,
    qubit: usize,
    basis: Basis,
    rng: &mut R,
) -> Result<bool, SimError> {
    if basis == Basis::Hadamard {
        state.apply_hadamard(qubit)?;
    }
    let bit = state.measure_qubit(qubit, rng)?;
    if basis == Basis::Hadamard {
        state.apply_hadamard(qubit)?;
    }
    Ok(bit)
}

/// (|000⟩ + |111⟩)/√2 on qubits 0 (Trent), 1 and 2.
pub fn ghz3_state() -> StateVector {
    let mut state = StateVector::zero(3).expect("three qubits");
    state.apply_hadamard(0).expect("qubit 0");
    state.apply_cnot(0, 1).expect("qubits 0, 1");
    state.apply_cnot(0, 2).expect("qubits 0, 2");
    state
}

/// One bit position's entangled triplet. Qubit 0 stays with Trent, qubits 1
/// and 2 travel on the two legs, higher qubits belong to an eavesdropper.
///
/// Untouched triplets are kept symbolic and only expanded into a state
/// vector once something acts on them.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    state: Option<StateVector>,
    eve: Vec<usize>,
}

impl Default for Triplet {
    fn default() -> Self {
        Self::pristine()
    }
}

impl Triplet {
    pub fn pristine() -> Self {
        Self {
            state: None,
            eve: Vec::new(),
        }
    }

    /// An arbitrary three-qubit state in place of the GHZ triplet.
    pub fn from_state(state: StateVector) -> Result<Self, SimError> {
        if state.num_qubits() != 3 {
            return Err(SimError::TooFewParties(state.num_qubits()));
        }
        Ok(Self {
            state: Some(state),
            eve: Vec::new(),
        })
    }

    pub fn is_pristine(&self) -> bool {
        self.state.is_none()
    }

    pub fn state(&self) -> Option<&StateVector> {
        self.state.as_ref()
    }

    pub fn state_mut(&mut self) -> &mut StateVector {
        self.state.get_or_insert_with(ghz3_state)
    }

    pub fn eve_qubits(&self) -> &[usize] {
        &self.eve
    }

    /// Appends a |0⟩ qubit held by the eavesdropper.
    pub fn add_eve_qubit(&mut self) -> Result<usize, SimError> {
        let q = self.state_mut().push_zero_qubit()?;
        self.eve.push(q);
        Ok(q)
    }

    /// Computational-basis readings of qubits 0, 1, 2.
    pub fn measure_computational<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> Result<[bool; 3], SimError> {
        match &mut self.state {
            None => {
                let b = rng.random();
                Ok([b, b, b])
            }
            Some(state) => {
                let r = state.measure(&[0, 1, 2], rng)?;
                Ok([r.bit(0), r.bit(1), r.bit(2)])
            }
        }
    }
}

/// A decoy qubit, possibly entangled with eavesdropper qubits 1, 2, ….
#[derive(Debug, Clone, PartialEq)]
pub struct Decoy {
    pub prepared: DecoyState,
    pub state: StateVector,
}

impl Decoy {
    pub fn new(prepared: DecoyState) -> Self {
        Self {
            prepared,
            state: prepared.prepare(),
        }
    }

    /// Reads the decoy in its preparation basis; true on a mismatch.
    pub fn check<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool, SimError> {
        Ok(measure_in_basis(&mut self.state, 0, self.prepared.basis(), rng)? != self.prepared.bit())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Leg qubit of the triplet with this index.
    Entangled(usize),
    Decoy(usize),
}

/// The qubits Trent sends to one recipient for one circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub recipient: PartyId,
    /// Triplet qubit carried by this leg: 1 or 2.
    pub leg: usize,
    pub slots: Vec<Slot>,
    pub decoys: Vec<Decoy>,
}

impl Sequence {
    /// `entangled` triplet legs in order, with `decoys` random decoys at
    /// random positions.
    pub fn build<R: Rng + ?Sized>(
        recipient: PartyId,
        leg: usize,
        entangled: usize,
        decoys: usize,
        rng: &mut R,
    ) -> Self {
        let total = entangled + decoys;
        let mut is_decoy = vec![false; total];
        for p in sample(rng, total, decoys) {
            is_decoy[p] = true;
        }
        let mut slots = Vec::with_capacity(total);
        let mut decoy_states = Vec::with_capacity(decoys);
        let mut next_triplet = 0;
        for flag in is_decoy {
            if flag {
                slots.push(Slot::Decoy(decoy_states.len()));
                decoy_states.push(Decoy::new(DecoyState::random(rng)));
            } else {
                slots.push(Slot::Entangled(next_triplet));
                next_triplet += 1;
            }
        }
        Self {
            recipient,
            leg,
            slots,
            decoys: decoy_states,
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn decoy_positions(&self) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(p, s)| matches!(s, Slot::Decoy(_)).then_some(p))
            .collect()
    }

    pub fn entangled_count(&self) -> usize {
        self.slots.len() - self.decoys.len()
    }
}

/// Decoys per transmitted sequence: `⌈rate · 2m⌉`.
pub fn decoy_count(rate: f64, m: usize) -> usize {
    (rate * (2 * m) as f64).ceil() as usize
}

/// Everything Trent distributed for one circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitChannel {
    pub circuit: usize,
    pub triplets: Vec<Triplet>,
    pub legs: [Sequence; 2],
}
