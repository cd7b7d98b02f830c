use std::ops::Range;

use super::SimError;

/// One party's slice of a circuit: an `m`-qubit input register and, for
/// parties that apply an oracle, a single output qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyRegisters {
    pub name: String,
    pub input: Range<usize>,
    pub output: Option<usize>,
}

impl PartyRegisters {
    pub fn input_qubits(&self) -> Vec<usize> {
        self.input.clone().collect()
    }
}

/// Assignment of named registers to qubit indices.
///
/// Parties are listed most significant first, so for the three-party
/// circuit the basis ket reads `|x⟩_T |−⟩_S |x⟩_S |−⟩_A |x⟩_A` left to right
/// and Alice's input register occupies qubits `0..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    m: usize,
    parties: Vec<PartyRegisters>,
    total: usize,
}

impl RegisterLayout {
    /// `specs` lists `(name, has_output)` per party, most significant first.
    pub fn new(m: usize, specs: &[(&str, bool)]) -> Result<Self, SimError> {
        if m == 0 {
            return Err(SimError::EmptyRegister);
        }
        let mut next = 0usize;
        let mut parties = Vec::with_capacity(specs.len());
        for &(name, has_output) in specs.iter().rev() {
            let input = next..next + m;
            next += m;
            let output = has_output.then(|| {
                next += 1;
                next - 1
            });
            parties.push(PartyRegisters {
                name: name.to_string(),
                input,
                output,
            });
        }
        parties.reverse();
        Ok(Self {
            m,
            parties,
            total: next,
        })
    }

    /// TIR, SIR+SOR, AIR+AOR: the `3m + 2` qubits of one millionaire's circuit.
    pub fn three_party(m: usize) -> Result<Self, SimError> {
        Self::new(m, &[("T", false), ("S", true), ("A", true)])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn total_qubits(&self) -> usize {
        self.total
    }

    pub fn parties(&self) -> &[PartyRegisters] {
        &self.parties
    }

    pub fn party(&self, index: usize) -> &PartyRegisters {
        &self.parties[index]
    }

    /// The qubits at bit position `k` across all parties; one GHZ tuple.
    pub fn position(&self, k: usize) -> Vec<usize> {
        self.parties.iter().map(|p| p.input.start + k).collect()
    }

    pub fn output_qubits(&self) -> Vec<usize> {
        self.parties.iter().filter_map(|p| p.output).collect()
    }
}
