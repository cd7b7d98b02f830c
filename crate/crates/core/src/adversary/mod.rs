//! Eavesdropping models on the quantum channel and the experiments that
//! measure how often they are caught and what they learn.

mod experiment;
mod inject;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitcore::BitVector;
use crate::protocol::{Basis, PartyId};

pub use experiment::{
    participant_attack, run_attack_experiment, trent_fortune_candidates, AttackExperiment,
    ExperimentConfig, ParticipantReport,
};
pub use inject::intercept;

/// Which transmitted legs an attack touches. In two-party mode `Sophia`
/// names the first millionaire's leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelSelect {
    Sophia,
    Alice,
    Both,
}

impl ChannelSelect {
    /// Whether triplet leg `leg` (1 or 2) is covered.
    pub fn covers(self, leg: usize) -> bool {
        match self {
            ChannelSelect::Sophia => leg == 1,
            ChannelSelect::Alice => leg == 2,
            ChannelSelect::Both => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisPolicy {
    #[default]
    Computational,
    Random,
}

/// What Eve forwards after intercepting a qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Substitute {
    /// Measure in a random basis and forward the eigenstate read.
    #[default]
    MeasuredRandomBasis,
    /// Keep the original and forward |0⟩.
    FreshZero,
}

fn both() -> ChannelSelect {
    ChannelSelect::Both
}

fn alice() -> ChannelSelect {
    ChannelSelect::Alice
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackModel {
    None,
    MeasureResend {
        #[serde(default)]
        basis: BasisPolicy,
        #[serde(default = "both")]
        channel: ChannelSelect,
    },
    InterceptResend {
        #[serde(default)]
        substitute: Substitute,
        #[serde(default = "both")]
        channel: ChannelSelect,
    },
    EntangleMeasure {
        #[serde(default = "alice")]
        channel: ChannelSelect,
    },
    Pns {
        multi_photon_prob: f64,
        #[serde(default = "alice")]
        channel: ChannelSelect,
    },
}

impl AttackModel {
    pub fn measure_resend() -> Self {
        AttackModel::MeasureResend {
            basis: BasisPolicy::Computational,
            channel: ChannelSelect::Both,
        }
    }

    pub fn intercept_resend() -> Self {
        AttackModel::InterceptResend {
            substitute: Substitute::MeasuredRandomBasis,
            channel: ChannelSelect::Both,
        }
    }

    pub fn entangle_measure() -> Self {
        AttackModel::EntangleMeasure {
            channel: ChannelSelect::Alice,
        }
    }

    pub fn pns(multi_photon_prob: f64) -> Self {
        AttackModel::Pns {
            multi_photon_prob,
            channel: ChannelSelect::Alice,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, AttackModel::None)
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackModel::None => "none",
            AttackModel::MeasureResend { .. } => "measure-resend",
            AttackModel::InterceptResend { .. } => "intercept-resend",
            AttackModel::EntangleMeasure { .. } => "entangle-measure",
            AttackModel::Pns { .. } => "pns",
        }
    }

    pub fn channel(&self) -> Option<ChannelSelect> {
        match self {
            AttackModel::None => None,
            AttackModel::MeasureResend { channel, .. }
            | AttackModel::InterceptResend { channel, .. }
            | AttackModel::EntangleMeasure { channel }
            | AttackModel::Pns { channel, .. } => Some(*channel),
        }
    }

    pub fn with_channel(self, channel: ChannelSelect) -> Self {
        match self {
            AttackModel::None => AttackModel::None,
            AttackModel::MeasureResend { basis, .. } => AttackModel::MeasureResend { basis, channel },
            AttackModel::InterceptResend { substitute, .. } => {
                AttackModel::InterceptResend { substitute, channel }
            }
            AttackModel::EntangleMeasure { .. } => AttackModel::EntangleMeasure { channel },
            AttackModel::Pns {
                multi_photon_prob, ..
            } => AttackModel::Pns {
                multi_photon_prob,
                channel,
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if let AttackModel::Pns {
            multi_photon_prob, ..
        } = self
        {
            if !(0.0..=1.0).contains(multi_photon_prob) {
                return Err(format!("multi_photon_prob {multi_photon_prob} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for AttackModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a bare attack name with default parameters; `pns` means every
/// pulse is multi-photon.
impl FromStr for AttackModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(AttackModel::None),
            "measure-resend" => Ok(AttackModel::measure_resend()),
            "intercept-resend" => Ok(AttackModel::intercept_resend()),
            "entangle-measure" => Ok(AttackModel::entangle_measure()),
            "pns" => Ok(AttackModel::pns(1.0)),
            other => Err(format!(
                "unknown attack {other:?}; expected none, measure-resend, intercept-resend, entangle-measure or pns"
            )),
        }
    }
}

/// One qubit Eve measured in transit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub circuit: usize,
    pub recipient: PartyId,
    pub slot: usize,
    pub basis: Basis,
    pub bit: bool,
}

/// Readout of the ancillas Eve entangled with one circuit. Bit `k` of
/// `y3` is the parity of the readings at position `k`; `held` marks the
/// positions where an ancilla was held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaReadout {
    pub circuit: usize,
    pub y3: BitVector,
    pub held: BitVector,
}

/// The public readings announced for one circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicReadings {
    pub circuit: usize,
    pub y1: BitVector,
    pub y0: BitVector,
}

/// Everything an eavesdropper ends a run with. Trent's readings are absent
/// by construction.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EveRecord {
    pub observations: Vec<Observation>,
    pub ancillas: Vec<AncillaReadout>,
    pub public: Vec<PublicReadings>,
}

impl EveRecord {
    pub fn ancilla(&self, circuit: usize) -> Option<&AncillaReadout> {
        self.ancillas.iter().find(|a| a.circuit == circuit)
    }

    pub fn public_readings(&self, circuit: usize) -> Option<&PublicReadings> {
        self.public.iter().find(|p| p.circuit == circuit)
    }

    /// Eve's best guess at the encoded sum of a circuit: `y1 ⊕ y0 ⊕ y3`,
    /// with `y3 = 0` where no ancilla was held.
    pub fn estimate(&self, circuit: usize) -> Option<BitVector> {
        let public = self.public_readings(circuit)?;
        let guess = public.y1.xor(&public.y0).expect("same length");
        Some(match self.ancilla(circuit) {
            Some(a) => guess.xor(&a.y3).expect("same length"),
            None => guess,
        })
    }
}
