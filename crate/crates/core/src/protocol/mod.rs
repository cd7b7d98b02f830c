//! The comparison protocol: configuration, channels, transcript and engine.
//!
//! A run distributes GHZ₃ triplets with decoys, checks the decoys,
//! validates entanglement on sacrificed triplets, executes every
//! millionaire's circuit and lets Trent announce the pairwise verdicts.

mod channel;
mod engine;
mod transcript;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AttackModel;
use crate::bitcore::{BitError, BitVector, MAX_BITS};
use crate::qsim::SimError;

pub use channel::{
    decoy_count, ghz3_state, measure_in_basis, Basis, CircuitChannel, Decoy, DecoyState, Sequence,
    Slot, Triplet,
};
pub use engine::{
    decoy_check, distribute_entanglement, run_protocol, run_quantum_phase, run_two_party,
    trent_compare_all, trent_compute_sum, validate_entanglement, ProtocolRun, TrentPrivate,
    ValidationOutcome,
};
pub use transcript::{ClassicalMessage, Event, Payload, QuantumEvent, Recipient, Register, Transcript, TranscriptEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartyId {
    Trent,
    Sophia,
    Alice(usize),
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Trent => write!(f, "Trent"),
            PartyId::Sophia => write!(f, "Sophia"),
            PartyId::Alice(i) => write!(f, "Alice{i}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("validation needs more than {requested} triplets, only {available} available")]
    InsufficientTriplets { requested: usize, available: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Bit(#[from] BitError),
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, ProtocolError> {
    Err(ProtocolError::Config(msg.into()))
}

/// Ordered partition of the circuit indices into sequential batches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BatchPlan(Vec<Vec<usize>>);

impl BatchPlan {
    /// Every circuit in one batch.
    pub fn parallel(n: usize) -> Self {
        Self(vec![(0..n).collect()])
    }

    /// One circuit per batch, in index order.
    pub fn sequential(n: usize) -> Self {
        Self((0..n).map(|i| vec![i]).collect())
    }

    /// Consecutive batches of at most `size` circuits.
    pub fn chunked(n: usize, size: usize) -> Self {
        let ids: Vec<usize> = (0..n).collect();
        Self(ids.chunks(size.max(1)).map(<[usize]>::to_vec).collect())
    }

    pub fn new(batches: Vec<Vec<usize>>) -> Self {
        Self(batches)
    }

    pub fn batches(&self) -> &[Vec<usize>] {
        &self.0
    }

    /// Blocks must be non-empty, disjoint and cover `0..n`.
    pub fn validate(&self, n: usize) -> Result<(), ProtocolError> {
        let mut seen = vec![false; n];
        for block in &self.0 {
            if block.is_empty() {
                return config_err("batch_plan contains an empty batch");
            }
            for &i in block {
                if i >= n {
                    return config_err(format!("batch_plan index {i} out of range for n = {n}"));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return config_err(format!("batch_plan lists circuit {i} twice"));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return config_err(format!("batch_plan omits circuit {missing}"));
        }
        Ok(())
    }
}

/// How an untouched circuit is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulationPath {
    #[default]
    Factored,
    StateVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub n: usize,
    pub m: usize,
    pub decoy_rate: f64,
    pub batch_plan: BatchPlan,
    pub attack: AttackModel,
    pub seed: u64,
    pub two_party_mode: bool,
    /// Largest decoy error rate that still passes the check.
    pub decoy_tolerance: f64,
    /// Extra triplets per circuit consumed by entanglement validation.
    pub sacrifice_count: usize,
    pub path: SimulationPath,
    /// Circuits the attack touches; `None` means all of them.
    pub attack_scope: Option<Vec<usize>>,
}

impl ProtocolConfig {
    pub const DEFAULT_SACRIFICE_COUNT: usize = 2;

    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            decoy_rate: 0.0,
            batch_plan: BatchPlan::parallel(n),
            attack: AttackModel::None,
            seed: 0,
            two_party_mode: false,
            decoy_tolerance: 0.0,
            sacrifice_count: Self::DEFAULT_SACRIFICE_COUNT,
            path: SimulationPath::Factored,
            attack_scope: None,
        }
    }

    pub fn two_party(m: usize) -> Self {
        Self {
            two_party_mode: true,
            ..Self::new(2, m)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_decoy_rate(mut self, rate: f64) -> Self {
        self.decoy_rate = rate;
        self
    }

    pub fn with_attack(mut self, attack: AttackModel) -> Self {
        self.attack = attack;
        self
    }

    pub fn with_batch_plan(mut self, plan: BatchPlan) -> Self {
        self.batch_plan = plan;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.decoy_tolerance = tolerance;
        self
    }

    pub fn with_sacrifice_count(mut self, count: usize) -> Self {
        self.sacrifice_count = count;
        self
    }

    pub fn with_path(mut self, path: SimulationPath) -> Self {
        self.path = path;
        self
    }

    pub fn with_attack_scope(mut self, scope: Vec<usize>) -> Self {
        self.attack_scope = Some(scope);
        self
    }

    /// Number of circuits the run executes.
    pub fn circuits(&self) -> usize {
        if self.two_party_mode {
            1
        } else {
            self.n
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n == 0 {
            return config_err("n must be at least 1");
        }
        if self.m == 0 || self.m > MAX_BITS {
            return config_err(format!("m must be in 1..={MAX_BITS}"));
        }
        if !(0.0..1.0).contains(&self.decoy_rate) {
            return config_err("decoy_rate must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.decoy_tolerance) {
            return config_err("decoy_tolerance must be in [0, 1]");
        }
        if self.two_party_mode && self.n != 2 {
            return config_err("two_party_mode requires n = 2");
        }
        self.batch_plan.validate(self.n)?;
        self.attack.validate().map_err(ProtocolError::Config)?;
        if let Some(scope) = &self.attack_scope {
            if let Some(bad) = scope.iter().find(|&&i| i >= self.circuits()) {
                return config_err(format!("attack scope lists circuit {bad}"));
            }
        }
        Ok(())
    }

    pub fn attacks_circuit(&self, circuit: usize) -> bool {
        !self.attack.is_none()
            && self
                .attack_scope
                .as_ref()
                .is_none_or(|scope| scope.contains(&circuit))
    }
}

/// The JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub decoy_rate: f64,
    #[serde(default)]
    pub batch_plan: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub attack: AttackSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub two_party_mode: bool,
    #[serde(default)]
    pub fortunes: Option<Vec<BitVector>>,
    #[serde(default)]
    pub sophia_secret: Option<BitVector>,
    #[serde(default)]
    pub decoy_tolerance: Option<f64>,
    #[serde(default)]
    pub sacrifice_count: Option<usize>,
}

/// An attack given either by name (`"entangle-measure"`) or as a full
/// object (`{"kind": "pns", "multi_photon_prob": 0.3}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttackSpec {
    Name(String),
    Model(AttackModel),
}

impl Default for AttackSpec {
    fn default() -> Self {
        AttackSpec::Model(AttackModel::None)
    }
}

impl AttackSpec {
    pub fn resolve(&self) -> Result<AttackModel, ProtocolError> {
        match self {
            AttackSpec::Name(name) => name.parse().map_err(ProtocolError::Config),
            AttackSpec::Model(model) => Ok(model.clone()),
        }
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(text).map_err(|e| ProtocolError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ProtocolError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProtocolError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The protocol config; `seed` applies when the file has none.
    pub fn to_config(&self, seed: u64) -> Result<ProtocolConfig, ProtocolError> {
        let mut config = ProtocolConfig::new(self.n, self.m);
        config.decoy_rate = self.decoy_rate;
        if let Some(plan) = &self.batch_plan {
            config.batch_plan = BatchPlan::new(plan.clone());
        }
        config.attack = self.attack.resolve()?;
        config.seed = self.seed.unwrap_or(seed);
        config.two_party_mode = self.two_party_mode;
        if let Some(t) = self.decoy_tolerance {
            config.decoy_tolerance = t;
        }
        if let Some(c) = self.sacrifice_count {
            config.sacrifice_count = c;
        }
        config.validate()?;
        if let Some(fortunes) = &self.fortunes {
            check_fortunes(&config, fortunes)?;
        }
        if let Some(s) = &self.sophia_secret {
            if s.len() != self.m {
                return config_err(format!("sophia_secret has {} bits, expected {}", s.len(), self.m));
            }
        }
        Ok(config)
    }
}

pub(crate) fn check_fortunes(config: &ProtocolConfig, fortunes: &[BitVector]) -> Result<(), ProtocolError> {
    if fortunes.len() != config.n {
        return config_err(format!("expected {} fortunes, got {}", config.n, fortunes.len()));
    }
    if let Some(f) = fortunes.iter().find(|f| f.len() != config.m) {
        return config_err(format!("fortune {f} has {} bits, expected {}", f.len(), config.m));
    }
    Ok(())
}
