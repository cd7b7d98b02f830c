use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AttackModel, ChannelSelect};
use crate::bitcore::{BitError, BitVector};
use crate::protocol::{run_protocol, PartyId, ProtocolConfig, ProtocolError, ProtocolRun};
use crate::rng::{stream, Domain};
use crate::stats::{chi_square_uniform, mutual_information_bits};

/// Repeated runs under one attack with random fortunes and secrets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub attack: AttackModel,
    pub trials: usize,
    pub n: usize,
    pub m: usize,
    pub decoy_rate: f64,
    /// Defaults to 1.0 so that decoy mismatches are counted without
    /// aborting, which keeps Eve's view of every run available.
    pub decoy_tolerance: f64,
    pub sacrifice_count: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(attack: AttackModel, n: usize, m: usize, trials: usize) -> Self {
        Self {
            attack,
            trials,
            n,
            m,
            decoy_rate: 0.5,
            decoy_tolerance: 1.0,
            sacrifice_count: ProtocolConfig::DEFAULT_SACRIFICE_COUNT,
            seed: 0,
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

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.decoy_tolerance = tolerance;
        self
    }

    fn protocol_config(&self, seed: u64) -> ProtocolConfig {
        ProtocolConfig::new(self.n, self.m)
            .with_seed(seed)
            .with_decoy_rate(self.decoy_rate)
            .with_tolerance(self.decoy_tolerance)
            .with_sacrifice_count(self.sacrifice_count)
            .with_attack(self.attack.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackExperiment {
    pub attack: String,
    pub trials: usize,
    pub decoys: u64,
    /// Fraction of checked decoys that read wrong.
    pub detection_rate: f64,
    /// Mutual information between each fortune and Eve's estimate of its
    /// encoded sum, pooled over circuits.
    pub eve_mi_bits: f64,
    /// χ² p-value of Eve's estimates against uniform over 𝔹^m.
    pub eve_estimate_p_value: Option<f64>,
    pub verdict_error_rate: f64,
    /// Runs aborted at the configured tolerance.
    pub abort_rate: f64,
    /// Runs with at least one wrong decoy reading.
    pub flagged_rate: f64,
}

struct TrialSummary {
    decoys: u64,
    mismatches: u64,
    aborted: bool,
    verdicts: u64,
    wrong: u64,
    /// `(circuit, f_i, s, Eve's estimate)` for every executed circuit.
    views: Vec<(usize, BitVector, BitVector, BitVector)>,
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    stream(seed, Domain::Experiment, trial as u64).random()
}

fn run_trial(config: &ProtocolConfig) -> Result<(ProtocolRun, Vec<BitVector>), ProtocolError> {
    let mut rng = stream(config.seed, Domain::Fortunes, 0);
    let fortunes: Vec<BitVector> = (0..config.n)
        .map(|_| BitVector::random(config.m, &mut rng))
        .collect::<Result<_, _>>()?;
    Ok((run_protocol(config, &fortunes, None)?, fortunes))
}

fn summarize(run: &ProtocolRun, fortunes: &[BitVector]) -> TrialSummary {
    let wrong = run
        .report
        .verdicts
        .iter()
        .filter(|v| v.equal != (fortunes[v.i] == fortunes[v.j]))
        .count() as u64;
    let s = run.secret.expect("three-party run");
    let views = (0..fortunes.len())
        .filter_map(|i| run.eve.estimate(i).map(|e| (i, fortunes[i], s, e)))
        .collect();
    TrialSummary {
        decoys: run.report.detection.decoys,
        mismatches: run.report.detection.mismatches,
        aborted: run.report.aborted,
        verdicts: run.report.verdicts.len() as u64,
        wrong,
        views,
    }
}

fn run_trials(
    cfg: &ExperimentConfig,
    build: impl Fn(u64) -> ProtocolConfig + Sync,
) -> Result<Vec<TrialSummary>, ProtocolError> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let (run, fortunes) = run_trial(&build(trial_seed(cfg.seed, t)))?;
            Ok(summarize(&run, &fortunes))
        })
        .collect()
}

fn uniformity_p_value(m: usize, values: impl Iterator<Item = BitVector>) -> Option<f64> {
    if m > 12 {
        return None;
    }
    let mut counts = vec![0u64; 1 << m];
    let mut any = false;
    for v in values {
        counts[v.value() as usize] += 1;
        any = true;
    }
    any.then(|| chi_square_uniform(&counts).p_value)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Detection rate, Eve's information gain and verdict damage for
/// `cfg.trials` independent runs.
pub fn run_attack_experiment(cfg: &ExperimentConfig) -> Result<AttackExperiment, ProtocolError> {
    cfg.protocol_config(0).validate()?;
    let trials = run_trials(cfg, |seed| cfg.protocol_config(seed))?;
    let decoys: u64 = trials.iter().map(|t| t.decoys).sum();
    let mismatches: u64 = trials.iter().map(|t| t.mismatches).sum();
    let pairs: Vec<(BitVector, BitVector)> = trials
        .iter()
        .flat_map(|t| t.views.iter().map(|&(_, f, _, e)| (f, e)))
        .collect();
    Ok(AttackExperiment {
        attack: cfg.attack.name().to_string(),
        trials: cfg.trials,
        decoys,
        detection_rate: ratio(mismatches, decoys),
        eve_mi_bits: mutual_information_bits(&pairs),
        eve_estimate_p_value: uniformity_p_value(cfg.m, pairs.iter().map(|p| p.1)),
        verdict_error_rate: ratio(
            trials.iter().map(|t| t.wrong).sum(),
            trials.iter().map(|t| t.verdicts).sum(),
        ),
        abort_rate: ratio(trials.iter().filter(|t| t.aborted).count() as u64, cfg.trials as u64),
        flagged_rate: ratio(
            trials.iter().filter(|t| t.mismatches > 0).count() as u64,
            cfg.trials as u64,
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantReport {
    pub role: PartyId,
    pub target: usize,
    pub trials: usize,
    pub detection_rate: f64,
    /// χ² p-value of the insider's guesses against uniform over 𝔹^m. Alice
    /// guesses the target's encoded sum, Sophia the target's fortune.
    pub posterior_p_value: Option<f64>,
    /// Information about the target's fortune carried by the guess together
    /// with the insider's own secret.
    pub mi_bits: f64,
}

/// An insider mounts `strategy` on Alice_`target`'s leg and combines the
/// result with prior knowledge: Alice_j knows `f_j`, Sophia knows `s`.
/// Trent is not simulated; see [`trent_fortune_candidates`].
pub fn participant_attack(
    role: PartyId,
    strategy: AttackModel,
    target: usize,
    base: &ExperimentConfig,
) -> Result<ParticipantReport, ProtocolError> {
    match role {
        PartyId::Trent => {
            return Err(ProtocolError::Unsupported(
                "Trent as attacker is modelled analytically only".into(),
            ))
        }
        PartyId::Alice(j) if j == target || j >= base.n => {
            return Err(ProtocolError::Config(format!(
                "Alice{j} cannot attack circuit {target}"
            )))
        }
        _ => {}
    }
    if strategy.is_none() {
        return Err(ProtocolError::Config("participant attack needs a strategy".into()));
    }
    if target >= base.n {
        return Err(ProtocolError::Config(format!("no circuit {target}")));
    }
    let attack = strategy.with_channel(ChannelSelect::Alice);
    let build = |seed| {
        let mut cfg = base.protocol_config(seed);
        cfg.attack = attack.clone();
        cfg.with_attack_scope(vec![target])
    };
    build(0).validate()?;
    let trials = (0..base.trials)
        .into_par_iter()
        .map(|t| {
            let (run, fortunes) = run_trial(&build(trial_seed(base.seed, t)))?;
            let own = match role {
                PartyId::Alice(j) => Some(fortunes[j]),
                _ => None,
            };
            Ok((summarize(&run, &fortunes), own))
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;

    let mut guesses = Vec::new();
    let mut joint = Vec::new();
    for (summary, own) in &trials {
        for &(i, f, s, e) in summary.views.iter().filter(|v| v.0 == target) {
            debug_assert_eq!(i, target);
            let (guess, knowledge) = match role {
                PartyId::Sophia => (e.xor(&s).expect("same length"), s),
                _ => (e, own.expect("insider fortune recorded")),
            };
            guesses.push(guess);
            joint.push((f, (guess, knowledge)));
        }
    }
    let decoys: u64 = trials.iter().map(|t| t.0.decoys).sum();
    let mismatches: u64 = trials.iter().map(|t| t.0.mismatches).sum();
    Ok(ParticipantReport {
        role,
        target,
        trials: base.trials,
        detection_rate: ratio(mismatches, decoys),
        posterior_p_value: uniformity_p_value(base.m, guesses.into_iter()),
        mi_bits: mutual_information_bits(&joint),
    })
}

/// Fortunes consistent with an encoded sum Trent holds: every `f` for which
/// some secret `s` gives `s ⊕ f = sum`. Exhaustive, so `sum.len() ≤ 10`.
pub fn trent_fortune_candidates(sum: &BitVector) -> Result<Vec<BitVector>, BitError> {
    let m = sum.len();
    if m > 10 {
        return Err(BitError::EnumerationCap { len: m, cap: 10 });
    }
    let mut candidates = Vec::new();
    for f in BitVector::enumerate(m)? {
        let mut secrets = BitVector::enumerate(m)?;
        if secrets.any(|s| s.xor(&f).ok() == Some(*sum)) {
            candidates.push(f);
        }
    }
    Ok(candidates)
}

#[cfg(test)]
fn label_counts<I: IntoIterator<Item = String>>(labels: I) -> std::collections::HashMap<String, u64> {
    let mut counts = std::collections::HashMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
}
