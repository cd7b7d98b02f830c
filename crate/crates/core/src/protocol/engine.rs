use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use super::channel::{decoy_count, measure_in_basis, Basis, CircuitChannel, Sequence, Triplet};
use super::transcript::{Event, Payload, QuantumEvent, Recipient, Register, Transcript};
use super::{check_fortunes, PartyId, ProtocolConfig, ProtocolError, SimulationPath};
use crate::adversary::{intercept, AncillaReadout, EveRecord, Observation, PublicReadings};
use crate::bitcore::{xor_all, BitError, BitVector};
use crate::qsim::{
    run_qc_factored, sample_parity_constrained, GhzCircuit, MeasurementOutcome, Party, SimError,
};
use crate::report::{
    compute_efficiency, AbortInfo, AbortStage, ComparisonReport, DetectionStats, EfficiencyMetrics,
    Verdict,
};
use crate::rng::{stream, Domain, SimRng};

/// Trent's private readings and encoded sums, one per circuit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrentPrivate {
    pub y2: Vec<BitVector>,
    pub sums: Vec<BitVector>,
}

/// A complete run: the public report plus the private views a test harness
/// needs to check it.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub report: ComparisonReport,
    pub transcript: Transcript,
    pub outcomes: Vec<MeasurementOutcome>,
    pub trent: TrentPrivate,
    pub eve: EveRecord,
    /// Sophia's secret; `None` in two-party mode.
    pub secret: Option<BitVector>,
}

/// The two oracle holders of one circuit and what they imprint.
#[derive(Debug, Clone)]
struct CircuitPlan {
    index: usize,
    holders: [PartyId; 2],
    oracles: [BitVector; 2],
}

fn circuit_plans(config: &ProtocolConfig, fortunes: &[BitVector], secret: Option<BitVector>) -> Vec<CircuitPlan> {
    if config.two_party_mode {
        return vec![CircuitPlan {
            index: 0,
            holders: [PartyId::Alice(0), PartyId::Alice(1)],
            oracles: [fortunes[0], fortunes[1]],
        }];
    }
    let s = secret.expect("three-party runs carry a secret");
    fortunes
        .iter()
        .enumerate()
        .map(|(i, f)| CircuitPlan {
            index: i,
            holders: [PartyId::Sophia, PartyId::Alice(i)],
            oracles: [s, *f],
        })
        .collect()
}

fn circuit_stream(config: &ProtocolConfig, domain: Domain, circuit: usize) -> SimRng {
    stream(config.seed, domain, circuit as u64)
}

/// Runs `work` for every circuit, batch after batch, with the circuits of a
/// batch in parallel. Results come back in circuit order.
fn scheduled<T, F>(config: &ProtocolConfig, work: F) -> Result<Vec<T>, ProtocolError>
where
    T: Send,
    F: Fn(usize) -> Result<T, ProtocolError> + Sync,
{
    let circuits = config.circuits();
    let plan = if config.two_party_mode {
        super::BatchPlan::parallel(1)
    } else {
        config.batch_plan.clone()
    };
    let mut slots: Vec<Option<T>> = (0..circuits).map(|_| None).collect();
    for batch in plan.batches() {
        let done: Vec<(usize, T)> = batch
            .par_iter()
            .map(|&i| work(i).map(|r| (i, r)))
            .collect::<Result<_, _>>()?;
        for (i, r) in done {
            slots[i] = Some(r);
        }
    }
    Ok(slots.into_iter().map(|s| s.expect("plan covers every circuit")).collect())
}

/// Trent prepares `m + sacrifice_count` triplets for one circuit and sends
/// each leg, padded with decoys, to its holder. Qubit 0 of every triplet
/// stays with Trent.
pub fn distribute_entanglement(
    config: &ProtocolConfig,
    circuit: usize,
    holders: [PartyId; 2],
) -> (CircuitChannel, Vec<Event>) {
    let mut rng = circuit_stream(config, Domain::Distribution, circuit);
    let total = config.m + config.sacrifice_count;
    let decoys = decoy_count(config.decoy_rate, config.m);
    let legs = [
        Sequence::build(holders[0], 1, total, decoys, &mut rng),
        Sequence::build(holders[1], 2, total, decoys, &mut rng),
    ];
    let events = legs
        .iter()
        .map(|seq| {
            Event::Quantum(QuantumEvent {
                circuit,
                sender: PartyId::Trent,
                receiver: seq.recipient,
                qubits: seq.len(),
            })
        })
        .collect();
    let channel = CircuitChannel {
        circuit,
        triplets: vec![Triplet::pristine(); total],
        legs,
    };
    (channel, events)
}

fn classical(sender: PartyId, receiver: Recipient, payload: Payload) -> Event {
    Event::Classical(super::transcript::ClassicalMessage::new(sender, receiver, payload))
}

/// Trent announces decoy positions and bases per leg, each holder reads its
/// decoys in the announced bases and reports, Trent broadcasts the tally.
pub fn decoy_check<R: Rng + ?Sized>(
    channel: &mut CircuitChannel,
    rng: &mut R,
) -> Result<(DetectionStats, Vec<Event>), SimError> {
    let mut events = Vec::new();
    let mut decoys = 0u64;
    let mut mismatches = 0u64;
    for seq in channel.legs.iter_mut() {
        let positions = seq.decoy_positions();
        let bases: Vec<Basis> = seq.decoys.iter().map(|d| d.prepared.basis()).collect();
        events.push(classical(
            PartyId::Trent,
            Recipient::Party(seq.recipient),
            Payload::DecoyAnnouncement {
                circuit: channel.circuit,
                positions,
                bases: bases.clone(),
            },
        ));
        let mut readings = Vec::with_capacity(seq.decoys.len());
        for (decoy, basis) in seq.decoys.iter_mut().zip(bases) {
            let reading = measure_in_basis(&mut decoy.state, 0, basis, rng)?;
            readings.push(reading);
            decoys += 1;
            mismatches += u64::from(reading != decoy.prepared.bit());
        }
        events.push(classical(
            seq.recipient,
            Recipient::Party(PartyId::Trent),
            Payload::DecoyReadings {
                circuit: channel.circuit,
                readings,
            },
        ));
    }
    events.push(classical(
        PartyId::Trent,
        Recipient::Broadcast,
        Payload::DecoyTally {
            circuit: channel.circuit,
            decoys,
            mismatches,
        },
    ));
    Ok((DetectionStats::from_counts(decoys, mismatches), events))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOutcome {
    /// Indices of the sacrificed triplets, ascending.
    pub positions: Vec<usize>,
    /// Readings of qubits 0, 1, 2 for each sacrificed triplet.
    pub readings: Vec<[bool; 3]>,
    pub mismatches: u64,
    /// Unsacrificed triplets in their original order.
    pub remaining: Vec<Triplet>,
}

impl ValidationOutcome {
    pub fn pass(&self) -> bool {
        self.mismatches == 0
    }

    pub fn checked(&self) -> u64 {
        self.positions.len() as u64
    }
}

/// Sacrifices `sacrifice_count` randomly chosen triplets: all three holders
/// read them in the computational basis and any disagreement fails.
pub fn validate_entanglement<R: Rng + ?Sized>(
    triplets: Vec<Triplet>,
    sacrifice_count: usize,
    rng: &mut R,
) -> Result<ValidationOutcome, ProtocolError> {
    if sacrifice_count >= triplets.len() {
        return Err(ProtocolError::InsufficientTriplets {
            requested: sacrifice_count,
            available: triplets.len(),
        });
    }
    let mut positions = sample(rng, triplets.len(), sacrifice_count).into_vec();
    positions.sort_unstable();
    let mut readings = Vec::with_capacity(sacrifice_count);
    let mut remaining = Vec::with_capacity(triplets.len() - sacrifice_count);
    for (i, mut t) in triplets.into_iter().enumerate() {
        if positions.binary_search(&i).is_ok() {
            readings.push(t.measure_computational(rng)?);
        } else {
            remaining.push(t);
        }
    }
    let mismatches = readings
        .iter()
        .filter(|r| !(r[0] == r[1] && r[1] == r[2]))
        .count() as u64;
    Ok(ValidationOutcome {
        positions,
        readings,
        mismatches,
        remaining,
    })
}

fn validation_events(circuit: usize, holders: [PartyId; 2], v: &ValidationOutcome) -> Vec<Event> {
    let mut events = vec![classical(
        PartyId::Trent,
        Recipient::Broadcast,
        Payload::SacrificeAnnouncement {
            circuit,
            positions: v.positions.clone(),
        },
    )];
    for (j, holder) in holders.into_iter().enumerate() {
        events.push(classical(
            holder,
            Recipient::Party(PartyId::Trent),
            Payload::SacrificeReadings {
                circuit,
                readings: v.readings.iter().map(|r| r[j + 1]).collect(),
            },
        ));
    }
    events.push(classical(
        PartyId::Trent,
        Recipient::Broadcast,
        Payload::ValidationTally {
            circuit,
            checked: v.checked(),
            mismatches: v.mismatches,
        },
    ));
    events
}

/// One bit position of a circuit whose triplet was disturbed: outputs in
/// |−⟩, the holders' oracle bits, Hadamards, readout. Eve's ancillas are
/// read in the Hadamard basis and contribute their parity.
fn simulate_position<R: Rng + ?Sized>(
    triplet: &Triplet,
    oracle_bits: [bool; 2],
    rng: &mut R,
) -> Result<([bool; 3], Option<bool>), SimError> {
    let mut state = triplet.state().expect("disturbed triplets are materialized").clone();
    let outputs = [state.push_zero_qubit()?, state.push_zero_qubit()?];
    for &o in &outputs {
        state.apply_x(o)?;
        state.apply_hadamard(o)?;
    }
    for j in 0..2 {
        let oracle = BitVector::new(1, u64::from(oracle_bits[j]))?;
        state.apply_phase_oracle(&oracle, &[j + 1], outputs[j])?;
    }
    for q in 0..3 {
        state.apply_hadamard(q)?;
    }
    let r = state.measure(&[0, 1, 2], rng)?;
    let eve = triplet.eve_qubits();
    let y3 = if eve.is_empty() {
        None
    } else {
        for &q in eve {
            state.apply_hadamard(q)?;
        }
        Some(state.measure(eve, rng)?.count_ones() % 2 == 1)
    };
    Ok(([r.bit(0), r.bit(1), r.bit(2)], y3))
}

fn execute_circuit<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    plan: &CircuitPlan,
    data: &[Triplet],
    rng: &mut R,
) -> Result<(MeasurementOutcome, Option<AncillaReadout>), ProtocolError> {
    let m = config.m;
    let [o1, o2] = plan.oracles;
    if data.iter().all(Triplet::is_pristine) {
        let outcome = match config.path {
            SimulationPath::Factored => run_qc_factored(m, &o1, &o2, rng)?,
            SimulationPath::StateVector => {
                let circuit = GhzCircuit::new(
                    m,
                    vec![
                        Party::passive("T"),
                        Party::with_oracle(&plan.holders[0].to_string(), o1),
                        Party::with_oracle(&plan.holders[1].to_string(), o2),
                    ],
                )?;
                MeasurementOutcome::from_registers(&circuit.run_full(rng)?)
            }
        };
        return Ok((outcome, None));
    }
    let mut regs = [vec![false; m], vec![false; m], vec![false; m]];
    let mut y3 = vec![false; m];
    let mut held = vec![false; m];
    for (k, triplet) in data.iter().enumerate() {
        let bits = [o1.bit(k), o2.bit(k)];
        let readings = if triplet.is_pristine() {
            let target = BitVector::new(1, u64::from(bits[0] ^ bits[1]))?;
            let r = sample_parity_constrained(3, &target, rng);
            [r[0].bit(0), r[1].bit(0), r[2].bit(0)]
        } else {
            let (r, eve) = simulate_position(triplet, bits, rng)?;
            if let Some(b) = eve {
                y3[k] = b;
                held[k] = true;
            }
            r
        };
        for j in 0..3 {
            regs[j][k] = readings[j];
        }
    }
    let pack = |bits: &[bool]| BitVector::from_bits_lsb_first(bits);
    let outcome = MeasurementOutcome {
        y2: pack(&regs[0])?,
        y1: pack(&regs[1])?,
        y0: pack(&regs[2])?,
    };
    let readout = held.iter().any(|&h| h).then(|| AncillaReadout {
        circuit: plan.index,
        y3: pack(&y3).expect("m validated"),
        held: pack(&held).expect("m validated"),
    });
    Ok((outcome, readout))
}

/// `y2 ⊕ y1 ⊕ y0`, computed by Trent and kept private.
pub fn trent_compute_sum(y2: &BitVector, y1: &BitVector, y0: &BitVector) -> Result<BitVector, BitError> {
    xor_all(&[*y2, *y1, *y0])
}

/// One verdict per pair `i < j`, lexicographic: equal iff the sums match.
pub fn trent_compare_all(sums: &[BitVector]) -> Vec<Verdict> {
    let n = sums.len();
    let mut verdicts = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            verdicts.push(Verdict {
                i,
                j,
                equal: sums[i] == sums[j],
            });
        }
    }
    verdicts
}

fn resolve_secret(config: &ProtocolConfig, secret: Option<BitVector>) -> Result<Option<BitVector>, ProtocolError> {
    if config.two_party_mode {
        return Ok(None);
    }
    let s = match secret {
        Some(s) => s,
        None => BitVector::random(config.m, &mut stream(config.seed, Domain::Secret, 0))?,
    };
    if s.len() != config.m {
        return Err(ProtocolError::Config(format!(
            "secret has {} bits, expected {}",
            s.len(),
            config.m
        )));
    }
    Ok(Some(s))
}

fn efficiency(config: &ProtocolConfig) -> EfficiencyMetrics {
    let m = config.m as u64;
    if config.two_party_mode {
        EfficiencyMetrics::new(2 * m, 3 * m + 2)
    } else {
        compute_efficiency(config.n as u64, m)
    }
}

/// The quantum phase of an undisturbed run, circuit outcomes in index
/// order. Draws from the same streams as [`run_protocol`].
pub fn run_quantum_phase(
    config: &ProtocolConfig,
    fortunes: &[BitVector],
    secret: &BitVector,
) -> Result<Vec<MeasurementOutcome>, ProtocolError> {
    config.validate()?;
    check_fortunes(config, fortunes)?;
    let secret = resolve_secret(config, Some(*secret))?;
    let plans = circuit_plans(config, fortunes, secret);
    let data = vec![Triplet::pristine(); config.m];
    scheduled(config, |i| {
        let mut rng = circuit_stream(config, Domain::Quantum, i);
        Ok(execute_circuit(config, &plans[i], &data, &mut rng)?.0)
    })
}

struct Prepared {
    transmission: Vec<Event>,
    validation_events: Vec<Event>,
    detection: DetectionStats,
    validation: ValidationOutcome,
    observations: Vec<Observation>,
}

fn prepare_circuit(config: &ProtocolConfig, plan: &CircuitPlan) -> Result<Prepared, ProtocolError> {
    let i = plan.index;
    let (mut channel, mut transmission) = distribute_entanglement(config, i, plan.holders);
    let observations = if config.attacks_circuit(i) {
        intercept(&config.attack, &mut channel, &mut circuit_stream(config, Domain::Attack, i))?
    } else {
        Vec::new()
    };
    let (detection, events) = decoy_check(&mut channel, &mut circuit_stream(config, Domain::DecoyCheck, i))?;
    transmission.extend(events);
    let validation = validate_entanglement(
        std::mem::take(&mut channel.triplets),
        config.sacrifice_count,
        &mut circuit_stream(config, Domain::Validation, i),
    )?;
    let validation_events = validation_events(i, plan.holders, &validation);
    Ok(Prepared {
        transmission,
        validation_events,
        detection,
        validation,
        observations,
    })
}

/// Distribution, decoy check and validation for every circuit, then the
/// quantum phase and Trent's classical post-processing. A failed check
/// aborts the whole run before any circuit executes.
///
/// `secret` fixes Sophia's number; otherwise it is drawn from the seed.
pub fn run_protocol(
    config: &ProtocolConfig,
    fortunes: &[BitVector],
    secret: Option<BitVector>,
) -> Result<ProtocolRun, ProtocolError> {
    config.validate()?;
    check_fortunes(config, fortunes)?;
    let secret = resolve_secret(config, secret)?;
    let plans = circuit_plans(config, fortunes, secret);

    let prepared = scheduled(config, |i| prepare_circuit(config, &plans[i]))?;

    let mut transcript = Transcript::new();
    let mut eve = EveRecord::default();
    let mut detection = DetectionStats::default();
    for p in &prepared {
        transcript.extend(p.transmission.iter().cloned());
        detection = detection.merge(&p.detection);
        eve.observations.extend(p.observations.iter().copied());
    }

    let mut report = ComparisonReport {
        verdicts: Vec::new(),
        efficiency: efficiency(config),
        detection,
        aborted: false,
        abort: None,
        seed: config.seed,
    };
    let abort = |mut report: ComparisonReport, mut transcript: Transcript, eve, info: AbortInfo| {
        transcript.send(PartyId::Trent, Recipient::Broadcast, Payload::Abort { stage: info.stage });
        report.aborted = true;
        report.abort = Some(info);
        ProtocolRun {
            report,
            transcript,
            outcomes: Vec::new(),
            trent: TrentPrivate::default(),
            eve,
            secret,
        }
    };

    if detection.error_rate > config.decoy_tolerance {
        let info = AbortInfo {
            stage: AbortStage::DecoyCheck,
            error_rate: detection.error_rate,
        };
        return Ok(abort(report, transcript, eve, info));
    }
    let mut checked = 0u64;
    let mut failed = 0u64;
    for p in &prepared {
        transcript.extend(p.validation_events.iter().cloned());
        checked += p.validation.checked();
        failed += p.validation.mismatches;
    }
    if failed > 0 {
        let info = AbortInfo {
            stage: AbortStage::EntanglementValidation,
            error_rate: failed as f64 / checked as f64,
        };
        return Ok(abort(report, transcript, eve, info));
    }

    let executed = scheduled(config, |i| {
        let mut rng = circuit_stream(config, Domain::Quantum, i);
        execute_circuit(config, &plans[i], &prepared[i].validation.remaining, &mut rng)
    })?;

    let mut outcomes = Vec::with_capacity(executed.len());
    let mut trent = TrentPrivate::default();
    for (plan, (outcome, readout)) in plans.iter().zip(executed) {
        for (holder, register, value) in [
            (plan.holders[0], Register::Y1, outcome.y1),
            (plan.holders[1], Register::Y0, outcome.y0),
        ] {
            transcript.send(
                holder,
                Recipient::Party(PartyId::Trent),
                Payload::RegisterReading {
                    circuit: plan.index,
                    register,
                    value,
                },
            );
        }
        eve.public.push(PublicReadings {
            circuit: plan.index,
            y1: outcome.y1,
            y0: outcome.y0,
        });
        eve.ancillas.extend(readout);
        trent.y2.push(outcome.y2);
        trent.sums.push(trent_compute_sum(&outcome.y2, &outcome.y1, &outcome.y0)?);
        outcomes.push(outcome);
    }

    report.verdicts = if config.two_party_mode {
        vec![Verdict {
            i: 0,
            j: 1,
            equal: trent.sums[0].is_zero(),
        }]
    } else {
        trent_compare_all(&trent.sums)
    };
    transcript.send(
        PartyId::Trent,
        Recipient::Broadcast,
        Payload::Verdicts {
            verdicts: report.verdicts.clone(),
        },
    );

    Ok(ProtocolRun {
        report,
        transcript,
        outcomes,
        trent,
        eve,
        secret,
    })
}

/// The Sophia-free comparison of two fortunes. `config` must be in
/// two-party mode.
pub fn run_two_party(
    f_a: &BitVector,
    f_b: &BitVector,
    config: &ProtocolConfig,
) -> Result<ProtocolRun, ProtocolError> {
    if !config.two_party_mode {
        return Err(ProtocolError::Config("run_two_party requires two_party_mode".into()));
    }
    if f_a.len() != f_b.len() {
        return Err(BitError::LengthMismatch {
            left: f_a.len(),
            right: f_b.len(),
        }
        .into());
    }
    run_protocol(config, &[*f_a, *f_b], None)
}
