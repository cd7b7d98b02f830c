use rand::Rng;

use super::{AttackModel, BasisPolicy, Observation, Substitute};
use crate::protocol::{measure_in_basis, Basis, CircuitChannel, Slot};
use crate::qsim::{SimError, StateVector};

#[derive(Clone, Copy)]
enum Action {
    Measure(Basis),
    Swap(Basis),
    Entangle,
    Split,
    Pass,
}

fn choose<R: Rng + ?Sized>(attack: &AttackModel, rng: &mut R) -> Action {
    match attack {
        AttackModel::None => Action::Pass,
        AttackModel::MeasureResend { basis, .. } => Action::Measure(match basis {
            BasisPolicy::Computational => Basis::Computational,
            BasisPolicy::Random => Basis::random(rng),
        }),
        AttackModel::InterceptResend { substitute, .. } => match substitute {
            Substitute::MeasuredRandomBasis => Action::Measure(Basis::random(rng)),
            Substitute::FreshZero => Action::Swap(Basis::random(rng)),
        },
        AttackModel::EntangleMeasure { .. } => Action::Entangle,
        AttackModel::Pns {
            multi_photon_prob, ..
        } => {
            if rng.random::<f64>() < *multi_photon_prob {
                Action::Split
            } else {
                Action::Pass
            }
        }
    }
}

/// Measure-and-forward or keep-and-substitute on one qubit; returns Eve's
/// reading.
fn intercept_qubit<R: Rng + ?Sized>(
    state: &mut StateVector,
    qubit: usize,
    basis: Basis,
    substitute: bool,
    rng: &mut R,
) -> Result<bool, SimError> {
    let bit = measure_in_basis(state, qubit, basis, rng)?;
    if substitute {
        if basis == Basis::Hadamard {
            state.apply_hadamard(qubit)?;
        }
        if bit {
            state.apply_x(qubit)?;
        }
    }
    Ok(bit)
}

/// Applies `attack` to every covered leg of one circuit's transmission, in
/// slot order. Multi-photon splitting leaves decoys undisturbed: the photon
/// that reaches the recipient is still in the prepared state.
pub fn intercept<R: Rng + ?Sized>(
    attack: &AttackModel,
    channel: &mut CircuitChannel,
    rng: &mut R,
) -> Result<Vec<Observation>, SimError> {
    let Some(select) = attack.channel() else {
        return Ok(Vec::new());
    };
    let mut observations = Vec::new();
    let CircuitChannel {
        circuit,
        triplets,
        legs,
    } = channel;
    for seq in legs.iter_mut().filter(|s| select.covers(s.leg)) {
        for (slot_index, slot) in seq.slots.iter().enumerate() {
            let action = choose(attack, rng);
            let observe = |basis, bit| Observation {
                circuit: *circuit,
                recipient: seq.recipient,
                slot: slot_index,
                basis,
                bit,
            };
            match (*slot, action) {
                (_, Action::Pass) => {}
                (slot, action @ (Action::Measure(basis) | Action::Swap(basis))) => {
                    let swap = matches!(action, Action::Swap(_));
                    let bit = match slot {
                        Slot::Entangled(t) => {
                            intercept_qubit(triplets[t].state_mut(), seq.leg, basis, swap, rng)?
                        }
                        Slot::Decoy(d) => intercept_qubit(&mut seq.decoys[d].state, 0, basis, swap, rng)?,
                    };
                    observations.push(observe(basis, bit));
                }
                (Slot::Entangled(t), Action::Entangle | Action::Split) => {
                    let a = triplets[t].add_eve_qubit()?;
                    triplets[t].state_mut().apply_cnot(seq.leg, a)?;
                }
                (Slot::Decoy(d), Action::Entangle) => {
                    let state = &mut seq.decoys[d].state;
                    let a = state.push_zero_qubit()?;
                    state.apply_cnot(0, a)?;
                }
                (Slot::Decoy(_), Action::Split) => {}
            }
        }
    }
    Ok(observations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::ChannelSelect;
    use crate::protocol::{Decoy, DecoyState, PartyId, Sequence, Triplet};
    use crate::rng::{stream, Domain};

    /// Real single-qubit amplitudes, enough for the four decoy states.
    type Qubit = [f64; 2];

    fn eigen(basis: Basis, bit: bool) -> Qubit {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match (basis, bit) {
            (Basis::Computational, false) => [1.0, 0.0],
            (Basis::Computational, true) => [0.0, 1.0],
            (Basis::Hadamard, false) => [h, h],
            (Basis::Hadamard, true) => [h, -h],
        }
    }

    fn prob(outcome: Qubit, state: Qubit) -> f64 {
        let overlap = outcome[0] * state[0] + outcome[1] * state[1];
        overlap * overlap
    }

    /// Exact per-decoy mismatch probability when Eve measures in a basis
    /// drawn from `eve_bases` and forwards `forward(basis, reading)`.
    fn enumerate_detection(eve_bases: &[Basis], forward: impl Fn(Basis, bool) -> Qubit) -> f64 {
        let mut total = 0.0;
        for d in DecoyState::ALL {
            let prepared = eigen(d.basis(), d.bit());
            for &eb in eve_bases {
                for reading in [false, true] {
                    let p_read = prob(eigen(eb, reading), prepared);
                    let sent = forward(eb, reading);
                    let p_mismatch = prob(eigen(d.basis(), !d.bit()), sent);
                    total += p_read * p_mismatch / eve_bases.len() as f64;
                }
            }
        }
        total / 4.0
    }

    #[test]
    fn enumerated_detection_probabilities() {
        let resend = |b, r| eigen(b, r);
        let zero = |_, _| eigen(Basis::Computational, false);
        assert!((enumerate_detection(&[Basis::Computational], resend) - 0.25).abs() < 1e-12);
        assert!(
            (enumerate_detection(&[Basis::Computational, Basis::Hadamard], resend) - 0.25).abs() < 1e-12
        );
        assert!(
            (enumerate_detection(&[Basis::Computational, Basis::Hadamard], zero) - 0.5).abs() < 1e-12
        );
    }

    fn decoy_channel(decoys: usize, seed: u64) -> CircuitChannel {
        let mut rng = stream(seed, Domain::Distribution, 0);
        let legs = [
            Sequence::build(PartyId::Sophia, 1, 0, decoys, &mut rng),
            Sequence::build(PartyId::Alice(0), 2, 0, decoys, &mut rng),
        ];
        CircuitChannel {
            circuit: 0,
            triplets: Vec::new(),
            legs,
        }
    }

    fn sampled_detection(attack: &AttackModel, decoys: usize) -> f64 {
        let mut ch = decoy_channel(decoys, 17);
        let mut rng = stream(17, Domain::Attack, 0);
        intercept(attack, &mut ch, &mut rng).unwrap();
        let mut check = stream(17, Domain::DecoyCheck, 0);
        let mut mismatches = 0usize;
        let mut total = 0usize;
        for seq in ch.legs.iter_mut().filter(|s| attack.channel().unwrap().covers(s.leg)) {
            for d in &mut seq.decoys {
                mismatches += d.check(&mut check).unwrap() as usize;
                total += 1;
            }
        }
        mismatches as f64 / total as f64
    }

    #[test]
    fn sampled_detection_matches_enumeration() {
        let cases = [
            (AttackModel::measure_resend(), 0.25),
            (AttackModel::intercept_resend(), 0.25),
            (
                AttackModel::InterceptResend {
                    substitute: Substitute::FreshZero,
                    channel: ChannelSelect::Both,
                },
                0.5,
            ),
            (
                AttackModel::MeasureResend {
                    basis: BasisPolicy::Random,
                    channel: ChannelSelect::Both,
                },
                0.25,
            ),
            (AttackModel::entangle_measure(), 0.25),
            (AttackModel::pns(1.0), 0.0),
        ];
        for (attack, expected) in cases {
            let rate = sampled_detection(&attack, 10_000);
            assert!((rate - expected).abs() < 0.02, "{attack}: {rate}");
        }
    }

    #[test]
    fn entangling_extends_triplet_to_ghz4() {
        let mut ch = CircuitChannel {
            circuit: 0,
            triplets: vec![Triplet::pristine()],
            legs: [
                Sequence::build(PartyId::Sophia, 1, 1, 0, &mut stream(0, Domain::Distribution, 0)),
                Sequence::build(PartyId::Alice(0), 2, 1, 0, &mut stream(0, Domain::Distribution, 1)),
            ],
        };
        intercept(&AttackModel::entangle_measure(), &mut ch, &mut stream(0, Domain::Attack, 0)).unwrap();
        let t = &ch.triplets[0];
        assert_eq!(t.eve_qubits(), &[3]);
        let s = t.state().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(0).re - h).abs() < 1e-12);
        assert!((s.amplitude(15).re - h).abs() < 1e-12);
    }

    #[test]
    fn measure_resend_collapses_data_triplets() {
        let mut ch = CircuitChannel {
            circuit: 0,
            triplets: vec![Triplet::pristine(); 4],
            legs: [
                Sequence::build(PartyId::Sophia, 1, 4, 2, &mut stream(0, Domain::Distribution, 0)),
                Sequence::build(PartyId::Alice(0), 2, 4, 2, &mut stream(0, Domain::Distribution, 1)),
            ],
        };
        let obs = intercept(&AttackModel::measure_resend(), &mut ch, &mut stream(0, Domain::Attack, 0)).unwrap();
        assert_eq!(obs.len(), 12);
        for t in &ch.triplets {
            let s = t.state().unwrap();
            let support = s.amplitudes().iter().filter(|a| a.norm_sqr() > 1e-12).count();
            assert_eq!(support, 1);
        }
    }

    #[test]
    fn pns_without_multi_photon_is_no_attack() {
        let mut ch = decoy_channel(8, 3);
        ch.triplets = vec![Triplet::pristine(); 3];
        let before = ch.clone();
        let obs = intercept(&AttackModel::pns(0.0), &mut ch, &mut stream(3, Domain::Attack, 0)).unwrap();
        assert!(obs.is_empty());
        assert_eq!(ch, before);
    }

    #[test]
    fn decoys_untouched_outside_covered_leg() {
        let mut ch = decoy_channel(50, 9);
        let before = ch.legs[0].decoys.clone();
        intercept(&AttackModel::entangle_measure(), &mut ch, &mut stream(9, Domain::Attack, 0)).unwrap();
        assert_eq!(ch.legs[0].decoys, before);
        assert!(ch.legs[1].decoys.iter().all(|d: &Decoy| d.state.num_qubits() == 2));
    }
}
