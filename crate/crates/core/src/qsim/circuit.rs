use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{RegisterLayout, SimError, StateVector};
use crate::bitcore::{xor_all, BitVector, MAX_BITS};

/// Largest circuit the full state-vector path will simulate.
pub const FULL_PATH_QUBIT_CAP: usize = 20;

/// Exact outcome probabilities keyed by the per-party register values,
/// in party order.
pub type OutcomeDistribution = BTreeMap<Vec<u64>, f64>;

/// Readings of Trent's, Sophia's and Alice's input registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub y2: BitVector,
    pub y1: BitVector,
    pub y0: BitVector,
}

impl MeasurementOutcome {
    /// `y2 ⊕ y1 ⊕ y0`.
    pub fn parity(&self) -> BitVector {
        xor_all(&[self.y2, self.y1, self.y0]).expect("registers share a length")
    }

    /// Concatenated big-endian label `y2 ∥ y1 ∥ y0`.
    pub fn label(&self) -> String {
        format!("{}{}{}", self.y2, self.y1, self.y0)
    }

    /// Builds an outcome from readings in T, S, A order.
    pub fn from_registers(regs: &[BitVector]) -> Self {
        Self {
            y2: regs[0],
            y1: regs[1],
            y0: regs[2],
        }
    }
}

/// One participant in a GHZ-linked circuit. Parties with an oracle own a
/// |−⟩ output qubit and imprint `(−1)^{oracle • x}` on their register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Party {
    pub name: String,
    pub oracle: Option<BitVector>,
}

impl Party {
    pub fn passive(name: &str) -> Self {
        Self {
            name: name.to_string(),
            oracle: None,
        }
    }

    pub fn with_oracle(name: &str, oracle: BitVector) -> Self {
        Self {
            name: name.to_string(),
            oracle: Some(oracle),
        }
    }
}

/// A circuit in which bit position `k` of every party's input register is
/// one GHZ tuple, followed by each party's oracle, a Hadamard on every input
/// qubit, and a computational-basis readout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GhzCircuit {
    m: usize,
    parties: Vec<Party>,
}

impl GhzCircuit {
    pub fn new(m: usize, parties: Vec<Party>) -> Result<Self, SimError> {
        if m == 0 || m > MAX_BITS {
            return Err(SimError::EmptyRegister);
        }
        if parties.len() < 2 {
            return Err(SimError::TooFewParties(parties.len()));
        }
        for oracle in parties.iter().filter_map(|p| p.oracle.as_ref()) {
            if oracle.len() != m {
                return Err(SimError::RegisterLength {
                    register: m,
                    secret: oracle.len(),
                });
            }
        }
        Ok(Self { m, parties })
    }

    /// The circuit QC_i: Trent, Sophia holding `s`, Alice_i holding `f`.
    pub fn millionaire(s: BitVector, f: BitVector) -> Result<Self, SimError> {
        Self::new(
            s.len(),
            vec![
                Party::passive("T"),
                Party::with_oracle("S", s),
                Party::with_oracle("A", f),
            ],
        )
    }

    /// Sophia-free two-millionaire circuit: Trent, Alice holding `f_a`, Bob holding `f_b`.
    pub fn two_party(f_a: BitVector, f_b: BitVector) -> Result<Self, SimError> {
        Self::new(
            f_a.len(),
            vec![
                Party::passive("T"),
                Party::with_oracle("A", f_a),
                Party::with_oracle("B", f_b),
            ],
        )
    }

    /// Adds an oracle-free party whose register joins every GHZ tuple.
    pub fn with_extra_party(mut self, name: &str) -> Self {
        self.parties.push(Party::passive(name));
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    /// XOR of all oracles; the value every outcome's register parity equals.
    pub fn target(&self) -> BitVector {
        self.parties
            .iter()
            .filter_map(|p| p.oracle)
            .fold(BitVector::zero(self.m).expect("m validated"), |acc, o| {
                acc.xor(&o).expect("lengths validated")
            })
    }

    pub fn layout(&self) -> RegisterLayout {
        let specs: Vec<(&str, bool)> = self
            .parties
            .iter()
            .map(|p| (p.name.as_str(), p.oracle.is_some()))
            .collect();
        RegisterLayout::new(self.m, &specs).expect("m validated")
    }

    /// State after the oracles and Hadamards, just before readout.
    pub fn evolve(&self) -> Result<StateVector, SimError> {
        let layout = self.layout();
        let mut state = prepare_ghz_registers(&layout)?;
        for (party, regs) in self.parties.iter().zip(layout.parties()) {
            if let (Some(oracle), Some(out)) = (party.oracle, regs.output) {
                state.apply_phase_oracle(&oracle, &regs.input_qubits(), out)?;
            }
        }
        for regs in layout.parties() {
            for q in regs.input.clone() {
                state.apply_hadamard(q)?;
            }
        }
        Ok(state)
    }

    /// Exact readout distribution from the amplitudes, marginalized over the
    /// output qubits.
    pub fn exact_distribution(&self) -> Result<OutcomeDistribution, SimError> {
        let layout = self.layout();
        let state = self.evolve()?;
        let mask = (1usize << self.m) - 1;
        let mut dist = OutcomeDistribution::new();
        for (i, a) in state.amplitudes().iter().enumerate() {
            let p = a.norm_sqr();
            if p < 1e-15 {
                continue;
            }
            let key: Vec<u64> = layout
                .parties()
                .iter()
                .map(|r| ((i >> r.input.start) & mask) as u64)
                .collect();
            *dist.entry(key).or_default() += p;
        }
        Ok(dist)
    }

    /// Samples one run through the full state vector. Output qubits are
    /// checked to still be |−⟩ after readout.
    pub fn run_full<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<BitVector>, SimError> {
        let layout = self.layout();
        let mut state = self.evolve()?;
        let mut readings = Vec::with_capacity(self.parties.len());
        for regs in layout.parties() {
            readings.push(state.measure(&regs.input_qubits(), rng)?);
        }
        for q in layout.output_qubits() {
            if !state.is_minus(q)? {
                return Err(SimError::OutputNotMinus(q));
            }
        }
        Ok(readings)
    }

    /// Samples one run from the per-bit factorization.
    pub fn run_factored<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<BitVector> {
        sample_parity_constrained(self.parties.len(), &self.target(), rng)
    }
}

/// |GHZ⟩ on every bit position of the layout's input registers, and |−⟩ on
/// every output qubit.
pub fn prepare_ghz_registers(layout: &RegisterLayout) -> Result<StateVector, SimError> {
    let total = layout.total_qubits();
    if total > FULL_PATH_QUBIT_CAP {
        return Err(SimError::FullPathCap {
            requested: total,
            cap: FULL_PATH_QUBIT_CAP,
        });
    }
    let mut state = StateVector::zero(total)?;
    for k in 0..layout.m() {
        let tuple = layout.position(k);
        state.apply_hadamard(tuple[0])?;
        for &q in &tuple[1..] {
            state.apply_cnot(tuple[0], q)?;
        }
    }
    for q in layout.output_qubits() {
        state.apply_x(q)?;
        state.apply_hadamard(q)?;
    }
    Ok(state)
}

/// The `3m + 2`-qubit initial state of one millionaire's circuit.
pub fn prepare_ghz3_registers(layout: &RegisterLayout) -> Result<StateVector, SimError> {
    if layout.parties().len() != 3 {
        return Err(SimError::TooFewParties(layout.parties().len()));
    }
    prepare_ghz_registers(layout)
}

/// Draws `parties` registers uniformly among those whose XOR is `target`:
/// each bit position independently takes one of the 2^(parties−1)
/// parity-consistent tuples.
pub fn sample_parity_constrained<R: Rng + ?Sized>(
    parties: usize,
    target: &BitVector,
    rng: &mut R,
) -> Vec<BitVector> {
    let m = target.len();
    let mut out = Vec::with_capacity(parties);
    let mut acc = *target;
    for _ in 1..parties {
        let v = BitVector::random(m, rng).expect("length from a valid vector");
        acc = acc.xor(&v).expect("same length");
        out.push(v);
    }
    out.push(acc);
    out
}

/// The analytic distribution the factored sampler draws from.
pub fn factored_distribution(parties: usize, target: &BitVector) -> Result<OutcomeDistribution, SimError> {
    let m = target.len();
    let free = (parties - 1) * m;
    if free > FULL_PATH_QUBIT_CAP {
        return Err(SimError::FullPathCap {
            requested: free,
            cap: FULL_PATH_QUBIT_CAP,
        });
    }
    let mask = (1u64 << m) - 1;
    let p = 1.0 / (1u64 << free) as f64;
    let mut dist = OutcomeDistribution::new();
    for word in 0..1u64 << free {
        let mut key: Vec<u64> = (0..parties - 1).map(|j| (word >> (j * m)) & mask).collect();
        key.push(key.iter().fold(target.value(), |a, v| a ^ v));
        dist.insert(key, p);
    }
    Ok(dist)
}

/// Total variation distance ½ Σ |p − q|.
pub fn total_variation(p: &OutcomeDistribution, q: &OutcomeDistribution) -> f64 {
    let mut keys: Vec<&Vec<u64>> = p.keys().chain(q.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).unwrap_or(&0.0) - q.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

fn check_pair(s: &BitVector, f: &BitVector) -> Result<(), SimError> {
    if s.len() != f.len() {
        return Err(SimError::RegisterLength {
            register: s.len(),
            secret: f.len(),
        });
    }
    Ok(())
}

/// QC_i on the full state vector: prepare, U_s and U_f, H^{⊗m} on all three
/// input registers, read out TIR, SIR, AIR. Limited to `3m + 2 ≤ 20` qubits.
pub fn run_qc_full<R: Rng + ?Sized>(
    m: usize,
    s: &BitVector,
    f: &BitVector,
    rng: &mut R,
) -> Result<MeasurementOutcome, SimError> {
    check_pair(s, f)?;
    if s.len() != m {
        return Err(SimError::RegisterLength {
            register: m,
            secret: s.len(),
        });
    }
    let regs = GhzCircuit::millionaire(*s, *f)?.run_full(rng)?;
    Ok(MeasurementOutcome::from_registers(&regs))
}

/// QC_i sampled bit by bit: `(a, b)` uniform, third reading fixed by parity.
pub fn run_qc_factored<R: Rng + ?Sized>(
    m: usize,
    s: &BitVector,
    f: &BitVector,
    rng: &mut R,
) -> Result<MeasurementOutcome, SimError> {
    check_pair(s, f)?;
    if s.len() != m {
        return Err(SimError::RegisterLength {
            register: m,
            secret: s.len(),
        });
    }
    let target = s.xor(f)?;
    Ok(MeasurementOutcome::from_registers(&sample_parity_constrained(
        3, &target, rng,
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    #[test]
    fn m1_initial_state_has_two_ghz_branches() {
        let layout = RegisterLayout::three_party(1).unwrap();
        let state = prepare_ghz3_registers(&layout).unwrap();
        assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        // qubits: A=0, AOR=1, S=2, SOR=3, T=4. Every nonzero amplitude has
        // T = S = A, magnitude 1/√2 · 1/2 (two |−⟩ factors).
        for (i, a) in state.amplitudes().iter().enumerate() {
            let (ab, sb, tb) = (i & 1, (i >> 2) & 1, (i >> 4) & 1);
            if ab == sb && sb == tb {
                assert!((a.norm() - FRAC_1_SQRT_2 * 0.5).abs() < 1e-12);
                let sign = if (i >> 1) & 1 ^ (i >> 3) & 1 == 1 { -1.0 } else { 1.0 };
                assert!((a.re - sign * FRAC_1_SQRT_2 * 0.5).abs() < 1e-12);
            } else {
                assert!(a.norm() < 1e-12);
            }
        }
        assert!(state.is_minus(1).unwrap() && state.is_minus(3).unwrap());
    }

    #[test]
    fn m2_has_four_branches_of_magnitude_half() {
        let layout = RegisterLayout::three_party(2).unwrap();
        let state = prepare_ghz3_registers(&layout).unwrap();
        let mut branches = BTreeMap::new();
        for (i, a) in state.amplitudes().iter().enumerate() {
            if a.norm_sqr() < 1e-15 {
                continue;
            }
            let key: Vec<usize> = layout.parties().iter().map(|r| (i >> r.input.start) & 3).collect();
            *branches.entry(key).or_insert(0.0) += a.norm_sqr();
        }
        assert_eq!(branches.len(), 4);
        for (key, w) in branches {
            assert!(key[0] == key[1] && key[1] == key[2]);
            assert!((w.sqrt() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn full_path_refuses_above_cap() {
        let s = BitVector::zero(7).unwrap();
        let err = run_qc_full(7, &s, &s, &mut rng::from_seed(0)).unwrap_err();
        assert!(matches!(err, SimError::FullPathCap { requested: 23, .. }));
    }

    #[test]
    fn full_path_support_contains_known_label() {
        let dist = GhzCircuit::millionaire(bv("10"), bv("11"))
            .unwrap()
            .exact_distribution()
            .unwrap();
        let key = vec![bv("11").value(), bv("00").value(), bv("10").value()];
        assert!((dist[&key] - 1.0 / 16.0).abs() < 1e-12);
        assert_eq!(dist.len(), 16);
    }

    #[test]
    fn full_path_samples_satisfy_parity() {
        let mut r = rng::from_seed(3);
        let (s, f) = (bv("10"), bv("11"));
        for _ in 0..200 {
            let out = run_qc_full(2, &s, &f, &mut r).unwrap();
            assert_eq!(out.parity(), bv("01"));
            let same = run_qc_full(2, &f, &f, &mut r).unwrap();
            assert!(same.parity().is_zero());
        }
    }

    #[test]
    fn factored_sampler_m1_zero_support() {
        let mut r = rng::from_seed(5);
        let zero = bv("0");
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..400 {
            let o = run_qc_factored(1, &zero, &zero, &mut r).unwrap();
            seen.insert((o.y2.value(), o.y1.value(), o.y0.value()));
        }
        let expected: std::collections::BTreeSet<_> =
            [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)].into_iter().collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let mut r = rng::from_seed(0);
        assert!(run_qc_factored(2, &bv("10"), &bv("1"), &mut r).is_err());
        assert!(run_qc_full(3, &bv("10"), &bv("11"), &mut r).is_err());
        assert!(GhzCircuit::new(2, vec![Party::passive("T")]).is_err());
    }

    #[test]
    fn label_and_parity() {
        let o = MeasurementOutcome {
            y2: bv("11"),
            y1: bv("00"),
            y0: bv("10"),
        };
        assert_eq!(o.label(), "110010");
        assert_eq!(o.parity(), bv("01"));
    }

    #[test]
    fn total_variation_basics() {
        let a = factored_distribution(3, &bv("1")).unwrap();
        assert_eq!(total_variation(&a, &a), 0.0);
        let b = factored_distribution(3, &bv("0")).unwrap();
        assert!((total_variation(&a, &b) - 1.0).abs() < 1e-12);
    }
}
