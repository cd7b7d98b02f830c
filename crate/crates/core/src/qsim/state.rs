use num_complex::Complex64;
use rand::Rng;

use super::SimError;
use crate::bitcore::BitVector;

/// Largest register this simulator will allocate (2^26 amplitudes ≈ 1 GiB).
pub const MAX_STATE_QUBITS: usize = 26;

/// Tolerance for norm and amplitude comparisons.
pub const TOLERANCE: f64 = 1e-9;

/// Dense amplitude vector over `num_qubits` qubits.
///
/// Basis index bit `q` is the value of qubit `q` (little-endian).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self, SimError> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self, SimError> {
        if num_qubits == 0 || num_qubits > MAX_STATE_QUBITS {
            return Err(SimError::TooManyQubits {
                requested: num_qubits,
                cap: MAX_STATE_QUBITS,
            });
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(SimError::BasisIndex { index, dim });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// Wraps explicit amplitudes; the vector must be normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(SimError::BasisIndex { index: dim, dim });
        }
        let state = Self {
            num_qubits: dim.trailing_zeros() as usize,
            amps,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), SimError> {
        if qubit >= self.num_qubits {
            return Err(SimError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    pub fn apply_hadamard(&mut self, qubit: usize) -> Result<(), SimError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a = self.amps[i];
                let b = self.amps[i | bit];
                self.amps[i] = (a + b) * h;
                self.amps[i | bit] = (a - b) * h;
            }
        }
        Ok(())
    }

    pub fn apply_x(&mut self, qubit: usize) -> Result<(), SimError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
        Ok(())
    }

    pub fn apply_z(&mut self, qubit: usize) -> Result<(), SimError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// |c⟩|t⟩ → |c⟩|t ⊕ c⟩.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), SimError> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(SimError::SameQubit(control));
        }
        let c = 1usize << control;
        let t = 1usize << target;
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
        Ok(())
    }

    /// Phase-kickback oracle `|−⟩|x⟩ → (−1)^{secret • x} |−⟩|x⟩`, compiled to
    /// one CNOT from `input[k]` into `output` for every set bit `k` of `secret`.
    ///
    /// `input[k]` is the qubit carrying bit `k` of the register.
    pub fn apply_phase_oracle(
        &mut self,
        secret: &BitVector,
        input: &[usize],
        output: usize,
    ) -> Result<(), SimError> {
        if input.len() != secret.len() {
            return Err(SimError::RegisterLength {
                register: input.len(),
                secret: secret.len(),
            });
        }
        if !self.is_minus(output)? {
            return Err(SimError::OutputNotMinus(output));
        }
        for k in secret.ones() {
            self.apply_cnot(input[k], output)?;
        }
        Ok(())
    }

    /// True when `qubit` factors out of the state as |−⟩.
    pub fn is_minus(&self, qubit: usize) -> Result<bool, SimError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let mut weight = 0.0;
        for i in (0..self.amps.len()).filter(|i| i & bit == 0) {
            let (a0, a1) = (self.amps[i], self.amps[i | bit]);
            if (a0 + a1).norm() > TOLERANCE {
                return Ok(false);
            }
            weight += a0.norm_sqr();
        }
        Ok((weight - 0.5).abs() < TOLERANCE)
    }

    /// Appends a fresh |0⟩ qubit as the new most significant qubit and
    /// returns its index.
    pub fn push_zero_qubit(&mut self) -> Result<usize, SimError> {
        if self.num_qubits + 1 > MAX_STATE_QUBITS {
            return Err(SimError::TooManyQubits {
                requested: self.num_qubits + 1,
                cap: MAX_STATE_QUBITS,
            });
        }
        let index = self.num_qubits;
        self.amps
            .resize(self.amps.len() * 2, Complex64::new(0.0, 0.0));
        self.num_qubits += 1;
        Ok(index)
    }

    /// Probability that `qubit` reads 1 in the computational basis.
    pub fn probability_one(&self, qubit: usize) -> Result<f64, SimError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Measures `qubits` in the computational basis, collapsing the state.
    ///
    /// Bit `k` of the outcome is the reading of `qubits[k]`.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        qubits: &[usize],
        rng: &mut R,
    ) -> Result<BitVector, SimError> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let extract = |i: usize| -> u64 {
            qubits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (k, &q)| acc | ((((i >> q) & 1) as u64) << k))
        };
        let mut probs = vec![0.0f64; 1usize << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            probs[extract(i) as usize] += a.norm_sqr();
        }
        let total: f64 = probs.iter().sum();
        let mut draw = rng.random::<f64>() * total;
        let mut outcome = probs.len() - 1;
        for (value, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            if draw < p {
                outcome = value;
                break;
            }
            draw -= p;
            outcome = value;
        }
        let keep = probs[outcome];
        let scale = 1.0 / keep.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if extract(i) as usize == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(BitVector::new(qubits.len(), outcome as u64)?)
    }

    /// Measures a single qubit in the computational basis.
    pub fn measure_qubit<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        rng: &mut R,
    ) -> Result<bool, SimError> {
        Ok(self.measure(&[qubit], rng)?.bit(0))
    }
}

/// Functional form of [`StateVector::measure`].
pub fn measure_register<R: Rng + ?Sized>(
    state: &StateVector,
    qubits: &[usize],
    rng: &mut R,
) -> Result<(BitVector, StateVector), SimError> {
    let mut collapsed = state.clone();
    let outcome = collapsed.measure(qubits, rng)?;
    Ok((outcome, collapsed))
}
