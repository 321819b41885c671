// Copyright 2026 The ftprep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! The seven-qubit Steane code: codewords, encoders and the success measure.
//!
//! Documentation numbers qubits from 1 to match the bitstring notation of the
//! codewords; code indexes them from 0, with qubit 0 the leftmost character.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Condition, ConditionalBlock, GateOp, RetryBlock};
use crate::dm::{gates, DensityMatrix, EngineConfig};
use crate::error::{Error, Result};
use crate::noise::PauliError;

pub const DATA_QUBITS: usize = 7;

/// Supports of the three X-type (and, identically, Z-type) generators.
pub const GENERATORS: [&str; 3] = ["1010101", "0110011", "0001111"];

pub const ZERO_L_TERMS: [&str; 8] =
    ["0000000", "1010101", "0110011", "1100110", "0001111", "1011010", "0111100", "1101001"];

pub const ONE_L_TERMS: [&str; 8] =
    ["1111111", "0101010", "1001100", "0011001", "1110000", "0100101", "1000011", "0010110"];

/// Qubit corrected by `Z` when generator `g` reports syndrome 1 (qubits 1, 2 and 4).
pub const CORRECTION_QUBITS: [usize; 3] = [0, 1, 3];

/// Basis-state index of a bitstring, first character most significant.
pub fn pattern_index(pattern: &str) -> usize {
    pattern.bytes().fold(0, |acc, b| (acc << 1) | usize::from(b == b'1'))
}

/// Qubit indices set in a pattern.
pub fn pattern_qubits(pattern: &str) -> Vec<usize> {
    pattern.bytes().enumerate().filter(|(_, b)| *b == b'1').map(|(i, _)| i).collect()
}

/// Basis-index mask of a single data qubit.
pub fn qubit_mask(q: usize) -> usize {
    1 << (DATA_QUBITS - 1 - q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Logical {
    Zero,
    One,
}

/// The 128 amplitudes of a logical codeword.
pub fn codeword_amplitudes(which: Logical) -> Vec<Complex64> {
    let terms = match which {
        Logical::Zero => ZERO_L_TERMS,
        Logical::One => ONE_L_TERMS,
    };
    let a = Complex64::new(1.0 / 8f64.sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << DATA_QUBITS];
    for t in terms {
        amps[pattern_index(t)] = a;
    }
    amps
}

pub fn build_codeword(which: Logical, config: EngineConfig) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(&codeword_amplitudes(which), config)
}

/// `X^x Z^z |psi>` on amplitude vectors, for basis-index masks `x` and `z`.
pub fn apply_pauli_masks(amps: &[Complex64], x: usize, z: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for (b, a) in amps.iter().enumerate() {
        let sign = if (b & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        out[b ^ x] = a * sign;
    }
    out
}

/// One element of the correctable set: `X_x Z_z |0_L>` with at most one of each.
#[derive(Clone, Debug)]
pub struct CorrectableState {
    /// 0-based qubit carrying the X error, if any.
    pub x: Option<usize>,
    pub z: Option<usize>,
    /// Basis indices with nonzero amplitude and their amplitudes.
    pub support: Vec<(usize, Complex64)>,
}

impl CorrectableState {
    pub fn amplitudes(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); 1 << DATA_QUBITS];
        for &(b, a) in &self.support {
            v[b] = a;
        }
        v
    }

    pub fn label(&self) -> String {
        let mut s = String::new();
        if let Some(q) = self.x {
            s += &format!("X{}", q + 1);
        }
        if let Some(q) = self.z {
            s += &format!("Z{}", q + 1);
        }
        if s.is_empty() {
            s.push('I');
        }
        s
    }
}

/// The 64 states `{I, X_j, Z_k, X_j Z_k} |0_L>`.
pub fn correctable_set() -> Vec<CorrectableState> {
    let zero = codeword_amplitudes(Logical::Zero);
    let opts = || std::iter::once(None).chain((0..DATA_QUBITS).map(Some));
    let mut out = Vec::with_capacity(64);
    for x in opts() {
        for z in opts() {
            let amps = apply_pauli_masks(&zero, x.map_or(0, qubit_mask), z.map_or(0, qubit_mask));
            let support = amps.iter().enumerate().filter(|(_, a)| a.norm() > 0.0).map(|(b, a)| (b, *a)).collect();
            out.push(CorrectableState { x, z, support });
        }
    }
    out
}

/// `S = sum_i <psi_i| rho |psi_i>` over the correctable set.
pub fn success_probability(rho: &DensityMatrix) -> Result<f64> {
    if rho.num_qubits() != DATA_QUBITS {
        return Err(Error::DimensionMismatch { left: rho.num_qubits(), right: DATA_QUBITS });
    }
    let mut total = 0.0;
    for state in correctable_set() {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(r, ar) in &state.support {
            for &(c, ac) in &state.support {
                acc += ar.conj() * rho.get(r, c) * ac;
            }
        }
        total += acc.re;
    }
    Ok(total)
}

/// Success probability of the leading seven qubits of a larger register.
pub fn data_success(state: &DensityMatrix) -> Result<f64> {
    if state.num_qubits() == DATA_QUBITS {
        return success_probability(state);
    }
    success_probability(&state.reduce_to_leading(DATA_QUBITS)?)
}

/// Fidelity as the square of the success probability.
pub fn fidelity_eq4(success: f64) -> f64 {
    success * success
}

/// Majority of two agreeing or three syndrome outcomes.
pub fn majority(outcomes: &[bool]) -> Result<bool> {
    match outcomes {
        [a, b] if a == b => Ok(*a),
        [a, b, c] => Ok(u8::from(*a) + u8::from(*b) + u8::from(*c) >= 2),
        other => Err(Error::Majority(other.to_vec())),
    }
}

/// Qubits receiving a `Z` correction for a three-bit X-generator syndrome.
pub fn correction_for(syndrome: [bool; 3]) -> Vec<usize> {
    (0..3).filter(|&g| syndrome[g]).map(|g| CORRECTION_QUBITS[g]).collect()
}

pub fn apply_syndrome_correction(state: &mut DensityMatrix, syndrome: [bool; 3]) -> Result<()> {
    for q in correction_for(syndrome) {
        state.apply_unitary(&[q], &gates::z())?;
    }
    Ok(())
}

/// Depth-3 encoder with nine gates: three fused `[H; CNOT]` pairs and six CNOTs.
pub fn build_direct_circuit() -> Circuit {
    let mut c = Circuit::new(DATA_QUBITS);
    let fused = gates::h_then_cnot();
    let cnot = gates::cnot();
    c.push(vec![GateOp::two(0, 2, fused.clone()), GateOp::two(1, 6, fused.clone()), GateOp::two(3, 4, fused)]);
    c.push(vec![GateOp::two(0, 6, cnot.clone()), GateOp::two(1, 2, cnot.clone()), GateOp::two(3, 5, cnot.clone())]);
    c.push(vec![GateOp::two(0, 4, cnot.clone()), GateOp::two(1, 5, cnot.clone()), GateOp::two(3, 6, cnot)]);
    c
}

/// Order of the CNOTs that spread `H|0>` over the four cat qubits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatLayout {
    /// `a1 -> a2 -> a3 -> a4`; every single fault leaves at most one
    /// uncorrelated X on the cat after a parity check of `a1, a4`.
    #[default]
    Chain,
    /// `a1 -> a2, a1 -> a3, a1 -> a4`.
    Star,
}

/// Options for the fault-tolerant encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FtOptions {
    pub cat_layout: CatLayout,
    /// Extra cat preparations allowed after a failed verification.
    pub max_retries: u32,
}

impl Default for FtOptions {
    fn default() -> Self {
        FtOptions { cat_layout: CatLayout::Chain, max_retries: 1 }
    }
}

/// Qubit layout of the fault-tolerant encoder.
pub mod ft_layout {
    pub const QUBITS: usize = 12;
    pub const CAT: [usize; 4] = [7, 8, 9, 10];
    pub const VERIFIER: usize = 11;
    pub const STEPS_PER_ROUND: usize = 11;

    /// Classical bit holding the verification outcome of a round.
    pub fn verify_bit(generator: usize, round: usize) -> usize {
        generator * 6 + round * 2
    }

    pub fn syndrome_bit(generator: usize, round: usize) -> usize {
        generator * 6 + round * 2 + 1
    }
}

fn push_round(c: &mut Circuit, generator: usize, round: usize, opts: &FtOptions) {
    use ft_layout::*;
    let [a1, a2, a3, a4] = CAT;
    let v = VERIFIER;
    let cnot = gates::cnot();
    let start = c.push(CAT.iter().chain([&v]).map(|&q| GateOp::Reset { target: q }).collect());
    c.push(vec![GateOp::one(a1, gates::h())]);
    match opts.cat_layout {
        CatLayout::Chain => {
            c.push(vec![GateOp::two(a1, a2, cnot.clone())]);
            c.push(vec![GateOp::two(a2, a3, cnot.clone())]);
            c.push(vec![GateOp::two(a3, a4, cnot.clone())]);
        }
        CatLayout::Star => {
            c.push(vec![GateOp::two(a1, a2, cnot.clone())]);
            c.push(vec![GateOp::two(a1, a3, cnot.clone())]);
            c.push(vec![GateOp::two(a1, a4, cnot.clone())]);
        }
    }
    c.push(vec![GateOp::two(a1, v, cnot.clone())]);
    c.push(vec![GateOp::two(a4, v, cnot.clone())]);
    let guard = verify_bit(generator, round);
    let end = c.push(vec![GateOp::Measure { target: v, bit: guard }]) + 1;
    c.retry_blocks.push(RetryBlock { start, end, guard, max_retries: opts.max_retries });
    let support = pattern_qubits(GENERATORS[generator]);
    c.push(CAT.iter().zip(&support).map(|(&a, &d)| GateOp::two(a, d, cnot.clone())).collect());
    c.push(CAT.iter().map(|&a| GateOp::one(a, gates::h())).collect());
    c.push(vec![GateOp::MeasureParity { targets: CAT.to_vec(), bit: syndrome_bit(generator, round) }]);
}

/// Twelve-qubit encoder measuring each X-type generator with verified
/// four-qubit cat states, twice, and a third time when the first two
/// disagree. Majority syndromes drive a final `Z` correction.
pub fn build_ft_circuit(opts: FtOptions) -> Circuit {
    use ft_layout::*;
    let mut c = Circuit::new(QUBITS);
    c.classical_bits = 18;
    for g in 0..3 {
        push_round(&mut c, g, 0, &opts);
        push_round(&mut c, g, 1, &opts);
        let start = c.steps.len();
        push_round(&mut c, g, 2, &opts);
        let condition = Condition::Xor(vec![Condition::Bit(syndrome_bit(g, 0)), Condition::Bit(syndrome_bit(g, 1))]);
        c.conditional_blocks.push(ConditionalBlock { start, end: c.steps.len(), condition });
    }
    // Conjugating by Z on the correction qubit of generator g flips every
    // syndrome outcome of g and nothing else, and the final correction undoes it.
    c.symmetric_bits = (0..3).map(|g| syndrome_bit(g, 0)).collect();
    c.push(
        (0..3)
            .map(|g| GateOp::ControlledPauli {
                target: CORRECTION_QUBITS[g],
                pauli: PauliError::Z,
                condition: Condition::majority3(syndrome_bit(g, 0), syndrome_bit(g, 1), syndrome_bit(g, 2)),
            })
            .collect(),
    );
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{run, CircuitStats};
    use crate::dm::BackendKind;
    use crate::noise::NoiseModel;

    fn dense() -> EngineConfig {
        EngineConfig::with_backend(BackendKind::Dense)
    }

    #[test]
    fn codeword_entries() {
        let z = codeword_amplitudes(Logical::Zero);
        let a = 1.0 / 8f64.sqrt();
        assert_eq!(z[0].re, a);
        assert_eq!(z[pattern_index("1010101")].re, a);
        assert_eq!(z[pattern_index("1111111")].re, 0.0);
        let o = codeword_amplitudes(Logical::One);
        let inner: Complex64 = z.iter().zip(&o).map(|(x, y)| x.conj() * y).sum();
        assert_eq!(inner.norm(), 0.0);
        let rho = build_codeword(Logical::Zero, EngineConfig::default()).unwrap();
        assert!((rho.overlap(&rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn codeword_terms_form_the_generator_span() {
        let gens: Vec<usize> = GENERATORS.iter().map(|g| pattern_index(g)).collect();
        let mut span: Vec<usize> = (0..8usize)
            .map(|m| (0..3).filter(|i| m >> i & 1 == 1).fold(0, |acc, i| acc ^ gens[i]))
            .collect();
        span.sort_unstable();
        let mut terms: Vec<usize> = ZERO_L_TERMS.iter().map(|t| pattern_index(t)).collect();
        terms.sort_unstable();
        assert_eq!(span, terms);
    }

    #[test]
    fn success_of_members_and_non_members() {
        let zero = codeword_amplitudes(Logical::Zero);
        let s = success_probability(&build_codeword(Logical::Zero, dense()).unwrap()).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        let x3 = DensityMatrix::from_pure(&apply_pauli_masks(&zero, qubit_mask(2), 0), dense()).unwrap();
        assert!((success_probability(&x3).unwrap() - 1.0).abs() < 1e-12);
        let x12 = apply_pauli_masks(&zero, qubit_mask(0) | qubit_mask(1), 0);
        let x12 = DensityMatrix::from_pure(&x12, dense()).unwrap();
        assert!(success_probability(&x12).unwrap().abs() < 1e-12);
        let small = DensityMatrix::basis("00", dense()).unwrap();
        assert!(success_probability(&small).is_err());
    }

    #[test]
    fn majority_rules() {
        assert!(!majority(&[false, false]).unwrap());
        assert!(majority(&[true, true]).unwrap());
        assert!(majority(&[false, true, true]).unwrap());
        assert!(!majority(&[true, false, false]).unwrap());
        assert!(majority(&[false, true]).is_err());
        assert!(majority(&[true]).is_err());
    }

    #[test]
    fn correction_table() {
        assert!(correction_for([false; 3]).is_empty());
        assert_eq!(correction_for([true; 3]), vec![0, 1, 3]);
        for (g, &q) in CORRECTION_QUBITS.iter().enumerate() {
            let owners: Vec<usize> = (0..3).filter(|&h| pattern_qubits(GENERATORS[h]).contains(&q)).collect();
            assert_eq!(owners, vec![g]);
        }
    }

    #[test]
    fn direct_circuit_encodes_zero() {
        let c = build_direct_circuit();
        assert_eq!(c.stats(), CircuitStats { qubits: 7, depth: 3, area: 21, gate_ops: 9 });
        let out = run(&c, DensityMatrix::basis("0000000", EngineConfig::default()).unwrap(), &NoiseModel::noiseless(), &[], &[])
            .unwrap();
        let target = build_codeword(Logical::Zero, EngineConfig::default()).unwrap();
        assert!((out.state.overlap(&target).unwrap() - 1.0).abs() < 1e-12);
        let mut entries = 0;
        out.state.for_each_nonzero(|_, _, v| {
            entries += 1;
            assert!((v.norm() - 0.125).abs() < 1e-12);
        });
        assert_eq!(entries, 64);
    }

    #[test]
    fn ft_circuit_shape() {
        let c = build_ft_circuit(FtOptions::default());
        assert!(c.validate().is_empty(), "{:?}", c.validate());
        let s = c.stats();
        assert_eq!(s.qubits, 12);
        assert_eq!(s.depth, 67);
        assert_eq!(s.area, 804);
        assert_eq!(s.gate_ops, 147);
        assert_eq!(c.retry_blocks.len(), 9);
        assert_eq!(c.conditional_blocks.len(), 3);
        let star = build_ft_circuit(FtOptions { cat_layout: CatLayout::Star, ..FtOptions::default() });
        assert_eq!(star.stats(), s);
    }
}
