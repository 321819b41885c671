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

//! The depolarizing error model and deterministic Pauli injection.

use serde::{Deserialize, Serialize};

use crate::dm::{gates, DensityMatrix, KrausChannel, Unitary};
use crate::error::{Error, Result};

/// Independent depolarizing noise of strength `p` on every qubit after every
/// time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    p: f64,
}

impl NoiseModel {
    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(NoiseModel { p })
        } else {
            Err(Error::ErrorRate(p))
        }
    }

    pub fn noiseless() -> Self {
        NoiseModel { p: 0.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_noiseless(&self) -> bool {
        self.p == 0.0
    }

    pub fn channel(&self) -> KrausChannel {
        KrausChannel::depolarizing(self.p).expect("rate validated on construction")
    }
}

/// Applies one round of depolarizing noise to each listed qubit.
pub fn depolarize_step(state: &mut DensityMatrix, model: &NoiseModel, qubits: &[usize]) -> Result<()> {
    if model.is_noiseless() {
        return Ok(());
    }
    state.depolarize(qubits, model.p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliError {
    X,
    Z,
    XZ,
}

impl PauliError {
    pub const ALL: [PauliError; 3] = [PauliError::X, PauliError::Z, PauliError::XZ];

    pub fn unitary(self) -> Unitary {
        match self {
            PauliError::X => gates::x(),
            PauliError::Z => gates::z(),
            PauliError::XZ => gates::xz(),
        }
    }

    pub fn flips_bit(self) -> bool {
        matches!(self, PauliError::X | PauliError::XZ)
    }

    pub fn flips_phase(self) -> bool {
        matches!(self, PauliError::Z | PauliError::XZ)
    }

    pub fn label(self) -> &'static str {
        match self {
            PauliError::X => "X",
            PauliError::Z => "Z",
            PauliError::XZ => "XZ",
        }
    }
}

impl std::fmt::Display for PauliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for PauliError {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(PauliError::X),
            "Z" | "z" => Ok(PauliError::Z),
            "XZ" | "xz" | "Y" | "y" => Ok(PauliError::XZ),
            other => Err(Error::Parse(format!("unknown Pauli `{other}`"))),
        }
    }
}

/// A spacetime location: after time step `step` (0-based), on `qubit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub step: usize,
    pub qubit: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injection {
    pub location: Location,
    pub pauli: PauliError,
}

/// Conjugates `state` by `err` on `qubit`.
pub fn inject_error(state: &mut DensityMatrix, qubit: usize, err: PauliError) -> Result<()> {
    state.apply_unitary(&[qubit], &err.unitary())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dm::{BackendKind, EngineConfig};
    use num_complex::Complex64;

    fn dense() -> EngineConfig {
        EngineConfig::with_backend(BackendKind::Dense)
    }

    #[test]
    fn rate_is_validated() {
        assert!(NoiseModel::new(-0.1).is_err());
        assert!(NoiseModel::new(1.1).is_err());
        assert!(NoiseModel::new(f64::NAN).is_err());
    }

    #[test]
    fn zero_rate_is_identity() {
        let mut a = DensityMatrix::basis("01", dense()).unwrap();
        a.apply_unitary(&[0], &gates::h()).unwrap();
        let before = a.clone();
        depolarize_step(&mut a, &NoiseModel::noiseless(), &[0, 1]).unwrap();
        assert_eq!(a.max_abs_diff(&before).unwrap(), 0.0);
    }

    #[test]
    fn full_depolarization_of_plus() {
        let mut a = DensityMatrix::basis("0", dense()).unwrap();
        a.apply_unitary(&[0], &gates::h()).unwrap();
        depolarize_step(&mut a, &NoiseModel::new(0.75).unwrap(), &[0]).unwrap();
        assert!((a.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((a.get(1, 1).re - 0.5).abs() < 1e-15);
        assert!(a.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn register_pass_matches_single_qubit_channels() {
        let model = NoiseModel::new(0.137).unwrap();
        let mut a = DensityMatrix::basis("011", dense()).unwrap();
        a.apply_unitary(&[0], &gates::h()).unwrap();
        a.apply_unitary(&[0, 2], &gates::cnot()).unwrap();
        a.apply_unitary(&[1], &gates::h()).unwrap();
        for qubits in [vec![0, 1, 2], vec![1], vec![2, 0]] {
            let mut fast = a.clone();
            let mut slow = a.clone();
            let mut tree = a.to_sparse();
            depolarize_step(&mut fast, &model, &qubits).unwrap();
            depolarize_step(&mut tree, &model, &qubits).unwrap();
            for &q in &qubits {
                slow.apply_channel(q, &model.channel()).unwrap();
            }
            assert!(fast.max_abs_diff(&slow).unwrap() < 1e-15);
            assert!(tree.max_abs_diff(&slow).unwrap() < 1e-15);
        }
    }

    #[test]
    fn injections() {
        let mut a = DensityMatrix::basis("000", dense()).unwrap();
        inject_error(&mut a, 0, PauliError::X).unwrap();
        assert_eq!(a.get(4, 4), Complex64::new(1.0, 0.0));
        let mut b = DensityMatrix::basis("000", dense()).unwrap();
        inject_error(&mut b, 1, PauliError::Z).unwrap();
        assert_eq!(b.get(0, 0), Complex64::new(1.0, 0.0));
        let mut c = DensityMatrix::basis("0", dense()).unwrap();
        inject_error(&mut c, 0, PauliError::XZ).unwrap();
        assert!((c.get(1, 1) - 1.0).norm() < 1e-15);
        assert!(inject_error(&mut c, 3, PauliError::X).is_err());
    }

    #[test]
    fn pauli_labels_parse() {
        for e in PauliError::ALL {
            assert_eq!(e.label().parse::<PauliError>().unwrap(), e);
        }
        assert_eq!("Y".parse::<PauliError>().unwrap(), PauliError::XZ);
        assert!("W".parse::<PauliError>().is_err());
    }
}
