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

use std::path::PathBuf;

/// Errors raised by the simulation engine and the analysis layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("qubit count {0} outside the supported range 1..=14")]
    QubitCount(usize),
    #[error("basis label {label:?} is not a bitstring of length {expected}")]
    BasisLabel { label: String, expected: usize },
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("gate targets must be distinct, got {0:?}")]
    DuplicateTargets(Vec<usize>),
    #[error("matrix of dimension {dim} does not act on {targets} qubit(s)")]
    GateArity { dim: usize, targets: usize },
    #[error("matrix is not unitary (max deviation of U U^dagger from identity: {0:.3e})")]
    NotUnitary(f64),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("forced outcome {outcome} has probability {probability:.3e}, below the floor {floor:.3e}")]
    ImpossibleBranch { outcome: u8, probability: f64, floor: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid engine configuration: {0}")]
    Config(String),
    #[error("error rate {0} outside [0, 1]")]
    ErrorRate(f64),
    #[error("scenario exhausted after {0} measurement(s)")]
    ScenarioExhausted(usize),
    #[error("classical bit {0} read before it was written")]
    UnwrittenBit(usize),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("invalid error location: step {step}, qubit {qubit}")]
    InvalidLocation { step: usize, qubit: usize },
    #[error("majority vote needs two agreeing bits or three bits, got {0:?}")]
    Majority(Vec<bool>),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("no sign change of F_ft - F_direct inside the sweep range")]
    NoBracket,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json { context: context.into(), source }
    }
}
