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

//! Time-stepped circuits with classical control.

mod exec;
mod serial;
mod stats;

use serde::{Deserialize, Serialize};

use crate::dm::Unitary;
use crate::noise::{Location, PauliError};

pub use exec::{run, Cursor, Event, RunOutcome, Runner};
pub use stats::{CircuitStats, Violation};

/// A boolean expression over classical bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Bit(usize),
    Not(Box<Condition>),
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Xor(Vec<Condition>),
}

impl Condition {
    pub fn bit(b: usize) -> Self {
        Condition::Bit(b)
    }

    /// True when at least two of the three bits are set.
    pub fn majority3(a: usize, b: usize, c: usize) -> Self {
        let (a, b, c) = (Condition::Bit(a), Condition::Bit(b), Condition::Bit(c));
        Condition::Or(vec![
            Condition::And(vec![a.clone(), b.clone()]),
            Condition::And(vec![Condition::Xor(vec![a, b]), c]),
        ])
    }

    /// Evaluates with short-circuiting; `Err(bit)` names the first unwritten bit read.
    pub fn eval(&self, bits: &[Option<bool>]) -> Result<bool, usize> {
        match self {
            Condition::Bit(b) => bits.get(*b).copied().flatten().ok_or(*b),
            Condition::Not(c) => Ok(!c.eval(bits)?),
            Condition::And(cs) => {
                for c in cs {
                    if !c.eval(bits)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Condition::Or(cs) => {
                for c in cs {
                    if c.eval(bits)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Condition::Xor(cs) => {
                let mut acc = false;
                for c in cs {
                    acc ^= c.eval(bits)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn bits_read(&self, out: &mut Vec<usize>) {
        match self {
            Condition::Bit(b) => out.push(*b),
            Condition::Not(c) => c.bits_read(out),
            Condition::And(cs) | Condition::Or(cs) | Condition::Xor(cs) => cs.iter().for_each(|c| c.bits_read(out)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateOp {
    OneQubit { target: usize, matrix: Unitary },
    /// `matrix` acts on `targets` in order; the first is the more significant factor.
    TwoQubit { targets: [usize; 2], matrix: Unitary },
    Measure { target: usize, bit: usize },
    /// Projective measurement of the Z-parity of `targets`.
    MeasureParity { targets: Vec<usize>, bit: usize },
    Reset { target: usize },
    ControlledPauli { target: usize, pauli: PauliError, condition: Condition },
}

impl GateOp {
    pub fn one(target: usize, matrix: Unitary) -> Self {
        GateOp::OneQubit { target, matrix }
    }

    pub fn two(a: usize, b: usize, matrix: Unitary) -> Self {
        GateOp::TwoQubit { targets: [a, b], matrix }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            GateOp::OneQubit { target, .. }
            | GateOp::Measure { target, .. }
            | GateOp::Reset { target }
            | GateOp::ControlledPauli { target, .. } => vec![*target],
            GateOp::TwoQubit { targets, .. } => targets.to_vec(),
            GateOp::MeasureParity { targets, .. } => targets.clone(),
        }
    }

    pub fn bit_written(&self) -> Option<usize> {
        match self {
            GateOp::Measure { bit, .. } | GateOp::MeasureParity { bit, .. } => Some(*bit),
            _ => None,
        }
    }

    /// Number of elementary operations in the resource count.
    pub fn gate_count(&self) -> usize {
        match self {
            GateOp::MeasureParity { targets, .. } => targets.len(),
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeStep {
    pub ops: Vec<GateOp>,
}

impl TimeStep {
    pub fn new(ops: Vec<GateOp>) -> Self {
        TimeStep { ops }
    }
}

/// Steps `start..end` are repeated while `guard` reads 1, at most
/// `max_retries` extra times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryBlock {
    pub start: usize,
    pub end: usize,
    pub guard: usize,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_retries() -> u32 {
    1
}

/// Steps `start..end` run only when `condition` holds on entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalBlock {
    pub start: usize,
    pub end: usize,
    pub condition: Condition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub steps: Vec<TimeStep>,
    pub classical_bits: usize,
    pub retry_blocks: Vec<RetryBlock>,
    pub conditional_blocks: Vec<ConditionalBlock>,
    /// Bits whose measurement is known to give 0 and 1 with equal
    /// probability, the two subtrees that follow being mirror images with
    /// equal final success. Scenario enumeration may follow only outcome 0.
    pub symmetric_bits: Vec<usize>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            steps: Vec::new(),
            classical_bits: 0,
            retry_blocks: Vec::new(),
            conditional_blocks: Vec::new(),
            symmetric_bits: Vec::new(),
        }
    }

    /// Appends a step and returns its index.
    pub fn push(&mut self, ops: Vec<GateOp>) -> usize {
        for op in &ops {
            if let Some(b) = op.bit_written() {
                self.classical_bits = self.classical_bits.max(b + 1);
            }
        }
        self.steps.push(TimeStep::new(ops));
        self.steps.len() - 1
    }

    pub fn measurement_count(&self) -> usize {
        self.steps.iter().flat_map(|s| &s.ops).filter(|op| op.bit_written().is_some()).count()
    }

    pub fn is_valid_location(&self, loc: Location) -> bool {
        loc.step < self.steps.len() && loc.qubit < self.num_qubits
    }

    pub fn to_json(&self) -> String {
        serial::to_json(self)
    }

    pub fn from_json(text: &str) -> crate::Result<Circuit> {
        serial::from_json(text)
    }
}
