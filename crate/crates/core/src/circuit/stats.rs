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

//! Resource accounting and structural validation.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::Circuit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub qubits: usize,
    pub depth: usize,
    pub area: usize,
    pub gate_ops: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyStep { step: usize },
    QubitOutOfRange { step: usize, qubit: usize },
    SharedQubit { step: usize, qubit: usize },
    UnwrittenBit { step: usize, bit: usize },
    BitOutOfRange { step: usize, bit: usize },
    BadBlock { start: usize, end: usize, reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyStep { step } => write!(f, "step {step} has no operations"),
            Violation::QubitOutOfRange { step, qubit } => write!(f, "step {step} uses qubit {qubit} outside the circuit width"),
            Violation::SharedQubit { step, qubit } => write!(f, "step {step} uses qubit {qubit} more than once"),
            Violation::UnwrittenBit { step, bit } => write!(f, "step {step} reads bit {bit} before it is written"),
            Violation::BitOutOfRange { step, bit } => write!(f, "step {step} uses bit {bit} beyond the classical register"),
            Violation::BadBlock { start, end, reason } => write!(f, "block {start}..{end}: {reason}"),
        }
    }
}

impl Circuit {
    fn in_conditional(&self, step: usize) -> bool {
        self.conditional_blocks.iter().any(|b| (b.start..b.end).contains(&step))
    }

    /// Counts along the shortest execution: every retry block runs once and
    /// conditional blocks are skipped.
    pub fn stats(&self) -> CircuitStats {
        let mut depth = 0;
        let mut gate_ops = 0;
        for (i, step) in self.steps.iter().enumerate() {
            if self.in_conditional(i) {
                continue;
            }
            depth += 1;
            gate_ops += step.ops.iter().map(|op| op.gate_count()).sum::<usize>();
        }
        CircuitStats { qubits: self.num_qubits, depth, area: self.num_qubits * depth, gate_ops }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut written = vec![false; self.classical_bits];
        let read = |bit: usize, step: usize, written: &[bool], out: &mut Vec<Violation>| {
            if bit >= written.len() {
                out.push(Violation::BitOutOfRange { step, bit });
            } else if !written[bit] {
                out.push(Violation::UnwrittenBit { step, bit });
            }
        };
        for (i, step) in self.steps.iter().enumerate() {
            for b in self.conditional_blocks.iter().filter(|b| b.start == i) {
                let mut bits = Vec::new();
                b.condition.bits_read(&mut bits);
                bits.into_iter().for_each(|bit| read(bit, i, &written, &mut out));
            }
            if step.ops.is_empty() {
                out.push(Violation::EmptyStep { step: i });
            }
            let mut used = vec![false; self.num_qubits];
            for op in &step.ops {
                for q in op.qubits() {
                    if q >= self.num_qubits {
                        out.push(Violation::QubitOutOfRange { step: i, qubit: q });
                    } else if std::mem::replace(&mut used[q], true) {
                        out.push(Violation::SharedQubit { step: i, qubit: q });
                    }
                }
                if let super::GateOp::ControlledPauli { condition, .. } = op {
                    let mut bits = Vec::new();
                    condition.bits_read(&mut bits);
                    bits.into_iter().for_each(|bit| read(bit, i, &written, &mut out));
                }
            }
            for op in &step.ops {
                if let Some(bit) = op.bit_written() {
                    if bit < written.len() {
                        written[bit] = true;
                    } else {
                        out.push(Violation::BitOutOfRange { step: i, bit });
                    }
                }
            }
        }
        self.validate_blocks(&mut out);
        out
    }

    fn validate_blocks(&self, out: &mut Vec<Violation>) {
        let spans: Vec<(usize, usize)> = self
            .retry_blocks
            .iter()
            .map(|b| (b.start, b.end))
            .chain(self.conditional_blocks.iter().map(|b| (b.start, b.end)))
            .collect();
        let bad = |s: usize, e: usize, reason: String| Violation::BadBlock { start: s, end: e, reason };
        for (i, &(s, e)) in spans.iter().enumerate() {
            if s >= e || e > self.steps.len() {
                out.push(bad(s, e, "empty or out of range".into()));
            }
            for &(s2, e2) in &spans[..i] {
                let disjoint = e <= s2 || e2 <= s;
                let nested = (s <= s2 && e2 <= e) || (s2 <= s && e <= e2);
                if (s, e) == (s2, e2) {
                    out.push(bad(s, e, "duplicates another block".into()));
                } else if !disjoint && !nested {
                    out.push(bad(s, e, format!("overlaps block {s2}..{e2} without nesting")));
                }
            }
        }
        for &bit in &self.symmetric_bits {
            if !self.steps.iter().flat_map(|s| &s.ops).any(|op| op.bit_written() == Some(bit)) {
                out.push(Violation::BitOutOfRange { step: self.steps.len(), bit });
            }
        }
        for b in &self.retry_blocks {
            let writes_guard = self
                .steps
                .get(b.start..b.end.min(self.steps.len()))
                .unwrap_or(&[])
                .iter()
                .flat_map(|s| &s.ops)
                .any(|op| op.bit_written() == Some(b.guard));
            if !writes_guard {
                out.push(bad(b.start, b.end, format!("guard bit {} is not written inside the block", b.guard)));
            }
        }
    }
}
