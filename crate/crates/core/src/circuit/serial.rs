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

//! JSON interchange format for circuits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Circuit, Condition, ConditionalBlock, GateOp, RetryBlock, TimeStep};
use crate::dm::Unitary;
use crate::error::{Error, Result};
use crate::noise::PauliError;

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    num_qubits: usize,
    steps: Vec<Vec<OpRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classical_bits: Option<usize>,
    #[serde(default)]
    retry_blocks: Vec<RetryBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    conditional_blocks: Vec<ConditionalBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    symmetric_bits: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct OpRecord {
    kind: String,
    targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pauli: Option<PauliError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    condition: Option<Condition>,
}

fn matrix_record(u: &Unitary) -> Option<Vec<[f64; 2]>> {
    Some(u.entries().iter().map(|z| [z.re, z.im]).collect())
}

impl From<&GateOp> for OpRecord {
    fn from(op: &GateOp) -> Self {
        let mut rec = OpRecord { kind: String::new(), targets: op.qubits(), matrix: None, bit: None, pauli: None, condition: None };
        match op {
            GateOp::OneQubit { matrix, .. } => {
                rec.kind = "unitary".into();
                rec.matrix = matrix_record(matrix);
            }
            GateOp::TwoQubit { matrix, .. } => {
                rec.kind = "unitary".into();
                rec.matrix = matrix_record(matrix);
            }
            GateOp::Measure { bit, .. } => {
                rec.kind = "measure".into();
                rec.bit = Some(*bit);
            }
            GateOp::MeasureParity { bit, .. } => {
                rec.kind = "measure_parity".into();
                rec.bit = Some(*bit);
            }
            GateOp::Reset { .. } => rec.kind = "reset".into(),
            GateOp::ControlledPauli { pauli, condition, .. } => {
                rec.kind = "controlled_pauli".into();
                rec.pauli = Some(*pauli);
                rec.condition = Some(condition.clone());
            }
        }
        rec
    }
}

impl TryFrom<OpRecord> for GateOp {
    type Error = Error;

    fn try_from(rec: OpRecord) -> Result<Self> {
        let missing = |field: &str| Error::Parse(format!("`{}` op without `{field}`", rec.kind));
        let single = || match rec.targets.as_slice() {
            [t] => Ok(*t),
            other => Err(Error::Parse(format!("`{}` op needs one target, got {other:?}", rec.kind))),
        };
        Ok(match rec.kind.as_str() {
            "unitary" => {
                let entries: Vec<Complex64> = rec
                    .matrix
                    .as_ref()
                    .ok_or_else(|| missing("matrix"))?
                    .iter()
                    .map(|[re, im]| Complex64::new(*re, *im))
                    .collect();
                let dim = 1usize << rec.targets.len();
                let u = Unitary::from_rows(dim, entries)?;
                u.check_unitary()?;
                match rec.targets.as_slice() {
                    [t] => GateOp::OneQubit { target: *t, matrix: u },
                    [a, b] => GateOp::TwoQubit { targets: [*a, *b], matrix: u },
                    other => return Err(Error::Parse(format!("unitary on {} targets", other.len()))),
                }
            }
            "measure" => GateOp::Measure { target: single()?, bit: rec.bit.ok_or_else(|| missing("bit"))? },
            "measure_parity" => {
                if rec.targets.is_empty() {
                    return Err(Error::Parse("parity measurement without targets".into()));
                }
                GateOp::MeasureParity { bit: rec.bit.ok_or_else(|| missing("bit"))?, targets: rec.targets.clone() }
            }
            "reset" => GateOp::Reset { target: single()? },
            "controlled_pauli" => GateOp::ControlledPauli {
                target: single()?,
                pauli: rec.pauli.ok_or_else(|| missing("pauli"))?,
                condition: rec.condition.clone().ok_or_else(|| missing("condition"))?,
            },
            other => return Err(Error::Parse(format!("unknown op kind `{other}`"))),
        })
    }
}

pub(super) fn to_json(c: &Circuit) -> String {
    let doc = CircuitDoc {
        num_qubits: c.num_qubits,
        steps: c.steps.iter().map(|s| s.ops.iter().map(OpRecord::from).collect()).collect(),
        classical_bits: Some(c.classical_bits),
        retry_blocks: c.retry_blocks.clone(),
        conditional_blocks: c.conditional_blocks.clone(),
        symmetric_bits: c.symmetric_bits.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("circuit documents are always serialisable")
}

pub(super) fn from_json(text: &str) -> Result<Circuit> {
    let doc: CircuitDoc =
        serde_json::from_str(text).map_err(|source| Error::Json { context: "circuit document".into(), source })?;
    let mut steps = Vec::with_capacity(doc.steps.len());
    let mut bits = 0;
    for ops in doc.steps {
        let ops = ops.into_iter().map(GateOp::try_from).collect::<Result<Vec<_>>>()?;
        for op in &ops {
            if let Some(b) = op.bit_written() {
                bits = usize::max(bits, b + 1);
            }
        }
        steps.push(TimeStep::new(ops));
    }
    Ok(Circuit {
        num_qubits: doc.num_qubits,
        steps,
        classical_bits: doc.classical_bits.unwrap_or(bits).max(bits),
        retry_blocks: doc.retry_blocks,
        conditional_blocks: doc.conditional_blocks,
        symmetric_bits: doc.symmetric_bits,
    })
}
