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


use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::dm::{DensityMatrix, EngineConfig};
use crate::error::Result;
use crate::noise::{Injection, Location, NoiseModel, PauliError};
use crate::scenario::{enumerate, ScenarioSettings};
use crate::steane::data_success;

/// Distance from 0 or 1 within which a success probability is classified as exact.
pub const CLASS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionClass {
    Success,
    Failure,
    Partial,
}

impl InjectionClass {
    pub fn of(success: f64) -> Self {
        if (success - 1.0).abs() <= CLASS_TOL {
            InjectionClass::Success
        } else if success <= CLASS_TOL {
            InjectionClass::Failure
        } else {
            InjectionClass::Partial
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub location: Location,
    pub pauli: PauliError,
    pub success: f64,
    pub class: InjectionClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectionReport {
    pub circuit: String,
    pub injections: Vec<InjectionRecord>,
    /// Injections whose output is not recovered with certainty.
    pub failing_count: usize,
}

impl InjectionReport {
    /// Expected number of logical failures per unit `p/3`, i.e. `sum(1 - S)`.
    pub fn deficit(&self) -> f64 {
        self.injections.iter().map(|r| 1.0 - r.success).sum()
    }

    pub fn count(&self, class: InjectionClass) -> usize {
        self.injections.iter().filter(|r| r.class == class).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &InjectionRecord> {
        self.injections.iter().filter(|r| r.class != InjectionClass::Success)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,qubit,pauli,success\n");
        for r in &self.injections {
            let _ = writeln!(out, "{},{},{},{:.16e}", r.location.step, r.location.qubit, r.pauli, r.success);
        }
        out
    }
}

/// Success probability of `circuit` at `p = 0` with the given deterministic errors.
pub fn injected_success(
    circuit: &Circuit,
    engine: EngineConfig,
    settings: &ScenarioSettings,
    injections: &[Injection],
) -> Result<f64> {
    let init = DensityMatrix::basis_index(circuit.num_qubits, 0, engine)?;
    let agg = enumerate(circuit, &init, &NoiseModel::noiseless(), injections, settings, &data_success)?;
    Ok(agg.success_midpoint())
}

/// Runs every single error after every time step on every qubit.
pub fn inject_single(id: &str, circuit: &Circuit, engine: EngineConfig, settings: &ScenarioSettings) -> Result<InjectionReport> {
    let mut injections = Vec::with_capacity(circuit.steps.len() * circuit.num_qubits * 3);
    for step in 0..circuit.steps.len() {
        for qubit in 0..circuit.num_qubits {
            for pauli in PauliError::ALL {
                let inj = Injection { location: Location { step, qubit }, pauli };
                let success = injected_success(circuit, engine, settings, &[inj])?;
                injections.push(InjectionRecord { location: inj.location, pauli, success, class: InjectionClass::of(success) });
            }
        }
    }
    let failing_count = injections.iter().filter(|r| r.class != InjectionClass::Success).count();
    Ok(InjectionReport { circuit: id.to_string(), injections, failing_count })
}
