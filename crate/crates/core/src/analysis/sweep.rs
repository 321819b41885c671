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


use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{run, Circuit};
use crate::dm::{DensityMatrix, EngineConfig};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::scenario::{enumerate, AggregateResult, ScenarioSettings};
use crate::steane::{build_direct_circuit, build_ft_circuit, data_success, fidelity_eq4};

use super::AnalysisConfig;

/// Fidelities of both circuits at one error rate.
///
/// FT values are midpoints of the interval left open by the unexplored
/// scenario mass; `f_ft_err` and `s_ft_err` are its half-widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub f_direct: f64,
    pub f_ft: f64,
    pub f_ft_err: f64,
    pub s_direct: f64,
    pub s_ft: f64,
    pub s_ft_err: f64,
    pub ft_scenarios: usize,
    pub ft_cap_reached: bool,
    pub max_trace_error: f64,
}

impl SweepPoint {
    pub fn direct_failure(&self) -> f64 {
        1.0 - self.s_direct
    }

    pub fn ft_failure(&self) -> f64 {
        1.0 - self.s_ft
    }

    /// Warning text when the FT search hit its scenario cap.
    pub fn warning(&self) -> Option<String> {
        self.ft_cap_reached.then(|| {
            format!("p = {:e}: scenario cap reached after {} scenarios, f_ft uncertain by {:.3e}", self.p, self.ft_scenarios, self.f_ft_err)
        })
    }
}

/// Simulates the direct and fault-tolerant circuits at arbitrary `p`.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub direct: Circuit,
    pub ft: Circuit,
    pub engine: EngineConfig,
    pub settings: ScenarioSettings,
}

impl Evaluator {
    pub fn new(cfg: &AnalysisConfig) -> Self {
        Evaluator {
            direct: build_direct_circuit(),
            ft: build_ft_circuit(cfg.ft_options()),
            engine: cfg.engine(),
            settings: cfg.scenario_settings(),
        }
    }

    /// Success probability and worst trace drift of the direct circuit.
    pub fn direct(&self, p: f64) -> Result<(f64, f64)> {
        let init = DensityMatrix::basis_index(self.direct.num_qubits, 0, self.engine)?;
        let out = run(&self.direct, init, &NoiseModel::new(p)?, &[], &[])?;
        Ok((data_success(&out.state)?, out.max_trace_error))
    }

    pub fn ft(&self, p: f64) -> Result<AggregateResult> {
        let init = DensityMatrix::basis_index(self.ft.num_qubits, 0, self.engine)?;
        enumerate(&self.ft, &init, &NoiseModel::new(p)?, &[], &self.settings, &data_success)
    }

    pub fn point(&self, p: f64) -> Result<SweepPoint> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ErrorRate(p));
        }
        let (s_direct, direct_trace) = self.direct(p)?;
        let agg = self.ft(p)?;
        Ok(SweepPoint {
            p,
            f_direct: fidelity_eq4(s_direct),
            f_ft: agg.fidelity_midpoint(),
            f_ft_err: agg.half_width(),
            s_direct,
            s_ft: agg.success_midpoint(),
            s_ft_err: agg.half_width(),
            ft_scenarios: agg.scenarios,
            ft_cap_reached: agg.cap_reached,
            max_trace_error: direct_trace.max(agg.max_trace_error),
        })
    }
}

/// Evaluates every grid point on a pool of `threads` workers, in grid order.
pub fn run_sweep(eval: &Evaluator, p_values: &[f64], threads: Option<usize>) -> Result<Vec<SweepPoint>> {
    for w in p_values.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Config("sweep values must be strictly increasing".into()));
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| p_values.par_iter().map(|&p| eval.point(p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_fidelity_is_square_of_success() {
        let eval = Evaluator::new(&AnalysisConfig::default());
        for p in [1e-4, 1e-2, 0.2] {
            let (s, _) = eval.direct(p).unwrap();
            assert!(s > 0.0 && s < 1.0);
            assert!((fidelity_eq4(s) - s * s).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_fidelity_falls_with_p() {
        let eval = Evaluator::new(&AnalysisConfig::default());
        let s: Vec<f64> = [1e-5, 1e-4, 1e-3, 1e-2].iter().map(|&p| eval.direct(p).unwrap().0).collect();
        assert!(s.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn rejects_unsorted_grid() {
        let eval = Evaluator::new(&AnalysisConfig::default());
        assert!(run_sweep(&eval, &[1e-3, 1e-4], Some(1)).is_err());
        assert!(run_sweep(&eval, &[], Some(1)).unwrap().is_empty());
    }

    #[test]
    fn point_rejects_out_of_range_rates() {
        let eval = Evaluator::new(&AnalysisConfig::default());
        assert!(matches!(eval.point(0.0), Err(Error::ErrorRate(_))));
    }
}
