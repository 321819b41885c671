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

//! Best-first enumeration of measurement scenarios.
//!
//! Every measurement splits a branch in two. Pending branches live in a
//! priority queue keyed on their realised probability; the engine always
//! extends the most likely one, so completed scenarios appear in
//! non-increasing order of probability. A split keeps a checkpoint of the
//! state so the second child does not repeat the shared prefix; under memory
//! pressure checkpoints are dropped and rebuilt by replaying forced outcomes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Cursor, Event, Runner};
use crate::dm::DensityMatrix;
use crate::error::{Error, Result};
use crate::noise::{Injection, NoiseModel};
use crate::steane::fidelity_eq4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSettings {
    /// Stop once this much probability mass has been completed.
    pub mass_target: f64,
    pub max_scenarios: usize,
    /// Budget for stored checkpoints, in bytes.
    pub memory_cap: usize,
    /// Keep a per-scenario trace in the result.
    pub record_trace: bool,
    /// Follow only outcome 0 of measurements the circuit declares symmetric.
    pub fold_symmetric: bool,
    /// Also stop once the residual is at most this fraction of the failure
    /// probability estimated from the explored mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_residual: Option<f64>,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        ScenarioSettings { mass_target: 1.0 - 1e-9, max_scenarios: 1_000_000, memory_cap: 1 << 31, record_trace: false, fold_symmetric: true, relative_residual: None }
    }
}

impl ScenarioSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass_target > 0.0 && self.mass_target <= 1.0) {
            return Err(Error::Config(format!("mass target {} outside (0, 1]", self.mass_target)));
        }
        if self.max_scenarios == 0 {
            return Err(Error::Config("max_scenarios must be at least 1".into()));
        }
        Ok(())
    }
}

/// One completed branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub bits: String,
    pub probability: f64,
    pub success: f64,
    pub fidelity: f64,
}

/// Probability-weighted totals with bounds on the unexplored mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub weighted_success: f64,
    pub weighted_fidelity: f64,
    pub explored_mass: f64,
    /// `1 - explored_mass`, clamped at zero.
    pub residual: f64,
    /// `[weighted_fidelity, weighted_fidelity + residual]`.
    pub fidelity_bounds: (f64, f64),
    pub success_bounds: (f64, f64),
    pub scenarios: usize,
    /// True when `max_scenarios` stopped the search before the mass target.
    pub cap_reached: bool,
    pub max_trace_error: f64,
    pub replays: usize,
    /// Completed scenarios in the order found; empty unless requested.
    pub trace: Vec<Scenario>,
}

impl AggregateResult {
    pub fn fidelity_midpoint(&self) -> f64 {
        0.5 * (self.fidelity_bounds.0 + self.fidelity_bounds.1)
    }

    pub fn success_midpoint(&self) -> f64 {
        0.5 * (self.success_bounds.0 + self.success_bounds.1)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.residual
    }

    /// One line per scenario, `bits probability fidelity`, most likely first.
    pub fn trace_text(&self) -> String {
        let mut rows = self.trace.clone();
        rows.sort_by(|a, b| b.probability.total_cmp(&a.probability).then_with(|| a.bits.cmp(&b.bits)));
        let mut out = String::new();
        for s in rows {
            let bits = if s.bits.is_empty() { "-" } else { s.bits.as_str() };
            let _ = writeln!(out, "{bits} {:.16e} {:.16e}", s.probability, s.fidelity);
        }
        out
    }
}

/// Allowed deviation from 1/2 for a measurement declared symmetric.
const SYMMETRY_TOL: f64 = 1e-9;

struct Pending {
    probability: f64,
    seq: u64,
    split: usize,
    outcome: bool,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.probability.total_cmp(&other.probability).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Split {
    /// Outcomes forced before this measurement.
    prefix: Vec<bool>,
    probability: f64,
    checkpoint: Option<(DensityMatrix, Cursor)>,
    parent: Option<usize>,
    pending: u8,
}

struct Branch {
    state: DensityMatrix,
    cursor: Cursor,
    probability: f64,
    bits: Vec<bool>,
    parent: Option<usize>,
}

struct Engine<'a> {
    runner: Runner<'a>,
    initial: &'a DensityMatrix,
    floor: f64,
    splits: Vec<Split>,
    heap: BinaryHeap<Pending>,
    seq: u64,
    stored_bytes: usize,
    memory_cap: usize,
    replays: usize,
}

impl Engine<'_> {
    fn push(&mut self, split: usize, outcome: bool, probability: f64) {
        self.seq += 1;
        self.splits[split].pending += 1;
        self.heap.push(Pending { probability, seq: self.seq, split, outcome });
    }

    fn store(&mut self, split: usize, state: &DensityMatrix, cursor: &Cursor) {
        let bytes = state.approx_bytes();
        self.stored_bytes += bytes;
        self.splits[split].checkpoint = Some((state.clone(), cursor.clone()));
        while self.stored_bytes > self.memory_cap {
            let victim = self
                .splits
                .iter()
                .enumerate()
                .filter(|(_, s)| s.checkpoint.is_some())
                .min_by(|a, b| a.1.probability.total_cmp(&b.1.probability))
                .map(|(i, _)| i);
            let Some(v) = victim else { break };
            self.release(v);
        }
    }

    fn release(&mut self, split: usize) {
        if let Some((state, _)) = self.splits[split].checkpoint.take() {
            self.stored_bytes -= state.approx_bytes();
        }
    }

    /// Rebuilds the state paused at `split`, from the nearest stored ancestor.
    fn restore(&mut self, split: usize) -> Result<(DensityMatrix, Cursor)> {
        if let Some((state, cursor)) = &self.splits[split].checkpoint {
            return Ok((state.clone(), cursor.clone()));
        }
        self.replays += 1;
        let mut anc = self.splits[split].parent;
        while let Some(a) = anc {
            if self.splits[a].checkpoint.is_some() {
                break;
            }
            anc = self.splits[a].parent;
        }
        let (mut state, mut cursor, done) = match anc {
            Some(a) => {
                let (s, c) = self.splits[a].checkpoint.clone().expect("checked above");
                (s, c, self.splits[a].prefix.len())
            }
            None => (self.initial.clone(), self.runner.start(), 0),
        };
        let target = &self.splits[split].prefix;
        for &bit in &target[done..] {
            match self.runner.advance(&mut state, &mut cursor)? {
                Event::Measurement { .. } => {
                    self.runner.resolve(&mut state, &mut cursor, bit)?;
                }
                Event::Finished => return Err(Error::InvalidCircuit("replay ended early".into())),
            }
        }
        match self.runner.advance(&mut state, &mut cursor)? {
            Event::Measurement { .. } => Ok((state, cursor)),
            Event::Finished => Err(Error::InvalidCircuit("replay ended early".into())),
        }
    }

    fn take(&mut self, p: Pending) -> Result<Branch> {
        let (mut state, mut cursor) = self.restore(p.split)?;
        let split = &mut self.splits[p.split];
        split.pending -= 1;
        let mut bits = split.prefix.clone();
        if split.pending == 0 {
            self.release(p.split);
        }
        self.runner.resolve(&mut state, &mut cursor, p.outcome)?;
        bits.push(p.outcome);
        Ok(Branch { state, cursor, probability: p.probability, bits, parent: Some(p.split) })
    }
}

/// Enumerates scenarios of `circuit` best-first.
///
/// `success` maps each completed final state to its success probability; the
/// fidelity of a scenario is its square.
pub fn enumerate(
    circuit: &Circuit,
    initial: &DensityMatrix,
    model: &NoiseModel,
    injections: &[Injection],
    settings: &ScenarioSettings,
    success: &dyn Fn(&DensityMatrix) -> Result<f64>,
) -> Result<AggregateResult> {
    settings.validate()?;
    if initial.num_qubits() != circuit.num_qubits {
        return Err(Error::DimensionMismatch { left: initial.num_qubits(), right: circuit.num_qubits });
    }
    let runner = Runner::new(circuit, model, injections)?;
    let floor = initial.config().probability_floor;
    let mut eng = Engine {
        runner,
        initial,
        floor,
        splits: Vec::new(),
        heap: BinaryHeap::new(),
        seq: 0,
        stored_bytes: 0,
        memory_cap: settings.memory_cap,
        replays: 0,
    };
    let mut current = Some(Branch {
        state: initial.clone(),
        cursor: eng.runner.start(),
        probability: 1.0,
        bits: Vec::new(),
        parent: None,
    });
    let (mut ws, mut wf, mut mass) = (0.0, 0.0, 0.0);
    let mut count = 0usize;
    let mut max_trace_error: f64 = 0.0;
    let mut trace = Vec::new();
    let mut stopped_relative = false;
    loop {
        let mut br = match current.take() {
            Some(b) => b,
            None => match eng.heap.pop() {
                Some(p) => eng.take(p)?,
                None => break,
            },
        };
        match eng.runner.advance(&mut br.state, &mut br.cursor)? {
            Event::Measurement { p_one } => {
                let folded = settings.fold_symmetric
                    && eng.runner.pending_bit(&br.cursor).is_some_and(|b| circuit.symmetric_bits.contains(&b));
                if folded {
                    if (p_one - 0.5).abs() > SYMMETRY_TOL {
                        return Err(Error::InvalidCircuit(format!(
                            "measurement declared symmetric has outcome probability {p_one}"
                        )));
                    }
                    eng.runner.resolve(&mut br.state, &mut br.cursor, false)?;
                    br.bits.push(false);
                    current = Some(br);
                    continue;
                }
                let p = [1.0 - p_one, p_one];
                let ok = |i: usize| p[i] >= eng.floor && br.probability * p[i] > 0.0;
                match (ok(0), ok(1)) {
                    (false, false) => {
                        return Err(Error::ImpossibleBranch { outcome: 0, probability: p[0].max(p[1]), floor: eng.floor })
                    }
                    (true, false) | (false, true) => {
                        let outcome = ok(1);
                        br.probability *= eng.runner.resolve(&mut br.state, &mut br.cursor, outcome)?;
                        br.bits.push(outcome);
                        current = Some(br);
                    }
                    (true, true) => {
                        let dominant = p[1] > p[0];
                        let (pd, pm) = (br.probability * p[dominant as usize], br.probability * p[!dominant as usize]);
                        let id = eng.splits.len();
                        eng.splits.push(Split {
                            prefix: br.bits.clone(),
                            probability: pm,
                            checkpoint: None,
                            parent: br.parent,
                            pending: 0,
                        });
                        eng.store(id, &br.state, &br.cursor);
                        eng.push(id, !dominant, pm);
                        let top = eng.heap.peek().map_or(0.0, |t| t.probability);
                        if pd >= top {
                            let q = eng.runner.resolve(&mut br.state, &mut br.cursor, dominant)?;
                            br.probability *= q;
                            br.bits.push(dominant);
                            br.parent = Some(id);
                            current = Some(br);
                        } else {
                            eng.splits[id].probability = pd;
                            eng.push(id, dominant, pd);
                        }
                    }
                }
            }
            Event::Finished => {
                let s = success(&br.state)?;
                let f = fidelity_eq4(s);
                ws += br.probability * s;
                wf += br.probability * f;
                mass += br.probability;
                count += 1;
                max_trace_error = max_trace_error.max(br.cursor.max_trace_error);
                if settings.record_trace {
                    let bits = br.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                    trace.push(Scenario { bits, probability: br.probability, success: s, fidelity: f });
                }
                let relative_done = settings.relative_residual.is_some_and(|rel| {
                    let failure = (1.0 - ws / mass).max(0.0);
                    1.0 - mass <= rel * failure
                });
                stopped_relative = relative_done;
                if mass >= settings.mass_target || relative_done || count >= settings.max_scenarios {
                    break;
                }
            }
        }
    }
    let residual = (1.0 - mass).max(0.0);
    Ok(AggregateResult {
        weighted_success: ws,
        weighted_fidelity: wf,
        explored_mass: mass,
        residual,
        fidelity_bounds: (wf, wf + residual),
        success_bounds: (ws, ws + residual),
        scenarios: count,
        cap_reached: mass < settings.mass_target && count >= settings.max_scenarios && !stopped_relative,
        max_trace_error,
        replays: eng.replays,
        trace,
    })
}

/// Product of forced-outcome probabilities along `prefix`; zero if the prefix
/// is impossible.
pub fn branch_probability(
    circuit: &Circuit,
    initial: &DensityMatrix,
    model: &NoiseModel,
    injections: &[Injection],
    prefix: &[bool],
) -> Result<f64> {
    let runner = Runner::new(circuit, model, injections)?;
    let mut state = initial.clone();
    let mut cursor = runner.start();
    let mut prob = 1.0;
    for &bit in prefix {
        match runner.advance(&mut state, &mut cursor)? {
            Event::Measurement { .. } => match runner.resolve(&mut state, &mut cursor, bit) {
                Ok(p) => prob *= p,
                Err(Error::ImpossibleBranch { .. }) => return Ok(0.0),
                Err(e) => return Err(e),
            },
            Event::Finished => return Err(Error::ScenarioExhausted(cursor.measurements())),
        }
    }
    Ok(prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateOp;
    use crate::dm::{gates, BackendKind, EngineConfig};

    fn h_measure() -> Circuit {
        let mut c = Circuit::new(1);
        c.push(vec![GateOp::one(0, gates::h())]);
        c.push(vec![GateOp::Measure { target: 0, bit: 0 }]);
        c
    }

    fn zero(n: usize) -> DensityMatrix {
        DensityMatrix::basis_index(n, 0, EngineConfig::with_backend(BackendKind::Dense)).unwrap()
    }

    fn one(_: &DensityMatrix) -> Result<f64> {
        Ok(1.0)
    }

    #[test]
    fn two_branch_circuit() {
        let c = h_measure();
        let settings = ScenarioSettings { mass_target: 1.0, record_trace: true, ..Default::default() };
        let r = enumerate(&c, &zero(1), &NoiseModel::noiseless(), &[], &settings, &one).unwrap();
        assert_eq!(r.scenarios, 2);
        assert!((r.explored_mass - 1.0).abs() < 1e-15);
        assert!(r.trace.iter().all(|s| (s.probability - 0.5).abs() < 1e-15));
        assert_eq!(r.trace_text().lines().count(), 2);
    }

    #[test]
    fn branch_probabilities() {
        let c = h_measure();
        let m = NoiseModel::noiseless();
        assert_eq!(branch_probability(&c, &zero(1), &m, &[], &[]).unwrap(), 1.0);
        let a = branch_probability(&c, &zero(1), &m, &[], &[false]).unwrap();
        let b = branch_probability(&c, &zero(1), &m, &[], &[true]).unwrap();
        assert!((a - 0.5).abs() < 1e-15 && (a + b - 1.0).abs() < 1e-15);
        let mut det = Circuit::new(1);
        det.push(vec![GateOp::Measure { target: 0, bit: 0 }]);
        assert_eq!(branch_probability(&det, &zero(1), &m, &[], &[true]).unwrap(), 0.0);
    }

    #[test]
    fn cap_flags_incomplete_search() {
        let c = h_measure();
        let settings = ScenarioSettings { mass_target: 1.0, max_scenarios: 1, ..Default::default() };
        let r = enumerate(&c, &zero(1), &NoiseModel::noiseless(), &[], &settings, &one).unwrap();
        assert!(r.cap_reached);
        assert_eq!(r.scenarios, 1);
        assert!((r.residual - 0.5).abs() < 1e-15);
        assert!(r.fidelity_bounds.0 <= r.fidelity_bounds.1);
    }

    #[test]
    fn eviction_falls_back_to_replay() {
        let mut c = Circuit::new(3);
        for q in 0..3 {
            c.push(vec![GateOp::one(q, gates::h())]);
            c.push(vec![GateOp::Measure { target: q, bit: q }]);
        }
        let m = NoiseModel::new(0.1).unwrap();
        let full = ScenarioSettings { mass_target: 1.0, record_trace: true, ..Default::default() };
        let tight = ScenarioSettings { memory_cap: 0, ..full };
        let a = enumerate(&c, &zero(3), &m, &[], &full, &one).unwrap();
        let b = enumerate(&c, &zero(3), &m, &[], &tight, &one).unwrap();
        assert_eq!(a.replays, 0);
        assert!(b.replays > 0);
        assert_eq!(a.trace, b.trace);
    }

    /// Every qubit rotated by its own angle and measured, twice over, so
    /// that no two branches are equally likely.
    fn uneven(n: usize) -> Circuit {
        let mut c = Circuit::new(n);
        let tilt = |a: f64| crate::dm::Unitary::from_real(2, &[a.cos(), -a.sin(), a.sin(), a.cos()]).unwrap();
        c.push((0..n).map(|q| GateOp::one(q, tilt(0.2 + 0.3 * q as f64))).collect());
        c.push((0..n).map(|q| GateOp::Measure { target: q, bit: q }).collect());
        c.push((0..n).map(|q| GateOp::one(q, tilt(0.9 - 0.2 * q as f64))).collect());
        c.push((0..n).map(|q| GateOp::Measure { target: q, bit: n + q }).collect());
        c
    }

    fn success_of_first(st: &DensityMatrix) -> Result<f64> {
        Ok(st.get(0, 0).re + 0.5 * st.get(1, 1).re)
    }

    #[test]
    fn exhaustive_mass_and_order() {
        for n in [3, 6] {
            let c = uneven(n);
            let settings = ScenarioSettings { mass_target: 1.0, record_trace: true, ..Default::default() };
            let r = enumerate(&c, &zero(n), &NoiseModel::new(0.02).unwrap(), &[], &settings, &one).unwrap();
            assert!((r.explored_mass - 1.0).abs() < 1e-9);
            assert!(r.trace.windows(2).all(|w| w[0].probability >= w[1].probability - 1e-12));
            assert!(r.trace.iter().all(|s| s.bits.len() == 2 * n));
        }
    }

    #[test]
    fn result_does_not_depend_on_the_cap_once_the_target_is_met() {
        let c = uneven(3);
        let m = NoiseModel::new(0.01).unwrap();
        let base = ScenarioSettings { mass_target: 0.99, ..Default::default() };
        let a = enumerate(&c, &zero(3), &m, &[], &base, &success_of_first).unwrap();
        assert!(!a.cap_reached);
        let b = enumerate(&c, &zero(3), &m, &[], &ScenarioSettings { max_scenarios: a.scenarios, ..base }, &success_of_first).unwrap();
        let c2 = enumerate(&c, &zero(3), &m, &[], &ScenarioSettings { max_scenarios: 10 * a.scenarios, ..base }, &success_of_first).unwrap();
        for r in [&b, &c2] {
            assert!((r.weighted_fidelity - a.weighted_fidelity).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_shrinks_with_the_target() {
        let c = uneven(3);
        let m = NoiseModel::new(0.01).unwrap();
        let mut last = f64::INFINITY;
        for target in [0.5, 0.9, 0.99, 0.999, 1.0] {
            let r = enumerate(&c, &zero(3), &m, &[], &ScenarioSettings { mass_target: target, ..Default::default() }, &success_of_first).unwrap();
            let width = r.fidelity_bounds.1 - r.fidelity_bounds.0;
            assert!(width <= last + 1e-15);
            assert!(r.explored_mass >= target - 1e-12);
            last = width;
        }
    }

    #[test]
    fn relative_rule_stops_early_with_honest_bounds() {
        let c = uneven(3);
        let m = NoiseModel::new(0.01).unwrap();
        let exact = enumerate(&c, &zero(3), &m, &[], &ScenarioSettings { mass_target: 1.0, ..Default::default() }, &success_of_first).unwrap();
        let settings = ScenarioSettings { mass_target: 1.0, relative_residual: Some(0.5), ..Default::default() };
        let r = enumerate(&c, &zero(3), &m, &[], &settings, &success_of_first).unwrap();
        assert!(r.scenarios < exact.scenarios);
        assert!(r.success_bounds.0 <= exact.weighted_success + 1e-12 && exact.weighted_success <= r.success_bounds.1 + 1e-12);
    }

    #[test]
    fn sibling_prefixes_sum_to_parent() {
        let c = uneven(3);
        let m = NoiseModel::new(0.05).unwrap();
        let prefix = [true, false];
        let parent = branch_probability(&c, &zero(3), &m, &[], &prefix).unwrap();
        let kids: f64 = [false, true]
            .iter()
            .map(|&b| branch_probability(&c, &zero(3), &m, &[], &[true, false, b]).unwrap())
            .sum();
        assert!((parent - kids).abs() < 1e-12);
    }
}
