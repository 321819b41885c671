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

//! Circuit execution with forced measurement outcomes.
//!
//! A circuit is compiled into a flat instruction list so that execution can be
//! paused at any measurement, the state and [`Cursor`] cloned, and each branch
//! resumed independently.

use super::{Circuit, Condition, GateOp};
use crate::dm::{DensityMatrix, Superop};
use crate::error::{Error, Result};
use crate::noise::{depolarize_step, Injection, NoiseModel};

#[derive(Clone, Debug)]
enum Instr {
    Step(usize),
    JumpUnless { condition: Condition, target: usize },
    RetryEnter { block: usize },
    RetryCheck { block: usize, guard: usize, max: u32, start: usize },
}

/// Position of a paused execution together with its classical record.
#[derive(Clone, Debug, PartialEq)]
pub struct Cursor {
    pc: usize,
    op: usize,
    bits: Vec<Option<bool>>,
    retries: Vec<u32>,
    executed: Vec<bool>,
    measurements: usize,
    /// Largest `|tr(rho) - 1|` seen after any time step.
    pub max_trace_error: f64,
}

impl Cursor {
    pub fn bits(&self) -> &[Option<bool>] {
        &self.bits
    }

    pub fn measurements(&self) -> usize {
        self.measurements
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Event {
    /// Execution is paused before a measurement; `p_one` is the probability
    /// of reading 1.
    Measurement { p_one: f64 },
    Finished,
}

/// A circuit prepared for execution under a fixed noise model and set of
/// deterministic injections.
pub struct Runner<'a> {
    circuit: &'a Circuit,
    program: Vec<Instr>,
    gate_ops: Vec<Vec<Option<Superop>>>,
    model: NoiseModel,
    all_qubits: Vec<usize>,
    injections: Vec<Vec<Superop>>,
}

/// Runs abort when the trace drifts further than this from 1.
const TRACE_ABORT: f64 = 1e-9;

impl<'a> Runner<'a> {
    pub fn new(circuit: &'a Circuit, model: &NoiseModel, injections: &[Injection]) -> Result<Self> {
        let violations = circuit.validate();
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidCircuit(text.join("; ")));
        }
        let mut per_step = vec![Vec::new(); circuit.steps.len()];
        for inj in injections {
            if !circuit.is_valid_location(inj.location) {
                return Err(Error::InvalidLocation { step: inj.location.step, qubit: inj.location.qubit });
            }
            per_step[inj.location.step].push(Superop::conjugation(&[inj.location.qubit], &inj.pauli.unitary()));
        }
        let gate_ops = circuit
            .steps
            .iter()
            .map(|s| {
                s.ops
                    .iter()
                    .map(|op| match op {
                        GateOp::OneQubit { target, matrix } => Some(Superop::conjugation(&[*target], matrix)),
                        GateOp::TwoQubit { targets, matrix } => Some(Superop::conjugation(targets, matrix)),
                        GateOp::Reset { target } => Some(Superop::reset(*target)),
                        GateOp::ControlledPauli { target, pauli, .. } => {
                            Some(Superop::conjugation(&[*target], &pauli.unitary()))
                        }
                        GateOp::Measure { .. } | GateOp::MeasureParity { .. } => None,
                    })
                    .collect()
            })
            .collect();
        let all_qubits: Vec<usize> = (0..circuit.num_qubits).collect();
        let mut runner = Runner { circuit, program: Vec::new(), gate_ops, model: *model, all_qubits, injections: per_step };
        let mut used = vec![false; circuit.retry_blocks.len() + circuit.conditional_blocks.len()];
        runner.compile(0, circuit.steps.len(), &mut used);
        Ok(runner)
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    fn spans(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let c = self.circuit;
        c.retry_blocks
            .iter()
            .map(|b| (b.start, b.end))
            .chain(c.conditional_blocks.iter().map(|b| (b.start, b.end)))
            .enumerate()
            .map(|(i, (s, e))| (i, s, e))
    }

    fn compile(&mut self, start: usize, end: usize, used: &mut Vec<bool>) {
        let mut i = start;
        while i < end {
            let outer = self
                .spans()
                .filter(|&(id, s, e)| !used[id] && s == i && e <= end)
                .max_by_key(|&(_, _, e)| e);
            let Some((id, s, e)) = outer else {
                self.program.push(Instr::Step(i));
                i += 1;
                continue;
            };
            used[id] = true;
            let nretry = self.circuit.retry_blocks.len();
            if id < nretry {
                let b = self.circuit.retry_blocks[id];
                self.program.push(Instr::RetryEnter { block: id });
                let body = self.program.len();
                self.compile(s, e, used);
                self.program.push(Instr::RetryCheck { block: id, guard: b.guard, max: b.max_retries, start: body });
            } else {
                let condition = self.circuit.conditional_blocks[id - nretry].condition.clone();
                let at = self.program.len();
                self.program.push(Instr::JumpUnless { condition, target: 0 });
                self.compile(s, e, used);
                let after = self.program.len();
                if let Instr::JumpUnless { target, .. } = &mut self.program[at] {
                    *target = after;
                }
            }
            i = e;
        }
    }

    pub fn start(&self) -> Cursor {
        Cursor {
            pc: 0,
            op: 0,
            bits: vec![None; self.circuit.classical_bits],
            retries: vec![0; self.circuit.retry_blocks.len()],
            executed: vec![false; self.circuit.steps.len()],
            measurements: 0,
            max_trace_error: 0.0,
        }
    }

    /// Runs until the next measurement or the end of the circuit.
    pub fn advance(&self, state: &mut DensityMatrix, cur: &mut Cursor) -> Result<Event> {
        while cur.pc < self.program.len() {
            match &self.program[cur.pc] {
                Instr::Step(i) => {
                    let step = &self.circuit.steps[*i];
                    while cur.op < step.ops.len() {
                        match &step.ops[cur.op] {
                            GateOp::Measure { target, .. } => {
                                return Ok(Event::Measurement { p_one: state.outcome_probability(*target, true)? });
                            }
                            GateOp::MeasureParity { targets, .. } => {
                                return Ok(Event::Measurement { p_one: state.parity_probability(targets, true)? });
                            }
                            GateOp::ControlledPauli { condition, .. } => {
                                if condition.eval(&cur.bits).map_err(Error::UnwrittenBit)? {
                                    state.apply_superop(self.gate_ops[*i][cur.op].as_ref().expect("compiled"));
                                }
                            }
                            _ => state.apply_superop(self.gate_ops[*i][cur.op].as_ref().expect("compiled")),
                        }
                        cur.op += 1;
                    }
                    depolarize_step(state, &self.model, &self.all_qubits)?;
                    if !std::mem::replace(&mut cur.executed[*i], true) {
                        for op in &self.injections[*i] {
                            state.apply_superop(op);
                        }
                    }
                    let err = (state.trace() - 1.0).abs();
                    cur.max_trace_error = cur.max_trace_error.max(err);
                    if !(err <= TRACE_ABORT) {
                        return Err(Error::InvalidChannel(format!("trace drifted by {err:.3e} after step {i}")));
                    }
                    cur.op = 0;
                    cur.pc += 1;
                }
                Instr::JumpUnless { condition, target } => {
                    cur.pc = if condition.eval(&cur.bits).map_err(Error::UnwrittenBit)? { cur.pc + 1 } else { *target };
                }
                Instr::RetryEnter { block } => {
                    cur.retries[*block] = 0;
                    cur.pc += 1;
                }
                Instr::RetryCheck { block, guard, max, start } => {
                    if cur.bits[*guard] == Some(true) && cur.retries[*block] < *max {
                        cur.retries[*block] += 1;
                        cur.pc = *start;
                    } else {
                        cur.pc += 1;
                    }
                }
            }
        }
        Ok(Event::Finished)
    }

    /// Classical bit written by the pending measurement.
    pub fn pending_bit(&self, cur: &Cursor) -> Option<usize> {
        let Some(Instr::Step(i)) = self.program.get(cur.pc) else { return None };
        self.circuit.steps[*i].ops.get(cur.op).and_then(GateOp::bit_written)
    }

    /// Forces the pending measurement to `outcome`; returns its probability.
    pub fn resolve(&self, state: &mut DensityMatrix, cur: &mut Cursor, outcome: bool) -> Result<f64> {
        let Some(Instr::Step(i)) = self.program.get(cur.pc) else {
            return Err(Error::InvalidCircuit("no measurement pending".into()));
        };
        let prob = match self.circuit.steps[*i].ops.get(cur.op) {
            Some(GateOp::Measure { target, bit }) => {
                let p = state.measure_forced(*target, outcome)?;
                cur.bits[*bit] = Some(outcome);
                p
            }
            Some(GateOp::MeasureParity { targets, bit }) => {
                let p = state.measure_parity_forced(targets, outcome)?;
                cur.bits[*bit] = Some(outcome);
                p
            }
            _ => return Err(Error::InvalidCircuit("no measurement pending".into())),
        };
        cur.op += 1;
        cur.measurements += 1;
        Ok(prob)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: DensityMatrix,
    pub probability: f64,
    pub bits: Vec<Option<bool>>,
    pub max_trace_error: f64,
}

/// Executes `circuit` on `state`, forcing measurement `i` to `scenario[i]`.
pub fn run(
    circuit: &Circuit,
    mut state: DensityMatrix,
    model: &NoiseModel,
    injections: &[Injection],
    scenario: &[bool],
) -> Result<RunOutcome> {
    if state.num_qubits() != circuit.num_qubits {
        return Err(Error::DimensionMismatch { left: state.num_qubits(), right: circuit.num_qubits });
    }
    let runner = Runner::new(circuit, model, injections)?;
    let mut cur = runner.start();
    let mut probability = 1.0;
    while let Event::Measurement { .. } = runner.advance(&mut state, &mut cur)? {
        let &outcome = scenario.get(cur.measurements).ok_or(Error::ScenarioExhausted(cur.measurements))?;
        probability *= runner.resolve(&mut state, &mut cur, outcome)?;
    }
    Ok(RunOutcome { state, probability, bits: cur.bits, max_trace_error: cur.max_trace_error })
}

#[cfg(test)]
mod tests {
    use super::super::{ConditionalBlock, RetryBlock};
    use super::*;
    use crate::dm::{gates, BackendKind, EngineConfig};
    use crate::noise::{Location, PauliError};

    fn zero(n: usize) -> DensityMatrix {
        DensityMatrix::basis_index(n, 0, EngineConfig::with_backend(BackendKind::Dense)).unwrap()
    }

    fn h_measure() -> Circuit {
        let mut c = Circuit::new(1);
        c.push(vec![GateOp::one(0, gates::h())]);
        c.push(vec![GateOp::Measure { target: 0, bit: 0 }]);
        c
    }

    #[test]
    fn hadamard_then_measure() {
        let c = h_measure();
        let noiseless = NoiseModel::noiseless();
        let a = run(&c, zero(1), &noiseless, &[], &[false]).unwrap();
        let b = run(&c, zero(1), &noiseless, &[], &[true]).unwrap();
        assert!((a.probability - 0.5).abs() < 1e-15);
        assert!((a.probability + b.probability - 1.0).abs() < 1e-12);
        assert_eq!(b.bits, vec![Some(true)]);
        assert!(matches!(run(&c, zero(1), &noiseless, &[], &[]), Err(Error::ScenarioExhausted(0))));
    }

    #[test]
    fn retry_repeats_until_guard_clears() {
        // Prepare |+>, measure; repeat the block once on outcome 1.
        let mut c = Circuit::new(1);
        c.push(vec![GateOp::Reset { target: 0 }]);
        c.push(vec![GateOp::one(0, gates::h())]);
        c.push(vec![GateOp::Measure { target: 0, bit: 0 }]);
        c.retry_blocks.push(RetryBlock { start: 0, end: 3, guard: 0, max_retries: 1 });
        let noiseless = NoiseModel::noiseless();
        let once = run(&c, zero(1), &noiseless, &[], &[false]).unwrap();
        assert!((once.probability - 0.5).abs() < 1e-15);
        let twice = run(&c, zero(1), &noiseless, &[], &[true, true]).unwrap();
        assert!((twice.probability - 0.25).abs() < 1e-15);
        assert!(matches!(run(&c, zero(1), &noiseless, &[], &[true]), Err(Error::ScenarioExhausted(1))));
    }

    #[test]
    fn conditional_block_is_skipped_when_false() {
        let mut c = h_measure();
        c.num_qubits = 2;
        c.push(vec![GateOp::one(1, gates::x())]);
        c.conditional_blocks.push(ConditionalBlock { start: 2, end: 3, condition: Condition::Bit(0) });
        let noiseless = NoiseModel::noiseless();
        let off = run(&c, zero(2), &noiseless, &[], &[false]).unwrap();
        assert_eq!(off.state.get(0, 0).re, 1.0);
        let on = run(&c, zero(2), &noiseless, &[], &[true]).unwrap();
        assert!((on.state.get(3, 3).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn controlled_pauli_follows_the_record() {
        let mut c = h_measure();
        c.num_qubits = 2;
        c.push(vec![GateOp::ControlledPauli { target: 1, pauli: PauliError::X, condition: Condition::Bit(0) }]);
        let on = run(&c, zero(2), &NoiseModel::noiseless(), &[], &[true]).unwrap();
        assert!((on.state.get(3, 3).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fused_gate_matches_separate_steps() {
        let mut fused = Circuit::new(2);
        fused.push(vec![GateOp::two(0, 1, gates::h_then_cnot())]);
        let mut split = Circuit::new(2);
        split.push(vec![GateOp::one(0, gates::h())]);
        split.push(vec![GateOp::two(0, 1, gates::cnot())]);
        let noiseless = NoiseModel::noiseless();
        let a = run(&fused, zero(2), &noiseless, &[], &[]).unwrap();
        let b = run(&split, zero(2), &noiseless, &[], &[]).unwrap();
        assert!(a.state.max_abs_diff(&b.state).unwrap() < 1e-12);
    }

    #[test]
    fn injection_is_applied_after_its_step() {
        let mut c = Circuit::new(1);
        c.push(vec![GateOp::one(0, gates::h())]);
        c.push(vec![GateOp::one(0, gates::h())]);
        let inj = Injection { location: Location { step: 0, qubit: 0 }, pauli: PauliError::Z };
        let out = run(&c, zero(1), &NoiseModel::noiseless(), &[inj], &[]).unwrap();
        assert!((out.state.get(1, 1).re - 1.0).abs() < 1e-15);
        let bad = Injection { location: Location { step: 2, qubit: 0 }, pauli: PauliError::Z };
        assert!(matches!(Runner::new(&c, &NoiseModel::noiseless(), &[bad]), Err(Error::InvalidLocation { .. })));
    }

    #[test]
    fn invalid_circuits_are_rejected() {
        let mut c = Circuit::new(1);
        c.push(vec![GateOp::one(0, gates::h()), GateOp::one(0, gates::x())]);
        assert!(matches!(Runner::new(&c, &NoiseModel::noiseless(), &[]), Err(Error::InvalidCircuit(_))));
    }
}
