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

//! Random program generation shared by the property suites.

#![allow(dead_code)]

use ftprep_core::dm::{gates, DensityMatrix, EngineConfig, KrausChannel, Unitary};
use ftprep_core::noise::{inject_error, PauliError};
use num_complex::Complex64;
use proptest::prelude::*;

/// `Rz(a) Ry(b) Rz(c)` times a global phase.
pub fn euler(a: f64, b: f64, c: f64, phase: f64) -> Unitary {
    let e = |t: f64| Complex64::from_polar(1.0, t);
    let (cb, sb) = ((b / 2.0).cos(), (b / 2.0).sin());
    let g = e(phase);
    Unitary::from_rows(
        2,
        vec![
            g * e(-(a + c) / 2.0) * cb,
            -g * e(-(a - c) / 2.0) * sb,
            g * e((a - c) / 2.0) * sb,
            g * e((a + c) / 2.0) * cb,
        ],
    )
    .unwrap()
}

#[derive(Clone, Debug)]
pub enum Op {
    One(usize, Unitary),
    Two(usize, usize, Unitary),
    Depolarize(Vec<usize>, f64),
    Channel(usize, f64, f64),
    Reset(usize),
    Measure(usize, bool),
    Parity(Vec<usize>, bool),
    Inject(usize, PauliError),
}

fn angle() -> impl Strategy<Value = f64> {
    -3.2f64..3.2
}

fn unitary1() -> impl Strategy<Value = Unitary> {
    prop_oneof![
        Just(gates::h()),
        Just(gates::x()),
        Just(gates::s()),
        (angle(), angle(), angle(), angle()).prop_map(|(a, b, c, d)| euler(a, b, c, d)),
    ]
}

fn unitary2() -> impl Strategy<Value = Unitary> {
    prop_oneof![
        Just(gates::cnot()),
        Just(gates::h_then_cnot()),
        (unitary1(), unitary1(), unitary1()).prop_map(|(a, b, c)| a.kron(&b).mul(&gates::cnot()).mul(&c.kron(&gates::h()))),
    ]
}

fn pauli() -> impl Strategy<Value = PauliError> {
    prop_oneof![Just(PauliError::X), Just(PauliError::Z), Just(PauliError::XZ)]
}

fn pair(n: usize) -> impl Strategy<Value = (usize, usize)> {
    (0..n, 1..n).prop_map(move |(a, d)| (a, (a + d) % n))
}

fn op(n: usize) -> impl Strategy<Value = Op> {
    let q = 0..n;
    prop_oneof![
        4 => (q.clone(), unitary1()).prop_map(|(t, u)| Op::One(t, u)),
        4 => (pair(n), unitary2()).prop_map(|((a, b), u)| Op::Two(a, b, u)),
        2 => (proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n), 0.0f64..0.75)
            .prop_map(|(qs, p)| Op::Depolarize(qs, p)),
        1 => (q.clone(), 0.0f64..0.5, 0.0f64..0.5).prop_map(|(t, x, z)| Op::Channel(t, x, z)),
        1 => q.clone().prop_map(Op::Reset),
        1 => (q.clone(), any::<bool>()).prop_map(|(t, b)| Op::Measure(t, b)),
        1 => (proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n), any::<bool>())
            .prop_map(|(qs, b)| Op::Parity(qs, b)),
        1 => (q, pauli()).prop_map(|(t, e)| Op::Inject(t, e)),
    ]
}

/// A qubit count, a leaf size and a program of up to `max_ops` operations.
pub fn program(max_qubits: usize, max_ops: usize) -> impl Strategy<Value = (usize, usize, Vec<Op>)> {
    (2..=max_qubits, prop_oneof![Just(2usize), Just(4), Just(8)]).prop_flat_map(move |(n, leaf)| {
        (Just(n), Just(leaf), proptest::collection::vec(op(n), 0..=max_ops))
    })
}

/// Applies `op`. A forced outcome too unlikely to renormalise safely is flipped.
pub fn apply(state: &mut DensityMatrix, op: &Op) {
    match op {
        Op::One(t, u) => state.apply_unitary(&[*t], u).unwrap(),
        Op::Two(a, b, u) => state.apply_unitary(&[*a, *b], u).unwrap(),
        Op::Depolarize(qs, p) => state.depolarize(qs, *p).unwrap(),
        Op::Channel(t, x, z) => {
            let ch = KrausChannel::new(vec![(1.0 - x - z, gates::identity()), (*x, gates::x()), (*z, gates::z())]).unwrap();
            state.apply_channel(*t, &ch).unwrap()
        }
        Op::Reset(t) => state.reset_qubit(*t).unwrap(),
        Op::Measure(t, b) => {
            let b = if state.outcome_probability(*t, *b).unwrap() > 1e-3 { *b } else { !*b };
            state.measure_forced(*t, b).unwrap();
        }
        Op::Parity(qs, b) => {
            let b = if state.parity_probability(qs, *b).unwrap() > 1e-3 { *b } else { !*b };
            state.measure_parity_forced(qs, b).unwrap();
        }
        Op::Inject(t, e) => inject_error(state, *t, *e).unwrap(),
    }
}

/// Runs `ops` on both backends in lockstep and returns the largest
/// element-wise difference observed after any operation.
pub fn lockstep(n: usize, leaf: usize, ops: &[Op]) -> f64 {
    use ftprep_core::dm::BackendKind;
    let sparse_cfg = EngineConfig { leaf_size: leaf, ..EngineConfig::with_backend(BackendKind::Sparse) };
    let mut sparse = DensityMatrix::basis_index(n, 0, sparse_cfg).unwrap();
    let mut dense = DensityMatrix::basis_index(n, 0, EngineConfig::with_backend(BackendKind::Dense)).unwrap();
    let mut worst: f64 = 0.0;
    for op in ops {
        // Branch decisions are taken on the dense state so both follow the same path.
        let op = match op {
            Op::Measure(t, b) => {
                Op::Measure(*t, if dense.outcome_probability(*t, *b).unwrap() > 1e-3 { *b } else { !*b })
            }
            Op::Parity(qs, b) => {
                Op::Parity(qs.clone(), if dense.parity_probability(qs, *b).unwrap() > 1e-3 { *b } else { !*b })
            }
            other => other.clone(),
        };
        apply(&mut sparse, &op);
        apply(&mut dense, &op);
        sparse.check_structure().unwrap();
        worst = worst.max(sparse.max_abs_diff(&dense).unwrap());
    }
    worst
}
