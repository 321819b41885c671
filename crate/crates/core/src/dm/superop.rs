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

//! Linear maps on the density-matrix entries of one or two qubits.
//!
//! A superoperator on `k` target qubits is stored as a `4^k x 4^k` matrix over
//! the packed index `g = (r << k) | c`, where `r` and `c` are the row and column
//! bits of the targets. Targets are kept in ascending qubit order, so the first
//! target (the highest tree level) occupies the most significant bit of `r` and
//! of `c`. Both storage backends consume this form.

use num_complex::Complex64;

use super::unitary::Unitary;

#[derive(Clone, Debug)]
pub struct Superop {
    /// Ascending, distinct.
    pub(crate) targets: Vec<usize>,
    /// Nonzero coefficients per output index: `rows[g_out] = [(g_in, coeff)]`.
    pub(crate) rows: Vec<Vec<(usize, Complex64)>>,
}

impl Superop {
    pub fn k(&self) -> usize {
        self.targets.len()
    }

    /// `rho -> U rho U^dagger` with `u` acting on `targets` in the given order.
    pub(crate) fn conjugation(targets: &[usize], u: &Unitary) -> Superop {
        Self::mixed_unitary(targets, &[(1.0, u.clone())])
    }

    /// `rho -> sum_k w_k U_k rho U_k^dagger`.
    pub(crate) fn mixed_unitary(targets: &[usize], terms: &[(f64, Unitary)]) -> Superop {
        let k = targets.len();
        let d = 1usize << k;
        let kk = d * d;
        let mut dense = vec![Complex64::new(0.0, 0.0); kk * kk];
        for (w, u) in terms {
            if *w == 0.0 {
                continue;
            }
            for r in 0..d {
                for c in 0..d {
                    for r2 in 0..d {
                        let a = u.at(r, r2);
                        if a == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for c2 in 0..d {
                            let b = u.at(c, c2).conj();
                            dense[((r << k) | c) * kk + ((r2 << k) | c2)] += a * b * *w;
                        }
                    }
                }
            }
        }
        Self::from_user_order(targets, &dense)
    }

    /// Replaces the target by `|0><0|` after tracing it out.
    pub(crate) fn reset(target: usize) -> Superop {
        let one = Complex64::new(1.0, 0.0);
        Superop {
            targets: vec![target],
            rows: vec![vec![(0, one), (3, one)], vec![], vec![], vec![]],
        }
    }

    /// Permutes a dense superoperator given in the caller's target order into
    /// ascending target order and extracts its sparsity pattern.
    fn from_user_order(targets: &[usize], dense: &[Complex64]) -> Superop {
        let k = targets.len();
        let kk = 1usize << (2 * k);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&i| targets[i]);
        // sorted position j holds user target order[j]
        let to_user = |bits: usize| -> usize {
            let mut out = 0;
            for (j, &u) in order.iter().enumerate() {
                if (bits >> (k - 1 - j)) & 1 == 1 {
                    out |= 1 << (k - 1 - u);
                }
            }
            out
        };
        let mask = (1usize << k) - 1;
        let user_index = |g: usize| (to_user(g >> k) << k) | to_user(g & mask);
        let mut rows = vec![Vec::new(); kk];
        for (g_out, row) in rows.iter_mut().enumerate() {
            let uo = user_index(g_out);
            for g_in in 0..kk {
                let v = dense[uo * kk + user_index(g_in)];
                if v.norm_sqr() > 0.0 {
                    row.push((g_in, v));
                }
            }
        }
        let mut sorted: Vec<usize> = targets.to_vec();
        sorted.sort_unstable();
        Superop {
            targets: sorted,
            rows,
        }
    }
}
