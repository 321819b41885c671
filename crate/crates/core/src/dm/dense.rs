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

//! Flat row-major storage. Never prunes; used as a reference backend.

use num_complex::Complex64;

use super::superop::Superop;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub(crate) struct DenseMatrix {
    num_qubits: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub(crate) fn from_fn(num_qubits: usize, f: &dyn Fn(usize, usize) -> Complex64) -> DenseMatrix {
        let d = 1usize << num_qubits;
        let mut data = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                data.push(f(r, c));
            }
        }
        DenseMatrix { num_qubits, data }
    }

    pub(crate) fn from_entries(num_qubits: usize, entries: &[(usize, usize, Complex64)]) -> DenseMatrix {
        let d = 1usize << num_qubits;
        let mut data = vec![ZERO; d * d];
        for &(r, c, v) in entries {
            data[r * d + c] = v;
        }
        DenseMatrix { num_qubits, data }
    }

    #[inline]
    fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub(crate) fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim() + c]
    }

    pub(crate) fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, usize, Complex64)) {
        let d = self.dim();
        for (i, v) in self.data.iter().enumerate() {
            if *v != ZERO {
                f(i / d, i % d, *v);
            }
        }
    }

    pub(crate) fn diag_sum(&self, pred: &dyn Fn(usize) -> bool) -> f64 {
        let d = self.dim();
        (0..d).filter(|&i| pred(i)).map(|i| self.data[i * d + i].re).sum()
    }

    pub(crate) fn retain(&mut self, keep: &dyn Fn(usize, usize) -> bool) {
        let d = self.dim();
        for (i, v) in self.data.iter_mut().enumerate() {
            if !keep(i / d, i % d) {
                *v = ZERO;
            }
        }
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub(crate) fn trace_product(&self, other: &DenseMatrix) -> Option<Complex64> {
        if self.num_qubits != other.num_qubits {
            return None;
        }
        let d = self.dim();
        let mut acc = ZERO;
        for r in 0..d {
            for c in 0..d {
                acc += self.data[r * d + c] * other.data[c * d + r];
            }
        }
        Some(acc)
    }

    pub(crate) fn nonzeros(&self) -> usize {
        self.data.iter().filter(|v| **v != ZERO).count()
    }

    pub(crate) fn bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<Complex64>()
    }

    pub(crate) fn depolarize(&mut self, mask: u64, p: f64) {
        let (a, b, s) = (1.0 - 2.0 * p / 3.0, 2.0 * p / 3.0, 1.0 - 4.0 * p / 3.0);
        let n = self.num_qubits;
        let d = self.dim();
        for q in (0..n).filter(|q| mask >> q & 1 == 1) {
            let bit = 1 << (n - 1 - q);
            for r in 0..d {
                for c in 0..d {
                    if (r ^ c) & bit != 0 {
                        self.data[r * d + c] *= s;
                    } else if r & bit == 0 {
                        let (i, j) = (r * d + c, (r | bit) * d + (c | bit));
                        let (x, y) = (self.data[i], self.data[j]);
                        self.data[i] = x * a + y * b;
                        self.data[j] = x * b + y * a;
                    }
                }
            }
        }
    }

    pub(crate) fn apply_superop(&mut self, op: &Superop) {
        let n = self.num_qubits;
        let k = op.k();
        let d = self.dim();
        let kk = 1usize << (2 * k);
        let kd = 1usize << k;
        let shifts: Vec<usize> = op.targets.iter().map(|&t| n - 1 - t).collect();
        let tmask: usize = shifts.iter().map(|s| 1usize << s).sum();
        let spread = |x: usize| -> usize {
            let mut out = 0;
            for (i, s) in shifts.iter().enumerate() {
                out |= ((x >> (k - 1 - i)) & 1) << s;
            }
            out
        };
        let offs: Vec<usize> = (0..kd).map(spread).collect();
        let mut gathered = vec![ZERO; kk];
        for r0 in (0..d).filter(|r| r & tmask == 0) {
            for c0 in (0..d).filter(|c| c & tmask == 0) {
                for g in 0..kk {
                    gathered[g] = self.data[(r0 | offs[g >> k]) * d + (c0 | offs[g & (kd - 1)])];
                }
                for (g, row) in op.rows.iter().enumerate() {
                    let acc: Complex64 = row.iter().map(|&(gi, w)| w * gathered[gi]).sum();
                    self.data[(r0 | offs[g >> k]) * d + (c0 | offs[g & (kd - 1)])] = acc;
                }
            }
        }
    }
}
