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

//! Small dense unitaries (2x2 and 4x4) and the standard gate set.

use num_complex::Complex64;

use crate::error::{Error, Result};

const UNITARITY_TOL: f64 = 1e-10;

/// A row-major square matrix acting on one or two qubits.
///
/// For two-qubit matrices the first target is the more significant bit of the
/// row/column index, i.e. `(CNOT)[2*c + t][2*c' + t']` for targets `[c, t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    dim: usize,
    data: Vec<Complex64>,
}

impl Unitary {
    /// Builds a matrix from row-major entries. Checks shape only; use
    /// [`Unitary::check_unitary`] for the unitarity test.
    pub fn from_rows(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if !(dim == 2 || dim == 4) || data.len() != dim * dim {
            return Err(Error::GateArity {
                dim,
                targets: (dim as f64).log2() as usize,
            });
        }
        Ok(Unitary { dim, data })
    }

    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::from_rows(dim, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_qubits(&self) -> usize {
        if self.dim == 2 {
            1
        } else {
            2
        }
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Unitary) -> Unitary {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                data[r * d + c] = (0..d).map(|k| self.at(r, k) * rhs.at(k, c)).sum();
            }
        }
        Unitary { dim: d, data }
    }

    /// Kronecker product of two single-qubit matrices; `self` acts on the first target.
    pub fn kron(&self, rhs: &Unitary) -> Unitary {
        assert!(self.dim == 2 && rhs.dim == 2);
        let mut data = vec![Complex64::new(0.0, 0.0); 16];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        data[(2 * a + c) * 4 + (2 * b + d)] = self.at(a, b) * rhs.at(c, d);
                    }
                }
            }
        }
        Unitary { dim: 4, data }
    }

    pub fn adjoint(&self) -> Unitary {
        let d = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.at(r, c).conj();
            }
        }
        Unitary { dim: d, data }
    }

    /// Largest entry-wise deviation of `U U^dagger` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.mul(&self.adjoint());
        let d = self.dim;
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let want = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((prod.at(r, c) - want).norm());
            }
        }
        worst
    }

    pub fn check_unitary(&self) -> Result<()> {
        let dev = self.unitarity_deviation();
        if dev > UNITARITY_TOL || !dev.is_finite() {
            return Err(Error::NotUnitary(dev));
        }
        Ok(())
    }
}

/// Standard gates.
pub mod gates {
    use super::Unitary;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn identity() -> Unitary {
        Unitary::from_real(2, &[1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    pub fn x() -> Unitary {
        Unitary::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn y() -> Unitary {
        let i = Complex64::new(0.0, 1.0);
        let o = Complex64::new(0.0, 0.0);
        Unitary::from_rows(2, vec![o, -i, i, o]).unwrap()
    }

    pub fn z() -> Unitary {
        Unitary::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    /// The product `X Z`, which equals `-i Y`.
    pub fn xz() -> Unitary {
        x().mul(&z())
    }

    pub fn h() -> Unitary {
        let s = FRAC_1_SQRT_2;
        Unitary::from_real(2, &[s, s, s, -s]).unwrap()
    }

    pub fn s() -> Unitary {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        Unitary::from_rows(2, vec![l, o, o, Complex64::new(0.0, 1.0)]).unwrap()
    }

    /// Controlled-NOT with the first target as control.
    pub fn cnot() -> Unitary {
        #[rustfmt::skip]
        let m = [
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ];
        Unitary::from_real(4, &m).unwrap()
    }

    /// `CNOT (H ⊗ I)`: a Hadamard on the control followed by the CNOT, as one gate.
    pub fn h_then_cnot() -> Unitary {
        cnot().mul(&h().kron(&identity()))
    }
}
