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

//! Density matrices with interchangeable sparse and dense storage.

mod dense;
mod quadtree;
mod superop;
mod unitary;

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use dense::DenseMatrix;
use quadtree::QuadTree;
pub use quadtree::TreeStats;
pub(crate) use superop::Superop;
pub use unitary::{gates, Unitary};

pub const MAX_QUBITS: usize = 14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Sparse,
    Dense,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(BackendKind::Sparse),
            "dense" => Ok(BackendKind::Dense),
            other => Err(Error::Config(format!("unknown backend `{other}`"))),
        }
    }
}

/// Storage and numerical settings shared by every matrix of a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub backend: BackendKind,
    /// Side length of a dense quadtree tile; a power of two.
    pub leaf_size: usize,
    pub prune_tol: f64,
    /// Forced outcomes below this probability are rejected as impossible.
    pub probability_floor: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { backend: BackendKind::Sparse, leaf_size: 4, prune_tol: 1e-17, probability_floor: 1e-300 }
    }
}

impl EngineConfig {
    pub fn with_backend(backend: BackendKind) -> Self {
        EngineConfig { backend, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.leaf_size < 2 || !self.leaf_size.is_power_of_two() {
            return Err(Error::Config(format!("leaf size {} is not a power of two >= 2", self.leaf_size)));
        }
        if !(self.prune_tol >= 0.0 && self.prune_tol.is_finite()) {
            return Err(Error::Config(format!("invalid prune tolerance {}", self.prune_tol)));
        }
        if !(self.probability_floor >= 0.0 && self.probability_floor < 1.0) {
            return Err(Error::Config(format!("invalid probability floor {}", self.probability_floor)));
        }
        Ok(())
    }
}

/// A mixture of single-qubit unitaries, `rho -> sum_k w_k U_k rho U_k^dagger`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    terms: Vec<(f64, Unitary)>,
}

impl KrausChannel {
    pub fn new(terms: Vec<(f64, Unitary)>) -> Result<Self> {
        let mut total = 0.0;
        for (w, u) in &terms {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidChannel(format!("weight {w} is negative or not finite")));
            }
            if u.dim() != 2 {
                return Err(Error::InvalidChannel("operators must be single-qubit".into()));
            }
            u.check_unitary()?;
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidChannel(format!("weights sum to {total}")));
        }
        Ok(KrausChannel { terms })
    }

    pub fn identity() -> Self {
        KrausChannel { terms: vec![(1.0, gates::identity())] }
    }

    /// `(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ErrorRate(p));
        }
        Self::new(vec![
            (1.0 - p, gates::identity()),
            (p / 3.0, gates::x()),
            (p / 3.0, gates::y()),
            (p / 3.0, gates::z()),
        ])
    }

    pub fn terms(&self) -> &[(f64, Unitary)] {
        &self.terms
    }

    pub(crate) fn superop(&self, target: usize) -> Superop {
        Superop::mixed_unitary(&[target], &self.terms)
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Sparse(QuadTree),
    Dense(DenseMatrix),
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    num_qubits: usize,
    config: EngineConfig,
    storage: Storage,
}

fn check_qubits(n: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(Error::QubitCount(n))
    }
}

impl DensityMatrix {
    pub fn zeros(num_qubits: usize, config: EngineConfig) -> Result<Self> {
        Self::from_fn(num_qubits, config, |_, _| Complex64::new(0.0, 0.0))
    }

    /// Builds a matrix from its entries; sparse storage prunes small quadrants.
    pub fn from_fn(num_qubits: usize, config: EngineConfig, f: impl Fn(usize, usize) -> Complex64) -> Result<Self> {
        check_qubits(num_qubits)?;
        config.validate()?;
        let storage = match config.backend {
            BackendKind::Sparse => Storage::Sparse(QuadTree::from_fn(num_qubits, config.leaf_size, config.prune_tol, &f)),
            BackendKind::Dense => Storage::Dense(DenseMatrix::from_fn(num_qubits, &f)),
        };
        Ok(DensityMatrix { num_qubits, config, storage })
    }

    /// `|index><index|` on `num_qubits` qubits.
    pub fn basis_index(num_qubits: usize, index: usize, config: EngineConfig) -> Result<Self> {
        check_qubits(num_qubits)?;
        if index >= 1 << num_qubits {
            return Err(Error::BasisLabel { label: format!("{index}"), expected: num_qubits });
        }
        Self::from_entries(num_qubits, config, &[(index, index, Complex64::new(1.0, 0.0))])
    }

    /// A matrix holding `entries` as `(row, col, value)` and zeros elsewhere.
    pub fn from_entries(num_qubits: usize, config: EngineConfig, entries: &[(usize, usize, Complex64)]) -> Result<Self> {
        check_qubits(num_qubits)?;
        config.validate()?;
        let d = 1usize << num_qubits;
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= d || c >= d) {
            return Err(Error::DimensionMismatch { left: r.max(c), right: d });
        }
        let storage = match config.backend {
            BackendKind::Sparse => Storage::Sparse(QuadTree::from_entries(num_qubits, config.leaf_size, config.prune_tol, entries)),
            BackendKind::Dense => Storage::Dense(DenseMatrix::from_entries(num_qubits, entries)),
        };
        Ok(DensityMatrix { num_qubits, config, storage })
    }

    /// `|label><label|` for a bitstring label, qubit 0 first.
    pub fn basis(label: &str, config: EngineConfig) -> Result<Self> {
        let n = label.len();
        check_qubits(n)?;
        let mut index = 0usize;
        for ch in label.chars() {
            index <<= 1;
            match ch {
                '0' => {}
                '1' => index |= 1,
                _ => return Err(Error::BasisLabel { label: label.to_string(), expected: n }),
            }
        }
        Self::basis_index(n, index, config)
    }

    /// `|psi><psi|` for a pure state given by its amplitudes.
    pub fn from_pure(amplitudes: &[Complex64], config: EngineConfig) -> Result<Self> {
        let n = amplitudes.len().trailing_zeros() as usize;
        if !amplitudes.len().is_power_of_two() {
            return Err(Error::DimensionMismatch { left: amplitudes.len(), right: 1 << n });
        }
        check_qubits(n)?;
        let support: Vec<usize> = (0..amplitudes.len()).filter(|&i| amplitudes[i] != Complex64::new(0.0, 0.0)).collect();
        let entries: Vec<_> = support.iter().flat_map(|&r| support.iter().map(move |&c| (r, c, amplitudes[r] * amplitudes[c].conj()))).collect();
        Self::from_entries(n, config, &entries)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn backend(&self) -> BackendKind {
        match self.storage {
            Storage::Sparse(_) => BackendKind::Sparse,
            Storage::Dense(_) => BackendKind::Dense,
        }
    }

    fn check_target(&self, q: usize) -> Result<()> {
        if q < self.num_qubits {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange { qubit: q, num_qubits: self.num_qubits })
        }
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for &t in targets {
            self.check_target(t)?;
        }
        for (i, a) in targets.iter().enumerate() {
            if targets[..i].contains(a) {
                return Err(Error::DuplicateTargets(targets.to_vec()));
            }
        }
        Ok(())
    }

    pub(crate) fn apply_superop(&mut self, op: &Superop) {
        match &mut self.storage {
            Storage::Sparse(t) => t.apply_superop(op),
            Storage::Dense(d) => d.apply_superop(op),
        }
    }

    /// `rho -> U rho U^dagger` with `u` acting on `targets` (first target is
    /// the most significant factor of `u`).
    pub fn apply_unitary(&mut self, targets: &[usize], u: &Unitary) -> Result<()> {
        self.check_targets(targets)?;
        if u.num_qubits() != targets.len() {
            return Err(Error::GateArity { dim: u.dim(), targets: targets.len() });
        }
        u.check_unitary()?;
        self.apply_superop(&Superop::conjugation(targets, u));
        Ok(())
    }

    /// Depolarizing noise `(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)`
    /// applied independently to each listed qubit.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ErrorRate(p));
        }
        let mut mask = 0u64;
        for &q in qubits {
            self.check_target(q)?;
            mask |= 1 << q;
        }
        if p == 0.0 {
            return Ok(());
        }
        match &mut self.storage {
            Storage::Sparse(t) => t.depolarize(mask, p),
            Storage::Dense(d) => d.depolarize(mask, p),
        }
        Ok(())
    }

    pub fn apply_channel(&mut self, target: usize, ch: &KrausChannel) -> Result<()> {
        self.check_target(target)?;
        self.apply_superop(&ch.superop(target));
        Ok(())
    }

    /// Traces out `target` and replaces it with `|0><0|`.
    pub fn reset_qubit(&mut self, target: usize) -> Result<()> {
        self.check_target(target)?;
        self.apply_superop(&Superop::reset(target));
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        self.diag_sum(&|_| true)
    }

    fn diag_sum(&self, pred: &dyn Fn(usize) -> bool) -> f64 {
        match &self.storage {
            Storage::Sparse(t) => t.diag_sum(pred),
            Storage::Dense(d) => d.diag_sum(pred),
        }
    }

    fn bit_mask(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }

    /// Probability of reading `outcome` on `target`, relative to the trace.
    pub fn outcome_probability(&self, target: usize, outcome: bool) -> Result<f64> {
        self.check_target(target)?;
        let m = self.bit_mask(target);
        self.relative_probability(&|r| (r & m != 0) == outcome)
    }

    /// Probability that the Z-parity of `targets` equals `outcome`.
    pub fn parity_probability(&self, targets: &[usize], outcome: bool) -> Result<f64> {
        self.check_targets(targets)?;
        let m = targets.iter().map(|&q| self.bit_mask(q)).fold(0, |a, b| a | b);
        self.relative_probability(&|r| ((r & m).count_ones() % 2 == 1) == outcome)
    }

    fn relative_probability(&self, pred: &dyn Fn(usize) -> bool) -> Result<f64> {
        let total = self.trace();
        if !(total > 0.0) {
            return Err(Error::ImpossibleBranch { outcome: 0, probability: total, floor: self.config.probability_floor });
        }
        Ok((self.diag_sum(pred) / total).clamp(0.0, 1.0))
    }

    fn project(&mut self, pred: &dyn Fn(usize) -> bool, outcome: bool) -> Result<f64> {
        let total = self.trace();
        let kept = self.diag_sum(pred);
        let prob = if total > 0.0 { kept / total } else { 0.0 };
        if !(prob >= self.config.probability_floor) || prob <= 0.0 {
            return Err(Error::ImpossibleBranch {
                outcome: outcome as u8,
                probability: prob,
                floor: self.config.probability_floor,
            });
        }
        let keep = |r: usize, c: usize| pred(r) && pred(c);
        match &mut self.storage {
            Storage::Sparse(t) => t.retain(&keep),
            Storage::Dense(d) => d.retain(&keep),
        }
        // Pruning inside `retain` may drop a few tiny diagonal entries, so the
        // state is renormalised by its actual trace rather than by `kept`.
        let norm = self.trace();
        match &mut self.storage {
            Storage::Sparse(t) => t.scale(1.0 / norm),
            Storage::Dense(d) => d.scale(1.0 / norm),
        }
        Ok(prob.min(1.0))
    }

    /// Projects `target` onto `|outcome>`, renormalises, and returns the
    /// probability of that outcome.
    pub fn measure_forced(&mut self, target: usize, outcome: bool) -> Result<f64> {
        self.check_target(target)?;
        let m = self.bit_mask(target);
        self.project(&|r| (r & m != 0) == outcome, outcome)
    }

    /// Projective measurement of the Z-parity of `targets`.
    pub fn measure_parity_forced(&mut self, targets: &[usize], outcome: bool) -> Result<f64> {
        self.check_targets(targets)?;
        let m = targets.iter().map(|&q| self.bit_mask(q)).fold(0, |a, b| a | b);
        self.project(&|r| ((r & m).count_ones() % 2 == 1) == outcome, outcome)
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        match &self.storage {
            Storage::Sparse(t) => t.get(r, c),
            Storage::Dense(d) => d.get(r, c),
        }
    }

    /// Calls `f(row, col, value)` for every stored nonzero entry.
    pub fn for_each_nonzero(&self, mut f: impl FnMut(usize, usize, Complex64)) {
        match &self.storage {
            Storage::Sparse(t) => t.for_each_nonzero(&mut f),
            Storage::Dense(d) => d.for_each_nonzero(&mut f),
        }
    }

    pub fn nonzero_count(&self) -> usize {
        match &self.storage {
            Storage::Sparse(t) => t.stats().nonzeros,
            Storage::Dense(d) => d.nonzeros(),
        }
    }

    /// Node counts of the sparse tree; `None` for dense storage.
    pub fn tree_stats(&self) -> Option<TreeStats> {
        match &self.storage {
            Storage::Sparse(t) => Some(t.stats()),
            Storage::Dense(_) => None,
        }
    }

    /// True if the sparse tree has no root (all entries pruned).
    pub fn is_sparse_empty(&self) -> bool {
        matches!(&self.storage, Storage::Sparse(t) if t.is_zero())
    }

    pub fn approx_bytes(&self) -> usize {
        match &self.storage {
            Storage::Sparse(t) => t.approx_bytes(),
            Storage::Dense(d) => d.bytes(),
        }
    }

    pub fn check_structure(&self) -> Result<(), String> {
        match &self.storage {
            Storage::Sparse(t) => t.check_structure(),
            Storage::Dense(_) => Ok(()),
        }
    }

    pub fn leaf_side(&self) -> Option<usize> {
        match &self.storage {
            Storage::Sparse(t) => Some(t.leaf_side()),
            Storage::Dense(_) => None,
        }
    }

    /// `tr(self * other)`, real part.
    pub fn overlap(&self, other: &DensityMatrix) -> Result<f64> {
        Ok(self.overlap_complex(other)?.re)
    }

    pub fn overlap_complex(&self, other: &DensityMatrix) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        let fast = match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => a.trace_product(b),
            (Storage::Dense(a), Storage::Dense(b)) => a.trace_product(b),
            _ => None,
        };
        if let Some(v) = fast {
            return Ok(v);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        self.for_each_nonzero(|r, c, v| acc += v * other.get(c, r));
        Ok(acc)
    }

    /// Largest `|rho[r][c] - conj(rho[c][r])|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        self.for_each_nonzero(|r, c, v| worst = worst.max((v - self.get(c, r).conj()).norm()));
        worst
    }

    /// Largest element-wise difference to `other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        let mut worst: f64 = 0.0;
        self.for_each_nonzero(|r, c, v| worst = worst.max((v - other.get(r, c)).norm()));
        other.for_each_nonzero(|r, c, v| worst = worst.max((v - self.get(r, c)).norm()));
        Ok(worst)
    }

    fn convert(&self, backend: BackendKind) -> DensityMatrix {
        if self.backend() == backend {
            return self.clone();
        }
        let config = EngineConfig { backend, ..self.config };
        let d = self.dim();
        let mut flat = vec![Complex64::new(0.0, 0.0); d * d];
        self.for_each_nonzero(|r, c, v| flat[r * d + c] = v);
        Self::from_fn(self.num_qubits, config, |r, c| flat[r * d + c]).expect("validated configuration")
    }

    pub fn to_dense(&self) -> DensityMatrix {
        self.convert(BackendKind::Dense)
    }

    pub fn to_sparse(&self) -> DensityMatrix {
        self.convert(BackendKind::Sparse)
    }

    /// Partial trace over every qubit at index `keep` and above.
    pub fn reduce_to_leading(&self, keep: usize) -> Result<DensityMatrix> {
        check_qubits(keep)?;
        if keep > self.num_qubits {
            return Err(Error::DimensionMismatch { left: self.num_qubits, right: keep });
        }
        let drop = self.num_qubits - keep;
        let low = (1usize << drop) - 1;
        let d = 1usize << keep;
        let mut flat = vec![Complex64::new(0.0, 0.0); d * d];
        self.for_each_nonzero(|r, c, v| {
            if r & low == c & low {
                flat[(r >> drop) * d + (c >> drop)] += v;
            }
        });
        Self::from_fn(keep, self.config, |r, c| flat[r * d + c])
    }

    /// One line per nonzero entry: `row col re im`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut entries = Vec::new();
        self.for_each_nonzero(|r, c, v| entries.push((r, c, v)));
        entries.sort_by_key(|e| (e.0, e.1));
        for (r, c, v) in entries {
            let _ = writeln!(out, "{r} {c} {:.16e} {:.16e}", v.re, v.im);
        }
        out
    }

    pub fn write_dump(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.dump()).map_err(|e| Error::io(path, e))
    }
}
