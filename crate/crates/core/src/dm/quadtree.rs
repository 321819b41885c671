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

//! Sparse quadtree storage for `2^n x 2^n` complex matrices.
//!
//! The matrix is split recursively into quadrants. Level `l` of the tree splits
//! on the row and column bit of qubit `l` (qubit 0 is the most significant bit),
//! so a child index is `(row_bit << 1) | col_bit`: top-left, top-right,
//! bottom-left, bottom-right. Below the last tree level a dense `L x L` tile
//! covers the remaining `log2 L` qubits. A quadrant whose entries all have
//! magnitude below the prune tolerance is stored as [`QuadNode::Empty`].
//!
//! Gates and channels are applied through [`QuadTree::apply_superop`], which
//! walks "groups" of aligned subtrees that differ only in the target bits and
//! updates them in place.

use std::cell::RefCell;

use num_complex::Complex64;

use super::superop::Superop;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, Default)]
pub(crate) enum QuadNode {
    #[default]
    Empty,
    Internal(Box<[QuadNode; 4]>),
    Leaf(Box<[Complex64]>),
}

impl QuadNode {
    fn is_empty(&self) -> bool {
        matches!(self, QuadNode::Empty)
    }

    fn empty_internal() -> QuadNode {
        QuadNode::Internal(Box::default())
    }

    /// Collapses an internal node whose children are all empty.
    fn collapse(&mut self) {
        if let QuadNode::Internal(ch) = self {
            if ch.iter().all(QuadNode::is_empty) {
                *self = QuadNode::Empty;
            }
        }
    }
}

#[inline]
fn transpose_quadrant(q: usize) -> usize {
    ((q & 1) << 1) | (q >> 1)
}

#[derive(Clone, Debug)]
pub(crate) struct QuadTree {
    num_qubits: usize,
    tile_bits: usize,
    levels: usize,
    prune_tol: f64,
    root: QuadNode,
}

/// Node counts, for diagnostics and memory accounting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TreeStats {
    pub internal_nodes: usize,
    pub leaves: usize,
    pub nonzeros: usize,
}

impl QuadTree {
    pub(crate) fn zeros(num_qubits: usize, leaf_size: usize, prune_tol: f64) -> QuadTree {
        let tile_bits = (leaf_size.trailing_zeros() as usize).min(num_qubits);
        QuadTree {
            num_qubits,
            tile_bits,
            levels: num_qubits - tile_bits,
            prune_tol,
            root: QuadNode::Empty,
        }
    }

    #[inline]
    fn side(&self) -> usize {
        1 << self.tile_bits
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.root.is_empty()
    }

    pub(crate) fn leaf_side(&self) -> usize {
        self.side()
    }

    /// Builds a tree from an entry function, pruning small quadrants.
    pub(crate) fn from_fn(
        num_qubits: usize,
        leaf_size: usize,
        prune_tol: f64,
        f: &dyn Fn(usize, usize) -> Complex64,
    ) -> QuadTree {
        let mut t = Self::zeros(num_qubits, leaf_size, prune_tol);
        t.root = t.build(0, 0, 0, f);
        t
    }

    /// Builds a tree holding only the listed entries; later duplicates win.
    pub(crate) fn from_entries(num_qubits: usize, leaf_size: usize, prune_tol: f64, entries: &[(usize, usize, Complex64)]) -> QuadTree {
        let mut t = Self::zeros(num_qubits, leaf_size, prune_tol);
        t.root = t.build_sparse(0, entries.to_vec());
        t
    }

    fn build_sparse(&self, level: usize, entries: Vec<(usize, usize, Complex64)>) -> QuadNode {
        if entries.is_empty() {
            return QuadNode::Empty;
        }
        let l = self.side();
        if level == self.levels {
            let mut tile = vec![ZERO; l * l];
            for (r, c, v) in entries {
                tile[(r & (l - 1)) * l + (c & (l - 1))] = v;
            }
            return self.leaf_or_empty(tile.into_boxed_slice());
        }
        let shift = self.num_qubits - 1 - level;
        let mut parts: [Vec<(usize, usize, Complex64)>; 4] = Default::default();
        for e in entries {
            parts[(((e.0 >> shift) & 1) << 1) | ((e.1 >> shift) & 1)].push(e);
        }
        let mut node = QuadNode::empty_internal();
        if let QuadNode::Internal(ch) = &mut node {
            for (child, part) in ch.iter_mut().zip(parts) {
                *child = self.build_sparse(level + 1, part);
            }
        }
        node.collapse();
        node
    }

    fn build(&self, level: usize, r0: usize, c0: usize, f: &dyn Fn(usize, usize) -> Complex64) -> QuadNode {
        let l = self.side();
        if level == self.levels {
            let mut tile = vec![ZERO; l * l];
            for lr in 0..l {
                for lc in 0..l {
                    tile[lr * l + lc] = f(r0 | lr, c0 | lc);
                }
            }
            return self.leaf_or_empty(tile.into_boxed_slice());
        }
        let shift = self.num_qubits - 1 - level;
        let mut node = QuadNode::empty_internal();
        if let QuadNode::Internal(ch) = &mut node {
            for (q, child) in ch.iter_mut().enumerate() {
                let rb = q >> 1;
                let cb = q & 1;
                *child = self.build(level + 1, r0 | (rb << shift), c0 | (cb << shift), f);
            }
        }
        node.collapse();
        node
    }

    fn prunable(&self, tile: &[Complex64]) -> bool {
        let tol2 = self.prune_tol * self.prune_tol;
        tile.iter().all(|v| v.norm_sqr() < tol2)
    }

    /// Multiplies a subtree by `f`, pruning tiles that fall below tolerance.
    fn scale_node(&self, node: &mut QuadNode, f: f64) {
        match node {
            QuadNode::Empty => {}
            QuadNode::Leaf(tile) => {
                tile.iter_mut().for_each(|v| *v *= f);
                if self.prunable(tile) {
                    *node = QuadNode::Empty;
                }
            }
            QuadNode::Internal(ch) => {
                ch.iter_mut().for_each(|c| self.scale_node(c, f));
                node.collapse();
            }
        }
    }

    fn leaf_or_empty(&self, tile: Box<[Complex64]>) -> QuadNode {
        let tol2 = self.prune_tol * self.prune_tol;
        if tile.iter().all(|v| v.norm_sqr() < tol2) {
            QuadNode::Empty
        } else {
            QuadNode::Leaf(tile)
        }
    }

    pub(crate) fn get(&self, r: usize, c: usize) -> Complex64 {
        let mut node = &self.root;
        let mut level = 0;
        loop {
            match node {
                QuadNode::Empty => return ZERO,
                QuadNode::Leaf(tile) => {
                    let mask = self.side() - 1;
                    return tile[(r & mask) * self.side() + (c & mask)];
                }
                QuadNode::Internal(ch) => {
                    let shift = self.num_qubits - 1 - level;
                    let q = (((r >> shift) & 1) << 1) | ((c >> shift) & 1);
                    node = &ch[q];
                    level += 1;
                }
            }
        }
    }

    pub(crate) fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, usize, Complex64)) {
        self.visit(&self.root, 0, 0, 0, f);
    }

    fn visit(&self, node: &QuadNode, level: usize, r0: usize, c0: usize, f: &mut dyn FnMut(usize, usize, Complex64)) {
        match node {
            QuadNode::Empty => {}
            QuadNode::Leaf(tile) => {
                let l = self.side();
                for (i, v) in tile.iter().enumerate() {
                    if *v != ZERO {
                        f(r0 | (i / l), c0 | (i % l), *v);
                    }
                }
            }
            QuadNode::Internal(ch) => {
                let shift = self.num_qubits - 1 - level;
                for (q, child) in ch.iter().enumerate() {
                    self.visit(child, level + 1, r0 | ((q >> 1) << shift), c0 | ((q & 1) << shift), f);
                }
            }
        }
    }

    /// Sum of the real parts of diagonal entries whose row satisfies `pred`.
    pub(crate) fn diag_sum(&self, pred: &dyn Fn(usize) -> bool) -> f64 {
        self.diag_rec(&self.root, 0, 0, pred)
    }

    fn diag_rec(&self, node: &QuadNode, level: usize, r0: usize, pred: &dyn Fn(usize) -> bool) -> f64 {
        match node {
            QuadNode::Empty => 0.0,
            QuadNode::Leaf(tile) => {
                let l = self.side();
                (0..l).filter(|&i| pred(r0 | i)).map(|i| tile[i * l + i].re).sum()
            }
            QuadNode::Internal(ch) => {
                let shift = self.num_qubits - 1 - level;
                self.diag_rec(&ch[0], level + 1, r0, pred) + self.diag_rec(&ch[3], level + 1, r0 | (1 << shift), pred)
            }
        }
    }

    /// Zeroes every entry `(r, c)` for which `keep` is false.
    pub(crate) fn retain(&mut self, keep: &dyn Fn(usize, usize) -> bool) {
        let mut root = std::mem::take(&mut self.root);
        self.retain_rec(&mut root, 0, 0, 0, keep);
        self.root = root;
    }

    fn retain_rec(&self, node: &mut QuadNode, level: usize, r0: usize, c0: usize, keep: &dyn Fn(usize, usize) -> bool) {
        match node {
            QuadNode::Empty => {}
            QuadNode::Leaf(tile) => {
                let l = self.side();
                for (i, v) in tile.iter_mut().enumerate() {
                    if !keep(r0 | (i / l), c0 | (i % l)) {
                        *v = ZERO;
                    }
                }
                let tol2 = self.prune_tol * self.prune_tol;
                if tile.iter().all(|v| v.norm_sqr() < tol2) {
                    *node = QuadNode::Empty;
                }
            }
            QuadNode::Internal(ch) => {
                let shift = self.num_qubits - 1 - level;
                for (q, child) in ch.iter_mut().enumerate() {
                    self.retain_rec(child, level + 1, r0 | ((q >> 1) << shift), c0 | ((q & 1) << shift), keep);
                }
                node.collapse();
            }
        }
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        fn rec(node: &mut QuadNode, factor: f64) {
            match node {
                QuadNode::Empty => {}
                QuadNode::Leaf(tile) => tile.iter_mut().for_each(|v| *v *= factor),
                QuadNode::Internal(ch) => ch.iter_mut().for_each(|c| rec(c, factor)),
            }
        }
        rec(&mut self.root, factor);
    }

    /// `tr(self * other)` when both trees share the same layout.
    pub(crate) fn trace_product(&self, other: &QuadTree) -> Option<Complex64> {
        if self.tile_bits != other.tile_bits || self.num_qubits != other.num_qubits {
            return None;
        }
        let l = self.side();
        fn rec(a: &QuadNode, b: &QuadNode, l: usize) -> Complex64 {
            match (a, b) {
                (QuadNode::Empty, _) | (_, QuadNode::Empty) => ZERO,
                (QuadNode::Internal(x), QuadNode::Internal(y)) => {
                    (0..4).map(|q| rec(&x[q], &y[transpose_quadrant(q)], l)).sum()
                }
                (QuadNode::Leaf(x), QuadNode::Leaf(y)) => {
                    let mut acc = ZERO;
                    for r in 0..l {
                        for c in 0..l {
                            acc += x[r * l + c] * y[c * l + r];
                        }
                    }
                    acc
                }
                _ => unreachable!("trees with equal layout have leaves at equal depth"),
            }
        }
        Some(rec(&self.root, &other.root, l))
    }

    pub(crate) fn stats(&self) -> TreeStats {
        fn rec(node: &QuadNode, s: &mut TreeStats) {
            match node {
                QuadNode::Empty => {}
                QuadNode::Leaf(tile) => {
                    s.leaves += 1;
                    s.nonzeros += tile.iter().filter(|v| **v != ZERO).count();
                }
                QuadNode::Internal(ch) => {
                    s.internal_nodes += 1;
                    ch.iter().for_each(|c| rec(c, s));
                }
            }
        }
        let mut s = TreeStats::default();
        rec(&self.root, &mut s);
        s
    }

    pub(crate) fn approx_bytes(&self) -> usize {
        let s = self.stats();
        let l = self.side();
        s.internal_nodes * (4 * std::mem::size_of::<QuadNode>() + 16) + s.leaves * (l * l * 16 + 16)
    }

    /// Checks the structural invariants: every internal node has a present
    /// child and every leaf sits at the configured depth with a full tile.
    pub(crate) fn check_structure(&self) -> Result<(), String> {
        fn rec(node: &QuadNode, level: usize, levels: usize, tile_len: usize) -> Result<(), String> {
            match node {
                QuadNode::Empty => Ok(()),
                QuadNode::Leaf(tile) => {
                    if level != levels {
                        return Err(format!("leaf at depth {level}, expected {levels}"));
                    }
                    if tile.len() != tile_len {
                        return Err(format!("tile of length {}, expected {tile_len}", tile.len()));
                    }
                    Ok(())
                }
                QuadNode::Internal(ch) => {
                    if level >= levels {
                        return Err(format!("internal node at depth {level} below the tree levels"));
                    }
                    if ch.iter().all(QuadNode::is_empty) {
                        return Err(format!("internal node at depth {level} without children"));
                    }
                    ch.iter().try_for_each(|c| rec(c, level + 1, levels, tile_len))
                }
            }
        }
        let l = self.side();
        rec(&self.root, 0, self.levels, l * l)
    }

    /// Independent depolarizing channels of strength `p` on every qubit whose
    /// bit is set in `mask` (bit `q` for qubit `q`).
    pub(crate) fn depolarize(&mut self, mask: u64, p: f64) {
        let mut root = std::mem::take(&mut self.root);
        let k = Depol { a: 1.0 - 2.0 * p / 3.0, b: 2.0 * p / 3.0, s: 1.0 - 4.0 * p / 3.0, mask, tree: self };
        k.rec(&mut root, 0, 1.0);
        self.root = root;
    }

    pub(crate) fn apply_superop(&mut self, op: &Superop) {
        let plan = GroupPlan::new(op, self);
        let mut root = std::mem::take(&mut self.root);
        {
            let mut members: [Option<&mut QuadNode>; 16] = Default::default();
            members[0] = Some(&mut root);
            plan.recurse(0, 0, &mut members[..1]);
        }
        self.root = root;
    }
}

struct Depol<'a> {
    a: f64,
    b: f64,
    s: f64,
    mask: u64,
    tree: &'a QuadTree,
}

impl Depol<'_> {
    fn acts_on(&self, q: usize) -> bool {
        self.mask >> q & 1 == 1
    }

    fn rec(&self, node: &mut QuadNode, level: usize, scale: f64) {
        match node {
            QuadNode::Empty => {}
            QuadNode::Leaf(tile) => {
                self.tile(tile, scale);
                if self.tree.prunable(tile) {
                    *node = QuadNode::Empty;
                }
            }
            QuadNode::Internal(ch) => {
                if self.acts_on(level) {
                    self.rec(&mut ch[1], level + 1, scale * self.s);
                    self.rec(&mut ch[2], level + 1, scale * self.s);
                    self.rec(&mut ch[0], level + 1, scale);
                    self.rec(&mut ch[3], level + 1, scale);
                    let [c0, _, _, c3] = &mut **ch;
                    self.mix(c0, c3);
                } else {
                    ch.iter_mut().for_each(|c| self.rec(c, level + 1, scale));
                }
                node.collapse();
            }
        }
    }

    fn tile(&self, tile: &mut [Complex64], scale: f64) {
        let l = self.tree.side();
        let tb = self.tree.tile_bits;
        for t in 0..tb {
            if !self.acts_on(self.tree.levels + t) {
                continue;
            }
            let bit = 1 << (tb - 1 - t);
            for lr in 0..l {
                for lc in 0..l {
                    if (lr ^ lc) & bit != 0 {
                        tile[lr * l + lc] *= self.s;
                    } else if lr & bit == 0 {
                        let i = lr * l + lc;
                        let j = (lr | bit) * l + (lc | bit);
                        let (x, y) = (tile[i], tile[j]);
                        tile[i] = x * self.a + y * self.b;
                        tile[j] = x * self.b + y * self.a;
                    }
                }
            }
        }
        if scale != 1.0 {
            tile.iter_mut().for_each(|v| *v *= scale);
        }
    }

    /// `(x, y) -> (a x + b y, b x + a y)` over two aligned subtrees.
    fn mix(&self, x: &mut QuadNode, y: &mut QuadNode) {
        match (&mut *x, &mut *y) {
            (QuadNode::Empty, QuadNode::Empty) => {}
            (QuadNode::Empty, _) => {
                *x = y.clone();
                self.tree.scale_node(x, self.b);
                self.tree.scale_node(y, self.a);
            }
            (_, QuadNode::Empty) => {
                *y = x.clone();
                self.tree.scale_node(y, self.b);
                self.tree.scale_node(x, self.a);
            }
            (QuadNode::Leaf(tx), QuadNode::Leaf(ty)) => {
                for (u, v) in tx.iter_mut().zip(ty.iter_mut()) {
                    let (p, q) = (*u, *v);
                    *u = p * self.a + q * self.b;
                    *v = p * self.b + q * self.a;
                }
                if self.tree.prunable(tx) {
                    *x = QuadNode::Empty;
                }
                if self.tree.prunable(ty) {
                    *y = QuadNode::Empty;
                }
            }
            (QuadNode::Internal(cx), QuadNode::Internal(cy)) => {
                for (u, v) in cx.iter_mut().zip(cy.iter_mut()) {
                    self.mix(u, v);
                }
                x.collapse();
                y.collapse();
            }
            _ => unreachable!("aligned subtrees have equal depth"),
        }
    }
}

/// Precomputed bookkeeping for one superoperator application.
///
/// While descending, the targets that sit on tree levels are "assigned" one by
/// one: before target `j` is reached a group holds `4^j` aligned subtrees, one
/// per combination of row/column bits of the already-assigned targets. Targets
/// inside the tile are handled in [`GroupPlan::leaf_apply`].
struct GroupPlan<'a> {
    op: &'a Superop,
    k: usize,
    levels: usize,
    tree_targets: usize,
    side: usize,
    prune_tol: f64,
    /// `reach[j][m_out]`: bitmask of members at assignment depth `j` that feed `m_out`.
    reach: Vec<Vec<u16>>,
    /// For each packed index `g`: (member at the leaf depth, flat in-tile offset).
    gmap: Vec<(usize, usize)>,
    /// Flat tile positions whose in-tile target bits are all zero.
    bases: Vec<usize>,
    /// `perm[g_out] = g_in` when the map only moves entries and every target
    /// is a tree level; such maps are applied by moving subtrees.
    permutation: Option<Vec<usize>>,
    scratch: RefCell<Vec<Complex64>>,
}

impl<'a> GroupPlan<'a> {
    fn new(op: &'a Superop, tree: &QuadTree) -> Self {
        let k = op.k();
        let levels = tree.levels;
        let tree_targets = op.targets.iter().filter(|&&t| t < levels).count();
        let kk = 1usize << (2 * k);
        let member_at = |g: usize, j: usize| -> usize {
            let r = g >> k;
            let c = g & ((1 << k) - 1);
            ((r >> (k - j)) << j) | (c >> (k - j))
        };
        let mut reach = Vec::with_capacity(tree_targets + 1);
        for j in 0..=tree_targets {
            let mut masks = vec![0u16; 1 << (2 * j)];
            for (g_out, row) in op.rows.iter().enumerate() {
                for &(g_in, _) in row {
                    masks[member_at(g_out, j)] |= 1 << member_at(g_in, j);
                }
            }
            reach.push(masks);
        }
        let side = tree.side();
        let n = tree.num_qubits;
        let tile_pos = |t: usize| n - 1 - t;
        let mut in_mask = 0usize;
        for &t in &op.targets[tree_targets..] {
            in_mask |= 1 << tile_pos(t);
        }
        let gmap = (0..kk)
            .map(|g| {
                let r = g >> k;
                let c = g & ((1 << k) - 1);
                let mut roff = 0;
                let mut coff = 0;
                for i in tree_targets..k {
                    let pos = tile_pos(op.targets[i]);
                    roff |= ((r >> (k - 1 - i)) & 1) << pos;
                    coff |= ((c >> (k - 1 - i)) & 1) << pos;
                }
                (member_at(g, tree_targets), roff * side + coff)
            })
            .collect();
        let mut bases = Vec::new();
        for lr in 0..side {
            for lc in 0..side {
                if lr & in_mask == 0 && lc & in_mask == 0 {
                    bases.push(lr * side + lc);
                }
            }
        }
        let one = Complex64::new(1.0, 0.0);
        let permutation = (tree_targets == k && op.rows.iter().all(|r| r.len() == 1 && r[0].1 == one))
            .then(|| op.rows.iter().map(|r| r[0].0).collect::<Vec<_>>())
            .filter(|perm| {
                let mut seen = vec![false; kk];
                perm.iter().all(|&g| !std::mem::replace(&mut seen[g], true))
            });
        GroupPlan {
            op,
            permutation,
            k,
            levels,
            tree_targets,
            side,
            prune_tol: tree.prune_tol,
            reach,
            gmap,
            bases,
            scratch: RefCell::new(Vec::new()),
        }
    }

    fn needed(&self, j: usize, present: u16) -> u16 {
        let mut needed = present;
        for (m, &mask) in self.reach[j].iter().enumerate() {
            if mask & present != 0 {
                needed |= 1 << m;
            }
        }
        needed
    }

    fn recurse(&self, level: usize, j: usize, members: &mut [Option<&mut QuadNode>]) {
        let mut present = 0u16;
        for (m, slot) in members.iter().enumerate() {
            if let Some(node) = slot {
                if !node.is_empty() {
                    present |= 1 << m;
                }
            }
        }
        if present == 0 {
            return;
        }
        if let (Some(perm), true) = (&self.permutation, j == self.k) {
            let mut taken: [QuadNode; 16] = Default::default();
            for (m, slot) in members.iter_mut().enumerate() {
                if let Some(node) = slot {
                    taken[m] = std::mem::take(*node);
                }
            }
            for (m, slot) in members.iter_mut().enumerate() {
                if let Some(node) = slot {
                    **node = std::mem::take(&mut taken[perm[m]]);
                }
            }
            return;
        }
        let needed = self.needed(j, present);
        let at_leaf = level == self.levels;
        for (m, slot) in members.iter_mut().enumerate() {
            if needed & (1 << m) == 0 {
                continue;
            }
            let node = slot.as_deref_mut().expect("needed member has a slot");
            if node.is_empty() {
                *node = if at_leaf {
                    QuadNode::Leaf(vec![ZERO; self.side * self.side].into_boxed_slice())
                } else {
                    QuadNode::empty_internal()
                };
            }
        }

        if at_leaf {
            self.leaf_apply(members, needed);
            return;
        }

        let len = members.len();
        if j < self.tree_targets && self.op.targets[j] == level {
            let mut next: [Option<&mut QuadNode>; 16] = Default::default();
            for (m, slot) in members.iter_mut().enumerate() {
                if needed & (1 << m) == 0 {
                    continue;
                }
                if let Some(QuadNode::Internal(ch)) = slot.as_deref_mut() {
                    let (r, c) = (m >> j, m & ((1 << j) - 1));
                    for (q, child) in ch.iter_mut().enumerate() {
                        let r2 = (r << 1) | (q >> 1);
                        let c2 = (c << 1) | (q & 1);
                        next[(r2 << (j + 1)) | c2] = Some(child);
                    }
                }
            }
            self.recurse(level + 1, j + 1, &mut next[..len * 4]);
        } else {
            for q in 0..4 {
                let mut sub: [Option<&mut QuadNode>; 16] = Default::default();
                for (m, slot) in members.iter_mut().enumerate() {
                    if needed & (1 << m) == 0 {
                        continue;
                    }
                    if let Some(QuadNode::Internal(ch)) = slot.as_deref_mut() {
                        sub[m] = Some(&mut ch[q]);
                    }
                }
                self.recurse(level + 1, j, &mut sub[..len]);
            }
        }
        for (m, slot) in members.iter_mut().enumerate() {
            if needed & (1 << m) != 0 {
                if let Some(node) = slot.as_deref_mut() {
                    node.collapse();
                }
            }
        }
    }

    fn leaf_apply(&self, members: &mut [Option<&mut QuadNode>], needed: u16) {
        let tl = self.side * self.side;
        let mut scratch = self.scratch.borrow_mut();
        scratch.clear();
        scratch.resize(members.len() * tl, ZERO);
        let mut input_present = 0u16;
        for (m, slot) in members.iter().enumerate() {
            if let Some(QuadNode::Leaf(tile)) = slot.as_deref() {
                if needed & (1 << m) != 0 {
                    scratch[m * tl..(m + 1) * tl].copy_from_slice(tile);
                    if tile.iter().any(|v| *v != ZERO) {
                        input_present |= 1 << m;
                    }
                }
            }
        }
        // Raw pointers let one pass write into several tiles of the group.
        let mut outs: [*mut Complex64; 16] = [std::ptr::null_mut(); 16];
        for (m, slot) in members.iter_mut().enumerate() {
            if needed & (1 << m) != 0 {
                if let Some(QuadNode::Leaf(tile)) = slot.as_deref_mut() {
                    outs[m] = tile.as_mut_ptr();
                }
            }
        }
        let kk = 1usize << (2 * self.k);
        if self.tree_targets == self.k {
            // Every target is a tree level: each output tile is a linear
            // combination of whole input tiles.
            for g_out in 0..kk {
                if needed & (1 << g_out) == 0 {
                    continue;
                }
                // SAFETY: as below; distinct members own distinct tiles of length tl.
                let out = unsafe { std::slice::from_raw_parts_mut(outs[g_out], tl) };
                out.fill(ZERO);
                for &(g_in, coeff) in &self.op.rows[g_out] {
                    if input_present & (1 << g_in) != 0 {
                        let src = &scratch[g_in * tl..(g_in + 1) * tl];
                        for (o, v) in out.iter_mut().zip(src) {
                            *o += coeff * v;
                        }
                    }
                }
            }
        } else {
            self.gather_scatter(&scratch, &outs, needed, input_present);
        }
        let tol2 = self.prune_tol * self.prune_tol;
        for (m, slot) in members.iter_mut().enumerate() {
            if needed & (1 << m) == 0 {
                continue;
            }
            if let Some(node) = slot.as_deref_mut() {
                if let QuadNode::Leaf(tile) = node {
                    if tile.iter().all(|v| v.norm_sqr() < tol2) {
                        *node = QuadNode::Empty;
                    }
                }
            }
        }
    }

    fn gather_scatter(&self, scratch: &[Complex64], outs: &[*mut Complex64; 16], needed: u16, input_present: u16) {
        let tl = self.side * self.side;
        let kk = 1usize << (2 * self.k);
        for &base in &self.bases {
            for g_out in 0..kk {
                let (m_out, off_out) = self.gmap[g_out];
                if needed & (1 << m_out) == 0 {
                    continue;
                }
                let mut acc = ZERO;
                for &(g_in, coeff) in &self.op.rows[g_out] {
                    let (m_in, off_in) = self.gmap[g_in];
                    if input_present & (1 << m_in) != 0 {
                        acc += coeff * scratch[m_in * tl + base + off_in];
                    }
                }
                // SAFETY: outs[m_out] points at a live tile of length tl owned by a
                // distinct member; base + off_out < tl by construction of bases/gmap.
                unsafe {
                    *outs[m_out].add(base + off_out) = acc;
                }
            }
        }
    }
}
