//! Weighted ordered index over gaps.
//!
//! Leaves are gaps in key order, internal nodes carry the separator between
//! their left and right subtrees plus the subtree weight (number of entries).
//! Rank descent uses weights only; key descent costs one comparison per level.
//!
//! The tree is rebuilt by weight bisection whenever the number of leaf splits
//! since the last rebuild exceeds the leaf count at that rebuild, or the total
//! weight has doubled or halved. A rebuilt tree puts a gap of weight `w` at
//! depth `O(log(W / w))`.

use std::cmp::Ordering;

use crate::order::Counter;

pub(crate) const NIL: u32 = u32::MAX;

/// Boundary between two adjacent gaps: `(key, seq)` pairs at or below it
/// (strictly below, when not inclusive) belong to the lower gap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Sep<K> {
    pub key: K,
    pub seq: u64,
    pub inclusive: bool,
}

impl<K: Ord> Sep<K> {
    pub fn at_most(key: K, seq: u64) -> Self {
        Sep {
            key,
            seq,
            inclusive: true,
        }
    }

    pub fn below(key: K, seq: u64) -> Self {
        Sep {
            key,
            seq,
            inclusive: false,
        }
    }

    /// Counted test of whether `(key, seq)` lies on the lower side.
    #[inline]
    pub fn admits(&self, key: &K, seq: u64, counter: &Counter) -> bool {
        counter.bump();
        self.admits_silent(key, seq)
    }

    pub fn admits_silent(&self, key: &K, seq: u64) -> bool {
        match key.cmp(&self.key).then(seq.cmp(&self.seq)) {
            Ordering::Less => true,
            Ordering::Equal => self.inclusive,
            Ordering::Greater => false,
        }
    }
}

#[derive(Debug, Clone)]
struct DNode<K> {
    parent: u32,
    left: u32,
    right: u32,
    weight: usize,
    gap: u32,
    sep: Option<Sep<K>>,
}

/// One leaf of a directory being built: gap id, weight, separator above it.
pub(crate) struct LeafSpec<'a, K> {
    pub gap: u32,
    pub weight: usize,
    pub upper: Option<&'a Sep<K>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Directory<K> {
    nodes: Vec<DNode<K>>,
    root: u32,
    splits: usize,
    leaves_at_build: usize,
    weight_at_build: usize,
}

/// Problems found by [`Directory::audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum DirectoryFault {
    Weight { node: u32 },
    Parent { node: u32 },
}

impl<K: Ord + Clone> Directory<K> {
    /// Builds a weight-balanced directory; returns it with the leaf index of
    /// each input gap, in input order.
    pub fn build(leaves: &[LeafSpec<'_, K>]) -> (Self, Vec<u32>) {
        assert!(!leaves.is_empty(), "directory needs at least one gap");
        let mut prefix = Vec::with_capacity(leaves.len() + 1);
        prefix.push(0usize);
        for l in leaves {
            prefix.push(prefix.last().unwrap() + l.weight + 1);
        }
        let mut dir = Directory {
            nodes: Vec::with_capacity(2 * leaves.len()),
            root: NIL,
            splits: 0,
            leaves_at_build: leaves.len(),
            weight_at_build: prefix[leaves.len()] - leaves.len(),
        };
        let mut leaf_ids = vec![NIL; leaves.len()];
        dir.root = dir.build_range(leaves, &prefix, 0, leaves.len(), NIL, &mut leaf_ids);
        (dir, leaf_ids)
    }

    fn build_range(
        &mut self,
        leaves: &[LeafSpec<'_, K>],
        prefix: &[usize],
        lo: usize,
        hi: usize,
        parent: u32,
        leaf_ids: &mut [u32],
    ) -> u32 {
        let id = self.nodes.len() as u32;
        if hi - lo == 1 {
            self.nodes.push(DNode {
                parent,
                left: NIL,
                right: NIL,
                weight: leaves[lo].weight,
                gap: leaves[lo].gap,
                sep: None,
            });
            leaf_ids[lo] = id;
            return id;
        }
        let half = prefix[lo] + (prefix[hi] - prefix[lo]) / 2;
        let mut s = prefix[lo..=hi].partition_point(|&p| p < half) + lo;
        if s > lo + 1 && half - prefix[s - 1] < prefix[s] - half {
            s -= 1;
        }
        let s = s.clamp(lo + 1, hi - 1);
        self.nodes.push(DNode {
            parent,
            left: NIL,
            right: NIL,
            weight: prefix[hi] - prefix[lo] - (hi - lo),
            gap: NIL,
            sep: leaves[s - 1].upper.cloned(),
        });
        let l = self.build_range(leaves, prefix, lo, s, id, leaf_ids);
        let r = self.build_range(leaves, prefix, s, hi, id, leaf_ids);
        self.nodes[id as usize].left = l;
        self.nodes[id as usize].right = r;
        id
    }

    pub fn total(&self) -> usize {
        self.nodes[self.root as usize].weight
    }

    /// Gap holding rank `r` (1-based) and the rank inside it.
    pub fn locate_rank(&self, mut r: usize) -> (u32, usize) {
        let mut x = self.root;
        loop {
            let n = &self.nodes[x as usize];
            if n.gap != NIL {
                return (n.gap, r);
            }
            let lw = self.nodes[n.left as usize].weight;
            if r <= lw {
                x = n.left;
            } else {
                r -= lw;
                x = n.right;
            }
        }
    }

    /// Gap that `(key, seq)` belongs to and the number of entries in gaps
    /// before it.
    pub fn locate_key(&self, key: &K, seq: u64, counter: &Counter) -> (u32, usize) {
        let mut x = self.root;
        let mut before = 0;
        loop {
            let n = &self.nodes[x as usize];
            if n.gap != NIL {
                return (n.gap, before);
            }
            let goes_left = n.sep.as_ref().is_none_or(|s| s.admits(key, seq, counter));
            if goes_left {
                x = n.left;
            } else {
                before += self.nodes[n.left as usize].weight;
                x = n.right;
            }
        }
    }

    /// Number of entries in gaps before the gap at `leaf`.
    #[cfg(test)]
    pub fn rank_before(&self, leaf: u32) -> usize {
        let mut before = 0;
        let mut x = leaf;
        let mut p = self.nodes[x as usize].parent;
        while p != NIL {
            let n = &self.nodes[p as usize];
            if n.right == x {
                before += self.nodes[n.left as usize].weight;
            }
            x = p;
            p = n.parent;
        }
        before
    }

    pub fn add_weight(&mut self, leaf: u32, delta: isize) {
        let mut x = leaf;
        while x != NIL {
            let n = &mut self.nodes[x as usize];
            n.weight = n
                .weight
                .checked_add_signed(delta)
                .expect("weight underflow");
            x = n.parent;
        }
    }

    pub fn leaf_weight(&self, leaf: u32) -> usize {
        self.nodes[leaf as usize].weight
    }

    /// Replaces a leaf by an internal node over two new leaves; returns the
    /// new leaf indices.
    pub fn split_leaf(
        &mut self,
        leaf: u32,
        left: (u32, usize),
        right: (u32, usize),
        sep: Sep<K>,
    ) -> (u32, u32) {
        let l = self.nodes.len() as u32;
        let r = l + 1;
        for (gap, weight) in [left, right] {
            self.nodes.push(DNode {
                parent: leaf,
                left: NIL,
                right: NIL,
                weight,
                gap,
                sep: None,
            });
        }
        let n = &mut self.nodes[leaf as usize];
        debug_assert_eq!(n.weight, left.1 + right.1);
        n.gap = NIL;
        n.left = l;
        n.right = r;
        n.sep = Some(sep);
        self.splits += 1;
        (l, r)
    }

    pub fn wants_rebuild(&self) -> bool {
        let w = self.total();
        self.splits > self.leaves_at_build.max(4)
            || w > 2 * self.weight_at_build.max(8)
            || 2 * w < self.weight_at_build
    }

    /// Depth of a leaf; the root has depth 0.
    #[cfg(test)]
    pub fn depth(&self, leaf: u32) -> usize {
        let mut d = 0;
        let mut x = self.nodes[leaf as usize].parent;
        while x != NIL {
            d += 1;
            x = self.nodes[x as usize].parent;
        }
        d
    }

    /// Gap ids in in-order.
    pub fn gaps_in_order(&self) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            let n = &self.nodes[x as usize];
            if n.gap != NIL {
                out.push(n.gap);
            } else {
                stack.push(n.right);
                stack.push(n.left);
            }
        }
        out
    }

    /// Separators of internal nodes in in-order.
    pub fn separators_in_order(&self) -> Vec<Option<&Sep<K>>> {
        let mut out = Vec::new();
        self.collect_seps(self.root, &mut out);
        out
    }

    fn collect_seps<'a>(&'a self, x: u32, out: &mut Vec<Option<&'a Sep<K>>>) {
        let n = &self.nodes[x as usize];
        if n.gap == NIL {
            self.collect_seps(n.left, out);
            out.push(n.sep.as_ref());
            self.collect_seps(n.right, out);
        }
    }

    pub fn audit(&self) -> Vec<DirectoryFault> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        if self.nodes[self.root as usize].parent != NIL {
            out.push(DirectoryFault::Parent { node: self.root });
        }
        while let Some(x) = stack.pop() {
            let n = &self.nodes[x as usize];
            if n.gap != NIL {
                continue;
            }
            for c in [n.left, n.right] {
                if self.nodes[c as usize].parent != x {
                    out.push(DirectoryFault::Parent { node: c });
                }
                stack.push(c);
            }
            if n.weight != self.nodes[n.left as usize].weight + self.nodes[n.right as usize].weight
            {
                out.push(DirectoryFault::Weight { node: x });
            }
        }
        out
    }

    #[cfg(test)]
    pub fn corrupt_weight(&mut self, leaf: u32) {
        self.nodes[leaf as usize].weight += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs(weights: &[usize], seps: &[Sep<i64>]) -> Vec<(u32, usize, Option<Sep<i64>>)> {
        weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (i as u32, w, seps.get(i).cloned()))
            .collect()
    }

    fn build(weights: &[usize]) -> (Directory<i64>, Vec<u32>) {
        let seps: Vec<Sep<i64>> = (0..weights.len() as i64)
            .map(|i| Sep::at_most(10 * i + 9, 0))
            .collect();
        let raw = specs(weights, &seps);
        let leaves: Vec<LeafSpec<i64>> = raw
            .iter()
            .enumerate()
            .map(|(i, (g, w, s))| LeafSpec {
                gap: *g,
                weight: *w,
                upper: if i + 1 < raw.len() { s.as_ref() } else { None },
            })
            .collect();
        Directory::build(&leaves)
    }

    #[test]
    fn rank_descent_finds_gap_and_offset() {
        let (d, _) = build(&[3, 0, 5, 2]);
        assert_eq!(d.total(), 10);
        assert_eq!(d.locate_rank(1), (0, 1));
        assert_eq!(d.locate_rank(3), (0, 3));
        assert_eq!(d.locate_rank(4), (2, 1));
        assert_eq!(d.locate_rank(10), (3, 2));
        assert_eq!(d.gaps_in_order(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn key_descent_respects_separators() {
        let (d, leaves) = build(&[3, 4, 5, 2]);
        let c = Counter::new();
        assert_eq!(d.locate_key(&9, 0, &c), (0, 0));
        assert_eq!(d.locate_key(&10, 0, &c), (1, 3));
        assert_eq!(d.locate_key(&35, 0, &c), (3, 12));
        assert!(c.get() > 0);
        assert_eq!(d.rank_before(leaves[2]), 7);
    }

    #[test]
    fn heavy_gap_sits_high() {
        let mut w = vec![1usize; 63];
        w[40] = 10_000;
        let (d, leaves) = build(&w);
        assert!(d.depth(leaves[40]) <= 2);
        assert!(d.audit().is_empty());
    }

    #[test]
    fn split_and_weights() {
        let (mut d, leaves) = build(&[4, 6]);
        let (a, b) = d.split_leaf(leaves[1], (1, 2), (7, 4), Sep::at_most(15, 0));
        d.add_weight(b, 1);
        assert_eq!(d.total(), 11);
        assert_eq!(d.leaf_weight(a), 2);
        assert_eq!(d.gaps_in_order(), vec![0, 1, 7]);
        assert!(d.audit().is_empty());
        d.corrupt_weight(a);
        assert!(!d.audit().is_empty());
    }
}
