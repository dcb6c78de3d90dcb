//! Soft heap with a fixed corruption parameter.
//!
//! Binary-tree soft heap in the style of Kaplan, Tarjan and Zwick: a list of
//! root trees with distinct ranks, each node carrying a list of items that
//! share the node's (soft) key. Nodes above a rank threshold hold more than
//! one item, and items sharing a larger soft key than their own are
//! *corrupted*.
//!
//! Insertions are buffered and linked into the forest at the start of the
//! next [`SoftHeap::extract_min`], so every corruption event happens inside an
//! extraction and is reported by it.
//!
//! The order must be strict over the items present. Corruption is tracked per
//! item, so under ties an item can be flagged while its soft key equals its
//! own; the flag then overcounts.

use std::cmp::Ordering;

use thiserror::Error;

use crate::order::Comparator;

const NIL: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SoftHeapError {
    #[error("corruption parameter {0} outside (0, 1/2]")]
    Parameter(f64),
    #[error("extract from an empty soft heap")]
    Empty,
}

/// Result of one extraction.
#[derive(Debug, Clone)]
pub struct Extracted<T> {
    pub item: T,
    /// Whether `item` had already been reported as corrupted by an earlier
    /// extraction. Items corrupted during this very call are reported as not
    /// corrupted, so a caller that handles uncorrupted items itself sees each
    /// item exactly once.
    pub corrupted: bool,
    /// Items still in the heap that became corrupted during this call.
    pub newly_corrupted: Vec<T>,
}

/// Counts found by walking the whole structure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SoftHeapAudit {
    pub live: usize,
    pub corrupted: usize,
    /// Items whose soft key is below their true key.
    pub dominance_violations: usize,
    /// Parent/child pairs out of soft-key order.
    pub order_violations: usize,
    /// Items whose corruption flag disagrees with their soft key.
    pub flag_mismatches: usize,
}

#[derive(Debug)]
struct Item<T> {
    value: Option<T>,
    next: u32,
    /// Extraction call that corrupted this item; zero while clean.
    corrupted_at: u64,
}

#[derive(Debug)]
struct Node<T> {
    key: T,
    rank: u32,
    target: u32,
    left: u32,
    right: u32,
    head: u32,
    tail: u32,
    len: u32,
    /// The one item whose true key equals `key`, if still listed here.
    clean: u32,
}

/// Soft heap over items `T` ordered by `C`.
#[derive(Debug)]
pub struct SoftHeap<T, C> {
    cmp: C,
    epsilon: f64,
    threshold: u32,
    nodes: Vec<Node<T>>,
    free_nodes: Vec<u32>,
    items: Vec<Item<T>>,
    free_items: Vec<u32>,
    roots: Vec<u32>,
    sufmin: Vec<u32>,
    pending: Vec<u32>,
    inserted_total: u64,
    len: usize,
    corrupted_live: usize,
    call: u64,
    fresh: Vec<u32>,
}

impl<T: Clone, C: Comparator<T>> SoftHeap<T, C> {
    /// `epsilon` must lie in `(0, 1/2]`.
    pub fn new(epsilon: f64, cmp: C) -> Result<Self, SoftHeapError> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(SoftHeapError::Parameter(epsilon));
        }
        let threshold = (1.0 / epsilon).log2().ceil() as u32 + 5;
        Ok(SoftHeap {
            cmp,
            epsilon,
            threshold,
            nodes: Vec::new(),
            free_nodes: Vec::new(),
            items: Vec::new(),
            free_items: Vec::new(),
            roots: Vec::new(),
            sufmin: Vec::new(),
            pending: Vec::new(),
            inserted_total: 0,
            len: 0,
            corrupted_live: 0,
            call: 0,
            fresh: Vec::new(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn inserted_total(&self) -> u64 {
        self.inserted_total
    }

    /// Number of live items currently flagged corrupted.
    pub fn corrupted_count(&self) -> usize {
        self.corrupted_live
    }

    pub fn comparator(&self) -> &C {
        &self.cmp
    }

    pub fn insert(&mut self, item: T) {
        let idx = self.alloc_item(item);
        self.pending.push(idx);
        self.inserted_total += 1;
        self.len += 1;
    }

    pub fn extract_min(&mut self) -> Result<Extracted<T>, SoftHeapError> {
        if self.len == 0 {
            return Err(SoftHeapError::Empty);
        }
        self.call += 1;
        self.fresh.clear();
        self.flush_pending();

        let rank = self.sufmin[0];
        let x = self.roots[rank as usize];
        let it = self.nodes[x as usize].head;
        debug_assert_ne!(it, NIL);
        {
            let next = self.items[it as usize].next;
            let node = &mut self.nodes[x as usize];
            node.head = next;
            if next == NIL {
                node.tail = NIL;
            }
            node.len -= 1;
            if node.clean == it {
                node.clean = NIL;
            }
        }
        let corrupted_at = self.items[it as usize].corrupted_at;
        let item = self.free_item(it);
        self.len -= 1;
        if corrupted_at != 0 {
            self.corrupted_live -= 1;
        }

        let node = &self.nodes[x as usize];
        if node.len * 2 <= node.target {
            if node.left != NIL {
                self.defill(x);
            }
            let node = &self.nodes[x as usize];
            if node.len == 0 && node.left == NIL {
                self.free_node(x);
                self.roots[rank as usize] = NIL;
                while self.roots.last() == Some(&NIL) {
                    self.roots.pop();
                    self.sufmin.pop();
                }
            }
        }
        let top = (rank as usize).min(self.roots.len().saturating_sub(1));
        if !self.roots.is_empty() {
            self.refresh_sufmin(top);
        }

        let newly_corrupted = self
            .fresh
            .iter()
            .filter_map(|&i| self.items[i as usize].value.clone())
            .collect();
        Ok(Extracted {
            item,
            corrupted: corrupted_at != 0 && corrupted_at != self.call,
            newly_corrupted,
        })
    }

    /// Walks the structure and recounts corruption with the supplied
    /// uncounted order. Buffered items are uncorrupted by construction.
    pub fn audit(&self, cmp: impl Fn(&T, &T) -> Ordering) -> SoftHeapAudit {
        let mut audit = SoftHeapAudit {
            live: self.pending.len(),
            ..Default::default()
        };
        let mut stack: Vec<u32> = self.roots.iter().copied().filter(|&r| r != NIL).collect();
        while let Some(x) = stack.pop() {
            let node = &self.nodes[x as usize];
            let mut it = node.head;
            while it != NIL {
                let item = &self.items[it as usize];
                let value = item.value.as_ref().expect("listed item is live");
                audit.live += 1;
                match cmp(value, &node.key) {
                    Ordering::Less => {
                        audit.corrupted += 1;
                        if item.corrupted_at == 0 {
                            audit.flag_mismatches += 1;
                        }
                    }
                    Ordering::Equal => {
                        if item.corrupted_at != 0 {
                            audit.flag_mismatches += 1;
                        }
                    }
                    Ordering::Greater => audit.dominance_violations += 1,
                }
                it = item.next;
            }
            for child in [node.left, node.right] {
                if child != NIL {
                    if cmp(&self.nodes[child as usize].key, &node.key) == Ordering::Less {
                        audit.order_violations += 1;
                    }
                    stack.push(child);
                }
            }
        }
        audit
    }

    fn alloc_item(&mut self, value: T) -> u32 {
        let item = Item {
            value: Some(value),
            next: NIL,
            corrupted_at: 0,
        };
        match self.free_items.pop() {
            Some(i) => {
                self.items[i as usize] = item;
                i
            }
            None => {
                self.items.push(item);
                (self.items.len() - 1) as u32
            }
        }
    }

    fn free_item(&mut self, i: u32) -> T {
        self.free_items.push(i);
        self.items[i as usize].value.take().expect("live item")
    }

    fn alloc_node(&mut self, node: Node<T>) -> u32 {
        match self.free_nodes.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    fn free_node(&mut self, i: u32) {
        let n = &mut self.nodes[i as usize];
        n.left = NIL;
        n.right = NIL;
        n.head = NIL;
        n.tail = NIL;
        n.len = 0;
        n.clean = NIL;
        self.free_nodes.push(i);
    }

    fn flush_pending(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let pending = std::mem::take(&mut self.pending);
        let mut touched = 0usize;
        for &it in &pending {
            let key = self.items[it as usize].value.clone().expect("pending item");
            let mut cur = self.alloc_node(Node {
                key,
                rank: 0,
                target: 1,
                left: NIL,
                right: NIL,
                head: it,
                tail: it,
                len: 1,
                clean: it,
            });
            let mut r = 0usize;
            while r < self.roots.len() && self.roots[r] != NIL {
                let other = self.roots[r];
                self.roots[r] = NIL;
                cur = self.link(other, cur);
                r += 1;
            }
            if r == self.roots.len() {
                self.roots.push(NIL);
                self.sufmin.push(NIL);
            }
            self.roots[r] = cur;
            touched = touched.max(r);
        }
        self.pending = pending;
        self.pending.clear();
        self.refresh_sufmin(touched);
    }

    fn link(&mut self, a: u32, b: u32) -> u32 {
        let rank = self.nodes[a as usize].rank + 1;
        let target = if rank <= self.threshold {
            1
        } else {
            (3 * self.nodes[a as usize].target).div_ceil(2)
        };
        let key = self.nodes[a as usize].key.clone();
        let z = self.alloc_node(Node {
            key,
            rank,
            target,
            left: a,
            right: b,
            head: NIL,
            tail: NIL,
            len: 0,
            clean: NIL,
        });
        self.defill(z);
        z
    }

    fn defill(&mut self, x: u32) {
        while self.nodes[x as usize].len < self.nodes[x as usize].target
            && self.nodes[x as usize].left != NIL
        {
            self.fill(x);
        }
    }

    fn fill(&mut self, x: u32) {
        let (mut left, mut right) = {
            let n = &self.nodes[x as usize];
            (n.left, n.right)
        };
        if left == NIL
            || (right != NIL
                && self.cmp.less(
                    &self.nodes[right as usize].key,
                    &self.nodes[left as usize].key,
                ))
        {
            std::mem::swap(&mut left, &mut right);
            let n = &mut self.nodes[x as usize];
            n.left = left;
            n.right = right;
        }

        // Everything already listed at x now carries the child's larger key.
        let clean = self.nodes[x as usize].clean;
        if clean != NIL {
            self.items[clean as usize].corrupted_at = self.call;
            self.corrupted_live += 1;
            self.fresh.push(clean);
        }

        let (key, head, tail, len, child_clean, child_is_leaf) = {
            let l = &mut self.nodes[left as usize];
            let out = (
                l.key.clone(),
                l.head,
                l.tail,
                l.len,
                l.clean,
                l.left == NIL && l.right == NIL,
            );
            l.head = NIL;
            l.tail = NIL;
            l.len = 0;
            l.clean = NIL;
            out
        };
        {
            let x_tail = self.nodes[x as usize].tail;
            if head != NIL {
                if x_tail == NIL {
                    self.nodes[x as usize].head = head;
                } else {
                    self.items[x_tail as usize].next = head;
                }
                self.nodes[x as usize].tail = tail;
            }
            let n = &mut self.nodes[x as usize];
            n.key = key;
            n.len += len;
            n.clean = child_clean;
        }

        if child_is_leaf {
            self.free_node(left);
            let n = &mut self.nodes[x as usize];
            n.left = n.right;
            n.right = NIL;
        } else {
            self.defill(left);
        }
    }

    /// Recomputes suffix minima over ranks `0..=top`.
    fn refresh_sufmin(&mut self, top: usize) {
        let len = self.roots.len();
        for i in (0..=top.min(len - 1)).rev() {
            let cand = if i + 1 < len { self.sufmin[i + 1] } else { NIL };
            let root = self.roots[i];
            self.sufmin[i] = if root == NIL {
                cand
            } else if cand == NIL {
                i as u32
            } else {
                let ck = &self.nodes[self.roots[cand as usize] as usize].key;
                if self.cmp.less(&self.nodes[root as usize].key, ck) {
                    i as u32
                } else {
                    cand
                }
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::{Counter, Entry, EntryOrder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Heap = SoftHeap<Entry<i64>, EntryOrder>;

    fn heap(eps: f64) -> Heap {
        SoftHeap::new(eps, EntryOrder::min(Counter::new())).unwrap()
    }

    fn audit(h: &Heap) -> SoftHeapAudit {
        h.audit(|a, b| a.cmp_silent(b))
    }

    #[test]
    fn parameter_range() {
        assert!(SoftHeap::<Entry<i64>, _>::new(1.0 / 6.0, EntryOrder::min(Counter::new())).is_ok());
        assert!(SoftHeap::<Entry<i64>, _>::new(0.5, EntryOrder::min(Counter::new())).is_ok());
        assert_eq!(
            SoftHeap::<Entry<i64>, _>::new(0.7, EntryOrder::min(Counter::new())).unwrap_err(),
            SoftHeapError::Parameter(0.7)
        );
        assert!(SoftHeap::<Entry<i64>, _>::new(0.0, EntryOrder::min(Counter::new())).is_err());
    }

    #[test]
    fn empty_and_singleton() {
        let mut h = heap(1.0 / 6.0);
        assert_eq!(h.corrupted_count(), 0);
        assert!(matches!(h.extract_min(), Err(SoftHeapError::Empty)));
        h.insert(Entry::new(4, ()));
        let out = h.extract_min().unwrap();
        assert_eq!(out.item.key, 4);
        assert!(!out.corrupted);
        assert!(out.newly_corrupted.is_empty());
        assert!(h.is_empty());
    }

    #[test]
    fn small_inserts_never_corrupt() {
        let mut h = heap(1.0 / 6.0);
        for k in 1..=12 {
            h.insert(Entry::new(k, ()));
            assert!(audit(&h).corrupted <= 2);
        }
        let first = h.extract_min().unwrap();
        assert_eq!(first.item.key, 1);
        assert!(audit(&h).corrupted <= 2);
    }

    #[test]
    fn extracted_item_precedes_soft_keys() {
        let mut h = heap(1.0 / 6.0);
        for k in [3, 1, 2] {
            h.insert(Entry::new(k, ()));
        }
        let out = h.extract_min().unwrap();
        assert_eq!(out.item.key, 1);
        let a = audit(&h);
        assert_eq!(a.dominance_violations, 0);
        assert_eq!(a.order_violations, 0);
    }

    #[test]
    fn random_workload_respects_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut h = heap(1.0 / 6.0);
        let mut reported = 0usize;
        for _ in 0..4000 {
            if rng.gen_bool(0.6) || h.is_empty() {
                h.insert(Entry::new(rng.gen_range(0..1000), ()));
            } else {
                let out = h.extract_min().unwrap();
                reported += out.newly_corrupted.len();
            }
            let a = audit(&h);
            assert_eq!(a.flag_mismatches, 0);
            assert_eq!(a.dominance_violations, 0);
            assert_eq!(a.order_violations, 0);
            assert_eq!(a.corrupted, h.corrupted_count());
            assert_eq!(a.live, h.len());
            assert!(a.corrupted as f64 <= h.inserted_total() as f64 / 6.0);
        }
        assert!(reported as f64 <= h.inserted_total() as f64 / 6.0);
    }

    #[test]
    fn drains_in_soft_order_with_all_items() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut h = heap(0.5);
        let mut keys: Vec<i64> = (0..600).map(|_| rng.gen_range(-500..500)).collect();
        for &k in &keys {
            h.insert(Entry::new(k, ()));
        }
        let mut out = Vec::new();
        while let Ok(x) = h.extract_min() {
            out.push(x.item.key);
        }
        keys.sort();
        out.sort();
        assert_eq!(keys, out);
    }
}
