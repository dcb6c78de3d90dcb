//! Fibonacci heap with multi-element selection, extraction and deletion.
//!
//! Besides the classic operations the heap offers
//!
//! * [`FibHeap::select_k`]: the `k` smallest entries, found by running
//!   [`soft_select`] on a virtual tree whose root is a `-inf` dummy with every
//!   heap root as a child. The dummy is never linked into the heap.
//! * [`FibHeap::extract_k`]: removes the selected entries, promotes their
//!   surviving children to roots and consolidates.
//! * [`FibHeap::delete_multi`]: removes arbitrary live entries with one
//!   cascading-cut walk per removed node.
//!
//! Children are kept in link order, which makes the degree lemma (the i-th
//! child linked to a node has degree at least i - 2) directly auditable by
//! [`FibHeap::validate`].

use std::cell::{Cell, RefCell};
use std::collections::HashSet;
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

use thiserror::Error;

use crate::order::{Comparator, Counter, Direction, Entry, EntryOrder};
use crate::select::{soft_select, SelectionStats, TreeView};

const NIL: u32 = u32::MAX;
const DUMMY: u32 = u32::MAX - 1;

static NEXT_HEAP_ID: AtomicU32 = AtomicU32::new(1);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FibError {
    #[error("heap is empty")]
    Empty,
    #[error("stale or foreign handle")]
    StaleHandle,
    #[error("handle listed twice")]
    DuplicateHandle,
    #[error("new key would move the entry away from the top of the heap")]
    KeyDirection,
    #[error("heaps have opposite directions")]
    DirectionMismatch,
}

/// Stable reference to a heap entry. Valid until that entry is removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Handle {
    heap: u32,
    index: u32,
    gen: u32,
}

#[derive(Debug, Clone)]
struct Node<K, V> {
    entry: Option<Entry<K, V>>,
    gen: u32,
    parent: u32,
    first_child: u32,
    last_child: u32,
    prev: u32,
    next: u32,
    degree: u32,
    marked: bool,
}

impl<K, V> Node<K, V> {
    fn vacant(gen: u32) -> Self {
        Node {
            entry: None,
            gen,
            parent: NIL,
            first_child: NIL,
            last_child: NIL,
            prev: NIL,
            next: NIL,
            degree: 0,
            marked: false,
        }
    }
}

/// Translates handles of a heap absorbed by [`FibHeap::merge`].
#[derive(Debug, Clone, Default)]
pub struct HandleRemap {
    from: u32,
    to: u32,
    moved: Vec<(u32, u32, u32)>,
}

impl HandleRemap {
    /// Maps a handle issued by either input heap to the merged heap.
    pub fn translate(&self, h: Handle) -> Handle {
        if h.heap != self.from || self.from == self.to {
            return h;
        }
        match self.moved.binary_search_by_key(&h.index, |m| m.0) {
            Ok(i) => Handle {
                heap: self.to,
                index: self.moved[i].1,
                gen: self.moved[i].2,
            },
            Err(_) => h,
        }
    }

    /// `(old, new)` pairs for every entry that changed storage.
    pub fn pairs(&self) -> impl Iterator<Item = (Handle, Handle)> + '_ {
        self.moved.iter().map(move |&(old, new, gen)| {
            (
                Handle {
                    heap: self.from,
                    index: old,
                    gen: 0,
                },
                Handle {
                    heap: self.to,
                    index: new,
                    gen,
                },
            )
        })
    }
}

/// Structural problems reported by [`FibHeap::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    HeapOrder {
        parent: u32,
        child: u32,
    },
    DegreeMismatch {
        node: u32,
        stored: u32,
        actual: u32,
    },
    ChildDegree {
        node: u32,
        position: u32,
        degree: u32,
    },
    SubtreeSize {
        node: u32,
        degree: u32,
        size: u64,
    },
    MarkedRoot {
        node: u32,
    },
    BrokenLink {
        node: u32,
    },
    MinNotMinimal,
    CountMismatch {
        stored: usize,
        reachable: usize,
    },
    RootCountMismatch {
        stored: usize,
        actual: usize,
    },
}

/// Fibonacci heap over [`Entry`] values. The heap's [`Direction`] decides
/// whether the smallest or the largest entry sits on top.
#[derive(Debug, Clone)]
pub struct FibHeap<K, V = ()> {
    id: u32,
    order: EntryOrder,
    nodes: Vec<Node<K, V>>,
    free: Vec<u32>,
    root_head: u32,
    root_tail: u32,
    roots: usize,
    /// Minimum over every node except the `pending` roots, which were
    /// inserted without a comparison and are folded in on the next read.
    min: Cell<u32>,
    pending: RefCell<Vec<(u32, u32)>>,
    len: usize,
    last_stats: SelectionStats,
}

impl<K: Ord, V> Default for FibHeap<K, V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord, V> FibHeap<K, V> {
    /// Empty min-heap with its own counter.
    pub fn new() -> Self {
        Self::with_order(Direction::Min, Counter::new())
    }

    pub fn with_order(direction: Direction, counter: Counter) -> Self {
        FibHeap {
            id: NEXT_HEAP_ID.fetch_add(1, AtomicOrdering::Relaxed),
            order: EntryOrder { counter, direction },
            nodes: Vec::new(),
            free: Vec::new(),
            root_head: NIL,
            root_tail: NIL,
            roots: 0,
            min: Cell::new(NIL),
            pending: RefCell::new(Vec::new()),
            len: 0,
            last_stats: SelectionStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn root_count(&self) -> usize {
        self.roots
    }

    pub fn direction(&self) -> Direction {
        self.order.direction
    }

    pub fn counter(&self) -> &Counter {
        &self.order.counter
    }

    /// Points future comparisons at `counter`.
    pub fn set_counter(&mut self, counter: Counter) {
        self.order.counter = counter;
    }

    /// Statistics of the most recent selection.
    pub fn last_selection_stats(&self) -> SelectionStats {
        self.last_stats
    }

    /// Adds the entry as a new root without comparing it. The one comparison
    /// against the minimum is paid when the minimum is next read, and not at
    /// all if a consolidation comes first.
    pub fn insert(&mut self, entry: Entry<K, V>) -> Handle {
        let x = self.alloc(entry);
        self.push_root(x);
        self.pending.get_mut().push((x, self.nodes[x as usize].gen));
        self.len += 1;
        self.handle(x)
    }

    /// Inserts an entry with a fresh sequence number.
    pub fn push(&mut self, key: K, payload: V) -> Handle {
        self.insert(Entry::new(key, payload))
    }

    pub fn find_min(&self) -> Result<&Entry<K, V>, FibError> {
        match self.min() {
            NIL => Err(FibError::Empty),
            m => Ok(self.entry(m)),
        }
    }

    pub fn min_handle(&self) -> Option<Handle> {
        let m = self.min();
        (m != NIL).then(|| self.handle(m))
    }

    /// Whether the minimum is known without further comparisons.
    pub fn min_is_settled(&self) -> bool {
        self.pending.borrow().is_empty()
    }

    pub fn get(&self, h: Handle) -> Result<&Entry<K, V>, FibError> {
        let x = self.resolve(h)?;
        Ok(self.entry(x))
    }

    pub fn contains(&self, h: Handle) -> bool {
        self.resolve(h).is_ok()
    }

    /// Live entries in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (Handle, &Entry<K, V>)> + '_ {
        self.nodes.iter().enumerate().filter_map(move |(i, n)| {
            n.entry.as_ref().map(|e| {
                (
                    Handle {
                        heap: self.id,
                        index: i as u32,
                        gen: n.gen,
                    },
                    e,
                )
            })
        })
    }

    /// Removes every entry without comparing anything.
    pub fn drain(&mut self) -> Vec<Entry<K, V>> {
        let out = self
            .nodes
            .iter_mut()
            .filter_map(|n| n.entry.take())
            .collect();
        self.nodes.clear();
        self.free.clear();
        self.root_head = NIL;
        self.root_tail = NIL;
        self.roots = 0;
        self.min.set(NIL);
        self.pending.get_mut().clear();
        self.len = 0;
        out
    }

    /// Melds two heaps with at most one comparison; pending roots stay
    /// pending. The smaller arena is
    /// moved into the larger one; the returned remap translates handles.
    /// The result counts comparisons on `self`'s counter.
    pub fn merge(mut self, mut other: Self) -> Result<(Self, HandleRemap), FibError> {
        if self.order.direction != other.order.direction {
            return Err(FibError::DirectionMismatch);
        }
        let counter = self.order.counter.clone();
        if self.nodes.len() - self.free.len() < other.nodes.len() - other.free.len() {
            std::mem::swap(&mut self, &mut other);
        }
        let mut remap = HandleRemap {
            from: other.id,
            to: self.id,
            moved: Vec::with_capacity(other.len),
        };
        let mut index_of = vec![NIL; other.nodes.len()];
        for (i, node) in other.nodes.iter_mut().enumerate() {
            if let Some(entry) = node.entry.take() {
                let x = self.alloc(entry);
                index_of[i] = x;
                remap.moved.push((i as u32, x, self.nodes[x as usize].gen));
            }
        }
        let map = |i: u32| if i == NIL { NIL } else { index_of[i as usize] };
        for (i, node) in other.nodes.iter().enumerate() {
            let x = index_of[i];
            if x == NIL {
                continue;
            }
            let n = &mut self.nodes[x as usize];
            n.parent = map(node.parent);
            n.first_child = map(node.first_child);
            n.last_child = map(node.last_child);
            n.prev = map(node.prev);
            n.next = map(node.next);
            n.degree = node.degree;
            n.marked = node.marked;
        }
        if other.root_head != NIL {
            let head = map(other.root_head);
            let tail = map(other.root_tail);
            if self.root_tail == NIL {
                self.root_head = head;
            } else {
                self.nodes[self.root_tail as usize].next = head;
                self.nodes[head as usize].prev = self.root_tail;
            }
            self.root_tail = tail;
            self.roots += other.roots;
            self.len += other.len;
            self.order.counter = counter.clone();
            for &(i, gen) in other.pending.get_mut().iter() {
                let x = map(i);
                if x != NIL && other.nodes[i as usize].gen == gen {
                    self.pending.get_mut().push((x, self.nodes[x as usize].gen));
                }
            }
            let other_min = map(other.min.get());
            let m = self.min.get();
            if other_min != NIL && (m == NIL || self.less(other_min, m)) {
                self.min.set(other_min);
            }
        }
        self.order.counter = counter;
        Ok((self, remap))
    }

    pub fn extract_min(&mut self) -> Result<Entry<K, V>, FibError> {
        let x = self.min();
        if x == NIL {
            return Err(FibError::Empty);
        }
        Ok(self.remove_root_and_consolidate(x))
    }

    /// Lowers the key of a min-heap entry.
    pub fn decrease_key(&mut self, h: Handle, key: K) -> Result<(), FibError> {
        if self.order.direction != Direction::Min {
            return Err(FibError::KeyDirection);
        }
        self.improve_key(h, key)
    }

    /// Raises the key of a max-heap entry.
    pub fn increase_key(&mut self, h: Handle, key: K) -> Result<(), FibError> {
        if self.order.direction != Direction::Max {
            return Err(FibError::KeyDirection);
        }
        self.improve_key(h, key)
    }

    /// Moves an entry toward the top of the heap: a decrease for min-heaps,
    /// an increase for max-heaps. The sequence number is kept.
    pub fn improve_key(&mut self, h: Handle, key: K) -> Result<(), FibError> {
        let x = self.resolve(h)?;
        let old = &self.entry(x).key;
        self.order.counter.bump();
        let worse = match self.order.direction {
            Direction::Min => key > *old,
            Direction::Max => key < *old,
        };
        if worse {
            return Err(FibError::KeyDirection);
        }
        self.nodes[x as usize].entry.as_mut().expect("live").key = key;
        let p = self.nodes[x as usize].parent;
        if p != NIL && self.less(x, p) {
            self.cut(x);
            self.cascade(p);
        }
        // a pending root is compared when the pending list is folded in
        let m = self.min.get();
        if m != NIL && x != m && self.nodes[x as usize].parent == NIL && self.less(x, m) {
            self.min.set(x);
        }
        Ok(())
    }

    pub fn delete(&mut self, h: Handle) -> Result<Entry<K, V>, FibError> {
        let x = self.resolve(h)?;
        if x == self.min.get() {
            return Ok(self.remove_root_and_consolidate(x));
        }
        self.remove_node(x);
        Ok(self.release(x))
    }

    /// Removes every listed entry. Cascading cuts run once per removed node.
    /// The root list is only consolidated when the minimum was removed, since
    /// a new minimum has to be found anyway.
    pub fn delete_multi(&mut self, hs: &[Handle]) -> Result<Vec<Entry<K, V>>, FibError> {
        let mut seen = HashSet::with_capacity(hs.len());
        let mut xs = Vec::with_capacity(hs.len());
        for &h in hs {
            let x = self.resolve(h)?;
            if !seen.insert(x) {
                return Err(FibError::DuplicateHandle);
            }
            xs.push(x);
        }
        let mut lost_min = false;
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            lost_min |= x == self.min.get();
            self.remove_node(x);
            out.push(self.release(x));
        }
        if lost_min {
            self.consolidate();
        }
        Ok(out)
    }

    /// Handles of the `min(k, len)` top entries, in no particular order.
    /// Afterwards the root list is consolidated if it holds more than
    /// `floor(log2 n) + 1` trees; the entry set is unchanged.
    pub fn select_k_handles(&mut self, k: usize) -> Vec<Handle> {
        let nodes = self.select_nodes(k);
        if self.roots > log2_floor(self.len) + 1 {
            self.consolidate();
        }
        nodes.into_iter().map(|x| self.handle(x)).collect()
    }

    /// The `min(k, len)` top entries, in no particular order.
    pub fn select_k(&mut self, k: usize) -> Vec<&Entry<K, V>> {
        let hs = self.select_k_handles(k);
        hs.into_iter().map(|h| self.entry(h.index)).collect()
    }

    /// Removes and returns the `min(k, len)` top entries, in no particular
    /// order, then consolidates.
    pub fn extract_k(&mut self, k: usize) -> Vec<Entry<K, V>> {
        if k >= self.len {
            return self.drain();
        }
        let nodes = self.select_nodes(k);
        let mut removed = vec![false; self.nodes.len()];
        for &x in &nodes {
            removed[x as usize] = true;
        }
        // Selected sets are closed upward, so every selected node is either
        // a root or the child of another selected node.
        for &x in &nodes {
            let mut c = self.nodes[x as usize].first_child;
            while c != NIL {
                let next = self.nodes[c as usize].next;
                if !removed[c as usize] {
                    let n = &mut self.nodes[c as usize];
                    n.parent = NIL;
                    n.marked = false;
                    n.prev = NIL;
                    n.next = NIL;
                    self.push_root(c);
                }
                c = next;
            }
            let n = &mut self.nodes[x as usize];
            n.first_child = NIL;
            n.last_child = NIL;
            n.degree = 0;
        }
        for &x in &nodes {
            if self.nodes[x as usize].parent == NIL {
                self.unlink_root(x);
            }
        }
        let out: Vec<_> = nodes.iter().map(|&x| self.release(x)).collect();
        self.len -= out.len();
        self.consolidate();
        out
    }

    /// Audits heap order, degrees, the child-degree lemma, subtree sizes
    /// against Fibonacci numbers, marks, links and counts. Read-only.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let min = self.min.get();
        let pending: HashSet<u32> = self
            .pending
            .borrow()
            .iter()
            .filter(|&&(x, gen)| {
                self.nodes
                    .get(x as usize)
                    .is_some_and(|n| n.gen == gen && n.entry.is_some())
            })
            .map(|&(x, _)| x)
            .collect();
        let mut reachable = 0usize;
        let mut roots = 0usize;
        let mut r = self.root_head;
        let mut prev = NIL;
        while r != NIL {
            roots += 1;
            let n = &self.nodes[r as usize];
            if n.entry.is_none() || n.parent != NIL || n.prev != prev {
                out.push(Violation::BrokenLink { node: r });
                break;
            }
            if n.marked {
                out.push(Violation::MarkedRoot { node: r });
            }
            if min != NIL && !pending.contains(&r) && self.silent_less(r, min) {
                out.push(Violation::MinNotMinimal);
            }
            reachable += self.audit_subtree(r, &mut out);
            prev = r;
            r = n.next;
        }
        if prev != self.root_tail {
            out.push(Violation::BrokenLink { node: prev });
        }
        if (min == NIL && self.len > pending.len())
            || (min != NIL && self.nodes[min as usize].entry.is_none())
        {
            out.push(Violation::MinNotMinimal);
        }
        if min != NIL && self.nodes[min as usize].parent != NIL {
            out.push(Violation::MinNotMinimal);
        }
        if reachable != self.len {
            out.push(Violation::CountMismatch {
                stored: self.len,
                reachable,
            });
        }
        if roots != self.roots {
            out.push(Violation::RootCountMismatch {
                stored: self.roots,
                actual: roots,
            });
        }
        out
    }

    /// Returns the subtree size of `x`.
    fn audit_subtree(&self, x: u32, out: &mut Vec<Violation>) -> usize {
        let mut size = 1usize;
        let mut actual = 0u32;
        let mut c = self.nodes[x as usize].first_child;
        let mut prev = NIL;
        while c != NIL {
            actual += 1;
            let n = &self.nodes[c as usize];
            if n.entry.is_none() || n.parent != x || n.prev != prev {
                out.push(Violation::BrokenLink { node: c });
                break;
            }
            if self.silent_less(c, x) {
                out.push(Violation::HeapOrder {
                    parent: x,
                    child: c,
                });
            }
            if (n.degree as i64) < actual as i64 - 2 {
                out.push(Violation::ChildDegree {
                    node: c,
                    position: actual,
                    degree: n.degree,
                });
            }
            size += self.audit_subtree(c, out);
            prev = c;
            c = n.next;
        }
        let n = &self.nodes[x as usize];
        if prev != n.last_child {
            out.push(Violation::BrokenLink { node: x });
        }
        if n.degree != actual {
            out.push(Violation::DegreeMismatch {
                node: x,
                stored: n.degree,
                actual,
            });
        }
        if (size as u64) < fibonacci(n.degree as u64 + 2) {
            out.push(Violation::SubtreeSize {
                node: x,
                degree: n.degree,
                size: size as u64,
            });
        }
        size
    }

    fn select_nodes(&mut self, k: usize) -> Vec<u32> {
        if k == 0 || self.len == 0 {
            self.last_stats = SelectionStats::default();
            return Vec::new();
        }
        if k >= self.len {
            self.last_stats = SelectionStats::default();
            return (0..self.nodes.len() as u32)
                .filter(|&i| self.nodes[i as usize].entry.is_some())
                .collect();
        }
        let (mut nodes, stats) = soft_select(&ForestView { heap: self }, k + 1);
        self.last_stats = stats;
        nodes.retain(|&x| x != DUMMY);
        nodes
    }

    fn remove_node(&mut self, x: u32) {
        let p = self.nodes[x as usize].parent;
        if p != NIL {
            self.cut(x);
            self.cascade(p);
        }
        self.promote_children(x);
        self.unlink_root(x);
        self.len -= 1;
    }

    fn alloc(&mut self, entry: Entry<K, V>) -> u32 {
        match self.free.pop() {
            Some(i) => {
                let gen = self.nodes[i as usize].gen;
                let mut node = Node::vacant(gen);
                node.entry = Some(entry);
                self.nodes[i as usize] = node;
                i
            }
            None => {
                let mut node = Node::vacant(0);
                node.entry = Some(entry);
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    fn release(&mut self, x: u32) -> Entry<K, V> {
        let n = &mut self.nodes[x as usize];
        let gen = n.gen.wrapping_add(1);
        let entry = n.entry.take().expect("live node");
        *n = Node::vacant(gen);
        self.free.push(x);
        entry
    }

    fn handle(&self, x: u32) -> Handle {
        Handle {
            heap: self.id,
            index: x,
            gen: self.nodes[x as usize].gen,
        }
    }

    fn resolve(&self, h: Handle) -> Result<u32, FibError> {
        if h.heap != self.id {
            return Err(FibError::StaleHandle);
        }
        match self.nodes.get(h.index as usize) {
            Some(n) if n.gen == h.gen && n.entry.is_some() => Ok(h.index),
            _ => Err(FibError::StaleHandle),
        }
    }

    fn entry(&self, x: u32) -> &Entry<K, V> {
        self.nodes[x as usize].entry.as_ref().expect("live node")
    }

    #[inline]
    /// The minimum root, after folding in the pending roots.
    fn min(&self) -> u32 {
        let mut pending = self.pending.borrow_mut();
        if !pending.is_empty() {
            let mut m = self.min.get();
            for (x, gen) in pending.drain(..) {
                let n = &self.nodes[x as usize];
                if n.gen != gen || n.entry.is_none() || n.parent != NIL {
                    continue;
                }
                if m == NIL || self.less(x, m) {
                    m = x;
                }
            }
            self.min.set(m);
        }
        self.min.get()
    }

    fn remove_root_and_consolidate(&mut self, x: u32) -> Entry<K, V> {
        self.promote_children(x);
        self.unlink_root(x);
        self.len -= 1;
        let entry = self.release(x);
        self.consolidate();
        entry
    }

    fn less(&self, a: u32, b: u32) -> bool {
        self.order.less(self.entry(a), self.entry(b))
    }

    fn silent_less(&self, a: u32, b: u32) -> bool {
        let ord = self.entry(a).cmp_silent(self.entry(b));
        match self.order.direction {
            Direction::Min => ord.is_lt(),
            Direction::Max => ord.is_gt(),
        }
    }

    fn push_root(&mut self, x: u32) {
        let n = &mut self.nodes[x as usize];
        n.prev = self.root_tail;
        n.next = NIL;
        n.parent = NIL;
        if self.root_tail == NIL {
            self.root_head = x;
        } else {
            self.nodes[self.root_tail as usize].next = x;
        }
        self.root_tail = x;
        self.roots += 1;
    }

    fn unlink_root(&mut self, x: u32) {
        let (prev, next) = {
            let n = &self.nodes[x as usize];
            (n.prev, n.next)
        };
        if prev == NIL {
            self.root_head = next;
        } else {
            self.nodes[prev as usize].next = next;
        }
        if next == NIL {
            self.root_tail = prev;
        } else {
            self.nodes[next as usize].prev = prev;
        }
        let n = &mut self.nodes[x as usize];
        n.prev = NIL;
        n.next = NIL;
        self.roots -= 1;
    }

    /// Moves all children of `x` to the root list, unmarked.
    fn promote_children(&mut self, x: u32) {
        let mut c = self.nodes[x as usize].first_child;
        while c != NIL {
            let next = self.nodes[c as usize].next;
            self.nodes[c as usize].marked = false;
            self.push_root(c);
            c = next;
        }
        let n = &mut self.nodes[x as usize];
        n.first_child = NIL;
        n.last_child = NIL;
        n.degree = 0;
    }

    /// Detaches `x` from its parent and makes it an unmarked root.
    fn cut(&mut self, x: u32) {
        let (p, prev, next) = {
            let n = &self.nodes[x as usize];
            (n.parent, n.prev, n.next)
        };
        if prev == NIL {
            self.nodes[p as usize].first_child = next;
        } else {
            self.nodes[prev as usize].next = next;
        }
        if next == NIL {
            self.nodes[p as usize].last_child = prev;
        } else {
            self.nodes[next as usize].prev = prev;
        }
        self.nodes[p as usize].degree -= 1;
        self.nodes[x as usize].marked = false;
        self.push_root(x);
    }

    fn cascade(&mut self, mut p: u32) {
        loop {
            let n = &self.nodes[p as usize];
            if n.parent == NIL {
                return;
            }
            if !n.marked {
                self.nodes[p as usize].marked = true;
                return;
            }
            let up = n.parent;
            self.cut(p);
            p = up;
        }
    }

    /// Appends `child` as the newest child of `parent`.
    fn link(&mut self, child: u32, parent: u32) {
        let tail = self.nodes[parent as usize].last_child;
        {
            let c = &mut self.nodes[child as usize];
            c.parent = parent;
            c.marked = false;
            c.prev = tail;
            c.next = NIL;
        }
        if tail == NIL {
            self.nodes[parent as usize].first_child = child;
        } else {
            self.nodes[tail as usize].next = child;
        }
        let p = &mut self.nodes[parent as usize];
        p.last_child = child;
        p.degree += 1;
    }

    /// Links roots of equal degree until all degrees differ, then finds the
    /// new minimum.
    fn consolidate(&mut self) {
        let mut by_degree: Vec<u32> = Vec::new();
        let mut r = self.root_head;
        self.root_head = NIL;
        self.root_tail = NIL;
        self.roots = 0;
        while r != NIL {
            let next = self.nodes[r as usize].next;
            let mut x = r;
            let mut d = self.nodes[x as usize].degree as usize;
            loop {
                if d >= by_degree.len() {
                    by_degree.resize(d + 1, NIL);
                }
                let y = by_degree[d];
                if y == NIL {
                    break;
                }
                by_degree[d] = NIL;
                let (top, below) = if self.less(y, x) { (y, x) } else { (x, y) };
                self.link(below, top);
                x = top;
                d += 1;
            }
            by_degree[d] = x;
            r = next;
        }
        let mut m = NIL;
        for x in by_degree.into_iter().filter(|&x| x != NIL) {
            self.push_root(x);
            if m == NIL || self.less(x, m) {
                m = x;
            }
        }
        self.min.set(m);
        self.pending.get_mut().clear();
    }
}

struct ForestView<'a, K, V> {
    heap: &'a FibHeap<K, V>,
}

impl<K: Ord, V> TreeView for ForestView<'_, K, V> {
    type Node = u32;

    fn root(&self) -> Option<u32> {
        Some(DUMMY)
    }

    fn children(&self, node: u32, out: &mut Vec<u32>) {
        let mut c = if node == DUMMY {
            self.heap.root_head
        } else {
            self.heap.nodes[node as usize].first_child
        };
        while c != NIL {
            out.push(c);
            c = self.heap.nodes[c as usize].next;
        }
    }

    fn precedes(&self, a: u32, b: u32) -> bool {
        if a == DUMMY {
            return true;
        }
        if b == DUMMY {
            return false;
        }
        self.heap.less(a, b)
    }

    fn size_hint(&self) -> Option<usize> {
        Some(self.heap.len + 1)
    }
}

pub(crate) fn log2_floor(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        (usize::BITS - 1 - n.leading_zeros()) as usize
    }
}

/// `F_0 = 0, F_1 = 1`, saturating.
pub fn fibonacci(n: u64) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..n {
        let c = a.saturating_add(b);
        a = b;
        b = c;
    }
    a
}
