//! k-smallest selection.
//!
//! [`soft_select`] selects from any heap-ordered tree exposed through
//! [`TreeView`]. It drives a soft heap with `epsilon = 1/6`: extract `k - 1`
//! times, and after each extraction expand every newly corrupted entry (plus
//! the extracted one when it was clean) by inserting its children into both
//! the heap and the candidate set. A final linear-time selection over the
//! candidates yields the answer.
//!
//! Children of an expanded node are first heapified into an implicit binary
//! heap; only that heap's root is offered to the soft heap, and each offered
//! node in turn exposes its two heap children. The soft heap therefore sees a
//! tree of degree at most three, which keeps insertions, and with them the
//! corruption budget, proportional to the number of expanded nodes.

use std::collections::HashSet;
use std::hash::Hash;

use crate::order::{Counter, Entry};
use crate::softheap::SoftHeap;

/// Corruption parameter used by [`soft_select`].
pub const SELECT_EPSILON: f64 = 1.0 / 6.0;

/// Read-only access to a heap-ordered tree.
///
/// `children` must be repeatable and side-effect free for the duration of a
/// selection, and `precedes(parent, child)` must hold for every edge.
pub trait TreeView {
    type Node: Copy + Eq + Hash;

    fn root(&self) -> Option<Self::Node>;

    /// Appends the children of `node` to `out`.
    fn children(&self, node: Self::Node, out: &mut Vec<Self::Node>);

    /// Strict order; each call counts as one comparison.
    fn precedes(&self, a: Self::Node, b: Self::Node) -> bool;

    /// Total node count, when cheaply known.
    fn size_hint(&self) -> Option<usize> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelectionStats {
    /// Nodes whose children were offered to the soft heap.
    pub expanded_nodes: usize,
    /// Sum of the tree degrees of the expanded nodes.
    pub degree_sum: usize,
    /// Corruption events reported by the soft heap.
    pub corruption_events: usize,
    /// Size of the candidate set handed to the final selection.
    pub candidates: usize,
}

#[derive(Clone, Copy)]
struct Cand<N> {
    node: N,
    group: u32,
    idx: u32,
}

/// Returns the `min(k, size)` smallest nodes of the tree, in no particular
/// order, together with expansion statistics. The tree is not modified.
pub fn soft_select<T: TreeView>(view: &T, k: usize) -> (Vec<T::Node>, SelectionStats) {
    let mut stats = SelectionStats::default();
    let Some(root) = view.root() else {
        return (Vec::new(), stats);
    };
    if k == 0 {
        return (Vec::new(), stats);
    }
    if view.size_hint().is_some_and(|n| k >= n) {
        return (collect_all(view, root, &mut stats), stats);
    }

    let less = |a: &Cand<T::Node>, b: &Cand<T::Node>| view.precedes(a.node, b.node);
    let mut heap = SoftHeap::new(SELECT_EPSILON, less).expect("valid epsilon");
    let mut groups: Vec<Vec<T::Node>> = vec![vec![root]];
    let mut visited: HashSet<T::Node> = HashSet::new();
    visited.insert(root);
    let first = Cand {
        node: root,
        group: 0,
        idx: 0,
    };
    let mut candidates = vec![first];
    heap.insert(first);

    let mut buf = Vec::new();
    for _ in 1..k {
        let Ok(out) = heap.extract_min() else { break };
        stats.corruption_events += out.newly_corrupted.len();
        let mut expand = out.newly_corrupted;
        if !out.corrupted {
            expand.push(out.item);
        }
        for c in expand {
            stats.expanded_nodes += 1;
            let group = &groups[c.group as usize];
            for j in [2 * c.idx as usize + 1, 2 * c.idx as usize + 2] {
                if j < group.len() {
                    let cand = Cand {
                        node: group[j],
                        group: c.group,
                        idx: j as u32,
                    };
                    heap.insert(cand);
                    candidates.push(cand);
                }
            }
            buf.clear();
            view.children(c.node, &mut buf);
            stats.degree_sum += buf.len();
            buf.retain(|n| visited.insert(*n));
            if !buf.is_empty() {
                heapify(&mut buf, |a, b| view.precedes(*a, *b));
                let cand = Cand {
                    node: buf[0],
                    group: groups.len() as u32,
                    idx: 0,
                };
                groups.push(std::mem::take(&mut buf));
                heap.insert(cand);
                candidates.push(cand);
            }
        }
    }

    stats.candidates = candidates.len();
    let mut nodes: Vec<T::Node> = candidates.into_iter().map(|c| c.node).collect();
    let k = k.min(nodes.len());
    partition_at(&mut nodes, k, &|a, b| view.precedes(*a, *b));
    nodes.truncate(k);
    (nodes, stats)
}

fn collect_all<T: TreeView>(view: &T, root: T::Node, stats: &mut SelectionStats) -> Vec<T::Node> {
    let mut out = Vec::new();
    let mut stack = vec![root];
    let mut seen = HashSet::new();
    seen.insert(root);
    let mut buf = Vec::new();
    while let Some(x) = stack.pop() {
        out.push(x);
        buf.clear();
        view.children(x, &mut buf);
        if !buf.is_empty() {
            stats.expanded_nodes += 1;
            stats.degree_sum += buf.len();
        }
        stack.extend(buf.iter().copied().filter(|n| seen.insert(*n)));
    }
    stats.candidates = out.len();
    out
}

/// Sum of tree degrees over `nodes`: the quantity whose maximum over
/// root-containing subtrees of a given size bounds selection cost.
pub fn degree_sum<T: TreeView>(view: &T, nodes: &[T::Node]) -> usize {
    let mut buf = Vec::new();
    nodes
        .iter()
        .map(|&n| {
            buf.clear();
            view.children(n, &mut buf);
            buf.len()
        })
        .sum()
}

/// Floyd's bottom-up heap construction: linear comparisons.
fn heapify<T>(v: &mut [T], less: impl Fn(&T, &T) -> bool) {
    let n = v.len();
    for start in (0..n / 2).rev() {
        let mut i = start;
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let m = if r < n && less(&v[r], &v[l]) { r } else { l };
            if less(&v[m], &v[i]) {
                v.swap(m, i);
                i = m;
            } else {
                break;
            }
        }
    }
}

/// Returns the `min(k, len)` smallest items of `items`, in no particular
/// order, using deterministic linear-time selection.
pub fn select_k_of_sequence<T>(
    mut items: Vec<T>,
    k: usize,
    less: impl Fn(&T, &T) -> bool,
) -> Vec<T> {
    if k >= items.len() {
        return items;
    }
    partition_at(&mut items, k, &less);
    items.truncate(k);
    items
}

/// Rearranges `v` so that `v[..k]` holds its `k` smallest items and, when
/// `k >= 1`, `v[k - 1]` is the largest of them. Median-of-medians pivoting
/// keeps the comparison count linear in the worst case.
pub fn partition_at<T>(v: &mut [T], k: usize, less: &impl Fn(&T, &T) -> bool) {
    if k == 0 || k >= v.len() {
        if k == v.len() && k > 0 {
            // only the max needs to move into place
            let mut best = 0;
            for i in 1..v.len() {
                if less(&v[best], &v[i]) {
                    best = i;
                }
            }
            let last = v.len() - 1;
            v.swap(best, last);
        }
        return;
    }
    let mut lo = 0;
    let mut hi = v.len();
    let target = k - 1;
    loop {
        let len = hi - lo;
        if len <= 5 {
            insertion_sort(&mut v[lo..hi], less);
            return;
        }
        let p = lo + pivot_index(&mut v[lo..hi], less);
        let p = lo + partition(&mut v[lo..hi], p - lo, less);
        match target.cmp(&p) {
            std::cmp::Ordering::Equal => return,
            std::cmp::Ordering::Less => hi = p,
            std::cmp::Ordering::Greater => lo = p + 1,
        }
    }
}

fn insertion_sort<T>(v: &mut [T], less: &impl Fn(&T, &T) -> bool) {
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && less(&v[j], &v[j - 1]) {
            v.swap(j, j - 1);
            j -= 1;
        }
    }
}

/// Gathers group-of-five medians at the front and selects their median.
fn pivot_index<T>(v: &mut [T], less: &impl Fn(&T, &T) -> bool) -> usize {
    let groups = v.len() / 5;
    for g in 0..groups {
        let s = g * 5;
        insertion_sort(&mut v[s..s + 5], less);
        v.swap(g, s + 2);
    }
    if groups <= 1 {
        return 0;
    }
    let mid = groups / 2 + 1;
    partition_at(&mut v[..groups], mid, less);
    mid - 1
}

/// Lomuto partition around `v[p]`; returns the pivot's final index.
fn partition<T>(v: &mut [T], p: usize, less: &impl Fn(&T, &T) -> bool) -> usize {
    let last = v.len() - 1;
    v.swap(p, last);
    let mut store = 0;
    for j in 0..last {
        let (head, tail) = v.split_at_mut(last);
        if less(&head[j], &tail[0]) {
            head.swap(j, store);
            store += 1;
        }
    }
    v.swap(store, last);
    store
}

/// Heap-ordered tree stored as adjacency lists, with counted comparisons.
/// Handy for tests and for benchmarking selection in isolation.
#[derive(Debug, Clone)]
pub struct VecTree<K> {
    pub entries: Vec<Entry<K>>,
    pub children: Vec<Vec<usize>>,
    pub counter: Counter,
}

impl<K: Ord> VecTree<K> {
    /// `parents[i]` is the parent of node `i` (`None` only for node 0).
    pub fn from_parents(entries: Vec<Entry<K>>, parents: &[Option<usize>]) -> Self {
        let mut children = vec![Vec::new(); entries.len()];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        VecTree {
            entries,
            children,
            counter: Counter::new(),
        }
    }

    /// True when every edge respects the order.
    pub fn is_heap_ordered(&self) -> bool {
        self.children.iter().enumerate().all(|(p, cs)| {
            cs.iter()
                .all(|&c| self.entries[p].cmp_silent(&self.entries[c]).is_lt())
        })
    }
}

impl<K: Ord> TreeView for VecTree<K> {
    type Node = usize;

    fn root(&self) -> Option<usize> {
        (!self.entries.is_empty()).then_some(0)
    }

    fn children(&self, node: usize, out: &mut Vec<usize>) {
        out.extend_from_slice(&self.children[node]);
    }

    fn precedes(&self, a: usize, b: usize) -> bool {
        crate::order::compare(&self.entries[a], &self.entries[b], &self.counter).is_lt()
    }

    fn size_hint(&self) -> Option<usize> {
        Some(self.entries.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn by_key(a: &i64, b: &i64) -> bool {
        a < b
    }

    fn sorted(mut v: Vec<i64>) -> Vec<i64> {
        v.sort();
        v
    }

    #[test]
    fn sequence_examples() {
        assert_eq!(
            sorted(select_k_of_sequence(vec![9, 1, 5, 3], 2, by_key)),
            vec![1, 3]
        );
        assert_eq!(
            sorted(select_k_of_sequence(vec![9, 1, 5, 3], 4, by_key)),
            vec![1, 3, 5, 9]
        );
        assert!(select_k_of_sequence(vec![9, 1, 5, 3], 0, by_key).is_empty());
    }

    #[test]
    fn partition_puts_max_of_prefix_last() {
        let mut v: Vec<i64> = (0..200).map(|i| (i * 7919) % 211).collect();
        for k in [1, 2, 37, 100, 199, 200] {
            partition_at(&mut v, k, &by_key);
            let max = *v[..k].iter().max().unwrap();
            assert_eq!(v[k - 1], max);
            if k < v.len() {
                assert!(v[k..].iter().all(|x| *x > max));
            }
        }
    }

    #[test]
    fn linear_comparison_count() {
        let n = 20_000usize;
        let mut v: Vec<i64> = (0..n as i64).map(|i| (i * 104_729) % 20_011).collect();
        let count = std::cell::Cell::new(0u64);
        partition_at(&mut v, n / 2, &|a: &i64, b: &i64| {
            count.set(count.get() + 1);
            a < b
        });
        assert!(count.get() < 30 * n as u64, "{} comparisons", count.get());
    }

    fn path(n: usize) -> VecTree<i64> {
        let entries = (1..=n as i64).map(|k| Entry::new(k, ())).collect();
        let parents: Vec<Option<usize>> = (0..n).map(|i| i.checked_sub(1)).collect();
        VecTree::from_parents(entries, &parents)
    }

    fn keys(t: &VecTree<i64>, nodes: &[usize]) -> Vec<i64> {
        sorted(nodes.iter().map(|&n| t.entries[n].key).collect())
    }

    #[test]
    fn chain() {
        let t = path(3);
        let (got, _) = soft_select(&t, 2);
        assert_eq!(keys(&t, &got), vec![1, 2]);
    }

    #[test]
    fn k_zero_and_k_large() {
        let t = path(5);
        assert!(soft_select(&t, 0).0.is_empty());
        assert_eq!(keys(&t, &soft_select(&t, 9).0), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn empty_tree() {
        let t = VecTree::<i64>::from_parents(Vec::new(), &[]);
        assert!(soft_select(&t, 3).0.is_empty());
    }

    /// Complete d-ary tree in BFS order with keys increasing by index.
    fn dary(d: usize, depth: u32) -> VecTree<i64> {
        let n: usize = (0..=depth).map(|i| d.pow(i)).sum();
        let entries = (0..n as i64).map(|k| Entry::new(k, ())).collect();
        let parents: Vec<Option<usize>> = (0..n).map(|i| i.checked_sub(1).map(|j| j / d)).collect();
        VecTree::from_parents(entries, &parents)
    }

    #[test]
    fn dary_degree_sum_bound() {
        let t = dary(4, 4);
        for k in 1..t.entries.len() {
            let (got, stats) = soft_select(&t, k);
            assert_eq!(got.len(), k);
            assert!(stats.degree_sum <= 12 * k, "k={k} {stats:?}");
            assert!(stats.expanded_nodes <= 3 * k);
        }
    }

    #[test]
    fn depth_degree_tree_path() {
        // depth-i nodes have i + 2 children; the root path carries the
        // smallest keys so the k smallest form a path.
        let depth = 7usize;
        let mut entries = Vec::new();
        let mut parents = Vec::new();
        let mut frontier = vec![(0usize, 0usize)];
        entries.push(Entry::with_seq(0i64, 1, ()));
        parents.push(None);
        let mut path_nodes = vec![0usize];
        while let Some((node, d)) = frontier.pop() {
            if d == depth {
                continue;
            }
            let on_path = path_nodes.last() == Some(&node);
            for c in 0..d + 2 {
                let id = entries.len();
                let key = if on_path && c == 0 {
                    d as i64 + 1
                } else {
                    1000 + id as i64
                };
                entries.push(Entry::with_seq(key, id as u64 + 1, ()));
                parents.push(Some(node));
                if on_path && c == 0 {
                    path_nodes.push(id);
                }
                frontier.push((id, d + 1));
            }
        }
        let t = VecTree::from_parents(entries, &parents);
        assert!(t.is_heap_ordered());
        for k in 1..=depth {
            let (got, _) = soft_select(&t, k);
            assert_eq!(
                sorted(got.clone().into_iter().map(|n| n as i64).collect()).len(),
                k
            );
            assert_eq!(keys(&t, &got), (0..k as i64).collect::<Vec<_>>());
            assert_eq!(degree_sum(&t, &got), k * (k + 3) / 2);
        }
    }

    fn random_tree(keys: &[i64], shape: &[usize]) -> VecTree<i64> {
        // node i attaches below an earlier node; keys sorted so that order holds
        let mut ks = keys.to_vec();
        ks.sort();
        let entries: Vec<Entry<i64>> = ks.iter().map(|&k| Entry::new(k, ())).collect();
        let parents: Vec<Option<usize>> = (0..entries.len())
            .map(|i| if i == 0 { None } else { Some(shape[i] % i) })
            .collect();
        VecTree::from_parents(entries, &parents)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_flatten_and_sort(
            keys in proptest::collection::vec(-50i64..50, 1..200),
            shape in proptest::collection::vec(0usize..1000, 200),
            k in 0usize..220,
        ) {
            let t = random_tree(&keys, &shape);
            let (got, stats) = soft_select(&t, k);
            let mut want: Vec<usize> = (0..t.entries.len()).collect();
            want.sort_by(|a, b| t.entries[*a].cmp_silent(&t.entries[*b]));
            want.truncate(k);
            let mut got_sorted = got.clone();
            got_sorted.sort_by(|a, b| t.entries[*a].cmp_silent(&t.entries[*b]));
            prop_assert_eq!(got_sorted, want);
            prop_assert!(stats.expanded_nodes <= 3 * k.max(1));
            // purity: a second run gives the same set
            let (again, _) = soft_select(&t, k);
            let mut a = again; a.sort();
            let mut b = got; b.sort();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn sequence_matches_sort(v in proptest::collection::vec(-1000i64..1000, 0..300), k in 0usize..320) {
            let got = sorted(select_k_of_sequence(v.clone(), k, by_key));
            let mut want = sorted(v);
            want.truncate(k);
            prop_assert_eq!(got, want);
        }
    }
}
