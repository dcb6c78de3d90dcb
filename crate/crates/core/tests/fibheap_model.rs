use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use lazydict::fibheap::{FibHeap, Handle};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum Op {
    Push(i32),
    Pop,
    Decrease(usize, i32),
    Delete(usize),
    DeleteMulti(Vec<usize>),
    ExtractK(usize),
    SelectK(usize),
    Meld(Vec<i32>),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (-500..500i32).prop_map(Op::Push),
        1 => Just(Op::Pop),
        2 => (any::<usize>(), 1..200i32).prop_map(|(i, d)| Op::Decrease(i, d)),
        1 => any::<usize>().prop_map(Op::Delete),
        1 => prop::collection::vec(any::<usize>(), 1..6).prop_map(Op::DeleteMulti),
        1 => (0..12usize).prop_map(Op::ExtractK),
        1 => (0..12usize).prop_map(Op::SelectK),
        1 => prop::collection::vec(-500..500i32, 0..20).prop_map(Op::Meld),
    ]
}

/// Live handles with the `(key, seq)` the model expects for each.
struct Tracked {
    handles: Vec<Handle>,
    model: BTreeSet<(i32, u64)>,
}

impl Tracked {
    fn pick(&self, heap: &FibHeap<i32>, i: usize) -> Option<Handle> {
        let live: Vec<Handle> = self
            .handles
            .iter()
            .copied()
            .filter(|&h| heap.contains(h))
            .collect();
        (!live.is_empty()).then(|| live[i % live.len()])
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_ordered_set(ops in prop::collection::vec(op(), 1..300)) {
        let mut heap: FibHeap<i32> = FibHeap::new();
        let mut t = Tracked { handles: Vec::new(), model: BTreeSet::new() };
        for op in ops {
            match op {
                Op::Push(k) => {
                    let h = heap.push(k, ());
                    t.model.insert((k, heap.get(h).unwrap().seq));
                    t.handles.push(h);
                }
                Op::Pop => match heap.extract_min() {
                    Ok(e) => prop_assert_eq!(t.model.pop_first(), Some((e.key, e.seq))),
                    Err(_) => prop_assert!(t.model.is_empty()),
                },
                Op::Decrease(i, d) => {
                    if let Some(h) = t.pick(&heap, i) {
                        let e = heap.get(h).unwrap();
                        let (old, seq) = (e.key, e.seq);
                        heap.decrease_key(h, old - d).unwrap();
                        t.model.remove(&(old, seq));
                        t.model.insert((old - d, seq));
                    }
                }
                Op::Delete(i) => {
                    if let Some(h) = t.pick(&heap, i) {
                        let e = heap.delete(h).unwrap();
                        prop_assert!(t.model.remove(&(e.key, e.seq)));
                    }
                }
                Op::DeleteMulti(is) => {
                    let mut hs: Vec<Handle> = is.iter().filter_map(|&i| t.pick(&heap, i)).collect();
                    hs.sort_by_key(|h| heap.get(*h).unwrap().seq);
                    hs.dedup();
                    for e in heap.delete_multi(&hs).unwrap() {
                        prop_assert!(t.model.remove(&(e.key, e.seq)));
                    }
                }
                Op::ExtractK(k) => {
                    let mut got: Vec<(i32, u64)> = heap.extract_k(k).into_iter().map(|e| (e.key, e.seq)).collect();
                    got.sort();
                    let want: Vec<(i32, u64)> = (0..k.min(t.model.len())).filter_map(|_| t.model.pop_first()).collect();
                    prop_assert_eq!(got, want);
                }
                Op::SelectK(k) => {
                    let mut got: Vec<(i32, u64)> = heap.select_k(k).into_iter().map(|e| (e.key, e.seq)).collect();
                    got.sort();
                    let want: Vec<(i32, u64)> = t.model.iter().take(k).copied().collect();
                    prop_assert_eq!(got, want);
                }
                Op::Meld(keys) => {
                    let mut other: FibHeap<i32> = FibHeap::new();
                    let hs: Vec<Handle> = keys.iter().map(|&k| other.push(k, ())).collect();
                    let (merged, remap) = std::mem::take(&mut heap).merge(other).unwrap();
                    heap = merged;
                    t.handles = t.handles.iter().chain(&hs).map(|&h| remap.translate(h)).collect();
                    for h in &hs {
                        let e = heap.get(remap.translate(*h)).unwrap();
                        t.model.insert((e.key, e.seq));
                    }
                }
            }
            prop_assert_eq!(heap.len(), t.model.len());
            let v = heap.validate();
            prop_assert!(v.is_empty(), "{:?}", v);
        }
        let mut rest = Vec::new();
        while let Ok(e) = heap.extract_min() {
            rest.push((e.key, e.seq));
        }
        prop_assert_eq!(rest, t.model.into_iter().collect::<Vec<_>>());
    }
}

fn random_graph(n: usize, m: usize, seed: u64) -> Vec<Vec<(usize, u64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![Vec::new(); n];
    for v in 1..n {
        // a random spanning tree keeps every vertex reachable
        adj[rng.gen_range(0..v)].push((v, rng.gen_range(1..1000)));
    }
    for _ in n - 1..m {
        adj[rng.gen_range(0..n)].push((rng.gen_range(0..n), rng.gen_range(1..1000)));
    }
    adj
}

fn dijkstra_fib(adj: &[Vec<(usize, u64)>]) -> Vec<u64> {
    let mut dist = vec![u64::MAX; adj.len()];
    let mut handle: Vec<Option<Handle>> = vec![None; adj.len()];
    let mut heap: FibHeap<u64, usize> = FibHeap::new();
    dist[0] = 0;
    handle[0] = Some(heap.push(0, 0));
    while let Ok(e) = heap.extract_min() {
        let u = e.payload;
        handle[u] = None;
        for &(v, w) in &adj[u] {
            let d = e.key + w;
            if d < dist[v] {
                dist[v] = d;
                match handle[v] {
                    Some(h) => heap.decrease_key(h, d).unwrap(),
                    None => handle[v] = Some(heap.push(d, v)),
                }
            }
        }
    }
    dist
}

fn dijkstra_binary(adj: &[Vec<(usize, u64)>]) -> Vec<u64> {
    let mut dist = vec![u64::MAX; adj.len()];
    let mut q = BinaryHeap::from([Reverse((0u64, 0usize))]);
    dist[0] = 0;
    while let Some(Reverse((d, u))) = q.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            if d + w < dist[v] {
                dist[v] = d + w;
                q.push(Reverse((d + w, v)));
            }
        }
    }
    dist
}

#[test]
fn shortest_paths_agree_with_binary_heap() {
    for seed in 0..5 {
        let adj = random_graph(3000, 20_000, seed);
        assert_eq!(dijkstra_fib(&adj), dijkstra_binary(&adj), "seed {seed}");
    }
}

#[test]
fn delete_multi_hundred_of_ten_thousand() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut heap: FibHeap<i64, usize> = FibHeap::new();
    let keys: Vec<i64> = (0..10_000).map(|_| rng.gen_range(0..1_000_000)).collect();
    let hs: Vec<Handle> = keys
        .iter()
        .enumerate()
        .map(|(i, &k)| heap.push(k, i))
        .collect();
    // give the forest some shape before deleting
    let mut gone: BTreeSet<usize> = heap.extract_k(50).into_iter().map(|e| e.payload).collect();
    let live: Vec<Handle> = hs.iter().copied().filter(|&h| heap.contains(h)).collect();
    let doomed: Vec<Handle> = live.choose_multiple(&mut rng, 100).copied().collect();
    let removed = heap.delete_multi(&doomed).unwrap();
    assert_eq!(removed.len(), 100);
    assert!(heap.validate().is_empty());
    gone.extend(removed.iter().map(|e| e.payload));
    let mut want: Vec<i64> = (0..keys.len())
        .filter(|i| !gone.contains(i))
        .map(|i| keys[i])
        .collect();
    want.sort_unstable();
    let mut got = Vec::new();
    while let Ok(e) = heap.extract_min() {
        got.push(e.key);
    }
    assert_eq!(got, want);
}
