//! Long random runs of the lazy search tree against a sorted vector.

use lazydict::lst::{ElemId, Lst, LstError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(key, seq)` in sorted order; the payload is the slot in `ids`.
type Oracle = Vec<(i64, u64, usize)>;

fn run(steps: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = steps as i64 * 2;
    let mut t: Lst<i64, usize> = Lst::new();
    let mut o: Oracle = Vec::new();
    let mut ids: Vec<Option<ElemId>> = Vec::new();
    for step in 0..steps {
        let roll = rng.gen_range(0..100);
        if o.is_empty() || roll < 40 {
            let key = rng.gen_range(0..span);
            let id = t.insert(key, ids.len());
            let seq = t.get(id).unwrap().seq;
            let at = o.partition_point(|e| (e.0, e.1) < (key, seq));
            o.insert(at, (key, seq, ids.len()));
            ids.push(Some(id));
        } else if roll < 55 {
            let i = rng.gen_range(0..o.len());
            let (_, _, slot) = o.remove(i);
            let e = t.delete(ids[slot].take().unwrap()).unwrap();
            assert_eq!(e.payload, slot, "step {step}");
        } else if roll < 70 {
            let i = rng.gen_range(0..o.len());
            let (old, seq, slot) = o[i];
            let id = ids[slot].unwrap();
            // mostly small moves, which usually stay inside the gap
            let key = if rng.gen_bool(0.8) {
                old + rng.gen_range(-3..=3)
            } else {
                rng.gen_range(0..span)
            };
            match t.change_key(id, key) {
                Ok(()) => {}
                Err(LstError::OutOfGap) => {
                    assert_eq!(
                        t.get(id).unwrap().key,
                        old,
                        "step {step}: rejected change must not stick"
                    );
                    t.delete(id).unwrap();
                    let id = t.insert(key, slot);
                    ids[slot] = Some(id);
                    let new_seq = t.get(id).unwrap().seq;
                    o.remove(i);
                    let at = o.partition_point(|e| (e.0, e.1) < (key, new_seq));
                    o.insert(at, (key, new_seq, slot));
                    continue;
                }
                Err(e) => panic!("step {step}: {e}"),
            }
            o.remove(i);
            let at = o.partition_point(|e| (e.0, e.1) < (key, seq));
            o.insert(at, (key, seq, slot));
        } else if roll < 85 {
            let r = rng.gen_range(1..=o.len());
            let e = t.query_by_rank(r).unwrap();
            assert_eq!(
                (e.key, e.seq),
                (o[r - 1].0, o[r - 1].1),
                "step {step}: rank {r}"
            );
        } else if roll < 95 {
            let key = rng.gen_range(-1..=span);
            let a = t.query_by_key(&key);
            let below = o.partition_point(|e| e.0 < key);
            let contains = o.get(below).is_some_and(|e| e.0 == key);
            assert_eq!(a.rank, below + contains as usize, "step {step}: key {key}");
            assert_eq!(a.contains, contains);
            assert_eq!(a.pred.map(|e| e.seq), below.checked_sub(1).map(|i| o[i].1));
            assert_eq!(a.succ.map(|e| e.seq), o.get(below).map(|e| e.1));
        } else {
            let r = rng.gen_range(0..=o.len());
            let right = t.split_off(r).unwrap();
            assert_eq!((t.len(), right.len()), (r, o.len() - r), "step {step}");
            if r > 0 {
                let e = t.query_by_rank(r).unwrap();
                assert_eq!(e.seq, o[r - 1].1);
            }
            t = t.merge(right);
        }
        if step % 512 == 0 {
            let v = t.validate();
            assert!(v.is_empty(), "step {step}: {v:?}");
        }
    }
    assert!(t.validate().is_empty());
    let got: Vec<(i64, u64)> = t.in_order().iter().map(|e| (e.key, e.seq)).collect();
    let want: Vec<(i64, u64)> = o.iter().map(|e| (e.0, e.1)).collect();
    assert_eq!(got, want);
    for (i, &(key, seq, slot)) in o.iter().enumerate().step_by(97) {
        assert_eq!(
            t.get(ids[slot].unwrap()).map(|e| (e.key, e.seq)),
            Some((key, seq))
        );
        let e = t.query_by_rank(i + 1).unwrap();
        assert_eq!((e.key, e.seq), (key, seq));
    }
    assert!(t.validate().is_empty());
}

#[test]
fn long_mixed_run() {
    run(60_000, 1);
}

#[test]
fn several_medium_runs() {
    for seed in 2..8 {
        run(8_000, seed);
    }
}

#[test]
fn sorted_and_reversed_inserts() {
    for keys in [
        (0..20_000).collect::<Vec<i64>>(),
        (0..20_000).rev().collect(),
    ] {
        let mut t: Lst<i64> = Lst::new();
        for &k in &keys {
            t.insert(k, ());
            if k % 97 == 0 {
                t.query_by_rank(t.len().div_ceil(2)).unwrap();
            }
        }
        assert!(t.validate().is_empty());
        for r in (1..=20_000).step_by(331) {
            assert_eq!(t.query_by_rank(r).unwrap().key, r as i64 - 1);
        }
        assert!(t.validate().is_empty());
    }
}
