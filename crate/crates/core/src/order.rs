//! Totally ordered entries and the instrumented comparator.
//!
//! Every key-vs-key comparison made by the heaps, the selection routines and
//! the lazy search tree goes through [`compare`] (or a [`Comparator`] built on
//! top of it), so a structure's [`Counter`] is an exact tally of the
//! comparisons it has performed.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

static NEXT_SEQ: AtomicU64 = AtomicU64::new(1);

/// Allocates a fresh sequence number.
///
/// Sequence numbers start at 1 and are unique for the lifetime of the
/// process, so entries built by independent structures can later be merged
/// without their tie-breakers colliding. Zero is reserved for probes.
pub fn next_seq() -> u64 {
    NEXT_SEQ.fetch_add(1, AtomicOrdering::Relaxed)
}

/// An element: user key, tie-breaking sequence number and opaque payload.
///
/// The derived order is `(key, seq)`, which is strict because `seq` is unique.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Entry<K, V = ()> {
    pub key: K,
    pub seq: u64,
    pub payload: V,
}

impl<K, V> Entry<K, V> {
    /// Builds an entry with a freshly allocated sequence number.
    pub fn new(key: K, payload: V) -> Self {
        Entry {
            key,
            seq: next_seq(),
            payload,
        }
    }

    pub fn with_seq(key: K, seq: u64, payload: V) -> Self {
        Entry { key, seq, payload }
    }
}

impl<K: Ord, V> Entry<K, V> {
    /// Uncounted comparison, for audits and oracles only.
    pub fn cmp_silent(&self, other: &Self) -> Ordering {
        self.key
            .cmp(&other.key)
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Shared tally of key comparisons.
///
/// One counter belongs to one top-level structure; the heaps living inside a
/// lazy search tree hold clones of the tree's counter.
#[derive(Clone, Debug, Default)]
pub struct Counter(Arc<AtomicU64>);

impl Counter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn bump(&self) {
        self.0.fetch_add(1, AtomicOrdering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(AtomicOrdering::Relaxed)
    }

    /// Returns the current tally and resets it to zero.
    pub fn snapshot_and_reset(&self) -> u64 {
        self.0.swap(0, AtomicOrdering::Relaxed)
    }

    /// True when both handles point at the same tally.
    pub fn same_as(&self, other: &Counter) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// Lexicographic `(key, seq)` comparison. Increments `counter` by one and
/// never returns `Equal` for distinct entries.
#[inline]
pub fn compare<K: Ord, V>(a: &Entry<K, V>, b: &Entry<K, V>, counter: &Counter) -> Ordering {
    counter.bump();
    a.cmp_silent(b)
}

/// Strict "comes first" relation used by the heap-like structures.
pub trait Comparator<T> {
    fn less(&self, a: &T, b: &T) -> bool;
}

/// Which end of the order a heap keeps at its top.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Min,
    Max,
}

/// Counted entry order, optionally reversed.
#[derive(Clone, Debug)]
pub struct EntryOrder {
    pub counter: Counter,
    pub direction: Direction,
}

impl EntryOrder {
    pub fn min(counter: Counter) -> Self {
        EntryOrder {
            counter,
            direction: Direction::Min,
        }
    }

    pub fn max(counter: Counter) -> Self {
        EntryOrder {
            counter,
            direction: Direction::Max,
        }
    }
}

impl<K: Ord, V> Comparator<Entry<K, V>> for EntryOrder {
    #[inline]
    fn less(&self, a: &Entry<K, V>, b: &Entry<K, V>) -> bool {
        let ord = compare(a, b, &self.counter);
        match self.direction {
            Direction::Min => ord == Ordering::Less,
            Direction::Max => ord == Ordering::Greater,
        }
    }
}

impl<T, F: Fn(&T, &T) -> bool> Comparator<T> for F {
    fn less(&self, a: &T, b: &T) -> bool {
        self(a, b)
    }
}
