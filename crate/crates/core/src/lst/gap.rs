//! Interval structures holding the entries of one gap.

use crate::fibheap::{FibHeap, Handle};
use crate::order::{compare, Counter, Direction, Entry};
use crate::select::partition_at;

use super::directory::Sep;

/// Which boundaries of a gap have been touched by queries, and therefore
/// which structure holds its entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sidedness {
    /// Unsorted sequence.
    ZeroSided,
    /// Min-heap.
    LeftSided,
    /// Max-heap.
    RightSided,
    /// Min-heap, unsorted middle, max-heap.
    TwoSided,
}

impl Sidedness {
    pub fn from_touched(left: bool, right: bool) -> Self {
        match (left, right) {
            (false, false) => Sidedness::ZeroSided,
            (true, false) => Sidedness::LeftSided,
            (false, true) => Sidedness::RightSided,
            (true, true) => Sidedness::TwoSided,
        }
    }

    pub fn is_one_sided(self) -> bool {
        matches!(self, Sidedness::LeftSided | Sidedness::RightSided)
    }
}

/// Where an entry lives inside a body. `Seq` indexes the unsorted sequence
/// (the middle part of a two-sided gap), `Min`/`Max` are heap handles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Place {
    Seq(u32),
    Min(Handle),
    Max(Handle),
}

#[derive(Debug, Clone)]
pub(crate) struct Thirds<K, V> {
    pub low: FibHeap<K, V>,
    pub mid: Vec<Entry<K, V>>,
    pub high: FibHeap<K, V>,
    /// Every `low` entry is admitted, no `mid`/`high` entry is.
    pub sep_lo: Option<Sep<K>>,
    /// Every `low`/`mid` entry is admitted, no `high` entry is.
    pub sep_hi: Option<Sep<K>>,
}

#[derive(Debug, Clone)]
pub(crate) enum Body<K, V> {
    Zero(Vec<Entry<K, V>>),
    Left(FibHeap<K, V>),
    Right(FibHeap<K, V>),
    Two(Box<Thirds<K, V>>),
}

fn heap_from<K: Ord, V>(
    dir: Direction,
    entries: Vec<Entry<K, V>>,
    counter: &Counter,
) -> FibHeap<K, V> {
    let mut h = FibHeap::with_order(dir, counter.clone());
    for e in entries {
        h.insert(e);
    }
    h
}

impl<K: Ord + Clone, V> Body<K, V> {
    pub fn empty(kind: Sidedness, counter: &Counter) -> Self {
        Self::build(kind, Vec::new(), counter)
    }

    /// Builds a structure of the given kind in `O(len)` comparisons.
    pub fn build(kind: Sidedness, mut v: Vec<Entry<K, V>>, counter: &Counter) -> Self {
        match kind {
            Sidedness::ZeroSided => Body::Zero(v),
            Sidedness::LeftSided => Body::Left(heap_from(Direction::Min, v, counter)),
            Sidedness::RightSided => Body::Right(heap_from(Direction::Max, v, counter)),
            Sidedness::TwoSided => {
                let s = v.len();
                let (a, b) = (s / 3, 2 * s / 3);
                let less = |x: &Entry<K, V>, y: &Entry<K, V>| compare(x, y, counter).is_lt();
                partition_at(&mut v, a, &less);
                partition_at(&mut v[a..], b - a, &less);
                let sep_lo = (a > 0).then(|| Sep::at_most(v[a - 1].key.clone(), v[a - 1].seq));
                let sep_hi = if b > a {
                    Some(Sep::at_most(v[b - 1].key.clone(), v[b - 1].seq))
                } else {
                    sep_lo.clone()
                };
                let high = v.split_off(b);
                let mid = v.split_off(a);
                Body::Two(Box::new(Thirds {
                    low: heap_from(Direction::Min, v, counter),
                    mid,
                    high: heap_from(Direction::Max, high, counter),
                    sep_lo,
                    sep_hi,
                }))
            }
        }
    }

    pub fn sidedness(&self) -> Sidedness {
        match self {
            Body::Zero(_) => Sidedness::ZeroSided,
            Body::Left(_) => Sidedness::LeftSided,
            Body::Right(_) => Sidedness::RightSided,
            Body::Two(_) => Sidedness::TwoSided,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Body::Zero(v) => v.len(),
            Body::Left(h) | Body::Right(h) => h.len(),
            Body::Two(t) => t.low.len() + t.mid.len() + t.high.len(),
        }
    }

    pub fn get(&self, place: Place) -> &Entry<K, V> {
        self.try_get(place)
            .expect("slot does not match gap structure")
    }

    pub fn try_get(&self, place: Place) -> Option<&Entry<K, V>> {
        match (self, place) {
            (Body::Zero(v), Place::Seq(i)) => v.get(i as usize),
            (Body::Left(h), Place::Min(x)) | (Body::Right(h), Place::Max(x)) => h.get(x).ok(),
            (Body::Two(t), Place::Seq(i)) => t.mid.get(i as usize),
            (Body::Two(t), Place::Min(x)) => t.low.get(x).ok(),
            (Body::Two(t), Place::Max(x)) => t.high.get(x).ok(),
            _ => None,
        }
    }

    /// Every entry's sequence number with its place.
    pub fn places(&self) -> Vec<(u64, Place)> {
        let seq = |v: &[Entry<K, V>]| -> Vec<(u64, Place)> {
            v.iter()
                .enumerate()
                .map(|(i, e)| (e.seq, Place::Seq(i as u32)))
                .collect()
        };
        let heap = |h: &FibHeap<K, V>, f: fn(Handle) -> Place| -> Vec<(u64, Place)> {
            h.iter().map(|(x, e)| (e.seq, f(x))).collect()
        };
        match self {
            Body::Zero(v) => seq(v),
            Body::Left(h) => heap(h, Place::Min),
            Body::Right(h) => heap(h, Place::Max),
            Body::Two(t) => {
                let mut out = heap(&t.low, Place::Min);
                out.extend(seq(&t.mid));
                out.extend(heap(&t.high, Place::Max));
                out
            }
        }
    }

    pub fn entries(&self) -> Box<dyn Iterator<Item = &Entry<K, V>> + '_> {
        match self {
            Body::Zero(v) => Box::new(v.iter()),
            Body::Left(h) | Body::Right(h) => Box::new(h.iter().map(|(_, e)| e)),
            Body::Two(t) => Box::new(
                t.low
                    .iter()
                    .map(|(_, e)| e)
                    .chain(t.mid.iter())
                    .chain(t.high.iter().map(|(_, e)| e)),
            ),
        }
    }

    pub fn insert(&mut self, e: Entry<K, V>, counter: &Counter) -> Place {
        match self {
            Body::Zero(v) => {
                v.push(e);
                Place::Seq(v.len() as u32 - 1)
            }
            Body::Left(h) => Place::Min(h.insert(e)),
            Body::Right(h) => Place::Max(h.insert(e)),
            Body::Two(t) => {
                if t.sep_lo
                    .as_ref()
                    .is_some_and(|s| s.admits(&e.key, e.seq, counter))
                {
                    Place::Min(t.low.insert(e))
                } else if t
                    .sep_hi
                    .as_ref()
                    .is_some_and(|s| s.admits(&e.key, e.seq, counter))
                {
                    t.mid.push(e);
                    Place::Seq(t.mid.len() as u32 - 1)
                } else {
                    Place::Max(t.high.insert(e))
                }
            }
        }
    }

    /// Removes the entry at `place`. When another entry had to move to fill
    /// the hole its sequence number and new place are returned as well.
    pub fn remove(&mut self, place: Place) -> (Entry<K, V>, Option<(u64, Place)>) {
        let from_seq = |v: &mut Vec<Entry<K, V>>, i: u32| {
            let e = v.swap_remove(i as usize);
            let moved = v.get(i as usize).map(|m| (m.seq, Place::Seq(i)));
            (e, moved)
        };
        match (self, place) {
            (Body::Zero(v), Place::Seq(i)) => from_seq(v, i),
            (Body::Two(t), Place::Seq(i)) => from_seq(&mut t.mid, i),
            (Body::Left(h), Place::Min(x)) | (Body::Right(h), Place::Max(x)) => {
                (h.delete(x).expect("live slot"), None)
            }
            (Body::Two(t), Place::Min(x)) => (t.low.delete(x).expect("live slot"), None),
            (Body::Two(t), Place::Max(x)) => (t.high.delete(x).expect("live slot"), None),
            _ => panic!("slot does not match gap structure"),
        }
    }

    pub fn drain(self) -> Vec<Entry<K, V>> {
        match self {
            Body::Zero(v) => v,
            Body::Left(mut h) | Body::Right(mut h) => h.drain(),
            Body::Two(t) => {
                let Thirds {
                    mut low,
                    mut mid,
                    mut high,
                    ..
                } = *t;
                let mut out = low.drain();
                out.append(&mut mid);
                out.append(&mut high.drain());
                out
            }
        }
    }

    /// The largest entry, when the structure exposes it without comparisons.
    pub fn max_entry(&self) -> Option<&Entry<K, V>> {
        match self {
            Body::Right(h) => h.find_min().ok(),
            Body::Two(t) => t.high.find_min().ok(),
            _ if self.len() == 1 => self.entries().next(),
            _ => None,
        }
    }

    /// The smallest entry, when the structure exposes it without comparisons.
    pub fn min_entry(&self) -> Option<&Entry<K, V>> {
        match self {
            Body::Left(h) => h.find_min().ok(),
            Body::Two(t) if !t.low.is_empty() => t.low.find_min().ok(),
            Body::Two(t) if t.mid.is_empty() => {
                t.high.find_min().ok().filter(|_| t.high.len() == 1)
            }
            _ if self.len() == 1 => self.entries().next(),
            _ => None,
        }
    }

    /// Each third of a two-sided structure holds at least a quarter of the
    /// entries (`1/3 - 1/12`). Other structures always pass.
    pub fn thirds_ok(&self) -> bool {
        match self {
            Body::Two(t) => {
                let q = self.len() / 4;
                t.low.len() >= q && t.mid.len() >= q && t.high.len() >= q
            }
            _ => true,
        }
    }

    pub fn set_counter(&mut self, c: &Counter) {
        match self {
            Body::Zero(_) => {}
            Body::Left(h) | Body::Right(h) => h.set_counter(c.clone()),
            Body::Two(t) => {
                t.low.set_counter(c.clone());
                t.high.set_counter(c.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(keys: impl IntoIterator<Item = i64>) -> Vec<Entry<i64>> {
        keys.into_iter().map(|k| Entry::new(k, ())).collect()
    }

    #[test]
    fn two_sided_build_splits_into_thirds() {
        let c = Counter::new();
        let b = Body::build(Sidedness::TwoSided, entries((0..30).rev()), &c);
        let Body::Two(t) = &b else { panic!() };
        assert_eq!((t.low.len(), t.mid.len(), t.high.len()), (10, 10, 10));
        assert!(t.low.iter().all(|(_, e)| e.key < 10));
        assert!(t.high.iter().all(|(_, e)| e.key >= 20));
        assert_eq!(b.max_entry().unwrap().key, 29);
        assert_eq!(b.min_entry().unwrap().key, 0);
        assert!(b.thirds_ok());
        assert!(c.get() < 30 * 40);
    }

    #[test]
    fn two_sided_insert_routes_by_separators() {
        let c = Counter::new();
        let mut b = Body::build(Sidedness::TwoSided, entries(0..9), &c);
        assert!(matches!(b.insert(Entry::new(-1, ()), &c), Place::Min(_)));
        assert!(matches!(b.insert(Entry::new(4, ()), &c), Place::Seq(_)));
        assert!(matches!(b.insert(Entry::new(100, ()), &c), Place::Max(_)));
    }

    #[test]
    fn tiny_two_sided_bodies() {
        let c = Counter::new();
        for s in 0..6 {
            let mut b = Body::build(Sidedness::TwoSided, entries(0..s), &c);
            assert_eq!(b.len(), s as usize);
            if s > 0 {
                assert_eq!(b.max_entry().unwrap().key, s - 1);
            }
            b.insert(Entry::new(3, ()), &c);
            assert_eq!(b.len(), s as usize + 1);
        }
    }

    #[test]
    fn remove_reports_moved_entry() {
        let c = Counter::new();
        let mut b = Body::build(Sidedness::ZeroSided, entries([1, 2, 3]), &c);
        let (e, moved) = b.remove(Place::Seq(0));
        assert_eq!(e.key, 1);
        let (seq, place) = moved.unwrap();
        assert_eq!(b.get(place).seq, seq);
        assert_eq!(b.get(place).key, 3);
        let all = b.drain();
        assert_eq!(all.len(), 2);
    }
}
