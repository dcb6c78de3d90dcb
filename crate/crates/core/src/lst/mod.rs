//! Lazy search tree: a sorted dictionary that sorts only as far as queries
//! force it to.
//!
//! Entries live in *gaps*: key-ordered blocks whose contents are unordered
//! among themselves. A query splits the gap it lands in, so the work done
//! tracks the final gap partition `Δ1 … Δm`. Each gap stores its entries in a
//! structure chosen by which of its boundaries queries have touched (see
//! [`Sidedness`]): an unsorted vector, a min- or max- [`FibHeap`], or a
//! min-heap / unsorted middle / max-heap partition whose thirds each keep at
//! least a quarter of the gap.
//!
//! Gaps are indexed by a weighted directory so that reaching gap `Δi` costs
//! `O(log(n / |Δi|))` comparisons amortized.
//!
//! Every comparison is counted on the tree's [`Counter`]. Handles are
//! [`ElemId`]s and stay valid across splits and merges of the tree.

mod directory;
mod gap;

use std::collections::HashMap;
use std::mem;

use thiserror::Error;

use crate::fibheap::{FibHeap, Violation};
use crate::order::{compare, Counter, Entry};
use crate::select::partition_at;

use directory::{Directory, DirectoryFault, LeafSpec, Sep, NIL};
use gap::{Body, Place};

pub use gap::Sidedness;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LstError {
    #[error("rank {rank} outside 1..={len}")]
    Range { rank: usize, len: usize },
    #[error("stale handle")]
    StaleHandle,
    #[error("sequence number already present")]
    Duplicate,
    #[error("new key falls outside the entry's gap")]
    OutOfGap,
    #[error("tree is not a single one-sided gap of the required direction")]
    Shape,
}

/// Handle of an entry: its sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElemId(u64);

impl ElemId {
    pub fn of<K, V>(e: &Entry<K, V>) -> Self {
        ElemId(e.seq)
    }

    pub fn seq(self) -> u64 {
        self.0
    }
}

/// Result of [`Lst::query_by_key`].
///
/// `rank` is the 1-based rank of the first entry with the key when present,
/// otherwise the number of smaller entries. `pred` is the largest entry with
/// a smaller key, `succ` the smallest entry whose key is not smaller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyAnswer<K, V> {
    pub rank: usize,
    pub contains: bool,
    pub pred: Option<Entry<K, V>>,
    pub succ: Option<Entry<K, V>>,
}

/// Counts of the linear-time restructurings performed so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LstStats {
    pub splits: u64,
    pub linear_splits: u64,
    pub thirds_rebuilds: u64,
    pub directory_rebuilds: u64,
}

/// Problems reported by [`Lst::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum LstViolation {
    GapOrder {
        gap: usize,
    },
    Separator {
        gap: usize,
    },
    ThirdsOrder {
        gap: usize,
    },
    ThirdsFraction {
        gap: usize,
        low: usize,
        mid: usize,
        high: usize,
    },
    Heap {
        gap: usize,
        violation: Violation,
    },
    DirectoryWeight {
        gap: usize,
        stored: usize,
        actual: usize,
    },
    DirectoryShape,
    Size {
        stored: usize,
        actual: usize,
    },
    Slot {
        seq: u64,
    },
    Credits {
        zero_sided: i64,
        one_sided: i64,
    },
}

#[derive(Debug, Clone)]
struct Gap<K, V> {
    body: Body<K, V>,
    prev: u32,
    next: u32,
    leaf: u32,
    upper: Option<Sep<K>>,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    gap: u32,
    place: Place,
}

fn plogp(s: usize) -> f64 {
    if s == 0 {
        0.0
    } else {
        s as f64 * (s as f64).log2()
    }
}

/// Lazy search tree over [`Entry`] values.
#[derive(Debug, Clone)]
pub struct Lst<K, V = ()> {
    counter: Counter,
    gaps: Vec<Option<Gap<K, V>>>,
    free_gaps: Vec<u32>,
    first: u32,
    last: u32,
    dir: Directory<K>,
    slots: HashMap<u64, Slot>,
    len: usize,
    nonempty: usize,
    entropy: f64,
    zero_credits: i64,
    one_credits: i64,
    stats: LstStats,
}

impl<K: Ord + Clone, V: Clone> Default for Lst<K, V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord + Clone, V: Clone> Lst<K, V> {
    pub fn new() -> Self {
        Self::with_counter(Counter::new())
    }

    pub fn with_counter(counter: Counter) -> Self {
        let g = Gap {
            body: Body::empty(Sidedness::ZeroSided, &counter),
            prev: NIL,
            next: NIL,
            leaf: NIL,
            upper: None,
        };
        let (dir, leaves) = Directory::build(&[LeafSpec {
            gap: 0,
            weight: 0,
            upper: None,
        }]);
        let mut t = Lst {
            counter,
            gaps: vec![Some(g)],
            free_gaps: Vec::new(),
            first: 0,
            last: 0,
            dir,
            slots: HashMap::new(),
            len: 0,
            nonempty: 0,
            entropy: 0.0,
            zero_credits: 0,
            one_credits: 0,
            stats: LstStats::default(),
        };
        t.gm(0).leaf = leaves[0];
        t
    }

    /// One zero-sided gap holding every entry; no comparisons.
    pub fn from_entries(entries: Vec<Entry<K, V>>, counter: Counter) -> Self {
        let mut t = Self::with_counter(counter);
        let n = entries.len();
        for e in &entries {
            assert!(
                t.slots
                    .insert(
                        e.seq,
                        Slot {
                            gap: 0,
                            place: Place::Seq(0)
                        }
                    )
                    .is_none(),
                "duplicate seq"
            );
        }
        t.gm(0).body = Body::Zero(entries);
        t.register(0);
        t.dir.add_weight(t.g(0).leaf, n as isize);
        t.len = n;
        t.account(n, 1);
        t.zero_credits = n as i64;
        t.tidy_directory();
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn counter(&self) -> &Counter {
        &self.counter
    }

    pub fn stats(&self) -> LstStats {
        self.stats
    }

    /// Number of non-empty gaps.
    pub fn gap_count(&self) -> usize {
        self.nonempty
    }

    /// `(zero-sided, one-sided)` amortization credits.
    pub fn credits(&self) -> (i64, i64) {
        (self.zero_credits, self.one_credits)
    }

    /// Every gap in key order, empty ones included.
    pub fn gaps(&self) -> Vec<(Sidedness, usize)> {
        self.order()
            .into_iter()
            .map(|g| (self.g(g).body.sidedness(), self.g(g).body.len()))
            .collect()
    }

    /// `[low, mid, high]` part sizes of every two-sided gap, in key order.
    pub fn thirds(&self) -> Vec<[usize; 3]> {
        self.order()
            .into_iter()
            .filter_map(|g| match &self.g(g).body {
                Body::Two(t) => Some([t.low.len(), t.mid.len(), t.high.len()]),
                _ => None,
            })
            .collect()
    }

    /// `Σ |Δi| log2(n / |Δi|)` over the current gaps, maintained
    /// incrementally.
    pub fn b_value(&self) -> f64 {
        (plogp(self.len) - self.entropy).max(0.0)
    }

    /// Same as [`Lst::b_value`], recomputed from the gap sizes.
    pub fn b_exact(&self) -> f64 {
        let n = self.len as f64;
        self.gaps()
            .into_iter()
            .filter(|g| g.1 > 0)
            .map(|(_, s)| s as f64 * (n / s as f64).log2())
            .sum()
    }

    pub fn get(&self, id: ElemId) -> Option<&Entry<K, V>> {
        let s = self.slots.get(&id.0)?;
        self.g(s.gap).body.try_get(s.place)
    }

    pub fn contains(&self, id: ElemId) -> bool {
        self.slots.contains_key(&id.0)
    }

    /// Entries in no particular order; no comparisons.
    pub fn entries(&self) -> impl Iterator<Item = &Entry<K, V>> + '_ {
        self.order()
            .into_iter()
            .flat_map(move |g| self.g(g).body.entries())
    }

    /// Entries in sorted order. Sorting inside each gap is counted.
    pub fn in_order(&self) -> Vec<Entry<K, V>> {
        let mut out = Vec::with_capacity(self.len);
        for g in self.order() {
            let mut part: Vec<Entry<K, V>> = self.g(g).body.entries().cloned().collect();
            part.sort_by(|a, b| compare(a, b, &self.counter));
            out.append(&mut part);
        }
        out
    }

    pub fn insert(&mut self, key: K, payload: V) -> ElemId {
        self.insert_entry(Entry::new(key, payload))
            .expect("fresh sequence number")
    }

    /// Inserts an entry keeping its sequence number, e.g. one returned by
    /// [`Lst::delete`].
    pub fn insert_entry(&mut self, e: Entry<K, V>) -> Result<ElemId, LstError> {
        if self.slots.contains_key(&e.seq) {
            return Err(LstError::Duplicate);
        }
        let id = ElemId(e.seq);
        let (g, _) = self.dir.locate_key(&e.key, e.seq, &self.counter);
        let size = self.g(g).body.len();
        let kind = self.g(g).body.sidedness();
        self.account(size, -1);
        let place = {
            let counter = &self.counter;
            self.gaps[g as usize]
                .as_mut()
                .unwrap()
                .body
                .insert(e, counter)
        };
        self.account(size + 1, 1);
        self.slots.insert(id.0, Slot { gap: g, place });
        self.dir.add_weight(self.g(g).leaf, 1);
        self.len += 1;
        self.deposit(kind, 1);
        self.maintain(g);
        self.tidy_directory();
        Ok(id)
    }

    pub fn delete(&mut self, id: ElemId) -> Result<Entry<K, V>, LstError> {
        let slot = self.slots.remove(&id.0).ok_or(LstError::StaleHandle)?;
        let g = slot.gap;
        let size = self.g(g).body.len();
        self.account(size, -1);
        let (e, moved) = self.gm(g).body.remove(slot.place);
        self.account(size - 1, 1);
        if let Some((seq, place)) = moved {
            self.slots.get_mut(&seq).expect("moved entry").place = place;
        }
        self.dir.add_weight(self.g(g).leaf, -1);
        self.len -= 1;
        self.maintain(g);
        self.tidy_directory();
        Ok(e)
    }

    /// The entry of rank `r` (1-based). The gap holding it is split so that a
    /// gap boundary falls right after it.
    pub fn query_by_rank(&mut self, r: usize) -> Result<&Entry<K, V>, LstError> {
        let seq = self.cut_at_rank(r)?;
        Ok(self.entry(seq))
    }

    pub fn query_by_key(&mut self, key: &K) -> KeyAnswer<K, V> {
        if self.len == 0 {
            return KeyAnswer {
                rank: 0,
                contains: false,
                pred: None,
                succ: None,
            };
        }
        let (g, before) = self.dir.locate_key(key, 0, &self.counter);
        let below = self.count_below(g, key);
        if below > 0 && below < self.g(g).body.len() {
            self.split_gap(g, below);
            self.tidy_directory();
        }
        let r0 = before + below;
        let pred = (r0 >= 1).then(|| self.peek_rank(r0));
        let succ = (r0 < self.len).then(|| self.peek_rank(r0 + 1));
        let contains = succ.as_ref().is_some_and(|e| {
            self.counter.bump();
            e.key == *key
        });
        KeyAnswer {
            rank: r0 + contains as usize,
            contains,
            pred,
            succ,
        }
    }

    /// Changes the key of a live entry. The new key must keep the entry in
    /// its current gap; otherwise [`LstError::OutOfGap`] is returned and the
    /// tree is unchanged.
    pub fn change_key(&mut self, id: ElemId, key: K) -> Result<(), LstError> {
        let slot = *self.slots.get(&id.0).ok_or(LstError::StaleHandle)?;
        let g = slot.gap;
        let seq = id.0;
        let prev = self.g(g).prev;
        if prev != NIL {
            if let Some(s) = &self.g(prev).upper {
                if s.admits(&key, seq, &self.counter) {
                    return Err(LstError::OutOfGap);
                }
            }
        }
        if let Some(s) = &self.g(g).upper {
            if !s.admits(&key, seq, &self.counter) {
                return Err(LstError::OutOfGap);
            }
        }
        let gap = self.gaps[g as usize].as_mut().unwrap();
        let counter = &self.counter;
        let reroute = match (&mut gap.body, slot.place) {
            (Body::Zero(v), Place::Seq(i)) => {
                v[i as usize].key = key.clone();
                false
            }
            (Body::Left(h), Place::Min(x)) | (Body::Right(h), Place::Max(x)) => {
                if h.improve_key(x, key.clone()).is_err() {
                    let mut e = h.delete(x).expect("live slot");
                    e.key = key.clone();
                    let nx = h.insert(e);
                    let place = match slot.place {
                        Place::Min(_) => Place::Min(nx),
                        _ => Place::Max(nx),
                    };
                    self.slots.get_mut(&seq).unwrap().place = place;
                }
                false
            }
            (Body::Two(t), Place::Min(x)) => t.low.improve_key(x, key.clone()).is_err(),
            (Body::Two(t), Place::Max(x)) => t.high.improve_key(x, key.clone()).is_err(),
            (Body::Two(_), Place::Seq(_)) => true,
            _ => unreachable!("slot does not match gap structure"),
        };
        if reroute {
            let (mut e, moved) = gap.body.remove(slot.place);
            if let Some((s, p)) = moved {
                self.slots.get_mut(&s).unwrap().place = p;
            }
            e.key = key;
            let place = gap.body.insert(e, counter);
            self.slots.get_mut(&seq).unwrap().place = place;
        }
        self.maintain(g);
        Ok(())
    }

    /// Splits off the entries of rank `r + 1 ..= n` into a new tree; `self`
    /// keeps ranks `1 ..= r`. Both trees share the counter.
    pub fn split_off(&mut self, r: usize) -> Result<Lst<K, V>, LstError> {
        if r > self.len {
            return Err(LstError::Range {
                rank: r,
                len: self.len,
            });
        }
        if r == 0 {
            let mut right = Lst::with_counter(self.counter.clone());
            mem::swap(self, &mut right);
            return Ok(right);
        }
        if r == self.len {
            return Ok(Lst::with_counter(self.counter.clone()));
        }
        self.cut_at_rank(r)?;
        let order = self.order();
        let mut acc = 0;
        let mut cut = 0;
        while acc < r {
            acc += self.g(order[cut]).body.len();
            cut += 1;
        }
        debug_assert_eq!(acc, r);
        let (left_ids, right_ids) = order.split_at(cut);
        let mut other = Lst::with_counter(self.counter.clone());
        if r <= self.len - r {
            other.adopt(self, left_ids, false);
            other.gm(other.last).upper = None;
            mem::swap(self, &mut other);
        } else {
            other.adopt(self, right_ids, false);
            let last = self.last;
            self.gm(last).upper = None;
        }
        self.rebuild_directory();
        other.rebuild_directory();
        Ok(other)
    }

    /// Concatenates two trees; every entry of `self` must precede every entry
    /// of `other` (checked only by [`Lst::validate`]). The result counts on
    /// `self`'s counter.
    pub fn merge(mut self, mut other: Lst<K, V>) -> Lst<K, V> {
        if other.len == 0 {
            return self;
        }
        if self.len == 0 {
            other.adopt_counter(self.counter.clone());
            return other;
        }
        let sep = boundary(&self, &other);
        if self.len >= other.len {
            let last = self.last;
            self.gm(last).upper = Some(sep);
            let ids = other.order();
            self.adopt(&mut other, &ids, false);
            self.rebuild_directory();
            self
        } else {
            other.adopt_counter(self.counter.clone());
            let ids = self.order();
            let last = *ids.last().unwrap();
            self.gm(last).upper = Some(sep);
            other.adopt(&mut self, &ids, true);
            other.rebuild_directory();
            other
        }
    }

    /// Melds two priority-queue shaped trees, each holding at most one
    /// non-empty gap that is either zero-sided or one-sided in a common
    /// direction. `other` is left empty. One-sided heaps are melded with a
    /// single comparison; entries of a zero-sided side join the other side's
    /// heap without comparisons, and its minimum is found on next use.
    pub fn merge_pq(&mut self, other: &mut Lst<K, V>) -> Result<(), LstError> {
        let a = self.pq_gap()?;
        let b = other.pq_gap()?;
        if let (Some((_, ka)), Some((_, kb))) = (a, b) {
            let clash = matches!(
                (ka, kb),
                (Sidedness::LeftSided, Sidedness::RightSided)
                    | (Sidedness::RightSided, Sidedness::LeftSided)
            );
            if clash {
                return Err(LstError::Shape);
            }
        }
        let mut taken = mem::replace(other, Lst::with_counter(other.counter.clone()));
        let Some((gb, _)) = b else {
            return Ok(());
        };
        let Some((ga, _)) = a else {
            taken.adopt_counter(self.counter.clone());
            *self = taken;
            return Ok(());
        };
        self.isolate(ga);
        let counter = self.counter.clone();
        let body_b = mem::replace(&mut taken.gm(gb).body, Body::Zero(Vec::new()));
        let body_a = mem::replace(&mut self.gm(ga).body, Body::Zero(Vec::new()));
        let (na, nb) = (body_a.len(), body_b.len());
        let merged = match (body_a, body_b) {
            (Body::Left(x), Body::Left(y)) => Body::Left(x.merge(y).expect("same direction").0),
            (Body::Right(x), Body::Right(y)) => Body::Right(x.merge(y).expect("same direction").0),
            (Body::Zero(mut x), Body::Zero(mut y)) => {
                x.append(&mut y);
                Body::Zero(x)
            }
            // the zero-sided entries join as pending roots; their credits
            // pay for folding them into the minimum later
            (Body::Zero(v), heap) | (heap, Body::Zero(v)) => {
                self.zero_credits -= v.len() as i64;
                self.one_credits += v.len() as i64;
                match heap {
                    Body::Left(mut h) => {
                        for e in v {
                            h.insert(e);
                        }
                        Body::Left(h)
                    }
                    Body::Right(mut h) => {
                        for e in v {
                            h.insert(e);
                        }
                        Body::Right(h)
                    }
                    _ => unreachable!("shapes checked above"),
                }
            }
            _ => unreachable!("shapes checked above"),
        };
        self.zero_credits += taken.zero_credits;
        self.one_credits += taken.one_credits;
        let mut merged = merged;
        merged.set_counter(&counter);
        self.account(na, -1);
        self.gm(ga).body = merged;
        self.account(na + nb, 1);
        self.len += nb;
        self.register(ga);
        self.rebuild_directory();
        Ok(())
    }

    /// Audits gap order, separators, thirds fractions, heap structure,
    /// directory weights, handles and credits. Read-only; no comparisons are
    /// counted.
    pub fn validate(&self) -> Vec<LstViolation> {
        let mut out = Vec::new();
        let order = self.order();
        if self.dir.gaps_in_order() != order || !self.dir.audit().is_empty() {
            out.push(LstViolation::DirectoryShape);
        }
        let seps = self.dir.separators_in_order();
        for (i, w) in order.windows(2).enumerate() {
            if seps.get(i).copied().flatten() != self.g(w[0]).upper.as_ref() {
                out.push(LstViolation::Separator { gap: i });
            }
        }
        if self
            .dir
            .audit()
            .iter()
            .any(|f| matches!(f, DirectoryFault::Weight { .. }))
        {
            out.push(LstViolation::DirectoryWeight {
                gap: usize::MAX,
                stored: self.dir.total(),
                actual: self.len,
            });
        }
        let mut total = 0;
        let mut nonempty = 0;
        let (mut zero, mut one) = (0i64, 0i64);
        let mut lower: Option<&Sep<K>> = None;
        for (i, &g) in order.iter().enumerate() {
            let gap = self.g(g);
            let size = gap.body.len();
            total += size;
            nonempty += (size > 0) as usize;
            match gap.body.sidedness() {
                Sidedness::ZeroSided => zero += size as i64,
                Sidedness::LeftSided | Sidedness::RightSided => one += size as i64,
                Sidedness::TwoSided => {}
            }
            let stored = self.dir.leaf_weight(gap.leaf);
            if stored != size {
                out.push(LstViolation::DirectoryWeight {
                    gap: i,
                    stored,
                    actual: size,
                });
            }
            let inside = |e: &Entry<K, V>| {
                lower.is_none_or(|s| !s.admits_silent(&e.key, e.seq))
                    && gap
                        .upper
                        .as_ref()
                        .is_none_or(|s| s.admits_silent(&e.key, e.seq))
            };
            if !gap.body.entries().all(inside) {
                out.push(LstViolation::GapOrder { gap: i });
            }
            self.audit_body(i, &gap.body, &mut out);
            lower = gap.upper.as_ref();
        }
        if total != self.len || self.slots.len() != self.len || nonempty != self.nonempty {
            out.push(LstViolation::Size {
                stored: self.len,
                actual: total,
            });
        }
        for (&seq, s) in &self.slots {
            let ok = self
                .gaps
                .get(s.gap as usize)
                .and_then(|g| g.as_ref())
                .and_then(|g| g.body.try_get(s.place))
                .is_some_and(|e| e.seq == seq);
            if !ok {
                out.push(LstViolation::Slot { seq });
            }
        }
        if self.zero_credits < zero || self.one_credits < one {
            out.push(LstViolation::Credits {
                zero_sided: self.zero_credits,
                one_sided: self.one_credits,
            });
        }
        out
    }

    fn audit_body(&self, i: usize, body: &Body<K, V>, out: &mut Vec<LstViolation>) {
        let heaps: Vec<&FibHeap<K, V>> = match body {
            Body::Zero(_) => vec![],
            Body::Left(h) | Body::Right(h) => vec![h],
            Body::Two(t) => vec![&t.low, &t.high],
        };
        for h in heaps {
            if let Some(v) = h.validate().into_iter().next() {
                out.push(LstViolation::Heap {
                    gap: i,
                    violation: v,
                });
            }
        }
        if let Body::Two(t) = body {
            let admits = |s: &Option<Sep<K>>, e: &Entry<K, V>| {
                s.as_ref().is_some_and(|s| s.admits_silent(&e.key, e.seq))
            };
            let ordered = t.low.iter().all(|(_, e)| admits(&t.sep_lo, e))
                && t.mid
                    .iter()
                    .all(|e| !admits(&t.sep_lo, e) && admits(&t.sep_hi, e))
                && t.high.iter().all(|(_, e)| !admits(&t.sep_hi, e));
            if !ordered {
                out.push(LstViolation::ThirdsOrder { gap: i });
            }
            if !body.thirds_ok() {
                out.push(LstViolation::ThirdsFraction {
                    gap: i,
                    low: t.low.len(),
                    mid: t.mid.len(),
                    high: t.high.len(),
                });
            }
        }
    }

    // ---- internals ----

    fn g(&self, g: u32) -> &Gap<K, V> {
        self.gaps[g as usize].as_ref().expect("live gap")
    }

    fn gm(&mut self, g: u32) -> &mut Gap<K, V> {
        self.gaps[g as usize].as_mut().expect("live gap")
    }

    fn entry(&self, seq: u64) -> &Entry<K, V> {
        let s = self.slots[&seq];
        self.g(s.gap).body.get(s.place)
    }

    fn order(&self) -> Vec<u32> {
        let mut out = Vec::new();
        let mut g = self.first;
        while g != NIL {
            out.push(g);
            g = self.g(g).next;
        }
        out
    }

    fn alloc_gap(&mut self, body: Body<K, V>) -> u32 {
        let gap = Gap {
            body,
            prev: NIL,
            next: NIL,
            leaf: NIL,
            upper: None,
        };
        match self.free_gaps.pop() {
            Some(i) => {
                self.gaps[i as usize] = Some(gap);
                i
            }
            None => {
                self.gaps.push(Some(gap));
                (self.gaps.len() - 1) as u32
            }
        }
    }

    /// Adds (`sign = 1`) or removes (`sign = -1`) a gap of `size` from the
    /// running gap statistics.
    fn account(&mut self, size: usize, sign: i32) {
        if size > 0 {
            self.nonempty = (self.nonempty as i64 + sign as i64) as usize;
            self.entropy += sign as f64 * plogp(size);
        }
    }

    fn deposit(&mut self, kind: Sidedness, amount: usize) {
        match kind {
            Sidedness::ZeroSided => self.zero_credits += amount as i64,
            Sidedness::LeftSided | Sidedness::RightSided => self.one_credits += amount as i64,
            Sidedness::TwoSided => {}
        }
    }

    fn charge(&mut self, kind: Sidedness, amount: usize) {
        match kind {
            Sidedness::ZeroSided => self.zero_credits -= amount as i64,
            Sidedness::LeftSided | Sidedness::RightSided => self.one_credits -= amount as i64,
            Sidedness::TwoSided => {}
        }
    }

    fn register(&mut self, g: u32) {
        for (seq, place) in self.g(g).body.places() {
            self.slots.insert(seq, Slot { gap: g, place });
        }
    }

    /// Rebuilds a gap's structure as `kind`. Size is unchanged.
    fn rebuild_gap(&mut self, g: u32, kind: Sidedness) {
        let body = mem::replace(&mut self.gm(g).body, Body::Zero(Vec::new()));
        let old = body.sidedness();
        let entries = body.drain();
        let size = entries.len();
        self.charge(old, size);
        self.deposit(kind, size);
        self.gm(g).body = Body::build(kind, entries, &self.counter);
        self.register(g);
    }

    /// Restores the thirds fractions of a two-sided gap.
    fn maintain(&mut self, g: u32) {
        if !self.g(g).body.thirds_ok() {
            self.stats.thirds_rebuilds += 1;
            self.rebuild_gap(g, Sidedness::TwoSided);
        }
    }

    fn tidy_directory(&mut self) {
        if self.dir.wants_rebuild() {
            self.rebuild_directory();
        }
    }

    fn rebuild_directory(&mut self) {
        let order = self.order();
        let specs: Vec<LeafSpec<'_, K>> = order
            .iter()
            .enumerate()
            .map(|(i, &g)| LeafSpec {
                gap: g,
                weight: self.g(g).body.len(),
                upper: if i + 1 < order.len() {
                    self.g(g).upper.as_ref()
                } else {
                    None
                },
            })
            .collect();
        let (dir, leaves) = Directory::build(&specs);
        self.dir = dir;
        for (g, leaf) in order.into_iter().zip(leaves) {
            self.gm(g).leaf = leaf;
        }
        self.stats.directory_rebuilds += 1;
    }

    fn cut_at_rank(&mut self, r: usize) -> Result<u64, LstError> {
        if r == 0 || r > self.len {
            return Err(LstError::Range {
                rank: r,
                len: self.len,
            });
        }
        let (g, k) = self.dir.locate_rank(r);
        let seq = self.split_gap(g, k);
        self.tidy_directory();
        Ok(seq)
    }

    /// The entry of rank `r` without splitting when the containing gap
    /// exposes it directly.
    fn peek_rank(&mut self, r: usize) -> Entry<K, V> {
        let (g, k) = self.dir.locate_rank(r);
        if k == 1 {
            if let Some(e) = self.g(g).body.min_entry() {
                return e.clone();
            }
        }
        let seq = self.split_gap(g, k);
        self.tidy_directory();
        self.entry(seq).clone()
    }

    /// Makes the first `k` entries of gap `g` (1 ≤ k ≤ size) a gap of their
    /// own and returns the largest of them.
    fn split_gap(&mut self, g: u32, k: usize) -> u64 {
        let size = self.g(g).body.len();
        debug_assert!(k >= 1 && k <= size);
        if k == size {
            if let Some(e) = self.g(g).body.max_entry() {
                return e.seq;
            }
            let kind = self.g(g).body.sidedness();
            let touched_left = matches!(kind, Sidedness::LeftSided | Sidedness::TwoSided);
            self.stats.linear_splits += 1;
            self.rebuild_gap(g, Sidedness::from_touched(touched_left, true));
            return self.g(g).body.max_entry().expect("max exposed").seq;
        }
        self.stats.splits += 1;
        let body = mem::replace(&mut self.gm(g).body, Body::Zero(Vec::new()));
        let counter = self.counter.clone();
        match body {
            Body::Left(mut h) if k <= size / 2 => {
                let piece = h.extract_k(k);
                self.gm(g).body = Body::Left(h);
                self.attach_piece(g, piece, true)
            }
            Body::Right(mut h) if size - k <= size / 2 => {
                let piece = h.extract_k(size - k);
                let answer = h.find_min().expect("non-empty").seq;
                self.gm(g).body = Body::Right(h);
                self.attach_piece(g, piece, false);
                answer
            }
            Body::Two(mut t) if k <= t.low.len() => {
                let piece = t.low.extract_k(k);
                self.gm(g).body = Body::Two(t);
                let answer = self.attach_piece(g, piece, true);
                self.maintain(g);
                answer
            }
            Body::Two(mut t) if size - k < t.high.len() => {
                let piece = t.high.extract_k(size - k);
                let answer = t.high.find_min().expect("non-empty").seq;
                self.gm(g).body = Body::Two(t);
                self.attach_piece(g, piece, false);
                self.maintain(g);
                answer
            }
            body => {
                self.stats.linear_splits += 1;
                let kind = body.sidedness();
                let touched_left = matches!(kind, Sidedness::LeftSided | Sidedness::TwoSided);
                let touched_right = matches!(kind, Sidedness::RightSided | Sidedness::TwoSided);
                let mut v = body.drain();
                partition_at(&mut v, k, &|x: &Entry<K, V>, y: &Entry<K, V>| {
                    compare(x, y, &counter).is_lt()
                });
                let right = v.split_off(k);
                let answer = v[k - 1].seq;
                let sep = Sep::at_most(v[k - 1].key.clone(), answer);
                let (lk, rk) = (
                    Sidedness::from_touched(touched_left, true),
                    Sidedness::from_touched(true, touched_right),
                );
                self.charge(kind, size);
                self.deposit(lk, k);
                self.deposit(rk, size - k);
                self.gm(g).body = Body::build(lk, v, &counter);
                self.register(g);
                let n = self.alloc_gap(Body::build(rk, right, &counter));
                self.register(n);
                self.link(g, n, false, sep, size);
                answer
            }
        }
    }

    /// Turns entries extracted from the left (`left = true`) or right end of
    /// gap `g` into a new two-sided gap beside it. Returns the largest entry
    /// of the left one of the two.
    fn attach_piece(&mut self, g: u32, piece: Vec<Entry<K, V>>, left: bool) -> u64 {
        let size = self.g(g).body.len() + piece.len();
        let body = Body::build(Sidedness::TwoSided, piece, &self.counter);
        let n = self.alloc_gap(body);
        self.register(n);
        let (answer, sep) = if left {
            let e = self.g(n).body.max_entry().expect("non-empty piece");
            (e.seq, Sep::at_most(e.key.clone(), e.seq))
        } else {
            let e = self.g(g).body.max_entry().expect("non-empty remainder");
            (e.seq, Sep::at_most(e.key.clone(), e.seq))
        };
        self.link(g, n, left, sep, size);
        answer
    }

    /// Places new gap `n` before (`before = true`) or after gap `g`, which
    /// together held `size` entries, separated by `sep`.
    fn link(&mut self, g: u32, n: u32, before: bool, sep: Sep<K>, size: usize) {
        let (lo, hi) = if before { (n, g) } else { (g, n) };
        let (outer_prev, outer_next) = if before {
            (self.g(g).prev, hi)
        } else {
            (lo, self.g(g).next)
        };
        if before {
            self.gm(n).upper = Some(sep.clone());
            self.gm(n).prev = outer_prev;
            self.gm(n).next = g;
            self.gm(g).prev = n;
            if outer_prev == NIL {
                self.first = n;
            } else {
                self.gm(outer_prev).next = n;
            }
        } else {
            let up = self.gm(g).upper.replace(sep.clone());
            self.gm(n).upper = up;
            self.gm(n).prev = g;
            self.gm(n).next = outer_next;
            self.gm(g).next = n;
            if outer_next == NIL {
                self.last = n;
            } else {
                self.gm(outer_next).prev = n;
            }
        }
        let (ls, rs) = (self.g(lo).body.len(), self.g(hi).body.len());
        debug_assert_eq!(ls + rs, size);
        self.account(size, -1);
        self.account(ls, 1);
        self.account(rs, 1);
        let (a, b) = self.dir.split_leaf(self.g(g).leaf, (lo, ls), (hi, rs), sep);
        self.gm(lo).leaf = a;
        self.gm(hi).leaf = b;
    }

    /// Number of entries of gap `g` whose key is below `key`.
    fn count_below(&mut self, g: u32, key: &K) -> usize {
        let counter = self.counter.clone();
        let below = |e: &Entry<K, V>| {
            counter.bump();
            e.key < *key
        };
        match &mut self.gm(g).body {
            Body::Zero(v) => v.iter().filter(|e| below(e)).count(),
            Body::Left(h) => count_from_top(h, |e| below(e)),
            Body::Right(h) => h.len() - count_from_top(h, |e| !below(e)),
            Body::Two(t) => {
                if t.sep_lo
                    .as_ref()
                    .is_some_and(|s| s.admits(key, 0, &counter))
                {
                    count_from_top(&mut t.low, |e| below(e))
                } else if t
                    .sep_hi
                    .as_ref()
                    .is_some_and(|s| s.admits(key, 0, &counter))
                {
                    t.low.len() + t.mid.iter().filter(|e| below(e)).count()
                } else {
                    let above = count_from_top(&mut t.high, |e| !below(e));
                    t.low.len() + t.mid.len() + t.high.len() - above
                }
            }
        }
    }

    fn pq_gap(&self) -> Result<Option<(u32, Sidedness)>, LstError> {
        let mut found = None;
        for g in self.order() {
            let body = &self.g(g).body;
            if body.len() == 0 {
                continue;
            }
            if found.is_some() || body.sidedness() == Sidedness::TwoSided {
                return Err(LstError::Shape);
            }
            found = Some((g, body.sidedness()));
        }
        Ok(found)
    }

    /// Drops every gap except `keep`, which must hold all entries.
    fn isolate(&mut self, keep: u32) {
        for g in self.order() {
            if g != keep {
                debug_assert_eq!(self.g(g).body.len(), 0);
                self.gaps[g as usize] = None;
                self.free_gaps.push(g);
            }
        }
        let k = self.gm(keep);
        k.prev = NIL;
        k.next = NIL;
        k.upper = None;
        self.first = keep;
        self.last = keep;
    }

    fn adopt_counter(&mut self, counter: Counter) {
        for g in self.order() {
            self.gm(g).body.set_counter(&counter);
        }
        self.counter = counter;
    }

    /// Moves gaps `ids` (in key order) out of `from` and appends them to the
    /// back of `self`, or prepends them when `front` is set. Entries keep
    /// their handles; no comparisons are made. An empty receiver loses its
    /// placeholder gaps.
    fn adopt(&mut self, from: &mut Lst<K, V>, ids: &[u32], front: bool) {
        let rest: Vec<u32> = from
            .order()
            .into_iter()
            .filter(|g| !ids.contains(g))
            .collect();
        let mut mine = self.order();
        if self.len == 0 {
            for &g in &mine {
                self.gaps[g as usize] = None;
                self.free_gaps.push(g);
            }
            mine.clear();
        }
        let mut moved = Vec::with_capacity(ids.len());
        for &id in ids {
            let gap = from.gaps[id as usize].take().expect("live gap");
            from.free_gaps.push(id);
            let size = gap.body.len();
            let kind = gap.body.sidedness();
            from.account(size, -1);
            from.len -= size;
            from.charge(kind, size);
            for (seq, _) in gap.body.places() {
                from.slots.remove(&seq);
            }
            let mut body = gap.body;
            body.set_counter(&self.counter);
            let n = self.alloc_gap(body);
            self.gm(n).upper = gap.upper;
            self.register(n);
            self.account(size, 1);
            self.len += size;
            self.deposit(kind, size);
            moved.push(n);
        }
        from.relink(&rest);
        let all: Vec<u32> = if front {
            moved.iter().chain(mine.iter()).copied().collect()
        } else {
            mine.iter().chain(moved.iter()).copied().collect()
        };
        self.relink(&all);
    }

    /// Rewrites the gap list to `ids`, in order. Creates an empty gap when
    /// `ids` is empty.
    fn relink(&mut self, ids: &[u32]) {
        if ids.is_empty() {
            let n = self.alloc_gap(Body::empty(Sidedness::ZeroSided, &self.counter));
            self.first = n;
            self.last = n;
            return;
        }
        for (i, &g) in ids.iter().enumerate() {
            let prev = if i == 0 { NIL } else { ids[i - 1] };
            let next = ids.get(i + 1).copied().unwrap_or(NIL);
            let gap = self.gm(g);
            gap.prev = prev;
            gap.next = next;
        }
        self.first = ids[0];
        self.last = *ids.last().unwrap();
    }
}

/// Counts top entries of a heap satisfying `pred`, which must hold for a
/// prefix of the heap order. Selects 1, 2, 4, … top entries until one fails
/// the predicate; past half the heap every entry is tested instead.
fn count_from_top<K: Ord, V>(h: &mut FibHeap<K, V>, pred: impl Fn(&Entry<K, V>) -> bool) -> usize {
    let mut j = 1;
    loop {
        if 2 * j > h.len() {
            return h.iter().filter(|(_, e)| pred(e)).count();
        }
        let hs = h.select_k_handles(j);
        let c = hs
            .iter()
            .filter(|&&x| pred(h.get(x).expect("selected")))
            .count();
        if c < j {
            return c;
        }
        j *= 2;
    }
}

/// Separator between the last entry of `left` and the first of `right`,
/// read off an exposed extreme when possible.
fn boundary<K: Ord + Clone, V: Clone>(left: &Lst<K, V>, right: &Lst<K, V>) -> Sep<K> {
    let lg = left
        .order()
        .into_iter()
        .rev()
        .find(|&g| left.g(g).body.len() > 0)
        .expect("non-empty");
    let rg = right
        .order()
        .into_iter()
        .find(|&g| right.g(g).body.len() > 0)
        .expect("non-empty");
    let (lb, rb) = (&left.g(lg).body, &right.g(rg).body);
    if let Some(e) = lb.max_entry() {
        return Sep::at_most(e.key.clone(), e.seq);
    }
    if let Some(e) = rb.min_entry() {
        return Sep::below(e.key.clone(), e.seq);
    }
    let counter = &left.counter;
    if lb.len() <= rb.len() {
        let e = lb
            .entries()
            .reduce(|a, b| if compare(a, b, counter).is_lt() { b } else { a })
            .unwrap();
        Sep::at_most(e.key.clone(), e.seq)
    } else {
        let e = rb
            .entries()
            .reduce(|a, b| if compare(a, b, counter).is_lt() { a } else { b })
            .unwrap();
        Sep::below(e.key.clone(), e.seq)
    }
}
