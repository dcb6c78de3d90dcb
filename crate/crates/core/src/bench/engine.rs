//! Engines that replay a workload: the lazy search tree, the Fibonacci heap
//! and a sorted brute-force oracle.
//!
//! Every engine renders its answers in one canonical text form so answer
//! streams can be diffed line by line. Lists of entries are printed as
//! `key:ref` sorted by `(key, ref)`; that sort is harness work and is not
//! counted.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::workload::Op;
use crate::fibheap::{FibHeap, Handle};
use crate::lst::{ElemId, KeyAnswer, Lst, LstError};
use crate::order::{Counter, Direction, Entry};

pub const ERR: &str = "ERR";
pub const OK: &str = "ok";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Lst,
    FibHeap,
    Oracle,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Lst => "lst",
            EngineKind::FibHeap => "fibheap",
            EngineKind::Oracle => "oracle",
        }
    }

    pub fn build(self) -> Box<dyn Engine> {
        match self {
            EngineKind::Lst => Box::new(LstEngine::new()),
            EngineKind::FibHeap => Box::new(FibEngine::new()),
            EngineKind::Oracle => Box::new(OracleEngine::default()),
        }
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [EngineKind::Lst, EngineKind::FibHeap, EngineKind::Oracle]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown engine `{s}`"))
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The workload asks for something the engine cannot do, or breaks the
/// workload rules. Reported as a usage error.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("op {index}: {op} is not supported by the {engine} engine")]
    Unsupported {
        index: usize,
        op: &'static str,
        engine: &'static str,
    },
    #[error("op {index}: {msg}")]
    Invalid { index: usize, msg: String },
}

pub trait Engine: Send {
    fn name(&self) -> &'static str;

    /// Applies op number `index` and returns its canonical answer.
    fn apply(&mut self, index: usize, op: &Op) -> Result<String, EngineError>;

    /// Comparisons performed so far.
    fn comparisons(&self) -> u64;

    /// Entries in the active structure.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Gap count for the tree, root count for the heap, 0 for the oracle.
    fn gaps(&self) -> usize {
        0
    }

    /// `Σ |Δi| log2(n / |Δi|)` over the active structure's gaps.
    fn b(&self) -> f64 {
        0.0
    }

    /// Structural self-check; each string describes one violation.
    fn validate(&self) -> Vec<String> {
        Vec::new()
    }
}

type E = Entry<i64, usize>;

fn show(e: &E) -> String {
    format!("{}:{}", e.key, e.payload)
}

fn show_opt(e: Option<&E>) -> String {
    e.map_or_else(|| "-".to_string(), show)
}

fn show_list<'a>(it: impl IntoIterator<Item = &'a E>) -> String {
    let mut v: Vec<(i64, usize)> = it.into_iter().map(|e| (e.key, e.payload)).collect();
    v.sort_unstable();
    let parts: Vec<String> = v.iter().map(|(k, r)| format!("{k}:{r}")).collect();
    parts.join(" ")
}

fn show_key(rank: usize, contains: bool, pred: Option<&E>, succ: Option<&E>) -> String {
    format!(
        "rank={rank} in={contains} pred={} succ={}",
        show_opt(pred),
        show_opt(succ)
    )
}

fn has_duplicates(refs: &[usize]) -> bool {
    let mut v = refs.to_vec();
    v.sort_unstable();
    v.windows(2).any(|w| w[0] == w[1])
}

/// Lazy search tree engine. `SPLIT r` keeps ranks `1..=r` active and parks
/// the rest until `MERGE`. `EXTRACT_K` and `SELECT_K` split at rank `k`.
pub struct LstEngine {
    active: Lst<i64, usize>,
    parked: Option<Lst<i64, usize>>,
    ids: HashMap<usize, ElemId>,
    counter: Counter,
    fault: bool,
}

impl LstEngine {
    pub fn new() -> Self {
        let counter = Counter::new();
        LstEngine {
            active: Lst::with_counter(counter.clone()),
            parked: None,
            ids: HashMap::new(),
            counter,
            fault: false,
        }
    }

    pub fn tree(&self) -> &Lst<i64, usize> {
        &self.active
    }

    fn take_front(&mut self, k: usize) -> Lst<i64, usize> {
        let k = k.min(self.active.len());
        let rest = self.active.split_off(k).expect("k clamped to len");
        std::mem::replace(&mut self.active, rest)
    }

    fn answer(&mut self, index: usize, op: &Op) -> Result<String, EngineError> {
        Ok(match op {
            Op::Insert(key) => {
                let id = self.active.insert(*key, index);
                self.ids.insert(index, id);
                OK.into()
            }
            Op::Delete(r) => match self.ids.remove(r) {
                Some(id) => show(&self.active.delete(id).expect("live id")),
                None => ERR.into(),
            },
            Op::ChangeKey(r, key) => match self.ids.get(r) {
                Some(&id) => {
                    match self.active.change_key(id, *key) {
                        Ok(()) => {}
                        Err(LstError::OutOfGap) => {
                            let old = self.active.delete(id).expect("live id");
                            self.active
                                .insert_entry(Entry::with_seq(*key, old.seq, old.payload))
                                .expect("seq was just freed");
                        }
                        Err(e) => panic!("change_key on a live id: {e}"),
                    }
                    OK.into()
                }
                None => ERR.into(),
            },
            Op::QueryRank(r) => match self.active.query_by_rank(*r) {
                Ok(e) => show(e),
                Err(_) => ERR.into(),
            },
            Op::QueryKey(key) => {
                let KeyAnswer {
                    rank,
                    contains,
                    pred,
                    succ,
                } = self.active.query_by_key(key);
                show_key(rank, contains, pred.as_ref(), succ.as_ref())
            }
            Op::Split(r) => {
                if *r > self.active.len() {
                    ERR.into()
                } else {
                    let right = self.active.split_off(*r).expect("r within len");
                    self.parked = Some(right);
                    OK.into()
                }
            }
            Op::Merge => match self.parked.take() {
                Some(right) => {
                    let left = std::mem::take(&mut self.active);
                    self.active = left.merge(right);
                    OK.into()
                }
                None => ERR.into(),
            },
            Op::ExtractK(k) => {
                let taken = self.take_front(*k);
                for e in taken.entries() {
                    self.ids.remove(&e.payload);
                }
                show_list(taken.entries())
            }
            Op::SelectK(k) => {
                let taken = self.take_front(*k);
                let out = show_list(taken.entries());
                let rest = std::mem::take(&mut self.active);
                self.active = taken.merge(rest);
                out
            }
            Op::DeleteMulti(refs) => {
                if has_duplicates(refs) || refs.iter().any(|r| !self.ids.contains_key(r)) {
                    return Ok(ERR.into());
                }
                let gone: Vec<E> = refs
                    .iter()
                    .map(|r| {
                        self.active
                            .delete(self.ids.remove(r).unwrap())
                            .expect("live id")
                    })
                    .collect();
                show_list(&gone)
            }
            Op::Fault => {
                self.fault = true;
                OK.into()
            }
        })
    }
}

impl Default for LstEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine for LstEngine {
    fn name(&self) -> &'static str {
        "lst"
    }

    /// After a `FAULT` op the next answer is deliberately wrong.
    fn apply(&mut self, index: usize, op: &Op) -> Result<String, EngineError> {
        let fault = self.fault && !matches!(op, Op::Fault);
        let mut out = self.answer(index, op)?;
        if fault {
            self.fault = false;
            out.push_str(" #");
        }
        Ok(out)
    }

    fn comparisons(&self) -> u64 {
        self.counter.get()
    }

    fn len(&self) -> usize {
        self.active.len()
    }

    fn gaps(&self) -> usize {
        self.active.gap_count()
    }

    fn b(&self) -> f64 {
        self.active.b_value()
    }

    fn validate(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .active
            .validate()
            .iter()
            .map(|v| format!("{v:?}"))
            .collect();
        if let Some(p) = &self.parked {
            out.extend(p.validate().iter().map(|v| format!("parked {v:?}")));
        }
        out
    }
}

/// Fibonacci heap engine. Answers `QUERY_RANK 1` only; no key queries and no
/// split or merge.
pub struct FibEngine {
    heap: FibHeap<i64, usize>,
    handles: HashMap<usize, Handle>,
    counter: Counter,
}

impl FibEngine {
    pub fn new() -> Self {
        let counter = Counter::new();
        FibEngine {
            heap: FibHeap::with_order(Direction::Min, counter.clone()),
            handles: HashMap::new(),
            counter,
        }
    }

    pub fn heap(&self) -> &FibHeap<i64, usize> {
        &self.heap
    }

    fn unsupported(index: usize, op: &Op) -> EngineError {
        EngineError::Unsupported {
            index,
            op: op.name(),
            engine: "fibheap",
        }
    }
}

impl Default for FibEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine for FibEngine {
    fn name(&self) -> &'static str {
        "fibheap"
    }

    fn apply(&mut self, index: usize, op: &Op) -> Result<String, EngineError> {
        Ok(match op {
            Op::Insert(key) => {
                let h = self.heap.push(*key, index);
                self.handles.insert(index, h);
                OK.into()
            }
            Op::Delete(r) => match self.handles.remove(r) {
                Some(h) => show(&self.heap.delete(h).expect("live handle")),
                None => ERR.into(),
            },
            Op::ChangeKey(r, key) => match self.handles.get(r).copied() {
                Some(h) => {
                    if self.heap.improve_key(h, *key).is_err() {
                        let old = self.heap.delete(h).expect("live handle");
                        let h = self
                            .heap
                            .insert(Entry::with_seq(*key, old.seq, old.payload));
                        self.handles.insert(*r, h);
                    }
                    OK.into()
                }
                None => ERR.into(),
            },
            Op::QueryRank(1) => match self.heap.find_min() {
                Ok(e) => show(e),
                Err(_) => ERR.into(),
            },
            Op::ExtractK(k) => {
                let out = self.heap.extract_k(*k);
                for e in &out {
                    self.handles.remove(&e.payload);
                }
                show_list(&out)
            }
            Op::SelectK(k) => show_list(self.heap.select_k(*k)),
            Op::DeleteMulti(refs) => {
                if has_duplicates(refs) || refs.iter().any(|r| !self.handles.contains_key(r)) {
                    return Ok(ERR.into());
                }
                let hs: Vec<Handle> = refs
                    .iter()
                    .map(|r| self.handles.remove(r).unwrap())
                    .collect();
                show_list(&self.heap.delete_multi(&hs).expect("live handles"))
            }
            Op::Fault => OK.into(),
            other => return Err(Self::unsupported(index, other)),
        })
    }

    fn comparisons(&self) -> u64 {
        self.counter.get()
    }

    fn len(&self) -> usize {
        self.heap.len()
    }

    fn gaps(&self) -> usize {
        self.heap.root_count()
    }

    fn validate(&self) -> Vec<String> {
        self.heap
            .validate()
            .iter()
            .map(|v| format!("{v:?}"))
            .collect()
    }
}

/// Sorted vector of `(key, ref)` answering everything by brute force.
/// Performs no counted comparisons.
#[derive(Default)]
pub struct OracleEngine {
    active: Vec<(i64, usize)>,
    parked: Option<Vec<(i64, usize)>>,
}

impl OracleEngine {
    fn pos(&self, r: usize) -> Option<usize> {
        self.active.iter().position(|e| e.1 == r)
    }

    fn put(&mut self, e: (i64, usize)) {
        let i = self.active.partition_point(|x| *x < e);
        self.active.insert(i, e);
    }

    fn entry(e: (i64, usize)) -> E {
        Entry::with_seq(e.0, 0, e.1)
    }

    fn list(v: &[(i64, usize)]) -> String {
        let es: Vec<E> = v.iter().map(|&e| Self::entry(e)).collect();
        show_list(&es)
    }
}

impl Engine for OracleEngine {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn apply(&mut self, index: usize, op: &Op) -> Result<String, EngineError> {
        Ok(match op {
            Op::Insert(key) => {
                self.put((*key, index));
                OK.into()
            }
            Op::Delete(r) => match self.pos(*r) {
                Some(i) => show(&Self::entry(self.active.remove(i))),
                None => ERR.into(),
            },
            Op::ChangeKey(r, key) => match self.pos(*r) {
                Some(i) => {
                    self.active.remove(i);
                    self.put((*key, *r));
                    OK.into()
                }
                None => ERR.into(),
            },
            Op::QueryRank(r) => match r.checked_sub(1).and_then(|i| self.active.get(i)) {
                Some(&e) => show(&Self::entry(e)),
                None => ERR.into(),
            },
            Op::QueryKey(key) => {
                let below = self.active.partition_point(|e| e.0 < *key);
                let contains = self.active.get(below).is_some_and(|e| e.0 == *key);
                let pred = below.checked_sub(1).map(|i| Self::entry(self.active[i]));
                let succ = self.active.get(below).map(|&e| Self::entry(e));
                show_key(
                    below + contains as usize,
                    contains,
                    pred.as_ref(),
                    succ.as_ref(),
                )
            }
            Op::Split(r) => {
                if *r > self.active.len() {
                    ERR.into()
                } else {
                    self.parked = Some(self.active.split_off(*r));
                    OK.into()
                }
            }
            Op::Merge => match self.parked.take() {
                Some(right) => {
                    self.active.extend(right);
                    OK.into()
                }
                None => ERR.into(),
            },
            Op::ExtractK(k) => {
                let k = (*k).min(self.active.len());
                let out: Vec<_> = self.active.drain(..k).collect();
                Self::list(&out)
            }
            Op::SelectK(k) => Self::list(&self.active[..(*k).min(self.active.len())]),
            Op::DeleteMulti(refs) => {
                if has_duplicates(refs) || refs.iter().any(|r| self.pos(*r).is_none()) {
                    return Ok(ERR.into());
                }
                let mut gone = Vec::new();
                for r in refs {
                    let i = self.pos(*r).unwrap();
                    gone.push(self.active.remove(i));
                }
                Self::list(&gone)
            }
            Op::Fault => OK.into(),
        })
    }

    fn comparisons(&self) -> u64 {
        0
    }

    fn len(&self) -> usize {
        self.active.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(text: &str) -> Vec<Op> {
        super::super::workload::Workload::parse(text).unwrap().ops
    }

    fn answers(kind: EngineKind, ops: &[Op]) -> Vec<String> {
        let mut e = kind.build();
        ops.iter()
            .enumerate()
            .map(|(i, op)| e.apply(i, op).unwrap())
            .collect()
    }

    #[test]
    fn oracle_key_query_with_duplicates() {
        let w =
            ops("INSERT 5\nINSERT 3\nINSERT 5\nINSERT 8\nQUERY_KEY 5\nQUERY_KEY 6\nQUERY_KEY 9\n");
        let a = answers(EngineKind::Oracle, &w);
        assert_eq!(a[4], "rank=2 in=true pred=3:1 succ=5:0");
        assert_eq!(a[5], "rank=3 in=false pred=5:2 succ=8:3");
        assert_eq!(a[6], "rank=4 in=false pred=8:3 succ=-");
    }

    #[test]
    fn lst_matches_oracle_on_small_script() {
        let w = ops(
            "INSERT 5\nINSERT 3\nINSERT 5\nINSERT 8\nINSERT 1\nQUERY_RANK 2\nCHANGE_KEY 1 9\nQUERY_KEY 5\n\
             SPLIT 2\nQUERY_RANK 2\nQUERY_RANK 3\nMERGE\nSELECT_K 3\nEXTRACT_K 2\nDELETE 0\nDELETE 0\n\
             DELETE_MULTI 1 3\nQUERY_RANK 1\nQUERY_RANK 5\n",
        );
        assert_eq!(
            answers(EngineKind::Lst, &w),
            answers(EngineKind::Oracle, &w)
        );
    }

    #[test]
    fn fault_corrupts_next_answer() {
        let w = ops("INSERT 1\nFAULT\nQUERY_RANK 1\nQUERY_RANK 1\n");
        let a = answers(EngineKind::Lst, &w);
        let b = answers(EngineKind::Oracle, &w);
        assert_eq!(a[1], b[1]);
        assert_ne!(a[2], b[2]);
        assert_eq!(a[3], b[3]);
    }

    #[test]
    fn fibheap_rejects_dictionary_ops() {
        let mut e = EngineKind::FibHeap.build();
        e.apply(0, &Op::Insert(1)).unwrap();
        assert!(matches!(
            e.apply(1, &Op::QueryKey(1)),
            Err(EngineError::Unsupported { index: 1, .. })
        ));
        assert!(e.apply(2, &Op::QueryRank(2)).is_err());
    }

    #[test]
    fn fibheap_agrees_on_heap_ops() {
        let w = ops(
            "INSERT 5\nINSERT 3\nINSERT 5\nINSERT 8\nINSERT 1\nQUERY_RANK 1\nCHANGE_KEY 4 9\nCHANGE_KEY 3 0\n\
             SELECT_K 2\nEXTRACT_K 2\nDELETE_MULTI 0 4\nQUERY_RANK 1\n",
        );
        assert_eq!(
            answers(EngineKind::FibHeap, &w),
            answers(EngineKind::Oracle, &w)
        );
    }
}
