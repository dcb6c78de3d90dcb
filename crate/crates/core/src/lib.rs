//! Selectable heaps and the lazy search tree built on them.
//!
//! * [`softheap`]: soft heap reporting the entries each extraction corrupts.
//! * [`select`]: k-smallest selection on heap-ordered trees and on plain
//!   sequences.
//! * [`fibheap`]: Fibonacci heap with `select_k`, `extract_k` and
//!   multi-element delete.
//! * [`lst`]: lazy search tree sorted dictionary.
//! * [`bench`]: workload generation, oracle engine and comparison reporting
//!   behind the `lazydict` binary.

pub mod bench;
pub mod fibheap;
pub mod lst;
pub mod order;
pub mod par;
pub mod select;
pub mod softheap;

pub use order::{compare, Comparator, Counter, Direction, Entry, EntryOrder};
