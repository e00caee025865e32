//! Instrumented sequential sorting kernels.
//!
//! Each kernel follows a fixed textbook outline so that its operation counts
//! are predictable: bubble sort with the data-oblivious double loop, top-down
//! merge sort that splits at `(first + last) / 2`, and quick sort with a
//! middle pivot and a single forward partition pass. Kernels only touch the
//! slice they are given and the caller's [`SortStats`].

use serde::{Deserialize, Serialize};

use crate::Element;

/// Operation counts accumulated by the kernels.
///
/// `moves` counts element assignments; a [`swap`] is three of them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortStats {
    pub comparisons: u64,
    pub swaps: u64,
    pub moves: u64,
    pub max_depth: u64,
}

impl SortStats {
    /// Weighted cost with unit weight per comparison and per element move.
    pub fn weight(&self) -> u64 {
        self.comparisons + self.moves
    }

    pub fn absorb(&mut self, other: &SortStats) {
        self.comparisons += other.comparisons;
        self.swaps += other.swaps;
        self.moves += other.moves;
        self.max_depth = self.max_depth.max(other.max_depth);
    }

    fn reach_depth(&mut self, depth: u64) {
        self.max_depth = self.max_depth.max(depth);
    }
}

/// Exchanges `block[i]` and `block[j]` through a temporary.
///
/// Panics if either index is out of range.
#[allow(clippy::manual_swap)]
pub fn swap(block: &mut [Element], i: usize, j: usize, stats: &mut SortStats) {
    let temp = block[i];
    block[i] = block[j];
    block[j] = temp;
    stats.swaps += 1;
    stats.moves += 3;
}

/// Bubble sort with the outer index running from `s - 2` down to `0`.
///
/// Performs exactly `s * (s - 1) / 2` comparisons for every input.
pub fn bubble_sort(block: &mut [Element], stats: &mut SortStats) {
    let s = block.len();
    if s < 2 {
        return;
    }
    for i in (0..=s - 2).rev() {
        for j in 0..=i {
            stats.comparisons += 1;
            if block[j] > block[j + 1] {
                swap(block, j, j + 1, stats);
            }
        }
    }
}

/// Stable two-way merge of sorted runs into `out`, which must hold exactly
/// `a.len() + b.len()` elements. Ties take from `a` first.
pub(crate) fn merge_into(a: &[Element], b: &[Element], out: &mut [Element], stats: &mut SortStats) {
    debug_assert_eq!(out.len(), a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    for slot in out.iter_mut() {
        let take_a = if i == a.len() {
            false
        } else if j == b.len() {
            true
        } else {
            stats.comparisons += 1;
            a[i] <= b[j]
        };
        if take_a {
            *slot = a[i];
            i += 1;
        } else {
            *slot = b[j];
            j += 1;
        }
    }
    stats.moves += out.len() as u64;
}

/// Merges two sorted runs into a new sorted vector.
pub fn merge(run_a: &[Element], run_b: &[Element], stats: &mut SortStats) -> Vec<Element> {
    let mut out = vec![0; run_a.len() + run_b.len()];
    merge_into(run_a, run_b, &mut out, stats);
    out
}

/// Sorts `block[first..=last]` in place.
///
/// `scratch` must be at least as long as `block`; one buffer serves the whole
/// recursion. An empty range (`first > last`) and a single element both return
/// immediately.
pub fn merge_sort(
    block: &mut [Element],
    first: usize,
    last: usize,
    scratch: &mut [Element],
    stats: &mut SortStats,
) {
    assert!(
        scratch.len() >= block.len(),
        "merge_sort scratch holds {} elements, block needs {}",
        scratch.len(),
        block.len()
    );
    if first >= last {
        return;
    }
    merge_sort_rec(block, first, last, scratch, stats, 1);
}

fn merge_sort_rec(
    block: &mut [Element],
    first: usize,
    last: usize,
    scratch: &mut [Element],
    stats: &mut SortStats,
    depth: u64,
) {
    if last == first {
        return;
    }
    stats.reach_depth(depth);
    let mid = (first + last) / 2;
    merge_sort_rec(block, first, mid, scratch, stats, depth + 1);
    merge_sort_rec(block, mid + 1, last, scratch, stats, depth + 1);

    let (lower, upper) = block[first..=last].split_at(mid - first + 1);
    let out = &mut scratch[first..=last];
    merge_into(lower, upper, out, stats);
    block[first..=last].copy_from_slice(out);
    stats.moves += out.len() as u64;
}

/// Convenience wrapper sorting the whole block, including the empty one.
pub fn merge_sort_block(block: &mut [Element], scratch: &mut [Element], stats: &mut SortStats) {
    if let Some(last) = block.len().checked_sub(1) {
        merge_sort(block, 0, last, scratch, stats);
    }
}

/// Quick sort of `block[start..start + length]`.
///
/// The pivot is the middle element, swapped to the front; one pass moves
/// smaller elements behind it, then the pivot is swapped into place and both
/// sides are sorted recursively. Not stable; all-equal input degrades to
/// linear recursion depth.
pub fn quick_sort(block: &mut [Element], start: usize, length: usize, stats: &mut SortStats) {
    assert!(
        start + length <= block.len(),
        "quick_sort segment {start}+{length} exceeds block of {}",
        block.len()
    );
    quick_sort_rec(block, start, length, stats, 1);
}

fn quick_sort_rec(block: &mut [Element], start: usize, length: usize, stats: &mut SortStats, depth: u64) {
    if length <= 1 {
        return;
    }
    stats.reach_depth(depth);
    let pivot = block[start + length / 2];
    swap(block, start, start + length / 2, stats);

    let mut pstart = start;
    for i in start + 1..start + length {
        stats.comparisons += 1;
        if block[i] < pivot {
            pstart += 1;
            swap(block, i, pstart, stats);
        }
    }
    swap(block, start, pstart, stats);

    quick_sort_rec(block, start, pstart - start, stats, depth + 1);
    quick_sort_rec(block, pstart + 1, start + length - pstart - 1, stats, depth + 1);
}

/// True iff the sequence is non-decreasing.
pub fn is_sorted(seq: &[Element]) -> bool {
    seq.windows(2).all(|w| w[0] <= w[1])
}
