use serde::{Deserialize, Serialize};

use crate::kernels::SortStats;

/// Deterministic per-rank operation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostCounters {
    pub comparisons: u64,
    pub swaps: u64,
    pub element_moves: u64,
    pub messages_sent: u64,
    pub bytes_sent: u64,
    pub peak_tracked_elements: u64,
    pub max_recursion_depth: u64,
}

impl CostCounters {
    pub(crate) fn absorb(&mut self, stats: &SortStats) {
        self.comparisons += stats.comparisons;
        self.swaps += stats.swaps;
        self.element_moves += stats.moves;
        self.max_recursion_depth = self.max_recursion_depth.max(stats.max_depth);
    }

    /// Field-wise sum, with maxima for the peak and depth fields.
    pub fn total<'a>(all: impl IntoIterator<Item = &'a CostCounters>) -> CostCounters {
        all.into_iter().fold(CostCounters::default(), |mut acc, c| {
            acc.comparisons += c.comparisons;
            acc.swaps += c.swaps;
            acc.element_moves += c.element_moves;
            acc.messages_sent += c.messages_sent;
            acc.bytes_sent += c.bytes_sent;
            acc.peak_tracked_elements = acc.peak_tracked_elements.max(c.peak_tracked_elements);
            acc.max_recursion_depth = acc.max_recursion_depth.max(c.max_recursion_depth);
            acc
        })
    }
}

/// Element-denominated accounting of live buffers on one rank.
#[derive(Debug, Default)]
pub(crate) struct Allocations {
    pub current: u64,
    pub peak: u64,
    window_peak: u64,
}

impl Allocations {
    pub fn alloc(&mut self, n: u64) {
        self.current += n;
        self.peak = self.peak.max(self.current);
        self.window_peak = self.window_peak.max(self.current);
    }

    pub fn free(&mut self, rank: usize, n: u64) {
        assert!(
            n <= self.current,
            "rank {rank}: tracked_free({n}) exceeds live balance {}",
            self.current
        );
        self.current -= n;
    }

    /// Starts a new peak window at the current balance and returns the peak
    /// of the window that just closed.
    pub fn rewindow(&mut self) -> u64 {
        std::mem::replace(&mut self.window_peak, self.current)
    }
}
