//! Scatter / sort / odd-even merge / gather.
//!
//! Rank 0 owns the input. It broadcasts the partition size and length,
//! scatters contiguous blocks, and every rank sorts its block with the
//! selected kernel. Then `p` phases of odd-even transposition follow: in each
//! phase neighbouring ranks exchange whole blocks and each keeps its half of
//! the merged pair (the lower rank the low half). When `p` does not divide
//! `n` the shorter blocks are padded with `Element::MAX` for the merge phase.
//! After the last phase rank 0 gathers the blocks in rank order and drops the
//! padding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, SortStats};
use crate::model::MemoryConstants;
use crate::runtime::{spawn_world, Communicator, Tag, WorldConfig, WorldReport};
use crate::{Element, Rank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmId {
    Bubble,
    Merge,
    Quick,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 3] = [AlgorithmId::Bubble, AlgorithmId::Merge, AlgorithmId::Quick];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::Bubble => "bubble",
            AlgorithmId::Merge => "merge",
            AlgorithmId::Quick => "quick",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bubble" => Ok(AlgorithmId::Bubble),
            "merge" => Ok(AlgorithmId::Merge),
            "quick" => Ok(AlgorithmId::Quick),
            other => Err(Error::config(format!(
                "unknown algorithm {other:?} (expected bubble, merge or quick)"
            ))),
        }
    }
}

/// Block lengths for `n` elements over `p` ranks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub n: usize,
    pub p: usize,
    pub sizes: Vec<usize>,
}

/// The first `n % p` ranks get `ceil(n / p)` elements, the rest `floor(n / p)`.
pub fn plan_partition(n: usize, p: usize) -> Result<PartitionPlan> {
    if p == 0 {
        return Err(Error::config("cannot partition over zero processes"));
    }
    let (base, extra) = (n / p, n % p);
    let sizes = (0..p).map(|i| base + usize::from(i < extra)).collect();
    Ok(PartitionPlan { n, p, sizes })
}

/// Which half of a merged pair a rank keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Keep {
    Low,
    High,
}

/// Returns the `mine.len()` smallest (`Low`) or largest (`High`) elements of
/// the merge of two sorted blocks, in ascending order.
///
/// Only the kept part is materialised: comparisons are at most `mine.len()`
/// and moves exactly `mine.len()`.
pub fn merge_split(mine: &[Element], theirs: &[Element], keep: Keep, stats: &mut SortStats) -> Vec<Element> {
    let want = mine.len();
    let mut out = Vec::with_capacity(want);
    match keep {
        Keep::Low => {
            let (mut i, mut j) = (0, 0);
            while out.len() < want {
                let take_mine = if j == theirs.len() {
                    true
                } else {
                    stats.comparisons += 1;
                    mine[i] <= theirs[j]
                };
                if take_mine {
                    out.push(mine[i]);
                    i += 1;
                } else {
                    out.push(theirs[j]);
                    j += 1;
                }
            }
        }
        Keep::High => {
            let (mut i, mut j) = (mine.len(), theirs.len());
            while out.len() < want {
                let take_mine = if j == 0 {
                    true
                } else {
                    stats.comparisons += 1;
                    mine[i - 1] >= theirs[j - 1]
                };
                if take_mine {
                    i -= 1;
                    out.push(mine[i]);
                } else {
                    j -= 1;
                    out.push(theirs[j]);
                }
            }
            out.reverse();
        }
    }
    stats.moves += want as u64;
    out
}

/// Partner maps for the `p` phases of odd-even transposition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub p: usize,
    /// `phases[k]` lists the `(lower, upper)` rank pairs active in phase `k`.
    pub phases: Vec<Vec<(Rank, Rank)>>,
}

impl PhaseSchedule {
    /// In phase `k`, rank `r` pairs with `r + 1` when `r` has the parity of `k`.
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "a schedule needs at least one process");
        let phases = (0..p)
            .map(|k| {
                (k % 2..p.saturating_sub(1))
                    .step_by(2)
                    .map(|r| (r, r + 1))
                    .collect()
            })
            .collect();
        PhaseSchedule { p, phases }
    }

    pub fn partner(&self, phase: usize, rank: Rank) -> Option<(Rank, Keep)> {
        self.phases[phase].iter().find_map(|&(lo, hi)| {
            if lo == rank {
                Some((hi, Keep::Low))
            } else if hi == rank {
                Some((lo, Keep::High))
            } else {
                None
            }
        })
    }
}

pub fn build_schedule(p: usize) -> PhaseSchedule {
    PhaseSchedule::new(p)
}

/// A sequential kernel together with its working-memory needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel {
    algorithm: AlgorithmId,
}

impl Kernel {
    pub fn algorithm(&self) -> AlgorithmId {
        self.algorithm
    }

    /// Scratch buffer length for a block of `s` elements.
    pub fn scratch_len(&self, s: usize) -> usize {
        match self.algorithm {
            AlgorithmId::Merge => s,
            AlgorithmId::Bubble | AlgorithmId::Quick => 0,
        }
    }

    /// Elements of working memory held for the whole sort: the scratch
    /// buffer, or the single temporary of the exchange for bubble sort.
    /// Quick sort's stack is accounted separately from its recursion depth.
    pub fn workspace(&self, s: usize) -> usize {
        match self.algorithm {
            AlgorithmId::Bubble => 1,
            AlgorithmId::Merge => s,
            AlgorithmId::Quick => 0,
        }
    }

    pub fn sort(&self, block: &mut [Element], scratch: &mut [Element], stats: &mut SortStats) {
        match self.algorithm {
            AlgorithmId::Bubble => kernels::bubble_sort(block, stats),
            AlgorithmId::Merge => kernels::merge_sort_block(block, scratch, stats),
            AlgorithmId::Quick => {
                let n = block.len();
                kernels::quick_sort(block, 0, n, stats)
            }
        }
    }
}

pub fn select_kernel(algorithm: AlgorithmId) -> Kernel {
    Kernel { algorithm }
}

/// What one rank hands back from the driver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankOutcome {
    /// The gathered list at rank 0, empty elsewhere.
    pub gathered: Vec<Element>,
    /// Peak tracked elements while the local sort ran.
    pub sort_phase_peak: u64,
    /// Counts from the local sort alone.
    pub local_sort: SortStats,
    /// Block length after the local sort, then after each merge phase the
    /// rank took part in (padded to the widest block).
    pub block_lengths: Vec<usize>,
}

#[derive(Debug)]
pub struct SortOutcome {
    pub sorted: Vec<Element>,
    pub report: WorldReport,
    pub ranks: Vec<RankOutcome>,
}

/// Sorts `data` with `p = world.procs` ranks.
pub fn scatter_merge_sort(world: &WorldConfig, algorithm: AlgorithmId, data: &[Element]) -> Result<SortOutcome> {
    let out = spawn_world(world, |c| sort_rank(c, algorithm, data))?;
    let sorted = out.results[0].gathered.clone();
    Ok(SortOutcome {
        sorted,
        report: out.report,
        ranks: out.results,
    })
}

const MASTER: Rank = 0;

fn sort_rank(c: &mut Communicator<'_>, algorithm: AlgorithmId, data: &[Element]) -> Result<RankOutcome> {
    let p = c.size();
    let me = c.rank();

    // scatter phase
    let header = if me == MASTER {
        c.tracked_alloc(data.len());
        let plan = plan_partition(data.len(), p)?;
        vec![plan.sizes[0] as Element, data.len() as Element]
    } else {
        Vec::new()
    };
    let header = c.broadcast(MASTER, header)?;
    let n = header[1] as usize;
    let plan = plan_partition(n, p)?;
    let list = if me == MASTER { data } else { &[] };
    let mut block = c.scatter(MASTER, list, &plan.sizes)?;
    if me == MASTER {
        // the master's block stays in the front of the original list
        c.tracked_free(n - block.len());
    } else {
        c.tracked_alloc(block.len());
    }
    c.barrier()?;

    // sort phase
    let kernel = select_kernel(algorithm);
    let s = block.len();
    c.tracked_window();
    c.tracked_alloc(kernel.workspace(s));
    let local_sort = c.compute_section(|st| {
        let mut scratch = vec![0; kernel.scratch_len(s)];
        kernel.sort(&mut block, &mut scratch, st);
        *st
    });
    let depth = local_sort.max_depth;
    if algorithm == AlgorithmId::Quick {
        let frames = (MemoryConstants::default().c1 * depth) as usize;
        c.tracked_alloc(frames);
        c.tracked_free(frames);
    }
    c.tracked_free(kernel.workspace(s));
    let sort_phase_peak = c.tracked_window();
    let mut block_lengths = vec![block.len()];

    // Odd-even transposition of blocks sorts in p phases only when all blocks
    // have the same length, so short blocks carry one maximal sentinel.
    let width = plan.sizes[0];
    if block.len() < width {
        c.tracked_alloc(width - block.len());
        block.resize(width, Element::MAX);
    }

    // merge phase
    let schedule = build_schedule(p);
    for phase in 0..p {
        let Some((partner, keep)) = schedule.partner(phase, me) else {
            continue;
        };
        let tag = phase as Tag;
        let theirs = match keep {
            Keep::Low => {
                c.send(partner, tag, &block)?;
                c.recv(partner, tag)?
            }
            Keep::High => {
                let theirs = c.recv(partner, tag)?;
                c.send(partner, tag, &block)?;
                theirs
            }
        };
        c.tracked_alloc(theirs.len() + block.len());
        let kept = c.compute_section(|st| merge_split(&block, &theirs, keep, st));
        c.tracked_free(theirs.len() + block.len());
        block = kept;
        block_lengths.push(block.len());
    }

    // gather at the master
    let mut gathered = c.gather(MASTER, &block)?;
    if me == MASTER {
        c.tracked_alloc(gathered.len() - block.len());
        // the sentinels are the largest values, so they end up last
        c.tracked_free(gathered.len() - n);
        gathered.truncate(n);
    } else {
        c.tracked_free(block.len());
    }

    Ok(RankOutcome {
        gathered,
        sort_phase_peak,
        local_sort,
        block_lengths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{Mode, TraceKind};

    fn counted(p: usize) -> WorldConfig {
        WorldConfig::new(p, 1, Mode::Counted)
    }

    #[test]
    fn partition_examples() {
        assert_eq!(plan_partition(200_000, 8).unwrap().sizes, vec![25_000; 8]);
        assert_eq!(plan_partition(5, 1).unwrap().sizes, vec![5]);
        let plan = plan_partition(8, 3).unwrap();
        assert_eq!(plan.sizes, vec![3, 3, 2]);
        assert_eq!(plan.sizes.iter().sum::<usize>(), 8);
        assert_eq!(plan_partition(2, 4).unwrap().sizes, vec![1, 1, 0, 0]);
        assert!(matches!(plan_partition(3, 0), Err(Error::Config(_))));
    }

    #[test]
    fn uneven_blocks_with_maximal_values() {
        // blocks [1,1] [1] [0] [0] need the padding to sort in four phases
        let out = scatter_merge_sort(&counted(4), AlgorithmId::Quick, &[1, 1, 1, 0, 0]).unwrap();
        assert_eq!(out.sorted, [0, 0, 1, 1, 1]);
        let data = [Element::MAX, 3, Element::MAX, -1, 0, Element::MIN, Element::MAX];
        let out = scatter_merge_sort(&counted(3), AlgorithmId::Merge, &data).unwrap();
        let mut want = data.to_vec();
        want.sort_unstable();
        assert_eq!(out.sorted, want);
    }

    #[test]
    fn merge_split_examples() {
        let mut st = SortStats::default();
        assert_eq!(merge_split(&[1, 3, 5], &[2, 4, 6], Keep::Low, &mut st), [1, 2, 3]);
        assert_eq!(merge_split(&[2, 4, 6], &[1, 3, 5], Keep::High, &mut st), [4, 5, 6]);
        assert_eq!(merge_split(&[1, 2], &[0, 0, 0], Keep::Low, &mut st), [0, 0]);
        assert_eq!(merge_split(&[], &[1], Keep::High, &mut st), Vec::<Element>::new());
    }

    #[test]
    fn merge_split_costs() {
        let mut st = SortStats::default();
        merge_split(&[1, 3, 5, 7], &[2, 4, 6, 8], Keep::Low, &mut st);
        assert!(st.comparisons <= 4);
        assert_eq!(st.moves, 4);
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(build_schedule(1).phases, vec![Vec::<(Rank, Rank)>::new()]);
        assert_eq!(build_schedule(2).phases, vec![vec![(0, 1)], vec![]]);
        assert_eq!(
            build_schedule(4).phases,
            vec![
                vec![(0, 1), (2, 3)],
                vec![(1, 2)],
                vec![(0, 1), (2, 3)],
                vec![(1, 2)]
            ]
        );
        let s = build_schedule(4);
        assert_eq!(s.partner(1, 2), Some((1, Keep::High)));
        assert_eq!(s.partner(1, 0), None);
    }

    #[test]
    fn schedule_pairing_is_symmetric() {
        for p in 1..20 {
            let s = build_schedule(p);
            assert_eq!(s.phases.len(), p);
            for phase in 0..p {
                for r in 0..p {
                    if let Some((q, keep)) = s.partner(phase, r) {
                        let (back, other) = s.partner(phase, q).unwrap();
                        assert_eq!(back, r);
                        assert_ne!(keep, other);
                        assert_eq!(r.min(q) % 2, phase % 2);
                    }
                }
            }
        }
    }

    #[test]
    fn select_kernel_maps_each_algorithm() {
        let input = [5, 1, 4, 2, 8, 0];
        for algo in AlgorithmId::ALL {
            let k = select_kernel(algo);
            assert_eq!(k.algorithm(), algo);
            let mut a = input.to_vec();
            let mut scratch = vec![0; k.scratch_len(a.len())];
            let mut sa = SortStats::default();
            k.sort(&mut a, &mut scratch, &mut sa);

            let mut b = input.to_vec();
            let mut sb = SortStats::default();
            match algo {
                AlgorithmId::Bubble => kernels::bubble_sort(&mut b, &mut sb),
                AlgorithmId::Merge => kernels::merge_sort_block(&mut b, &mut [0; 6], &mut sb),
                AlgorithmId::Quick => kernels::quick_sort(&mut b, 0, 6, &mut sb),
            }
            assert_eq!((a, sa), (b, sb));
        }
    }

    #[test]
    fn single_process_degenerates_to_the_kernel() {
        for algo in AlgorithmId::ALL {
            let out = scatter_merge_sort(&counted(1), algo, &[3, 1, 2]).unwrap();
            assert_eq!(out.sorted, [1, 2, 3]);
            let trace = &out.report.traces[0];
            assert!(!trace.iter().any(|e| matches!(e.kind, TraceKind::Send | TraceKind::Recv)));
            assert_eq!(out.report.total_counters().messages_sent, 0);
        }
    }

    #[test]
    fn two_process_bubble_example() {
        let out = scatter_merge_sort(&counted(2), AlgorithmId::Bubble, &[4, 3, 2, 1]).unwrap();
        assert_eq!(out.sorted, [1, 2, 3, 4]);
        // local sorts: 1 comparison each; phase 0 merge_split of [3,4] with [1,2]
        for (rank, counters) in out.report.counters.iter().enumerate() {
            let trace = &out.report.traces[rank];
            let sends = trace.iter().filter(|e| e.kind == TraceKind::Send).count();
            let recvs = trace.iter().filter(|e| e.kind == TraceKind::Recv).count();
            assert_eq!((sends, recvs), (1, 1));
            assert!(counters.comparisons >= 1);
        }
    }

    #[test]
    fn empty_input_returns_empty() {
        for p in [1, 3] {
            let out = scatter_merge_sort(&counted(p), AlgorithmId::Merge, &[]).unwrap();
            assert!(out.sorted.is_empty());
        }
    }

    #[test]
    fn block_lengths_are_stable_across_phases() {
        let data: Vec<Element> = (0..23).rev().collect();
        let out = scatter_merge_sort(&counted(4), AlgorithmId::Quick, &data).unwrap();
        let plan = plan_partition(23, 4).unwrap();
        for (rank, r) in out.ranks.iter().enumerate() {
            assert_eq!(r.block_lengths[0], plan.sizes[rank]);
            assert!(r.block_lengths[1..].iter().all(|&l| l == plan.sizes[0]));
        }
        assert_eq!(out.sorted, (0..23).collect::<Vec<_>>());
    }

    #[test]
    fn merge_sort_sort_phase_holds_a_duplicate() {
        let data: Vec<Element> = (0..1000).map(|i| (i * 7919) % 1000).collect();
        let out = scatter_merge_sort(&counted(1), AlgorithmId::Merge, &data).unwrap();
        assert_eq!(out.ranks[0].sort_phase_peak, 2000);
        assert_eq!(out.report.counters[0].peak_tracked_elements, 2000);
    }
}
