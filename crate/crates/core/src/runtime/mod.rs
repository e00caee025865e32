//! Rank-based message-passing runtime.
//!
//! [`spawn_world`] runs the same program on `procs` logical processes, each a
//! thread with its own [`Communicator`]. Ranks share nothing but messages.
//! At most `cores` ranks execute a [`Communicator::compute_section`] at once,
//! which stands in for the number of physical cores.
//!
//! In [`Mode::Wall`] timestamps are wall-clock nanoseconds. In
//! [`Mode::Counted`] they are logical: a compute section lasts
//! `comparisons + moves`, a message costs `latency + per_element * len` to
//! send, and a receive completes no earlier than the matching send. Counted
//! worlds are bit-for-bit reproducible.

mod comm;
mod counters;
mod engine;
mod trace;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use comm::Communicator;
pub use counters::CostCounters;
pub use engine::Tag;
pub use trace::{write_trace_jsonl, TimeBreakdown, TraceEvent, TraceKind};

use crate::error::{Error, Result};
use engine::Shared;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Wall,
    Counted,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Wall => "wall",
            Mode::Counted => "counted",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wall" => Ok(Mode::Wall),
            "counted" => Ok(Mode::Counted),
            other => Err(Error::config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Counted-mode message cost: `latency` per message plus `per_element` per
/// payload element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostWeights {
    pub latency: u64,
    pub per_element: u64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            latency: 1000,
            per_element: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub procs: usize,
    pub cores: usize,
    pub mode: Mode,
    pub weights: CostWeights,
}

impl WorldConfig {
    pub fn new(procs: usize, cores: usize, mode: Mode) -> Self {
        WorldConfig {
            procs,
            cores,
            mode,
            weights: CostWeights::default(),
        }
    }
}

/// Everything a finished world measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldReport {
    pub config: WorldConfig,
    /// Per-rank timelines; each tiles `[0, rank_end[rank]]` without gaps.
    pub traces: Vec<Vec<TraceEvent>>,
    pub counters: Vec<CostCounters>,
    pub rank_end: Vec<u64>,
    /// Wall nanoseconds, or the largest logical clock in counted mode.
    pub elapsed: u64,
    /// Most compute sections observed running at the same time.
    pub slot_high_water: usize,
    pub messages_delivered: u64,
    pub messages_received: u64,
    pub undelivered: u64,
}

impl WorldReport {
    /// All events ordered by start time, then rank.
    pub fn merged_trace(&self) -> Vec<TraceEvent> {
        let mut all: Vec<TraceEvent> = self.traces.iter().flatten().copied().collect();
        all.sort_by_key(|e| (e.t_start, e.rank, e.t_end));
        all
    }

    pub fn breakdowns(&self) -> Vec<TimeBreakdown> {
        self.traces.iter().map(|t| TimeBreakdown::of(t)).collect()
    }

    pub fn total_counters(&self) -> CostCounters {
        CostCounters::total(&self.counters)
    }

    /// Sum of every rank's compute and message-send costs in counted units.
    pub fn total_work(&self) -> u64 {
        let c = self.total_counters();
        let w = self.config.weights;
        c.comparisons
            + c.element_moves
            + c.messages_sent * w.latency
            + c.bytes_sent / crate::ELEMENT_BYTES * w.per_element
    }
}

/// Result values returned by each rank, plus the world's measurements.
#[derive(Debug)]
pub struct WorldOutput<T> {
    pub results: Vec<T>,
    pub report: WorldReport,
}

static WALL_WORLD: Mutex<()> = Mutex::new(());

/// Runs `program` on every rank of a fresh world and waits for all of them.
///
/// Returns the first configuration error raised by any rank, otherwise a
/// panic, otherwise a deadlock naming the blocked ranks.
pub fn spawn_world<T, F>(config: &WorldConfig, program: F) -> Result<WorldOutput<T>>
where
    T: Send,
    F: Fn(&mut Communicator<'_>) -> Result<T> + Sync,
{
    if config.procs == 0 {
        return Err(Error::config("a world needs at least one process"));
    }
    if config.cores == 0 {
        return Err(Error::config("a world needs at least one core slot"));
    }
    // wall-clock worlds run one at a time so they don't perturb each other
    let _exclusive = match config.mode {
        Mode::Wall => Some(WALL_WORLD.lock().unwrap_or_else(|e| e.into_inner())),
        Mode::Counted => None,
    };

    let shared = Shared::new(config.procs, config.cores, config.mode, config.weights);
    let outcomes: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.procs)
            .map(|rank| {
                let shared = &shared;
                let program = &program;
                std::thread::Builder::new()
                    .name(format!("rank-{rank}"))
                    .stack_size(64 << 20)
                    .spawn_scoped(scope, move || {
                        let mut comm = Communicator::new(rank, shared);
                        if shared.mode == Mode::Counted {
                            shared.wait_first_turn(rank);
                        }
                        let result = catch_unwind(AssertUnwindSafe(|| program(&mut comm)))
                            .unwrap_or_else(|panic| {
                                Err(Error::RankPanicked {
                                    rank,
                                    message: panic_message(panic.as_ref()),
                                })
                            });
                        (result, comm.finish())
                    })
                    .expect("spawn rank thread")
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("rank thread never unwinds past catch_unwind"))
            .collect()
    });

    let totals = shared.totals();
    let mut results = Vec::with_capacity(config.procs);
    let mut errors = Vec::new();
    let mut traces = Vec::with_capacity(config.procs);
    let mut counters = Vec::with_capacity(config.procs);
    let mut rank_end = Vec::with_capacity(config.procs);
    for (result, record) in outcomes {
        match result {
            Ok(v) => results.push(v),
            Err(e) => errors.push(e),
        }
        traces.push(record.events);
        counters.push(record.counters);
        rank_end.push(record.end);
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| match e {
            Error::Deadlock { .. } => 2,
            Error::RankPanicked { .. } => 1,
            _ => 0,
        });
        return Err(errors.swap_remove(0));
    }

    let slot_high_water = match config.mode {
        Mode::Wall => totals.high_water,
        Mode::Counted => max_concurrent_compute(&traces),
    };
    let elapsed = rank_end.iter().copied().max().unwrap_or(0);
    Ok(WorldOutput {
        results,
        report: WorldReport {
            config: *config,
            traces,
            counters,
            rank_end,
            elapsed,
            slot_high_water,
            messages_delivered: totals.delivered,
            messages_received: totals.received,
            undelivered: totals.undelivered,
        },
    })
}

/// Largest number of compute events overlapping at any instant. Intervals are
/// half-open, so back-to-back sections do not overlap.
pub fn max_concurrent_compute(traces: &[Vec<TraceEvent>]) -> usize {
    let mut edges: Vec<(u64, i32)> = traces
        .iter()
        .flatten()
        .filter(|e| e.kind == TraceKind::Compute && e.t_end > e.t_start)
        .flat_map(|e| [(e.t_start, 1), (e.t_end, -1)])
        .collect();
    // ends sort before starts at the same instant
    edges.sort();
    let mut live = 0i32;
    let mut best = 0i32;
    for (_, delta) in edges {
        live += delta;
        best = best.max(live);
    }
    best as usize
}

fn panic_message(panic: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = panic.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = panic.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}
