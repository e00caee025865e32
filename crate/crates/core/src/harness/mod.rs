//! Benchmark harness: seeded inputs, verified runs, the two experiment grids
//! and their CSV, trace and model-curve outputs.

mod curves;
mod data;
mod experiments;
mod export;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{scatter_merge_sort, AlgorithmId, SortOutcome};
use crate::runtime::{CostCounters, CostWeights, Mode, TimeBreakdown, TraceEvent, WorldConfig, WorldReport};
use crate::Element;

pub use curves::{emit_model_curves, fit_exp1, read_exp1_csv, read_exp2_csv, render_svg, CurveRow};
pub use data::{gen_bounded, gen_data};
pub use experiments::{
    experiment1, experiment2, Exp1Row, Exp1Spec, Exp2Row, Exp2Spec, DEFAULT_PROCS,
};
pub use export::{emit_trace, write_csv, write_csv_to, TraceSummary};

/// One benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: AlgorithmId,
    pub n: usize,
    pub procs: usize,
    pub cores: usize,
    pub seed: u64,
    pub mode: Mode,
    pub repetitions: usize,
    pub weights: CostWeights,
}

impl RunConfig {
    pub fn new(algorithm: AlgorithmId, n: usize, procs: usize, cores: usize, mode: Mode) -> Self {
        RunConfig {
            algorithm,
            n,
            procs,
            cores,
            seed: 42,
            mode,
            repetitions: 1,
            weights: CostWeights::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.procs == 0 {
            return Err(Error::config("procs must be at least 1"));
        }
        if self.cores == 0 {
            return Err(Error::config("cores must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        Ok(())
    }

    pub fn world(&self) -> WorldConfig {
        WorldConfig {
            procs: self.procs,
            cores: self.cores,
            mode: self.mode,
            weights: self.weights,
        }
    }

    /// Stable identifier used in trace files.
    pub fn run_id(&self) -> String {
        format!(
            "{}-n{}-m{}-k{}-s{}-{}",
            self.algorithm, self.n, self.procs, self.cores, self.seed, self.mode
        )
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "algo={} n={} m={} k={} seed={} mode={}",
            self.algorithm, self.n, self.procs, self.cores, self.seed, self.mode
        )
    }
}

/// Measurements of one verified run.
///
/// Durations are nanoseconds in wall mode and cost units in counted mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    /// The median repetition.
    pub world: WorldReport,
    /// Elapsed time of every repetition, in run order.
    pub rep_elapsed: Vec<u64>,
    /// Per-rank peak of tracked elements while the local sort ran.
    pub sort_phase_peaks: Vec<u64>,
}

impl RunReport {
    pub fn elapsed(&self) -> u64 {
        self.world.elapsed
    }

    pub fn wall_seconds(&self) -> Option<f64> {
        (self.config.mode == Mode::Wall).then_some(self.world.elapsed as f64 * 1e-9)
    }

    /// Counted-mode makespan.
    pub fn weighted_ops(&self) -> Option<u64> {
        (self.config.mode == Mode::Counted).then_some(self.world.elapsed)
    }

    /// Converts a duration to the report's unit: seconds or cost units.
    pub fn in_units(&self, d: u64) -> f64 {
        match self.config.mode {
            Mode::Wall => d as f64 * 1e-9,
            Mode::Counted => d as f64,
        }
    }

    pub fn counters(&self) -> &[CostCounters] {
        &self.world.counters
    }

    pub fn trace(&self) -> Vec<TraceEvent> {
        self.world.merged_trace()
    }

    pub fn breakdowns(&self) -> Vec<TimeBreakdown> {
        self.world.breakdowns()
    }

    pub fn compute_total(&self) -> u64 {
        self.breakdowns().iter().map(|b| b.compute).sum()
    }

    /// Communication plus idle time over all ranks.
    pub fn overhead_total(&self) -> u64 {
        self.breakdowns().iter().map(|b| b.communication + b.idle).sum()
    }

    pub fn peak_mem_elements(&self) -> Vec<u64> {
        self.world.counters.iter().map(|c| c.peak_tracked_elements).collect()
    }

    /// Largest relative gap between a rank's compute + communication + idle
    /// and its elapsed time.
    pub fn closure_error(&self) -> f64 {
        self.breakdowns()
            .iter()
            .zip(&self.world.rank_end)
            .map(|(b, &end)| {
                if end == 0 {
                    b.total() as f64
                } else {
                    (b.total() as f64 - end as f64).abs() / end as f64
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Checks that `output` is `input` sorted.
pub fn verify(config: &RunConfig, input: &[Element], output: &[Element]) -> Result<()> {
    let fail = |reason: String| Error::Verification {
        config: config.to_string(),
        reason,
    };
    if output.len() != input.len() {
        return Err(fail(format!(
            "output has {} elements, input {}",
            output.len(),
            input.len()
        )));
    }
    if let Some(i) = output.windows(2).position(|w| w[0] > w[1]) {
        return Err(fail(format!("output not sorted at index {i}")));
    }
    let mut reference = input.to_vec();
    reference.sort_unstable();
    if let Some(i) = reference.iter().zip(output).position(|(a, b)| a != b) {
        return Err(fail(format!("output is not a permutation of the input (first difference at index {i})")));
    }
    Ok(())
}

/// Generates the input, runs it `repetitions` times (once in counted mode,
/// which is deterministic) and reports the median repetition. Every
/// repetition's output is verified; no report exists for an unsorted run.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let data = gen_data(config.n, config.seed);
    run_on(config, &data)
}

/// As [`run`], on a caller-supplied input.
pub fn run_on(config: &RunConfig, data: &[Element]) -> Result<RunReport> {
    config.validate()?;
    let reps = match config.mode {
        Mode::Wall => config.repetitions,
        Mode::Counted => 1,
    };
    let mut outcomes: Vec<SortOutcome> = Vec::with_capacity(reps);
    for _ in 0..reps {
        let out = scatter_merge_sort(&config.world(), config.algorithm, data)?;
        verify(config, data, &out.sorted)?;
        outcomes.push(out);
    }
    let rep_elapsed: Vec<u64> = outcomes.iter().map(|o| o.report.elapsed).collect();
    let mut order: Vec<usize> = (0..reps).collect();
    order.sort_by_key(|&i| (rep_elapsed[i], i));
    let median = outcomes.swap_remove(order[(reps - 1) / 2]);
    Ok(RunReport {
        config: *config,
        sort_phase_peaks: median.ranks.iter().map(|r| r.sort_phase_peak).collect(),
        world: median.report,
        rep_elapsed,
    })
}

/// Overhead (communication plus idle) relative to computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadRatio {
    pub per_rank: Vec<f64>,
    /// Mean of the per-rank ratios.
    pub aggregate: f64,
    /// Some rank did no computation; its ratio and the aggregate are infinite.
    pub infinite: bool,
}

pub fn overhead_ratio(report: &RunReport) -> OverheadRatio {
    let per_rank: Vec<f64> = report
        .breakdowns()
        .iter()
        .map(|b| {
            let overhead = (b.communication + b.idle) as f64;
            if b.compute == 0 {
                if overhead == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                overhead / b.compute as f64
            }
        })
        .collect();
    let infinite = per_rank.iter().any(|r| r.is_infinite());
    let aggregate = if per_rank.is_empty() {
        0.0
    } else {
        per_rank.iter().sum::<f64>() / per_rank.len() as f64
    };
    OverheadRatio {
        per_rank,
        aggregate,
        infinite,
    }
}
