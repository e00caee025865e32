//! The two experiment grids.
//!
//! Experiment 1 fixes the data size per algorithm and sweeps process and core
//! counts. Experiment 2 fixes two processes on two cores and sweeps the data
//! size, recording tracked memory against the memory model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{overhead_ratio, run, RunConfig, RunReport};
use crate::error::{Error, Result};
use crate::model::{memory_model, MemoryConstants};
use crate::parallel::AlgorithmId;
use crate::runtime::{CostWeights, Mode};

pub const DEFAULT_PROCS: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exp1Spec {
    pub algorithms: Vec<AlgorithmId>,
    pub sizes: BTreeMap<AlgorithmId, usize>,
    pub procs: Vec<usize>,
    pub cores: Vec<usize>,
    pub seed: u64,
    pub mode: Mode,
    pub repetitions: usize,
    pub weights: CostWeights,
}

impl Default for Exp1Spec {
    fn default() -> Self {
        Exp1Spec {
            algorithms: AlgorithmId::ALL.to_vec(),
            sizes: BTreeMap::from([
                (AlgorithmId::Bubble, 20_000),
                (AlgorithmId::Merge, 600_000),
                (AlgorithmId::Quick, 600_000),
            ]),
            procs: DEFAULT_PROCS.to_vec(),
            cores: vec![1, 2],
            seed: 42,
            mode: Mode::Counted,
            repetitions: 3,
            weights: CostWeights::default(),
        }
    }
}

impl Exp1Spec {
    /// Every configuration in grid order: algorithm, then cores, then procs.
    pub fn configs(&self) -> Result<Vec<RunConfig>> {
        for (what, empty) in [
            ("algorithm", self.algorithms.is_empty()),
            ("process", self.procs.is_empty()),
            ("core", self.cores.is_empty()),
        ] {
            if empty {
                return Err(Error::config(format!("the {what} list is empty")));
            }
        }
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            let n = *self
                .sizes
                .get(&algorithm)
                .ok_or_else(|| Error::config(format!("no data size given for {algorithm}")))?;
            for &cores in &self.cores {
                for &procs in &self.procs {
                    let cfg = RunConfig {
                        algorithm,
                        n,
                        procs,
                        cores,
                        seed: self.seed,
                        mode: self.mode,
                        repetitions: self.repetitions,
                        weights: self.weights,
                    };
                    cfg.validate()?;
                    out.push(cfg);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp1Row {
    pub algorithm: AlgorithmId,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Median seconds (wall mode only).
    pub time_s: Option<f64>,
    /// Makespan in cost units (counted mode only).
    pub weighted_ops: Option<u64>,
    /// Summed over ranks, in seconds or cost units.
    pub compute_s: f64,
    pub overhead_s: f64,
    /// Mean per-rank overhead / computation.
    pub ratio: f64,
}

impl Exp1Row {
    pub fn from_report(r: &RunReport) -> Self {
        Exp1Row {
            algorithm: r.config.algorithm,
            n: r.config.n,
            m: r.config.procs,
            k: r.config.cores,
            time_s: r.wall_seconds(),
            weighted_ops: r.weighted_ops(),
            compute_s: r.in_units(r.compute_total()),
            overhead_s: r.in_units(r.overhead_total()),
            ratio: overhead_ratio(r).aggregate,
        }
    }

    /// The row's headline measurement: seconds or cost units.
    pub fn measured(&self) -> f64 {
        self.time_s
            .or(self.weighted_ops.map(|w| w as f64))
            .unwrap_or(f64::NAN)
    }
}

/// Runs the grid, handing each verified report to `inspect` before its row is
/// kept. The first failure aborts the experiment.
pub fn experiment1(spec: &Exp1Spec, mut inspect: impl FnMut(&RunReport) -> Result<()>) -> Result<Vec<Exp1Row>> {
    let mut rows = Vec::new();
    for cfg in spec.configs()? {
        let report = run(&cfg)?;
        inspect(&report)?;
        rows.push(Exp1Row::from_report(&report));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exp2Spec {
    pub algorithms: Vec<AlgorithmId>,
    pub sizes: BTreeMap<AlgorithmId, Vec<usize>>,
    pub seed: u64,
    pub weights: CostWeights,
    pub memory: MemoryConstants,
}

impl Default for Exp2Spec {
    fn default() -> Self {
        let nlogn: Vec<usize> = (5..=10).map(|i| i * 50_000).collect();
        Exp2Spec {
            algorithms: AlgorithmId::ALL.to_vec(),
            sizes: BTreeMap::from([
                (AlgorithmId::Bubble, (5..=10).map(|i| i * 10_000).collect()),
                (AlgorithmId::Merge, nlogn.clone()),
                (AlgorithmId::Quick, nlogn),
            ]),
            seed: 42,
            weights: CostWeights::default(),
            memory: MemoryConstants::default(),
        }
    }
}

impl Exp2Spec {
    /// Two processes on two cores, counted mode.
    pub fn configs(&self) -> Result<Vec<RunConfig>> {
        if self.algorithms.is_empty() {
            return Err(Error::config("the algorithm list is empty"));
        }
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            let sizes = self
                .sizes
                .get(&algorithm)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::config(format!("no data sizes given for {algorithm}")))?;
            for &n in sizes {
                let mut cfg = RunConfig::new(algorithm, n, 2, 2, Mode::Counted);
                cfg.seed = self.seed;
                cfg.weights = self.weights;
                out.push(cfg);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp2Row {
    pub algorithm: AlgorithmId,
    pub n: usize,
    /// Tracked elements summed over ranks at their sort-phase peaks.
    pub peak_elements: u64,
    pub model_elements: u64,
    pub ratio: f64,
}

pub fn experiment2(spec: &Exp2Spec, mut inspect: impl FnMut(&RunReport) -> Result<()>) -> Result<Vec<Exp2Row>> {
    let mut rows = Vec::new();
    for cfg in spec.configs()? {
        let report = run(&cfg)?;
        inspect(&report)?;
        let peak_elements: u64 = report.sort_phase_peaks.iter().sum();
        let model_elements = memory_model(cfg.algorithm, cfg.n, &spec.memory);
        rows.push(Exp2Row {
            algorithm: cfg.algorithm,
            n: cfg.n,
            peak_elements,
            model_elements,
            ratio: peak_elements as f64 / model_elements as f64,
        });
    }
    Ok(rows)
}
