use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{overhead_ratio, OverheadRatio, RunConfig, RunReport};
use crate::error::{Error, Result};
use crate::runtime::{write_trace_jsonl, CostCounters, Mode};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `rows` as CSV with a header row.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_csv_to(create(path)?, rows).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_csv_to<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub rank: usize,
    pub compute: u64,
    pub communication: u64,
    pub idle: u64,
    pub end: u64,
    pub counters: CostCounters,
}

/// Companion of a trace file: per-rank time totals and counters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub run_id: String,
    pub config: RunConfig,
    /// `ns` in wall mode, `ops` in counted mode.
    pub unit: String,
    pub elapsed: u64,
    pub ranks: Vec<RankSummary>,
    pub overhead_ratio: OverheadRatio,
}

impl TraceSummary {
    pub fn of(report: &RunReport) -> Self {
        let ranks = report
            .breakdowns()
            .into_iter()
            .enumerate()
            .map(|(rank, b)| RankSummary {
                rank,
                compute: b.compute,
                communication: b.communication,
                idle: b.idle,
                end: report.world.rank_end[rank],
                counters: report.world.counters[rank],
            })
            .collect();
        TraceSummary {
            run_id: report.config.run_id(),
            config: report.config,
            unit: match report.config.mode {
                Mode::Wall => "ns",
                Mode::Counted => "ops",
            }
            .to_string(),
            elapsed: report.elapsed(),
            ranks,
            overhead_ratio: overhead_ratio(report),
        }
    }

    pub fn path_for(trace: &Path) -> PathBuf {
        trace.with_extension("summary.json")
    }
}

/// Writes the merged trace as JSON Lines to `path` and the summary next to
/// it (`run.jsonl` → `run.summary.json`). Returns the summary's path.
pub fn emit_trace(report: &RunReport, path: &Path) -> Result<PathBuf> {
    let mut out = create(path)?;
    write_trace_jsonl(&mut out, &report.config.run_id(), report.trace())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))?;

    let summary_path = TraceSummary::path_for(path);
    let mut out = create(&summary_path)?;
    serde_json::to_writer_pretty(&mut out, &TraceSummary::of(report))?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&summary_path, e))?;
    Ok(summary_path)
}
