//! `sortbench`: run the parallel sorts, the two experiment grids, and fit the
//! analytic models to their results.

use std::collections::BTreeMap;
use std::io::{self, BufRead};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sortbench_core::harness::{
    self, emit_model_curves, emit_trace, experiment1, experiment2, fit_exp1, read_exp1_csv, read_exp2_csv,
    write_csv, write_csv_to, Exp1Row, Exp1Spec, Exp2Row, Exp2Spec, RunReport,
};
use sortbench_core::{AlgorithmId, CostWeights, Error, MemoryConstants, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "sortbench", version, about = "Scatter/merge parallel sorting benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sort one generated list and report time, counters and overhead.
    Run(RunArgs),
    /// Sweep process and core counts at a fixed size per algorithm.
    Exp1(Exp1Args),
    /// Sweep data sizes with two processes on two cores; record memory.
    Exp2(Exp2Args),
    /// Calibrate the time model on an experiment CSV and write model curves.
    Model(ModelArgs),
}

#[derive(Args)]
struct Common {
    /// Input seed.
    #[arg(long, env = "SORTBENCH_SEED", default_value_t = 42)]
    seed: u64,
    /// Counted mode: cost units per message.
    #[arg(long, default_value_t = CostWeights::default().latency)]
    latency: u64,
    /// Counted mode: cost units per transferred element.
    #[arg(long, default_value_t = CostWeights::default().per_element)]
    per_element: u64,
}

impl Common {
    fn weights(&self) -> CostWeights {
        CostWeights {
            latency: self.latency,
            per_element: self.per_element,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algo: AlgorithmId,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    procs: usize,
    #[arg(long, default_value_t = 1)]
    cores: usize,
    #[arg(long, default_value_t = Mode::Wall)]
    mode: Mode,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Append-free CSV with a single Experiment 1 row.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON Lines trace; a `.summary.json` is written next to it.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Exp1Args {
    #[arg(long, value_delimiter = ',', default_value = "bubble,merge,quick")]
    algos: Vec<AlgorithmId>,
    /// One size for every algorithm, overriding the per-algorithm sizes.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 20_000)]
    n_bubble: usize,
    #[arg(long, default_value_t = 600_000)]
    n_merge: usize,
    #[arg(long, default_value_t = 600_000)]
    n_quick: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
    procs: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    cores: Vec<usize>,
    #[arg(long, default_value_t = Mode::Wall)]
    mode: Mode,
    /// Wall-mode repetitions; the median is reported.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write one trace per configuration into this directory.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Exp2Args {
    #[arg(long, value_delimiter = ',', default_value = "bubble,merge,quick")]
    algos: Vec<AlgorithmId>,
    #[arg(long, value_delimiter = ',', default_value = "50000,60000,70000,80000,90000,100000")]
    sizes_bubble: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "250000,300000,350000,400000,450000,500000")]
    sizes_merge: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "250000,300000,350000,400000,450000,500000")]
    sizes_quick: Vec<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ModelArgs {
    /// Experiment 1 or Experiment 2 CSV; may be repeated.
    #[arg(long, required = true)]
    fit: Vec<PathBuf>,
    /// Curve CSV; SVG charts and fitted parameters are written next to it.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Exp1(a) => exp1(a),
        Command::Exp2(a) => exp2(a),
        Command::Model(a) => model(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sortbench: {e}");
            match e {
                Error::Config(_) | Error::SingularFit { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn trace_into(dir: &Option<PathBuf>, report: &RunReport) -> Result<(), Error> {
    if let Some(dir) = dir {
        emit_trace(report, &dir.join(format!("{}.jsonl", report.config.run_id())))?;
    }
    Ok(())
}

fn progress(report: &RunReport) {
    let r = harness::overhead_ratio(report);
    let measured = match report.wall_seconds() {
        Some(s) => format!("{s:.6} s"),
        None => format!("{} ops", report.elapsed()),
    };
    eprintln!("{}: {measured}, overhead/compute {:.4}", report.config, r.aggregate);
}

fn emit_rows<T: serde::Serialize>(csv: &Option<PathBuf>, rows: &[T]) -> Result<(), Error> {
    match csv {
        Some(path) => write_csv(path, rows),
        None => write_csv_to(io::stdout().lock(), rows),
    }
}

fn run(a: RunArgs) -> Result<(), Error> {
    let config = RunConfig {
        algorithm: a.algo,
        n: a.n,
        procs: a.procs,
        cores: a.cores,
        seed: a.common.seed,
        mode: a.mode,
        repetitions: a.reps,
        weights: a.common.weights(),
    };
    let report = harness::run(&config)?;
    progress(&report);
    if let Some(path) = &a.trace {
        emit_trace(&report, path)?;
    }
    emit_rows(&a.csv, &[Exp1Row::from_report(&report)])
}

fn exp1(a: Exp1Args) -> Result<(), Error> {
    let sizes = [
        (AlgorithmId::Bubble, a.n.unwrap_or(a.n_bubble)),
        (AlgorithmId::Merge, a.n.unwrap_or(a.n_merge)),
        (AlgorithmId::Quick, a.n.unwrap_or(a.n_quick)),
    ];
    let spec = Exp1Spec {
        algorithms: a.algos,
        sizes: BTreeMap::from(sizes),
        procs: a.procs,
        cores: a.cores,
        seed: a.common.seed,
        mode: a.mode,
        repetitions: a.reps,
        weights: a.common.weights(),
    };
    let rows = experiment1(&spec, |r| {
        progress(r);
        trace_into(&a.trace_dir, r)
    })?;
    emit_rows(&a.csv, &rows)
}

fn exp2(a: Exp2Args) -> Result<(), Error> {
    let spec = Exp2Spec {
        algorithms: a.algos,
        sizes: BTreeMap::from([
            (AlgorithmId::Bubble, a.sizes_bubble),
            (AlgorithmId::Merge, a.sizes_merge),
            (AlgorithmId::Quick, a.sizes_quick),
        ]),
        seed: a.common.seed,
        weights: a.common.weights(),
        memory: MemoryConstants::default(),
    };
    let rows = experiment2(&spec, |r| {
        progress(r);
        trace_into(&a.trace_dir, r)
    })?;
    emit_rows(&a.csv, &rows)
}

fn is_exp2(path: &Path) -> Result<bool, Error> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let mut header = String::new();
    io::BufReader::new(file)
        .read_line(&mut header)
        .map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
    Ok(header.split(',').any(|c| c.trim() == "peak_elements"))
}

fn model(a: ModelArgs) -> Result<(), Error> {
    let mut exp1_rows: Vec<Exp1Row> = Vec::new();
    let mut exp2_rows: Vec<Exp2Row> = Vec::new();
    for path in &a.fit {
        if is_exp2(path)? {
            exp2_rows.extend(read_exp2_csv(path)?);
        } else {
            exp1_rows.extend(read_exp1_csv(path)?);
        }
    }
    let fits = fit_exp1(&exp1_rows)?;
    for (algo, fit) in &fits {
        let p = fit.params;
        println!(
            "{algo}: c_comp={:e} c_init={:e} c_msg={:e} c_byte={:e} rms_rel_residual={:.4}",
            p.c_comp,
            p.c_init,
            p.c_msg,
            p.c_byte,
            fit.rms_relative_residual()
        );
    }
    let params = fits.iter().map(|(a, f)| (*a, f.params)).collect();
    let svgs = emit_model_curves(&params, &exp1_rows, &exp2_rows, &MemoryConstants::default(), &a.out)?;
    let params_path = a.out.with_extension("params.json");
    let json = serde_json::to_string_pretty(&fits)?;
    std::fs::write(&params_path, json + "\n").map_err(|e| Error::Io {
        path: params_path.clone(),
        source: e,
    })?;
    for svg in svgs {
        eprintln!("wrote {}", svg.display());
    }
    eprintln!("wrote {} and {}", a.out.display(), params_path.display());
    Ok(())
}
