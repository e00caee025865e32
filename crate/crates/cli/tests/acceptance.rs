//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sortbench_core::harness::{
    experiment1, experiment2, gen_bounded, gen_data, run, Exp1Row, Exp1Spec, Exp2Row, Exp2Spec, RunReport,
};
use sortbench_core::kernels::{bubble_sort, SortStats};
use sortbench_core::model::{calibrate, ceil_log2, time_model, Measurement, ModelParams};
use sortbench_core::parallel::{build_schedule, plan_partition, scatter_merge_sort};
use sortbench_core::{AlgorithmId, Element, Mode, RunConfig, WorldConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn reference(v: &[Element]) -> Vec<Element> {
    let mut r = v.to_vec();
    r.sort();
    r
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let procs = [1, 2, 3, 4, 8];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    for case in 0..1000u64 {
        let algo = AlgorithmId::ALL[case as usize % 3];
        let p = procs[(case as usize / 3) % procs.len()];
        let n = rng.gen_range(0..=4096);
        let data = if case % 5 == 0 {
            gen_bounded(n, case, 8)
        } else {
            gen_data(n, case)
        };
        match scatter_merge_sort(&WorldConfig::new(p, 1, Mode::Counted), algo, &data) {
            Ok(out) if out.sorted == reference(&data) => {}
            Ok(_) => failures.push(format!("case {case} ({algo}, p={p}, n={n}) differs")),
            Err(e) => failures.push(format!("case {case}: {e}")),
        }
    }
    let elapsed = started.elapsed();
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(60),
        format!("{} of 1000 cases differ, {:.1} s (limit 60 s) {}", failures.len(), elapsed.as_secs_f64(), failures.join("; ")),
    )
}

fn odd_even_completeness() -> Outcome {
    let mut checked = 0u64;
    let mut failures = Vec::new();
    for p in [2, 3, 4] {
        let world = WorldConfig::new(p, 1, Mode::Counted);
        let phases = build_schedule(p).phases.len();
        for n in 0..=12usize {
            for bits in 0..1u32 << n {
                let data: Vec<Element> = (0..n).map(|i| Element::from(bits >> i & 1 == 1)).collect();
                let out = scatter_merge_sort(&world, AlgorithmId::Merge, &data);
                checked += 1;
                match out {
                    Ok(o) if phases == p && o.sorted == reference(&data) => {}
                    _ => failures.push(format!("p={p} {data:?}")),
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{checked} inputs, {} failures {}", failures.len(), failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ")),
    )
}

fn bubble_obliviousness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    for i in 0..100u64 {
        let s = rng.gen_range(0..=600);
        let mut block = if i % 2 == 0 { gen_data(s, i) } else { gen_bounded(s, i, 3) };
        let mut st = SortStats::default();
        bubble_sort(&mut block, &mut st);
        if st.comparisons != (s * s.saturating_sub(1) / 2) as u64 {
            bad += 1;
        }
    }
    let mut bad_parallel = Vec::new();
    for (n, p) in [(20_000, 2), (20_000, 3), (10_001, 8), (999, 7), (5, 8)] {
        let data = gen_data(n, 11);
        let out = scatter_merge_sort(&WorldConfig::new(p, 1, Mode::Counted), AlgorithmId::Bubble, &data).unwrap();
        let want: u64 = plan_partition(n, p).unwrap().sizes.iter().map(|&s| (s * s.saturating_sub(1) / 2) as u64).sum();
        let got: u64 = out.ranks.iter().map(|r| r.local_sort.comparisons).sum();
        if got != want {
            bad_parallel.push(format!("n={n} p={p}: {got} != {want}"));
        }
    }
    outcome(
        bad == 0 && bad_parallel.is_empty(),
        format!("{bad} of 100 blocks off; parallel local sorts: {}", if bad_parallel.is_empty() { "exact".to_string() } else { bad_parallel.join("; ") }),
    )
}

fn ops(rows: &[Exp1Row], algo: AlgorithmId, m: usize, k: usize) -> f64 {
    rows.iter()
        .find(|r| r.algorithm == algo && r.m == m && r.k == k)
        .and_then(|r| r.weighted_ops)
        .expect("grid point present") as f64
}

fn bubble_trend(rows: &[Exp1Row]) -> Outcome {
    let r2 = ops(rows, AlgorithmId::Bubble, 1, 1) / ops(rows, AlgorithmId::Bubble, 2, 1);
    let r4 = ops(rows, AlgorithmId::Bubble, 1, 1) / ops(rows, AlgorithmId::Bubble, 4, 1);
    outcome(
        (1.8..=2.2).contains(&r2) && (3.5..=4.5).contains(&r4),
        format!("m1/m2 = {r2:.3} (want [1.8, 2.2]), m1/m4 = {r4:.3} (want [3.5, 4.5])"),
    )
}

fn core_effect() -> Outcome {
    let started = Instant::now();
    let median = |cores| -> Result<f64, String> {
        let mut cfg = RunConfig::new(AlgorithmId::Bubble, 20_000, 2, cores, Mode::Wall);
        cfg.repetitions = 3;
        let r = run(&cfg).map_err(|e| e.to_string())?;
        Ok(r.wall_seconds().unwrap_or(f64::NAN))
    };
    match (median(1), median(2)) {
        (Ok(t1), Ok(t2)) => {
            let ratio = t1 / t2;
            let elapsed = started.elapsed();
            let cpus = std::thread::available_parallelism().map_or(0, |n| n.get());
            outcome(
                (1.6..=2.4).contains(&ratio) && elapsed < Duration::from_secs(120),
                format!(
                    "median k=1 {t1:.3} s / k=2 {t2:.3} s = {ratio:.3} (want [1.6, 2.4]), {:.1} s total, {cpus} hardware threads",
                    elapsed.as_secs_f64()
                ),
            )
        }
        (a, b) => outcome(false, format!("{:?} {:?}", a.err(), b.err())),
    }
}

fn nlogn_direction(rows: &[Exp1Row]) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for algo in [AlgorithmId::Merge, AlgorithmId::Quick] {
        let series: Vec<f64> = [2, 4, 8, 16, 32, 64].iter().map(|&m| ops(rows, algo, m, 1)).collect();
        let worst = series.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
        pass &= worst >= 0.95;
        notes.push(format!(
            "{algo}: m=2 {:.3e} → m=64 {:.3e}, worst step ×{worst:.3}",
            series[0],
            series[series.len() - 1]
        ));
    }
    outcome(pass, format!("{} (want every step ≥ ×0.95)", notes.join("; ")))
}

fn memory_model(rows: &[Exp2Row], reports: &[RunReport]) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for r in rows.iter().filter(|r| r.algorithm == AlgorithmId::Merge) {
        let c = r.peak_elements as i64 - 2 * r.n as i64;
        let rel = (r.peak_elements as f64 / (2.0 * r.n as f64) - 1.0).abs();
        let ok = (0..=64).contains(&c) && rel <= 1e-3;
        pass &= ok;
        notes.push(format!("merge n={}: 2n{c:+}", r.n));
    }
    let bases: Vec<i64> = rows
        .iter()
        .filter(|r| r.algorithm == AlgorithmId::Bubble)
        .map(|r| r.peak_elements as i64 - r.n as i64)
        .collect();
    let constant = bases.windows(2).all(|w| w[0] == w[1]) && !bases.is_empty();
    pass &= constant;
    notes.push(format!("bubble peak−n {bases:?}"));
    let mut worst = 0.0f64;
    for rep in reports.iter().filter(|r| r.config.algorithm == AlgorithmId::Quick) {
        let plan = plan_partition(rep.config.n, rep.config.procs).unwrap();
        for (c, &s) in rep.counters().iter().zip(&plan.sizes) {
            let bound = 4 * ceil_log2(s as u64);
            pass &= c.max_recursion_depth <= bound;
            worst = worst.max(c.max_recursion_depth as f64 / bound as f64);
        }
    }
    notes.push(format!("quick depth ≤ {:.2} × 4⌈log2 s⌉", worst));
    outcome(pass, notes.join("; "))
}

fn accounting_closure(reports: &[&RunReport]) -> Outcome {
    let worst = reports.iter().map(|r| r.closure_error()).fold(0.0, f64::max);
    outcome(
        worst <= 0.02,
        format!("{} reports, worst relative gap {worst:.2e} (limit 2%)", reports.len()),
    )
}

fn core_slot_bound(reports: &[&RunReport]) -> Outcome {
    let violations: Vec<String> = reports
        .iter()
        .filter(|r| r.world.slot_high_water > r.config.cores)
        .map(|r| format!("{} high water {}", r.config, r.world.slot_high_water))
        .collect();
    let modes: Vec<String> = [Mode::Counted, Mode::Wall]
        .iter()
        .map(|&m| format!("{} {m}", reports.iter().filter(|r| r.config.mode == m).count()))
        .collect();
    outcome(
        violations.is_empty(),
        format!("{} runs; {} violations {}", modes.join(" + "), violations.len(), violations.join("; ")),
    )
}

fn files_in(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        out.insert(
            path.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&path).unwrap(),
        );
    }
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let csv = dir.path().join(format!("exp1-{i}.csv"));
        let traces = dir.path().join(format!("traces-{i}"));
        let status = Command::new(env!("CARGO_BIN_EXE_sortbench"))
            .args(["exp1", "--mode", "counted", "--csv"])
            .arg(&csv)
            .arg("--trace-dir")
            .arg(&traces)
            .env_remove("SORTBENCH_SEED")
            .stderr(std::process::Stdio::null())
            .status()
            .unwrap();
        if !status.success() {
            return outcome(false, format!("invocation {i} exited with {status}"));
        }
        outputs.push((std::fs::read(&csv).unwrap(), files_in(&traces)));
    }
    let same_csv = outputs[0].0 == outputs[1].0;
    let same_traces = outputs[0].1 == outputs[1].1;
    let bytes: usize = outputs[0].1.values().map(Vec::len).sum();
    outcome(
        same_csv && same_traces,
        format!(
            "CSV identical: {same_csv}; {} trace/summary files ({bytes} bytes) identical: {same_traces}",
            outputs[0].1.len()
        ),
    )
}

fn model_round_trip() -> Outcome {
    let truth = ModelParams {
        c_comp: 2.5e-8,
        c_init: 0.04,
        c_msg: 0.008,
        c_byte: 1.2e-7,
    };
    let grid = |algo, p: &ModelParams| {
        let mut v = Vec::new();
        for n in [20_000, 200_000, 600_000, 6_000_000] {
            for m in [1, 2, 4, 8, 16, 32, 64] {
                for cores in [1, 2] {
                    v.push(Measurement { n, m, p: cores, seconds: time_model(algo, n, m, cores, p) });
                }
            }
        }
        v
    };
    let mut worst = 0.0f64;
    for algo in AlgorithmId::ALL {
        match calibrate(algo, &grid(algo, &truth)) {
            Ok(fit) => {
                for (got, want) in fit.params.to_array().iter().zip(truth.to_array()) {
                    worst = worst.max((got - want).abs() / want);
                }
            }
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let pure = ModelParams {
        c_comp: 1.7e-8,
        ..Default::default()
    };
    let fit = match calibrate(AlgorithmId::Bubble, &grid(AlgorithmId::Bubble, &pure)) {
        Ok(f) => f.params,
        Err(e) => return outcome(false, e.to_string()),
    };
    let decreasing = [1, 2].iter().all(|&cores| {
        let t: Vec<f64> = (1..=64).map(|m| time_model(AlgorithmId::Bubble, 200_000, m, cores, &fit)).collect();
        t.windows(2).all(|w| w[1] < w[0])
    });
    let zero_overhead = fit.c_init == 0.0 && fit.c_msg == 0.0 && fit.c_byte == 0.0;
    outcome(
        worst <= 1e-9 && decreasing && zero_overhead,
        format!(
            "worst relative parameter error {worst:.1e} (limit 1e-9); zero-overhead bubble fit has zero overheads: {zero_overhead}, strictly decreasing in m: {decreasing}"
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |id, name, o: Outcome| {
        println!("{} {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };

    record(1, "oracle equivalence", oracle_equivalence());
    record(2, "odd-even completeness", odd_even_completeness());
    record(3, "bubble obliviousness", bubble_obliviousness());

    let mut counted_reports = Vec::new();
    let counted_spec = Exp1Spec {
        mode: Mode::Counted,
        ..Default::default()
    };
    let counted_rows = experiment1(&counted_spec, |r| {
        counted_reports.push(r.clone());
        Ok(())
    })
    .expect("counted Experiment 1 grid");
    record(4, "bubble trend (counted)", bubble_trend(&counted_rows));
    record(5, "core effect (wall)", core_effect());
    record(6, "merge/quick direction (counted)", nlogn_direction(&counted_rows));

    let mut exp2_reports = Vec::new();
    let exp2_spec = Exp2Spec {
        sizes: BTreeMap::from([
            (AlgorithmId::Bubble, (5..=10).map(|i| i * 10_000).collect()),
            (AlgorithmId::Merge, vec![250_000, 500_000]),
            (AlgorithmId::Quick, (5..=10).map(|i| i * 50_000).collect()),
        ]),
        ..Default::default()
    };
    let exp2_rows = experiment2(&exp2_spec, |r| {
        exp2_reports.push(r.clone());
        Ok(())
    })
    .expect("Experiment 2 grid");
    record(7, "memory model", memory_model(&exp2_rows, &exp2_reports));

    let mut wall_reports = Vec::new();
    let wall_spec = Exp1Spec {
        mode: Mode::Wall,
        repetitions: 1,
        ..Default::default()
    };
    let wall = experiment1(&wall_spec, |r| {
        wall_reports.push(r.clone());
        Ok(())
    });
    let all: Vec<&RunReport> = counted_reports.iter().chain(&exp2_reports).chain(&wall_reports).collect();
    let mut closure = accounting_closure(&all);
    let mut slots = core_slot_bound(&all);
    if let Err(e) = wall {
        closure.pass = false;
        slots.pass = false;
        slots.detail.push_str(&format!("; wall grid failed: {e}"));
    }
    record(8, "accounting closure", closure);
    record(9, "core-slot bound", slots);
    record(10, "determinism", determinism());
    record(11, "model round-trip", model_round_trip());

    let failed: Vec<String> = results.iter().filter(|r| !r.2.pass).map(|r| format!("{} {}", r.0, r.1)).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
