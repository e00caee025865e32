use std::collections::BTreeMap;

use sortbench_core::harness::{experiment2, run, Exp2Spec, RunConfig};
use sortbench_core::model::{ceil_log2, MemoryConstants};
use sortbench_core::{AlgorithmId, Mode};

fn exp2(algo: AlgorithmId, sizes: &[usize]) -> Vec<sortbench_core::harness::Exp2Row> {
    let spec = Exp2Spec {
        algorithms: vec![algo],
        sizes: BTreeMap::from([(algo, sizes.to_vec())]),
        ..Default::default()
    };
    experiment2(&spec, |r| {
        assert_eq!((r.config.procs, r.config.cores, r.config.mode), (2, 2, Mode::Counted));
        Ok(())
    })
    .unwrap()
}

#[test]
fn bubble_memory_grows_with_unit_slope() {
    let rows = exp2(AlgorithmId::Bubble, &[5_000, 6_000, 7_000]);
    for w in rows.windows(2) {
        let d = w[1].peak_elements as i64 - w[0].peak_elements as i64;
        assert!((d - 1_000).abs() <= 64, "{d}");
    }
    let base: Vec<u64> = rows.iter().map(|r| r.peak_elements - r.n as u64).collect();
    assert!(base.windows(2).all(|w| w[0] == w[1]), "{base:?}");
}

#[test]
fn merge_memory_is_a_duplicate_list() {
    for r in exp2(AlgorithmId::Merge, &[25_000, 50_000]) {
        let c = r.peak_elements as i64 - 2 * r.n as i64;
        assert!((0..=64).contains(&c), "{c}");
        assert!((r.ratio - 1.0).abs() < 0.05);
    }
}

#[test]
fn quick_memory_adds_one_level_per_doubling() {
    let rows = exp2(AlgorithmId::Quick, &[1 << 18, 1 << 19]);
    let k = MemoryConstants::default();
    let extra = |r: &sortbench_core::harness::Exp2Row| r.peak_elements - r.n as u64;
    // list plus stack frames; frames are 2 elements per level on each of two ranks
    for r in &rows {
        assert!(extra(r) <= 2 * k.c1 * 4 * ceil_log2(r.n as u64));
    }
    let d = rows[1].peak_elements as i64 - rows[0].peak_elements as i64 - (1 << 18);
    assert!(d.abs() <= 64, "{d}");
}

#[test]
fn counted_runs_repeat_exactly() {
    let cfg = RunConfig::new(AlgorithmId::Quick, 30_000, 6, 2, Mode::Counted);
    assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
}

#[test]
fn wall_runs_respect_the_core_bound() {
    for cores in [1, 2, 3] {
        let cfg = RunConfig::new(AlgorithmId::Merge, 50_000, 8, cores, Mode::Wall);
        let r = run(&cfg).unwrap();
        assert!(r.world.slot_high_water <= cores);
        assert!(r.closure_error() <= 0.02);
    }
}
