//! Odd-even block transposition on every 0/1 input.
//!
//! A compare-exchange network sorts all inputs iff it sorts all 0/1 inputs,
//! so sweeping every 0/1 list of length up to 12 covers the merge schedule.

use sortbench_core::parallel::{plan_partition, scatter_merge_sort, AlgorithmId};
use sortbench_core::{Element, Mode, WorldConfig};

fn zero_one(n: usize, bits: u32) -> Vec<Element> {
    (0..n).map(|i| Element::from(bits >> i & 1 == 1)).collect()
}

#[test]
fn every_zero_one_input_is_sorted_after_p_phases() {
    for p in [2, 3, 4] {
        let world = WorldConfig::new(p, 1, Mode::Counted);
        for n in 0..=12 {
            for bits in 0..1u32 << n {
                let data = zero_one(n, bits);
                let out = scatter_merge_sort(&world, AlgorithmId::Quick, &data).unwrap();
                let ones = data.iter().sum::<Element>() as usize;
                let mut want = vec![0; n - ones];
                want.resize(n, 1);
                assert_eq!(out.sorted, want, "p={p} input={data:?}");
                let plan = plan_partition(n, p).unwrap();
                for (rank, r) in out.ranks.iter().enumerate() {
                    assert_eq!(r.block_lengths[0], plan.sizes[rank]);
                    assert!(r.block_lengths[1..].iter().all(|&l| l == plan.sizes[0]));
                }
            }
        }
    }
}
