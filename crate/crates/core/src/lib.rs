//! Scatter/merge parallel sorting over an in-process message-passing runtime.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`]: instrumented sequential bubble, merge and quick sort.
//! * [`runtime`]: a rank-based message-passing world with point-to-point and
//!   collective operations, an emulated core-slot limit, per-rank traces and
//!   cost counters. Worlds run either against the wall clock or in a fully
//!   deterministic counted mode.
//! * [`parallel`]: the scatter / local sort / odd-even block merge / gather
//!   driver built on the runtime.
//! * [`model`]: analytic time and memory models plus least-squares
//!   calibration.
//! * [`harness`]: data generation, the two experiment grids, trace and CSV
//!   export.

pub mod error;
pub mod harness;
pub mod kernels;
pub mod model;
pub mod parallel;
pub mod runtime;

pub use error::{Error, Result};
pub use harness::{gen_data, overhead_ratio, RunConfig, RunReport};
pub use kernels::SortStats;
pub use model::{MemoryConstants, ModelParams};
pub use parallel::{scatter_merge_sort, AlgorithmId, PartitionPlan, PhaseSchedule};
pub use runtime::{
    spawn_world, Communicator, CostCounters, CostWeights, Mode, TraceEvent, TraceKind,
    WorldConfig, WorldReport,
};

/// The value type being sorted.
pub type Element = i64;

/// Width of one [`Element`] on the wire, in bytes.
pub const ELEMENT_BYTES: u64 = std::mem::size_of::<Element>() as u64;

/// Identity of a logical process inside a world.
pub type Rank = usize;
