use super::counters::{Allocations, CostCounters};
use super::engine::{Channel, CollOp, Shared, Tag};
use super::trace::{TraceEvent, TraceKind, Tracer};
use super::Mode;
use crate::error::{Error, Result};
use crate::kernels::SortStats;
use crate::{Element, Rank, ELEMENT_BYTES};

/// A rank's handle on its world.
///
/// All communication goes through this type. It is not `Clone` and every
/// operation takes `&mut self`, so a rank cannot use it from two places at
/// once, and a compute section cannot communicate or nest another section.
pub struct Communicator<'w> {
    rank: Rank,
    shared: &'w Shared,
    clock: u64,
    coll_seq: u64,
    tracer: Tracer,
    counters: CostCounters,
    alloc: Allocations,
}

pub(crate) struct RankRecord {
    pub events: Vec<TraceEvent>,
    pub end: u64,
    pub counters: CostCounters,
}

impl<'w> Communicator<'w> {
    pub(crate) fn new(rank: Rank, shared: &'w Shared) -> Self {
        Communicator {
            rank,
            shared,
            clock: 0,
            coll_seq: 0,
            tracer: Tracer::new(rank),
            counters: CostCounters::default(),
            alloc: Allocations::default(),
        }
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.shared.procs
    }

    pub fn mode(&self) -> Mode {
        self.shared.mode
    }

    pub fn counters(&self) -> &CostCounters {
        &self.counters
    }

    /// Current time on this rank: wall nanoseconds or logical clock.
    pub fn now(&self) -> u64 {
        match self.shared.mode {
            Mode::Wall => self.shared.now(),
            Mode::Counted => self.clock,
        }
    }

    pub(crate) fn finish(mut self) -> RankRecord {
        let end = self.now();
        self.shared.finish(self.rank, self.clock);
        self.counters.peak_tracked_elements = self.alloc.peak;
        let (events, end) = self.tracer.finish(end);
        RankRecord {
            events,
            end,
            counters: self.counters,
        }
    }

    fn check_peer(&self, peer: Rank, what: &str) -> Result<()> {
        if peer >= self.size() {
            return Err(Error::config(format!(
                "{what} rank {peer} out of range for world of size {}",
                self.size()
            )));
        }
        if peer == self.rank {
            return Err(Error::config(format!(
                "rank {} cannot {what} itself",
                self.rank
            )));
        }
        Ok(())
    }

    fn check_root(&self, root: Rank) -> Result<()> {
        if root >= self.size() {
            return Err(Error::config(format!(
                "root {root} out of range for world of size {}",
                self.size()
            )));
        }
        Ok(())
    }

    // Point-to-point primitives without tracing; collectives build on these.

    fn raw_send(&mut self, dst: Rank, channel: Channel, payload: &[Element]) {
        let bytes = payload.len() as u64 * ELEMENT_BYTES;
        let w = self.shared.weights;
        self.clock += w.latency + w.per_element * payload.len() as u64;
        self.counters.messages_sent += 1;
        self.counters.bytes_sent += bytes;
        self.shared
            .deliver(self.rank, dst, channel, payload.to_vec(), self.clock);
    }

    fn raw_recv(&mut self, src: Rank, channel: Channel) -> Result<Vec<Element>> {
        let env = self.shared.take(self.rank, src, channel, self.clock)?;
        self.clock = self.clock.max(env.arrival);
        Ok(env.payload)
    }

    fn traced<R>(
        &mut self,
        kind: TraceKind,
        op: impl FnOnce(&mut Self) -> Result<(R, u64)>,
    ) -> Result<R> {
        let t0 = self.now();
        let (value, bytes) = op(self)?;
        let t1 = self.now();
        self.tracer.record(kind, t0, t1, bytes);
        Ok(value)
    }

    fn next_collective(&mut self, op: CollOp, root: Rank) -> Channel {
        self.coll_seq += 1;
        Channel::Collective {
            seq: self.coll_seq,
            op,
            root,
        }
    }

    /// Sends a copy of `payload` to `dst`. Never blocks.
    pub fn send(&mut self, dst: Rank, tag: Tag, payload: &[Element]) -> Result<()> {
        self.check_peer(dst, "send to")?;
        self.traced(TraceKind::Send, |c| {
            c.raw_send(dst, Channel::User(tag), payload);
            Ok(((), payload.len() as u64 * ELEMENT_BYTES))
        })
    }

    /// Receives the oldest message from `src` with `tag`, blocking until one
    /// arrives. The recv event covers the blocked interval.
    pub fn recv(&mut self, src: Rank, tag: Tag) -> Result<Vec<Element>> {
        self.check_peer(src, "receive from")?;
        self.traced(TraceKind::Recv, |c| {
            let payload = c.raw_recv(src, Channel::User(tag))?;
            let bytes = payload.len() as u64 * ELEMENT_BYTES;
            Ok((payload, bytes))
        })
    }

    /// Flat broadcast: the root sends `value` to every other rank. Non-root
    /// callers' `value` is ignored.
    pub fn broadcast(&mut self, root: Rank, value: Vec<Element>) -> Result<Vec<Element>> {
        self.check_root(root)?;
        let channel = self.next_collective(CollOp::Bcast, root);
        self.traced(TraceKind::Bcast, |c| {
            let bytes = value.len() as u64 * ELEMENT_BYTES;
            if c.rank == root {
                for dst in (0..c.size()).filter(|&r| r != root) {
                    c.raw_send(dst, channel, &value);
                }
                Ok((value, bytes * (c.size() as u64 - 1)))
            } else {
                let got = c.raw_recv(root, channel)?;
                let bytes = got.len() as u64 * ELEMENT_BYTES;
                Ok((got, bytes))
            }
        })
    }

    /// Splits `list` (meaningful at the root only) into contiguous blocks of
    /// `sizes[i]` elements; rank `i` receives block `i`.
    pub fn scatter(&mut self, root: Rank, list: &[Element], sizes: &[usize]) -> Result<Vec<Element>> {
        self.check_root(root)?;
        if sizes.len() != self.size() {
            return Err(Error::config(format!(
                "scatter needs {} block sizes, got {}",
                self.size(),
                sizes.len()
            )));
        }
        if self.rank == root {
            let total: usize = sizes.iter().sum();
            if total != list.len() {
                return Err(Error::config(format!(
                    "scatter sizes sum to {total} but the list holds {}",
                    list.len()
                )));
            }
        }
        let channel = self.next_collective(CollOp::Scatter, root);
        self.traced(TraceKind::Scatter, |c| {
            if c.rank == root {
                let mut mine = Vec::new();
                let mut bytes = 0;
                let mut offset = 0;
                for (dst, &len) in sizes.iter().enumerate() {
                    let block = &list[offset..offset + len];
                    offset += len;
                    if dst == root {
                        mine = block.to_vec();
                    } else {
                        c.raw_send(dst, channel, block);
                        bytes += len as u64 * ELEMENT_BYTES;
                    }
                }
                Ok((mine, bytes))
            } else {
                let block = c.raw_recv(root, channel)?;
                debug_assert_eq!(block.len(), sizes[c.rank]);
                let bytes = block.len() as u64 * ELEMENT_BYTES;
                Ok((block, bytes))
            }
        })
    }

    /// Concatenates every rank's block in rank order at the root; other ranks
    /// get an empty vector.
    pub fn gather(&mut self, root: Rank, block: &[Element]) -> Result<Vec<Element>> {
        self.check_root(root)?;
        let channel = self.next_collective(CollOp::Gather, root);
        self.traced(TraceKind::Gather, |c| {
            if c.rank == root {
                let mut all = Vec::new();
                let mut bytes = 0;
                for src in 0..c.size() {
                    if src == root {
                        all.extend_from_slice(block);
                    } else {
                        let part = c.raw_recv(src, channel)?;
                        bytes += part.len() as u64 * ELEMENT_BYTES;
                        all.extend_from_slice(&part);
                    }
                }
                Ok((all, bytes))
            } else {
                c.raw_send(root, channel, block);
                Ok((Vec::new(), block.len() as u64 * ELEMENT_BYTES))
            }
        })
    }

    /// No rank leaves until every rank has entered. Rank 0 collects an empty
    /// message from each peer, then releases them.
    pub fn barrier(&mut self) -> Result<()> {
        let arrive = self.next_collective(CollOp::BarrierIn, 0);
        let release = self.next_collective(CollOp::BarrierOut, 0);
        self.traced(TraceKind::Barrier, |c| {
            if c.rank == 0 {
                for src in 1..c.size() {
                    c.raw_recv(src, arrive)?;
                }
                for dst in 1..c.size() {
                    c.raw_send(dst, release, &[]);
                }
            } else {
                c.raw_send(0, arrive, &[]);
                c.raw_recv(0, release)?;
            }
            Ok(((), 0))
        })
    }

    /// Runs CPU-bound `work` while holding one of the world's core slots.
    ///
    /// The closure's [`SortStats`] are added to this rank's counters; in
    /// counted mode they also determine the section's logical duration.
    pub fn compute_section<R>(&mut self, work: impl FnOnce(&mut SortStats) -> R) -> R {
        let mut stats = SortStats::default();
        let value = match self.shared.mode {
            Mode::Wall => {
                self.shared.acquire_slot();
                let slot = SlotGuard(self.shared);
                let t0 = self.shared.now();
                let value = work(&mut stats);
                let t1 = self.shared.now();
                drop(slot);
                self.tracer.record(TraceKind::Compute, t0, t1, 0);
                value
            }
            Mode::Counted => {
                self.shared.yield_turn(self.rank, self.clock);
                let (core, start) = self.shared.reserve_core(self.clock);
                let value = work(&mut stats);
                let end = start + stats.weight();
                self.shared.commit_core(core, end);
                self.clock = end;
                self.tracer.record(TraceKind::Compute, start, end, 0);
                value
            }
        };
        self.counters.absorb(&stats);
        value
    }

    /// Registers `n` live elements on this rank.
    pub fn tracked_alloc(&mut self, n: usize) {
        self.alloc.alloc(n as u64);
    }

    /// Releases `n` tracked elements; panics if more than the live balance.
    pub fn tracked_free(&mut self, n: usize) {
        self.alloc.free(self.rank, n as u64);
    }

    pub fn tracked_current(&self) -> u64 {
        self.alloc.current
    }

    pub fn tracked_peak(&self) -> u64 {
        self.alloc.peak
    }

    /// Closes the current peak window, returning its peak, and opens a new
    /// one at the live balance.
    pub fn tracked_window(&mut self) -> u64 {
        self.alloc.rewindow()
    }
}

struct SlotGuard<'a>(&'a Shared);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        self.0.release_slot();
    }
}
