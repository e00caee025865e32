//! Shared world state: mailboxes, rank status, core slots and, in counted
//! mode, the logical-time scheduler.
//!
//! Counted mode runs one rank at a time. The active rank keeps running until
//! it blocks on a receive, asks for a core slot or finishes; control then
//! passes to the ready rank with the smallest logical clock (lowest rank on
//! ties). Core-slot requests are therefore served in logical-time order and
//! the whole execution is a pure function of the program and its inputs.

use std::collections::{HashMap, VecDeque};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::Instant;

use super::{CostWeights, Mode};
use crate::error::{Error, Result};
use crate::{Element, Rank};

pub type Tag = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum CollOp {
    Bcast,
    Scatter,
    Gather,
    BarrierIn,
    BarrierOut,
}

/// Matching key for a message, together with its source rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Channel {
    User(Tag),
    Collective { seq: u64, op: CollOp, root: Rank },
}

#[derive(Debug)]
pub(crate) struct Envelope {
    pub payload: Vec<Element>,
    /// Logical time at which the message becomes available (counted mode).
    pub arrival: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    /// Running (wall mode: any rank not blocked; counted mode: the baton holder).
    Active,
    /// Counted mode only: runnable, waiting for the scheduler.
    Ready,
    Waiting { src: Rank, channel: Channel },
    Finished,
}

type Mailbox = HashMap<(Rank, Channel), VecDeque<Envelope>>;

struct State {
    mailboxes: Vec<Mailbox>,
    status: Vec<Status>,
    clocks: Vec<u64>,
    core_free_at: Vec<u64>,
    active_compute: usize,
    high_water: usize,
    deadlock: Option<Vec<Rank>>,
    delivered: u64,
    received: u64,
}

impl State {
    fn has_match(&self, me: Rank, src: Rank, channel: Channel) -> bool {
        self.mailboxes[me]
            .get(&(src, channel))
            .is_some_and(|q| !q.is_empty())
    }

    fn pop(&mut self, me: Rank, src: Rank, channel: Channel) -> Option<Envelope> {
        let env = self.mailboxes[me].get_mut(&(src, channel))?.pop_front()?;
        self.received += 1;
        Some(env)
    }
}

pub(crate) struct Shared {
    state: Mutex<State>,
    wake: Vec<Condvar>,
    slot_freed: Condvar,
    pub mode: Mode,
    pub procs: usize,
    pub cores: usize,
    pub weights: CostWeights,
    epoch: Instant,
}

pub(crate) struct Totals {
    pub high_water: usize,
    pub delivered: u64,
    pub received: u64,
    pub undelivered: u64,
}

impl Shared {
    pub fn new(procs: usize, cores: usize, mode: Mode, weights: CostWeights) -> Self {
        let mut status = vec![Status::Active; procs];
        if mode == Mode::Counted {
            status.iter_mut().skip(1).for_each(|s| *s = Status::Ready);
        }
        Shared {
            state: Mutex::new(State {
                mailboxes: (0..procs).map(|_| HashMap::new()).collect(),
                status,
                clocks: vec![0; procs],
                core_free_at: vec![0; cores],
                active_compute: 0,
                high_water: 0,
                deadlock: None,
                delivered: 0,
                received: 0,
            }),
            wake: (0..procs).map(|_| Condvar::new()).collect(),
            slot_freed: Condvar::new(),
            mode,
            procs,
            cores,
            weights,
            epoch: Instant::now(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        // A panicking rank never leaves the state half-updated, so a poisoned
        // lock is still consistent.
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Nanoseconds since the world started.
    pub fn now(&self) -> u64 {
        self.epoch.elapsed().as_nanos() as u64
    }

    pub fn deliver(&self, src: Rank, dst: Rank, channel: Channel, payload: Vec<Element>, arrival: u64) {
        let mut st = self.lock();
        st.mailboxes[dst]
            .entry((src, channel))
            .or_default()
            .push_back(Envelope { payload, arrival });
        st.delivered += 1;
        if st.status[dst] == (Status::Waiting { src, channel }) {
            match self.mode {
                Mode::Wall => self.wake[dst].notify_one(),
                Mode::Counted => {
                    st.status[dst] = Status::Ready;
                    st.clocks[dst] = st.clocks[dst].max(arrival);
                }
            }
        }
    }

    /// Blocks until a message from `src` on `channel` is available.
    ///
    /// In counted mode `clock` is the caller's logical time on entry; the
    /// caller advances it to at least the envelope's arrival time.
    pub fn take(&self, me: Rank, src: Rank, channel: Channel, clock: u64) -> Result<Envelope> {
        let mut st = self.lock();
        loop {
            if let Some(env) = st.pop(me, src, channel) {
                st.status[me] = Status::Active;
                return Ok(env);
            }
            if let Some(blocked) = &st.deadlock {
                return Err(Error::Deadlock {
                    blocked: blocked.clone(),
                });
            }
            debug_assert_collective_order(&st, me, src, channel);
            st.status[me] = Status::Waiting { src, channel };
            match self.mode {
                Mode::Wall => {
                    self.detect_wall_deadlock(&mut st);
                    if st.deadlock.is_none() {
                        st = self.wake[me].wait(st).unwrap_or_else(|e| e.into_inner());
                    }
                }
                Mode::Counted => {
                    st.clocks[me] = clock;
                    self.hand_off(&mut st);
                    st = self.wait_turn(st, me);
                }
            }
        }
    }

    /// Counted mode: gives up the baton at logical time `clock` and returns
    /// once this rank is again the earliest runnable one.
    pub fn yield_turn(&self, me: Rank, clock: u64) {
        debug_assert_eq!(self.mode, Mode::Counted);
        let mut st = self.lock();
        st.clocks[me] = clock;
        st.status[me] = Status::Ready;
        self.hand_off(&mut st);
        drop(self.wait_turn(st, me));
    }

    /// Counted mode: blocks a freshly spawned rank until it is scheduled.
    pub fn wait_first_turn(&self, me: Rank) {
        let st = self.lock();
        drop(self.wait_turn(st, me));
    }

    pub fn finish(&self, me: Rank, clock: u64) {
        let mut st = self.lock();
        st.status[me] = Status::Finished;
        st.clocks[me] = clock;
        match self.mode {
            Mode::Wall => self.detect_wall_deadlock(&mut st),
            Mode::Counted => self.hand_off(&mut st),
        }
    }

    fn wait_turn<'a>(&'a self, mut st: MutexGuard<'a, State>, me: Rank) -> MutexGuard<'a, State> {
        while st.status[me] != Status::Active {
            if st.deadlock.is_some() && matches!(st.status[me], Status::Waiting { .. }) {
                break;
            }
            st = self.wake[me].wait(st).unwrap_or_else(|e| e.into_inner());
        }
        st
    }

    /// Counted mode: activates the ready rank with the smallest clock, or
    /// declares a deadlock when nobody can run but somebody is waiting.
    fn hand_off(&self, st: &mut State) {
        let next = (0..self.procs)
            .filter(|&r| st.status[r] == Status::Ready)
            .min_by_key(|&r| (st.clocks[r], r));
        match next {
            Some(r) => {
                st.status[r] = Status::Active;
                self.wake[r].notify_one();
            }
            None => {
                let waiting = self.waiting_ranks(st);
                if !waiting.is_empty() {
                    st.deadlock.get_or_insert(waiting);
                    self.wake.iter().for_each(Condvar::notify_all);
                }
            }
        }
    }

    fn waiting_ranks(&self, st: &State) -> Vec<Rank> {
        (0..self.procs)
            .filter(|&r| matches!(st.status[r], Status::Waiting { .. }))
            .collect()
    }

    fn detect_wall_deadlock(&self, st: &mut State) {
        if st.deadlock.is_some() {
            return;
        }
        let mut any_waiting = false;
        for r in 0..self.procs {
            match st.status[r] {
                Status::Finished => {}
                Status::Waiting { src, channel } if !st.has_match(r, src, channel) => {
                    any_waiting = true
                }
                _ => return,
            }
        }
        if any_waiting {
            st.deadlock = Some(self.waiting_ranks(st));
            self.wake.iter().for_each(Condvar::notify_all);
        }
    }

    /// Wall mode: blocks until one of the `cores` slots is free.
    pub fn acquire_slot(&self) {
        let mut st = self.lock();
        while st.active_compute >= self.cores {
            st = self.slot_freed.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        st.active_compute += 1;
        st.high_water = st.high_water.max(st.active_compute);
        assert!(st.active_compute <= self.cores, "core-slot bound violated");
    }

    pub fn release_slot(&self) {
        let mut st = self.lock();
        st.active_compute -= 1;
        self.slot_freed.notify_one();
    }

    /// Counted mode: the earliest-free virtual core and the logical time at
    /// which a section requested at `request` can start on it.
    pub fn reserve_core(&self, request: u64) -> (usize, u64) {
        let st = self.lock();
        let (core, free) = st
            .core_free_at
            .iter()
            .copied()
            .enumerate()
            .min_by_key(|&(i, t)| (t, i))
            .expect("at least one core");
        (core, request.max(free))
    }

    pub fn commit_core(&self, core: usize, end: u64) {
        self.lock().core_free_at[core] = end;
    }

    pub fn totals(&self) -> Totals {
        let st = self.lock();
        Totals {
            high_water: st.high_water,
            delivered: st.delivered,
            received: st.received,
            undelivered: st
                .mailboxes
                .iter()
                .flat_map(|m| m.values())
                .map(|q| q.len() as u64)
                .sum(),
        }
    }
}

/// Two ranks disagreeing on a collective's root or kind leave a message with
/// the right sequence number but a different key; flag it in debug builds.
fn debug_assert_collective_order(st: &State, me: Rank, src: Rank, channel: Channel) {
    if cfg!(debug_assertions) {
        if let Channel::Collective { seq, .. } = channel {
            for (&(from, other), q) in &st.mailboxes[me] {
                if let Channel::Collective { seq: s, .. } = other {
                    debug_assert!(
                        !(from == src && s == seq && other != channel && !q.is_empty()),
                        "collective #{seq} mismatch on rank {me}: expected {channel:?}, rank {src} sent {other:?}"
                    );
                }
            }
        }
    }
}
