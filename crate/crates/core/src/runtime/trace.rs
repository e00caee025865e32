//! Per-rank timelines.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::Rank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Compute,
    Send,
    Recv,
    Bcast,
    Scatter,
    Gather,
    Barrier,
    Idle,
}

impl TraceKind {
    pub const ALL: [TraceKind; 8] = [
        TraceKind::Compute,
        TraceKind::Send,
        TraceKind::Recv,
        TraceKind::Bcast,
        TraceKind::Scatter,
        TraceKind::Gather,
        TraceKind::Barrier,
        TraceKind::Idle,
    ];

    pub fn is_communication(self) -> bool {
        !matches!(self, TraceKind::Compute | TraceKind::Idle)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Compute => "compute",
            TraceKind::Send => "send",
            TraceKind::Recv => "recv",
            TraceKind::Bcast => "bcast",
            TraceKind::Scatter => "scatter",
            TraceKind::Gather => "gather",
            TraceKind::Barrier => "barrier",
            TraceKind::Idle => "idle",
        }
    }
}

/// One interval on a rank's timeline.
///
/// Timestamps are nanoseconds since world start in wall mode and weighted
/// operation counts in counted mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub rank: Rank,
    pub kind: TraceKind,
    pub t_start: u64,
    pub t_end: u64,
    pub bytes: u64,
}

impl TraceEvent {
    pub fn duration(&self) -> u64 {
        self.t_end - self.t_start
    }
}

/// Time spent per category on one rank.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBreakdown {
    pub compute: u64,
    pub communication: u64,
    pub idle: u64,
}

impl TimeBreakdown {
    pub fn of(events: &[TraceEvent]) -> Self {
        let mut out = TimeBreakdown::default();
        for ev in events {
            match ev.kind {
                TraceKind::Compute => out.compute += ev.duration(),
                TraceKind::Idle => out.idle += ev.duration(),
                _ => out.communication += ev.duration(),
            }
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.compute + self.communication + self.idle
    }
}

/// Appends events for a single rank, filling any gap between consecutive
/// events with `idle` so that the timeline tiles `[0, end]`.
#[derive(Debug)]
pub(crate) struct Tracer {
    rank: Rank,
    events: Vec<TraceEvent>,
    cursor: u64,
}

impl Tracer {
    pub(crate) fn new(rank: Rank) -> Self {
        Tracer {
            rank,
            events: Vec::new(),
            cursor: 0,
        }
    }

    pub(crate) fn record(&mut self, kind: TraceKind, t_start: u64, t_end: u64, bytes: u64) {
        let t_start = t_start.max(self.cursor);
        let t_end = t_end.max(t_start);
        self.fill_idle(t_start);
        self.events.push(TraceEvent {
            rank: self.rank,
            kind,
            t_start,
            t_end,
            bytes,
        });
        self.cursor = t_end;
    }

    pub(crate) fn fill_idle(&mut self, until: u64) {
        if until > self.cursor {
            self.events.push(TraceEvent {
                rank: self.rank,
                kind: TraceKind::Idle,
                t_start: self.cursor,
                t_end: until,
                bytes: 0,
            });
            self.cursor = until;
        }
    }

    pub(crate) fn finish(mut self, end: u64) -> (Vec<TraceEvent>, u64) {
        self.fill_idle(end);
        let end = self.cursor;
        (self.events, end)
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    run_id: &'a str,
    rank: Rank,
    kind: TraceKind,
    t_start_ns: u64,
    t_end_ns: u64,
    bytes: u64,
}

/// Writes events as JSON Lines, one object per event.
pub fn write_trace_jsonl<W: Write>(
    mut out: W,
    run_id: &str,
    events: impl IntoIterator<Item = TraceEvent>,
) -> std::io::Result<()> {
    for ev in events {
        let line = TraceLine {
            run_id,
            rank: ev.rank,
            kind: ev.kind,
            t_start_ns: ev.t_start,
            t_end_ns: ev.t_end,
            bytes: ev.bytes,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
