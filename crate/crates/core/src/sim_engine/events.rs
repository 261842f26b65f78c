//! Time-ordered event queue with FIFO tie-breaking within a rank.

use alloc::collections::BinaryHeap;
use core::cmp::Reverse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Arrival { app: usize },
    Access { node: usize, gen: u64 },
    StepStart { ex: u64, step: usize },
    TxEnd { tx: u64 },
    ExchangeEnd { ex: u64 },
    NavEnd { node: usize },
    Mobility { station: usize },
    Beacon,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time_us: u64,
    /// Same-instant order: frame ends, then exchange ends, then the rest.
    pub rank: u8,
    pub seq: u64,
    pub kind: EventKind,
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
    now: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Schedule `kind` at `time_us`; scheduling before the current time is a fault.
    pub fn push(&mut self, time_us: u64, kind: EventKind) {
        assert!(time_us >= self.now, "event scheduled in the past: {time_us} < {}", self.now);
        let rank = match kind {
            EventKind::TxEnd { .. } => 0,
            EventKind::ExchangeEnd { .. } => 1,
            _ => 2,
        };
        self.heap.push(Reverse(Event {
            time_us,
            rank,
            seq: self.seq,
            kind,
        }));
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<Event> {
        let Reverse(e) = self.heap.pop()?;
        assert!(e.time_us >= self.now, "event queue out of order");
        self.now = e.time_us;
        Some(e)
    }

    pub fn peek_time(&self) -> Option<u64> {
        self.heap.peek().map(|Reverse(e)| e.time_us)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
