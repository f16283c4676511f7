//! Discrete-event core: a time-ordered event queue with cancellation and
//! seeded, named random substreams.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Simulated time in seconds.
pub type SimTime = f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("event scheduled at t={at} but clock is already at t={now}")]
    InThePast { at: SimTime, now: SimTime },
    #[error("event time {0} is not a finite number")]
    NotFinite(SimTime),
}

/// Handle returned by [`EventQueue::schedule`]; it is the event's sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventHandle(u64);

impl EventHandle {
    pub fn sequence(self) -> u64 {
        self.0
    }
}

/// An event as it leaves the queue.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatched<T> {
    pub time: SimTime,
    pub sequence: u64,
    pub payload: T,
}

struct Entry<T> {
    time: SimTime,
    sequence: u64,
    payload: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Entry<T> {}

impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.sequence.cmp(&other.sequence))
    }
}

/// Min-ordered event queue keyed by `(time, sequence)`.
///
/// The queue owns the simulation clock: popping an event advances the clock
/// to the event's time, and nothing may be scheduled before the clock.
pub struct EventQueue<T> {
    heap: BinaryHeap<Reverse<Entry<T>>>,
    cancelled: HashSet<u64>,
    next_sequence: u64,
    now: SimTime,
}

impl<T> Default for EventQueue<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> EventQueue<T> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            next_sequence: 0,
            now: 0.0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of live (non-cancelled) events still queued.
    pub fn len(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn schedule(&mut self, time: SimTime, payload: T) -> Result<EventHandle, ScheduleError> {
        if !time.is_finite() {
            return Err(ScheduleError::NotFinite(time));
        }
        if time < self.now {
            return Err(ScheduleError::InThePast { at: time, now: self.now });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Reverse(Entry { time, sequence, payload }));
        Ok(EventHandle(sequence))
    }

    pub fn schedule_in(&mut self, delay: SimTime, payload: T) -> Result<EventHandle, ScheduleError> {
        self.schedule(self.now + delay, payload)
    }

    /// Cancels a pending event. Returns false if it was already dispatched or
    /// cancelled.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        let pending = self.heap.iter().any(|Reverse(e)| e.sequence == handle.0);
        pending && self.cancelled.insert(handle.0)
    }

    /// Pops the next live event whose time is `<= end`, advancing the clock.
    pub fn pop_until(&mut self, end: SimTime) -> Option<Dispatched<T>> {
        loop {
            let next_time = self.heap.peek()?.0.time;
            if next_time > end {
                return None;
            }
            let Reverse(entry) = self.heap.pop().expect("peeked");
            if self.cancelled.remove(&entry.sequence) {
                continue;
            }
            self.now = entry.time;
            return Some(Dispatched {
                time: entry.time,
                sequence: entry.sequence,
                payload: entry.payload,
            });
        }
    }

    /// Moves the clock forward to `end` once every event up to it has been
    /// dispatched.
    pub fn advance_to(&mut self, end: SimTime) {
        if end > self.now {
            self.now = end;
        }
    }
}

/// Named random substreams derived from one master seed.
///
/// Each substream is an independent ChaCha8 generator keyed by the master
/// seed and the stream's name, so drawing more numbers from one stream never
/// perturbs another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
}

impl RandomStream {
    pub const PLACEMENT: &'static str = "placement";
    pub const MOBILITY: &'static str = "mobility";
    pub const TRAFFIC: &'static str = "traffic";
    pub const CHANNEL: &'static str = "channel";
    pub const BEACON: &'static str = "beacon";

    pub fn new(seed: u64) -> Self {
        RandomStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self, name: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ fnv1a(name.as_bytes())))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
