use std::collections::BTreeMap;

use crate::engine::{EventHandle, SimTime};
use crate::NodeId;

use super::cost::RouteScore;
use super::request::RouteRequest;

#[derive(Debug, Clone, PartialEq)]
pub struct PendingReply {
    pub best: RouteRequest,
    pub score: RouteScore,
    pub timer: Option<EventHandle>,
    /// Copies received so far, including the held one.
    pub received: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offer {
    /// First copy of this flood; the caller must arm the reply timer.
    Started,
    /// Strictly cheaper than the held copy and replaced it.
    Replaced,
    /// Not cheaper; discarded.
    Rejected,
}

/// Requests a destination holds back while waiting for cheaper copies of the
/// same flood. One slot per `(source, flood_id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingReplyBuffer {
    buffering_time: SimTime,
    slots: BTreeMap<(NodeId, u32), PendingReply>,
}

impl PendingReplyBuffer {
    pub const DEFAULT_BUFFERING_TIME: SimTime = 0.100;

    pub fn new(buffering_time: SimTime) -> Self {
        PendingReplyBuffer {
            buffering_time,
            slots: BTreeMap::new(),
        }
    }

    pub fn buffering_time(&self) -> SimTime {
        self.buffering_time
    }

    pub fn offer(&mut self, rreq: RouteRequest, score: RouteScore) -> Offer {
        match self.slots.get_mut(&rreq.key()) {
            None => {
                self.slots.insert(
                    rreq.key(),
                    PendingReply { best: rreq, score, timer: None, received: 1 },
                );
                Offer::Started
            }
            Some(slot) => {
                slot.received += 1;
                if score.beats(&slot.score) {
                    slot.best = rreq;
                    slot.score = score;
                    Offer::Replaced
                } else {
                    Offer::Rejected
                }
            }
        }
    }

    pub fn arm(&mut self, key: (NodeId, u32), timer: EventHandle) {
        if let Some(slot) = self.slots.get_mut(&key) {
            slot.timer = Some(timer);
        }
    }

    pub fn get(&self, key: (NodeId, u32)) -> Option<&PendingReply> {
        self.slots.get(&key)
    }

    /// Removes the slot when its window closes.
    pub fn expire(&mut self, key: (NodeId, u32)) -> Option<PendingReply> {
        self.slots.remove(&key)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}
