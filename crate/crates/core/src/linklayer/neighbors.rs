use std::collections::{BTreeMap, BTreeSet};

use crate::engine::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborConfig {
    pub beacon_interval: SimTime,
    pub neighbor_timeout: SimTime,
    /// Beacon frame size in bytes.
    pub beacon_size: usize,
    pub stability_window: SimTime,
    pub stability_threshold: f64,
}

impl Default for NeighborConfig {
    fn default() -> Self {
        NeighborConfig {
            beacon_interval: 0.5,
            neighbor_timeout: 1.5,
            beacon_size: 32,
            stability_window: 2.0,
            stability_threshold: 0.5,
        }
    }
}

/// Fraction of `snapshot` no longer present in `current`. An empty snapshot
/// has nothing to lose and yields 0.
pub fn departed_fraction(snapshot: &BTreeSet<NodeId>, current: &BTreeSet<NodeId>) -> f64 {
    if snapshot.is_empty() {
        return 0.0;
    }
    let departed = snapshot.difference(current).count();
    departed as f64 / snapshot.len() as f64
}

/// A node is stable when strictly less than `threshold` of the neighbors it
/// had at the last snapshot have gone. Arrivals do not count.
pub fn is_stable(snapshot: &BTreeSet<NodeId>, current: &BTreeSet<NodeId>, threshold: f64) -> bool {
    departed_fraction(snapshot, current) < threshold
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    config: NeighborConfig,
    last_heard: BTreeMap<NodeId, SimTime>,
    snapshot: BTreeSet<NodeId>,
    snapshot_taken: Option<SimTime>,
}

impl NeighborTable {
    pub fn new(config: NeighborConfig) -> Self {
        NeighborTable {
            config,
            last_heard: BTreeMap::new(),
            snapshot: BTreeSet::new(),
            snapshot_taken: None,
        }
    }

    pub fn config(&self) -> &NeighborConfig {
        &self.config
    }

    pub fn heard(&mut self, from: NodeId, now: SimTime) {
        self.last_heard.insert(from, now);
    }

    pub fn is_fresh(&self, id: NodeId, now: SimTime) -> bool {
        self.last_heard
            .get(&id)
            .is_some_and(|&t| now - t <= self.config.neighbor_timeout)
    }

    pub fn current(&self, now: SimTime) -> BTreeSet<NodeId> {
        self.last_heard
            .iter()
            .filter(|(_, &t)| now - t <= self.config.neighbor_timeout)
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn count(&self, now: SimTime) -> usize {
        self.last_heard
            .values()
            .filter(|&&t| now - t <= self.config.neighbor_timeout)
            .count()
    }

    /// Drops entries older than the timeout and returns them.
    pub fn purge(&mut self, now: SimTime) -> Vec<NodeId> {
        let timeout = self.config.neighbor_timeout;
        let stale: Vec<NodeId> = self
            .last_heard
            .iter()
            .filter(|(_, &t)| now - t > timeout)
            .map(|(&id, _)| id)
            .collect();
        for id in &stale {
            self.last_heard.remove(id);
        }
        stale
    }

    pub fn take_snapshot(&mut self, now: SimTime) {
        self.snapshot = self.current(now);
        self.snapshot_taken = Some(now);
    }

    pub fn snapshot(&self) -> &BTreeSet<NodeId> {
        &self.snapshot
    }

    pub fn snapshot_taken(&self) -> Option<SimTime> {
        self.snapshot_taken
    }

    pub fn is_stable(&self, now: SimTime) -> bool {
        is_stable(&self.snapshot, &self.current(now), self.config.stability_threshold)
    }
}
