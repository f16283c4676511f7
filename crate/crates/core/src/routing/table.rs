use std::collections::{BTreeMap, BTreeSet};

use crate::engine::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub established_at: SimTime,
    pub active: bool,
    /// Upstream neighbors that forward through this entry; they are told when
    /// it breaks.
    pub precursors: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RouteTable {
    entries: BTreeMap<NodeId, RouteEntry>,
}

impl RouteTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Installs or refreshes the route to `destination`.
    pub fn install(
        &mut self,
        destination: NodeId,
        next_hop: NodeId,
        hop_count: u32,
        now: SimTime,
        precursor: Option<NodeId>,
    ) {
        let entry = self.entries.entry(destination).or_insert_with(|| RouteEntry {
            destination,
            next_hop,
            hop_count,
            established_at: now,
            active: true,
            precursors: BTreeSet::new(),
        });
        if !entry.active || entry.next_hop != next_hop {
            entry.precursors.clear();
        }
        entry.next_hop = next_hop;
        entry.hop_count = hop_count;
        entry.established_at = now;
        entry.active = true;
        entry.precursors.extend(precursor);
    }

    pub fn active(&self, destination: NodeId) -> Option<&RouteEntry> {
        self.entries.get(&destination).filter(|e| e.active)
    }

    pub fn get(&self, destination: NodeId) -> Option<&RouteEntry> {
        self.entries.get(&destination)
    }

    /// Deactivates the route to `destination`, returning it if it was active.
    pub fn invalidate(&mut self, destination: NodeId) -> Option<RouteEntry> {
        let entry = self.entries.get_mut(&destination)?;
        if !entry.active {
            return None;
        }
        entry.active = false;
        Some(entry.clone())
    }

    /// Deactivates every active route whose next hop is `neighbor`.
    pub fn invalidate_via(&mut self, neighbor: NodeId) -> Vec<RouteEntry> {
        let mut broken = Vec::new();
        for entry in self.entries.values_mut() {
            if entry.active && entry.next_hop == neighbor {
                entry.active = false;
                broken.push(entry.clone());
            }
        }
        broken
    }

    pub fn active_entries(&self) -> impl Iterator<Item = &RouteEntry> {
        self.entries.values().filter(|e| e.active)
    }
}
