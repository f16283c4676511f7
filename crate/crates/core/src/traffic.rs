//! Constant-bit-rate traffic sources.

use rand::seq::index::sample;
use rand::Rng;

use crate::engine::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbrFlow {
    pub source: NodeId,
    pub destination: NodeId,
    pub packet_size: usize,
    pub interval: SimTime,
    pub start_time: SimTime,
    pub end_time: SimTime,
}

impl CbrFlow {
    pub const DEFAULT_PACKET_SIZE: usize = 512;
    pub const DEFAULT_INTERVAL: SimTime = 0.25;

    /// Time of the `k`-th packet, computed directly rather than by repeated
    /// addition.
    pub fn emission_time(&self, k: u64) -> SimTime {
        self.start_time + k as f64 * self.interval
    }

    /// Packet times in `[start_time, end_time)`.
    pub fn emission_times(&self) -> impl Iterator<Item = SimTime> + '_ {
        assert!(self.interval > 0.0, "CBR interval must be positive");
        (0u64..)
            .map(|k| self.emission_time(k))
            .take_while(|&t| t < self.end_time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficConfig {
    pub packet_size: usize,
    pub interval: SimTime,
    /// `None` means `max(1, node_count / 10)`.
    pub flows: Option<usize>,
    pub start_min: SimTime,
    pub start_max: SimTime,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            packet_size: CbrFlow::DEFAULT_PACKET_SIZE,
            interval: CbrFlow::DEFAULT_INTERVAL,
            flows: None,
            start_min: 0.0,
            start_max: 10.0,
        }
    }
}

impl TrafficConfig {
    pub fn flow_count(&self, node_count: usize) -> usize {
        self.flows.unwrap_or((node_count / 10).max(1))
    }

    /// Random source/destination pairs (distinct endpoints) with start times
    /// uniform over `[start_min, start_max]`, all ending at `end_time`.
    pub fn draw_flows<R: Rng + ?Sized>(
        &self,
        node_count: usize,
        end_time: SimTime,
        rng: &mut R,
    ) -> Vec<CbrFlow> {
        if node_count < 2 {
            return Vec::new();
        }
        (0..self.flow_count(node_count))
            .map(|_| {
                let pair = sample(rng, node_count, 2);
                let start_time = if self.start_max > self.start_min {
                    rng.random_range(self.start_min..=self.start_max)
                } else {
                    self.start_min
                };
                CbrFlow {
                    source: pair.index(0),
                    destination: pair.index(1),
                    packet_size: self.packet_size,
                    interval: self.interval,
                    start_time,
                    end_time,
                }
            })
            .collect()
    }
}
