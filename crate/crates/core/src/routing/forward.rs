use std::collections::HashSet;

use crate::engine::SimTime;
use crate::NodeId;

use super::request::{HopAnnotation, RouteRequest};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscoveryConfig {
    /// Link bandwidth in bits per second.
    pub bandwidth: f64,
    /// How many times each relayed byte crosses a forwarder's radio.
    pub relay_factor: f64,
    /// Drop requests at forwarders whose remaining lifetime is too short.
    pub lifetime_filter: bool,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            bandwidth: 2_000_000.0,
            relay_factor: 2.0,
            lifetime_filter: true,
        }
    }
}

impl DiscoveryConfig {
    /// Time a forwarder must stay alive to relay `req_size` bytes.
    pub fn needed_send_time(&self, req_size: usize) -> SimTime {
        (req_size as f64 * 8.0 / self.bandwidth) * self.relay_factor
    }
}

/// Flood ids a node has already handled.
pub type SeenFloods = HashSet<(NodeId, u32)>;

/// Local state a node consults when a route request arrives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwarderView {
    /// This node's annotation as it would be appended to the request.
    pub annotation: HopAnnotation,
    pub remaining_lifetime: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RreqDisposition {
    /// Already handled this flood, or the request is our own.
    Duplicate,
    /// Remaining lifetime does not cover the announced transfer.
    DroppedByLifetime,
    /// We are the destination; score and buffer the request.
    AtDestination(RouteRequest),
    /// Rebroadcast this updated copy.
    Forward(RouteRequest),
}

/// Decides what a node does with a received route request. The destination
/// accepts every copy (each arrives over a different last hop); any other
/// node handles a flood at most once.
pub fn process_rreq(
    view: &ForwarderView,
    seen: &mut SeenFloods,
    mut rreq: RouteRequest,
    config: &DiscoveryConfig,
) -> RreqDisposition {
    let me = view.annotation.node;
    if me == rreq.source {
        return RreqDisposition::Duplicate;
    }
    rreq.arrive();
    if me == rreq.destination {
        return RreqDisposition::AtDestination(rreq);
    }
    if !seen.insert(rreq.key()) {
        return RreqDisposition::Duplicate;
    }
    if config.lifetime_filter && view.remaining_lifetime <= config.needed_send_time(rreq.req_size) {
        return RreqDisposition::DroppedByLifetime;
    }
    rreq.absorb(view.annotation);
    RreqDisposition::Forward(rreq)
}
