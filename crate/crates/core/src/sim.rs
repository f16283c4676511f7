//! One simulated network: nodes, radio, on-demand routing and CBR traffic
//! driven by the event queue.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::energy::{remaining_lifetime, Battery, DrawCause, DrawOutcome, DrainRateEstimator};
use crate::engine::{EventHandle, EventQueue, RandomStream, SimTime};
use crate::linklayer::{Medium, NeighborTable, PacketBuffer, Stations, UnicastOutcome};
use crate::metrics::{MetricSample, MetricsLedger, NodeEnergy};
use crate::mobility::{next_waypoint, Point, WaypointState};
use crate::routing::{
    process_rreq, score_request, AnnotatedRoute, CostPolicy, DiscoveryConfig, ForwarderView,
    HopAnnotation, Offer, PendingReplyBuffer, ProtocolKind, RouteEntry, RouteError, RouteReply,
    RouteRequest, RouteScore, RouteTable, RreqDisposition, SeenFloods,
};
use crate::scenario::Scenario;
use crate::traffic::CbrFlow;
use crate::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("protocol '{0}' cannot run in-protocol")]
    OfflineOnly(ProtocolKind),
    #[error("invalid routing policy: {0}")]
    Policy(String),
    #[error("flow {index} references node {node} but only {nodes} nodes exist")]
    BadFlow { index: usize, node: NodeId, nodes: usize },
}

/// Explicit placement for hand-built topologies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSetup {
    pub position: Point,
    pub initial_energy: f64,
    /// Seeds the drain-rate estimate instead of starting from zero.
    pub drain_rate: Option<f64>,
}

impl NodeSetup {
    pub fn at(x: f64, y: f64) -> Self {
        NodeSetup {
            position: Point::new(x, y),
            initial_energy: Battery::DEFAULT_INITIAL,
            drain_rate: None,
        }
    }

    pub fn energy(mut self, joules: f64) -> Self {
        self.initial_energy = joules;
        self
    }

    pub fn drain_rate(mut self, rate: f64) -> Self {
        self.drain_rate = Some(rate);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub id: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub size: usize,
    pub created_at: SimTime,
    pub retransmitted: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Packet {
    Beacon,
    Rreq(RouteRequest),
    Rrep(RouteReply),
    Rerr(RouteError),
    Data(DataPacket),
}

#[derive(Debug, Clone, PartialEq)]
enum Timer {
    ReplyWindow { node: NodeId, key: (NodeId, u32) },
    DiscoveryTimeout { node: NodeId, destination: NodeId, flood_id: u32 },
    TxDone(NodeId),
    Retransmit { node: NodeId, packet: DataPacket },
    StabilitySnapshot,
}

#[derive(Debug, Clone, PartialEq)]
enum Event {
    PacketDelivery { to: NodeId, from: NodeId, packet: Packet },
    TimerExpiry(Timer),
    /// `Some(node)`: that node's waypoint leg ended. `None`: periodic refresh
    /// of the positions the radio sees.
    MobilityUpdate(Option<NodeId>),
    BeaconTick(NodeId),
    TrafficTick { flow: usize, k: u64 },
    DrainRateSample,
    MetricSample,
}

/// One line of the event trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: Option<NodeId>,
    pub kind: &'static str,
    pub detail: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let node = self.node.map_or_else(|| "-".to_string(), |n| n.to_string());
        write!(f, "{:.6}\t{}\t{}\t{}", self.time, node, self.kind, self.detail)
    }
}

/// What the destination saw for one flood and what came of it.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryRecord {
    pub source: NodeId,
    pub destination: NodeId,
    pub flood_id: u32,
    /// Every copy that reached the destination, in arrival order.
    pub candidates: Vec<(AnnotatedRoute, RouteScore)>,
    /// Path the destination answered with.
    pub replied: Option<Vec<NodeId>>,
    /// Path installed at the source when the reply arrived.
    pub installed: Option<Vec<NodeId>>,
    /// Intermediate nodes that dropped this flood on the lifetime filter.
    pub lifetime_drops: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
struct Discovery {
    flood_id: u32,
    attempts: u32,
    timer: EventHandle,
}

struct Node {
    battery: Battery,
    drain: DrainRateEstimator,
    leg: WaypointState,
    neighbors: NeighborTable,
    buffer: PacketBuffer<DataPacket>,
    routes: RouteTable,
    seen: SeenFloods,
    replies: PendingReplyBuffer,
    discoveries: BTreeMap<NodeId, Discovery>,
    next_flood_id: u32,
    busy: bool,
}

impl Node {
    fn alive(&self) -> bool {
        self.battery.is_alive()
    }
}

/// Radio-side view of the nodes: positions frozen at the last refresh and
/// energy billing into both the batteries and the ledger.
struct Air<'a> {
    nodes: &'a mut [Node],
    positions: &'a [Point],
    ledger: &'a mut MetricsLedger,
    deaths: &'a mut Vec<NodeId>,
    now: SimTime,
}

impl Stations for Air<'_> {
    fn station_count(&self) -> usize {
        self.nodes.len()
    }

    fn position(&self, id: NodeId) -> Point {
        self.positions[id]
    }

    fn is_alive(&self, id: NodeId) -> bool {
        self.nodes[id].alive()
    }

    fn charge(&mut self, id: NodeId, amount: f64, cause: DrawCause) {
        let (outcome, taken) = self.nodes[id].battery.draw(amount, cause);
        let report = &mut self.ledger.node_energy[id];
        report.drawn.record(cause, taken);
        if outcome == DrawOutcome::Depleted {
            report.died_at = Some(self.now);
            self.deaths.push(id);
        }
    }
}

pub struct Simulation {
    scenario: Scenario,
    protocol: ProtocolKind,
    policy: CostPolicy,
    discovery: DiscoveryConfig,
    medium: Medium,
    queue: EventQueue<Event>,
    nodes: Vec<Node>,
    positions: Vec<Point>,
    flows: Vec<CbrFlow>,
    ledger: MetricsLedger,
    mobility_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
    next_packet_id: u64,
    data_in_air: u64,
    data_held: u64,
    deaths: Vec<NodeId>,
    /// Recompute positions at every transmission instead of on the periodic
    /// tick.
    exact_positions: bool,
    trace: Option<Vec<TraceRecord>>,
    discovery_log: Option<BTreeMap<(NodeId, u32), DiscoveryRecord>>,
}

impl Simulation {
    /// Random placement, random waypoint mobility and random CBR flows, all
    /// drawn from `seed`.
    pub fn new(scenario: &Scenario, protocol: ProtocolKind, seed: u64) -> Result<Self, SimError> {
        let streams = RandomStream::new(seed);
        let mut placement = streams.substream(RandomStream::PLACEMENT);
        let setups: Vec<NodeSetup> = (0..scenario.node_count)
            .map(|_| {
                let p = scenario.terrain.random_point(&mut placement);
                NodeSetup::at(p.x, p.y).energy(scenario.initial_energy)
            })
            .collect();
        let mut traffic = streams.substream(RandomStream::TRAFFIC);
        let flows = scenario
            .traffic
            .draw_flows(scenario.node_count, scenario.sim_time, &mut traffic);
        Simulation::build(scenario, protocol, seed, setups, flows, true)
    }

    /// Hand-built static topology with explicit flows. Nodes never move.
    pub fn with_nodes(
        scenario: &Scenario,
        protocol: ProtocolKind,
        seed: u64,
        nodes: Vec<NodeSetup>,
        flows: Vec<CbrFlow>,
    ) -> Result<Self, SimError> {
        Simulation::build(scenario, protocol, seed, nodes, flows, false)
    }

    fn build(
        scenario: &Scenario,
        protocol: ProtocolKind,
        seed: u64,
        setups: Vec<NodeSetup>,
        flows: Vec<CbrFlow>,
        mobile: bool,
    ) -> Result<Self, SimError> {
        if !protocol.is_live() {
            return Err(SimError::OfflineOnly(protocol));
        }
        let policy = scenario.routing.policy_for(protocol);
        policy.validate().map_err(|e| SimError::Policy(e.to_string()))?;
        for (index, flow) in flows.iter().enumerate() {
            for node in [flow.source, flow.destination] {
                if node >= setups.len() {
                    return Err(SimError::BadFlow { index, node, nodes: setups.len() });
                }
            }
        }

        let streams = RandomStream::new(seed);
        let mut mobility_rng = streams.substream(RandomStream::MOBILITY);
        let mut beacon_rng = streams.substream(RandomStream::BEACON);
        let mut queue = EventQueue::new();
        let mut nodes = Vec::with_capacity(setups.len());
        let mut ledger = MetricsLedger::default();

        for (id, setup) in setups.iter().enumerate() {
            let battery = Battery::new(setup.initial_energy);
            let mut drain = DrainRateEstimator::new(
                scenario.drain_alpha,
                scenario.drain_sample_interval,
                &battery,
            );
            if let Some(rate) = setup.drain_rate {
                drain = drain.with_rate(rate);
            }
            let leg = if mobile {
                next_waypoint(setup.position, 0.0, &scenario.terrain, &scenario.waypoint, &mut mobility_rng)
            } else {
                WaypointState::stationary(setup.position)
            };
            if leg.leg_end().is_finite() {
                queue.schedule(leg.leg_end(), Event::MobilityUpdate(Some(id))).expect("future");
            }
            if scenario.neighbors.beacon_interval > 0.0 {
                let offset = beacon_rng.random_range(0.0..scenario.neighbors.beacon_interval);
                queue.schedule(offset, Event::BeaconTick(id)).expect("future");
            }
            ledger.node_energy.push(NodeEnergy {
                initial: battery.initial(),
                residual: battery.residual(),
                ..Default::default()
            });
            nodes.push(Node {
                battery,
                drain,
                leg,
                neighbors: NeighborTable::new(scenario.neighbors),
                buffer: PacketBuffer::new(scenario.buffer_capacity),
                routes: RouteTable::new(),
                seen: SeenFloods::new(),
                replies: PendingReplyBuffer::new(scenario.routing.buffering_time),
                discoveries: BTreeMap::new(),
                next_flood_id: 0,
                busy: false,
            });
        }

        for (i, flow) in flows.iter().enumerate() {
            if flow.emission_time(0) < flow.end_time {
                queue
                    .schedule(flow.emission_time(0), Event::TrafficTick { flow: i, k: 0 })
                    .expect("flow start is nonnegative");
            }
        }
        queue.schedule(0.0, Event::TimerExpiry(Timer::StabilitySnapshot)).expect("t=0");
        queue.schedule(scenario.drain_sample_interval, Event::DrainRateSample).expect("future");
        queue.schedule(0.0, Event::MetricSample).expect("t=0");
        if mobile && scenario.mobility_tick > 0.0 {
            queue.schedule(scenario.mobility_tick, Event::MobilityUpdate(None)).expect("future");
        }

        let positions = setups.iter().map(|s| s.position).collect();
        Ok(Simulation {
            scenario: scenario.clone(),
            protocol,
            policy,
            discovery: DiscoveryConfig {
                bandwidth: scenario.energy.bandwidth,
                relay_factor: scenario.routing.relay_factor,
                lifetime_filter: scenario.routing.lifetime_filter.applies_to(protocol),
            },
            medium: Medium::new(scenario.radio, scenario.energy),
            queue,
            nodes,
            positions,
            flows,
            ledger,
            mobility_rng,
            channel_rng: streams.substream(RandomStream::CHANNEL),
            next_packet_id: 0,
            data_in_air: 0,
            data_held: 0,
            deaths: Vec::new(),
            exact_positions: !mobile || scenario.mobility_tick <= 0.0,
            trace: None,
            discovery_log: None,
        })
    }

    /// Records one [`TraceRecord`] per dispatched event from now on.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    /// Keeps a [`DiscoveryRecord`] for every flood from now on.
    pub fn record_discoveries(&mut self) {
        self.discovery_log.get_or_insert_with(BTreeMap::new);
    }

    pub fn trace(&self) -> &[TraceRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn discoveries(&self) -> impl Iterator<Item = &DiscoveryRecord> {
        self.discovery_log.iter().flat_map(|log| log.values())
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn protocol(&self) -> ProtocolKind {
        self.protocol
    }

    pub fn flows(&self) -> &[CbrFlow] {
        &self.flows
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn battery(&self, node: NodeId) -> &Battery {
        &self.nodes[node].battery
    }

    pub fn route(&self, node: NodeId, destination: NodeId) -> Option<&RouteEntry> {
        self.nodes[node].routes.active(destination)
    }

    pub fn remaining_lifetime(&self, node: NodeId) -> SimTime {
        let n = &self.nodes[node];
        remaining_lifetime(&n.battery, &n.drain)
    }

    pub fn position(&self, node: NodeId, t: SimTime) -> Point {
        self.nodes[node].leg.position_at(t)
    }

    /// Replaces a node's current movement. The node stays at the end of
    /// `leg` once it gets there; no further waypoints are drawn for it.
    pub fn set_leg(&mut self, node: NodeId, leg: WaypointState) {
        self.nodes[node].leg = leg;
    }

    /// Dispatches every event with time `<= end`, leaves the clock at `end`
    /// and returns a snapshot of the ledger.
    pub fn run_until(&mut self, end: SimTime) -> MetricsLedger {
        while let Some(ev) = self.queue.pop_until(end) {
            self.dispatch(ev.time, ev.payload);
        }
        self.queue.advance_to(end);
        self.ledger()
    }

    pub fn ledger(&self) -> MetricsLedger {
        let mut ledger = self.ledger.clone();
        for (report, node) in ledger.node_energy.iter_mut().zip(&self.nodes) {
            report.residual = node.battery.residual();
        }
        let buffered: u64 = self.nodes.iter().map(|n| n.buffer.occupancy() as u64).sum();
        ledger.data_in_flight = buffered + self.data_in_air + self.data_held;
        ledger
    }

    fn at(&mut self, time: SimTime, event: Event) -> EventHandle {
        self.queue
            .schedule(time, event)
            .unwrap_or_else(|e| panic!("scheduling bug: {e}"))
    }

    fn after(&mut self, delay: SimTime, event: Event) -> EventHandle {
        self.at(self.queue.now() + delay, event)
    }

    /// Appends to the trace line of the event being dispatched.
    fn note(&mut self, detail: impl FnOnce() -> String) {
        if let Some(record) = self.trace.as_mut().and_then(|t| t.last_mut()) {
            record.detail.push_str("; ");
            record.detail.push_str(&detail());
        }
    }

    fn headline(&self, event: &Event) -> (Option<NodeId>, &'static str, String) {
        match event {
            Event::PacketDelivery { to, from, packet } => (Some(*to), "PacketDelivery", describe(packet, *from)),
            Event::TimerExpiry(timer) => {
                let (node, what) = match timer {
                    Timer::ReplyWindow { node, key } => {
                        (Some(*node), format!("reply window {}:{}", key.0, key.1))
                    }
                    Timer::DiscoveryTimeout { node, destination, flood_id } => {
                        (Some(*node), format!("discovery timeout {node}:{flood_id} for {destination}"))
                    }
                    Timer::TxDone(node) => (Some(*node), "tx done".to_string()),
                    Timer::Retransmit { node, packet } => (Some(*node), format!("retransmit data#{}", packet.id)),
                    Timer::StabilitySnapshot => (None, "stability snapshot".to_string()),
                };
                (node, "TimerExpiry", what)
            }
            Event::MobilityUpdate(Some(node)) => (Some(*node), "MobilityUpdate", "leg end".to_string()),
            Event::MobilityUpdate(None) => (None, "MobilityUpdate", "position refresh".to_string()),
            Event::BeaconTick(node) => (Some(*node), "BeaconTick", "beacon".to_string()),
            Event::TrafficTick { flow, k } => {
                (Some(self.flows[*flow].source), "TrafficTick", format!("flow {flow} packet {k}"))
            }
            Event::DrainRateSample => (None, "DrainRateSample", "drain-rate sample".to_string()),
            Event::MetricSample => (None, "MetricSample", "metric sample".to_string()),
        }
    }

    fn dispatch(&mut self, now: SimTime, event: Event) {
        if self.trace.is_some() {
            let (node, kind, detail) = self.headline(&event);
            if let Some(trace) = self.trace.as_mut() {
                trace.push(TraceRecord { time: now, node, kind, detail });
            }
        }
        match event {
            Event::PacketDelivery { to, from, packet } => self.deliver(to, from, packet),
            Event::TimerExpiry(timer) => self.on_timer(timer),
            Event::MobilityUpdate(Some(node)) => {
                let leg = self.nodes[node].leg;
                let next = next_waypoint(
                    leg.destination,
                    now,
                    &self.scenario.terrain,
                    &self.scenario.waypoint,
                    &mut self.mobility_rng,
                );
                self.nodes[node].leg = next;
                if next.leg_end().is_finite() {
                    self.at(next.leg_end(), Event::MobilityUpdate(Some(node)));
                }
                self.note(|| {
                    format!(
                        "next waypoint ({:.1},{:.1}) speed {:.3}",
                        next.destination.x, next.destination.y, next.speed
                    )
                });
            }
            Event::MobilityUpdate(None) => {
                self.refresh_positions(now);
                self.after(self.scenario.mobility_tick, Event::MobilityUpdate(None));
            }
            Event::BeaconTick(node) => self.on_beacon_tick(node),
            Event::TrafficTick { flow, k } => self.on_traffic(flow, k),
            Event::DrainRateSample => {
                for node in self.nodes.iter_mut().filter(|n| n.alive()) {
                    node.drain.update(&node.battery, now);
                }
                self.after(self.scenario.drain_sample_interval, Event::DrainRateSample);
            }
            Event::MetricSample => {
                let sample = MetricSample {
                    time: now,
                    used_energy: self.nodes.iter().map(|n| n.battery.used()).sum(),
                    control_packets: self.ledger.control_packets(),
                };
                self.ledger.samples.push(sample);
                self.after(self.scenario.metric_interval, Event::MetricSample);
            }
        }
    }

    fn refresh_positions(&mut self, now: SimTime) {
        for (p, node) in self.positions.iter_mut().zip(&self.nodes) {
            *p = node.leg.position_at(now);
        }
    }

    /// Positions the radio uses: the last periodic snapshot, or exact
    /// positions when no tick is configured.
    fn sync_positions(&mut self) {
        if self.exact_positions {
            self.refresh_positions(self.queue.now());
        }
    }

    fn air(&mut self) -> (Air<'_>, &Medium, &mut ChaCha8Rng) {
        let now = self.queue.now();
        (
            Air {
                nodes: &mut self.nodes,
                positions: &self.positions,
                ledger: &mut self.ledger,
                deaths: &mut self.deaths,
                now,
            },
            &self.medium,
            &mut self.channel_rng,
        )
    }

    fn broadcast(&mut self, sender: NodeId, packet: Packet, size: usize) {
        self.sync_positions();
        let (mut air, medium, rng) = self.air();
        let Some(outcome) = medium.broadcast(&mut air, sender, size, rng) else {
            return;
        };
        match packet {
            Packet::Beacon => self.ledger.beacons_sent += 1,
            Packet::Rreq(_) => self.ledger.rreq_sent += 1,
            _ => {}
        }
        let delay = self.scenario.radio.propagation_delay;
        for to in outcome.receivers {
            self.after(delay, Event::PacketDelivery { to, from: sender, packet: packet.clone() });
        }
        self.reap();
    }

    fn unicast(&mut self, sender: NodeId, dest: NodeId, packet: Packet, size: usize) -> UnicastOutcome {
        self.sync_positions();
        let (mut air, medium, rng) = self.air();
        let outcome = medium.unicast(&mut air, sender, dest, size, rng);
        if outcome != UnicastOutcome::SenderDead {
            match &packet {
                Packet::Rrep(_) => self.ledger.rrep_sent += 1,
                Packet::Rerr(_) => self.ledger.rerr_sent += 1,
                Packet::Data(_) => self.ledger.data_transmissions += 1,
                _ => {}
            }
        }
        if outcome.is_delivered() {
            if matches!(packet, Packet::Data(_)) {
                self.data_in_air += 1;
            }
            let delay = self.scenario.radio.propagation_delay;
            self.after(delay, Event::PacketDelivery { to: dest, from: sender, packet });
        }
        self.reap();
        outcome
    }

    /// Handles nodes whose batteries ran dry during the last transmission.
    fn reap(&mut self) {
        while let Some(id) = self.deaths.pop() {
            let lost = self.nodes[id].buffer.drain_matching(|_| true).len() as u64;
            self.ledger.data_dropped_no_route += lost;
            let node = &mut self.nodes[id];
            node.discoveries.clear();
            node.busy = false;
            self.note(|| format!("node {id} died, dropped {lost} buffered packets"));
        }
    }

    fn annotation(&self, id: NodeId) -> HopAnnotation {
        let node = &self.nodes[id];
        let now = self.queue.now();
        let size = self.scenario.traffic.packet_size;
        let energy = &self.scenario.energy;
        HopAnnotation {
            node: id,
            residual: node.battery.residual(),
            initial: node.battery.initial(),
            tx_energy: energy.tx_energy(size),
            rx_energy: energy.rx_energy(size),
            overhear_energy: energy.overhear_energy(size),
            neighbors: node.neighbors.count(now) as u32,
            unstable: !node.neighbors.is_stable(now),
            buffered: node.buffer.occupancy() as u32,
        }
    }

    fn deliver(&mut self, to: NodeId, from: NodeId, packet: Packet) {
        if let Packet::Data(_) = packet {
            self.data_in_air -= 1;
        }
        if !self.nodes[to].alive() {
            if let Packet::Data(_) = packet {
                self.ledger.data_dropped_no_route += 1;
            }
            return;
        }
        match packet {
            Packet::Beacon => {
                let now = self.queue.now();
                self.nodes[to].neighbors.heard(from, now);
            }
            Packet::Rreq(rreq) => self.on_rreq(to, rreq),
            Packet::Rrep(rrep) => self.on_rrep(to, rrep),
            Packet::Rerr(rerr) => self.on_rerr(to, from, rerr),
            Packet::Data(pkt) => {
                if pkt.destination == to {
                    self.ledger.data_delivered += 1;
                } else {
                    self.enqueue_data(to, pkt);
                }
            }
        }
    }

    fn on_timer(&mut self, timer: Timer) {
        match timer {
            Timer::StabilitySnapshot => {
                let now = self.queue.now();
                for node in self.nodes.iter_mut().filter(|n| n.alive()) {
                    node.neighbors.take_snapshot(now);
                }
                self.after(self.scenario.neighbors.stability_window, Event::TimerExpiry(Timer::StabilitySnapshot));
            }
            Timer::TxDone(node) => {
                self.nodes[node].busy = false;
                self.service(node);
            }
            Timer::Retransmit { node, packet } => {
                self.data_held -= 1;
                self.enqueue_data(node, packet);
            }
            Timer::ReplyWindow { node, key } => self.on_reply_window(node, key),
            Timer::DiscoveryTimeout { node, destination, flood_id } => {
                self.on_discovery_timeout(node, destination, flood_id)
            }
        }
    }

    fn on_beacon_tick(&mut self, id: NodeId) {
        if !self.nodes[id].alive() {
            return;
        }
        let now = self.queue.now();
        let gone = self.nodes[id].neighbors.purge(now);
        for neighbor in gone {
            self.link_broken(id, neighbor);
        }
        self.broadcast(id, Packet::Beacon, self.scenario.neighbors.beacon_size);
        self.after(self.scenario.neighbors.beacon_interval, Event::BeaconTick(id));
    }

    fn on_traffic(&mut self, index: usize, k: u64) {
        let flow = self.flows[index];
        let packet = DataPacket {
            id: self.next_packet_id,
            source: flow.source,
            destination: flow.destination,
            size: flow.packet_size,
            created_at: self.queue.now(),
            retransmitted: false,
        };
        self.next_packet_id += 1;
        self.ledger.data_sent += 1;
        self.note(|| format!("data#{} to {}", packet.id, packet.destination));
        if flow.source == flow.destination {
            self.ledger.data_delivered += 1;
        } else {
            self.enqueue_data(flow.source, packet);
        }
        let next = flow.emission_time(k + 1);
        if next < flow.end_time {
            self.at(next, Event::TrafficTick { flow: index, k: k + 1 });
        }
    }

    fn enqueue_data(&mut self, id: NodeId, packet: DataPacket) {
        if !self.nodes[id].alive() {
            self.ledger.data_dropped_no_route += 1;
            return;
        }
        if self.nodes[id].buffer.enqueue(packet).is_err() {
            self.ledger.data_dropped_buffer += 1;
            return;
        }
        self.service(id);
    }

    /// Sends the oldest buffered packet that has a route. Packets without one
    /// stay buffered while this node discovers a route for them.
    fn service(&mut self, id: NodeId) {
        if !self.nodes[id].alive() || self.nodes[id].busy {
            return;
        }
        let node = &mut self.nodes[id];
        let routes = &node.routes;
        if let Some(packet) = node.buffer.take_first(|p| routes.active(p.destination).is_some()) {
            let next_hop = routes.active(packet.destination).expect("checked").next_hop;
            self.transmit_data(id, next_hop, packet);
            return;
        }
        let waiting: Vec<NodeId> = {
            let mut dests: Vec<NodeId> = node.buffer.iter().map(|p| p.destination).collect();
            dests.sort_unstable();
            dests.dedup();
            dests
        };
        for dest in waiting {
            self.originate_discovery(id, dest);
        }
    }

    fn transmit_data(&mut self, id: NodeId, next_hop: NodeId, mut packet: DataPacket) {
        let size = packet.size;
        let airtime = self.scenario.energy.packet_airtime(size);
        self.nodes[id].busy = true;
        self.after(airtime, Event::TimerExpiry(Timer::TxDone(id)));
        match self.unicast(id, next_hop, Packet::Data(packet.clone()), size) {
            UnicastOutcome::Delivered { .. } => {}
            UnicastOutcome::SenderDead => self.ledger.data_dropped_no_route += 1,
            UnicastOutcome::Failed { reason, .. } => {
                self.note(|| format!("link failure data#{} to {next_hop}: {reason:?}", packet.id));
                self.link_broken(id, next_hop);
                if packet.retransmitted || !self.nodes[id].alive() {
                    self.ledger.data_dropped_no_route += 1;
                } else {
                    packet.retransmitted = true;
                    self.ledger.data_retransmissions += 1;
                    self.data_held += 1;
                    let timeout = self.scenario.retransmit_timeout;
                    self.after(timeout, Event::TimerExpiry(Timer::Retransmit { node: id, packet }));
                }
            }
        }
    }

    /// Invalidates every route through `neighbor` and tells the upstream
    /// nodes.
    fn link_broken(&mut self, id: NodeId, neighbor: NodeId) {
        let broken = self.nodes[id].routes.invalidate_via(neighbor);
        for entry in broken {
            self.note(|| format!("route break at {id} to {} via {neighbor}", entry.destination));
            for &p in &entry.precursors {
                let rerr = RouteError { unreachable: entry.destination };
                self.unicast(id, p, Packet::Rerr(rerr), self.scenario.routing.rerr_size);
            }
        }
    }

    fn on_rerr(&mut self, id: NodeId, from: NodeId, rerr: RouteError) {
        let follows = self.nodes[id]
            .routes
            .active(rerr.unreachable)
            .is_some_and(|e| e.next_hop == from);
        if !follows {
            return;
        }
        let entry = self.nodes[id].routes.invalidate(rerr.unreachable).expect("active");
        for &p in &entry.precursors {
            self.unicast(id, p, Packet::Rerr(rerr), self.scenario.routing.rerr_size);
        }
        self.service(id);
    }

    fn originate_discovery(&mut self, id: NodeId, destination: NodeId) {
        if self.nodes[id].discoveries.contains_key(&destination) {
            return;
        }
        self.start_flood(id, destination, 1);
    }

    fn start_flood(&mut self, id: NodeId, destination: NodeId, attempt: u32) {
        let req_size: usize = self.nodes[id]
            .buffer
            .iter()
            .filter(|p| p.destination == destination)
            .map(|p| p.size)
            .sum();
        let node = &mut self.nodes[id];
        let flood_id = node.next_flood_id;
        node.next_flood_id += 1;
        node.seen.insert((id, flood_id));
        let rreq = RouteRequest::originate(destination, flood_id, req_size, self.annotation(id));
        let timeout = self.scenario.routing.discovery_timeout;
        let timer = self.after(
            timeout,
            Event::TimerExpiry(Timer::DiscoveryTimeout { node: id, destination, flood_id }),
        );
        self.nodes[id]
            .discoveries
            .insert(destination, Discovery { flood_id, attempts: attempt, timer });
        self.ledger.discoveries_initiated += 1;
        if let Some(log) = self.discovery_log.as_mut() {
            log.insert(
                (id, flood_id),
                DiscoveryRecord {
                    source: id,
                    destination,
                    flood_id,
                    candidates: Vec::new(),
                    replied: None,
                    installed: None,
                    lifetime_drops: Vec::new(),
                },
            );
        }
        self.note(|| {
            format!("discovery {id}:{flood_id} for {destination}, attempt {attempt}, reqSize {req_size}")
        });
        self.broadcast(id, Packet::Rreq(rreq), self.scenario.routing.rreq_size);
    }

    fn on_discovery_timeout(&mut self, id: NodeId, destination: NodeId, flood_id: u32) {
        let Some(d) = self.nodes[id].discoveries.get(&destination) else {
            return;
        };
        if d.flood_id != flood_id {
            return;
        }
        let attempts = d.attempts;
        self.nodes[id].discoveries.remove(&destination);
        if !self.nodes[id].alive() || self.nodes[id].routes.active(destination).is_some() {
            return;
        }
        if attempts <= self.scenario.routing.discovery_retries {
            self.start_flood(id, destination, attempts + 1);
        } else {
            let dropped = self.nodes[id]
                .buffer
                .drain_matching(|p| p.destination == destination)
                .len() as u64;
            self.ledger.data_dropped_no_route += dropped;
            self.note(|| format!("discovery for {destination} failed, dropped {dropped}"));
        }
    }

    fn on_rreq(&mut self, id: NodeId, rreq: RouteRequest) {
        let view = ForwarderView {
            annotation: self.annotation(id),
            remaining_lifetime: self.remaining_lifetime(id),
        };
        let key = rreq.key();
        let disposition = process_rreq(&view, &mut self.nodes[id].seen, rreq, &self.discovery);
        match disposition {
            RreqDisposition::Duplicate => {}
            RreqDisposition::DroppedByLifetime => {
                self.ledger.rreq_dropped_by_rlt += 1;
                if let Some(record) = self.discovery_log.as_mut().and_then(|l| l.get_mut(&key)) {
                    record.lifetime_drops.push(id);
                }
            }
            RreqDisposition::Forward(rreq) => {
                self.broadcast(id, Packet::Rreq(rreq), self.scenario.routing.rreq_size);
            }
            RreqDisposition::AtDestination(rreq) => self.buffer_at_destination(id, rreq),
        }
    }

    fn buffer_at_destination(&mut self, id: NodeId, rreq: RouteRequest) {
        if self.scenario.routing.reject_direct_routes && rreq.hop_count == 1 {
            return;
        }
        let score = score_request(&self.policy, &rreq).expect("arrived requests have hop_count >= 1");
        let key = rreq.key();
        if let Some(record) = self.discovery_log.as_mut().and_then(|l| l.get_mut(&key)) {
            record.candidates.push((rreq.route(), score));
        }
        if self.nodes[id].replies.offer(rreq, score) == Offer::Started {
            let window = self.scenario.routing.buffering_time;
            let timer = self.after(window, Event::TimerExpiry(Timer::ReplyWindow { node: id, key }));
            self.nodes[id].replies.arm(key, timer);
        }
    }

    fn on_reply_window(&mut self, id: NodeId, key: (NodeId, u32)) {
        let Some(held) = self.nodes[id].replies.expire(key) else {
            return;
        };
        if !self.nodes[id].alive() {
            return;
        }
        let mut path = held.best.reverse_path();
        path.push(id);
        if let Some(record) = self.discovery_log.as_mut().and_then(|l| l.get_mut(&key)) {
            record.replied = Some(path.clone());
        }
        self.note(|| format!("reply along {:?} cost {:.6}", path, held.score.value));
        let rrep = RouteReply { source: key.0, destination: id, flood_id: key.1, path };
        self.forward_rrep(id, rrep);
    }

    fn forward_rrep(&mut self, id: NodeId, rrep: RouteReply) {
        let idx = rrep.index_of(id).expect("reply travels its own path");
        let prev = rrep.path[idx - 1];
        let outcome = self.unicast(id, prev, Packet::Rrep(rrep), self.scenario.routing.rrep_size);
        if let UnicastOutcome::Failed { .. } = outcome {
            self.link_broken(id, prev);
        }
    }

    fn on_rrep(&mut self, id: NodeId, rrep: RouteReply) {
        let Some(idx) = rrep.index_of(id) else {
            return;
        };
        let now = self.queue.now();
        let next_hop = rrep.path[idx + 1];
        let hops = (rrep.path.len() - 1 - idx) as u32;
        let precursor = idx.checked_sub(1).map(|i| rrep.path[i]);
        self.nodes[id].routes.install(rrep.destination, next_hop, hops, now, precursor);
        if idx > 0 {
            self.forward_rrep(id, rrep);
            return;
        }
        self.ledger.routes_installed += 1;
        if let Some(d) = self.nodes[id].discoveries.remove(&rrep.destination) {
            self.queue.cancel(d.timer);
        }
        let key = (rrep.source, rrep.flood_id);
        if let Some(record) = self.discovery_log.as_mut().and_then(|l| l.get_mut(&key)) {
            record.installed = Some(rrep.path.clone());
        }
        self.note(|| format!("route installed {:?}", rrep.path));
        self.service(id);
    }
}

fn describe(packet: &Packet, from: NodeId) -> String {
    match packet {
        Packet::Beacon => format!("beacon from {from}"),
        Packet::Rreq(r) => format!(
            "rreq {}:{} from {from} hops {} acc {}/{}/{}",
            r.source, r.flood_id, r.hop_count, r.acc.unstable_nodes, r.acc.sum_neighbors, r.acc.sum_buffered
        ),
        Packet::Rrep(r) => format!("rrep {}:{} from {from} path {:?}", r.source, r.flood_id, r.path),
        Packet::Rerr(r) => format!("rerr from {from} unreachable {}", r.unreachable),
        Packet::Data(d) => format!("data#{} from {from} {}->{}", d.id, d.source, d.destination),
    }
}
