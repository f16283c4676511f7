use crate::NodeId;

/// What a transmitting node on a route reports about itself. The source and
/// every intermediate forwarder contribute one annotation; the destination
/// contributes none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopAnnotation {
    pub node: NodeId,
    /// Residual battery energy, joules.
    pub residual: f64,
    /// Initial battery energy, joules.
    pub initial: f64,
    /// Energy this node spends transmitting one data packet to the next node
    /// on the route.
    pub tx_energy: f64,
    /// Energy to receive one data packet.
    pub rx_energy: f64,
    /// Energy to overhear one data packet.
    pub overhear_energy: f64,
    pub neighbors: u32,
    pub unstable: bool,
    pub buffered: u32,
}

impl HopAnnotation {
    pub fn used(&self) -> f64 {
        self.initial - self.residual
    }
}

/// The three path accumulators carried by a route request.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Accumulators {
    pub unstable_nodes: u32,
    pub sum_neighbors: u32,
    pub sum_buffered: u32,
}

impl Accumulators {
    pub fn add(&mut self, hop: &HopAnnotation) {
        self.unstable_nodes += u32::from(hop.unstable);
        self.sum_neighbors += hop.neighbors;
        self.sum_buffered += hop.buffered;
    }
}

impl std::ops::Add for Accumulators {
    type Output = Accumulators;

    fn add(self, rhs: Self) -> Self {
        Accumulators {
            unstable_nodes: self.unstable_nodes + rhs.unstable_nodes,
            sum_neighbors: self.sum_neighbors + rhs.sum_neighbors,
            sum_buffered: self.sum_buffered + rhs.sum_buffered,
        }
    }
}

/// A candidate route as seen by whoever scores it: the annotated transmitting
/// nodes in order from the source, and the destination.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedRoute {
    pub hops: Vec<HopAnnotation>,
    pub destination: NodeId,
}

impl AnnotatedRoute {
    /// Links traversed from source to destination.
    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }

    /// Nodes strictly between source and destination.
    pub fn intermediates(&self) -> &[HopAnnotation] {
        self.hops.get(1..).unwrap_or(&[])
    }

    pub fn accumulators(&self) -> Accumulators {
        let mut acc = Accumulators::default();
        for hop in self.intermediates() {
            acc.add(hop);
        }
        acc
    }

    /// Full node sequence including the destination.
    pub fn path(&self) -> Vec<NodeId> {
        self.hops
            .iter()
            .map(|h| h.node)
            .chain(std::iter::once(self.destination))
            .collect()
    }
}

/// Flooded route request.
///
/// `hop_count` is bumped by every receiver on arrival, so at the destination
/// it equals the number of links traversed and `hop_count - 1` is the number
/// of intermediate forwarders. Only intermediate forwarders add to the
/// accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteRequest {
    pub source: NodeId,
    pub destination: NodeId,
    pub flood_id: u32,
    pub hop_count: u32,
    /// Bytes of application data the source wants to send.
    pub req_size: usize,
    pub acc: Accumulators,
    /// Lowest residual energy seen on the route so far.
    pub min_residual: f64,
    annotations: Vec<HopAnnotation>,
}

impl RouteRequest {
    pub fn originate(
        destination: NodeId,
        flood_id: u32,
        req_size: usize,
        source: HopAnnotation,
    ) -> Self {
        RouteRequest {
            source: source.node,
            destination,
            flood_id,
            hop_count: 0,
            req_size,
            acc: Accumulators::default(),
            min_residual: source.residual,
            annotations: vec![source],
        }
    }

    /// Called once by each receiver before anything else.
    pub fn arrive(&mut self) {
        self.hop_count += 1;
    }

    /// An intermediate forwarder adds itself before rebroadcasting.
    pub fn absorb(&mut self, hop: HopAnnotation) {
        self.acc.add(&hop);
        self.min_residual = self.min_residual.min(hop.residual);
        self.annotations.push(hop);
    }

    /// Source first, most recent forwarder last.
    pub fn reverse_path(&self) -> Vec<NodeId> {
        self.annotations.iter().map(|a| a.node).collect()
    }

    pub fn annotations(&self) -> &[HopAnnotation] {
        &self.annotations
    }

    pub fn last_hop(&self) -> NodeId {
        self.annotations.last().map(|a| a.node).unwrap_or(self.source)
    }

    pub fn key(&self) -> (NodeId, u32) {
        (self.source, self.flood_id)
    }

    pub fn route(&self) -> AnnotatedRoute {
        AnnotatedRoute {
            hops: self.annotations.clone(),
            destination: self.destination,
        }
    }
}

/// Reply travelling back along the selected reverse path.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteReply {
    pub source: NodeId,
    pub destination: NodeId,
    pub flood_id: u32,
    /// Full path, source first and destination last.
    pub path: Vec<NodeId>,
}

impl RouteReply {
    /// Position of `node` on the path.
    pub fn index_of(&self, node: NodeId) -> Option<usize> {
        self.path.iter().position(|&n| n == node)
    }
}

/// Notification that `unreachable` can no longer be reached through the
/// sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteError {
    pub unreachable: NodeId,
}
