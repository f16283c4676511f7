//! On-demand route discovery with accumulating route requests, the
//! remaining-lifetime forwarding filter, destination-side reply buffering and
//! the library of route-scoring policies.

mod cost;
mod forward;
pub mod offline;
mod pending;
mod request;
mod table;

pub use cost::{
    route_cost_proposed, score_request, score_route, select_route, CostError, CostPolicy,
    ProtocolKind, RouteScore, Weights,
};
pub use forward::{process_rreq, DiscoveryConfig, ForwarderView, RreqDisposition, SeenFloods};
pub use pending::{Offer, PendingReply, PendingReplyBuffer};
pub use request::{
    Accumulators, AnnotatedRoute, HopAnnotation, RouteError, RouteReply, RouteRequest,
};
pub use table::{RouteEntry, RouteTable};
