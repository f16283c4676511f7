use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::request::{Accumulators, AnnotatedRoute, RouteRequest};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("route has no hops; a destination cannot score its own request")]
    ZeroHops,
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
}

/// Weights of the unstable-node, neighbor and buffered-packet terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { w1: 0.5, w2: 0.3, w3: 0.2 }
    }
}

/// Average per-intermediate-node liability of a route:
///
/// `w1·unstable/(h−1) + w2·neighbors/(h−1) + w3·buffered/(h−1)`
///
/// where `h` is the hop count. A direct route (`h == 1`) has no intermediate
/// nodes and costs 0.
pub fn route_cost_proposed(
    hop_count: u32,
    acc: &Accumulators,
    weights: &Weights,
) -> Result<f64, CostError> {
    match hop_count {
        0 => Err(CostError::ZeroHops),
        1 => Ok(0.0),
        h => {
            let relays = f64::from(h - 1);
            Ok(weights.w1 * (f64::from(acc.unstable_nodes) / relays)
                + weights.w2 * (f64::from(acc.sum_neighbors) / relays)
                + weights.w3 * (f64::from(acc.sum_buffered) / relays))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolKind {
    Proposed,
    Mtpr,
    Mbcr,
    Mmbcr,
    Cmmbcr,
    Far,
    Mmpr,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 7] = [
        ProtocolKind::Proposed,
        ProtocolKind::Mtpr,
        ProtocolKind::Mbcr,
        ProtocolKind::Mmbcr,
        ProtocolKind::Cmmbcr,
        ProtocolKind::Far,
        ProtocolKind::Mmpr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Proposed => "proposed",
            ProtocolKind::Mtpr => "mtpr",
            ProtocolKind::Mbcr => "mbcr",
            ProtocolKind::Mmbcr => "mmbcr",
            ProtocolKind::Cmmbcr => "cmmbcr",
            ProtocolKind::Far => "far",
            ProtocolKind::Mmpr => "mmpr",
        }
    }

    /// FAR assumes a static network and is only offered as an offline graph
    /// evaluator.
    pub fn is_live(self) -> bool {
        self != ProtocolKind::Far
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| format!("unknown protocol '{s}'"))
    }
}

/// Route-scoring strategy. Lower scores are better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostPolicy {
    Proposed(Weights),
    /// Total transmission energy.
    Mtpr,
    /// Sum of inverse residual energy over intermediate nodes.
    Mbcr,
    /// Largest inverse residual energy over intermediate nodes.
    Mmbcr,
    /// MTPR among routes whose intermediate nodes all hold more than
    /// `gamma · initial`; MMBCR when no route qualifies.
    Cmmbcr { gamma: f64 },
    /// Sum over links of `e^x1 · E^x2 · R^-x3`.
    Far { x1: f64, x2: f64, x3: f64 },
    /// Sum of per-node used-power costs with penalty factor `t`.
    Mmpr { t: f64 },
}

impl CostPolicy {
    pub fn kind(&self) -> ProtocolKind {
        match self {
            CostPolicy::Proposed(_) => ProtocolKind::Proposed,
            CostPolicy::Mtpr => ProtocolKind::Mtpr,
            CostPolicy::Mbcr => ProtocolKind::Mbcr,
            CostPolicy::Mmbcr => ProtocolKind::Mmbcr,
            CostPolicy::Cmmbcr { .. } => ProtocolKind::Cmmbcr,
            CostPolicy::Far { .. } => ProtocolKind::Far,
            CostPolicy::Mmpr { .. } => ProtocolKind::Mmpr,
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let bad = |what: &str| Err(CostError::InvalidParameter(what.to_string()));
        match *self {
            CostPolicy::Proposed(w) if !(w.w1 >= 0.0 && w.w2 >= 0.0 && w.w3 >= 0.0) => {
                bad("weights must be nonnegative")
            }
            CostPolicy::Cmmbcr { gamma } if !(0.0..=1.0).contains(&gamma) => {
                bad("gamma must lie in [0, 1]")
            }
            CostPolicy::Far { x1, x2, x3 } if !(x1 >= 0.0 && x2 >= 0.0 && x3 >= 0.0) => {
                bad("FAR exponents must be nonnegative")
            }
            CostPolicy::Mmpr { t } if !(t >= 0.0 && t.is_finite()) => {
                bad("MMPR factor T must be nonnegative")
            }
            _ => Ok(()),
        }
    }
}

/// A score compared lexicographically by `(tier, value)`. Every policy but
/// CMMBCR uses tier 0; CMMBCR puts routes above its energy threshold in tier
/// 0 and the rest in tier 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteScore {
    pub tier: u8,
    pub value: f64,
}

impl RouteScore {
    pub fn plain(value: f64) -> Self {
        RouteScore { tier: 0, value }
    }

    pub fn cmp_key(&self, other: &Self) -> Ordering {
        self.tier
            .cmp(&other.tier)
            .then(self.value.total_cmp(&other.value))
    }

    /// Strictly better. Ties keep the incumbent.
    pub fn beats(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Less
    }
}

fn mtpr(route: &AnnotatedRoute) -> f64 {
    route.hops.iter().map(|h| h.tx_energy).sum()
}

fn mmbcr(route: &AnnotatedRoute) -> f64 {
    route
        .intermediates()
        .iter()
        .map(|h| 1.0 / h.residual)
        .fold(0.0, f64::max)
}

fn mmpr(route: &AnnotatedRoute, t: f64) -> f64 {
    // Used energy of the node with the least remaining energy on the route.
    let alpha = route
        .hops
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .map(|h| h.used())
        .unwrap_or(0.0);
    route
        .hops
        .iter()
        .map(|h| {
            let overhearers = f64::from(h.neighbors.saturating_sub(1));
            let x = h.used() + h.tx_energy + h.rx_energy + overhearers * h.overhear_energy;
            x + t * (x - alpha).max(0.0)
        })
        .sum()
}

pub fn score_route(policy: &CostPolicy, route: &AnnotatedRoute) -> Result<RouteScore, CostError> {
    if route.hops.is_empty() {
        return Err(CostError::ZeroHops);
    }
    let score = match *policy {
        CostPolicy::Proposed(w) => {
            RouteScore::plain(route_cost_proposed(route.hop_count() as u32, &route.accumulators(), &w)?)
        }
        CostPolicy::Mtpr => RouteScore::plain(mtpr(route)),
        CostPolicy::Mbcr => {
            RouteScore::plain(route.intermediates().iter().map(|h| 1.0 / h.residual).sum())
        }
        CostPolicy::Mmbcr => RouteScore::plain(mmbcr(route)),
        CostPolicy::Cmmbcr { gamma } => {
            let healthy = route
                .intermediates()
                .iter()
                .all(|h| h.residual > gamma * h.initial);
            if healthy {
                RouteScore { tier: 0, value: mtpr(route) }
            } else {
                RouteScore { tier: 1, value: mmbcr(route) }
            }
        }
        CostPolicy::Far { x1, x2, x3 } => RouteScore::plain(
            route
                .hops
                .iter()
                .map(|h| h.tx_energy.powf(x1) * h.initial.powf(x2) * h.residual.powf(-x3))
                .sum(),
        ),
        CostPolicy::Mmpr { t } => RouteScore::plain(mmpr(route, t)),
    };
    Ok(score)
}

/// Scores a received route request. The proposed policy reads the request's
/// own accumulators; the others read its annotations.
pub fn score_request(policy: &CostPolicy, rreq: &RouteRequest) -> Result<RouteScore, CostError> {
    match policy {
        CostPolicy::Proposed(w) => {
            Ok(RouteScore::plain(route_cost_proposed(rreq.hop_count, &rreq.acc, w)?))
        }
        _ => score_route(policy, &rreq.route()),
    }
}

/// Index of the best candidate; the first listed wins ties.
pub fn select_route(
    policy: &CostPolicy,
    candidates: &[AnnotatedRoute],
) -> Result<Option<usize>, CostError> {
    let mut best: Option<(usize, RouteScore)> = None;
    for (i, route) in candidates.iter().enumerate() {
        let score = score_route(policy, route)?;
        if best.is_none_or(|(_, b)| score.beats(&b)) {
            best = Some((i, score));
        }
    }
    Ok(best.map(|(i, _)| i))
}
