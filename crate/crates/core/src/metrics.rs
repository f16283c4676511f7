//! Run-level counters and cross-run aggregation.

use thiserror::Error;

use crate::energy::DrawLedger;
use crate::engine::SimTime;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeEnergy {
    pub initial: f64,
    pub residual: f64,
    /// Draws as logged by the simulator at each charge.
    pub drawn: DrawLedger,
    /// Time the battery ran dry, if it did.
    pub died_at: Option<SimTime>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricSample {
    pub time: SimTime,
    pub used_energy: f64,
    pub control_packets: u64,
}

/// Counters for one run. Control packets count transmissions, not
/// receptions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLedger {
    pub rreq_sent: u64,
    pub rrep_sent: u64,
    pub rerr_sent: u64,
    pub beacons_sent: u64,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_dropped_buffer: u64,
    pub data_dropped_no_route: u64,
    pub data_in_flight: u64,
    pub data_retransmissions: u64,
    pub data_transmissions: u64,
    pub rreq_dropped_by_rlt: u64,
    pub discoveries_initiated: u64,
    pub routes_installed: u64,
    pub node_energy: Vec<NodeEnergy>,
    pub samples: Vec<MetricSample>,
}

impl MetricsLedger {
    pub fn control_packets(&self) -> u64 {
        self.rreq_sent + self.rrep_sent + self.rerr_sent + self.beacons_sent
    }

    /// Sum over nodes of `initial - residual`.
    pub fn used_energy(&self) -> f64 {
        self.node_energy.iter().map(|n| n.initial - n.residual).sum()
    }

    /// Sum of every individually logged draw.
    pub fn logged_draws(&self) -> f64 {
        self.node_energy.iter().map(|n| n.drawn.total()).sum()
    }

    pub fn dead_nodes(&self) -> usize {
        self.node_energy.iter().filter(|n| n.died_at.is_some()).count()
    }

    /// Named scalar metrics, in a fixed order.
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("control_packets", self.control_packets() as f64),
            ("used_energy_J", self.used_energy()),
            ("data_sent", self.data_sent as f64),
            ("data_delivered", self.data_delivered as f64),
            ("data_dropped_buffer", self.data_dropped_buffer as f64),
            ("data_dropped_no_route", self.data_dropped_no_route as f64),
            ("data_retransmissions", self.data_retransmissions as f64),
            ("rreq_dropped_by_rlt", self.rreq_dropped_by_rlt as f64),
            ("discoveries", self.discoveries_initiated as f64),
            ("rreq_sent", self.rreq_sent as f64),
            ("rrep_sent", self.rrep_sent as f64),
            ("rerr_sent", self.rerr_sent as f64),
            ("beacons_sent", self.beacons_sent as f64),
        ]
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AggregateError {
    #[error("cannot aggregate an empty set of runs")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub metrics: Vec<(&'static str, Stat)>,
}

impl Aggregate {
    pub fn get(&self, name: &str) -> Option<Stat> {
        self.metrics.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
    }
}

pub fn aggregate(ledgers: &[MetricsLedger]) -> Result<Aggregate, AggregateError> {
    let first = ledgers.first().ok_or(AggregateError::Empty)?;
    let columns: Vec<Vec<f64>> = ledgers.iter().map(MetricsLedger::scalars)
        .map(|s| s.into_iter().map(|(_, v)| v).collect())
        .collect();
    let n = ledgers.len() as f64;
    let metrics = first
        .scalars()
        .iter()
        .enumerate()
        .map(|(i, (name, _))| {
            let mean = columns.iter().map(|c| c[i]).sum::<f64>() / n;
            let std_dev = if ledgers.len() > 1 {
                (columns.iter().map(|c| (c[i] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            (*name, Stat { mean, std_dev })
        })
        .collect();
    Ok(Aggregate { runs: ledgers.len(), metrics })
}
