//! Batch execution over sweep values, seeds and protocols, with CSV output.

use std::fs::File;
use std::io::{self, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::metrics::{aggregate, Aggregate, MetricsLedger};
use crate::routing::ProtocolKind;
use crate::scenario::Scenario;
use crate::sim::{SimError, Simulation};

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "ECOROUTE_THREADS";

pub const CSV_HEADER: [&str; 10] = [
    "sweep_param",
    "sweep_value",
    "seed",
    "protocol",
    "control_packets",
    "used_energy_J",
    "data_sent",
    "data_delivered",
    "rreq_dropped_by_rlt",
    "discoveries",
];

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("run (value {value:?}, seed {seed}, {protocol}) failed: {source}")]
    Setup {
        value: Option<String>,
        seed: u64,
        protocol: ProtocolKind,
        source: SimError,
    },
    #[error("run (value {value:?}, seed {seed}, {protocol}) panicked: {message}")]
    Panicked {
        value: Option<String>,
        seed: u64,
        protocol: ProtocolKind,
        message: String,
    },
    #[error("invalid {THREADS_VAR}: {0}")]
    Threads(String),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One run of the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub sweep_value: Option<String>,
    pub seed: u64,
    pub protocol: ProtocolKind,
    pub ledger: MetricsLedger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub sweep_param: Option<String>,
    /// Rows in (sweep value, seed, protocol) order.
    pub rows: Vec<RunRow>,
}

impl BatchResult {
    /// Mean and spread per (sweep value, protocol), in first-appearance order.
    pub fn aggregates(&self) -> Vec<(Option<String>, ProtocolKind, Aggregate)> {
        let mut groups: Vec<(Option<String>, ProtocolKind, Vec<MetricsLedger>)> = Vec::new();
        for row in &self.rows {
            match groups
                .iter_mut()
                .find(|(v, p, _)| *v == row.sweep_value && *p == row.protocol)
            {
                Some((_, _, ledgers)) => ledgers.push(row.ledger.clone()),
                None => groups.push((row.sweep_value.clone(), row.protocol, vec![row.ledger.clone()])),
            }
        }
        groups
            .into_iter()
            .map(|(v, p, ledgers)| (v, p, aggregate(&ledgers).expect("groups are nonempty")))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BatchError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let param = self.sweep_param.as_deref().unwrap_or("");
        for row in &self.rows {
            let l = &row.ledger;
            w.write_record([
                param.to_string(),
                row.sweep_value.clone().unwrap_or_default(),
                row.seed.to_string(),
                row.protocol.name().to_string(),
                l.control_packets().to_string(),
                l.used_energy().to_string(),
                l.data_sent.to_string(),
                l.data_delivered.to_string(),
                l.rreq_dropped_by_rlt.to_string(),
                l.discoveries_initiated.to_string(),
            ])?;
        }
        for (value, protocol, agg) in self.aggregates() {
            let mean = |name: &str| agg.get(name).expect("known metric").mean.to_string();
            w.write_record([
                param.to_string(),
                value.unwrap_or_default(),
                "mean".to_string(),
                protocol.name().to_string(),
                mean("control_packets"),
                mean("used_energy_J"),
                mean("data_sent"),
                mean("data_delivered"),
                mean("rreq_dropped_by_rlt"),
                mean("discoveries"),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Every (sweep value, scenario, seed, protocol) combination in output order.
pub fn plan(scenario: &Scenario) -> Vec<(Option<String>, Scenario, u64, ProtocolKind)> {
    let mut runs = Vec::new();
    for (value, s) in scenario.expand_sweep() {
        for &seed in &s.seeds {
            for &protocol in &s.routing.protocols {
                runs.push((value.clone(), s.clone(), seed, protocol));
            }
        }
    }
    runs
}

fn thread_cap() -> Result<Option<usize>, BatchError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(BatchError::Threads(format!("'{v}' is not a positive integer"))),
        },
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".to_string()
    }
}

/// Runs the whole batch, in parallel where allowed.
pub fn execute(scenario: &Scenario) -> Result<BatchResult, BatchError> {
    let runs = plan(scenario);
    let one = |(value, s, seed, protocol): &(Option<String>, Scenario, u64, ProtocolKind)| {
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            Simulation::new(s, *protocol, *seed).map(|mut sim| sim.run_until(s.sim_time))
        }));
        match outcome {
            Ok(Ok(ledger)) => Ok(RunRow {
                sweep_value: value.clone(),
                seed: *seed,
                protocol: *protocol,
                ledger,
            }),
            Ok(Err(source)) => Err(BatchError::Setup {
                value: value.clone(),
                seed: *seed,
                protocol: *protocol,
                source,
            }),
            Err(payload) => Err(BatchError::Panicked {
                value: value.clone(),
                seed: *seed,
                protocol: *protocol,
                message: panic_message(payload),
            }),
        }
    };
    let rows = match thread_cap()? {
        Some(1) => runs.iter().map(one).collect::<Result<Vec<_>, _>>()?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| BatchError::Threads(e.to_string()))?
            .install(|| runs.par_iter().map(one).collect::<Result<Vec<_>, _>>())?,
        None => runs.par_iter().map(one).collect::<Result<Vec<_>, _>>()?,
    };
    Ok(BatchResult {
        sweep_param: scenario.sweep.as_ref().map(|s| s.key.clone()),
        rows,
    })
}

/// Runs the batch and writes the CSV to `path`. On any failure no file is
/// left behind.
pub fn run_batch(scenario: &Scenario, path: &Path) -> Result<BatchResult, BatchError> {
    let output_err = |source| BatchError::Output { path: path.display().to_string(), source };
    // Fail on an unwritable destination before spending time on the runs.
    let file = File::create(path).map_err(output_err)?;
    let written = execute(scenario).and_then(|result| {
        result.write_csv(io::BufWriter::new(&file))?;
        file.sync_all().map_err(output_err)?;
        Ok(result)
    });
    if written.is_err() {
        drop(file);
        let _ = std::fs::remove_file(path);
    }
    written
}
