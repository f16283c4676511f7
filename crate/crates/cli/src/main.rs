use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecoroute::batch::{self, BatchResult};
use ecoroute::metrics::MetricsLedger;
use ecoroute::{ProtocolKind, Scenario, Simulation};

#[derive(Parser)]
#[command(name = "ecoroute", version, about = "Energy-aware MANET routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep value x seed x protocol and write a CSV.
    Run {
        #[command(flatten)]
        common: Common,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Also write the event trace of the first run next to the CSV.
        #[arg(long)]
        trace: bool,
    },
    /// Check a scenario file and print the resolved settings.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Run a single simulation and print one line per dispatched event.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a per-node energy CSV here.
        #[arg(long)]
        node_report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file; omit to use the defaults.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Use seeds 1..=N.
    #[arg(long, conflicts_with = "seed_list")]
    seeds: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    /// Comma-separated protocols (proposed, mtpr, mbcr, mmbcr, cmmbcr, mmpr).
    #[arg(long, value_delimiter = ',')]
    protocols: Option<Vec<ProtocolKind>>,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Common {
    fn load(&self) -> Result<Scenario, Failure> {
        let mut scenario = match &self.scenario {
            Some(path) => Scenario::from_file(path).map_err(|e| Failure::Invalid(e.to_string()))?,
            None => Scenario::default(),
        };
        if let Some(n) = self.seeds {
            scenario.seeds = (1..=n).collect();
        }
        if let Some(list) = &self.seed_list {
            scenario.seeds = list.clone();
        }
        if let Some(protocols) = &self.protocols {
            scenario.routing.protocols = protocols.clone();
        }
        scenario.validate().map_err(|e| Failure::Invalid(e.to_string()))?;
        if let Some(p) = scenario.routing.protocols.iter().find(|p| !p.is_live()) {
            return Err(Failure::Invalid(format!(
                "protocol '{p}' is only available for offline route evaluation"
            )));
        }
        Ok(scenario)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn io_failure(e: io::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn summarize(result: &BatchResult) {
    println!("{:<12} {:<10} {:>20} {:>24} {:>10}", "value", "protocol", "control_packets", "used_energy_J", "delivered");
    for (value, protocol, agg) in result.aggregates() {
        let c = agg.get("control_packets").expect("known metric");
        let e = agg.get("used_energy_J").expect("known metric");
        let d = agg.get("data_delivered").expect("known metric");
        println!(
            "{:<12} {:<10} {:>11.1} ± {:<6.1} {:>13.4} ± {:<8.4} {:>10.1}",
            value.as_deref().unwrap_or("-"),
            protocol.name(),
            c.mean,
            c.std_dev,
            e.mean,
            e.std_dev,
            d.mean
        );
    }
}

fn write_trace(sim: &Simulation, out: &mut impl Write) -> io::Result<()> {
    for record in sim.trace() {
        writeln!(out, "{record}")?;
    }
    out.flush()
}

fn write_node_report(scenario: &Scenario, ledger: &MetricsLedger, out: &mut impl Write) -> io::Result<()> {
    let e = &scenario.energy;
    writeln!(
        out,
        "node,initial_J,residual_J,tx_J,rx_J,overhear_J,died_at,tx_current_A,rx_current_A,voltage_V,bandwidth_bps"
    )?;
    for (id, n) in ledger.node_energy.iter().enumerate() {
        writeln!(
            out,
            "{id},{},{},{},{},{},{},{},{},{},{}",
            n.initial,
            n.residual,
            n.drawn.tx,
            n.drawn.rx,
            n.drawn.overhear,
            n.died_at.map(|t| t.to_string()).unwrap_or_default(),
            e.tx_current,
            e.rx_current,
            e.voltage,
            e.bandwidth
        )?;
    }
    out.flush()
}

/// Single traced run: the first sweep value, seed and protocol.
fn traced_run(scenario: &Scenario) -> Result<(Scenario, Simulation, MetricsLedger), Failure> {
    let (_, s, seed, protocol) = batch::plan(scenario)
        .into_iter()
        .next()
        .ok_or_else(|| Failure::Invalid("nothing to run".into()))?;
    let mut sim = Simulation::new(&s, protocol, seed).map_err(|e| Failure::Runtime(e.to_string()))?;
    sim.enable_trace();
    let ledger = sim.run_until(s.sim_time);
    Ok((s, sim, ledger))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { common } => {
            let scenario = common.load()?;
            println!("{scenario}");
            println!("runs             {}", batch::plan(&scenario).len());
            Ok(())
        }
        Command::Run { common, out, trace } => {
            let scenario = common.load()?;
            let result = batch::run_batch(&scenario, &out).map_err(|e| Failure::Runtime(e.to_string()))?;
            summarize(&result);
            eprintln!("wrote {} rows to {}", result.rows.len(), out.display());
            if trace {
                let path = out.with_extension("trace.tsv");
                let (_, sim, _) = traced_run(&scenario)?;
                write_trace(&sim, &mut create(&path)?).map_err(io_failure)?;
                eprintln!("wrote trace to {}", path.display());
            }
            Ok(())
        }
        Command::Trace { common, out, node_report } => {
            let scenario = common.load()?;
            let (s, sim, ledger) = traced_run(&scenario)?;
            match out {
                Some(path) => write_trace(&sim, &mut create(&path)?),
                None => write_trace(&sim, &mut io::stdout().lock()),
            }
            .map_err(io_failure)?;
            if let Some(path) = node_report {
                write_node_report(&s, &ledger, &mut create(&path)?).map_err(io_failure)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => e.exit(),
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
