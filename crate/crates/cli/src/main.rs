use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qwsn_core::harness::{
    apply_seed_override, emit_comparison_csv, emit_csv, emit_lifetime_series, emit_series, parse_scenario,
    run_comparison, run_sweep, write_rows, Figure, MetricsRow, ScenarioConfig, ScenarioError,
};
use qwsn_core::netsim::{run_round, RoundOptions, RunReport};
use qwsn_core::{QosClass, SimError};

#[derive(Parser)]
#[command(name = "qwsn", version, about = "Multi-class query routing simulator for sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a single query round and write its metrics as CSV.
    Run(RunArgs),
    /// Like `run`, also dumping every simulator event.
    Trace {
        #[command(flatten)]
        run: RunArgs,
        /// Event dump destination.
        #[arg(long)]
        trace: PathBuf,
    },
    /// Run every cell of a scenario file.
    Sweep(ScenarioArgs),
    /// Lifetime comparison against the chain-based baseline.
    ComparePegasis(ScenarioArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "normal", value_parser = parse_qos)]
    qos: QosClass,
    #[arg(long, default_value_t = 50)]
    nodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fraction of nodes failing after the query flood.
    #[arg(long, default_value_t = 0.0)]
    failure: f64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

fn parse_qos(s: &str) -> Result<QosClass, String> {
    QosClass::parse(s).ok_or_else(|| format!("unknown class {s:?} (normal, reliable, delay, delay_reliable)"))
}

/// Failure that maps to a dedicated exit status.
#[derive(Debug)]
enum Exit {
    Parse(String),
    Unconnectable(String),
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exit::Parse(m) | Exit::Unconnectable(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Exit {}

fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parse = |e: ScenarioError| Exit::Parse(format!("{}: {e}", path.display()));
    let mut cfg = parse_scenario(&text).map_err(parse)?;
    apply_seed_override(&mut cfg).map_err(parse)?;
    Ok(cfg)
}

fn single_round(args: &RunArgs, trace: bool) -> Result<(RunReport, MetricsRow)> {
    if !(0.0..1.0).contains(&args.failure) {
        return Err(Exit::Parse(format!("--failure must be in [0, 1), got {}", args.failure)).into());
    }
    let cfg = ScenarioConfig::default().cell(args.nodes, args.failure, args.seed);
    log::info!("n={} side={:.3} m seed={} qos={}", cfg.n, cfg.side, cfg.seed, args.qos);
    let report = match run_round(&cfg, args.qos, RoundOptions { trace, audit: false }) {
        Ok(r) => r,
        Err(e @ SimError::TopologyUnconnectable { .. }) => return Err(Exit::Unconnectable(e.to_string()).into()),
        Err(e @ SimError::InvalidConfig(_)) => return Err(Exit::Parse(e.to_string()).into()),
    };
    let m = &report.metrics;
    let row = MetricsRow {
        qos: args.qos,
        n: cfg.n,
        failure_fraction: cfg.failure_fraction,
        seed: Some(cfg.seed),
        avg_dissipated_energy: m.avg_dissipated_energy(),
        avg_latency: m.avg_latency(),
        delivery_probability: m.delivery_probability(),
    };
    Ok((report, row))
}

fn write_single(row: &MetricsRow, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            let file = fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
            write_rows([row], file)?;
        }
        None => write_rows([row], std::io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let (_, row) = single_round(&args, false)?;
            write_single(&row, args.out.as_deref())
        }
        Command::Trace { run, trace } => {
            let (report, row) = single_round(&run, true)?;
            let mut text = String::new();
            for line in &report.trace {
                text.push_str(&line.to_string());
                text.push('\n');
            }
            fs::write(&trace, text).with_context(|| format!("writing {}", trace.display()))?;
            write_single(&row, run.out.as_deref())
        }
        Command::Sweep(args) => {
            let cfg = load_scenario(&args.scenario)?;
            fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
            let table = run_sweep(&cfg);
            for s in &table.skipped {
                log::warn!("skipped {} n={} f={} seed={}: {}", s.qos, s.n, s.failure_fraction, s.seed, s.reason);
            }
            if table.rows.is_empty() {
                return Err(Exit::Unconnectable("no cell of the sweep had a connected placement".into()).into());
            }
            emit_csv(&table, &args.out.join("metrics.csv"))?;
            for fig in Figure::ALL {
                let path = args.out.join(format!("{}.tsv", fig.name()));
                if !emit_series(&table, fig, &path)? {
                    log::info!("no rows at failure fraction {} for {}", fig.failure_fraction(), fig.name());
                }
            }
            Ok(())
        }
        Command::ComparePegasis(args) => {
            let cfg = load_scenario(&args.scenario)?;
            fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
            let results = match run_comparison(&cfg) {
                Ok(r) => r,
                Err(e @ SimError::TopologyUnconnectable { .. }) => return Err(Exit::Unconnectable(e.to_string()).into()),
                Err(e) => bail!(e),
            };
            emit_comparison_csv(&results, &args.out.join("lifetime.csv"))?;
            emit_lifetime_series(&results, &args.out.join("fig8.tsv"))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Exit>() {
                Some(Exit::Parse(_)) => ExitCode::from(2),
                Some(Exit::Unconnectable(_)) => ExitCode::from(3),
                None => ExitCode::from(1),
            }
        }
    }
}
