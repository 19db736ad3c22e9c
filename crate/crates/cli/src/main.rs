//! Command-line front end: single blocks, sweeps, figure presets and the
//! invariant suite.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irs_isac::harness::{experiment_rows, preset, run_experiment, write_csv, CsvRow};
use irs_isac::protocol::{
    metric, monte_carlo_sweep, run_coherence_block, BlockResult, SensingOutcome, SweepAxis,
    SweepResult,
};
use irs_isac::selftest::run_selftest;
use irs_isac::{load_config, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "irs-isac",
    version,
    about = "Distributed semi-passive IRS sensing and communication simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML scenario file; absent fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed (overrides run.base_seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// Monte Carlo trials per point (overrides run.trials).
    #[arg(long)]
    trials: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one coherence block and report its outcome.
    Block {
        #[command(flatten)]
        common: Common,
        /// Emit the full block result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Sweep one scenario parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
        /// Parameter to sweep.
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
        /// Experiment id written to the CSV.
        #[arg(long, default_value = "sweep")]
        name: String,
    },
    /// RMSE versus transmit power.
    Fig6(Preset),
    /// RMSE versus sensing time for two passive-surface sizes.
    Fig7(Preset),
    /// RMSE versus semi-passive element count.
    Fig8(Preset),
    /// ISAC-period rate versus transmit power, with reference schemes.
    Fig9(Preset),
    /// PC-period rate versus passive-surface size, with reference schemes.
    Fig10(Preset),
    /// Average rate versus the ISAC share of the coherence block.
    Fig11(Preset),
    /// Average rate versus the first-block share of the ISAC period.
    Fig12(Preset),
    /// ISAC protocol versus the sensing-only benchmark protocol.
    Fig13(Preset),
    /// RMSE versus user distance.
    Distance(Preset),
    /// Run the invariant suite.
    Selftest,
    /// Print the effective configuration as TOML.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Preset {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    run: RunArgs,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|_| {
        let names: Vec<_> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn scenario(common: &Common, trials: Option<usize>) -> CliResult<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.run.base_seed = seed;
    }
    if let Some(t) = trials {
        cfg.run.trials = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit_rows(rows: &[CsvRow], out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => write_csv(BufWriter::new(File::create(path)?), rows)?,
        None => write_csv(io::stdout().lock(), rows)?,
    }
    Ok(())
}

const TABLE_METRICS: [&str; 4] = [
    metric::RMSE_BLOCK1,
    metric::FAILURES_BLOCK1,
    metric::AVG_PC,
    metric::AVG_TOTAL,
];

fn summary(results: &[(String, SweepResult)], sink: &mut dyn Write) -> io::Result<()> {
    writeln!(
        sink,
        "{:<28} {:>10} {:>14} {:>9} {:>10} {:>10}",
        "series", "value", "rmse_m", "failed", "rate_pc", "rate_avg"
    )?;
    for (id, r) in results {
        for p in &r.points {
            let cols: Vec<String> = TABLE_METRICS
                .iter()
                .map(|m| match p.metric(m) {
                    None => "-".into(),
                    Some(s) if *m == metric::RMSE_BLOCK1 => format!("{:.3e}", s.value),
                    Some(s) => format!("{:.4}", s.value),
                })
                .collect();
            writeln!(
                sink,
                "{:<28} {:>10} {:>14} {:>9} {:>10} {:>10}",
                id, p.value, cols[0], cols[1], cols[2], cols[3]
            )?;
        }
    }
    Ok(())
}

fn finish(results: &[(String, SweepResult)], out: Option<&Path>) -> CliResult<()> {
    emit_rows(&experiment_rows(results), out)?;
    // Keep stdout clean for CSV when no file was given.
    if out.is_some() {
        summary(results, &mut io::stdout().lock())?;
    } else {
        summary(results, &mut io::stderr().lock())?;
    }
    Ok(())
}

fn describe_outcome(o: &SensingOutcome) -> String {
    match o {
        SensingOutcome::Estimated { estimate, error_m } => {
            let p = estimate.position;
            format!(
                "({:.4}, {:.4}, {:.4}) m, error {error_m:.3e} m",
                p.x, p.y, p.z
            )
        }
        SensingOutcome::Oracle { position } => format!(
            "true location ({}, {}, {})",
            position.x, position.y, position.z
        ),
        SensingOutcome::Failed { reason } => format!("failed: {reason}"),
        SensingOutcome::NotRun => "not run".into(),
    }
}

fn print_block(b: &BlockResult) {
    println!("seed            {}", b.seed);
    println!("block 1 sensing {}", describe_outcome(&b.loc_block1));
    println!("block 2 sensing {}", describe_outcome(&b.loc_block2));
    println!("rate block 1    {:.4} bit/s/Hz", b.rate_block1);
    println!("rate block 2    {:.4} bit/s/Hz", b.rate_block2);
    println!(
        "probe slots     {} ({} rounds)",
        b.probe_slots,
        b.training.as_ref().map_or(0, |t| t.rounds.len())
    );
    println!(
        "trained pc rate {:.4} bit/s/Hz (bound {:.4})",
        b.exploit_rate, b.upper_bound_pc
    );
    println!(
        "average rate    isac {:.4}, pc {:.4}, total {:.4}",
        b.avg_isac, b.avg_pc, b.avg_total
    );
}

impl Command {
    fn preset(&self) -> Option<(&'static str, &Preset)> {
        Some(match self {
            Command::Fig6(p) => ("fig6", p),
            Command::Fig7(p) => ("fig7", p),
            Command::Fig8(p) => ("fig8", p),
            Command::Fig9(p) => ("fig9", p),
            Command::Fig10(p) => ("fig10", p),
            Command::Fig11(p) => ("fig11", p),
            Command::Fig12(p) => ("fig12", p),
            Command::Fig13(p) => ("fig13", p),
            Command::Distance(p) => ("distance", p),
            _ => return None,
        })
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    if let Some((name, p)) = cli.command.preset() {
        let cfg = scenario(&p.common, p.run.trials)?;
        let exp = preset(name, &cfg)?;
        let results = run_experiment(&exp, cfg.run.base_seed)?;
        finish(&results, p.run.out.as_deref())?;
        return Ok(true);
    }
    match cli.command {
        Command::Block { common, json } => {
            let cfg = scenario(&common, None)?;
            let b = run_coherence_block(&cfg, cfg.run.base_seed)?;
            if json {
                serde_json::to_writer_pretty(io::stdout().lock(), &b)?;
                println!();
            } else {
                print_block(&b);
            }
        }
        Command::Sweep {
            common,
            run,
            axis,
            values,
            name,
        } => {
            let cfg = scenario(&common, run.trials)?;
            let result = monte_carlo_sweep(&cfg, axis, &values, cfg.run.trials, cfg.run.base_seed)?;
            finish(&[(name, result)], run.out.as_deref())?;
        }
        Command::Selftest => {
            let report = run_selftest();
            for c in &report.checks {
                println!(
                    "{:<4} {:<45} {}",
                    if c.passed { "ok" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            return Ok(report.passed());
        }
        Command::Config { common } => {
            print!("{}", scenario(&common, None)?.to_toml_string());
        }
        _ => unreachable!("preset commands handled above"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
