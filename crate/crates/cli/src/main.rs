//! `shocknet` — estimate shock-propagation paths on planarity-filtered
//! networks.
//!
//! Subcommands: `run` (full pipeline), `graph-only` (stop after filtration),
//! `synth` (generate a validation panel with known truth), `check-ident`
//! (identification counting for a graph kind and size).
//!
//! Exit codes: 0 success, 2 configuration/input error, 3 estimation error.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use shocknet_core::pipeline::{run_graph_only, run_pipeline, PipelineConfig, RunOutcome};
use shocknet_core::planar::{identification_check, GraphKind};
use shocknet_core::synth::{generate_synthetic, SyntheticSpec, SyntheticTruth};
use shocknet_core::Error;

#[derive(Parser)]
#[command(
    name = "shocknet",
    version,
    about = "Shock propagation on planarity-filtered networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: load, preprocess, filter, VAR, SVAR, IRF.
    Run {
        /// Flat key=value config file.
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. --set seed=7 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Stop after graph filtration; writes graph + identification report.
    GraphOnly {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Generate a synthetic panel with known structural truth.
    Synth {
        /// Number of nodes.
        #[arg(long)]
        n: usize,
        /// Number of time points.
        #[arg(long)]
        t: usize,
        /// Graph kind: pmfg, pcpg, or mst.
        #[arg(long, default_value = "pcpg")]
        graph: String,
        /// Target companion spectral radius of the lag matrix.
        #[arg(long, default_value_t = 0.6)]
        radius: f64,
        #[arg(long)]
        seed: u64,
        /// Output directory for panel.csv and truth.json.
        #[arg(long, default_value = "synth_out")]
        out: PathBuf,
    },
    /// Print the identification report for a graph kind and node count.
    CheckIdent {
        /// Graph kind: pmfg, pcpg, or mst.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    std::process::exit(code);
}

/// 2 for configuration and input-shape problems, 3 for estimation failures.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Parse(_)
        | Error::Schema(_)
        | Error::MissingData(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::Domain(_)
        | Error::Estimation(_)
        | Error::Singularity(_)
        | Error::Graph(_)
        | Error::Identification { .. }
        | Error::Lookup(_) => 3,
    }
}

fn parse_overrides(set: &[String]) -> Result<Vec<(String, String)>, Error> {
    set.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))
        })
        .collect()
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, set } => {
            let cfg = PipelineConfig::from_file(&config, &parse_overrides(&set)?)?;
            let outcome = run_pipeline(&cfg)?;
            print_outcome(&outcome);
            Ok(())
        }
        Command::GraphOnly { config, set } => {
            let cfg = PipelineConfig::from_file(&config, &parse_overrides(&set)?)?;
            let outcome = run_graph_only(&cfg)?;
            print_outcome(&outcome);
            Ok(())
        }
        Command::Synth {
            n,
            t,
            graph,
            radius,
            seed,
            out,
        } => {
            let spec = SyntheticSpec {
                n,
                t,
                graph: graph.parse()?,
                radius,
                seed,
            };
            let (panel, truth): (_, SyntheticTruth<f64>) = generate_synthetic(&spec)?;
            std::fs::create_dir_all(&out)?;
            panel.save_csv(out.join("panel.csv"))?;
            std::fs::write(
                out.join("truth.json"),
                serde_json::to_string_pretty(&truth).map_err(Error::from)?,
            )?;
            println!(
                "wrote {} and {} ({} nodes, {} obs, {} edges)",
                out.join("panel.csv").display(),
                out.join("truth.json").display(),
                n,
                t,
                truth.graph.edges().len()
            );
            Ok(())
        }
        Command::CheckIdent { kind, n } => {
            let kind: GraphKind = kind.parse()?;
            let report = identification_check(kind, n);
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(Error::from)?
            );
            Ok(())
        }
    }
}

fn print_outcome(outcome: &RunOutcome) {
    println!("outputs in {}:", outcome.out_dir.display());
    for f in &outcome.manifest.files {
        println!("  {} ({} bytes)", f.name, f.bytes);
    }
    println!("  manifest.json");
    if outcome.trace.is_empty() {
        return;
    }
    let shown_horizon = 4.min(outcome.trace.iter().map(|r| r.horizon).max().unwrap_or(0));
    println!(
        "\nshock trace (epicenter responses up to horizon {shown_horizon}; full table in irf.csv):"
    );
    println!("{:>8}  {:>7}  {:>12}", "node", "horizon", "response");
    for row in &outcome.trace {
        if row.horizon <= shown_horizon {
            println!(
                "{:>8}  {:>7}  {:>12.6}",
                row.node, row.horizon, row.response
            );
        }
    }
}
