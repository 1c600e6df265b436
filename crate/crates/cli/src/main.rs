//! Scenario-driven command-line front end. Each subcommand reproduces one
//! experiment pipeline at configurable scale and emits CSV data plus a
//! JSON metadata sidecar from which the run can be repeated byte-for-byte
//! (`latqed run --config <name>.meta.json`).
//!
//! Exit codes: 2 config/schema violation, 3 capacity refusal, 4 numerical
//! non-convergence, 5 downstream invariant violation (Gauss drift, norm
//! drift, truncation boundary weight).

mod config;
mod output;
mod scenarios;

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "latqed", version, about = "Lattice QED laboratory: exact diagonalization, truncation schemes, and trapped-ion simulator models")]
struct Cli {
    /// Output directory (default: $LATQED_OUT or ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base name of the output files (default: the scenario name).
    #[arg(long, global = true)]
    name: Option<String>,
    /// Config file (`key = value` lines or a metadata sidecar); flags
    /// override config values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// String-breaking quench: boson model vs the lattice QED reference.
    StringBreak {
        #[arg(long, short = 'L')]
        sites: Option<usize>,
        /// Comma-separated boson occupation offsets, e.g. 10,50.
        #[arg(long, short = 'N')]
        n_offsets: Option<String>,
        /// Staggered mass in units of J.
        #[arg(long)]
        mu: Option<f64>,
        /// Electric coupling in units of J.
        #[arg(long)]
        v: Option<f64>,
        /// Window in units of 1/J; accepts a `pi` suffix (e.g. 40pi).
        #[arg(long)]
        tmax: Option<String>,
        #[arg(long)]
        points: Option<usize>,
        /// Rotor cutoff of the QED reference.
        #[arg(long)]
        cutoff: Option<u32>,
        /// Boson window half-width.
        #[arg(long)]
        window: Option<u32>,
    },
    /// Order-parameter scans, pseudo-critical points, and collapse scores.
    Coleman {
        #[arg(long)]
        ga: Option<f64>,
        /// Comma-separated lattice sizes, e.g. 8,10,12.
        #[arg(long, short = 'L')]
        sites: Option<String>,
        /// Comma-separated boson offsets, e.g. 10,40,160.
        #[arg(long, short = 'N')]
        n_offsets: Option<String>,
        #[arg(long)]
        h_min: Option<f64>,
        #[arg(long)]
        h_max: Option<f64>,
        #[arg(long)]
        h_steps: Option<usize>,
        /// Collapse exponent η′.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// False-vacuum decay under the full drive vs the ideal link model.
    Fvd {
        #[arg(long, short = 'L')]
        sites: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        /// Lamb–Dicke expansion order (2 or 3).
        #[arg(long)]
        order: Option<usize>,
        /// on, off, or both.
        #[arg(long)]
        compensate: Option<String>,
        /// Target coupling, e.g. 500hz.
        #[arg(long)]
        j: Option<String>,
        /// Axial trap frequency, e.g. 0.5mhz.
        #[arg(long)]
        omega_z: Option<String>,
        #[arg(long)]
        eta: Option<f64>,
        /// Window in units of 1/J; accepts a `pi` suffix.
        #[arg(long)]
        tmax: Option<String>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Micro-trap normal-mode tables and leak-out summaries.
    Modes {
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long)]
        ions_per_block: Option<usize>,
        /// Jitter half-width, e.g. 30khz (0hz disables).
        #[arg(long)]
        jitter: Option<String>,
        /// Monte-Carlo seeds.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        seed0: Option<usize>,
    },
    /// Boson-model quantum simulator with residual AC-Stark errors.
    HobmQs {
        #[arg(long, short = 'L')]
        sites: Option<usize>,
        #[arg(long, short = 'N')]
        n_offset: Option<usize>,
        /// e.g. 120hz.
        #[arg(long)]
        j: Option<String>,
        /// e.g. 25hz.
        #[arg(long)]
        v: Option<String>,
        /// e.g. 25hz.
        #[arg(long)]
        mu: Option<String>,
        #[arg(long)]
        tmax: Option<String>,
        #[arg(long)]
        points: Option<usize>,
        /// Compensation fraction (1 = exact).
        #[arg(long)]
        comp_fraction: Option<f64>,
    },
    /// Run a scenario fully described by --config (or a sidecar).
    Run,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match try_main(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

fn classify(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<latqed::Error>() {
        return match core {
            latqed::Error::CapacityExceeded { .. } => 3,
            latqed::Error::NonConvergence(_) => 4,
            _ => 2,
        };
    }
    if err.to_string().starts_with("invariant violation") {
        return 5;
    }
    2
}

fn try_main(cli: &Cli) -> Result<()> {
    let mut map: BTreeMap<String, String> = match &cli.config {
        Some(path) => config::read_config_file(path)?,
        None => BTreeMap::new(),
    };
    merge_flags(&cli.command, &mut map)?;
    let scenario = scenarios::scenario_from_map(&map)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("LATQED_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let name = cli.name.clone().unwrap_or_else(|| scenario.name().to_string());
    let report = scenarios::run(&scenario, &out_dir, &name)?;
    if let Some(v) = report.violation {
        anyhow::bail!("invariant violation: {v}");
    }
    Ok(())
}

fn set(map: &mut BTreeMap<String, String>, key: &str, value: Option<String>) {
    if let Some(v) = value {
        map.insert(key.to_string(), v);
    }
}

fn merge_flags(cmd: &Command, map: &mut BTreeMap<String, String>) -> Result<()> {
    let str_of = |x: &Option<usize>| x.map(|v| v.to_string());
    match cmd {
        Command::Run => {
            if !map.contains_key("scenario") {
                anyhow::bail!("`run` needs --config with a 'scenario' key");
            }
        }
        Command::StringBreak {
            sites,
            n_offsets,
            mu,
            v,
            tmax,
            points,
            cutoff,
            window,
        } => {
            map.insert("scenario".into(), "string-break".into());
            set(map, "sites", str_of(sites));
            set(map, "n_offsets", n_offsets.clone());
            set(map, "mu", mu.map(|x| x.to_string()));
            set(map, "v", v.map(|x| x.to_string()));
            set(map, "t_max", tmax.clone());
            set(map, "points", str_of(points));
            set(map, "cutoff", cutoff.map(|x| x.to_string()));
            set(map, "window", window.map(|x| x.to_string()));
        }
        Command::Coleman {
            ga,
            sites,
            n_offsets,
            h_min,
            h_max,
            h_steps,
            eta,
        } => {
            map.insert("scenario".into(), "coleman".into());
            set(map, "ga", ga.map(|x| x.to_string()));
            set(map, "sites", sites.clone());
            set(map, "n_offsets", n_offsets.clone());
            set(map, "h_min", h_min.map(|x| x.to_string()));
            set(map, "h_max", h_max.map(|x| x.to_string()));
            set(map, "h_steps", str_of(h_steps));
            set(map, "eta", eta.map(|x| x.to_string()));
        }
        Command::Fvd {
            sites,
            n_max,
            order,
            compensate,
            j,
            omega_z,
            eta,
            tmax,
            points,
        } => {
            map.insert("scenario".into(), "fvd".into());
            set(map, "sites", str_of(sites));
            set(map, "n_max", str_of(n_max));
            set(map, "order", str_of(order));
            set(map, "compensate", compensate.clone());
            set(map, "coupling_j", j.clone());
            set(map, "omega_z", omega_z.clone());
            set(map, "eta_stretch", eta.map(|x| x.to_string()));
            set(map, "t_max_over_j", tmax.clone());
            set(map, "points", str_of(points));
        }
        Command::Modes {
            blocks,
            ions_per_block,
            jitter,
            seeds,
            seed0,
        } => {
            map.insert("scenario".into(), "modes".into());
            set(map, "blocks", str_of(blocks));
            set(map, "ions_per_block", str_of(ions_per_block));
            set(map, "jitter", jitter.clone());
            set(map, "seeds", str_of(seeds));
            set(map, "seed0", str_of(seed0));
        }
        Command::HobmQs {
            sites,
            n_offset,
            j,
            v,
            mu,
            tmax,
            points,
            comp_fraction,
        } => {
            map.insert("scenario".into(), "hobm-qs".into());
            set(map, "sites", str_of(sites));
            set(map, "n_offset", str_of(n_offset));
            set(map, "coupling_j", j.clone());
            set(map, "v", v.clone());
            set(map, "mu", mu.clone());
            set(map, "t_max_over_j", tmax.clone());
            set(map, "points", str_of(points));
            set(map, "comp_fraction", comp_fraction.map(|x| x.to_string()));
        }
    }
    Ok(())
}
