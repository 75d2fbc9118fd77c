//! `gfdm`: cloud generation, simulation runs and convergence-bound checks.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use gfdm::output::write_run_outputs;
use gfdm::stability::constant_state_bound;
use gfdm::{
    generate_irregular_cloud, generate_regular_cloud, validate_hypotheses,
    validate_initial_condition, write_cloud, Domain, Error, FieldState, Simulation,
};

use config::{Resolved, Setup};

#[derive(Parser)]
#[command(
    name = "gfdm",
    version,
    about = "Meshless GFD solver for a density-suppressed motility system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write norms, snapshots and the norm table.
    Run {
        #[command(flatten)]
        setup: Setup,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a point cloud CSV.
    GenerateCloud(GenerateArgs),
    /// Evaluate the convergence bound on the initial data and compare it with dt.
    StabilityCheck {
        #[command(flatten)]
        setup: Setup,
        /// Use the constant state (1, 1) instead of the preset's initial data.
        #[arg(long)]
        equilibrium: bool,
    },
    /// Check the hypotheses on the motility function and the initial data.
    Validate {
        #[command(flatten)]
        setup: Setup,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CloudKind {
    Regular,
    Irregular,
}

#[derive(Args)]
struct GenerateArgs {
    kind: CloudKind,
    nx: usize,
    ny: usize,
    /// Destination file; standard output when omitted.
    path: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    perturbation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Process exit statuses.
mod status {
    pub const FAILURE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const IO: u8 = 3;
}

/// Failure that already printed its diagnostic and only carries a status.
#[derive(Debug)]
struct Exit(u8);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit status {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn exit_status(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(Exit(code)) = cause.downcast_ref::<Exit>() {
            return *code;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. } => status::IO,
                Error::Divergence { .. } | Error::StabilityViolation { .. } => status::FAILURE,
                _ => status::CONFIG,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return status::IO;
        }
    }
    status::CONFIG
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { setup, out } => cmd_run(setup, out),
        Command::GenerateCloud(args) => cmd_generate_cloud(args),
        Command::StabilityCheck { setup, equilibrium } => cmd_stability_check(setup, equilibrium),
        Command::Validate { setup } => cmd_validate(setup),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if err.downcast_ref::<Exit>().is_none() {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(exit_status(&err))
        }
    }
}

fn cmd_run(setup: Setup, out: Option<PathBuf>) -> Result<()> {
    let r = setup.resolve()?;
    let out = out
        .or_else(|| r.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let cloud = r.cloud()?;
    let sim = Simulation::new(cloud, r.config.clone())?;
    let result = sim.run(r.preset.u0)?;
    let title = format!(
        "{} on {} nodes, gamma = {}, mu = {}, dt = {}",
        r.preset.name,
        sim.cloud().len(),
        r.config.gamma.name(),
        r.config.params.mu,
        r.config.dt
    );
    write_run_outputs(
        &out,
        &title,
        sim.cloud(),
        &result,
        &r.preset.report_times,
        r.config.dt,
    )?;
    let last = result.series.last().expect("series starts at t = 0");
    println!(
        "t = {}: ||U-1|| = {:.6e}, ||V-1|| = {:.6e}; results in {}",
        last.t,
        last.norm_u,
        last.norm_v,
        out.display()
    );
    Ok(())
}

fn cmd_generate_cloud(args: GenerateArgs) -> Result<()> {
    let domain = Domain::unit_square();
    let cloud = match args.kind {
        CloudKind::Regular => generate_regular_cloud(args.nx, args.ny, domain)?,
        CloudKind::Irregular => {
            generate_irregular_cloud(args.nx, args.ny, args.perturbation, args.seed, domain)?
        }
    };
    match &args.path {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            write_cloud(&cloud, BufWriter::new(file)).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
        }
        None => write_cloud(&cloud, io::stdout().lock()).context("writing to standard output")?,
    }
    Ok(())
}

fn cmd_stability_check(setup: Setup, equilibrium: bool) -> Result<()> {
    let r = setup.resolve()?;
    let sim = Simulation::new(r.cloud()?, r.config.clone())?;
    let dt = r.config.dt;
    let state = if equilibrium {
        let m = sim.cloud().len();
        FieldState {
            u: vec![1.0; m],
            v: vec![1.0; m],
            time: 0.0,
            step: 0,
        }
    } else {
        sim.initialize(r.preset.u0)?
    };
    let report = sim.stability_report(&state)?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "global bound: {:.6e} (node {})",
        report.global_bound, report.worst_node
    )?;
    if equilibrium {
        let closed = sim
            .stencils()
            .iter()
            .map(|row| {
                constant_state_bound(
                    row,
                    1.0,
                    &r.config.gamma,
                    r.config.params.mu,
                    r.config.stability,
                )
            })
            .fold(f64::INFINITY, f64::min);
        writeln!(out, "closed-form constant-state bound: {closed:.6e}")?;
    }
    let ok = report.admits(dt);
    writeln!(
        out,
        "dt = {dt}: {}",
        if ok { "satisfied" } else { "violated" }
    )?;
    if ok {
        Ok(())
    } else {
        Err(Exit(status::FAILURE).into())
    }
}

fn cmd_validate(setup: Setup) -> Result<()> {
    let r: Resolved = setup.resolve()?;
    let cloud = r.cloud()?;
    let hyp = validate_hypotheses(
        &r.config.gamma,
        &r.config.params,
        gfdm::motility::DEFAULT_S_MAX,
        gfdm::motility::DEFAULT_SAMPLES,
    )?;
    let init = validate_initial_condition(&cloud.sample(r.preset.u0));
    let mut out = io::stdout().lock();
    writeln!(out, "motility function: {}", r.config.gamma.name())?;
    writeln!(out, "  gamma >= 0: {}", hyp.gamma_nonnegative)?;
    writeln!(out, "  gamma' <= 0: {}", hyp.d1_nonpositive)?;
    writeln!(out, "  gamma'' >= 0: {}", hyp.d2_nonnegative)?;
    writeln!(out, "  gamma''' <= 0: {}", hyp.d3_nonpositive)?;
    writeln!(
        out,
        "  mu0 = {:.6} at s = {:.6} (mu = {})",
        hyp.mu0, hyp.mu0_at, hyp.mu
    )?;
    writeln!(out, "  c_gamma = {:.6}", hyp.c_gamma)?;
    writeln!(
        out,
        "initial density range: [{:.6}, {:.6}]",
        init.min, init.max
    )?;
    for f in &hyp.failures {
        writeln!(out, "FAIL: {f}")?;
    }
    if !init.passed {
        writeln!(out, "FAIL: initial density is not strictly positive")?;
        if r.config.allow_hypothesis_violations {
            warn!(
                "preset {} runs despite a non-positive initial density",
                r.preset.name
            );
        }
    }
    if hyp.passed && init.passed {
        writeln!(out, "all hypotheses hold")?;
        Ok(())
    } else {
        Err(Exit(status::FAILURE).into())
    }
}
