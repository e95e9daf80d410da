mod svg;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use qnlab::config::{Config, ENV_PREFIX};
use qnlab::diagnostics::SCHEMA_VERSION;
use qnlab::equilibrium::Equilibrium;
use qnlab::pipeline::{self, decreasing_within, write_grid, write_particles, write_sweep_csv};
use qnlab::verify::{run_checks, Status};
use qnlab::Error;

#[derive(Parser)]
#[command(name = "qnlab", version, about = "Confined plasma equilibria and quasi-neutral PIC runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the equilibrium and dump profiles plus a summary.
    Equilibrium {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one simulation.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run one simulation per eps value and aggregate the final-time diagnostics.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated list, e.g. `1e-1,1e-2,1e-3`.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Run the built-in property checks and print a JSON report.
    Verify {
        /// Comma-separated check names; all checks when omitted.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// List the available checks and exit.
        #[arg(long)]
        list: bool,
    },
    /// Render a diagnostics or sweep CSV as SVG line plots.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::UnknownStrategy { .. }
            | Error::NoEquilibrium(_)
            | Error::Dimension(_) => CliError::Usage(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<ExitCode> {
    match cmd {
        Command::Equilibrium { config, out } => cmd_equilibrium(&load(&config)?, &out),
        Command::Simulate {
            config,
            out,
            seed,
            eps,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg = cfg.with_seed(s)?;
            }
            if let Some(e) = eps {
                cfg = cfg.with_eps(e)?;
            }
            cmd_simulate(&cfg, &out)
        }
        Command::Sweep {
            config,
            out,
            seed,
            eps,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg = cfg.with_seed(s)?;
            }
            let eps = eps.unwrap_or_else(|| cfg.sweep.eps.clone());
            cmd_sweep(&cfg, &eps, &out)
        }
        Command::Verify { checks, out, list } => {
            if list {
                for n in qnlab::verify::check_registry().names() {
                    println!("{n}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            cmd_verify(&checks.unwrap_or_default(), out.as_deref())
        }
        Command::Plot { csv, out } => {
            let files = svg::plot_csv(&csv, &out)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load(path: &Path) -> CliResult<Config> {
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "config file {} not found",
            path.display()
        )));
    }
    Ok(Config::load(path)?)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    class: &'static str,
    domain_params: serde_json::Map<String, serde_json::Value>,
    mass: f64,
    robin_constant: f64,
}

/// Profile along the first axis through the domain center.
fn write_profiles(eq: &dyn Equilibrium, path: &Path) -> CliResult<()> {
    let dim = eq.dim().get();
    let center = eq.domain().center();
    let reach = eq.domain().diameter();
    let mut wr = csv::Writer::from_writer(create(path)?);
    let csv_err = |e: csv::Error| CliError::Run(e.to_string());
    wr.write_record(["coord", "n_e", "phi_e", "grad_phi_e_norm"])
        .map_err(csv_err)?;
    let samples = 401;
    let mut g = vec![0.0; dim];
    for k in 0..samples {
        let s = -reach + 2.0 * reach * k as f64 / (samples - 1) as f64;
        let mut x = center.clone();
        x[0] += s;
        eq.grad_phi_e(&x, &mut g);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        wr.write_record([x[0], eq.density(&x), eq.phi_e(&x), gn].map(|v| format!("{v:e}")))
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

fn cmd_equilibrium(cfg: &Config, out: &Path) -> CliResult<ExitCode> {
    fs::create_dir_all(out)?;
    let eq = cfg.equilibrium()?;
    write_profiles(eq.as_ref(), &out.join("profiles.csv"))?;
    let summary = Summary {
        class: eq.class(),
        domain_params: eq.domain_params(),
        mass: eq.mass(),
        robin_constant: eq.robin_constant(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Timings {
    wall_seconds: f64,
}

#[derive(Serialize)]
struct Manifest {
    schema_version: u32,
    code_version: &'static str,
    /// Stable identifier derived from the resolved configuration.
    run_id: String,
    seed: u64,
    eps: f64,
    config: String,
    env_prefix: &'static str,
    status: &'static str,
    outputs: Vec<String>,
    children: Vec<String>,
    timings: Option<Timings>,
}

impl Manifest {
    fn new(cfg: &Config) -> CliResult<Self> {
        let sim = cfg.simulation()?;
        let config = cfg.to_toml_string()?;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            code_version: env!("CARGO_PKG_VERSION"),
            run_id: run_id(&config),
            seed: sim.seed,
            eps: sim.eps,
            config,
            env_prefix: ENV_PREFIX,
            status: "running",
            outputs: Vec::new(),
            children: Vec::new(),
            timings: None,
        })
    }
}

/// FNV-1a of the configuration echo, as 16 hex digits.
fn run_id(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

fn rel(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).display().to_string()
}

fn cmd_simulate(cfg: &Config, out: &Path) -> CliResult<ExitCode> {
    fs::create_dir_all(out)?;
    let mut manifest = Manifest::new(cfg)?;
    let diag_path = out.join("diagnostics.csv");
    manifest.outputs.push(rel(out, &diag_path));
    let manifest_path = out.join("manifest.json");
    write_json(&manifest_path, &manifest)?;

    let start = Instant::now();
    let snap_dir = out.join("snapshots");
    let mut snapshots = Vec::new();
    let result = pipeline::simulate(cfg, &mut |s| {
        fs::create_dir_all(&snap_dir)?;
        let p = snap_dir.join(format!("particles_{:06}.csv", s.step));
        let g = snap_dir.join(format!("grid_{:06}.csv", s.step));
        write_particles(s.ensemble, BufWriter::new(File::create(&p)?))?;
        write_grid(s.grid, BufWriter::new(File::create(&g)?))?;
        snapshots.push(p);
        snapshots.push(g);
        Ok(())
    });
    manifest
        .outputs
        .extend(snapshots.iter().map(|p| rel(out, p)));
    manifest.timings = Some(Timings {
        wall_seconds: start.elapsed().as_secs_f64(),
    });
    let output = match result {
        Ok(o) => o,
        Err(e) => {
            manifest.status = "failed";
            write_json(&manifest_path, &manifest)?;
            return Err(e.into());
        }
    };
    output.series.write_csv(create(&diag_path)?)?;
    manifest.status = "complete";
    write_json(&manifest_path, &manifest)?;
    println!("{}", diag_path.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SweepSummary {
    eps: Vec<f64>,
    h_decreasing: bool,
    hminus1_decreasing: bool,
    pairing_sup_decreasing: bool,
    band: f64,
}

fn cmd_sweep(cfg: &Config, eps: &[f64], out: &Path) -> CliResult<ExitCode> {
    if eps.len() < 2 {
        return Err(CliError::Usage(
            "a sweep needs at least two eps values (--eps or [sweep] eps)".into(),
        ));
    }
    fs::create_dir_all(out)?;
    let mut manifest = Manifest::new(cfg)?;
    let mut children = Vec::new();
    for (k, e) in eps.iter().enumerate() {
        let dir = out.join(format!("run_{k:02}"));
        fs::create_dir_all(&dir)?;
        let child_cfg = cfg.with_eps(*e)?;
        let mut child = Manifest::new(&child_cfg)?;
        child.outputs.push("diagnostics.csv".into());
        write_json(&dir.join("manifest.json"), &child)?;
        children.push((dir, child));
    }
    manifest.children = children
        .iter()
        .map(|(d, _)| rel(out, &d.join("manifest.json")))
        .collect();
    let sweep_path = out.join("sweep.csv");
    let summary_path = out.join("sweep_summary.json");
    manifest.outputs = vec![rel(out, &sweep_path), rel(out, &summary_path)];
    let manifest_path = out.join("manifest.json");
    write_json(&manifest_path, &manifest)?;

    let start = Instant::now();
    let rows = match pipeline::sweep(cfg, eps) {
        Ok(r) => r,
        Err(e) => {
            manifest.status = "failed";
            write_json(&manifest_path, &manifest)?;
            return Err(e.into());
        }
    };
    let wall = start.elapsed().as_secs_f64();
    for (row, series) in &rows {
        let (dir, child) = children
            .iter_mut()
            .find(|(_, c)| c.eps == row.eps)
            .expect("every sweep row comes from a child run");
        series.write_csv(create(&dir.join("diagnostics.csv"))?)?;
        child.status = "complete";
        write_json(&dir.join("manifest.json"), child)?;
    }
    let summary_rows: Vec<_> = rows.iter().map(|(r, _)| r.clone()).collect();
    write_sweep_csv(&summary_rows, create(&sweep_path)?)?;
    let band = 0.2;
    let col = |f: fn(&pipeline::SweepRow) -> f64| summary_rows.iter().map(f).collect::<Vec<_>>();
    let summary = SweepSummary {
        eps: col(|r| r.eps),
        h_decreasing: decreasing_within(&col(|r| r.h_final), band),
        hminus1_decreasing: decreasing_within(&col(|r| r.hminus1_final), band),
        pairing_sup_decreasing: decreasing_within(&col(|r| r.pairing_sup), band),
        band,
    };
    write_json(&summary_path, &summary)?;
    manifest.status = "complete";
    manifest.timings = Some(Timings { wall_seconds: wall });
    write_json(&manifest_path, &manifest)?;
    println!("{}", sweep_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(names: &[String], out: Option<&Path>) -> CliResult<ExitCode> {
    let reports = run_checks(names)?;
    let text = serde_json::to_string_pretty(&reports)?;
    println!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("verify.json"), format!("{text}\n"))?;
    }
    if reports.iter().all(|r| r.status == Status::Pass) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
