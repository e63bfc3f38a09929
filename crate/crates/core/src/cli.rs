//! Subcommand dispatch and artifact emission.
//!
//! Every subcommand reads one JSON config, writes its outputs into the output
//! directory together with `manifest.json`, and maps the outcome to an exit
//! code: 0 certified or completed, 2 not certified, 3 configuration error,
//! 4 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{certify, min_speed, stability_chart};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::lmi::{build_affine_system, build_blocks};
use crate::lyapunov::{check_decay, check_projection_derivative, DecayOptions};
use crate::sdp::{export_sdpa, verify_certificate, Certificate, SolveStatus};
use crate::wave::simulate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CERTIFIED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stringlmi", version, about = "LMI stability certificates for an ODE coupled to a damped string")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the config's `output` field, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the stability LMI at the configured speeds and order.
    Check(CommonArgs),
    /// Minimum certified wave speed for each configured order.
    Cmin(CommonArgs),
    /// Minimum certified speed over the c0 grid and orders, as CSV.
    Chart(CommonArgs),
    /// Co-simulate the coupled system and evaluate the Lyapunov functional.
    Simulate(CommonArgs),
    /// Re-check a stored certificate with the independent eigenvalue verifier.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Certificate to check; defaults to `<out>/certificate.json`.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Write the stability LMI in SDPA sparse format.
    Export(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Cmin(_) => "cmin",
            Command::Chart(_) => "chart",
            Command::Simulate(_) => "simulate",
            Command::Verify { .. } => "verify",
            Command::Export(_) => "export",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Check(c) | Command::Cmin(c) | Command::Chart(c) | Command::Simulate(c) | Command::Export(c) => c,
            Command::Verify { common, .. } => common,
        }
    }
}

/// Collects outputs and timings for the manifest.
struct Run {
    dir: PathBuf,
    outputs: Vec<String>,
    timings: Vec<(String, f64)>,
}

impl Run {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn timed<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push((label.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> Result<i32> {
    let common = command.common();
    let raw = fs::read(&common.config)
        .map_err(|e| Error::config(crate::Module::Cli, format!("cannot read config {}: {e}", common.config.display())))?;
    let text = String::from_utf8(raw.clone()).map_err(|_| Error::config(crate::Module::Cli, "config is not UTF-8"))?;
    let cfg = RunConfig::from_json(&text)?;
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;

    let started = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let total = Instant::now();
    let mut run = Run { dir, outputs: Vec::new(), timings: Vec::new() };
    let code = match command {
        Command::Check(_) => cmd_check(&cfg, &mut run)?,
        Command::Cmin(_) => cmd_cmin(&cfg, &mut run)?,
        Command::Chart(_) => cmd_chart(&cfg, &mut run)?,
        Command::Simulate(_) => cmd_simulate(&cfg, &mut run)?,
        Command::Verify { certificate, .. } => {
            let path = certificate.clone().unwrap_or_else(|| run.dir.join("certificate.json"));
            cmd_verify(&cfg, &path, &mut run)?
        }
        Command::Export(_) => cmd_export(&cfg, &mut run)?,
    };
    let manifest = json!({
        "command": command.name(),
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": hex::encode(Sha256::digest(&raw)),
        "exit_code": code,
        "started_unix": started,
        "timings_s": run.timings.iter().map(|(k, v)| (k.clone(), json!(v))).chain([("total".to_string(), json!(total.elapsed().as_secs_f64()))]).collect::<serde_json::Map<String, Value>>(),
        "outputs": run.outputs.clone(),
    });
    run.write_json("manifest.json", &manifest)?;
    Ok(code)
}

fn cmd_check(cfg: &RunConfig, run: &mut Run) -> Result<i32> {
    let sys = cfg.system()?;
    let opts = cfg.sweep_options();
    let report = run.timed("solve", || certify(&sys, sys.c(), sys.c0(), cfg.order, &opts))?;
    let verification = match &report.certificate {
        Some(cert) => Some(verify_certificate(&build_blocks(&sys, cfg.order)?, cert, cfg.solver.verify_tolerance)?),
        None => None,
    };
    let certified = report.status == SolveStatus::Feasible && verification.as_ref().is_some_and(|v| v.passed);
    let label = if certified { "certified-stable" } else { "not-certified" };
    run.write_json(
        "certificate.json",
        &json!({
            "status": label,
            "c": sys.c(),
            "c0": sys.c0(),
            "order": cfg.order,
            "certificate": report.certificate,
            "verification": verification,
            "diagnostics": report.diagnostics,
        }),
    )?;
    println!("{label}");
    Ok(if certified { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}

fn cmd_cmin(cfg: &RunConfig, run: &mut Run) -> Result<i32> {
    let sys = cfg.system()?;
    let opts = cfg.sweep_options();
    let mut rows = Vec::new();
    for &order in &cfg.analysis.orders {
        let res = run.timed(&format!("order_{order}"), || min_speed(&sys, sys.c0(), order, cfg.analysis.bracket, &opts))?;
        match res.c_min {
            Some(c) => println!("N={order} c_min={}", crate::analysis::format_sig(c, 6)),
            None => println!("N={order} c_min=none"),
        }
        rows.push(json!({ "order": order, "c0": sys.c0(), "result": res }));
    }
    run.write_json("cmin.json", &json!({ "bracket": cfg.analysis.bracket, "tol": cfg.analysis.tol, "results": rows }))?;
    Ok(EXIT_OK)
}

fn cmd_chart(cfg: &RunConfig, run: &mut Run) -> Result<i32> {
    let sys = cfg.system()?;
    let opts = cfg.sweep_options();
    let chart = run.timed("chart", || {
        stability_chart(&sys, &cfg.analysis.c0_grid, &cfg.analysis.orders, cfg.analysis.bracket, &opts)
    })?;
    run.write("chart.csv", &chart.to_csv())?;
    run.write_json("chart.json", &chart)?;
    print!("{}", chart.to_csv());
    Ok(EXIT_OK)
}

fn cmd_simulate(cfg: &RunConfig, run: &mut Run) -> Result<i32> {
    let sys = cfg.system()?;
    let sim = cfg.sim_options();
    let traj = run.timed("simulate", || simulate(&sys, &cfg.simulation.ic, &sim))?;
    run.write("trajectory.csv", &traj.to_csv())?;
    if !traj.snapshots.is_empty() {
        run.write("snapshots.csv", &traj.snapshots_csv())?;
    }

    let mut lyapunov = Value::Null;
    let mut projection = Value::Null;
    if traj.snapshots.len() >= 2 {
        let report = run.timed("solve", || certify(&sys, sys.c(), sys.c0(), cfg.order, &cfg.sweep_options()))?;
        if let Some(cert) = report.certificate.filter(|_| report.status == SolveStatus::Feasible) {
            let opts = DecayOptions { verify_tolerance: cfg.solver.verify_tolerance, ..DecayOptions::default() };
            let series = run.timed("lyapunov", || check_decay(&traj, &sys, &cert, &opts))?;
            run.write("lyapunov.csv", &series.to_csv())?;
            lyapunov = json!({
                "order": cfg.order,
                "nonincreasing": series.nonincreasing,
                "max_increment": series.max_increment,
                "tolerance": series.tolerance,
                "decay_constant": opts.constant,
                "delta_hat": series.delta_hat,
                "ratio_band": series.ratio_band,
            });
        }
        if traj.snapshots.len() >= 3 {
            let res = check_projection_derivative(&traj, cfg.order, f64::INFINITY)?;
            projection = json!({ "max_residual": res.max_residual, "mean_residual": res.mean_residual, "max_derivative": res.max_derivative });
        }
    }
    let summary = json!({
        "classification": traj.classification,
        "hnorm_initial": traj.initial_hnorm(),
        "hnorm_final": traj.final_hnorm(),
        "t_end": traj.records.last().map(|r| r.t),
        "dt": traj.dt,
        "m": traj.m,
        "scheme": sim.scheme,
        "ode": sim.ode,
        "lyapunov": lyapunov,
        "projection_residual": projection,
    });
    run.write_json("simulation.json", &summary)?;
    println!("{}", serde_json::to_string(&traj.classification)?.trim_matches('"'));
    Ok(EXIT_OK)
}

fn cmd_verify(cfg: &RunConfig, path: &Path, run: &mut Run) -> Result<i32> {
    let sys = cfg.system()?;
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(crate::Module::Cli, format!("cannot read certificate {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)?;
    // accepts either a bare certificate or the document written by `check`
    let cert_value = value.get("certificate").cloned().unwrap_or(value);
    if cert_value.is_null() {
        return Err(Error::precondition(crate::Module::Cli, "certificate file holds no certificate"));
    }
    let cert: Certificate = serde_json::from_value(cert_value)?;
    let order = cert.matrices.as_ref().map_or(cfg.order, |m| m.order);
    let report = run.timed("verify", || -> Result<_> { verify_certificate(&build_blocks(&sys, order)?, &cert, cfg.solver.verify_tolerance) })?;
    run.write_json("verification.json", &report)?;
    println!("{}", if report.passed { "verified" } else { "rejected" });
    Ok(if report.passed { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}

fn cmd_export(cfg: &RunConfig, run: &mut Run) -> Result<i32> {
    let sys = cfg.system()?;
    let system = build_affine_system(&build_blocks(&sys, cfg.order)?, cfg.solver.margin)?;
    run.write("problem.dat-s", &export_sdpa(&system))?;
    Ok(EXIT_OK)
}
