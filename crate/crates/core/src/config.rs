//! JSON run configuration shared by all subcommands.
//!
//! Matrices are row-major nested arrays. Every block except `system` is
//! optional and falls back to the module defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::SweepOptions;
use crate::error::{Error, Module, Result};
use crate::legendre::MAX_ORDER;
use crate::linalg::from_rows;
use crate::lmi::{presets, SystemDescription};
use crate::sdp::{SolverOptions, VERIFY_TOL};
use crate::wave::{InitialCondition, OdeIntegrator, Scheme, SimOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// One of `hurwitz_pair`, `open_loop_unstable`, `closed_loop_unstable`.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub k: Option<Vec<Vec<f64>>>,
    pub c: f64,
    pub c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub orders: Vec<usize>,
    pub bracket: (f64, f64),
    pub tol: f64,
    pub scan_points: usize,
    pub c0_grid: Vec<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { orders: vec![0, 1, 2], bracket: (1.0, 20.0), tol: 1e-2, scan_points: 32, c0_grid: vec![0.5, 1.0, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub m: usize,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub scheme: Scheme,
    pub ode: OdeIntegrator,
    pub snapshot_stride: Option<usize>,
    pub ic: InitialCondition,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            m: 200,
            dt: None,
            t_end: None,
            scheme: Scheme::default(),
            ode: OdeIntegrator::default(),
            snapshot_stride: None,
            ic: InitialCondition::Cosine { x0: vec![1.0, 1.0] },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Strictness margin `ε` of every LMI block.
    pub margin: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub verify_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self { margin: 1e-6, max_iterations: s.max_iterations, tolerance: s.tolerance, verify_tolerance: VERIFY_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    /// Order `N` used by `check`, `verify`, `export` and `simulate`.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Used when no output directory is given on the command line.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_order() -> usize {
    1
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::config(Module::Cli, msg)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn matrix(name: &str, rows: &Option<Vec<Vec<f64>>>) -> Result<nalgebra::DMatrix<f64>> {
    let rows = rows.as_ref().ok_or_else(|| invalid(format!("system.{name} is required without a preset")))?;
    from_rows(rows).ok_or_else(|| invalid(format!("system.{name} must be a nonempty rectangular array")))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| invalid(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn system(&self) -> Result<SystemDescription> {
        let s = &self.system;
        match &s.preset {
            Some(name) => {
                if s.a.is_some() || s.b.is_some() || s.k.is_some() {
                    return Err(invalid("system gives both a preset and explicit matrices"));
                }
                positive("system.c", s.c)?;
                positive("system.c0", s.c0)?;
                presets::by_name(name, s.c, s.c0).ok_or_else(|| invalid(format!("unknown system preset `{name}`")))
            }
            None => SystemDescription::new(matrix("a", &s.a)?, matrix("b", &s.b)?, matrix("k", &s.k)?, s.c, s.c0)
                .map_err(|e| invalid(e.to_string())),
        }
    }

    /// Checks every field against the preconditions of the module it feeds.
    pub fn validate(&self) -> Result<()> {
        let sys = self.system()?;
        if self.order > MAX_ORDER {
            return Err(invalid(format!("order {} exceeds the supported maximum {MAX_ORDER}", self.order)));
        }

        let a = &self.analysis;
        if let Some(&bad) = a.orders.iter().find(|&&n| n > MAX_ORDER) {
            return Err(invalid(format!("analysis order {bad} exceeds the supported maximum {MAX_ORDER}")));
        }
        positive("analysis.bracket lower end", a.bracket.0)?;
        if !(a.bracket.1.is_finite() && a.bracket.1 > a.bracket.0) {
            return Err(invalid(format!("analysis.bracket [{}, {}] is not an increasing interval", a.bracket.0, a.bracket.1)));
        }
        positive("analysis.tol", a.tol)?;
        if a.scan_points < 2 {
            return Err(invalid("analysis.scan_points must be at least 2"));
        }
        for &c0 in &a.c0_grid {
            positive("analysis.c0_grid entry", c0)?;
        }

        let s = &self.simulation;
        if s.m < 2 {
            return Err(invalid("simulation.m must be at least 2"));
        }
        if let Some(dt) = s.dt {
            positive("simulation.dt", dt)?;
            let courant = sys.c() * dt * s.m as f64;
            if courant > crate::wave::CFL_MAX * (1.0 + 1e-12) {
                return Err(invalid(format!("simulation.dt gives Courant number {courant} above {}", crate::wave::CFL_MAX)));
            }
        }
        if let Some(t) = s.t_end {
            positive("simulation.t_end", t)?;
        }
        if s.snapshot_stride == Some(0) {
            return Err(invalid("simulation.snapshot_stride must be positive"));
        }
        match &s.ic {
            InitialCondition::Cosine { x0 } | InitialCondition::Samples { x0, .. } if x0.len() != sys.n() => {
                return Err(invalid(format!("simulation.ic.x0 has length {}, system order is {}", x0.len(), sys.n())));
            }
            _ => {}
        }

        let v = &self.solver;
        positive("solver.margin", v.margin)?;
        positive("solver.tolerance", v.tolerance)?;
        positive("solver.verify_tolerance", v.verify_tolerance)?;
        if v.max_iterations == 0 {
            return Err(invalid("solver.max_iterations must be positive"));
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            max_iterations: self.solver.max_iterations,
            tolerance: self.solver.tolerance,
            verify_tolerance: self.solver.verify_tolerance,
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            margin: self.solver.margin,
            solver: self.solver_options(),
            scan_points: self.analysis.scan_points,
            tol: self.analysis.tol,
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        let s = &self.simulation;
        SimOptions { m: s.m, dt: s.dt, t_end: s.t_end, scheme: s.scheme, ode: s.ode, snapshot_stride: s.snapshot_stride }
    }
}
