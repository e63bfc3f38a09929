//! Parameter studies over `(c, c₀, N)`: minimum certified wave speed,
//! stability charts, and checks of the order hierarchy.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Module, Result};
use crate::legendre::MAX_ORDER;
use crate::linalg::max_eigenvalue;
use crate::lmi::{assemble_psi, build_affine_system, build_blocks, SystemDescription};
use crate::sdp::{solve_feasibility, Certificate, SolveReport, SolveStatus, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub margin: f64,
    pub solver: SolverOptions,
    /// Points in the coarse scan over the bracket.
    pub scan_points: usize,
    /// Bisection tolerance on `c`.
    pub tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { margin: 1e-6, solver: SolverOptions::default(), scan_points: 32, tol: 1e-2 }
    }
}

/// Solves the order-`N` stability LMI for `sys` at speeds `(c, c₀)`.
pub fn certify(sys: &SystemDescription, c: f64, c0: f64, order: usize, opts: &SweepOptions) -> Result<SolveReport> {
    let sys = sys.with_speeds(c, c0)?;
    let blocks = build_blocks(&sys, order)?;
    let affine = build_affine_system(&blocks, opts.margin)?;
    Ok(solve_feasibility(&affine, &opts.solver))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinSpeed {
    /// Smallest certified speed found, `None` when no scan point certifies.
    pub c_min: Option<f64>,
    /// Largest speed known not certified below `c_min`.
    pub below: Option<f64>,
    pub solves: usize,
    /// Every certificate produced during the search, keyed by `c`.
    #[serde(skip)]
    pub certificates: Vec<(f64, Certificate)>,
}

/// Coarse scan of the bracket for the first certified speed, then bisection
/// between it and the preceding uncertified scan point.
pub fn min_speed(sys: &SystemDescription, c0: f64, order: usize, bracket: (f64, f64), opts: &SweepOptions) -> Result<MinSpeed> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::domain(Module::Analysis, format!("invalid bracket [{lo}, {hi}]")));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::domain(Module::Analysis, "bisection tolerance must be positive"));
    }
    if opts.scan_points < 2 {
        return Err(Error::config(Module::Analysis, "scan needs at least two points"));
    }
    let mut solves = 0;
    let mut certificates = Vec::new();
    let mut feasible = |c: f64| -> Result<bool> {
        solves += 1;
        let report = certify(sys, c, c0, order, opts)?;
        match (report.status, report.certificate) {
            (SolveStatus::Feasible, Some(cert)) => {
                certificates.push((c, cert));
                Ok(true)
            }
            _ => Ok(false),
        }
    };

    let step = (hi - lo) / (opts.scan_points - 1) as f64;
    let mut prev_infeasible = None;
    let mut first_feasible = None;
    for i in 0..opts.scan_points {
        let c = if i + 1 == opts.scan_points { hi } else { lo + i as f64 * step };
        if feasible(c)? {
            first_feasible = Some(c);
            break;
        }
        prev_infeasible = Some(c);
    }
    let Some(mut upper) = first_feasible else {
        return Ok(MinSpeed { c_min: None, below: prev_infeasible, solves, certificates });
    };
    let Some(mut lower) = prev_infeasible else {
        return Ok(MinSpeed { c_min: Some(upper), below: None, solves, certificates });
    };
    while upper - lower > opts.tol {
        let mid = 0.5 * (lower + upper);
        if feasible(mid)? {
            upper = mid;
        } else {
            lower = mid;
        }
    }
    Ok(MinSpeed { c_min: Some(upper), below: Some(lower), solves, certificates })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Found { c_min: f64 },
    None,
    Error { message: String },
}

impl CellOutcome {
    pub fn c_min(&self) -> Option<f64> {
        match self {
            CellOutcome::Found { c_min } => Some(*c_min),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            CellOutcome::Found { .. } => "found",
            CellOutcome::None => "none",
            CellOutcome::Error { .. } => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartCell {
    pub c0: f64,
    pub order: usize,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartMetadata {
    pub system_hash: String,
    pub margin: f64,
    pub bracket: (f64, f64),
    pub tol: f64,
    pub scan_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityChart {
    pub c0_grid: Vec<f64>,
    pub orders: Vec<usize>,
    /// Row-major by `c0_grid` index, then by `orders` index.
    pub cells: Vec<ChartCell>,
    pub metadata: ChartMetadata,
}

impl StabilityChart {
    pub fn cell(&self, c0_index: usize, order_index: usize) -> &ChartCell {
        &self.cells[c0_index * self.orders.len() + order_index]
    }

    /// `c_min` per order for one `c₀` column.
    pub fn column(&self, c0_index: usize) -> Vec<Option<f64>> {
        (0..self.orders.len()).map(|k| self.cell(c0_index, k).outcome.c_min()).collect()
    }

    /// Defined `c_min` values are nonincreasing in `N` within `slack`.
    pub fn is_hierarchical(&self, slack: f64) -> bool {
        let mut order_idx: Vec<usize> = (0..self.orders.len()).collect();
        order_idx.sort_by_key(|&k| self.orders[k]);
        (0..self.c0_grid.len()).all(|i| {
            let col: Vec<f64> = order_idx.iter().filter_map(|&k| self.cell(i, k).outcome.c_min()).collect();
            col.windows(2).all(|w| w[1] <= w[0] + slack)
        })
    }

    /// CSV with header `c0,N,c_min,status`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("c0,N,c_min,status\n");
        for cell in &self.cells {
            let c_min = cell.outcome.c_min().map(|v| format_sig(v, 6)).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", format_sig(cell.c0, 6), cell.order, c_min, cell.outcome.status());
        }
        out
    }
}

/// `v` rounded to `digits` significant digits, plain decimal notation.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// SHA-256 over the row-major system matrices (speeds excluded).
pub fn system_hash(sys: &SystemDescription) -> String {
    let mut hasher = Sha256::new();
    for m in [sys.a(), sys.b(), sys.k()] {
        hasher.update((m.nrows() as u64).to_le_bytes());
        hasher.update((m.ncols() as u64).to_le_bytes());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                hasher.update(m[(i, j)].to_le_bytes());
            }
        }
    }
    hex::encode(hasher.finalize())
}

/// `min_speed` for every `(c₀, N)`; cells run in parallel and failures stay local.
pub fn stability_chart(
    sys: &SystemDescription,
    c0_grid: &[f64],
    orders: &[usize],
    bracket: (f64, f64),
    opts: &SweepOptions,
) -> Result<StabilityChart> {
    if c0_grid.is_empty() {
        return Err(Error::config(Module::Analysis, "c0 grid is empty"));
    }
    if orders.is_empty() {
        return Err(Error::config(Module::Analysis, "order list is empty"));
    }
    let jobs: Vec<(f64, usize)> = c0_grid.iter().flat_map(|&c0| orders.iter().map(move |&n| (c0, n))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(c0, order)| {
            let outcome = match min_speed(sys, c0, order, bracket, opts) {
                Ok(MinSpeed { c_min: Some(c), .. }) => CellOutcome::Found { c_min: c },
                Ok(MinSpeed { c_min: None, .. }) => CellOutcome::None,
                Err(e) => CellOutcome::Error { message: e.to_string() },
            };
            ChartCell { c0, order, outcome }
        })
        .collect();
    Ok(StabilityChart {
        c0_grid: c0_grid.to_vec(),
        orders: orders.to_vec(),
        cells,
        metadata: ChartMetadata {
            system_hash: system_hash(sys),
            margin: opts.margin,
            bracket,
            tol: opts.tol,
            scan_points: opts.scan_points,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddedCandidate {
    pub eps: f64,
    pub max_eig_psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub order: usize,
    pub base_slack: f64,
    /// `Ψ_{N+1}` at `P_{N+1} = diag(P_N, ε'I₂)` with the same `S`, `R`.
    pub padded: Vec<PaddedCandidate>,
    pub next_status: SolveStatus,
    pub next_slack: f64,
}

/// Lifts an order-`N` certificate to order `N+1` and re-solves at `N+1`.
pub fn hierarchy_check(sys: &SystemDescription, order: usize, opts: &SweepOptions) -> Result<HierarchyReport> {
    if order >= MAX_ORDER {
        return Err(Error::config(Module::Analysis, format!("order {order} has no successor within the supported maximum {MAX_ORDER}")));
    }
    let base = certify(sys, sys.c(), sys.c0(), order, opts)?;
    let cert = match (&base.status, &base.certificate) {
        (SolveStatus::Feasible, Some(cert)) => cert,
        _ => return Err(Error::precondition(Module::Analysis, format!("instance is not certified at order {order}"))),
    };
    let mats = cert.matrices.as_ref().expect("stability LMI certificates carry matrices");
    let next_blocks = build_blocks(sys, order + 1)?;
    let nx = mats.p.nrows();
    let scale = max_eigenvalue(&mats.p);
    let padded = (4..=8)
        .map(|e| {
            let eps = 10f64.powi(-e) * scale;
            let mut p = nalgebra::DMatrix::zeros(nx + 2, nx + 2);
            p.view_mut((0, 0), (nx, nx)).copy_from(&mats.p);
            p[(nx, nx)] = eps;
            p[(nx + 1, nx + 1)] = eps;
            let psi = assemble_psi(&next_blocks, &p, &mats.s, &mats.r)?;
            Ok(PaddedCandidate { eps, max_eig_psi: max_eigenvalue(&psi) })
        })
        .collect::<Result<Vec<_>>>()?;
    let next = solve_feasibility(&build_affine_system(&next_blocks, opts.margin)?, &opts.solver);
    Ok(HierarchyReport {
        order,
        base_slack: cert.slack,
        padded,
        next_status: next.status,
        next_slack: next.diagnostics.slack,
    })
}
