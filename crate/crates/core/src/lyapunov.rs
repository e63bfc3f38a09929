//! Evaluation of the Lyapunov functionals along simulated trajectories.
//!
//! `V_N(X, u) = X_Nᵀ P X_N + ∫ χᵀ (S + xR) χ` with `X_N = [X; 𝔛_0; …; 𝔛_N]`,
//! where the projections are taken with trapezoid weights on the simulator grid.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::legendre::{ell, LegendreBasis, QuadratureRule};
use crate::lmi::{build_blocks, SystemDescription};
use crate::sdp::{verify_certificate, Certificate, CertificateMatrices, VERIFY_TOL};
use crate::wave::{hnorm_squared, riemann_chi, trapezoid, FieldState, Trajectory, TrajectoryRecord};

/// Default constant in the decrease tolerance `C (Δt + Δx²) V(0)`.
pub const DECAY_CONSTANT: f64 = 10.0;

fn check_symmetric(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if m.shape() != (2, 2) {
        return Err(Error::domain(Module::Lyapunov, format!("{name} must be 2×2")));
    }
    if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * (1.0 + m.abs().max()) {
        return Err(Error::domain(Module::Lyapunov, format!("{name} is not symmetric")));
    }
    Ok(())
}

/// `∫_0^1 χᵀ(x) (S + xR) χ(x) dx`
pub fn evaluate_calv(state: &FieldState, c: f64, s: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<f64> {
    check_symmetric("S", s)?;
    check_symmetric("R", r)?;
    Ok(calv_unchecked(&riemann_chi(state, c), s, r))
}

fn calv_unchecked(chi: &[[f64; 2]], s: &DMatrix<f64>, r: &DMatrix<f64>) -> f64 {
    let m = chi.len() - 1;
    let f: Vec<f64> = chi
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let x = i as f64 / m as f64;
            let w = |a: usize, b: usize| s[(a, b)] + x * r[(a, b)];
            w(0, 0) * q[0] * q[0] + 2.0 * w(0, 1) * q[0] * q[1] + w(1, 1) * q[1] * q[1]
        })
        .collect();
    trapezoid(&f)
}

/// Evaluates `V_N` for states on one fixed grid.
#[derive(Debug, Clone)]
pub struct Functional {
    c: f64,
    matrices: CertificateMatrices,
    basis: LegendreBasis,
}

impl Functional {
    pub fn new(c: f64, matrices: &CertificateMatrices, n: usize, m: usize) -> Result<Self> {
        let nx = n + 2 * (matrices.order + 1);
        if matrices.p.shape() != (nx, nx) {
            return Err(Error::domain(
                Module::Lyapunov,
                format!("P is {}×{}, order {} with n = {n} needs {nx}×{nx}", matrices.p.nrows(), matrices.p.ncols(), matrices.order),
            ));
        }
        check_symmetric("S", &matrices.s)?;
        check_symmetric("R", &matrices.r)?;
        let basis = LegendreBasis::new(matrices.order, QuadratureRule::Trapezoid { intervals: m })?;
        Ok(Self { c, matrices: matrices.clone(), basis })
    }

    /// `X_N = [X; 𝔛_0; …; 𝔛_N]`
    pub fn augmented_state(&self, state: &FieldState) -> Result<DVector<f64>> {
        let chi = riemann_chi(state, self.c);
        self.augmented_from_chi(state, &chi)
    }

    fn augmented_from_chi(&self, state: &FieldState, chi: &[[f64; 2]]) -> Result<DVector<f64>> {
        if state.x.len() + 2 * (self.matrices.order + 1) != self.matrices.p.nrows() {
            return Err(Error::domain(Module::Lyapunov, "state dimension does not match the certificate"));
        }
        let proj = self.basis.project(chi, self.matrices.order)?;
        Ok(DVector::from_iterator(
            self.matrices.p.nrows(),
            state.x.iter().copied().chain(proj.stacked()),
        ))
    }

    pub fn evaluate(&self, state: &FieldState) -> Result<f64> {
        let chi = riemann_chi(state, self.c);
        let xn = self.augmented_from_chi(state, &chi)?;
        let quad = (xn.transpose() * &self.matrices.p * &xn)[(0, 0)];
        Ok(quad + calv_unchecked(&chi, &self.matrices.s, &self.matrices.r))
    }
}

/// `V_N(X_N, u) = X_Nᵀ P_N X_N + 𝒱(u)` for the certificate's order.
pub fn evaluate_v(state: &FieldState, c: f64, matrices: &CertificateMatrices) -> Result<f64> {
    Functional::new(c, matrices, state.x.len(), state.m())?.evaluate(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    pub constant: f64,
    pub verify_tolerance: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self { constant: DECAY_CONSTANT, verify_tolerance: VERIFY_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSeries {
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    pub hnorm2: Vec<f64>,
    /// Least-squares decay rate of `log V` over the tail half; `None` when undefined.
    pub delta_hat: Option<f64>,
    /// Largest forward difference `V(t_{i+1}) − V(t_i)`.
    pub max_increment: f64,
    /// `C (Δt + Δx²) V(0)`
    pub tolerance: f64,
    pub nonincreasing: bool,
    /// `[min, max]` of `V / ‖·‖²_H` over nonzero states.
    pub ratio_band: Option<(f64, f64)>,
}

impl LyapunovSeries {
    /// The band of `V / ‖·‖²_H` excludes 0 and ∞.
    pub fn ratio_band_ok(&self) -> bool {
        matches!(self.ratio_band, Some((lo, hi)) if lo > 0.0 && hi.is_finite())
    }

    /// CSV with header `t,V,hnorm2,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,V,hnorm2,ratio\n");
        for ((t, v), h) in self.times.iter().zip(&self.v).zip(&self.hnorm2) {
            let ratio = if *h > 0.0 { format!("{:e}", v / h) } else { String::new() };
            let _ = writeln!(out, "{t},{v:e},{h:e},{ratio}");
        }
        out
    }
}

fn certified_matrices<'a>(sys: &SystemDescription, cert: &'a Certificate, tol: f64) -> Result<&'a CertificateMatrices> {
    let mats = cert
        .matrices
        .as_ref()
        .ok_or_else(|| Error::precondition(Module::Lyapunov, "certificate carries no Lyapunov matrices"))?;
    let blocks = build_blocks(sys, mats.order)?;
    let report = verify_certificate(&blocks, cert, tol)?;
    if !report.passed {
        return Err(Error::precondition(
            Module::Lyapunov,
            format!("certificate rejected by the verifier: {}", report.failures.join("; ")),
        ));
    }
    Ok(mats)
}

fn check_trajectory(sys: &SystemDescription, traj: &Trajectory, min_snapshots: usize) -> Result<()> {
    if (sys.c() - traj.c).abs() > 1e-12 * sys.c() || (sys.c0() - traj.c0).abs() > 1e-12 * (1.0 + sys.c0()) {
        return Err(Error::config(Module::Lyapunov, "trajectory was simulated with different speeds"));
    }
    if traj.snapshots.len() < min_snapshots {
        return Err(Error::precondition(
            Module::Lyapunov,
            format!("{} field snapshots stored, at least {min_snapshots} needed", traj.snapshots.len()),
        ));
    }
    Ok(())
}

/// `V_N` along the stored snapshots with decrease, rate and norm-equivalence checks.
pub fn check_decay(traj: &Trajectory, sys: &SystemDescription, cert: &Certificate, opts: &DecayOptions) -> Result<LyapunovSeries> {
    let mats = certified_matrices(sys, cert, opts.verify_tolerance)?;
    check_trajectory(sys, traj, 2)?;
    let functional = Functional::new(sys.c(), mats, sys.n(), traj.m)?;
    let mut v = Vec::with_capacity(traj.snapshots.len());
    for s in &traj.snapshots {
        v.push(functional.evaluate(s)?);
    }
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let hnorm2: Vec<f64> = traj.snapshots.iter().map(|s| hnorm_squared(s, sys.c())).collect();

    let max_increment = v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let dx = traj.dx();
    let tolerance = opts.constant * (traj.dt + dx * dx) * v[0];
    let nonincreasing = max_increment <= tolerance;

    let tail = v.len() / 2;
    let delta_hat = fit_rate(&times[tail..], &v[tail..]);

    let ratios: Vec<f64> = v.iter().zip(&hnorm2).filter(|(_, h)| **h > 0.0).map(|(v, h)| v / h).collect();
    let ratio_band = if ratios.is_empty() {
        None
    } else {
        Some((ratios.iter().copied().fold(f64::INFINITY, f64::min), ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
    };
    Ok(LyapunovSeries { times, v, hnorm2, delta_hat, max_increment, tolerance, nonincreasing, ratio_band })
}

/// `−slope` of the least-squares line through `(t, log V)`.
fn fit_rate(t: &[f64], v: &[f64]) -> Option<f64> {
    if t.len() < 2 || v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return None;
    }
    let n = t.len() as f64;
    let logs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let tm = t.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|x| (x - tm).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = t.iter().zip(&logs).map(|(x, y)| (x - tm) * (y - lm)).sum();
    Some(-sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResidual {
    pub order: usize,
    /// Largest entry of the interval residual over all snapshot intervals.
    pub max_residual: f64,
    /// Time average of the per-interval largest entry.
    pub mean_residual: f64,
    /// Largest difference quotient of the projections, for scale.
    pub max_derivative: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Boundary values `(χ(0), χ(1))` from one trajectory record.
fn boundary_chi(r: &TrajectoryRecord, c: f64) -> ([f64; 2], [f64; 2]) {
    (
        [r.ut0 + c * r.ux0, r.ut1 - c * r.ux1],
        [r.ut1 + c * r.ux1, r.ut0 - c * r.ux0],
    )
}

/// Residual of the projection dynamics `𝔛̇ = c(𝟙χ(1) − 𝟙̄χ(0) − L𝔛)` over each
/// snapshot interval `[t_i, t_{i+1}]`: the difference quotient of the
/// projections against the interval mean of the right-hand side, with the
/// boundary values integrated over every time step. The interval form stays
/// meaningful when `χ` carries fronts, where pointwise derivatives do not.
pub fn check_projection_derivative(traj: &Trajectory, order: usize, tol: f64) -> Result<ProjectionResidual> {
    if traj.snapshots.len() < 3 {
        return Err(Error::precondition(
            Module::Lyapunov,
            format!("{} field snapshots stored, at least 3 needed", traj.snapshots.len()),
        ));
    }
    let strides: Vec<usize> = traj.snapshot_steps.windows(2).map(|w| w[1] - w[0]).collect();
    if strides.iter().any(|&s| s != strides[0]) {
        return Err(Error::precondition(Module::Lyapunov, "snapshots are not uniformly spaced"));
    }
    let stride = strides[0];
    let h = stride as f64 * traj.dt;
    let c = traj.c;
    let basis = LegendreBasis::new(order, QuadratureRule::Trapezoid { intervals: traj.m })?;
    let projections = traj
        .snapshots
        .iter()
        .map(|s| basis.project(&riemann_chi(s, c), order))
        .collect::<Result<Vec<_>>>()?;

    let mut max_residual = 0.0f64;
    let mut sum_residual = 0.0;
    let mut max_derivative = 0.0f64;
    for i in 0..projections.len() - 1 {
        let first = traj.snapshot_steps[i];
        let (p0, p1) = (projections[i].entries(), projections[i + 1].entries());
        let mut worst = 0.0f64;
        for k in 0..=order {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for comp in 0..2 {
                let mut boundary = 0.0;
                for n in first..=first + stride {
                    let w = if n == first || n == first + stride { 0.5 } else { 1.0 };
                    let (at0, at1) = boundary_chi(&traj.records[n], c);
                    boundary += w * (at1[comp] - sign * at0[comp]);
                }
                boundary /= stride as f64;
                let lx: f64 = (0..=k).map(|j| ell(k, j) * 0.5 * (p0[j][comp] + p1[j][comp])).sum();
                let quotient = (p1[k][comp] - p0[k][comp]) / h;
                worst = worst.max((quotient - c * (boundary - lx)).abs());
                max_derivative = max_derivative.max(quotient.abs());
            }
        }
        max_residual = max_residual.max(worst);
        sum_residual += worst;
    }
    let mean_residual = sum_residual / (projections.len() - 1) as f64;
    Ok(ProjectionResidual { order, max_residual, mean_residual, max_derivative, tolerance: tol, passed: max_residual <= tol })
}
