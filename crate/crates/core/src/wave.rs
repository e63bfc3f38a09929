//! Finite-difference co-simulation of the ODE coupled to the damped string.
//!
//! The field lives on the uniform grid `x_i = i/M`. The left end follows the
//! ODE through `u(0) = K X`; the right end uses a ghost node for
//! `u_x(1) = −c₀ u_t(1)`. Norms use the trapezoid rule on the same grid.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::lmi::SystemDescription;

/// Largest accepted Courant number `c Δt / Δx`.
pub const CFL_MAX: f64 = 0.5;
/// Default tolerance for the initial boundary compatibility checks.
pub const COMPAT_TOL: f64 = 1e-6;
pub const DECAY_FACTOR: f64 = 0.01;
pub const GROWTH_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    /// Displacement at `x_i = i/M`.
    pub u: Vec<f64>,
    /// Velocity `u_t` at the same nodes.
    pub v: Vec<f64>,
    pub x: DVector<f64>,
}

impl FieldState {
    pub fn zero(n: usize, m: usize) -> Self {
        Self { t: 0.0, u: vec![0.0; m + 1], v: vec![0.0; m + 1], x: DVector::zeros(n) }
    }

    /// Number of grid intervals.
    pub fn m(&self) -> usize {
        self.u.len() - 1
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.m() as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let dx = self.dx();
        (0..=self.m()).map(move |i| i as f64 * dx)
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).chain(self.x.iter()).all(|v| v.is_finite())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            t: self.t,
            u: self.u.iter().map(|v| alpha * v).collect(),
            v: self.v.iter().map(|v| alpha * v).collect(),
            x: &self.x * alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Zero,
    /// `u⁰(x) = (cos πx + 1) K X₀ / 2`, `v⁰ = 0`.
    Cosine { x0: Vec<f64> },
    /// Grid samples of `u⁰`, `v⁰` (length `M + 1`) and `X₀`.
    Samples { u: Vec<f64>, v: Vec<f64>, x0: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Velocity first, then displacement with the new velocity; the
    /// damping term at `x = 1` is taken implicitly.
    #[default]
    Leapfrog,
    /// Both fields advanced from the old state.
    ForwardEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeIntegrator {
    #[default]
    Euler,
    Rk4,
}

pub fn init_state(sys: &SystemDescription, m: usize, ic: &InitialCondition) -> Result<FieldState> {
    init_state_with_tol(sys, m, ic, COMPAT_TOL)
}

pub fn init_state_with_tol(sys: &SystemDescription, m: usize, ic: &InitialCondition, tol: f64) -> Result<FieldState> {
    if m < 2 {
        return Err(Error::config(Module::WaveSim, format!("grid needs at least 2 intervals, got {m}")));
    }
    let n = sys.n();
    let check_x0 = |x0: &[f64]| -> Result<DVector<f64>> {
        if x0.len() != n {
            return Err(Error::dimension(Module::WaveSim, format!("X0 has length {}, system order is {n}", x0.len())));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(Module::WaveSim, "X0 must be finite"));
        }
        Ok(DVector::from_column_slice(x0))
    };
    let state = match ic {
        InitialCondition::Zero => return Ok(FieldState::zero(n, m)),
        InitialCondition::Cosine { x0 } => {
            let x = check_x0(x0)?;
            let kx = (sys.k() * &x)[0];
            let dx = 1.0 / m as f64;
            let u = (0..=m).map(|i| ((std::f64::consts::PI * i as f64 * dx).cos() + 1.0) * kx / 2.0).collect();
            FieldState { t: 0.0, u, v: vec![0.0; m + 1], x }
        }
        InitialCondition::Samples { u, v, x0 } => {
            if u.len() != m + 1 || v.len() != m + 1 {
                return Err(Error::dimension(
                    Module::WaveSim,
                    format!("field samples have lengths {}/{}, grid has {} nodes", u.len(), v.len(), m + 1),
                ));
            }
            if u.iter().chain(v).any(|s| !s.is_finite()) {
                return Err(Error::config(Module::WaveSim, "initial field samples must be finite"));
            }
            FieldState { t: 0.0, u: u.clone(), v: v.clone(), x: check_x0(x0)? }
        }
    };
    let scale = 1.0 + state.u.iter().chain(&state.v).fold(0.0f64, |a, s| a.max(s.abs()));
    let dirichlet = (state.u[0] - (sys.k() * &state.x)[0]).abs();
    if dirichlet > tol * scale {
        return Err(Error::Compatibility(format!("u0(0) differs from K X0 by {dirichlet:e}")));
    }
    // the cosine profile has u_x(1) = 0 and v = 0 exactly; samples use the
    // one-sided slope, allowing for its truncation error estimated from the
    // third difference
    let (neumann, truncation) = match ic {
        InitialCondition::Samples { .. } => {
            let u = &state.u;
            let third = if m >= 3 { (u[m] - 3.0 * u[m - 1] + 3.0 * u[m - 2] - u[m - 3]).abs() } else { 0.0 };
            ((ux_right(u) + sys.c0() * state.v[m]).abs(), third * m as f64)
        }
        _ => (0.0, 0.0),
    };
    if neumann > tol * scale + truncation {
        return Err(Error::Compatibility(format!("u0_x(1) + c0 v0(1) = {neumann:e}")));
    }
    Ok(state)
}

/// Second-order one-sided `u_x(0)`.
fn ux_left(u: &[f64]) -> f64 {
    let dx = 1.0 / (u.len() - 1) as f64;
    (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx)
}

/// Second-order one-sided `u_x(1)`.
fn ux_right(u: &[f64]) -> f64 {
    let m = u.len() - 1;
    let dx = 1.0 / m as f64;
    (3.0 * u[m] - 4.0 * u[m - 1] + u[m - 2]) / (2.0 * dx)
}

/// `u_x` on the grid: central differences inside, one-sided at the ends.
pub fn gradient(u: &[f64]) -> Vec<f64> {
    let m = u.len() - 1;
    let dx = 1.0 / m as f64;
    let mut g = Vec::with_capacity(m + 1);
    g.push(ux_left(u));
    g.extend((1..m).map(|i| (u[i + 1] - u[i - 1]) / (2.0 * dx)));
    g.push(ux_right(u));
    g
}

/// Trapezoid rule on the uniform grid.
pub fn trapezoid(f: &[f64]) -> f64 {
    let m = f.len() - 1;
    let dx = 1.0 / m as f64;
    dx * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[m]))
}

fn sq_norm(f: &[f64]) -> f64 {
    trapezoid(&f.iter().map(|v| v * v).collect::<Vec<_>>())
}

/// `|X|² + ‖u‖² + c²‖u_x‖² + ‖u_t‖²`
pub fn hnorm_squared(state: &FieldState, c: f64) -> f64 {
    state.x.norm_squared() + sq_norm(&state.u) + c * c * sq_norm(&gradient(&state.u)) + sq_norm(&state.v)
}

pub fn hnorm(state: &FieldState, c: f64) -> f64 {
    hnorm_squared(state, c).sqrt()
}

/// Riemann coordinates `χ(x) = [u_t(x) + c u_x(x); u_t(1−x) − c u_x(1−x)]` on the grid.
pub fn riemann_chi(state: &FieldState, c: f64) -> Vec<[f64; 2]> {
    let ux = gradient(&state.u);
    let m = state.m();
    (0..=m)
        .map(|i| [state.v[i] + c * ux[i], state.v[m - i] - c * ux[m - i]])
        .collect()
}

/// `2‖u_x‖² + 2|u(0)|² − ‖u‖²`, nonnegative for smooth fields.
pub fn lemma1_gap(state: &FieldState) -> f64 {
    2.0 * sq_norm(&gradient(&state.u)) + 2.0 * state.u[0] * state.u[0] - sq_norm(&state.u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub dt: f64,
    pub scheme: Scheme,
    pub ode: OdeIntegrator,
}

fn ode_rhs(sys: &SystemDescription, x: &DVector<f64>, u1: f64) -> DVector<f64> {
    sys.a() * x + sys.b().column(0) * u1
}

fn advance_ode(sys: &SystemDescription, x: &DVector<f64>, u1: f64, dt: f64, ode: OdeIntegrator) -> DVector<f64> {
    match ode {
        OdeIntegrator::Euler => x + ode_rhs(sys, x, u1) * dt,
        OdeIntegrator::Rk4 => {
            let k1 = ode_rhs(sys, x, u1);
            let k2 = ode_rhs(sys, &(x + &k1 * (dt / 2.0)), u1);
            let k3 = ode_rhs(sys, &(x + &k2 * (dt / 2.0)), u1);
            let k4 = ode_rhs(sys, &(x + &k3 * dt), u1);
            x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
        }
    }
}

fn check_cfl(c: f64, dt: f64, dx: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config(Module::WaveSim, format!("time step must be positive, got {dt}")));
    }
    let courant = c * dt / dx;
    if courant > CFL_MAX * (1.0 + 1e-12) {
        return Err(Error::config(Module::WaveSim, format!("Courant number {courant} exceeds {CFL_MAX}")));
    }
    Ok(())
}

/// One explicit step. The ODE sees `u(1)` from the current state.
pub fn step(state: &FieldState, sys: &SystemDescription, opts: &StepOptions) -> Result<FieldState> {
    let m = state.m();
    let dx = state.dx();
    let dt = opts.dt;
    let c2 = sys.c() * sys.c();
    let c0 = sys.c0();
    check_cfl(sys.c(), dt, dx)?;
    let u = &state.u;
    let v = &state.v;

    let x_new = advance_ode(sys, &state.x, u[m], dt, opts.ode);
    let kx_old = (sys.k() * &state.x)[0];
    let kx_new = (sys.k() * &x_new)[0];

    let mut v_new = v.clone();
    let mut u_new = u.clone();
    for i in 1..m {
        v_new[i] = v[i] + dt * c2 * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
    }
    // ghost node u[M+1] = u[M−1] − 2Δx c₀ v[M]
    let edge = 2.0 * dt * c2 * (u[m - 1] - u[m]) / (dx * dx);
    let damping = 2.0 * dt * c2 * c0 / dx;
    match opts.scheme {
        Scheme::Leapfrog => {
            v_new[m] = (v[m] + edge) / (1.0 + damping);
            for i in 1..=m {
                u_new[i] = u[i] + dt * v_new[i];
            }
        }
        Scheme::ForwardEuler => {
            v_new[m] = v[m] + edge - damping * v[m];
            for i in 1..=m {
                u_new[i] = u[i] + dt * v[i];
            }
        }
    }
    u_new[0] = kx_new;
    v_new[0] = (kx_new - kx_old) / dt;

    let next = FieldState { t: state.t + dt, u: u_new, v: v_new, x: x_new };
    if !next.is_finite() {
        return Err(Error::Divergence { time: next.t });
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Grid intervals.
    pub m: usize,
    /// Defaults to the largest step allowed by `CFL_MAX`.
    pub dt: Option<f64>,
    /// Defaults to `default_horizon(c)`.
    pub t_end: Option<f64>,
    pub scheme: Scheme,
    pub ode: OdeIntegrator,
    /// Store a field snapshot every this many steps (and at both ends).
    pub snapshot_stride: Option<usize>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { m: 200, dt: None, t_end: None, scheme: Scheme::default(), ode: OdeIntegrator::default(), snapshot_stride: None }
    }
}

/// Three times the duration of ten transits of the string.
pub fn default_horizon(c: f64) -> f64 {
    30.0 / c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub hnorm: f64,
    pub norm_x: f64,
    pub ut1: f64,
    pub ux0: f64,
    pub ut0: f64,
    pub ux1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Decayed,
    Grew,
    Indeterminate,
}

pub fn classify(h0: f64, h_end: f64) -> Classification {
    if h_end <= h0 * DECAY_FACTOR {
        Classification::Decayed
    } else if h_end > h0 * GROWTH_FACTOR {
        Classification::Grew
    } else {
        Classification::Indeterminate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub c: f64,
    pub c0: f64,
    pub dt: f64,
    pub m: usize,
    pub records: Vec<TrajectoryRecord>,
    /// Step index of each snapshot, uniformly spaced.
    pub snapshot_steps: Vec<usize>,
    pub snapshots: Vec<FieldState>,
    pub classification: Classification,
}

impl Trajectory {
    pub fn initial_hnorm(&self) -> f64 {
        self.records[0].hnorm
    }

    pub fn final_hnorm(&self) -> f64 {
        self.records.last().map(|r| r.hnorm).unwrap_or(0.0)
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// CSV with header `t,hnorm,normX,ut1,ux0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,hnorm,normX,ut1,ux0\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{:e},{:e},{:e},{:e}", r.t, r.hnorm, r.norm_x, r.ut1, r.ux0);
        }
        out
    }

    /// CSV with header `t,x,u,v`, one row per node per snapshot.
    pub fn snapshots_csv(&self) -> String {
        let mut out = String::from("t,x,u,v\n");
        for s in &self.snapshots {
            for (i, x) in s.grid().enumerate() {
                let _ = writeln!(out, "{},{},{:e},{:e}", s.t, x, s.u[i], s.v[i]);
            }
        }
        out
    }
}

fn record(state: &FieldState, c: f64) -> TrajectoryRecord {
    let m = state.m();
    TrajectoryRecord {
        t: state.t,
        hnorm: hnorm(state, c),
        norm_x: state.x.norm(),
        ut1: state.v[m],
        ux0: ux_left(&state.u),
        ut0: state.v[0],
        ux1: ux_right(&state.u),
    }
}

pub fn simulate(sys: &SystemDescription, ic: &InitialCondition, opts: &SimOptions) -> Result<Trajectory> {
    let mut state = init_state(sys, opts.m, ic)?;
    let c = sys.c();
    let dx = state.dx();
    let dt = opts.dt.unwrap_or(CFL_MAX * dx / c);
    check_cfl(c, dt, dx)?;
    let t_end = opts.t_end.unwrap_or_else(|| default_horizon(c));
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::config(Module::WaveSim, format!("horizon must be positive, got {t_end}")));
    }
    if opts.snapshot_stride == Some(0) {
        return Err(Error::config(Module::WaveSim, "snapshot stride must be positive"));
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let step_opts = StepOptions { dt, scheme: opts.scheme, ode: opts.ode };

    let mut records = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut snapshot_steps = Vec::new();
    records.push(record(&state, c));
    if opts.snapshot_stride.is_some() {
        snapshots.push(state.clone());
        snapshot_steps.push(0);
    }
    for n in 1..=steps {
        let mut next = step(&state, sys, &step_opts)?;
        // fixed time grid, free of accumulated rounding
        next.t = n as f64 * dt;
        state = next;
        records.push(record(&state, c));
        if let Some(stride) = opts.snapshot_stride {
            if n % stride == 0 {
                snapshots.push(state.clone());
                snapshot_steps.push(n);
            }
        }
    }
    let classification = classify(records[0].hnorm, state_hnorm(&records));
    Ok(Trajectory { c, c0: sys.c0(), dt, m: opts.m, records, snapshot_steps, snapshots, classification })
}

fn state_hnorm(records: &[TrajectoryRecord]) -> f64 {
    records.last().map(|r| r.hnorm).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmi::presets;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn decoupled(c: f64, c0: f64) -> SystemDescription {
        SystemDescription::new(DMatrix::from_element(1, 1, -1.0), DMatrix::zeros(1, 1), DMatrix::zeros(1, 1), c, c0).unwrap()
    }

    fn state_from(u: impl Fn(f64) -> f64, v: impl Fn(f64) -> f64, m: usize) -> FieldState {
        let xs: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        FieldState { t: 0.0, u: xs.iter().map(|&x| u(x)).collect(), v: xs.iter().map(|&x| v(x)).collect(), x: DVector::zeros(1) }
    }

    #[test]
    fn figure3_initial_state_is_compatible() {
        let sys = presets::open_loop_unstable(10.0, 0.15);
        let s = init_state(&sys, 200, &InitialCondition::Cosine { x0: vec![1.0, 1.0] }).unwrap();
        assert_relative_eq!(s.u[0], -8.0, epsilon = 1e-12);
        assert!(s.u[200].abs() < 1e-12);
        assert!(s.v.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_initial_state() {
        let sys = presets::open_loop_unstable(10.0, 0.15);
        let s = init_state(&sys, 10, &InitialCondition::Zero).unwrap();
        assert_eq!(hnorm(&s, 10.0), 0.0);
    }

    #[test]
    fn dirichlet_mismatch_rejected() {
        let sys = presets::open_loop_unstable(10.0, 0.15);
        let ic = InitialCondition::Samples { u: vec![1.0; 11], v: vec![0.0; 11], x0: vec![0.0, 0.0] };
        assert!(matches!(init_state(&sys, 10, &ic), Err(Error::Compatibility(_))));
    }

    #[test]
    fn neumann_mismatch_rejected() {
        let sys = decoupled(1.0, 0.5);
        let u: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let ic = InitialCondition::Samples { u, v: vec![0.0; 11], x0: vec![0.0] };
        assert!(matches!(init_state(&sys, 10, &ic), Err(Error::Compatibility(_))));
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let sys = presets::open_loop_unstable(10.0, 0.15);
        let s = FieldState::zero(2, 50);
        for scheme in [Scheme::Leapfrog, Scheme::ForwardEuler] {
            let next = step(&s, &sys, &StepOptions { dt: 0.001, scheme, ode: OdeIntegrator::Rk4 }).unwrap();
            assert_eq!(next.u, s.u);
            assert_eq!(next.v, s.v);
            assert_eq!(next.x, s.x);
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let sys = presets::open_loop_unstable(10.0, 0.15);
        let s = FieldState::zero(2, 50);
        let err = step(&s, &sys, &StepOptions { dt: 0.002, scheme: Scheme::Leapfrog, ode: OdeIntegrator::Euler }).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn left_boundary_follows_ode() {
        let sys = presets::open_loop_unstable(10.0, 0.15);
        let s = init_state(&sys, 100, &InitialCondition::Cosine { x0: vec![1.0, 1.0] }).unwrap();
        let next = step(&s, &sys, &StepOptions { dt: 4e-4, scheme: Scheme::Leapfrog, ode: OdeIntegrator::Euler }).unwrap();
        assert_relative_eq!(next.u[0], (sys.k() * &next.x)[0], epsilon = 1e-14);
        // Euler with u(1) = 0: X' = X + Δt A X
        assert_relative_eq!(next.x[0], 1.0 + 4e-4 * 3.0, epsilon = 1e-14);
        assert_relative_eq!(next.v[0], -28.0, epsilon = 1e-9);
    }

    #[test]
    fn hnorm_of_constant_field() {
        let s = state_from(|_| 1.0, |_| 0.0, 40);
        assert_relative_eq!(hnorm_squared(&s, 3.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hnorm_homogeneous() {
        let s = state_from(|x| x * x - x, |x| (3.0 * x).sin(), 64);
        let h = hnorm_squared(&s, 2.0);
        assert_relative_eq!(hnorm_squared(&s.scaled(-2.5), 2.0), 6.25 * h, max_relative = 1e-12);
    }

    #[test]
    fn chi_of_linear_field() {
        let s = state_from(|x| 0.3 * x, |_| 0.0, 20);
        for chi in riemann_chi(&s, 2.0) {
            assert_relative_eq!(chi[0], 0.6, epsilon = 1e-12);
            assert_relative_eq!(chi[1], -0.6, epsilon = 1e-12);
        }
    }

    #[test]
    fn chi_norm_identity() {
        let s = state_from(|x| (2.0 * x).cos() * x, |x| x.exp() - 2.0, 100);
        let c = 1.7;
        let chi = riemann_chi(&s, c);
        let lhs = trapezoid(&chi.iter().map(|q| q[0] * q[0] + q[1] * q[1]).collect::<Vec<_>>());
        let rhs = 2.0 * (sq_norm(&s.v) + c * c * sq_norm(&gradient(&s.u)));
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn lemma1_examples() {
        let s = state_from(|_| 1.5, |_| 0.0, 50);
        assert_relative_eq!(lemma1_gap(&s), 2.25, epsilon = 1e-12);
        let s = state_from(|x| x, |_| 0.0, 400);
        assert_relative_eq!(lemma1_gap(&s), 5.0 / 3.0, epsilon = 1e-5);
    }

    #[test]
    fn zero_ic_simulation_decays_trivially() {
        let sys = presets::open_loop_unstable(10.0, 0.15);
        let traj = simulate(&sys, &InitialCondition::Zero, &SimOptions { m: 20, t_end: Some(0.1), ..SimOptions::default() }).unwrap();
        assert!(traj.records.iter().all(|r| r.hnorm == 0.0));
        assert_eq!(traj.classification, Classification::Decayed);
    }

    #[test]
    fn time_grid_is_uniform() {
        let sys = presets::hurwitz_pair(2.0, 1.0);
        let opts = SimOptions { m: 20, t_end: Some(0.5), snapshot_stride: Some(5), ..SimOptions::default() };
        let traj = simulate(&sys, &InitialCondition::Cosine { x0: vec![1.0, -1.0] }, &opts).unwrap();
        for w in traj.records.windows(2) {
            assert_relative_eq!(w[1].t - w[0].t, traj.dt, epsilon = 1e-12);
        }
        assert!(traj.snapshot_steps.windows(2).all(|w| w[1] - w[0] == 5));
    }

    #[test]
    fn csv_headers() {
        let sys = presets::hurwitz_pair(2.0, 1.0);
        let opts = SimOptions { m: 10, t_end: Some(0.05), snapshot_stride: Some(1), ..SimOptions::default() };
        let traj = simulate(&sys, &InitialCondition::Cosine { x0: vec![1.0, 0.0] }, &opts).unwrap();
        assert!(traj.to_csv().starts_with("t,hnorm,normX,ut1,ux0\n"));
        assert!(traj.snapshots_csv().starts_with("t,x,u,v\n"));
        assert_eq!(traj.to_csv().lines().count(), traj.records.len() + 1);
    }
}
