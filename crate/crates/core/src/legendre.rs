//! Shifted Legendre polynomials on `[0, 1]`.
//!
//! `L_k(x) = P_k(2x - 1)` where `P_k` is the classical Legendre polynomial.
//! The family is orthogonal with `∫ L_j L_k = δ_jk / (2k + 1)`, satisfies
//! `L_k(0) = (-1)^k`, `L_k(1) = 1`, and differentiates into lower orders
//! through the coefficients returned by [`ell`].

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::error::{Error, Module, Result};

/// Largest polynomial order supported by the LMI hierarchy.
pub const MAX_ORDER: usize = 10;

/// Shifted Legendre polynomial of degree `k` at `x ∈ [0, 1]`.
pub fn eval(k: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(
            Module::Legendre,
            format!("x = {x} lies outside [0, 1]"),
        ));
    }
    Ok(eval_unchecked(k, x))
}

/// Three-term recurrence in `s = 2x - 1`:
/// `(k+1) P_{k+1}(s) = (2k+1) s P_k(s) - k P_{k-1}(s)`.
pub(crate) fn eval_unchecked(k: usize, x: f64) -> f64 {
    let s = 2.0 * x - 1.0;
    match k {
        0 => 1.0,
        1 => s,
        _ => {
            let mut prev = 1.0;
            let mut curr = s;
            for j in 1..k {
                let jf = j as f64;
                let next = ((2.0 * jf + 1.0) * s * curr - jf * prev) / (jf + 1.0);
                prev = curr;
                curr = next;
            }
            curr
        }
    }
}

/// Values `L_0(x), …, L_n(x)` in one recurrence pass.
pub(crate) fn eval_all(n: usize, x: f64) -> Vec<f64> {
    let s = 2.0 * x - 1.0;
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(s);
    }
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * s * out[j] - jf * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

/// Differentiation coefficient: `d/dx L_k = Σ_j ell(k, j) L_j`.
///
/// Equals `(2j + 1)(1 - (-1)^{j+k})` for `j ≤ k` and zero otherwise.
pub fn ell(k: usize, j: usize) -> f64 {
    if j > k || (j + k).is_multiple_of(2) {
        0.0
    } else {
        2.0 * (2 * j + 1) as f64
    }
}

/// The block matrices driving the projection dynamics at order `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentiationBlocks {
    /// `2(N+1) × 2(N+1)`, block `(k, j)` equal to `ell(k, j) I₂`.
    pub l: DMatrix<f64>,
    /// `N+1` stacked copies of `I₂`.
    pub ones: DMatrix<f64>,
    /// Stacked `(-1)^k I₂`.
    pub alternating: DMatrix<f64>,
}

pub fn block_matrices(order: usize) -> DifferentiationBlocks {
    let dim = 2 * (order + 1);
    let mut l = DMatrix::zeros(dim, dim);
    let mut ones = DMatrix::zeros(dim, 2);
    let mut alternating = DMatrix::zeros(dim, 2);
    for k in 0..=order {
        for j in 0..=k {
            let v = ell(k, j);
            l[(2 * k, 2 * j)] = v;
            l[(2 * k + 1, 2 * j + 1)] = v;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for d in 0..2 {
            ones[(2 * k + d, d)] = 1.0;
            alternating[(2 * k + d, d)] = sign;
        }
    }
    DifferentiationBlocks { l, ones, alternating }
}

/// Quadrature used to integrate sampled functions against the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Composite Gauss–Legendre with `panels` equal panels of `points` nodes.
    Gauss { points: usize, panels: usize },
    /// Trapezoid rule on the uniform grid `i / intervals`, `i = 0..=intervals`.
    /// Second-order accurate; used for simulator-owned grids.
    Trapezoid { intervals: usize },
}

impl QuadratureRule {
    pub fn node_count(&self) -> usize {
        match *self {
            QuadratureRule::Gauss { points, panels } => points * panels,
            QuadratureRule::Trapezoid { intervals } => intervals + 1,
        }
    }
}

/// Shifted Legendre polynomials up to `max_order`, tabulated on a quadrature rule.
#[derive(Debug, Clone)]
pub struct LegendreBasis {
    max_order: usize,
    rule: QuadratureRule,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `table[k][i] = L_k(nodes[i])`
    table: Vec<Vec<f64>>,
}

impl LegendreBasis {
    pub fn new(max_order: usize, rule: QuadratureRule) -> Result<Self> {
        if max_order > MAX_ORDER {
            return Err(Error::config(
                Module::Legendre,
                format!("order {max_order} exceeds the supported maximum {MAX_ORDER}"),
            ));
        }
        let needed = 2 * max_order + 2;
        if rule.node_count() < needed {
            return Err(Error::config(
                Module::Legendre,
                format!(
                    "quadrature has {} nodes, order {max_order} needs at least {needed}",
                    rule.node_count()
                ),
            ));
        }
        let (nodes, weights) = match rule {
            QuadratureRule::Gauss { points, panels } => {
                if points == 0 || panels == 0 {
                    return Err(Error::config(Module::Legendre, "empty Gauss rule"));
                }
                composite_gauss(points, panels)
            }
            QuadratureRule::Trapezoid { intervals } => trapezoid(intervals),
        };
        let mut table = vec![Vec::with_capacity(nodes.len()); max_order + 1];
        for &x in &nodes {
            for (k, v) in eval_all(max_order, x).into_iter().enumerate() {
                table[k].push(v);
            }
        }
        Ok(Self { max_order, rule, nodes, weights, table })
    }

    /// Single-panel Gauss rule with the minimum `2N + 2` nodes.
    pub fn gauss(max_order: usize) -> Result<Self> {
        Self::new(max_order, QuadratureRule::Gauss { points: 2 * max_order + 2, panels: 1 })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `L_k` at quadrature node `i`.
    pub fn value(&self, k: usize, i: usize) -> f64 {
        self.table[k][i]
    }

    /// `∫_0^1 f` where `f` is given at each node (`index`, `x`).
    pub fn integrate(&self, mut f: impl FnMut(usize, f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(i, (&x, &w))| w * f(i, x))
            .sum()
    }

    /// Projections `𝔛_k = ∫ χ L_k` for `k = 0..=order`.
    pub fn project(&self, samples: &[[f64; 2]], order: usize) -> Result<ProjectionVector> {
        if samples.len() != self.nodes.len() {
            return Err(Error::config(
                Module::Legendre,
                format!(
                    "{} samples supplied for a quadrature rule with {} nodes",
                    samples.len(),
                    self.nodes.len()
                ),
            ));
        }
        if order > self.max_order {
            return Err(Error::config(
                Module::Legendre,
                format!("projection order {order} exceeds basis order {}", self.max_order),
            ));
        }
        let entries = (0..=order)
            .map(|k| {
                let mut acc = [0.0; 2];
                for (i, s) in samples.iter().enumerate() {
                    let w = self.weights[i] * self.table[k][i];
                    acc[0] += w * s[0];
                    acc[1] += w * s[1];
                }
                acc
            })
            .collect();
        ProjectionVector::new(entries)
    }
}

/// Projections `𝔛_0 … 𝔛_N` of a 2-vector function.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionVector(Vec<[f64; 2]>);

impl ProjectionVector {
    pub fn new(entries: Vec<[f64; 2]>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain(Module::Legendre, "projection vector must be nonempty"));
        }
        if entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::domain(Module::Legendre, "non-finite projection entry"));
        }
        Ok(Self(entries))
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn entries(&self) -> &[[f64; 2]] {
        &self.0
    }

    pub fn get(&self, k: usize) -> Vector2<f64> {
        Vector2::new(self.0[k][0], self.0[k][1])
    }

    /// `[𝔛_0; 𝔛_1; …]` as a single column of length `2(N+1)`.
    pub fn stacked(&self) -> Vec<f64> {
        self.0.iter().flat_map(|e| e.iter().copied()).collect()
    }
}

/// Bessel lower bound `Σ_k (2k+1) 𝔛_kᵀ R 𝔛_k` for `∫ χᵀ R χ`.
pub fn bessel_bound(proj: &ProjectionVector, r: &Matrix2<f64>) -> Result<f64> {
    let asym = (r[(0, 1)] - r[(1, 0)]).abs();
    if asym > 1e-12 * (1.0 + r.abs().max()) {
        return Err(Error::domain(Module::Legendre, "R is not symmetric"));
    }
    Ok((0..=proj.order())
        .map(|k| {
            let xk = proj.get(k);
            (2 * k + 1) as f64 * (xk.transpose() * r * xk)[(0, 0)]
        })
        .sum())
}

fn trapezoid(intervals: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / intervals as f64;
    let nodes = (0..=intervals).map(|i| i as f64 * h).collect();
    let weights = (0..=intervals)
        .map(|i| if i == 0 || i == intervals { 0.5 * h } else { h })
        .collect();
    (nodes, weights)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub(crate) fn gauss_legendre(points: usize) -> (Vec<f64>, Vec<f64>) {
    let n = points;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = z;
            for j in 1..n {
                let jf = j as f64;
                let p2 = ((2.0 * jf + 1.0) * z * p1 - jf * p0) / (jf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = p0;
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n == 1 {
        nodes[0] = 0.0;
        weights[0] = 2.0;
    }
    (nodes, weights)
}

fn composite_gauss(points: usize, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (ref_nodes, ref_weights) = gauss_legendre(points);
    let h = 1.0 / panels as f64;
    let mut nodes = Vec::with_capacity(points * panels);
    let mut weights = Vec::with_capacity(points * panels);
    for p in 0..panels {
        let a = p as f64 * h;
        for (z, w) in ref_nodes.iter().zip(&ref_weights) {
            nodes.push(a + 0.5 * h * (z + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}
