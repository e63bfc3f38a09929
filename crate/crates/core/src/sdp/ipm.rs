//! Dense primal-dual path-following solver for block-diagonal SDPs in SDPA form:
//!
//! ```text
//! minimize   cᵀx            s.t.  X = Σ xᵢ Fᵢ − F₀ ⪰ 0
//! maximize   F₀ • Y         s.t.  Fᵢ • Y = cᵢ,  Y ⪰ 0
//! ```
//!
//! Search directions use the HKM symmetrization of the Newton system with a
//! Mehrotra predictor-corrector step. Starts are infeasible and identity-scaled.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Problem data in SDPA layout. Diagonal blocks (negative size) are stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    pub m: usize,
    /// Block sizes; negative marks a diagonal block.
    pub block_sizes: Vec<isize>,
    pub c: Vec<f64>,
    /// `F₀`, one dense matrix per block.
    pub f0: Vec<DMatrix<f64>>,
    /// `Fᵢ` for `i = 1..=m`, as `(block, matrix)` pairs with nonzero matrices only.
    pub f: Vec<Vec<(usize, DMatrix<f64>)>>,
}

impl SdpaProblem {
    pub fn dims(&self) -> Vec<usize> {
        self.block_sizes.iter().map(|s| s.unsigned_abs()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmOptions {
    pub max_iterations: usize,
    /// Relative gap and infeasibility target.
    pub tolerance: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self { max_iterations: 200, tolerance: 1e-9, step_fraction: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmStatus {
    Converged,
    IterationCap,
    SingularNewton,
    /// Iterates lost positive definiteness or stopped making progress.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpmResult {
    pub status: IpmStatus,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

type Blocks = Vec<DMatrix<f64>>;

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn sym(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

/// Largest `α` with `X + α dX ⪰ 0`, given the Cholesky factor of `X`.
fn max_step(chol: &Cholesky<f64, Dyn>, dx: &DMatrix<f64>) -> f64 {
    let l = chol.l();
    let linv = match l.clone().try_inverse() {
        Some(v) => v,
        None => return 0.0,
    };
    let w = sym(&linv * dx * linv.transpose());
    let lmin = w.symmetric_eigenvalues().min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

struct Layout {
    /// Per block: variables with a term in it, `(var, matrix)`.
    by_block: Vec<Vec<(usize, DMatrix<f64>)>>,
}

impl Layout {
    fn new(p: &SdpaProblem) -> Self {
        let mut by_block = vec![Vec::new(); p.block_sizes.len()];
        for (i, terms) in p.f.iter().enumerate() {
            for (b, m) in terms {
                by_block[*b].push((i, m.clone()));
            }
        }
        Self { by_block }
    }

    fn apply(&self, dims: &[usize], x: &[f64]) -> Blocks {
        self.by_block
            .iter()
            .zip(dims)
            .map(|(terms, &d)| {
                let mut acc = DMatrix::zeros(d, d);
                for (i, m) in terms {
                    acc += m * x[*i];
                }
                acc
            })
            .collect()
    }

    /// `(Fᵢ • W)_i`
    fn adjoint(&self, m: usize, w: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(m);
        for (terms, wb) in self.by_block.iter().zip(w) {
            for (i, f) in terms {
                out[*i] += inner(f, wb);
            }
        }
        out
    }
}

pub fn solve(problem: &SdpaProblem, opts: &IpmOptions) -> IpmResult {
    let m = problem.m;
    let dims = problem.dims();
    let n_total: usize = dims.iter().sum();
    let layout = Layout::new(problem);
    let c = DVector::from_column_slice(&problem.c);

    let data_scale = problem
        .f
        .iter()
        .flatten()
        .map(|(_, f)| f.norm())
        .chain(problem.f0.iter().map(|f| f.norm()))
        .fold(1.0f64, f64::max);
    let f0_norm = problem.f0.iter().map(|f| f.norm_squared()).sum::<f64>().sqrt();
    let c_norm = c.norm();

    let mut x = vec![0.0; m];
    let lambda = 10.0 * data_scale.max(c_norm).sqrt().max(1.0);
    let mut xs: Blocks = dims.iter().map(|&d| DMatrix::identity(d, d) * lambda).collect();
    let mut ys: Blocks = dims.iter().map(|&d| DMatrix::identity(d, d) * lambda).collect();

    let mut result = IpmResult {
        status: IpmStatus::IterationCap,
        x: x.clone(),
        iterations: 0,
        primal_objective: 0.0,
        dual_objective: 0.0,
        primal_infeasibility: f64::INFINITY,
        dual_infeasibility: f64::INFINITY,
    };

    for iter in 0..=opts.max_iterations {
        let fx = layout.apply(&dims, &x);
        let rp: Blocks = fx.iter().zip(&problem.f0).zip(&xs).map(|((a, f0), xb)| a - f0 - xb).collect();
        let rd = &c - layout.adjoint(m, &ys);
        let pobj = c.dot(&DVector::from_column_slice(&x));
        let dobj: f64 = problem.f0.iter().zip(&ys).map(|(f, y)| inner(f, y)).sum();
        let pinf = rp.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + f0_norm);
        let dinf = rd.norm() / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        result.x.clone_from(&x);
        result.iterations = iter;
        result.primal_objective = pobj;
        result.dual_objective = dobj;
        result.primal_infeasibility = pinf;
        result.dual_infeasibility = dinf;
        if pinf <= opts.tolerance && dinf <= opts.tolerance && gap <= opts.tolerance {
            result.status = IpmStatus::Converged;
            return result;
        }
        if iter == opts.max_iterations {
            break;
        }

        let mut chol_x = Vec::with_capacity(dims.len());
        let mut xinv = Vec::with_capacity(dims.len());
        for xb in &xs {
            match Cholesky::new(sym(xb.clone())) {
                Some(ch) => {
                    xinv.push(sym(ch.inverse()));
                    chol_x.push(ch);
                }
                None => {
                    result.status = IpmStatus::Stalled;
                    return result;
                }
            }
        }
        let mut chol_y = Vec::with_capacity(dims.len());
        for yb in &ys {
            match Cholesky::new(sym(yb.clone())) {
                Some(ch) => chol_y.push(ch),
                None => {
                    result.status = IpmStatus::Stalled;
                    return result;
                }
            }
        }
        let mu: f64 = xs.iter().zip(&ys).map(|(a, b)| inner(a, b)).sum::<f64>() / n_total as f64;

        // Schur complement M_ij = Σ_b tr(F_i X⁻¹ F_j Y)
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (b, terms) in layout.by_block.iter().enumerate() {
            let mats: Vec<DMatrix<f64>> = terms.iter().map(|(_, f)| &xinv[b] * f * &ys[b]).collect();
            for (a, (i, _)) in terms.iter().enumerate() {
                for (j, fj) in terms.iter().skip(a).map(|(j, f)| (*j, f)) {
                    let v = inner(fj, &mats[a]);
                    schur[(*i, j)] += v;
                    if *i != j {
                        schur[(j, *i)] += v;
                    }
                }
            }
        }
        let schur = sym(schur);
        let solver = match SchurSolver::new(schur) {
            Some(s) => s,
            None => {
                result.status = IpmStatus::SingularNewton;
                return result;
            }
        };

        let direction = |target: &Blocks| -> Option<(DVector<f64>, Blocks, Blocks)> {
            // rhs_i = Fᵢ • X⁻¹(T − Rp Y) − rdᵢ
            let w: Blocks = (0..dims.len()).map(|b| sym(&xinv[b] * (&target[b] - &rp[b] * &ys[b]))).collect();
            let rhs = layout.adjoint(m, &w) - &rd;
            let dx = solver.solve(&rhs)?;
            let fdx = layout.apply(&dims, dx.as_slice());
            let dxs: Blocks = fdx.iter().zip(&rp).map(|(a, r)| a + r).collect();
            let dys: Blocks = (0..dims.len()).map(|b| sym(&xinv[b] * (&target[b] - &dxs[b] * &ys[b]))).collect();
            Some((dx, dxs, dys))
        };
        let step_lengths = |dxs: &Blocks, dys: &Blocks| -> (f64, f64) {
            let ap = chol_x.iter().zip(dxs).map(|(ch, d)| max_step(ch, d)).fold(f64::INFINITY, f64::min);
            let ad = chol_y.iter().zip(dys).map(|(ch, d)| max_step(ch, d)).fold(f64::INFINITY, f64::min);
            ((opts.step_fraction * ap).min(1.0), (opts.step_fraction * ad).min(1.0))
        };

        // predictor
        let target_aff: Blocks = xs.iter().zip(&ys).map(|(a, b)| -(a * b)).collect();
        let Some((_, dxs_a, dys_a)) = direction(&target_aff) else {
            result.status = IpmStatus::SingularNewton;
            return result;
        };
        let (ap_a, ad_a) = step_lengths(&dxs_a, &dys_a);
        let mu_aff: f64 = xs
            .iter()
            .zip(&ys)
            .zip(dxs_a.iter().zip(&dys_a))
            .map(|((a, b), (da, db))| inner(&(a + da * ap_a), &(b + db * ad_a)))
            .sum::<f64>()
            / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let target: Blocks = (0..dims.len())
            .map(|b| DMatrix::identity(dims[b], dims[b]) * (sigma * mu) - &xs[b] * &ys[b] - &dxs_a[b] * &dys_a[b])
            .collect();
        let Some((dx, dxs, dys)) = direction(&target) else {
            result.status = IpmStatus::SingularNewton;
            return result;
        };
        let (ap, ad) = step_lengths(&dxs, &dys);
        if !(ap.is_finite() && ad.is_finite()) || (ap < 1e-12 && ad < 1e-12) {
            result.status = IpmStatus::Stalled;
            return result;
        }
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi += ap * d;
        }
        for b in 0..dims.len() {
            xs[b] = sym(&xs[b] + &dxs[b] * ap);
            ys[b] = sym(&ys[b] + &dys[b] * ad);
        }
    }
    result.status = IpmStatus::IterationCap;
    result
}

enum SchurSolver {
    Chol(Cholesky<f64, Dyn>),
    Lu(nalgebra::LU<f64, Dyn, Dyn>),
}

impl SchurSolver {
    fn new(m: DMatrix<f64>) -> Option<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return None;
        }
        match Cholesky::new(m.clone()) {
            Some(ch) => Some(SchurSolver::Chol(ch)),
            None => {
                let lu = m.lu();
                if lu.is_invertible() {
                    Some(SchurSolver::Lu(lu))
                } else {
                    None
                }
            }
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let out = match self {
            SchurSolver::Chol(ch) => ch.solve(rhs),
            SchurSolver::Lu(lu) => lu.solve(rhs)?,
        };
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}
