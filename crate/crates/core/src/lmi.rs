//! Structural matrices of the Lyapunov LMI and their affine encoding.
//!
//! The augmented vector is ordered `ξ_N = [X; 𝔛_0; …; 𝔛_N; u_t(1); c·u_x(0)]`.
//! Along trajectories `X_N = F ξ`, `Ẋ_N = Z ξ`, `χ(0) = G ξ` and `χ(1) = H ξ`.

use nalgebra::DMatrix;

use crate::error::{Error, Module, Result};
use crate::legendre::{self, MAX_ORDER};
use crate::linalg::{he, symmetrize};

/// Coupled system: `Ẋ = AX + Bu(1)`, `u_tt = c²u_xx`, `u(0) = KX`, `u_x(1) = -c₀u_t(1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDescription {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    k: DMatrix<f64>,
    c: f64,
    c0: f64,
}

impl SystemDescription {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, k: DMatrix<f64>, c: f64, c0: f64) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::dimension(Module::Lmi, format!("A must be square and nonempty, got {}×{}", a.nrows(), a.ncols())));
        }
        if b.shape() != (n, 1) {
            return Err(Error::dimension(Module::Lmi, format!("B must be {n}×1, got {}×{}", b.nrows(), b.ncols())));
        }
        if k.shape() != (1, n) {
            return Err(Error::dimension(Module::Lmi, format!("K must be 1×{n}, got {}×{}", k.nrows(), k.ncols())));
        }
        if a.iter().chain(b.iter()).chain(k.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain(Module::Lmi, "system matrices contain non-finite entries"));
        }
        check_speeds(c, c0)?;
        Ok(Self { a, b, k, c, c0 })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// ODE state dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn closed_loop(&self) -> DMatrix<f64> {
        &self.a + &self.b * &self.k
    }

    pub fn with_speeds(&self, c: f64, c0: f64) -> Result<Self> {
        check_speeds(c, c0)?;
        Ok(Self { c, c0, ..self.clone() })
    }
}

fn check_speeds(c: f64, c0: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::domain(Module::Lmi, format!("wave speed c must be positive, got {c}")));
    }
    if !(c0.is_finite() && c0 > 0.0) {
        return Err(Error::domain(Module::Lmi, format!("boundary damping c0 must be positive, got {c0}")));
    }
    Ok(())
}

/// The three benchmark systems from the literature on this problem.
pub mod presets {
    use super::SystemDescription;
    use nalgebra::DMatrix;

    fn build(a: [f64; 4], b: [f64; 2], k: [f64; 2], c: f64, c0: f64) -> SystemDescription {
        SystemDescription::new(
            DMatrix::from_row_slice(2, 2, &a),
            DMatrix::from_row_slice(2, 1, &b),
            DMatrix::from_row_slice(1, 2, &k),
            c,
            c0,
        )
        .expect("preset systems are well formed")
    }

    /// `A` and `A + BK` both Hurwitz.
    pub fn hurwitz_pair(c: f64, c0: f64) -> SystemDescription {
        build([-2.0, 1.0, 0.0, -1.0], [1.0, 1.0], [0.0, -2.0], c, c0)
    }

    /// `A` unstable, `A + BK` Hurwitz.
    pub fn open_loop_unstable(c: f64, c0: f64) -> SystemDescription {
        build([2.0, 1.0, 0.0, 1.0], [1.0, 1.0], [-10.0, 2.0], c, c0)
    }

    /// Neither `A` nor `A + BK` Hurwitz.
    pub fn closed_loop_unstable(c: f64, c0: f64) -> SystemDescription {
        build([0.0, 1.0, -2.0, 0.1], [0.0, 1.0], [1.0, 0.0], c, c0)
    }

    pub fn by_name(name: &str, c: f64, c0: f64) -> Option<SystemDescription> {
        match name {
            "hurwitz_pair" => Some(hurwitz_pair(c, c0)),
            "open_loop_unstable" => Some(open_loop_unstable(c, c0)),
            "closed_loop_unstable" => Some(closed_loop_unstable(c, c0)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equilibrium {
    /// `A + BK` nonsingular: the origin is the only equilibrium.
    UniqueZero,
    Degenerate,
}

/// Nonsingularity of `A + BK`: `σ_min > 1e-10 · σ_max`.
pub fn check_equilibrium(sys: &SystemDescription) -> Equilibrium {
    let sv = sys.closed_loop().singular_values();
    let max = sv.max();
    let min = sv.min();
    if max > 0.0 && min > 1e-10 * max {
        Equilibrium::UniqueZero
    } else {
        Equilibrium::Degenerate
    }
}

/// `g` and `h` such that `χ(0) = g [u_t(1); c u_x(0)] + …` and likewise for `χ(1)`.
pub fn boundary_matrices(c: f64, c0: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0 + c * c0, 0.0]);
    let h = DMatrix::from_row_slice(2, 2, &[1.0 - c * c0, 0.0, 0.0, -1.0]);
    (g, h)
}

/// Spectral radius of `g⁻¹h`; below one exactly when `c₀ > 0`.
pub fn boundary_spectral_radius(c: f64, c0: f64) -> f64 {
    let (g, h) = boundary_matrices(c, c0);
    let gh = g.try_inverse().expect("g is invertible for c·c0 > -1") * h;
    // 2×2 with zero diagonal: eigenvalues ±sqrt(product of off-diagonals)
    let det = gh[(0, 0)] * gh[(1, 1)] - gh[(0, 1)] * gh[(1, 0)];
    let tr = gh[(0, 0)] + gh[(1, 1)];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
    } else {
        det.abs().sqrt()
    }
}

/// Structural matrices for order `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlocks {
    pub order: usize,
    pub n: usize,
    pub c: f64,
    pub c0: f64,
    pub f: DMatrix<f64>,
    pub z: DMatrix<f64>,
    /// `Ẋ = 𝒩 ξ`
    pub ode: DMatrix<f64>,
    /// `χ(0) = G ξ`
    pub g_full: DMatrix<f64>,
    /// `χ(1) = H ξ`
    pub h_full: DMatrix<f64>,
    /// `d/dt [𝔛_0; …; 𝔛_N] = c 𝒵 ξ`
    pub projection_dynamics: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub b_tilde: DMatrix<f64>,
}

impl LmiBlocks {
    /// Size of `P_N`: `n + 2(N+1)`.
    pub fn state_dim(&self) -> usize {
        self.n + 2 * (self.order + 1)
    }

    /// Length of `ξ_N`.
    pub fn xi_dim(&self) -> usize {
        self.state_dim() + 2
    }

    /// Offset of `𝔛_k` inside `ξ_N`.
    pub fn projection_offset(&self, k: usize) -> usize {
        self.n + 2 * k
    }

    /// `R̃_N = diag(0_n, R, 3R, …, (2N+1)R, 0_2)`.
    pub fn r_tilde(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.xi_dim(), self.xi_dim());
        for k in 0..=self.order {
            let o = self.projection_offset(k);
            out.view_mut((o, o), (2, 2)).copy_from(&(r * (2 * k + 1) as f64));
        }
        out
    }
}

pub fn build_blocks(sys: &SystemDescription, order: usize) -> Result<LmiBlocks> {
    if order > MAX_ORDER {
        return Err(Error::config(Module::Lmi, format!("order {order} exceeds the supported maximum {MAX_ORDER}")));
    }
    let n = sys.n();
    let c = sys.c();
    let nx = n + 2 * (order + 1);
    let nxi = nx + 2;
    let p = 2 * (order + 1);

    let mut b_tilde = DMatrix::zeros(n, 2);
    for i in 0..n {
        b_tilde[(i, 0)] = sys.b()[(i, 0)] / (2.0 * c);
        b_tilde[(i, 1)] = -sys.b()[(i, 0)] / (2.0 * c);
    }
    let (g, h) = boundary_matrices(c, sys.c0());

    let mut ode = DMatrix::zeros(n, nxi);
    ode.view_mut((0, 0), (n, n)).copy_from(&sys.closed_loop());
    ode.view_mut((0, n), (n, 2)).copy_from(&b_tilde);

    let k_ode = sys.k() * &ode;
    let mut g_full = DMatrix::zeros(2, nxi);
    g_full.view_mut((0, nx), (2, 2)).copy_from(&g);
    let mut g_row = g_full.row_mut(0);
    g_row += k_ode.row(0);
    let mut h_full = DMatrix::zeros(2, nxi);
    h_full.view_mut((0, nx), (2, 2)).copy_from(&h);
    let mut h_row = h_full.row_mut(1);
    h_row += k_ode.row(0);

    let dblocks = legendre::block_matrices(order);
    let mut l_padded = DMatrix::zeros(p, nxi);
    l_padded.view_mut((0, n), (p, p)).copy_from(&dblocks.l);
    let projection_dynamics = &dblocks.ones * &h_full - &dblocks.alternating * &g_full - l_padded;

    let mut z = DMatrix::zeros(nx, nxi);
    z.view_mut((0, 0), (n, nxi)).copy_from(&ode);
    z.view_mut((n, 0), (p, nxi)).copy_from(&(&projection_dynamics * c));

    let mut f = DMatrix::zeros(nx, nxi);
    f.view_mut((0, 0), (nx, nx)).fill_with_identity();

    Ok(LmiBlocks {
        order,
        n,
        c,
        c0: sys.c0(),
        f,
        z,
        ode,
        g_full,
        h_full,
        projection_dynamics,
        g,
        h,
        b_tilde,
    })
}

/// `Ψ_N = He(Zᵀ P F) − c R̃ + c (Hᵀ(S+R)H − Gᵀ S G)`, exactly symmetric.
pub fn assemble_psi(blocks: &LmiBlocks, p: &DMatrix<f64>, s: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let nx = blocks.state_dim();
    if p.shape() != (nx, nx) {
        return Err(Error::dimension(Module::Lmi, format!("P must be {nx}×{nx} for order {}, got {}×{}", blocks.order, p.nrows(), p.ncols())));
    }
    if s.shape() != (2, 2) || r.shape() != (2, 2) {
        return Err(Error::dimension(Module::Lmi, "S and R must be 2×2"));
    }
    let c = blocks.c;
    let sr = s + r;
    let psi = he(&(blocks.z.transpose() * p * &blocks.f)) - blocks.r_tilde(r) * c
        + (blocks.h_full.transpose() * sr * &blocks.h_full - blocks.g_full.transpose() * s * &blocks.g_full) * c;
    Ok(symmetrize(&psi))
}

/// Packing of `(P, S, R)` into a decision vector (upper triangles, row-major).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionLayout {
    pub p_dim: usize,
}

impl DecisionLayout {
    fn svec_len(d: usize) -> usize {
        d * (d + 1) / 2
    }

    pub fn p_len(&self) -> usize {
        Self::svec_len(self.p_dim)
    }

    pub fn len(&self) -> usize {
        self.p_len() + 6
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(matrix id, row, col)` of each decision variable; ids 0 = P, 1 = S, 2 = R.
    pub fn entries(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.len());
        for (id, d) in [(0, self.p_dim), (1, 2), (2, 2)] {
            for i in 0..d {
                for j in i..d {
                    out.push((id, i, j));
                }
            }
        }
        out
    }

    pub fn unpack(&self, y: &[f64]) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let mut mats = [DMatrix::zeros(self.p_dim, self.p_dim), DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)];
        for (v, (id, i, j)) in y.iter().zip(self.entries()) {
            mats[id][(i, j)] = *v;
            mats[id][(j, i)] = *v;
        }
        let [p, s, r] = mats;
        (p, s, r)
    }

    pub fn pack(&self, p: &DMatrix<f64>, s: &DMatrix<f64>, r: &DMatrix<f64>) -> Vec<f64> {
        let mats = [p, s, r];
        self.entries().into_iter().map(|(id, i, j)| 0.5 * (mats[id][(i, j)] + mats[id][(j, i)])).collect()
    }
}

/// One constraint `constant + Σ y_i coeff_i ⪰ t·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBlock {
    pub label: String,
    pub constant: DMatrix<f64>,
    /// Nonzero coefficient matrices keyed by decision index, sorted by index.
    pub terms: Vec<(usize, DMatrix<f64>)>,
}

impl ConstraintBlock {
    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (idx, m) in &self.terms {
            out += m * y[*idx];
        }
        symmetrize(&out)
    }
}

/// Linear scale bound `Σ wᵢ yᵢ ≤ bound` that makes the slack maximization bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceBound {
    pub weights: Vec<f64>,
    pub bound: f64,
}

/// Matrix constraints affine in a decision vector, each required `⪰ margin·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLmiSystem {
    pub n_vars: usize,
    pub blocks: Vec<ConstraintBlock>,
    pub margin: f64,
    pub normalization: Option<TraceBound>,
    pub layout: Option<DecisionLayout>,
    /// Structural matrices the system was built from, when it encodes the stability LMI.
    pub origin: Option<Box<LmiBlocks>>,
}

impl AffineLmiSystem {
    /// Empty system over `n_vars` decision variables.
    pub fn new(n_vars: usize, margin: f64) -> Self {
        Self { n_vars, blocks: Vec::new(), margin, normalization: None, layout: None, origin: None }
    }

    /// Adds `constant + Σ terms ⪰ margin·I`; coefficient matrices are symmetrized.
    pub fn push_block(&mut self, label: impl Into<String>, constant: DMatrix<f64>, terms: Vec<(usize, DMatrix<f64>)>) -> Result<()> {
        let size = constant.nrows();
        if constant.ncols() != size {
            return Err(Error::dimension(Module::Lmi, "constraint constant must be square"));
        }
        let mut terms: Vec<_> = terms
            .into_iter()
            .filter(|(_, m)| m.iter().any(|v| *v != 0.0))
            .map(|(i, m)| (i, symmetrize(&m)))
            .collect();
        for (i, m) in &terms {
            if *i >= self.n_vars || m.shape() != (size, size) {
                return Err(Error::dimension(Module::Lmi, format!("bad coefficient for variable {i}")));
            }
        }
        terms.sort_by_key(|(i, _)| *i);
        self.blocks.push(ConstraintBlock { label: label.into(), constant: symmetrize(&constant), terms });
        Ok(())
    }

    pub fn evaluate(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        self.blocks.iter().map(|b| b.evaluate(y)).collect()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(ConstraintBlock::size).collect()
    }

    /// Multiplies every constraint by `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for b in &mut out.blocks {
            b.constant *= alpha;
            for (_, m) in &mut b.terms {
                *m *= alpha;
            }
        }
        out
    }
}

/// Stability LMI at the blocks' order: `P ⪰ εI`, `S ⪰ εI`, `R ⪰ εI`, `−Ψ ⪰ εI`,
/// with the trace of `(P, S, R)` bounded by their total dimension.
pub fn build_affine_system(blocks: &LmiBlocks, margin: f64) -> Result<AffineLmiSystem> {
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::config(Module::Lmi, format!("strictness margin must be positive, got {margin}")));
    }
    let layout = DecisionLayout { p_dim: blocks.state_dim() };
    let entries = layout.entries();
    let mut sys = AffineLmiSystem::new(layout.len(), margin);

    let unit = |d: usize, i: usize, j: usize| {
        let mut e = DMatrix::zeros(d, d);
        e[(i, j)] = 1.0;
        e[(j, i)] = 1.0;
        e
    };

    let mut terms: [Vec<(usize, DMatrix<f64>)>; 3] = Default::default();
    let mut psi_terms = Vec::with_capacity(entries.len());
    let nx = layout.p_dim;
    for (idx, &(id, i, j)) in entries.iter().enumerate() {
        let d = if id == 0 { nx } else { 2 };
        let e = unit(d, i, j);
        let zero_p = DMatrix::zeros(nx, nx);
        let zero2 = DMatrix::zeros(2, 2);
        let psi = match id {
            0 => assemble_psi(blocks, &e, &zero2, &zero2)?,
            1 => assemble_psi(blocks, &zero_p, &e, &zero2)?,
            _ => assemble_psi(blocks, &zero_p, &zero2, &e)?,
        };
        terms[id].push((idx, e));
        psi_terms.push((idx, -psi));
    }
    let [p_terms, s_terms, r_terms] = terms;
    sys.push_block("P", DMatrix::zeros(nx, nx), p_terms)?;
    sys.push_block("S", DMatrix::zeros(2, 2), s_terms)?;
    sys.push_block("R", DMatrix::zeros(2, 2), r_terms)?;
    sys.push_block("-Psi", DMatrix::zeros(blocks.xi_dim(), blocks.xi_dim()), psi_terms)?;

    let weights = entries.iter().map(|&(_, i, j)| if i == j { 1.0 } else { 0.0 }).collect();
    sys.normalization = Some(TraceBound { weights, bound: (nx + 4) as f64 });
    sys.layout = Some(layout);
    sys.origin = Some(Box::new(blocks.clone()));
    Ok(sys)
}
