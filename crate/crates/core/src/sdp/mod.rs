//! Feasibility of affine LMI systems, independently verified certificates,
//! and SDPA export.
//!
//! Feasibility is decided by maximizing a common slack `t` with every block
//! `⪰ t·I`. The system is reported feasible only when the achieved slack,
//! recomputed from the returned decision vector, reaches the margin and the
//! eigenvalue verifier approves it. Anything else is `NotCertified`: the LMI
//! is a sufficient condition, so failure says nothing about instability.

pub mod ipm;
pub mod sdpa;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::lmi::{assemble_psi, AffineLmiSystem, LmiBlocks};
use crate::linalg::{jacobi_eigenvalues, matrix_rows};

pub use ipm::{IpmOptions, IpmStatus, SdpaProblem};
pub use sdpa::{export_sdpa, parse_sdpa};

/// Verification tolerance on top of the margin.
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub verify_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 200, tolerance: 1e-9, verify_tolerance: VERIFY_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Feasible,
    NotCertified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticFlag {
    EmptySystem,
    IterationCap,
    SingularNewton,
    Stalled,
    VerifierRejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// Smallest block eigenvalue at the returned decision vector.
    pub slack: f64,
    pub residuals: Residuals,
    pub flag: Option<DiagnosticFlag>,
}

/// Lyapunov matrices of the stability LMI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateMatrices {
    pub order: usize,
    #[serde(with = "matrix_rows")]
    pub p: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub s: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub r: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub decision: Vec<f64>,
    pub slack: f64,
    pub margin: f64,
    pub iterations: usize,
    pub residuals: Residuals,
    /// Present when the system encodes the stability LMI.
    pub matrices: Option<CertificateMatrices>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub certificate: Option<Certificate>,
    pub diagnostics: Diagnostics,
}

impl SolveReport {
    pub fn is_feasible(&self) -> bool {
        self.status == SolveStatus::Feasible
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub min_eig_p: f64,
    pub min_eig_s: f64,
    pub min_eig_r: f64,
    pub max_eig_psi: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Re-checks the stability LMI hypotheses for a certificate: `P, S, R ⪰ εI`
/// and `Ψ ⪯ −εI`, with `Ψ` rebuilt from the structural matrices and
/// eigenvalues from the Jacobi routine (not the solver's factorizations).
pub fn verify_certificate(blocks: &LmiBlocks, cert: &Certificate, tol: f64) -> Result<VerificationReport> {
    let mats = cert
        .matrices
        .as_ref()
        .ok_or_else(|| Error::precondition(Module::Sdp, "certificate carries no Lyapunov matrices"))?;
    if mats.order != blocks.order {
        return Err(Error::dimension(
            Module::Sdp,
            format!("certificate order {} does not match blocks order {}", mats.order, blocks.order),
        ));
    }
    let psi = assemble_psi(blocks, &mats.p, &mats.s, &mats.r)?;
    let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
    if !(finite(&mats.p) && finite(&mats.s) && finite(&mats.r)) {
        return Err(Error::domain(Module::Sdp, "certificate has non-finite entries"));
    }
    let eps = cert.margin;
    let min_eig_p = jacobi_eigenvalues(&mats.p)[0];
    let min_eig_s = jacobi_eigenvalues(&mats.s)[0];
    let min_eig_r = jacobi_eigenvalues(&mats.r)[0];
    let max_eig_psi = *jacobi_eigenvalues(&psi).last().expect("Ψ is nonempty");

    let mut failures = Vec::new();
    if min_eig_p < eps - tol {
        failures.push(format!("P not positive definite (min eig {min_eig_p:e} < margin {eps:e})"));
    }
    if min_eig_s < eps - tol {
        failures.push(format!("S not positive definite (min eig {min_eig_s:e} < margin {eps:e})"));
    }
    if min_eig_r < eps - tol {
        failures.push(format!("R not positive definite (min eig {min_eig_r:e} < margin {eps:e})"));
    }
    if max_eig_psi > -eps + tol {
        failures.push(format!("Psi not negative definite (max eig {max_eig_psi:e} > -margin)"));
    }
    Ok(VerificationReport {
        min_eig_p,
        min_eig_s,
        min_eig_r,
        max_eig_psi,
        margin: eps,
        tolerance: tol,
        passed: failures.is_empty(),
        failures,
    })
}

/// Minimum eigenvalue of every block at `y`, by Jacobi rotations.
pub fn block_min_eigenvalues(system: &AffineLmiSystem, y: &[f64]) -> Vec<f64> {
    system.evaluate(y).iter().map(|m| jacobi_eigenvalues(m)[0]).collect()
}

/// SDPA encoding: variables `(y, t)`, minimize `−t` subject to
/// `constant + Σ yᵢ Aᵢ − t I ⪰ 0` per block, plus a diagonal block for the
/// trace bound when the system carries one.
pub fn to_sdpa(system: &AffineLmiSystem) -> SdpaProblem {
    let m = system.n_vars + 1;
    let t_idx = system.n_vars;
    let mut block_sizes: Vec<isize> = system.block_sizes().into_iter().map(|s| s as isize).collect();
    let mut f0: Vec<DMatrix<f64>> = system.blocks.iter().map(|b| -&b.constant).collect();
    let mut f = vec![Vec::new(); m];
    for (bi, block) in system.blocks.iter().enumerate() {
        for (i, mat) in &block.terms {
            f[*i].push((bi, mat.clone()));
        }
        f[t_idx].push((bi, -DMatrix::identity(block.size(), block.size())));
    }
    if let Some(norm) = &system.normalization {
        let bi = block_sizes.len();
        block_sizes.push(-1);
        f0.push(DMatrix::from_element(1, 1, -norm.bound));
        for (i, w) in norm.weights.iter().enumerate() {
            if *w != 0.0 {
                f[i].push((bi, DMatrix::from_element(1, 1, -w)));
            }
        }
    }
    let mut c = vec![0.0; m];
    c[t_idx] = -1.0;
    SdpaProblem { m, block_sizes, c, f0, f }
}

/// Maximizes the common slack and certifies when it reaches `system.margin`.
pub fn solve_feasibility(system: &AffineLmiSystem, options: &SolverOptions) -> SolveReport {
    if system.blocks.is_empty() {
        return SolveReport {
            status: SolveStatus::NotCertified,
            certificate: None,
            diagnostics: Diagnostics {
                iterations: 0,
                slack: f64::NAN,
                residuals: Residuals { primal_infeasibility: 0.0, dual_infeasibility: 0.0, duality_gap: 0.0 },
                flag: Some(DiagnosticFlag::EmptySystem),
            },
        };
    }
    let problem = to_sdpa(system);
    let ipm_opts = IpmOptions { max_iterations: options.max_iterations, tolerance: options.tolerance, ..IpmOptions::default() };
    let result = ipm::solve(&problem, &ipm_opts);
    let y = &result.x[..system.n_vars];

    let slack = if y.iter().all(|v| v.is_finite()) {
        system
            .evaluate(y)
            .into_iter()
            .map(|m| m.symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    let residuals = Residuals {
        primal_infeasibility: result.primal_infeasibility,
        dual_infeasibility: result.dual_infeasibility,
        duality_gap: (result.primal_objective - result.dual_objective).abs(),
    };
    let mut flag = match result.status {
        IpmStatus::Converged => None,
        IpmStatus::IterationCap => Some(DiagnosticFlag::IterationCap),
        IpmStatus::SingularNewton => Some(DiagnosticFlag::SingularNewton),
        IpmStatus::Stalled => Some(DiagnosticFlag::Stalled),
    };

    let mut status = SolveStatus::NotCertified;
    let mut certificate = None;
    if slack >= system.margin {
        let matrices = match (&system.layout, &system.origin) {
            (Some(layout), Some(blocks)) => {
                let (p, s, r) = layout.unpack(y);
                Some(CertificateMatrices { order: blocks.order, p, s, r })
            }
            _ => None,
        };
        let cert = Certificate {
            decision: y.to_vec(),
            slack,
            margin: system.margin,
            iterations: result.iterations,
            residuals,
            matrices,
        };
        let approved = match &system.origin {
            Some(blocks) => verify_certificate(blocks, &cert, options.verify_tolerance).is_ok_and(|r| r.passed),
            None => block_min_eigenvalues(system, y).iter().all(|&e| e >= system.margin - options.verify_tolerance),
        };
        if approved {
            status = SolveStatus::Feasible;
            certificate = Some(cert);
            flag = None;
        } else {
            flag = Some(DiagnosticFlag::VerifierRejected);
        }
    }

    SolveReport {
        status,
        certificate,
        diagnostics: Diagnostics { iterations: result.iterations, slack, residuals, flag },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmi::{build_affine_system, build_blocks, presets};
    use approx::assert_abs_diff_eq;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn interval_toy() -> AffineLmiSystem {
        let mut sys = AffineLmiSystem::new(1, 1e-6);
        sys.push_block("x", scalar(0.0), vec![(0, scalar(1.0))]).unwrap();
        sys.push_block("1-x", scalar(1.0), vec![(0, scalar(-1.0))]).unwrap();
        sys
    }

    #[test]
    fn interval_toy_is_feasible() {
        let report = solve_feasibility(&interval_toy(), &SolverOptions::default());
        assert_eq!(report.status, SolveStatus::Feasible);
        let cert = report.certificate.unwrap();
        assert_abs_diff_eq!(cert.slack, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(cert.decision[0], 0.5, epsilon = 1e-6);
        assert!(cert.matrices.is_none());
    }

    #[test]
    fn empty_intersection_is_not_certified() {
        let mut sys = AffineLmiSystem::new(1, 1e-6);
        sys.push_block("x-1", scalar(-1.0), vec![(0, scalar(1.0))]).unwrap();
        sys.push_block("-x-1", scalar(-1.0), vec![(0, scalar(-1.0))]).unwrap();
        let report = solve_feasibility(&sys, &SolverOptions::default());
        assert_eq!(report.status, SolveStatus::NotCertified);
        assert!(report.certificate.is_none());
        assert!(report.diagnostics.slack < 0.0);
    }

    #[test]
    fn empty_system_is_flagged() {
        let report = solve_feasibility(&AffineLmiSystem::new(2, 1e-6), &SolverOptions::default());
        assert_eq!(report.status, SolveStatus::NotCertified);
        assert_eq!(report.diagnostics.flag, Some(DiagnosticFlag::EmptySystem));
    }

    #[test]
    fn scaling_keeps_status() {
        for alpha in [0.25, 3.0, 40.0] {
            let report = solve_feasibility(&interval_toy().scaled(alpha), &SolverOptions::default());
            assert_eq!(report.status, SolveStatus::Feasible);
            assert_abs_diff_eq!(report.diagnostics.slack, 0.5 * alpha, epsilon = 1e-6 * alpha);
        }
    }

    #[test]
    fn deterministic() {
        let blocks = build_blocks(&presets::hurwitz_pair(4.0, 1.0), 1).unwrap();
        let sys = build_affine_system(&blocks, 1e-6).unwrap();
        let a = solve_feasibility(&sys, &SolverOptions::default());
        let b = solve_feasibility(&sys, &SolverOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn verifier_rejects_zero_s() {
        let blocks = build_blocks(&presets::hurwitz_pair(6.0, 1.0), 0).unwrap();
        let sys = build_affine_system(&blocks, 1e-6).unwrap();
        let report = solve_feasibility(&sys, &SolverOptions::default());
        assert!(report.is_feasible());
        let mut cert = report.certificate.unwrap();
        let verified = verify_certificate(&blocks, &cert, VERIFY_TOL).unwrap();
        assert!(verified.passed);
        cert.matrices.as_mut().unwrap().s = DMatrix::zeros(2, 2);
        let verified = verify_certificate(&blocks, &cert, VERIFY_TOL).unwrap();
        assert!(!verified.passed);
        assert!(verified.failures.iter().any(|f| f.starts_with("S not positive definite")));
    }

    #[test]
    fn verifier_checks_order() {
        let blocks0 = build_blocks(&presets::hurwitz_pair(6.0, 1.0), 0).unwrap();
        let blocks1 = build_blocks(&presets::hurwitz_pair(6.0, 1.0), 1).unwrap();
        let sys = build_affine_system(&blocks0, 1e-6).unwrap();
        let cert = solve_feasibility(&sys, &SolverOptions::default()).certificate.unwrap();
        assert!(matches!(verify_certificate(&blocks1, &cert, VERIFY_TOL), Err(Error::Dimension { .. })));
    }
}
