//! End-to-end acceptance checks. Each criterion prints one `PASS`/`FAIL` line;
//! the test fails if any criterion fails.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see the report.

use std::time::{Duration, Instant};

use nalgebra::Matrix2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use stringlmi::analysis::{certify, min_speed, SweepOptions};
use stringlmi::legendre::{self, bessel_bound, ell, LegendreBasis, QuadratureRule};
use stringlmi::lmi::{boundary_spectral_radius, build_blocks, presets, SystemDescription};
use stringlmi::lyapunov::{check_decay, check_projection_derivative, DecayOptions};
use stringlmi::sdp::{verify_certificate, Certificate, SolveStatus, VERIFY_TOL};
use stringlmi::wave::{self, simulate, FieldState, InitialCondition, SimOptions, Trajectory};

const C0_FIG: f64 = 0.15;
const FIG_HORIZON: f64 = 15.0;

struct Outcome {
    index: usize,
    passed: bool,
    line: String,
}

fn report(index: usize, name: &str, passed: bool, detail: String) -> Outcome {
    let line = format!("criterion {index} [{}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    Outcome { index, passed, line }
}

/// Certificates gathered by the runs, re-checked by criterion 5.
struct Collected {
    certificates: Vec<(SystemDescription, Certificate)>,
}

impl Collected {
    fn add(&mut self, sys: &SystemDescription, c: f64, cert: Certificate) {
        self.certificates.push((sys.with_speeds(c, sys.c0()).unwrap(), cert));
    }
}

fn criterion_1(store: &mut Collected) -> Outcome {
    let sys = presets::open_loop_unstable(1.0, C0_FIG);
    let start = Instant::now();
    let res = min_speed(&sys, C0_FIG, 1, (1.0, 20.0), &SweepOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let sys = sys.with_speeds(1.0, C0_FIG).unwrap();
    for (c, cert) in res.certificates.clone() {
        store.add(&sys, c, cert);
    }
    let ok = matches!(res.c_min, Some(c) if (6.8..=8.5).contains(&c)) && elapsed <= Duration::from_secs(60);
    report(1, "c_min of the open-loop-unstable system, c0 = 0.15, N = 1", ok, format!("c_min = {:?} (band [6.8, 8.5]), last uncertified {:?}, {} solves in {elapsed:.2?}", res.c_min, res.below, res.solves))
}

fn criterion_2(store: &mut Collected) -> Outcome {
    let sys = presets::closed_loop_unstable(1.0, 1.0);
    let grid = |lo: f64, hi: f64| (0..10).map(move |i| lo + (hi - lo) * i as f64 / 9.0);
    let cells: Vec<(usize, f64, f64)> =
        [0usize, 1].iter().flat_map(|&n| grid(1.0, 20.0).flat_map(move |c| grid(0.1, 2.0).map(move |c0| (n, c, c0)))).collect();
    let start = Instant::now();
    let opts = SweepOptions::default();
    let reports: Vec<_> = cells.par_iter().map(|&(n, c, c0)| certify(&sys, c, c0, n, &opts).unwrap()).collect();
    let elapsed = start.elapsed();
    let mut certified = [0usize; 2];
    for (&(n, c, c0), rep) in cells.iter().zip(reports) {
        if rep.status == SolveStatus::Feasible {
            certified[n] += 1;
            store.certificates.push((sys.with_speeds(c, c0).unwrap(), rep.certificate.unwrap()));
        }
    }
    let ok = certified[0] == 0 && certified[1] > 0 && elapsed <= Duration::from_secs(600);
    report(2, "closed-loop-unstable system on a 10x10 (c, c0) grid", ok, format!("certified cells: N=0 {}/100, N=1 {}/100, {elapsed:.2?}", certified[0], certified[1]))
}

fn criterion_3(store: &mut Collected) -> Outcome {
    let sys = presets::hurwitz_pair(1.0, 1.0);
    let opts = SweepOptions::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for c0 in [0.5, 1.0, 2.0] {
        let mut values = Vec::new();
        for n in 0..=2 {
            let res = min_speed(&sys, c0, n, (0.1, 20.0), &opts).unwrap();
            for (c, cert) in res.certificates.clone() {
                store.certificates.push((sys.with_speeds(c, c0).unwrap(), cert));
            }
            values.push(res.c_min);
        }
        let column: Option<Vec<f64>> = values.iter().copied().collect();
        let monotone = column.as_ref().is_some_and(|v| v[2] <= v[1] + opts.tol && v[1] <= v[0] + opts.tol);
        ok &= monotone;
        detail.push(format!("c0={c0}: {values:.4?}"));
    }
    report(3, "c_min nonincreasing in N for the Hurwitz pair", ok, detail.join("; "))
}

fn figure3(c: f64, m: usize, stride: Option<usize>) -> Trajectory {
    let sys = presets::open_loop_unstable(c, C0_FIG);
    let opts = SimOptions { m, t_end: Some(FIG_HORIZON), snapshot_stride: stride, ..SimOptions::default() };
    simulate(&sys, &InitialCondition::Cosine { x0: vec![1.0, 1.0] }, &opts).unwrap()
}

fn criterion_4() -> Outcome {
    let m = 200;
    let stable = figure3(10.0, m, None);
    let unstable = figure3(6.5, m, None);
    let r_stable = stable.final_hnorm() / stable.initial_hnorm();
    let r_unstable = unstable.final_hnorm() / unstable.initial_hnorm();
    let courant = |t: &Trajectory| t.c * t.dt * t.m as f64;
    let ok = r_stable < 0.01 && r_unstable > 10.0 && courant(&stable) <= 0.5 && courant(&unstable) <= 0.5;
    report(
        4,
        "simulation of the open-loop-unstable system, c0 = 0.15",
        ok,
        format!("H(T)/H(0) = {r_stable:.3e} at c = 10, {r_unstable:.3e} at c = 6.5 (dx = 1/{m}, CFL {:.2}, T = {FIG_HORIZON})", courant(&stable)),
    )
}

fn criterion_5(store: &Collected) -> Outcome {
    let mut worst_p = f64::INFINITY;
    let mut worst_psi = f64::NEG_INFINITY;
    let mut failures = 0;
    for (sys, cert) in &store.certificates {
        let order = cert.matrices.as_ref().unwrap().order;
        let rep = verify_certificate(&build_blocks(sys, order).unwrap(), cert, VERIFY_TOL).unwrap();
        let eps = cert.margin;
        let min_eig = rep.min_eig_p.min(rep.min_eig_s).min(rep.min_eig_r);
        worst_p = worst_p.min(min_eig - eps);
        worst_psi = worst_psi.max(rep.max_eig_psi + eps);
        if !(rep.passed && min_eig >= eps - VERIFY_TOL && rep.max_eig_psi <= -eps + VERIFY_TOL) {
            failures += 1;
        }
    }
    let ok = failures == 0 && !store.certificates.is_empty();
    report(
        5,
        "independent verification of every feasible report",
        ok,
        format!("{} certificates, {failures} rejected; min(min eig - eps) = {worst_p:.3e}, max(max eig Psi + eps) = {worst_psi:.3e}", store.certificates.len()),
    )
}

/// `d/dx P_k(2x − 1)` from `(1 − t²) P_k'(t) = k (P_{k−1}(t) − t P_k(t))`,
/// with `P_k` from Bonnet's recurrence.
fn legendre_derivative(k: usize, x: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let t = 2.0 * x - 1.0;
    let (mut prev, mut cur) = (1.0, t);
    for j in 1..k {
        let next = ((2 * j + 1) as f64 * t * cur - j as f64 * prev) / (j + 1) as f64;
        prev = cur;
        cur = next;
    }
    2.0 * k as f64 * (prev - t * cur) / (1.0 - t * t)
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

fn random_field(rng: &mut StdRng, m: usize) -> FieldState {
    let cu: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
    let cv: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
    let w = rng.random_range(0.5..6.0);
    let xs = (0..=m).map(|i| i as f64 / m as f64);
    FieldState {
        t: 0.0,
        u: xs.clone().map(|x| poly(&cu, x) + (w * x).sin()).collect(),
        v: xs.map(|x| poly(&cv, x) * (w * x).cos()).collect(),
        x: nalgebra::DVector::zeros(1),
    }
}

fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20240601);
    let mut results = Vec::new();

    // orthogonality and differentiation
    let basis = LegendreBasis::new(legendre::MAX_ORDER, QuadratureRule::Gauss { points: 12, panels: 2 }).unwrap();
    let mut ortho_err = 0.0f64;
    for j in 0..=legendre::MAX_ORDER {
        for k in 0..=legendre::MAX_ORDER {
            let integral = basis.integrate(|i, _| basis.value(j, i) * basis.value(k, i));
            let expected = if j == k { 1.0 / (2 * k + 1) as f64 } else { 0.0 };
            ortho_err = ortho_err.max((integral - expected).abs());
        }
    }
    let mut diff_err = 0.0f64;
    for k in 0..=legendre::MAX_ORDER {
        for _ in 0..20 {
            let x: f64 = rng.random_range(0.02..0.98);
            let expansion: f64 = (0..=k).map(|j| ell(k, j) * legendre::eval(j, x).unwrap()).sum();
            let exact = legendre_derivative(k, x);
            diff_err = diff_err.max((expansion - exact).abs() / (1.0 + exact.abs()));
        }
    }
    results.push(("orthogonality/differentiation", ortho_err <= 1e-10 && diff_err <= 1e-10, format!("{ortho_err:.1e}/{diff_err:.1e}")));

    // Bessel bounds: nondecreasing in N and below the integral
    let fine = LegendreBasis::new(legendre::MAX_ORDER, QuadratureRule::Gauss { points: 16, panels: 8 }).unwrap();
    let mut bessel_ok = 0;
    for _ in 0..100 {
        let l = Matrix2::new(rng.random_range(-1.0..1.0), 0.0, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let r = l * l.transpose();
        let (a, b, w) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.5..12.0));
        let chi: Vec<[f64; 2]> = fine.nodes().iter().map(|&x| [a * (w * x).sin() + x, b * (w * x * x).cos()]).collect();
        let integral = fine.integrate(|i, _| {
            let q = nalgebra::Vector2::new(chi[i][0], chi[i][1]);
            (q.transpose() * r * q)[(0, 0)]
        });
        let bounds: Vec<f64> = (0..=legendre::MAX_ORDER).map(|n| bessel_bound(&fine.project(&chi, n).unwrap(), &r).unwrap()).collect();
        let tol = 1e-10 * (1.0 + integral);
        if bounds.windows(2).all(|w| w[1] >= w[0] - tol) && bounds.iter().all(|&v| v <= integral + tol) {
            bessel_ok += 1;
        }
    }
    results.push(("Bessel", bessel_ok == 100, format!("{bessel_ok}/100")));

    // norm identity of the Riemann coordinates
    let mut identity_ok = 0;
    for _ in 0..100 {
        let m = rng.random_range(20..300);
        let s = random_field(&mut rng, m);
        let c = rng.random_range(0.1..20.0);
        let chi = wave::riemann_chi(&s, c);
        let lhs = wave::trapezoid(&chi.iter().map(|q| q[0] * q[0] + q[1] * q[1]).collect::<Vec<_>>());
        let ux = wave::gradient(&s.u);
        let rhs = 2.0 * (wave::trapezoid(&s.v.iter().map(|v| v * v).collect::<Vec<_>>()) + c * c * wave::trapezoid(&ux.iter().map(|v| v * v).collect::<Vec<_>>()));
        if (lhs - rhs).abs() <= 1e-10 * (1.0 + rhs) {
            identity_ok += 1;
        }
    }
    results.push(("chi norm identity", identity_ok == 100, format!("{identity_ok}/100")));

    // Lemma 1 on random cubics
    let mut lemma_ok = 0;
    let mut worst_gap = f64::INFINITY;
    for _ in 0..100 {
        let coeffs: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
        let m = rng.random_range(10..400);
        let s = FieldState { t: 0.0, u: (0..=m).map(|i| poly(&coeffs, i as f64 / m as f64)).collect(), v: vec![0.0; m + 1], x: nalgebra::DVector::zeros(1) };
        let gap = wave::lemma1_gap(&s);
        worst_gap = worst_gap.min(gap);
        if gap >= -1e-8 {
            lemma_ok += 1;
        }
    }
    results.push(("Lemma 1 gap", lemma_ok == 100, format!("{lemma_ok}/100, min {worst_gap:.3e}")));

    // boundary spectral radius below one exactly when damping is present
    let mut radius_ok = 0;
    let mut radius_total = 0;
    for c in [0.1, 0.5, 1.0, 2.0, 6.83, 10.0, 50.0] {
        for c0 in [0.0, 1e-3, 0.05, 0.15, 0.5, 1.0, 2.0, 10.0] {
            radius_total += 1;
            if (boundary_spectral_radius(c, c0) < 1.0) == (c0 > 0.0) {
                radius_ok += 1;
            }
        }
    }
    results.push(("boundary spectral radius", radius_ok == radius_total, format!("{radius_ok}/{radius_total}")));

    let ok = results.iter().all(|r| r.1);
    let detail: Vec<String> = results.iter().map(|(n, p, d)| format!("{n} {} ({d})", if *p { "ok" } else { "FAILED" })).collect();
    report(6, "property suites", ok, detail.join("; "))
}

fn criterion_7(store: &mut Collected) -> Outcome {
    let sys = presets::open_loop_unstable(10.0, C0_FIG);
    let rep = certify(&sys, 10.0, C0_FIG, 1, &SweepOptions::default()).unwrap();
    let Some(cert) = rep.certificate.filter(|_| rep.status == SolveStatus::Feasible) else {
        return report(7, "Lyapunov behaviour at c = 10", false, "instance not certified".into());
    };
    store.certificates.push((sys.clone(), cert.clone()));

    // snapshots every 2.5e-3 s on both grids
    let coarse = figure3(10.0, 200, Some(10));
    let fine = figure3(10.0, 400, Some(20));
    let series = check_decay(&coarse, &sys, &cert, &DecayOptions::default()).unwrap();
    let r_coarse = check_projection_derivative(&coarse, 1, f64::INFINITY).unwrap();
    let r_fine = check_projection_derivative(&fine, 1, f64::INFINITY).unwrap();
    let ratio = r_coarse.max_residual / r_fine.max_residual;
    let ok = series.nonincreasing && ratio >= 2.0;
    report(
        7,
        "Lyapunov behaviour at c = 10",
        ok,
        format!(
            "max V increment {:.3e} vs tolerance {:.3e} (C = {}); projection residual {:.4e} -> {:.4e} (ratio {ratio:.3}); V/H^2 in [{:.3e}, {:.3e}]",
            series.max_increment,
            series.tolerance,
            DecayOptions::default().constant,
            r_coarse.max_residual,
            r_fine.max_residual,
            series.ratio_band.unwrap().0,
            series.ratio_band.unwrap().1
        ),
    )
}

#[test]
fn acceptance() {
    let mut store = Collected { certificates: Vec::new() };
    let mut outcomes = vec![
        criterion_1(&mut store),
        criterion_2(&mut store),
        criterion_3(&mut store),
        criterion_4(),
        criterion_6(),
        criterion_7(&mut store),
    ];
    outcomes.push(criterion_5(&store));
    outcomes.sort_by_key(|o| o.index);
    for o in &outcomes {
        println!("{}", o.line);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
