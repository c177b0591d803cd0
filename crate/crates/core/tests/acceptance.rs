//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.

mod common;

use std::time::Instant;

use common::{coeffs, corpus, direct_h0, direct_load, eigen_radius, max_abs_diff, max_norm, rng, CorpusShape};
use loadcouple::analysis::{bound_quality, feasibility_boundary, find_boundary};
use loadcouple::linfeas::{check_feasibility, lower_bound, tangent_upper_bound, Verdict};
use loadcouple::scenario::{generate, rotate_sector, ScenarioSpec};
use loadcouple::solver::{probe_fixed_point, solve, Method, ProbeOutcome, SolveStatus, SolverConfig};
use loadcouple::{LoadVector, NetworkInstance};
use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

const CORPUS_SEED: u64 = 0x5eed_0001;
const CORPUS_SIZE: usize = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn rel(a: f64, scale: f64) -> f64 {
    a / (1.0 + scale)
}

fn newton() -> SolverConfig {
    SolverConfig {
        method: Method::Newton,
        ..SolverConfig::default()
    }
}

/// Fixed points of the shared corpus, solved with both methods.
struct Solved {
    inst: NetworkInstance,
    fp: Option<LoadVector>,
    nt: Option<LoadVector>,
    fp_status: SolveStatus,
    nt_status: SolveStatus,
}

fn solve_corpus() -> Vec<Solved> {
    corpus(CORPUS_SEED, CORPUS_SIZE, CorpusShape::default())
        .into_par_iter()
        .map(|inst| {
            let fp = solve(&inst, &SolverConfig::default()).unwrap();
            let nt = solve(&inst, &newton()).unwrap();
            Solved {
                inst,
                fp: fp.fixed_point,
                nt: nt.fixed_point,
                fp_status: fp.status,
                nt_status: nt.status,
            }
        })
        .collect()
}

fn c1_fixed_point(solved: &[Solved], elapsed: f64) -> Outcome {
    let mut worst_residual: f64 = 0.0;
    let mut worst_agree: f64 = 0.0;
    let mut failures = 0;
    for s in solved {
        let (Some(fp), Some(nt)) = (&s.fp, &s.nt) else {
            failures += 1;
            continue;
        };
        for rho in [fp, nt] {
            let r = max_abs_diff(rho, &direct_load(&s.inst, rho));
            worst_residual = worst_residual.max(rel(r, rho.max_norm()));
        }
        worst_agree = worst_agree.max(rel(max_abs_diff(fp, nt), fp.max_norm()));
    }
    let sizes: Vec<usize> = solved.iter().map(|s| s.inst.n_cells()).collect();
    let pass = failures == 0 && worst_residual <= 1e-10 && worst_agree <= 1e-8 && elapsed < 60.0;
    Outcome::new(
        pass,
        format!(
            "{} instances (n {}..{}), unconverged {failures}, max residual {worst_residual:.2e} (<= 1e-10), \
             max method gap {worst_agree:.2e} (<= 1e-8), {elapsed:.1}s (< 60s)",
            solved.len(),
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap(),
        ),
    )
}

fn c2_uniqueness(solved: &[Solved]) -> Outcome {
    let worst = solved[..20]
        .par_iter()
        .enumerate()
        .map(|(idx, s)| {
            let star = s.nt.as_ref().expect("corpus instance converges");
            let mut r = rng(1000 + idx as u64);
            let hi = 3.0 * star.max_norm() + 1.0;
            let ends: Vec<Vec<f64>> = (0..10)
                .map(|t| {
                    let start: Vec<f64> = (0..star.len()).map(|_| r.random::<f64>() * hi).collect();
                    let method = if t % 2 == 0 { Method::FixedPoint } else { Method::Newton };
                    let cfg = SolverConfig {
                        method,
                        start: Some(LoadVector::new(start).unwrap()),
                        ..SolverConfig::default()
                    };
                    let rep = solve(&s.inst, &cfg).unwrap();
                    rep.fixed_point.map(|v| v.to_vec()).unwrap_or_else(|| vec![f64::INFINITY; star.len()])
                })
                .collect();
            let mut w: f64 = 0.0;
            for a in &ends {
                for b in &ends {
                    w = w.max(rel(max_abs_diff(a, b), max_norm(a)));
                }
            }
            w
        })
        .reduce(|| 0.0, f64::max);
    Outcome::new(
        worst <= 1e-8,
        format!("20 instances x 10 starts, max pairwise gap {worst:.2e} (<= 1e-8)"),
    )
}

const GRID: [f64; 10] = [0.5, 0.8, 0.9, 0.95, 0.98, 1.02, 1.05, 1.1, 1.2, 1.5];

fn c3_feasibility_equivalence(solved: &[Solved]) -> Outcome {
    let max_iter = 10 * SolverConfig::default().max_iter;
    let tol = SolverConfig::default().tol_residual;
    let (points, mismatches) = solved
        .par_iter()
        .map(|s| {
            let boundary = 1.0 / eigen_radius(&direct_h0(&s.inst));
            let mut mism = 0;
            for g in GRID {
                let scaled = s.inst.with_demand_scale(g * boundary);
                let c = coeffs(&scaled);
                let linear = check_feasibility(&c).verdict == Verdict::Feasible;
                let nonlinear = matches!(probe_fixed_point(&c, tol, max_iter), ProbeOutcome::Converged { .. });
                if linear != nonlinear || linear != (g < 1.0) {
                    mism += 1;
                }
            }
            (GRID.len(), mism)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Outcome::new(
        mismatches == 0,
        format!("{points} grid points around the boundary, {mismatches} mismatches (= 0)"),
    )
}

fn c4_sandwich(solved: &[Solved]) -> Outcome {
    let mut worst: f64 = f64::INFINITY;
    let mut missing = 0;
    for s in solved {
        let star = s.nt.as_ref().unwrap();
        let lower = lower_bound(&s.inst).unwrap();
        let Some(upper) = tangent_upper_bound(&coeffs(&s.inst), &lower) else {
            missing += 1;
            continue;
        };
        for i in 0..star.len() {
            worst = worst.min(star[i] - lower[i]).min(upper[i] - star[i]);
        }
    }
    Outcome::new(
        missing == 0 && worst >= -1e-9,
        format!(
            "{} instances, tangent system infeasible on {missing}, min slack {worst:.2e} (>= -1e-9)",
            solved.len()
        ),
    )
}

fn small_shape() -> CorpusShape {
    CorpusShape {
        cells: (2, 6),
        pixels_per_cell: (5, 20),
        target_radius: (0.2, 0.9),
    }
}

/// Step for perturbing `rho_k` inside `f_i`: moves every `u` by at most
/// `delta` times the smallest `u` of the cell.
fn step(c: &loadcouple::CouplingCoefficients, i: usize, k: usize, rho: &[f64], delta: f64) -> f64 {
    let terms = c.terms(i);
    let bmax = terms.iter().map(|t| t.b[k]).fold(0.0, f64::max);
    let umin = terms.iter().map(|t| t.interference(rho)).fold(f64::INFINITY, f64::min);
    delta * umin / bmax
}

fn c5_derivatives() -> Outcome {
    let insts = corpus(0x5eed_0005, 50, small_shape());
    let mut r = rng(5);
    let mut jac_err: f64 = 0.0;
    let mut hess_err: f64 = 0.0;
    for inst in &insts {
        let c = coeffs(inst);
        let n = c.n_cells();
        let rho: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 2.0).collect();
        let jac = c.jacobian(&rho);
        let f_at = |x: &[f64], i: usize| c.load(x)[i];
        let shifted = |dk: &[(usize, f64)]| {
            let mut x = rho.clone();
            for &(k, d) in dk {
                x[k] += d;
            }
            x
        };
        for i in 0..n {
            for k in (0..n).filter(|&k| k != i) {
                let h = step(&c, i, k, &rho, 1e-5);
                let fd = (f_at(&shifted(&[(k, h)]), i) - f_at(&shifted(&[(k, -h)]), i)) / (2.0 * h);
                jac_err = jac_err.max((jac[(i, k)] - fd).abs() / jac[(i, k)].abs());
                for l in (0..n).filter(|&l| l != i) {
                    let analytic = c.hessian_entry(i, k, l, &rho);
                    let hk = step(&c, i, k, &rho, 1e-3);
                    let fd = if k == l {
                        (f_at(&shifted(&[(k, hk)]), i) - 2.0 * f_at(&rho, i) + f_at(&shifted(&[(k, -hk)]), i))
                            / (hk * hk)
                    } else {
                        let hl = step(&c, i, l, &rho, 1e-3);
                        (f_at(&shifted(&[(k, hk), (l, hl)]), i) - f_at(&shifted(&[(k, hk), (l, -hl)]), i)
                            - f_at(&shifted(&[(k, -hk), (l, hl)]), i)
                            + f_at(&shifted(&[(k, -hk), (l, -hl)]), i))
                            / (4.0 * hk * hl)
                    };
                    hess_err = hess_err.max((analytic - fd).abs() / analytic.abs());
                }
            }
        }
    }
    Outcome::new(
        jac_err <= 1e-5 && hess_err <= 1e-4,
        format!(
            "50 (instance, rho) pairs, jacobian max rel err {jac_err:.2e} (<= 1e-5), \
             hessian max rel err {hess_err:.2e} (<= 1e-4)"
        ),
    )
}

fn c6_concavity() -> Outcome {
    // Strict concavity needs the interference vectors of each cell to span
    // the other cells' loads, so every cell carries at least n - 1 pixels.
    let shape = CorpusShape {
        cells: (2, 8),
        pixels_per_cell: (8, 30),
        target_radius: (0.2, 0.9),
    };
    let insts = corpus(0x5eed_0006, 20, shape);
    let mut r = rng(6);
    let mut max_eig = f64::NEG_INFINITY;
    for p in 0..100 {
        let c = coeffs(&insts[p % insts.len()]);
        let n = c.n_cells();
        let rho: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 2.0).collect();
        for i in 0..n {
            let e = c.cell_hessian(i, &rho).symmetric_eigen();
            max_eig = max_eig.max(e.eigenvalues.max());
        }
    }
    let mut worst_mid = f64::INFINITY;
    for t in 0..1000 {
        let c = coeffs(&insts[t % insts.len()]);
        let n = c.n_cells();
        let x: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 3.0).collect();
        let y: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 3.0).collect();
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let (fx, fy, fm) = (c.load(&x), c.load(&y), c.load(&mid));
        for i in 0..n {
            worst_mid = worst_mid.min(fm[i] - 0.5 * (fx[i] + fy[i]));
        }
    }
    Outcome::new(
        max_eig < 0.0 && worst_mid >= -1e-12,
        format!(
            "100 points: largest hessian eigenvalue {max_eig:.3e} (< 0); \
             1000 triples: min midpoint margin {worst_mid:.3e} (>= -1e-12)"
        ),
    )
}

fn c7_asymptotic_slope(solved: &[Solved]) -> Outcome {
    let mut worst: f64 = 0.0;
    for s in &solved[..20] {
        let c = coeffs(&s.inst);
        let n = c.n_cells();
        let h0 = direct_h0(&s.inst);
        let jac = c.jacobian(&vec![1e6; n]);
        for i in 0..n {
            for k in (0..n).filter(|&k| k != i) {
                worst = worst.max((jac[(i, k)] - h0[(i, k)]).abs() / h0[(i, k)]);
            }
        }
    }
    Outcome::new(
        worst <= 1e-4,
        format!("20 instances at lambda = 1e6, max rel deviation {worst:.2e} (<= 1e-4)"),
    )
}

fn c8_under_over(solved: &[Solved]) -> Outcome {
    let mut r = rng(8);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for t in 0..1000 {
        let s = &solved[t % 20];
        let c = coeffs(&s.inst);
        let n = c.n_cells();
        let hi = 3.0 * s.nt.as_ref().unwrap().max_norm() + 1.0;
        let rho: Vec<f64> = (0..n).map(|_| r.random::<f64>() * hi).collect();
        let anchor: Vec<f64> = (0..n).map(|_| r.random::<f64>() * hi).collect();
        let f = c.load(&rho);
        let below = c.asymptotic_linearization().evaluate(&rho);
        let above = c.tangent_linearization(&LoadVector::new(anchor).unwrap()).evaluate(&rho);
        for i in 0..n {
            let m = (f[i] - below[i]).min(above[i] - f[i]);
            worst = worst.min(m);
            if m < -1e-12 {
                violations += 1;
            }
        }
    }
    Outcome::new(
        violations == 0,
        format!("1000 samples on 20 instances, {violations} violations, min margin {worst:.2e} (>= -1e-12)"),
    )
}

fn c9_two_cell() -> Outcome {
    let mut r = rng(9);
    let mut worst_solve: f64 = 0.0;
    let mut worst_boundary: f64 = 0.0;
    for _ in 0..100 {
        let k1 = r.random_range(1..=10);
        let k2 = r.random_range(1..=10);
        let inst = common::two_cell(&mut r, k1, k2);
        let h = direct_h0(&inst);
        let f0 = direct_load(&inst, &[0.0, 0.0]);
        let (h12, h21) = (h[(0, 1)], h[(1, 0)]);
        let det = 1.0 - h12 * h21;
        let closed = [(f0[0] + h12 * f0[1]) / det, (f0[1] + h21 * f0[0]) / det];
        let lin = lower_bound(&inst).unwrap();
        worst_solve = worst_solve.max(rel(max_abs_diff(&lin, &closed), max_norm(&closed)));
        let analytic = 1.0 / (h12 * h21).sqrt();
        let b = feasibility_boundary(&inst, 0.5 * analytic, 2.0 * analytic, 1e-9).unwrap();
        worst_boundary = worst_boundary.max((b.scale - analytic).abs() / analytic);
    }
    Outcome::new(
        worst_solve <= 1e-12 && worst_boundary <= 1e-6,
        format!(
            "100 instances: linear solve vs closed form {worst_solve:.2e} (<= 1e-12), \
             boundary vs H12*H21 = 1 rel err {worst_boundary:.2e} (<= 1e-6)"
        ),
    )
}

fn c10_convex_program() -> Outcome {
    let shape = CorpusShape {
        cells: (2, 4),
        pixels_per_cell: (3, 10),
        target_radius: (0.2, 0.7),
    };
    const SAMPLES: usize = 100_000;
    const MAX_DRAWS: usize = 200_000_000;
    let results: Vec<(f64, usize, usize)> = corpus(0x5eed_000a, 20, shape)
        .into_par_iter()
        .enumerate()
        .map(|(idx, inst)| {
            let c = coeffs(&inst);
            let star = solve(&inst, &newton()).unwrap().fixed_point.unwrap();
            let total: f64 = star.iter().sum();
            let hi: Vec<f64> = star.iter().map(|v| v * 1.01).collect();
            let mut r = rng(10_000 + idx as u64);
            let (mut accepted, mut draws) = (0, 0);
            let mut excess = f64::NEG_INFINITY;
            while accepted < SAMPLES && draws < MAX_DRAWS {
                draws += 1;
                let x = common::random_point(&mut r, &hi);
                let fx = c.load(&x);
                if x.iter().zip(fx.iter()).all(|(a, b)| a <= b) {
                    accepted += 1;
                    excess = excess.max(x.iter().sum::<f64>() - total);
                }
            }
            (excess, accepted, draws)
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let min_accepted = results.iter().map(|r| r.1).min().unwrap();
    let draws: usize = results.iter().map(|r| r.2).sum();
    Outcome::new(
        min_accepted == SAMPLES && worst <= 1e-9,
        format!(
            "20 instances x {min_accepted} accepted samples ({draws} draws), \
             max sum(rho) - sum(rho*) = {worst:.2e} (<= 1e-9)"
        ),
    )
}

fn c11_reference_scenario(elapsed_start: Instant) -> Outcome {
    let config1 = generate(&ScenarioSpec::default()).unwrap();
    let config2 = rotate_sector(&config1, 0, 180.0).unwrap();
    let b1 = find_boundary(&config1, 1e-6).unwrap().unwrap().scale;
    let b2 = find_boundary(&config2, 1e-6).unwrap().unwrap().scale;
    let s1 = solve(&config1, &newton()).unwrap().fixed_point.unwrap();
    let s2 = solve(&config2, &newton()).unwrap().fixed_point.unwrap();
    let gaps = bound_quality(&config1).unwrap();
    let part_a = b1 > b2;
    let part_b = s2[7] > s1[7] && s2[8] > s1[8];
    let max_upper = gaps.iter().map(|g| g.upper_gap_pct.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let ordered = gaps.iter().all(|g| g.upper_gap_pct.is_some_and(|u| u < g.lower_gap_pct));
    let min_lower = gaps.iter().map(|g| g.lower_gap_pct).fold(f64::INFINITY, f64::min);
    let part_c = max_upper < 10.0 && ordered;
    let elapsed = elapsed_start.elapsed().as_secs_f64();
    Outcome::new(
        part_a && part_b && part_c && elapsed < 30.0,
        format!(
            "(a) boundary {b1:.4} vs {b2:.4}: {}; (b) cells 8/9 {:.3}/{:.3} -> {:.3}/{:.3}: {}; \
             (c) tangent gap max {max_upper:.1}% (< 10%), h0 gap min {min_lower:.1}%, ordered on every cell {ordered}: {}; {elapsed:.1}s (< 30s)",
            verdict(part_a),
            s1[7],
            s1[8],
            s2[7],
            s2[8],
            verdict(part_b),
            verdict(part_c),
        ),
    )
}

fn c12_radial_quasiconcavity(solved: &[Solved]) -> Outcome {
    let mut checks = 0;
    let mut worst = f64::INFINITY;
    for s in solved {
        let c = coeffs(&s.inst);
        let star = s.nt.as_ref().unwrap();
        for step in 1..=9 {
            let lambda = step as f64 / 10.0;
            let scaled: DVector<f64> = star.as_vector() * lambda;
            let f = c.load(scaled.as_slice());
            for i in (0..c.n_cells()).filter(|&i| !c.terms(i).is_empty()) {
                checks += 1;
                worst = worst.min(f[i] - scaled[i]);
            }
        }
    }
    Outcome::new(
        worst > 0.0,
        format!("{checks} (cell, lambda) checks, min f_i(l rho*) - l rho*_i = {worst:.3e} (> 0)"),
    )
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        println!("[{}] criterion {id:>2} {name}: {} ({secs:.1}s)", verdict(out.pass), out.detail);
        results.push((id, name, out, secs));
    };

    let t = Instant::now();
    let solved = solve_corpus();
    let corpus_secs = t.elapsed().as_secs_f64();
    let converged = solved
        .iter()
        .all(|s| s.fp_status == SolveStatus::Converged && s.nt_status == SolveStatus::Converged);

    run(1, "fixed-point correctness", &|| {
        let mut o = c1_fixed_point(&solved, corpus_secs);
        o.pass &= converged;
        o
    });
    run(2, "uniqueness", &|| c2_uniqueness(&solved));
    run(3, "feasibility equivalence", &|| c3_feasibility_equivalence(&solved));
    run(4, "sandwich", &|| c4_sandwich(&solved));
    run(5, "derivative correctness", &c5_derivatives);
    run(6, "concavity", &c6_concavity);
    run(7, "asymptotic slope", &|| c7_asymptotic_slope(&solved));
    run(8, "under/over-approximation", &|| c8_under_over(&solved));
    run(9, "two-cell closed form", &c9_two_cell);
    run(10, "convex-program equivalence", &c10_convex_program);
    run(11, "reference scenario", &|| c11_reference_scenario(Instant::now()));
    run(12, "radial quasiconcavity", &|| c12_radial_quasiconcavity(&solved));

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
