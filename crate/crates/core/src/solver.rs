//! Fixed point of `rho = f(rho)` with a certified enclosing interval.
//!
//! Both methods start from the `h0` solution, which lies below the fixed
//! point. Along the way the solver keeps
//!
//! * a certified lower point: the largest known `x` with `x <= f(x)`
//!   (any such point is below the fixed point since `f` is monotone), and
//! * a certified upper point: the smallest of the tangent-system solutions
//!   and of the known points with `x >= f(x)`.

use nalgebra::DMatrix;

use crate::coupling::{CouplingCoefficients, LoadVector};
use crate::linalg;
use crate::linfeas::{self, LinearSolveOutcome};
use crate::netmodel::NetworkInstance;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FixedPoint,
    Newton,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: Method,
    /// Residual tolerance, relative to `1 + ||rho||_inf`.
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Iterations between tangent upper-bound refreshes.
    pub bound_refresh_every: usize,
    /// Optional starting point; it is raised componentwise to at least `rho_h0`.
    pub start: Option<LoadVector>,
    /// Stop as soon as the certified interval is at most this wide.
    pub max_interval_width: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::FixedPoint,
            tol_residual: 1e-10,
            max_iter: 10_000,
            bound_refresh_every: 5,
            start: None,
            max_interval_width: None,
        }
    }
}

/// Newton step halvings before falling back to a plain fixed-point step.
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// Stopped early because the certified interval became narrow enough.
    IntervalReached,
    Infeasible,
    MaxIterExceeded,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::IntervalReached => "interval_reached",
            Self::Infeasible => "infeasible",
            Self::MaxIterExceeded => "max_iter_exceeded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub residual: f64,
    pub interval_width: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// `rho*`, present iff converged.
    pub fixed_point: Option<LoadVector>,
    /// Last iterate (best available point when not converged).
    pub iterate: Option<LoadVector>,
    /// `rho_h0`; absent when infeasible.
    pub lower: Option<LoadVector>,
    /// Certified lower end of the interval (at least `rho_h0`).
    pub interval_lower: Option<LoadVector>,
    /// Certified upper end of the interval.
    pub upper: Option<LoadVector>,
    /// `||rho - f(rho)||_inf` at the last iterate.
    pub residual: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    /// Diagnostics of the `h0` feasibility solve.
    pub h0: LinearSolveOutcome,
}

impl SolveReport {
    pub fn interval_width(&self) -> Option<f64> {
        match (&self.interval_lower, &self.upper) {
            (Some(lo), Some(hi)) => Some(max_abs_diff(lo, hi)),
            _ => None,
        }
    }
}

pub fn solve(inst: &NetworkInstance, config: &SolverConfig) -> Result<SolveReport> {
    let coeffs = CouplingCoefficients::new(inst)?;
    Ok(solve_coefficients(&coeffs, config))
}

/// Default configuration, stopping once the interval is at most
/// `max_interval_width` wide.
pub fn solve_with_interval_stop(inst: &NetworkInstance, max_interval_width: f64) -> Result<SolveReport> {
    if max_interval_width.is_nan() || max_interval_width <= 0.0 {
        return Err(crate::Error::Precondition(
            "max_interval_width must be positive".into(),
        ));
    }
    let config = SolverConfig {
        max_interval_width: Some(max_interval_width),
        ..SolverConfig::default()
    };
    solve(inst, &config)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn le(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

pub fn solve_coefficients(coeffs: &CouplingCoefficients, config: &SolverConfig) -> SolveReport {
    assert!(config.tol_residual > 0.0, "tol_residual must be positive");
    assert!(config.max_iter >= 1, "max_iter must be at least 1");
    let refresh = config.bound_refresh_every.max(1);

    let feas = linfeas::check_feasibility(coeffs);
    let Some(rho_h0) = feas.outcome.solution.clone() else {
        return SolveReport {
            status: SolveStatus::Infeasible,
            fixed_point: None,
            iterate: None,
            lower: None,
            interval_lower: None,
            upper: None,
            residual: f64::INFINITY,
            iterations: 0,
            trace: Vec::new(),
            h0: feas.outcome,
        };
    };

    let mut x = match &config.start {
        Some(s) => {
            assert_eq!(s.len(), rho_h0.len(), "start vector length");
            s.sup(&rho_h0)
        }
        None => rho_h0.clone(),
    };
    let mut sub = rho_h0.clone();
    let mut upper: Option<LoadVector> = None;
    let mut trace = Vec::new();
    let mut t = 0;

    let status = loop {
        let fx = coeffs.load(&x);
        let residual = max_abs_diff(&x, &fx);
        if le(&x, &fx) {
            sub = sub.sup(&fx);
        }
        if le(&fx, &x) {
            upper = Some(match upper {
                Some(u) => u.inf(&fx),
                None => fx.clone(),
            });
        }
        if t % refresh == 0 {
            if let Some(ub) = linfeas::tangent_upper_bound(coeffs, &x) {
                upper = Some(match upper {
                    Some(u) => u.inf(&ub),
                    None => ub,
                });
            }
            if config.method == Method::Newton {
                let next = coeffs.load(&sub);
                sub = sub.sup(&next);
            }
        }
        let width = upper.as_ref().map(|u| max_abs_diff(u, &sub));
        trace.push(TraceRecord {
            residual,
            interval_width: width,
        });

        if residual <= config.tol_residual * (1.0 + x.max_norm()) {
            break SolveStatus::Converged;
        }
        if let (Some(limit), Some(w)) = (config.max_interval_width, width) {
            if w <= limit {
                break SolveStatus::IntervalReached;
            }
        }
        if t >= config.max_iter {
            break SolveStatus::MaxIterExceeded;
        }
        x = match config.method {
            Method::FixedPoint => fx,
            Method::Newton => newton_step(coeffs, &x, fx, residual, &rho_h0),
        };
        t += 1;
    };

    let residual = trace.last().map_or(f64::INFINITY, |r| r.residual);
    if status == SolveStatus::Converged {
        // tangent at (numerically) the fixed point
        if let Some(ub) = linfeas::tangent_upper_bound(coeffs, &x) {
            upper = Some(match upper {
                Some(u) => u.inf(&ub),
                None => ub,
            });
        }
    }
    SolveReport {
        status,
        fixed_point: (status == SolveStatus::Converged).then(|| x.clone()),
        iterate: Some(x),
        lower: Some(rho_h0),
        interval_lower: Some(sub),
        upper,
        residual,
        iterations: t,
        trace,
        h0: feas.outcome,
    }
}

/// Damped Newton step on `g(rho) = rho - f(rho)`, projected onto
/// `rho >= floor`.
fn newton_step(
    coeffs: &CouplingCoefficients,
    x: &LoadVector,
    fx: LoadVector,
    residual: f64,
    floor: &LoadVector,
) -> LoadVector {
    let n = x.len();
    let g = x.as_vector() - fx.as_vector();
    let a = DMatrix::identity(n, n) - coeffs.jacobian(x);
    let Some(delta) = linalg::solve_dense(&a, &(-&g)) else {
        return fx;
    };
    let mut alpha = 1.0;
    for _ in 0..=MAX_HALVINGS {
        let cand = x.as_vector() + alpha * &delta;
        if cand.iter().all(|v| v.is_finite()) {
            let cand = LoadVector::clamped(cand).sup(floor);
            let r = max_abs_diff(&cand, &coeffs.load(&cand));
            if r < residual {
                return cand;
            }
        }
        alpha *= 0.5;
    }
    fx
}

/// Outcome of plain fixed-point iteration from zero without the `h0` check.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeOutcome {
    Converged { fixed_point: LoadVector, iterations: usize },
    /// Some load exceeded the divergence cap.
    Diverged { iterations: usize },
    MaxIterExceeded,
}

/// Loads above this are treated as divergence by [`probe_fixed_point`].
pub const DIVERGENCE_CAP: f64 = 1e9;

/// Iterates `rho <- f(rho)` from zero. The sequence is nondecreasing; it
/// converges exactly when a fixed point exists. Independent of the linear
/// feasibility test, so it can serve as a cross-check.
pub fn probe_fixed_point(coeffs: &CouplingCoefficients, tol_residual: f64, max_iter: usize) -> ProbeOutcome {
    let mut x = LoadVector::zeros(coeffs.n_cells());
    for t in 0..=max_iter {
        let fx = coeffs.load(&x);
        if max_abs_diff(&x, &fx) <= tol_residual * (1.0 + x.max_norm()) {
            return ProbeOutcome::Converged {
                fixed_point: x,
                iterations: t,
            };
        }
        if fx.max_norm() > DIVERGENCE_CAP {
            return ProbeOutcome::Diverged { iterations: t };
        }
        x = fx;
    }
    ProbeOutcome::MaxIterExceeded
}
