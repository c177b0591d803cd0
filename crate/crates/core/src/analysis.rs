//! Scenario-level studies built on the solver: demand sweeps, the
//! feasibility boundary in demand scale, configuration comparison and
//! bound quality.

use std::str::FromStr;

use rayon::prelude::*;

use crate::coupling::{CouplingCoefficients, LoadVector};
use crate::linfeas::{self, Verdict};
use crate::netmodel::NetworkInstance;
use crate::solver::{self, Method, SolveReport, SolveStatus, SolverConfig};
use crate::{Error, Result};

/// Inclusive linear grid of demand scales, parsed from `start:stop:count`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid(pub Vec<f64>);

impl FromStr for ScaleGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |why: &str| Error::Precondition(format!("scale grid `{s}`: {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(err("expected start:stop:count"));
        };
        let a: f64 = a.trim().parse().map_err(|_| err("bad start"))?;
        let b: f64 = b.trim().parse().map_err(|_| err("bad stop"))?;
        let n: usize = n.trim().parse().map_err(|_| err("bad count"))?;
        if !(a > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(err("scales must be positive and finite"));
        }
        match n {
            0 => Err(err("count must be positive")),
            1 => Ok(Self(vec![a])),
            _ if b <= a => Err(err("stop must exceed start")),
            _ if n > 1_000_000 => Err(err("count too large")),
            _ => Ok(Self(
                (0..n)
                    .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                    .collect(),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub scale: f64,
    pub verdict: Verdict,
    /// Spectral radius of the `h0` slope matrix.
    pub spectral_radius: f64,
    pub status: SolveStatus,
    pub rho_star: Option<LoadVector>,
    pub rho_lower: Option<LoadVector>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub n_cells: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Largest scale with a feasible verdict.
    pub fn last_feasible(&self) -> Option<f64> {
        self.rows
            .iter()
            .rev()
            .find(|r| r.verdict == Verdict::Feasible)
            .map(|r| r.scale)
    }
}

fn check_grid(scales: &[f64]) -> Result<()> {
    if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::Precondition("scales must be positive and finite".into()));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("scales must be strictly increasing".into()));
    }
    Ok(())
}

fn sweep_point(inst: &NetworkInstance, scale: f64, config: &SolverConfig) -> Result<SweepRow> {
    let rep = solver::solve(&inst.with_demand_scale(scale), config)?;
    Ok(SweepRow {
        scale,
        verdict: if rep.h0.is_feasible() {
            Verdict::Feasible
        } else {
            Verdict::Infeasible
        },
        spectral_radius: rep.h0.spectral_radius,
        status: rep.status,
        rho_star: rep.fixed_point,
        rho_lower: rep.lower,
    })
}

/// Solves at every scale in order, warm-starting each point from the
/// previous fixed point. Loads only grow with demand, so the previous
/// fixed point is a valid point below the next one.
pub fn demand_sweep(inst: &NetworkInstance, scales: &[f64], config: &SolverConfig) -> Result<SweepTable> {
    check_grid(scales)?;
    inst.ensure_valid()?;
    let mut rows = Vec::with_capacity(scales.len());
    let mut warm: Option<LoadVector> = None;
    for &s in scales {
        let cfg = SolverConfig {
            start: warm.clone().or_else(|| config.start.clone()),
            ..config.clone()
        };
        let row = sweep_point(inst, s, &cfg)?;
        if let Some(rho) = &row.rho_star {
            warm = Some(rho.clone());
        }
        rows.push(row);
    }
    Ok(SweepTable {
        n_cells: inst.n_cells(),
        rows,
    })
}

/// Like [`demand_sweep`] but evaluates points independently (cold starts)
/// on the current rayon pool. Row order follows `scales`.
pub fn demand_sweep_parallel(inst: &NetworkInstance, scales: &[f64], config: &SolverConfig) -> Result<SweepTable> {
    check_grid(scales)?;
    inst.ensure_valid()?;
    let rows = scales
        .par_iter()
        .map(|&s| sweep_point(inst, s, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        n_cells: inst.n_cells(),
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct BoundaryReport {
    /// Midpoint of the final bracket.
    pub scale: f64,
    pub last_feasible: f64,
    pub first_infeasible: f64,
    /// `h0` spectral radius at the final midpoint.
    pub spectral_radius: f64,
    pub steps: usize,
}

fn verdict_at(inst: &NetworkInstance, scale: f64) -> Result<linfeas::FeasibilityReport> {
    linfeas::feasibility_check(&inst.with_demand_scale(scale))
}

/// Bisection on the `h0` verdict until `hi - lo <= tol * hi`.
pub fn feasibility_boundary(inst: &NetworkInstance, lo: f64, hi: f64, tol: f64) -> Result<BoundaryReport> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Precondition(format!("need 0 < lo < hi, got lo={lo}, hi={hi}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Precondition("tol must be positive".into()));
    }
    if verdict_at(inst, lo)?.verdict != Verdict::Feasible {
        return Err(Error::Precondition(format!("instance is infeasible at lo={lo}")));
    }
    if verdict_at(inst, hi)?.verdict != Verdict::Infeasible {
        return Err(Error::Precondition(format!("instance is feasible at hi={hi}")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut steps = 0;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if verdict_at(inst, mid)?.verdict == Verdict::Feasible {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let scale = 0.5 * (lo + hi);
    let spectral_radius = verdict_at(inst, scale)?.outcome.spectral_radius;
    Ok(BoundaryReport {
        scale,
        last_feasible: lo,
        first_infeasible: hi,
        spectral_radius,
        steps,
    })
}

/// Brackets the boundary by halving/doubling from scale 1, then bisects.
/// `None` if the instance has no demand (feasible at every scale).
pub fn find_boundary(inst: &NetworkInstance, tol: f64) -> Result<Option<BoundaryReport>> {
    let feasible = |s: f64| -> Result<bool> { Ok(verdict_at(inst, s)?.verdict == Verdict::Feasible) };
    let (mut lo, mut hi) = (1.0, 1.0);
    if feasible(1.0)? {
        while feasible(hi)? {
            hi *= 2.0;
            if hi > 1e15 {
                return Ok(None);
            }
        }
        lo = hi / 2.0;
    } else {
        while !feasible(lo)? {
            lo /= 2.0;
            if lo < 1e-15 {
                return Err(Error::Precondition("no feasible demand scale found".into()));
            }
        }
        hi = lo * 2.0;
    }
    feasibility_boundary(inst, lo, hi, tol).map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Equal,
    FirstDominates,
    SecondDominates,
    Incomparable,
}

impl Dominance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Equal => "equal",
            Self::FirstDominates => "a_dominates",
            Self::SecondDominates => "b_dominates",
            Self::Incomparable => "incomparable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConfigSummary {
    /// Solve at the instance's own demand (scale 1).
    pub report: SolveReport,
    /// `None` when the configuration carries no demand.
    pub boundary_scale: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub a: ConfigSummary,
    pub b: ConfigSummary,
    /// Scales below both boundaries at which the maximum loads were compared.
    pub common_scales: Vec<f64>,
    pub max_load_a: Vec<f64>,
    pub max_load_b: Vec<f64>,
    pub verdict: Dominance,
}

/// Relative tolerance for locating boundaries in [`compare_configs`].
pub const COMPARE_BOUNDARY_TOL: f64 = 1e-6;
const COMPARE_GRID_POINTS: usize = 9;

/// One configuration dominates the other when its feasibility boundary is
/// strictly higher and its maximum cell load is strictly lower at every
/// common feasible scale.
pub fn compare_configs(a: &NetworkInstance, b: &NetworkInstance) -> Result<Comparison> {
    if a.n_cells() != b.n_cells() {
        return Err(Error::DimensionMismatch {
            expected: a.n_cells(),
            got: b.n_cells(),
        });
    }
    let cfg = SolverConfig {
        method: Method::Newton,
        ..SolverConfig::default()
    };
    let summarize = |inst: &NetworkInstance| -> Result<ConfigSummary> {
        Ok(ConfigSummary {
            report: solver::solve(inst, &cfg)?,
            boundary_scale: find_boundary(inst, COMPARE_BOUNDARY_TOL)?.map(|r| r.last_feasible),
        })
    };
    let sa = summarize(a)?;
    let sb = summarize(b)?;

    let limit = match (sa.boundary_scale, sb.boundary_scale) {
        (Some(x), Some(y)) => x.min(y),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => 1.0,
    };
    let common_scales: Vec<f64> = (1..=COMPARE_GRID_POINTS)
        .map(|k| limit * k as f64 / (COMPARE_GRID_POINTS + 1) as f64)
        .collect();
    let max_load = |inst: &NetworkInstance| -> Result<Vec<f64>> {
        common_scales
            .iter()
            .map(|&s| {
                let rep = solver::solve(&inst.with_demand_scale(s), &cfg)?;
                Ok(rep.fixed_point.map_or(f64::INFINITY, |r| r.max_norm()))
            })
            .collect()
    };
    let max_load_a = max_load(a)?;
    let max_load_b = max_load(b)?;

    let same_solution = match (&sa.report.fixed_point, &sb.report.fixed_point) {
        (Some(x), Some(y)) => x == y,
        (None, None) => sa.report.status == sb.report.status,
        _ => false,
    };
    let bound = |s: &ConfigSummary| s.boundary_scale.unwrap_or(f64::INFINITY);
    let (ba, bb) = (bound(&sa), bound(&sb));
    let verdict = if same_solution && ba == bb && max_load_a == max_load_b {
        Dominance::Equal
    } else if ba > bb && max_load_a.iter().zip(&max_load_b).all(|(x, y)| x < y) {
        Dominance::FirstDominates
    } else if bb > ba && max_load_b.iter().zip(&max_load_a).all(|(x, y)| x < y) {
        Dominance::SecondDominates
    } else {
        Dominance::Incomparable
    };
    Ok(Comparison {
        a: sa,
        b: sb,
        common_scales,
        max_load_a,
        max_load_b,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundGap {
    pub cell: usize,
    pub rho_star: f64,
    pub rho_lower: f64,
    /// Tangent-system bound anchored at `rho_h0`, when that system is feasible.
    pub rho_upper: Option<f64>,
    /// `|rho_h0 - rho*| / rho*` in percent.
    pub lower_gap_pct: f64,
    /// `|rho_upper - rho*| / rho*` in percent.
    pub upper_gap_pct: Option<f64>,
}

/// Per-cell relative distance of both linear bounds to the fixed point.
pub fn bound_quality(inst: &NetworkInstance) -> Result<Vec<BoundGap>> {
    let coeffs = CouplingCoefficients::new(inst)?;
    let cfg = SolverConfig {
        method: Method::Newton,
        ..SolverConfig::default()
    };
    let rep = solver::solve_coefficients(&coeffs, &cfg);
    let (Some(star), Some(lower)) = (rep.fixed_point, rep.lower) else {
        return Err(match rep.status {
            SolveStatus::Infeasible => Error::Infeasible {
                spectral_radius: rep.h0.spectral_radius,
            },
            s => Error::Precondition(format!("solver stopped with status {}", s.as_str())),
        });
    };
    let upper = linfeas::tangent_upper_bound(&coeffs, &lower);
    let gap = |v: f64, s: f64| if s > 0.0 { (v - s).abs() / s * 100.0 } else { 0.0 };
    Ok((0..coeffs.n_cells())
        .map(|i| {
            let rho_upper = upper.as_ref().map(|u| u[i]);
            BoundGap {
                cell: i,
                rho_star: star[i],
                rho_lower: lower[i],
                rho_upper,
                lower_gap_pct: gap(lower[i], star[i]),
                upper_gap_pct: rho_upper.map(|u| gap(u, star[i])),
            }
        })
        .collect())
}
