//! Linear systems `rho = H (rho - anchor) + f(anchor)`: the exact
//! feasibility test through `h0` and the lower/upper load bounds.

use nalgebra::{DMatrix, DVector};

use crate::coupling::{CouplingCoefficients, LinearizedSystem, LoadVector};
use crate::linalg::{self, POWER_MAX_ITER, POWER_TOL};
use crate::netmodel::NetworkInstance;
use crate::{Error, Result};

/// Components above `-NEGATIVE_TOL` count as zero.
pub const NEGATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearStatus {
    Feasible,
    InfeasibleNegative,
    Singular,
}

impl LinearStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Feasible => "feasible",
            Self::InfeasibleNegative => "infeasible_negative",
            Self::Singular => "singular",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearSolveOutcome {
    pub status: LinearStatus,
    /// Present iff `status == Feasible`.
    pub solution: Option<LoadVector>,
    /// Perron root of the slope matrix.
    pub spectral_radius: f64,
    /// False when some cell pair has no coupling path; the spectral
    /// criterion is then only a diagnostic.
    pub irreducible: bool,
}

impl LinearSolveOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status == LinearStatus::Feasible
    }
}

/// Solves `(I - H) rho = f(anchor) - H anchor` and classifies the result.
pub fn solve_linear(sys: &LinearizedSystem) -> LinearSolveOutcome {
    let n = sys.n_cells();
    let h = sys.slope();
    let spectral_radius = linalg::spectral_radius(h, POWER_TOL, POWER_MAX_ITER);
    let irreducible = sys.irreducible();
    let system = DMatrix::identity(n, n) - h;
    let rhs: DVector<f64> = sys.offset() - h * sys.anchor().as_vector();

    let (status, solution) = match linalg::solve_dense(&system, &rhs) {
        None => (LinearStatus::Singular, None),
        Some(x) if x.iter().any(|&v| v < -NEGATIVE_TOL) => (LinearStatus::InfeasibleNegative, None),
        Some(x) => (LinearStatus::Feasible, Some(LoadVector::clamped(x))),
    };
    LinearSolveOutcome {
        status,
        solution,
        spectral_radius,
        irreducible,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Feasible => "feasible",
            Self::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub verdict: Verdict,
    pub outcome: LinearSolveOutcome,
    pub system: LinearizedSystem,
}

impl FeasibilityReport {
    /// `rho_h0`, the lower bound on the fixed point, when feasible.
    pub fn lower_bound(&self) -> Option<&LoadVector> {
        self.outcome.solution.as_ref()
    }
}

/// The load coupling system has a nonnegative fixed point exactly when
/// its asymptotic linearization `h0` does.
pub fn check_feasibility(coeffs: &CouplingCoefficients) -> FeasibilityReport {
    let system = coeffs.asymptotic_linearization();
    let outcome = solve_linear(&system);
    let verdict = if outcome.is_feasible() {
        Verdict::Feasible
    } else {
        Verdict::Infeasible
    };
    FeasibilityReport {
        verdict,
        outcome,
        system,
    }
}

pub fn feasibility_check(inst: &NetworkInstance) -> Result<FeasibilityReport> {
    Ok(check_feasibility(&CouplingCoefficients::new(inst)?))
}

/// `rho_h0 <= rho*`. Errors with [`Error::Infeasible`] when no fixed point exists.
pub fn lower_bound(inst: &NetworkInstance) -> Result<LoadVector> {
    let report = feasibility_check(inst)?;
    report
        .outcome
        .solution
        .ok_or(Error::Infeasible {
            spectral_radius: report.outcome.spectral_radius,
        })
}

/// Solution of the tangent system at `anchor`, an upper bound on `rho*`.
/// `None` when the tangent system has no nonnegative solution.
pub fn tangent_upper_bound(coeffs: &CouplingCoefficients, anchor: &LoadVector) -> Option<LoadVector> {
    solve_linear(&coeffs.tangent_linearization(anchor)).solution
}

pub fn upper_bound(inst: &NetworkInstance, anchor: &LoadVector) -> Result<Option<LoadVector>> {
    let coeffs = CouplingCoefficients::new(inst)?;
    if anchor.len() != coeffs.n_cells() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.n_cells(),
            got: anchor.len(),
        });
    }
    Ok(tangent_upper_bound(&coeffs, anchor))
}
