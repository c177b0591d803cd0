//! Small dense helpers: pivot-checked LU solves and the Perron root of a
//! nonnegative matrix.

use nalgebra::{DMatrix, DVector};

/// Relative pivot threshold below which a matrix is declared singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Solves `a x = b` by LU with partial pivoting and one step of iterative
/// refinement. Returns `None` when the smallest pivot is below
/// [`SINGULAR_PIVOT`] times the largest absolute entry of `a`.
pub fn solve_dense(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = a.amax();
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let lu = a.clone().lu();
    let min_pivot = lu.u().diagonal().amin();
    if min_pivot.is_nan() || min_pivot <= SINGULAR_PIVOT * scale {
        return None;
    }
    let mut x = lu.solve(b)?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Spectral radius of a nonnegative square matrix by power iteration.
///
/// Iterates on `I + H`, whose Perron root is `1 + rho(H)` and which is
/// primitive whenever `H` is irreducible, so periodic coupling patterns
/// (e.g. two cells) still converge. Stops when the Collatz-Wielandt bounds
/// `min_i (Ax)_i / x_i <= rho <= max_i (Ax)_i / x_i` are within `tol`
/// (relative to `1 + rho`), or after `max_iter` steps.
pub fn spectral_radius(h: &DMatrix<f64>, tol: f64, max_iter: usize) -> f64 {
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "square matrix required");
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_element(n, 1.0);
    let mut estimate = 1.0;
    for _ in 0..max_iter {
        let y = h * &x + &x;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (yi, xi) in y.iter().zip(x.iter()) {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        estimate = 0.5 * (lo + hi);
        let norm = y.amax();
        x = y / norm;
        if hi - lo <= tol * hi {
            break;
        }
    }
    (estimate - 1.0).max(0.0)
}

/// Default tolerance and iteration cap for [`spectral_radius`].
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;
