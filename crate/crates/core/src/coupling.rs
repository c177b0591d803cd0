//! The load coupling function and its derivatives.
//!
//! With `a_j = K B / d_j`, `b_ikj = P_k g_kj / (P_i g_ij)` and
//! `c_ij = sigma^2 / (P_i g_ij)`, the load of cell `i` is
//!
//! ```text
//! f_i(rho) = sum_{j in J_i} 1 / (a_j log2(1 + 1/u_ij)),   u_ij = sum_{k != i} b_ikj rho_k + c_ij
//! ```
//!
//! All logarithms are natural; `log2(x) = ln(x) / ln 2`.

use std::f64::consts::LN_2;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};

use crate::netmodel::NetworkInstance;
use crate::{Error, Result};

/// A point in the nonnegative orthant: one load value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector(DVector<f64>);

impl LoadVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::Precondition(format!(
                "load of cell {} is {v}; loads must be finite and non-negative",
                i + 1
            )));
        }
        Ok(Self(DVector::from_vec(values)))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    /// Clamps every component into `[0, inf)`. Non-finite input panics.
    pub fn clamped(values: DVector<f64>) -> Self {
        assert!(values.iter().all(|v| v.is_finite()), "non-finite load");
        Self(values.map(|v| v.max(0.0)))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn max_norm(&self) -> f64 {
        self.0.amax()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    /// Componentwise maximum.
    pub fn sup(&self, other: &Self) -> Self {
        Self(self.0.zip_map(&other.0, f64::max))
    }

    /// Componentwise minimum.
    pub fn inf(&self, other: &Self) -> Self {
        Self(self.0.zip_map(&other.0, f64::min))
    }
}

impl Deref for LoadVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Coefficients of one demanded pixel inside its server's area.
#[derive(Debug, Clone)]
pub struct PixelTerm {
    pub pixel: usize,
    pub a: f64,
    pub c: f64,
    /// `b[k]` for every cell; zero at the serving cell.
    pub b: Vec<f64>,
}

impl PixelTerm {
    /// `u = sum_k b_k rho_k + c`, always `>= c > 0` for `rho >= 0`.
    #[inline]
    pub fn interference(&self, rho: &[f64]) -> f64 {
        self.b
            .iter()
            .zip(rho)
            .fold(self.c, |acc, (b, r)| acc + b * r)
    }
}

/// Reparameterized coupling data, restricted to demanded pixels.
#[derive(Debug, Clone)]
pub struct CouplingCoefficients {
    areas: Vec<Vec<PixelTerm>>,
}

impl CouplingCoefficients {
    pub fn new(inst: &NetworkInstance) -> Result<Self> {
        inst.ensure_valid()?;
        let n = inst.n_cells();
        let kb = inst.num_resource_units as f64 * inst.rate_scale;
        let areas = (0..n)
            .map(|i| {
                inst.serving
                    .area(i)
                    .iter()
                    .filter(|&&j| inst.pixels[j].demand_bits > 0.0)
                    .map(|&j| {
                        let own = inst.received_power(i, j);
                        let b = (0..n)
                            .map(|k| if k == i { 0.0 } else { inst.received_power(k, j) / own })
                            .collect();
                        PixelTerm {
                            pixel: j,
                            a: kb / inst.pixels[j].demand_bits,
                            c: inst.noise_power / own,
                            b,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { areas })
    }

    pub fn n_cells(&self) -> usize {
        self.areas.len()
    }

    /// Demanded pixels served by `cell`.
    pub fn terms(&self, cell: usize) -> &[PixelTerm] {
        &self.areas[cell]
    }

    fn term(&self, cell: usize, pixel: usize) -> Option<&PixelTerm> {
        let terms = &self.areas[cell];
        terms
            .binary_search_by_key(&pixel, |t| t.pixel)
            .ok()
            .map(|idx| &terms[idx])
    }

    /// `a_j`, present only for demanded, served pixels.
    pub fn a(&self, pixel: usize) -> Option<f64> {
        self.areas
            .iter()
            .find_map(|terms| terms.iter().find(|t| t.pixel == pixel))
            .map(|t| t.a)
    }

    pub fn b(&self, cell: usize, interferer: usize, pixel: usize) -> Option<f64> {
        if cell == interferer {
            return None;
        }
        self.term(cell, pixel).map(|t| t.b[interferer])
    }

    pub fn c(&self, cell: usize, pixel: usize) -> Option<f64> {
        self.term(cell, pixel).map(|t| t.c)
    }

    /// SINR of `pixel` served by `cell`, or `None` if the pixel is not a
    /// demanded pixel of that cell.
    pub fn sinr(&self, cell: usize, pixel: usize, rho: &[f64]) -> Option<f64> {
        self.check_len(rho);
        self.term(cell, pixel).map(|t| 1.0 / t.interference(rho))
    }

    fn check_len(&self, rho: &[f64]) {
        assert_eq!(rho.len(), self.n_cells(), "load vector length");
    }

    /// `f(rho)`.
    pub fn load(&self, rho: &[f64]) -> LoadVector {
        self.check_len(rho);
        let values = self
            .areas
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| pixel_load(t.a, t.interference(rho)))
                    .sum::<f64>()
            })
            .collect::<Vec<_>>();
        LoadVector(DVector::from_vec(values))
    }

    /// `df_i / drho_k`; the diagonal is zero.
    pub fn jacobian(&self, rho: &[f64]) -> DMatrix<f64> {
        self.check_len(rho);
        let n = self.n_cells();
        let mut jac = DMatrix::zeros(n, n);
        for (i, terms) in self.areas.iter().enumerate() {
            for t in terms {
                let s = pixel_slope(t.a, t.interference(rho));
                for (k, b) in t.b.iter().enumerate() {
                    jac[(i, k)] += s * b;
                }
            }
            jac[(i, i)] = 0.0;
        }
        jac
    }

    /// `d^2 f_i / (drho_k drho_h)` for `k, h != i`.
    ///
    /// Panics if `k == i` or `h == i`.
    pub fn hessian_entry(&self, i: usize, k: usize, h: usize, rho: &[f64]) -> f64 {
        assert!(k != i && h != i, "hessian of f_i is taken over rho_k, k != i");
        self.check_len(rho);
        self.areas[i]
            .iter()
            .map(|t| pixel_curvature(t.a, t.interference(rho)) * t.b[k] * t.b[h])
            .sum()
    }

    /// The `(n-1) x (n-1)` Hessian of `f_i` over the other cells' loads,
    /// rows and columns in increasing cell order with `i` skipped.
    pub fn cell_hessian(&self, i: usize, rho: &[f64]) -> DMatrix<f64> {
        self.check_len(rho);
        let others: Vec<usize> = (0..self.n_cells()).filter(|&k| k != i).collect();
        let mut hess = DMatrix::zeros(others.len(), others.len());
        for t in &self.areas[i] {
            let w = pixel_curvature(t.a, t.interference(rho));
            for (r, &k) in others.iter().enumerate() {
                for (s, &h) in others.iter().enumerate() {
                    hess[(r, s)] += w * t.b[k] * t.b[h];
                }
            }
        }
        hess
    }

    /// `h0`: slopes are the limits of the partial derivatives,
    /// `H_ik = ln 2 * sum_j b_ikj / a_j`, anchored at zero.
    pub fn asymptotic_linearization(&self) -> LinearizedSystem {
        let n = self.n_cells();
        let mut slope = DMatrix::zeros(n, n);
        for (i, terms) in self.areas.iter().enumerate() {
            for t in terms {
                for (k, b) in t.b.iter().enumerate() {
                    slope[(i, k)] += LN_2 * b / t.a;
                }
            }
            slope[(i, i)] = 0.0;
        }
        let anchor = LoadVector::zeros(n);
        let offset = self.load(&anchor).into_vector();
        LinearizedSystem {
            slope,
            anchor,
            offset,
            kind: LinearizationKind::Asymptotic,
        }
    }

    /// `h-bar`: the tangent plane of `f` at `anchor`. By concavity it lies
    /// above `f` on the whole orthant.
    pub fn tangent_linearization(&self, anchor: &LoadVector) -> LinearizedSystem {
        LinearizedSystem {
            slope: self.jacobian(anchor),
            offset: self.load(anchor).into_vector(),
            anchor: anchor.clone(),
            kind: LinearizationKind::Tangent,
        }
    }
}

/// `1 / (a log2(1 + 1/u))`
#[inline]
pub(crate) fn pixel_load(a: f64, u: f64) -> f64 {
    LN_2 / (a * (1.0 / u).ln_1p())
}

/// Derivative of [`pixel_load`] with respect to `u`.
#[inline]
pub(crate) fn pixel_slope(a: f64, u: f64) -> f64 {
    let l = (1.0 / u).ln_1p();
    LN_2 / (a * l * l * (u * u + u))
}

/// Second derivative of [`pixel_load`] with respect to `u`.
#[inline]
pub(crate) fn pixel_curvature(a: f64, u: f64) -> f64 {
    let l = (1.0 / u).ln_1p();
    let uu = u * u + u;
    LN_2 * concavity_factor(u) / (a * l * l * l * uu * uu)
}

/// `q(u) = 2 - (2u + 1) ln(1 + 1/u)`, negative for all `u > 0`.
///
/// For large `u` the direct form cancels catastrophically; there the series
/// `q = -sum_{k>=2} (-1)^k (k-1) / (k (k+1)) x^k` with `x = 1/u` is used.
pub(crate) fn concavity_factor(u: f64) -> f64 {
    if u < 10.0 {
        return 2.0 - (2.0 * u + 1.0) * (1.0 / u).ln_1p();
    }
    let x = 1.0 / u;
    let mut sum = 0.0;
    let mut xk = x * x;
    let mut sign = 1.0;
    for k in 2..32 {
        let kf = k as f64;
        sum += sign * (kf - 1.0) / (kf * (kf + 1.0)) * xk;
        xk *= x;
        sign = -sign;
    }
    -sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearizationKind {
    Asymptotic,
    Tangent,
}

/// `rho = H (rho - anchor) + offset`, with `offset = f(anchor)`.
#[derive(Debug, Clone)]
pub struct LinearizedSystem {
    slope: DMatrix<f64>,
    anchor: LoadVector,
    offset: DVector<f64>,
    kind: LinearizationKind,
}

impl LinearizedSystem {
    /// Builds a system from raw parts. The slope must be square with a
    /// zero diagonal and nonnegative entries.
    pub fn new(
        slope: DMatrix<f64>,
        anchor: LoadVector,
        offset: DVector<f64>,
        kind: LinearizationKind,
    ) -> Result<Self> {
        let n = anchor.len();
        if slope.nrows() != n || slope.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: slope.nrows().max(slope.ncols()),
            });
        }
        if offset.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: offset.len(),
            });
        }
        for i in 0..n {
            if slope[(i, i)] != 0.0 {
                return Err(Error::Precondition(format!(
                    "slope diagonal entry {} must be zero",
                    i + 1
                )));
            }
        }
        if slope.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Precondition(
                "slope entries must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            slope,
            anchor,
            offset,
            kind,
        })
    }

    pub fn slope(&self) -> &DMatrix<f64> {
        &self.slope
    }

    pub fn anchor(&self) -> &LoadVector {
        &self.anchor
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn kind(&self) -> LinearizationKind {
        self.kind
    }

    pub fn n_cells(&self) -> usize {
        self.anchor.len()
    }

    /// `H (rho - anchor) + offset`.
    pub fn evaluate(&self, rho: &[f64]) -> DVector<f64> {
        assert_eq!(rho.len(), self.n_cells(), "load vector length");
        let delta = DVector::from_column_slice(rho) - self.anchor.as_vector();
        &self.slope * delta + &self.offset
    }

    /// Whether every off-diagonal slope entry is strictly positive.
    pub fn fully_coupled(&self) -> bool {
        let n = self.n_cells();
        (0..n).all(|i| (0..n).all(|k| i == k || self.slope[(i, k)] > 0.0))
    }

    /// Whether the coupling graph (edge `i -> k` when `H_ik > 0`) is
    /// strongly connected, i.e. `H` is irreducible.
    pub fn irreducible(&self) -> bool {
        let n = self.n_cells();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for (w, seen_w) in seen.iter_mut().enumerate() {
                    let h = if forward { self.slope[(v, w)] } else { self.slope[(w, v)] };
                    if h > 0.0 && !*seen_w {
                        *seen_w = true;
                        stack.push(w);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        n <= 1 || (reach(true) && reach(false))
    }
}
