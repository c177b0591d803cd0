//! Random instance corpus and reference evaluations computed straight from
//! the physical quantities (power, gain, noise, demand), independent of the
//! library's reparameterized coefficients.

#![allow(dead_code)]

use std::f64::consts::LN_2;

use loadcouple::linalg;
use loadcouple::netmodel::{Cell, GainMatrix, NetworkInstance, Pixel, ServingAssignment};
use loadcouple::CouplingCoefficients;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusShape {
    pub cells: (usize, usize),
    pub pixels_per_cell: (usize, usize),
    /// Target spectral radius of the asymptotic slope matrix.
    pub target_radius: (f64, f64),
}

impl Default for CorpusShape {
    fn default() -> Self {
        Self {
            cells: (2, 12),
            pixels_per_cell: (5, 50),
            target_radius: (0.2, 0.9),
        }
    }
}

/// Pixels are grouped per cell; each is served by its cell, whose gain is
/// 3 to 20 dB above every interferer. Demand is then scaled so that the
/// asymptotic slope matrix has a spectral radius drawn from `target_radius`.
pub fn random_instance(rng: &mut ChaCha8Rng, shape: CorpusShape) -> NetworkInstance {
    let n = rng.random_range(shape.cells.0..=shape.cells.1);
    let per_cell: Vec<usize> = (0..n)
        .map(|_| rng.random_range(shape.pixels_per_cell.0..=shape.pixels_per_cell.1))
        .collect();
    let m: usize = per_cell.iter().sum();
    let cells: Vec<Cell> = (0..n)
        .map(|i| Cell {
            power_per_ru: 0.8 * 10f64.powf(rng.random_range(-0.3..0.3)),
            position: [500.0 * i as f64, 0.0],
            azimuth_deg: 0.0,
        })
        .collect();
    let mut db = vec![0.0; n * m];
    let mut server_of = Vec::with_capacity(m);
    let mut pixels = Vec::with_capacity(m);
    let mut j = 0;
    for (i, &count) in per_cell.iter().enumerate() {
        for _ in 0..count {
            let own = rng.random_range(-125.0..-80.0);
            for k in 0..n {
                let p_ratio_db = 10.0 * (cells[i].power_per_ru / cells[k].power_per_ru).log10();
                db[k * m + j] = if k == i {
                    own
                } else {
                    own - rng.random_range(3.0..20.0) + p_ratio_db
                };
            }
            server_of.push(Some(i));
            pixels.push(Pixel {
                demand_bits: rng.random_range(0.2..1.0),
                position: [500.0 * i as f64, 0.0],
            });
            j += 1;
        }
    }
    let inst = NetworkInstance {
        cells,
        pixels,
        gains: GainMatrix::from_db(n, m, db),
        serving: ServingAssignment::from_server_of(n, server_of),
        noise_power: 5.7e-15,
        num_resource_units: 50_000,
        rate_scale: 180.0,
        wrap: None,
    };
    let target = rng.random_range(shape.target_radius.0..shape.target_radius.1);
    inst.with_demand_scale(target / h0_radius(&inst))
}

pub fn corpus(seed: u64, count: usize, shape: CorpusShape) -> Vec<NetworkInstance> {
    let mut r = rng(seed);
    (0..count).map(|_| random_instance(&mut r, shape)).collect()
}

/// Two cells, `k1` and `k2` pixels, with arbitrary geometry.
pub fn two_cell(rng: &mut ChaCha8Rng, k1: usize, k2: usize) -> NetworkInstance {
    random_instance(
        rng,
        CorpusShape {
            cells: (2, 2),
            pixels_per_cell: (k1.min(k2), k1.max(k2)),
            target_radius: (0.1, 0.95),
        },
    )
}

/// SINR from first principles.
pub fn direct_sinr(inst: &NetworkInstance, cell: usize, pixel: usize, rho: &[f64]) -> f64 {
    let signal = inst.cells[cell].power_per_ru * inst.gains.get(cell, pixel);
    let interference: f64 = (0..inst.n_cells())
        .filter(|&k| k != cell)
        .map(|k| inst.cells[k].power_per_ru * inst.gains.get(k, pixel) * rho[k])
        .sum();
    signal / (interference + inst.noise_power)
}

/// Resource share each cell needs: demand over the per-RU rate, summed.
pub fn direct_load(inst: &NetworkInstance, rho: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; inst.n_cells()];
    for (j, p) in inst.pixels.iter().enumerate() {
        if p.demand_bits <= 0.0 {
            continue;
        }
        let i = inst.serving.server_of(j).unwrap();
        let rate = inst.num_resource_units as f64 * inst.rate_scale * (1.0 + direct_sinr(inst, i, j, rho)).log2();
        out[i] += p.demand_bits / rate;
    }
    out
}

/// Limit slopes `ln 2 * sum_j d_j P_k g_kj / (K B P_i g_ij)`.
pub fn direct_h0(inst: &NetworkInstance) -> DMatrix<f64> {
    let n = inst.n_cells();
    let kb = inst.num_resource_units as f64 * inst.rate_scale;
    let mut h = DMatrix::zeros(n, n);
    for (j, p) in inst.pixels.iter().enumerate() {
        let i = inst.serving.server_of(j).unwrap();
        let own = inst.cells[i].power_per_ru * inst.gains.get(i, j);
        for k in (0..n).filter(|&k| k != i) {
            h[(i, k)] += LN_2 * p.demand_bits * inst.cells[k].power_per_ru * inst.gains.get(k, j) / (kb * own);
        }
    }
    h
}

/// Largest eigenvalue modulus via a full (non-symmetric) eigen decomposition.
pub fn eigen_radius(h: &DMatrix<f64>) -> f64 {
    h.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn h0_radius(inst: &NetworkInstance) -> f64 {
    eigen_radius(&direct_h0(inst))
}

/// `(I - H0) x = f(0)` with the reference matrices.
pub fn direct_h0_solution(inst: &NetworkInstance) -> Option<DVector<f64>> {
    let h = direct_h0(inst);
    let n = h.nrows();
    let f0 = DVector::from_vec(direct_load(inst, &vec![0.0; n]));
    linalg::solve_dense(&(DMatrix::identity(n, n) - h), &f0)
}

pub fn coeffs(inst: &NetworkInstance) -> CouplingCoefficients {
    CouplingCoefficients::new(inst).expect("valid instance")
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Uniform random point in `[0, hi]^n` componentwise.
pub fn random_point(rng: &mut ChaCha8Rng, hi: &[f64]) -> Vec<f64> {
    hi.iter().map(|&h| rng.random::<f64>() * h).collect()
}
