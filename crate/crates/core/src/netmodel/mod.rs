//! Network data model: cells, pixels, gains, demand and serving areas.
//!
//! Indices are 0-based everywhere in the library. The file format and the
//! CLI use 1-based cell and pixel ids.

mod io;

pub use io::{load_instance, parse_instance, save_instance, to_json, INSTANCE_VERSION};

use std::fmt;

/// A transmitting cell (one antenna per cell).
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Power spectral density per minimum resource unit, in watts.
    pub power_per_ru: f64,
    /// Antenna position in meters.
    pub position: [f64; 2],
    /// Boresight direction in degrees, counterclockwise from the x axis.
    pub azimuth_deg: f64,
}

/// A small area with uniform propagation that carries a traffic demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Pixel {
    /// Bits to deliver within the considered time interval.
    pub demand_bits: f64,
    pub position: [f64; 2],
}

/// Dense `cells x pixels` power gain matrix.
///
/// The dB values are canonical: the linear entries are always derived from
/// them, so an instance written to disk and read back is bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    n_cells: usize,
    n_pixels: usize,
    db: Vec<f64>,
    linear: Vec<f64>,
}

impl GainMatrix {
    /// Builds from row-major dB values (`cells x pixels`).
    pub fn from_db(n_cells: usize, n_pixels: usize, db: Vec<f64>) -> Self {
        assert_eq!(db.len(), n_cells * n_pixels, "gain matrix size");
        let linear = db.iter().map(|&v| db_to_linear(v)).collect();
        Self {
            n_cells,
            n_pixels,
            db,
            linear,
        }
    }

    /// Builds from row-major linear gains. Values are normalized through dB.
    pub fn from_linear(n_cells: usize, n_pixels: usize, linear: &[f64]) -> Self {
        let db = linear.iter().map(|&v| 10.0 * v.log10()).collect();
        Self::from_db(n_cells, n_pixels, db)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_pixels(&self) -> usize {
        self.n_pixels
    }

    #[inline]
    pub fn get(&self, cell: usize, pixel: usize) -> f64 {
        self.linear[cell * self.n_pixels + pixel]
    }

    #[inline]
    pub fn get_db(&self, cell: usize, pixel: usize) -> f64 {
        self.db[cell * self.n_pixels + pixel]
    }

    pub fn db_row(&self, cell: usize) -> &[f64] {
        &self.db[cell * self.n_pixels..(cell + 1) * self.n_pixels]
    }

    pub fn db_values(&self) -> &[f64] {
        &self.db
    }

    /// Replaces one cell's row of dB gains.
    pub fn set_db_row(&mut self, cell: usize, row: &[f64]) {
        assert_eq!(row.len(), self.n_pixels);
        let start = cell * self.n_pixels;
        for (j, &v) in row.iter().enumerate() {
            self.db[start + j] = v;
            self.linear[start + j] = db_to_linear(v);
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Pixel to cell assignment and its inverse, the per-cell serving areas.
#[derive(Debug, Clone, PartialEq)]
pub struct ServingAssignment {
    server_of: Vec<Option<usize>>,
    areas: Vec<Vec<usize>>,
}

impl ServingAssignment {
    /// Builds the assignment from a per-pixel server list. Entries that name
    /// a cell outside `0..n_cells` are kept in `server_of` (so `validate` can
    /// report them) but are left out of every serving area.
    pub fn from_server_of(n_cells: usize, server_of: Vec<Option<usize>>) -> Self {
        let mut areas = vec![Vec::new(); n_cells];
        for (j, s) in server_of.iter().enumerate() {
            if let Some(i) = *s {
                if i < n_cells {
                    areas[i].push(j);
                }
            }
        }
        Self { server_of, areas }
    }

    pub fn server_of(&self, pixel: usize) -> Option<usize> {
        self.server_of.get(pixel).copied().flatten()
    }

    pub fn servers(&self) -> &[Option<usize>] {
        &self.server_of
    }

    /// Pixels served by `cell`, in increasing pixel order.
    pub fn area(&self, cell: usize) -> &[usize] {
        &self.areas[cell]
    }

    pub fn n_cells(&self) -> usize {
        self.areas.len()
    }
}

/// Translation vectors of a toroidal site layout. Used only when geometry is
/// recomputed (sector rotation) for wrap-around scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrapLattice {
    pub v1: [f64; 2],
    pub v2: [f64; 2],
}

impl WrapLattice {
    /// Shortest image of the displacement `d` under the lattice translations.
    pub fn minimum_image(&self, d: [f64; 2]) -> [f64; 2] {
        let det = self.v1[0] * self.v2[1] - self.v1[1] * self.v2[0];
        let s = (d[0] * self.v2[1] - d[1] * self.v2[0]) / det;
        let t = (self.v1[0] * d[1] - self.v1[1] * d[0]) / det;
        let (s0, t0) = (s.round(), t.round());
        let mut best = d;
        let mut best_len = f64::INFINITY;
        for ds in -1..=1 {
            for dt in -1..=1 {
                let m = s0 + ds as f64;
                let n = t0 + dt as f64;
                let cand = [
                    d[0] - m * self.v1[0] - n * self.v2[0],
                    d[1] - m * self.v1[1] - n * self.v2[1],
                ];
                let len = cand[0].hypot(cand[1]);
                if len < best_len {
                    best_len = len;
                    best = cand;
                }
            }
        }
        best
    }
}

/// The complete input of a load coupling problem.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    pub cells: Vec<Cell>,
    pub pixels: Vec<Pixel>,
    pub gains: GainMatrix,
    pub serving: ServingAssignment,
    /// Noise power per resource unit, watts.
    pub noise_power: f64,
    /// Resource units available in the interval.
    pub num_resource_units: u64,
    /// Bits per resource unit per unit of log2(1 + SINR).
    pub rate_scale: f64,
    pub wrap: Option<WrapLattice>,
}

impl NetworkInstance {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_pixels(&self) -> usize {
        self.pixels.len()
    }

    /// Received power `P_i g_ij`.
    #[inline]
    pub fn received_power(&self, cell: usize, pixel: usize) -> f64 {
        self.cells[cell].power_per_ru * self.gains.get(cell, pixel)
    }

    /// Copy of the instance with every demand multiplied by `scale`.
    pub fn with_demand_scale(&self, scale: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.pixels {
            p.demand_bits *= scale;
        }
        out
    }

    /// Every invariant violation; empty when the instance is valid.
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    pub fn ensure_valid(&self) -> crate::Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::InvalidInstance(v))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    NoCells,
    NonPositiveNoise,
    NonPositiveResourceUnits,
    NonPositiveRateScale,
    NonPositivePower,
    NonFiniteGeometry,
    NegativeDemand,
    GainDimension,
    NonPositiveGain,
    ServingDimension,
    ServerOutOfRange,
    UnservedDemandPixel,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NoCells => "no_cells",
            Self::NonPositiveNoise => "non_positive_noise",
            Self::NonPositiveResourceUnits => "non_positive_resource_units",
            Self::NonPositiveRateScale => "non_positive_rate_scale",
            Self::NonPositivePower => "non_positive_power",
            Self::NonFiniteGeometry => "non_finite_geometry",
            Self::NegativeDemand => "negative_demand",
            Self::GainDimension => "gain_dimension",
            Self::NonPositiveGain => "non_positive_gain",
            Self::ServingDimension => "serving_dimension",
            Self::ServerOutOfRange => "server_out_of_range",
            Self::UnservedDemandPixel => "unserved_demand_pixel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code.as_str(), self.message)
    }
}

pub fn validate(inst: &NetworkInstance) -> Vec<Violation> {
    use ViolationCode::*;
    let mut out = Vec::new();
    let n = inst.cells.len();
    let m = inst.pixels.len();

    if n == 0 {
        out.push(Violation::new(NoCells, "instance must have at least one cell"));
    }
    if !(inst.noise_power > 0.0 && inst.noise_power.is_finite()) {
        out.push(Violation::new(
            NonPositiveNoise,
            "noise_power must be positive",
        ));
    }
    if inst.num_resource_units == 0 {
        out.push(Violation::new(
            NonPositiveResourceUnits,
            "num_resource_units must be positive",
        ));
    }
    if !(inst.rate_scale > 0.0 && inst.rate_scale.is_finite()) {
        out.push(Violation::new(
            NonPositiveRateScale,
            "rate_scale must be positive",
        ));
    }
    for (i, c) in inst.cells.iter().enumerate() {
        if !(c.power_per_ru > 0.0 && c.power_per_ru.is_finite()) {
            out.push(Violation::new(
                NonPositivePower,
                format!("cell {}: power_per_ru must be positive", i + 1),
            ));
        }
        if !(c.position.iter().all(|v| v.is_finite()) && c.azimuth_deg.is_finite()) {
            out.push(Violation::new(
                NonFiniteGeometry,
                format!("cell {}: position and azimuth must be finite", i + 1),
            ));
        }
    }
    for (j, p) in inst.pixels.iter().enumerate() {
        if !(p.demand_bits >= 0.0 && p.demand_bits.is_finite()) {
            out.push(Violation::new(
                NegativeDemand,
                format!("pixel {}: demand_bits must be finite and non-negative", j + 1),
            ));
        }
        if !p.position.iter().all(|v| v.is_finite()) {
            out.push(Violation::new(
                NonFiniteGeometry,
                format!("pixel {}: position must be finite", j + 1),
            ));
        }
    }

    let gains_ok = inst.gains.n_cells() == n && inst.gains.n_pixels() == m;
    if !gains_ok {
        out.push(Violation::new(
            GainDimension,
            format!(
                "gain matrix is {}x{}, expected {}x{}",
                inst.gains.n_cells(),
                inst.gains.n_pixels(),
                n,
                m
            ),
        ));
    } else {
        for i in 0..n {
            for j in 0..m {
                let g = inst.gains.get(i, j);
                if !(g > 0.0 && g.is_finite()) {
                    out.push(Violation::new(
                        NonPositiveGain,
                        format!(
                            "gain from cell {} to pixel {} must be positive and finite",
                            i + 1,
                            j + 1
                        ),
                    ));
                }
            }
        }
    }

    let serving = &inst.serving;
    if serving.servers().len() != m || serving.n_cells() != n {
        out.push(Violation::new(
            ServingDimension,
            format!(
                "serving assignment covers {} pixels and {} cells, expected {} and {}",
                serving.servers().len(),
                serving.n_cells(),
                m,
                n
            ),
        ));
    } else {
        for (j, s) in serving.servers().iter().enumerate() {
            match *s {
                Some(i) if i >= n => out.push(Violation::new(
                    ServerOutOfRange,
                    format!("pixel {} assigned to non-existent cell {}", j + 1, i + 1),
                )),
                None if inst.pixels[j].demand_bits > 0.0 => out.push(Violation::new(
                    UnservedDemandPixel,
                    format!("unserved demand pixel {}", j + 1),
                )),
                _ => {}
            }
        }
    }
    out
}

/// Serves each pixel by the cell with the largest received power `P_i g_ij`.
/// Ties go to the lowest cell index.
pub fn assign_best_server(cells: &[Cell], pixels: &[Pixel], gains: &GainMatrix) -> ServingAssignment {
    let server_of = (0..pixels.len())
        .map(|j| {
            let mut best: Option<(usize, f64)> = None;
            for (i, c) in cells.iter().enumerate() {
                let rx = c.power_per_ru * gains.get(i, j);
                if best.is_none_or(|(_, b)| rx > b) {
                    best = Some((i, rx));
                }
            }
            best.map(|(i, _)| i)
        })
        .collect();
    ServingAssignment::from_server_of(cells.len(), server_of)
}
