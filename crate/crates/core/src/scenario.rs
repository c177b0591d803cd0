//! Synthetic multi-site LTE layouts.
//!
//! Sites sit on a hexagonal lattice; each site carries `sectors_per_site`
//! directional cells. Path gain combines Okumura-Hata urban loss, a
//! parabolic horizontal sector pattern, antenna gains and log-normal
//! shadowing (one draw per site and user, shared by co-sited sectors).
//! With wrap-around enabled the site grid is treated as a torus and all
//! geometry uses the nearest periodic image.
//!
//! Azimuths are degrees counterclockwise from the x axis.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::netmodel::{
    assign_best_server, Cell, GainMatrix, NetworkInstance, Pixel, ServingAssignment, WrapLattice,
};
use crate::{Error, Result};

/// LTE resource block bandwidth.
const RB_BANDWIDTH_HZ: f64 = 180e3;
/// A resource unit is a pair of consecutive resource blocks (one subframe).
const RU_DURATION_S: f64 = 1e-3;
const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub num_sites: usize,
    pub sectors_per_site: usize,
    pub inter_site_distance_m: f64,
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub antenna_gain_dbi: f64,
    pub ue_gain_dbi: f64,
    pub shadow_sigma_db: f64,
    pub users_per_cell_area: usize,
    pub hotspot_fraction: f64,
    pub hotspot_radius_m: f64,
    /// Bits each user needs within `duration_s`.
    pub demand_bits_per_user: f64,
    pub wraparound: bool,
    pub rng_seed: u64,
    /// Total transmit power per cell, spread evenly over resource blocks.
    pub bs_power_dbm: f64,
    pub noise_figure_db: f64,
    pub duration_s: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    /// Distances are clamped to at least this value before path loss.
    pub min_distance_m: f64,
    pub beamwidth_deg: f64,
    pub front_to_back_db: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            num_sites: 3,
            sectors_per_site: 3,
            inter_site_distance_m: 500.0,
            carrier_ghz: 2.0,
            bandwidth_mhz: 10.0,
            antenna_gain_dbi: 14.0,
            ue_gain_dbi: 0.0,
            shadow_sigma_db: 8.0,
            users_per_cell_area: 30,
            hotspot_fraction: 2.0 / 3.0,
            hotspot_radius_m: 40.0,
            demand_bits_per_user: 400_000.0,
            wraparound: true,
            rng_seed: 1,
            bs_power_dbm: 46.0,
            noise_figure_db: 9.0,
            duration_s: 1.0,
            bs_height_m: 30.0,
            ue_height_m: 1.5,
            min_distance_m: 35.0,
            beamwidth_deg: 70.0,
            front_to_back_db: 20.0,
        }
    }
}

fn bad(field: &str, why: &str) -> Error {
    Error::InvalidSpec(format!("field `{field}` {why}"))
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("inter_site_distance_m", self.inter_site_distance_m),
            ("carrier_ghz", self.carrier_ghz),
            ("bandwidth_mhz", self.bandwidth_mhz),
            ("hotspot_radius_m", self.hotspot_radius_m),
            ("demand_bits_per_user", self.demand_bits_per_user),
            ("duration_s", self.duration_s),
            ("bs_height_m", self.bs_height_m),
            ("ue_height_m", self.ue_height_m),
            ("min_distance_m", self.min_distance_m),
            ("beamwidth_deg", self.beamwidth_deg),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(name, "must be positive"));
            }
        }
        for (name, v) in [
            ("antenna_gain_dbi", self.antenna_gain_dbi),
            ("ue_gain_dbi", self.ue_gain_dbi),
            ("bs_power_dbm", self.bs_power_dbm),
            ("noise_figure_db", self.noise_figure_db),
        ] {
            if !v.is_finite() {
                return Err(bad(name, "must be finite"));
            }
        }
        if self.num_sites == 0 {
            return Err(bad("num_sites", "must be positive"));
        }
        if self.sectors_per_site == 0 {
            return Err(bad("sectors_per_site", "must be positive"));
        }
        if self.users_per_cell_area == 0 {
            return Err(bad("users_per_cell_area", "must be positive"));
        }
        if !(self.shadow_sigma_db >= 0.0 && self.shadow_sigma_db.is_finite()) {
            return Err(bad("shadow_sigma_db", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.hotspot_fraction) {
            return Err(bad("hotspot_fraction", "must lie in [0, 1]"));
        }
        if !(self.front_to_back_db >= 0.0 && self.front_to_back_db.is_finite()) {
            return Err(bad("front_to_back_db", "must be non-negative"));
        }
        if self.wraparound && cluster_shape(self.num_sites).is_none() {
            return Err(bad(
                "num_sites",
                "must be of the form i^2 + ij + j^2 (1, 3, 4, 7, 9, 12, ...) for wrap-around",
            ));
        }
        if self.resource_blocks() == 0 {
            return Err(bad("bandwidth_mhz", "yields no resource blocks"));
        }
        Ok(())
    }

    /// Resource blocks in the carrier (50 for 10 MHz).
    pub fn resource_blocks(&self) -> u64 {
        (self.bandwidth_mhz * 5.0).round() as u64
    }

    /// Resource units available in `duration_s`.
    pub fn num_resource_units(&self) -> u64 {
        (self.resource_blocks() as f64 * self.duration_s / RU_DURATION_S).round() as u64
    }

    /// Bits per resource unit per unit of spectral efficiency.
    pub fn rate_scale(&self) -> f64 {
        RB_BANDWIDTH_HZ * RU_DURATION_S
    }

    pub fn power_per_ru_w(&self) -> f64 {
        dbm_to_w(self.bs_power_dbm) / self.resource_blocks() as f64
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_w(THERMAL_NOISE_DBM_PER_HZ + 10.0 * RB_BANDWIDTH_HZ.log10() + self.noise_figure_db)
    }

    fn sector_azimuths(&self) -> Vec<f64> {
        (0..self.sectors_per_site)
            .map(|k| 360.0 * k as f64 / self.sectors_per_site as f64)
            .collect()
    }
}

fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Okumura-Hata median path loss in dB for an urban small/medium city.
pub fn okumura_hata_urban_db(freq_mhz: f64, distance_km: f64, bs_height_m: f64, ue_height_m: f64) -> f64 {
    let lf = freq_mhz.log10();
    let lhb = bs_height_m.log10();
    let mobile_correction = (1.1 * lf - 0.7) * ue_height_m - (1.56 * lf - 0.8);
    69.55 + 26.16 * lf - 13.82 * lhb - mobile_correction + (44.9 - 6.55 * lhb) * distance_km.log10()
}

/// Horizontal sector pattern `-min(12 (theta / theta_3dB)^2, A_m)` in dB.
pub fn sector_pattern_db(offset_deg: f64, beamwidth_deg: f64, front_to_back_db: f64) -> f64 {
    let theta = wrap_degrees(offset_deg);
    -(12.0 * (theta / beamwidth_deg).powi(2)).min(front_to_back_db)
}

/// Maps an angle into `(-180, 180]`.
fn wrap_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// `(i, j)` with `i^2 + ij + j^2 = n`, `i >= 1`, `j >= 0`.
fn cluster_shape(n: usize) -> Option<(usize, usize)> {
    (1..=n).find_map(|i| (0..=i).find(|&j| i * i + i * j + j * j == n).map(|j| (i, j)))
}

struct Layout {
    sites: Vec<[f64; 2]>,
    wrap: Option<WrapLattice>,
}

fn layout(spec: &ScenarioSpec) -> Layout {
    let d = spec.inter_site_distance_m;
    let a1 = [d * 3f64.sqrt() / 2.0, d / 2.0];
    let a2 = [0.0, d];
    let at = |m: f64, n: f64| [m * a1[0] + n * a2[0], m * a1[1] + n * a2[1]];

    let wrap = spec.wraparound.then(|| {
        let (i, j) = cluster_shape(spec.num_sites).expect("validated");
        let (i, j) = (i as f64, j as f64);
        WrapLattice {
            v1: at(i, j),
            v2: at(-j, i + j),
        }
    });

    let reach = spec.num_sites as i64 + 1;
    let mut candidates: Vec<[f64; 2]> = (-reach..=reach)
        .flat_map(|m| (-reach..=reach).map(move |n| (m, n)))
        .map(|(m, n)| at(m as f64, n as f64))
        .collect();
    candidates.sort_by(|p, q| {
        let key = |v: &[f64; 2]| {
            let r = (v[0].hypot(v[1]) / d * 1e6).round();
            let ang = v[1].atan2(v[0]).to_degrees().rem_euclid(360.0);
            (r, (ang * 1e6).round())
        };
        key(p).partial_cmp(&key(q)).expect("finite")
    });

    let mut sites: Vec<[f64; 2]> = Vec::with_capacity(spec.num_sites);
    for c in candidates {
        if sites.len() == spec.num_sites {
            break;
        }
        let distinct = match &wrap {
            None => true,
            Some(w) => sites.iter().all(|s| {
                let img = w.minimum_image([c[0] - s[0], c[1] - s[1]]);
                img[0].hypot(img[1]) > 1e-6 * d
            }),
        };
        if distinct {
            sites.push(c);
        }
    }
    Layout { sites, wrap }
}

fn displacement(wrap: Option<&WrapLattice>, from: [f64; 2], to: [f64; 2]) -> [f64; 2] {
    let d = [to[0] - from[0], to[1] - from[1]];
    match wrap {
        Some(w) => w.minimum_image(d),
        None => d,
    }
}

/// Uniform point in the sector region `hexagon(site) ∩ wedge(azimuth ± half_width)`.
fn sample_in_cell(rng: &mut ChaCha8Rng, site: [f64; 2], isd: f64, azimuth: f64, half_width: f64) -> [f64; 2] {
    let apothem = isd / 2.0;
    let radius = isd / 3f64.sqrt();
    let normals = [30f64, 90.0, 150.0].map(|a| [a.to_radians().cos(), a.to_radians().sin()]);
    loop {
        let x = rng.random_range(-radius..radius);
        let y = rng.random_range(-radius..radius);
        if normals.iter().any(|n| (x * n[0] + y * n[1]).abs() > apothem) {
            continue;
        }
        let ang = y.atan2(x).to_degrees();
        if wrap_degrees(ang - azimuth).abs() <= half_width {
            return [site[0] + x, site[1] + y];
        }
    }
}

/// Builds a network instance; pure function of `spec` (including the seed).
pub fn generate(spec: &ScenarioSpec) -> Result<NetworkInstance> {
    spec.validate()?;
    let layout = layout(spec);
    let azimuths = spec.sector_azimuths();
    let half_width = 180.0 / spec.sectors_per_site as f64;
    let power = spec.power_per_ru_w();

    let cells: Vec<Cell> = layout
        .sites
        .iter()
        .flat_map(|&site| {
            azimuths.iter().map(move |&az| Cell {
                power_per_ru: power,
                position: site,
                azimuth_deg: az,
            })
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let n_hot = (spec.users_per_cell_area as f64 * spec.hotspot_fraction).round() as usize;
    let n_uniform = spec.users_per_cell_area - n_hot;
    let isd = spec.inter_site_distance_m;
    let mut pixels = Vec::with_capacity(cells.len() * spec.users_per_cell_area);
    for cell in &cells {
        let center = sample_in_cell(&mut rng, cell.position, isd, cell.azimuth_deg, half_width);
        for _ in 0..n_hot {
            let r = spec.hotspot_radius_m * rng.random::<f64>().sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            pixels.push(Pixel {
                demand_bits: spec.demand_bits_per_user,
                position: [center[0] + r * phi.cos(), center[1] + r * phi.sin()],
            });
        }
        for _ in 0..n_uniform {
            pixels.push(Pixel {
                demand_bits: spec.demand_bits_per_user,
                position: sample_in_cell(&mut rng, cell.position, isd, cell.azimuth_deg, half_width),
            });
        }
    }

    let shadow: Vec<Vec<f64>> = if spec.shadow_sigma_db > 0.0 {
        let normal = Normal::new(0.0, spec.shadow_sigma_db).expect("valid sigma");
        (0..layout.sites.len())
            .map(|_| (0..pixels.len()).map(|_| normal.sample(&mut rng)).collect())
            .collect()
    } else {
        vec![vec![0.0; pixels.len()]; layout.sites.len()]
    };

    let freq_mhz = spec.carrier_ghz * 1e3;
    let n = cells.len();
    let m = pixels.len();
    let mut db = Vec::with_capacity(n * m);
    for (i, cell) in cells.iter().enumerate() {
        let site = i / spec.sectors_per_site;
        for (j, p) in pixels.iter().enumerate() {
            let d = displacement(layout.wrap.as_ref(), cell.position, p.position);
            let dist_km = d[0].hypot(d[1]).max(spec.min_distance_m) / 1e3;
            let bearing = d[1].atan2(d[0]).to_degrees();
            let loss = okumura_hata_urban_db(freq_mhz, dist_km, spec.bs_height_m, spec.ue_height_m);
            let pattern = sector_pattern_db(bearing - cell.azimuth_deg, spec.beamwidth_deg, spec.front_to_back_db);
            db.push(-loss + spec.antenna_gain_dbi + spec.ue_gain_dbi + pattern + shadow[site][j]);
        }
    }
    let gains = GainMatrix::from_db(n, m, db);
    let serving = assign_best_server(&cells, &pixels, &gains);
    let inst = NetworkInstance {
        cells,
        pixels,
        gains,
        serving,
        noise_power: spec.noise_power_w(),
        num_resource_units: spec.num_resource_units(),
        rate_scale: spec.rate_scale(),
        wrap: layout.wrap,
    };
    debug_assert!(inst.validate().is_empty());
    Ok(inst)
}

/// Pattern parameters used by [`rotate_sector`].
#[derive(Debug, Clone, Copy)]
pub struct SectorPattern {
    pub beamwidth_deg: f64,
    pub front_to_back_db: f64,
}

impl Default for SectorPattern {
    fn default() -> Self {
        let spec = ScenarioSpec::default();
        Self {
            beamwidth_deg: spec.beamwidth_deg,
            front_to_back_db: spec.front_to_back_db,
        }
    }
}

/// Turns one cell to a new azimuth. Only that cell's gain row changes (the
/// pattern term is swapped), then serving areas are reassigned.
pub fn rotate_sector(inst: &NetworkInstance, cell: usize, new_azimuth_deg: f64) -> Result<NetworkInstance> {
    rotate_sector_with(inst, cell, new_azimuth_deg, SectorPattern::default())
}

pub fn rotate_sector_with(
    inst: &NetworkInstance,
    cell: usize,
    new_azimuth_deg: f64,
    pattern: SectorPattern,
) -> Result<NetworkInstance> {
    if cell >= inst.n_cells() {
        return Err(Error::Precondition(format!(
            "cell {} does not exist (instance has {})",
            cell + 1,
            inst.n_cells()
        )));
    }
    if !new_azimuth_deg.is_finite() {
        return Err(Error::Precondition("azimuth must be finite".into()));
    }
    let old = inst.cells[cell].azimuth_deg;
    let new = new_azimuth_deg.rem_euclid(360.0);
    if old.rem_euclid(360.0) == new {
        return Ok(inst.clone());
    }
    let mut out = inst.clone();
    let pos = inst.cells[cell].position;
    let row: Vec<f64> = inst
        .gains
        .db_row(cell)
        .iter()
        .zip(&inst.pixels)
        .map(|(&g, p)| {
            let d = displacement(inst.wrap.as_ref(), pos, p.position);
            let bearing = d[1].atan2(d[0]).to_degrees();
            let before = sector_pattern_db(bearing - old, pattern.beamwidth_deg, pattern.front_to_back_db);
            let after = sector_pattern_db(bearing - new, pattern.beamwidth_deg, pattern.front_to_back_db);
            g - before + after
        })
        .collect();
    out.gains.set_db_row(cell, &row);
    out.cells[cell].azimuth_deg = new;
    out.serving = assign_best_server(&out.cells, &out.pixels, &out.gains);
    Ok(out)
}

/// A `cell:azimuth` pair with a 1-based cell id, e.g. `1:120`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    /// 0-based cell index.
    pub cell: usize,
    pub azimuth_deg: f64,
}

impl FromStr for Rotation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Precondition(format!("expected <cell>:<azimuth_deg>, got `{s}`"));
        let (cell, az) = s.split_once(':').ok_or_else(err)?;
        let cell: usize = cell.trim().parse().map_err(|_| err())?;
        let azimuth_deg: f64 = az.trim().parse().map_err(|_| err())?;
        if cell == 0 || !azimuth_deg.is_finite() {
            return Err(err());
        }
        Ok(Self {
            cell: cell - 1,
            azimuth_deg,
        })
    }
}

impl Rotation {
    pub fn apply(&self, inst: &NetworkInstance) -> Result<NetworkInstance> {
        rotate_sector(inst, self.cell, self.azimuth_deg)
    }
}

/// Serving-area helper: pixels whose server changed between two instances.
pub fn reassigned_pixels(before: &ServingAssignment, after: &ServingAssignment) -> Vec<usize> {
    before
        .servers()
        .iter()
        .zip(after.servers())
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(j, _)| j)
        .collect()
}
