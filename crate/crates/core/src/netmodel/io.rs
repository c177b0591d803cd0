//! JSON instance files.
//!
//! ```text
//! {
//!   "version": 1,
//!   "noise_power_w": 3.9e-15,
//!   "num_resource_units": 50000,
//!   "rate_scale": 180.0,
//!   "cells":  [{"id": 1, "power_per_ru_w": 0.8, "x_m": 0, "y_m": 0, "azimuth_deg": 0}],
//!   "pixels": [{"id": 1, "demand_bits": 4e5, "x_m": 10, "y_m": 20}],
//!   "gains_db": [-95.2],                       // row-major, cells x pixels
//!   "serving": [{"pixel": 1, "cell": 1}],      // optional, best server if absent
//!   "wrap_lattice_m": [[750, 433], [0, 866]]   // optional
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    assign_best_server, Cell, GainMatrix, NetworkInstance, Pixel, ServingAssignment, WrapLattice,
};
use crate::{Error, Result};

pub const INSTANCE_VERSION: i64 = 1;

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    version: i64,
    noise_power_w: f64,
    num_resource_units: u64,
    rate_scale: f64,
    cells: Vec<CellRecord>,
    pixels: Vec<PixelRecord>,
    gains_db: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    serving: Option<Vec<ServingRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wrap_lattice_m: Option<[[f64; 2]; 2]>,
}

#[derive(Serialize, Deserialize)]
struct CellRecord {
    id: usize,
    power_per_ru_w: f64,
    x_m: f64,
    y_m: f64,
    azimuth_deg: f64,
}

#[derive(Serialize, Deserialize)]
struct PixelRecord {
    id: usize,
    demand_bits: f64,
    x_m: f64,
    y_m: f64,
}

#[derive(Serialize, Deserialize)]
struct ServingRecord {
    pixel: usize,
    cell: usize,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

fn from_json_error(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(end) = rest.find('`') {
            return schema(&rest[..end], "required field is missing");
        }
    }
    let message = match msg.find(" at line ") {
        Some(pos) => msg[..pos].to_string(),
        None => msg,
    };
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message,
    }
}

/// Parses an instance document. Does not run `validate`; callers decide.
pub fn parse_instance(text: &str) -> Result<NetworkInstance> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(from_json_error)?;
    let version = match probe.version {
        None => return Err(schema("version", "required field is missing")),
        Some(v) => v
            .as_i64()
            .ok_or_else(|| schema("version", "must be an integer"))?,
    };
    if version != INSTANCE_VERSION {
        return Err(Error::Version {
            found: version,
            expected: INSTANCE_VERSION,
        });
    }
    let file: InstanceFile = serde_json::from_str(text).map_err(from_json_error)?;
    from_file(file)
}

fn from_file(file: InstanceFile) -> Result<NetworkInstance> {
    let n = file.cells.len();
    let m = file.pixels.len();
    let mut cells = Vec::with_capacity(n);
    for (k, c) in file.cells.into_iter().enumerate() {
        if c.id != k + 1 {
            return Err(schema(
                format!("cells[{k}].id"),
                format!("expected id {}, found {}", k + 1, c.id),
            ));
        }
        cells.push(Cell {
            power_per_ru: c.power_per_ru_w,
            position: [c.x_m, c.y_m],
            azimuth_deg: c.azimuth_deg,
        });
    }
    let mut pixels = Vec::with_capacity(m);
    for (k, p) in file.pixels.into_iter().enumerate() {
        if p.id != k + 1 {
            return Err(schema(
                format!("pixels[{k}].id"),
                format!("expected id {}, found {}", k + 1, p.id),
            ));
        }
        pixels.push(Pixel {
            demand_bits: p.demand_bits,
            position: [p.x_m, p.y_m],
        });
    }
    let expected = n.checked_mul(m).ok_or_else(|| schema("gains_db", "too large"))?;
    if file.gains_db.len() != expected {
        return Err(schema(
            "gains_db",
            format!("expected {} entries ({n} cells x {m} pixels), found {}", expected, file.gains_db.len()),
        ));
    }
    let gains = GainMatrix::from_db(n, m, file.gains_db);

    let serving = match file.serving {
        None => assign_best_server(&cells, &pixels, &gains),
        Some(records) => {
            let mut server_of = vec![None; m];
            for (k, r) in records.iter().enumerate() {
                if r.pixel == 0 || r.pixel > m {
                    return Err(schema(
                        format!("serving[{k}].pixel"),
                        format!("pixel id {} out of range 1..={m}", r.pixel),
                    ));
                }
                if r.cell == 0 {
                    return Err(schema(format!("serving[{k}].cell"), "cell ids start at 1"));
                }
                let slot = &mut server_of[r.pixel - 1];
                if slot.is_some() {
                    return Err(schema(
                        format!("serving[{k}].pixel"),
                        format!("pixel {} assigned twice", r.pixel),
                    ));
                }
                *slot = Some(r.cell - 1);
            }
            ServingAssignment::from_server_of(n, server_of)
        }
    };

    Ok(NetworkInstance {
        cells,
        pixels,
        gains,
        serving,
        noise_power: file.noise_power_w,
        num_resource_units: file.num_resource_units,
        rate_scale: file.rate_scale,
        wrap: file.wrap_lattice_m.map(|[v1, v2]| WrapLattice { v1, v2 }),
    })
}

/// Serializes an instance, always including the serving assignment.
pub fn to_json(inst: &NetworkInstance) -> String {
    let file = InstanceFile {
        version: INSTANCE_VERSION,
        noise_power_w: inst.noise_power,
        num_resource_units: inst.num_resource_units,
        rate_scale: inst.rate_scale,
        cells: inst
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| CellRecord {
                id: i + 1,
                power_per_ru_w: c.power_per_ru,
                x_m: c.position[0],
                y_m: c.position[1],
                azimuth_deg: c.azimuth_deg,
            })
            .collect(),
        pixels: inst
            .pixels
            .iter()
            .enumerate()
            .map(|(j, p)| PixelRecord {
                id: j + 1,
                demand_bits: p.demand_bits,
                x_m: p.position[0],
                y_m: p.position[1],
            })
            .collect(),
        gains_db: inst.gains.db_values().to_vec(),
        serving: Some(
            inst.serving
                .servers()
                .iter()
                .enumerate()
                .filter_map(|(j, s)| {
                    s.map(|i| ServingRecord {
                        pixel: j + 1,
                        cell: i + 1,
                    })
                })
                .collect(),
        ),
        wrap_lattice_m: inst.wrap.map(|w| [w.v1, w.v2]),
    };
    serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<NetworkInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_instance(&text)
}

pub fn save_instance(inst: &NetworkInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(inst)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
