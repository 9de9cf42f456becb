//! Angular-grid codebooks of RIS configurations.
//!
//! A codebook samples a regular azimuth/elevation grid (both endpoints
//! included), synthesizes the UPA response for every grid couple and stores
//! the quantized phase-aligning configuration for it.
//!
//! # File format
//!
//! Codebooks are stored as a JSON document, one entry per line:
//!
//! ```text
//! {
//!   "version": 1,
//!   "nx": 2,
//!   "ny": 2,
//!   "delta": 0.5,
//!   "mask": [1,1,1,1],
//!   "phases_rad": [...],
//!   "has_absorb": true,
//!   "spacing_deg": 90.0,
//!   "azimuth_range_deg": [-90.0,90.0],
//!   "elevation_range_deg": [-90.0,90.0],
//!   "entries": [
//!     {"azimuth_deg":-90.0,"elevation_deg":-90.0,"states":[6,6,6,6]},
//!     ...
//!   ]
//! }
//! ```
//!
//! Entries are azimuth-major. Cell states are 3-bit codes `0..=6` for phase
//! indices and `7` for the absorbing port.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array_model::{
    optimal_config, upa_response, ArrayError, ArrayGeometry, CellState, PhaseSet,
    RisConfiguration, SteeringAngles,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}`{}: {message}", entry.map(|e| format!(" in entry {e}")).unwrap_or_default())]
    Field {
        entry: Option<usize>,
        field: &'static str,
        message: String,
    },
    #[error("unsupported codebook version {found} (expected {expected})")]
    Version { found: u64, expected: u32 },
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CodebookError>;

/// Closed azimuth/elevation ranges in degrees sampled at a common step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub azimuth_deg: (f64, f64),
    pub elevation_deg: (f64, f64),
    pub spacing_deg: f64,
}

impl Default for GridSpec {
    /// `[-90, 90] x [-45, 45]` at 3 degrees: 61 x 31 = 1891 couples.
    fn default() -> Self {
        Self {
            azimuth_deg: (-90.0, 90.0),
            elevation_deg: (-45.0, 45.0),
            spacing_deg: 3.0,
        }
    }
}

fn axis_count(name: &str, (lo, hi): (f64, f64), step: f64) -> Result<usize> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(CodebookError::GridMismatch(format!(
            "{name} range [{lo}, {hi}] is not well ordered"
        )));
    }
    let steps = (hi - lo) / step;
    let rounded = steps.round();
    if (steps - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(CodebookError::GridMismatch(format!(
            "{name} span {} is not a multiple of the {step} degree spacing",
            hi - lo
        )));
    }
    Ok(rounded as usize + 1)
}

fn axis_values(lo: f64, count: usize, step: f64) -> Vec<f64> {
    (0..count).map(|i| lo + i as f64 * step).collect()
}

impl GridSpec {
    pub fn new(azimuth_deg: (f64, f64), elevation_deg: (f64, f64), spacing_deg: f64) -> Result<Self> {
        let spec = Self {
            azimuth_deg,
            elevation_deg,
            spacing_deg,
        };
        spec.shape()?;
        Ok(spec)
    }

    /// `(azimuth points, elevation points)`.
    pub fn shape(&self) -> Result<(usize, usize)> {
        if !(self.spacing_deg > 0.0 && self.spacing_deg.is_finite()) {
            return Err(CodebookError::GridMismatch(format!(
                "spacing must be positive, got {}",
                self.spacing_deg
            )));
        }
        Ok((
            axis_count("azimuth", self.azimuth_deg, self.spacing_deg)?,
            axis_count("elevation", self.elevation_deg, self.spacing_deg)?,
        ))
    }

    pub fn azimuths_deg(&self) -> Result<Vec<f64>> {
        let (na, _) = self.shape()?;
        Ok(axis_values(self.azimuth_deg.0, na, self.spacing_deg))
    }

    pub fn elevations_deg(&self) -> Result<Vec<f64>> {
        let (_, ne) = self.shape()?;
        Ok(axis_values(self.elevation_deg.0, ne, self.spacing_deg))
    }
}

/// All grid couples, azimuth outer and elevation inner.
pub fn angular_grid(grid: &GridSpec) -> Result<Vec<SteeringAngles>> {
    let azimuths = grid.azimuths_deg()?;
    let elevations = grid.elevations_deg()?;
    let mut out = Vec::with_capacity(azimuths.len() * elevations.len());
    for &az in &azimuths {
        for &el in &elevations {
            out.push(SteeringAngles::from_degrees(az, el)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookEntry {
    pub target: SteeringAngles,
    pub config: RisConfiguration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub geometry: ArrayGeometry,
    pub phase_set: PhaseSet,
    pub grid: GridSpec,
    pub entries: Vec<CodebookEntry>,
}

/// Builds the codebook for `geometry` over `grid`. Grid points are
/// evaluated in parallel and assembled in grid order.
pub fn build_codebook(
    geometry: &ArrayGeometry,
    grid: &GridSpec,
    phase_set: &PhaseSet,
) -> Result<Codebook> {
    let targets = angular_grid(grid)?;
    let entries = targets
        .into_par_iter()
        .map(|target| {
            let hbar = upa_response(geometry, &target);
            optimal_config(&hbar, phase_set, geometry).map(|config| CodebookEntry { target, config })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Codebook {
        geometry: geometry.clone(),
        phase_set: phase_set.clone(),
        grid: *grid,
        entries,
    })
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry whose grid couple is closest to the requested angles (degrees).
    pub fn nearest(&self, azimuth_deg: f64, elevation_deg: f64) -> Option<&CodebookEntry> {
        let (na, ne) = self.grid.shape().ok()?;
        let step = self.grid.spacing_deg;
        let idx = |v: f64, lo: f64, n: usize| -> usize {
            (((v - lo) / step).round().max(0.0) as usize).min(n - 1)
        };
        let ia = idx(azimuth_deg, self.grid.azimuth_deg.0, na);
        let ie = idx(elevation_deg, self.grid.elevation_deg.0, ne);
        self.entries.get(ia * ne + ie)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    azimuth_deg: f64,
    elevation_deg: f64,
    states: Vec<u8>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(rename = "version")]
    _version: u64,
    nx: usize,
    ny: usize,
    delta: f64,
    mask: Vec<u8>,
    phases_rad: Vec<f64>,
    has_absorb: bool,
    spacing_deg: f64,
    azimuth_range_deg: [f64; 2],
    elevation_range_deg: [f64; 2],
    entries: Vec<EntryDoc>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u64>,
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

/// Writes `cb` in the versioned text format. Output is byte-identical for
/// equal codebooks.
pub fn save_codebook<W: Write>(cb: &Codebook, mut sink: W) -> Result<()> {
    let g = &cb.geometry;
    let mask: Vec<u8> = g.mask().iter().map(|&m| m as u8).collect();
    writeln!(sink, "{{")?;
    writeln!(sink, "  \"version\": {FORMAT_VERSION},")?;
    writeln!(sink, "  \"nx\": {},", g.nx())?;
    writeln!(sink, "  \"ny\": {},", g.ny())?;
    writeln!(sink, "  \"delta\": {},", json(&g.delta()))?;
    writeln!(sink, "  \"mask\": {},", json(&mask))?;
    writeln!(sink, "  \"phases_rad\": {},", json(cb.phase_set.phases_rad()))?;
    writeln!(sink, "  \"has_absorb\": {},", cb.phase_set.has_absorb())?;
    writeln!(sink, "  \"spacing_deg\": {},", json(&cb.grid.spacing_deg))?;
    writeln!(
        sink,
        "  \"azimuth_range_deg\": {},",
        json(&[cb.grid.azimuth_deg.0, cb.grid.azimuth_deg.1])
    )?;
    writeln!(
        sink,
        "  \"elevation_range_deg\": {},",
        json(&[cb.grid.elevation_deg.0, cb.grid.elevation_deg.1])
    )?;
    writeln!(sink, "  \"entries\": [")?;
    let azimuths = cb.grid.azimuths_deg()?;
    let elevations = cb.grid.elevations_deg()?;
    let ne = elevations.len();
    for (i, entry) in cb.entries.iter().enumerate() {
        let doc = EntryDoc {
            azimuth_deg: azimuths[i / ne],
            elevation_deg: elevations[i % ne],
            states: entry.config.states().iter().map(|s| s.code()).collect(),
        };
        let sep = if i + 1 < cb.entries.len() { "," } else { "" };
        writeln!(sink, "    {}{sep}", json(&doc))?;
    }
    writeln!(sink, "  ]")?;
    writeln!(sink, "}}")?;
    Ok(())
}

fn parse_error(e: serde_json::Error) -> CodebookError {
    CodebookError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn field(entry: Option<usize>, field: &'static str, message: impl Into<String>) -> CodebookError {
    CodebookError::Field {
        entry,
        field,
        message: message.into(),
    }
}

/// Reads a codebook written by [`save_codebook`], validating every field.
pub fn load_codebook<R: Read>(mut source: R) -> Result<Codebook> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;

    let probe: VersionProbe = serde_json::from_str(&text).map_err(parse_error)?;
    match probe.version {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(found) => {
            return Err(CodebookError::Version {
                found,
                expected: FORMAT_VERSION,
            })
        }
        None => return Err(field(None, "version", "missing")),
    }
    let doc: Document = serde_json::from_str(&text).map_err(parse_error)?;

    if let Some(bad) = doc.mask.iter().find(|&&m| m > 1) {
        return Err(field(None, "mask", format!("mask values must be 0 or 1, got {bad}")));
    }
    let geometry = ArrayGeometry::with_mask(
        doc.nx,
        doc.ny,
        doc.delta,
        doc.mask.iter().map(|&m| m == 1).collect(),
    )
    .map_err(|e| field(None, "mask", e.to_string()))?;
    let phase_set = PhaseSet::new(doc.phases_rad, doc.has_absorb)
        .map_err(|e| field(None, "phases_rad", e.to_string()))?;
    let grid = GridSpec::new(
        (doc.azimuth_range_deg[0], doc.azimuth_range_deg[1]),
        (doc.elevation_range_deg[0], doc.elevation_range_deg[1]),
        doc.spacing_deg,
    )?;
    let targets = angular_grid(&grid)?;
    if targets.len() != doc.entries.len() {
        return Err(field(
            None,
            "entries",
            format!("grid has {} couples but {} entries were stored", targets.len(), doc.entries.len()),
        ));
    }

    let mut entries = Vec::with_capacity(doc.entries.len());
    for (i, (e, target)) in doc.entries.into_iter().zip(targets).enumerate() {
        if (e.azimuth_deg - target.azimuth_deg()).abs() > 1e-9
            || (e.elevation_deg - target.elevation_deg()).abs() > 1e-9
        {
            return Err(field(
                Some(i),
                "azimuth_deg",
                format!(
                    "({}, {}) does not match grid couple ({}, {})",
                    e.azimuth_deg,
                    e.elevation_deg,
                    target.azimuth_deg(),
                    target.elevation_deg()
                ),
            ));
        }
        if e.states.len() != geometry.len() {
            return Err(field(
                Some(i),
                "states",
                format!("expected {} cell states, got {}", geometry.len(), e.states.len()),
            ));
        }
        let states = e
            .states
            .iter()
            .map(|&code| match CellState::from_code(code) {
                Some(CellState::Phase(k)) if (k as usize) >= phase_set.len() => Err(field(
                    Some(i),
                    "states",
                    format!("phase index {k} exceeds the {}-phase set", phase_set.len()),
                )),
                Some(s) => Ok(s),
                None => Err(field(Some(i), "states", format!("cell state {code} outside 0..=7"))),
            })
            .collect::<Result<Vec<_>>>()?;
        entries.push(CodebookEntry {
            target,
            config: RisConfiguration::new(states),
        });
    }

    Ok(Codebook {
        geometry,
        phase_set,
        grid,
        entries,
    })
}
