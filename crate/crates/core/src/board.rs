//! Physical board model: dimensions, named activation patterns, virtual
//! geometries derived from a pattern and multi-board tiling.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array_model::{ArrayError, ArrayGeometry};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoardError {
    #[error("unknown activation pattern `{0}` (expected 2x2, 4x4, 8x8, 10x10, off2 or off3)")]
    UnknownPattern(String),
    #[error("pattern does not fit the board: {0}")]
    Size(String),
    #[error("activation pattern has no active cells")]
    EmptyPattern,
    #[error("pattern file line {line}: {message}")]
    PatternFile { line: usize, message: String },
    #[error("invalid board spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Array(#[from] ArrayError),
}

pub type Result<T> = std::result::Result<T, BoardError>;

/// Names accepted by [`named_pattern`].
pub const PATTERN_NAMES: [&str; 6] = ["2x2", "4x4", "8x8", "10x10", "off2", "off3"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoardSpec {
    pub nx: usize,
    pub ny: usize,
    pub cell_pitch_m: f64,
    pub frequency_hz: f64,
}

impl Default for BoardSpec {
    /// 10 x 10 cells at 5.3 GHz with half-wavelength pitch.
    fn default() -> Self {
        Self::half_wavelength(10, 10, 5.3e9)
    }
}

impl BoardSpec {
    pub fn half_wavelength(nx: usize, ny: usize, frequency_hz: f64) -> Self {
        Self {
            nx,
            ny,
            cell_pitch_m: SPEED_OF_LIGHT / frequency_hz / 2.0,
            frequency_hz,
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    /// Pitch in wavelengths.
    pub fn delta(&self) -> f64 {
        self.cell_pitch_m / self.wavelength_m()
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Fully active geometry of one board.
    pub fn geometry(&self) -> Result<ArrayGeometry> {
        self.validate()?;
        Ok(ArrayGeometry::new(self.nx, self.ny, self.delta())?)
    }

    /// Board diagonal in meters.
    pub fn diagonal_m(&self) -> f64 {
        let w = self.nx as f64 * self.cell_pitch_m;
        let h = self.ny as f64 * self.cell_pitch_m;
        w.hypot(h)
    }

    fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(BoardError::Spec(format!("board must have cells, got {}x{}", self.nx, self.ny)));
        }
        if !(self.frequency_hz > 0.0) || !(self.cell_pitch_m > 0.0) {
            return Err(BoardError::Spec("frequency and pitch must be positive".into()));
        }
        Ok(())
    }
}

/// Activation mask over a board, indexed `ix * ny + iy`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationPattern {
    pub name: String,
    pub nx: usize,
    pub ny: usize,
    pub mask: Vec<bool>,
}

impl ActivationPattern {
    pub fn new(name: impl Into<String>, nx: usize, ny: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != nx * ny {
            return Err(BoardError::Size(format!(
                "mask has {} cells, board has {}",
                mask.len(),
                nx * ny
            )));
        }
        Ok(Self {
            name: name.into(),
            nx,
            ny,
            mask,
        })
    }

    pub fn full(spec: &BoardSpec) -> Self {
        Self {
            name: format!("{}x{}", spec.nx, spec.ny),
            nx: spec.nx,
            ny: spec.ny,
            mask: vec![true; spec.cells()],
        }
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_active(&self, ix: usize, iy: usize) -> bool {
        self.mask[ix * self.ny + iy]
    }

    /// Parses a text grid of `0`/`1` characters: `ny` rows of `nx` columns,
    /// row 0 is the top (highest `y`). Blank lines and `#` comments are
    /// skipped.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let rows: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let Some(&(_, first)) = rows.first() else {
            return Err(BoardError::PatternFile {
                line: 1,
                message: "no rows".into(),
            });
        };
        let nx = first.chars().count();
        let ny = rows.len();
        let mut mask = vec![false; nx * ny];
        for (r, &(line, row)) in rows.iter().enumerate() {
            if row.chars().count() != nx {
                return Err(BoardError::PatternFile {
                    line,
                    message: format!("expected {nx} columns, got {}", row.chars().count()),
                });
            }
            let iy = ny - 1 - r;
            for (ix, ch) in row.chars().enumerate() {
                mask[ix * ny + iy] = match ch {
                    '1' => true,
                    '0' => false,
                    other => {
                        return Err(BoardError::PatternFile {
                            line,
                            message: format!("unexpected character `{other}`"),
                        })
                    }
                };
            }
        }
        Self::new(name, nx, ny, mask)
    }

    /// Inverse of [`ActivationPattern::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for iy in (0..self.ny).rev() {
            for ix in 0..self.nx {
                out.push(if self.is_active(ix, iy) { '1' } else { '0' });
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// Centered `size x size` block; odd leftovers push the block toward the
/// lower indices.
pub fn centered_square(spec: &BoardSpec, size: usize) -> Result<ActivationPattern> {
    if size == 0 || size > spec.nx || size > spec.ny {
        return Err(BoardError::Size(format!(
            "{size}x{size} block does not fit a {}x{} board",
            spec.nx, spec.ny
        )));
    }
    let x0 = (spec.nx - size) / 2;
    let y0 = (spec.ny - size) / 2;
    let mut mask = vec![false; spec.cells()];
    for ix in x0..x0 + size {
        for iy in y0..y0 + size {
            mask[ix * spec.ny + iy] = true;
        }
    }
    ActivationPattern::new(format!("{size}x{size}"), spec.nx, spec.ny, mask)
}

/// Every `stride`-th cell on both axes, anchored at cell (0, 0).
pub fn strided(spec: &BoardSpec, stride: usize) -> Result<ActivationPattern> {
    if stride == 0 {
        return Err(BoardError::Size("stride must be positive".into()));
    }
    let mask = (0..spec.cells())
        .map(|n| (n / spec.ny).is_multiple_of(stride) && (n % spec.ny).is_multiple_of(stride))
        .collect();
    ActivationPattern::new(format!("off{stride}"), spec.nx, spec.ny, mask)
}

pub fn named_pattern(name: &str, spec: &BoardSpec) -> Result<ActivationPattern> {
    match name {
        "2x2" => centered_square(spec, 2),
        "4x4" => centered_square(spec, 4),
        "8x8" => centered_square(spec, 8),
        "10x10" => centered_square(spec, 10),
        "off2" => strided(spec, 2),
        "off3" => strided(spec, 3),
        other => Err(BoardError::UnknownPattern(other.to_string())),
    }
}

/// Common stride of a sorted index set, if it is an arithmetic progression.
fn progression_stride(indices: &BTreeSet<usize>) -> Option<Option<usize>> {
    let v: Vec<usize> = indices.iter().copied().collect();
    if v.len() < 2 {
        return Some(None);
    }
    let stride = v[1] - v[0];
    v.windows(2)
        .all(|w| w[1] - w[0] == stride)
        .then_some(Some(stride))
}

/// Geometry seen by the beamformer for `pattern`. Regular lattices collapse
/// to a dense array of their active cells with spacing scaled by the
/// stride; anything else keeps the board geometry with the mask applied.
pub fn virtual_geometry(spec: &BoardSpec, pattern: &ActivationPattern) -> Result<ArrayGeometry> {
    spec.validate()?;
    if pattern.nx != spec.nx || pattern.ny != spec.ny {
        return Err(BoardError::Size(format!(
            "pattern is {}x{}, board is {}x{}",
            pattern.nx, pattern.ny, spec.nx, spec.ny
        )));
    }
    let active: Vec<(usize, usize)> = (0..spec.cells())
        .filter(|&n| pattern.mask[n])
        .map(|n| (n / spec.ny, n % spec.ny))
        .collect();
    if active.is_empty() {
        return Err(BoardError::EmptyPattern);
    }
    let xs: BTreeSet<usize> = active.iter().map(|p| p.0).collect();
    let ys: BTreeSet<usize> = active.iter().map(|p| p.1).collect();
    let is_lattice = xs.len() * ys.len() == active.len();

    let stride = match (progression_stride(&xs), progression_stride(&ys)) {
        (Some(sx), Some(sy)) if is_lattice => match (sx, sy) {
            (Some(a), Some(b)) if a == b => Some(a),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => Some(1),
            _ => None,
        },
        _ => None,
    };

    match stride {
        Some(s) => Ok(ArrayGeometry::new(xs.len(), ys.len(), spec.delta() * s as f64)?),
        None => Ok(ArrayGeometry::with_mask(
            spec.nx,
            spec.ny,
            spec.delta(),
            pattern.mask.clone(),
        )?),
    }
}

/// Geometry of `m_x x m_y` boards sharing a bus; the pitch is preserved
/// across board seams.
pub fn tile_boards(spec: &BoardSpec, m_x: usize, m_y: usize) -> Result<ArrayGeometry> {
    spec.validate()?;
    if m_x == 0 || m_y == 0 {
        return Err(BoardError::Size(format!("board counts must be positive, got {m_x}x{m_y}")));
    }
    Ok(ArrayGeometry::new(spec.nx * m_x, spec.ny * m_y, spec.delta())?)
}

/// Repeats one board's pattern over an `m_x x m_y` tiling.
pub fn tile_pattern(pattern: &ActivationPattern, m_x: usize, m_y: usize) -> ActivationPattern {
    let (nx, ny) = (pattern.nx * m_x, pattern.ny * m_y);
    let mask = (0..nx * ny)
        .map(|n| {
            let (ix, iy) = (n / ny, n % ny);
            pattern.is_active(ix % pattern.nx, iy % pattern.ny)
        })
        .collect();
    ActivationPattern {
        name: format!("{}@{m_x}x{m_y}", pattern.name),
        nx,
        ny,
        mask,
    }
}

/// Board that owns cell `(ix, iy)` of a tiling, its id on the shared bus
/// (`bx * m_y + by`) and the local coordinates on that board.
pub fn locate_cell(spec: &BoardSpec, m_y: usize, ix: usize, iy: usize) -> (usize, usize, usize) {
    let (bx, by) = (ix / spec.nx, iy / spec.ny);
    (bx * m_y + by, ix % spec.nx, iy % spec.ny)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_board() {
        let b = BoardSpec::default();
        assert_eq!((b.nx, b.ny), (10, 10));
        assert_abs_diff_eq!(b.wavelength_m() * 1e3, 56.56, epsilon = 0.01);
        assert_abs_diff_eq!(b.delta(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn named_pattern_counts() {
        let b = BoardSpec::default();
        let counts: Vec<usize> = PATTERN_NAMES
            .iter()
            .map(|n| named_pattern(n, &b).unwrap().active_count())
            .collect();
        assert_eq!(counts, vec![4, 16, 64, 100, 25, 16]);
        assert!(matches!(
            named_pattern("3x7", &b),
            Err(BoardError::UnknownPattern(_))
        ));
    }

    #[test]
    fn squares_are_centered() {
        let b = BoardSpec::default();
        let p = named_pattern("2x2", &b).unwrap();
        assert!(p.is_active(4, 4) && p.is_active(5, 5));
        let p = centered_square(&b, 3).unwrap();
        // (10 - 3) / 2 = 3: leftover goes to the high side
        assert!(p.is_active(3, 3) && p.is_active(5, 5) && !p.is_active(6, 6));
    }

    #[test]
    fn virtual_geometries() {
        let b = BoardSpec::default();
        let g = virtual_geometry(&b, &named_pattern("off2", &b).unwrap()).unwrap();
        assert_eq!((g.nx(), g.ny()), (5, 5));
        assert_abs_diff_eq!(g.delta(), 1.0, epsilon = 1e-12);
        let g = virtual_geometry(&b, &named_pattern("off3", &b).unwrap()).unwrap();
        assert_eq!((g.nx(), g.ny()), (4, 4));
        assert_abs_diff_eq!(g.delta(), 1.5, epsilon = 1e-12);
        let g = virtual_geometry(&b, &ActivationPattern::full(&b)).unwrap();
        assert_eq!((g.nx(), g.ny(), g.active_count()), (10, 10, 100));
        assert_abs_diff_eq!(g.delta(), 0.5, epsilon = 1e-12);
        let g = virtual_geometry(&b, &named_pattern("4x4", &b).unwrap()).unwrap();
        assert_eq!((g.nx(), g.ny()), (4, 4));
    }

    #[test]
    fn irregular_mask_keeps_board_geometry() {
        let b = BoardSpec::default();
        let mut mask = vec![false; 100];
        mask[0] = true;
        mask[11] = true;
        mask[13] = true;
        let p = ActivationPattern::new("custom", 10, 10, mask.clone()).unwrap();
        let g = virtual_geometry(&b, &p).unwrap();
        assert_eq!((g.nx(), g.ny(), g.active_count()), (10, 10, 3));
        assert_eq!(g.mask(), &mask[..]);
    }

    #[test]
    fn empty_pattern_is_degenerate() {
        let b = BoardSpec::default();
        let p = ActivationPattern::new("none", 10, 10, vec![false; 100]).unwrap();
        assert_eq!(virtual_geometry(&b, &p), Err(BoardError::EmptyPattern));
    }

    #[test]
    fn single_cell_is_one_element_array() {
        let b = BoardSpec::default();
        let mut mask = vec![false; 100];
        mask[42] = true;
        let g = virtual_geometry(&b, &ActivationPattern::new("one", 10, 10, mask).unwrap()).unwrap();
        assert_eq!((g.nx(), g.ny()), (1, 1));
    }

    #[test]
    fn tiling() {
        let b = BoardSpec::default();
        assert_eq!(tile_boards(&b, 1, 1).unwrap(), b.geometry().unwrap());
        let g = tile_boards(&b, 2, 1).unwrap();
        assert_eq!((g.nx(), g.ny()), (20, 10));
        assert_abs_diff_eq!(g.delta(), 0.5, epsilon = 1e-15);
        let g = tile_boards(&b, 3, 2).unwrap();
        assert_eq!((g.nx(), g.ny(), g.len()), (30, 20, 600));
        assert!(tile_boards(&b, 0, 1).is_err());
        assert_eq!(locate_cell(&b, 2, 25, 13), (5, 5, 3));
    }

    #[test]
    fn tiling_full_masks_commutes() {
        let b = BoardSpec::default();
        let tiled = tile_pattern(&ActivationPattern::full(&b), 3, 2);
        let geometry = tile_boards(&b, 3, 2).unwrap();
        assert_eq!(geometry.masked(tiled.mask).unwrap(), geometry);
    }

    #[test]
    fn pattern_text_round_trip() {
        let b = BoardSpec::default();
        let p = named_pattern("off3", &b).unwrap();
        let text = p.to_text();
        assert_eq!(text.lines().count(), 10);
        // row 9 from the top is y = 0
        assert_eq!(text.lines().last().unwrap(), "1001001001");
        let back = ActivationPattern::parse("off3", &text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn pattern_file_orientation_and_errors() {
        let p = ActivationPattern::parse("t", "# top row first\n100\n000\n").unwrap();
        assert_eq!((p.nx, p.ny), (3, 2));
        assert!(p.is_active(0, 1));
        assert!(!p.is_active(0, 0));
        assert!(matches!(
            ActivationPattern::parse("t", "10\n1\n"),
            Err(BoardError::PatternFile { line: 2, .. })
        ));
        assert!(matches!(
            ActivationPattern::parse("t", "1x\n"),
            Err(BoardError::PatternFile { line: 1, .. })
        ));
        assert!(ActivationPattern::parse("t", "").is_err());
    }
}
