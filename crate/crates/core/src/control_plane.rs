//! Emulator of the board configuration bus.
//!
//! Each cell has an AND gate fed by its row line (x) and column line (y).
//! When both go high the gate output rises and the cell's three flip-flops
//! latch the shared 3-bit phase bus. Driving `nx + ny` selection lines
//! instead of one line per cell is what keeps the wiring linear in the board
//! side length.

use std::io::Write;

use thiserror::Error;

use crate::array_model::{CellState, RisConfiguration, ABSORB_CODE};
use crate::board::{locate_cell, BoardSpec};

/// Per-cell write latency of the reference MCU (100 cells in under 35 ms).
pub const DEFAULT_CELL_LATENCY_S: f64 = 0.35e-3;

/// Number of phase-bus lines.
pub const PHASE_BUS_WIDTH: usize = 3;

/// Switch output port driven by each 3-bit code. Codes 0..=6 follow the
/// delay-line table order; code 7 selects the resistor-terminated port.
pub const PORT_OF_CODE: [u8; 8] = [7, 6, 5, 1, 3, 2, 4, 8];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("row {row} out of range for a board with {nx} rows")]
    RowOutOfRange { row: usize, nx: usize },
    #[error("column {col} out of range for a board with {ny} columns")]
    ColumnOutOfRange { col: usize, ny: usize },
    #[error("code {0} does not fit the 3-bit phase bus")]
    CodeOutOfRange(u8),
    #[error("row {requested} raised while row {active} is still selected")]
    MultipleRows { active: usize, requested: usize },
    #[error("column {requested} raised while column {active} is still selected")]
    MultipleColumns { active: usize, requested: usize },
    #[error("configuration has {actual} cells, bus addresses {expected}")]
    ConfigLength { expected: usize, actual: usize },
    #[error("trace step addresses board {found}, bus holds {boards} boards")]
    UnknownBoard { found: usize, boards: usize },
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// Digital state of one board: selection lines, phase bus and latches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoardBusState {
    board_id: usize,
    nx: usize,
    ny: usize,
    row_lines: Vec<bool>,
    col_lines: Vec<bool>,
    phase_bus: [bool; PHASE_BUS_WIDTH],
    latched: Vec<u8>,
}

impl BoardBusState {
    /// Fresh board: all lines low and every latch at the absorber code.
    pub fn new(board_id: usize, nx: usize, ny: usize) -> Self {
        Self {
            board_id,
            nx,
            ny,
            row_lines: vec![false; nx],
            col_lines: vec![false; ny],
            phase_bus: [false; PHASE_BUS_WIDTH],
            latched: vec![ABSORB_CODE; nx * ny],
        }
    }

    pub fn board_id(&self) -> usize {
        self.board_id
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn row_lines(&self) -> &[bool] {
        &self.row_lines
    }

    pub fn col_lines(&self) -> &[bool] {
        &self.col_lines
    }

    pub fn phase_bus(&self) -> [bool; PHASE_BUS_WIDTH] {
        self.phase_bus
    }

    /// Latched codes, indexed `x * ny + y`.
    pub fn latched(&self) -> &[u8] {
        &self.latched
    }

    pub fn latch(&self, x: usize, y: usize) -> u8 {
        self.latched[x * self.ny + y]
    }

    fn gate(&self, x: usize, y: usize) -> bool {
        self.row_lines[x] && self.col_lines[y]
    }

    /// Latches every cell whose AND output went from low to high.
    fn clock_edges(&mut self, before: &[(usize, usize)]) {
        let code = bus_value(self.phase_bus);
        for x in 0..self.nx {
            if !self.row_lines[x] {
                continue;
            }
            for y in 0..self.ny {
                if self.gate(x, y) && !before.contains(&(x, y)) {
                    self.latched[x * self.ny + y] = code;
                }
            }
        }
    }

    fn high_gates(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in (0..self.nx).filter(|&x| self.row_lines[x]) {
            for y in (0..self.ny).filter(|&y| self.col_lines[y]) {
                out.push((x, y));
            }
        }
        out
    }

    /// Drives a code onto the phase bus. Latches only sample it on a gate
    /// rising edge, so changing the bus while a cell is selected has no
    /// effect on that cell.
    pub fn set_phase_bus(&mut self, code: u8) -> Result<()> {
        if code > ABSORB_CODE {
            return Err(ProtocolError::CodeOutOfRange(code));
        }
        self.phase_bus = bus_bits(code);
        Ok(())
    }

    pub fn raise_row(&mut self, x: usize) -> Result<()> {
        if x >= self.nx {
            return Err(ProtocolError::RowOutOfRange { row: x, nx: self.nx });
        }
        if let Some(active) = self.row_lines.iter().position(|&l| l) {
            if active != x {
                return Err(ProtocolError::MultipleRows { active, requested: x });
            }
        }
        let before = self.high_gates();
        self.row_lines[x] = true;
        self.clock_edges(&before);
        Ok(())
    }

    pub fn raise_col(&mut self, y: usize) -> Result<()> {
        if y >= self.ny {
            return Err(ProtocolError::ColumnOutOfRange { col: y, ny: self.ny });
        }
        if let Some(active) = self.col_lines.iter().position(|&l| l) {
            if active != y {
                return Err(ProtocolError::MultipleColumns { active, requested: y });
            }
        }
        let before = self.high_gates();
        self.col_lines[y] = true;
        self.clock_edges(&before);
        Ok(())
    }

    /// Returns every selection line to low.
    pub fn release(&mut self) {
        self.row_lines.iter_mut().for_each(|l| *l = false);
        self.col_lines.iter_mut().for_each(|l| *l = false);
    }

    /// Full write cycle: phase bus, row, column, release.
    pub fn write_cell(&mut self, x: usize, y: usize, code: u8) -> Result<()> {
        if x >= self.nx {
            return Err(ProtocolError::RowOutOfRange { row: x, nx: self.nx });
        }
        if y >= self.ny {
            return Err(ProtocolError::ColumnOutOfRange { col: y, ny: self.ny });
        }
        self.set_phase_bus(code)?;
        self.raise_row(x)?;
        self.raise_col(y)?;
        self.release();
        Ok(())
    }
}

fn bus_bits(code: u8) -> [bool; PHASE_BUS_WIDTH] {
    [code & 1 != 0, code & 2 != 0, code & 4 != 0]
}

fn bus_value(bits: [bool; PHASE_BUS_WIDTH]) -> u8 {
    bits.iter()
        .enumerate()
        .map(|(i, &b)| (b as u8) << i)
        .sum()
}

/// `(selection lines, phase lines)` needed by an `nx x ny` board.
pub fn bus_line_count(nx: usize, ny: usize) -> (usize, usize) {
    (nx + ny, PHASE_BUS_WIDTH)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceStep {
    pub board_id: usize,
    pub x: usize,
    pub y: usize,
    pub code: u8,
}

/// Ordered writes issued on the bus and their estimated duration.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramTrace {
    pub steps: Vec<TraceStep>,
    pub cell_latency_s: f64,
}

impl ProgramTrace {
    pub fn estimated_time_s(&self) -> f64 {
        self.steps.len() as f64 * self.cell_latency_s
    }

    /// CSV with columns `board_id,x,y,code,timestamp_s`; the timestamp is
    /// the start time of each write.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "board_id,x,y,code,timestamp_s")?;
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{:.6}",
                s.board_id,
                s.x,
                s.y,
                s.code,
                i as f64 * self.cell_latency_s
            )?;
        }
        Ok(())
    }
}

fn config_codes(config: &RisConfiguration) -> impl Iterator<Item = u8> + '_ {
    config.states().iter().map(|s: &CellState| s.code())
}

/// Writes every cell of `config` (x-major) and returns the issued trace.
pub fn program_board(
    state: &mut BoardBusState,
    config: &RisConfiguration,
    cell_latency_s: f64,
) -> Result<ProgramTrace> {
    let (nx, ny) = state.dims();
    if config.len() != nx * ny {
        return Err(ProtocolError::ConfigLength {
            expected: nx * ny,
            actual: config.len(),
        });
    }
    let mut steps = Vec::with_capacity(config.len());
    for (n, code) in config_codes(config).enumerate() {
        let (x, y) = (n / ny, n % ny);
        state.write_cell(x, y, code)?;
        steps.push(TraceStep {
            board_id: state.board_id(),
            x,
            y,
            code,
        });
    }
    Ok(ProgramTrace {
        steps,
        cell_latency_s,
    })
}

/// Boards chained on one shared bus. Writes are serialized; the board id
/// selects which board's lines a step drives.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedBus {
    spec: BoardSpec,
    m_x: usize,
    m_y: usize,
    boards: Vec<BoardBusState>,
}

impl SharedBus {
    pub fn new(spec: BoardSpec, m_x: usize, m_y: usize) -> Self {
        let boards = (0..m_x * m_y)
            .map(|id| BoardBusState::new(id, spec.nx, spec.ny))
            .collect();
        Self {
            spec,
            m_x,
            m_y,
            boards,
        }
    }

    pub fn boards(&self) -> &[BoardBusState] {
        &self.boards
    }

    pub fn board(&self, id: usize) -> Option<&BoardBusState> {
        self.boards.get(id)
    }

    /// Programs a configuration laid out over the whole tiling
    /// (`(m_x nx) x (m_y ny)` cells, x-major).
    pub fn program(&mut self, config: &RisConfiguration, cell_latency_s: f64) -> Result<ProgramTrace> {
        let total_ny = self.m_y * self.spec.ny;
        let expected = self.m_x * self.spec.nx * total_ny;
        if config.len() != expected {
            return Err(ProtocolError::ConfigLength {
                expected,
                actual: config.len(),
            });
        }
        let mut steps = Vec::with_capacity(expected);
        for (n, code) in config_codes(config).enumerate() {
            let (ix, iy) = (n / total_ny, n % total_ny);
            let (board_id, x, y) = locate_cell(&self.spec, self.m_y, ix, iy);
            self.boards[board_id].write_cell(x, y, code)?;
            steps.push(TraceStep { board_id, x, y, code });
        }
        Ok(ProgramTrace {
            steps,
            cell_latency_s,
        })
    }

    /// Re-issues the writes of a trace.
    pub fn replay(&mut self, trace: &ProgramTrace) -> Result<()> {
        let boards = self.boards.len();
        for s in &trace.steps {
            let board = self
                .boards
                .get_mut(s.board_id)
                .ok_or(ProtocolError::UnknownBoard { found: s.board_id, boards })?;
            board.write_cell(s.x, s.y, s.code)?;
        }
        Ok(())
    }
}

/// Re-issues the writes of a single-board trace.
pub fn replay(state: &mut BoardBusState, trace: &ProgramTrace) -> Result<()> {
    for s in &trace.steps {
        state.write_cell(s.x, s.y, s.code)?;
    }
    Ok(())
}
