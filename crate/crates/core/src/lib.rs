//! Simulation and design toolkit for RF-switch based reconfigurable
//! intelligent surfaces (RIS).
//!
//! * [`array_model`]: planar-array steering vectors, LoS channels, phase
//!   quantization and optimal configuration synthesis.
//! * [`codebook`]: angular-grid codebooks and their file format.
//! * [`board`]: board geometry, activation patterns and multi-board tiling.
//! * [`control_plane`]: emulator of the row/column selection bus and the
//!   per-cell 3-bit latches.
//! * [`rf_design`]: closed-form patch, notch and delay-line calculators.
//! * [`analysis`]: beampatterns, beamwidth, grating lobes, scaling, RCS and
//!   cost.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod array_model;
pub mod board;
pub mod codebook;
pub mod control_plane;
pub mod rf_design;

use thiserror::Error;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Any error raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Array(#[from] array_model::ArrayError),
    #[error(transparent)]
    Codebook(#[from] codebook::CodebookError),
    #[error(transparent)]
    Board(#[from] board::BoardError),
    #[error(transparent)]
    Protocol(#[from] control_plane::ProtocolError),
    #[error(transparent)]
    Design(#[from] rf_design::DesignError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
}

pub use array_model::{
    ArrayGeometry, CellState, ComplexVector, LinkGeometry, PhaseMode, PhaseSet, RisConfiguration,
    SteeringAngles,
};
pub use board::{ActivationPattern, BoardSpec};
pub use codebook::{Codebook, CodebookEntry, GridSpec};
