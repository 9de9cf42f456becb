//! `ris`: design figures, codebooks, beampatterns and control-plane traces
//! for an RF-switch reconfigurable intelligent surface.
//!
//! Every subcommand writes one artifact to `--output` (stdout by default).
//! Module errors exit with status 1 and a one-line message on stderr; flag
//! errors exit with status 2.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "ris", version, about = "RF-switch RIS design and simulation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Patch, notch, delay-line and field-region figures of a design preset
    Design(DesignArgs),
    /// Build and save the angular-grid codebook of a board
    Codebook(CodebookArgs),
    /// Received-power pattern with peak and half-power beamwidth summary
    Pattern(PatternArgs),
    /// Optimal power of centered square sub-arrays against the N^2 law
    Scaling(ScalingArgs),
    /// Predicted main and grating lobes, optionally checked by simulation
    Grating(GratingArgs),
    /// Emulate programming a codebook entry over the row/column bus
    Program(ProgramArgs),
    /// Per-cell cost at production volumes
    Cost(CostArgs),
    /// Radar cross section from the radar range equation
    Rcs(RcsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output file; stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Output format (csv for pattern grids and traces, json otherwise)
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct PresetArgs {
    /// Design preset: paper (5.5 GHz, eps_r 4.3) or paper-corrected (5.3 GHz, eps_r 4.66)
    #[arg(long, default_value = "paper-corrected")]
    pub preset: String,
    /// Override the preset operating frequency
    #[arg(long)]
    pub frequency_ghz: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BoardArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    /// Cells along x per board
    #[arg(long, default_value_t = 10)]
    pub nx: usize,
    /// Cells along y per board
    #[arg(long, default_value_t = 10)]
    pub ny: usize,
    /// Cell pitch; half a wavelength at the operating frequency by default
    #[arg(long)]
    pub pitch_mm: Option<f64>,
    /// Named activation pattern: 2x2, 4x4, 8x8, 10x10, off2, off3
    #[arg(long, conflicts_with = "pattern_file")]
    pub pattern: Option<String>,
    /// Activation pattern file (0/1 grid, first line is the top row)
    #[arg(long)]
    pub pattern_file: Option<PathBuf>,
    /// Boards tiled along x on one shared bus
    #[arg(long, default_value_t = 1)]
    pub boards_x: usize,
    /// Boards tiled along y on one shared bus
    #[arg(long, default_value_t = 1)]
    pub boards_y: usize,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub az_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub az_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub el_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub el_max: Option<f64>,
    /// Grid spacing in degrees; must divide both spans
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PhaseArgs {
    /// Use a uniform set of this many phases instead of the delay-line table
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=7))]
    pub levels: Option<u8>,
}

#[derive(Args, Debug)]
pub struct ScenarioArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tx_az: f64,
    #[arg(long, default_value_t = 33.0, allow_negative_numbers = true)]
    pub tx_el: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rx_az: f64,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    pub rx_el: f64,
    /// TX to surface distance in meters
    #[arg(long, default_value_t = 1.1)]
    pub d_tx: f64,
    /// Surface to RX distance in meters
    #[arg(long, default_value_t = 6.3)]
    pub d_rx: f64,
    /// Transmit power per subcarrier
    #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
    pub tx_power_dbm: f64,
    /// Gain of each horn antenna
    #[arg(long, default_value_t = 13.5, allow_negative_numbers = true)]
    pub gain_dbi: f64,
    /// Unit-cell element gain
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub element_gain_dbi: f64,
    /// Reference-distance channel gain; the fitted value by default
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long, default_value_t = -91.0, allow_negative_numbers = true)]
    pub noise_floor_dbm: f64,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    /// Override the substrate relative permittivity
    #[arg(long)]
    pub eps_r: Option<f64>,
    /// Override the substrate height
    #[arg(long)]
    pub height_mm: Option<f64>,
    /// Override the microstrip velocity factor
    #[arg(long)]
    pub velocity_factor: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CodebookArgs {
    #[command(flatten)]
    pub board: BoardArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub phases: PhaseArgs,
    /// Output file; stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PatternMode {
    /// Power at the fixed RX for every codebook entry
    Sweep,
    /// Power over observation directions for one steered configuration
    Observe,
}

#[derive(Args, Debug)]
pub struct PatternArgs {
    #[command(flatten)]
    pub board: BoardArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub phases: PhaseArgs,
    #[arg(long, value_enum, default_value = "sweep")]
    pub mode: PatternMode,
    /// Steering direction in observe mode; the RX direction by default
    #[arg(long, allow_negative_numbers = true)]
    pub steer_az: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub steer_el: Option<f64>,
    /// Unquantized phases (observe mode only)
    #[arg(long)]
    pub continuous: bool,
    /// Check predicted grating lobes against local maxima of the pattern
    #[arg(long)]
    pub verify_grating: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub board: BoardArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub phases: PhaseArgs,
    /// Active-cell counts (perfect squares)
    #[arg(long, value_delimiter = ',', default_value = "4,16,64,100")]
    pub n: Vec<usize>,
    /// Unquantized phases
    #[arg(long)]
    pub continuous: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct GratingArgs {
    #[command(flatten)]
    pub board: BoardArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub phases: PhaseArgs,
    /// Spacing in wavelengths; derived from the activation pattern by default
    #[arg(long)]
    pub delta: Option<f64>,
    /// Simulate the codebook sweep and match lobes to its local maxima
    #[arg(long)]
    pub verify: bool,
    /// Also write the simulated sweep grid (CSV) here
    #[arg(long, requires = "verify")]
    pub grid_out: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ProgramArgs {
    #[command(flatten)]
    pub board: BoardArgs,
    /// Codebook file written by `ris codebook`
    #[arg(long)]
    pub codebook: PathBuf,
    /// Entry azimuth (nearest grid point is used)
    #[arg(long, allow_negative_numbers = true)]
    pub az: f64,
    /// Entry elevation (nearest grid point is used)
    #[arg(long, allow_negative_numbers = true)]
    pub el: f64,
    /// Time to write one cell
    #[arg(long, default_value_t = 0.35)]
    pub latency_ms: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CostArgs {
    /// Production volumes in boards
    #[arg(long, value_delimiter = ',', default_value = "10,100,200,1000")]
    pub boards: Vec<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct RcsArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    #[arg(long, default_value_t = -66.5, allow_negative_numbers = true)]
    pub p_rx_dbm: f64,
    #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
    pub p_tx_dbm: f64,
    /// TX to surface distance in meters
    #[arg(long, default_value_t = 1.1)]
    pub d_tx: f64,
    /// Surface to RX distance in meters
    #[arg(long, default_value_t = 6.3)]
    pub d_rx: f64,
    #[arg(long, default_value_t = 13.5, allow_negative_numbers = true)]
    pub gain_dbi: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(a) => commands::design(a),
        Command::Codebook(a) => commands::codebook(a),
        Command::Pattern(a) => commands::pattern(a),
        Command::Scaling(a) => commands::scaling(a),
        Command::Grating(a) => commands::grating(a),
        Command::Program(a) => commands::program(a),
        Command::Cost(a) => commands::cost(a),
        Command::Rcs(a) => commands::rcs(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
