use std::error::Error;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use ris_core::analysis::{
    beampattern, codebook_sweep, cost_per_cell, grating_lobes, peak_and_hpbw, radar_rcs, scaling_law,
    verify_grating, AngularWindow, BeamSummary, CostCategory, DirectionCosines, LobeCheck, PatternGrid,
    Scenario, CALIBRATED_BETA0,
};
use ris_core::array_model::{LinkGeometry, PhaseMode, PhaseSet, SteeringAngles};
use ris_core::board::{named_pattern, tile_pattern, ActivationPattern, BoardSpec};
use ris_core::codebook::{build_codebook, load_codebook, save_codebook, GridSpec};
use ris_core::control_plane::{SharedBus, PORT_OF_CODE};
use ris_core::rf_design::{design_report, DesignPreset, SubstrateSpec};
use ris_core::ArrayGeometry;
use serde::Serialize;

use crate::{
    BoardArgs, CodebookArgs, CostArgs, DesignArgs, Format, GratingArgs, GridArgs, OutputArgs, PatternArgs,
    PatternMode, PhaseArgs, PresetArgs, ProgramArgs, RcsArgs, ScalingArgs, ScenarioArgs,
};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

/// Lobes must lie within this many dB of the global peak to count.
const LOBE_LEVEL_DB: f64 = -3.0;

fn emit(output: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => write_file(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(bytes).and_then(|()| stdout.flush()) {
                // a closed pipe (e.g. `| head`) is not an error
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()).into())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn format_of(out: &OutputArgs, default: Format) -> Format {
    out.format.unwrap_or(default)
}

fn preset(args: &PresetArgs) -> Result<DesignPreset> {
    let mut p = DesignPreset::by_name(&args.preset)?;
    if let Some(f) = args.frequency_ghz {
        p.frequency_hz = f * 1e9;
    }
    Ok(p)
}

struct Array {
    board: BoardSpec,
    tiled: BoardSpec,
    pattern: ActivationPattern,
}

impl Array {
    fn from_args(args: &BoardArgs) -> Result<Self> {
        let p = preset(&args.preset)?;
        let mut board = BoardSpec::half_wavelength(args.nx, args.ny, p.frequency_hz);
        if let Some(pitch) = args.pitch_mm {
            board.cell_pitch_m = pitch * 1e-3;
        }
        // validates the board
        board.geometry()?;
        let single = match (&args.pattern, &args.pattern_file) {
            (Some(name), _) => named_pattern(name, &board)?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                let name = path.file_stem().map_or("file".into(), |s| s.to_string_lossy().into_owned());
                let parsed = ActivationPattern::parse(name, &text)?;
                if (parsed.nx, parsed.ny) != (board.nx, board.ny) {
                    return Err(format!(
                        "pattern file is {}x{}, board is {}x{}",
                        parsed.nx, parsed.ny, board.nx, board.ny
                    )
                    .into());
                }
                parsed
            }
            (None, None) => ActivationPattern::full(&board),
        };
        if args.boards_x == 0 || args.boards_y == 0 {
            return Err("board counts must be positive".into());
        }
        let tiled = BoardSpec {
            nx: board.nx * args.boards_x,
            ny: board.ny * args.boards_y,
            ..board
        };
        let pattern = if (args.boards_x, args.boards_y) == (1, 1) {
            single
        } else {
            tile_pattern(&single, args.boards_x, args.boards_y)
        };
        Ok(Self { board, tiled, pattern })
    }

    /// Whole tiling at the board pitch with the pattern as mask, so
    /// configurations map one-to-one onto physical cells.
    fn masked_geometry(&self) -> Result<ArrayGeometry> {
        Ok(ArrayGeometry::with_mask(
            self.tiled.nx,
            self.tiled.ny,
            self.tiled.delta(),
            self.pattern.mask.clone(),
        )?)
    }
}

fn phase_set(args: &PhaseArgs) -> Result<PhaseSet> {
    Ok(match args.levels {
        Some(k) => PhaseSet::uniform(k as usize)?,
        None => PhaseSet::default(),
    })
}

fn grid(args: &GridArgs, default: GridSpec) -> Result<GridSpec> {
    Ok(GridSpec::new(
        (
            args.az_min.unwrap_or(default.azimuth_deg.0),
            args.az_max.unwrap_or(default.azimuth_deg.1),
        ),
        (
            args.el_min.unwrap_or(default.elevation_deg.0),
            args.el_max.unwrap_or(default.elevation_deg.1),
        ),
        args.step.unwrap_or(default.spacing_deg),
    )?)
}

fn scenario(args: &ScenarioArgs, array: &Array) -> Result<Scenario> {
    let link = LinkGeometry::new(
        args.d_tx,
        args.d_rx,
        args.beta0.unwrap_or(CALIBRATED_BETA0),
        SteeringAngles::from_degrees(args.tx_az, args.tx_el)?,
        SteeringAngles::from_degrees(args.rx_az, args.rx_el)?,
    )?;
    Ok(Scenario {
        link,
        board: array.tiled,
        pattern: array.pattern.clone(),
        tx_power_dbm: args.tx_power_dbm,
        antenna_gain_dbi: args.gain_dbi,
        element_gain_dbi: args.element_gain_dbi,
        noise_floor_dbm: args.noise_floor_dbm,
    })
}

pub fn design(args: &DesignArgs) -> Result<()> {
    let mut p = preset(&args.preset)?;
    p.substrate = SubstrateSpec::new(
        args.eps_r.unwrap_or(p.substrate.eps_r),
        args.height_mm.map_or(p.substrate.height_m, |h| h * 1e-3),
    )?;
    if let Some(vf) = args.velocity_factor {
        p.velocity_factor = vf;
    }
    let r = design_report(&p)?;
    let bytes = match format_of(&args.out, Format::Json) {
        Format::Json => json(&r)?,
        Format::Csv => {
            let mm = 1e3;
            let mut s = String::from("quantity,value,unit\n");
            let mut row = |q: &str, v: f64, unit: &str| writeln!(s, "{q},{v},{unit}");
            row("frequency", r.frequency_hz, "Hz")?;
            row("wavelength", r.wavelength_m * mm, "mm")?;
            row("eps_r", r.eps_r, "")?;
            row("substrate_height", r.substrate_height_m * mm, "mm")?;
            row("patch_width", r.patch.width_m * mm, "mm")?;
            row("patch_length", r.patch.length_m * mm, "mm")?;
            row("eps_eff", r.patch.eps_eff, "")?;
            row("notch_depth", r.notch_depth_m * mm, "mm")?;
            row("velocity_factor", r.velocity_factor, "")?;
            for d in &r.delay_lines {
                row(&format!("delay_line_code{}_port{}_phase", d.code, d.port), d.phase_deg, "deg")?;
                row(&format!("delay_line_code{}_port{}_length", d.code, d.port), d.length_m * mm, "mm")?;
            }
            row("max_spacing", r.max_spacing_m * mm, "mm")?;
            row("far_field", r.far_field_m, "m")?;
            row("reactive_near_field", r.reactive_near_field_m, "m")?;
            row("microstrip_width", r.microstrip_width_m * mm, "mm")?;
            s.into_bytes()
        }
    };
    emit(&args.out.output, &bytes)
}

pub fn codebook(args: &CodebookArgs) -> Result<()> {
    let array = Array::from_args(&args.board)?;
    let cb = build_codebook(
        &array.masked_geometry()?,
        &grid(&args.grid, GridSpec::default())?,
        &phase_set(&args.phases)?,
    )?;
    let mut bytes = Vec::new();
    save_codebook(&cb, &mut bytes)?;
    emit(&args.output, &bytes)
}

#[derive(Serialize)]
struct PatternReport<'a> {
    mode: &'static str,
    summary: BeamSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    grating: Option<Vec<LobeCheck>>,
    pattern: &'a PatternGrid,
}

fn opt(v: Option<f64>) -> String {
    v.map_or("none".to_string(), |v| format!("{v:.4}"))
}

fn lobe_line(c: &LobeCheck) -> String {
    format!(
        "{:.4},{:.4},{},{},{},{}",
        c.predicted_azimuth_deg,
        c.predicted_elevation_deg,
        opt(c.simulated_azimuth_deg),
        opt(c.simulated_elevation_deg),
        opt(c.simulated_dbm),
        c.matched
    )
}

pub fn pattern(args: &PatternArgs) -> Result<()> {
    let array = Array::from_args(&args.board)?;
    let s = scenario(&args.scenario, &array)?;
    let set = phase_set(&args.phases)?;
    if args.continuous && args.mode == PatternMode::Sweep {
        return Err("--continuous applies to observe mode only; codebooks hold quantized states".into());
    }
    let (pattern, target, mode_name) = match args.mode {
        PatternMode::Sweep => {
            let g = grid(&args.grid, GridSpec::default())?;
            let cb = build_codebook(&array.masked_geometry()?, &g, &set)?;
            let target = DirectionCosines::codebook_target(&s.link.tx_angles, &s.link.rx_angles);
            (codebook_sweep(&s, &cb)?, target, "sweep")
        }
        PatternMode::Observe => {
            let g = grid(&args.grid, GridSpec::new((0.0, 180.0), (-90.0, 90.0), 1.0)?)?;
            let steer = SteeringAngles::from_degrees(
                args.steer_az.unwrap_or(args.scenario.rx_az),
                args.steer_el.unwrap_or(args.scenario.rx_el),
            )?;
            let mode = if args.continuous {
                PhaseMode::Continuous
            } else {
                PhaseMode::Quantized(set)
            };
            let w = s.steer(&steer, &mode)?;
            // the steered configuration peaks where the cascaded phase
            // matches the one it was built for
            let target = DirectionCosines::from(steer);
            (beampattern(&s, &w, &g)?, target, "observe")
        }
    };
    let summary = peak_and_hpbw(&pattern)?;
    let grating = if args.verify_grating {
        let step = pattern.azimuths_deg.get(1).map_or(1.0, |a| a - pattern.azimuths_deg[0]);
        let window = AngularWindow {
            azimuth_deg: (pattern.azimuths_deg[0], *pattern.azimuths_deg.last().expect("non-empty grid")),
            elevation_deg: (pattern.elevations_deg[0], *pattern.elevations_deg.last().expect("non-empty grid")),
        };
        let lobes = grating_lobes(s.geometry()?.delta(), target, &window)?;
        Some(verify_grating(&pattern, &lobes, step, LOBE_LEVEL_DB))
    } else {
        None
    };
    let bytes = match format_of(&args.out, Format::Csv) {
        Format::Json => json(&PatternReport {
            mode: mode_name,
            summary,
            grating,
            pattern: &pattern,
        })?,
        Format::Csv => {
            let mut s = String::new();
            writeln!(s, "# mode: {mode_name}")?;
            writeln!(s, "# peak_azimuth_deg: {}", summary.peak_azimuth_deg)?;
            writeln!(s, "# peak_elevation_deg: {}", summary.peak_elevation_deg)?;
            writeln!(s, "# peak_dbm: {:.4}", summary.peak_dbm)?;
            writeln!(s, "# hpbw_azimuth_deg: {}", opt(summary.hpbw_azimuth_deg))?;
            writeln!(s, "# hpbw_elevation_deg: {}", opt(summary.hpbw_elevation_deg))?;
            writeln!(s, "# coarse: {}", summary.coarse)?;
            if let Some(checks) = &grating {
                writeln!(
                    s,
                    "# lobe: predicted_azimuth_deg,predicted_elevation_deg,simulated_azimuth_deg,simulated_elevation_deg,simulated_dbm,matched"
                )?;
                for c in checks {
                    writeln!(s, "# lobe: {}", lobe_line(c))?;
                }
            }
            let mut bytes = s.into_bytes();
            pattern.write_csv(&mut bytes)?;
            bytes
        }
    };
    emit(&args.out.output, &bytes)
}

pub fn scaling(args: &ScalingArgs) -> Result<()> {
    let array = Array::from_args(&args.board)?;
    let s = scenario(&args.scenario, &array)?;
    let mode = if args.continuous {
        PhaseMode::Continuous
    } else {
        PhaseMode::Quantized(phase_set(&args.phases)?)
    };
    let rows = scaling_law(&args.n, &s, &mode)?;
    let bytes = match format_of(&args.out, Format::Json) {
        Format::Json => json(&rows)?,
        Format::Csv => {
            let mut s = String::from("n,simulated_dbm,model_dbm\n");
            for r in &rows {
                writeln!(s, "{},{:.6},{:.6}", r.n, r.simulated_dbm, r.model_dbm)?;
            }
            s.into_bytes()
        }
    };
    emit(&args.out.output, &bytes)
}

#[derive(Serialize)]
struct Lobe {
    azimuth_deg: f64,
    elevation_deg: f64,
    u: f64,
    v: f64,
}

#[derive(Serialize)]
struct GratingReport {
    delta: f64,
    target: DirectionCosines,
    lobes: Vec<Lobe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    checks: Option<Vec<LobeCheck>>,
}

pub fn grating(args: &GratingArgs) -> Result<()> {
    let array = Array::from_args(&args.board)?;
    let s = scenario(&args.scenario, &array)?;
    if args.delta.is_some() && args.verify {
        return Err("--delta cannot be combined with --verify; the simulation uses the pattern's spacing".into());
    }
    let delta = match args.delta {
        Some(d) => d,
        None => s.geometry()?.delta(),
    };
    let g = grid(&args.grid, GridSpec::new((-90.0, 90.0), (-45.0, 45.0), 1.0)?)?;
    let target = DirectionCosines::codebook_target(&s.link.tx_angles, &s.link.rx_angles);
    let predicted = grating_lobes(delta, target, &AngularWindow::from(&g))?;
    let checks = if args.verify {
        let cb = build_codebook(&array.masked_geometry()?, &g, &phase_set(&args.phases)?)?;
        let sweep = codebook_sweep(&s, &cb)?;
        if let Some(path) = &args.grid_out {
            let mut bytes = Vec::new();
            sweep.write_csv(&mut bytes)?;
            write_file(path, &bytes)?;
        }
        Some(verify_grating(&sweep, &predicted, g.spacing_deg, LOBE_LEVEL_DB))
    } else {
        None
    };
    let lobes: Vec<Lobe> = predicted
        .iter()
        .map(|a| {
            let (u, v) = a.direction_cosines();
            Lobe {
                azimuth_deg: a.azimuth_deg(),
                elevation_deg: a.elevation_deg(),
                u,
                v,
            }
        })
        .collect();
    let bytes = match format_of(&args.out, Format::Json) {
        Format::Json => json(&GratingReport {
            delta,
            target,
            lobes,
            checks,
        })?,
        Format::Csv => {
            let mut s = String::new();
            match &checks {
                None => {
                    writeln!(s, "azimuth_deg,elevation_deg,u,v")?;
                    for l in &lobes {
                        writeln!(s, "{:.4},{:.4},{:.6},{:.6}", l.azimuth_deg, l.elevation_deg, l.u, l.v)?;
                    }
                }
                Some(checks) => {
                    writeln!(
                        s,
                        "predicted_azimuth_deg,predicted_elevation_deg,simulated_azimuth_deg,simulated_elevation_deg,simulated_dbm,matched"
                    )?;
                    for c in checks {
                        writeln!(s, "{}", lobe_line(c))?;
                    }
                }
            }
            s.into_bytes()
        }
    };
    emit(&args.out.output, &bytes)
}

#[derive(Serialize)]
struct Step {
    board_id: usize,
    x: usize,
    y: usize,
    code: u8,
    port: u8,
    timestamp_s: f64,
}

#[derive(Serialize)]
struct ProgramReport {
    entry_azimuth_deg: f64,
    entry_elevation_deg: f64,
    estimated_time_s: f64,
    steps: Vec<Step>,
}

pub fn program(args: &ProgramArgs) -> Result<()> {
    let array = Array::from_args(&args.board)?;
    let file = File::open(&args.codebook)
        .map_err(|e| format!("cannot read {}: {e}", args.codebook.display()))?;
    let cb = load_codebook(BufReader::new(file))?;
    if (cb.geometry.nx(), cb.geometry.ny()) != (array.tiled.nx, array.tiled.ny) {
        return Err(format!(
            "codebook is for a {}x{} array, the bus drives {}x{} cells",
            cb.geometry.nx(),
            cb.geometry.ny(),
            array.tiled.nx,
            array.tiled.ny
        )
        .into());
    }
    let entry = cb.nearest(args.az, args.el).ok_or("codebook has no entries")?;
    let mut bus = SharedBus::new(array.board, args.board.boards_x, args.board.boards_y);
    let trace = bus.program(&entry.config, args.latency_ms * 1e-3)?;
    let bytes = match format_of(&args.out, Format::Csv) {
        Format::Csv => {
            let mut bytes = Vec::new();
            trace.write_csv(&mut bytes)?;
            bytes
        }
        Format::Json => json(&ProgramReport {
            entry_azimuth_deg: entry.target.azimuth_deg(),
            entry_elevation_deg: entry.target.elevation_deg(),
            estimated_time_s: trace.estimated_time_s(),
            steps: trace
                .steps
                .iter()
                .enumerate()
                .map(|(i, s)| Step {
                    board_id: s.board_id,
                    x: s.x,
                    y: s.y,
                    code: s.code,
                    port: PORT_OF_CODE[s.code as usize],
                    timestamp_s: i as f64 * trace.cell_latency_s,
                })
                .collect(),
        })?,
    };
    emit(&args.out.output, &bytes)
}

#[derive(Serialize)]
struct CostRow {
    boards: usize,
    pcb: f64,
    components: f64,
    assembly: f64,
    total: f64,
}

pub fn cost(args: &CostArgs) -> Result<()> {
    let rows = args
        .boards
        .iter()
        .map(|&n| {
            Ok(CostRow {
                boards: n,
                pcb: cost_per_cell(n, CostCategory::Pcb)?,
                components: cost_per_cell(n, CostCategory::Components)?,
                assembly: cost_per_cell(n, CostCategory::Assembly)?,
                total: cost_per_cell(n, CostCategory::Total)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bytes = match format_of(&args.out, Format::Json) {
        Format::Json => json(&rows)?,
        Format::Csv => {
            let mut s = String::from("boards,pcb_usd,components_usd,assembly_usd,total_usd\n");
            for r in &rows {
                writeln!(
                    s,
                    "{},{:.4},{:.4},{:.4},{:.4}",
                    r.boards, r.pcb, r.components, r.assembly, r.total
                )?;
            }
            s.into_bytes()
        }
    };
    emit(&args.out.output, &bytes)
}

#[derive(Serialize)]
struct RcsReport {
    p_rx_dbm: f64,
    p_tx_dbm: f64,
    d_tx_m: f64,
    d_rx_m: f64,
    wavelength_m: f64,
    gain_dbi: f64,
    rcs_dbsm: f64,
}

pub fn rcs(args: &RcsArgs) -> Result<()> {
    let wavelength_m = preset(&args.preset)?.wavelength_m();
    let rcs_dbsm = radar_rcs(args.p_rx_dbm, args.p_tx_dbm, args.d_tx, args.d_rx, wavelength_m, args.gain_dbi)?;
    let r = RcsReport {
        p_rx_dbm: args.p_rx_dbm,
        p_tx_dbm: args.p_tx_dbm,
        d_tx_m: args.d_tx,
        d_rx_m: args.d_rx,
        wavelength_m,
        gain_dbi: args.gain_dbi,
        rcs_dbsm,
    };
    let bytes = match format_of(&args.out, Format::Json) {
        Format::Json => json(&r)?,
        Format::Csv => format!(
            "p_rx_dbm,p_tx_dbm,d_tx_m,d_rx_m,wavelength_m,gain_dbi,rcs_dbsm\n{},{},{},{},{},{},{:.4}\n",
            r.p_rx_dbm, r.p_tx_dbm, r.d_tx_m, r.d_rx_m, r.wavelength_m, r.gain_dbi, r.rcs_dbsm
        )
        .into_bytes(),
    };
    emit(&args.out.output, &bytes)
}
