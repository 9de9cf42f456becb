//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the report is always printed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_core::analysis::{
    beampattern, codebook_sweep, grating_lobes, peak_and_hpbw, quantization_loss, scaling_law,
    verify_grating, AngularWindow, DirectionCosines, Scenario, CALIBRATED_BETA0, MEASURED_PEAK_DBM,
};
use ris_core::array_model::{combine, optimal_config, CellState, PhaseMode, PhaseSet, RisConfiguration};
use ris_core::board::{named_pattern, virtual_geometry, BoardSpec};
use ris_core::codebook::{build_codebook, GridSpec};
use ris_core::control_plane::{bus_line_count, program_board, BoardBusState, DEFAULT_CELL_LATENCY_S};
use ris_core::rf_design::{delay_line_table, field_regions, notch_depth, patch_dimensions, DesignPreset};
use ris_core::{ArrayGeometry, SteeringAngles};

// pinned tolerances
const MAX_CODEBOOK_TIME: Duration = Duration::from_secs(5);
const TABLE_MM: [f64; 7] = [1.21, 2.42, 3.64, 4.85, 6.08, 7.28, 8.49];
const TABLE_TOL_MM: f64 = 0.02;
const NOTCH_TOL_MM: f64 = 0.05;
const PATCH_REL_TOL: f64 = 0.03;
const FIELD_TOL_M: f64 = 0.05;
const HPBW_TOL_DEG: f64 = 0.5;
const SCALING_EXACT_TOL_DB: f64 = 1e-9;
const SCALING_QUANTIZED_TOL_DB: f64 = 0.5;
const MEASURED_TOL_DB: f64 = 1.0;
const MIN_LOSS_RATIO: f64 = 0.93;
const LOSS_DRAWS: usize = 1000;
const MAX_LOSS_TIME: Duration = Duration::from_secs(10);
const GRATING_STEP_DEG: f64 = 1.0;
const GRATING_LEVEL_DB: f64 = -3.0;
const FUZZ_SEQUENCES: usize = 10_000;
const MAX_PROGRAM_TIME_S: f64 = 35e-3;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn codebook_count() -> Outcome {
    let geometry = BoardSpec::default().geometry().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let cb = build_codebook(&geometry, &GridSpec::default(), &PhaseSet::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let cells_ok = cb.entries.iter().all(|e| e.config.len() == 100);
    check(
        cb.len() == 1891 && cells_ok && elapsed < MAX_CODEBOOK_TIME,
        format!("{} entries of 100 cells in {:.3} s", cb.len(), elapsed.as_secs_f64()),
    )
}

fn delay_lines() -> Outcome {
    let rows = delay_line_table(5.3e9, 0.3).map_err(|e| e.to_string())?;
    let lengths: Vec<f64> = rows.iter().map(|r| r.length_m * 1e3).collect();
    let worst = lengths
        .iter()
        .zip(TABLE_MM)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let shown: Vec<String> = lengths.iter().map(|l| format!("{l:.3}")).collect();
    check(
        lengths.len() == 7 && worst <= TABLE_TOL_MM + 1e-9,
        format!("[{}] mm, worst deviation {worst:.4} mm", shown.join(", ")),
    )
}

fn notch() -> Outcome {
    let depth = notch_depth(13.15e-3, 341.0, 50.0).map_err(|e| e.to_string())? * 1e3;
    check((depth - 4.9).abs() <= NOTCH_TOL_MM, format!("{depth:.3} mm"))
}

fn patch() -> Outcome {
    let p = DesignPreset::PAPER;
    let d = patch_dimensions(p.frequency_hz, &p.substrate).map_err(|e| e.to_string())?;
    let rw = d.width_m * 1e3 / 16.9 - 1.0;
    let rl = d.length_m * 1e3 / 13.15 - 1.0;
    check(
        rw.abs() <= PATCH_REL_TOL && rl.abs() <= PATCH_REL_TOL,
        format!(
            "W {:.3} mm ({:+.2}%), L {:.3} mm ({:+.2}%)",
            d.width_m * 1e3,
            rw * 100.0,
            d.length_m * 1e3,
            rl * 100.0
        ),
    )
}

fn fields() -> Outcome {
    let (far, reactive) = field_regions(0.43, 56.56e-3).map_err(|e| e.to_string())?;
    check(
        (far - 6.5).abs() <= FIELD_TOL_M && (reactive - 0.73).abs() <= FIELD_TOL_M,
        format!("far {far:.3} m, reactive {reactive:.3} m"),
    )
}

fn hpbw() -> Outcome {
    let broadside = SteeringAngles::from_degrees(90.0, 0.0).map_err(|e| e.to_string())?;
    let s = Scenario::default().with_angles(broadside, broadside);
    let w = s.steer(&broadside, &PhaseMode::Continuous).map_err(|e| e.to_string())?;
    let grid = GridSpec::new((0.0, 180.0), (-90.0, 90.0), 0.5).map_err(|e| e.to_string())?;
    let beam = peak_and_hpbw(&beampattern(&s, &w, &grid).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (az, el) = (beam.hpbw_azimuth_deg, beam.hpbw_elevation_deg);
    let ok = |v: Option<f64>| v.is_some_and(|v| (v - 10.1).abs() <= HPBW_TOL_DEG);
    check(
        ok(az) && ok(el),
        format!("azimuth {:.3} deg, elevation {:.3} deg", az.unwrap_or(f64::NAN), el.unwrap_or(f64::NAN)),
    )
}

fn scaling() -> Outcome {
    let s = Scenario::default();
    let ns = [16, 64, 100];
    let cont = scaling_law(&ns, &s, &PhaseMode::Continuous).map_err(|e| e.to_string())?;
    let quant = scaling_law(&ns, &s, &PhaseMode::default()).map_err(|e| e.to_string())?;
    let mut worst_cont: f64 = 0.0;
    let mut worst_quant: f64 = 0.0;
    for i in 0..ns.len() {
        for j in 0..ns.len() {
            let law = 20.0 * (ns[i] as f64 / ns[j] as f64).log10();
            worst_cont = worst_cont.max((cont[i].simulated_dbm - cont[j].simulated_dbm - law).abs());
            worst_quant = worst_quant.max((quant[i].simulated_dbm - quant[j].simulated_dbm - law).abs());
        }
    }
    let measured = MEASURED_PEAK_DBM[2].1 - MEASURED_PEAK_DBM[0].1;
    let model = 20.0 * (100.0f64 / 16.0).log10();
    check(
        worst_cont <= SCALING_EXACT_TOL_DB
            && worst_quant <= SCALING_QUANTIZED_TOL_DB
            && (measured - model).abs() <= MEASURED_TOL_DB,
        format!(
            "continuous dev {worst_cont:.2e} dB, quantized dev {worst_quant:.3} dB, measured {measured:.1} dB vs model {model:.2} dB"
        ),
    )
}

fn quant_loss() -> Outcome {
    let geometry = ArrayGeometry::new(10, 10, 0.5).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let r = quantization_loss(&geometry, &PhaseSet::default(), LOSS_DRAWS, 7).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        r.draws >= 1000 && r.mean_ratio >= MIN_LOSS_RATIO && elapsed < MAX_LOSS_TIME,
        format!(
            "mean ratio {:.4} (min {:.4}) over {} draws in {:.2} s",
            r.mean_ratio,
            r.min_ratio,
            r.draws,
            elapsed.as_secs_f64()
        ),
    )
}

fn grating() -> Outcome {
    let board = BoardSpec::default();
    let tx = SteeringAngles::from_degrees(0.0, 33.0).map_err(|e| e.to_string())?;
    let rx = SteeringAngles::from_degrees(0.0, -3.0).map_err(|e| e.to_string())?;
    let target = DirectionCosines::codebook_target(&tx, &rx);
    let grid = GridSpec::new((-90.0, 90.0), (-45.0, 45.0), GRATING_STEP_DEG).map_err(|e| e.to_string())?;
    let window = AngularWindow::from(&grid);
    let mut counts = Vec::new();
    let mut all_matched = true;
    let mut details = Vec::new();
    for name in ["off2", "off3"] {
        let pattern = named_pattern(name, &board).map_err(|e| e.to_string())?;
        let geometry = virtual_geometry(&board, &pattern).map_err(|e| e.to_string())?;
        let delta = geometry.delta();
        let cb = build_codebook(&geometry, &grid, &PhaseSet::default()).map_err(|e| e.to_string())?;
        let scenario = Scenario::default().with_pattern(pattern).with_angles(tx, rx);
        let sweep = codebook_sweep(&scenario, &cb).map_err(|e| e.to_string())?;
        let lobes = grating_lobes(delta, target, &window).map_err(|e| e.to_string())?;
        let checks = verify_grating(&sweep, &lobes, GRATING_STEP_DEG, GRATING_LEVEL_DB);
        let matched = checks.iter().filter(|c| c.matched).count();
        all_matched &= matched == lobes.len() && !lobes.is_empty();
        counts.push(lobes.len());
        details.push(format!("delta {delta}: {matched}/{} lobes matched", lobes.len()));
    }
    check(all_matched && counts[1] > counts[0], details.join("; "))
}

fn control_plane() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (nx, ny) = (10, 10);
    let mut mismatches = 0;
    for _ in 0..FUZZ_SEQUENCES {
        let mut bus = BoardBusState::new(0, nx, ny);
        let mut oracle = std::collections::HashMap::new();
        for _ in 0..rng.gen_range(1..=40) {
            let (x, y, code) = (rng.gen_range(0..nx), rng.gen_range(0..ny), rng.gen_range(0..=7u8));
            bus.write_cell(x, y, code).map_err(|e| e.to_string())?;
            oracle.insert((x, y), code);
        }
        let expected: Vec<u8> = (0..nx * ny)
            .map(|n| *oracle.get(&(n / ny, n % ny)).unwrap_or(&7))
            .collect();
        if bus.latched() != expected.as_slice() {
            mismatches += 1;
        }
    }
    let lines = bus_line_count(10, 10);
    let cfg = RisConfiguration::new((0..100).map(|n| CellState::Phase((n % 7) as u8)).collect());
    let trace = program_board(&mut BoardBusState::new(0, 10, 10), &cfg, DEFAULT_CELL_LATENCY_S)
        .map_err(|e| e.to_string())?;
    let t = trace.estimated_time_s();
    check(
        mismatches == 0 && lines == (20, 3) && t <= MAX_PROGRAM_TIME_S + 1e-12,
        format!(
            "{FUZZ_SEQUENCES} sequences, {mismatches} mismatches; lines {lines:?}; 100-cell program {:.1} ms",
            t * 1e3
        ),
    )
}

fn dominance() -> Outcome {
    let set = PhaseSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cases = 0;
    let mut failures = 0;
    for (nx, ny) in [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (1, 4), (4, 1), (2, 2)] {
        let geometry = ArrayGeometry::new(nx, ny, 0.5).map_err(|e| e.to_string())?;
        let n = nx * ny;
        for _ in 0..20 {
            let hbar: Vec<_> = (0..n)
                .map(|_| num_complex::Complex64::from_polar(rng.gen_range(0.1..2.0), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            let best = optimal_config(&hbar, &set, &geometry).map_err(|e| e.to_string())?;
            let p_best = combine(&best.weights(&set, &geometry).map_err(|e| e.to_string())?, &hbar)
                .map_err(|e| e.to_string())?
                .norm_sqr();
            let mut p_max: f64 = 0.0;
            for code in 0..8usize.pow(n as u32) {
                let states = (0..n)
                    .map(|k| CellState::from_code(((code / 8usize.pow(k as u32)) % 8) as u8).expect("code < 8"))
                    .collect();
                let w = RisConfiguration::new(states).weights(&set, &geometry).map_err(|e| e.to_string())?;
                p_max = p_max.max(combine(&w, &hbar).map_err(|e| e.to_string())?.norm_sqr());
            }
            cases += 1;
            if p_best < p_max * (1.0 - 1e-12) {
                failures += 1;
            }
        }
    }
    check(failures == 0, format!("{cases} channels, {failures} beaten by exhaustive search"))
}

fn desk_scale() -> Outcome {
    let s = Scenario::default();
    let p = s.optimal_power_dbm(&PhaseMode::default()).map_err(|e| e.to_string())?;
    check(
        (p + 66.5).abs() < 1e-6,
        format!(
            "hardware dBm not reproducible; fitted beta0 = {CALIBRATED_BETA0:.4e} places the full-board optimum at {p:.2} dBm, criteria 6-9 substitute"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("codebook count and build time", codebook_count),
        ("delay-line table", delay_lines),
        ("notch depth", notch),
        ("patch geometry", patch),
        ("field regions", fields),
        ("broadside HPBW", hpbw),
        ("N^2 scaling", scaling),
        ("quantization loss", quant_loss),
        ("grating lobes", grating),
        ("control plane", control_plane),
        ("oracle dominance", dominance),
        ("desk-scale substitution", desk_scale),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
