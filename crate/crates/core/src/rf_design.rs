//! Closed-form RF design calculators for the unit cell and the board.
//!
//! Patch dimensions follow the transmission-line model of a rectangular
//! microstrip patch; the inset notch, delay lines, velocity factor, element
//! spacing limit and field-region thresholds are direct formulas.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SPEED_OF_LIGHT;

/// Width of the 50 ohm feed and delay microstrips, chosen empirically.
pub const MICROSTRIP_WIDTH_M: f64 = 0.75e-3;
/// Width of the RF switch ports the microstrips taper into.
pub const SWITCH_PORT_WIDTH_M: f64 = 0.2e-3;
/// Patch size after full-wave refinement.
pub const REFINED_PATCH_WIDTH_M: f64 = 15.5e-3;
pub const REFINED_PATCH_LENGTH_M: f64 = 12.8e-3;
/// Notch depth that performed best in full-wave simulation.
pub const REFINED_NOTCH_DEPTH_M: f64 = 3.5e-3;
/// Edge resistance of the patch at the feed point.
pub const DEFAULT_EDGE_RESISTANCE_OHM: f64 = 341.0;
pub const DEFAULT_FEED_RESISTANCE_OHM: f64 = 50.0;
/// Velocity factor measured by TDR (135 mm line, 1.51 ns), rounded.
pub const DEFAULT_VELOCITY_FACTOR: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown preset `{0}` (expected `paper` or `paper-corrected`)")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, DesignError>;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DesignError::Domain(format!("{name} must be positive, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstrateSpec {
    pub eps_r: f64,
    pub height_m: f64,
}

impl SubstrateSpec {
    /// Nominal FR4 datasheet permittivity.
    pub const NOMINAL: Self = Self {
        eps_r: 4.3,
        height_m: 0.53e-3,
    };
    /// Permittivity re-estimated from measurements.
    pub const CORRECTED: Self = Self {
        eps_r: 4.66,
        height_m: 0.53e-3,
    };

    pub fn new(eps_r: f64, height_m: f64) -> Result<Self> {
        if !(eps_r >= 1.0) {
            return Err(DesignError::Domain(format!(
                "relative permittivity must be at least 1, got {eps_r}"
            )));
        }
        positive("substrate height", height_m)?;
        Ok(Self { eps_r, height_m })
    }
}

impl Default for SubstrateSpec {
    fn default() -> Self {
        Self::NOMINAL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchDesign {
    pub width_m: f64,
    pub length_m: f64,
    pub eps_eff: f64,
    pub l_eff_m: f64,
    pub delta_l_m: f64,
}

/// Rectangular patch width and length for resonance at `f_hz`.
///
/// `W = lambda / (2 sqrt((eps_r + 1) / 2))`, then the effective permittivity
/// (with `h/W` as the fill ratio), the effective length
/// `c / (2 f sqrt(eps_eff))`, the fringing extension `dL`, and finally
/// `L = L_eff - 2 dL`.
pub fn patch_dimensions(f_hz: f64, substrate: &SubstrateSpec) -> Result<PatchDesign> {
    positive("frequency", f_hz)?;
    let SubstrateSpec { eps_r, height_m: h } = *substrate;
    let lambda = SPEED_OF_LIGHT / f_hz;
    let width = lambda / (2.0 * (0.5 * (eps_r + 1.0)).sqrt());
    let h_w = h / width;
    let eps_eff = (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 / (1.0 + 12.0 * h_w).sqrt();
    let l_eff = SPEED_OF_LIGHT / (2.0 * f_hz * eps_eff.sqrt());
    let delta_l = 0.412 * h * (eps_eff + 0.3) / (eps_eff - 0.258) * (h_w + 0.264) / (h_w + 0.8);
    Ok(PatchDesign {
        width_m: width,
        length_m: l_eff - 2.0 * delta_l,
        eps_eff,
        l_eff_m: l_eff,
        delta_l_m: delta_l,
    })
}

/// Inset depth `(L / pi) acos(sqrt(R / R_edge))` that matches the patch to
/// `r_target_ohm`.
pub fn notch_depth(length_m: f64, r_edge_ohm: f64, r_target_ohm: f64) -> Result<f64> {
    positive("patch length", length_m)?;
    positive("target resistance", r_target_ohm)?;
    positive("edge resistance", r_edge_ohm)?;
    if r_target_ohm > r_edge_ohm {
        return Err(DesignError::Domain(format!(
            "target resistance {r_target_ohm} ohm exceeds the edge resistance {r_edge_ohm} ohm"
        )));
    }
    Ok(length_m / PI * (r_target_ohm / r_edge_ohm).sqrt().acos())
}

fn check_line_params(f_hz: f64, v_f: f64) -> Result<()> {
    positive("frequency", f_hz)?;
    if !(v_f > 0.0 && v_f <= 1.0) {
        return Err(DesignError::Domain(format!("velocity factor must be in (0, 1], got {v_f}")));
    }
    Ok(())
}

/// Delay-line length giving a round-trip phase of `phase_deg`:
/// `l = phase c v_f / (720 f)`.
pub fn delay_line_length(phase_deg: f64, f_hz: f64, v_f: f64) -> Result<f64> {
    check_line_params(f_hz, v_f)?;
    Ok(phase_deg * SPEED_OF_LIGHT * v_f / (720.0 * f_hz))
}

/// Round-trip phase of a delay line, wrapped to `[0, 360)` degrees.
pub fn phase_of_length(length_m: f64, f_hz: f64, v_f: f64) -> Result<f64> {
    check_line_params(f_hz, v_f)?;
    Ok((360.0 * 2.0 * length_m * f_hz / (SPEED_OF_LIGHT * v_f)).rem_euclid(360.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayLineRow {
    /// Switch output port.
    pub port: u8,
    /// 3-bit code selecting the port.
    pub code: u8,
    pub phase_deg: f64,
    pub length_m: f64,
}

/// The seven reflective ports, phases `k * 360/7` for `k = 1..=7`.
pub fn delay_line_table(f_hz: f64, v_f: f64) -> Result<Vec<DelayLineRow>> {
    (1..=7u8)
        .map(|k| {
            let phase_deg = k as f64 * 360.0 / 7.0;
            Ok(DelayLineRow {
                port: crate::control_plane::PORT_OF_CODE[(k - 1) as usize],
                code: k - 1,
                phase_deg,
                length_m: delay_line_length(phase_deg, f_hz, v_f)?,
            })
        })
        .collect()
}

/// `(length / delay) / c`.
pub fn velocity_factor(length_m: f64, delay_s: f64) -> Result<f64> {
    positive("line length", length_m)?;
    positive("delay", delay_s)?;
    Ok(length_m / delay_s / SPEED_OF_LIGHT)
}

/// Largest element spacing free of grating lobes when steering up to
/// `theta_max_rad`: `lambda / (1 + sin theta_max)`.
pub fn max_spacing(theta_max_rad: f64, wavelength_m: f64) -> Result<f64> {
    positive("wavelength", wavelength_m)?;
    if !(0.0..=PI / 2.0 + 1e-12).contains(&theta_max_rad) {
        return Err(DesignError::Domain(format!(
            "maximum steering angle must be in [0, pi/2], got {theta_max_rad}"
        )));
    }
    Ok(wavelength_m / (1.0 + theta_max_rad.sin()))
}

/// `(2 D^2 / lambda, 0.62 sqrt(D^3 / lambda))`: far-field and reactive
/// near-field distances of an aperture with diagonal `D`.
pub fn field_regions(diagonal_m: f64, wavelength_m: f64) -> Result<(f64, f64)> {
    positive("aperture diagonal", diagonal_m)?;
    positive("wavelength", wavelength_m)?;
    Ok((
        2.0 * diagonal_m * diagonal_m / wavelength_m,
        0.62 * (diagonal_m.powi(3) / wavelength_m).sqrt(),
    ))
}

/// Named input bundle for the design calculators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPreset {
    pub name: &'static str,
    pub frequency_hz: f64,
    pub substrate: SubstrateSpec,
    pub velocity_factor: f64,
    pub r_edge_ohm: f64,
    pub r_target_ohm: f64,
    /// Board aperture diagonal used for the field-region thresholds.
    pub diagonal_m: f64,
    pub theta_max_rad: f64,
}

impl DesignPreset {
    /// Initial design point: 5.5 GHz on nominal FR4.
    pub const PAPER: Self = Self {
        name: "paper",
        frequency_hz: 5.5e9,
        substrate: SubstrateSpec::NOMINAL,
        velocity_factor: DEFAULT_VELOCITY_FACTOR,
        r_edge_ohm: DEFAULT_EDGE_RESISTANCE_OHM,
        r_target_ohm: DEFAULT_FEED_RESISTANCE_OHM,
        diagonal_m: 0.43,
        theta_max_rad: PI / 2.0,
    };

    /// After re-estimating the permittivity: 5.3 GHz, eps_r = 4.66.
    pub const PAPER_CORRECTED: Self = Self {
        name: "paper-corrected",
        frequency_hz: 5.3e9,
        substrate: SubstrateSpec::CORRECTED,
        ..Self::PAPER
    };

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::PAPER),
            "paper-corrected" => Ok(Self::PAPER_CORRECTED),
            other => Err(DesignError::UnknownPreset(other.to_string())),
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }
}

/// Every derived quantity of a design point, SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub preset: String,
    pub frequency_hz: f64,
    pub wavelength_m: f64,
    pub eps_r: f64,
    pub substrate_height_m: f64,
    pub patch: PatchDesign,
    pub notch_depth_m: f64,
    pub velocity_factor: f64,
    pub delay_lines: Vec<DelayLineRow>,
    pub max_spacing_m: f64,
    pub far_field_m: f64,
    pub reactive_near_field_m: f64,
    pub microstrip_width_m: f64,
}

pub fn design_report(p: &DesignPreset) -> Result<DesignReport> {
    let patch = patch_dimensions(p.frequency_hz, &p.substrate)?;
    let lambda = p.wavelength_m();
    let (far, reactive) = field_regions(p.diagonal_m, lambda)?;
    Ok(DesignReport {
        preset: p.name.to_string(),
        frequency_hz: p.frequency_hz,
        wavelength_m: lambda,
        eps_r: p.substrate.eps_r,
        substrate_height_m: p.substrate.height_m,
        patch,
        notch_depth_m: notch_depth(patch.length_m, p.r_edge_ohm, p.r_target_ohm)?,
        velocity_factor: p.velocity_factor,
        delay_lines: delay_line_table(p.frequency_hz, p.velocity_factor)?,
        max_spacing_m: max_spacing(p.theta_max_rad, lambda)?,
        far_field_m: far,
        reactive_near_field_m: reactive,
        microstrip_width_m: MICROSTRIP_WIDTH_M,
    })
}
