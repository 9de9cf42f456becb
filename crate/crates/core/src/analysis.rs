//! Scenario-level analysis: received power, beampatterns, beamwidth,
//! grating lobes, N^2 scaling, quantization loss, RCS and cost at scale.
//!
//! The simulation is array-factor only (isotropic elements). Received power
//! in dBm is
//!
//! ```text
//! P_rx = P_tx + 2 G + G_el + 10 log10 |sum_n w_n conj(h_n) g_n|^2
//! ```
//!
//! with `g`, `h` the line-of-sight channels of the link and `w` the cell
//! weights (zero for absorbing or masked cells).

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array_model::{
    cascaded_channel, combine, continuous_weights, optimal_weights, upa_response, ArrayError,
    ArrayGeometry, ComplexVector, LinkGeometry, PhaseMode, PhaseSet, SteeringAngles,
};
use crate::board::{centered_square, virtual_geometry, ActivationPattern, BoardError, BoardSpec};
use crate::codebook::{Codebook, CodebookError, GridSpec};

/// Power reported for exactly zero (or vanishing) received amplitude.
pub const POWER_FLOOR_DBM: f64 = -200.0;

/// Reference-distance gain fitted so that the default scenario's full-board
/// optimum (7-phase codebook) receives -66.5 dBm. Fitted, not measured.
pub const CALIBRATED_BETA0: f64 = 4.757025023808388e-5;

/// Received peak powers reported for the measured prototype, `(N, dBm)`.
pub const MEASURED_PEAK_DBM: [(usize, f64); 3] = [(16, -81.8), (64, -71.5), (100, -66.5)];

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no distinguishable beam: pattern spans only {span_db:.2} dB")]
    NoBeam { span_db: f64 },
    #[error("N = {0} has no square sub-array activation pattern on this board")]
    UnsupportedN(usize),
    #[error("unknown cost category `{0}` (expected pcb, components, assembly or total)")]
    UnknownCategory(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn to_dbm(power_linear: f64, offset_db: f64) -> f64 {
    if power_linear > 0.0 {
        (db(power_linear) + offset_db).max(POWER_FLOOR_DBM)
    } else {
        POWER_FLOOR_DBM
    }
}

/// Measurement setup: link, board, activation pattern and radio levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub link: LinkGeometry,
    pub board: BoardSpec,
    pub pattern: ActivationPattern,
    /// Transmit power per subcarrier.
    pub tx_power_dbm: f64,
    /// Gain of each of the TX and RX horns.
    pub antenna_gain_dbi: f64,
    /// Optional unit-cell element gain; 0 keeps the isotropic model.
    pub element_gain_dbi: f64,
    /// Inferred from the reported 17-27 dB gains over the noise floor at
    /// -74 / -64 dBm peaks.
    pub noise_floor_dbm: f64,
}

impl Default for Scenario {
    /// Anechoic-chamber setup: 1.1 m to TX, 6.3 m to RX, TX elevation 33°,
    /// RX elevation -3°, both azimuths 0°, 13.5 dBi horns, -30 dBm.
    fn default() -> Self {
        let board = BoardSpec::default();
        Self {
            link: LinkGeometry {
                d_t: 1.1,
                d_r: 6.3,
                beta0: CALIBRATED_BETA0,
                tx_angles: SteeringAngles::from_degrees(0.0, 33.0).expect("valid angles"),
                rx_angles: SteeringAngles::from_degrees(0.0, -3.0).expect("valid angles"),
            },
            pattern: ActivationPattern::full(&board),
            board,
            tx_power_dbm: -30.0,
            antenna_gain_dbi: 13.5,
            element_gain_dbi: 0.0,
            noise_floor_dbm: -91.0,
        }
    }
}

impl Scenario {
    pub fn with_pattern(&self, pattern: ActivationPattern) -> Self {
        Self {
            pattern,
            ..self.clone()
        }
    }

    pub fn with_angles(&self, tx: SteeringAngles, rx: SteeringAngles) -> Self {
        let mut s = self.clone();
        s.link.tx_angles = tx;
        s.link.rx_angles = rx;
        s
    }

    /// Geometry the beamformer sees for the active pattern.
    pub fn geometry(&self) -> Result<ArrayGeometry> {
        Ok(virtual_geometry(&self.board, &self.pattern)?)
    }

    fn offset_db(&self) -> f64 {
        self.tx_power_dbm + 2.0 * self.antenna_gain_dbi + self.element_gain_dbi
    }

    /// Cascaded channel of the scenario link toward `rx`.
    fn cascaded_to(&self, geometry: &ArrayGeometry, rx: &SteeringAngles) -> Result<ComplexVector> {
        let link = LinkGeometry {
            rx_angles: *rx,
            ..self.link
        };
        Ok(link.cascaded(geometry)?)
    }

    /// Received power (dBm) for `weights` laid out on `geometry`.
    pub fn received_power_dbm(&self, geometry: &ArrayGeometry, weights: &[Complex64]) -> Result<f64> {
        let y = combine(weights, &self.link.cascaded(geometry)?)?;
        Ok(to_dbm(y.norm_sqr(), self.offset_db()))
    }

    /// Optimal weights on the scenario geometry for an RX at `rx`.
    pub fn steer(&self, rx: &SteeringAngles, mode: &PhaseMode) -> Result<ComplexVector> {
        let geometry = self.geometry()?;
        Ok(optimal_weights(&self.cascaded_to(&geometry, rx)?, &geometry, mode)?)
    }

    /// Received power with the optimal configuration for the scenario link.
    pub fn optimal_power_dbm(&self, mode: &PhaseMode) -> Result<f64> {
        let geometry = self.geometry()?;
        let w = optimal_weights(&self.link.cascaded(&geometry)?, &geometry, mode)?;
        self.received_power_dbm(&geometry, &w)
    }

    pub fn link_budget(&self, geometry: &ArrayGeometry, weights: &[Complex64]) -> Result<LinkBudget> {
        let rx_power_dbm = self.received_power_dbm(geometry, weights)?;
        Ok(LinkBudget {
            rx_power_dbm,
            noise_floor_dbm: self.noise_floor_dbm,
            snr_db: rx_power_dbm - self.noise_floor_dbm,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub rx_power_dbm: f64,
    pub noise_floor_dbm: f64,
    pub snr_db: f64,
}

/// `beta0` that makes the scenario's optimal received power equal
/// `target_dbm`. Power scales with `beta0^2`.
pub fn calibrate_beta0(scenario: &Scenario, mode: &PhaseMode, target_dbm: f64) -> Result<f64> {
    let current = scenario.optimal_power_dbm(mode)?;
    Ok(scenario.link.beta0 * 10f64.powf((target_dbm - current) / 20.0))
}

/// Received power over a regular angular grid. `power_dbm[i][j]` belongs to
/// `elevations_deg[i]` and `azimuths_deg[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternGrid {
    pub azimuths_deg: Vec<f64>,
    pub elevations_deg: Vec<f64>,
    pub power_dbm: Vec<Vec<f64>>,
}

impl PatternGrid {
    fn step_deg(&self) -> f64 {
        let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 0.0 };
        step(&self.azimuths_deg).max(step(&self.elevations_deg))
    }

    pub fn max(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, row) in self.power_dbm.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if p > best.2 {
                    best = (i, j, p);
                }
            }
        }
        best
    }

    pub fn min(&self) -> f64 {
        self.power_dbm
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Grid points not exceeded by any of their (up to 8) neighbours.
    pub fn local_maxima(&self) -> Vec<(usize, usize)> {
        let (ne, na) = (self.elevations_deg.len(), self.azimuths_deg.len());
        let mut out = Vec::new();
        for i in 0..ne {
            for j in 0..na {
                let p = self.power_dbm[i][j];
                if p <= POWER_FLOOR_DBM {
                    continue;
                }
                let is_max = (i.saturating_sub(1)..=(i + 1).min(ne - 1)).all(|a| {
                    (j.saturating_sub(1)..=(j + 1).min(na - 1))
                        .all(|b| (a, b) == (i, j) || self.power_dbm[a][b] <= p)
                });
                if is_max {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Header row of azimuths, one row per elevation.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "elevation_deg\\azimuth_deg")?;
        for az in &self.azimuths_deg {
            write!(out, ",{az}")?;
        }
        writeln!(out)?;
        for (el, row) in self.elevations_deg.iter().zip(&self.power_dbm) {
            write!(out, "{el}")?;
            for p in row {
                write!(out, ",{p:.4}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn grid_axes(grid: &GridSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((grid.azimuths_deg()?, grid.elevations_deg()?))
}

/// Power received at every observation direction of `grid` with the
/// scenario's TX fixed and the given cell weights.
pub fn beampattern(scenario: &Scenario, weights: &[Complex64], grid: &GridSpec) -> Result<PatternGrid> {
    let geometry = scenario.geometry()?;
    if weights.len() != geometry.len() {
        return Err(ArrayError::Shape {
            expected: geometry.len(),
            actual: weights.len(),
        }
        .into());
    }
    let (azimuths, elevations) = grid_axes(grid)?;
    // fold the weights, TX channel and RX gain into one coefficient per cell
    let g = scenario.link.tx_channel(&geometry)?;
    let coeff: Vec<Complex64> = weights
        .iter()
        .zip(g.iter())
        .map(|(w, g)| w * g * scenario.link.rx_gain().sqrt())
        .collect();
    let offset = scenario.offset_db();
    let power_dbm = elevations
        .par_iter()
        .map(|&el| {
            azimuths
                .iter()
                .map(|&az| {
                    let obs = SteeringAngles::from_degrees(az, el)?;
                    let a = upa_response(&geometry, &obs);
                    let y: Complex64 = coeff.iter().zip(a.iter()).map(|(c, a)| c * a.conj()).sum();
                    Ok(to_dbm(y.norm_sqr(), offset))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PatternGrid {
        azimuths_deg: azimuths,
        elevations_deg: elevations,
        power_dbm,
    })
}

/// Power received at the scenario's RX for every entry of `codebook`,
/// laid out on the codebook grid.
pub fn codebook_sweep(scenario: &Scenario, codebook: &Codebook) -> Result<PatternGrid> {
    let (azimuths, elevations) = grid_axes(&codebook.grid)?;
    let geometry = &codebook.geometry;
    let hbar = scenario.link.cascaded(geometry)?;
    let offset = scenario.offset_db();
    let ne = elevations.len();
    let power_dbm = (0..ne)
        .into_par_iter()
        .map(|i| {
            (0..azimuths.len())
                .map(|j| {
                    let entry = &codebook.entries[j * ne + i];
                    let w = entry.config.weights(&codebook.phase_set, geometry)?;
                    Ok(to_dbm(combine(&w, &hbar)?.norm_sqr(), offset))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PatternGrid {
        azimuths_deg: azimuths,
        elevations_deg: elevations,
        power_dbm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSummary {
    pub peak_azimuth_deg: f64,
    pub peak_elevation_deg: f64,
    pub peak_dbm: f64,
    /// `None` when the -3 dB point is not reached on both sides of the
    /// peak within the grid.
    pub hpbw_azimuth_deg: Option<f64>,
    pub hpbw_elevation_deg: Option<f64>,
    /// Grid step above 1 degree: widths are quantized estimates.
    pub coarse: bool,
}

/// Offset (in samples, fractional) from `peak` to the -3 dB crossing in
/// direction `dir` along `cut`.
fn half_power_offset(cut: &[f64], peak: usize, dir: isize) -> Option<f64> {
    let level = cut[peak] - 3.0;
    let mut prev = peak;
    loop {
        let next = prev as isize + dir;
        if next < 0 || next as usize >= cut.len() {
            return None;
        }
        let next = next as usize;
        if cut[next] < level {
            let frac = (cut[prev] - level) / (cut[prev] - cut[next]);
            let steps = prev.abs_diff(peak) as f64 + frac;
            return Some(steps);
        }
        prev = next;
    }
}

fn cut_width(cut: &[f64], peak: usize, axis: &[f64]) -> Option<f64> {
    if axis.len() < 2 {
        return None;
    }
    let step = axis[1] - axis[0];
    let lo = half_power_offset(cut, peak, -1)?;
    let hi = half_power_offset(cut, peak, 1)?;
    Some((lo + hi) * step)
}

/// Global maximum and -3 dB widths along the azimuth and elevation cuts
/// through it, interpolated linearly in dB between samples.
pub fn peak_and_hpbw(pattern: &PatternGrid) -> Result<BeamSummary> {
    let (i, j, peak) = pattern.max();
    let span_db = peak - pattern.min();
    if !(span_db >= 3.0) {
        return Err(AnalysisError::NoBeam { span_db });
    }
    let az_cut = &pattern.power_dbm[i];
    let el_cut: Vec<f64> = pattern.power_dbm.iter().map(|row| row[j]).collect();
    Ok(BeamSummary {
        peak_azimuth_deg: pattern.azimuths_deg[j],
        peak_elevation_deg: pattern.elevations_deg[i],
        peak_dbm: peak,
        hpbw_azimuth_deg: cut_width(az_cut, j, &pattern.azimuths_deg),
        hpbw_elevation_deg: cut_width(&el_cut, i, &pattern.elevations_deg),
        coarse: pattern.step_deg() > 1.0 + 1e-9,
    })
}

/// Point in `(cos azimuth, sin elevation)` space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionCosines {
    pub u: f64,
    pub v: f64,
}

impl From<SteeringAngles> for DirectionCosines {
    fn from(a: SteeringAngles) -> Self {
        let (u, v) = a.direction_cosines();
        Self { u, v }
    }
}

impl DirectionCosines {
    /// Main-lobe position of a codebook sweep with the RIS between `tx` and
    /// `rx`: `(cos t_az - cos r_az, sin t_el - sin r_el)`.
    pub fn codebook_target(tx: &SteeringAngles, rx: &SteeringAngles) -> Self {
        let (ut, vt) = tx.direction_cosines();
        let (ur, vr) = rx.direction_cosines();
        Self { u: ut - ur, v: vt - vr }
    }
}

/// Closed angular window (degrees) in which lobes are reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularWindow {
    pub azimuth_deg: (f64, f64),
    pub elevation_deg: (f64, f64),
}

impl Default for AngularWindow {
    /// The codebook search space.
    fn default() -> Self {
        Self {
            azimuth_deg: (-90.0, 90.0),
            elevation_deg: (-45.0, 45.0),
        }
    }
}

impl From<&GridSpec> for AngularWindow {
    fn from(g: &GridSpec) -> Self {
        Self {
            azimuth_deg: g.azimuth_deg,
            elevation_deg: g.elevation_deg,
        }
    }
}

const COSINE_EPS: f64 = 1e-9;

fn lobe_offsets(delta: f64, centre: f64) -> Vec<f64> {
    let period = 1.0 / delta;
    let m_lo = ((-1.0 - centre) / period - COSINE_EPS).ceil() as i64;
    let m_hi = ((1.0 - centre) / period + COSINE_EPS).floor() as i64;
    (m_lo..=m_hi)
        .map(|m| (centre + m as f64 * period).clamp(-1.0, 1.0))
        .collect()
}

/// Main and grating lobes in direction-cosine space: `(u0 + m/delta,
/// v0 + n/delta)` for all integers with both coordinates in `[-1, 1]`.
pub fn grating_lobe_cosines(delta: f64, target: DirectionCosines) -> Result<Vec<DirectionCosines>> {
    if !(delta > 0.0) {
        return Err(AnalysisError::Domain(format!("spacing ratio must be positive, got {delta}")));
    }
    let us = lobe_offsets(delta, target.u);
    let vs = lobe_offsets(delta, target.v);
    Ok(us
        .iter()
        .flat_map(|&u| vs.iter().map(move |&v| DirectionCosines { u, v }))
        .collect())
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo - 1e-9 && x <= hi + 1e-9
}

/// Lobe directions as angle pairs inside `window`. Each `u` maps to the
/// azimuths `+-acos(u)`, each `v` to the elevation `asin(v)`.
pub fn grating_lobes(
    delta: f64,
    target: DirectionCosines,
    window: &AngularWindow,
) -> Result<Vec<SteeringAngles>> {
    let cosines = grating_lobe_cosines(delta, target)?;
    let mut out = Vec::new();
    for c in cosines {
        let el = c.v.asin().to_degrees();
        if !within(el, window.elevation_deg) {
            continue;
        }
        let base = c.u.acos().to_degrees();
        let mut azimuths = vec![base];
        if base > 1e-9 {
            azimuths.push(-base);
        }
        for az in azimuths.into_iter().filter(|&az| within(az, window.azimuth_deg)) {
            out.push(SteeringAngles::from_degrees(az, el)?);
        }
    }
    out.sort_by(|a, b| {
        (a.azimuth_rad(), a.elevation_rad())
            .partial_cmp(&(b.azimuth_rad(), b.elevation_rad()))
            .expect("finite angles")
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LobeCheck {
    pub predicted_azimuth_deg: f64,
    pub predicted_elevation_deg: f64,
    /// Closest qualifying local maximum of the simulated pattern.
    pub simulated_azimuth_deg: Option<f64>,
    pub simulated_elevation_deg: Option<f64>,
    pub simulated_dbm: Option<f64>,
    pub matched: bool,
}

/// Pairs each predicted lobe with the nearest local maximum of `pattern`
/// that lies within `min_relative_db` of the global peak. A lobe matches
/// when that maximum is within `tolerance_deg` on both axes.
pub fn verify_grating(
    pattern: &PatternGrid,
    predicted: &[SteeringAngles],
    tolerance_deg: f64,
    min_relative_db: f64,
) -> Vec<LobeCheck> {
    let (_, _, peak) = pattern.max();
    let maxima: Vec<(f64, f64, f64)> = pattern
        .local_maxima()
        .into_iter()
        .map(|(i, j)| (pattern.azimuths_deg[j], pattern.elevations_deg[i], pattern.power_dbm[i][j]))
        .filter(|&(_, _, p)| p >= peak + min_relative_db)
        .collect();
    predicted
        .iter()
        .map(|lobe| {
            let (az, el) = (lobe.azimuth_deg(), lobe.elevation_deg());
            let nearest = maxima.iter().min_by(|a, b| {
                let da = (a.0 - az).abs().max((a.1 - el).abs());
                let db = (b.0 - az).abs().max((b.1 - el).abs());
                da.partial_cmp(&db).expect("finite distances")
            });
            let matched = nearest.is_some_and(|m| {
                (m.0 - az).abs() <= tolerance_deg + 1e-9 && (m.1 - el).abs() <= tolerance_deg + 1e-9
            });
            LobeCheck {
                predicted_azimuth_deg: az,
                predicted_elevation_deg: el,
                simulated_azimuth_deg: nearest.map(|m| m.0),
                simulated_elevation_deg: nearest.map(|m| m.1),
                simulated_dbm: nearest.map(|m| m.2),
                matched,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub simulated_dbm: f64,
    /// `N^2` law anchored at the largest `N`.
    pub model_dbm: f64,
}

/// Optimal received power for centered `sqrt(N) x sqrt(N)` sub-arrays,
/// compared with the coherent-combining `N^2` law.
pub fn scaling_law(n_list: &[usize], scenario: &Scenario, mode: &PhaseMode) -> Result<Vec<ScalingRow>> {
    let mut sims = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let side = (n as f64).sqrt().round() as usize;
        if side * side != n || side == 0 {
            return Err(AnalysisError::UnsupportedN(n));
        }
        let pattern = centered_square(&scenario.board, side).map_err(|_| AnalysisError::UnsupportedN(n))?;
        sims.push((n, scenario.with_pattern(pattern).optimal_power_dbm(mode)?));
    }
    let Some(&(n_max, p_max)) = sims.iter().max_by_key(|(n, _)| *n) else {
        return Ok(Vec::new());
    };
    Ok(sims
        .into_iter()
        .map(|(n, p)| ScalingRow {
            n,
            simulated_dbm: p,
            model_dbm: p_max + 20.0 * (n as f64 / n_max as f64).log10(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationLoss {
    pub draws: usize,
    /// Mean of quantized / continuous optimal power.
    pub mean_ratio: f64,
    pub min_ratio: f64,
}

/// Monte-Carlo loss of phase quantization over random LoS links (TX and RX
/// directions uniform in azimuth and elevation).
pub fn quantization_loss(
    geometry: &ArrayGeometry,
    set: &PhaseSet,
    draws: usize,
    seed: u64,
) -> Result<QuantizationLoss> {
    if draws == 0 {
        return Err(AnalysisError::Domain("need at least one draw".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut min_ratio = f64::INFINITY;
    let mode = PhaseMode::Quantized(set.clone());
    for _ in 0..draws {
        let mut angles = || {
            SteeringAngles::new(rng.gen_range(-PI..=PI), rng.gen_range(-PI / 2.0..=PI / 2.0))
        };
        let (tx, rx) = (angles()?, angles()?);
        let hbar = cascaded_channel(&upa_response(geometry, &rx), &upa_response(geometry, &tx))?;
        let ideal = combine(&continuous_weights(&hbar, geometry)?, &hbar)?.norm_sqr();
        let quantized = combine(&optimal_weights(&hbar, geometry, &mode)?, &hbar)?.norm_sqr();
        let ratio = quantized / ideal;
        sum += ratio;
        min_ratio = min_ratio.min(ratio);
    }
    Ok(QuantizationLoss {
        draws,
        mean_ratio: sum / draws as f64,
        min_ratio,
    })
}

/// Radar cross section (dBsm) from the radar range equation,
/// `64 pi^3 (P_rx / P_tx) (d1 d2 / (lambda G))^2`.
pub fn radar_rcs(
    p_rx_dbm: f64,
    p_tx_dbm: f64,
    d1_m: f64,
    d2_m: f64,
    wavelength_m: f64,
    gain_dbi: f64,
) -> Result<f64> {
    if !(d1_m > 0.0 && d2_m > 0.0 && wavelength_m > 0.0) {
        return Err(AnalysisError::Domain(
            "distances and wavelength must be positive".into(),
        ));
    }
    let gain = 10f64.powf(gain_dbi / 10.0);
    let bracket = d1_m * d2_m / (wavelength_m * gain);
    Ok(db(64.0 * PI.powi(3)) + (p_rx_dbm - p_tx_dbm) + 2.0 * db(bracket))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostCategory {
    Pcb,
    Components,
    Assembly,
    Total,
}

impl FromStr for CostCategory {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcb" => Ok(Self::Pcb),
            "components" => Ok(Self::Components),
            "assembly" => Ok(Self::Assembly),
            "total" => Ok(Self::Total),
            other => Err(AnalysisError::UnknownCategory(other.to_string())),
        }
    }
}

impl CostCategory {
    pub const ALL: [Self; 4] = [Self::Pcb, Self::Components, Self::Assembly, Self::Total];

    /// Quoted `(boards, USD per cell)` points.
    pub fn anchors(self) -> &'static [(f64, f64)] {
        match self {
            Self::Pcb => &[(10.0, 0.22), (200.0, 0.11), (1000.0, 0.09)],
            Self::Components => &[(1000.0, 1.88)],
            Self::Assembly => &[(10.0, 0.51), (1000.0, 0.05)],
            Self::Total => &[],
        }
    }
}

fn interpolate_log(anchors: &[(f64, f64)], n: f64) -> f64 {
    let first = anchors[0];
    let last = anchors[anchors.len() - 1];
    if n <= first.0 {
        return first.1;
    }
    if n >= last.0 {
        return last.1;
    }
    let k = anchors.windows(2).position(|w| n <= w[1].0).expect("n inside anchors");
    let ((n0, c0), (n1, c1)) = (anchors[k], anchors[k + 1]);
    let t = (n.ln() - n0.ln()) / (n1.ln() - n0.ln());
    c0 + t * (c1 - c0)
}

/// Cost per unit cell at a production volume of `n_boards`: linear in
/// `log(n_boards)` between quotes, clamped outside them. `Total` sums the
/// other three.
pub fn cost_per_cell(n_boards: usize, category: CostCategory) -> Result<f64> {
    if n_boards == 0 {
        return Err(AnalysisError::Domain("need at least one board".into()));
    }
    let n = n_boards as f64;
    Ok(match category {
        CostCategory::Total => [CostCategory::Pcb, CostCategory::Components, CostCategory::Assembly]
            .iter()
            .map(|c| interpolate_log(c.anchors(), n))
            .sum(),
        c => interpolate_log(c.anchors(), n),
    })
}
