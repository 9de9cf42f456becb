//! Complex-valued array math: UPA steering vectors, line-of-sight channels,
//! configuration application, phase quantization and optimal-configuration
//! synthesis.
//!
//! Cell index order is x-major, `n = ix * ny + iy`, which matches the
//! Kronecker structure `a_x ⊗ a_y` of the planar array response.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::Deref;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 3-bit code reserved for the absorbing switch port.
pub const ABSORB_CODE: u8 = 7;

/// Largest number of reflective phases a 3-bit switch can address once the
/// absorber code is reserved.
pub const MAX_PHASES: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrayError {
    #[error("shape mismatch: expected {expected} entries, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid phase set: {0}")]
    PhaseSet(String),
}

pub type Result<T> = std::result::Result<T, ArrayError>;

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(ArrayError::Shape { expected, actual })
    }
}

/// Azimuth/elevation pair, stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngles {
    azimuth_rad: f64,
    elevation_rad: f64,
}

impl SteeringAngles {
    pub fn new(azimuth_rad: f64, elevation_rad: f64) -> Result<Self> {
        // a hair of slack so degree round-trips of the endpoints are accepted
        const EPS: f64 = 1e-12;
        if !azimuth_rad.is_finite() || azimuth_rad.abs() > PI + EPS {
            return Err(ArrayError::Domain(format!(
                "azimuth {azimuth_rad} rad outside [-pi, pi]"
            )));
        }
        if !elevation_rad.is_finite() || elevation_rad.abs() > FRAC_PI_2 + EPS {
            return Err(ArrayError::Domain(format!(
                "elevation {elevation_rad} rad outside [-pi/2, pi/2]"
            )));
        }
        Ok(Self {
            azimuth_rad,
            elevation_rad,
        })
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        Self::new(azimuth_deg.to_radians(), elevation_deg.to_radians())
    }

    pub fn azimuth_rad(&self) -> f64 {
        self.azimuth_rad
    }

    pub fn elevation_rad(&self) -> f64 {
        self.elevation_rad
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_rad.to_degrees()
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_rad.to_degrees()
    }

    /// `(cos azimuth, sin elevation)`: the coordinates in which the array
    /// phase progressions are linear.
    pub fn direction_cosines(&self) -> (f64, f64) {
        (self.azimuth_rad.cos(), self.elevation_rad.sin())
    }
}

/// Planar grid of `nx * ny` cells with spacing `delta` wavelengths and an
/// activation mask (`true` = radiating).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    nx: usize,
    ny: usize,
    delta: f64,
    mask: Vec<bool>,
}

impl ArrayGeometry {
    /// Fully active array.
    pub fn new(nx: usize, ny: usize, delta: f64) -> Result<Self> {
        Self::with_mask(nx, ny, delta, vec![true; nx * ny])
    }

    pub fn with_mask(nx: usize, ny: usize, delta: f64, mask: Vec<bool>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(ArrayError::Geometry(format!(
                "array dimensions must be positive, got {nx}x{ny}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(ArrayError::Geometry(format!(
                "spacing ratio must be positive, got {delta}"
            )));
        }
        check_len(nx * ny, mask.len())?;
        Ok(Self { nx, ny, delta, mask })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    pub fn coords(&self, n: usize) -> (usize, usize) {
        (n / self.ny, n % self.ny)
    }

    pub fn is_active(&self, n: usize) -> bool {
        self.mask[n]
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Same cells and spacing with a different mask.
    pub fn masked(&self, mask: Vec<bool>) -> Result<Self> {
        Self::with_mask(self.nx, self.ny, self.delta, mask)
    }
}

/// Dense complex vector indexed like the cells of an [`ArrayGeometry`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|z| z.conj()).collect())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|z| z * factor).collect())
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl From<Vec<Complex64>> for ComplexVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

impl FromIterator<Complex64> for ComplexVector {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Per-cell state: one of the reflective phases (by index into a
/// [`PhaseSet`]) or the absorbing port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Phase(u8),
    Absorb,
}

impl CellState {
    /// 3-bit code driven onto the phase bus.
    pub fn code(self) -> u8 {
        match self {
            CellState::Phase(k) => k,
            CellState::Absorb => ABSORB_CODE,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            ABSORB_CODE => Some(CellState::Absorb),
            k if k < ABSORB_CODE => Some(CellState::Phase(k)),
            _ => None,
        }
    }
}

/// Allowed reflection phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSet {
    phases_rad: Vec<f64>,
    has_absorb: bool,
}

impl Default for PhaseSet {
    /// The seven delay-line phases `k * 360/7` degrees for `k = 1..=7`, in
    /// switch-table row order, with the last one (360°) wrapped to 0.
    fn default() -> Self {
        let phases_rad = (1..=7)
            .map(|k| (k as f64 * TAU / 7.0).rem_euclid(TAU))
            .map(|p| if (TAU - p) < 1e-12 { 0.0 } else { p })
            .collect();
        Self {
            phases_rad,
            has_absorb: true,
        }
    }
}

impl PhaseSet {
    pub fn new(phases_rad: Vec<f64>, has_absorb: bool) -> Result<Self> {
        if phases_rad.len() > MAX_PHASES {
            return Err(ArrayError::PhaseSet(format!(
                "at most {MAX_PHASES} phases fit the 3-bit code space, got {}",
                phases_rad.len()
            )));
        }
        if let Some(p) = phases_rad.iter().find(|p| !(0.0..TAU).contains(*p)) {
            return Err(ArrayError::PhaseSet(format!("phase {p} rad outside [0, 2pi)")));
        }
        Ok(Self {
            phases_rad,
            has_absorb,
        })
    }

    /// `levels` equally spaced phases starting at 0.
    pub fn uniform(levels: usize) -> Result<Self> {
        Self::new(
            (0..levels).map(|k| k as f64 * TAU / levels as f64).collect(),
            true,
        )
    }

    pub fn phases_rad(&self) -> &[f64] {
        &self.phases_rad
    }

    pub fn has_absorb(&self) -> bool {
        self.has_absorb
    }

    pub fn len(&self) -> usize {
        self.phases_rad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases_rad.is_empty()
    }

    pub fn phase(&self, index: u8) -> Option<f64> {
        self.phases_rad.get(index as usize).copied()
    }
}

/// How phases are chosen when synthesizing a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseMode {
    Quantized(PhaseSet),
    /// Unquantized phases; used as the reference optimum.
    Continuous,
}

impl Default for PhaseMode {
    fn default() -> Self {
        PhaseMode::Quantized(PhaseSet::default())
    }
}

/// Discrete per-cell configuration (the diagonal of the RIS matrix).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RisConfiguration {
    states: Vec<CellState>,
}

impl RisConfiguration {
    pub fn new(states: Vec<CellState>) -> Self {
        Self { states }
    }

    pub fn all_absorb(len: usize) -> Self {
        Self::new(vec![CellState::Absorb; len])
    }

    pub fn states(&self) -> &[CellState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Complex reflection coefficient per cell. Absorbing and masked-off
    /// cells contribute exactly zero.
    pub fn weights(&self, set: &PhaseSet, geometry: &ArrayGeometry) -> Result<ComplexVector> {
        check_len(geometry.len(), self.states.len())?;
        self.states
            .iter()
            .zip(geometry.mask())
            .map(|(state, &active)| match (state, active) {
                (_, false) | (CellState::Absorb, _) => Ok(Complex64::new(0.0, 0.0)),
                (CellState::Phase(k), true) => set
                    .phase(*k)
                    .map(|psi| Complex64::from_polar(1.0, psi))
                    .ok_or_else(|| {
                        ArrayError::PhaseSet(format!(
                            "phase index {k} out of range for a set of {}",
                            set.len()
                        ))
                    }),
            })
            .collect()
    }

    /// Configuration whose phases are the negation of this one's. For sets
    /// closed under negation this is the conjugate configuration.
    pub fn conjugate(&self, set: &PhaseSet) -> Result<Self> {
        self.states
            .iter()
            .map(|s| match *s {
                CellState::Absorb => Ok(CellState::Absorb),
                CellState::Phase(k) => {
                    let psi = set.phase(k).ok_or_else(|| {
                        ArrayError::PhaseSet(format!("phase index {k} out of range"))
                    })?;
                    quantize_phase(-psi, set).map(CellState::Phase)
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

/// One-dimensional progression `e^{j 2 pi delta i cosine}` for `i = 0..n`.
pub fn axis_response(n: usize, delta: f64, cosine: f64) -> Vec<Complex64> {
    (0..n)
        .map(|i| Complex64::from_polar(1.0, TAU * delta * i as f64 * cosine))
        .collect()
}

/// Planar array response `a_x(azimuth) ⊗ a_y(elevation)`. The mask is not
/// applied.
pub fn upa_response(geometry: &ArrayGeometry, angles: &SteeringAngles) -> ComplexVector {
    let (u, v) = angles.direction_cosines();
    let ax = axis_response(geometry.nx, geometry.delta, u);
    let ay = axis_response(geometry.ny, geometry.delta, v);
    ax.iter()
        .flat_map(|x| ay.iter().map(move |y| x * y))
        .collect()
}

/// Average channel power gain `beta0 / d^2`.
pub fn path_gain(beta0: f64, distance_m: f64) -> Result<f64> {
    if !(beta0 > 0.0) || !(distance_m > 0.0) {
        return Err(ArrayError::Domain(format!(
            "reference gain and distance must be positive, got beta0={beta0}, d={distance_m}"
        )));
    }
    Ok(beta0 / (distance_m * distance_m))
}

/// Line-of-sight channel `sqrt(gain) * a(angles)`.
pub fn los_channel(
    geometry: &ArrayGeometry,
    angles: &SteeringAngles,
    gain: f64,
) -> Result<ComplexVector> {
    if !(gain > 0.0) {
        return Err(ArrayError::Domain(format!(
            "channel gain must be positive, got {gain}"
        )));
    }
    Ok(upa_response(geometry, angles).scale(gain.sqrt()))
}

/// Cascaded channel `diag(h^H) g`, i.e. `conj(h_n) * g_n`.
pub fn cascaded_channel(h: &[Complex64], g: &[Complex64]) -> Result<ComplexVector> {
    check_len(h.len(), g.len())?;
    Ok(h.iter().zip(g).map(|(h, g)| h.conj() * g).collect())
}

/// Noiseless received amplitude `sum_n w_n * hbar_n`.
pub fn combine(weights: &[Complex64], hbar: &[Complex64]) -> Result<Complex64> {
    check_len(weights.len(), hbar.len())?;
    Ok(weights.iter().zip(hbar).map(|(w, h)| w * h).sum())
}

/// Received amplitude for a discrete configuration; power is `|y|^2`.
pub fn apply_config(
    config: &RisConfiguration,
    set: &PhaseSet,
    geometry: &ArrayGeometry,
    hbar: &[Complex64],
) -> Result<Complex64> {
    check_len(geometry.len(), hbar.len())?;
    combine(&config.weights(set, geometry)?, hbar)
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Index of the set phase closest to `target_rad` on the circle. Ties go to
/// the earlier index.
pub fn quantize_phase(target_rad: f64, set: &PhaseSet) -> Result<u8> {
    if set.is_empty() {
        return Err(ArrayError::PhaseSet("cannot quantize onto an empty phase set".into()));
    }
    Ok(nearest_phase(target_rad, &set.phases_rad) as u8)
}

fn nearest_phase(target_rad: f64, phases: &[f64]) -> usize {
    let target = target_rad.rem_euclid(TAU);
    let mut best = (0usize, f64::INFINITY);
    for (k, &psi) in phases.iter().enumerate() {
        let d = circular_distance(target, psi);
        if d < best.1 {
            best = (k, d);
        }
    }
    best.0
}

/// Breakpoints of the per-cell decision as a function of the target angle
/// `t`: the cell takes the set phase nearest `t`, or absorbs when even that
/// phase is more than a quarter turn away (its term would point backwards).
/// Each breakpoint carries the state taken just after it, moving
/// counter-clockwise.
fn decision_boundaries(set: &PhaseSet) -> Vec<(f64, Option<usize>)> {
    let phases = set.phases_rad();
    let state_at = |t: f64| -> Option<usize> {
        let k = nearest_phase(t, phases);
        (!set.has_absorb() || circular_distance(t, phases[k]) < FRAC_PI_2).then_some(k)
    };
    let mut cuts: Vec<f64> = Vec::new();
    let mut sorted = phases.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    for (j, &lo) in sorted.iter().enumerate() {
        let hi = sorted.get(j + 1).copied().unwrap_or(sorted[0] + TAU);
        cuts.push((0.5 * (lo + hi)).rem_euclid(TAU));
        if set.has_absorb() {
            cuts.push((lo + FRAC_PI_2).rem_euclid(TAU));
            cuts.push((lo - FRAC_PI_2).rem_euclid(TAU));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.is_empty() {
        return Vec::new();
    }
    let arcs: Vec<(f64, Option<usize>)> = (0..cuts.len())
        .map(|j| {
            let end = cuts.get(j + 1).copied().unwrap_or(cuts[0] + TAU);
            (cuts[j], state_at(0.5 * (cuts[j] + end)))
        })
        .collect();
    // keep only cuts where the state actually changes
    (0..arcs.len())
        .filter(|&j| arcs[j].1 != arcs[(j + arcs.len() - 1) % arcs.len()].1)
        .map(|j| arcs[j])
        .collect()
}

const TIE_REL: f64 = 1e-9;

/// Quantized configuration maximizing `|sum w_n hbar_n|` over the phase set.
///
/// For a fixed phase `psi` of the combined sum, the best choice per cell is
/// the set phase nearest `psi - arg(hbar_n)`, or absorption if that term
/// would still oppose `psi`. Sweeping `psi` around the circle visits a
/// finite family of configurations, changing one cell per breakpoint; the
/// best of them is the global optimum. Among
/// equal-power optima the one whose sum lies closest to zero phase wins.
/// Masked cells absorb.
pub fn optimal_config(
    hbar: &[Complex64],
    set: &PhaseSet,
    geometry: &ArrayGeometry,
) -> Result<RisConfiguration> {
    check_len(geometry.len(), hbar.len())?;
    let active: Vec<usize> = (0..hbar.len()).filter(|&n| geometry.is_active(n)).collect();
    if !active.is_empty() && set.is_empty() {
        return Err(ArrayError::PhaseSet("cannot quantize onto an empty phase set".into()));
    }
    let phases = set.phases_rad();
    let rotors: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();

    let boundaries = decision_boundaries(set);
    let mut events: Vec<(f64, usize, Option<usize>)> = active
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| {
            let a = hbar[n].arg();
            boundaries.iter().map(move |&(b, k)| ((a + b).rem_euclid(TAU), i, k))
        })
        .collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    // start just past the last breakpoint: every cell holds the state its
    // latest crossing moved it to; without breakpoints the state is constant
    let mut choice: Vec<Option<usize>> = if boundaries.is_empty() {
        vec![Some(0); active.len()]
    } else {
        vec![None; active.len()]
    };
    for &(_, i, k) in &events {
        choice[i] = k;
    }
    let term = |i: usize, k: Option<usize>| k.map_or(Complex64::new(0.0, 0.0), |k| rotors[k] * hbar[active[i]]);
    let mut sum: Complex64 = (0..active.len()).map(|i| term(i, choice[i])).sum();

    let better = |p: f64, arg: f64, best: (f64, f64)| -> bool {
        if p > best.0 * (1.0 + TIE_REL) {
            true
        } else {
            p >= best.0 * (1.0 - TIE_REL) && arg < best.1 - 1e-12
        }
    };
    let mut best = (sum.norm_sqr(), sum.arg().abs());
    let mut best_choice = choice.clone();
    for &(_, i, k) in &events {
        sum += term(i, k) - term(i, choice[i]);
        choice[i] = k;
        let candidate = (sum.norm_sqr(), sum.arg().abs());
        if better(candidate.0, candidate.1, best) {
            best = candidate;
            best_choice.clone_from(&choice);
        }
    }

    let mut states = vec![CellState::Absorb; hbar.len()];
    for (i, &n) in active.iter().enumerate() {
        if let Some(k) = best_choice[i] {
            states[n] = CellState::Phase(k as u8);
        }
    }
    Ok(RisConfiguration::new(states))
}

/// Unquantized phase-aligning weights `e^{-j arg(hbar_n)}` on active cells.
pub fn continuous_weights(hbar: &[Complex64], geometry: &ArrayGeometry) -> Result<ComplexVector> {
    check_len(geometry.len(), hbar.len())?;
    Ok(hbar
        .iter()
        .zip(geometry.mask())
        .map(|(h, &active)| {
            if active {
                Complex64::from_polar(1.0, -h.arg())
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect())
}

/// Optimal weights under either phase mode.
pub fn optimal_weights(
    hbar: &[Complex64],
    geometry: &ArrayGeometry,
    mode: &PhaseMode,
) -> Result<ComplexVector> {
    match mode {
        PhaseMode::Continuous => continuous_weights(hbar, geometry),
        PhaseMode::Quantized(set) => optimal_config(hbar, set, geometry)?.weights(set, geometry),
    }
}

/// Endpoints and angles of a TX -> RIS -> RX line-of-sight link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub d_t: f64,
    pub d_r: f64,
    pub beta0: f64,
    pub tx_angles: SteeringAngles,
    pub rx_angles: SteeringAngles,
}

impl LinkGeometry {
    pub fn new(
        d_t: f64,
        d_r: f64,
        beta0: f64,
        tx_angles: SteeringAngles,
        rx_angles: SteeringAngles,
    ) -> Result<Self> {
        if !(d_t > 0.0 && d_r > 0.0 && beta0 > 0.0) {
            return Err(ArrayError::Domain(format!(
                "link distances and beta0 must be positive (d_t={d_t}, d_r={d_r}, beta0={beta0})"
            )));
        }
        Ok(Self {
            d_t,
            d_r,
            beta0,
            tx_angles,
            rx_angles,
        })
    }

    pub fn tx_gain(&self) -> f64 {
        self.beta0 / (self.d_t * self.d_t)
    }

    pub fn rx_gain(&self) -> f64 {
        self.beta0 / (self.d_r * self.d_r)
    }

    /// `g = sqrt(gamma_t) a(theta_t, phi_t)`.
    pub fn tx_channel(&self, geometry: &ArrayGeometry) -> Result<ComplexVector> {
        los_channel(geometry, &self.tx_angles, self.tx_gain())
    }

    /// `h = sqrt(gamma_r) a(theta_r, phi_r)`.
    pub fn rx_channel(&self, geometry: &ArrayGeometry) -> Result<ComplexVector> {
        los_channel(geometry, &self.rx_angles, self.rx_gain())
    }

    pub fn cascaded(&self, geometry: &ArrayGeometry) -> Result<ComplexVector> {
        cascaded_channel(&self.rx_channel(geometry)?, &self.tx_channel(geometry)?)
    }
}
