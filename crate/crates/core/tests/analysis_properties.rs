use std::f64::consts::PI;

use proptest::prelude::*;
use ris_core::analysis::{
    beampattern, codebook_sweep, cost_per_cell, grating_lobe_cosines, peak_and_hpbw, radar_rcs,
    CostCategory, DirectionCosines, Scenario,
};
use ris_core::array_model::{optimal_config, PhaseMode, PhaseSet};
use ris_core::board::{named_pattern, BoardSpec};
use ris_core::codebook::{build_codebook, GridSpec};
use ris_core::SteeringAngles;

fn angles() -> impl Strategy<Value = SteeringAngles> {
    (-PI..=PI, -PI / 2.0..=PI / 2.0).prop_map(|(a, e)| SteeringAngles::new(a, e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swapping_tx_and_rx_preserves_power_under_conjugation(tx in angles(), rx in angles(), pattern in 0usize..6) {
        let board = BoardSpec::default();
        let name = ris_core::board::PATTERN_NAMES[pattern];
        let s = Scenario::default().with_pattern(named_pattern(name, &board).unwrap());
        let g = s.geometry().unwrap();
        let set = PhaseSet::default();
        let fwd = s.with_angles(tx, rx);
        let rev = s.with_angles(rx, tx);
        let cfg = optimal_config(&fwd.link.cascaded(&g).unwrap(), &set, &g).unwrap();
        let p_fwd = fwd.received_power_dbm(&g, &cfg.weights(&set, &g).unwrap()).unwrap();
        let p_rev = rev
            .received_power_dbm(&g, &cfg.conjugate(&set).unwrap().weights(&set, &g).unwrap())
            .unwrap();
        prop_assert!((p_fwd - p_rev).abs() < 1e-9);
        let mode = PhaseMode::default();
        prop_assert!((fwd.optimal_power_dbm(&mode).unwrap() - rev.optimal_power_dbm(&mode).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn quantized_never_beats_continuous(tx in angles(), rx in angles(), pattern in 0usize..6) {
        let board = BoardSpec::default();
        let name = ris_core::board::PATTERN_NAMES[pattern];
        let s = Scenario::default().with_pattern(named_pattern(name, &board).unwrap()).with_angles(tx, rx);
        let q = s.optimal_power_dbm(&PhaseMode::default()).unwrap();
        let c = s.optimal_power_dbm(&PhaseMode::Continuous).unwrap();
        prop_assert!(q <= c + 1e-9);
        // 7 phases lose at most 20 log10(1 / cos(pi / 7)) in the worst case
        prop_assert!(c - q <= -20.0 * (PI / 7.0).cos().log10() + 1e-9);
    }

    #[test]
    fn grating_lobes_are_period_shifts(delta in 0.3f64..2.5, u in -1.0f64..1.0, v in -1.0f64..1.0) {
        let lobes = grating_lobe_cosines(delta, DirectionCosines { u, v }).unwrap();
        prop_assert!(lobes.iter().any(|c| (c.u - u).abs() < 1e-12 && (c.v - v).abs() < 1e-12));
        for c in &lobes {
            prop_assert!(c.u.abs() <= 1.0 && c.v.abs() <= 1.0);
            let mu = (c.u - u) * delta;
            let mv = (c.v - v) * delta;
            prop_assert!((mu - mu.round()).abs() < 1e-6 && (mv - mv.round()).abs() < 1e-6);
        }
        if delta <= 0.5 {
            prop_assert!(lobes.len() <= 4);
        }
    }

    #[test]
    fn rcs_scales_with_squared_distances(p_rx in -120.0f64..0.0, d1 in 0.1f64..20.0, d2 in 0.1f64..20.0, k in 1.1f64..10.0) {
        let a = radar_rcs(p_rx, -30.0, d1, d2, 0.0566, 13.5).unwrap();
        let b = radar_rcs(p_rx, -30.0, d1 * k, d2, 0.0566, 13.5).unwrap();
        prop_assert!((b - a - 20.0 * k.log10()).abs() < 1e-9);
        let c = radar_rcs(p_rx + 3.0, -30.0, d1, d2, 0.0566, 13.5).unwrap();
        prop_assert!((c - a - 3.0).abs() < 1e-9);
    }

    #[test]
    fn cost_is_non_increasing_with_volume(a in 1usize..5000, b in 1usize..5000) {
        let (lo, hi) = (a.min(b), a.max(b));
        for c in CostCategory::ALL {
            prop_assert!(cost_per_cell(hi, c).unwrap() <= cost_per_cell(lo, c).unwrap() + 1e-12);
        }
    }
}

fn broadside() -> SteeringAngles {
    SteeringAngles::from_degrees(90.0, 0.0).unwrap()
}

#[test]
fn beam_sharpens_and_strengthens_with_more_cells() {
    let board = BoardSpec::default();
    let grid = GridSpec::new((40.0, 140.0), (-50.0, 50.0), 0.5).unwrap();
    let beam = |name: &str| {
        let s = Scenario::default()
            .with_pattern(named_pattern(name, &board).unwrap())
            .with_angles(broadside(), broadside());
        let w = s.steer(&broadside(), &PhaseMode::default()).unwrap();
        peak_and_hpbw(&beampattern(&s, &w, &grid).unwrap()).unwrap()
    };
    let (b64, b100) = (beam("8x8"), beam("10x10"));
    assert!(b64.hpbw_azimuth_deg.unwrap() > b100.hpbw_azimuth_deg.unwrap());
    assert!(b64.hpbw_elevation_deg.unwrap() > b100.hpbw_elevation_deg.unwrap());
    assert!(b64.peak_dbm < b100.peak_dbm);
}

#[test]
fn codebook_entries_never_exceed_continuous_optimum() {
    let board = BoardSpec::default();
    let grid = GridSpec::new((-90.0, 90.0), (-45.0, 45.0), 9.0).unwrap();
    for name in ["4x4", "10x10", "off2"] {
        let pattern = named_pattern(name, &board).unwrap();
        let s = Scenario::default().with_pattern(pattern);
        let g = s.geometry().unwrap();
        let cb = build_codebook(&g, &grid, &PhaseSet::default()).unwrap();
        for (tx, rx) in [((0.0, 33.0), (0.0, -3.0)), ((60.0, 10.0), (-30.0, 20.0))] {
            let s = s.with_angles(
                SteeringAngles::from_degrees(tx.0, tx.1).unwrap(),
                SteeringAngles::from_degrees(rx.0, rx.1).unwrap(),
            );
            let ceiling = s.optimal_power_dbm(&PhaseMode::Continuous).unwrap();
            let sweep = codebook_sweep(&s, &cb).unwrap();
            assert!(sweep.power_dbm.iter().flatten().all(|&p| p <= ceiling + 1e-9), "{name}");
        }
    }
}
