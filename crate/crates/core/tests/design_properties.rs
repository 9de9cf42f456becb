use proptest::prelude::*;
use ris_core::rf_design::{
    delay_line_length, delay_line_table, field_regions, patch_dimensions, phase_of_length, SubstrateSpec,
};

proptest! {
    #[test]
    fn delay_length_and_phase_are_inverse(phase in 0.0f64..720.0, f in 1e9f64..10e9, vf in 0.1f64..1.0) {
        let len = delay_line_length(phase, f, vf).unwrap();
        let back = phase_of_length(len, f, vf).unwrap();
        let diff = (back - phase).rem_euclid(360.0);
        prop_assert!(diff.min(360.0 - diff) < 1e-9);
    }

    #[test]
    fn table_lengths_increase(f in 1e9f64..10e9, vf in 0.1f64..1.0) {
        let rows = delay_line_table(f, vf).unwrap();
        prop_assert_eq!(rows.len(), 7);
        prop_assert!(rows.windows(2).all(|w| w[1].length_m > w[0].length_m && w[1].phase_deg > w[0].phase_deg));
    }

    #[test]
    fn patch_width_decreases_with_permittivity(f in 1e9f64..10e9, e1 in 1.0f64..12.0, de in 0.01f64..5.0, h in 0.1e-3f64..3e-3) {
        let a = patch_dimensions(f, &SubstrateSpec::new(e1, h).unwrap()).unwrap();
        let b = patch_dimensions(f, &SubstrateSpec::new(e1 + de, h).unwrap()).unwrap();
        prop_assert!(b.width_m < a.width_m);
    }

    #[test]
    fn far_field_beyond_reactive_region(lambda in 1e-3f64..1.0, ratio in 0.35f64..50.0) {
        let d = ratio * lambda;
        let (far, reactive) = field_regions(d, lambda).unwrap();
        prop_assert!(far > reactive);
    }
}

#[test]
fn far_field_beyond_reactive_region_at_board_size() {
    let (far, reactive) = field_regions(0.43, 56.56e-3).unwrap();
    assert!(far > reactive);
}
