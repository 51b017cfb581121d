use potts_core::neighborhoods::{build_system, derive_weights, induced_norm, isotropy_ratio, level_displacements};
use proptest::prelude::*;

#[test]
fn derived_weights_equal_closed_forms() {
    for level in 0..=2 {
        let closed = build_system(level).unwrap();
        let derived = derive_weights(&level_displacements(level).unwrap()).unwrap();
        for (a, b) in derived.iter().zip(closed.weights()) {
            assert!((a - b).abs() < 1e-9, "level {level}: {a} vs {b}");
        }
    }
}

#[test]
fn isotropy_ratios_decrease_with_level() {
    let e: Vec<f64> = (0..=2)
        .map(|l| isotropy_ratio(&build_system(l).unwrap(), 3600).unwrap())
        .collect();
    assert!((e[0] - 2f64.sqrt()).abs() < 1e-3);
    assert!((e[1] - 1.08).abs() < 5e-3, "{}", e[1]);
    assert!((e[2] - 1.03).abs() < 5e-3, "{}", e[2]);
    assert!(e[0] > e[1] && e[1] > e[2] && e[2] >= 1.0);
}

#[test]
fn system_directions_are_measured_exactly() {
    for level in 0..=2 {
        let s = build_system(level).unwrap();
        for p in s.displacements() {
            let v = [p[0] as f64, p[1] as f64];
            assert!((induced_norm(&s, v) - v[0].hypot(v[1])).abs() < 1e-9);
        }
    }
}

proptest! {
    #[test]
    fn induced_norm_is_a_norm(level in 0u8..=2, a in prop::array::uniform2(-5.0f64..5.0), b in prop::array::uniform2(-5.0f64..5.0), t in -4.0f64..4.0) {
        let s = build_system(level).unwrap();
        let sum = [a[0] + b[0], a[1] + b[1]];
        prop_assert!(induced_norm(&s, sum) <= induced_norm(&s, a) + induced_norm(&s, b) + 1e-12);
        let scaled = [t * a[0], t * a[1]];
        prop_assert!((induced_norm(&s, scaled) - t.abs() * induced_norm(&s, a)).abs() < 1e-9);
        prop_assert!(induced_norm(&s, a) >= 0.0);
    }
}
