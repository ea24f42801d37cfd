use anilp_core::dilation::QuasiLevel;
use anilp_core::{Dilation, QuasiNormEngine};
use proptest::prelude::*;

fn engines() -> &'static [QuasiNormEngine] {
    static ENGINES: std::sync::OnceLock<Vec<QuasiNormEngine>> = std::sync::OnceLock::new();
    ENGINES.get_or_init(|| {
        [
            Dilation::isotropic(2, 2.0).unwrap(),
            Dilation::diagonal(&[2.0, 3.0]).unwrap(),
            Dilation::from_rows(&[vec![1.0, -1.0], vec![1.0, 1.0]]).unwrap(),
            Dilation::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap(),
        ]
        .into_iter()
        .map(|d| QuasiNormEngine::new(d).unwrap())
        .collect()
    })
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    (0.0..std::f64::consts::TAU, -2.0..2.0f64).prop_map(|(a, e)| {
        let r = 10f64.powf(e);
        [r * a.cos(), r * a.sin()]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn level_shifts_by_one_under_a(x in point(), which in 0usize..4) {
        let engine = &engines()[which];
        let d = engine.dilation();
        let j = engine.level(&x).finite().unwrap();
        prop_assert_eq!(engine.level(&d.apply(&x)), QuasiLevel::Finite(j + 1));
        prop_assert_eq!(engine.level(&d.apply_inverse(&x)), QuasiLevel::Finite(j - 1));
    }

    #[test]
    fn quasi_norm_is_even(x in point(), which in 0usize..4) {
        let engine = &engines()[which];
        prop_assert_eq!(engine.rho(&x), engine.rho(&[-x[0], -x[1]]));
    }

    #[test]
    fn quasi_triangle_with_certified_constant(x in point(), y in point(), which in 0usize..4) {
        let engine = &engines()[which];
        let sum = [x[0] + y[0], x[1] + y[1]];
        let bound = engine.h_certified() * (engine.rho(&x).value + engine.rho(&y).value);
        prop_assert!(engine.rho(&sum).value <= bound);
    }

    #[test]
    fn balls_are_nested(x in point(), which in 0usize..4, k in -3i32..3) {
        let engine = &engines()[which];
        if engine.ball_membership(k, &x) {
            prop_assert!(engine.ball_membership(k + 1, &x));
        }
    }
}

#[test]
fn ellipsoid_has_unit_volume() {
    for e in engines().iter() {
        assert!((e.ellipsoid_volume() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn origin_has_zero_level() {
    for e in engines().iter() {
        assert_eq!(e.level(&[0.0, 0.0]), QuasiLevel::Zero);
        assert_eq!(e.rho(&[0.0, 0.0]).value, 0.0);
    }
}
