use num_traits::Float;
use approx::assert_relative_eq;
use ucplab::constants::{self, CalibrationConstants, CsfucOptions, ModelParams, RadiiScheme};
use ucplab::{Params64, Wide};

fn unit(d: usize) -> Params64 {
    ModelParams::new(d, 1.0, 0.0).unwrap()
}

#[test]
fn delta0_closed_form_d1() {
    // 1 / (330 e^2 * 4 * sqrt 2)
    let e2 = std::f64::consts::E.powi(2);
    let expected = 1.0 / (330.0 * e2 * 4.0 * 2f64.sqrt());
    assert_relative_eq!(constants::delta0(&unit(1)), expected, max_relative = 1e-15);
    assert_relative_eq!(expected, 7.24973458412204e-5, max_relative = 1e-12);
}

#[test]
fn delta0_scales_with_dimension_and_lipschitz() {
    let d1 = constants::delta0(&unit(1));
    assert_relative_eq!(constants::delta0(&unit(3)), d1 / 3.0, max_relative = 1e-14);
    let p = ModelParams::new(1, 1.0, 2.0).unwrap();
    assert_relative_eq!(constants::delta0(&p), d1 / 3.0, max_relative = 1e-14);
}

#[test]
fn wide_and_f64_agree() {
    let p = ModelParams::new(2, 2.0, 1.0).unwrap();
    let pw = ModelParams::new(2, Wide::from_f64(2.0), Wide::ONE).unwrap();
    assert_relative_eq!(constants::delta0(&pw).value_f64(), constants::delta0(&p), max_relative = 1e-14);
    let r = constants::standard_radii(&p, RadiiScheme::ChainFixed).unwrap();
    let rw = constants::standard_radii(&pw, RadiiScheme::ChainFixed).unwrap();
    for (a, b) in r.as_array().iter().zip(rw.as_array()) {
        assert_relative_eq!(*a, b.value_f64(), max_relative = 1e-14);
    }
}

#[test]
fn radii_are_nested() {
    for d in 1..=3 {
        for scheme in [RadiiScheme::ChainFixed, RadiiScheme::InterpDelta(constants::delta0(&unit(d)) / 2.0)] {
            let r = constants::standard_radii(&unit(d), scheme).unwrap().as_array();
            assert!(r.windows(2).all(|w| w[0] <= w[1]), "{r:?}");
            assert!(r[0] < r[1] && r[2] < r[3] && r[4] < r[5], "{r:?}");
        }
    }
}

#[test]
fn sensing_radius_beyond_delta0_is_rejected() {
    let p = unit(1);
    let d0 = constants::delta0(&p);
    let err = constants::standard_radii(&p, RadiiScheme::InterpDelta(2.0 * d0)).unwrap_err();
    assert!(matches!(err, ucplab::Error::DeltaOutOfRange { .. }));
}

#[test]
fn chain_length_matches_formula() {
    for d in 1..=3 {
        let r = constants::standard_radii(&unit(d), RadiiScheme::ChainFixed).unwrap();
        let q = (2.0 * (d as f64).sqrt() / (r.big_r2 - r.r2)).floor() as u64;
        assert_eq!(constants::chain_length(d, &r), 2 * q + 2);
    }
}

#[test]
fn csfuc_is_monotone_in_delta() {
    let p = ModelParams::new(1, Wide::ONE, Wide::ZERO).unwrap();
    let cal = CalibrationConstants::<Wide>::default();
    let d0 = constants::delta0(&p).value_f64();
    let lns: Vec<f64> = [0.1, 0.3, 0.6, 0.9]
        .iter()
        .map(|f| {
            let c = constants::csfuc(Wide::from_f64(f * d0), &p, &cal, CsfucOptions::default()).unwrap();
            c.exact.ln.value_f64()
        })
        .collect();
    assert!(lns.windows(2).all(|w| w[0] <= w[1]), "{lns:?}");
    assert!(lns.iter().all(|&l| l < 0.0));
}

#[test]
fn csfuc_exponent_reproduces_constant() {
    let p = ModelParams::new(2, Wide::ONE, Wide::ONE).unwrap();
    let cal = CalibrationConstants::<Wide>::default();
    let delta = constants::delta0(&p) / Wide::from_f64(3.0);
    let c = constants::csfuc(delta, &p, &cal, CsfucOptions::default()).unwrap();
    let back = c.exponent_n * delta.ln();
    assert_relative_eq!(back.value_f64(), c.exact.ln.value_f64(), max_relative = 1e-12);
}

#[test]
fn calibration_rejects_nonpositive() {
    assert!(CalibrationConstants::new(0.0f64, 1.0).is_err());
    assert!(CalibrationConstants::new(32.0f64, -1.0).is_err());
}
