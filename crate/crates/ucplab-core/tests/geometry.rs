use proptest::prelude::*;
use ucplab::geometry::{chain_path, chain_steps, make_equidistributed, validate_equidistributed, Placement};

#[test]
fn chain_steps_formula() {
    assert_eq!(chain_steps(1, 0.25, 0.75), 2 * 2 + 2);
    assert_eq!(chain_steps(4, 0.1, 0.6), 2 * 4 + 2);
}

#[test]
fn chain_demo_example_path() {
    let p = chain_path(&[0.4], &[-0.4], 0.25, 0.75).unwrap();
    assert_eq!(p.m, 6);
    assert!(p.violations(&[0.4], &[-0.4], 1e-12).is_empty());
}

#[test]
fn coincident_endpoints() {
    let z = [0.1, -0.2];
    let p = chain_path(&z, &z, 0.2, 0.3).unwrap();
    assert!(p.violations(&z, &z, 1e-12).is_empty());
}

#[test]
fn bad_band_is_rejected() {
    assert!(chain_path(&[0.0], &[0.1], 0.5, 0.5).is_err());
    assert!(chain_path(&[0.0], &[0.1, 0.0], 0.1, 0.5).is_err());
}

#[test]
fn equidistributed_balls_stay_in_cells() {
    for placement in [Placement::Centered, Placement::SeededRandom(3)] {
        let z = make_equidistributed(2, 1.0, 0.2, 4.0, placement).unwrap();
        assert_eq!(z.cells.len(), 16);
        assert!(validate_equidistributed(&z));
    }
    assert!(make_equidistributed(1, 1.0, 0.5, 4.0, Placement::Centered).is_err());
    assert!(make_equidistributed(1, 1.0, 0.1, 4.5, Placement::Centered).is_err());
}

proptest! {
    #[test]
    fn random_chains_are_valid(
        d in 1usize..=3,
        a in 0.01f64..0.5,
        gap in 0.01f64..0.5,
        z in prop::collection::vec(-0.5f64..=0.5, 3),
        y in prop::collection::vec(-0.5f64..=0.5, 3),
    ) {
        let (z, y) = (&z[..d], &y[..d]);
        let p = chain_path(z, y, a, a + gap).unwrap();
        prop_assert_eq!(p.m, chain_steps(d, a, a + gap));
        prop_assert!(p.violations(z, y, 1e-12).is_empty());
    }
}
