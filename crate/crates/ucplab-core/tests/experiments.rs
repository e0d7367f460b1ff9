use ucplab::experiments::*;

#[test]
fn lemmas_small_run_passes() {
    let r = abstract_lemma_tests(&LemmaConfig { draws: 500, ..Default::default() }).unwrap();
    assert!(r.pass);
    assert_eq!(r.cases.len(), 4);
}

#[test]
fn reports_are_deterministic() {
    let cfg = ChainDemoConfig { draws: 200, ..Default::default() };
    let a = chain_demo(&cfg).unwrap();
    let b = chain_demo(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn chain_demo_fixed_band_witness() {
    let cfg = ChainDemoConfig { dims: vec![1], draws: 100, a: Some(0.25), b: Some(0.75), ..Default::default() };
    let r = chain_demo(&cfg).unwrap();
    assert!(r.pass);
    assert_eq!(r.summary["witness"]["m"], 6);
}

#[test]
fn weight_small_run_passes() {
    let r = carleman_weight(&WeightConfig { points: 300, ..Default::default() }).unwrap();
    assert!(r.pass);
}

#[test]
fn annuli_outside_cube_is_an_error() {
    let cfg = AnnuliConfig { outer_radius: 4.5, ..Default::default() };
    assert!(matches!(three_annuli_empirical(&cfg), Err(ucplab::Error::OutsideDomain(_))));
}

#[test]
fn observe_requires_cap_beyond_delta0() {
    let cfg = ObserveConfig { isotone_cap: false, ..Default::default() };
    assert!(matches!(observability_experiment(&cfg), Err(ucplab::Error::DeltaOutOfRange { .. })));
}

#[test]
fn wegner_rejects_bad_fit_range() {
    let cfg = WegnerConfig { fit_range: (5, 2), ..Default::default() };
    assert!(wegner_monte_carlo(&cfg).is_err());
}

#[test]
fn configs_round_trip_through_json() {
    let c = WegnerConfig::default();
    let back: WegnerConfig = serde_json::from_value(serde_json::to_value(&c).unwrap()).unwrap();
    assert_eq!(c, back);
    let o = ObserveConfig::default();
    let back: ObserveConfig = serde_json::from_value(serde_json::to_value(&o).unwrap()).unwrap();
    assert_eq!(o, back);
}

#[test]
fn csv_has_header_and_one_row_per_case() {
    let r = abstract_lemma_tests(&LemmaConfig { draws: 50, ..Default::default() }).unwrap();
    let csv = r.to_csv();
    assert_eq!(csv.lines().count(), r.cases.len() + 1);
}
