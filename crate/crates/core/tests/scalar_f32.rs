use gorbit::geodesic::{go_decision, locus_y, Decision, MetricSpec};
use gorbit::spaces::SpaceSpec;
use gorbit::SpaceF32;

#[test]
fn single_precision_space() {
    let spec = SpaceSpec::from_json(r#"{"k":{"family":"so","n":3},"g1":{"family":"so","n":4},"g2":{"family":"su","n":3}}"#).unwrap();
    let space: SpaceF32 = spec.build().unwrap();
    assert!((space.c1 - 0.5).abs() < 1e-5);
    assert!((space.c2 - 1.0 / 6.0).abs() < 1e-5);
    assert!(space.invariant_report().max() < 1e-5);
    let y = locus_y(&space, 1.5).unwrap();
    let on = go_decision(&space, &MetricSpec::diagonal(1.0, 1.5, y), 50, 42, 1e-4).unwrap();
    let off = go_decision(&space, &MetricSpec::diagonal(1.0, 1.5, 2.5), 50, 42, 1e-4).unwrap();
    assert_eq!(on.decision, Decision::Go);
    assert_eq!(off.decision, Decision::NotGo);
    assert!(off.max_residual > 1e-2);
}
