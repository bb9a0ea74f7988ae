use fromage_core::certify::{area_report, check_local_unit, check_witness, sample_k, stout_check};
use fromage_core::{
    instantiate, make_local_unit, merge_cheeses, plan_cheese, Cheese, CheesePlan, Constants, Disc,
    InstantiateMode, Point, Region, SampleSpec, WitnessPoint, WitnessSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn consts() -> &'static Constants {
    Constants::standard()
}

fn origin() -> Point {
    Point::new(0.0, 0.0)
}

#[test]
fn local_unit_certificate_passes_at_demo_parameters() {
    let a = Point::new(0.3, 0.2);
    let unit = make_local_unit(0.4, 1.0, a, consts()).unwrap();
    let spec = SampleSpec::new(2000, 7, Region::disc(a, 2.0))
        .with_margin(10.0 * f64::EPSILON * unit.sigma());
    let cert = check_local_unit(&unit, &spec).unwrap();
    for e in &cert.entries {
        assert!(e.pass, "{e:?}");
    }
    assert_eq!(cert.entry("dead-zone").unwrap().observed, 0.0);
    let far = cert.entry("far-zone").unwrap();
    assert!(far.samples.is_some());
    assert!(far.observed < 1.0 / 32.0);
    let again = check_local_unit(&unit, &spec).unwrap();
    assert_eq!(
        serde_json::to_string(&cert).unwrap(),
        serde_json::to_string(&again).unwrap()
    );
}

#[test]
fn local_unit_certificate_passes_across_parameters() {
    for (eps, eta, a) in [
        (0.3, 0.5, Point::new(-0.5, 0.5)),
        (0.44, 2.0, Point::new(0.0, -0.99)),
        (0.25, 10.0, origin()),
    ] {
        let unit = make_local_unit(eps, eta, a, consts()).unwrap();
        let spec = SampleSpec::new(800, 3, Region::disc(a, 2.0));
        let cert = check_local_unit(&unit, &spec).unwrap();
        assert!(cert.overall, "{:?}", cert.failures().collect::<Vec<_>>());
    }
}

#[test]
fn witness_checks_pass_on_demonstration_level() {
    let plan = CheesePlan::demonstration(0.4, 1.0, consts()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let xs: Vec<Point> = (0..5)
        .map(|_| Point::from_polar(rng.random::<f64>().sqrt(), rng.random_range(0.0..TAU)))
        .collect();
    let cheese = instantiate(
        &plan,
        &InstantiateMode::Witness(xs.iter().map(|&x| WitnessPoint { x, level: 1 }).collect()),
    )
    .unwrap();
    assert_eq!(cheese.units().len(), 5);
    for &x in &xs {
        let spec = SampleSpec::new(400, 11, Region::disc(origin(), 1.0));
        let cert = check_witness(&cheese, &WitnessSpec::new(x, 1), &spec).unwrap();
        assert!(cert.overall, "{:?}", cert.failures().collect::<Vec<_>>());
        let sigma = plan.levels[0].sigma();
        assert!(cert.entry("x-in-covering-disc").unwrap().observed <= sigma / 2f64.sqrt());
    }
}

#[test]
fn witness_rejects_points_outside_k() {
    let plan = CheesePlan::demonstration(0.4, 1.0, consts()).unwrap();
    let cheese = instantiate(&plan, &InstantiateMode::Symbolic).unwrap();
    let spec = SampleSpec::new(10, 1, Region::disc(origin(), 1.0));
    assert!(check_witness(&cheese, &WitnessSpec::new(Point::new(1.2, 0.0), 1), &spec).is_err());
}

#[test]
fn sample_k_on_empty_cheese_is_uniform_over_the_disc() {
    let spec = SampleSpec::new(20_000, 5, Region::disc(origin(), 1.0));
    let pts = sample_k(&Cheese::empty(), &spec).unwrap();
    assert_eq!(pts.len(), 20_000);
    let inner = pts.iter().filter(|p| p.norm() <= 0.5).count() as f64 / 20_000.0;
    assert!((inner - 0.25).abs() < 0.015);
}

#[test]
fn sample_k_respects_margin() {
    let discs = vec![
        Disc::new(Point::new(0.2, 0.1), 0.15).unwrap(),
        Disc::new(Point::new(-0.4, -0.3), 0.2).unwrap(),
    ];
    let cheese = Cheese::from_discs(Disc::unit(), discs.clone()).unwrap();
    let spec = SampleSpec::new(3000, 9, Region::disc(origin(), 1.0)).with_margin(0.05);
    for p in sample_k(&cheese, &spec).unwrap() {
        assert!(p.norm() <= 1.0);
        for d in &discs {
            assert!((p - d.center).norm() - d.radius >= 0.05);
        }
    }
}

#[test]
fn stout_check_on_merged_half_budgets() {
    let a = instantiate(
        &plan_cheese(0.25, 20, consts()).unwrap(),
        &InstantiateMode::Symbolic,
    )
    .unwrap();
    let b = instantiate(
        &plan_cheese(0.25, 20, consts()).unwrap(),
        &InstantiateMode::Symbolic,
    )
    .unwrap();
    let cert = stout_check(&merge_cheeses(&a, &b).unwrap(), 0.5);
    assert!(cert.overall);
    let single = stout_check(&a, 0.25);
    assert!(single.overall);
    let over = stout_check(&merge_cheeses(&a, &b).unwrap(), 0.4);
    assert!(!over.overall);
}

#[test]
fn area_report_on_empty_and_explicit_cheeses() {
    let spec = SampleSpec::new(50_000, 13, Region::disc(origin(), 1.0));
    let r = area_report(&Cheese::empty(), &spec).unwrap();
    assert_eq!(r.lower_bound, PI);
    assert_eq!(r.estimate, PI);

    let d = Disc::new(Point::new(0.0, 0.0), 0.5).unwrap();
    let c = Cheese::from_discs(Disc::unit(), vec![d]).unwrap();
    let r = area_report(&c, &spec).unwrap();
    // oracle: pi (1 - 1/4)
    let exact = 0.75 * PI;
    assert!((r.estimate - exact).abs() <= 3.0 * r.half_width);
    assert!(r.lower_bound <= exact);
    assert!((r.lower_bound - PI * 0.75).abs() < 1e-12);
}
