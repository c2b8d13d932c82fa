use solitonlab::measures::DistributionSpec as D;
use solitonlab::paths::System;
use solitonlab::pitman::OperatorVariant;
use solitonlab::verify::{
    bbs_balance_imbalance, carrier_law, carrier_reversibility_seeded, carrier_stationary_test, detailed_balance_test,
    invariance_test, invariance_test_with, parse_suite, run_suite, two_sample_test, walk_invariance_test, PairSelection, Protocol,
    SampleTest, INVARIANCE_CORE,
};

fn p(s: &str) -> D {
    s.parse().unwrap()
}

#[test]
fn two_sample_examples() {
    let xs: Vec<f64> = (0..10_000).map(|i| (i as f64 + 0.5) / 10_000.0).collect();
    let same = two_sample_test(&xs, &xs, SampleTest::Ks).unwrap();
    assert_eq!(same.statistic, 0.0);
    let shifted: Vec<f64> = xs.iter().map(|x| x + 0.5).collect();
    let apart = two_sample_test(&xs, &shifted, SampleTest::Ks).unwrap();
    assert!((apart.statistic - 0.5).abs() < 1e-3 && apart.p_value < 1e-10);
    let spec = p("gamma(lambda=2,c=1)");
    let a = spec.sample_n(10_000, 1).unwrap();
    let b = spec.sample_n(10_000, 2).unwrap();
    assert!(two_sample_test(&a, &b, SampleTest::Ks).unwrap().p_value > 0.01);
}

#[test]
fn exact_balance_for_the_box_ball_map() {
    for q in [0.1, 0.25, 0.4] {
        assert!(bbs_balance_imbalance(q, q / (1.0 - q), 60) < 1e-12);
    }
    assert!(bbs_balance_imbalance(0.25, 0.5, 60) > 0.01);
}

#[test]
fn sampled_balance() {
    let ok = detailed_balance_test(System::Bbs, &[p("bernoulli(p=0.25)")], &D::Geometric { r: 1.0 / 3.0 }, 100_000, 1).unwrap();
    assert!(ok.passed(), "{}", ok.to_text());
    let bad = detailed_balance_test(System::Bbs, &[p("bernoulli(p=0.25)")], &D::Geometric { r: 0.5 }, 100_000, 1).unwrap();
    assert!(!bad.passed());
    let laws = [p("shiftedexp(lambda=2,c=0)"), p("shiftedexp(lambda=1,c=0)")];
    let toda = detailed_balance_test(System::UdToda, &laws, &p("shiftedexp(lambda=1,c=0)"), 100_000, 2).unwrap();
    assert!(toda.passed(), "{}", toda.to_text());
}

/// Invariant cases and their perturbed controls.
fn invariance_cases() -> Vec<(System, Vec<D>, bool)> {
    vec![
        (System::Bbs, vec![p("bernoulli(p=0.25)")], true),
        (System::UdKdv { l: 1.0 }, vec![p("truncexp(lambda=1,c=0,L=1)")], true),
        (System::UdKdv { l: 1.0 }, vec![p("truncexp(lambda=1,c=0,L=0.8)")], false),
        (System::UdKdv { l: 2.0 }, vec![p("truncgeom(h=0.25,lambda=0.5,k=0,l=8)")], true),
        (System::UdKdv { l: 2.0 }, vec![p("truncgeom(h=0.25,lambda=0.5,k=0,l=6)")], false),
        (System::DKdv { delta: 0.5 }, vec![p("gigdkdv(lambda=1,c=1,delta=0.5)")], true),
        (System::DKdv { delta: 0.5 }, vec![p("gigdkdv(lambda=1,c=1,delta=2)")], false),
        (System::UdToda, vec![p("shiftedexp(lambda=2,c=0)"), p("shiftedexp(lambda=1,c=0)")], true),
        (System::UdToda, vec![p("shiftedexp(lambda=2,c=0)"), p("shiftedexp(lambda=1,c=0.5)")], false),
        (System::DToda, vec![p("gamma(lambda=2,c=1)"), p("gamma(lambda=1,c=1)")], true),
        (System::DToda, vec![p("gamma(lambda=2,c=1)"), p("gamma(lambda=1,c=2)")], false),
    ]
}

#[test]
fn both_protocols_agree() {
    for (system, laws, invariant) in invariance_cases() {
        // controls have no known carrier law, so the automatic choice falls back to burn-in
        let a = if carrier_law(system, &laws).is_some() {
            invariance_test_with(system, &laws, 100_000, 3, 31, Protocol::StationarySeed).unwrap()
        } else {
            invariance_test(system, &laws, 100_000, 3, 31).unwrap()
        };
        let b = invariance_test_with(system, &laws, 100_000, 3, 31, Protocol::BurnIn).unwrap();
        assert_eq!(a.passed(), invariant, "stationary seed, {}: {}", system.name(), a.to_text());
        assert_eq!(b.passed(), invariant, "burn-in, {}: {}", system.name(), b.to_text());
    }
}

#[test]
fn walk_laws_and_controls() {
    let cases = [
        ("tz", "bernoullistep(p=0.3,q=0.1,a=1)", true),
        ("tz", "bernoullistep(p=0.3,q=0.1,a=1,b=2)", false),
        ("tvee", "truncexpsym(lambda=1,a=1)", true),
        ("tvee", "truncexpsym(lambda=1,a=1,b=0.5)", false),
        ("tsum", "cosh(lambda=1,a=2)", true),
        ("tsum", "cosh(lambda=1,a=2,kappa=1)", false),
        ("tveestar-shifted", "onesidedexp(lambda1=1,lambda2=2,a=0.5)", true),
        ("tveestar-shifted", "onesidedexp(lambda1=1,lambda2=2,a=0.5,b=1)", false),
        ("tsumstar-shifted", "loggammapair(lambda1=1,lambda2=2,a=1)", true),
        ("tsumstar-shifted", "loggammapair(lambda1=1,lambda2=2,a=1,b=2)", false),
    ];
    for (op, law, invariant) in cases {
        let r = walk_invariance_test(OperatorVariant::from_name(op).unwrap(), &p(law), 100_000, 3, 41).unwrap();
        assert_eq!(r.passed(), invariant, "{op} {law}: {}", r.to_text());
    }
}

#[test]
fn reversibility_fails_in_the_transient_and_passes_after() {
    let laws = [p("bernoulli(p=0.25)")];
    let early = PairSelection { skip: 0, take: Some(300), stride: Some(1) };
    let late = PairSelection { skip: 1000, take: None, stride: Some(1) };
    let r = carrier_reversibility_seeded(System::Bbs, &laws, 100_000, 51, Some(50.0), early).unwrap();
    assert!(!r.passed(), "{}", r.to_text());
    let r = carrier_reversibility_seeded(System::Bbs, &laws, 100_000, 51, Some(50.0), late).unwrap();
    assert!(r.passed(), "{}", r.to_text());
}

#[test]
fn carrier_marginals_match_their_families() {
    for (system, laws, _) in invariance_cases().into_iter().filter(|c| c.2) {
        let r = carrier_stationary_test(system, &laws, 100_000, 61).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }
}

#[test]
fn bundled_suite_behaves_as_expected() {
    let entries = parse_suite(INVARIANCE_CORE).unwrap();
    let outcomes = run_suite(&entries);
    let unexpected: Vec<_> = outcomes.iter().filter(|o| !o.as_expected()).map(|o| o.entry.line).collect();
    assert!(unexpected.is_empty(), "unexpected outcomes on lines {unexpected:?}");
    let first: String = outcomes.iter().map(|o| o.report.as_ref().unwrap().csv_rows()).collect();
    let second: String = run_suite(&entries).iter().map(|o| o.report.as_ref().unwrap().csv_rows()).collect();
    assert_eq!(first, second);
}

#[test]
fn suite_errors_name_the_line() {
    let text = "# header\nenumeration p=0.25 r=0.3 wmax=60\ninvariance system=bbs law=bernoulli(q=1) n=10 steps=1 seed=1\n";
    let err = parse_suite(text).unwrap_err().to_string();
    assert!(err.contains("line 3"), "{err}");
}
