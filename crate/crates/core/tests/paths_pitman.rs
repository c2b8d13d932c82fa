use dashu_float::{round::mode::HalfEven, FBig};

type Big = FBig<HalfEven>;
use proptest::prelude::*;
use rand::Rng;
use solitonlab::covariables::{default_system, random_config};
use solitonlab::paths::{decode, encode, Background, PathWindow, System, SystemConfig};
use solitonlab::pitman::{inverse_transform, max_functional, transform, OperatorTag, OperatorVariant};
use solitonlab::rng::stream;
use solitonlab::systems::evolve;

const SYSTEMS: [&str; 5] = ["bbs", "udkdv", "dkdv", "udtoda", "dtoda"];

fn max_abs_diff(a: &PathWindow, b: &PathWindow) -> f64 {
    let lo = a.lo().min(b.lo());
    let hi = a.hi().max(b.hi());
    (lo..=hi).map(|n| (a.value(n) - b.value(n)).abs()).fold(0.0, f64::max)
}

fn random_path(tag: OperatorTag, seed: u64) -> PathWindow {
    let mut rng = stream(seed, 9);
    let len = rng.gen_range(4..40);
    let first = -rng.gen_range(0..len as i64);
    if tag == OperatorTag::MaxPast {
        // T^Z acts on unit-step paths
        let incs: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.4) { -1.0 } else { 1.0 }).collect();
        let bg = Background::constant(1.0);
        return PathWindow::from_increments(first, &incs, bg.clone(), bg).unwrap();
    }
    let incs: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..3.0)).collect();
    let bg = if tag.is_starred() {
        Background::new(vec![rng.gen_range(0.5..2.0), rng.gen_range(-0.4..0.4)]).unwrap()
    } else {
        Background::constant(rng.gen_range(0.3..2.0))
    };
    PathWindow::from_increments(first, &incs, bg.clone(), bg).unwrap()
}

fn values_close(a: &SystemConfig, b: &SystemConfig, tol: f64) -> bool {
    let lo = a.lo().min(b.lo());
    let hi = a.hi().max(b.hi());
    (lo..=hi).all(|n| (a.value_at(n) - b.value_at(n)).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decode_inverts_encode(seed in any::<u64>(), which in 0usize..5, sites in 0usize..60) {
        let system = default_system(SYSTEMS[which]).unwrap();
        let config = random_config(system, sites, &mut stream(seed, 0)).unwrap();
        let back = decode(&encode(&config).unwrap(), system).unwrap();
        let tol = if matches!(system, System::DKdv { .. } | System::DToda) { 1e-12 } else { 0.0 };
        let lo = config.lo().min(back.lo());
        let hi = config.hi().max(back.hi());
        for n in lo..=hi {
            let (a, b) = (config.value_at(n), back.value_at(n));
            prop_assert!((a - b).abs() <= tol * a.abs().max(1.0), "site {n}: {a} vs {b}");
        }
    }

    #[test]
    fn reflection_is_an_involution(seed in any::<u64>(), starred in any::<bool>()) {
        let tag = if starred { OperatorTag::MaxEvenPast } else { OperatorTag::MaxAvgPast };
        let path = random_path(tag, seed);
        prop_assert_eq!(path.reflect().reflect(), path);
    }

    #[test]
    fn shifts_compose(seed in any::<u64>(), j in -30i64..30, k in -30i64..30) {
        let path = random_path(OperatorTag::MaxAvgPast, seed);
        let d = max_abs_diff(&path.shift(j).shift(k), &path.shift(j + k));
        prop_assert!(d <= 1e-12, "difference {d}");
        prop_assert!(max_abs_diff(&path.shift(0), &path) == 0.0);
    }

    #[test]
    fn inverse_undoes_system_transform(seed in any::<u64>(), which in 0usize..5) {
        let system = default_system(SYSTEMS[which]).unwrap();
        let config = random_config(system, 30, &mut stream(seed, 1)).unwrap();
        let path = encode(&config).unwrap();
        let variant = OperatorVariant::for_system(system);
        let there_back = inverse_transform(&transform(&path, variant).unwrap(), variant).unwrap();
        let back_there = transform(&inverse_transform(&path, variant).unwrap(), variant).unwrap();
        let tol = if system == System::Bbs { 0.0 } else { 1e-9 };
        prop_assert!(max_abs_diff(&there_back, &path) <= tol);
        prop_assert!(max_abs_diff(&back_there, &path) <= tol);
    }

    #[test]
    fn inverse_undoes_every_operator(seed in any::<u64>(), which in 0usize..7) {
        let variant = [
            OperatorVariant::plain(OperatorTag::MaxPast),
            OperatorVariant::plain(OperatorTag::MaxAvgPast),
            OperatorVariant::plain(OperatorTag::LogSumAvg),
            OperatorVariant::plain(OperatorTag::MaxEvenPast),
            OperatorVariant::plain(OperatorTag::LogSumEven),
            OperatorVariant::new(OperatorTag::MaxEvenPast, true).unwrap(),
            OperatorVariant::new(OperatorTag::LogSumEven, true).unwrap(),
        ][which];
        let path = random_path(variant.tag, seed);
        let round = inverse_transform(&transform(&path, variant).unwrap(), variant).unwrap();
        let tol = if variant.tag == OperatorTag::MaxPast { 0.0 } else { 1e-9 };
        prop_assert!(max_abs_diff(&round, &path) <= tol);
    }

    #[test]
    fn unit_step_paths_agree_under_max_and_averaged_max(seed in any::<u64>()) {
        let config = random_config(System::Bbs, 40, &mut stream(seed, 2)).unwrap();
        let path = encode(&config).unwrap();
        let a = decode(&transform(&path, OperatorVariant::plain(OperatorTag::MaxPast)).unwrap(), System::Bbs).unwrap();
        let b = decode(&transform(&path, OperatorVariant::plain(OperatorTag::MaxAvgPast)).unwrap(), System::Bbs).unwrap();
        prop_assert!(values_close(&a, &b, 0.0));
    }

    #[test]
    fn udkdv_with_unit_capacity_is_the_box_ball_system(seed in any::<u64>()) {
        let mut rng = stream(seed, 3);
        let bits: Vec<u8> = (0..30).map(|_| rng.gen_bool(0.3) as u8).collect();
        let bbs = SystemConfig::bbs(1, &bits).unwrap();
        let values = bits.iter().map(|&b| b as f64).collect();
        let kdv = SystemConfig::kdv(System::UdKdv { l: 1.0 }, 1, values, 0.0).unwrap();
        let (ta, tb) = (evolve(&bbs, 5).unwrap(), evolve(&kdv, 5).unwrap());
        for (a, b) in ta.iter().zip(&tb) {
            prop_assert!(values_close(a, b, 0.0));
        }
    }

    #[test]
    fn linear_paths_are_fixed(slope in 0.1f64..5.0, which in 0usize..2) {
        let tag = [OperatorTag::MaxPast, OperatorTag::MaxAvgPast][which];
        let path = PathWindow::periodic(&[slope]).unwrap();
        let out = transform(&path, OperatorVariant::plain(tag)).unwrap();
        prop_assert!(max_abs_diff(&out, &path) <= 1e-12);
    }
}

/// `log sum_{m<=n} exp((S_m + S_{m-1})/2)` in 200-bit arithmetic, with the
/// left tail summed as a geometric series.
fn log_sum_avg_reference(path: &PathWindow, slope: f64) -> Vec<f64> {
    let big = |x: f64| Big::try_from(x).unwrap().with_precision(200).value();
    let term = |n: i64| big(0.5 * (path.value(n) + path.value(n - 1))).exp();
    let lo = path.lo();
    let one = big(1.0);
    let ratio = big(-slope).exp();
    let mut acc = term(lo) / (one - ratio);
    let mut out = vec![acc.ln().to_f64().value()];
    for n in lo + 1..=path.hi() {
        acc += term(n);
        out.push(acc.ln().to_f64().value());
    }
    out
}

#[test]
fn log_sum_avg_matches_high_precision_reference() {
    for seed in 0..100 {
        let mut rng = stream(seed, 4);
        let slope = rng.gen_range(0.2..2.0);
        let incs: Vec<f64> = (0..60).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let bg = Background::constant(slope);
        let path = PathWindow::from_increments(-20, &incs, bg.clone(), bg).unwrap();
        let got = max_functional(&path, OperatorVariant::plain(OperatorTag::LogSumAvg)).unwrap();
        let want = log_sum_avg_reference(&path, slope);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0), "seed {seed}: {g} vs {w}");
        }
    }
}

#[test]
fn csv_round_trip_of_random_paths() {
    for seed in 0..50 {
        let path = random_path(OperatorTag::LogSumEven, seed);
        assert_eq!(PathWindow::from_csv(&path.to_csv()).unwrap(), path);
    }
}
