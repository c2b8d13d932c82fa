use solitonlab::measures::{build_iid_config, build_random_walk, sample_gig, DistributionSpec as D};
use solitonlab::paths::System;
use solitonlab::rng::stream;
use solitonlab::stats::{ks_one_sample, mean};
use solitonlab::verify::ALPHA;
use statrs::function::gamma::ln_gamma;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Composite Simpson rule with `2k` panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, k: usize) -> f64 {
    let n = 2 * k;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn truncated_exponential_mean() {
    let xs = D::TruncExp { lambda: 1.0, c: 0.0, l: 1.0 }.sample_n(1_000_000, 1).unwrap();
    let e = (-1.0f64).exp();
    let want = (1.0 - 2.0 * e) / (1.0 - e);
    assert!((mean(&xs) - want).abs() < 0.002, "{} vs {want}", mean(&xs));
    assert!(xs.iter().all(|&x| (0.0..=1.0).contains(&x)));
}

#[test]
fn bernoulli_step_frequency() {
    let xs = D::BernoulliStep { p: 0.25, q: 0.0, a: 1.0, b: 1.0 }.sample_n(100_000, 2).unwrap();
    let freq = xs.iter().filter(|&&x| x == 1.0).count() as f64 / xs.len() as f64;
    assert!((freq - 0.25).abs() < 0.005);
}

#[test]
fn log_gamma_mean_is_digamma() {
    let xs = D::LogGamma { shape: 2.0, rate: 1.0 }.sample_n(1_000_000, 3).unwrap();
    assert!((mean(&xs) - (1.0 - EULER_GAMMA)).abs() < 0.005);
    // the same component inside the pair family, odd parity
    let pair = D::LogGammaPair { lambda1: 1.0, lambda2: 2.0, a: 1.0, b: 1.0 };
    let (_, odd) = pair.components().unwrap();
    assert_eq!(odd, D::LogGamma { shape: 2.0, rate: 1.0 });
}

#[test]
fn closed_form_normalizers() {
    let z = D::TruncExp { lambda: 1.0, c: 0.0, l: 1.0 }.law().unwrap().log_normalizer();
    assert!((z - (1.0 - (-1.0f64).exp()).ln()).abs() < 1e-14);
    for (shape, rate) in [(1.0, 1.0), (2.5, 0.7), (0.4, 3.0)] {
        let z = D::Gamma { shape, rate }.law().unwrap().log_normalizer();
        assert!((z - (ln_gamma(shape) - shape * f64::ln(rate))).abs() < 1e-12);
    }
}

#[test]
fn densities_integrate_to_one_by_simpson() {
    let line = [
        D::Cosh { lambda: 1.0, a: 2.0, kappa: 2.0 },
        D::Cosh { lambda: 0.3, a: 0.5, kappa: 1.0 },
        D::LogGamma { shape: 2.0, rate: 1.0 },
        D::LogInvGamma { shape: 1.5, scale: 2.0 },
    ];
    for spec in line {
        let law = spec.law().unwrap();
        let mass = simpson(|x| law.log_density(x).exp(), -120.0, 120.0, 400_000);
        assert!((mass - 1.0).abs() < 1e-8, "{spec}: {mass}");
    }
    let positive = [
        D::GigDkdv { lambda: 1.0, c: 1.0, delta: 0.5 },
        D::Gig { p: -0.7, a: 2.0, b: 0.3 },
        D::InvGamma { shape: 1.0, scale: 1.0 },
        D::Gamma { shape: 0.6, rate: 2.0 },
    ];
    for spec in positive {
        let law = spec.law().unwrap();
        let mass = simpson(|t| (law.log_density(t.exp()) + t).exp(), -60.0, 60.0, 400_000);
        assert!((mass - 1.0).abs() < 1e-8, "{spec}: {mass}");
    }
    let bounded = [
        (D::TruncExp { lambda: 2.0, c: 0.2, l: 1.5 }, 0.2, 1.3),
        (D::TruncExpSym { lambda: 1.0, a: 1.0, b: 1.0 }, -1.0, 1.0),
    ];
    for (spec, a, b) in bounded {
        let law = spec.law().unwrap();
        let mass = simpson(|x| law.log_density(x).exp(), a, b, 10_000);
        assert!((mass - 1.0).abs() < 1e-8, "{spec}: {mass}");
    }
}

#[test]
fn discrete_tables_sum_to_one() {
    for spec in [
        D::TruncGeomGrid { h: 0.25, lambda: 0.5, k: 0, l: 8 },
        D::SymGrid { lambda: 0.7, h: 0.5, k: 3, half: true },
        D::Geometric { r: 1.0 / 3.0 },
        D::ShiftedGeomGrid { lambda: 0.5, h: 0.5, k: 1 },
    ] {
        let total: f64 = spec.pmf_table().unwrap().iter().map(|a| a.1).sum();
        assert!((total - 1.0).abs() < 1e-8, "{spec}: {total}");
    }
}

#[test]
fn cosh_law_is_log_of_gig() {
    let (lambda, a) = (1.0, 2.0);
    let xs = D::Cosh { lambda, a, kappa: 2.0 }.sample_n(100_000, 4).unwrap();
    let ys: Vec<f64> = xs.iter().map(|x| (x / 2.0).exp()).collect();
    let gig = D::Gig { p: 2.0 * lambda, a, b: a }.law().unwrap();
    let stat = ks_one_sample(&ys, |y| gig.cdf(y));
    assert!(stat.p_value > ALPHA, "{stat:?}");
}

#[test]
fn gig_sampler_across_regimes() {
    // mode-shift, no-shift and small-omega branches, plus negative order
    for (i, (p, a, b)) in [(3.0, 1.0, 1.0), (0.8, 1.0, 1.0), (0.2, 0.05, 0.05), (-1.5, 2.0, 0.5)].into_iter().enumerate() {
        let mut rng = stream(5, i as u64);
        let xs: Vec<f64> = (0..50_000).map(|_| sample_gig(&mut rng, p, a, b)).collect();
        let law = D::Gig { p, a, b }.law().unwrap();
        let stat = ks_one_sample(&xs, |x| law.cdf(x));
        assert!(stat.p_value > ALPHA, "p={p} a={a} b={b}: {stat:?}");
    }
}

#[test]
fn iid_configurations() {
    let c = build_iid_config(System::Bbs, &[D::Bernoulli { p: 0.25 }], 100_000, 6).unwrap();
    assert!((mean(c.sites()) - 0.25).abs() < 0.005);

    let laws = [D::ShiftedExp { lambda: 2.0, c: 0.0 }, D::ShiftedExp { lambda: 1.0, c: 0.0 }];
    let c = build_iid_config(System::UdToda, &laws, 200_000, 7).unwrap();
    let (q, e): (Vec<f64>, Vec<f64>) = c.pairs().into_iter().unzip();
    assert!((mean(&q) - 0.5).abs() < 0.01 && (mean(&e) - 1.0).abs() < 0.01);

    let swapped = [laws[1].clone(), laws[0].clone()];
    assert!(build_iid_config(System::UdToda, &swapped, 100, 7).is_err());
    assert!(build_iid_config(System::Bbs, &[D::Exponential { rate: 1.0 }], 100, 7).is_err());
}

#[test]
fn parameter_constraints_are_enforced() {
    for bad in [
        D::TruncExp { lambda: 1.0, c: 0.6, l: 1.0 },
        D::BernoulliStep { p: 0.1, q: 0.3, a: 1.0, b: 1.0 },
        D::BernoulliStep { p: 0.7, q: 0.4, a: 1.0, b: 1.0 },
        D::OneSidedExpPair { lambda1: 2.0, lambda2: 1.0, a: 0.5, b: 0.5 },
        D::Gamma { shape: 0.0, rate: 1.0 },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}

#[test]
fn walk_means() {
    let walk = build_random_walk(&D::TruncExpSym { lambda: 1.0, a: 1.0, b: 1.0 }, 1_000_000, 8).unwrap();
    let want = 1.0 / 1.0f64.tanh() - 1.0;
    assert!((mean(&walk.increments()) - want).abs() < 0.005);

    let (l1, l2) = (1.0, 2.0);
    let walk = build_random_walk(&D::OneSidedExpPair { lambda1: l1, lambda2: l2, a: 0.5, b: 0.5 }, 400_000, 9).unwrap();
    let periods: Vec<f64> = (1..=200_000).map(|n| walk.value(2 * n) - walk.value(2 * n - 2)).collect();
    assert!((mean(&periods) - (1.0 / l1 - 1.0 / l2)).abs() < 0.01);

    let walk = build_random_walk(&D::BernoulliStep { p: 0.3, q: 0.0, a: 1.0, b: 1.0 }, 10_000, 10).unwrap();
    assert!(walk.increments().iter().all(|&x| x >= 0.0));
}

#[test]
fn samples_are_reproducible() {
    let spec = D::GigDkdv { lambda: 1.0, c: 1.0, delta: 0.5 };
    assert_eq!(spec.sample_n(1000, 42).unwrap(), spec.sample_n(1000, 42).unwrap());
    assert_ne!(spec.sample_n(1000, 42).unwrap(), spec.sample_n(1000, 43).unwrap());
}
