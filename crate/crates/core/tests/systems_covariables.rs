use proptest::prelude::*;
use rand::Rng;
use solitonlab::covariables::{conjugacy_check, default_system, equivalence, random_config, VariableMap};
use solitonlab::paths::{System, SystemConfig};
use solitonlab::rng::stream;
use solitonlab::systems::{
    carrier_sweep, conservation_residual, dtoda_star, dtoda_star_inv, evolve, local_f, local_k, stationary_seed,
    udtoda_full, udtoda_star, udtoda_star_inv, KVariant,
};

fn ball_count(c: &SystemConfig) -> f64 {
    c.sites().iter().sum()
}

/// Maximal runs of balls as `(start, length)`.
fn runs(c: &SystemConfig) -> Vec<(i64, usize)> {
    let mut out = Vec::new();
    let mut n = c.lo();
    while n <= c.hi() {
        if c.value_at(n) == 1.0 {
            let start = n;
            while n <= c.hi() && c.value_at(n) == 1.0 {
                n += 1;
            }
            out.push((start, (n - start) as usize));
        } else {
            n += 1;
        }
    }
    out
}

#[test]
fn local_map_examples() {
    assert_eq!(local_f(System::Bbs, 1, 1.0, 0.0).unwrap(), (0.0, 1.0));
    assert_eq!(local_f(System::UdKdv { l: 2.0 }, 1, 1.5, 0.2).unwrap(), (0.2, 1.5));
    assert_eq!(udtoda_full(1.0, 2.0, 3.0), (2.0, 1.0, 2.0));
}

#[test]
fn full_toda_step_is_two_half_maps() {
    let mut rng = stream(11, 0);
    for _ in 0..1000 {
        // dyadic grid values keep min/plus arithmetic exact
        let mut g = || rng.gen_range(-192i32..192) as f64 / 64.0;
        let (q_next, e, u) = (g(), g(), g());
        let (q, w) = local_f(System::UdToda, 0, e, u).unwrap();
        let (e2, u2) = local_f(System::UdToda, 1, q_next, w).unwrap();
        let full = udtoda_full(q_next, e, u);
        assert_eq!((q, e2, u2), full);
    }
}

#[test]
fn k_map_examples() {
    assert_eq!(local_k(KVariant::Vee, 0.0, 0.0), (0.0, 0.0));
    assert_eq!(local_k(KVariant::Vee, 1.0, 2.0), (-1.0, 1.0));
    let (a, b) = local_k(KVariant::Sum, 0.0, 0.0);
    let ln2 = std::f64::consts::LN_2;
    assert!((a - 2.0 * ln2).abs() < 1e-15 && (b - ln2).abs() < 1e-15);
    assert!(conservation_residual(KVariant::Sum, 0.0, 0.0).abs() < 1e-15);
}

#[test]
fn conservation_law_on_random_inputs() {
    let mut rng = stream(1, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let (a, b) = (rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
        for v in KVariant::ALL {
            worst = worst.max(conservation_residual(v, a, b).abs());
        }
    }
    assert!(worst < 1e-12, "max residual {worst}");
}

#[test]
fn starred_half_maps_invert_each_other() {
    let mut rng = stream(2, 0);
    for _ in 0..10_000 {
        let (b, c) = (rng.gen_range(-640i32..640) as f64 / 64.0, rng.gen_range(-640i32..640) as f64 / 64.0);
        let (m, w) = udtoda_star(b, c);
        assert_eq!(udtoda_star_inv(m, w), (b, c));
        let (m, w) = udtoda_star_inv(b, c);
        assert_eq!(udtoda_star(m, w), (b, c));
        let (b, c) = (rng.gen_range(-4.0f64..4.0).exp(), rng.gen_range(-4.0f64..4.0).exp());
        let (s, w) = dtoda_star(b, c);
        let (b2, c2) = dtoda_star_inv(s, w);
        assert!((b2 / b - 1.0).abs() < 1e-12 && (c2 / c - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sweep_example_and_carrier() {
    let c = SystemConfig::bbs_from_str("110100").unwrap();
    let (next, w) = carrier_sweep(&c, 0.0).unwrap();
    assert_eq!(next.bbs_string(1, 6), "001011");
    assert_eq!(w.values[..6], [1.0, 2.0, 1.0, 2.0, 1.0, 0.0]);
}

#[test]
fn solitons_move_at_their_size() {
    for k in 1..=5usize {
        let c = SystemConfig::bbs(1, &vec![1u8; k]).unwrap();
        let traj = evolve(&c, 20).unwrap();
        for (t, ct) in traj.iter().enumerate() {
            assert_eq!(runs(ct), vec![(1 + (k * t) as i64, k)], "k={k} t={t}");
            assert_eq!(ball_count(ct), k as f64);
        }
    }
}

#[test]
fn two_solitons_keep_their_sizes() {
    let c = SystemConfig::bbs_from_str("1110100").unwrap();
    let traj = evolve(&c, 12).unwrap();
    let sizes = |c: &SystemConfig| {
        let mut s: Vec<usize> = runs(c).into_iter().map(|r| r.1).collect();
        s.sort();
        s
    };
    assert_eq!(sizes(&traj[0]), vec![1, 3]);
    let last = traj.last().unwrap();
    assert_eq!(sizes(last), vec![1, 3]);
    // the big soliton has overtaken the small one
    let r = runs(last);
    assert_eq!(r[1].1, 3);
    assert!(traj.iter().all(|c| ball_count(c) == 4.0));
}

#[test]
fn zero_steps_is_identity() {
    let c = SystemConfig::bbs_from_str("1011").unwrap();
    assert_eq!(evolve(&c, 0).unwrap(), vec![c]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ball_count_is_conserved(seed in any::<u64>(), steps in 0usize..15) {
        let c = random_config(System::Bbs, 60, &mut stream(seed, 0)).unwrap();
        for ct in evolve(&c, steps).unwrap() {
            prop_assert_eq!(ball_count(&ct), ball_count(&c));
        }
    }

    #[test]
    fn udkdv_mass_is_conserved_site_by_site(seed in any::<u64>()) {
        let system = System::UdKdv { l: 2.0 };
        let c = random_config(system, 40, &mut stream(seed, 1)).unwrap();
        let (next, w) = carrier_sweep(&c, stationary_seed(&c)).unwrap();
        let mut u_prev = w.seed;
        for (i, &u) in w.values.iter().enumerate() {
            let n = w.lo + i as i64;
            prop_assert_eq!(c.value_at(n) + u_prev, next.value_at(n) + u);
            u_prev = u;
        }
    }

    #[test]
    fn dkdv_mass_is_conserved_in_log_space(seed in any::<u64>()) {
        let system = System::DKdv { delta: 0.5 };
        let c = random_config(system, 40, &mut stream(seed, 2)).unwrap();
        let (next, w) = carrier_sweep(&c, stationary_seed(&c)).unwrap();
        let mut u_prev = w.seed;
        for (i, &u) in w.values.iter().enumerate() {
            let n = w.lo + i as i64;
            let lhs = c.value_at(n).ln() + u_prev.ln();
            let rhs = next.value_at(n).ln() + u.ln();
            prop_assert!((lhs - rhs).abs() < 1e-12);
            u_prev = u;
        }
    }

    #[test]
    fn udtoda_interval_law(seed in any::<u64>()) {
        let c = random_config(System::UdToda, 40, &mut stream(seed, 3)).unwrap();
        let traj = evolve(&c, 1).unwrap();
        let (old, new) = (&traj[0], &traj[1]);
        let (_, w) = carrier_sweep(old, stationary_seed(old)).unwrap();
        // U_n is the carrier at odd lattice index 2n - 1
        let u = |n: i64| w.value_at(2 * n - 1).unwrap_or(w.seed);
        let (q, e) = (|c: &SystemConfig, n: i64| c.value_at(2 * n - 1), |c: &SystemConfig, n: i64| c.value_at(2 * n));
        for n in c.first_pair()..c.first_pair() + 18 {
            let lhs = e(old, n) - q(old, n + 1) - 2.0 * u(n);
            let rhs = e(new, n) - q(new, n) - 2.0 * u(n + 1);
            prop_assert!((lhs - rhs).abs() < 1e-12, "n={} {} vs {}", n, lhs, rhs);
        }
    }
}

#[test]
fn change_of_variables_examples() {
    let m = VariableMap::new(System::UdKdv { l: 2.0 });
    assert_eq!(m.site_to_k(1, 0.5).unwrap(), 1.0);
    assert_eq!(m.carrier_to_k(1, 1.0).unwrap(), 0.0);
    let b = VariableMap::new(System::Bbs);
    assert_eq!((b.site_to_k(1, 0.0).unwrap(), b.site_to_k(1, 1.0).unwrap()), (1.0, -1.0));
    let d = VariableMap::new(System::DKdv { delta: 1.0 });
    assert_eq!((d.site_to_k(1, 1.0).unwrap(), d.carrier_to_k(1, 1.0).unwrap()), (0.0, 0.0));
    assert!(d.site_to_k(1, 0.0).is_err());
}

#[test]
fn conjugacy_holds_for_every_system() {
    for (name, tol) in [("bbs", 0.0), ("udkdv", 1e-12), ("dkdv", 1e-10), ("udtoda", 1e-12), ("dtoda", 1e-10)] {
        let system = if name == "udkdv" { System::UdKdv { l: 3.0 } } else { default_system(name).unwrap() };
        let report = conjugacy_check(system, 10_000, 5, tol).unwrap();
        assert!(report.passed(), "{}", report.to_text());
    }
}

#[test]
fn equivalence_for_random_configs() {
    for (name, tol) in [("bbs", 0.0), ("udkdv", 0.0), ("dkdv", 1e-9), ("udtoda", 0.0), ("dtoda", 1e-9)] {
        let system = default_system(name).unwrap();
        let mut rng = stream(3, 0);
        for _ in 0..30 {
            let c = random_config(system, 50, &mut rng).unwrap();
            let eq = equivalence(&c, 10, tol).unwrap();
            assert!(eq.first_mismatch.is_none(), "{name}: {:?}", eq.first_mismatch);
            assert!(eq.max_carrier_error <= tol.max(1e-9), "{name}: carrier {}", eq.max_carrier_error);
        }
    }
}

#[test]
fn vacuum_equivalence_is_trivial() {
    for name in ["bbs", "udkdv", "dkdv", "udtoda", "dtoda"] {
        let system = default_system(name).unwrap();
        let c = random_config(system, 0, &mut stream(0, 0)).unwrap();
        let eq = equivalence(&c, 5, 0.0).unwrap();
        assert!(eq.max_site_error <= 1e-14, "{name}: {}", eq.max_site_error);
    }
}

#[test]
fn single_udtoda_pair_tracks_the_transform() {
    let c = SystemConfig::toda(System::UdToda, 1, &[(1.0, 2.0)], (0.5, 4.0)).unwrap();
    let eq = equivalence(&c, 10, 0.0).unwrap();
    assert!(eq.first_mismatch.is_none());
}
