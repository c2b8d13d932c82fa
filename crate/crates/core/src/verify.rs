//! Statistical verification of invariant laws.
//!
//! Every test returns a [`TestReport`] recording its seed, sample size, the
//! statistics computed and a pass/fail decision per sub-test. The protocols:
//!
//! * [`detailed_balance_test`]: `F(μ × ν) = μ × ν` for a local map, checked
//!   by sampling; [`bbs_balance_imbalance`] is the exact finite-state version.
//! * [`invariance_test`] and [`walk_invariance_test`]: the law of i.i.d.
//!   configurations (or random-walk increments) is unchanged by the dynamics.
//! * [`carrier_reversibility_test`] and [`carrier_stationary_test`]: the
//!   carrier of a stationary sweep is a reversible chain with the expected
//!   one-dimensional law.
//!
//! Suites are plain-text files, one test per line (see [`parse_suite`]).

use std::fmt::Write as _;

use rayon::prelude::*;
use statrs::function::gamma::digamma;

use crate::covariables::{default_system, equivalence, random_config};
use crate::measures::{log_concave_bounds, sample_sites, DistributionSpec, Law};
use crate::paths::System;
use crate::pitman::{seeded_transform_increments, OperatorTag, OperatorVariant};
use crate::rng::{self, SimRng};
use crate::stats::{self, TestStat};
use crate::systems::{local_f, stationary_carrier};
use crate::{Error, Result};

/// Significance level of every p-value sub-test.
pub const ALPHA: f64 = 0.01;

/// One decision inside a report.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTest {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
}

impl SubTest {
    /// Passes iff `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            statistic: value,
            p_value: None,
            threshold: limit,
            passed: value <= limit,
        }
    }

    /// Passes iff `value > limit`.
    pub fn more_than(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            statistic: value,
            p_value: None,
            threshold: limit,
            passed: value > limit,
        }
    }

    /// Passes iff the p-value is at least `alpha`.
    pub fn p_value(name: impl Into<String>, stat: TestStat, alpha: f64) -> Self {
        Self {
            name: name.into(),
            statistic: stat.statistic,
            p_value: Some(stat.p_value),
            threshold: alpha,
            passed: stat.p_value >= alpha,
        }
    }
}

/// Outcome of one verification test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub target: String,
    pub specs: Vec<String>,
    pub sample_size: usize,
    pub seed: u64,
    pub subtests: Vec<SubTest>,
    pub notes: Vec<String>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl TestReport {
    pub fn new(name: impl Into<String>, target: impl Into<String>, sample_size: usize, seed: u64) -> Self {
        Self {
            name: name.into(),
            target: target.into(),
            specs: Vec::new(),
            sample_size,
            seed,
            subtests: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_specs(mut self, specs: &[DistributionSpec]) -> Self {
        self.specs = specs.iter().map(ToString::to_string).collect();
        self
    }

    pub fn push(&mut self, sub: SubTest) {
        self.subtests.push(sub);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// True iff every sub-test passed (and there is at least one).
    pub fn passed(&self) -> bool {
        !self.subtests.is_empty() && self.subtests.iter().all(|s| s.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{verdict} {} [{}]", self.name, self.target);
        if !self.specs.is_empty() {
            let _ = writeln!(out, "  laws: {}", self.specs.join("; "));
        }
        let _ = writeln!(out, "  n={} seed={}", self.sample_size, self.seed);
        for s in &self.subtests {
            let mark = if s.passed { "ok  " } else { "FAIL" };
            match s.p_value {
                Some(p) => {
                    let _ = writeln!(
                        out,
                        "  {mark} {}: statistic={:.6e} p={:.4} (alpha {})",
                        s.name, s.statistic, p, s.threshold
                    );
                }
                None => {
                    let _ = writeln!(out, "  {mark} {}: {:.6e} (limit {:e})", s.name, s.statistic, s.threshold);
                }
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }

    pub const CSV_HEADER: &'static str = "test,target,laws,n,seed,subtest,statistic,p_value,threshold,passed";

    /// One CSV row per sub-test, without header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        let laws = csv_field(&self.specs.join(";"));
        for s in &self.subtests {
            let p = s.p_value.map(|p| format!("{p:e}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:e},{},{:e},{}",
                csv_field(&self.name),
                csv_field(&self.target),
                laws,
                self.sample_size,
                self.seed,
                csv_field(&s.name),
                s.statistic,
                p,
                s.threshold,
                s.passed
            );
        }
        out
    }
}

/// Two-sample test kind for [`two_sample_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleTest {
    Ks,
    ChiSquare { bins: usize },
}

/// Two-sample comparison. Degenerate KS input (both samples constant) is
/// decided by exact equality.
pub fn two_sample_test(xs: &[f64], ys: &[f64], kind: SampleTest) -> Result<TestStat> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidParameter("two-sample test needs nonempty samples".into()));
    }
    match kind {
        SampleTest::Ks => {
            let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
            if constant(xs) && constant(ys) {
                let same = xs[0] == ys[0];
                return Ok(TestStat {
                    statistic: if same { 0.0 } else { 1.0 },
                    p_value: if same { 1.0 } else { 0.0 },
                    dof: 0,
                });
            }
            Ok(stats::ks_two_sample(xs, ys))
        }
        SampleTest::ChiSquare { bins } => {
            let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
            let edges = stats::quantile_edges(&pooled, bins.max(2));
            Ok(stats::chi_square_two_sample(
                &stats::histogram(&edges, xs),
                &stats::histogram(&edges, ys),
            ))
        }
    }
}

/// Comparison of a sample against the law of `spec`: chi-square over the
/// atoms of a discrete law, KS otherwise.
pub fn goodness_of_fit(xs: &[f64], law: &Law) -> TestStat {
    if let Some(atoms) = law.atoms() {
        let n = xs.len() as f64;
        let mut observed = vec![0.0; atoms.len()];
        let mut stray = 0.0;
        for &x in xs {
            match atoms.iter().position(|(v, _)| (v - x).abs() <= 1e-9 * (1.0 + v.abs())) {
                Some(i) => observed[i] += 1.0,
                None => stray += 1.0,
            }
        }
        if stray > 0.0 {
            return TestStat {
                statistic: f64::INFINITY,
                p_value: 0.0,
                dof: 0,
            };
        }
        let expected: Vec<f64> = atoms.iter().map(|a| a.1 * n).collect();
        return stats::chi_square_gof(&observed, &expected, 0);
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cdf = law.cdf_sorted(&sorted);
    let n = sorted.len() as f64;
    let d = cdf
        .iter()
        .enumerate()
        .map(|(i, f)| (f - i as f64 / n).max((i + 1) as f64 / n - f))
        .fold(0.0, f64::max);
    TestStat {
        statistic: d,
        p_value: ks_p(d, n),
        dof: 0,
    }
}

fn ks_p(d: f64, n: f64) -> f64 {
    let s = n.sqrt();
    stats::kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

fn two_sample_for(xs: &[f64], ys: &[f64], discrete: bool) -> TestStat {
    if discrete {
        let mut values: Vec<f64> = xs.iter().chain(ys).copied().collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let count = |v: &[f64]| {
            let mut c = vec![0.0; values.len()];
            for x in v {
                c[values.partition_point(|y| y < x)] += 1.0;
            }
            c
        };
        stats::chi_square_two_sample(&count(xs), &count(ys))
    } else {
        stats::ks_two_sample(xs, ys)
    }
}

/// Exact detailed-balance imbalance for the box-ball map with
/// `μ = Bernoulli(p)`, `ν = Geometric(r)` on carriers `w <= w_max`: the total
/// variation between the image of `μ × ν` and `μ × ν` over output states
/// with `w' < w_max` (the truncation only leaks mass into `w' >= w_max`).
pub fn bbs_balance_imbalance(p: f64, r: f64, w_max: usize) -> f64 {
    let nu = |w: usize| (1.0 - r) * r.powi(w as i32);
    let mut image = vec![[0.0f64; 2]; w_max + 2];
    for w in 0..=w_max {
        for (eta, mass) in [(0.0, 1.0 - p), (1.0, p)] {
            let (e2, w2) = crate::systems::bbs_map(eta, w as f64);
            image[w2 as usize][e2 as usize] += mass * nu(w);
        }
    }
    let mut tv = 0.0;
    for (w, row) in image.iter().enumerate().take(w_max) {
        tv += (row[0] - (1.0 - p) * nu(w)).abs() + (row[1] - p * nu(w)).abs();
    }
    0.5 * tv
}

/// Detailed-balance check by sampling. For KdV-type systems `site_laws` is
/// `[μ]` and the map is `F(z, w)`. For Toda systems `site_laws` is
/// `[Q or I law, E or J law]`, `carrier` is the odd-index carrier law, and
/// both half-maps are applied: the even half-map must send `E × U` to
/// `Q × (even carrier)` and the odd half-map must bring that back to `E × U`.
pub fn detailed_balance_test(
    system: System,
    site_laws: &[DistributionSpec],
    carrier: &DistributionSpec,
    n: usize,
    seed: u64,
) -> Result<TestReport> {
    system.validate()?;
    let mut specs = site_laws.to_vec();
    specs.push(carrier.clone());
    let mut report = TestReport::new("detailed balance", system.name(), n, seed).with_specs(&specs);
    let mut rng = rng::stream(seed, 2);
    let mut fresh = rng::stream(seed, 3);
    let draw = |spec: &DistributionSpec, rng: &mut SimRng| -> Vec<f64> { (0..n).map(|_| spec.sample(rng)).collect() };
    let c_discrete = carrier.is_discrete();
    if !system.is_toda() {
        let mu = &site_laws[0];
        let (zs, ws) = (draw(mu, &mut rng), draw(carrier, &mut rng));
        let mut z2 = Vec::with_capacity(n);
        let mut w2 = Vec::with_capacity(n);
        for (&z, &w) in zs.iter().zip(&ws) {
            let (a, b) = local_f(system, 1, z, w)?;
            z2.push(a);
            w2.push(b);
        }
        let (zf, wf) = (draw(mu, &mut fresh), draw(carrier, &mut fresh));
        report.push(SubTest::p_value("site marginal", two_sample_for(&z2, &zf, mu.is_discrete()), ALPHA));
        report.push(SubTest::p_value("carrier marginal", two_sample_for(&w2, &wf, c_discrete), ALPHA));
        report.push(SubTest::p_value("independence of outputs", independence(&z2, &w2), ALPHA));
        return Ok(report);
    }
    let (q_law, e_law) = (&site_laws[0], &site_laws[1]);
    let (es, us, qs) = (draw(e_law, &mut rng), draw(carrier, &mut rng), draw(q_law, &mut rng));
    let (mut q2, mut v, mut e2, mut u2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        let (q, w_even) = local_f(system, 0, es[i], us[i])?;
        let (e, u) = local_f(system, 1, qs[i], w_even)?;
        q2.push(q);
        v.push(w_even);
        e2.push(e);
        u2.push(u);
    }
    let (qf, ef, uf) = (draw(q_law, &mut fresh), draw(e_law, &mut fresh), draw(carrier, &mut fresh));
    report.push(SubTest::p_value("half-map site marginal", two_sample_for(&q2, &qf, q_law.is_discrete()), ALPHA));
    report.push(SubTest::p_value("half-map independence", independence(&q2, &v), ALPHA));
    report.push(SubTest::p_value("full-map site marginal", two_sample_for(&e2, &ef, e_law.is_discrete()), ALPHA));
    report.push(SubTest::p_value("full-map carrier marginal", two_sample_for(&u2, &uf, c_discrete), ALPHA));
    report.push(SubTest::p_value("full-map independence", independence(&e2, &u2), ALPHA));
    Ok(report)
}

fn independence(xs: &[f64], ys: &[f64]) -> TestStat {
    stats::independence_test(xs, ys, 8)
}

/// Law of the stationary carrier (odd-index carrier for Toda systems) of a
/// sweep through i.i.d. sites, in the system's own variables. `None` when
/// the laws are outside the families with a known carrier law.
pub fn carrier_law(system: System, specs: &[DistributionSpec]) -> Option<DistributionSpec> {
    use DistributionSpec as D;
    match (system, specs) {
        (System::Bbs, [D::Bernoulli { p }]) if *p < 0.5 => Some(D::Geometric { r: p / (1.0 - p) }),
        (System::UdKdv { .. }, [D::TruncExp { lambda, c, .. }]) => Some(D::ShiftedExp { lambda: *lambda, c: *c }),
        (System::UdKdv { .. }, [D::TruncGeomGrid { h, lambda, k, .. }]) => {
            Some(D::ShiftedGeomGrid { lambda: *lambda, h: *h, k: *k })
        }
        (System::DKdv { .. }, [D::GigDkdv { lambda, c, .. }]) => Some(D::InvGamma { shape: *lambda, scale: *c }),
        (System::UdToda, [D::ShiftedExp { lambda: l1, c: c1 }, D::ShiftedExp { lambda: l2, c: c2 }])
            if c1 == c2 && l2 < l1 =>
        {
            Some(D::ShiftedExp { lambda: l1 - l2, c: *c1 })
        }
        (
            System::UdToda,
            [D::ShiftedGeomGrid { lambda: l1, h: h1, k: k1 }, D::ShiftedGeomGrid { lambda: l2, h: h2, k: k2 }],
        ) if h1 == h2 && k1 == k2 && l2 < l1 => Some(D::ShiftedGeomGrid { lambda: l1 - l2, h: *h1, k: *k1 }),
        (System::DToda, [D::Gamma { shape: l1, rate: c1 }, D::Gamma { shape: l2, rate: c2 }])
            if c1 == c2 && l2 < l1 =>
        {
            Some(D::Gamma { shape: l1 - l2, rate: *c1 })
        }
        _ => None,
    }
}

/// How the carrier entering the left end of a finite sample is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Drawn from the stationary carrier law, so outputs are exactly stationary.
    StationarySeed,
    /// Fixed typical value; the first tenth of the output is discarded.
    BurnIn,
}

/// Sweep over a finite run of sites with a given entering carrier. Toda
/// inputs start at an even index (an E or J site) with the odd carrier as
/// seed. Returns the outputs (first output at index `-m`) and the carriers.
fn finite_sweep(system: System, values: &[f64], seed: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut out = Vec::with_capacity(values.len());
    let mut carriers = Vec::with_capacity(values.len());
    let mut w = seed;
    for (i, &z) in values.iter().enumerate() {
        let (z2, w2) = local_f(system, i as i64, z, w)?;
        out.push(z2);
        carriers.push(w2);
        w = w2;
    }
    Ok((out, carriers))
}

/// Sites for a finite sweep: Toda values are laid out `E_0, Q_1, E_2, ...`.
fn sweep_input(system: System, specs: &[DistributionSpec], n_sites: usize, seed: u64) -> Result<Vec<f64>> {
    let mut v = sample_sites(system, specs, n_sites, seed)?;
    if system.is_toda() {
        for pair in v.chunks_mut(2) {
            pair.swap(0, 1);
        }
    }
    Ok(v)
}

fn typical_seed(system: System, values: &[f64]) -> f64 {
    let avg = |xs: Vec<f64>, log: bool| -> f64 {
        let n = xs.len().max(1) as f64;
        if log {
            (xs.iter().map(|x| x.ln()).sum::<f64>() / n).exp()
        } else {
            xs.iter().sum::<f64>() / n
        }
    };
    let log = matches!(system, System::DKdv { .. } | System::DToda);
    let bg = if system.is_toda() {
        vec![
            avg(values.iter().step_by(2).copied().collect(), log),
            avg(values.iter().skip(1).step_by(2).copied().collect(), log),
        ]
    } else {
        vec![avg(values.to_vec(), log)]
    };
    stationary_carrier(system, &bg)
}

/// Components of a sweep's site sequence, split by parity for Toda systems;
/// `offset` is the lattice index of the first entry.
fn split_by_parity(system: System, xs: &[f64], offset: i64) -> Vec<Vec<f64>> {
    if !system.is_toda() {
        return vec![xs.to_vec()];
    }
    // [odd-index sites (Q or I), even-index sites (E or J)]
    let mut parts = vec![Vec::new(), Vec::new()];
    for (i, &x) in xs.iter().enumerate() {
        let even = (offset + i as i64).rem_euclid(2) == 0;
        parts[even as usize].push(x);
    }
    parts
}

fn component_checks(report: &mut TestReport, label: &str, xs: &[f64], law: &Law) {
    report.push(SubTest::p_value(format!("{label} marginal"), goodness_of_fit(xs, law), ALPHA));
    let limit = 3.0 / (xs.len() as f64).sqrt();
    for lag in [1, 2] {
        let rho = stats::autocorrelation(xs, lag).abs();
        report.push(SubTest::at_most(format!("{label} |lag-{lag} correlation|"), rho, limit));
    }
}

/// Invariance of an i.i.d. configuration under `t_steps` sweeps, using the
/// stationary-seed protocol when the carrier law is known and the burn-in
/// protocol otherwise.
pub fn invariance_test(
    system: System,
    specs: &[DistributionSpec],
    n_sites: usize,
    t_steps: usize,
    seed: u64,
) -> Result<TestReport> {
    let protocol = if carrier_law(system, specs).is_some() {
        Protocol::StationarySeed
    } else {
        Protocol::BurnIn
    };
    invariance_test_with(system, specs, n_sites, t_steps, seed, protocol)
}

pub fn invariance_test_with(
    system: System,
    specs: &[DistributionSpec],
    n_sites: usize,
    t_steps: usize,
    seed: u64,
    protocol: Protocol,
) -> Result<TestReport> {
    system.validate()?;
    let mut values = sweep_input(system, specs, n_sites, seed)?;
    let mut report = TestReport::new("invariance", system.name(), n_sites, seed).with_specs(specs);
    let law = carrier_law(system, specs);
    let mut rng = rng::stream(seed, 4);
    let fixed = typical_seed(system, &values);
    match (&law, protocol) {
        (Some(l), Protocol::StationarySeed) => report.note(format!("carrier seeded from {l}")),
        (None, Protocol::StationarySeed) => {
            return Err(Error::InvalidParameter(
                "no stationary carrier law known for these laws; use the burn-in protocol".into(),
            ))
        }
        (_, Protocol::BurnIn) => report.note(format!("carrier seeded with {fixed}; first tenth discarded")),
    }
    report.note(format!("steps={t_steps}"));
    let m = system.shift();
    for _ in 0..t_steps {
        let w = match (&law, protocol) {
            (Some(l), Protocol::StationarySeed) => l.sample(&mut rng),
            _ => fixed,
        };
        values = finite_sweep(system, &values, w)?.0;
        if m == 1 {
            // outputs start at index -1; drop one to keep an even first index
            values.remove(0);
        }
    }
    let keep = match protocol {
        Protocol::StationarySeed => 0,
        Protocol::BurnIn => {
            let k = n_sites.div_ceil(10);
            k + (k % system.period())
        }
    };
    let tail = &values[keep.min(values.len())..];
    let parts = split_by_parity(system, tail, 0);
    if system.is_toda() {
        let labels = if system == System::UdToda { ["Q", "E"] } else { ["I", "J"] };
        for (i, part) in parts.iter().enumerate() {
            component_checks(&mut report, labels[i], part, &specs[i].law()?);
        }
    } else {
        component_checks(&mut report, "site", &parts[0], &specs[0].law()?);
    }
    Ok(report)
}

/// Stationary carrier law of a random walk under `variant`, as
/// `(offset, law)`: the carrier is `offset + X`, `X ~ law`.
pub fn walk_carrier_law(variant: OperatorVariant, spec: &DistributionSpec) -> Option<(f64, DistributionSpec)> {
    use DistributionSpec as D;
    Some(match (variant.tag, spec) {
        (OperatorTag::MaxPast, D::BernoulliStep { p, q, a, .. }) => {
            (0.0, D::ShiftedGeomGrid { lambda: (p / q).ln(), h: *a, k: 0 })
        }
        (OperatorTag::MaxAvgPast, D::TruncExpSym { lambda, a, .. }) => (-a / 2.0, D::Exponential { rate: 2.0 * lambda }),
        (OperatorTag::MaxAvgPast, D::SymGrid { lambda, h, k, half }) => {
            let grid = D::ShiftedGeomGrid { lambda: *lambda, h: h / 2.0, k: if *half { 1 - k } else { -k } };
            (if *half { -h / 4.0 } else { 0.0 }, grid)
        }
        (OperatorTag::LogSumAvg, D::Cosh { lambda, a, .. }) => {
            (0.0, D::LogInvGamma { shape: 2.0 * lambda, scale: a / 2.0 })
        }
        (OperatorTag::MaxEvenPast, D::OneSidedExpPair { lambda1, lambda2, a, .. }) => {
            (0.0, D::ShiftedExp { lambda: lambda2 - lambda1, c: *a })
        }
        (OperatorTag::MaxEvenPast, D::OneSidedGeomPair { lambda1, lambda2, h, k }) => {
            (0.0, D::ShiftedGeomGrid { lambda: lambda2 - lambda1, h: *h, k: *k })
        }
        (OperatorTag::LogSumEven, D::LogGammaPair { lambda1, lambda2, a, .. }) => {
            (0.0, D::LogInvGamma { shape: lambda2 - lambda1, scale: *a })
        }
        _ => return None,
    })
}

fn sample_walk_carrier<R: rand::Rng + ?Sized>(law: &Option<(f64, DistributionSpec)>, rng: &mut R) -> f64 {
    match law {
        Some((offset, spec)) => offset + spec.sample(rng),
        None => 0.0,
    }
}

/// Invariance of a random walk's increment law under `t_steps` applications
/// of `variant`, each seeded with a stationary carrier draw.
pub fn walk_invariance_test(
    variant: OperatorVariant,
    spec: &DistributionSpec,
    n: usize,
    t_steps: usize,
    seed: u64,
) -> Result<TestReport> {
    spec.validate()?;
    let tag = variant.tag;
    if spec.is_pair() != tag.is_starred() {
        return Err(Error::InvalidParameter(format!(
            "{} needs {} increments",
            variant.name(),
            if tag.is_starred() { "alternating" } else { "i.i.d." }
        )));
    }
    let mut report = TestReport::new("walk invariance", variant.name(), n, seed).with_specs(std::slice::from_ref(spec));
    let law = walk_carrier_law(variant, spec);
    match &law {
        Some((offset, l)) if *offset != 0.0 => report.note(format!("carrier seeded from {offset} + {l}")),
        Some((_, l)) => report.note(format!("carrier seeded from {l}")),
        None => report.note("no stationary carrier law known; carrier seeded with 0"),
    }
    report.note(format!("steps={t_steps}"));
    // path base index 1 (odd), so increments start at index 2 (even law)
    let mut rng = rng::stream(seed, 5);
    let mut incs = spec.sample_sequence(n, 2, &mut rng);
    for _ in 0..t_steps {
        let mut values = Vec::with_capacity(incs.len() + 1);
        let mut s = 0.0;
        values.push(s);
        for x in &incs {
            s += x;
            values.push(s);
        }
        let w = sample_walk_carrier(&law, &mut rng);
        incs = seeded_transform_increments(tag, 1, &values, w)?;
        if variant.shifted {
            // shifting re-indexes by one; drop the first to keep parity
            incs.remove(0);
        }
    }
    let comps: Vec<(String, DistributionSpec, Vec<f64>)> = match spec.components() {
        Some((even, odd)) => vec![
            ("even increment".into(), even, incs.iter().step_by(2).copied().collect()),
            ("odd increment".into(), odd, incs.iter().skip(1).step_by(2).copied().collect()),
        ],
        None => vec![("increment".into(), spec.clone(), incs)],
    };
    for (label, s, xs) in comps {
        component_checks(&mut report, &label, &xs, &s.law()?);
    }
    Ok(report)
}

/// Carrier values of a stationary sweep (odd-index values for Toda), in the
/// system's own variables.
fn stationary_carriers(system: System, specs: &[DistributionSpec], n: usize, seed: u64, w_seed: Option<f64>) -> Result<(Vec<f64>, Option<DistributionSpec>)> {
    let values = sweep_input(system, specs, n, seed)?;
    let law = carrier_law(system, specs);
    let mut rng = rng::stream(seed, 6);
    let w = match (w_seed, &law) {
        (Some(w), _) => w,
        (None, Some(l)) => l.sample(&mut rng),
        (None, None) => typical_seed(system, &values),
    };
    let carriers = finite_sweep(system, &values, w)?.1;
    let carriers = if system.is_toda() {
        // index i carries w_i; odd indices hold the odd carrier
        carriers.into_iter().skip(1).step_by(2).collect()
    } else {
        carriers
    };
    Ok((carriers, law))
}

/// Which carrier pairs a reversibility test uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairSelection {
    /// Leading carriers discarded.
    pub skip: usize,
    /// Carriers examined after `skip` (all when `None`).
    pub take: Option<usize>,
    /// Spacing of pair starts (the decorrelation stride of the whole run
    /// when `None`).
    pub stride: Option<usize>,
}

/// Symmetry of consecutive carrier pairs `(W_n, W_{n+1})` against their
/// swap, on pairs spaced by the decorrelation stride. With i.i.d. sites the
/// path is reflection invariant by construction, so a pass here together with
/// the three-conditions theorem gives invariance.
pub fn carrier_reversibility_test(system: System, specs: &[DistributionSpec], n: usize, seed: u64) -> Result<TestReport> {
    carrier_reversibility_seeded(system, specs, n, seed, None, PairSelection::default())
}

/// [`carrier_reversibility_test`] with an explicit entering carrier (drawn
/// from the stationary law when `None`) and pair selection.
pub fn carrier_reversibility_seeded(
    system: System,
    specs: &[DistributionSpec],
    n: usize,
    seed: u64,
    w_seed: Option<f64>,
    select: PairSelection,
) -> Result<TestReport> {
    let (all, law) = stationary_carriers(system, specs, n, seed, w_seed)?;
    let stride = select
        .stride
        .unwrap_or_else(|| stats::decorrelation_stride(&all, 50).max(2));
    let start = select.skip.min(all.len());
    let end = select.take.map_or(all.len(), |t| (start + t).min(all.len()));
    let carriers = &all[start..end];
    let mut report = TestReport::new("carrier reversibility", system.name(), n, seed).with_specs(specs);
    match (w_seed, law) {
        (Some(w), _) => report.note(format!("carrier seeded with {w}")),
        (None, Some(l)) => report.note(format!("carrier seeded from {l}")),
        (None, None) => report.note("carrier seeded with a typical value"),
    }
    if start > 0 || end < all.len() {
        report.note(format!("carriers {start}..{end} examined"));
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut i = 0;
    while i + 1 < carriers.len() {
        a.push(carriers[i]);
        b.push(carriers[i + 1]);
        i += stride;
    }
    report.note(format!("{} pairs at stride {stride}", a.len()));
    report.push(SubTest::p_value("pair symmetry (W_n, W_n+1) vs (W_n+1, W_n)", stats::symmetry_test(&a, &b, 8), ALPHA));
    report.push(SubTest::p_value("pair sign balance P(W_n+1 > W_n) = P(W_n+1 < W_n)", stats::sign_test(&b, &a), ALPHA));
    report.note(
        "i.i.d. sites make the path reflection invariant; with a reversible carrier the \
         three-conditions theorem then gives invariance under the dynamics",
    );
    Ok(report)
}

fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + x2 / 2.0 + x2 / x * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

/// Moment fit of `LogInvGamma{shape, scale}`: `Var = ψ'(shape)`,
/// `mean = ln scale - ψ(shape)`.
pub fn fit_log_inv_gamma(xs: &[f64]) -> DistributionSpec {
    let (m, v) = (stats::mean(xs), stats::variance(xs));
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if trigamma(mid) > v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let shape = (lo * hi).sqrt();
    DistributionSpec::LogInvGamma {
        shape,
        scale: (m + digamma(shape)).exp(),
    }
}

/// Tests the stationary carrier's one-dimensional law against the family
/// expected for the system. BBS uses the derived ratio `p/(1-p)` and a
/// total-variation bound; the other systems are moment-fitted and flagged.
pub fn carrier_stationary_test(system: System, specs: &[DistributionSpec], n: usize, seed: u64) -> Result<TestReport> {
    let (carriers, law) = stationary_carriers(system, specs, n, seed, None)?;
    let mut report = TestReport::new("carrier stationary law", system.name(), n, seed).with_specs(specs);
    let stride = stats::decorrelation_stride(&carriers, 200);
    let thinned: Vec<f64> = carriers.iter().step_by(stride).copied().collect();
    report.note(format!("{} carriers thinned at stride {stride}", thinned.len()));
    match system {
        System::Bbs => {
            let Some(DistributionSpec::Geometric { r }) = law else {
                return Err(Error::InvalidParameter("bbs carrier test needs bernoulli(p) with p < 1/2".into()));
            };
            report.note(format!("geometric ratio r = p/(1-p) = {r} (derived by detailed balance)"));
            let max = carriers.iter().fold(0.0f64, |a, &b| a.max(b)) as usize;
            let mut freq = vec![0.0; max + 1];
            for &w in &carriers {
                freq[w as usize] += 1.0 / carriers.len() as f64;
            }
            let target: Vec<f64> = (0..=max).map(|k| (1.0 - r) * r.powi(k as i32)).collect();
            report.push(SubTest::at_most("TV distance to geometric", stats::total_variation(&freq, &target), 0.01));
        }
        System::UdKdv { .. } | System::UdToda => {
            let (c, grid) = match law {
                Some(DistributionSpec::ShiftedExp { c, .. }) => (c, None),
                Some(DistributionSpec::ShiftedGeomGrid { h, k, .. }) => (h * k as f64, Some(h)),
                _ => {
                    let c = thinned.iter().copied().fold(f64::INFINITY, f64::min);
                    report.note(format!("shift fitted as the sample minimum {c}"));
                    (c, None)
                }
            };
            let excess = stats::mean(&thinned) - c;
            let fitted = match grid {
                None => DistributionSpec::ShiftedExp { lambda: 1.0 / excess, c },
                Some(h) => DistributionSpec::ShiftedGeomGrid {
                    lambda: (1.0 + h / excess).ln(),
                    h,
                    k: (c / h).round() as i64,
                },
            };
            report.note(format!("fitted by moments: {fitted}"));
            report.push(SubTest::p_value("exponential-family fit", goodness_of_fit(&thinned, &fitted.law()?), ALPHA));
        }
        System::DKdv { .. } | System::DToda => {
            // path-variable carrier: log U (dKdV) or -log U (dToda)
            let sign = if system == System::DToda { -1.0 } else { 1.0 };
            let logs: Vec<f64> = thinned.iter().map(|u| sign * u.ln()).collect();
            let fitted = fit_log_inv_gamma(&logs);
            report.note(format!("fitted by moments: {fitted}"));
            if let Some(l) = law {
                report.note(format!("derived carrier law: {l}"));
            }
            report.push(SubTest::p_value("log-inverse-gamma fit", goodness_of_fit(&logs, &fitted.law()?), ALPHA));
        }
    }
    Ok(report)
}

/// Sampler check: goodness of fit against the normalized law (each parity
/// for pair families) and the normalization itself.
pub fn sampler_test(spec: &DistributionSpec, n: usize, seed: u64) -> Result<TestReport> {
    let mut report = TestReport::new("sampler", spec.family(), n, seed).with_specs(std::slice::from_ref(spec));
    let laws: Vec<(String, DistributionSpec)> = match spec.components() {
        Some((even, odd)) => vec![("even".into(), even), ("odd".into(), odd)],
        None => vec![("law".into(), spec.clone())],
    };
    for (i, (label, s)) in laws.iter().enumerate() {
        let law = s.law()?;
        let xs = s.sample_n(n, seed.wrapping_add(i as u64))?;
        report.push(SubTest::p_value(format!("{label} goodness of fit"), goodness_of_fit(&xs, &law), ALPHA));
        report.push(SubTest::at_most(format!("{label} |total mass - 1|"), (total_mass(&law) - 1.0).abs(), 1e-8));
    }
    Ok(report)
}

/// Sum of atoms, or the integral of the normalized density computed
/// independently of the stored normalizer's quadrature grid.
pub fn total_mass(law: &Law) -> f64 {
    use DistributionSpec as D;
    if let Some(atoms) = law.atoms() {
        return atoms.iter().map(|a| a.1).sum();
    }
    let f = |x: f64| law.log_density(x).exp();
    let bounded = |spec: &DistributionSpec| -> Option<(f64, f64)> {
        Some(match *spec {
            D::TruncExp { c, l, .. } => (c, l - c),
            D::TruncExpSym { a, b, .. } => (-a, b),
            D::Exponential { rate } => (0.0, 80.0 / rate),
            D::ShiftedExp { lambda, c } => (c, c + 80.0 / lambda),
            _ => return None,
        })
    };
    let (spec, sign) = match law.spec() {
        D::Neg(inner) => (inner.as_ref(), -1.0),
        s => (s, 1.0),
    };
    if let Some((a, b)) = bounded(spec) {
        let (a, b) = if sign < 0.0 { (-b, -a) } else { (a, b) };
        return crate::quad::integrate(f, a, b, 1e-13);
    }
    // smooth log-concave families, in log scale for those living on (0, ∞)
    let positive = matches!(spec, D::Gamma { .. } | D::InvGamma { .. } | D::Gig { .. } | D::GigDkdv { .. });
    let g = |t: f64| {
        if positive {
            law.log_density(sign * t.exp()) + t
        } else {
            law.log_density(t)
        }
    };
    let (lo, hi, _) = log_concave_bounds(g);
    crate::quad::integrate(|t| g(t).exp(), lo, hi, 1e-13)
}

/// One parsed suite line.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub line: usize,
    pub kind: SuiteKind,
    pub expect_pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SuiteKind {
    Invariance { system: System, laws: Vec<DistributionSpec>, n: usize, steps: usize, seed: u64, protocol: Option<Protocol> },
    Walk { variant: OperatorVariant, law: DistributionSpec, n: usize, steps: usize, seed: u64 },
    Balance { system: System, laws: Vec<DistributionSpec>, carrier: DistributionSpec, n: usize, seed: u64 },
    Enumeration { p: f64, r: f64, w_max: usize },
    Reversibility { system: System, laws: Vec<DistributionSpec>, n: usize, seed: u64 },
    Stationary { system: System, laws: Vec<DistributionSpec>, n: usize, seed: u64 },
    Equivalence { system: System, configs: usize, sites: usize, steps: usize, tol: f64, seed: u64 },
    Sampler { law: DistributionSpec, n: usize, seed: u64 },
}

/// Parses a suite: one test per line as `kind key=value ... expect=pass|fail`,
/// `#` starts a comment. Kinds and keys:
///
/// ```text
/// invariance    system= [L=] [delta=] law= [law2=] n= steps= seed= [protocol=stationary|burnin]
/// walk          operator= law= n= steps= seed=
/// balance       system= [L=] [delta=] law= [law2=] carrier= n= seed=
/// enumeration   p= r= wmax=
/// reversibility system= [L=] [delta=] law= [law2=] n= seed=
/// stationary    system= [L=] [delta=] law= [law2=] n= seed=
/// equivalence   system= [L=] [delta=] configs= sites= steps= tol= seed=
/// sampler       law= n= seed=
/// ```
///
/// `expect` defaults to `pass`. Errors name the offending line.
pub fn parse_suite(text: &str) -> Result<Vec<SuiteEntry>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        entries.push(parse_line(content).map_err(|e| {
            let msg = match e {
                Error::Parse(m) => m,
                other => other.to_string(),
            };
            Error::Parse(format!("line {line}: {msg}"))
        })?.into_entry(line));
    }
    Ok(entries)
}

struct ParsedLine {
    kind: SuiteKind,
    expect_pass: bool,
}

impl ParsedLine {
    fn into_entry(self, line: usize) -> SuiteEntry {
        SuiteEntry {
            line,
            kind: self.kind,
            expect_pass: self.expect_pass,
        }
    }
}

fn parse_line(content: &str) -> Result<ParsedLine> {
    let mut tokens = content.split_whitespace();
    let kind = tokens.next().unwrap_or_default().to_ascii_lowercase();
    let mut kv = std::collections::BTreeMap::new();
    for t in tokens {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got '{t}'")))?;
        kv.insert(k.to_ascii_lowercase(), v.to_string());
    }
    let mut take = |k: &str| kv.remove(k);
    let num = |v: Option<String>, k: &str| -> Result<String> { v.ok_or_else(|| Error::Parse(format!("missing '{k}'"))) };
    macro_rules! get {
        ($k:expr, $t:ty) => {{
            let v = num(take($k), $k)?;
            v.parse::<$t>().map_err(|_| Error::Parse(format!("bad value '{}={v}'", $k)))?
        }};
    }
    macro_rules! opt {
        ($k:expr, $t:ty) => {{
            match take($k) {
                Some(v) => Some(v.parse::<$t>().map_err(|_| Error::Parse(format!("bad value '{}={v}'", $k)))?),
                None => None,
            }
        }};
    }
    let expect_pass = match take("expect").as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("pass") => true,
        Some("fail") => false,
        Some(other) => return Err(Error::Parse(format!("expect must be pass or fail, got '{other}'"))),
    };
    let system = |take: &mut dyn FnMut(&str) -> Option<String>| -> Result<System> {
        let name = take("system").ok_or_else(|| Error::Parse("missing 'system'".into()))?;
        let l = take("l").map(|v| v.parse::<f64>()).transpose().map_err(|_| Error::Parse("bad L".into()))?;
        let d = take("delta").map(|v| v.parse::<f64>()).transpose().map_err(|_| Error::Parse("bad delta".into()))?;
        match (l, d) {
            (None, None) => default_system(&name),
            _ => System::from_name(&name, l, d),
        }
    };
    let laws = |take: &mut dyn FnMut(&str) -> Option<String>| -> Result<Vec<DistributionSpec>> {
        let mut v = vec![take("law").ok_or_else(|| Error::Parse("missing 'law'".into()))?.parse()?];
        if let Some(l2) = take("law2") {
            v.push(l2.parse()?);
        }
        Ok(v)
    };
    let kind = match kind.as_str() {
        "invariance" => SuiteKind::Invariance {
            system: system(&mut take)?,
            laws: laws(&mut take)?,
            n: get!("n", usize),
            steps: get!("steps", usize),
            seed: get!("seed", u64),
            protocol: match take("protocol").as_deref() {
                None => None,
                Some("stationary") => Some(Protocol::StationarySeed),
                Some("burnin") => Some(Protocol::BurnIn),
                Some(o) => return Err(Error::Parse(format!("unknown protocol '{o}'"))),
            },
        },
        "walk" => SuiteKind::Walk {
            variant: OperatorVariant::from_name(&num(take("operator"), "operator")?)?,
            law: num(take("law"), "law")?.parse()?,
            n: get!("n", usize),
            steps: get!("steps", usize),
            seed: get!("seed", u64),
        },
        "balance" => SuiteKind::Balance {
            system: system(&mut take)?,
            laws: laws(&mut take)?,
            carrier: num(take("carrier"), "carrier")?.parse()?,
            n: get!("n", usize),
            seed: get!("seed", u64),
        },
        "enumeration" => SuiteKind::Enumeration {
            p: get!("p", f64),
            r: get!("r", f64),
            w_max: get!("wmax", usize),
        },
        "reversibility" => SuiteKind::Reversibility {
            system: system(&mut take)?,
            laws: laws(&mut take)?,
            n: get!("n", usize),
            seed: get!("seed", u64),
        },
        "stationary" => SuiteKind::Stationary {
            system: system(&mut take)?,
            laws: laws(&mut take)?,
            n: get!("n", usize),
            seed: get!("seed", u64),
        },
        "equivalence" => SuiteKind::Equivalence {
            system: system(&mut take)?,
            configs: get!("configs", usize),
            sites: get!("sites", usize),
            steps: get!("steps", usize),
            tol: opt!("tol", f64).unwrap_or(1e-9),
            seed: get!("seed", u64),
        },
        "sampler" => SuiteKind::Sampler {
            law: num(take("law"), "law")?.parse()?,
            n: get!("n", usize),
            seed: get!("seed", u64),
        },
        other => return Err(Error::Parse(format!("unknown test kind '{other}'"))),
    };
    if let Some(k) = kv.keys().next() {
        return Err(Error::Parse(format!("unknown key '{k}'")));
    }
    Ok(ParsedLine { kind, expect_pass })
}

/// Result of one suite line.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub entry: SuiteEntry,
    pub report: Result<TestReport>,
}

impl SuiteOutcome {
    /// True when the test passed and was expected to, or failed (including
    /// by a domain error) and was expected to fail.
    pub fn as_expected(&self) -> bool {
        let passed = self.report.as_ref().map(TestReport::passed).unwrap_or(false);
        passed == self.entry.expect_pass
    }
}

pub fn run_entry(entry: &SuiteEntry) -> Result<TestReport> {
    match &entry.kind {
        SuiteKind::Invariance { system, laws, n, steps, seed, protocol } => match protocol {
            Some(p) => invariance_test_with(*system, laws, *n, *steps, *seed, *p),
            None => invariance_test(*system, laws, *n, *steps, *seed),
        },
        SuiteKind::Walk { variant, law, n, steps, seed } => walk_invariance_test(*variant, law, *n, *steps, *seed),
        SuiteKind::Balance { system, laws, carrier, n, seed } => detailed_balance_test(*system, laws, carrier, *n, *seed),
        SuiteKind::Enumeration { p, r, w_max } => {
            let mut report = TestReport::new("balance enumeration", "bbs", *w_max + 1, 0);
            report.note(format!("mu=bernoulli(p={p}) nu=geometric(r={r})"));
            report.push(SubTest::at_most("TV imbalance", bbs_balance_imbalance(*p, *r, *w_max), 1e-12));
            Ok(report)
        }
        SuiteKind::Reversibility { system, laws, n, seed } => carrier_reversibility_test(*system, laws, *n, *seed),
        SuiteKind::Stationary { system, laws, n, seed } => carrier_stationary_test(*system, laws, *n, *seed),
        SuiteKind::Equivalence { system, configs, sites, steps, tol, seed } => {
            let mut rng = rng::stream(*seed, 7);
            let (mut site_err, mut carrier_err) = (0.0f64, 0.0f64);
            for _ in 0..*configs {
                let config = random_config(*system, *sites, &mut rng)?;
                let eq = equivalence(&config, *steps, *tol)?;
                site_err = site_err.max(eq.max_site_error);
                carrier_err = carrier_err.max(eq.max_carrier_error);
            }
            let mut report = TestReport::new("equivalence", system.name(), *configs, *seed);
            report.push(SubTest::at_most("max site difference", site_err, *tol));
            report.push(SubTest::at_most("max carrier difference", carrier_err, tol.max(1e-9)));
            report.note(format!("{configs} configurations of {sites} sites, {steps} steps"));
            Ok(report)
        }
        SuiteKind::Sampler { law, n, seed } => sampler_test(law, *n, *seed),
    }
}

/// Runs every entry concurrently; outcomes keep the suite's order.
pub fn run_suite(entries: &[SuiteEntry]) -> Vec<SuiteOutcome> {
    entries
        .par_iter()
        .map(|e| SuiteOutcome {
            entry: e.clone(),
            report: run_entry(e),
        })
        .collect()
}

/// The suite shipped with the crate.
pub const INVARIANCE_CORE: &str = include_str!("../suites/invariance-core.suite");

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> DistributionSpec {
        s.parse().unwrap()
    }

    #[test]
    fn enumeration_balances_with_derived_ratio() {
        for p in [0.1, 0.25, 0.4] {
            assert!(bbs_balance_imbalance(p, p / (1.0 - p), 60) < 1e-12);
        }
        assert!(bbs_balance_imbalance(0.25, 0.5, 60) > 0.01);
    }

    #[test]
    fn two_sample_edge_cases() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(two_sample_test(&xs, &xs, SampleTest::Ks).unwrap().statistic, 0.0);
        let c = two_sample_test(&[1.0; 5], &[1.0; 7], SampleTest::Ks).unwrap();
        assert_eq!((c.statistic, c.p_value), (0.0, 1.0));
        assert!(two_sample_test(&[], &xs, SampleTest::Ks).is_err());
    }

    #[test]
    fn suite_parse_errors_carry_line_numbers() {
        let text = "# comment\n\nsampler law=bernoulli(p=0.2) n=10 seed=1\nsampler law=bernoulli(p=2) n=10 seed=1\n";
        match parse_suite(text) {
            Err(Error::Parse(msg)) => assert!(msg.starts_with("line 4:"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bundled_suite_parses() {
        let entries = parse_suite(INVARIANCE_CORE).unwrap();
        assert!(entries.iter().any(|e| !e.expect_pass));
    }

    #[test]
    fn reports_are_reproducible() {
        let a = detailed_balance_test(System::Bbs, &[spec("bernoulli(p=0.25)")], &spec("geometric(r=0.3333333333333333)"), 2000, 9).unwrap();
        let b = detailed_balance_test(System::Bbs, &[spec("bernoulli(p=0.25)")], &spec("geometric(r=0.3333333333333333)"), 2000, 9).unwrap();
        assert_eq!(a.csv_rows(), b.csv_rows());
    }

    #[test]
    fn log_inv_gamma_fit_recovers_parameters() {
        let s = spec("loginvgamma(shape=1.5,scale=2)");
        let xs = s.sample_n(200_000, 4).unwrap();
        let DistributionSpec::LogInvGamma { shape, scale } = fit_log_inv_gamma(&xs) else { unreachable!() };
        assert!((shape - 1.5).abs() < 0.05 && (scale - 2.0).abs() < 0.1, "{shape} {scale}");
    }

    #[test]
    fn trigamma_values() {
        assert!((trigamma(1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((trigamma(0.5) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
    }
}
