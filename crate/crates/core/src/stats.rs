//! Goodness-of-fit and dependence statistics used by the verification harness.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

/// Statistic with its p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestStat {
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Kolmogorov survival function `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> TestStat {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    TestStat {
        statistic: d,
        p_value: ks_p_value(d, n),
        dof: 0,
    }
}

/// Two-sample Kolmogorov–Smirnov test. Identical samples give distance 0.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> TestStat {
    let (a, b) = (sorted(xs), sorted(ys));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    TestStat {
        statistic: d,
        p_value: ks_p_value(d, n * m / (n + m)),
        dof: 0,
    }
}

fn chi2_sf(x: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).expect("positive dof").sf(x)
}

/// Merges adjacent bins, left to right, until each expected count is at
/// least 5; a short remainder is folded into the last merged bin.
fn merge_bins(observed: &[f64], expected: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let (mut ao, mut ae) = (0.0, 0.0);
    for (&x, &y) in observed.iter().zip(expected) {
        ao += x;
        ae += y;
        if ae >= 5.0 {
            o.push(ao);
            e.push(ae);
            ao = 0.0;
            ae = 0.0;
        }
    }
    if ae > 0.0 || ao > 0.0 {
        if let (Some(lo), Some(le)) = (o.last_mut(), e.last_mut()) {
            *lo += ao;
            *le += ae;
        } else {
            o.push(ao);
            e.push(ae);
        }
    }
    (o, e)
}

/// Pearson goodness of fit; `expected` are counts, `fitted` the number of
/// estimated parameters.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], fitted: usize) -> TestStat {
    let (o, e) = merge_bins(observed, expected);
    let stat: f64 = o
        .iter()
        .zip(&e)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = o.len().saturating_sub(1 + fitted);
    TestStat {
        statistic: stat,
        p_value: chi2_sf(stat, dof),
        dof,
    }
}

/// Chi-square homogeneity test of two count vectors over the same categories.
pub fn chi_square_two_sample(a: &[f64], b: &[f64]) -> TestStat {
    let (na, nb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let total = na + nb;
    // merge on pooled expected counts of the smaller sample
    let pooled: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let scale = na.min(nb) / total;
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut ga, mut gb, mut gp) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        ga += a[i];
        gb += b[i];
        gp += pooled[i];
        if gp * scale >= 5.0 {
            groups.push((ga, gb));
            ga = 0.0;
            gb = 0.0;
            gp = 0.0;
        }
    }
    if gp > 0.0 {
        if let Some(last) = groups.last_mut() {
            last.0 += ga;
            last.1 += gb;
        } else {
            groups.push((ga, gb));
        }
    }
    let mut stat = 0.0;
    for &(x, y) in &groups {
        let p = (x + y) / total;
        let (ea, eb) = (p * na, p * nb);
        if ea > 0.0 {
            stat += (x - ea) * (x - ea) / ea;
        }
        if eb > 0.0 {
            stat += (y - eb) * (y - eb) / eb;
        }
    }
    let dof = groups.len().saturating_sub(1);
    TestStat {
        statistic: stat,
        p_value: chi2_sf(stat, dof),
        dof,
    }
}

/// `k - 1` interior cut points at the empirical `i/k` quantiles.
pub fn quantile_edges(xs: &[f64], k: usize) -> Vec<f64> {
    let v = sorted(xs);
    let mut edges: Vec<f64> = (1..k).map(|i| v[i * v.len() / k]).collect();
    edges.dedup();
    edges
}

/// Index of the bin of `x` for the given interior edges (`x < e_0` is bin 0).
pub fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x)
}

/// Counts of each bin.
pub fn histogram(edges: &[f64], xs: &[f64]) -> Vec<f64> {
    let mut counts = vec![0.0; edges.len() + 1];
    for &x in xs {
        counts[bin_of(edges, x)] += 1.0;
    }
    counts
}

/// Chi-square test of independence on a contingency table of quantile bins.
pub fn independence_test(xs: &[f64], ys: &[f64], k: usize) -> TestStat {
    let (ex, ey) = (quantile_edges(xs, k), quantile_edges(ys, k));
    let (r, c) = (ex.len() + 1, ey.len() + 1);
    let mut table = vec![vec![0.0; c]; r];
    for (&x, &y) in xs.iter().zip(ys) {
        table[bin_of(&ex, x)][bin_of(&ey, y)] += 1.0;
    }
    let n = xs.len() as f64;
    let rows: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let cols: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    let mut stat = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = rows[i] * cols[j] / n;
            if e > 0.0 {
                stat += (table[i][j] - e).powi(2) / e;
            }
        }
    }
    let nonzero_r = rows.iter().filter(|&&x| x > 0.0).count();
    let nonzero_c = cols.iter().filter(|&&x| x > 0.0).count();
    let dof = nonzero_r.saturating_sub(1) * nonzero_c.saturating_sub(1);
    TestStat {
        statistic: stat,
        p_value: chi2_sf(stat, dof),
        dof,
    }
}

/// Bowker's test that the joint law of `(x_i, y_i)` is symmetric, on pooled
/// quantile bins.
pub fn symmetry_test(xs: &[f64], ys: &[f64], k: usize) -> TestStat {
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let edges = quantile_edges(&pooled, k);
    let b = edges.len() + 1;
    let mut table = vec![vec![0.0f64; b]; b];
    for (&x, &y) in xs.iter().zip(ys) {
        table[bin_of(&edges, x)][bin_of(&edges, y)] += 1.0;
    }
    let mut stat = 0.0;
    let mut dof = 0;
    for i in 0..b {
        for j in (i + 1)..b {
            let s = table[i][j] + table[j][i];
            if s > 0.0 {
                stat += (table[i][j] - table[j][i]).powi(2) / s;
                dof += 1;
            }
        }
    }
    TestStat {
        statistic: stat,
        p_value: chi2_sf(stat, dof),
        dof,
    }
}

/// Two-sided exact sign test that `x_i < y_i` and `x_i > y_i` are equally
/// likely; ties are dropped. The statistic is the number of `x_i > y_i`.
pub fn sign_test(xs: &[f64], ys: &[f64]) -> TestStat {
    let above = xs.iter().zip(ys).filter(|(x, y)| x > y).count() as u64;
    let below = xs.iter().zip(ys).filter(|(x, y)| x < y).count() as u64;
    let n = above + below;
    if n == 0 {
        return TestStat {
            statistic: 0.0,
            p_value: 1.0,
            dof: 0,
        };
    }
    let binom = Binomial::new(0.5, n).expect("valid binomial");
    let tail = binom.cdf(above.min(below));
    TestStat {
        statistic: above as f64,
        p_value: (2.0 * tail).min(1.0),
        dof: n as usize,
    }
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let n = xs.len();
    if lag >= n {
        return 0.0;
    }
    let m = mean(xs);
    let var: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = (0..n - lag).map(|i| (xs[i] - m) * (xs[i + lag] - m)).sum();
    cov / var
}

/// Smallest lag whose autocorrelation drops below 0.05, capped at `cap`.
pub fn decorrelation_stride(xs: &[f64], cap: usize) -> usize {
    (1..=cap)
        .find(|&k| autocorrelation(xs, k).abs() < 0.05)
        .unwrap_or(cap)
}

/// Total variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).unwrap_or(&0.0) - q.get(i).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_test_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(sign_test(&xs, &xs).p_value, 1.0);
        let up: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let down: Vec<f64> = up.iter().map(|x| x - 1.0).collect();
        // 20 of 20 in one direction: p = 2^-19
        assert!((sign_test(&up, &down).p_value - 2f64.powi(-19)).abs() < 1e-15);
        assert!((sign_test(&[1.0, 0.0], &[0.0, 1.0]).p_value - 1.0).abs() < 1e-15);
    }
    use crate::rng;
    use rand::Rng;

    fn uniforms(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| r.gen::<f64>() + shift).collect()
    }

    #[test]
    fn identical_samples_have_zero_distance() {
        let x = uniforms(1, 1000, 0.0);
        let t = ks_two_sample(&x, &x);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn shifted_uniforms_are_far_apart() {
        let t = ks_two_sample(&uniforms(1, 10_000, 0.0), &uniforms(2, 10_000, 0.5));
        assert!((t.statistic - 0.5).abs() < 0.03);
        assert!(t.p_value < 1e-10);
    }

    #[test]
    fn same_sampler_two_seeds_agree() {
        let t = ks_two_sample(&uniforms(3, 10_000, 0.0), &uniforms(4, 10_000, 0.0));
        assert!(t.p_value > 0.01);
    }

    #[test]
    fn kolmogorov_tail_known_values() {
        // P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.0098
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.0100).abs() < 3e-4);
    }

    #[test]
    fn chi_square_merges_sparse_bins() {
        let obs = [50.0, 48.0, 1.0, 0.0, 1.0];
        let exp = [50.0, 49.0, 0.5, 0.3, 0.2];
        let t = chi_square_gof(&obs, &exp, 0);
        assert_eq!(t.dof, 1);
        assert!(t.p_value > 0.5);
    }

    #[test]
    fn independence_and_symmetry_detect_dependence() {
        let x = uniforms(5, 20_000, 0.0);
        let y = uniforms(6, 20_000, 0.0);
        assert!(independence_test(&x, &y, 5).p_value > 0.01);
        let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + 0.3 * b).collect();
        assert!(independence_test(&x, &z, 5).p_value < 1e-6);
        assert!(symmetry_test(&x, &y, 5).p_value > 0.01);
        let shifted: Vec<f64> = y.iter().map(|b| b + 0.2).collect();
        assert!(symmetry_test(&x, &shifted, 5).p_value < 1e-6);
    }

    #[test]
    fn autocorrelation_of_alternating_sequence() {
        let xs: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((autocorrelation(&xs, 1) + 1.0).abs() < 1e-2);
        assert!((autocorrelation(&xs, 2) - 1.0).abs() < 1e-2);
    }
}
