//! Invariant laws: samplers, densities, normalizers and random builders.
//!
//! Spec literals have the form `family(key=value,...)`, keys are
//! case-insensitive, and `neg(<literal>)` is the law of `-X`:
//!
//! ```text
//! bernoulli(p)                 geometric(r)            exponential(rate)
//! truncexp(lambda,c,L)         truncgeom(h,lambda,k,l) gigdkdv(lambda,c,delta)
//! gig(p,a,b)                   shiftedexp(lambda,c)    shiftedgeom(lambda,h,k)
//! gamma(lambda,c)              invgamma(shape,scale)   loggamma(shape,rate)
//! loginvgamma(shape,scale)     bernoullistep(p,q,a[,b])
//! truncexpsym(lambda,a[,b])    symgrid(lambda,h,k,half)
//! cosh(lambda,a[,kappa])       onesidedexp(lambda1,lambda2,a[,b])
//! onesidedgeom(lambda1,lambda2,h,k)   loggammapair(lambda1,lambda2,a[,b])
//! ```
//!
//! Optional keys default to the value that makes the law invariant (`b = a`,
//! `kappa = 2`); other values give the perturbed laws used as falsification
//! controls. Pair families describe alternating walks: the even-index
//! increment law first, then the odd-index one.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::paths::{Background, PathWindow, System, SystemConfig};
use crate::quad::integrate;
use crate::rng::{self, open01, SimRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Bernoulli { p: f64 },
    /// `P(k) = (1 - r) r^k`, `k >= 0`.
    Geometric { r: f64 },
    Exponential { rate: f64 },
    /// Density `∝ e^{-λx}` on `[c, L - c]`.
    TruncExp { lambda: f64, c: f64, l: f64 },
    /// `P(hm) ∝ e^{-λm}` for `m = k..=ℓ-k`.
    TruncGeomGrid { h: f64, lambda: f64, k: i64, l: i64 },
    /// Density `∝ e^{-c/x - cδx} x^{-λ-1}` on `(0, ∞)`.
    GigDkdv { lambda: f64, c: f64, delta: f64 },
    /// Density `∝ x^{p-1} e^{-(ax + b/x)/2}` on `(0, ∞)`.
    Gig { p: f64, a: f64, b: f64 },
    /// `c + Exp(λ)`.
    ShiftedExp { lambda: f64, c: f64 },
    /// `P(hm) ∝ e^{-λm}` for `m >= k`.
    ShiftedGeomGrid { lambda: f64, h: f64, k: i64 },
    /// Density `∝ x^{shape-1} e^{-rate x}`.
    Gamma { shape: f64, rate: f64 },
    /// Law of `scale / G`, `G ~ Gamma(shape, 1)`.
    InvGamma { shape: f64, scale: f64 },
    /// Law of `log G`, `G ~ Gamma(shape, rate)`: density `∝ e^{shape x - rate e^x}`.
    LogGamma { shape: f64, rate: f64 },
    /// Law of `log(scale / G)`: density `∝ e^{-shape x - scale e^{-x}}`.
    LogInvGamma { shape: f64, scale: f64 },
    Neg(Box<DistributionSpec>),
    /// `a` w.p. `p`, `-b` w.p. `q`, else 0.
    BernoulliStep { p: f64, q: f64, a: f64, b: f64 },
    /// Density `∝ e^{λx}` on `[-a, b]`.
    TruncExpSym { lambda: f64, a: f64, b: f64 },
    /// `P(hm) ∝ e^{λm}` for `m = -k..=k`, or half-integers `-k+1/2..=k-1/2`.
    SymGrid { lambda: f64, h: f64, k: i64, half: bool },
    /// Density `∝ e^{λx - a cosh(x/κ)}`.
    Cosh { lambda: f64, a: f64, kappa: f64 },
    /// Even increments `a + Exp(λ1)`, odd increments `-b - Exp(λ2)`.
    OneSidedExpPair { lambda1: f64, lambda2: f64, a: f64, b: f64 },
    /// Grid analogue: even `hm`, `m >= k`, `∝ e^{-λ1 m}`; odd `hm`, `m <= -k`, `∝ e^{λ2 m}`.
    OneSidedGeomPair { lambda1: f64, lambda2: f64, h: f64, k: i64 },
    /// Even increments `-log Gamma(λ1, a)`, odd increments `log Gamma(λ2, b)`.
    LogGammaPair { lambda1: f64, lambda2: f64, a: f64, b: f64 },
}

use DistributionSpec as D;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(invalid(msg))
    }
}

fn finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

impl DistributionSpec {
    pub fn family(&self) -> &'static str {
        match self {
            D::Bernoulli { .. } => "bernoulli",
            D::Geometric { .. } => "geometric",
            D::Exponential { .. } => "exponential",
            D::TruncExp { .. } => "truncexp",
            D::TruncGeomGrid { .. } => "truncgeom",
            D::GigDkdv { .. } => "gigdkdv",
            D::Gig { .. } => "gig",
            D::ShiftedExp { .. } => "shiftedexp",
            D::ShiftedGeomGrid { .. } => "shiftedgeom",
            D::Gamma { .. } => "gamma",
            D::InvGamma { .. } => "invgamma",
            D::LogGamma { .. } => "loggamma",
            D::LogInvGamma { .. } => "loginvgamma",
            D::Neg(_) => "neg",
            D::BernoulliStep { .. } => "bernoullistep",
            D::TruncExpSym { .. } => "truncexpsym",
            D::SymGrid { .. } => "symgrid",
            D::Cosh { .. } => "cosh",
            D::OneSidedExpPair { .. } => "onesidedexp",
            D::OneSidedGeomPair { .. } => "onesidedgeom",
            D::LogGammaPair { .. } => "loggammapair",
        }
    }

    /// Checks every parameter constraint of the family.
    pub fn validate(&self) -> Result<()> {
        match *self {
            D::Bernoulli { p } => require((0.0..=1.0).contains(&p), "bernoulli needs 0 <= p <= 1"),
            D::Geometric { r } => require((0.0..1.0).contains(&r), "geometric needs 0 <= r < 1"),
            D::Exponential { rate } => require(rate > 0.0 && rate.is_finite(), "exponential needs rate > 0"),
            D::TruncExp { lambda, c, l } => {
                require(finite(&[lambda, c, l]) && lambda > 0.0, "truncexp needs lambda > 0")?;
                require(c < l / 2.0, "truncexp needs c < L/2")
            }
            D::TruncGeomGrid { h, lambda, k, l } => {
                require(h > 0.0 && lambda > 0.0 && finite(&[h, lambda]), "truncgeom needs h, lambda > 0")?;
                require(2 * k < l, "truncgeom needs k < l/2")
            }
            D::GigDkdv { lambda, c, delta } => require(
                lambda > 0.0 && c > 0.0 && delta > 0.0 && finite(&[lambda, c, delta]),
                "gigdkdv needs lambda, c, delta > 0",
            ),
            D::Gig { p, a, b } => require(
                a > 0.0 && b > 0.0 && finite(&[p, a, b]),
                "gig needs a, b > 0",
            ),
            D::ShiftedExp { lambda, c } => {
                require(lambda > 0.0 && finite(&[lambda, c]), "shiftedexp needs lambda > 0")
            }
            D::ShiftedGeomGrid { lambda, h, .. } => require(
                lambda > 0.0 && h > 0.0 && finite(&[lambda, h]),
                "shiftedgeom needs lambda, h > 0",
            ),
            D::Gamma { shape, rate } => require(
                shape > 0.0 && rate > 0.0 && finite(&[shape, rate]),
                "gamma needs lambda, c > 0",
            ),
            D::InvGamma { shape, scale } | D::LogInvGamma { shape, scale } => require(
                shape > 0.0 && scale > 0.0 && finite(&[shape, scale]),
                "needs shape, scale > 0",
            ),
            D::LogGamma { shape, rate } => require(
                shape > 0.0 && rate > 0.0 && finite(&[shape, rate]),
                "loggamma needs shape, rate > 0",
            ),
            D::Neg(ref inner) => {
                require(!inner.is_pair(), "neg of a pair family is not defined")?;
                inner.validate()
            }
            D::BernoulliStep { p, q, a, b } => {
                require(0.0 <= q && q < p && p <= 1.0, "bernoullistep needs 0 <= q < p <= 1")?;
                require(p + q <= 1.0, "bernoullistep needs p + q <= 1")?;
                require(a > 0.0 && b > 0.0 && finite(&[a, b]), "bernoullistep needs a, b > 0")
            }
            D::TruncExpSym { lambda, a, b } => require(
                lambda > 0.0 && a > 0.0 && b > 0.0 && finite(&[lambda, a, b]),
                "truncexpsym needs lambda, a, b > 0",
            ),
            D::SymGrid { lambda, h, k, .. } => require(
                lambda > 0.0 && h > 0.0 && k >= 1 && finite(&[lambda, h]),
                "symgrid needs lambda, h > 0 and k >= 1",
            ),
            D::Cosh { lambda, a, kappa } => require(
                lambda > 0.0 && a > 0.0 && kappa > 0.0 && finite(&[lambda, a, kappa]),
                "cosh needs lambda, a, kappa > 0",
            ),
            D::OneSidedExpPair { lambda1, lambda2, a, b } => {
                require(finite(&[lambda1, lambda2, a, b]), "onesidedexp needs finite parameters")?;
                require(0.0 < lambda1 && lambda1 < lambda2, "onesidedexp needs 0 < lambda1 < lambda2")
            }
            D::OneSidedGeomPair { lambda1, lambda2, h, .. } => {
                require(h > 0.0 && h.is_finite(), "onesidedgeom needs h > 0")?;
                require(0.0 < lambda1 && lambda1 < lambda2, "onesidedgeom needs 0 < lambda1 < lambda2")
            }
            D::LogGammaPair { lambda1, lambda2, a, b } => {
                require(a > 0.0 && b > 0.0 && finite(&[a, b]), "loggammapair needs a, b > 0")?;
                require(0.0 < lambda1 && lambda1 < lambda2, "loggammapair needs 0 < lambda1 < lambda2")
            }
        }
    }

    pub fn is_pair(&self) -> bool {
        matches!(
            self,
            D::OneSidedExpPair { .. } | D::OneSidedGeomPair { .. } | D::LogGammaPair { .. }
        )
    }

    /// `(even, odd)` increment laws of a pair family.
    pub fn components(&self) -> Option<(DistributionSpec, DistributionSpec)> {
        match *self {
            D::OneSidedExpPair { lambda1, lambda2, a, b } => Some((
                D::ShiftedExp { lambda: lambda1, c: a },
                D::Neg(Box::new(D::ShiftedExp { lambda: lambda2, c: b })),
            )),
            D::OneSidedGeomPair { lambda1, lambda2, h, k } => Some((
                D::ShiftedGeomGrid { lambda: lambda1, h, k },
                D::Neg(Box::new(D::ShiftedGeomGrid { lambda: lambda2, h, k })),
            )),
            D::LogGammaPair { lambda1, lambda2, a, b } => Some((
                D::Neg(Box::new(D::LogGamma { shape: lambda1, rate: a })),
                D::LogGamma { shape: lambda2, rate: b },
            )),
            _ => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        match self {
            D::Bernoulli { .. }
            | D::Geometric { .. }
            | D::TruncGeomGrid { .. }
            | D::ShiftedGeomGrid { .. }
            | D::BernoulliStep { .. }
            | D::SymGrid { .. } => true,
            D::Neg(inner) => inner.is_discrete(),
            _ => false,
        }
    }

    /// `(value, probability)` pairs in increasing value order; infinite
    /// supports are cut where the remaining mass is below `1e-17`, and the
    /// remainder is added to the last atom.
    pub fn pmf_table(&self) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        let geometric_tail = |r: f64| -> usize {
            if r <= 0.0 {
                1
            } else {
                ((-17.0 * std::f64::consts::LN_10) / r.ln()).ceil().max(1.0) as usize + 1
            }
        };
        let table = match *self {
            D::Bernoulli { p } => vec![(0.0, 1.0 - p), (1.0, p)],
            D::Geometric { r } => {
                let n = geometric_tail(r);
                geometric_atoms(r, n, |j| j as f64)
            }
            D::TruncGeomGrid { h, lambda, k, l } => {
                let weights: Vec<f64> = (k..=l - k).map(|m| -lambda * (m - k) as f64).collect();
                normalize_log_weights((k..=l - k).map(|m| h * m as f64).collect(), weights)
            }
            D::ShiftedGeomGrid { lambda, h, k } => {
                let r = (-lambda).exp();
                let n = geometric_tail(r);
                geometric_atoms(r, n, |j| h * (k + j as i64) as f64)
            }
            D::BernoulliStep { p, q, a, b } => {
                let mut t = vec![(-b, q), (0.0, 1.0 - p - q), (a, p)];
                t.retain(|&(_, w)| w > 0.0);
                t
            }
            D::SymGrid { lambda, h, k, half } => {
                let ms: Vec<f64> = if half {
                    (-k..k).map(|m| m as f64 + 0.5).collect()
                } else {
                    (-k..=k).map(|m| m as f64).collect()
                };
                let weights = ms.iter().map(|m| lambda * m).collect();
                normalize_log_weights(ms.iter().map(|m| h * m).collect(), weights)
            }
            D::Neg(ref inner) => {
                let mut t: Vec<(f64, f64)> = inner.pmf_table()?.into_iter().map(|(v, w)| (-v, w)).collect();
                t.reverse();
                t
            }
            _ => return Err(invalid(format!("{} is not a discrete family", self.family()))),
        };
        Ok(table)
    }

    /// Builds the cached law (normalizer, numeric support or atom table).
    pub fn law(&self) -> Result<Law> {
        Law::new(self.clone())
    }

    /// `n` i.i.d. draws from stream 0 of `seed`; pair families yield the
    /// alternating sequence `x_1, x_2, ...` (odd law first).
    pub fn sample_n(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = rng::stream(seed, 0);
        Ok(self.sample_sequence(n, 1, &mut rng))
    }

    /// Draws for indices `first, first + 1, ...`; pair families use the odd
    /// or even law according to the index.
    pub fn sample_sequence(&self, n: usize, first: i64, rng: &mut SimRng) -> Vec<f64> {
        match self.components() {
            Some((even, odd)) => (0..n as i64)
                .map(|i| {
                    if (first + i).rem_euclid(2) == 0 {
                        even.sample(rng)
                    } else {
                        odd.sample(rng)
                    }
                })
                .collect(),
            None => (0..n).map(|_| self.sample(rng)).collect(),
        }
    }

    /// One draw; pair families draw from their even-index law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            D::Bernoulli { p } => (rng.gen::<f64>() < p) as u8 as f64,
            D::Geometric { r } => geometric_index(rng, r, usize::MAX) as f64,
            D::Exponential { rate } => -open01(rng).ln() / rate,
            D::TruncExp { lambda, c, l } => {
                let u = rng.gen::<f64>();
                c - (u * (-lambda * (l - 2.0 * c)).exp_m1()).ln_1p() / lambda
            }
            D::TruncGeomGrid { h, lambda, k, l } => {
                let j = geometric_index(rng, (-lambda).exp(), (l - 2 * k) as usize);
                h * (k + j as i64) as f64
            }
            D::GigDkdv { lambda, c, delta } => sample_gig(rng, -lambda, 2.0 * c * delta, 2.0 * c),
            D::Gig { p, a, b } => sample_gig(rng, p, a, b),
            D::ShiftedExp { lambda, c } => c - open01(rng).ln() / lambda,
            D::ShiftedGeomGrid { lambda, h, k } => {
                h * (k + geometric_index(rng, (-lambda).exp(), usize::MAX) as i64) as f64
            }
            D::Gamma { shape, rate } => ln_gamma_sample(rng, shape).exp() / rate,
            D::InvGamma { shape, scale } => scale * (-ln_gamma_sample(rng, shape)).exp(),
            D::LogGamma { shape, rate } => ln_gamma_sample(rng, shape) - rate.ln(),
            D::LogInvGamma { shape, scale } => scale.ln() - ln_gamma_sample(rng, shape),
            D::Neg(ref inner) => -inner.sample(rng),
            D::BernoulliStep { p, q, a, b } => {
                let u = rng.gen::<f64>();
                if u < p {
                    a
                } else if u < p + q {
                    -b
                } else {
                    0.0
                }
            }
            D::TruncExpSym { lambda, a, b } => {
                let u = rng.gen::<f64>();
                -a + (u * (lambda * (a + b)).exp_m1()).ln_1p() / lambda
            }
            D::SymGrid { lambda, h, k, half } => {
                let top = if half { 2 * k - 1 } else { 2 * k };
                // index counted down from the top atom
                let j = geometric_index(rng, (-lambda).exp(), top as usize) as i64;
                let m = if half { (k - j) as f64 - 0.5 } else { (k - j) as f64 };
                h * m
            }
            D::Cosh { lambda, a, kappa } => kappa * sample_gig(rng, kappa * lambda, a, a).ln(),
            D::OneSidedExpPair { .. } | D::OneSidedGeomPair { .. } | D::LogGammaPair { .. } => {
                self.components().expect("pair family").0.sample(rng)
            }
        }
    }

    /// Unnormalized log density (Lebesgue) of a continuous family.
    fn raw_log_density(&self, x: f64) -> f64 {
        let out = f64::NEG_INFINITY;
        match *self {
            D::Exponential { rate } => if x >= 0.0 { -rate * x } else { out },
            D::TruncExp { lambda, c, l } => if x >= c && x <= l - c { -lambda * x } else { out },
            D::GigDkdv { lambda, c, delta } => {
                if x > 0.0 { -c / x - c * delta * x - (lambda + 1.0) * x.ln() } else { out }
            }
            D::Gig { p, a, b } => if x > 0.0 { (p - 1.0) * x.ln() - (a * x + b / x) / 2.0 } else { out },
            D::ShiftedExp { lambda, c } => if x >= c { -lambda * x } else { out },
            D::Gamma { shape, rate } => if x > 0.0 { (shape - 1.0) * x.ln() - rate * x } else { out },
            D::InvGamma { shape, scale } => if x > 0.0 { -(shape + 1.0) * x.ln() - scale / x } else { out },
            D::LogGamma { shape, rate } => shape * x - rate * x.exp(),
            D::LogInvGamma { shape, scale } => -shape * x - scale * (-x).exp(),
            D::Neg(ref inner) => inner.raw_log_density(-x),
            D::TruncExpSym { lambda, a, b } => if x >= -a && x <= b { lambda * x } else { out },
            D::Cosh { lambda, a, kappa } => lambda * x - a * (x / kappa).cosh(),
            _ => out,
        }
    }

    /// Closed-form log normalizer, when one exists.
    fn closed_log_normalizer(&self) -> Option<f64> {
        Some(match *self {
            D::Exponential { rate } => -rate.ln(),
            D::TruncExp { lambda, c, l } => {
                -lambda * c + (-(-lambda * (l - 2.0 * c)).exp_m1()).ln() - lambda.ln()
            }
            D::ShiftedExp { lambda, c } => -lambda * c - lambda.ln(),
            D::Gamma { shape, rate } => ln_gamma(shape) - shape * rate.ln(),
            D::InvGamma { shape, scale } => ln_gamma(shape) - shape * scale.ln(),
            D::LogGamma { shape, rate } => ln_gamma(shape) - shape * rate.ln(),
            D::LogInvGamma { shape, scale } => ln_gamma(shape) - shape * scale.ln(),
            D::TruncExpSym { lambda, a, b } => -lambda * a + (lambda * (a + b)).exp_m1().ln() - lambda.ln(),
            D::Neg(ref inner) => inner.closed_log_normalizer()?,
            _ => return None,
        })
    }

    /// Closed-form CDF, when one exists.
    fn closed_cdf(&self, x: f64) -> Option<f64> {
        Some(match *self {
            D::Exponential { rate } => if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() },
            D::TruncExp { lambda, c, l } => {
                if x <= c {
                    0.0
                } else if x >= l - c {
                    1.0
                } else {
                    (-lambda * (x - c)).exp_m1() / (-lambda * (l - 2.0 * c)).exp_m1()
                }
            }
            D::ShiftedExp { lambda, c } => if x <= c { 0.0 } else { -(-lambda * (x - c)).exp_m1() },
            D::Gamma { shape, rate } => if x <= 0.0 { 0.0 } else { gamma_lr(shape, rate * x) },
            D::InvGamma { shape, scale } => if x <= 0.0 { 0.0 } else { gamma_ur(shape, scale / x) },
            D::LogGamma { shape, rate } => gamma_lr(shape, rate * x.exp()),
            D::LogInvGamma { shape, scale } => gamma_ur(shape, scale * (-x).exp()),
            D::TruncExpSym { lambda, a, b } => {
                if x <= -a {
                    0.0
                } else if x >= b {
                    1.0
                } else {
                    (lambda * (x + a)).exp_m1() / (lambda * (a + b)).exp_m1()
                }
            }
            D::Neg(ref inner) => 1.0 - inner.closed_cdf(-x)?,
            _ => return None,
        })
    }

    /// Variable in which a numerically integrated family is smooth and
    /// log-concave on all of `R`: `t = ln x` for the GIG families, `t = x`
    /// otherwise.
    fn log_scale(&self) -> bool {
        match self {
            D::GigDkdv { .. } | D::Gig { .. } => true,
            D::Neg(inner) => inner.log_scale(),
            _ => false,
        }
    }
}

fn geometric_atoms(r: f64, n: usize, value: impl Fn(usize) -> f64) -> Vec<(f64, f64)> {
    let mut t: Vec<(f64, f64)> = (0..n).map(|j| (value(j), (1.0 - r) * r.powi(j as i32))).collect();
    let mass: f64 = t.iter().map(|a| a.1).sum();
    if let Some(last) = t.last_mut() {
        last.1 += (1.0 - mass).max(0.0);
    }
    t
}

fn normalize_log_weights(values: Vec<f64>, logw: Vec<f64>) -> Vec<(f64, f64)> {
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    values.into_iter().zip(w).map(|(v, w)| (v, w / z)).collect()
}

/// `J` with `P(J >= j) ∝ r^j - r^{n+1}` on `0..=n` (plain geometric when
/// `n == usize::MAX`).
fn geometric_index<R: Rng + ?Sized>(rng: &mut R, r: f64, n: usize) -> usize {
    if r <= 0.0 {
        return 0;
    }
    let u = open01(rng);
    if n == usize::MAX {
        return (u.ln() / r.ln()).floor() as usize;
    }
    let tail = r.powf(n as f64 + 1.0);
    let j = ((1.0 - (1.0 - u) * (1.0 - tail)).ln() / r.ln()).floor();
    (j.max(0.0) as usize).min(n)
}

/// `ln G` for `G ~ Gamma(shape, 1)`, accurate for small shapes.
fn ln_gamma_sample<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("valid shape").sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("valid shape").sample(rng);
        g.ln() + open01(rng).ln() / shape
    }
}

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

/// Generalized inverse Gaussian draw with density `∝ x^{p-1} e^{-(ax + b/x)/2}`
/// (Hörmann & Leydold, 2014: ratio-of-uniforms with or without mode shift,
/// and a dominating-density method for small `ω`).
pub fn sample_gig<R: Rng + ?Sized>(rng: &mut R, p: f64, a: f64, b: f64) -> f64 {
    let lambda = p.abs();
    let omega = (a * b).sqrt();
    let alpha = (b / a).sqrt();
    let y = if lambda > 2.0 || omega > 3.0 {
        gig_rou_shift(rng, lambda, omega)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        gig_rou_noshift(rng, lambda, omega)
    } else {
        gig_small_omega(rng, lambda, omega)
    };
    if p < 0.0 {
        alpha / y
    } else {
        alpha * y
    }
}

fn gig_rou_noshift<R: Rng + ?Sized>(rng: &mut R, lambda: f64, omega: f64) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.gen::<f64>();
        let v = open01(rng);
        let x = u / v;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn gig_rou_shift<R: Rng + ?Sized>(rng: &mut R, lambda: f64, omega: f64) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.gen::<f64>() * (uplus - uminus);
        let v = open01(rng);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn gig_small_omega<R: Rng + ?Sized>(rng: &mut R, lambda: f64, omega: f64) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let mut area = [k0 * x0, 0.0, 0.0];
    let (k1, k2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        area[2] = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        area[1] = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        area[2] = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total: f64 = area.iter().sum();
    loop {
        let mut v = total * rng.gen::<f64>();
        let (x, hx);
        if v <= area[0] {
            x = x0 * v / area[0];
            hx = k0;
        } else {
            v -= area[0];
            if v <= area[1] {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= area[1];
                let a = if x0 > 2.0 / omega { x0 } else { 2.0 / omega };
                x = -2.0 / omega * ((-omega / 2.0 * a).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        if x <= 0.0 || !x.is_finite() {
            continue;
        }
        let u = rng.gen::<f64>() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// Normalized form of a [`DistributionSpec`] with its normalizer computed once.
#[derive(Debug, Clone)]
pub struct Law {
    spec: DistributionSpec,
    log_z: f64,
    /// `(t_lo, t_hi, log-density at the mode)` for numerically integrated families.
    numeric: Option<(f64, f64, f64)>,
    atoms: Option<Vec<(f64, f64)>>,
}

impl Law {
    pub fn new(spec: DistributionSpec) -> Result<Self> {
        spec.validate()?;
        if spec.is_pair() {
            return Err(invalid("pair families have one law per parity; use components()"));
        }
        if spec.is_discrete() {
            let atoms = spec.pmf_table()?;
            return Ok(Self {
                spec,
                log_z: 0.0,
                numeric: None,
                atoms: Some(atoms),
            });
        }
        if let Some(log_z) = spec.closed_log_normalizer() {
            return Ok(Self {
                spec,
                log_z,
                numeric: None,
                atoms: None,
            });
        }
        let g = |t: f64| log_density_in_t(&spec, t);
        let (t_lo, t_hi, gmax) = log_concave_bounds(g);
        let mass = integrate(|t| (g(t) - gmax).exp(), t_lo, t_hi, 1e-14);
        Ok(Self {
            log_z: gmax + mass.ln(),
            numeric: Some((t_lo, t_hi, gmax)),
            spec,
            atoms: None,
        })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_z
    }

    /// Atoms of a discrete law.
    pub fn atoms(&self) -> Option<&[(f64, f64)]> {
        self.atoms.as_deref()
    }

    /// Log density (continuous) or log probability (discrete); `-inf`
    /// outside the support.
    pub fn log_density(&self, x: f64) -> f64 {
        match &self.atoms {
            Some(atoms) => atoms
                .iter()
                .find(|(v, _)| (v - x).abs() <= 1e-9 * (1.0 + v.abs()))
                .map_or(f64::NEG_INFINITY, |(_, p)| p.ln()),
            None => self.spec.raw_log_density(x) - self.log_z,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if let Some(atoms) = &self.atoms {
            return atoms.iter().take_while(|(v, _)| *v <= x).map(|a| a.1).sum();
        }
        if let Some(c) = self.spec.closed_cdf(x) {
            return c;
        }
        let (t_lo, t_hi, _) = self.numeric.expect("numeric law");
        let t = self.to_t(x);
        if t <= t_lo {
            0.0
        } else if t >= t_hi {
            1.0
        } else {
            integrate(|s| (log_density_in_t(&self.spec, s) - self.log_z).exp(), t_lo, t, 1e-12).min(1.0)
        }
    }

    /// CDF at every point of an ascending slice.
    pub fn cdf_sorted(&self, xs: &[f64]) -> Vec<f64> {
        let Some((t_lo, t_hi, _)) = self.numeric else {
            return xs.iter().map(|&x| self.cdf(x)).collect();
        };
        let f = |s: f64| (log_density_in_t(&self.spec, s) - self.log_z).exp();
        let mut acc = 0.0;
        let mut prev = t_lo;
        xs.iter()
            .map(|&x| {
                let t = self.to_t(x).clamp(t_lo, t_hi);
                if t > prev {
                    acc += integrate(f, prev, t, 1e-12);
                    prev = t;
                }
                acc.min(1.0)
            })
            .collect()
    }

    fn to_t(&self, x: f64) -> f64 {
        if self.spec.log_scale() {
            if x <= 0.0 {
                f64::NEG_INFINITY
            } else {
                x.ln()
            }
        } else {
            x
        }
    }

    /// Bounds in the original variable beyond which the density is below
    /// `e^{-60}` of its peak (numeric families only).
    pub fn effective_support(&self) -> Option<(f64, f64)> {
        let (lo, hi, _) = self.numeric?;
        Some(if self.spec.log_scale() {
            (lo.exp(), hi.exp())
        } else {
            (lo, hi)
        })
    }
}

/// Mode value and the interval around the mode where a log-concave `g`
/// stays within 60 of its maximum: `(lo, hi, g_max)`.
pub(crate) fn log_concave_bounds(g: impl Fn(f64) -> f64) -> (f64, f64, f64) {
    let (mut lo, mut hi) = (-300.0f64, 300.0f64);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if g(m1) < g(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let mode = 0.5 * (lo + hi);
    let gmax = g(mode);
    let reach = |dir: f64| {
        let mut step = 0.5;
        while g(mode + dir * step) > gmax - 60.0 && step < 600.0 {
            step *= 2.0;
        }
        mode + dir * step
    };
    (reach(-1.0), reach(1.0), gmax)
}

fn log_density_in_t(spec: &DistributionSpec, t: f64) -> f64 {
    if spec.log_scale() {
        spec.raw_log_density(t.exp()) + t
    } else {
        spec.raw_log_density(t)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            D::Bernoulli { p } => write!(f, "bernoulli(p={p})"),
            D::Geometric { r } => write!(f, "geometric(r={r})"),
            D::Exponential { rate } => write!(f, "exponential(rate={rate})"),
            D::TruncExp { lambda, c, l } => write!(f, "truncexp(lambda={lambda},c={c},L={l})"),
            D::TruncGeomGrid { h, lambda, k, l } => {
                write!(f, "truncgeom(h={h},lambda={lambda},k={k},l={l})")
            }
            D::GigDkdv { lambda, c, delta } => write!(f, "gigdkdv(lambda={lambda},c={c},delta={delta})"),
            D::Gig { p, a, b } => write!(f, "gig(p={p},a={a},b={b})"),
            D::ShiftedExp { lambda, c } => write!(f, "shiftedexp(lambda={lambda},c={c})"),
            D::ShiftedGeomGrid { lambda, h, k } => write!(f, "shiftedgeom(lambda={lambda},h={h},k={k})"),
            D::Gamma { shape, rate } => write!(f, "gamma(lambda={shape},c={rate})"),
            D::InvGamma { shape, scale } => write!(f, "invgamma(shape={shape},scale={scale})"),
            D::LogGamma { shape, rate } => write!(f, "loggamma(shape={shape},rate={rate})"),
            D::LogInvGamma { shape, scale } => write!(f, "loginvgamma(shape={shape},scale={scale})"),
            D::Neg(inner) => write!(f, "neg({inner})"),
            D::BernoulliStep { p, q, a, b } => {
                write!(f, "bernoullistep(p={p},q={q},a={a}")?;
                if b != a {
                    write!(f, ",b={b}")?;
                }
                write!(f, ")")
            }
            D::TruncExpSym { lambda, a, b } => {
                write!(f, "truncexpsym(lambda={lambda},a={a}")?;
                if b != a {
                    write!(f, ",b={b}")?;
                }
                write!(f, ")")
            }
            D::SymGrid { lambda, h, k, half } => write!(f, "symgrid(lambda={lambda},h={h},k={k},half={half})"),
            D::Cosh { lambda, a, kappa } => {
                write!(f, "cosh(lambda={lambda},a={a}")?;
                if *kappa != 2.0 {
                    write!(f, ",kappa={kappa}")?;
                }
                write!(f, ")")
            }
            D::OneSidedExpPair { lambda1, lambda2, a, b } => {
                write!(f, "onesidedexp(lambda1={lambda1},lambda2={lambda2},a={a}")?;
                if b != a {
                    write!(f, ",b={b}")?;
                }
                write!(f, ")")
            }
            D::OneSidedGeomPair { lambda1, lambda2, h, k } => {
                write!(f, "onesidedgeom(lambda1={lambda1},lambda2={lambda2},h={h},k={k})")
            }
            D::LogGammaPair { lambda1, lambda2, a, b } => {
                write!(f, "loggammapair(lambda1={lambda1},lambda2={lambda2},a={a}")?;
                if b != a {
                    write!(f, ",b={b}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Params {
    family: String,
    values: BTreeMap<String, String>,
}

impl Params {
    fn take(&mut self, key: &str) -> Result<String> {
        self.values
            .remove(key)
            .ok_or_else(|| Error::Parse(format!("{} needs '{key}'", self.family)))
    }

    fn f(&mut self, key: &str) -> Result<f64> {
        let v = self.take(key)?;
        v.parse()
            .map_err(|_| Error::Parse(format!("{}: '{key}={v}' is not a number", self.family)))
    }

    fn f_or(&mut self, key: &str, default: f64) -> Result<f64> {
        if self.values.contains_key(key) {
            self.f(key)
        } else {
            Ok(default)
        }
    }

    fn i(&mut self, key: &str) -> Result<i64> {
        let v = self.take(key)?;
        v.parse()
            .map_err(|_| Error::Parse(format!("{}: '{key}={v}' is not an integer", self.family)))
    }

    fn b(&mut self, key: &str) -> Result<bool> {
        match self.take(key)?.to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(Error::Parse(format!("{}: '{key}={other}' is not a boolean", self.family))),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.values.keys().next() {
            return Err(Error::Parse(format!("{}: unknown parameter '{k}'", self.family)));
        }
        Ok(())
    }
}

impl std::str::FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::Parse(format!("'{s}' is not of the form family(key=value,...)")))?;
        if !s.ends_with(')') {
            return Err(Error::Parse(format!("'{s}' lacks a closing parenthesis")));
        }
        let family = s[..open].trim().to_ascii_lowercase();
        let body = &s[open + 1..s.len() - 1];
        if family == "neg" {
            let inner: DistributionSpec = body.parse()?;
            let spec = D::Neg(Box::new(inner));
            spec.validate()?;
            return Ok(spec);
        }
        let mut values = BTreeMap::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("{family}: expected key=value, got '{part}'")))?;
            if values
                .insert(k.trim().to_ascii_lowercase(), v.trim().to_string())
                .is_some()
            {
                return Err(Error::Parse(format!("{family}: duplicate key '{}'", k.trim())));
            }
        }
        let mut p = Params {
            family: family.clone(),
            values,
        };
        let spec = match family.as_str() {
            "bernoulli" => D::Bernoulli { p: p.f("p")? },
            "geometric" => D::Geometric { r: p.f("r")? },
            "exponential" => D::Exponential { rate: p.f("rate")? },
            "truncexp" => D::TruncExp { lambda: p.f("lambda")?, c: p.f("c")?, l: p.f("l")? },
            "truncgeom" => D::TruncGeomGrid { h: p.f("h")?, lambda: p.f("lambda")?, k: p.i("k")?, l: p.i("l")? },
            "gigdkdv" => D::GigDkdv { lambda: p.f("lambda")?, c: p.f("c")?, delta: p.f("delta")? },
            "gig" => D::Gig { p: p.f("p")?, a: p.f("a")?, b: p.f("b")? },
            "shiftedexp" => D::ShiftedExp { lambda: p.f("lambda")?, c: p.f("c")? },
            "shiftedgeom" => D::ShiftedGeomGrid { lambda: p.f("lambda")?, h: p.f("h")?, k: p.i("k")? },
            "gamma" => D::Gamma { shape: p.f("lambda")?, rate: p.f("c")? },
            "invgamma" => D::InvGamma { shape: p.f("shape")?, scale: p.f("scale")? },
            "loggamma" => D::LogGamma { shape: p.f("shape")?, rate: p.f("rate")? },
            "loginvgamma" => D::LogInvGamma { shape: p.f("shape")?, scale: p.f("scale")? },
            "bernoullistep" => {
                let (pp, q, a) = (p.f("p")?, p.f("q")?, p.f("a")?);
                D::BernoulliStep { p: pp, q, a, b: p.f_or("b", a)? }
            }
            "truncexpsym" => {
                let (lambda, a) = (p.f("lambda")?, p.f("a")?);
                D::TruncExpSym { lambda, a, b: p.f_or("b", a)? }
            }
            "symgrid" => D::SymGrid { lambda: p.f("lambda")?, h: p.f("h")?, k: p.i("k")?, half: p.b("half")? },
            "cosh" => D::Cosh { lambda: p.f("lambda")?, a: p.f("a")?, kappa: p.f_or("kappa", 2.0)? },
            "onesidedexp" => {
                let (lambda1, lambda2, a) = (p.f("lambda1")?, p.f("lambda2")?, p.f("a")?);
                D::OneSidedExpPair { lambda1, lambda2, a, b: p.f_or("b", a)? }
            }
            "onesidedgeom" => D::OneSidedGeomPair {
                lambda1: p.f("lambda1")?,
                lambda2: p.f("lambda2")?,
                h: p.f("h")?,
                k: p.i("k")?,
            },
            "loggammapair" => {
                let (lambda1, lambda2, a) = (p.f("lambda1")?, p.f("lambda2")?, p.f("a")?);
                D::LogGammaPair { lambda1, lambda2, a, b: p.f_or("b", a)? }
            }
            other => return Err(Error::Parse(format!("unknown distribution family '{other}'"))),
        };
        p.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

/// `first` and `second` laws for a system's sites: one law for KdV-type
/// systems, `(Q or I law, E or J law)` for Toda systems.
pub fn build_iid_config(system: System, specs: &[DistributionSpec], sites: usize, seed: u64) -> Result<SystemConfig> {
    let values = sample_sites(system, specs, sites, seed)?;
    config_from_values(system, values)
}

/// Site values for `sites` lattice sites (`sites / 2` pairs for Toda).
pub fn sample_sites(system: System, specs: &[DistributionSpec], sites: usize, seed: u64) -> Result<Vec<f64>> {
    check_site_laws(system, specs)?;
    let mut rng = rng::stream(seed, 1);
    Ok(if system.is_toda() {
        let mut v = Vec::with_capacity(sites);
        for _ in 0..sites / 2 {
            v.push(specs[0].sample(&mut rng));
            v.push(specs[1].sample(&mut rng));
        }
        v
    } else {
        (0..sites).map(|_| specs[0].sample(&mut rng)).collect()
    })
}

/// Wraps sampled site values (starting at site 1) in a configuration whose
/// background is the sample's typical value: the mean, or the geometric mean
/// for the multiplicative systems.
pub fn config_from_values(system: System, values: Vec<f64>) -> Result<SystemConfig> {
    let typical = |xs: Vec<f64>| -> f64 {
        match system {
            System::DKdv { .. } | System::DToda => {
                (xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64).exp()
            }
            _ => xs.iter().sum::<f64>() / xs.len() as f64,
        }
    };
    let background = match system {
        System::Bbs => vec![0.0],
        _ if system.is_toda() => {
            let odd: Vec<f64> = values.iter().step_by(2).copied().collect();
            let even: Vec<f64> = values.iter().skip(1).step_by(2).copied().collect();
            vec![typical(even), typical(odd)]
        }
        _ => vec![typical(values.clone())],
    };
    SystemConfig::new(system, 1, values, background)
}

fn check_site_laws(system: System, specs: &[DistributionSpec]) -> Result<()> {
    let want = if system.is_toda() { 2 } else { 1 };
    if specs.len() != want {
        return Err(invalid(format!("{} needs {want} site law(s)", system.name())));
    }
    for s in specs {
        s.validate()?;
        if s.is_pair() {
            return Err(invalid("pair families describe walks, not sites"));
        }
    }
    match (system, &specs[0]) {
        (System::Bbs, D::Bernoulli { .. }) => {}
        (System::Bbs, other) => return Err(invalid(format!("bbs sites need a bernoulli law, not {}", other.family()))),
        (System::DKdv { .. } | System::DToda, s) if !positive_support(s) => {
            return Err(invalid(format!("{} needs a law on (0, ∞)", system.name())))
        }
        _ => {}
    }
    if system == System::DToda && !positive_support(&specs[1]) {
        return Err(invalid("dtoda needs laws on (0, ∞)"));
    }
    match (system, &specs[0], specs.get(1)) {
        (System::UdToda, D::ShiftedExp { lambda: l1, .. }, Some(D::ShiftedExp { lambda: l2, .. }))
        | (System::UdToda, D::ShiftedGeomGrid { lambda: l1, .. }, Some(D::ShiftedGeomGrid { lambda: l2, .. }))
        | (System::DToda, D::Gamma { shape: l1, .. }, Some(D::Gamma { shape: l2, .. })) => {
            require(l2 < l1, "the second (E or J) rate must be below the first (Q or I)")
        }
        _ => Ok(()),
    }
}

fn positive_support(s: &DistributionSpec) -> bool {
    matches!(s, D::GigDkdv { .. } | D::Gig { .. } | D::Gamma { .. } | D::InvGamma { .. })
}

/// Random walk `S_0 = 0` with increments `x_1..x_n` from `spec` (alternating
/// for pair families); backgrounds repeat the sample's mean increments.
pub fn build_random_walk(spec: &DistributionSpec, n: usize, seed: u64) -> Result<PathWindow> {
    let increments = spec.sample_n(n, seed)?;
    let mean_of = |parity: i64| -> f64 {
        let xs: Vec<f64> = increments
            .iter()
            .enumerate()
            .filter(|(i, _)| (i + 1) as i64 % 2 == parity)
            .map(|(_, x)| *x)
            .collect();
        xs.iter().sum::<f64>() / xs.len().max(1) as f64
    };
    let bg = if spec.is_pair() {
        Background::new(vec![mean_of(0), mean_of(1)])?
    } else {
        Background::constant(increments.iter().sum::<f64>() / n.max(1) as f64)
    };
    if !(bg.drift() > 0.0) {
        return Err(Error::NotAdmissible(format!("{spec} has non-positive sample drift")));
    }
    PathWindow::from_increments(1, &increments, bg.clone(), bg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> DistributionSpec {
        s.parse().unwrap()
    }

    #[test]
    fn literals_round_trip() {
        for s in [
            "bernoulli(p=0.25)",
            "truncexp(lambda=1,c=0,L=1)",
            "truncgeom(h=0.25,lambda=0.5,k=0,l=8)",
            "gigdkdv(lambda=1,c=1,delta=0.5)",
            "symgrid(lambda=0.7,h=0.5,k=3,half=true)",
            "cosh(lambda=1,a=2)",
            "cosh(lambda=1,a=2,kappa=1)",
            "neg(shiftedexp(lambda=2,c=0.5))",
            "loggammapair(lambda1=1,lambda2=2,a=1)",
            "onesidedexp(lambda1=1,lambda2=2,a=0.5,b=1)",
        ] {
            let spec = parse(s);
            assert_eq!(spec.to_string(), s);
            assert_eq!(parse(&spec.to_string()), spec);
        }
    }

    #[test]
    fn literal_keys_are_case_insensitive() {
        assert_eq!(parse("TruncExp(LAMBDA=1, c=0, l=1)"), parse("truncexp(lambda=1,c=0,L=1)"));
    }

    #[test]
    fn literal_errors() {
        assert!(matches!("truncexp(lambda=1,c=0)".parse::<DistributionSpec>(), Err(Error::Parse(_))));
        assert!(matches!("nope(x=1)".parse::<DistributionSpec>(), Err(Error::Parse(_))));
        assert!(matches!("bernoulli(p=0.2,z=1)".parse::<DistributionSpec>(), Err(Error::Parse(_))));
        assert!(matches!("truncexp(lambda=1,c=0.6,L=1)".parse::<DistributionSpec>(), Err(Error::InvalidParameter(_))));
        assert!("bernoullistep(p=0.1,q=0.2,a=1)".parse::<DistributionSpec>().is_err());
        assert!("onesidedexp(lambda1=2,lambda2=1,a=0)".parse::<DistributionSpec>().is_err());
    }

    #[test]
    fn closed_normalizers() {
        let law = parse("truncexp(lambda=1,c=0,L=1)").law().unwrap();
        assert!((law.log_normalizer() - (1.0 - (-1.0f64).exp()).ln()).abs() < 1e-15);
        let law = parse("gamma(lambda=2.5,c=3)").law().unwrap();
        assert!((law.log_normalizer() - (ln_gamma(2.5) - 2.5 * 3f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn numeric_cdf_is_monotone_and_ends_at_one() {
        let law = parse("cosh(lambda=1,a=2)").law().unwrap();
        let (lo, hi) = law.effective_support().unwrap();
        let xs: Vec<f64> = (0..=50).map(|i| lo + (hi - lo) * i as f64 / 50.0).collect();
        let c = law.cdf_sorted(&xs);
        assert!(c.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        assert!((c[50] - 1.0).abs() < 1e-10);
        assert!((law.cdf(xs[20]) - c[20]).abs() < 1e-10);
    }

    #[test]
    fn bernoulli_step_frequency() {
        let xs = parse("bernoullistep(p=0.25,q=0,a=1)").sample_n(100_000, 3).unwrap();
        let f = xs.iter().filter(|&&x| x == 1.0).count() as f64 / xs.len() as f64;
        assert!((f - 0.25).abs() < 0.005);
    }

    #[test]
    fn udtoda_rate_order_enforced() {
        let q = parse("shiftedexp(lambda=1,c=0)");
        let e = parse("shiftedexp(lambda=2,c=0)");
        assert!(build_iid_config(System::UdToda, &[q.clone(), e.clone()], 10, 1).is_err());
        assert!(build_iid_config(System::UdToda, &[e, q], 10, 1).is_ok());
    }

    #[test]
    fn grid_samples_lie_on_the_grid() {
        let xs = parse("symgrid(lambda=0.7,h=0.5,k=3,half=true)").sample_n(2000, 1).unwrap();
        assert!(xs.iter().all(|x| ((x / 0.5) - 0.5).fract() == 0.0 && x.abs() <= 1.25));
        let xs = parse("truncgeom(h=0.25,lambda=0.5,k=1,l=8)").sample_n(2000, 1).unwrap();
        assert!(xs.iter().all(|x| (x * 4.0).fract() == 0.0 && *x >= 0.25 && *x <= 1.75));
    }

    #[test]
    fn walk_with_no_down_steps_is_nondecreasing() {
        let p = build_random_walk(&parse("bernoullistep(p=0.3,q=0,a=1)"), 1000, 5).unwrap();
        assert!(p.values().windows(2).all(|w| w[1] >= w[0]));
    }
}
