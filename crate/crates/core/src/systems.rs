//! Locally-defined dynamics `(z_{n-m}^{t+1}, w_n^t) = F_n(z_n^t, w_{n-1}^t)`.
//!
//! Toda systems run on the interleaved lattice: sites `2n-1, 2n` hold
//! `(Q_n, E_n)` (or `(I_n, J_n)`), odd carriers are `w_{2n-1} = U_n`, even
//! carriers are the intermediate values of the half-map decomposition, `F_n`
//! is the starred half-map at even `n` and its inverse at odd `n`, and `m = 1`.

use std::fmt::Write as _;

use crate::paths::{System, SystemConfig};
use crate::pitman::{lse2, WINDOW_CAP};
use crate::{Error, Result};

/// Carrier values `w_n` for `n` in `[lo, lo + values.len())`, with `seed`
/// the value `w_{lo-1}` entering from the left.
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierSeq {
    pub lo: i64,
    pub seed: f64,
    pub values: Vec<f64>,
}

impl CarrierSeq {
    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    /// `w_n` for `n` in `[lo - 1, hi]`.
    pub fn value_at(&self, n: i64) -> Option<f64> {
        if n == self.lo - 1 {
            Some(self.seed)
        } else if n >= self.lo && n <= self.hi() {
            Some(self.values[(n - self.lo) as usize])
        } else {
            None
        }
    }

    /// `n -> w_{-n}`; the old right end becomes the new seed.
    pub fn reflect(&self) -> Self {
        let mut all = Vec::with_capacity(self.values.len() + 1);
        all.push(self.seed);
        all.extend_from_slice(&self.values);
        all.reverse();
        Self {
            lo: -self.hi() + 1,
            seed: all[0],
            values: all[1..].to_vec(),
        }
    }
}

/// Box-ball update: `η' = min{1 - η, W}`, `W' = η + W - η'`.
pub fn bbs_map(eta: f64, w: f64) -> (f64, f64) {
    let next = (1.0 - eta).min(w);
    (next, eta + w - next)
}

/// udKdV update with box capacity `l`.
pub fn udkdv_map(l: f64, eta: f64, u: f64) -> (f64, f64) {
    let next = (l - eta).min(u);
    (next, eta + u - next)
}

/// dKdV update, evaluated in log space.
pub fn dkdv_map(delta: f64, omega: f64, u: f64) -> (f64, f64) {
    let (lo, lu) = (omega.ln(), u.ln());
    let next = -lse2(delta.ln() + lo, -lu);
    ((next).exp(), (lu + lo - next).exp())
}

/// Starred udToda half-map `(b, c) -> (min{b,c}, c - b/2 - min{b,c}/2)`.
pub fn udtoda_star(b: f64, c: f64) -> (f64, f64) {
    let m = b.min(c);
    (m, c - b / 2.0 - m / 2.0)
}

pub fn udtoda_star_inv(m: f64, w: f64) -> (f64, f64) {
    if w >= 0.0 {
        (m, m + w)
    } else {
        (m - 2.0 * w, m)
    }
}

/// Starred dToda half-map `(b, c) -> (b + c, c / sqrt(b^2 + bc))`.
pub fn dtoda_star(b: f64, c: f64) -> (f64, f64) {
    let s = b + c;
    (s, c / (b * s).sqrt())
}

pub fn dtoda_star_inv(s: f64, w: f64) -> (f64, f64) {
    let c = s * 2.0 * w / ((w * w + 4.0).sqrt() + w);
    (s - c, c)
}

/// Full udToda step `(Q_{n+1}, E_n, U_n) -> (Q_n', E_n', U_{n+1})`.
pub fn udtoda_full(q_next: f64, e: f64, u: f64) -> (f64, f64, f64) {
    let q = u.min(e);
    (q, q_next + e - q, u + q_next - q)
}

/// Full dToda step `(I_{n+1}, J_n, U_n) -> (I_n', J_n', U_{n+1})`.
pub fn dtoda_full(i_next: f64, j: f64, u: f64) -> (f64, f64, f64) {
    let i = j + u;
    (i, i_next * j / i, i_next * u / i)
}

fn domain(site: i64, value: f64, what: &'static str) -> Error {
    Error::Domain { site, value, what }
}

/// `F_n(z, w)` for the given system at lattice index `n`.
pub fn local_f(system: System, n: i64, z: f64, w: f64) -> Result<(f64, f64)> {
    match system {
        System::Bbs => {
            if z != 0.0 && z != 1.0 {
                return Err(domain(n, z, "box-ball site must be 0 or 1"));
            }
            if !(w >= 0.0 && w.fract() == 0.0) {
                return Err(domain(n, w, "box-ball carrier must be a nonnegative integer"));
            }
            Ok(bbs_map(z, w))
        }
        System::UdKdv { l } => Ok(udkdv_map(l, z, w)),
        System::DKdv { delta } => {
            if !(z > 0.0) {
                return Err(domain(n, z, "dKdV site must be positive"));
            }
            if !(w > 0.0) {
                return Err(domain(n, w, "dKdV carrier must be positive"));
            }
            Ok(dkdv_map(delta, z, w))
        }
        System::UdToda => Ok(if n.rem_euclid(2) == 0 {
            udtoda_star(z, w)
        } else {
            udtoda_star_inv(z, w)
        }),
        System::DToda => {
            if !(z > 0.0) {
                return Err(domain(n, z, "dToda site must be positive"));
            }
            if !(w > 0.0) {
                return Err(domain(n, w, "dToda carrier must be positive"));
            }
            Ok(if n.rem_euclid(2) == 0 {
                dtoda_star(z, w)
            } else {
                dtoda_star_inv(z, w)
            })
        }
    }
}

/// The five canonical maps on `(increment, carrier)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KVariant {
    Z,
    Vee,
    Sum,
    VeeStar,
    SumStar,
}

impl KVariant {
    pub const ALL: [KVariant; 5] = [
        KVariant::Z,
        KVariant::Vee,
        KVariant::Sum,
        KVariant::VeeStar,
        KVariant::SumStar,
    ];

    pub fn for_system(system: System) -> Self {
        match system {
            System::Bbs => KVariant::Z,
            System::UdKdv { .. } => KVariant::Vee,
            System::DKdv { .. } => KVariant::Sum,
            System::UdToda => KVariant::VeeStar,
            System::DToda => KVariant::SumStar,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KVariant::Z => "kz",
            KVariant::Vee => "kvee",
            KVariant::Sum => "ksum",
            KVariant::VeeStar => "kveestar",
            KVariant::SumStar => "ksumstar",
        }
    }
}

pub fn local_k(variant: KVariant, a: f64, b: f64) -> (f64, f64) {
    match variant {
        KVariant::Z => {
            let m = a.min(2.0 * b - 1.0);
            (-m, b - a / 2.0 - m / 2.0)
        }
        KVariant::Vee => {
            let m = a.min(2.0 * b);
            (-m, b - a / 2.0 - m / 2.0)
        }
        KVariant::Sum => {
            let l = lse2(-a / 2.0, -b);
            (2.0 * l, b - a / 2.0 + l)
        }
        KVariant::VeeStar => {
            let m = a.min(b);
            (-m, b - a / 2.0 - m / 2.0)
        }
        KVariant::SumStar => {
            let l = lse2(-a, -b);
            (l, b - a / 2.0 + l / 2.0)
        }
    }
}

/// Inverse of a starred K map.
pub fn local_k_inverse(variant: KVariant, p: f64, q: f64) -> Result<(f64, f64)> {
    match variant {
        KVariant::VeeStar => Ok(if q >= 0.0 {
            (-p, q - p)
        } else {
            (-p - 2.0 * q, -p)
        }),
        KVariant::SumStar => {
            // asinh(e^{-q}/2), rewritten for large e^{-q}
            let h = if q >= 0.0 {
                ((-q).exp() / 2.0).asinh()
            } else {
                -q - std::f64::consts::LN_2 + (1.0 + (1.0 + 4.0 * (2.0 * q).exp()).sqrt()).ln()
            };
            let a = -p + 2.0 * h;
            Ok((a, q - p / 2.0 + a / 2.0))
        }
        other => Err(Error::InvalidParameter(format!(
            "{} has no inverse used by any system",
            other.name()
        ))),
    }
}

/// `K_n` of a system at lattice index `n`.
pub fn k_at(system: System, n: i64, a: f64, b: f64) -> (f64, f64) {
    let v = KVariant::for_system(system);
    if system.is_toda() && n.rem_euclid(2) == 1 {
        local_k_inverse(v, a, b).expect("starred variant")
    } else {
        local_k(v, a, b)
    }
}

/// `K^(1)(a,b) - 2K^(2)(a,b) - (a - 2b)`.
pub fn conservation_residual(variant: KVariant, a: f64, b: f64) -> f64 {
    let (p, q) = local_k(variant, a, b);
    (p - 2.0 * q) - (a - 2.0 * b)
}

/// Carrier value left of the window that the background leaves unchanged:
/// `w_{lo-1}` for KdV-type systems, `U = w_{lo-2}` for Toda systems.
pub fn stationary_seed(config: &SystemConfig) -> f64 {
    stationary_carrier(config.system(), config.background())
}

/// Stationary odd-index (or only) carrier for a background.
pub fn stationary_carrier(system: System, background: &[f64]) -> f64 {
    match system {
        System::Bbs => 0.0,
        System::UdKdv { .. } => background[0],
        System::DKdv { delta } => {
            let w = background[0];
            w / (1.0 - delta * w * w)
        }
        // background = [even, odd] = [E, Q] or [J, I]
        System::UdToda => background[1],
        System::DToda => background[1] - background[0],
    }
}

/// First lattice index processed by a sweep of `config`.
fn sweep_start(config: &SystemConfig) -> i64 {
    if config.system().is_toda() {
        config.lo() - 1
    } else {
        config.lo()
    }
}

fn merged(a: f64, b: f64) -> bool {
    (a - b).abs() <= 64.0 * f64::EPSILON * (1.0 + a.abs() + b.abs())
}

/// One left-to-right pass. `w_seed` is the carrier entering at
/// [`stationary_seed`]'s index. The sweep continues into the right background
/// until the carrier is back at its stationary value, so the returned
/// configuration is exact (up to rounding) on all of `Z`.
pub fn carrier_sweep(config: &SystemConfig, w_seed: f64) -> Result<(SystemConfig, CarrierSeq)> {
    let system = config.system();
    let m = system.shift();
    let w_star = stationary_carrier(system, config.background());
    let start = sweep_start(config);
    let last_site = config.hi().max(start - 1) + m;
    let mut out = Vec::with_capacity(config.sites().len() + 2);
    let mut carrier = Vec::with_capacity(config.sites().len() + 2);
    let mut w = w_seed;
    let mut n = start;
    loop {
        let (z_next, w_next) = local_f(system, n, config.value_at(n), w)?;
        out.push(z_next);
        carrier.push(w_next);
        w = w_next;
        let stationary_slot = !system.is_toda() || n.rem_euclid(2) == 1;
        if n >= last_site && stationary_slot && merged(w, w_star) {
            break;
        }
        if (n - start) as usize > WINDOW_CAP {
            return Err(Error::WindowCap { cap: WINDOW_CAP });
        }
        n += 1;
    }
    let next = SystemConfig::from_parts_unchecked(system, start - m, out, config.background().to_vec());
    Ok((
        trim_background(next),
        CarrierSeq {
            lo: start,
            seed: w_seed,
            values: carrier,
        },
    ))
}

/// Drops leading/trailing sites (whole pairs for Toda) equal to the background.
fn trim_background(config: SystemConfig) -> SystemConfig {
    let step = config.system().period();
    let sites = config.sites();
    let is_bg = |i: usize| sites[i] == config.background_at(config.lo() + i as i64);
    let (mut a, mut b) = (0, sites.len());
    while a + step <= b && (a..a + step).all(is_bg) {
        a += step;
    }
    while b >= a + step && (b - step..b).all(is_bg) {
        b -= step;
    }
    SystemConfig::from_parts_unchecked(
        config.system(),
        config.lo() + a as i64,
        sites[a..b].to_vec(),
        config.background().to_vec(),
    )
}

/// `steps` sweeps, each seeded with the stationary background carrier.
/// Returns `steps + 1` configurations starting with `config`.
pub fn evolve(config: &SystemConfig, steps: usize) -> Result<Vec<SystemConfig>> {
    config.validate()?;
    let seed = stationary_seed(config);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(config.clone());
    for t in 0..steps {
        let (next, _) = carrier_sweep(&out[t], seed).map_err(|e| Error::AtStep {
            step: t,
            source: Box::new(e),
        })?;
        if next.sites().len() > WINDOW_CAP {
            return Err(Error::WindowCap { cap: WINDOW_CAP });
        }
        out.push(next);
    }
    Ok(out)
}

/// CSV of a trajectory over sites `from..=to`: `t,n,value` rows, or
/// `t,n,q,e` rows over pair indices for Toda systems.
pub fn trajectory_csv(trajectory: &[SystemConfig], from: i64, to: i64) -> String {
    let mut out = String::new();
    let Some(first) = trajectory.first() else {
        return out;
    };
    if first.system().is_toda() {
        let (p_from, p_to) = ((from + 1).div_euclid(2), to.div_euclid(2));
        out.push_str("t,n,q,e\n");
        for (t, c) in trajectory.iter().enumerate() {
            for p in p_from..=p_to {
                let _ = writeln!(out, "{t},{p},{},{}", c.value_at(2 * p - 1), c.value_at(2 * p));
            }
        }
    } else {
        out.push_str("t,n,value\n");
        for (t, c) in trajectory.iter().enumerate() {
            for n in from..=to {
                let _ = writeln!(out, "{t},{n},{}", c.value_at(n));
            }
        }
    }
    out
}

/// Box-ball spacetime diagram, one row per time, `'.'` empty and `'o'` ball.
pub fn spacetime_diagram(trajectory: &[SystemConfig], from: i64, to: i64) -> String {
    let mut out = String::new();
    for c in trajectory {
        out.push_str(&c.bbs_glyphs(from, to));
        out.push('\n');
    }
    out
}
