//! Change of variables between system variables and path variables.
//!
//! | system | `A_n(a)`               | `B_n(b)`            | `K_n`                         |
//! |--------|------------------------|---------------------|-------------------------------|
//! | BBS    | `1 - 2a`               | `b`                 | `K^Z`                         |
//! | udKdV  | `L - 2a`               | `b - L/2`           | `K^∨`                         |
//! | dKdV   | `-log δ - 2 log a`     | `log b + log(δ)/2`  | `K^Σ`                         |
//! | udToda | `(-1)^n a`             | `b`                 | `K^∨*` at even, inverse at odd |
//! | dToda  | `(-1)^{n+1} log a`     | `-log b`            | `K^Σ*` at even, inverse at odd |
//!
//! With these, `K_n(A_n(z), B_{n-1}(w)) = (A_{n-m}(z'), B_n(w'))` where
//! `(z'_{n-m}, w_n) = F_n(z_n, w_{n-1})`. The output site is `n - m`, so Toda
//! outputs are encoded with the parity of the site they land on.

use rand::Rng;

use crate::paths::{decode, encode, System, SystemConfig};
use crate::pitman::{carrier_process, transform, OperatorVariant};
use crate::rng;
use crate::systems::{carrier_sweep, k_at, local_f, stationary_seed};
use crate::verify::{SubTest, TestReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableMap {
    system: System,
}

impl VariableMap {
    pub fn new(system: System) -> Self {
        Self { system }
    }

    pub fn system(&self) -> System {
        self.system
    }

    pub fn operator(&self) -> OperatorVariant {
        OperatorVariant::for_system(self.system)
    }

    /// `x = A_n(z)`.
    pub fn site_to_k(&self, n: i64, z: f64) -> Result<f64> {
        let odd = n.rem_euclid(2) == 1;
        match self.system {
            System::Bbs => {
                if z != 0.0 && z != 1.0 {
                    return Err(Error::Domain {
                        site: n,
                        value: z,
                        what: "box-ball site must be 0 or 1",
                    });
                }
                Ok(1.0 - 2.0 * z)
            }
            System::UdKdv { l } => Ok(l - 2.0 * z),
            System::DKdv { delta } => Ok(-delta.ln() - 2.0 * positive_ln(n, z)?),
            System::UdToda => Ok(if odd { -z } else { z }),
            System::DToda => {
                let lz = positive_ln(n, z)?;
                Ok(if odd { lz } else { -lz })
            }
        }
    }

    /// `z = A_n^{-1}(x)`.
    pub fn site_from_k(&self, n: i64, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::BadIncrement { index: n, value: x });
        }
        let odd = n.rem_euclid(2) == 1;
        Ok(match self.system {
            System::Bbs => {
                if x == 1.0 {
                    0.0
                } else if x == -1.0 {
                    1.0
                } else {
                    return Err(Error::BadIncrement { index: n, value: x });
                }
            }
            System::UdKdv { l } => (l - x) / 2.0,
            System::DKdv { delta } => ((-x - delta.ln()) / 2.0).exp(),
            System::UdToda => {
                if odd {
                    -x
                } else {
                    x
                }
            }
            System::DToda => {
                if odd {
                    x.exp()
                } else {
                    (-x).exp()
                }
            }
        })
    }

    /// `u = B_n(w)`.
    pub fn carrier_to_k(&self, n: i64, w: f64) -> Result<f64> {
        match self.system {
            System::Bbs | System::UdToda => Ok(w),
            System::UdKdv { l } => Ok(w - l / 2.0),
            System::DKdv { delta } => Ok(positive_ln(n, w)? + delta.ln() / 2.0),
            System::DToda => Ok(-positive_ln(n, w)?),
        }
    }

    /// `w = B_n^{-1}(u)`.
    pub fn carrier_from_k(&self, _n: i64, u: f64) -> Result<f64> {
        Ok(match self.system {
            System::Bbs | System::UdToda => u,
            System::UdKdv { l } => u + l / 2.0,
            System::DKdv { delta } => (u - delta.ln() / 2.0).exp(),
            System::DToda => (-u).exp(),
        })
    }
}

fn positive_ln(n: i64, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v.ln())
    } else {
        Err(Error::Domain {
            site: n,
            value: v,
            what: "logarithmic change of variables needs a positive value",
        })
    }
}

/// A random point of the local map's domain.
fn random_local_input<R: Rng>(system: System, rng: &mut R) -> (f64, f64) {
    let log_uniform = |rng: &mut R| rng.gen_range(-3.0f64..3.0).exp();
    match system {
        System::Bbs => (rng.gen_range(0..2) as f64, rng.gen_range(0..20) as f64),
        System::UdKdv { l } => (
            rng.gen_range(-l..2.0 * l),
            rng.gen_range(-l..2.0 * l),
        ),
        System::UdToda => (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
        System::DKdv { .. } | System::DToda => (log_uniform(rng), log_uniform(rng)),
    }
}

/// Checks `K_n = (A_n x B_n) F_n (A_n x B_{n-1})^{-1}` and the conservation
/// law `A_{n-m}(z') - 2B_n(w') = A_n(z) - 2B_{n-1}(w)` on random inputs.
pub fn conjugacy_check(system: System, n_samples: usize, seed: u64, tol: f64) -> Result<TestReport> {
    system.validate()?;
    let map = VariableMap::new(system);
    let m = system.shift();
    let mut rng = rng::stream(seed, 0);
    let (mut conj, mut cons) = (0.0f64, 0.0f64);
    for i in 0..n_samples {
        let n = i as i64 % 4 - 1;
        let (z, w) = random_local_input(system, &mut rng);
        let (z2, w2) = local_f(system, n, z, w)?;
        let (a, b) = (map.site_to_k(n, z)?, map.carrier_to_k(n - 1, w)?);
        let (p, q) = k_at(system, n, a, b);
        let (p2, q2) = (map.site_to_k(n - m, z2)?, map.carrier_to_k(n, w2)?);
        conj = conj.max((p - p2).abs()).max((q - q2).abs());
        cons = cons.max(((p2 - 2.0 * q2) - (a - 2.0 * b)).abs());
    }
    let mut report = TestReport::new("conjugacy", system.name(), n_samples, seed);
    report.push(SubTest::at_most("conjugacy max residual", conj, tol));
    report.push(SubTest::at_most("conservation max residual", cons, tol));
    Ok(report)
}

/// First disagreement found by [`equivalence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub step: usize,
    pub site: i64,
    pub sweep: f64,
    pub transform: f64,
}

/// Largest site-wise difference between sweep and transform evolution, and
/// between the sweep carrier and `M*(S) - S` in path variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence {
    pub max_site_error: f64,
    pub max_carrier_error: f64,
    pub first_mismatch: Option<Mismatch>,
}

/// Evolves `config` `t_steps` times by carrier sweeps and by the path
/// transform, comparing after every step.
pub fn equivalence(config: &SystemConfig, t_steps: usize, tol: f64) -> Result<Equivalence> {
    config.validate()?;
    let system = config.system();
    let map = VariableMap::new(system);
    let variant = map.operator();
    let seed = stationary_seed(config);
    let mut swept = config.clone();
    let mut path = encode(config)?;
    let mut out = Equivalence {
        max_site_error: 0.0,
        max_carrier_error: 0.0,
        first_mismatch: None,
    };
    for step in 1..=t_steps {
        let (next, carrier) = carrier_sweep(&swept, seed)?;
        let sweep_carrier_lo = carrier.lo;
        let path_carrier = carrier_process(&path, variant, None)?;
        for (i, &w) in carrier.values.iter().enumerate() {
            let n = sweep_carrier_lo + i as i64;
            if let Some(u) = path_carrier.value_at(n) {
                let d = (map.carrier_to_k(n, w)? - u).abs();
                out.max_carrier_error = out.max_carrier_error.max(d);
            }
        }
        path = transform(&path, variant)?;
        let decoded = decode(&path, system)?;
        let lo = next.lo().min(decoded.lo());
        let hi = next.hi().max(decoded.hi());
        for n in lo..=hi {
            let (a, b) = (next.value_at(n), decoded.value_at(n));
            let d = (a - b).abs();
            if d > out.max_site_error {
                out.max_site_error = d;
            }
            if d > tol && out.first_mismatch.is_none() {
                out.first_mismatch = Some(Mismatch {
                    step,
                    site: n,
                    sweep: a,
                    transform: b,
                });
            }
        }
        swept = next;
    }
    Ok(out)
}

/// Report form of [`equivalence`].
pub fn equivalence_check(config: &SystemConfig, t_steps: usize, tol: f64) -> Result<TestReport> {
    let eq = equivalence(config, t_steps, tol)?;
    let mut report = TestReport::new("equivalence", config.system().name(), config.sites().len(), 0);
    report.push(SubTest::at_most("max site difference", eq.max_site_error, tol));
    report.push(SubTest::at_most("max carrier difference", eq.max_carrier_error, tol.max(1e-9)));
    report.note(format!("steps={t_steps}"));
    if let Some(m) = eq.first_mismatch {
        report.note(format!(
            "first mismatch at step {} site {}: sweep {} vs transform {}",
            m.step, m.site, m.sweep, m.transform
        ));
    }
    Ok(report)
}

/// Default system parameters used by random equivalence runs.
pub fn default_system(name: &str) -> Result<System> {
    System::from_name(name, Some(2.0), Some(0.5))
}

/// Random configuration of `sites` sites (pairs count as two) in a fixed
/// admissible background. Values of the piecewise-linear systems lie on the
/// grid `Z/64` so both pipelines are exact in floating point.
pub fn random_config<R: Rng>(system: System, sites: usize, rng: &mut R) -> Result<SystemConfig> {
    let grid = |rng: &mut R, lo: f64, hi: f64| {
        let k = rng.gen_range((lo * 64.0) as i64..=(hi * 64.0) as i64);
        k as f64 / 64.0
    };
    match system {
        System::Bbs => {
            let bits: Vec<u8> = (0..sites).map(|_| rng.gen_bool(0.35) as u8).collect();
            SystemConfig::bbs(1, &bits)
        }
        System::UdKdv { l } => {
            let values = (0..sites).map(|_| grid(rng, -0.25 * l, 1.25 * l)).collect();
            SystemConfig::kdv(system, 1, values, (l / 4.0 * 64.0).floor() / 64.0)
        }
        System::DKdv { delta } => {
            let bg = 0.5 / delta.sqrt();
            let values = (0..sites).map(|_| bg * rng.gen_range(0.3..2.0)).collect();
            SystemConfig::kdv(system, 1, values, bg)
        }
        System::UdToda => {
            let pairs: Vec<_> = (0..sites / 2)
                .map(|_| (grid(rng, 0.0, 3.0), grid(rng, 0.0, 3.0)))
                .collect();
            SystemConfig::toda(system, 1, &pairs, (0.5, 1.5))
        }
        System::DToda => {
            let pairs: Vec<_> = (0..sites / 2)
                .map(|_| (rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0)))
                .collect();
            SystemConfig::toda(system, 1, &pairs, (2.0, 1.0))
        }
    }
}
