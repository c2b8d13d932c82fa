//! Two-sided paths on finite windows and the path encoding of configurations.
//!
//! A [`PathWindow`] stores `S_n` exactly on `[lo, hi]` and describes the rest
//! of `Z` by periodic background increments on each side. Increment patterns
//! are anchored to the absolute lattice index (`increment(n)` depends on
//! `n mod period`), which keeps the alternating Toda encodings unambiguous
//! under shifts and reflections.

use std::fmt::Write as _;

use crate::covariables::VariableMap;
use crate::{Error, Result};

/// Periodic increment pattern used outside a window.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    increments: Vec<f64>,
}

impl Background {
    /// `increments[k]` is the increment at every index `n` with
    /// `n mod period == k`.
    pub fn new(increments: Vec<f64>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::InvalidParameter("empty background pattern".into()));
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite background increment".into()));
        }
        Ok(Self { increments })
    }

    pub fn constant(x: f64) -> Self {
        Self {
            increments: vec![x],
        }
    }

    pub fn period(&self) -> usize {
        self.increments.len()
    }

    pub fn pattern(&self) -> &[f64] {
        &self.increments
    }

    pub fn increment(&self, n: i64) -> f64 {
        self.increments[n.rem_euclid(self.period() as i64) as usize]
    }

    /// Ascent over one period.
    pub fn drift(&self) -> f64 {
        self.increments.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.drift() / self.period() as f64
    }

    /// Pattern of `n -> increment(n + k)`.
    pub fn shifted(&self, k: i64) -> Self {
        let p = self.period() as i64;
        Self {
            increments: (0..p).map(|j| self.increment(j + k)).collect(),
        }
    }

    /// Pattern of `n -> increment(1 - n)`, the increments of `-S_{-n}`.
    pub fn reflected(&self) -> Self {
        let p = self.period() as i64;
        Self {
            increments: (0..p).map(|j| self.increment(1 - j)).collect(),
        }
    }

    /// Same increments with a period that is a multiple of `period`.
    pub fn with_period_multiple_of(&self, period: usize) -> Self {
        let p = self.period();
        if p % period == 0 {
            return self.clone();
        }
        let q = lcm(p, period);
        Self {
            increments: (0..q as i64).map(|j| self.increment(j)).collect(),
        }
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMode {
    /// Window values plus independent left and right backgrounds.
    FinitePerturbation,
    /// The window `[0, P]` is exactly one period of the increment pattern.
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathWindow {
    lo: i64,
    values: Vec<f64>,
    left: Background,
    right: Background,
    mode: PathMode,
}

impl PathWindow {
    pub fn new(lo: i64, values: Vec<f64>, left: Background, right: Background) -> Result<Self> {
        let hi = lo + values.len() as i64 - 1;
        if values.is_empty() || lo > 0 || hi < 0 {
            return Err(Error::Misaligned(format!(
                "window [{lo}, {hi}] must contain the origin"
            )));
        }
        if values[(-lo) as usize] != 0.0 {
            return Err(Error::InvalidParameter("S_0 must be 0".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite path value".into()));
        }
        Ok(Self {
            lo,
            values,
            left,
            right,
            mode: PathMode::FinitePerturbation,
        })
    }

    /// Path with `S_0 = 0` and `S_n - S_{n-1} = increments[n - first]` on the
    /// window `[first - 1, first - 1 + len]`, which must contain 0.
    pub fn from_increments(
        first: i64,
        increments: &[f64],
        left: Background,
        right: Background,
    ) -> Result<Self> {
        let lo = first - 1;
        let hi = lo + increments.len() as i64;
        if lo > 0 || hi < 0 {
            return Err(Error::Misaligned(format!(
                "increments on ({lo}, {hi}] do not reach the origin"
            )));
        }
        let mut values = Vec::with_capacity(increments.len() + 1);
        values.push(0.0);
        for x in increments {
            let last = *values.last().unwrap();
            values.push(last + x);
        }
        // re-anchor so that S_0 = 0 exactly
        let base = values[(-lo) as usize];
        if base != 0.0 {
            let anchor = (-lo) as usize;
            let mut anchored = vec![0.0; values.len()];
            for i in (anchor + 1)..values.len() {
                anchored[i] = anchored[i - 1] + increments[i - 1];
            }
            for i in (0..anchor).rev() {
                anchored[i] = anchored[i + 1] - increments[i];
            }
            values = anchored;
        }
        Self::new(lo, values, left, right)
    }

    /// Fully periodic path whose increment at index `n` is
    /// `increments[(n - 1) mod P]`; stored on the window `[0, P]`.
    pub fn periodic(increments: &[f64]) -> Result<Self> {
        let p = increments.len() as i64;
        if p == 0 {
            return Err(Error::InvalidParameter("empty period".into()));
        }
        let pattern = (0..p)
            .map(|k| increments[(k - 1).rem_euclid(p) as usize])
            .collect();
        Self::periodic_from_background(&Background::new(pattern)?)
    }

    pub(crate) fn periodic_from_background(bg: &Background) -> Result<Self> {
        let p = bg.period() as i64;
        let mut values = vec![0.0];
        for n in 1..=p {
            values.push(values[(n - 1) as usize] + bg.increment(n));
        }
        Ok(Self {
            lo: 0,
            values,
            left: bg.clone(),
            right: bg.clone(),
            mode: PathMode::Periodic,
        })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left(&self) -> &Background {
        &self.left
    }

    pub fn right(&self) -> &Background {
        &self.right
    }

    pub fn mode(&self) -> PathMode {
        self.mode
    }

    /// `S_n` for any `n`, extrapolating with the backgrounds.
    pub fn value(&self, n: i64) -> f64 {
        let (lo, hi) = (self.lo, self.hi());
        if n < lo {
            let mut s = self.values[0];
            for k in ((n + 1)..=lo).rev() {
                s -= self.left.increment(k);
            }
            s
        } else if n > hi {
            let mut s = *self.values.last().unwrap();
            for k in (hi + 1)..=n {
                s += self.right.increment(k);
            }
            s
        } else {
            self.values[(n - lo) as usize]
        }
    }

    pub fn increment(&self, n: i64) -> f64 {
        let (lo, hi) = (self.lo, self.hi());
        if n <= lo {
            self.left.increment(n)
        } else if n > hi {
            self.right.increment(n)
        } else {
            self.values[(n - lo) as usize] - self.values[(n - lo - 1) as usize]
        }
    }

    /// Increments on `(lo, hi]`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// The same path stored on a window covering `[lo, hi]`.
    pub fn extended(&self, lo: i64, hi: i64) -> Self {
        let new_lo = lo.min(self.lo);
        let new_hi = hi.max(self.hi());
        if new_lo == self.lo && new_hi == self.hi() {
            return self.clone();
        }
        let mut values = Vec::with_capacity((new_hi - new_lo + 1) as usize);
        let mut left_part = Vec::new();
        let mut s = self.values[0];
        for k in ((new_lo + 1)..=self.lo).rev() {
            s -= self.left.increment(k);
            left_part.push(s);
        }
        values.extend(left_part.into_iter().rev());
        values.extend_from_slice(&self.values);
        let mut s = *self.values.last().unwrap();
        for k in (self.hi() + 1)..=new_hi {
            s += self.right.increment(k);
            values.push(s);
        }
        Self {
            lo: new_lo,
            values,
            left: self.left.clone(),
            right: self.right.clone(),
            mode: PathMode::FinitePerturbation,
        }
    }

    /// `n -> S_{n+k} - S_k`.
    pub fn shift(&self, k: i64) -> Self {
        if self.mode == PathMode::Periodic {
            return Self::periodic_from_background(&self.left.shifted(k))
                .expect("shifted pattern is non-empty");
        }
        let ext = self.extended(k, k);
        let base = ext.value(k);
        let values = ext.values.iter().map(|s| s - base).collect();
        Self {
            lo: ext.lo - k,
            values,
            left: ext.left.shifted(k),
            right: ext.right.shifted(k),
            mode: PathMode::FinitePerturbation,
        }
    }

    /// `n -> -S_{-n}`.
    pub fn reflect(&self) -> Self {
        let values = self
            .values
            .iter()
            .rev()
            .map(|s| if *s == 0.0 { 0.0 } else { -s })
            .collect();
        let out = Self {
            lo: -self.hi(),
            values,
            left: self.right.reflected(),
            right: self.left.reflected(),
            mode: PathMode::FinitePerturbation,
        };
        if self.mode == PathMode::Periodic {
            // one period of the reflected pattern, re-windowed onto [0, P]
            return Self::periodic_from_background(&out.left).expect("non-empty pattern");
        }
        out
    }

    /// Both asymptotic slopes exist and are strictly positive.
    pub fn check_slin(&self) -> bool {
        self.left.drift() > 0.0 && self.right.drift() > 0.0
    }

    /// One header line of `key=value` pairs, then `n,S_n` rows.
    pub fn to_csv(&self) -> String {
        let mode = match self.mode {
            PathMode::FinitePerturbation => "finite",
            PathMode::Periodic => "periodic",
        };
        let mut out = format!(
            "# n_lo={} n_hi={} mode={} left_bg={} right_bg={}\n",
            self.lo,
            self.hi(),
            mode,
            join_pattern(&self.left),
            join_pattern(&self.right)
        );
        out.push_str("n,S\n");
        for (i, s) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.lo + i as i64, s);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Parse("missing '#' header line".into()))?;
        let mut fields = std::collections::HashMap::new();
        for kv in header.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field '{kv}'")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::Parse(format!("header lacks '{k}'")))
        };
        let lo: i64 = parse_num(get("n_lo")?)?;
        let hi: i64 = parse_num(get("n_hi")?)?;
        let left = Background::new(parse_pattern(get("left_bg")?)?)?;
        let right = Background::new(parse_pattern(get("right_bg")?)?)?;
        let mode = match get("mode")? {
            "finite" => PathMode::FinitePerturbation,
            "periodic" => PathMode::Periodic,
            other => return Err(Error::Parse(format!("unknown mode '{other}'"))),
        };
        let mut values = Vec::new();
        for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            if i == 0 && line.trim() == "n,S" {
                continue;
            }
            let (n, s) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad row '{line}'")))?;
            let n: i64 = parse_num(n.trim())?;
            if n != lo + values.len() as i64 {
                return Err(Error::Parse(format!("row index {n} out of sequence")));
            }
            values.push(parse_num::<f64>(s.trim())?);
        }
        if lo + values.len() as i64 - 1 != hi {
            return Err(Error::Parse("row count does not match window".into()));
        }
        let mut path = Self::new(lo, values, left, right)?;
        path.mode = mode;
        Ok(path)
    }
}

fn join_pattern(bg: &Background) -> String {
    bg.pattern()
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_pattern(s: &str) -> Result<Vec<f64>> {
    s.split(';').map(parse_num::<f64>).collect()
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("cannot parse number '{s}'")))
}

/// The five supported lattice systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum System {
    Bbs,
    /// Box capacity `l`.
    UdKdv { l: f64 },
    DKdv { delta: f64 },
    UdToda,
    DToda,
}

impl System {
    pub fn name(&self) -> &'static str {
        match self {
            System::Bbs => "bbs",
            System::UdKdv { .. } => "udkdv",
            System::DKdv { .. } => "dkdv",
            System::UdToda => "udtoda",
            System::DToda => "dtoda",
        }
    }

    pub fn is_toda(&self) -> bool {
        matches!(self, System::UdToda | System::DToda)
    }

    /// Spatial shift `m` in `(z_{n-m}^{t+1}, w_n^t) = F_n(z_n^t, w_{n-1}^t)`.
    pub fn shift(&self) -> i64 {
        if self.is_toda() {
            1
        } else {
            0
        }
    }

    /// Period of the lattice maps and of admissible backgrounds.
    pub fn period(&self) -> usize {
        if self.is_toda() {
            2
        } else {
            1
        }
    }

    pub fn from_name(name: &str, l: Option<f64>, delta: Option<f64>) -> Result<Self> {
        let system = match name.to_ascii_lowercase().as_str() {
            "bbs" => System::Bbs,
            "udkdv" => System::UdKdv {
                l: l.ok_or_else(|| Error::InvalidParameter("udkdv needs L".into()))?,
            },
            "dkdv" => System::DKdv {
                delta: delta.ok_or_else(|| Error::InvalidParameter("dkdv needs delta".into()))?,
            },
            "udtoda" => System::UdToda,
            "dtoda" => System::DToda,
            other => return Err(Error::Parse(format!("unknown system '{other}'"))),
        };
        system.validate()?;
        Ok(system)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            System::UdKdv { l } if !l.is_finite() => {
                Err(Error::InvalidParameter(format!("L = {l} must be finite")))
            }
            System::DKdv { delta } if !(delta > 0.0 && delta.is_finite()) => {
                Err(Error::InvalidParameter(format!("delta = {delta} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Configuration of one system: site values on `[lo, hi]` plus a periodic
/// background elsewhere. Toda systems interleave their two variables,
/// `z_{2n-1} = Q_n` (or `I_n`) and `z_{2n} = E_n` (or `J_n`).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    system: System,
    lo: i64,
    sites: Vec<f64>,
    background: Vec<f64>,
}

impl SystemConfig {
    /// `background[k]` is the value at every lattice index `n` with
    /// `n mod period == k`.
    pub fn new(system: System, lo: i64, sites: Vec<f64>, background: Vec<f64>) -> Result<Self> {
        system.validate()?;
        let config = Self {
            system,
            lo,
            sites,
            background,
        };
        config.validate()?;
        Ok(config)
    }

    /// Box-ball configuration with balls given as bits starting at site `lo`,
    /// empty background.
    pub fn bbs(lo: i64, bits: &[u8]) -> Result<Self> {
        Self::new(
            System::Bbs,
            lo,
            bits.iter().map(|&b| b as f64).collect(),
            vec![0.0],
        )
    }

    /// Parses `"110100"` (or `"oo.o.."`) into sites `1..=len`.
    pub fn bbs_from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '1' | 'o' => Ok(1u8),
                '0' | '.' => Ok(0u8),
                other => Err(Error::Parse(format!("unexpected box-ball glyph '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::bbs(1, &bits)
    }

    /// Scalar configuration for the KdV-type systems.
    pub fn kdv(system: System, lo: i64, values: Vec<f64>, background: f64) -> Result<Self> {
        if system.is_toda() {
            return Err(Error::InvalidParameter(
                "use SystemConfig::toda for Toda systems".into(),
            ));
        }
        Self::new(system, lo, values, vec![background])
    }

    /// Toda configuration from `(Q_n, E_n)` (or `(I_n, J_n)`) pairs for
    /// `n = first_pair, first_pair + 1, ...`; background pair likewise.
    pub fn toda(
        system: System,
        first_pair: i64,
        pairs: &[(f64, f64)],
        background: (f64, f64),
    ) -> Result<Self> {
        if !system.is_toda() {
            return Err(Error::InvalidParameter("not a Toda system".into()));
        }
        let sites = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        Self::new(
            system,
            2 * first_pair - 1,
            sites,
            vec![background.1, background.0],
        )
    }

    pub fn system(&self) -> System {
        self.system
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Last site of the window (`lo - 1` when empty).
    pub fn hi(&self) -> i64 {
        self.lo + self.sites.len() as i64 - 1
    }

    pub fn sites(&self) -> &[f64] {
        &self.sites
    }

    pub fn background(&self) -> &[f64] {
        &self.background
    }

    pub fn background_at(&self, n: i64) -> f64 {
        self.background[n.rem_euclid(self.background.len() as i64) as usize]
    }

    pub fn value_at(&self, n: i64) -> f64 {
        if n >= self.lo && n <= self.hi() {
            self.sites[(n - self.lo) as usize]
        } else {
            self.background_at(n)
        }
    }

    /// Pairs `(Q_n, E_n)` for Toda systems, starting at [`Self::first_pair`].
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.sites.chunks(2).map(|c| (c[0], c[1])).collect()
    }

    pub fn first_pair(&self) -> i64 {
        (self.lo + 1) / 2
    }

    /// `'.'`/`'o'` rendering of sites `from..=to` (box-ball only meaningful).
    pub fn bbs_glyphs(&self, from: i64, to: i64) -> String {
        (from..=to)
            .map(|n| if self.value_at(n) == 1.0 { 'o' } else { '.' })
            .collect()
    }

    /// `'0'`/`'1'` rendering of sites `from..=to`.
    pub fn bbs_string(&self, from: i64, to: i64) -> String {
        (from..=to)
            .map(|n| if self.value_at(n) == 1.0 { '1' } else { '0' })
            .collect()
    }

    /// Same configuration stored on a window covering `[lo, hi]`.
    pub fn with_window(&self, lo: i64, hi: i64) -> Self {
        let (mut lo, mut hi) = (lo.min(self.lo), hi.max(self.hi()));
        if self.system.is_toda() {
            if lo.rem_euclid(2) == 0 {
                lo -= 1;
            }
            if hi.rem_euclid(2) == 1 {
                hi += 1;
            }
        }
        Self {
            system: self.system,
            lo,
            sites: (lo..=hi).map(|n| self.value_at(n)).collect(),
            background: self.background.clone(),
        }
    }

    pub(crate) fn from_parts_unchecked(
        system: System,
        lo: i64,
        sites: Vec<f64>,
        background: Vec<f64>,
    ) -> Self {
        Self {
            system,
            lo,
            sites,
            background,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let period = self.system.period();
        if self.background.len() != period {
            return Err(Error::InvalidParameter(format!(
                "{} background needs {period} value(s)",
                self.system.name()
            )));
        }
        if self.system.is_toda()
            && (self.lo.rem_euclid(2) != 1 || self.sites.len() % 2 != 0)
        {
            return Err(Error::Misaligned(format!(
                "Toda window must start at an odd site and hold whole pairs (lo = {}, len = {})",
                self.lo,
                self.sites.len()
            )));
        }
        let check = |n: i64, v: f64| -> Result<()> {
            let ok = match self.system {
                System::Bbs => v == 0.0 || v == 1.0,
                System::UdKdv { .. } | System::UdToda => v.is_finite(),
                System::DKdv { .. } | System::DToda => v > 0.0 && v.is_finite(),
            };
            if ok {
                Ok(())
            } else {
                Err(Error::Domain {
                    site: n,
                    value: v,
                    what: "site value outside the system's state space",
                })
            }
        };
        for (i, &v) in self.sites.iter().enumerate() {
            check(self.lo + i as i64, v)?;
        }
        for (k, &v) in self.background.iter().enumerate() {
            check(k as i64, v)?;
        }
        let map = VariableMap::new(self.system);
        let drift: f64 = (0..period as i64)
            .map(|k| map.site_to_k(k, self.background_at(k)))
            .sum::<Result<f64>>()?;
        if !(drift > 0.0) {
            return Err(Error::NotAdmissible(format!(
                "{} background {:?} has non-positive drift {drift}",
                self.system.name(),
                self.background
            )));
        }
        Ok(())
    }
}

/// Path encoding: `S_0 = 0`, `S_n - S_{n-1} = A_n(z_n)`.
pub fn encode(config: &SystemConfig) -> Result<PathWindow> {
    let map = VariableMap::new(config.system());
    let lo = (config.lo() - 1).min(0);
    let hi = config.hi().max(0);
    let increments = ((lo + 1)..=hi)
        .map(|n| map.site_to_k(n, config.value_at(n)))
        .collect::<Result<Vec<_>>>()?;
    let pattern = (0..config.system().period() as i64)
        .map(|k| map.site_to_k(k, config.background_at(k)))
        .collect::<Result<Vec<_>>>()?;
    let bg = Background::new(pattern)?;
    PathWindow::from_increments(lo + 1, &increments, bg.clone(), bg)
}

/// Inverse of [`encode`]: reads sites `(lo, hi]` back through `A_n^{-1}`.
pub fn decode(path: &PathWindow, system: System) -> Result<SystemConfig> {
    system.validate()?;
    let map = VariableMap::new(system);
    let period = system.period();
    let mut path = path.clone();
    if system.is_toda() {
        // sites must start at an odd index and hold whole pairs
        let lo = if path.lo().rem_euclid(2) == 0 {
            path.lo()
        } else {
            path.lo() - 1
        };
        let hi = if path.hi().rem_euclid(2) == 0 {
            path.hi()
        } else {
            path.hi() + 1
        };
        path = path.extended(lo, hi);
    }
    let sites = ((path.lo() + 1)..=path.hi())
        .map(|n| map.site_from_k(n, path.increment(n)))
        .collect::<Result<Vec<_>>>()?;
    let left = path.left().with_period_multiple_of(period);
    let right = path.right().with_period_multiple_of(period);
    let background = (0..period as i64)
        .map(|k| {
            let a = map.site_from_k(k, left.increment(k))?;
            let b = map.site_from_k(k, right.increment(k))?;
            if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                return Err(Error::NotAdmissible(format!(
                    "left and right backgrounds decode differently ({a} vs {b})"
                )));
            }
            Ok(a)
        })
        .collect::<Result<Vec<_>>>()?;
    if left.period() > period
        && (0..left.period() as i64).any(|k| left.increment(k) != left.increment(k + period as i64))
    {
        return Err(Error::NotAdmissible(
            "background period incompatible with the system".into(),
        ));
    }
    SystemConfig::new(system, path.lo() + 1, sites, background)
}
