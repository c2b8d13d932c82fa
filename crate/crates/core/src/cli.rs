//! Command-line interface: `simulate`, `equiv`, `verify` and `sample`.
//!
//! Exit codes: 0 success, 1 a verification outcome other than expected,
//! 2 a malformed command line, suite or law literal, 3 a domain error while
//! running (the message names the step and site).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::covariables::{default_system, equivalence, random_config};
use crate::measures::{build_iid_config, DistributionSpec};
use crate::paths::{System, SystemConfig};
use crate::rng::{self, DEFAULT_SEED};
use crate::systems::{evolve, spacetime_diagram, trajectory_csv};
use crate::verify::{parse_suite, run_suite, SubTest, TestReport, INVARIANCE_CORE};
use crate::{Error, Result};

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "SOLITONLAB_SEED";

const GRAMMAR: &str = "\
Distribution literals: family(key=value,...), keys case-insensitive; neg(<literal>) negates.
  bernoulli(p)                      geometric(r)                 exponential(rate)
  truncexp(lambda,c,L)              truncgeom(h,lambda,k,l)      gigdkdv(lambda,c,delta)
  gig(p,a,b)                        shiftedexp(lambda,c)         shiftedgeom(lambda,h,k)
  gamma(lambda,c)                   invgamma(shape,scale)        loggamma(shape,rate)
  loginvgamma(shape,scale)          bernoullistep(p,q,a[,b])     truncexpsym(lambda,a[,b])
  symgrid(lambda,h,k,half)          cosh(lambda,a[,kappa])       onesidedexp(lambda1,lambda2,a[,b])
  onesidedgeom(lambda1,lambda2,h,k) loggammapair(lambda1,lambda2,a[,b])
Optional keys default to b=a, kappa=2.

Exit codes: 0 ok, 1 unexpected verification outcome, 2 parse error, 3 domain error.
The seed defaults to $SOLITONLAB_SEED, then to 20210521.";

#[derive(Debug, Parser)]
#[command(
    name = "solitonlab",
    version,
    about = "Box-ball, KdV-type and Toda-type lattice dynamics via carriers and path transforms",
    after_help = GRAMMAR
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a configuration and write its trajectory.
    Simulate(SimulateArgs),
    /// Compare carrier-sweep and path-transform evolution on random configurations.
    Equiv(EquivArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Write samples of a distribution literal, one per line.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// bbs, udkdv, dkdv, udtoda or dtoda.
    #[arg(long)]
    pub system: String,
    /// Box capacity of udKdV [default: 2].
    #[arg(long = "L")]
    pub l: Option<f64>,
    /// Parameter δ of dKdV [default: 0.5].
    #[arg(long)]
    pub delta: Option<f64>,
}

impl SystemArgs {
    fn system(&self) -> Result<System> {
        System::from_name(&self.system, self.l.or(Some(2.0)), self.delta.or(Some(0.5)))
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Initial sites starting at site 1: a 0/1 string for bbs, otherwise
    /// comma-separated values (alternating Q,E or I,J for Toda).
    #[arg(long, conflicts_with = "init_spec")]
    pub init: Option<String>,
    /// Law of i.i.d. initial sites (the Q or I law for Toda).
    #[arg(long)]
    pub init_spec: Option<String>,
    /// Law of the E or J sites for Toda.
    #[arg(long)]
    pub init_spec2: Option<String>,
    /// Number of random sites (pairs for Toda).
    #[arg(long, default_value_t = 100)]
    pub sites: usize,
    /// Background value(s) for --init, comma-separated (Q,E or I,J for Toda)
    /// [default: 0 for bbs, otherwise the typical initial value].
    #[arg(long)]
    pub background: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extra sites shown right of the initial window.
    #[arg(long, default_value_t = 0)]
    pub pad: i64,
    /// Write a '.'/'o' spacetime diagram (bbs only) instead of CSV.
    #[arg(long)]
    pub diagram: bool,
    /// Output file [default: standard output].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EquivArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Number of random configurations.
    #[arg(long, default_value_t = 100)]
    pub random: usize,
    /// Sites per configuration.
    #[arg(long, default_value_t = 50)]
    pub sites: usize,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite file, or the bundled suite `invariance-core`.
    pub suite: String,
    /// Write a CSV summary, one row per sub-test.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Distribution literal.
    pub law: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flag, then `SOLITONLAB_SEED`, then [`DEFAULT_SEED`].
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Parse(_) | Error::InvalidParameter(_) => 2,
        _ => 3,
    }
}

/// Writes through a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(out: &mut dyn Write, path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, content),
        None => Ok(out.write_all(content.as_bytes())?),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                2
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    let result = match &config.command {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Equiv(a) => cmd_equiv(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Sample(a) => cmd_sample(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("'{t}' is not a number"))))
        .collect()
}

fn initial_config(a: &SimulateArgs, system: System) -> Result<SystemConfig> {
    if let Some(spec) = &a.init_spec {
        let mut laws = vec![spec.parse::<DistributionSpec>()?];
        if system.is_toda() {
            let second = a
                .init_spec2
                .as_ref()
                .ok_or_else(|| Error::Parse("toda systems need --init-spec2 for the E or J sites".into()))?;
            laws.push(second.parse()?);
        }
        let sites = if system.is_toda() { 2 * a.sites } else { a.sites };
        return build_iid_config(system, &laws, sites, resolve_seed(a.seed)?);
    }
    let init = a.init.as_deref().unwrap_or("");
    if system == System::Bbs {
        let config = SystemConfig::bbs_from_str(init)?;
        return match &a.background {
            Some(b) if parse_list(b)? != [0.0] => Err(Error::Parse("bbs background must be 0".into())),
            _ => Ok(config),
        };
    }
    let values = parse_list(init)?;
    if values.is_empty() {
        return Err(Error::Parse(format!("{} needs --init values or --init-spec", system.name())));
    }
    match &a.background {
        None => crate::measures::config_from_values(system, values),
        Some(b) => {
            let bg = parse_list(b)?;
            if system.is_toda() {
                if bg.len() != 2 || values.len() % 2 != 0 {
                    return Err(Error::Parse("toda needs pairs of values and a Q,E background".into()));
                }
                let pairs: Vec<(f64, f64)> = values.chunks(2).map(|c| (c[0], c[1])).collect();
                SystemConfig::toda(system, 1, &pairs, (bg[0], bg[1]))
            } else {
                let [b] = bg[..] else {
                    return Err(Error::Parse("expected one background value".into()));
                };
                SystemConfig::kdv(system, 1, values, b)
            }
        }
    }
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let system = a.system.system()?;
    let config = initial_config(a, system)?;
    let trajectory = evolve(&config, a.steps)?;
    let (from, to) = if system.is_toda() {
        let first = config.first_pair();
        (first, first + (config.sites().len() as i64 / 2 - 1).max(0) + a.pad)
    } else {
        (config.lo(), config.hi().max(config.lo()) + a.pad)
    };
    let text = if a.diagram {
        if system != System::Bbs {
            return Err(Error::Parse("--diagram is only available for bbs".into()));
        }
        spacetime_diagram(&trajectory, from, to)
    } else {
        trajectory_csv(&trajectory, from, to)
    };
    emit(out, a.out.as_deref(), &text)?;
    Ok(0)
}

pub fn cmd_equiv(a: &EquivArgs, out: &mut dyn Write) -> Result<i32> {
    let system = match (a.system.l, a.system.delta) {
        (None, None) => default_system(&a.system.system)?,
        _ => a.system.system()?,
    };
    let seed = resolve_seed(a.seed)?;
    let mut rng = rng::stream(seed, 7);
    let (mut site_err, mut carrier_err) = (0.0f64, 0.0f64);
    let mut first = None;
    for i in 0..a.random {
        let config = random_config(system, a.sites, &mut rng)?;
        let eq = equivalence(&config, a.steps, a.tol)?;
        site_err = site_err.max(eq.max_site_error);
        carrier_err = carrier_err.max(eq.max_carrier_error);
        if first.is_none() {
            first = eq.first_mismatch.map(|m| (i, m));
        }
    }
    let mut report = TestReport::new("equivalence", system.name(), a.random, seed);
    report.push(SubTest::at_most("max site difference", site_err, a.tol));
    report.push(SubTest::at_most("max carrier difference", carrier_err, a.tol.max(1e-9)));
    report.note(format!("{} configurations of {} sites, {} steps", a.random, a.sites, a.steps));
    if let Some((i, m)) = first {
        report.note(format!(
            "configuration {i}: first mismatch at step {} site {}: sweep {} vs transform {}",
            m.step, m.site, m.sweep, m.transform
        ));
    }
    out.write_all(report.to_text().as_bytes())?;
    Ok(if report.passed() { 0 } else { 1 })
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let text = if a.suite == "invariance-core" && !Path::new(&a.suite).exists() {
        INVARIANCE_CORE.to_string()
    } else {
        std::fs::read_to_string(&a.suite)?
    };
    let entries = parse_suite(&text)?;
    let outcomes = run_suite(&entries);
    let mut csv = format!("line,expect,{}\n", TestReport::CSV_HEADER);
    let mut unexpected = 0;
    for o in &outcomes {
        let expect = if o.entry.expect_pass { "pass" } else { "fail" };
        let verdict = if o.as_expected() { "as expected" } else { "UNEXPECTED" };
        writeln!(out, "line {} (expect {expect}): {verdict}", o.entry.line)?;
        match &o.report {
            Ok(r) => {
                out.write_all(r.to_text().as_bytes())?;
                for row in r.csv_rows().lines() {
                    csv.push_str(&format!("{},{expect},{row}\n", o.entry.line));
                }
            }
            Err(e) => writeln!(out, "  error: {e}")?,
        }
        if !o.as_expected() {
            unexpected += 1;
        }
    }
    writeln!(out, "{} tests, {unexpected} unexpected", outcomes.len())?;
    if let Some(path) = &a.report {
        write_atomic(path, &csv)?;
    }
    Ok(if unexpected == 0 { 0 } else { 1 })
}

pub fn cmd_sample(a: &SampleArgs, out: &mut dyn Write) -> Result<i32> {
    let spec: DistributionSpec = a.law.parse()?;
    let xs = spec.sample_n(a.n, resolve_seed(a.seed)?)?;
    let mut text = String::with_capacity(xs.len() * 20);
    for x in xs {
        text.push_str(&format!("{x}\n"));
    }
    emit(out, a.out.as_deref(), &text)?;
    Ok(0)
}
