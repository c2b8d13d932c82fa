//! Samplers and normalized densities for a few invariant-law families.

use solitonlab::measures::DistributionSpec;
use solitonlab::stats::mean;
use solitonlab::verify::sampler_test;

fn main() -> solitonlab::Result<()> {
    for literal in [
        "truncexp(lambda=1,c=0,L=1)",
        "cosh(lambda=1,a=2)",
        "gigdkdv(lambda=1,c=1,delta=0.5)",
        "loggamma(shape=2,rate=1)",
        "symgrid(lambda=0.7,h=0.5,k=3,half=true)",
    ] {
        let spec: DistributionSpec = literal.parse()?;
        let xs = spec.sample_n(100_000, 3)?;
        let law = spec.law()?;
        println!("{spec}: mean {:.4}, log Z {:.6}", mean(&xs), law.log_normalizer());
        let report = sampler_test(&spec, 100_000, 3)?;
        println!("  sampler test {}", if report.passed() { "passes" } else { "fails" });
    }
    Ok(())
}
