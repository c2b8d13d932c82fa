//! Invariance of i.i.d. laws under each system's dynamics, with the carrier
//! stationary law and reversibility checks.

use solitonlab::measures::DistributionSpec;
use solitonlab::paths::System;
use solitonlab::verify::{carrier_reversibility_test, carrier_stationary_test, invariance_test};

fn main() -> solitonlab::Result<()> {
    let cases: Vec<(System, Vec<&str>)> = vec![
        (System::UdKdv { l: 1.0 }, vec!["truncexp(lambda=1,c=0,L=1)"]),
        (System::DKdv { delta: 0.5 }, vec!["gigdkdv(lambda=1,c=1,delta=0.5)"]),
        (System::DToda, vec!["gamma(lambda=2,c=1)", "gamma(lambda=1,c=1)"]),
    ];
    for (system, literals) in cases {
        let laws: Vec<DistributionSpec> = literals.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        for report in [
            invariance_test(system, &laws, 100_000, 3, 7)?,
            carrier_stationary_test(system, &laws, 100_000, 7)?,
            carrier_reversibility_test(system, &laws, 100_000, 7)?,
        ] {
            print!("{}", report.to_text());
        }
    }
    Ok(())
}
