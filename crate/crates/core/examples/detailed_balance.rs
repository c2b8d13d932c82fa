//! Detailed balance for the box-ball map: exact enumeration against the
//! geometric carrier law, then a sampled check with a wrong ratio as control.

use solitonlab::measures::DistributionSpec;
use solitonlab::paths::System;
use solitonlab::verify::{bbs_balance_imbalance, detailed_balance_test};

fn main() -> solitonlab::Result<()> {
    for p in [0.1, 0.25, 0.4] {
        println!("p={p}: TV imbalance {:.2e}", bbs_balance_imbalance(p, p / (1.0 - p), 60));
    }
    println!("control r=0.5: {:.4}", bbs_balance_imbalance(0.25, 0.5, 60));
    let mu = [DistributionSpec::Bernoulli { p: 0.25 }];
    for r in [1.0 / 3.0, 0.5] {
        let report = detailed_balance_test(System::Bbs, &mu, &DistributionSpec::Geometric { r }, 100_000, 1)?;
        print!("{}", report.to_text());
    }
    Ok(())
}
