//! Ultra-discrete and discrete Toda: a pulse of (Q, E) pairs evolving in a
//! uniform background, printed as pair trajectories.

use solitonlab::covariables::equivalence;
use solitonlab::paths::{System, SystemConfig};
use solitonlab::systems::evolve;

fn main() -> solitonlab::Result<()> {
    let ud = SystemConfig::toda(System::UdToda, 1, &[(2.0, 0.5), (1.0, 1.5)], (0.5, 1.5))?;
    for (t, c) in evolve(&ud, 5)?.iter().enumerate() {
        let pairs: Vec<(f64, f64)> = (1..=8).map(|n| (c.value_at(2 * n - 1), c.value_at(2 * n))).collect();
        println!("udtoda t={t} {pairs:?}");
    }
    let d = SystemConfig::toda(System::DToda, 1, &[(3.0, 0.5), (0.7, 1.2)], (2.0, 1.0))?;
    let last = evolve(&d, 5)?.pop().unwrap();
    let pairs: Vec<String> = (1..=8)
        .map(|n| format!("({:.3}, {:.3})", last.value_at(2 * n - 1), last.value_at(2 * n)))
        .collect();
    println!("dtoda t=5 {}", pairs.join(" "));
    println!("dtoda sweep vs transform: {:.1e}", equivalence(&d, 10, 1e-9)?.max_site_error);
    Ok(())
}
