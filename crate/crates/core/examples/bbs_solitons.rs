//! Box-ball solitons: a size-3 soliton overtakes a size-1 soliton and both
//! re-emerge with their sizes intact.

use solitonlab::paths::SystemConfig;
use solitonlab::systems::{evolve, spacetime_diagram};

fn main() -> solitonlab::Result<()> {
    let config = SystemConfig::bbs_from_str("11100100")?;
    let trajectory = evolve(&config, 12)?;
    print!("{}", spacetime_diagram(&trajectory, 1, 50));
    let balls: f64 = trajectory.last().unwrap().sites().iter().sum();
    println!("balls at t=12: {balls}");
    Ok(())
}
