//! Discrete integrable systems driven by carriers, and the Pitman-type path
//! transforms that realize the same dynamics.
//!
//! Five systems are supported: the box-ball system (BBS), the ultra-discrete
//! and discrete KdV equations (udKdV, dKdV) and the ultra-discrete and discrete
//! Toda lattices (udToda, dToda). Each can be evolved two ways:
//!
//! * by a left-to-right carrier sweep of the local map `F_n` ([`systems`]);
//! * by encoding the configuration as a two-sided path and applying the
//!   matching transform `S -> 2M(S) - S - 2M(S)_0` ([`paths`], [`pitman`]).
//!
//! [`covariables`] holds the change of variables linking the two and the
//! harness that checks they agree. [`measures`] and [`verify`] sample the
//! i.i.d. invariant laws and test invariance statistically.
//!
//! ```
//! use solitonlab::{paths::SystemConfig, systems};
//!
//! let config = SystemConfig::bbs_from_str("110100").unwrap();
//! let (next, carrier) = systems::carrier_sweep(&config, 0.0).unwrap();
//! assert_eq!(next.bbs_string(1, 6), "001011");
//! assert_eq!(carrier.values[..6], [1.0, 2.0, 1.0, 2.0, 1.0, 0.0]);
//! ```

pub mod cli;
pub mod covariables;
mod error;
pub mod measures;
pub mod paths;
pub mod pitman;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod systems;
pub mod verify;

pub use error::{Error, Result};
pub use measures::DistributionSpec;
pub use paths::{Background, PathMode, PathWindow, System, SystemConfig};
pub use pitman::{OperatorTag, OperatorVariant};
pub use systems::CarrierSeq;
pub use verify::TestReport;
