//! Joint beamforming, RIS reflection and movable-antenna placement for
//! sum-rate maximization in an RIS-aided multiuser MISO downlink.
//!
//! The crate is organized by block of the alternating solver:
//!
//! * [`model`]: configuration, random scenarios, channels, SINR and rate.
//! * [`beamform`]: the `W` update with its power-dual bisection.
//! * [`ris`]: the `φ` update for ideal, continuous and discrete RIS phases.
//! * [`positions`]: the antenna-position update by gradient ascent.
//! * [`solver`]: the outer loop tying the blocks together.
//! * [`harness`]: configuration files, Monte-Carlo sweeps, CSV output and
//!   self-checks used by the `risma` command-line tool.
//!
//! ```
//! use risma::model::{sample_scenario, SystemConfig};
//! use risma::solver::solve;
//!
//! let config = SystemConfig { r_max: 5, ..SystemConfig::default() };
//! let scenario = sample_scenario(&config, 1).unwrap();
//! let (_state, trace) = solve(&scenario, &config).unwrap();
//! assert!(trace.final_rate() >= trace.initial_rate);
//! ```

pub mod beamform;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod positions;
pub mod ris;
pub mod solver;

pub use error::{Error, Result};

// Compile and run the guide's code listings as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/system-model.md")]
    mod system_model {}
    #[doc = include_str!("../../../book/src/beamforming.md")]
    mod beamforming {}
    #[doc = include_str!("../../../book/src/ris-phases.md")]
    mod ris_phases {}
    #[doc = include_str!("../../../book/src/antenna-positions.md")]
    mod antenna_positions {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
