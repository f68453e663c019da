//! System model: configuration, random scenarios, and channel/rate evaluation.

mod channel;
mod config;
mod scenario;
mod types;

pub use channel::{
    channels_from_paths, effective_channel, field_response_matrix, link_gains, reflected_paths,
    sinr, sinrs, sum_rate, sum_rate_from_sinrs,
};
pub use config::{
    dbm_to_watts, watts_to_dbm, AntennaMode, GrModel, RisMode, SystemConfig, DEFAULT_DPS_LEVELS,
    SPEED_OF_LIGHT,
};
pub use scenario::{path_loss, ris_element_positions, sample_scenario, PathDirection, Scenario};
pub use types::{AntennaPositions, Beamformer, RisPhases, MODULUS_TOL};
