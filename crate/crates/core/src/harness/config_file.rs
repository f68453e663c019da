use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, watts_to_dbm, AntennaMode, GrModel, RisMode, SystemConfig};

/// On-disk schema. Only the four dimensions are required.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n_antennas: Option<usize>,
    n_users: Option<usize>,
    n_ris: Option<usize>,
    n_paths: Option<usize>,
    carrier_ghz: Option<f64>,
    region_lambda: Option<f64>,
    min_dist_lambda: Option<f64>,
    pmax_dbm: Option<f64>,
    noise_dbm: Option<f64>,
    ris_mode: Option<String>,
    dps_levels: Option<u32>,
    antenna_mode: Option<String>,
    reflection_gain_db: Option<f64>,
    bs_ris_km: Option<f64>,
    ris_user_center_m: Option<f64>,
    user_radius_m: Option<f64>,
    gr_model: Option<String>,
    angle_max_rad: Option<f64>,
    seed: Option<u64>,
    tol: Option<f64>,
    r_max: Option<usize>,
    tau_max: Option<usize>,
    mm_tol: Option<f64>,
    q_max: Option<usize>,
    mu0_lambda: Option<f64>,
    mu_min_lambda: Option<f64>,
    bisection_tol: Option<f64>,
    ellipsoid_tol: Option<f64>,
}

fn required(key: &str, v: Option<usize>) -> Result<usize> {
    v.ok_or_else(|| Error::config(key, "missing required key"))
}

/// Parses a TOML document; unit conversion, defaults and validation included.
pub fn parse_config_str(text: &str) -> Result<SystemConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::ConfigSyntax(e.to_string()))?;
    let d = SystemConfig::default();

    let ris_mode = match file.ris_mode.as_deref() {
        None => match file.dps_levels {
            Some(_) => return Err(Error::config("dps_levels", "only valid with ris_mode = \"dps\"")),
            None => d.ris_mode,
        },
        Some(s) => match (s.parse::<RisMode>()?, file.dps_levels) {
            (RisMode::Dps(k), Some(levels)) if s.trim().eq_ignore_ascii_case("dps") || k == levels => {
                RisMode::Dps(levels)
            }
            (RisMode::Dps(_), Some(_)) => {
                return Err(Error::config("dps_levels", "disagrees with the level count in ris_mode"))
            }
            (RisMode::Dps(k), None) => RisMode::Dps(k),
            (_, Some(_)) => return Err(Error::config("dps_levels", "only valid with ris_mode = \"dps\"")),
            (mode, None) => mode,
        },
    };

    let config = SystemConfig {
        n_antennas: required("n_antennas", file.n_antennas)?,
        n_users: required("n_users", file.n_users)?,
        n_ris: required("n_ris", file.n_ris)?,
        n_paths: required("n_paths", file.n_paths)?,
        carrier_ghz: file.carrier_ghz.unwrap_or(d.carrier_ghz),
        region_lambda: file.region_lambda.unwrap_or(d.region_lambda),
        min_dist_lambda: file.min_dist_lambda.unwrap_or(d.min_dist_lambda),
        pmax_w: file.pmax_dbm.map_or(d.pmax_w, dbm_to_watts),
        noise_w: file.noise_dbm.map_or(d.noise_w, dbm_to_watts),
        ris_mode,
        antenna_mode: match file.antenna_mode {
            Some(s) => s.parse::<AntennaMode>()?,
            None => d.antenna_mode,
        },
        reflection_gain_db: file.reflection_gain_db.unwrap_or(d.reflection_gain_db),
        bs_ris_km: file.bs_ris_km.unwrap_or(d.bs_ris_km),
        ris_user_center_m: file.ris_user_center_m.unwrap_or(d.ris_user_center_m),
        user_radius_m: file.user_radius_m.unwrap_or(d.user_radius_m),
        gr_model: match file.gr_model {
            Some(s) => s.parse::<GrModel>()?,
            None => d.gr_model,
        },
        angle_max_rad: file.angle_max_rad.unwrap_or(d.angle_max_rad),
        seed: file.seed.unwrap_or(d.seed),
        tol: file.tol.unwrap_or(d.tol),
        r_max: file.r_max.unwrap_or(d.r_max),
        tau_max: file.tau_max.unwrap_or(d.tau_max),
        mm_tol: file.mm_tol.unwrap_or(d.mm_tol),
        q_max: file.q_max.unwrap_or(d.q_max),
        mu0_lambda: file.mu0_lambda.unwrap_or(d.mu0_lambda),
        mu_min_lambda: file.mu_min_lambda.unwrap_or(d.mu_min_lambda),
        bisection_tol: file.bisection_tol.unwrap_or(d.bisection_tol),
        ellipsoid_tol: file.ellipsoid_tol.unwrap_or(d.ellipsoid_tol),
    };
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

/// Writes every key, powers back in dBm.
pub fn config_to_toml(config: &SystemConfig) -> String {
    let (ris_mode, dps_levels) = match config.ris_mode {
        RisMode::Dps(k) => ("dps".to_string(), Some(k)),
        other => (other.to_string(), None),
    };
    let file = ConfigFile {
        n_antennas: Some(config.n_antennas),
        n_users: Some(config.n_users),
        n_ris: Some(config.n_ris),
        n_paths: Some(config.n_paths),
        carrier_ghz: Some(config.carrier_ghz),
        region_lambda: Some(config.region_lambda),
        min_dist_lambda: Some(config.min_dist_lambda),
        pmax_dbm: Some(watts_to_dbm(config.pmax_w)),
        noise_dbm: Some(watts_to_dbm(config.noise_w)),
        ris_mode: Some(ris_mode),
        dps_levels,
        antenna_mode: Some(config.antenna_mode.to_string()),
        reflection_gain_db: Some(config.reflection_gain_db),
        bs_ris_km: Some(config.bs_ris_km),
        ris_user_center_m: Some(config.ris_user_center_m),
        user_radius_m: Some(config.user_radius_m),
        gr_model: Some(config.gr_model.to_string()),
        angle_max_rad: Some(config.angle_max_rad),
        seed: Some(config.seed),
        tol: Some(config.tol),
        r_max: Some(config.r_max),
        tau_max: Some(config.tau_max),
        mm_tol: Some(config.mm_tol),
        q_max: Some(config.q_max),
        mu0_lambda: Some(config.mu0_lambda),
        mu_min_lambda: Some(config.mu_min_lambda),
        bisection_tol: Some(config.bisection_tol),
        ellipsoid_tol: Some(config.ellipsoid_tol),
    };
    toml::to_string(&file).expect("config schema serializes")
}
