use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Feasible set for the RIS reflection coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RisMode {
    /// Ideal coefficients, `|ψ| ≤ 1`.
    Irc,
    /// Continuous phase shifters, `|ψ| = 1`.
    Cps,
    /// Discrete phase shifters with the given number of uniformly spaced levels.
    Dps(u32),
    /// The random initial phases are kept; the φ-block is skipped.
    Fixed,
}

impl fmt::Display for RisMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RisMode::Irc => f.write_str("irc"),
            RisMode::Cps => f.write_str("cps"),
            RisMode::Dps(k) => write!(f, "dps{k}"),
            RisMode::Fixed => f.write_str("fixed"),
        }
    }
}

impl FromStr for RisMode {
    type Err = Error;

    /// Accepts `irc`, `cps`, `fixed`, `dps` (default 4 levels) and `dps<κ>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "irc" => Ok(RisMode::Irc),
            "cps" => Ok(RisMode::Cps),
            "fixed" => Ok(RisMode::Fixed),
            "dps" => Ok(RisMode::Dps(DEFAULT_DPS_LEVELS)),
            other => other
                .strip_prefix("dps")
                .and_then(|k| k.parse::<u32>().ok())
                .map(RisMode::Dps)
                .ok_or_else(|| Error::config("ris_mode", format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntennaMode {
    /// Positions are optimized inside the transmit region.
    Movable,
    /// λ/2-spaced uniform linear array that never moves.
    Fixed,
}

impl fmt::Display for AntennaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AntennaMode::Movable => "ma",
            AntennaMode::Fixed => "fpa",
        })
    }
}

impl FromStr for AntennaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ma" => Ok(AntennaMode::Movable),
            "fpa" => Ok(AntennaMode::Fixed),
            _ => Err(Error::config("antenna_mode", format!("unknown mode `{s}`"))),
        }
    }
}

/// Statistical model of the RIS receive field-response matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrModel {
    /// Planar λ/2 grid, one random arrival direction per path.
    FieldResponse,
    /// i.i.d. unit-variance circular Gaussian entries.
    Gaussian,
}

impl fmt::Display for GrModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrModel::FieldResponse => "frv",
            GrModel::Gaussian => "gaussian",
        })
    }
}

impl FromStr for GrModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "frv" => Ok(GrModel::FieldResponse),
            "gaussian" => Ok(GrModel::Gaussian),
            _ => Err(Error::config("gr_model", format!("unknown model `{s}`"))),
        }
    }
}

pub const DEFAULT_DPS_LEVELS: u32 = 4;

/// Every scalar parameter of one simulated system, in SI units.
///
/// Powers are stored in watts; the `*_dbm` helpers convert on the way in.
/// Lengths given "in wavelengths" stay normalized and are scaled by
/// [`SystemConfig::wavelength`] where needed.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_antennas: usize,
    pub n_users: usize,
    pub n_ris: usize,
    pub n_paths: usize,
    pub carrier_ghz: f64,
    /// Side of the square transmit region, in wavelengths.
    pub region_lambda: f64,
    /// Minimum antenna spacing, in wavelengths.
    pub min_dist_lambda: f64,
    pub pmax_w: f64,
    /// Per-user noise power.
    pub noise_w: f64,
    pub ris_mode: RisMode,
    pub antenna_mode: AntennaMode,
    pub reflection_gain_db: f64,
    pub bs_ris_km: f64,
    pub ris_user_center_m: f64,
    pub user_radius_m: f64,
    pub gr_model: GrModel,
    /// Path angles are drawn uniformly from `[0, angle_max_rad]`.
    pub angle_max_rad: f64,
    pub seed: u64,

    /// Relative sum-rate change that stops the outer loop.
    pub tol: f64,
    pub r_max: usize,
    pub tau_max: usize,
    /// Relative `f₂` change that stops the MM loop.
    pub mm_tol: f64,
    pub q_max: usize,
    pub mu0_lambda: f64,
    pub mu_min_lambda: f64,
    pub bisection_tol: f64,
    pub ellipsoid_tol: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_antennas: 4,
            n_users: 4,
            n_ris: 16,
            n_paths: 4,
            carrier_ghz: 2.0,
            region_lambda: 2.0,
            min_dist_lambda: 0.5,
            pmax_w: dbm_to_watts(10.0),
            noise_w: dbm_to_watts(-100.0),
            ris_mode: RisMode::Cps,
            antenna_mode: AntennaMode::Movable,
            reflection_gain_db: 10.0,
            bs_ris_km: 0.05,
            ris_user_center_m: 100.0,
            user_radius_m: 10.0,
            gr_model: GrModel::FieldResponse,
            angle_max_rad: PI,
            seed: 0,
            tol: 1e-4,
            r_max: 100,
            tau_max: 100,
            mm_tol: 1e-6,
            q_max: 50,
            mu0_lambda: 0.1,
            mu_min_lambda: 1e-4,
            bisection_tol: 1e-12,
            ellipsoid_tol: 1e-6,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

impl SystemConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)
    }

    /// Side of the transmit region in meters.
    pub fn region_side(&self) -> f64 {
        self.region_lambda * self.wavelength()
    }

    /// Minimum antenna spacing in meters.
    pub fn min_distance(&self) -> f64 {
        self.min_dist_lambda * self.wavelength()
    }

    pub fn with_pmax_dbm(mut self, dbm: f64) -> Self {
        self.pmax_w = dbm_to_watts(dbm);
        self
    }

    pub fn with_noise_dbm(mut self, dbm: f64) -> Self {
        self.noise_w = dbm_to_watts(dbm);
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive and finite, got {v}")))
            }
        }
        fn at_least_one(key: &str, v: usize) -> Result<()> {
            if v >= 1 {
                Ok(())
            } else {
                Err(Error::config(key, "must be at least 1"))
            }
        }

        at_least_one("n_antennas", self.n_antennas)?;
        at_least_one("n_users", self.n_users)?;
        at_least_one("n_ris", self.n_ris)?;
        at_least_one("n_paths", self.n_paths)?;
        positive("carrier_ghz", self.carrier_ghz)?;
        positive("region_lambda", self.region_lambda)?;
        if !(self.min_dist_lambda.is_finite() && self.min_dist_lambda >= 0.0) {
            return Err(Error::config("min_dist_lambda", "must be non-negative"));
        }
        if self.n_antennas >= 2 && self.min_dist_lambda > self.region_lambda * 2f64.sqrt() {
            return Err(Error::config(
                "min_dist_lambda",
                "exceeds the region diagonal; two antennas cannot fit",
            ));
        }
        positive("pmax_dbm", self.pmax_w)?;
        positive("noise_dbm", self.noise_w)?;
        if let RisMode::Dps(levels) = self.ris_mode {
            if levels < 2 {
                return Err(Error::config("dps_levels", "needs at least 2 levels"));
            }
        }
        if !self.reflection_gain_db.is_finite() {
            return Err(Error::config("reflection_gain_db", "must be finite"));
        }
        positive("bs_ris_km", self.bs_ris_km)?;
        positive("ris_user_center_m", self.ris_user_center_m)?;
        if !(self.user_radius_m.is_finite() && self.user_radius_m >= 0.0) {
            return Err(Error::config("user_radius_m", "must be non-negative"));
        }
        if self.user_radius_m >= self.ris_user_center_m {
            return Err(Error::config(
                "user_radius_m",
                "must be smaller than ris_user_center_m so users never sit on the RIS",
            ));
        }
        positive("angle_max_rad", self.angle_max_rad)?;
        positive("tol", self.tol)?;
        at_least_one("r_max", self.r_max)?;
        at_least_one("tau_max", self.tau_max)?;
        positive("mm_tol", self.mm_tol)?;
        positive("mu0_lambda", self.mu0_lambda)?;
        positive("mu_min_lambda", self.mu_min_lambda)?;
        if self.mu_min_lambda > self.mu0_lambda {
            return Err(Error::config("mu_min_lambda", "must not exceed mu0_lambda"));
        }
        positive("bisection_tol", self.bisection_tol)?;
        positive("ellipsoid_tol", self.ellipsoid_tol)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watts(-100.0) - 1e-13).abs() < 1e-25);
        assert!((dbm_to_watts(10.0) - 0.01).abs() < 1e-15);
        assert!((watts_to_dbm(1.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn default_is_valid() {
        let c = SystemConfig::default();
        c.validate().unwrap();
        assert!((c.wavelength() - 0.149896229).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_values() {
        let c = SystemConfig { n_users: 0, ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "n_users"));
        let c = SystemConfig { ris_mode: RisMode::Dps(1), ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "dps_levels"));
        let c = SystemConfig { min_dist_lambda: 3.0, region_lambda: 2.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = SystemConfig { pmax_w: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn mode_strings() {
        assert_eq!("dps16".parse::<RisMode>().unwrap(), RisMode::Dps(16));
        assert_eq!("dps".parse::<RisMode>().unwrap(), RisMode::Dps(4));
        assert_eq!("IRC".parse::<RisMode>().unwrap(), RisMode::Irc);
        assert!("dpsx".parse::<RisMode>().is_err());
        assert_eq!(RisMode::Dps(8).to_string(), "dps8");
        assert_eq!("fpa".parse::<AntennaMode>().unwrap(), AntennaMode::Fixed);
    }
}
