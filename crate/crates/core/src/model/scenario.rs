use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::channel::field_response_matrix;
use super::config::{GrModel, SystemConfig};
use super::types::AntennaPositions;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

/// Direction of one propagation path: elevation `θ` and azimuth `φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDirection {
    pub elevation: f64,
    pub azimuth: f64,
}

impl PathDirection {
    pub fn new(elevation: f64, azimuth: f64) -> Self {
        Self { elevation, azimuth }
    }

    /// Projection of the path direction onto the array plane,
    /// `[sin θ cos φ, cos θ]`.
    pub fn rho(&self) -> [f64; 2] {
        [
            self.elevation.sin() * self.azimuth.cos(),
            self.elevation.cos(),
        ]
    }
}

/// One random channel realization. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub wavelength: f64,
    /// Departure directions at the BS, one per path.
    pub path_directions: Vec<PathDirection>,
    /// Complex path responses `ν_l` (diagonal of `Λ`).
    pub path_gains: CVector,
    /// RIS receive field response `G_r`, `L × M`.
    pub ris_response: CMatrix,
    /// RIS → user channels `h_k`, each of length `M`.
    pub user_channels: Vec<CVector>,
    /// RIS → user distances used for the path loss.
    pub user_distances_m: Vec<f64>,
}

impl Scenario {
    /// Assembles a scenario from explicit parts, checking dimensions.
    pub fn from_parts(
        wavelength: f64,
        path_directions: Vec<PathDirection>,
        path_gains: CVector,
        ris_response: CMatrix,
        user_channels: Vec<CVector>,
    ) -> Result<Self> {
        let l = path_directions.len();
        if path_gains.len() != l || ris_response.nrows() != l {
            return Err(Error::config("n_paths", "path directions, gains and G_r rows disagree"));
        }
        let m = ris_response.ncols();
        if user_channels.iter().any(|h| h.len() != m) {
            return Err(Error::config("n_ris", "user channel length differs from G_r columns"));
        }
        if !(wavelength > 0.0) {
            return Err(Error::config("carrier_ghz", "wavelength must be positive"));
        }
        let k = user_channels.len();
        Ok(Self {
            seed: 0,
            wavelength,
            path_directions,
            path_gains,
            ris_response,
            user_channels,
            user_distances_m: vec![f64::NAN; k],
        })
    }

    pub fn n_paths(&self) -> usize {
        self.path_directions.len()
    }

    pub fn n_ris(&self) -> usize {
        self.ris_response.ncols()
    }

    pub fn n_users(&self) -> usize {
        self.user_channels.len()
    }
}

/// Free-space path loss with RIS reflection gain, as a linear power gain.
///
/// `loss_dB = 92.5 + 20 log10(f0 / GHz) + 20 log10(d / km) − gain_dB`
pub fn path_loss(distance_km: f64, f0_ghz: f64, reflection_gain_db: f64) -> Result<f64> {
    if !(distance_km > 0.0 && distance_km.is_finite()) {
        return Err(Error::config("distance", format!("must be positive, got {distance_km}")));
    }
    if !(f0_ghz > 0.0 && f0_ghz.is_finite()) {
        return Err(Error::config("carrier_ghz", format!("must be positive, got {f0_ghz}")));
    }
    let loss_db = path_loss_db(distance_km, f0_ghz, reflection_gain_db);
    Ok(10f64.powf(-loss_db / 10.0))
}

pub(crate) fn path_loss_db(distance_km: f64, f0_ghz: f64, reflection_gain_db: f64) -> f64 {
    92.5 + 20.0 * f0_ghz.log10() + 20.0 * distance_km.log10() - reflection_gain_db
}

fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

fn random_direction<R: Rng>(rng: &mut R, angle_max: f64) -> PathDirection {
    PathDirection::new(rng.random_range(0.0..angle_max), rng.random_range(0.0..angle_max))
}

/// Element positions of an `M`-element RIS laid out row-major on a square-ish
/// λ/2 grid.
pub fn ris_element_positions(m: usize, wavelength: f64) -> AntennaPositions {
    let cols = (m as f64).sqrt().ceil().max(1.0) as usize;
    let d = wavelength / 2.0;
    AntennaPositions::new(
        (0..m)
            .map(|i| [(i % cols) as f64 * d, (i / cols) as f64 * d])
            .collect(),
    )
}

/// Draws one scenario. A pure function of `(config, seed)`.
pub fn sample_scenario(config: &SystemConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = config.n_paths;
    let m = config.n_ris;
    let wavelength = config.wavelength();

    let path_directions: Vec<_> = (0..l)
        .map(|_| random_direction(&mut rng, config.angle_max_rad))
        .collect();

    let v = path_loss(config.bs_ris_km, config.carrier_ghz, config.reflection_gain_db)?;
    let path_gains = CVector::from_fn(l, |_, _| complex_gaussian(&mut rng, v / l as f64));

    let ris_response = match config.gr_model {
        GrModel::FieldResponse => {
            let arrivals: Vec<_> = (0..l)
                .map(|_| random_direction(&mut rng, config.angle_max_rad))
                .collect();
            field_response_matrix(&ris_element_positions(m, wavelength), &arrivals, wavelength)
        }
        GrModel::Gaussian => CMatrix::from_fn(l, m, |_, _| complex_gaussian(&mut rng, 1.0)),
    };

    let mut user_channels = Vec::with_capacity(config.n_users);
    let mut user_distances_m = Vec::with_capacity(config.n_users);
    for _ in 0..config.n_users {
        // Uniform over the disk: radius ~ R·sqrt(U).
        let r = config.user_radius_m * rng.random::<f64>().sqrt();
        let angle = rng.random_range(0.0..2.0 * PI);
        let x = config.ris_user_center_m + r * angle.cos();
        let y = r * angle.sin();
        let d = x.hypot(y);
        let u = path_loss(d / 1000.0, config.carrier_ghz, config.reflection_gain_db)?;
        user_channels.push(CVector::from_fn(m, |_, _| complex_gaussian(&mut rng, u)));
        user_distances_m.push(d);
    }

    Ok(Scenario {
        seed,
        wavelength,
        path_directions,
        path_gains,
        ris_response,
        user_channels,
        user_distances_m,
    })
}
