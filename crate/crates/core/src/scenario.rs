//! User drops, noise and power bookkeeping, scan sector and per-trial RNG streams.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::Direction;
use crate::propagation::UserGeometry;
use crate::{Error, Result};

/// Rectangle in which users are dropped: `x ∈ [x_min, x_max]`,
/// `|y| ∈ [y_abs_min, y_abs_max]` on either side of the x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_abs_min: f64,
    pub y_abs_max: f64,
    pub user_height: f64,
    pub bs_height: f64,
}

impl Default for DropRegion {
    fn default() -> Self {
        DropRegion {
            x_min: 10.0,
            x_max: 100.0,
            y_abs_min: 10.0,
            y_abs_max: 50.0,
            user_height: 1.65,
            bs_height: 15.0,
        }
    }
}

impl DropRegion {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_abs_min, self.y_abs_max, self.user_height, self.bs_height]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("drop region", "bounds must be finite"));
        }
        if self.x_min > self.x_max || self.y_abs_min > self.y_abs_max || self.y_abs_min < 0.0 {
            return Err(Error::invalid("drop region", "region is empty"));
        }
        if self.x_min <= 0.0 && self.y_abs_min <= 0.0 {
            return Err(Error::invalid("drop region", "must exclude the point below the array"));
        }
        Ok(())
    }
}

/// `k` users uniform over the region; each half (`y > 0`, `y < 0`) is equally likely.
pub fn drop_users<R: Rng + ?Sized>(k: usize, region: &DropRegion, rng: &mut R) -> Result<Vec<UserGeometry>> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    region.validate()?;
    (0..k)
        .map(|_| {
            let x = region.x_min + (region.x_max - region.x_min) * rng.random::<f64>();
            let y_abs = region.y_abs_min + (region.y_abs_max - region.y_abs_min) * rng.random::<f64>();
            let y = if rng.random::<bool>() { y_abs } else { -y_abs };
            UserGeometry::from_position([x, y, region.user_height], region.bs_height)
        })
        .collect()
}

/// `σ² = 10^{(N₀ + F)/10} · 10⁻³ · B` in watts.
pub fn noise_variance(n0_dbm_hz: f64, noise_figure_db: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
        return Err(Error::invalid("bandwidth", "must be positive and finite"));
    }
    Ok(10f64.powf((n0_dbm_hz + noise_figure_db) / 10.0) * 1e-3 * bandwidth_hz)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Downlink and radar transmit powers in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    p_dl: f64,
    p_r: f64,
}

impl PowerBudget {
    pub fn new(p_dl: f64, p_r: f64) -> Result<Self> {
        if !(p_dl >= 0.0 && p_dl.is_finite()) {
            return Err(Error::invalid("p_dl", "must be finite and nonnegative"));
        }
        if !(p_r >= 0.0 && p_r.is_finite()) {
            return Err(Error::invalid("p_r", "must be finite and nonnegative"));
        }
        Ok(PowerBudget { p_dl, p_r })
    }

    /// `P_R = P_DL · 10^{RCR/10}`.
    pub fn from_rcr_db(p_dl: f64, rcr_db: f64) -> Result<Self> {
        Self::new(p_dl, p_dl * db_to_linear(rcr_db))
    }

    pub fn p_dl(&self) -> f64 {
        self.p_dl
    }

    pub fn p_r(&self) -> f64 {
        self.p_r
    }

    pub fn rcr(&self) -> f64 {
        self.p_r / self.p_dl
    }

    pub fn rcr_db(&self) -> f64 {
        linear_to_db(self.rcr())
    }

    /// `η_k = P_DL/(K·M·N)`.
    pub fn data_power(&self, k: usize, m_sub: usize, n_sym: usize) -> f64 {
        self.p_dl / (k * m_sub * n_sym) as f64
    }

    /// `η_R = P_R/(M·N)`.
    pub fn radar_power(&self, m_sub: usize, n_sym: usize) -> f64 {
        self.p_r / (m_sub * n_sym) as f64
    }

    /// Uplink pilot power per user, `P_DL/K`.
    pub fn pilot_power(&self, k: usize) -> f64 {
        self.p_dl / k as f64
    }
}

/// Radar surveillance sector; elevations are measured above the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSector {
    pub azimuth_min: f64,
    pub azimuth_max: f64,
    pub elevation_min: f64,
    pub elevation_max: f64,
}

impl Default for ScanSector {
    fn default() -> Self {
        ScanSector {
            azimuth_min: (-60f64).to_radians(),
            azimuth_max: 60f64.to_radians(),
            elevation_min: 10f64.to_radians(),
            elevation_max: 80f64.to_radians(),
        }
    }
}

impl ScanSector {
    pub fn validate(&self) -> Result<()> {
        if !(self.azimuth_min <= self.azimuth_max && self.elevation_min <= self.elevation_max) {
            return Err(Error::invalid("scan sector", "minimum exceeds maximum"));
        }
        Direction::from_horizon_elevation(self.azimuth_min, self.elevation_min)?;
        Direction::from_horizon_elevation(self.azimuth_max, self.elevation_max)?;
        Ok(())
    }

    pub fn contains(&self, dir: Direction) -> bool {
        let eps = 1e-12;
        let el = dir.horizon_elevation();
        dir.azimuth() >= self.azimuth_min - eps
            && dir.azimuth() <= self.azimuth_max + eps
            && el >= self.elevation_min - eps
            && el <= self.elevation_max + eps
    }

    /// Point of the sector at fractional coordinates `(u, v) ∈ [0, 1]²`.
    pub fn at(&self, u: f64, v: f64) -> Result<Direction> {
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        Direction::from_horizon_elevation(
            self.azimuth_min + u * (self.azimuth_max - self.azimuth_min),
            self.elevation_min + v * (self.elevation_max - self.elevation_min),
        )
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Direction> {
        let u = rng.random::<f64>();
        let v = rng.random::<f64>();
        self.at(u, v)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for trial `index` of experiment `family` under `seed`.
///
/// The stream depends only on the triple, never on scheduling, so parallel
/// runs reproduce serial ones bit for bit.
pub fn trial_rng(seed: u64, family: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(family)));
    rng.set_stream(index);
    rng
}
