//! Uniform planar array on the y–z plane and its response vectors.
//!
//! Elements sit at `(a_y·d, a_z·d)` with `a_y ∈ 0..n_y` horizontal and
//! `a_z ∈ 0..n_z` vertical. Element `(0, 0)` is the phase reference. Vectors
//! are flattened with `a_z` varying fastest, i.e. index `a_y·n_z + a_z`.
//!
//! Angles follow the array-response convention: azimuth `φ` is measured in
//! the horizontal plane from the array broadside (+x), elevation `θ` is
//! measured from zenith (+z), so `θ = π/2` is the horizon.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::dot;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    n_y: usize,
    n_z: usize,
    spacing: f64,
    wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(n_y: usize, n_z: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        if n_y == 0 {
            return Err(Error::invalid("n_y", "must be at least 1"));
        }
        if n_z == 0 {
            return Err(Error::invalid("n_z", "must be at least 1"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("spacing", "must be positive and finite"));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid("wavelength", "must be positive and finite"));
        }
        Ok(ArrayGeometry {
            n_y,
            n_z,
            spacing,
            wavelength,
        })
    }

    /// Array with `λ/2` element spacing.
    pub fn half_wavelength(n_y: usize, n_z: usize, wavelength: f64) -> Result<Self> {
        Self::new(n_y, n_z, wavelength / 2.0, wavelength)
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Total number of elements `N_A = n_y · n_z`.
    pub fn n_elements(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Array response toward `dir`: entry `(a_y, a_z)` is
    /// `exp(−j·k·d·(a_y·sin φ·sin θ + a_z·cos θ))`.
    pub fn steering_vector(&self, dir: Direction) -> Vec<C64> {
        let kd = self.wavenumber() * self.spacing;
        let step_y = kd * dir.azimuth.sin() * dir.elevation.sin();
        let step_z = kd * dir.elevation.cos();
        let mut out = Vec::with_capacity(self.n_elements());
        for a_y in 0..self.n_y {
            for a_z in 0..self.n_z {
                let phase = -(a_y as f64 * step_y + a_z as f64 * step_z);
                out.push(C64::from_polar(1.0, phase));
            }
        }
        out
    }

    /// Power gain `|wᴴ a(dir)|²` of the weight vector toward `dir`.
    pub fn beam_gain(&self, weights: &[C64], dir: Direction) -> Result<f64> {
        if weights.len() != self.n_elements() {
            return Err(Error::DimensionMismatch {
                expected: self.n_elements(),
                found: weights.len(),
            });
        }
        Ok(dot(weights, &self.steering_vector(dir)).norm_sqr())
    }
}

/// Look direction in radians; see the module docs for the angle convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    azimuth: f64,
    elevation: f64,
}

impl Direction {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        if !(-PI..=PI).contains(&azimuth) {
            return Err(Error::invalid("azimuth", "must lie in [-pi, pi]"));
        }
        if !(0.0..=PI).contains(&elevation) {
            return Err(Error::invalid("elevation", "must lie in [0, pi] (measured from zenith)"));
        }
        Ok(Direction { azimuth, elevation })
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        Self::new(azimuth_deg.to_radians(), elevation_deg.to_radians())
    }

    /// Direction given an elevation measured upward from the horizon, as used
    /// for radar scan sectors.
    pub fn from_horizon_elevation(azimuth: f64, elevation_above_horizon: f64) -> Result<Self> {
        Self::new(azimuth, FRAC_PI_2 - elevation_above_horizon)
    }

    /// Direction of the offset `(dx, dy, dz)` from the array origin.
    ///
    /// This is the single place where scenario coordinates are converted to
    /// array angles: `φ = atan2(dy, dx)`, `θ = atan2(√(dx² + dy²), dz)`.
    pub fn from_offset(dx: f64, dy: f64, dz: f64) -> Result<Self> {
        let horizontal = dx.hypot(dy);
        if horizontal == 0.0 && dz == 0.0 {
            return Err(Error::invalid("offset", "must be nonzero"));
        }
        Self::new(dy.atan2(dx), horizontal.atan2(dz))
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    /// Elevation above the horizon, `π/2 − θ`.
    pub fn horizon_elevation(&self) -> f64 {
        FRAC_PI_2 - self.elevation
    }
}
