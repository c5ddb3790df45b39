//! User channel models, large-scale path loss and the radar target channel.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{ArrayGeometry, Direction};
use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Ricean K-factor used when the LoS probability is exactly one.
pub const DEFAULT_K_MAX: f64 = 1e3;

/// Draws one `CN(0, 1)` sample.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelModel {
    Rayleigh,
    LineOfSight,
    Rice,
}

impl ChannelModel {
    pub const ALL: [ChannelModel; 3] = [ChannelModel::Rayleigh, ChannelModel::LineOfSight, ChannelModel::Rice];

    pub fn name(self) -> &'static str {
        match self {
            ChannelModel::Rayleigh => "rayleigh",
            ChannelModel::LineOfSight => "los",
            ChannelModel::Rice => "rice",
        }
    }
}

/// Second-order statistics of a user channel, i.e. what the base station is
/// assumed to know when building LMMSE estimators and rate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelParams {
    Rayleigh { beta: f64 },
    LineOfSight { beta: f64, dir: Direction },
    Rice { beta: f64, k_factor: f64, dir: Direction },
}

impl ChannelParams {
    pub fn model(&self) -> ChannelModel {
        match self {
            ChannelParams::Rayleigh { .. } => ChannelModel::Rayleigh,
            ChannelParams::LineOfSight { .. } => ChannelModel::LineOfSight,
            ChannelParams::Rice { .. } => ChannelModel::Rice,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            ChannelParams::Rayleigh { beta }
            | ChannelParams::LineOfSight { beta, .. }
            | ChannelParams::Rice { beta, .. } => beta,
        }
    }

    pub fn los_direction(&self) -> Option<Direction> {
        match *self {
            ChannelParams::Rayleigh { .. } => None,
            ChannelParams::LineOfSight { dir, .. } | ChannelParams::Rice { dir, .. } => Some(dir),
        }
    }

    pub fn k_factor(&self) -> Option<f64> {
        match *self {
            ChannelParams::Rice { k_factor, .. } => Some(k_factor),
            _ => None,
        }
    }

    /// Draws a channel realisation with these statistics.
    pub fn draw<R: Rng + ?Sized>(&self, geom: &ArrayGeometry, rng: &mut R) -> Result<UserChannel> {
        match *self {
            ChannelParams::Rayleigh { beta } => rayleigh_channel(beta, geom.n_elements(), rng),
            ChannelParams::LineOfSight { beta, dir } => los_channel(beta, dir, geom, rng),
            ChannelParams::Rice { beta, k_factor, dir } => rice_channel(beta, k_factor, dir, geom, rng),
        }
    }
}

/// One realisation of a user channel `h_k` together with its statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    pub h: Vec<C64>,
    pub params: ChannelParams,
    /// Phase `ψ_k` of the LoS component (LoS and Rice only).
    pub los_phase: Option<f64>,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("beta", "must be finite and nonnegative"))
    }
}

/// `h = √β · g`, `g ~ CN(0, I)`.
pub fn rayleigh_channel<R: Rng + ?Sized>(beta: f64, n_a: usize, rng: &mut R) -> Result<UserChannel> {
    check_beta(beta)?;
    let amp = beta.sqrt();
    let h = (0..n_a).map(|_| complex_normal(rng) * amp).collect();
    Ok(UserChannel {
        h,
        params: ChannelParams::Rayleigh { beta },
        los_phase: None,
    })
}

/// `h = √β · e^{jψ} · a(dir)`, `ψ ~ U[0, 2π)`.
pub fn los_channel<R: Rng + ?Sized>(beta: f64, dir: Direction, geom: &ArrayGeometry, rng: &mut R) -> Result<UserChannel> {
    check_beta(beta)?;
    let psi = rng.random::<f64>() * 2.0 * PI;
    let rot = C64::from_polar(beta.sqrt(), psi);
    let h = geom.steering_vector(dir).into_iter().map(|a| a * rot).collect();
    Ok(UserChannel {
        h,
        params: ChannelParams::LineOfSight { beta, dir },
        los_phase: Some(psi),
    })
}

/// `h = √(β/(K+1)) · (√K · e^{jψ} · a(dir) + g)`.
pub fn rice_channel<R: Rng + ?Sized>(
    beta: f64,
    k_factor: f64,
    dir: Direction,
    geom: &ArrayGeometry,
    rng: &mut R,
) -> Result<UserChannel> {
    check_beta(beta)?;
    if !(k_factor >= 0.0 && k_factor.is_finite()) {
        return Err(Error::invalid("k_factor", "must be finite and nonnegative"));
    }
    let psi = rng.random::<f64>() * 2.0 * PI;
    let scale = (beta / (k_factor + 1.0)).sqrt();
    let los = C64::from_polar(k_factor.sqrt(), psi);
    let h = geom
        .steering_vector(dir)
        .into_iter()
        .map(|a| (a * los + complex_normal(rng)) * scale)
        .collect();
    Ok(UserChannel {
        h,
        params: ChannelParams::Rice { beta, k_factor, dir },
        los_phase: Some(psi),
    })
}

/// Urban-macro LoS probability `min(18/d, 1)·(1 − e^{−d/63}) + e^{−d/63}`.
pub fn los_probability(d_2d: f64) -> f64 {
    let e = (-d_2d / 63.0).exp();
    (18.0 / d_2d).min(1.0) * (1.0 - e) + e
}

/// `K = p/(1 − p)`, capped at `k_max` (which is returned when `p = 1`).
pub fn k_factor_from_probability(p: f64, k_max: f64) -> f64 {
    if p >= 1.0 {
        return k_max;
    }
    (p / (1.0 - p)).min(k_max)
}

/// Ricean K-factor of a user at horizontal distance `d_2d`.
pub fn rice_k_factor(d_2d: f64, k_max: f64) -> Result<f64> {
    if !(d_2d > 0.0 && d_2d.is_finite()) {
        return Err(Error::invalid("d_2d", "must be positive and finite"));
    }
    Ok(k_factor_from_probability(los_probability(d_2d), k_max))
}

/// Position of a user relative to a base station at `(0, 0, bs_height)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserGeometry {
    pub position: [f64; 3],
    pub distance_2d: f64,
    pub distance_3d: f64,
    pub direction: Direction,
}

impl UserGeometry {
    pub fn from_position(position: [f64; 3], bs_height: f64) -> Result<Self> {
        let [x, y, z] = position;
        let dz = z - bs_height;
        let distance_2d = x.hypot(y);
        if !(distance_2d > 0.0) {
            return Err(Error::invalid("position", "user must not sit directly below the array"));
        }
        Ok(UserGeometry {
            position,
            distance_2d,
            distance_3d: distance_2d.hypot(dz),
            direction: Direction::from_offset(x, y, dz)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathlossModel {
    /// Three-slope model with log-normal shadowing (Rayleigh users).
    ThreeSlope,
    /// Street-level LoS model without shadowing (pure LoS users).
    Los3gpp,
    /// Three-slope model with shadowing, used for Rice users.
    RiceBase,
}

impl PathlossModel {
    pub fn for_channel(model: ChannelModel) -> Self {
        match model {
            ChannelModel::Rayleigh => PathlossModel::ThreeSlope,
            ChannelModel::LineOfSight => PathlossModel::Los3gpp,
            ChannelModel::Rice => PathlossModel::RiceBase,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PathlossModel::ThreeSlope => "three_slope",
            PathlossModel::Los3gpp => "los_3gpp",
            PathlossModel::RiceBase => "rice_base",
        }
    }
}

/// Path-loss constants. All losses are positive dB values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossConfig {
    /// Near and far breakpoints of the three-slope model, meters.
    pub breakpoints: [f64; 2],
    /// Slopes (path-loss exponents) below, between and beyond the breakpoints.
    pub exponents: [f64; 3],
    /// Loss at the far breakpoint at `reference_frequency`.
    pub loss_at_far_breakpoint_db: f64,
    pub reference_frequency: f64,
    /// LoS model `intercept + 10·slope·log10(d) + 20·log10(f_GHz)`.
    pub los_intercept_db: f64,
    pub los_slope: f64,
    /// Log-normal shadowing standard deviation for the three-slope models.
    pub shadowing_db: f64,
}

impl Default for PathlossConfig {
    fn default() -> Self {
        PathlossConfig {
            breakpoints: [10.0, 50.0],
            exponents: [2.0, 3.5, 4.0],
            loss_at_far_breakpoint_db: 100.0,
            reference_frequency: 3e9,
            los_intercept_db: 28.0,
            los_slope: 2.2,
            shadowing_db: 8.0,
        }
    }
}

impl PathlossConfig {
    pub fn validate(&self) -> Result<()> {
        let [d0, d1] = self.breakpoints;
        if !(d0 > 0.0 && d1 > d0) {
            return Err(Error::invalid("breakpoints", "need 0 < near < far"));
        }
        if self.exponents.iter().any(|e| !(*e > 0.0)) || !(self.los_slope > 0.0) {
            return Err(Error::invalid("exponents", "must be positive"));
        }
        if !(self.shadowing_db >= 0.0) {
            return Err(Error::invalid("shadowing_db", "must be nonnegative"));
        }
        if !(self.reference_frequency > 0.0) {
            return Err(Error::invalid("reference_frequency", "must be positive"));
        }
        Ok(())
    }

    /// Median loss in dB (no shadowing) at 3D distance `d` and carrier `f_c`.
    pub fn median_loss_db(&self, model: PathlossModel, d: f64, carrier: f64) -> f64 {
        match model {
            PathlossModel::ThreeSlope | PathlossModel::RiceBase => {
                let [d0, d1] = self.breakpoints;
                let [n0, n1, n2] = self.exponents;
                let at_d1 = self.loss_at_far_breakpoint_db + 20.0 * (carrier / self.reference_frequency).log10();
                if d > d1 {
                    at_d1 + 10.0 * n2 * (d / d1).log10()
                } else if d > d0 {
                    at_d1 + 10.0 * n1 * (d / d1).log10()
                } else {
                    let at_d0 = at_d1 + 10.0 * n1 * (d0 / d1).log10();
                    at_d0 + 10.0 * n0 * (d / d0).log10()
                }
            }
            PathlossModel::Los3gpp => {
                self.los_intercept_db + 10.0 * self.los_slope * d.log10() + 20.0 * (carrier / 1e9).log10()
            }
        }
    }

    fn shadowed(&self, model: PathlossModel) -> bool {
        !matches!(model, PathlossModel::Los3gpp) && self.shadowing_db > 0.0
    }
}

/// Large-scale gain `β_k` (linear) of a user, including shadowing where the
/// model carries it. The RNG is untouched when no shadowing applies.
pub fn pathloss<R: Rng + ?Sized>(
    model: PathlossModel,
    config: &PathlossConfig,
    user: &UserGeometry,
    carrier: f64,
    rng: &mut R,
) -> f64 {
    let mut loss_db = config.median_loss_db(model, user.distance_3d, carrier);
    if config.shadowed(model) {
        let z: f64 = StandardNormal.sample(rng);
        loss_db += config.shadowing_db * z;
    }
    10f64.powf(-loss_db / 10.0)
}

/// Two-way propagation loss `(4π)³/λ² · R⁴`.
pub fn round_trip_loss(range: f64, wavelength: f64) -> f64 {
    let r2 = range * range;
    (4.0 * PI).powi(3) / (wavelength * wavelength) * r2 * r2
}

/// Target amplitude `α_T = N_A · √(ζ / L)` with zero phase.
///
/// The antenna gain enters as the linear factor `N_A`.
pub fn target_alpha(n_a: usize, rcs: f64, range: f64, wavelength: f64) -> Result<C64> {
    if n_a == 0 {
        return Err(Error::invalid("n_a", "must be at least 1"));
    }
    if !(rcs > 0.0) {
        return Err(Error::invalid("rcs", "must be positive"));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::invalid("range", "must be positive and finite"));
    }
    if !(wavelength > 0.0) {
        return Err(Error::invalid("wavelength", "must be positive"));
    }
    Ok(C64::new(n_a as f64 * (rcs / round_trip_loss(range, wavelength)).sqrt(), 0.0))
}

/// A point target seen by the radar-BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarTarget {
    dir: Direction,
    range: f64,
    radial_speed: f64,
    rcs: f64,
    alpha: C64,
    delay: f64,
    doppler: f64,
}

impl RadarTarget {
    pub fn new(dir: Direction, range: f64, radial_speed: f64, rcs: f64, geom: &ArrayGeometry) -> Result<Self> {
        if !radial_speed.is_finite() {
            return Err(Error::invalid("radial_speed", "must be finite"));
        }
        let alpha = target_alpha(geom.n_elements(), rcs, range, geom.wavelength())?;
        let carrier = SPEED_OF_LIGHT / geom.wavelength();
        Ok(RadarTarget {
            dir,
            range,
            radial_speed,
            rcs,
            alpha,
            delay: 2.0 * range / SPEED_OF_LIGHT,
            doppler: 2.0 * radial_speed * carrier / SPEED_OF_LIGHT,
        })
    }

    /// Rotates the complex amplitude by `phase` radians.
    pub fn with_alpha_phase(mut self, phase: f64) -> Self {
        self.alpha = C64::from_polar(self.alpha.norm(), phase);
        self
    }

    /// Replaces the complex amplitude, keeping geometry, delay and Doppler.
    pub fn with_alpha(mut self, alpha: C64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn direction(&self) -> Direction {
        self.dir
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn radial_speed(&self) -> f64 {
        self.radial_speed
    }

    pub fn rcs(&self) -> f64 {
        self.rcs
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    /// Round-trip delay `τ = 2R/c`.
    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// Doppler shift `ν = 2·v·f_c/c`.
    pub fn doppler(&self) -> f64 {
        self.doppler
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_sqr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geom(n_y: usize, n_z: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(n_y, n_z, 0.1).unwrap()
    }

    // Sample mean and standard error of ‖h‖² over `n` draws.
    fn energy_stats(n: usize, mut draw: impl FnMut() -> UserChannel) -> (f64, f64) {
        let xs: Vec<f64> = (0..n).map(|_| norm_sqr(&draw().h)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn rayleigh_energy_matches_beta_times_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mean, se) = energy_stats(10_000, || rayleigh_channel(0.7, 16, &mut rng).unwrap());
        assert!((mean - 0.7 * 16.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn rayleigh_zero_beta_is_zero_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = rayleigh_channel(0.0, 5, &mut rng).unwrap();
        assert!(ch.h.iter().all(|x| *x == C64::new(0.0, 0.0)));
        assert!(rayleigh_channel(-1.0, 5, &mut rng).is_err());
    }

    #[test]
    fn draws_are_reproducible_from_seed() {
        let g = geom(3, 3);
        let dir = Direction::new(0.3, 1.2).unwrap();
        let a = rice_channel(1.0, 2.0, dir, &g, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = rice_channel(1.0, 2.0, dir, &g, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn los_energy_is_exact_and_broadside_is_flat() {
        let g = geom(4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let ch = los_channel(0.5, Direction::new(0.3, 1.2).unwrap(), &g, &mut rng).unwrap();
            assert!((norm_sqr(&ch.h) - 0.5 * 8.0).abs() < 1e-12);
        }
        let ch = los_channel(2.0, Direction::new(0.0, core::f64::consts::FRAC_PI_2).unwrap(), &g, &mut rng).unwrap();
        let psi = ch.los_phase.unwrap();
        for x in &ch.h {
            assert!((x - C64::from_polar(2f64.sqrt(), psi)).norm() < 1e-12);
        }
    }

    #[test]
    fn los_matches_scalar_oracle_for_drawn_phase() {
        let g = geom(2, 2);
        let (az, el) = (0.3f64, 1.2f64);
        let ch = los_channel(0.5, Direction::new(az, el).unwrap(), &g, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let psi = ch.los_phase.unwrap();
        let mut idx = 0;
        for ay in 0..2 {
            for azi in 0..2 {
                let phase = psi - PI * (ay as f64 * az.sin() * el.sin() + azi as f64 * el.cos());
                let want = C64::new(0.5f64.sqrt() * phase.cos(), 0.5f64.sqrt() * phase.sin());
                assert!((ch.h[idx] - want).norm() < 1e-12);
                idx += 1;
            }
        }
    }

    #[test]
    fn rice_energy_and_k_zero_matches_rayleigh_moments() {
        let g = geom(4, 4);
        let dir = Direction::new(-0.4, 1.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mean, se) = energy_stats(10_000, || rice_channel(0.3, 4.0, dir, &g, &mut rng).unwrap());
        assert!((mean - 0.3 * 16.0).abs() < 3.0 * se, "mean {mean} se {se}");

        // K = 0 against Rayleigh: same first and second moments of ‖h‖²
        let (m_rice, se_rice) = energy_stats(10_000, || rice_channel(0.3, 0.0, dir, &g, &mut rng).unwrap());
        let (m_ray, se_ray) = energy_stats(10_000, || rayleigh_channel(0.3, 16, &mut rng).unwrap());
        assert!((m_rice - m_ray).abs() < 3.0 * se_rice.hypot(se_ray));
        assert!((se_rice / se_ray - 1.0).abs() < 0.05);
    }

    #[test]
    fn rice_large_k_approaches_los() {
        let g = geom(3, 2);
        let dir = Direction::new(0.2, 1.4).unwrap();
        let ch = rice_channel(1.0, 1e12, dir, &g, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let los: Vec<C64> = g
            .steering_vector(dir)
            .iter()
            .map(|a| a * C64::from_polar(1.0, ch.los_phase.unwrap()))
            .collect();
        for (x, y) in ch.h.iter().zip(&los) {
            assert!((x - y).norm() < 1e-5);
        }
    }

    #[test]
    fn k_factor_cases() {
        assert_eq!(rice_k_factor(10.0, DEFAULT_K_MAX).unwrap(), DEFAULT_K_MAX);
        assert_eq!(rice_k_factor(18.0, DEFAULT_K_MAX).unwrap(), DEFAULT_K_MAX);
        assert!((k_factor_from_probability(0.5, DEFAULT_K_MAX) - 1.0).abs() < 1e-15);
        // d = 100 m: p = 0.18·(1 − e^{−100/63}) + e^{−100/63}
        let e = (-100.0f64 / 63.0).exp();
        let p = 0.18 * (1.0 - e) + e;
        let k = rice_k_factor(100.0, DEFAULT_K_MAX).unwrap();
        assert!((k - p / (1.0 - p)).abs() < 1e-12);
        assert!((k - 0.532_968_409_939_402_5).abs() < 1e-12);
        assert!(rice_k_factor(0.0, DEFAULT_K_MAX).is_err());
    }

    #[test]
    fn round_trip_loss_and_alpha() {
        let l = round_trip_loss(100.0, 0.1);
        assert!((l / 1.984_401_707_539_188_3e13 - 1.0).abs() < 1e-12);
        assert!((10.0 * l.log10() - 132.976).abs() < 1e-3);
        assert_eq!(round_trip_loss(200.0, 0.1) / l, 16.0);

        let a = target_alpha(100, 0.1253, 200.0, 0.1).unwrap();
        assert!((a.re - 1.986_555_707_397_517e-6).abs() < 1e-18);
        assert_eq!(a.im, 0.0);
        let half = target_alpha(100, 0.1253, 400.0, 0.1).unwrap();
        assert_eq!(half.re / a.re, 0.25);
        assert!(target_alpha(100, 0.1253, 0.0, 0.1).is_err());
    }

    #[test]
    fn target_delay_and_doppler() {
        let g = geom(10, 10);
        let t = RadarTarget::new(Direction::new(0.0, 1.0).unwrap(), 150.0, 20.0, 0.1253, &g).unwrap();
        assert_eq!(t.delay(), 2.0 * 150.0 / SPEED_OF_LIGHT);
        assert_eq!(t.doppler(), 2.0 * 20.0 * (SPEED_OF_LIGHT / 0.1) / SPEED_OF_LIGHT);
        let rotated = t.with_alpha_phase(1.0);
        assert!((rotated.alpha().norm() - t.alpha().norm()).abs() < 1e-20);
    }

    #[test]
    fn three_slope_constants() {
        let cfg = PathlossConfig {
            shadowing_db: 0.0,
            ..PathlossConfig::default()
        };
        let user = UserGeometry::from_position([30.0, 40.0, 15.0], 15.0).unwrap();
        assert_eq!(user.distance_3d, 50.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let beta = pathloss(PathlossModel::ThreeSlope, &cfg, &user, 3e9, &mut rng);
        assert!((beta / 1e-10 - 1.0).abs() < 1e-12);
        // d = 20 m sits on the 35 dB/decade segment
        assert!((cfg.median_loss_db(PathlossModel::ThreeSlope, 20.0, 3e9) - (100.0 - 35.0 * 2.5f64.log10())).abs() < 1e-12);
        // continuity at the near breakpoint
        let lo = cfg.median_loss_db(PathlossModel::ThreeSlope, 10.0 - 1e-9, 3e9);
        let hi = cfg.median_loss_db(PathlossModel::ThreeSlope, 10.0 + 1e-9, 3e9);
        assert!((lo - hi).abs() < 1e-6);
        // LoS street model at 3 GHz, 50 m
        let los = cfg.median_loss_db(PathlossModel::Los3gpp, 50.0, 3e9);
        assert!((los - (28.0 + 22.0 * 50f64.log10() + 20.0 * 3f64.log10())).abs() < 1e-12);
    }

    #[test]
    fn pathloss_is_monotone_without_shadowing_and_deterministic() {
        let cfg = PathlossConfig {
            shadowing_db: 0.0,
            ..PathlossConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for model in [PathlossModel::ThreeSlope, PathlossModel::Los3gpp, PathlossModel::RiceBase] {
            let mut last = f64::INFINITY;
            for i in 1..200 {
                let u = UserGeometry::from_position([i as f64, 5.0, 1.65], 15.0).unwrap();
                let b = pathloss(model, &cfg, &u, 3e9, &mut rng);
                assert!(b < last);
                assert_eq!(b, pathloss(model, &cfg, &u, 3e9, &mut rng));
                last = b;
            }
        }
    }
}
