//! Downlink achievable rates for pilot-matched and LMMSE channel estimates,
//! and a Monte Carlo estimate of every SINR term.
//!
//! The closed forms correspond to the beams `w_j = ĥ_j/√γ_j` (PM) and
//! `w_j = ĥ_j/√γ̃_j` (LMMSE), for which `E[h_jᴴ w_j] = √γ_j`. The radar beam is
//! treated as deterministic given the estimates.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::array::ArrayGeometry;
use crate::estimation::{hbar, lmmse_estimate, pilot_rx, pm_estimate, Estimator, HbarMatrix, LmmseStats, PilotBook};
use crate::linalg::{dot, norm_sqr, CMatrix};
use crate::propagation::{complex_normal, ChannelParams};
use crate::{Error, Result, C64};

/// Which fourth-moment expressions feed the contamination terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentConvention {
    /// Moments of the channel models:
    /// `δ_k = E‖h_k‖⁴ − tr(H̄_k²)` and
    /// `δ̃_j^{(k)} = E|h_kᴴE_jᴴh_k|² − tr(E_jᴴH̄_kE_jH̄_k)`.
    #[default]
    Exact,
    /// The closed forms as published: Rice `δ_k = c²N_A(N_A + 2K_k)` and
    /// `δ̃_j^{(k)} = c²[tr(E_jᴴ) + 2K_k Re(aᴴE_jᴴa·tr E_j)]`, `c = β_k/(K_k + 1)`.
    Printed,
}

/// `γ_k = tr(H̄_k)`.
pub fn gamma_pm(hbar_k: &HbarMatrix) -> f64 {
    hbar_k.trace()
}

/// `γ̃_k = √η_{p,k} tr(H̄_k E_k)`.
pub fn gamma_lmmse(hbar_k: &HbarMatrix, e_k: &CMatrix, eta_p_k: f64) -> f64 {
    eta_p_k.sqrt() * hbar_k.trace_with(e_k).re
}

/// `δ_k` of the pilot-matched rate.
pub fn delta_pm(hbar_k: &HbarMatrix, convention: MomentConvention) -> f64 {
    let n = hbar_k.dim() as f64;
    let c = hbar_k.identity_weight();
    let d = hbar_k.rank_one_weight();
    match convention {
        MomentConvention::Exact => c * c * n * n + 2.0 * c * d * norm_sqr(hbar_k.steering()) * n,
        MomentConvention::Printed => c * c * n * n + 2.0 * c * d * n,
    }
}

/// `δ̃_j^{(k)}` of the LMMSE rate, for user `k` with correlation `hbar_k` and filter `E_j`.
pub fn delta_lmmse(hbar_k: &HbarMatrix, e_j: &CMatrix, convention: MomentConvention) -> f64 {
    let c = hbar_k.identity_weight();
    let d = hbar_k.rank_one_weight();
    let tr = e_j.trace();
    let rice = if d != 0.0 && c != 0.0 {
        // aᴴE_jᴴa = conj(aᴴE_ja)
        2.0 * c * d * (e_j.quad_form(hbar_k.steering()).conj() * tr).re
    } else {
        0.0
    };
    match convention {
        MomentConvention::Exact => c * c * tr.norm_sqr() + rice,
        MomentConvention::Printed => c * c * tr.re + rice,
    }
}

/// `(δ_k, δ̃_j^{(k)})`; the second entry is present when `E_j` is given.
pub fn delta_terms(hbar_k: &HbarMatrix, e_j: Option<&CMatrix>, convention: MomentConvention) -> (f64, Option<f64>) {
    (delta_pm(hbar_k, convention), e_j.map(|e| delta_lmmse(hbar_k, e, convention)))
}

/// Coherence block of `τ_c` samples, `τ_p` of which carry pilots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameTiming {
    tau_c: usize,
    tau_p: usize,
}

impl FrameTiming {
    pub const DEFAULT_TAU_C: usize = 168;

    pub fn new(tau_c: usize, tau_p: usize) -> Result<Self> {
        if tau_p == 0 || tau_p >= tau_c {
            return Err(Error::invalid("tau_p", "must satisfy 0 < tau_p < tau_c"));
        }
        Ok(FrameTiming { tau_c, tau_p })
    }

    pub fn tau_c(&self) -> usize {
        self.tau_c
    }

    pub fn tau_p(&self) -> usize {
        self.tau_p
    }

    pub fn tau_d(&self) -> usize {
        self.tau_c - self.tau_p
    }

    /// `τ_d/τ_c`.
    pub fn prefactor(&self) -> f64 {
        self.tau_d() as f64 / self.tau_c as f64
    }
}

/// Everything the closed-form rates need besides the LMMSE filters.
#[derive(Debug, Clone, Copy)]
pub struct RateInputs<'a> {
    pub book: &'a PilotBook,
    pub hbars: &'a [HbarMatrix],
    /// `η_k`.
    pub data_powers: &'a [f64],
    /// `η_R`.
    pub radar_power: f64,
    pub radar_beam: &'a [C64],
    /// Uplink pilot noise `σ_w²`.
    pub pilot_noise_var: f64,
    /// Downlink noise `σ_z²`.
    pub noise_var: f64,
    pub frame: FrameTiming,
    pub convention: MomentConvention,
}

impl RateInputs<'_> {
    fn validate(&self) -> Result<()> {
        let k = self.book.n_users();
        for len in [self.hbars.len(), self.data_powers.len()] {
            if len != k {
                return Err(Error::DimensionMismatch { expected: k, found: len });
            }
        }
        let n = self.hbars.first().map_or(0, HbarMatrix::dim);
        if self.radar_beam.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.radar_beam.len(),
            });
        }
        let scalars = [self.radar_power, self.pilot_noise_var, self.noise_var];
        if self.data_powers.iter().chain(&scalars).any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid("powers", "must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// SINR of one user split into its expectation terms.
///
/// `SINR = desired / (Σ_j interference_j − self_subtraction + radar_leakage + noise)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTerms {
    pub desired: f64,
    /// `η_j E|h_kᴴ w_j|²` for every `j`, including `j = k`.
    pub interference: Vec<f64>,
    pub self_subtraction: f64,
    pub radar_leakage: f64,
    pub noise: f64,
}

impl SinrTerms {
    pub fn denominator(&self) -> f64 {
        self.interference.iter().sum::<f64>() - self.self_subtraction + self.radar_leakage + self.noise
    }

    pub fn sinr(&self) -> f64 {
        self.desired / self.denominator()
    }

    fn magnitude(&self) -> f64 {
        self.interference.iter().map(|v| v.abs()).sum::<f64>() + self.self_subtraction.abs() + self.radar_leakage.abs() + self.noise.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserRate {
    /// bit/s/Hz.
    pub rate: f64,
    pub sinr: f64,
    pub terms: SinrTerms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub estimator: Estimator,
    pub prefactor: f64,
    pub users: Vec<UserRate>,
}

impl RateReport {
    pub fn rates(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.rate).collect()
    }
}

fn finish(estimator: Estimator, frame: FrameTiming, terms: Vec<SinrTerms>) -> Result<RateReport> {
    let prefactor = frame.prefactor();
    let users = terms
        .into_iter()
        .enumerate()
        .map(|(user, terms)| {
            let denominator = terms.denominator();
            if !(denominator > 1e-12 * terms.magnitude()) {
                return Err(Error::ModelViolation { user, denominator });
            }
            let sinr = terms.desired / denominator;
            Ok(UserRate {
                rate: prefactor * (1.0 + sinr).log2(),
                sinr,
                terms,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RateReport {
        estimator,
        prefactor,
        users,
    })
}

fn positive_gammas(gammas: &[f64]) -> Result<()> {
    if gammas.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::invalid("gamma", "every beam normalization must be positive"));
    }
    Ok(())
}

/// `tr(R_{y,j} H̄_k)` from the structured correlations.
fn trace_ry_hbar(inputs: &RateInputs<'_>, j: usize, k: usize) -> f64 {
    let hk = &inputs.hbars[k];
    let mut t = inputs.pilot_noise_var * hk.trace();
    for (i, hi) in inputs.hbars.iter().enumerate() {
        let w = inputs.book.power(i) * inputs.book.overlap(i, j);
        if w != 0.0 {
            t += w * hi.trace_product(hk);
        }
    }
    t
}

/// Closed-form rates with pilot-matched estimates.
pub fn rate_pm(inputs: &RateInputs<'_>) -> Result<RateReport> {
    inputs.validate()?;
    let k_users = inputs.book.n_users();
    let gammas: Vec<f64> = inputs.hbars.iter().map(gamma_pm).collect();
    positive_gammas(&gammas)?;
    if inputs.book.powers().iter().any(|p| !(*p > 0.0)) {
        return Err(Error::invalid("pilot power", "must be positive for pilot-matched estimation"));
    }
    let terms = (0..k_users)
        .map(|k| {
            let hk = &inputs.hbars[k];
            let delta = delta_pm(hk, inputs.convention);
            let eta_pk = inputs.book.power(k);
            let interference = (0..k_users)
                .map(|j| {
                    let ratio = inputs.data_powers[j] / inputs.book.power(j);
                    ratio * (trace_ry_hbar(inputs, j, k) / gammas[j] + eta_pk * delta / gammas[j] * inputs.book.overlap(k, j))
                })
                .collect();
            let desired = inputs.data_powers[k] * gammas[k];
            SinrTerms {
                desired,
                interference,
                self_subtraction: desired,
                radar_leakage: inputs.radar_power * hk.quad_form(inputs.radar_beam),
                noise: inputs.noise_var,
            }
        })
        .collect();
    finish(Estimator::PilotMatched, inputs.frame, terms)
}

/// `γ̃_j` for every user.
pub fn lmmse_gammas(hbars: &[HbarMatrix], stats: &LmmseStats, book: &PilotBook) -> Vec<f64> {
    hbars
        .iter()
        .zip(&stats.e)
        .enumerate()
        .map(|(j, (h, e))| gamma_lmmse(h, e, book.power(j)))
        .collect()
}

/// Closed-form rates with LMMSE estimates; `stats` must come from the same
/// pilot book, correlations and pilot noise.
pub fn rate_lmmse(inputs: &RateInputs<'_>, stats: &LmmseStats) -> Result<RateReport> {
    inputs.validate()?;
    let k_users = inputs.book.n_users();
    if stats.n_users() != k_users {
        return Err(Error::DimensionMismatch {
            expected: k_users,
            found: stats.n_users(),
        });
    }
    let gammas = lmmse_gammas(inputs.hbars, stats, inputs.book);
    positive_gammas(&gammas)?;
    // H̄_j E_j, so that tr(H̄_j E_j H̄_k) = tr(H̄_k · H̄_j E_j)
    let hbar_e: Vec<CMatrix> = inputs.hbars.iter().zip(&stats.e).map(|(h, e)| h.left_mul(e)).collect();
    let terms = (0..k_users)
        .map(|k| {
            let hk = &inputs.hbars[k];
            let eta_pk = inputs.book.power(k);
            let interference = (0..k_users)
                .map(|j| {
                    let first = inputs.book.power(j).sqrt() * hk.trace_with(&hbar_e[j]).re / gammas[j];
                    let overlap = inputs.book.overlap(k, j);
                    let second = if overlap != 0.0 {
                        eta_pk * delta_lmmse(hk, &stats.e[j], inputs.convention) / gammas[j] * overlap
                    } else {
                        0.0
                    };
                    inputs.data_powers[j] * (first + second)
                })
                .collect();
            let desired = inputs.data_powers[k] * gammas[k];
            SinrTerms {
                desired,
                interference,
                self_subtraction: desired,
                radar_leakage: inputs.radar_power * hk.quad_form(inputs.radar_beam),
                noise: inputs.noise_var,
            }
        })
        .collect();
    finish(Estimator::Lmmse, inputs.frame, terms)
}

/// How the Monte Carlo oracle scales the matched beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamNormalization {
    /// `w_j = ĥ_j/√γ_j`, the beams behind the closed forms.
    #[default]
    Statistical,
    /// `w_j = ĥ_j/‖ĥ_j‖`.
    Instantaneous,
}

/// A downlink scenario for the Monte Carlo oracle.
#[derive(Debug, Clone, Copy)]
pub struct McSetup<'a> {
    pub geom: &'a ArrayGeometry,
    pub params: &'a [ChannelParams],
    pub book: &'a PilotBook,
    pub pilot_noise_var: f64,
    pub data_powers: &'a [f64],
    pub radar_power: f64,
    pub radar_beam: &'a [C64],
    pub noise_var: f64,
    pub estimator: Estimator,
    pub normalization: BeamNormalization,
}

/// Running sums of the quantities whose means form the SINR terms.
#[derive(Debug, Clone, PartialEq)]
pub struct McAccumulator {
    k: usize,
    trials: usize,
    gain: Vec<C64>,
    cross: Vec<f64>,
    radar: Vec<f64>,
    noise: Vec<f64>,
}

/// Correlations, filters and beam normalizers shared by all trials.
#[derive(Debug, Clone)]
pub struct McPrepared {
    hbars: Vec<HbarMatrix>,
    stats: Option<LmmseStats>,
    gammas: Vec<f64>,
}

impl McPrepared {
    pub fn new(setup: &McSetup<'_>) -> Result<Self> {
        let k = setup.book.n_users();
        for len in [setup.params.len(), setup.data_powers.len()] {
            if len != k {
                return Err(Error::DimensionMismatch { expected: k, found: len });
            }
        }
        let hbars: Vec<HbarMatrix> = setup.params.iter().map(|p| hbar(p, setup.geom)).collect();
        let (stats, gammas) = match setup.estimator {
            Estimator::PilotMatched => (None, hbars.iter().map(gamma_pm).collect()),
            Estimator::Lmmse => {
                let stats = LmmseStats::new(setup.book, &hbars, setup.pilot_noise_var)?;
                let g = lmmse_gammas(&hbars, &stats, setup.book);
                (Some(stats), g)
            }
        };
        positive_gammas(&gammas)?;
        Ok(McPrepared { hbars, stats, gammas })
    }

    pub fn hbars(&self) -> &[HbarMatrix] {
        &self.hbars
    }

    pub fn stats(&self) -> Option<&LmmseStats> {
        self.stats.as_ref()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }
}

impl McAccumulator {
    pub fn new(k: usize) -> Self {
        McAccumulator {
            k,
            trials: 0,
            gain: vec![C64::new(0.0, 0.0); k],
            cross: vec![0.0; k * k],
            radar: vec![0.0; k],
            noise: vec![0.0; k],
        }
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    /// One channel, pilot and noise realization.
    pub fn add_trial<R: Rng + ?Sized>(&mut self, setup: &McSetup<'_>, prep: &McPrepared, rng: &mut R) -> Result<()> {
        let channels = setup.params.iter().map(|p| p.draw(setup.geom, rng)).collect::<Result<Vec<_>>>()?;
        let y = pilot_rx(&channels, setup.book, setup.pilot_noise_var, rng)?;
        let h_hat = match setup.estimator {
            Estimator::PilotMatched => pm_estimate(&y, setup.book)?.h_hat,
            Estimator::Lmmse => prep
                .stats
                .as_ref()
                .ok_or(Error::invalid("lmmse", "filter statistics missing"))?
                .estimate(&y, setup.book)?,
        };
        let beams: Vec<Vec<C64>> = h_hat
            .iter()
            .zip(&prep.gammas)
            .map(|(h, g)| {
                let scale = match setup.normalization {
                    BeamNormalization::Statistical => 1.0 / g.sqrt(),
                    BeamNormalization::Instantaneous => 1.0 / norm_sqr(h).sqrt(),
                };
                h.iter().map(|x| x * scale).collect()
            })
            .collect();
        for (k, ch) in channels.iter().enumerate() {
            for (j, w) in beams.iter().enumerate() {
                let g = dot(&ch.h, w);
                if j == k {
                    self.gain[k] += g;
                }
                self.cross[k * self.k + j] += g.norm_sqr();
            }
            self.radar[k] += dot(&ch.h, setup.radar_beam).norm_sqr();
            if setup.noise_var > 0.0 {
                self.noise[k] += (complex_normal(rng) * setup.noise_var.sqrt()).norm_sqr();
            }
        }
        self.trials += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &McAccumulator) {
        self.trials += other.trials;
        self.gain.iter_mut().zip(&other.gain).for_each(|(a, b)| *a += b);
        self.cross.iter_mut().zip(&other.cross).for_each(|(a, b)| *a += b);
        self.radar.iter_mut().zip(&other.radar).for_each(|(a, b)| *a += b);
        self.noise.iter_mut().zip(&other.noise).for_each(|(a, b)| *a += b);
    }

    /// Sample means arranged like the closed-form [`SinrTerms`].
    pub fn terms(&self, setup: &McSetup<'_>) -> Vec<SinrTerms> {
        let t = self.trials.max(1) as f64;
        (0..self.k)
            .map(|k| {
                let desired = setup.data_powers[k] * (self.gain[k] / t).norm_sqr();
                SinrTerms {
                    desired,
                    interference: (0..self.k).map(|j| setup.data_powers[j] * self.cross[k * self.k + j] / t).collect(),
                    self_subtraction: desired,
                    radar_leakage: setup.radar_power * self.radar[k] / t,
                    noise: self.noise[k] / t,
                }
            })
            .collect()
    }
}

/// Sampled SINR terms over `trials` independent realizations.
pub fn mc_rate_bound<R: Rng + ?Sized>(setup: &McSetup<'_>, trials: usize, rng: &mut R) -> Result<Vec<SinrTerms>> {
    let prep = McPrepared::new(setup)?;
    let mut acc = McAccumulator::new(setup.book.n_users());
    for _ in 0..trials {
        acc.add_trial(setup, &prep, rng)?;
    }
    Ok(acc.terms(setup))
}

/// Closed-form report for the scenario described by `setup`.
pub fn closed_form_for(setup: &McSetup<'_>, prep: &McPrepared, frame: FrameTiming, convention: MomentConvention) -> Result<RateReport> {
    let inputs = RateInputs {
        book: setup.book,
        hbars: &prep.hbars,
        data_powers: setup.data_powers,
        radar_power: setup.radar_power,
        radar_beam: setup.radar_beam,
        pilot_noise_var: setup.pilot_noise_var,
        noise_var: setup.noise_var,
        frame,
        convention,
    };
    match setup.estimator {
        Estimator::PilotMatched => rate_pm(&inputs),
        Estimator::Lmmse => {
            let stats = prep.stats.as_ref().ok_or(Error::invalid("lmmse", "filter statistics missing"))?;
            rate_lmmse(&inputs, stats)
        }
    }
}

/// Convenience for a full estimate: returns the estimates and the closed-form rates.
pub fn estimate_and_rate(
    y_pilot: &CMatrix,
    inputs: &RateInputs<'_>,
    estimator: Estimator,
) -> Result<(Vec<Vec<C64>>, RateReport)> {
    match estimator {
        Estimator::PilotMatched => Ok((pm_estimate(y_pilot, inputs.book)?.h_hat, rate_pm(inputs)?)),
        Estimator::Lmmse => {
            let est = lmmse_estimate(y_pilot, inputs.book, inputs.hbars, inputs.pilot_noise_var)?;
            let stats = est.lmmse.as_ref().ok_or(Error::invalid("lmmse", "filter statistics missing"))?;
            let report = rate_lmmse(inputs, stats)?;
            Ok((est.h_hat, report))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::Direction;
    use crate::beamforming::{pbr_beamformer, zfr_beamformer};
    use crate::estimation::make_pilots;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geom(n_y: usize, n_z: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(n_y, n_z, 0.1).unwrap()
    }

    fn dirs() -> [Direction; 4] {
        [
            Direction::new(0.4, 1.9).unwrap(),
            Direction::new(-0.8, 2.1).unwrap(),
            Direction::new(0.1, 1.7).unwrap(),
            Direction::new(1.0, 1.5).unwrap(),
        ]
    }

    fn params(model: usize, k: usize) -> Vec<ChannelParams> {
        dirs()
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, &dir)| {
                let beta = 0.6 + 0.3 * i as f64;
                match model {
                    0 => ChannelParams::Rayleigh { beta },
                    1 => ChannelParams::LineOfSight { beta, dir },
                    _ => ChannelParams::Rice { beta, k_factor: 1.5 + i as f64, dir },
                }
            })
            .collect()
    }

    #[test]
    fn gamma_examples() {
        let g = geom(8, 8);
        assert_eq!(gamma_pm(&hbar(&ChannelParams::Rayleigh { beta: 1.0 }, &g)), 64.0);
        let los = hbar(&ChannelParams::LineOfSight { beta: 0.3, dir: dirs()[0] }, &g);
        assert!((gamma_pm(&los) - 0.3 * 64.0).abs() < 1e-12);

        let g = geom(4, 4);
        let h = hbar(&ChannelParams::Rayleigh { beta: 2.0 }, &g);
        let book = make_pilots(1, 1).unwrap().with_uniform_power(0.5).unwrap();
        let noise = 1e-9;
        let stats = LmmseStats::new(&book, core::slice::from_ref(&h), noise).unwrap();
        let got = gamma_lmmse(&h, &stats.e[0], 0.5);
        // η β² N / (η β + σ²)
        let want = 0.5 * 4.0 * 16.0 / (1.0 + noise);
        assert!((got - want).abs() < 1e-12 * want);
        assert!((got - 32.0).abs() < 1e-6);
    }

    #[test]
    fn delta_closed_forms() {
        let g = geom(3, 2);
        let ray = hbar(&ChannelParams::Rayleigh { beta: 0.7 }, &g);
        let los = hbar(&ChannelParams::LineOfSight { beta: 0.7, dir: dirs()[1] }, &g);
        let rice0 = hbar(&ChannelParams::Rice { beta: 0.7, k_factor: 0.0, dir: dirs()[1] }, &g);
        let e = CMatrix::from_fn(6, 6, |i, j| C64::new(0.1 * (i + 2 * j) as f64, 0.05 * i as f64 - 0.02 * j as f64));
        for conv in [MomentConvention::Exact, MomentConvention::Printed] {
            assert_eq!(delta_terms(&los, Some(&e), conv), (0.0, Some(0.0)));
            assert!((delta_pm(&ray, conv) - 0.49 * 36.0).abs() < 1e-12);
            assert!((delta_pm(&rice0, conv) - 0.49 * 36.0).abs() < 1e-12);
        }
        let tr = e.trace();
        assert!((delta_lmmse(&ray, &e, MomentConvention::Printed) - 0.49 * tr.re).abs() < 1e-12);
        assert!((delta_lmmse(&ray, &e, MomentConvention::Exact) - 0.49 * tr.norm_sqr()).abs() < 1e-12);
        let rice = hbar(&ChannelParams::Rice { beta: 0.7, k_factor: 3.0, dir: dirs()[1] }, &g);
        let c = 0.7 / 4.0;
        assert!((delta_pm(&rice, MomentConvention::Printed) - c * c * 6.0 * (6.0 + 6.0)).abs() < 1e-12);
        assert!((delta_pm(&rice, MomentConvention::Exact) - c * c * 36.0 * 7.0).abs() < 1e-12);
    }

    #[test]
    fn exact_moments_match_sampled_fourth_moments() {
        let g = geom(2, 2);
        let e = CMatrix::from_fn(4, 4, |i, j| C64::new(0.3 * i as f64 - 0.1 * j as f64 + 0.5, 0.2 * (i * j) as f64 - 0.1));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in params(2, 1).into_iter().chain(params(0, 1)) {
            let h = hbar(&p, &g);
            let hd = h.to_dense();
            let eh = e.adjoint();
            let trials = 200_000;
            let (mut m4, mut q4) = (0.0, 0.0);
            for _ in 0..trials {
                let ch = p.draw(&g, &mut rng).unwrap();
                m4 += norm_sqr(&ch.h).powi(2);
                q4 += eh.quad_form(&ch.h).norm_sqr();
            }
            let delta = m4 / trials as f64 - hd.trace_product(&hd).re;
            let want = delta_pm(&h, MomentConvention::Exact);
            assert!((delta - want).abs() < 0.03 * want, "{delta} vs {want}");
            let sub = eh.matmul(&hd).unwrap().trace_product(&e.matmul(&hd).unwrap()).re;
            let tilde = q4 / trials as f64 - sub;
            let want = delta_lmmse(&h, &e, MomentConvention::Exact);
            assert!((tilde - want).abs() < 0.03 * want, "{tilde} vs {want}");
        }
    }

    fn frame() -> FrameTiming {
        FrameTiming::new(168, 4).unwrap()
    }

    #[test]
    fn frame_timing() {
        let f = FrameTiming::new(168, 10).unwrap();
        assert_eq!(f.tau_d(), 158);
        assert!((f.prefactor() - 158.0 / 168.0).abs() < 1e-15);
        assert!(FrameTiming::new(10, 10).is_err());
        assert!(FrameTiming::new(10, 0).is_err());
    }

    #[test]
    fn single_los_user_rate_and_guard() {
        let g = geom(4, 4);
        let p = [ChannelParams::LineOfSight { beta: 0.5, dir: dirs()[0] }];
        let hb: Vec<_> = p.iter().map(|q| hbar(q, &g)).collect();
        let book = make_pilots(1, 1).unwrap().with_uniform_power(0.2).unwrap();
        let beam = pbr_beamformer(&g, dirs()[2]);
        let f = FrameTiming::new(168, 1).unwrap();
        let mut inputs = RateInputs {
            book: &book,
            hbars: &hb,
            data_powers: &[0.3],
            radar_power: 0.0,
            radar_beam: &beam,
            pilot_noise_var: 0.0,
            noise_var: 0.01,
            frame: f,
            convention: MomentConvention::Exact,
        };
        let r = rate_pm(&inputs).unwrap();
        let want = f.prefactor() * (1.0f64 + 0.3 * 0.5 * 16.0 / 0.01).log2();
        assert!((r.users[0].rate - want).abs() < 1e-10);
        inputs.noise_var = 0.0;
        assert!(matches!(rate_pm(&inputs), Err(Error::ModelViolation { user: 0, .. })));
    }

    #[test]
    fn zfr_with_perfect_los_csi_removes_leakage() {
        let g = geom(4, 4);
        let p = params(1, 3);
        let hb: Vec<_> = p.iter().map(|q| hbar(q, &g)).collect();
        let truth: Vec<Vec<C64>> = p.iter().map(|q| g.steering_vector(q.los_direction().unwrap())).collect();
        let w = zfr_beamformer(&g, Direction::new(0.0, 1.2).unwrap(), &truth).unwrap();
        let book = make_pilots(3, 3).unwrap().with_uniform_power(0.2).unwrap();
        let mut inputs = RateInputs {
            book: &book,
            hbars: &hb,
            data_powers: &[0.1; 3],
            radar_power: 5.0,
            radar_beam: &w,
            pilot_noise_var: 0.01,
            noise_var: 0.01,
            frame: frame(),
            convention: MomentConvention::Exact,
        };
        let loud = rate_pm(&inputs).unwrap();
        for u in &loud.users {
            assert!(u.terms.radar_leakage.abs() < 1e-20);
        }
        inputs.radar_power = 0.0;
        let quiet = rate_pm(&inputs).unwrap();
        for (a, b) in loud.users.iter().zip(&quiet.users) {
            assert!((a.rate - b.rate).abs() < 1e-12);
        }
    }

    #[test]
    fn rates_fall_with_radar_power_and_pilot_overhead() {
        let g = geom(4, 2);
        for model in 0..3 {
            let p = params(model, 3);
            let hb: Vec<_> = p.iter().map(|q| hbar(q, &g)).collect();
            let book = make_pilots(3, 3).unwrap().with_uniform_power(0.2).unwrap();
            let beam = pbr_beamformer(&g, dirs()[0]);
            let stats = LmmseStats::new(&book, &hb, 0.05).unwrap();
            let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
            for eta_r in [0.0, 0.1, 1.0, 10.0] {
                let inputs = RateInputs {
                    book: &book,
                    hbars: &hb,
                    data_powers: &[0.1; 3],
                    radar_power: eta_r,
                    radar_beam: &beam,
                    pilot_noise_var: 0.05,
                    noise_var: 0.02,
                    frame: frame(),
                    convention: MomentConvention::Exact,
                };
                let pm = rate_pm(&inputs).unwrap().rates();
                let lm = rate_lmmse(&inputs, &stats).unwrap().rates();
                if let Some((ppm, plm)) = &prev {
                    assert!(pm.iter().zip(ppm).all(|(a, b)| a <= b));
                    assert!(lm.iter().zip(plm).all(|(a, b)| a <= b));
                }
                prev = Some((pm, lm));
            }
            let mk = |tau_p| RateInputs {
                book: &book,
                hbars: &hb,
                data_powers: &[0.1; 3],
                radar_power: 0.1,
                radar_beam: &beam,
                pilot_noise_var: 0.05,
                noise_var: 0.02,
                frame: FrameTiming::new(168, tau_p).unwrap(),
                convention: MomentConvention::Exact,
            };
            let short = rate_pm(&mk(3)).unwrap().rates();
            let long = rate_pm(&mk(6)).unwrap().rates();
            assert!(short.iter().zip(&long).all(|(a, b)| a > b));
        }
    }

    #[test]
    fn closed_form_terms_track_monte_carlo() {
        let g = geom(4, 2);
        let book = make_pilots(2, 3).unwrap().with_uniform_power(0.3).unwrap();
        let beam = pbr_beamformer(&g, dirs()[2]);
        for model in 0..3 {
            let p = params(model, 3);
            for estimator in Estimator::ALL {
                let setup = McSetup {
                    geom: &g,
                    params: &p,
                    book: &book,
                    pilot_noise_var: 0.1,
                    data_powers: &[0.2, 0.1, 0.15],
                    radar_power: 0.3,
                    radar_beam: &beam,
                    noise_var: 0.05,
                    estimator,
                    normalization: BeamNormalization::Statistical,
                };
                let prep = McPrepared::new(&setup).unwrap();
                let cf = closed_form_for(&setup, &prep, frame(), MomentConvention::Exact).unwrap();
                let mc = mc_rate_bound(&setup, 20_000, &mut ChaCha8Rng::seed_from_u64(model as u64)).unwrap();
                for (c, m) in cf.users.iter().map(|u| &u.terms).zip(&mc) {
                    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1e-300);
                    assert!(rel(c.desired, m.desired) < 0.05, "{model} {estimator:?} desired {} vs {}", c.desired, m.desired);
                    assert!(rel(c.radar_leakage, m.radar_leakage) < 0.05);
                    for (a, b) in c.interference.iter().zip(&m.interference) {
                        assert!(rel(*a, *b) < 0.05, "{model} {estimator:?} interference {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn noiseless_los_oracle_is_exact() {
        let g = geom(4, 2);
        let p = params(1, 3);
        let book = make_pilots(3, 3).unwrap().with_uniform_power(0.3).unwrap();
        let beam = pbr_beamformer(&g, dirs()[3]);
        let setup = McSetup {
            geom: &g,
            params: &p,
            book: &book,
            pilot_noise_var: 0.0,
            data_powers: &[0.2, 0.1, 0.15],
            radar_power: 0.3,
            radar_beam: &beam,
            noise_var: 0.0,
            estimator: Estimator::PilotMatched,
            normalization: BeamNormalization::Statistical,
        };
        let prep = McPrepared::new(&setup).unwrap();
        let cf = closed_form_for(&setup, &prep, frame(), MomentConvention::Exact).unwrap();
        let mc = mc_rate_bound(&setup, 1000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for (c, m) in cf.users.iter().zip(&mc) {
            assert!((c.sinr - m.sinr()).abs() <= 1e-6 * c.sinr);
        }
    }

    #[test]
    fn printed_rice_moment_can_break_the_variance_bound() {
        // the printed δ_k is small enough that the self term exceeds the interference sum
        let g = geom(4, 4);
        let p = params(2, 3);
        let hb: Vec<_> = p.iter().map(|q| hbar(q, &g)).collect();
        let book = make_pilots(2, 3).unwrap().with_uniform_power(0.3).unwrap();
        let beam = pbr_beamformer(&g, dirs()[2]);
        let mk = |convention| RateInputs {
            book: &book,
            hbars: &hb,
            data_powers: &[0.1; 3],
            radar_power: 0.1,
            radar_beam: &beam,
            pilot_noise_var: 0.05,
            noise_var: 0.02,
            frame: frame(),
            convention,
        };
        assert!(rate_pm(&mk(MomentConvention::Exact)).is_ok());
        assert!(matches!(rate_pm(&mk(MomentConvention::Printed)), Err(Error::ModelViolation { user: 1, .. })));
    }
}
