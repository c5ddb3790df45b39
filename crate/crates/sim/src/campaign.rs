//! Seeded Monte Carlo campaigns for the five experiment kinds.
//!
//! Every drop and trial draws from its own `trial_rng(seed, family, index)`
//! stream, so results are independent of the worker count and of the order
//! in which workers finish.

use std::collections::HashMap;

use jcas_core::array::{ArrayGeometry, Direction};
use jcas_core::beamforming::{radar_beamformer, BeamformerSet, RadarBeamKind};
use jcas_core::estimation::{
    hbar, make_pilots, pilot_rx, pm_estimate, Estimator, HbarMatrix, LmmseStats, PilotBook,
};
use jcas_core::propagation::{
    pathloss, rice_k_factor, ChannelModel, ChannelParams, PathlossConfig, PathlossModel, RadarTarget, UserGeometry,
};
use jcas_core::radar::{
    projected_terms, threshold_from_samples, BeamProjection, DelayDopplerGrid, DetectionEstimate, OfdmParams,
    SurfaceEvaluator, TargetEcho, TxPowers,
};
use jcas_core::rates::{rate_lmmse, rate_pm, FrameTiming, RateInputs, SinrTerms};
use jcas_core::scenario::{drop_users, trial_rng, DropRegion, PowerBudget, ScanSector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ArraySize, ConfigErrors, Experiment, ExperimentConfig, ScanMode};
use crate::fft::best_evaluator;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "JCAS_WORKERS";

const FAMILY_DROP: u64 = 1;
const FAMILY_SHADOW: u64 = 2;
const FAMILY_CHANNEL: u64 = 3;
const FAMILY_CALIBRATION: u64 = 4;
const FAMILY_DETECTION: u64 = 5;
const FAMILY_FALSE_ALARM: u64 = 6;
const FAMILY_PATTERN: u64 = 7;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("{context}: {source}")]
    Numeric {
        context: String,
        source: jcas_core::Error,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

trait Context<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T, RunError>;
}

impl<T> Context<T> for jcas_core::Result<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T, RunError> {
        self.map_err(|source| RunError::Numeric { context: f(), source })
    }
}

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|n: &usize| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// One drop of the cell: array, users with their channel statistics, powers,
/// OFDM numerology, noise and pilots.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub geom: ArrayGeometry,
    pub bs_height: f64,
    pub users: Vec<UserGeometry>,
    pub channels: Vec<ChannelParams>,
    pub target: Option<RadarTarget>,
    pub budget: PowerBudget,
    pub ofdm: OfdmParams,
    pub n0_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub noise_var: f64,
    pub book: PilotBook,
    pub seed: u64,
}

impl Scenario {
    /// Users of drop `drop` with `model` statistics, seen by `array`.
    pub fn build(cfg: &ExperimentConfig, array: ArraySize, model: ChannelModel, rcr_db: f64, drop: u64) -> Result<Self, RunError> {
        let geom = geometry(cfg, array)?;
        let users = drop_users(cfg.users, &region(cfg), &mut trial_rng(cfg.seed, FAMILY_DROP, drop)).context(|| format!("drop {drop}"))?;
        let channels = channel_params(cfg, model, &users, drop)?;
        Ok(Scenario {
            geom,
            bs_height: cfg.bs_height_m,
            users,
            channels,
            target: None,
            budget: cfg.budget(rcr_db),
            ofdm: cfg.ofdm(),
            n0_dbm_hz: cfg.n0_dbm_hz,
            noise_figure_db: cfg.noise_figure_db,
            noise_var: cfg.noise_var(),
            book: pilot_book(cfg)?,
            seed: cfg.seed,
        })
    }

    pub fn hbars(&self) -> Vec<HbarMatrix> {
        self.channels.iter().map(|p| hbar(p, &self.geom)).collect()
    }

    pub fn tx_powers(&self) -> TxPowers {
        TxPowers::from_budget(&self.budget, self.users.len(), &self.ofdm)
    }
}

pub fn region(cfg: &ExperimentConfig) -> DropRegion {
    DropRegion {
        x_min: cfg.x_min_m,
        x_max: cfg.x_max_m,
        y_abs_min: cfg.y_min_m,
        y_abs_max: cfg.y_max_m,
        user_height: cfg.user_height_m,
        bs_height: cfg.bs_height_m,
    }
}

pub fn geometry(cfg: &ExperimentConfig, array: ArraySize) -> Result<ArrayGeometry, RunError> {
    let lambda = cfg.wavelength();
    ArrayGeometry::new(array.n_y, array.n_z, cfg.spacing_wavelengths * lambda, lambda).context(|| format!("array {array}"))
}

pub fn target_direction(cfg: &ExperimentConfig) -> Result<Direction, RunError> {
    Direction::from_horizon_elevation(cfg.target_azimuth_deg.to_radians(), cfg.target_elevation_deg.to_radians())
        .context(|| "target direction".into())
}

pub fn pilot_book(cfg: &ExperimentConfig) -> Result<PilotBook, RunError> {
    make_pilots(cfg.effective_tau_p(), cfg.users)
        .and_then(|b| b.with_uniform_power(cfg.pilot_power()))
        .context(|| "pilot book".into())
}

/// Channel statistics of every user. Shadowing comes from its own stream
/// per drop, so all shadowed models see the same shadowing realisation.
pub fn channel_params(
    cfg: &ExperimentConfig,
    model: ChannelModel,
    users: &[UserGeometry],
    drop: u64,
) -> Result<Vec<ChannelParams>, RunError> {
    let pl = PathlossConfig {
        shadowing_db: cfg.shadowing_db,
        ..PathlossConfig::default()
    };
    pl.validate().context(|| "path loss".into())?;
    let mut rng = trial_rng(cfg.seed, FAMILY_SHADOW, drop);
    users
        .iter()
        .map(|u| {
            let beta = pathloss(PathlossModel::for_channel(model), &pl, u, cfg.carrier_hz, &mut rng);
            Ok(match model {
                ChannelModel::Rayleigh => ChannelParams::Rayleigh { beta },
                ChannelModel::LineOfSight => ChannelParams::LineOfSight { beta, dir: u.direction },
                ChannelModel::Rice => ChannelParams::Rice {
                    beta,
                    k_factor: rice_k_factor(u.distance_2d, cfg.k_max).context(|| "rice k-factor".into())?,
                    dir: u.direction,
                },
            })
        })
        .collect()
}

fn model_index(model: ChannelModel) -> u64 {
    ChannelModel::ALL.iter().position(|m| *m == model).unwrap_or(0) as u64
}

/// Stream family for the small-scale draws of one (array, model) pair.
fn channel_family(array: ArraySize, model: ChannelModel) -> u64 {
    FAMILY_CHANNEL ^ ((array.n_y as u64) << 40) ^ ((array.n_z as u64) << 20) ^ (model_index(model) << 8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub drop: usize,
    pub user: usize,
    pub array: ArraySize,
    pub model: ChannelModel,
    pub estimator: Estimator,
    pub kind: RadarBeamKind,
    pub rcr_db: f64,
    pub rate: f64,
    pub sinr: f64,
    pub terms: SinrTerms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    pub range_m: f64,
    pub kind: RadarBeamKind,
    pub rcr_db: f64,
    pub estimate: DetectionEstimate,
    pub threshold: f64,
    /// Per-trial decisions, in trial order.
    pub hits: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub kind: RadarBeamKind,
    pub rcr_db: f64,
    pub threshold: f64,
    pub calibration_trials: usize,
    /// False alarms over fresh H0 trials.
    pub check: DetectionEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternCut {
    Azimuth,
    Elevation,
}

impl PatternCut {
    pub fn name(self) -> &'static str {
        match self {
            PatternCut::Azimuth => "azimuth",
            PatternCut::Elevation => "elevation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternRow {
    pub kind: RadarBeamKind,
    pub cut: PatternCut,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCell {
    pub delay_s: f64,
    pub doppler_hz: f64,
    pub statistic: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CampaignResult {
    pub rates: Vec<RateRow>,
    pub detection: Vec<DetectionRow>,
    pub calibration: Vec<CalibrationRow>,
    pub pattern: Vec<PatternRow>,
    /// One H1 surface from the first detection point.
    pub surface: Vec<SurfaceCell>,
    /// Number of threshold calibrations actually run.
    pub calibrations: usize,
}

/// Runs `cfg` on a pool with [`workers_from_env`] threads.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, RunError> {
    run_campaign_with_workers(cfg, workers_from_env())
}

pub fn run_campaign_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<CampaignResult, RunError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    pool.install(|| match cfg.experiment {
        Experiment::RateCdf => rate_campaign(cfg, &cfg.arrays[..1]),
        Experiment::AntennaSweep => rate_campaign(cfg, &cfg.arrays),
        Experiment::DetectionVsRange => detection_campaign(cfg),
        Experiment::BeamPattern => pattern_campaign(cfg),
        Experiment::Calibration => calibration_campaign(cfg),
    })
}

fn rate_campaign(cfg: &ExperimentConfig, arrays: &[ArraySize]) -> Result<CampaignResult, RunError> {
    let per_drop = (0..cfg.drops)
        .into_par_iter()
        .map(|d| rate_drop(cfg, arrays, d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CampaignResult {
        rates: per_drop.into_iter().flatten().collect(),
        ..CampaignResult::default()
    })
}

/// Closed-form rates of every user in drop `drop` for each configured
/// array, model, estimator, radar beam and RCR.
pub fn rate_drop(cfg: &ExperimentConfig, arrays: &[ArraySize], drop: usize) -> Result<Vec<RateRow>, RunError> {
    let d = drop as u64;
    let mut drop_rng = trial_rng(cfg.seed, FAMILY_DROP, d);
    let users = drop_users(cfg.users, &region(cfg), &mut drop_rng).context(|| format!("drop {drop}"))?;
    let scan = match cfg.scan {
        ScanMode::Random => ScanSector::default().sample(&mut drop_rng).context(|| "scan direction".into())?,
        ScanMode::Target => target_direction(cfg)?,
    };
    let book = pilot_book(cfg)?;
    let ofdm = cfg.ofdm();
    let noise = cfg.noise_var();
    let frame = FrameTiming::new(cfg.tau_c, cfg.effective_tau_p()).context(|| "frame timing".into())?;
    let mut rows = Vec::new();
    for &array in arrays {
        let geom = geometry(cfg, array)?;
        for &model in &cfg.models {
            let where_ = || format!("drop {drop}, array {array}, {}", model.name());
            let params = channel_params(cfg, model, &users, d)?;
            let hbars: Vec<HbarMatrix> = params.iter().map(|p| hbar(p, &geom)).collect();
            let mut rng = trial_rng(cfg.seed, channel_family(array, model), d);
            let channels = params.iter().map(|p| p.draw(&geom, &mut rng)).collect::<Result<Vec<_>, _>>().context(where_)?;
            let y = pilot_rx(&channels, &book, noise, &mut rng).context(where_)?;
            let stats = if cfg.estimators.contains(&Estimator::Lmmse) {
                Some(LmmseStats::new(&book, &hbars, noise).context(where_)?)
            } else {
                None
            };
            for &estimator in &cfg.estimators {
                let h_hat = match (&stats, estimator) {
                    (Some(s), Estimator::Lmmse) => s.estimate(&y, &book),
                    _ => pm_estimate(&y, &book).map(|r| r.h_hat),
                }
                .context(where_)?;
                for &kind in &cfg.kinds {
                    let w_r = radar_beamformer(kind, &geom, scan, &h_hat).context(|| format!("{}, {}", where_(), kind.name()))?;
                    for &rcr_db in &cfg.rcr_db {
                        let powers = TxPowers::from_budget(&cfg.budget(rcr_db), cfg.users, &ofdm);
                        let inputs = RateInputs {
                            book: &book,
                            hbars: &hbars,
                            data_powers: &powers.data,
                            radar_power: powers.radar,
                            radar_beam: &w_r,
                            pilot_noise_var: noise,
                            noise_var: noise,
                            frame,
                            convention: cfg.moments,
                        };
                        let report = match (&stats, estimator) {
                            (Some(s), Estimator::Lmmse) => rate_lmmse(&inputs, s),
                            _ => rate_pm(&inputs),
                        }
                        .context(|| format!("{}, {}, {}, rcr {rcr_db} dB", where_(), estimator.name(), kind.name()))?;
                        for (user, u) in report.users.into_iter().enumerate() {
                            rows.push(RateRow {
                                drop,
                                user,
                                array,
                                model,
                                estimator,
                                kind,
                                rcr_db,
                                rate: u.rate,
                                sinr: u.sinr,
                                terms: u.terms,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Fixed detection geometry: one user drop, the target direction and the
/// delay-Doppler search grid. Each trial redraws the small-scale channels,
/// re-estimates them and rebuilds the beams.
pub struct DetectionSetup {
    pub geom: ArrayGeometry,
    pub target_dir: Direction,
    pub channels: Vec<ChannelParams>,
    pub book: PilotBook,
    pub ofdm: OfdmParams,
    pub grid: DelayDopplerGrid,
    pub evaluator: Box<dyn SurfaceEvaluator + Send + Sync>,
    pub noise_var: f64,
    pub estimator: Estimator,
    hbars: Vec<HbarMatrix>,
    stats: Option<LmmseStats>,
    rcs: f64,
    radial_speed: f64,
}

impl DetectionSetup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, RunError> {
        let array = cfg.arrays[0];
        let model = cfg.models[0];
        let geom = geometry(cfg, array)?;
        let users = drop_users(cfg.users, &region(cfg), &mut trial_rng(cfg.seed, FAMILY_DROP, 0)).context(|| "detection drop".into())?;
        let channels = channel_params(cfg, model, &users, 0)?;
        let hbars: Vec<HbarMatrix> = channels.iter().map(|p| hbar(p, &geom)).collect();
        let book = pilot_book(cfg)?;
        let noise_var = cfg.noise_var();
        let estimator = cfg.estimators[0];
        let stats = match estimator {
            Estimator::Lmmse => Some(LmmseStats::new(&book, &hbars, noise_var).context(|| "lmmse statistics".into())?),
            Estimator::PilotMatched => None,
        };
        let ofdm = cfg.ofdm();
        let grid = DelayDopplerGrid::standard(&ofdm, cfg.doppler_cap).context(|| "search grid".into())?;
        Ok(DetectionSetup {
            evaluator: best_evaluator(grid.clone(), &ofdm),
            geom,
            target_dir: target_direction(cfg)?,
            channels,
            book,
            ofdm,
            grid,
            noise_var,
            estimator,
            hbars,
            stats,
            rcs: cfg.rcs_m2,
            radial_speed: cfg.radial_speed_mps,
        })
    }

    fn beams(&self, kind: RadarBeamKind, rng: &mut ChaCha8Rng) -> jcas_core::Result<BeamformerSet> {
        let channels = self.channels.iter().map(|p| p.draw(&self.geom, rng)).collect::<jcas_core::Result<Vec<_>>>()?;
        let y = pilot_rx(&channels, &self.book, self.noise_var, rng)?;
        let h_hat = match &self.stats {
            Some(s) => s.estimate(&y, &self.book)?,
            None => pm_estimate(&y, &self.book)?.h_hat,
        };
        BeamformerSet::build(&self.geom, self.target_dir, &h_hat, kind)
    }

    /// Matched terms `c(n,m)` of one trial; `range` `None` is H0.
    pub fn trial_terms(&self, kind: RadarBeamKind, budget: &PowerBudget, range: Option<f64>, rng: &mut ChaCha8Rng) -> jcas_core::Result<Vec<jcas_core::C64>> {
        let beams = self.beams(kind, rng)?;
        let powers = TxPowers::from_budget(budget, self.channels.len(), &self.ofdm);
        let proj = BeamProjection::new(&beams, &powers, &self.geom, self.target_dir, self.target_dir)?;
        let echo = match range {
            Some(r) => {
                let phase = rng.random::<f64>() * std::f64::consts::TAU;
                let t = RadarTarget::new(self.target_dir, r, self.radial_speed, self.rcs, &self.geom)?.with_alpha_phase(phase);
                Some(TargetEcho::from(&t))
            }
            None => None,
        };
        projected_terms(&proj, &self.ofdm, echo.as_ref(), self.noise_var, rng)
    }

    /// Largest GLRT statistic over the grid for one trial.
    pub fn trial_statistic(&self, kind: RadarBeamKind, budget: &PowerBudget, range: Option<f64>, rng: &mut ChaCha8Rng) -> jcas_core::Result<f64> {
        let c = self.trial_terms(kind, budget, range, rng)?;
        let mut scratch = Vec::new();
        Ok(self.evaluator.max_statistic(&c, &mut scratch)?.1)
    }

    pub fn hbars(&self) -> &[HbarMatrix] {
        &self.hbars
    }
}

/// Thresholds already calibrated in this run.
#[derive(Debug, Default)]
pub struct ThresholdCache {
    map: HashMap<ThresholdKey, f64>,
    calibrations: usize,
}

/// Everything the H0 statistic depends on besides the fixed drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThresholdKey {
    pub kind: RadarBeamKind,
    pub noise_bits: u64,
    pub data_power_bits: u64,
    pub radar_power_bits: u64,
    pub n_delays: usize,
    pub n_dopplers: usize,
}

impl ThresholdCache {
    pub fn calibrations(&self) -> usize {
        self.calibrations
    }

    pub fn threshold(
        &mut self,
        setup: &DetectionSetup,
        kind: RadarBeamKind,
        budget: &PowerBudget,
        trials: usize,
        pfa: f64,
        seed: u64,
    ) -> Result<f64, RunError> {
        let powers = TxPowers::from_budget(budget, setup.channels.len(), &setup.ofdm);
        let key = ThresholdKey {
            kind,
            noise_bits: setup.noise_var.to_bits(),
            data_power_bits: powers.data.first().copied().unwrap_or(0.0).to_bits(),
            radar_power_bits: powers.radar.to_bits(),
            n_delays: setup.grid.delays().len(),
            n_dopplers: setup.grid.dopplers().len(),
        };
        if let Some(t) = self.map.get(&key) {
            return Ok(*t);
        }
        let mut samples = h0_statistics(setup, kind, budget, trials, seed, FAMILY_CALIBRATION)?;
        let t = threshold_from_samples(&mut samples, pfa).context(|| format!("calibrating {}", kind.name()))?;
        self.calibrations += 1;
        self.map.insert(key, t);
        Ok(t)
    }
}

fn h0_statistics(setup: &DetectionSetup, kind: RadarBeamKind, budget: &PowerBudget, trials: usize, seed: u64, family: u64) -> Result<Vec<f64>, RunError> {
    (0..trials)
        .into_par_iter()
        .map(|i| setup.trial_statistic(kind, budget, None, &mut trial_rng(seed, family, i as u64)))
        .collect::<jcas_core::Result<Vec<_>>>()
        .context(|| format!("H0 trials, {}", kind.name()))
}

fn detection_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, RunError> {
    let setup = DetectionSetup::new(cfg)?;
    let mut cache = ThresholdCache::default();
    let mut rows = Vec::new();
    let mut surface = Vec::new();
    for &rcr_db in &cfg.rcr_db {
        let budget = cfg.budget(rcr_db);
        for &kind in &cfg.kinds {
            let threshold = cache.threshold(&setup, kind, &budget, cfg.calibration_trials, cfg.pfa, cfg.seed)?;
            for &range in &cfg.ranges_m {
                let stats = (0..cfg.trials)
                    .into_par_iter()
                    .map(|i| setup.trial_statistic(kind, &budget, Some(range), &mut trial_rng(cfg.seed, FAMILY_DETECTION, i as u64)))
                    .collect::<jcas_core::Result<Vec<_>>>()
                    .context(|| format!("H1 trials, {}, range {range} m", kind.name()))?;
                let hits: Vec<bool> = stats.iter().map(|s| *s > threshold).collect();
                let count = hits.iter().filter(|h| **h).count();
                rows.push(DetectionRow {
                    range_m: range,
                    kind,
                    rcr_db,
                    estimate: DetectionEstimate::new(count, cfg.trials),
                    threshold,
                    hits,
                });
            }
        }
    }
    if let (Some(&range), Some(&kind), Some(&rcr_db)) = (cfg.ranges_m.first(), cfg.kinds.first(), cfg.rcr_db.first()) {
        let c = setup
            .trial_terms(kind, &cfg.budget(rcr_db), Some(range), &mut trial_rng(cfg.seed, FAMILY_DETECTION, 0))
            .context(|| "surface export".into())?;
        let mut values = Vec::new();
        setup.evaluator.evaluate(&c, &mut values).context(|| "surface export".into())?;
        surface = values
            .into_iter()
            .enumerate()
            .map(|(i, statistic)| {
                let (delay_s, doppler_hz) = setup.grid.cell(i);
                SurfaceCell {
                    delay_s,
                    doppler_hz,
                    statistic,
                }
            })
            .collect();
    }
    Ok(CampaignResult {
        detection: rows,
        surface,
        calibrations: cache.calibrations(),
        ..CampaignResult::default()
    })
}

fn calibration_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, RunError> {
    let setup = DetectionSetup::new(cfg)?;
    let mut cache = ThresholdCache::default();
    let mut rows = Vec::new();
    for &rcr_db in &cfg.rcr_db {
        let budget = cfg.budget(rcr_db);
        for &kind in &cfg.kinds {
            let threshold = cache.threshold(&setup, kind, &budget, cfg.calibration_trials, cfg.pfa, cfg.seed)?;
            let fresh = h0_statistics(&setup, kind, &budget, cfg.trials, cfg.seed, FAMILY_FALSE_ALARM)?;
            let alarms = fresh.iter().filter(|s| **s > threshold).count();
            rows.push(CalibrationRow {
                kind,
                rcr_db,
                threshold,
                calibration_trials: cfg.calibration_trials,
                check: DetectionEstimate::new(alarms, cfg.trials),
            });
        }
    }
    Ok(CampaignResult {
        calibration: rows,
        calibrations: cache.calibrations(),
        ..CampaignResult::default()
    })
}

/// Azimuth cut at the target elevation and elevation cut at the target
/// azimuth, for beams built from one channel estimate.
fn pattern_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, RunError> {
    let setup = DetectionSetup::new(cfg)?;
    let n = cfg.pattern_points;
    let step = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let mut rows = Vec::new();
    for &kind in &cfg.kinds {
        let beams = setup.beams(kind, &mut trial_rng(cfg.seed, FAMILY_PATTERN, 0)).context(|| format!("{} beam", kind.name()))?;
        let mut push = |cut, az: f64, el: f64| -> Result<(), RunError> {
            let dir = Direction::from_horizon_elevation(az.to_radians(), el.to_radians()).context(|| "pattern direction".into())?;
            rows.push(PatternRow {
                kind,
                cut,
                azimuth_deg: az,
                elevation_deg: el,
                gain: setup.geom.beam_gain(&beams.radar, dir).context(|| "beam gain".into())?,
            });
            Ok(())
        };
        for i in 0..n {
            push(PatternCut::Azimuth, step(i, -90.0, 90.0), cfg.target_elevation_deg)?;
        }
        for i in 0..n {
            push(PatternCut::Elevation, cfg.target_azimuth_deg, step(i, 0.0, 90.0))?;
        }
    }
    Ok(CampaignResult {
        pattern: rows,
        ..CampaignResult::default()
    })
}
