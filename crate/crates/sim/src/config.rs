//! Experiment configuration: a sectioned `key = value` text format.
//!
//! ```text
//! # comment
//! experiment = rate_cdf
//! seed = 7
//!
//! [system]
//! delta_f = 60 kHz
//! rcr_db = 3, 10
//! ```
//!
//! Every key has a unique name and a home section. Keys may appear before
//! any section header; under a header they must belong to it. Physical
//! quantities carry a unit. Lists are comma separated. All problems found in
//! a file are reported together, each with its line and column.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use jcas_core::beamforming::RadarBeamKind;
use jcas_core::estimation::Estimator;
use jcas_core::propagation::ChannelModel;
use jcas_core::radar::OfdmParams;
use jcas_core::rates::MomentConvention;
use jcas_core::scenario::{noise_variance, PowerBudget};
use jcas_core::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    RateCdf,
    AntennaSweep,
    DetectionVsRange,
    BeamPattern,
    Calibration,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::RateCdf,
        Experiment::AntennaSweep,
        Experiment::DetectionVsRange,
        Experiment::BeamPattern,
        Experiment::Calibration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::RateCdf => "rate_cdf",
            Experiment::AntennaSweep => "antenna_sweep",
            Experiment::DetectionVsRange => "detection_vs_range",
            Experiment::BeamPattern => "beam_pattern",
            Experiment::Calibration => "calibration",
        }
    }
}

/// Where the surveillance beam points in rate experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    /// A fresh direction in the scan sector for every drop.
    Random,
    /// The configured target direction.
    Target,
}

impl ScanMode {
    pub fn name(self) -> &'static str {
        match self {
            ScanMode::Random => "random",
            ScanMode::Target => "target",
        }
    }
}

/// Bandwidth used in `σ² = N₀·F·B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseBandwidth {
    /// `B = M·Δf`.
    Total,
    /// `B = Δf`.
    Subcarrier,
}

impl NoiseBandwidth {
    pub fn name(self) -> &'static str {
        match self {
            NoiseBandwidth::Total => "total",
            NoiseBandwidth::Subcarrier => "subcarrier",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArraySize {
    pub n_y: usize,
    pub n_z: usize,
}

impl ArraySize {
    pub fn n_elements(&self) -> usize {
        self.n_y * self.n_z
    }
}

impl fmt::Display for ArraySize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_y, self.n_z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output: String,
    pub drops: usize,
    pub trials: usize,
    pub calibration_trials: usize,

    pub carrier_hz: f64,
    pub m_sub: usize,
    pub n_sym: usize,
    pub delta_f_hz: f64,
    pub cp_fraction: f64,
    pub users: usize,
    pub p_dl_w: f64,
    pub rcr_db: Vec<f64>,
    pub n0_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub noise_bandwidth: NoiseBandwidth,
    pub bs_height_m: f64,
    pub user_height_m: f64,

    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,

    pub arrays: Vec<ArraySize>,
    pub spacing_wavelengths: f64,

    pub models: Vec<ChannelModel>,
    pub k_max: f64,
    pub shadowing_db: f64,

    pub estimators: Vec<Estimator>,
    /// Pilot length; `None` means one pilot per user.
    pub tau_p: Option<usize>,
    pub tau_c: usize,
    /// Uplink pilot power; `None` means `P_DL/K`.
    pub pilot_power_w: Option<f64>,
    pub moments: MomentConvention,

    pub kinds: Vec<RadarBeamKind>,
    pub scan: ScanMode,
    pub target_azimuth_deg: f64,
    pub target_elevation_deg: f64,
    pub rcs_m2: f64,
    pub radial_speed_mps: f64,
    pub ranges_m: Vec<f64>,
    pub pfa: f64,
    pub doppler_cap: f64,
    pub pattern_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::RateCdf,
            seed: 1,
            output: "results".into(),
            drops: 200,
            trials: 1000,
            calibration_trials: 2000,
            carrier_hz: 3e9,
            m_sub: 512,
            n_sym: 14,
            delta_f_hz: 30e3,
            cp_fraction: 1.0 / 14.0,
            users: 10,
            p_dl_w: 2.0,
            rcr_db: vec![3.0, 10.0],
            n0_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            noise_bandwidth: NoiseBandwidth::Total,
            bs_height_m: 15.0,
            user_height_m: 1.65,
            x_min_m: 10.0,
            x_max_m: 100.0,
            y_min_m: 10.0,
            y_max_m: 50.0,
            arrays: vec![ArraySize { n_y: 10, n_z: 10 }, ArraySize { n_y: 20, n_z: 20 }],
            spacing_wavelengths: 0.5,
            models: ChannelModel::ALL.to_vec(),
            k_max: 1e3,
            shadowing_db: 8.0,
            estimators: Estimator::ALL.to_vec(),
            tau_p: None,
            tau_c: 168,
            pilot_power_w: None,
            moments: MomentConvention::Exact,
            kinds: RadarBeamKind::ALL.to_vec(),
            scan: ScanMode::Random,
            target_azimuth_deg: 0.0,
            target_elevation_deg: 30.0,
            rcs_m2: 1.0,
            radial_speed_mps: 10.0,
            ranges_m: vec![50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0],
            pfa: 1e-2,
            doppler_cap: 0.05,
            pattern_points: 241,
        }
    }
}

impl ExperimentConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// System bandwidth `B = M·Δf`.
    pub fn bandwidth_hz(&self) -> f64 {
        self.m_sub as f64 * self.delta_f_hz
    }

    pub fn noise_var(&self) -> f64 {
        let b = match self.noise_bandwidth {
            NoiseBandwidth::Total => self.bandwidth_hz(),
            NoiseBandwidth::Subcarrier => self.delta_f_hz,
        };
        noise_variance(self.n0_dbm_hz, self.noise_figure_db, b).expect("bandwidth validated positive")
    }

    pub fn ofdm(&self) -> OfdmParams {
        OfdmParams::with_cp_fraction(self.m_sub, self.n_sym, self.delta_f_hz, self.cp_fraction).expect("ofdm validated")
    }

    pub fn effective_tau_p(&self) -> usize {
        self.tau_p.unwrap_or(self.users)
    }

    pub fn pilot_power(&self) -> f64 {
        self.pilot_power_w.unwrap_or(self.p_dl_w / self.users as f64)
    }

    pub fn budget(&self, rcr_db: f64) -> PowerBudget {
        PowerBudget::from_rcr_db(self.p_dl_w, rcr_db).expect("powers validated")
    }
}

/// One problem in a config file. Line and column are 1-based; 0 marks a
/// default value that was not written in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "{}:{}: {}", self.line, self.column, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Frequency,
    Power,
    Length,
    Angle,
    Speed,
    Area,
    Decibel,
    Psd,
}

impl Dim {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dim::Frequency => &[("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)],
            Dim::Power => &[("kW", 1e3), ("W", 1.0), ("mW", 1e-3)],
            Dim::Length => &[("km", 1e3), ("m", 1.0)],
            Dim::Angle => &[("deg", 1.0), ("rad", 180.0 / std::f64::consts::PI)],
            Dim::Speed => &[("m/s", 1.0), ("km/h", 1.0 / 3.6)],
            Dim::Area => &[("m2", 1.0), ("m^2", 1.0)],
            Dim::Decibel => &[("dB", 1.0)],
            Dim::Psd => &[("dBm/Hz", 1.0)],
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Dim::Frequency => "a frequency (Hz, kHz, MHz, GHz)",
            Dim::Power => "a power (W, mW, kW)",
            Dim::Length => "a length (m, km)",
            Dim::Angle => "an angle (deg, rad)",
            Dim::Speed => "a speed (m/s, km/h)",
            Dim::Area => "an area (m2)",
            Dim::Decibel => "a level in dB",
            Dim::Psd => "a density in dBm/Hz",
        }
    }

    /// Largest unit that reproduces `x` exactly.
    fn format(self, x: f64) -> String {
        for (unit, scale) in self.units() {
            if matches!(self, Dim::Angle) && *unit == "rad" {
                continue;
            }
            let v = x / scale;
            if v * scale == x && (v.abs() >= 1.0 || x == 0.0 || *scale == 1.0) {
                return format!("{v} {unit}");
            }
        }
        let (unit, _) = self.units().iter().find(|(_, s)| *s == 1.0).expect("every dimension has a base unit");
        format!("{x} {unit}")
    }
}

fn parse_number(text: &str) -> Result<f64, String> {
    let v: f64 = text.parse().map_err(|_| format!("`{text}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(v)
}

/// `number unit`, with the unit optional when `unit_optional` holds.
fn parse_quantity(text: &str, dim: Dim, unit_optional: bool) -> Result<f64, String> {
    let text = text.trim();
    let split = text.find(|c: char| c.is_whitespace()).unwrap_or(text.len());
    let (num, unit) = (text[..split].trim(), text[split..].trim());
    let v = parse_number(num)?;
    if unit.is_empty() {
        if unit_optional {
            return Ok(v);
        }
        return Err(format!("missing unit: expected {}", dim.describe()));
    }
    match dim.units().iter().find(|(u, _)| *u == unit) {
        Some((_, scale)) => Ok(v * scale),
        None => Err(format!("unit mismatch: `{unit}` is not {}", dim.describe())),
    }
}

fn parse_count(text: &str) -> Result<usize, String> {
    text.trim().parse().map_err(|_| format!("`{}` is not a nonnegative integer", text.trim()))
}

fn parse_list<T>(text: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<&str> = text.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err("empty list entry".into());
    }
    items.into_iter().map(item).collect()
}

fn parse_choice<T: Copy>(text: &str, choices: &[(&str, T)]) -> Result<T, String> {
    let t = text.trim();
    choices.iter().find(|(n, _)| *n == t).map(|(_, v)| *v).ok_or_else(|| {
        let names: Vec<&str> = choices.iter().map(|(n, _)| *n).collect();
        format!("`{t}` is not one of {}", names.join(", "))
    })
}

fn experiments() -> Vec<(&'static str, Experiment)> {
    Experiment::ALL.iter().map(|e| (e.name(), *e)).collect()
}

fn models() -> Vec<(&'static str, ChannelModel)> {
    ChannelModel::ALL.iter().map(|m| (m.name(), *m)).collect()
}

fn estimators() -> Vec<(&'static str, Estimator)> {
    Estimator::ALL.iter().map(|e| (e.name(), *e)).collect()
}

fn kinds() -> Vec<(&'static str, RadarBeamKind)> {
    RadarBeamKind::ALL.iter().map(|k| (k.name(), *k)).collect()
}

fn parse_array(text: &str) -> Result<ArraySize, String> {
    let (a, b) = text.split_once('x').ok_or_else(|| format!("`{text}` is not of the form NYxNZ"))?;
    Ok(ArraySize {
        n_y: parse_count(a)?,
        n_z: parse_count(b)?,
    })
}

/// `(section, key)` for every recognised key, in serialization order.
pub const KEYS: &[(&str, &str)] = &[
    ("run", "experiment"),
    ("run", "seed"),
    ("run", "output"),
    ("run", "drops"),
    ("run", "trials"),
    ("run", "calibration_trials"),
    ("system", "carrier"),
    ("system", "m_sub"),
    ("system", "n_sym"),
    ("system", "delta_f"),
    ("system", "cp_fraction"),
    ("system", "users"),
    ("system", "p_dl"),
    ("system", "rcr_db"),
    ("system", "n0"),
    ("system", "noise_figure"),
    ("system", "noise_bandwidth"),
    ("system", "bs_height"),
    ("system", "user_height"),
    ("geometry", "x_min"),
    ("geometry", "x_max"),
    ("geometry", "y_min"),
    ("geometry", "y_max"),
    ("array", "arrays"),
    ("array", "spacing"),
    ("channel", "models"),
    ("channel", "k_max"),
    ("channel", "shadowing"),
    ("estimation", "estimators"),
    ("estimation", "tau_p"),
    ("estimation", "tau_c"),
    ("estimation", "pilot_power"),
    ("estimation", "moments"),
    ("radar", "kinds"),
    ("radar", "scan"),
    ("radar", "target_azimuth"),
    ("radar", "target_elevation"),
    ("radar", "rcs"),
    ("radar", "radial_speed"),
    ("radar", "ranges"),
    ("radar", "pfa"),
    ("radar", "doppler_cap"),
    ("radar", "pattern_points"),
];

fn apply(cfg: &mut ExperimentConfig, key: &str, v: &str) -> Result<(), String> {
    match key {
        "experiment" => cfg.experiment = parse_choice(v, &experiments())?,
        "seed" => cfg.seed = v.trim().parse().map_err(|_| format!("`{}` is not a u64 seed", v.trim()))?,
        "output" => {
            if v.trim().is_empty() {
                return Err("empty output path".into());
            }
            cfg.output = v.trim().to_string()
        }
        "drops" => cfg.drops = parse_count(v)?,
        "trials" => cfg.trials = parse_count(v)?,
        "calibration_trials" => cfg.calibration_trials = parse_count(v)?,
        "carrier" => cfg.carrier_hz = parse_quantity(v, Dim::Frequency, false)?,
        "m_sub" => cfg.m_sub = parse_count(v)?,
        "n_sym" => cfg.n_sym = parse_count(v)?,
        "delta_f" => cfg.delta_f_hz = parse_quantity(v, Dim::Frequency, false)?,
        "cp_fraction" => cfg.cp_fraction = parse_number(v.trim())?,
        "users" => cfg.users = parse_count(v)?,
        "p_dl" => cfg.p_dl_w = parse_quantity(v, Dim::Power, false)?,
        "rcr_db" => cfg.rcr_db = parse_list(v, |s| parse_quantity(s, Dim::Decibel, true))?,
        "n0" => cfg.n0_dbm_hz = parse_quantity(v, Dim::Psd, false)?,
        "noise_figure" => cfg.noise_figure_db = parse_quantity(v, Dim::Decibel, false)?,
        "noise_bandwidth" => {
            cfg.noise_bandwidth = parse_choice(v, &[("total", NoiseBandwidth::Total), ("subcarrier", NoiseBandwidth::Subcarrier)])?
        }
        "bs_height" => cfg.bs_height_m = parse_quantity(v, Dim::Length, false)?,
        "user_height" => cfg.user_height_m = parse_quantity(v, Dim::Length, false)?,
        "x_min" => cfg.x_min_m = parse_quantity(v, Dim::Length, false)?,
        "x_max" => cfg.x_max_m = parse_quantity(v, Dim::Length, false)?,
        "y_min" => cfg.y_min_m = parse_quantity(v, Dim::Length, false)?,
        "y_max" => cfg.y_max_m = parse_quantity(v, Dim::Length, false)?,
        "arrays" => cfg.arrays = parse_list(v, parse_array)?,
        "spacing" => cfg.spacing_wavelengths = parse_number(v.trim())?,
        "models" => cfg.models = parse_list(v, |s| parse_choice(s, &models()))?,
        "k_max" => cfg.k_max = parse_number(v.trim())?,
        "shadowing" => cfg.shadowing_db = parse_quantity(v, Dim::Decibel, false)?,
        "estimators" => cfg.estimators = parse_list(v, |s| parse_choice(s, &estimators()))?,
        "tau_p" => {
            cfg.tau_p = match v.trim() {
                "auto" => None,
                s => Some(parse_count(s)?),
            }
        }
        "tau_c" => cfg.tau_c = parse_count(v)?,
        "pilot_power" => {
            cfg.pilot_power_w = match v.trim() {
                "auto" => None,
                s => Some(parse_quantity(s, Dim::Power, false)?),
            }
        }
        "moments" => cfg.moments = parse_choice(v, &[("exact", MomentConvention::Exact), ("printed", MomentConvention::Printed)])?,
        "kinds" => cfg.kinds = parse_list(v, |s| parse_choice(s, &kinds()))?,
        "scan" => cfg.scan = parse_choice(v, &[("random", ScanMode::Random), ("target", ScanMode::Target)])?,
        "target_azimuth" => cfg.target_azimuth_deg = parse_quantity(v, Dim::Angle, false)?,
        "target_elevation" => cfg.target_elevation_deg = parse_quantity(v, Dim::Angle, false)?,
        "rcs" => cfg.rcs_m2 = parse_quantity(v, Dim::Area, false)?,
        "radial_speed" => cfg.radial_speed_mps = parse_quantity(v, Dim::Speed, false)?,
        "ranges" => cfg.ranges_m = parse_list(v, |s| parse_quantity(s, Dim::Length, false))?,
        "pfa" => cfg.pfa = parse_number(v.trim())?,
        "doppler_cap" => cfg.doppler_cap = parse_number(v.trim())?,
        "pattern_points" => cfg.pattern_points = parse_count(v)?,
        _ => unreachable!("key table and apply() disagree on `{key}`"),
    }
    Ok(())
}

type Positions = HashMap<&'static str, (usize, usize)>;

fn check(errors: &mut Vec<ConfigError>, pos: &Positions, key: &'static str, ok: bool, message: impl Into<String>) {
    if !ok {
        let (line, column) = pos.get(key).copied().unwrap_or((0, 0));
        errors.push(ConfigError {
            line,
            column,
            message: format!("{key}: {}", message.into()),
        });
    }
}

/// Cross-field checks on a fully parsed config.
fn validate(cfg: &ExperimentConfig, pos: &Positions, errors: &mut Vec<ConfigError>) {
    let pos_finite = |x: f64| x > 0.0 && x.is_finite();
    check(errors, pos, "carrier", pos_finite(cfg.carrier_hz), "must be positive");
    check(errors, pos, "m_sub", cfg.m_sub >= 1, "must be at least 1");
    check(errors, pos, "n_sym", cfg.n_sym >= 1, "must be at least 1");
    check(errors, pos, "delta_f", pos_finite(cfg.delta_f_hz), "must be positive");
    check(errors, pos, "cp_fraction", (0.0..=1.0).contains(&cfg.cp_fraction), "must lie in [0, 1]");
    check(errors, pos, "users", cfg.users >= 1, "must be at least 1");
    check(errors, pos, "p_dl", pos_finite(cfg.p_dl_w), "must be positive");
    check(errors, pos, "rcr_db", !cfg.rcr_db.is_empty(), "needs at least one value");
    check(errors, pos, "bs_height", cfg.bs_height_m > cfg.user_height_m, "base station must sit above the users");
    check(errors, pos, "x_max", cfg.x_min_m <= cfg.x_max_m, "x_min exceeds x_max");
    check(errors, pos, "y_max", 0.0 <= cfg.y_min_m && cfg.y_min_m <= cfg.y_max_m, "need 0 <= y_min <= y_max");
    check(errors, pos, "x_min", cfg.x_min_m > 0.0 || cfg.y_min_m > 0.0, "drop region must exclude the point below the array");
    check(errors, pos, "arrays", !cfg.arrays.is_empty(), "needs at least one array");
    check(errors, pos, "arrays", cfg.arrays.iter().all(|a| a.n_elements() > 0), "array dimensions must be positive");
    check(errors, pos, "spacing", pos_finite(cfg.spacing_wavelengths), "must be positive");
    check(errors, pos, "models", !cfg.models.is_empty(), "needs at least one model");
    check(errors, pos, "k_max", pos_finite(cfg.k_max), "must be positive");
    check(errors, pos, "shadowing", cfg.shadowing_db >= 0.0, "must be nonnegative");
    check(errors, pos, "estimators", !cfg.estimators.is_empty(), "needs at least one estimator");
    let tau_p = cfg.effective_tau_p();
    check(errors, pos, "tau_p", tau_p >= 1, "must be at least 1");
    check(errors, pos, "tau_c", cfg.tau_c > tau_p, format!("must exceed the pilot length {tau_p}"));
    check(errors, pos, "pilot_power", cfg.pilot_power_w.map_or(true, pos_finite), "must be positive");
    check(errors, pos, "kinds", !cfg.kinds.is_empty(), "needs at least one radar beam kind");
    check(errors, pos, "target_azimuth", (-60.0..=60.0).contains(&cfg.target_azimuth_deg), "must lie in the scan sector [-60, 60] deg");
    check(errors, pos, "target_elevation", (10.0..=80.0).contains(&cfg.target_elevation_deg), "must lie in the scan sector [10, 80] deg");
    check(errors, pos, "rcs", pos_finite(cfg.rcs_m2), "must be positive");
    check(errors, pos, "pfa", cfg.pfa > 0.0 && cfg.pfa <= 1.0, "must lie in (0, 1]");
    check(errors, pos, "doppler_cap", (0.0..0.5).contains(&cfg.doppler_cap), "must lie in [0, 0.5)");
    check(errors, pos, "pattern_points", cfg.pattern_points >= 2, "needs at least 2 points");
    check(errors, pos, "ranges", !cfg.ranges_m.is_empty() && cfg.ranges_m.iter().all(|r| pos_finite(*r)), "needs positive ranges");

    let needs_trials = matches!(cfg.experiment, Experiment::DetectionVsRange | Experiment::Calibration);
    if needs_trials {
        check(errors, pos, "trials", cfg.trials >= 1, "must be at least 1");
        check(
            errors,
            pos,
            "calibration_trials",
            cfg.pfa >= 1.0 || cfg.calibration_trials as f64 * cfg.pfa >= 20.0,
            format!("with pfa = {} at least {} trials are needed", cfg.pfa, (20.0 / cfg.pfa).ceil()),
        );
    }
    let rate_like = matches!(cfg.experiment, Experiment::RateCdf | Experiment::AntennaSweep);
    if rate_like {
        check(errors, pos, "drops", cfg.drops >= 1, "must be at least 1");
    }
    if cfg.delta_f_hz > 0.0 && cfg.m_sub >= 1 && (0.0..=1.0).contains(&cfg.cp_fraction) {
        let max_range = SPEED_OF_LIGHT * cfg.cp_fraction / cfg.delta_f_hz / 2.0;
        if needs_trials {
            let worst = cfg.ranges_m.iter().cloned().fold(0.0, f64::max);
            check(
                errors,
                pos,
                "ranges",
                worst <= max_range,
                format!("range {worst} m exceeds the cyclic-prefix limit {max_range:.1} m (raise cp_fraction)"),
            );
        }
        if cfg.carrier_hz > 0.0 && needs_trials {
            let doppler = 2.0 * cfg.radial_speed_mps * cfg.carrier_hz / SPEED_OF_LIGHT;
            check(
                errors,
                pos,
                "radial_speed",
                doppler.abs() < cfg.delta_f_hz / 2.0,
                format!("Doppler {doppler:.1} Hz is not below delta_f/2"),
            );
        }
    }
    let smallest = cfg.arrays.iter().map(ArraySize::n_elements).min().unwrap_or(0);
    if cfg.kinds.contains(&RadarBeamKind::Zfr) && smallest > 0 {
        check(errors, pos, "users", cfg.users < smallest, format!("zero forcing needs fewer users than the {smallest} antennas"));
    }
}

/// Parses and validates a config; an empty text gives the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut cfg = ExperimentConfig::default();
    let mut errors = Vec::new();
    let mut pos: Positions = HashMap::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let lead = content.len() - content.trim_start().len();
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let col = |offset: usize| raw[..offset].chars().count() + 1;
        if let Some(rest) = trimmed.strip_prefix('[') {
            match rest.strip_suffix(']') {
                Some(name) if KEYS.iter().any(|(s, _)| *s == name.trim()) => section = Some(name.trim().to_string()),
                Some(name) => {
                    errors.push(ConfigError {
                        line: line_no,
                        column: col(lead),
                        message: format!("unknown section `[{}]`", name.trim()),
                    });
                    section = Some(name.trim().to_string());
                }
                None => errors.push(ConfigError {
                    line: line_no,
                    column: col(lead),
                    message: "unterminated section header".into(),
                }),
            }
            continue;
        }
        let Some(eq) = content.find('=') else {
            errors.push(ConfigError {
                line: line_no,
                column: col(lead),
                message: "expected `key = value`".into(),
            });
            continue;
        };
        let key = content[..eq].trim();
        let value = &content[eq + 1..];
        let value_col = col(eq + 1 + (value.len() - value.trim_start().len()));
        let Some((home, static_key)) = KEYS.iter().find(|(_, k)| *k == key).copied() else {
            errors.push(ConfigError {
                line: line_no,
                column: col(lead),
                message: format!("unknown key `{key}`"),
            });
            continue;
        };
        if let Some(s) = &section {
            if s != home {
                errors.push(ConfigError {
                    line: line_no,
                    column: col(lead),
                    message: format!("key `{key}` belongs in [{home}], not [{s}]"),
                });
                continue;
            }
        }
        if pos.contains_key(static_key) {
            errors.push(ConfigError {
                line: line_no,
                column: col(lead),
                message: format!("duplicate key `{key}`"),
            });
            continue;
        }
        pos.insert(static_key, (line_no, value_col));
        if let Err(message) = apply(&mut cfg, static_key, value) {
            errors.push(ConfigError {
                line: line_no,
                column: value_col,
                message: format!("{key}: {message}"),
            });
        }
    }
    validate(&cfg, &pos, &mut errors);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

fn value_of(cfg: &ExperimentConfig, key: &str) -> String {
    match key {
        "experiment" => cfg.experiment.name().into(),
        "seed" => cfg.seed.to_string(),
        "output" => cfg.output.clone(),
        "drops" => cfg.drops.to_string(),
        "trials" => cfg.trials.to_string(),
        "calibration_trials" => cfg.calibration_trials.to_string(),
        "carrier" => Dim::Frequency.format(cfg.carrier_hz),
        "m_sub" => cfg.m_sub.to_string(),
        "n_sym" => cfg.n_sym.to_string(),
        "delta_f" => Dim::Frequency.format(cfg.delta_f_hz),
        "cp_fraction" => cfg.cp_fraction.to_string(),
        "users" => cfg.users.to_string(),
        "p_dl" => Dim::Power.format(cfg.p_dl_w),
        "rcr_db" => join(&cfg.rcr_db, |v| Dim::Decibel.format(*v)),
        "n0" => Dim::Psd.format(cfg.n0_dbm_hz),
        "noise_figure" => Dim::Decibel.format(cfg.noise_figure_db),
        "noise_bandwidth" => cfg.noise_bandwidth.name().into(),
        "bs_height" => Dim::Length.format(cfg.bs_height_m),
        "user_height" => Dim::Length.format(cfg.user_height_m),
        "x_min" => Dim::Length.format(cfg.x_min_m),
        "x_max" => Dim::Length.format(cfg.x_max_m),
        "y_min" => Dim::Length.format(cfg.y_min_m),
        "y_max" => Dim::Length.format(cfg.y_max_m),
        "arrays" => join(&cfg.arrays, ToString::to_string),
        "spacing" => cfg.spacing_wavelengths.to_string(),
        "models" => join(&cfg.models, |m| m.name().into()),
        "k_max" => cfg.k_max.to_string(),
        "shadowing" => Dim::Decibel.format(cfg.shadowing_db),
        "estimators" => join(&cfg.estimators, |e| e.name().into()),
        "tau_p" => cfg.tau_p.map_or("auto".into(), |t| t.to_string()),
        "tau_c" => cfg.tau_c.to_string(),
        "pilot_power" => cfg.pilot_power_w.map_or("auto".into(), |p| Dim::Power.format(p)),
        "moments" => match cfg.moments {
            MomentConvention::Exact => "exact".into(),
            MomentConvention::Printed => "printed".into(),
        },
        "kinds" => join(&cfg.kinds, |k| k.name().into()),
        "scan" => cfg.scan.name().into(),
        "target_azimuth" => Dim::Angle.format(cfg.target_azimuth_deg),
        "target_elevation" => Dim::Angle.format(cfg.target_elevation_deg),
        "rcs" => Dim::Area.format(cfg.rcs_m2),
        "radial_speed" => Dim::Speed.format(cfg.radial_speed_mps),
        "ranges" => join(&cfg.ranges_m, |r| Dim::Length.format(*r)),
        "pfa" => cfg.pfa.to_string(),
        "doppler_cap" => cfg.doppler_cap.to_string(),
        "pattern_points" => cfg.pattern_points.to_string(),
        _ => unreachable!("unknown key `{key}`"),
    }
}

/// Canonical text of `cfg`; `parse_config(&serialize(cfg)) == Ok(cfg)`.
pub fn serialize(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut current = "";
    for (section, key) in KEYS {
        if *section != current {
            if !current.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{section}]");
            current = section;
        }
        let _ = writeln!(out, "{key} = {}", value_of(cfg, key));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_table_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.carrier_hz, 3e9);
        assert_eq!((cfg.m_sub, cfg.n_sym, cfg.users), (512, 14, 10));
        assert_eq!(cfg.delta_f_hz, 30e3);
        assert_eq!(cfg.p_dl_w, 2.0);
        assert_eq!(cfg.noise_figure_db, 9.0);
        assert_eq!(cfg.n0_dbm_hz, -174.0);
        assert_eq!(cfg.bandwidth_hz(), 15.36e6);
    }

    #[test]
    fn overrides_recompute_derived_fields() {
        let cfg = parse_config("delta_f = 60 kHz\n").unwrap();
        assert!((cfg.bandwidth_hz() - 30.72e6).abs() < 1e-3);
        let cfg = parse_config("rcr_db = 3").unwrap();
        assert_eq!(cfg.rcr_db, vec![3.0]);
        assert!((cfg.budget(3.0).p_r() - 3.990_524_629_937_759).abs() < 1e-12);
    }

    #[test]
    fn sections_and_units() {
        let text = "experiment = detection_vs_range\n[system]\ncarrier = 3.5 GHz # mid band\np_dl = 500 mW\n\n[radar]\nranges = 100 m, 0.2 km\nradial_speed = 36 km/h\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.carrier_hz, 3.5e9);
        assert_eq!(cfg.p_dl_w, 0.5);
        assert_eq!(cfg.ranges_m, vec![100.0, 200.0]);
        assert!((cfg.radial_speed_mps - 10.0).abs() < 1e-12);
    }

    #[test]
    fn errors_are_listed_with_positions() {
        let text = "bogus = 1\n[system]\ndelta_f = 30 W\nusers = ten\n[radar]\ncarrier = 3 GHz\n";
        let errs = parse_config(text).unwrap_err().0;
        assert_eq!(errs.len(), 4, "{errs:?}");
        assert_eq!((errs[0].line, errs[0].column), (1, 1));
        assert!(errs[0].message.contains("unknown key"));
        assert_eq!((errs[1].line, errs[1].column), (3, 11));
        assert!(errs[1].message.contains("unit mismatch"));
        assert_eq!(errs[2].line, 4);
        assert!(errs[3].message.contains("belongs in [system]"));
    }

    #[test]
    fn missing_unit_and_inconsistent_fields() {
        let errs = parse_config("carrier = 3").unwrap_err().0;
        assert!(errs[0].message.contains("missing unit"));
        let errs = parse_config("users = 4\ntau_p = 4\ntau_c = 4\n").unwrap_err().0;
        assert_eq!(errs.len(), 1);
        assert_eq!((errs[0].line, errs[0].column), (3, 9));
        let errs = parse_config("experiment = detection_vs_range\nranges = 400 m\n").unwrap_err().0;
        assert!(errs[0].message.contains("cyclic-prefix"));
        let errs = parse_config("experiment = calibration\ncalibration_trials = 100\n").unwrap_err().0;
        assert!(errs[0].message.contains("2000"));
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        let errs = parse_config("seed = 1\nseed = 2\njunk\n[radar\n").unwrap_err().0;
        assert_eq!(errs.len(), 3);
        assert!(errs[0].message.contains("duplicate"));
        assert!(errs[1].message.contains("key = value"));
        assert!(errs[2].message.contains("unterminated"));
    }

    #[test]
    fn serialize_round_trips() {
        let default = ExperimentConfig::default();
        assert_eq!(parse_config(&serialize(&default)).unwrap(), default);
        let custom = ExperimentConfig {
            experiment: Experiment::Calibration,
            seed: u64::MAX,
            carrier_hz: 3.123_456_789e9,
            delta_f_hz: 15e3,
            cp_fraction: 0.3,
            rcr_db: vec![-1.5, 0.0, 12.25],
            tau_p: Some(4),
            pilot_power_w: Some(0.012_345),
            moments: MomentConvention::Printed,
            kinds: vec![RadarBeamKind::Zfr],
            scan: ScanMode::Target,
            target_azimuth_deg: -12.345_678_9,
            radial_speed_mps: 1.0 / 3.0,
            ranges_m: vec![10.0, 1234.5],
            arrays: vec![ArraySize { n_y: 4, n_z: 3 }],
            noise_bandwidth: NoiseBandwidth::Subcarrier,
            ..ExperimentConfig::default()
        };
        let text = serialize(&custom);
        assert_eq!(parse_config(&text).unwrap(), custom, "{text}");
    }

    #[test]
    fn quantity_formatting_prefers_exact_units() {
        assert_eq!(Dim::Frequency.format(3e9), "3 GHz");
        assert_eq!(Dim::Frequency.format(30e3), "30 kHz");
        assert_eq!(Dim::Power.format(2.0), "2 W");
        assert_eq!(Dim::Length.format(1.65), "1.65 m");
    }
}
