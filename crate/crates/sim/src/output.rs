//! CSV artifacts, the run manifest and the printed summary.
//!
//! Numbers are written with Rust's shortest round-trip formatting, which
//! never depends on the locale.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::campaign::{CampaignResult, RunError};
use crate::config::{serialize, ExperimentConfig};

pub const RATE_COLUMNS: &[&str] = &[
    "run_id",
    "drop",
    "user",
    "array",
    "channel_model",
    "estimator",
    "radar_kind",
    "rcr_db",
    "rate_bps_hz",
    "sinr",
    "desired",
    "interference",
    "self_subtraction",
    "radar_leakage",
    "noise",
];

pub const DETECTION_COLUMNS: &[&str] = &["run_id", "range_m", "radar_kind", "rcr_db", "pd", "ci_low", "ci_high", "trials", "hits", "threshold"];

pub const CALIBRATION_COLUMNS: &[&str] = &[
    "run_id",
    "radar_kind",
    "rcr_db",
    "threshold",
    "calibration_trials",
    "pfa_target",
    "pfa_measured",
    "ci_low",
    "ci_high",
    "trials",
];

pub const PATTERN_COLUMNS: &[&str] = &["run_id", "radar_kind", "cut", "azimuth_deg", "elevation_deg", "gain", "gain_db"];

pub const SURFACE_COLUMNS: &[&str] = &["run_id", "delay_s", "doppler_hz", "range_m", "statistic"];

pub const MANIFEST_FILE: &str = "manifest.cfg";

/// `git describe`-style version; the build may inject `JCAS_GIT_DESCRIBE`.
pub fn version() -> String {
    option_env!("JCAS_GIT_DESCRIBE").map_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")), str::to_string)
}

/// SHA-256 of the canonical config text, hex encoded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(serialize(cfg).as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// First 16 hex digits of the hash of config and version; written into
/// every CSV row and the manifest.
pub fn run_id(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(format!("{}\n{}", version(), serialize(cfg)).as_bytes());
    digest[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Manifest text: header comments followed by the canonical config, so the
/// manifest itself is a valid config for re-running.
pub fn manifest(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# run_id = {}", run_id(cfg));
    let _ = writeln!(out, "# version = {}", version());
    let _ = writeln!(out, "# seed = {}", cfg.seed);
    let _ = writeln!(out, "# config_sha256 = {}", config_hash(cfg));
    out.push('\n');
    out.push_str(&serialize(cfg));
    out
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_all(result: &CampaignResult, cfg: &ExperimentConfig, dir: &Path, written: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let id = run_id(cfg);
    let mut target = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    fs::write(target(MANIFEST_FILE), manifest(cfg))?;
    if !result.rates.is_empty() {
        write_csv(
            &target("rates.csv"),
            RATE_COLUMNS,
            result.rates.iter().map(|r| {
                vec![
                    id.clone(),
                    r.drop.to_string(),
                    r.user.to_string(),
                    r.array.to_string(),
                    r.model.name().into(),
                    r.estimator.name().into(),
                    r.kind.name().into(),
                    num(r.rcr_db),
                    num(r.rate),
                    num(r.sinr),
                    num(r.terms.desired),
                    num(r.terms.interference.iter().sum()),
                    num(r.terms.self_subtraction),
                    num(r.terms.radar_leakage),
                    num(r.terms.noise),
                ]
            }),
        )?;
    }
    if !result.detection.is_empty() {
        write_csv(
            &target("detection.csv"),
            DETECTION_COLUMNS,
            result.detection.iter().map(|r| {
                vec![
                    id.clone(),
                    num(r.range_m),
                    r.kind.name().into(),
                    num(r.rcr_db),
                    num(r.estimate.pd),
                    num(r.estimate.ci_low),
                    num(r.estimate.ci_high),
                    r.estimate.trials.to_string(),
                    r.estimate.hits.to_string(),
                    num(r.threshold),
                ]
            }),
        )?;
    }
    if !result.surface.is_empty() {
        write_csv(
            &target("surface.csv"),
            SURFACE_COLUMNS,
            result.surface.iter().map(|c| {
                vec![
                    id.clone(),
                    num(c.delay_s),
                    num(c.doppler_hz),
                    num(c.delay_s * jcas_core::SPEED_OF_LIGHT / 2.0),
                    num(c.statistic),
                ]
            }),
        )?;
    }
    if !result.calibration.is_empty() {
        write_csv(
            &target("calibration.csv"),
            CALIBRATION_COLUMNS,
            result.calibration.iter().map(|r| {
                vec![
                    id.clone(),
                    r.kind.name().into(),
                    num(r.rcr_db),
                    num(r.threshold),
                    r.calibration_trials.to_string(),
                    num(cfg.pfa),
                    num(r.check.pd),
                    num(r.check.ci_low),
                    num(r.check.ci_high),
                    r.check.trials.to_string(),
                ]
            }),
        )?;
    }
    if !result.pattern.is_empty() {
        write_csv(
            &target("pattern.csv"),
            PATTERN_COLUMNS,
            result.pattern.iter().map(|r| {
                vec![
                    id.clone(),
                    r.kind.name().into(),
                    r.cut.name().into(),
                    num(r.azimuth_deg),
                    num(r.elevation_deg),
                    num(r.gain),
                    num(10.0 * r.gain.log10()),
                ]
            }),
        )?;
    }
    Ok(())
}

/// Writes the manifest and every nonempty CSV into `dir`. On failure the
/// files written so far are removed, and so is `dir` if this call created it.
pub fn write_outputs(result: &CampaignResult, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let created = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match write_all(result, cfg, dir, &mut written) {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created {
                let _ = fs::remove_dir(dir);
            }
            Err(e)
        }
    }
}

/// Linear-interpolated percentile of sorted data, `q ∈ [0, 100]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Human-readable summary. `bandwidth_hz` scales rates to throughput.
pub fn summary(result: &CampaignResult, bandwidth_hz: Option<f64>) -> String {
    let mut out = String::new();
    if !result.rates.is_empty() {
        let unit = if bandwidth_hz.is_some() { "Mbit/s" } else { "bit/s/Hz" };
        let _ = writeln!(out, "rate percentiles ({unit}): p10 p50 p90");
        let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
        for r in &result.rates {
            let key = format!(
                "{} {} {} {} rcr={}dB",
                r.array,
                r.model.name(),
                r.estimator.name(),
                r.kind.name(),
                r.rcr_db
            );
            let v = bandwidth_hz.map_or(r.rate, |b| r.rate * b / 1e6);
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, vs)) => vs.push(v),
                None => groups.push((key, vec![v])),
            }
        }
        for (key, mut vs) in groups {
            vs.sort_by(f64::total_cmp);
            let _ = writeln!(
                out,
                "  {key:<40} {:.4} {:.4} {:.4}",
                percentile(&vs, 10.0),
                percentile(&vs, 50.0),
                percentile(&vs, 90.0)
            );
        }
    }
    if !result.detection.is_empty() {
        let _ = writeln!(out, "detection probability (95% CI):");
        for r in &result.detection {
            let _ = writeln!(
                out,
                "  {:>8} m {} rcr={}dB  pd={:.3} [{:.3}, {:.3}]",
                r.range_m,
                r.kind.name(),
                r.rcr_db,
                r.estimate.pd,
                r.estimate.ci_low,
                r.estimate.ci_high
            );
        }
    }
    for r in &result.calibration {
        let _ = writeln!(
            out,
            "calibration {} rcr={}dB threshold={:e} measured pfa={:.4} [{:.4}, {:.4}]",
            r.kind.name(),
            r.rcr_db,
            r.threshold,
            r.check.pd,
            r.check.ci_low,
            r.check.ci_high
        );
    }
    if !result.pattern.is_empty() {
        let mut peaks: Vec<(String, f64)> = Vec::new();
        for r in &result.pattern {
            let key = format!("{} {}", r.kind.name(), r.cut.name());
            match peaks.iter_mut().find(|(k, _)| *k == key) {
                Some((_, g)) => *g = g.max(r.gain),
                None => peaks.push((key, r.gain)),
            }
        }
        for (k, g) in peaks {
            let _ = writeln!(out, "pattern {k}: peak gain {:.2} dB", 10.0 * g.log10());
        }
    }
    out
}
