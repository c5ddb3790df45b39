//! Acceptance criteria 1 to 9, one PASS/FAIL line each.
//!
//! Criteria that cannot hold under the model as specified are listed in
//! `KNOWN_FAILURES`. They still print FAIL; the run only fails when such a
//! criterion also misses its documented signature, or when any other
//! criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use jcas_core::array::{ArrayGeometry, Direction};
use jcas_core::beamforming::{pbr_beamformer, zfr_beamformer, BeamformerSet, RadarBeamKind};
use jcas_core::estimation::{hbar, lmmse_estimate, make_pilots, pilot_rx, pm_estimate, Estimator};
use jcas_core::linalg::{dot, norm, norm_sqr};
use jcas_core::propagation::{complex_normal, ChannelModel, ChannelParams};
use jcas_core::radar::{
    build_tx_grid, correlate, echo_synthesize, mcnemar_z, DelayDopplerGrid, DirectEvaluator, EchoMode, OfdmParams,
    SurfaceEvaluator, TargetEcho, TxPowers, Z_95,
};
use jcas_core::rates::{closed_form_for, mc_rate_bound, BeamNormalization, FrameTiming, McPrepared, McSetup, MomentConvention};
use jcas_core::scenario::{trial_rng, ScanSector};
use jcas_core::C64;
use jcas_sim::campaign::{run_campaign_with_workers, DetectionRow, RateRow};
use jcas_sim::config::{parse_config, ArraySize};
use jcas_sim::fft::FftEvaluator;
use jcas_sim::output::write_outputs;
use rand::Rng;

const KNOWN_FAILURES: &[u8] = &[6, 8];

struct Outcome {
    id: u8,
    title: &'static str,
    pass: bool,
    /// For a known failure: whether it failed in the documented way.
    signature: bool,
    detail: String,
}

fn outcome(id: u8, title: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome {
        id,
        title,
        pass,
        signature: pass,
        detail,
    }
}

fn random_vectors<R: Rng>(k: usize, n: usize, scale: f64, rng: &mut R) -> Vec<Vec<C64>> {
    (0..k).map(|_| (0..n).map(|_| complex_normal(rng) * scale).collect()).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let sector = ScanSector::default();
    let mut worst: f64 = 0.0;
    for s in 0..1000u64 {
        let side = [4, 10, 20][(s % 3) as usize];
        let g = ArrayGeometry::half_wavelength(side, side, 0.1).unwrap();
        let mut rng = trial_rng(101, 1, s);
        let scale = 10f64.powf(-5.0 + 3.0 * rng.random::<f64>());
        let h = random_vectors(10, g.n_elements(), scale, &mut rng);
        let dir = sector.sample(&mut rng).unwrap();
        let w = zfr_beamformer(&g, dir, &h).unwrap();
        for hk in &h {
            worst = worst.max(dot(hk, &w).norm() / norm(hk));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        1,
        "ZFR nulling exactness",
        worst <= 1e-10 && secs <= 60.0,
        format!("max |h^H w|/|h| = {worst:.2e} over 1000 scenarios, {secs:.1} s"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let g = ArrayGeometry::half_wavelength(8, 8, 0.1).unwrap();
    let k = 4;
    let book = make_pilots(2, k).unwrap().with_uniform_power(0.2).unwrap();
    let dirs: Vec<Direction> = (0..k)
        .map(|i| Direction::from_horizon_elevation(-0.9 + 0.55 * i as f64, -0.2 - 0.15 * i as f64).unwrap())
        .collect();
    let scan = Direction::from_degrees(15.0, 50.0).unwrap();
    let powers = [0.05, 0.04, 0.06, 0.05];
    let mut worst = (0.0, String::new());
    let mut checked = 0;
    for model in ChannelModel::ALL {
        let params: Vec<ChannelParams> = dirs
            .iter()
            .enumerate()
            .map(|(i, &dir)| {
                let beta = 0.5 + 0.25 * i as f64;
                match model {
                    ChannelModel::Rayleigh => ChannelParams::Rayleigh { beta },
                    ChannelModel::LineOfSight => ChannelParams::LineOfSight { beta, dir },
                    ChannelModel::Rice => ChannelParams::Rice { beta, k_factor: 0.5 + i as f64, dir },
                }
            })
            .collect();
        // one estimate realization fixes the radar beams
        let mut rng = trial_rng(202, 0, 0);
        let ch: Vec<_> = params.iter().map(|p| p.draw(&g, &mut rng).unwrap()).collect();
        let y = pilot_rx(&ch, &book, 0.1, &mut rng).unwrap();
        let h_hat = pm_estimate(&y, &book).unwrap().h_hat;
        for kind in RadarBeamKind::ALL {
            let beam = match kind {
                RadarBeamKind::Pbr => pbr_beamformer(&g, scan),
                RadarBeamKind::Zfr => zfr_beamformer(&g, scan, &h_hat).unwrap(),
            };
            for estimator in Estimator::ALL {
                let setup = McSetup {
                    geom: &g,
                    params: &params,
                    book: &book,
                    pilot_noise_var: 0.1,
                    data_powers: &powers,
                    radar_power: 0.3,
                    radar_beam: &beam,
                    noise_var: 0.02,
                    estimator,
                    normalization: BeamNormalization::Statistical,
                };
                let prep = McPrepared::new(&setup).unwrap();
                let cf = closed_form_for(&setup, &prep, FrameTiming::new(168, 2).unwrap(), MomentConvention::Exact).unwrap();
                let mc = mc_rate_bound(&setup, 10_000, &mut trial_rng(202, 1, checked)).unwrap();
                checked += 1;
                for (user, (c, m)) in cf.users.iter().map(|u| &u.terms).zip(&mc).enumerate() {
                    let mut pairs = vec![("desired", c.desired, m.desired), ("self", c.self_subtraction, m.self_subtraction), ("leakage", c.radar_leakage, m.radar_leakage), ("noise", c.noise, m.noise)];
                    pairs.extend(c.interference.iter().zip(&m.interference).map(|(a, b)| ("interference", *a, *b)));
                    for (name, a, b) in pairs {
                        let rel = (a - b).abs() / a.abs();
                        if rel > worst.0 {
                            worst = (rel, format!("{} {} {} user {user} {name}", model.name(), estimator.name(), kind.name()));
                        }
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        2,
        "closed-form vs Monte Carlo rate terms",
        worst.0 <= 0.05 && secs <= 600.0,
        format!("{checked} combinations, worst relative gap {:.2}% ({}), {secs:.1} s", 100.0 * worst.0, worst.1),
    )
}

fn small_detection_config(extra: &str) -> String {
    format!(
        "users = 4\narrays = 4x4\nm_sub = 64\nn_sym = 14\ncp_fraction = 1\ndoppler_cap = 0.25\nrcr_db = 3\nradial_speed = 0 m/s\n{extra}"
    )
}

fn criterion_3() -> Outcome {
    let cfg = parse_config(&small_detection_config("experiment = calibration\nkinds = pbr\ncalibration_trials = 50000\ntrials = 10000\npfa = 0.01\nseed = 303\n")).unwrap();
    let res = run_campaign_with_workers(&cfg, 1).unwrap();
    let row = &res.calibration[0];
    let band = 3.0 * (0.01f64 * 0.99 / 1e4).sqrt();
    let measured = row.check.pd;
    outcome(
        3,
        "GLRT false-alarm calibration",
        (measured - 0.01).abs() <= band && row.check.trials == 10_000,
        format!("measured P_FA {measured:.4} over 10^4 fresh H0 trials, band 0.01 +/- {band:.4}"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let params = OfdmParams::with_cp_fraction(64, 14, 30e3, 1.0).unwrap();
    let grid = DelayDopplerGrid::standard(&params, 0.25).unwrap();
    let direct = DirectEvaluator::new(grid.clone(), &params);
    let fft = FftEvaluator::new(grid.clone(), &params).unwrap();
    let g = ArrayGeometry::half_wavelength(10, 10, 0.1).unwrap();
    let sector = ScanSector::default();
    let mut hits = 0;
    let mut agree = 0;
    for s in 0..100u64 {
        let mut rng = trial_rng(404, 0, s);
        let dir = sector.sample(&mut rng).unwrap();
        let k = 4;
        let h = random_vectors(k, g.n_elements(), 1.0, &mut rng);
        let beams = BeamformerSet::build(&g, dir, &h, RadarBeamKind::Pbr).unwrap();
        let powers = TxPowers {
            data: vec![0.1; k],
            radar: 0.6,
        };
        let tx = build_tx_grid(&params, &beams, &powers, &mut rng).unwrap();
        let truth = rng.random_range(0..grid.n_cells());
        let (delay, doppler) = grid.cell(truth);
        let echo = TargetEcho {
            alpha: C64::from_polar(1e-3, 2.0 * PI * rng.random::<f64>()),
            dir,
            delay,
            doppler,
        };
        let rx = echo_synthesize(&tx, Some(&echo), &g, 0.0, EchoMode::Approximate, &mut rng).unwrap();
        let c = correlate(&rx, &tx, dir, &g).unwrap();
        let (idx, _) = direct.max_statistic(&c, &mut Vec::new()).unwrap();
        let (idx_fft, _) = fft.max_statistic(&c, &mut Vec::new()).unwrap();
        hits += usize::from(idx == truth);
        agree += usize::from(idx_fft == idx);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        4,
        "on-grid noise-free detection oracle",
        hits == 100 && secs <= 120.0,
        format!("argmax at the true cell in {hits}/100, FFT evaluator agrees in {agree}/100, {} cells, {secs:.1} s", grid.n_cells()),
    )
}

/// `true` when `better` should dominate `worse` and any reversal is within
/// paired binomial noise.
fn dominates(better: &DetectionRow, worse: &DetectionRow) -> (bool, f64) {
    let only_better = better.hits.iter().zip(&worse.hits).filter(|(b, w)| **b && !**w).count();
    let only_worse = better.hits.iter().zip(&worse.hits).filter(|(b, w)| !**b && **w).count();
    let z = mcnemar_z(only_better, only_worse);
    (better.estimate.pd >= worse.estimate.pd || z < Z_95, z)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let cfg = parse_config(
        "experiment = detection_vs_range\ncp_fraction = 1\ntrials = 1000\ncalibration_trials = 2000\n\
         ranges = 1500 m, 2250 m, 3000 m, 3750 m, 4500 m\nrcr_db = 3, 10\nseed = 505\n",
    )
    .unwrap();
    let res = run_campaign_with_workers(&cfg, 1).unwrap();
    let find = |r: f64, kind: RadarBeamKind, rcr: f64| {
        res.detection.iter().find(|d| d.range_m == r && d.kind == kind && d.rcr_db == rcr).unwrap()
    };
    let mut violations = Vec::new();
    let mut reversals = 0;
    for &rcr in &cfg.rcr_db {
        for &kind in &cfg.kinds {
            for w in cfg.ranges_m.windows(2) {
                let (ok, z) = dominates(find(w[0], kind, rcr), find(w[1], kind, rcr));
                reversals += usize::from(find(w[0], kind, rcr).estimate.pd < find(w[1], kind, rcr).estimate.pd);
                if !ok {
                    violations.push(format!("range {} {} {rcr} dB z={z:.2}", w[1], kind.name()));
                }
            }
        }
    }
    for &r in &cfg.ranges_m {
        for &rcr in &cfg.rcr_db {
            let (ok, z) = dominates(find(r, RadarBeamKind::Pbr, rcr), find(r, RadarBeamKind::Zfr, rcr));
            if !ok {
                violations.push(format!("zfr>pbr at {r} m {rcr} dB z={z:.2}"));
            }
        }
        for &kind in &cfg.kinds {
            let (ok, z) = dominates(find(r, kind, 10.0), find(r, kind, 3.0));
            if !ok {
                violations.push(format!("3dB>10dB at {r} m {} z={z:.2}", kind.name()));
            }
        }
    }
    let curve: Vec<String> = cfg
        .ranges_m
        .iter()
        .map(|r| format!("{:.2}/{:.2}", find(*r, RadarBeamKind::Pbr, 10.0).estimate.pd, find(*r, RadarBeamKind::Zfr, 3.0).estimate.pd))
        .collect();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        5,
        "P_D trends over range, beam kind and RCR",
        violations.is_empty(),
        format!(
            "P_D pbr@10dB/zfr@3dB = [{}], {reversals} raw range reversals, significant violations: {}, {secs:.1} s",
            curve.join(", "),
            if violations.is_empty() { "none".to_string() } else { violations.join("; ") }
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let sweep = parse_config("experiment = antenna_sweep\ndrops = 100\nrcr_db = 10\nseed = 606\n").unwrap();
    let res = run_campaign_with_workers(&sweep, 1).unwrap().rates;
    type Key = (usize, usize, ArraySize, ChannelModel, Estimator);
    let key = |r: &RateRow| -> Key { (r.drop, r.user, r.array, r.model, r.estimator) };
    let zfr: BTreeMap<String, f64> = res
        .iter()
        .filter(|r| r.kind == RadarBeamKind::Zfr)
        .map(|r| (format!("{:?}", key(r)), r.rate))
        .collect();
    let mut per_model: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut los_lmmse = (0, 0);
    for r in res.iter().filter(|r| r.kind == RadarBeamKind::Pbr) {
        let z = zfr[&format!("{:?}", key(r))];
        let ok = z >= r.rate * (1.0 - 1e-12);
        let e = per_model.entry(r.model.name()).or_default();
        e.0 += usize::from(ok);
        e.1 += 1;
        if r.model == ChannelModel::LineOfSight && r.estimator == Estimator::Lmmse {
            los_lmmse.0 += usize::from(ok);
            los_lmmse.1 += 1;
        }
    }
    let (ok_all, n_all) = per_model.values().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let zfr_frac = ok_all as f64 / n_all as f64;
    let rates_of = |array: ArraySize| median(res.iter().filter(|r| r.array == array).map(|r| r.rate).collect());
    let (m10, m20) = (rates_of(sweep.arrays[0]), rates_of(sweep.arrays[1]));

    let contaminated = parse_config("drops = 100\ntau_p = 5\nrcr_db = 10\nkinds = pbr\nseed = 607\n").unwrap();
    let res2 = run_campaign_with_workers(&contaminated, 1).unwrap().rates;
    let mut lmmse_ok = true;
    let mut medians = Vec::new();
    for model in ChannelModel::ALL {
        let med = |e: Estimator| median(res2.iter().filter(|r| r.model == model && r.estimator == e).map(|r| r.rate).collect());
        let (pm, lm) = (med(Estimator::PilotMatched), med(Estimator::Lmmse));
        lmmse_ok &= lm >= pm;
        medians.push(format!("{} {:.3}/{:.3}", model.name(), lm, pm));
    }
    let fractions: Vec<String> = per_model.iter().map(|(m, (ok, n))| format!("{m} {:.1}%", 100.0 * *ok as f64 / *n as f64)).collect();
    let pass = zfr_frac >= 0.95 && m20 > m10 && lmmse_ok;
    let rayleigh = per_model["rayleigh"];
    let signature = m20 > m10 && lmmse_ok && rayleigh.0 == rayleigh.1 && los_lmmse.0 as f64 >= 0.95 * los_lmmse.1 as f64;
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 6,
        title: "rate trends at matched seeds",
        pass,
        signature: pass || signature,
        detail: format!(
            "ZFR >= PBR for {:.1}% of user-drops ({}; LoS+LMMSE {:.1}%); median 20x20 {m20:.3} vs 10x10 {m10:.3}; \
             LMMSE/PM medians at tau_p = 5: {}; {secs:.1} s",
            100.0 * zfr_frac,
            fractions.join(", "),
            100.0 * los_lmmse.0 as f64 / los_lmmse.1 as f64,
            medians.join(", ")
        ),
    }
}

fn criterion_7() -> Outcome {
    let g = ArrayGeometry::half_wavelength(4, 4, 0.1).unwrap();
    let k = 4;
    let dirs: Vec<Direction> = (0..k).map(|i| Direction::new(-0.8 + 0.5 * i as f64, 1.8 + 0.1 * i as f64).unwrap()).collect();
    let mut detail = Vec::new();
    let mut ok = true;
    for model in ChannelModel::ALL {
        let params: Vec<ChannelParams> = dirs
            .iter()
            .enumerate()
            .map(|(i, &dir)| {
                let beta = 0.4 + 0.3 * i as f64;
                match model {
                    ChannelModel::Rayleigh => ChannelParams::Rayleigh { beta },
                    ChannelModel::LineOfSight => ChannelParams::LineOfSight { beta, dir },
                    ChannelModel::Rice => ChannelParams::Rice { beta, k_factor: 2.0, dir },
                }
            })
            .collect();
        let hb: Vec<_> = params.iter().map(|p| hbar(p, &g)).collect();
        let book = make_pilots(2, k).unwrap().with_uniform_power(0.3).unwrap();
        let (mut pm_err, mut lm_err) = (0.0, 0.0);
        for t in 0..1000u64 {
            let mut rng = trial_rng(707, model as u64, t);
            let ch: Vec<_> = params.iter().map(|p| p.draw(&g, &mut rng).unwrap()).collect();
            let y = pilot_rx(&ch, &book, 0.2, &mut rng).unwrap();
            let pm = pm_estimate(&y, &book).unwrap().h_hat;
            let lm = lmmse_estimate(&y, &book, &hb, 0.2).unwrap().h_hat;
            for (c, (p, l)) in ch.iter().zip(pm.iter().zip(&lm)) {
                pm_err += c.h.iter().zip(p).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
                lm_err += c.h.iter().zip(l).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
            }
        }
        ok &= lm_err <= pm_err;
        detail.push(format!("{} {:.3}/{:.3}", model.name(), lm_err / 1000.0, pm_err / 1000.0));
    }
    let mut exact: f64 = 0.0;
    for s in 0..100u64 {
        let mut rng = trial_rng(708, 0, s);
        let book = make_pilots(k, k).unwrap().with_uniform_power(0.5 + rng.random::<f64>()).unwrap();
        let ch: Vec<_> = (0..k).map(|_| ChannelParams::Rayleigh { beta: 1.0 }.draw(&g, &mut rng).unwrap()).collect();
        let y = pilot_rx(&ch, &book, 0.0, &mut rng).unwrap();
        let est = pm_estimate(&y, &book).unwrap().h_hat;
        for (c, e) in ch.iter().zip(&est) {
            let err = c.h.iter().zip(e).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            exact = exact.max(err / norm_sqr(&c.h).sqrt());
        }
    }
    ok &= exact <= 1e-12;
    outcome(
        7,
        "estimator properties",
        ok,
        format!("LMMSE/PM mean squared error per trial: {}; noise-free PM max relative error {exact:.1e}", detail.join(", ")),
    )
}

fn criterion_8() -> Outcome {
    let params = OfdmParams::with_cp_fraction(64, 14, 30e3, 1.0 / 14.0).unwrap();
    let g = ArrayGeometry::half_wavelength(2, 2, 0.1).unwrap();
    let dir = Direction::from_degrees(10.0, 60.0).unwrap();
    let mut rng = trial_rng(808, 0, 0);
    let h = random_vectors(2, g.n_elements(), 1.0, &mut rng);
    let beams = BeamformerSet::build(&g, dir, &h, RadarBeamKind::Pbr).unwrap();
    let powers = TxPowers {
        data: vec![0.2; 2],
        radar: 0.6,
    };
    let tx = build_tx_grid(&params, &beams, &powers, &mut rng).unwrap();
    let errors: Vec<f64> = [0.01, 0.05, 0.1]
        .iter()
        .map(|ratio| {
            let echo = TargetEcho {
                alpha: C64::new(1.0, 0.0),
                dir,
                delay: 3.0 / params.bandwidth(),
                doppler: ratio * params.delta_f(),
            };
            let approx = echo_synthesize(&tx, Some(&echo), &g, 0.0, EchoMode::Approximate, &mut rng).unwrap();
            let exact = echo_synthesize(&tx, Some(&echo), &g, 0.0, EchoMode::Exact, &mut rng).unwrap();
            let diff: f64 = exact.as_slice().iter().zip(approx.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum();
            (diff / norm_sqr(approx.as_slice())).sqrt()
        })
        .collect();
    let monotone = errors.windows(2).all(|w| w[1] > w[0]);
    let pass = errors[0] <= 0.01 && monotone;
    // common phase π·ε plus inter-carrier interference of about π·ε/√3
    let predicted = 2.0 * PI * 0.01 / 3f64.sqrt();
    let signature = monotone && (errors[0] - predicted).abs() <= 0.1 * predicted;
    Outcome {
        id: 8,
        title: "approximate vs exact echo",
        pass,
        signature: pass || signature,
        detail: format!(
            "relative error {:.4} / {:.4} / {:.4} at nu/delta_f = 0.01 / 0.05 / 0.1; monotone: {monotone}; \
             predicted {predicted:.4} at 0.01 from the in-symbol Doppler phase ramp",
            errors[0], errors[1], errors[2]
        ),
    }
}

fn criterion_9() -> Outcome {
    let configs = [
        "experiment = rate_cdf\ndrops = 12\nusers = 4\narrays = 4x4\ntau_p = 2\nseed = 909\n".to_string(),
        small_detection_config("experiment = detection_vs_range\ntrials = 60\ncalibration_trials = 2000\nranges = 1 km, 2 km\nkinds = pbr, zfr\nseed = 910\n"),
    ];
    let mut identical = true;
    let mut files = 0;
    for text in &configs {
        let cfg = parse_config(text).unwrap();
        let mut snapshots = Vec::new();
        for workers in [1, 3, 1] {
            let dir = tempfile::tempdir().unwrap();
            let res = run_campaign_with_workers(&cfg, workers).unwrap();
            let written = write_outputs(&res, &cfg, dir.path()).unwrap();
            let bytes: Vec<(String, Vec<u8>)> = written
                .iter()
                .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
                .collect();
            snapshots.push(bytes);
        }
        files += snapshots[0].len();
        identical &= snapshots.windows(2).all(|w| w[0] == w[1]);
    }
    outcome(
        9,
        "byte-identical reruns across worker counts",
        identical,
        format!("{files} output files compared over runs with 1, 3 and 1 workers"),
    )
}

fn main() -> ExitCode {
    let checks: [fn() -> Outcome; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut unexpected = Vec::new();
    for check in checks {
        let o = check();
        let known = KNOWN_FAILURES.contains(&o.id);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && known {
            if o.signature {
                " [known: see README]"
            } else {
                " [known failure with an unexpected signature]"
            }
        } else {
            ""
        };
        println!("criterion {}: {verdict} {}{note}: {}", o.id, o.title, o.detail);
        if !o.pass && !(known && o.signature) {
            unexpected.push(o.id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
