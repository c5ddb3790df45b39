//! OFDM radar: transmit grid, target echo, GLRT surface over a delay-Doppler
//! grid, threshold calibration and detection-rate estimates.
//!
//! Grids are stored symbol-major: cell `(n, m)` has flat index `n·M + m`.
//!
//! Because `u(n,m) = a aᴴ s(n,m)`, the matched term reduces to the scalar
//! `c(n,m) = u(n,m)ᴴ y(n,m) = conj(aᴴs(n,m)) · aᴴy(n,m)`. The GLRT surface is
//! a function of `c` alone, which is what [`SurfaceEvaluator`] consumes.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::array::{ArrayGeometry, Direction};
use crate::beamforming::BeamformerSet;
use crate::linalg::dot;
use crate::propagation::{complex_normal, RadarTarget};
use crate::scenario::PowerBudget;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    m_sub: usize,
    n_sym: usize,
    delta_f: f64,
    t_cp: f64,
}

impl OfdmParams {
    pub fn new(m_sub: usize, n_sym: usize, delta_f: f64, t_cp: f64) -> Result<Self> {
        if m_sub == 0 {
            return Err(Error::invalid("m_sub", "must be at least 1"));
        }
        if n_sym == 0 {
            return Err(Error::invalid("n_sym", "must be at least 1"));
        }
        if !(delta_f > 0.0 && delta_f.is_finite()) {
            return Err(Error::invalid("delta_f", "must be positive and finite"));
        }
        if !(t_cp >= 0.0 && t_cp.is_finite()) {
            return Err(Error::invalid("t_cp", "must be finite and nonnegative"));
        }
        Ok(OfdmParams {
            m_sub,
            n_sym,
            delta_f,
            t_cp,
        })
    }

    /// `T_CP = cp_fraction · T_s`.
    pub fn with_cp_fraction(m_sub: usize, n_sym: usize, delta_f: f64, cp_fraction: f64) -> Result<Self> {
        Self::new(m_sub, n_sym, delta_f, cp_fraction / delta_f)
    }

    pub fn m_sub(&self) -> usize {
        self.m_sub
    }

    pub fn n_sym(&self) -> usize {
        self.n_sym
    }

    pub fn n_cells(&self) -> usize {
        self.m_sub * self.n_sym
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f
    }

    pub fn t_cp(&self) -> f64 {
        self.t_cp
    }

    /// `T_s = 1/Δf`.
    pub fn t_s(&self) -> f64 {
        1.0 / self.delta_f
    }

    /// `T₀ = T_CP + T_s`.
    pub fn t0(&self) -> f64 {
        self.t_cp + self.t_s()
    }

    /// `B = M·Δf`.
    pub fn bandwidth(&self) -> f64 {
        self.m_sub as f64 * self.delta_f
    }

    /// Largest unambiguous range, `c·T_CP/2`.
    pub fn max_range(&self) -> f64 {
        crate::SPEED_OF_LIGHT * self.t_cp / 2.0
    }
}

/// Per-symbol transmit powers `η_k` and `η_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct TxPowers {
    pub data: Vec<f64>,
    pub radar: f64,
}

impl TxPowers {
    /// `η_k = P_DL/(K·M·N)` for every user and `η_R = P_R/(M·N)`.
    pub fn from_budget(budget: &PowerBudget, k: usize, ofdm: &OfdmParams) -> Self {
        let data = if k == 0 {
            Vec::new()
        } else {
            vec![budget.data_power(k, ofdm.m_sub, ofdm.n_sym); k]
        };
        TxPowers {
            data,
            radar: budget.radar_power(ofdm.m_sub, ofdm.n_sym),
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.data.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: self.data.len(),
            });
        }
        if self.data.iter().chain(core::iter::once(&self.radar)).any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid("powers", "must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Unit-modulus QPSK symbol `(±1 ± j)/√2`.
pub fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let bits = rng.random::<u32>();
    let re = if bits & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    let im = if bits & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    C64::new(re, im)
}

/// QPSK symbols from two bits each of a buffered `u64`.
#[derive(Default)]
struct QpskBits {
    word: u64,
    left: u32,
}

impl QpskBits {
    fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> C64 {
        if self.left == 0 {
            self.word = rng.random::<u64>();
            self.left = 32;
        }
        let b = self.word & 3;
        self.word >>= 2;
        self.left -= 1;
        let re = if b & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
        let im = if b & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
        C64::new(re, im)
    }
}

/// Draws the symbols of one frame, cell by cell: users `1..K` then radar.
fn draw_symbols<R: Rng + ?Sized>(k: usize, cells: usize, rng: &mut R) -> (Vec<C64>, Vec<C64>) {
    let mut bits = QpskBits::default();
    let mut data = vec![C64::new(0.0, 0.0); k * cells];
    let mut radar = Vec::with_capacity(cells);
    for cell in 0..cells {
        for user in 0..k {
            data[user * cells + cell] = bits.next(rng);
        }
        radar.push(bits.next(rng));
    }
    (data, radar)
}

/// Transmit vectors `s(n,m)` and the symbols that built them.
#[derive(Debug, Clone)]
pub struct TxGrid {
    params: OfdmParams,
    n_a: usize,
    s: Vec<C64>,
    data_symbols: Vec<C64>,
    radar_symbols: Vec<C64>,
    powers: TxPowers,
}

/// `s(n,m) = Σ_k √η_k x_k(n,m) w_k + √η_R x_R(n,m) w_R` with QPSK symbols.
pub fn build_tx_grid<R: Rng + ?Sized>(
    params: &OfdmParams,
    beams: &BeamformerSet,
    powers: &TxPowers,
    rng: &mut R,
) -> Result<TxGrid> {
    let k = beams.n_users();
    powers.validate(k)?;
    let n_a = beams.n_elements();
    if let Some(bad) = beams.comm.iter().find(|w| w.len() != n_a) {
        return Err(Error::DimensionMismatch {
            expected: n_a,
            found: bad.len(),
        });
    }
    let cells = params.n_cells();
    let (data_symbols, radar_symbols) = draw_symbols(k, cells, rng);
    let amp_k: Vec<f64> = powers.data.iter().map(|p| p.sqrt()).collect();
    let amp_r = powers.radar.sqrt();
    let mut s = vec![C64::new(0.0, 0.0); cells * n_a];
    for cell in 0..cells {
        let dst = &mut s[cell * n_a..(cell + 1) * n_a];
        let xr = radar_symbols[cell] * amp_r;
        dst.iter_mut().zip(&beams.radar).for_each(|(d, w)| *d = w * xr);
        for (user, w) in beams.comm.iter().enumerate() {
            let x = data_symbols[user * cells + cell] * amp_k[user];
            dst.iter_mut().zip(w).for_each(|(d, w)| *d += w * x);
        }
    }
    Ok(TxGrid {
        params: *params,
        n_a,
        s,
        data_symbols,
        radar_symbols,
        powers: powers.clone(),
    })
}

impl TxGrid {
    pub fn params(&self) -> &OfdmParams {
        &self.params
    }

    pub fn n_elements(&self) -> usize {
        self.n_a
    }

    pub fn n_users(&self) -> usize {
        self.powers.data.len()
    }

    pub fn powers(&self) -> &TxPowers {
        &self.powers
    }

    pub fn s(&self, n: usize, m: usize) -> &[C64] {
        let cell = n * self.params.m_sub + m;
        &self.s[cell * self.n_a..(cell + 1) * self.n_a]
    }

    pub fn data_symbol(&self, k: usize, n: usize, m: usize) -> C64 {
        self.data_symbols[k * self.params.n_cells() + n * self.params.m_sub + m]
    }

    pub fn radar_symbol(&self, n: usize, m: usize) -> C64 {
        self.radar_symbols[n * self.params.m_sub + m]
    }

    /// `Σ_{n,m} ‖s(n,m)‖²`.
    pub fn energy(&self) -> f64 {
        self.s.iter().map(C64::norm_sqr).sum()
    }

    /// `aᴴ s(n,m)` for every cell.
    pub fn project(&self, a: &[C64]) -> Vec<C64> {
        self.s.chunks_exact(self.n_a).map(|s| dot(a, s)).collect()
    }
}

/// Received post-DFT grid, `N_A` samples per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RxGrid {
    params: OfdmParams,
    n_a: usize,
    y: Vec<C64>,
}

impl RxGrid {
    pub fn zeros(params: &OfdmParams, n_a: usize) -> Self {
        RxGrid {
            params: *params,
            n_a,
            y: vec![C64::new(0.0, 0.0); params.n_cells() * n_a],
        }
    }

    pub fn params(&self) -> &OfdmParams {
        &self.params
    }

    pub fn n_elements(&self) -> usize {
        self.n_a
    }

    pub fn y(&self, n: usize, m: usize) -> &[C64] {
        let cell = n * self.params.m_sub + m;
        &self.y[cell * self.n_a..(cell + 1) * self.n_a]
    }

    pub fn y_mut(&mut self, n: usize, m: usize) -> &mut [C64] {
        let cell = n * self.params.m_sub + m;
        &mut self.y[cell * self.n_a..(cell + 1) * self.n_a]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.y
    }

    pub fn scale(&mut self, c: C64) {
        self.y.iter_mut().for_each(|v| *v *= c);
    }

    /// `aᴴ y(n,m)` for every cell.
    pub fn project(&self, a: &[C64]) -> Vec<C64> {
        self.y.chunks_exact(self.n_a).map(|y| dot(a, y)).collect()
    }
}

/// The quantities of a target that shape its echo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetEcho {
    pub alpha: C64,
    pub dir: Direction,
    pub delay: f64,
    pub doppler: f64,
}

impl From<&RadarTarget> for TargetEcho {
    fn from(t: &RadarTarget) -> Self {
        TargetEcho {
            alpha: t.alpha(),
            dir: t.direction(),
            delay: t.delay(),
            doppler: t.doppler(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoMode {
    /// `y = α a aᴴ s e^{j2πνnT₀} e^{−j2πmΔfτ} + z`.
    Approximate,
    /// Sampled symbol sum with intra-symbol Doppler, followed by the `M`-point DFT.
    Exact,
}

/// `aᴴs(n,m) · α e^{j2πνnT₀}` times the per-mode subcarrier response.
fn echo_scalars(proj: &[C64], echo: &TargetEcho, params: &OfdmParams, mode: EchoMode) -> Vec<C64> {
    let (n_sym, m_sub) = (params.n_sym, params.m_sub);
    let mut out = vec![C64::new(0.0, 0.0); params.n_cells()];
    let delay_step = -2.0 * PI * params.delta_f * echo.delay;
    match mode {
        EchoMode::Approximate => {
            for n in 0..n_sym {
                let slow = echo.alpha * C64::from_polar(1.0, 2.0 * PI * echo.doppler * n as f64 * params.t0());
                for m in 0..m_sub {
                    let cell = n * m_sub + m;
                    out[cell] = slow * C64::from_polar(1.0, delay_step * m as f64) * proj[cell];
                }
            }
        }
        EchoMode::Exact => {
            let eps = echo.doppler / params.delta_f;
            let mf = m_sub as f64;
            let mut time = vec![C64::new(0.0, 0.0); m_sub];
            for n in 0..n_sym {
                let slow = echo.alpha * C64::from_polar(1.0, 2.0 * PI * echo.doppler * n as f64 * params.t0());
                let row = &proj[n * m_sub..(n + 1) * m_sub];
                for (q, t) in time.iter_mut().enumerate() {
                    let qf = q as f64;
                    let mut acc = C64::new(0.0, 0.0);
                    for (l, s) in row.iter().enumerate() {
                        let phase = 2.0 * PI * qf / mf * (eps + l as f64) + delay_step * l as f64;
                        acc += s * C64::from_polar(1.0, phase);
                    }
                    *t = acc * slow;
                }
                for m in 0..m_sub {
                    let mut acc = C64::new(0.0, 0.0);
                    for (q, t) in time.iter().enumerate() {
                        let phase = -2.0 * PI * ((m * q) % m_sub) as f64 / mf;
                        acc += t * C64::from_polar(1.0, phase);
                    }
                    out[n * m_sub + m] = acc / mf;
                }
            }
        }
    }
    out
}

/// Echo of a point target plus `CN(0, σ_w²)` noise per antenna and cell.
///
/// With `target = None` the grid is pure noise.
pub fn echo_synthesize<R: Rng + ?Sized>(
    tx: &TxGrid,
    target: Option<&TargetEcho>,
    geom: &ArrayGeometry,
    noise_var: f64,
    mode: EchoMode,
    rng: &mut R,
) -> Result<RxGrid> {
    if geom.n_elements() != tx.n_a {
        return Err(Error::DimensionMismatch {
            expected: tx.n_a,
            found: geom.n_elements(),
        });
    }
    if !(noise_var >= 0.0) {
        return Err(Error::invalid("noise_var", "must be nonnegative"));
    }
    let params = tx.params;
    let mut rx = RxGrid::zeros(&params, tx.n_a);
    if let Some(echo) = target {
        if mode == EchoMode::Approximate && echo.delay > params.t_cp {
            return Err(Error::DelayBeyondPrefix {
                delay: echo.delay,
                cyclic_prefix: params.t_cp,
            });
        }
        let a = geom.steering_vector(echo.dir);
        let scalars = echo_scalars(&tx.project(&a), echo, &params, mode);
        for (y, g) in rx.y.chunks_exact_mut(tx.n_a).zip(&scalars) {
            y.iter_mut().zip(&a).for_each(|(y, a)| *y = a * g);
        }
    }
    if noise_var > 0.0 {
        let sd = noise_var.sqrt();
        rx.y.iter_mut().for_each(|y| *y += complex_normal(rng) * sd);
    }
    Ok(rx)
}

/// Matched terms `c(n,m) = u(n,m)ᴴ y(n,m)` for look direction `dir`.
pub fn correlate(rx: &RxGrid, tx: &TxGrid, dir: Direction, geom: &ArrayGeometry) -> Result<Vec<C64>> {
    if rx.n_a != tx.n_a || geom.n_elements() != tx.n_a {
        return Err(Error::DimensionMismatch {
            expected: tx.n_a,
            found: rx.n_a.min(geom.n_elements()),
        });
    }
    if rx.params != tx.params {
        return Err(Error::invalid("rx grid", "OFDM parameters differ from the transmit grid"));
    }
    let a = geom.steering_vector(dir);
    Ok(tx.project(&a).iter().zip(rx.project(&a)).map(|(s, y)| s.conj() * y).collect())
}

/// `|Σ_{n,m} e^{−j2πνnT₀} e^{j2πmΔfτ} u(n,m)ᴴ y(n,m)|²` for one trial cell.
pub fn glrt_statistic(
    rx: &RxGrid,
    tx: &TxGrid,
    dir: Direction,
    geom: &ArrayGeometry,
    delay: f64,
    doppler: f64,
) -> Result<f64> {
    let c = correlate(rx, tx, dir, geom)?;
    let p = tx.params;
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..p.n_sym {
        let slow = C64::from_polar(1.0, -2.0 * PI * doppler * n as f64 * p.t0());
        let mut inner = C64::new(0.0, 0.0);
        for m in 0..p.m_sub {
            inner += C64::from_polar(1.0, 2.0 * PI * m as f64 * p.delta_f * delay) * c[n * p.m_sub + m];
        }
        acc += slow * inner;
    }
    Ok(acc.norm_sqr())
}

/// Trial delays and Dopplers of the GLRT search.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDopplerGrid {
    delays: Vec<f64>,
    dopplers: Vec<f64>,
}

impl DelayDopplerGrid {
    /// Delays must lie in `[0, T_CP]` and Dopplers in `(−Δf/2, Δf/2)`.
    pub fn new(delays: Vec<f64>, dopplers: Vec<f64>, params: &OfdmParams) -> Result<Self> {
        if delays.is_empty() || dopplers.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let slack = 1e-12 * params.t_cp.max(params.t_s());
        if delays.iter().any(|d| !(*d >= 0.0 && *d <= params.t_cp + slack)) {
            return Err(Error::invalid("delays", "must lie within [0, T_CP]"));
        }
        if dopplers.iter().any(|v| !(v.abs() < params.delta_f / 2.0)) {
            return Err(Error::invalid("dopplers", "must lie within (-delta_f/2, delta_f/2)"));
        }
        Ok(DelayDopplerGrid { delays, dopplers })
    }

    /// Delay spacing `1/(MΔf)` up to `T_CP`, Doppler spacing `1/(N·T₀)` up to
    /// `±doppler_cap_ratio·Δf`.
    pub fn standard(params: &OfdmParams, doppler_cap_ratio: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&doppler_cap_ratio) {
            return Err(Error::invalid("doppler_cap_ratio", "must lie in [0, 0.5)"));
        }
        let dt = 1.0 / params.bandwidth();
        let q_max = ((params.t_cp / dt + 1e-9).floor() as usize).min(params.m_sub - 1);
        let delays = (0..=q_max).map(|q| q as f64 * dt).collect();
        let dv = Self::doppler_spacing(params);
        let p_max = ((doppler_cap_ratio * params.delta_f / dv + 1e-9).floor() as usize).min((params.n_sym - 1) / 2);
        let p_max = p_max as i64;
        let dopplers = (-p_max..=p_max).map(|p| p as f64 * dv).collect();
        Self::new(delays, dopplers, params)
    }

    pub fn delay_spacing(params: &OfdmParams) -> f64 {
        1.0 / params.bandwidth()
    }

    pub fn doppler_spacing(params: &OfdmParams) -> f64 {
        1.0 / (params.n_sym as f64 * params.t0())
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn dopplers(&self) -> &[f64] {
        &self.dopplers
    }

    pub fn n_cells(&self) -> usize {
        self.delays.len() * self.dopplers.len()
    }

    /// `(delay, doppler)` of flat index `p·Q + q`.
    pub fn cell(&self, index: usize) -> (f64, f64) {
        let q = self.delays.len();
        (self.delays[index % q], self.dopplers[index / q])
    }
}

/// Evaluates the GLRT surface from the matched terms `c(n,m)`.
///
/// Output index is `p·Q + q` for Doppler `p` and delay `q`.
pub trait SurfaceEvaluator {
    fn grid(&self) -> &DelayDopplerGrid;

    fn evaluate(&self, c: &[C64], out: &mut Vec<f64>) -> Result<()>;

    fn max_statistic(&self, c: &[C64], scratch: &mut Vec<f64>) -> Result<(usize, f64)> {
        self.evaluate(c, scratch)?;
        let mut best = (0, f64::NEG_INFINITY);
        for (i, v) in scratch.iter().enumerate() {
            if *v > best.1 {
                best = (i, *v);
            }
        }
        Ok(best)
    }
}

/// Separable direct evaluation with precomputed phase tables.
#[derive(Debug, Clone)]
pub struct DirectEvaluator {
    grid: DelayDopplerGrid,
    m_sub: usize,
    n_sym: usize,
    delay_twiddles: Vec<C64>,
    doppler_twiddles: Vec<C64>,
}

impl DirectEvaluator {
    pub fn new(grid: DelayDopplerGrid, params: &OfdmParams) -> Self {
        let (m_sub, n_sym) = (params.m_sub, params.n_sym);
        let mut delay_twiddles = Vec::with_capacity(grid.delays.len() * m_sub);
        for tau in &grid.delays {
            for m in 0..m_sub {
                delay_twiddles.push(C64::from_polar(1.0, 2.0 * PI * m as f64 * params.delta_f * tau));
            }
        }
        let mut doppler_twiddles = Vec::with_capacity(grid.dopplers.len() * n_sym);
        for nu in &grid.dopplers {
            for n in 0..n_sym {
                doppler_twiddles.push(C64::from_polar(1.0, -2.0 * PI * nu * n as f64 * params.t0()));
            }
        }
        DirectEvaluator {
            grid,
            m_sub,
            n_sym,
            delay_twiddles,
            doppler_twiddles,
        }
    }
}

impl SurfaceEvaluator for DirectEvaluator {
    fn grid(&self) -> &DelayDopplerGrid {
        &self.grid
    }

    fn evaluate(&self, c: &[C64], out: &mut Vec<f64>) -> Result<()> {
        if c.len() != self.m_sub * self.n_sym {
            return Err(Error::DimensionMismatch {
                expected: self.m_sub * self.n_sym,
                found: c.len(),
            });
        }
        let n_q = self.grid.delays.len();
        // inner[n·Q + q] = Σ_m e^{j2πmΔfτ_q} c(n,m)
        let mut inner = vec![C64::new(0.0, 0.0); self.n_sym * n_q];
        for n in 0..self.n_sym {
            let row = &c[n * self.m_sub..(n + 1) * self.m_sub];
            for q in 0..n_q {
                let tw = &self.delay_twiddles[q * self.m_sub..(q + 1) * self.m_sub];
                inner[n * n_q + q] = row.iter().zip(tw).map(|(x, t)| x * t).sum();
            }
        }
        out.clear();
        for p in 0..self.grid.dopplers.len() {
            let tw = &self.doppler_twiddles[p * self.n_sym..(p + 1) * self.n_sym];
            for q in 0..n_q {
                let s: C64 = (0..self.n_sym).map(|n| tw[n] * inner[n * n_q + q]).sum();
                out.push(s.norm_sqr());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    /// Surface values, index `p·Q + q`.
    pub statistic_surface: Vec<f64>,
    pub n_delays: usize,
    pub n_dopplers: usize,
    pub threshold: f64,
    pub decision: Hypothesis,
    /// `(delay, doppler)` of the largest statistic.
    pub argmax_cell: (f64, f64),
    pub argmax_index: usize,
    pub argmax_value: f64,
}

/// Maximizes the statistic over the grid and compares it with `threshold`.
pub fn detect_from_terms(c: &[C64], evaluator: &dyn SurfaceEvaluator, threshold: f64) -> Result<DetectionReport> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid("threshold", "must be nonnegative"));
    }
    let mut surface = Vec::new();
    let (idx, value) = evaluator.max_statistic(c, &mut surface)?;
    let grid = evaluator.grid();
    Ok(DetectionReport {
        statistic_surface: surface,
        n_delays: grid.delays.len(),
        n_dopplers: grid.dopplers.len(),
        threshold,
        decision: if value > threshold { Hypothesis::H1 } else { Hypothesis::H0 },
        argmax_cell: grid.cell(idx),
        argmax_index: idx,
        argmax_value: value,
    })
}

pub fn glrt_detect(
    rx: &RxGrid,
    tx: &TxGrid,
    dir: Direction,
    geom: &ArrayGeometry,
    grid: &DelayDopplerGrid,
    threshold: f64,
) -> Result<DetectionReport> {
    let c = correlate(rx, tx, dir, geom)?;
    detect_from_terms(&c, &DirectEvaluator::new(grid.clone(), &tx.params), threshold)
}

/// Scalar beam responses needed to synthesize `c(n,m)` without the full grid.
///
/// For scan steering vector `a_s` and target steering vector `a_T` it holds
/// `a_sᴴ w` and `a_Tᴴ w` for every beam, scaled by the beam amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamProjection {
    scan_comm: Vec<C64>,
    scan_radar: C64,
    target_comm: Vec<C64>,
    target_radar: C64,
    /// `a_sᴴ a_T`.
    cross: C64,
    n_a: usize,
}

impl BeamProjection {
    pub fn new(
        beams: &BeamformerSet,
        powers: &TxPowers,
        geom: &ArrayGeometry,
        scan: Direction,
        target_dir: Direction,
    ) -> Result<Self> {
        powers.validate(beams.n_users())?;
        let a_s = geom.steering_vector(scan);
        let a_t = geom.steering_vector(target_dir);
        if beams.n_elements() != a_s.len() {
            return Err(Error::DimensionMismatch {
                expected: a_s.len(),
                found: beams.n_elements(),
            });
        }
        let amp = |w: &[C64], a: &[C64], p: f64| dot(a, w) * p.sqrt();
        Ok(BeamProjection {
            scan_comm: beams.comm.iter().zip(&powers.data).map(|(w, p)| amp(w, &a_s, *p)).collect(),
            scan_radar: amp(&beams.radar, &a_s, powers.radar),
            target_comm: beams.comm.iter().zip(&powers.data).map(|(w, p)| amp(w, &a_t, *p)).collect(),
            target_radar: amp(&beams.radar, &a_t, powers.radar),
            cross: dot(&a_s, &a_t),
            n_a: a_s.len(),
        })
    }
}

/// Draws one frame and returns `c(n,m)` directly.
///
/// Symbols are drawn in the same order as [`build_tx_grid`]; the noise is
/// the projected `a_sᴴz ~ CN(0, N_A σ_w²)`, one sample per cell. The result
/// has the same distribution as [`correlate`] applied to a full synthesized
/// grid under [`EchoMode::Approximate`].
pub fn projected_terms<R: Rng + ?Sized>(
    proj: &BeamProjection,
    params: &OfdmParams,
    target: Option<&TargetEcho>,
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    if !(noise_var >= 0.0) {
        return Err(Error::invalid("noise_var", "must be nonnegative"));
    }
    let cells = params.n_cells();
    let k = proj.scan_comm.len();
    let (data, radar) = draw_symbols(k, cells, rng);
    let cell_proj = |cell: usize, comm: &[C64], r: C64| -> C64 {
        let mut v = radar[cell] * r;
        for (user, b) in comm.iter().enumerate() {
            v += data[user * cells + cell] * b;
        }
        v
    };
    let scan: Vec<C64> = (0..cells).map(|c| cell_proj(c, &proj.scan_comm, proj.scan_radar)).collect();
    let mut r = vec![C64::new(0.0, 0.0); cells];
    if let Some(echo) = target {
        if echo.delay > params.t_cp {
            return Err(Error::DelayBeyondPrefix {
                delay: echo.delay,
                cyclic_prefix: params.t_cp,
            });
        }
        let at_target: Vec<C64> = (0..cells).map(|c| cell_proj(c, &proj.target_comm, proj.target_radar)).collect();
        let shaped = TargetEcho {
            alpha: echo.alpha * proj.cross,
            ..*echo
        };
        r = echo_scalars(&at_target, &shaped, params, EchoMode::Approximate);
    }
    if noise_var > 0.0 {
        let sd = (noise_var * proj.n_a as f64).sqrt();
        r.iter_mut().for_each(|v| *v += complex_normal(rng) * sd);
    }
    Ok(scan.iter().zip(&r).map(|(s, y)| s.conj() * y).collect())
}

/// Empirical `(1 − pfa)` quantile: the `⌈(1 − pfa)·T⌉`-th smallest sample.
///
/// `pfa ≥ 1` gives 0. Fewer than 20 expected exceedances is an error.
pub fn threshold_from_samples(samples: &mut [f64], pfa: f64) -> Result<f64> {
    if !(pfa > 0.0) {
        return Err(Error::invalid("pfa", "must be positive"));
    }
    if pfa >= 1.0 {
        return Ok(0.0);
    }
    let t = samples.len();
    if (t as f64) * pfa < 20.0 {
        return Err(Error::InsufficientTrials { trials: t, pfa });
    }
    if samples.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("samples", "contain NaN"));
    }
    samples.sort_by(f64::total_cmp);
    let rank = ((1.0 - pfa) * t as f64 - 1e-9).ceil() as usize;
    Ok(samples[rank.max(1) - 1])
}

/// Runs `trials` H0 trials through `max_statistic` and returns the threshold.
pub fn calibrate_threshold<F>(trials: usize, pfa: f64, mut max_statistic: F) -> Result<f64>
where
    F: FnMut(usize) -> Result<f64>,
{
    if pfa < 1.0 && (trials as f64) * pfa < 20.0 {
        return Err(Error::InsufficientTrials { trials, pfa });
    }
    let mut samples = (0..trials).map(&mut max_statistic).collect::<Result<Vec<_>>>()?;
    threshold_from_samples(&mut samples, pfa)
}

/// Binomial proportion with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEstimate {
    pub hits: usize,
    pub trials: usize,
    pub pd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// 95% two-sided normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

pub fn wilson_interval(hits: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

impl DetectionEstimate {
    pub fn new(hits: usize, trials: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, trials, Z_95);
        DetectionEstimate {
            hits,
            trials,
            pd: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 },
            ci_low,
            ci_high,
        }
    }
}

/// Fraction of trials whose max-statistic exceeds `threshold`.
pub fn detection_probability<F>(trials: usize, threshold: f64, mut max_statistic: F) -> Result<DetectionEstimate>
where
    F: FnMut(usize) -> Result<f64>,
{
    let mut hits = 0;
    for i in 0..trials {
        if max_statistic(i)? > threshold {
            hits += 1;
        }
    }
    Ok(DetectionEstimate::new(hits, trials))
}

/// Paired comparison of two detectors run on identical trials.
///
/// `only_a` counts trials detected by A but not B, `only_b` the reverse.
/// Returns the McNemar z score of "B detects more often than A"; values
/// above [`Z_95`] are significant.
pub fn mcnemar_z(only_a: usize, only_b: usize) -> f64 {
    let total = only_a + only_b;
    if total == 0 {
        return 0.0;
    }
    (only_b as f64 - only_a as f64) / (total as f64).sqrt()
}
