//! Uplink training: pilot books, the received pilot matrix and the
//! pilot-matched (PM) and LMMSE channel estimators.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::array::ArrayGeometry;
use crate::linalg::{dot, CMatrix, Cholesky};
use crate::propagation::{complex_normal, ChannelParams, UserChannel};
use crate::{Error, Result, C64};

/// Unit-norm pilot sequences, one column per user, with per-user pilot power.
///
/// Column `k` is the DFT sequence of index `k mod τ_p`, so for `τ_p ≥ K` the
/// pilots are orthonormal and for `τ_p < K` users `k` and `k + τ_p` share a
/// pilot. Every cross-correlation `|φ_iᴴ φ_k|²` is therefore 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    tau_p: usize,
    pilots: CMatrix,
    powers: Vec<f64>,
    overlaps: Vec<f64>,
}

pub fn make_pilots(tau_p: usize, k: usize) -> Result<PilotBook> {
    if tau_p == 0 {
        return Err(Error::invalid("tau_p", "must be at least 1"));
    }
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    let scale = 1.0 / (tau_p as f64).sqrt();
    let pilots = CMatrix::from_fn(tau_p, k, |t, user| {
        let idx = (user % tau_p) as f64;
        C64::from_polar(scale, 2.0 * PI * t as f64 * idx / tau_p as f64)
    });
    let mut overlaps = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            overlaps[i * k + j] = if i % tau_p == j % tau_p { 1.0 } else { 0.0 };
        }
    }
    Ok(PilotBook {
        tau_p,
        pilots,
        powers: vec![1.0; k],
        overlaps,
    })
}

impl PilotBook {
    pub fn with_uniform_power(self, power: f64) -> Result<Self> {
        let k = self.n_users();
        self.with_powers(vec![power; k])
    }

    pub fn with_powers(mut self, powers: Vec<f64>) -> Result<Self> {
        if powers.len() != self.n_users() {
            return Err(Error::DimensionMismatch {
                expected: self.n_users(),
                found: powers.len(),
            });
        }
        if powers.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid("pilot power", "must be finite and nonnegative"));
        }
        self.powers = powers;
        Ok(self)
    }

    pub fn tau_p(&self) -> usize {
        self.tau_p
    }

    pub fn n_users(&self) -> usize {
        self.pilots.cols()
    }

    pub fn pilots(&self) -> &CMatrix {
        &self.pilots
    }

    pub fn pilot(&self, k: usize) -> Vec<C64> {
        self.pilots.column(k)
    }

    /// Pilot power `η_{p,k}`.
    pub fn power(&self, k: usize) -> f64 {
        self.powers[k]
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// `|φ_iᴴ φ_k|²`.
    pub fn overlap(&self, i: usize, k: usize) -> f64 {
        self.overlaps[i * self.n_users() + k]
    }

    /// `y_{p,k} = Y_p φ_k`.
    pub fn despread(&self, y_pilot: &CMatrix, k: usize) -> Result<Vec<C64>> {
        y_pilot.mul_vec(&self.pilot(k))
    }
}

/// `Y_p = Σ_k √η_{p,k} h_k φ_kᴴ + W_p` with `W_p` entries `CN(0, σ_w²)`.
///
/// No noise samples are drawn when `noise_var` is zero.
pub fn pilot_rx<R: Rng + ?Sized>(
    channels: &[UserChannel],
    book: &PilotBook,
    noise_var: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    let hs: Vec<&[C64]> = channels.iter().map(|c| c.h.as_slice()).collect();
    pilot_rx_vectors(&hs, book, noise_var, rng)
}

/// [`pilot_rx`] on bare channel vectors.
pub fn pilot_rx_vectors<R: Rng + ?Sized>(
    channels: &[&[C64]],
    book: &PilotBook,
    noise_var: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    if channels.len() != book.n_users() {
        return Err(Error::DimensionMismatch {
            expected: book.n_users(),
            found: channels.len(),
        });
    }
    if !(noise_var >= 0.0) {
        return Err(Error::invalid("noise_var", "must be nonnegative"));
    }
    let n_a = channels.first().map_or(0, |h| h.len());
    if let Some(bad) = channels.iter().find(|h| h.len() != n_a) {
        return Err(Error::DimensionMismatch {
            expected: n_a,
            found: bad.len(),
        });
    }
    let tau_p = book.tau_p();
    let mut y = CMatrix::zeros(n_a, tau_p);
    for (k, h) in channels.iter().enumerate() {
        let amp = book.power(k).sqrt();
        let phi_conj: Vec<C64> = book.pilot(k).iter().map(|p| p.conj() * amp).collect();
        for (a, ha) in h.iter().enumerate() {
            for (dst, p) in y.row_mut(a).iter_mut().zip(&phi_conj) {
                *dst += ha * p;
            }
        }
    }
    if noise_var > 0.0 {
        let sd = noise_var.sqrt();
        for a in 0..n_a {
            for v in y.row_mut(a) {
                *v += complex_normal(rng) * sd;
            }
        }
    }
    Ok(y)
}

/// Channel correlation `H̄_k = E[h_k h_kᴴ]`, stored as
/// `identity_weight · I + rank_one_weight · a aᴴ`.
///
/// Rayleigh: `β I`. LoS: `β a aᴴ`. Rice: `β/(K+1) · (K a aᴴ + I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HbarMatrix {
    n: usize,
    identity_weight: f64,
    rank_one_weight: f64,
    steering: Vec<C64>,
}

pub fn hbar(params: &ChannelParams, geom: &ArrayGeometry) -> HbarMatrix {
    let n = geom.n_elements();
    match *params {
        ChannelParams::Rayleigh { beta } => HbarMatrix {
            n,
            identity_weight: beta,
            rank_one_weight: 0.0,
            steering: Vec::new(),
        },
        ChannelParams::LineOfSight { beta, dir } => HbarMatrix {
            n,
            identity_weight: 0.0,
            rank_one_weight: beta,
            steering: geom.steering_vector(dir),
        },
        ChannelParams::Rice { beta, k_factor, dir } => {
            let c = beta / (k_factor + 1.0);
            HbarMatrix {
                n,
                identity_weight: c,
                rank_one_weight: c * k_factor,
                steering: geom.steering_vector(dir),
            }
        }
    }
}

impl HbarMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn identity_weight(&self) -> f64 {
        self.identity_weight
    }

    pub fn rank_one_weight(&self) -> f64 {
        self.rank_one_weight
    }

    /// Steering vector of the rank-one part (empty for Rayleigh).
    pub fn steering(&self) -> &[C64] {
        &self.steering
    }

    fn has_rank_one(&self) -> bool {
        self.rank_one_weight != 0.0 && !self.steering.is_empty()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        self.add_to(&mut m, 1.0);
        m
    }

    /// `dst += scale · H̄`.
    pub fn add_to(&self, dst: &mut CMatrix, scale: f64) {
        dst.add_identity(scale * self.identity_weight);
        if self.has_rank_one() {
            dst.add_outer(&self.steering, scale * self.rank_one_weight);
        }
    }

    pub fn trace(&self) -> f64 {
        self.identity_weight * self.n as f64 + self.rank_one_weight * crate::linalg::norm_sqr(&self.steering)
    }

    /// `wᴴ H̄ w`.
    pub fn quad_form(&self, w: &[C64]) -> f64 {
        let mut q = self.identity_weight * crate::linalg::norm_sqr(w);
        if self.has_rank_one() {
            q += self.rank_one_weight * dot(&self.steering, w).norm_sqr();
        }
        q
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let mut out: Vec<C64> = v.iter().map(|x| x * self.identity_weight).collect();
        if self.has_rank_one() {
            let c = dot(&self.steering, v) * self.rank_one_weight;
            out.iter_mut().zip(&self.steering).for_each(|(o, a)| *o += a * c);
        }
        out
    }

    /// `H̄ · M`.
    pub fn left_mul(&self, m: &CMatrix) -> CMatrix {
        let mut out = m.clone();
        out.scale_in_place(C64::new(self.identity_weight, 0.0));
        if self.has_rank_one() {
            // aᴴ M as a row
            let row = m.adjoint_mul_vec(&self.steering).expect("dimension checked by caller");
            let row: Vec<C64> = row.iter().map(|x| x.conj() * self.rank_one_weight).collect();
            for (i, a) in self.steering.iter().enumerate() {
                for (o, r) in out.row_mut(i).iter_mut().zip(&row) {
                    *o += a * r;
                }
            }
        }
        out
    }

    /// `tr(H̄ · M)`.
    pub fn trace_with(&self, m: &CMatrix) -> C64 {
        let mut t = m.trace() * self.identity_weight;
        if self.has_rank_one() {
            t += m.quad_form(&self.steering) * self.rank_one_weight;
        }
        t
    }

    /// `tr(H̄ · other)`.
    pub fn trace_product(&self, other: &HbarMatrix) -> f64 {
        let n = self.n as f64;
        let mut t = self.identity_weight * other.identity_weight * n;
        if other.has_rank_one() {
            t += self.identity_weight * other.rank_one_weight * crate::linalg::norm_sqr(&other.steering);
        }
        if self.has_rank_one() {
            t += self.rank_one_weight * other.identity_weight * crate::linalg::norm_sqr(&self.steering);
            if other.has_rank_one() {
                t += self.rank_one_weight * other.rank_one_weight * dot(&self.steering, &other.steering).norm_sqr();
            }
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    PilotMatched,
    Lmmse,
}

impl Estimator {
    pub const ALL: [Estimator; 2] = [Estimator::PilotMatched, Estimator::Lmmse];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::PilotMatched => "pm",
            Estimator::Lmmse => "lmmse",
        }
    }
}

/// LMMSE filter statistics, which depend only on the channel correlations,
/// the pilot book and the noise level.
#[derive(Debug, Clone)]
pub struct LmmseStats {
    /// `R_{y,k} = Σ_i η_{p,i} H̄_i |φ_iᴴ φ_k|² + σ_w² I`.
    pub r_y: Vec<CMatrix>,
    /// `E_k = √η_{p,k} R_{y,k}⁻¹ H̄_k`.
    pub e: Vec<CMatrix>,
}

/// `R_{y,k}` for user `k`.
pub fn pilot_covariance(book: &PilotBook, hbars: &[HbarMatrix], noise_var: f64, k: usize) -> CMatrix {
    let n = hbars.first().map_or(0, HbarMatrix::dim);
    let mut r = CMatrix::zeros(n, n);
    for (i, h) in hbars.iter().enumerate() {
        let w = book.power(i) * book.overlap(i, k);
        if w != 0.0 {
            h.add_to(&mut r, w);
        }
    }
    r.add_identity(noise_var);
    r
}

/// `R_{y,k} = s I + Σ g_i a_i a_iᴴ` as `(s, [(g_i, a_i)])`.
fn covariance_structure<'a>(
    book: &PilotBook,
    hbars: &'a [HbarMatrix],
    noise_var: f64,
    k: usize,
) -> (f64, Vec<(f64, &'a [C64])>) {
    let mut scalar = noise_var;
    let mut low_rank = Vec::new();
    for (i, h) in hbars.iter().enumerate() {
        let w = book.power(i) * book.overlap(i, k);
        if w == 0.0 {
            continue;
        }
        scalar += w * h.identity_weight;
        if h.rank_one_weight != 0.0 {
            low_rank.push((w * h.rank_one_weight, h.steering.as_slice()));
        }
    }
    (scalar, low_rank)
}

/// `R⁻¹ H̄_k` by Cholesky.
fn dense_filter(r: &CMatrix, hk: &HbarMatrix) -> Result<CMatrix> {
    let chol = Cholesky::new(r)?;
    if hk.identity_weight == 0.0 {
        // R⁻¹ (d a aᴴ) = d (R⁻¹ a) aᴴ
        let x = chol.solve_vec(&hk.steering)?;
        Ok(CMatrix::outer(&x, &hk.steering, hk.rank_one_weight))
    } else {
        chol.solve(&hk.to_dense())
    }
}

/// `R⁻¹ H̄_k` for `R = s I + U G Uᴴ` via
/// `R⁻¹ = (I − U S⁻¹ Uᴴ)/s` with `S = s G⁻¹ + UᴴU`.
fn woodbury_filter(scalar: f64, low_rank: &[(f64, &[C64])], hk: &HbarMatrix) -> Result<CMatrix> {
    let n = hk.n;
    let r = low_rank.len();
    let small = CMatrix::from_fn(r, r, |i, j| {
        let g = dot(low_rank[i].1, low_rank[j].1);
        if i == j {
            g + scalar / low_rank[i].0
        } else {
            g
        }
    });
    // V = S⁻¹ Uᴴ, r × n
    let v = if r == 0 {
        CMatrix::zeros(0, n)
    } else {
        let u_adj = CMatrix::from_fn(r, n, |i, j| low_rank[i].1[j].conj());
        Cholesky::new(&small)?.solve(&u_adj)?
    };
    let inv_s = 1.0 / scalar;
    let mut e = CMatrix::from_fn(n, n, |row, col| {
        let mut x = C64::new(if row == col { 1.0 } else { 0.0 }, 0.0);
        for (l, (_, u)) in low_rank.iter().enumerate() {
            x -= u[row] * v[(l, col)];
        }
        x * (inv_s * hk.identity_weight)
    });
    if hk.rank_one_weight != 0.0 {
        let a = &hk.steering;
        let mut x = a.clone();
        let va = v.mul_vec(a)?;
        for (l, (_, u)) in low_rank.iter().enumerate() {
            for (xi, ui) in x.iter_mut().zip(u.iter()) {
                *xi -= ui * va[l];
            }
        }
        x.iter_mut().for_each(|xi| *xi *= inv_s);
        for (row, xr) in x.iter().enumerate() {
            for (dst, ac) in e.row_mut(row).iter_mut().zip(a) {
                *dst += xr * ac.conj() * hk.rank_one_weight;
            }
        }
    }
    Ok(e)
}

impl LmmseStats {
    pub fn new(book: &PilotBook, hbars: &[HbarMatrix], noise_var: f64) -> Result<Self> {
        if hbars.len() != book.n_users() {
            return Err(Error::DimensionMismatch {
                expected: book.n_users(),
                found: hbars.len(),
            });
        }
        if !(noise_var >= 0.0) {
            return Err(Error::invalid("noise_var", "must be nonnegative"));
        }
        let mut r_y = Vec::with_capacity(hbars.len());
        let mut e = Vec::with_capacity(hbars.len());
        for (k, hk) in hbars.iter().enumerate() {
            let r = pilot_covariance(book, hbars, noise_var, k);
            let (scalar, low_rank) = covariance_structure(book, hbars, noise_var, k);
            let mut ek = if scalar > 0.0 && 4 * low_rank.len() < hk.n {
                woodbury_filter(scalar, &low_rank, hk)?
            } else {
                dense_filter(&r, hk)?
            };
            ek.scale_in_place(C64::new(book.power(k).sqrt(), 0.0));
            r_y.push(r);
            e.push(ek);
        }
        Ok(LmmseStats { r_y, e })
    }

    pub fn n_users(&self) -> usize {
        self.e.len()
    }

    /// `ĥ_k = E_kᴴ Y_p φ_k` for every user.
    pub fn estimate(&self, y_pilot: &CMatrix, book: &PilotBook) -> Result<Vec<Vec<C64>>> {
        (0..self.n_users())
            .map(|k| {
                let y = book.despread(y_pilot, k)?;
                self.e[k].adjoint_mul_vec(&y)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub h_hat: Vec<Vec<C64>>,
    pub estimator: Estimator,
    /// Filter statistics, present for LMMSE.
    pub lmmse: Option<LmmseStats>,
}

/// `ĥ_k = Y_p φ_k / √η_{p,k}`.
pub fn pm_estimate(y_pilot: &CMatrix, book: &PilotBook) -> Result<EstimationResult> {
    if y_pilot.cols() != book.tau_p() {
        return Err(Error::DimensionMismatch {
            expected: book.tau_p(),
            found: y_pilot.cols(),
        });
    }
    let h_hat = (0..book.n_users())
        .map(|k| {
            let eta = book.power(k);
            if !(eta > 0.0) {
                return Err(Error::invalid("pilot power", "must be positive for pilot-matched estimation"));
            }
            let inv = 1.0 / eta.sqrt();
            Ok(book.despread(y_pilot, k)?.into_iter().map(|x| x * inv).collect())
        })
        .collect::<Result<_>>()?;
    Ok(EstimationResult {
        h_hat,
        estimator: Estimator::PilotMatched,
        lmmse: None,
    })
}

pub fn lmmse_estimate(
    y_pilot: &CMatrix,
    book: &PilotBook,
    hbars: &[HbarMatrix],
    noise_var: f64,
) -> Result<EstimationResult> {
    if y_pilot.cols() != book.tau_p() {
        return Err(Error::DimensionMismatch {
            expected: book.tau_p(),
            found: y_pilot.cols(),
        });
    }
    let stats = LmmseStats::new(book, hbars, noise_var)?;
    Ok(EstimationResult {
        h_hat: stats.estimate(y_pilot, book)?,
        estimator: Estimator::Lmmse,
        lmmse: Some(stats),
    })
}
