//! FFT evaluation of the GLRT surface for bin-aligned delay-Doppler grids.

use std::sync::Arc;

use jcas_core::radar::{DelayDopplerGrid, DirectEvaluator, OfdmParams, SurfaceEvaluator};
use jcas_core::{Error, Result, C64};
use rustfft::{Fft, FftPlanner};

const BIN_TOLERANCE: f64 = 1e-6;

/// Surface evaluator for grids whose delays are multiples of `1/(MΔf)` and
/// whose Dopplers are multiples of `1/(N·T₀)`.
///
/// An `M`-point inverse FFT per symbol handles the delay axis, an `N`-point
/// forward FFT per delay bin the Doppler axis.
#[derive(Clone)]
pub struct FftEvaluator {
    grid: DelayDopplerGrid,
    m_sub: usize,
    n_sym: usize,
    delay_bins: Vec<usize>,
    doppler_bins: Vec<usize>,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftEvaluator")
            .field("m_sub", &self.m_sub)
            .field("n_sym", &self.n_sym)
            .field("delay_bins", &self.delay_bins)
            .field("doppler_bins", &self.doppler_bins)
            .finish()
    }
}

fn bin(value: f64, spacing: f64) -> Option<i64> {
    let x = value / spacing;
    let r = x.round();
    ((x - r).abs() < BIN_TOLERANCE).then_some(r as i64)
}

impl FftEvaluator {
    pub fn new(grid: DelayDopplerGrid, params: &OfdmParams) -> Result<Self> {
        let (m_sub, n_sym) = (params.m_sub(), params.n_sym());
        let delay_bins = grid
            .delays()
            .iter()
            .map(|d| match bin(*d, DelayDopplerGrid::delay_spacing(params)) {
                Some(q) if (0..m_sub as i64).contains(&q) => Ok(q as usize),
                _ => Err(Error::InvalidParameter {
                    name: "delays",
                    reason: "not aligned with the delay bins",
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        let doppler_bins = grid
            .dopplers()
            .iter()
            .map(|v| match bin(*v, DelayDopplerGrid::doppler_spacing(params)) {
                Some(p) => Ok(p.rem_euclid(n_sym as i64) as usize),
                None => Err(Error::InvalidParameter {
                    name: "dopplers",
                    reason: "not aligned with the Doppler bins",
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut planner = FftPlanner::new();
        Ok(FftEvaluator {
            grid,
            m_sub,
            n_sym,
            delay_bins,
            doppler_bins,
            inverse: planner.plan_fft_inverse(m_sub),
            forward: planner.plan_fft_forward(n_sym),
        })
    }
}

impl SurfaceEvaluator for FftEvaluator {
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
        let n_q = self.delay_bins.len();
        let mut row = c.to_vec();
        let mut scratch = vec![C64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len().max(self.forward.get_inplace_scratch_len())];
        // columns[q·N + n]
        let mut columns = vec![C64::new(0.0, 0.0); n_q * self.n_sym];
        for (n, chunk) in row.chunks_exact_mut(self.m_sub).enumerate() {
            self.inverse.process_with_scratch(chunk, &mut scratch);
            for (q, b) in self.delay_bins.iter().enumerate() {
                columns[q * self.n_sym + n] = chunk[*b];
            }
        }
        for col in columns.chunks_exact_mut(self.n_sym) {
            self.forward.process_with_scratch(col, &mut scratch);
        }
        out.clear();
        for p in &self.doppler_bins {
            for q in 0..n_q {
                out.push(columns[q * self.n_sym + p].norm_sqr());
            }
        }
        Ok(())
    }
}

/// FFT evaluator when the grid is bin-aligned, direct otherwise.
pub fn best_evaluator(grid: DelayDopplerGrid, params: &OfdmParams) -> Box<dyn SurfaceEvaluator + Send + Sync> {
    match FftEvaluator::new(grid.clone(), params) {
        Ok(f) => Box::new(f),
        Err(_) => Box::new(DirectEvaluator::new(grid, params)),
    }
}
