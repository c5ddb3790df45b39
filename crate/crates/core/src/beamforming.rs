//! Downlink beams and the two surveillance beams.
//!
//! PBR is the normalized steering vector. ZFR projects the steering vector
//! onto the orthogonal complement of the estimated user channels.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::array::{ArrayGeometry, Direction};
use crate::linalg::{norm, normalized, orthonormal_basis, project_out};
use crate::{Error, Result, C64};

/// Drop tolerance of the channel-span basis, relative to the largest estimate norm.
pub const BASIS_TOLERANCE: f64 = 1e-10;

/// ZFR fails when `‖(I − ŨŨᴴ) a‖ < DEGENERATE_RATIO · ‖a‖`.
pub const DEGENERATE_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadarBeamKind {
    Pbr,
    Zfr,
}

impl RadarBeamKind {
    pub const ALL: [RadarBeamKind; 2] = [RadarBeamKind::Pbr, RadarBeamKind::Zfr];

    pub fn name(self) -> &'static str {
        match self {
            RadarBeamKind::Pbr => "pbr",
            RadarBeamKind::Zfr => "zfr",
        }
    }
}

/// `w = ĥ/‖ĥ‖`.
pub fn matched_beamformer(h_hat: &[C64]) -> Result<Vec<C64>> {
    normalized(h_hat)
}

/// `w_R = a(dir)/√N_A`.
pub fn pbr_beamformer(geom: &ArrayGeometry, dir: Direction) -> Vec<C64> {
    let scale = 1.0 / (geom.n_elements() as f64).sqrt();
    geom.steering_vector(dir).into_iter().map(|x| x * scale).collect()
}

/// Unit-norm projection of `a(dir)` orthogonal to `span{ĥ_1, …, ĥ_K}`.
///
/// Colinear or zero estimates are absorbed by the rank-revealing basis. An
/// empty estimate list yields the PBR beam.
pub fn zfr_beamformer(geom: &ArrayGeometry, dir: Direction, h_hats: &[Vec<C64>]) -> Result<Vec<C64>> {
    let n = geom.n_elements();
    if let Some(bad) = h_hats.iter().find(|h| h.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let a = geom.steering_vector(dir);
    let basis = orthonormal_basis(h_hats, BASIS_TOLERANCE)?;
    let p = project_out(&basis, &a);
    let p_norm = norm(&p);
    if p_norm < DEGENERATE_RATIO * norm(&a) {
        return Err(Error::DegenerateDirection);
    }
    Ok(p.into_iter().map(|x| x / p_norm).collect())
}

pub fn radar_beamformer(
    kind: RadarBeamKind,
    geom: &ArrayGeometry,
    dir: Direction,
    h_hats: &[Vec<C64>],
) -> Result<Vec<C64>> {
    match kind {
        RadarBeamKind::Pbr => Ok(pbr_beamformer(geom, dir)),
        RadarBeamKind::Zfr => zfr_beamformer(geom, dir, h_hats),
    }
}

/// Unit-norm communication beams `w_k` and radar beam `w_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub comm: Vec<Vec<C64>>,
    pub radar: Vec<C64>,
    pub radar_kind: RadarBeamKind,
}

impl BeamformerSet {
    /// Matched communication beams from the estimates plus the radar beam toward `dir`.
    pub fn build(geom: &ArrayGeometry, dir: Direction, h_hats: &[Vec<C64>], kind: RadarBeamKind) -> Result<Self> {
        let comm = h_hats.iter().map(|h| matched_beamformer(h)).collect::<Result<Vec<_>>>()?;
        let radar = radar_beamformer(kind, geom, dir, h_hats)?;
        Ok(BeamformerSet {
            comm,
            radar,
            radar_kind: kind,
        })
    }

    /// No users; the radar beam is the PBR beam.
    pub fn radar_only(geom: &ArrayGeometry, dir: Direction) -> Self {
        BeamformerSet {
            comm: Vec::new(),
            radar: pbr_beamformer(geom, dir),
            radar_kind: RadarBeamKind::Pbr,
        }
    }

    pub fn n_users(&self) -> usize {
        self.comm.len()
    }

    pub fn n_elements(&self) -> usize {
        self.radar.len()
    }
}
