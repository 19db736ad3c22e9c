//! Array steering vectors and line-of-sight channel synthesis.

use num_complex::{Complex, Complex64};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{
    departure_cosines, direction_cosines, to_effective, EffectiveAngles, Position,
};
use crate::numerics::{CMatrix, CVector};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayKind {
    /// Uniform linear array along y.
    Ula,
    /// Uniform rectangular array in the y-z plane.
    Ura,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArraySpec {
    pub kind: ArrayKind,
    pub n_y: usize,
    pub n_z: usize,
}

impl ArraySpec {
    pub fn ula(n: usize) -> Self {
        Self {
            kind: ArrayKind::Ula,
            n_y: n,
            n_z: 1,
        }
    }

    pub fn ura(n_y: usize, n_z: usize) -> Self {
        Self {
            kind: ArrayKind::Ura,
            n_y,
            n_z,
        }
    }

    /// Total element count.
    pub fn len(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of element `(iy, iz)`.
    pub fn index(&self, iy: usize, iz: usize) -> usize {
        iy * self.n_z + iz
    }
}

/// `[1, e^{ju}, ..., e^{j(n-1)u}]`.
pub fn ula_response<T: Real>(u: T, n: usize) -> CVector<T> {
    (0..n)
        .map(|k| Complex::from_polar(T::one(), T::from_usize(k).unwrap() * u))
        .collect()
}

/// Kronecker product of the y-axis response at `u` with the z-axis response
/// at `v`; element `iy * n_z + iz`.
pub fn ura_response<T: Real>(u: T, v: T, spec: &ArraySpec) -> CVector<T> {
    let ry = ula_response(u, spec.n_y);
    let rz = ula_response(v, spec.n_z);
    ry.iter()
        .flat_map(|a| rz.iter().map(move |b| a * b))
        .collect()
}

/// Distance-based path loss `ref_loss_db + 10 * exponent * log10(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGainModel {
    pub ref_loss_db: f64,
    pub exponent: f64,
}

impl PathGainModel {
    pub fn loss_db(&self, d: f64) -> f64 {
        self.ref_loss_db + 10.0 * self.exponent * d.log10()
    }
}

pub fn path_gain_magnitude(d: f64, model: &PathGainModel) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidInput(format!(
            "path gain needs a positive distance, got {d}"
        )));
    }
    Ok(10f64.powf(-model.loss_db(d) / 20.0))
}

/// Complex gain with the model magnitude and a uniform random phase.
pub fn path_gain<R: Rng + ?Sized>(d: f64, model: &PathGainModel, rng: &mut R) -> Result<Complex64> {
    let mag = path_gain_magnitude(d, model)?;
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    Ok(Complex64::from_polar(mag, phase))
}

/// Generating angles of every link, kept for oracles and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueAngles {
    /// Arrival at the BS from sub-IRS i (y-axis progression).
    pub i2b_arrival: [f64; 3],
    /// Departure at sub-IRS i towards the BS.
    pub i2b_departure: [EffectiveAngles; 3],
    /// Arrival at sub-IRS i from the user.
    pub u2i_arrival: [EffectiveAngles; 3],
    /// Arrival at sub-IRS 2 and 3 from sub-IRS 1.
    pub i2i_arrival: [EffectiveAngles; 2],
    /// Departure at sub-IRS 1 towards sub-IRS 2 and 3.
    pub i2i_departure: [EffectiveAngles; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGains {
    pub i2b: [Complex64; 3],
    pub u2i: [Complex64; 3],
    pub i2i: [Complex64; 2],
}

/// All LoS channels of one coherence block. Index 0 is sub-IRS 1; `i2i[0]`
/// is the link from sub-IRS 1 to sub-IRS 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// N x M_i, sub-IRS i to BS.
    pub i2b: [CMatrix<f64>; 3],
    /// M_i, user to sub-IRS i.
    pub u2i: [CVector<f64>; 3],
    /// M_i x M_1, sub-IRS 1 to sub-IRS i (i = 2, 3).
    pub i2i: [CMatrix<f64>; 2],
    pub angles: TrueAngles,
    pub gains: LinkGains,
}

impl ChannelSet {
    /// Concatenated IRS-to-BS channel `[H_1, H_2, H_3]`.
    pub fn i2b_stacked(&self) -> CMatrix<f64> {
        self.i2b[0].hstack(&self.i2b[1]).hstack(&self.i2b[2])
    }

    /// Stacked user-to-IRS channel.
    pub fn u2i_stacked(&self) -> CVector<f64> {
        CVector::concat(&[&self.u2i[0], &self.u2i[1], &self.u2i[2]])
    }
}

/// Synthesizes every link of the scenario. Gain phases are drawn from `rng`
/// in a fixed order (IRS-to-BS, user-to-IRS, IRS-to-IRS).
pub fn synth_channels<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<ChannelSet> {
    let g = &cfg.geometry;
    let ratio = g.spacing_over_lambda;
    let irs: [Position; 3] = [g.irs1, g.irs2, g.irs3];
    let specs = cfg.arrays.irs_specs();
    let n_bs = cfg.arrays.bs_antennas;
    let pl = &cfg.path_loss;

    let mut i2b_arrival = [0.0; 3];
    let mut i2b_departure = [EffectiveAngles::default(); 3];
    let mut u2i_arrival = [EffectiveAngles::default(); 3];
    for i in 0..3 {
        i2b_arrival[i] = to_effective(direction_cosines(&g.bs, &irs[i])?, ratio).u;
        i2b_departure[i] = to_effective(departure_cosines(&irs[i], &g.bs)?, ratio);
        u2i_arrival[i] = to_effective(direction_cosines(&irs[i], &g.user)?, ratio);
    }
    let mut i2i_arrival = [EffectiveAngles::default(); 2];
    let mut i2i_departure = [EffectiveAngles::default(); 2];
    for k in 0..2 {
        i2i_arrival[k] = to_effective(direction_cosines(&irs[k + 1], &irs[0])?, ratio);
        i2i_departure[k] = to_effective(departure_cosines(&irs[0], &irs[k + 1])?, ratio);
    }

    let mut gi2b = [Complex64::default(); 3];
    for i in 0..3 {
        gi2b[i] = path_gain(irs[i].distance(&g.bs), &pl.i2b(), rng)?;
    }
    let mut gu2i = [Complex64::default(); 3];
    for i in 0..3 {
        gu2i[i] = path_gain(irs[i].distance(&g.user), &pl.u2i(), rng)?;
    }
    let mut gi2i = [Complex64::default(); 2];
    for k in 0..2 {
        gi2i[k] = path_gain(irs[k + 1].distance(&irs[0]), &pl.i2i(), rng)?;
    }

    let i2b = std::array::from_fn(|i| {
        let a = ula_response(i2b_arrival[i], n_bs);
        let b = ura_response(i2b_departure[i].u, i2b_departure[i].v, &specs[i]);
        CMatrix::outer(&a, &b).scale(gi2b[i])
    });
    let u2i = std::array::from_fn(|i| {
        ura_response(u2i_arrival[i].u, u2i_arrival[i].v, &specs[i]).scale(gu2i[i])
    });
    let i2i = std::array::from_fn(|k| {
        let a = ura_response(i2i_arrival[k].u, i2i_arrival[k].v, &specs[k + 1]);
        let b = ura_response(i2i_departure[k].u, i2i_departure[k].v, &specs[0]);
        CMatrix::outer(&a, &b).scale(gi2i[k])
    });

    Ok(ChannelSet {
        i2b,
        u2i,
        i2i,
        angles: TrueAngles {
            i2b_arrival,
            i2b_departure,
            u2i_arrival,
            i2i_arrival,
            i2i_departure,
        },
        gains: LinkGains {
            i2b: gi2b,
            u2i: gu2i,
            i2i: gi2i,
        },
    })
}
