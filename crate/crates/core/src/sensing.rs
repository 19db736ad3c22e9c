//! User localization from the snapshots of the two semi-passive surfaces.
//!
//! Pipeline per surface: forward-backward smoothed covariance over shifted
//! micro-surfaces, eigendecomposition into a two-dimensional signal subspace
//! and its complement, TLS-ESPRIT along each axis, MUSIC pairing of the axis
//! estimates, and rejection of the pair that points back at the passive
//! surface. The two resulting bearings are then intersected.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::channel::ura_response;
use crate::channel::ArraySpec;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{
    direction_cosines, from_effective, scale_to_cosines, DirectionCosines, EffectiveAngles,
    Position,
};
use crate::numerics::{eig2x2, hermitian_eig_with, inverse2x2, CMatrix, CVector, JacobiOptions};
use crate::scalar::{wrap_pi, Real};
use crate::signal::SnapshotBatch;

/// Number of impinging sources: the user and the reflection off sub-IRS 1.
pub const SOURCES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Y,
    Z,
}

/// Contiguous `q_y x q_z` windows of a parent URA.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroLayout {
    pub parent: ArraySpec,
    pub q_y: usize,
    pub q_z: usize,
    /// Parent indices of each window, in `iy * q_z + iz` order.
    pub index_maps: Vec<Vec<usize>>,
}

impl MicroLayout {
    pub fn n_micro(&self) -> usize {
        self.index_maps.len()
    }

    pub fn micro_len(&self) -> usize {
        self.q_y * self.q_z
    }

    pub fn micro_spec(&self) -> ArraySpec {
        ArraySpec::ura(self.q_y, self.q_z)
    }
}

pub fn build_micro_layout(spec: &ArraySpec, q_y: usize, q_z: usize) -> Result<MicroLayout> {
    if q_y < 2 || q_z < 2 || q_y > spec.n_y || q_z > spec.n_z {
        return Err(Error::InvalidConfig(format!(
            "micro-surface {q_y}x{q_z} does not fit a {}x{} parent with both sides >= 2",
            spec.n_y, spec.n_z
        )));
    }
    let mut index_maps = Vec::new();
    for oy in 0..=spec.n_y - q_y {
        for oz in 0..=spec.n_z - q_z {
            let map = (0..q_y)
                .flat_map(|iy| (0..q_z).map(move |iz| spec.index(oy + iy, oz + iz)))
                .collect();
            index_maps.push(map);
        }
    }
    Ok(MicroLayout {
        parent: *spec,
        q_y,
        q_z,
        index_maps,
    })
}

fn selector_rows(layout: &MicroLayout, axis: Axis) -> Result<(Vec<usize>, Vec<usize>)> {
    let (qy, qz) = (layout.q_y, layout.q_z);
    let q = match axis {
        Axis::Y => qy,
        Axis::Z => qz,
    };
    if q < 2 {
        return Err(Error::InvalidConfig(format!(
            "micro-surface axis {axis:?} has fewer than 2 elements"
        )));
    }
    let mut first = Vec::new();
    let mut second = Vec::new();
    for iy in 0..qy {
        for iz in 0..qz {
            let k = iy * qz + iz;
            let along = match axis {
                Axis::Y => iy,
                Axis::Z => iz,
            };
            if along + 1 < q {
                first.push(k);
            }
            if along >= 1 {
                second.push(k);
            }
        }
    }
    Ok((first, second))
}

/// 0/1 selection matrices of the two auxiliary sub-surfaces shifted by one
/// element along `axis`.
pub fn aux_selectors<T: Real>(
    layout: &MicroLayout,
    axis: Axis,
) -> Result<(CMatrix<T>, CMatrix<T>)> {
    let (first, second) = selector_rows(layout, axis)?;
    let l = layout.micro_len();
    let pick = |rows: &[usize]| {
        CMatrix::from_fn(rows.len(), l, |r, c| {
            if rows[r] == c {
                Complex::one()
            } else {
                Complex::zero()
            }
        })
    };
    Ok((pick(&first), pick(&second)))
}

/// Forward-backward smoothed sample covariance.
pub fn fbss_covariance<T: Real>(
    samples: &[CVector<T>],
    layout: &MicroLayout,
) -> Result<CMatrix<T>> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty snapshot batch".into()));
    }
    let parent = layout.parent.len();
    if samples.iter().any(|x| x.len() != parent) {
        return Err(Error::InvalidInput(format!(
            "snapshots must have {parent} elements"
        )));
    }
    let l = layout.micro_len();
    let mut fwd = CMatrix::<T>::zeros(l, l);
    let mut sub = vec![Complex::<T>::zero(); l];
    for x in samples {
        for map in &layout.index_maps {
            for (s, &k) in sub.iter_mut().zip(map) {
                *s = x[k];
            }
            for i in 0..l {
                let xi = sub[i];
                for j in 0..l {
                    fwd[(i, j)] += xi * sub[j].conj();
                }
            }
        }
    }
    // J conj(R) J reverses both indices of the conjugated forward sum.
    let norm = T::one() / T::from_usize(2 * samples.len() * layout.n_micro()).unwrap();
    Ok(CMatrix::from_fn(l, l, |i, j| {
        (fwd[(i, j)] + fwd[(l - 1 - i, l - 1 - j)].conj()) * norm
    }))
}

/// Shift-invariance angles of a two-column signal subspace along one axis.
pub fn esprit_axis<T: Real>(
    signal: &CMatrix<T>,
    j1: &CMatrix<T>,
    j2: &CMatrix<T>,
    opts: JacobiOptions<T>,
) -> Result<[T; 2]> {
    if signal.cols() != SOURCES {
        return Err(Error::InvalidInput(
            "signal subspace must have two columns".into(),
        ));
    }
    let stacked = j1.matmul(signal).hstack(&j2.matmul(signal));
    let c = stacked.adjoint().matmul(&stacked);
    let eig = hermitian_eig_with(&c, opts)?;
    let v12 = eig.vectors.block(0..2, 2..4);
    let v22 = eig.vectors.block(2..4, 2..4);
    let phi = v12
        .matmul(&inverse2x2(&v22, T::MAX_CONDITION)?)
        .scale(-Complex::one());
    let [a, b] = eig2x2(&phi)?;
    Ok([wrap_pi(a.arg()), wrap_pi(b.arg())])
}

/// Two AoA pairs and their MUSIC pseudo-spectrum values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoaPairing<T: Copy = f64> {
    pub pairs: [EffectiveAngles<T>; 2],
    pub music_scores: [T; 2],
}

/// `|| b^H U_N ||^2` for the micro-surface steering vector.
pub fn music_score<T: Real>(u: T, v: T, noise: &CMatrix<T>, micro: &ArraySpec) -> T {
    let b = ura_response(u, v, micro);
    (0..noise.cols())
        .map(|c| {
            let mut acc = Complex::<T>::zero();
            for r in 0..noise.rows() {
                acc += b[r].conj() * noise[(r, c)];
            }
            acc.norm_sqr()
        })
        .fold(T::zero(), |a, b| a + b)
}

/// Best perfect matching of the per-axis estimates by total MUSIC score.
/// Ties keep the straight matching `(u0, v0), (u1, v1)`.
pub fn music_pair<T: Real>(
    u: [T; 2],
    v: [T; 2],
    noise: &CMatrix<T>,
    layout: &MicroLayout,
) -> AoaPairing<T> {
    let micro = layout.micro_spec();
    let f = |a: T, b: T| music_score(a, b, noise, &micro);
    let straight = [f(u[0], v[0]), f(u[1], v[1])];
    let crossed = [f(u[0], v[1]), f(u[1], v[0])];
    if crossed[0] + crossed[1] < straight[0] + straight[1] {
        AoaPairing {
            pairs: [
                EffectiveAngles::new(u[0], v[1]),
                EffectiveAngles::new(u[1], v[0]),
            ],
            music_scores: crossed,
        }
    } else {
        AoaPairing {
            pairs: [
                EffectiveAngles::new(u[0], v[0]),
                EffectiveAngles::new(u[1], v[1]),
            ],
            music_scores: straight,
        }
    }
}

/// Keeps the pair farther, in cosine space, from the known direction of the
/// passive surface.
pub fn identify_user_pair<T: Real>(
    pairing: &AoaPairing<T>,
    known_i2i: DirectionCosines<T>,
    spacing_over_lambda: T,
) -> Result<EffectiveAngles<T>> {
    let d: Vec<T> = pairing
        .pairs
        .iter()
        .map(|p| scale_to_cosines(*p, spacing_over_lambda).distance(&known_i2i))
        .collect();
    if (d[0] - d[1]).abs() <= T::GEOMETRY_SLACK {
        return Err(Error::AmbiguousDisambiguation);
    }
    Ok(if d[0] > d[1] {
        pairing.pairs[0]
    } else {
        pairing.pairs[1]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationEstimate<T: Copy = f64> {
    pub position: Position<T>,
    /// Cosines of the user direction seen from sub-IRS 2 and 3.
    pub user_aoas: [DirectionCosines<T>; 2],
    /// Estimated ranges from sub-IRS 2 and 3.
    pub distances: [T; 2],
    /// Residual `|omega_2 - omega_3|` of the x-coordinate choice.
    pub x_ambiguity_gap: T,
    /// Set when a negative x-range radicand was clamped to zero.
    pub radicand_clamped: bool,
}

/// Intersects the bearings from `q2` and `q3` in the y-z plane and recovers
/// x from the ranges, preferring the half-space in front of the surfaces.
pub fn localize<T: Real>(
    c2: DirectionCosines<T>,
    c3: DirectionCosines<T>,
    q2: &Position<T>,
    q3: &Position<T>,
) -> Result<LocationEstimate<T>> {
    let det = c3.cy * c2.cz - c2.cy * c3.cz;
    if !(det.abs() > T::GEOMETRY_SLACK) {
        return Err(Error::ParallelBearings);
    }
    let dy = q3.y - q2.y;
    let dz = q3.z - q2.z;
    let d2 = (c3.cy * dz - c3.cz * dy) / det;
    let d3 = (c2.cy * dz - c2.cz * dy) / det;
    if !(d2 > T::zero() && d3 > T::zero()) {
        return Err(Error::InconsistentGeometry(format!(
            "negative range estimate ({}, {})",
            d2.to_f64().unwrap_or(f64::NAN),
            d3.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let y = q2.y + c2.cy * d2;
    let z = q2.z + c2.cz * d2;
    let mut clamped = false;
    let mut x_range = |d: T, q: &Position<T>| {
        let r = d * d - (y - q.y).powi(2) - (z - q.z).powi(2);
        if r < T::zero() {
            clamped = true;
            T::zero()
        } else {
            r.sqrt()
        }
    };
    let dx2 = x_range(d2, q2);
    let dx3 = x_range(d3, q3);
    let mut best = (T::infinity(), q2.x + dx2);
    for w2 in [q2.x + dx2, q2.x - dx2] {
        for w3 in [q3.x + dx3, q3.x - dx3] {
            let gap = (w2 - w3).abs();
            if best.0.is_infinite() || gap < best.0 - T::GEOMETRY_SLACK * (T::one() + best.0) {
                best = (gap, w2);
            }
        }
    }
    let position = Position::new(best.1, y, z);
    if !position.is_finite() {
        return Err(Error::InconsistentGeometry("non-finite position".into()));
    }
    Ok(LocationEstimate {
        position,
        user_aoas: [c2, c3],
        distances: [d2, d3],
        x_ambiguity_gap: best.0,
        radicand_clamped: clamped,
    })
}

/// Everything one semi-passive surface needs to turn snapshots into a user
/// direction.
#[derive(Debug, Clone)]
pub struct SurfaceSensor<T: Real> {
    pub position: Position<T>,
    pub layout: MicroLayout,
    /// Cosines towards sub-IRS 1.
    pub known_i2i: DirectionCosines<T>,
    selectors: [(CMatrix<T>, CMatrix<T>); 2],
}

impl<T: Real> SurfaceSensor<T> {
    pub fn new(
        position: Position<T>,
        layout: MicroLayout,
        known_i2i: DirectionCosines<T>,
    ) -> Result<Self> {
        let selectors = [
            aux_selectors(&layout, Axis::Y)?,
            aux_selectors(&layout, Axis::Z)?,
        ];
        Ok(Self {
            position,
            layout,
            known_i2i,
            selectors,
        })
    }

    /// Per-axis estimates, pairing and selected user angles.
    pub fn estimate(
        &self,
        samples: &[CVector<T>],
        spacing_over_lambda: T,
        opts: JacobiOptions<T>,
    ) -> Result<(AoaPairing<T>, EffectiveAngles<T>)> {
        let r = fbss_covariance(samples, &self.layout)?;
        let eig = hermitian_eig_with(&r, opts)?;
        let l = r.rows();
        let signal = eig.vectors.columns(0..SOURCES);
        let noise = eig.vectors.columns(SOURCES..l);
        let u = esprit_axis(&signal, &self.selectors[0].0, &self.selectors[0].1, opts)?;
        let v = esprit_axis(&signal, &self.selectors[1].0, &self.selectors[1].1, opts)?;
        let pairing = music_pair(u, v, &noise, &self.layout);
        let user = identify_user_pair(&pairing, self.known_i2i, spacing_over_lambda)?;
        Ok((pairing, user))
    }

    pub fn user_direction(
        &self,
        samples: &[CVector<T>],
        spacing_over_lambda: T,
        opts: JacobiOptions<T>,
    ) -> Result<DirectionCosines<T>> {
        let (_, user) = self.estimate(samples, spacing_over_lambda, opts)?;
        from_effective(user, spacing_over_lambda)
    }
}

/// Static sensing setup of a scenario: both semi-passive surfaces.
#[derive(Debug, Clone)]
pub struct SensingContext<T: Real = f64> {
    pub sensors: [SurfaceSensor<T>; 2],
    pub spacing_over_lambda: T,
    pub jacobi: JacobiOptions<T>,
}

impl SensingContext<f64> {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let g = &cfg.geometry;
        let specs = cfg.arrays.irs_specs();
        let make = |pos: Position, spec: &ArraySpec| -> Result<SurfaceSensor<f64>> {
            let (qy, qz) = cfg.sensing.micro_for(spec);
            let layout = build_micro_layout(spec, qy, qz)?;
            SurfaceSensor::new(pos, layout, direction_cosines(&pos, &g.irs1)?)
        };
        Ok(Self {
            sensors: [make(g.irs2, &specs[1])?, make(g.irs3, &specs[2])?],
            spacing_over_lambda: g.spacing_over_lambda,
            jacobi: cfg.sensing.jacobi(),
        })
    }
}

impl<T: Real> SensingContext<T> {
    pub fn locate(
        &self,
        samples2: &[CVector<T>],
        samples3: &[CVector<T>],
    ) -> Result<LocationEstimate<T>> {
        let c2 = self.sensors[0].user_direction(samples2, self.spacing_over_lambda, self.jacobi)?;
        let c3 = self.sensors[1].user_direction(samples3, self.spacing_over_lambda, self.jacobi)?;
        localize(c2, c3, &self.sensors[0].position, &self.sensors[1].position)
    }
}

/// End-to-end location estimate from one sensing block.
pub fn sense_location(
    batch2: &SnapshotBatch,
    batch3: &SnapshotBatch,
    ctx: &SensingContext,
) -> Result<LocationEstimate> {
    if batch2.sub_irs_id != 2 || batch3.sub_irs_id != 3 {
        return Err(Error::InvalidInput(
            "batches must come from sub-IRS 2 and 3 in that order".into(),
        ));
    }
    ctx.locate(&batch2.samples, &batch3.samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::to_effective;
    use crate::numerics::hermitian_eig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn layout3() -> MicroLayout {
        build_micro_layout(&ArraySpec::ura(4, 4), 3, 3).unwrap()
    }

    /// Orthonormal basis of the span of `cols` by modified Gram-Schmidt.
    fn orthonormalize(cols: &[CVector<f64>]) -> Vec<CVector<f64>> {
        let mut out: Vec<CVector<f64>> = Vec::new();
        for c in cols {
            let mut v = c.clone();
            for q in &out {
                let p = q.dot(&v);
                v = v.add(&q.scale(-p));
            }
            let n = v.norm();
            out.push(v.scale_real(1.0 / n));
        }
        out
    }

    fn exact_subspaces(sources: &[(f64, f64)], micro: &ArraySpec) -> (CMatrix<f64>, CMatrix<f64>) {
        let steer: Vec<_> = sources
            .iter()
            .map(|&(u, v)| ura_response(u, v, micro))
            .collect();
        let l = micro.len();
        let mut cols = steer.clone();
        cols.extend((0..l).map(|k| {
            CVector(
                (0..l)
                    .map(|i| if i == k { C::one() } else { C::zero() })
                    .collect(),
            )
        }));
        // Drop the near-dependent canonical vectors after orthogonalization.
        let mut basis: Vec<CVector<f64>> = Vec::new();
        for c in cols {
            let mut v = c.clone();
            for q in &basis {
                let p = q.dot(&v);
                v = v.add(&q.scale(-p));
            }
            if v.norm() > 1e-8 {
                let n = v.norm();
                basis.push(v.scale_real(1.0 / n));
            }
        }
        let k = sources.len();
        (
            CMatrix::from_columns(&basis[..k]).unwrap(),
            CMatrix::from_columns(&basis[k..l]).unwrap(),
        )
    }

    #[test]
    fn micro_layout_examples() {
        let l = layout3();
        assert_eq!(l.n_micro(), 4);
        let firsts: Vec<usize> = l.index_maps.iter().map(|m| m[0]).collect();
        // Offsets (0,0), (0,1), (1,0), (1,1) in a 4-wide parent.
        assert_eq!(firsts, vec![0, 1, 4, 5]);
        assert_eq!(l.index_maps[0], vec![0, 1, 2, 4, 5, 6, 8, 9, 10]);

        let same = build_micro_layout(&ArraySpec::ura(4, 4), 4, 4).unwrap();
        assert_eq!(same.n_micro(), 1);
        assert_eq!(same.index_maps[0], (0..16).collect::<Vec<_>>());

        assert_eq!(
            build_micro_layout(&ArraySpec::ura(5, 4), 3, 3)
                .unwrap()
                .n_micro(),
            6
        );
        assert!(matches!(
            build_micro_layout(&ArraySpec::ura(4, 4), 5, 3),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn selector_examples() {
        let l = layout3();
        let rows = |m: &CMatrix<f64>| -> Vec<usize> {
            (0..m.rows())
                .map(|r| (0..m.cols()).find(|&c| m[(r, c)] == C::one()).unwrap())
                .collect()
        };
        let (a, b) = aux_selectors::<f64>(&l, Axis::Y).unwrap();
        assert_eq!(rows(&a), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(rows(&b), vec![3, 4, 5, 6, 7, 8]);
        let (a, b) = aux_selectors::<f64>(&l, Axis::Z).unwrap();
        assert_eq!(rows(&a), vec![0, 1, 3, 4, 6, 7]);
        assert_eq!(rows(&b), vec![1, 2, 4, 5, 7, 8]);
        for m in [&a, &b] {
            for r in 0..m.rows() {
                let ones = (0..m.cols()).filter(|&c| m[(r, c)] == C::one()).count();
                assert_eq!(ones, 1);
            }
        }
    }

    #[test]
    fn selectors_encode_the_shift() {
        let l = layout3();
        let (u, v) = (0.83, -1.9);
        let b = ura_response(u, v, &l.micro_spec());
        for (axis, shift) in [(Axis::Y, u), (Axis::Z, v)] {
            let (j1, j2) = aux_selectors::<f64>(&l, axis).unwrap();
            let lhs = j2.mul_vec(&b);
            let rhs = j1.mul_vec(&b).scale(C::from_polar(1.0, shift));
            for (x, y) in lhs.iter().zip(rhs.iter()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fbss_examples() {
        let spec = ArraySpec::ula(2);
        let layout = MicroLayout {
            parent: spec,
            q_y: 2,
            q_z: 1,
            index_maps: vec![vec![0, 1]],
        };
        let r = fbss_covariance(&[CVector(vec![C::one(), C::one()])], &layout).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((r[(i, j)] - C::one()).norm() < 1e-15);
            }
        }
        assert!(matches!(
            fbss_covariance::<f64>(&[], &layout),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn fbss_restores_rank_of_coherent_sources() {
        let l = layout3();
        let parent = l.parent;
        let a = ura_response(0.9, -1.2, &parent);
        let b = ura_response(-0.4, 2.0, &parent);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<CVector<f64>> = (0..5)
            .map(|_| {
                let s = C::from_polar(1.0, rng.random::<f64>() * 6.0);
                // Fully coherent: the second source is a fixed copy of the first.
                a.scale(s).add(&b.scale(s * C::new(0.3, -0.5)))
            })
            .collect();
        let r = fbss_covariance(&samples, &l).unwrap();
        assert!(r.hermitian_defect() < 1e-12);
        let e = hermitian_eig(&r).unwrap();
        assert!(e.values.iter().all(|&x| x >= -1e-12));
        assert!(e.values[1] > 1e-6 * e.values[0]);
        assert!(e.values[2] <= 1e-9 * e.values[0]);
    }

    #[test]
    fn esprit_single_source_padded() {
        let l = layout3();
        let micro = l.micro_spec();
        let b = ura_response(0.7, -0.3, &micro);
        let other = CVector(
            (0..9)
                .map(|k| C::from_polar(1.0, 0.37 * (k * k) as f64))
                .collect(),
        );
        let basis = orthonormalize(&[b, other]);
        let us = CMatrix::from_columns(&basis).unwrap();
        let (j1, j2) = aux_selectors(&l, Axis::Y).unwrap();
        let got = esprit_axis(&us, &j1, &j2, JacobiOptions::default()).unwrap();
        assert!(got.iter().any(|&a| (a - 0.7).abs() < 1e-9), "{got:?}");
    }

    fn sorted(mut a: [f64; 2]) -> [f64; 2] {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        a
    }

    #[test]
    fn esprit_two_sources_exact_and_rotation_invariant() {
        let l = layout3();
        let micro = l.micro_spec();
        let (us, _) = exact_subspaces(&[(0.4, 1.3), (-1.1, -0.6)], &micro);
        let (jy1, jy2) = aux_selectors(&l, Axis::Y).unwrap();
        let (jz1, jz2) = aux_selectors(&l, Axis::Z).unwrap();
        let opts = JacobiOptions::default();
        let u = sorted(esprit_axis(&us, &jy1, &jy2, opts).unwrap());
        assert!(
            (u[0] + 1.1).abs() < 1e-8 && (u[1] - 0.4).abs() < 1e-8,
            "{u:?}"
        );
        let v = sorted(esprit_axis(&us, &jz1, &jz2, opts).unwrap());
        assert!(
            (v[0] + 0.6).abs() < 1e-8 && (v[1] - 1.3).abs() < 1e-8,
            "{v:?}"
        );

        let (c, s) = (0.6f64, 0.8f64);
        let rot = CMatrix::from_row_major(
            2,
            2,
            vec![
                C::new(c, 0.0),
                C::from_polar(s, 0.4),
                C::from_polar(-s, -0.4),
                C::new(c, 0.0),
            ],
        )
        .unwrap();
        let u2 = sorted(esprit_axis(&us.matmul(&rot), &jy1, &jy2, opts).unwrap());
        assert!((u2[0] - u[0]).abs() < 1e-9 && (u2[1] - u[1]).abs() < 1e-9);
    }

    #[test]
    fn music_pairs_separated_sources() {
        let l = layout3();
        let micro = l.micro_spec();
        let (_, un) = exact_subspaces(&[(0.4, 1.3), (-1.1, -0.6)], &micro);
        let p = music_pair([0.4, -1.1], [-0.6, 1.3], &un, &l);
        assert_eq!(p.pairs[0], EffectiveAngles::new(0.4, 1.3));
        assert_eq!(p.pairs[1], EffectiveAngles::new(-1.1, -0.6));
        assert!(p.music_scores.iter().all(|&s| s <= 1e-10));
        let straight = music_score(0.4, -0.6, &un, &micro) + music_score(-1.1, 1.3, &un, &micro);
        assert!(straight > p.music_scores[0] + p.music_scores[1] + 1e-3);

        let tie = music_pair([0.4, 0.4], [-0.6, 1.3], &un, &l);
        assert_eq!(tie.pairs[0], EffectiveAngles::new(0.4, -0.6));
    }

    #[test]
    fn identify_examples() {
        let pairing = AoaPairing {
            pairs: [
                EffectiveAngles::new(0.1 * PI, 0.2 * PI),
                EffectiveAngles::new(0.4 * PI, 0.5 * PI),
            ],
            music_scores: [0.0, 0.0],
        };
        let got = identify_user_pair(&pairing, DirectionCosines::new(0.4, 0.5), 0.5).unwrap();
        assert_eq!(got, pairing.pairs[0]);
        let same = AoaPairing {
            pairs: [pairing.pairs[0]; 2],
            music_scores: [0.0, 0.0],
        };
        assert!(matches!(
            identify_user_pair(&same, DirectionCosines::new(0.4, 0.5), 0.5),
            Err(Error::AmbiguousDisambiguation)
        ));
    }

    #[test]
    fn localize_default_geometry() {
        let q2 = Position::new(0.0, 47.0, 7.0);
        let q3 = Position::new(0.0, 53.0, 8.0);
        let c2 = DirectionCosines::new(0.0, -7.0 / 85f64.sqrt());
        let c3 = DirectionCosines::new(-6.0 / 136f64.sqrt(), -8.0 / 136f64.sqrt());
        let e = localize(c2, c3, &q2, &q3).unwrap();
        assert!((e.distances[0] - 85f64.sqrt()).abs() < 1e-12);
        assert!((e.distances[1] - 136f64.sqrt()).abs() < 1e-12);
        assert!(e.position.distance(&Position::new(6.0, 47.0, 0.0)) < 1e-12);
        assert!(!e.radicand_clamped);

        assert!(matches!(
            localize(c2, c2, &q2, &q3),
            Err(Error::ParallelBearings)
        ));
    }

    #[test]
    fn localize_round_trip_many_draws() {
        let q2 = Position::new(0.0, 47.0, 7.0);
        let q3 = Position::new(0.0, 53.0, 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let user = Position::new(
                rng.random_range(0.5..30.0),
                rng.random_range(30.0..70.0),
                rng.random_range(-5.0..3.0),
            );
            let c2 = direction_cosines(&q2, &user).unwrap();
            let c3 = direction_cosines(&q3, &user).unwrap();
            let e = localize(c2, c3, &q2, &q3).unwrap();
            assert!(
                e.position.distance(&user) < 1e-9,
                "{user:?} -> {:?}",
                e.position
            );
        }
    }

    #[test]
    fn localize_generic_f32() {
        let q2 = Position::<f32>::new(0.0, 47.0, 7.0);
        let q3 = Position::<f32>::new(0.0, 53.0, 8.0);
        let user = Position::<f32>::new(6.0, 47.0, 0.0);
        let e = localize(
            direction_cosines(&q2, &user).unwrap(),
            direction_cosines(&q3, &user).unwrap(),
            &q2,
            &q3,
        )
        .unwrap();
        assert!(e.position.distance(&user) < 1e-3);
    }

    fn synthetic_samples(
        layout: &MicroLayout,
        sources: &[(f64, f64, C)],
        slots: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<CVector<f64>> {
        (0..slots)
            .map(|_| {
                let s = C::from_polar(1.0, rng.random::<f64>() * 2.0 * PI);
                let mut x = CVector::zeros(layout.parent.len());
                for &(u, v, g) in sources {
                    x = x.add(&ura_response(u, v, &layout.parent).scale(g * s));
                }
                x
            })
            .collect()
    }

    #[test]
    fn noiseless_pipeline_recovers_user_angles() {
        let q2 = Position::new(0.0, 47.0, 7.0);
        let irs1 = Position::new(0.0, 50.0, 5.0);
        let user = Position::new(6.0, 47.0, 0.0);
        let known = direction_cosines(&q2, &irs1).unwrap();
        let ue = to_effective(direction_cosines(&q2, &user).unwrap(), 0.5);
        let ie = to_effective(known, 0.5);
        let sensor = SurfaceSensor::new(q2, layout3(), known).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples = synthetic_samples(
            &sensor.layout,
            &[
                (ue.u, ue.v, C::new(1.0, 0.0)),
                (ie.u, ie.v, C::new(0.2, 0.7)),
            ],
            20,
            &mut rng,
        );
        let (_, got) = sensor
            .estimate(&samples, 0.5, JacobiOptions::default())
            .unwrap();
        assert!(
            (got.u - ue.u).abs() < 1e-8 && (got.v - ue.v).abs() < 1e-8,
            "{got:?} vs {ue:?}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fbss_is_hermitian_psd(seed in any::<u64>(), slots in 1usize..6) {
            let l = layout3();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<CVector<f64>> = (0..slots)
                .map(|_| (0..16).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
                .collect();
            let r = fbss_covariance(&samples, &l).unwrap();
            prop_assert!(r.hermitian_defect() < 1e-12);
            let e = hermitian_eig(&r).unwrap();
            prop_assert!(e.values.iter().all(|&x| x >= -1e-12));
        }

        #[test]
        fn localize_inverts_forward_model(x in 0.2f64..40.0, y in 20.0f64..80.0, z in -10.0f64..4.0) {
            let q2 = Position::new(0.0, 47.0, 7.0);
            let q3 = Position::new(0.0, 53.0, 8.0);
            let user = Position::new(x, y, z);
            let c2 = direction_cosines(&q2, &user).unwrap();
            let c3 = direction_cosines(&q3, &user).unwrap();
            prop_assume!((c3.cy * c2.cz - c2.cy * c3.cz).abs() > 1e-6);
            let e = localize(c2, c3, &q2, &q3).unwrap();
            prop_assert!(e.position.distance(&user) < 1e-9);
        }
    }
}
