//! Positions, direction cosines and effective angles.
//!
//! Cosine convention: `direction_cosines(at, remote)` points from `at`
//! towards `remote`. Arrival cosines of a link are taken at the receiving
//! surface towards the source; departure cosines at a surface are the
//! negated arrival cosines of the reversed link. Every geometric quantity in
//! the crate is produced as [`DirectionCosines`]; every steering vector
//! consumes [`EffectiveAngles`], and this module is the only place where one
//! is converted into the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{wrap_pi, Real};

/// Element spacing used throughout unless overridden: half a wavelength.
pub const HALF_WAVELENGTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
pub struct Position<T: Copy = f64> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Copy> From<[T; 3]> for Position<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self { x, y, z }
    }
}

impl<T: Copy> From<Position<T>> for [T; 3] {
    fn from(p: Position<T>) -> Self {
        [p.x, p.y, p.z]
    }
}

impl<T: Real> Position<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Self) -> T {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Cosines of the direction towards a remote point along the surface's
/// y and z axes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DirectionCosines<T: Copy = f64> {
    pub cy: T,
    pub cz: T,
}

impl<T: Real> DirectionCosines<T> {
    pub fn new(cy: T, cz: T) -> Self {
        Self { cy, cz }
    }

    pub fn negate(self) -> Self {
        Self {
            cy: -self.cy,
            cz: -self.cz,
        }
    }

    pub fn distance(&self, other: &Self) -> T {
        ((self.cy - other.cy).powi(2) + (self.cz - other.cz).powi(2)).sqrt()
    }
}

/// Inter-element phase progressions (radians per element) along y and z.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EffectiveAngles<T: Copy = f64> {
    pub u: T,
    pub v: T,
}

impl<T: Real> EffectiveAngles<T> {
    pub fn new(u: T, v: T) -> Self {
        Self { u, v }
    }
}

/// Cosines of the direction from `at` towards `remote`.
pub fn direction_cosines<T: Real>(
    at: &Position<T>,
    remote: &Position<T>,
) -> Result<DirectionCosines<T>> {
    let d = at.distance(remote);
    if !(d > T::zero()) || !d.is_finite() {
        return Err(Error::DegenerateGeometry(format!(
            "coincident or non-finite points {at:?} and {remote:?}"
        )));
    }
    Ok(DirectionCosines {
        cy: (remote.y - at.y) / d,
        cz: (remote.z - at.z) / d,
    })
}

/// Departure cosines at `at` for a wave leaving towards `remote`.
pub fn departure_cosines<T: Real>(
    at: &Position<T>,
    remote: &Position<T>,
) -> Result<DirectionCosines<T>> {
    direction_cosines(at, remote).map(DirectionCosines::negate)
}

pub fn to_effective<T: Real>(c: DirectionCosines<T>, spacing_over_lambda: T) -> EffectiveAngles<T> {
    let k = T::TAU() * spacing_over_lambda;
    EffectiveAngles {
        u: wrap_pi(k * c.cy),
        v: wrap_pi(k * c.cz),
    }
}

/// Linear rescaling of effective angles to cosines, without range checks.
pub fn scale_to_cosines<T: Real>(
    e: EffectiveAngles<T>,
    spacing_over_lambda: T,
) -> DirectionCosines<T> {
    let k = T::TAU() * spacing_over_lambda;
    DirectionCosines {
        cy: e.u / k,
        cz: e.v / k,
    }
}

/// Inverse of [`to_effective`]; fails when the angle could be aliased or
/// the result is not a physical direction.
pub fn from_effective<T: Real>(
    e: EffectiveAngles<T>,
    spacing_over_lambda: T,
) -> Result<DirectionCosines<T>> {
    let limit = T::TAU() * spacing_over_lambda;
    for angle in [e.u, e.v] {
        if !(angle.abs() <= limit + T::GEOMETRY_SLACK) {
            return Err(Error::SpatialAliasing {
                angle: angle.to_f64().unwrap_or(f64::NAN),
                limit: limit.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let c = scale_to_cosines(e, spacing_over_lambda);
    if c.cy * c.cy + c.cz * c.cz > T::one() + T::GEOMETRY_SLACK {
        return Err(Error::InvalidDirection {
            cy: c.cy.to_f64().unwrap_or(f64::NAN),
            cz: c.cz.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(c)
}
