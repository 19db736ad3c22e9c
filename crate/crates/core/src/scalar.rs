//! Real scalar abstraction shared by the linear algebra, geometry and
//! estimation code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// f32 or f64, plus the tolerances that depend on the precision.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Relative asymmetry accepted by the Hermitian eigensolver.
    const HERMITIAN_TOL: Self;
    /// Relative off-diagonal Frobenius norm at which Jacobi sweeps stop.
    const JACOBI_TOL: Self;
    /// Condition number above which a 2x2 block is treated as singular.
    const MAX_CONDITION: Self;
    /// Slack used for unit-ball and range checks on direction cosines.
    const GEOMETRY_SLACK: Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Real for f64 {
    const HERMITIAN_TOL: Self = 1e-9;
    const JACOBI_TOL: Self = 1e-14;
    const MAX_CONDITION: Self = 1e12;
    const GEOMETRY_SLACK: Self = 1e-12;
}

impl Real for f32 {
    const HERMITIAN_TOL: Self = 1e-4;
    const JACOBI_TOL: Self = 1e-6;
    const MAX_CONDITION: Self = 1e6;
    const GEOMETRY_SLACK: Self = 1e-6;
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_pi<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let mut r = x % two_pi;
    if r > T::PI() {
        r -= two_pi;
    } else if r <= -T::PI() {
        r += two_pi;
    }
    r
}

/// Wraps an angle into [0, 2pi).
pub fn wrap_two_pi<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let r = x % two_pi;
    let r = if r < T::zero() { r + two_pi } else { r };
    if r >= two_pi {
        T::zero()
    } else {
        r
    }
}
