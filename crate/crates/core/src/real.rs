//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::{Complex, RealField};
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the library is generic over (`f32` or `f64`).
///
/// Method calls such as `sqrt`, `abs` or `sin` resolve through
/// [`RealField`]; `num_traits::Float` is deliberately not a supertrait because
/// it would make those calls ambiguous.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + FloatConst + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the scalar type.
    fn epsilon() -> Self;
}

impl Real for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

/// `exp(j·phase)`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// `sin(x)/x` with the removable singularity filled in.
#[inline]
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

#[inline]
pub fn to_db<T: Real>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

#[inline]
pub fn from_db<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_is_continuous_across_branch() {
        let a = sinc(0.99e-4_f64);
        let b = sinc(1.01e-4_f64);
        assert!((a - b).abs() < 1e-9);
        assert_eq!(sinc(0.0_f64), 1.0);
    }

    #[test]
    fn db_roundtrip() {
        assert!((from_db(to_db(0.4786_f64)) - 0.4786).abs() < 1e-12);
        assert!((to_db(10.0_f32) - 10.0).abs() < 1e-6);
    }
}
