//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All solvers are written against [`Real`], which is implemented for `f32`
//! and `f64`. Tolerances that only make sense in double precision are scaled
//! through [`Real::tol`].

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable by the solvers.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal fits the scalar type")
    }

    #[inline]
    fn from_index(n: usize) -> Self {
        Self::from_usize(n).expect("index fits the scalar type")
    }

    /// A tolerance `x` requested for double precision, loosened so that it
    /// stays above the rounding floor of `Self`.
    #[inline]
    fn tol(x: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(x).max(floor)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the scalar type.
pub type Cx<T> = Complex<T>;

#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub fn re<T: Real>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub fn czero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub fn imag_unit<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::one())
}

/// Principal square root with `arg` in `(-pi/2, pi/2]`.
///
/// `num_complex` honours the sign of a negative zero imaginary part, which
/// would put roots of negative reals on the lower imaginary axis.
pub fn principal_sqrt<T: Real>(z: Cx<T>) -> Cx<T> {
    let r = z.sqrt();
    if r.re < T::zero() || (r.re == T::zero() && r.im < T::zero()) {
        -r
    } else {
        r
    }
}

/// Argument in `(-pi, pi]`.
pub fn arg_half_open<T: Real>(z: Cx<T>) -> T {
    let a = z.arg();
    if a <= -T::PI() {
        T::PI()
    } else {
        a
    }
}

/// `(e^z - 1) / z` evaluated without cancellation near zero.
pub fn expm1_over<T: Real>(z: Cx<T>) -> Cx<T> {
    if z.norm() < T::lit(0.5) {
        let mut term = cone::<T>();
        let mut sum = cone::<T>();
        for k in 2..40 {
            term = term * z / T::from_index(k);
            sum += term;
            if term.norm() <= T::epsilon() * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (z.exp() - cone()) / z
    }
}
