//! Truncated Taylor series in the spectral parameter.
//!
//! A `Jet` of order `J` stores `a_0 + a_1 mu + ... + a_J mu^J` with
//! `mu^(J+1) = 0`. Propagating a solution with `lambda = lambda_0 + mu` as a
//! jet yields the normalized lambda-derivatives `(1/j!) d^j/d lambda^j` of the
//! solution, which is exactly the root-chain hierarchy.

use num_complex::Complex;

use crate::scalar::{czero, Cx, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    coeffs: Vec<Cx<T>>,
}

impl<T: Real> Jet<T> {
    pub fn constant(value: Cx<T>, order: usize) -> Self {
        let mut coeffs = vec![czero(); order + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// `value + mu`.
    pub fn variable(value: Cx<T>, order: usize) -> Self {
        let mut j = Self::constant(value, order);
        if order > 0 {
            j.coeffs[1] = Complex::new(T::one(), T::zero());
        }
        j
    }

    pub fn from_coeffs(coeffs: Vec<Cx<T>>) -> Self {
        assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Cx<T>] {
        &self.coeffs
    }

    pub fn value(&self) -> Cx<T> {
        self.coeffs[0]
    }

    pub fn add(&self, other: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Self { coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Self { coeffs }
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.coeffs.len();
        let mut coeffs = vec![czero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs[..n - i].iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self { coeffs }
    }

    pub fn recip(&self) -> Self {
        let n = self.coeffs.len();
        let a0 = self.coeffs[0];
        let mut out = vec![czero(); n];
        out[0] = a0.inv();
        for k in 1..n {
            let mut acc: Cx<T> = czero();
            for j in 1..=k {
                acc += self.coeffs[j] * out[k - j];
            }
            out[k] = -acc / a0;
        }
        Self { coeffs: out }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.recip())
    }

    /// Square root on the principal branch of the constant term.
    pub fn sqrt(&self) -> Self {
        let n = self.coeffs.len();
        let mut s = vec![czero(); n];
        s[0] = crate::scalar::principal_sqrt(self.coeffs[0]);
        let two = T::lit(2.0);
        for k in 1..n {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s[k] = acc / (s[0] * two);
        }
        Self { coeffs: s }
    }

    /// `(cos a, sin a)` for the jet `a`.
    pub fn cos_sin(&self) -> (Self, Self) {
        let n = self.coeffs.len();
        let a0 = self.coeffs[0];
        let mut delta = self.clone();
        delta.coeffs[0] = czero();
        // powers of the nilpotent part, delta^k / k!
        let mut cos_d = Self::constant(Complex::new(T::one(), T::zero()), n - 1);
        let mut sin_d = Self::constant(czero(), n - 1);
        let mut power = Self::constant(Complex::new(T::one(), T::zero()), n - 1);
        for k in 1..n {
            power = power.mul(&delta).scale(Complex::new(T::one() / T::from_index(k), T::zero()));
            let sign = if (k / 2) % 2 == 0 { T::one() } else { -T::one() };
            let term = power.scale(Complex::new(sign, T::zero()));
            if k % 2 == 0 {
                cos_d = cos_d.add(&term);
            } else {
                sin_d = sin_d.add(&term);
            }
        }
        let (c0, s0) = (a0.cos(), a0.sin());
        let cos = cos_d.scale(c0).sub(&sin_d.scale(s0));
        let sin = sin_d.scale(c0).add(&cos_d.scale(s0));
        (cos, sin)
    }
}

/// Jets of `cos(sqrt(lambda) h)` and `sin(sqrt(lambda) h) / sqrt(lambda)`.
///
/// Both are entire in `lambda`; small `|lambda| h^2` uses the power series so
/// that `lambda = 0` needs no special casing.
pub fn cos_sinc_jets<T: Real>(lambda: &Jet<T>, h: T) -> (Jet<T>, Jet<T>) {
    let order = lambda.order();
    let h2 = h * h;
    let z0 = lambda.value() * h2;
    if z0.norm() <= T::one() {
        let neg_z = lambda.scale(Complex::new(-h2, T::zero()));
        let one = Complex::new(T::one(), T::zero());
        let mut power = Jet::constant(one, order);
        let mut c = Jet::constant(one, order);
        let mut s = Jet::constant(one, order);
        let mut fact_even = T::one();
        let mut fact_odd = T::one();
        for k in 1..40usize {
            power = power.mul(&neg_z);
            let kk = T::from_index(2 * k);
            fact_even = fact_even * (kk - T::one()) * kk;
            fact_odd = fact_odd * kk * (kk + T::one());
            let ce = power.scale(Complex::new(T::one() / fact_even, T::zero()));
            let so = power.scale(Complex::new(T::one() / fact_odd, T::zero()));
            c = c.add(&ce);
            s = s.add(&so);
            let mag = ce.coeffs.iter().fold(T::zero(), |m, v| m.max(v.norm()));
            if mag < T::epsilon() * T::lit(1e-3) {
                break;
            }
        }
        (c, s.scale(Complex::new(h, T::zero())))
    } else {
        let rho = lambda.sqrt();
        let (c, s) = rho.scale(Complex::new(h, T::zero())).cos_sin();
        (c, s.div(&rho))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex<f64>, b: Complex<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn reciprocal_and_sqrt_round_trip() {
        let a = Jet::from_coeffs(vec![
            Complex::new(2.0, 1.0),
            Complex::new(0.5, -0.3),
            Complex::new(-1.0, 0.2),
            Complex::new(0.1, 0.0),
        ]);
        let one = a.mul(&a.recip());
        assert!(close(one.coeffs()[0], Complex::new(1.0, 0.0), 1e-14));
        for c in &one.coeffs()[1..] {
            assert!(c.norm() < 1e-14);
        }
        let s = a.sqrt();
        let back = s.mul(&s);
        for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
            assert!(close(*x, *y, 1e-14));
        }
    }

    #[test]
    fn cos_sinc_derivatives_match_finite_differences() {
        let h = 1.3;
        for &l0 in &[Complex::new(0.2, 0.1), Complex::new(17.0, -3.0), Complex::new(-5.0, 0.0)] {
            let (c, s) = cos_sinc_jets(&Jet::variable(l0, 2), h);
            let f = |l: Complex<f64>| {
                let r = l.sqrt();
                ((r * h).cos(), (r * h).sin() / r)
            };
            let d = 1e-4;
            let (cp, sp) = f(l0 + d);
            let (cm, sm) = f(l0 - d);
            let (c0, s0) = f(l0);
            assert!(close(c.coeffs()[0], c0, 1e-13));
            assert!(close(s.coeffs()[0], s0, 1e-13));
            assert!(close(c.coeffs()[1], (cp - cm) / (2.0 * d), 1e-7));
            assert!(close(s.coeffs()[1], (sp - sm) / (2.0 * d), 1e-7));
            // second Taylor coefficient = f''/2
            assert!(close(c.coeffs()[2], (cp - c0 * 2.0 + cm) / (2.0 * d * d), 1e-5));
            assert!(close(s.coeffs()[2], (sp - s0 * 2.0 + sm) / (2.0 * d * d), 1e-5));
        }
    }
}
