//! Potentials `u`, the antiderivative of the distributional coefficient
//! `q = u'`.
//!
//! A potential is the sum of three parts: a piecewise polynomial (coefficients
//! in the absolute variable `x`), right-continuous steps, and a finite
//! cosine/sine series. Every integral against exponentials is evaluated in
//! closed form so oscillatory transforms stay accurate at high frequency.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::scalar::{czero, expm1_over, imag_unit, Cx, Real};

/// Distance within which piece endpoints are snapped to `0` or `pi`, so that
/// specs may write `3.14159` for the right end.
const ENDPOINT_SNAP: f64 = 1e-4;

/// Number of cosine coefficients summed exactly before the tail model takes
/// over in [`Potential::sobolev_norm`].
const SOBOLEV_MODES: usize = 16384;

#[derive(Clone, Debug, PartialEq)]
pub struct Piece<T> {
    pub from: T,
    pub to: T,
    /// `poly[j]` multiplies `x^j`.
    pub poly: Vec<Cx<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jump<T> {
    pub at: T,
    pub height: Cx<T>,
}

/// `sum_k cos[k] cos(kx) + sum_{k>=1} sin[k] sin(kx)`; `sin[0]` is ignored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trig<T> {
    pub cos: Vec<Cx<T>>,
    pub sin: Vec<Cx<T>>,
}

impl<T: Real> Trig<T> {
    pub fn is_empty(&self) -> bool {
        self.cos.iter().all(|c| *c == czero()) && self.sin.iter().skip(1).all(|c| *c == czero())
    }

    pub fn degree(&self) -> usize {
        let dc = self.cos.iter().rposition(|c| *c != czero()).unwrap_or(0);
        let ds = self.sin.iter().rposition(|c| *c != czero()).unwrap_or(0);
        dc.max(ds)
    }

    /// Clenshaw summation of both series at `x`.
    pub fn eval(&self, x: T) -> Cx<T> {
        let t = x.cos();
        let two_t = t + t;
        let mut out = czero();
        if !self.cos.is_empty() {
            let (mut b1, mut b2) = (czero::<T>(), czero::<T>());
            for a in self.cos[1..].iter().rev() {
                let b0 = *a + b1 * two_t - b2;
                b2 = b1;
                b1 = b0;
            }
            out += self.cos[0] + b1 * t - b2;
        }
        if self.sin.len() > 1 {
            let (mut b1, mut b2) = (czero::<T>(), czero::<T>());
            for a in self.sin[1..].iter().rev() {
                let b0 = *a + b1 * two_t - b2;
                b2 = b1;
                b1 = b0;
            }
            out += b1 * x.sin();
        }
        out
    }
}

/// Maximal interval on which the non-trigonometric part of `u` is a single
/// polynomial (jump offsets folded into the constant term).
#[derive(Clone, Debug, PartialEq)]
pub struct Segment<T> {
    pub a: T,
    pub b: T,
    pub coeffs: Vec<Cx<T>>,
}

impl<T: Real> Segment<T> {
    #[inline]
    pub fn poly(&self, x: T) -> Cx<T> {
        let mut acc = czero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| *c == czero())
    }
}

/// Strip and ball parameters of the asymptotic estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripParams<T> {
    pub nu: T,
    pub kappa: T,
    pub ball_radius: T,
    pub smoothness: T,
}

impl<T: Real> StripParams<T> {
    pub fn new(nu: T, ball_radius: T, smoothness: T) -> Result<Self> {
        if !(nu >= T::zero()) || !(ball_radius >= T::zero()) {
            return Err(Error::Argument("nu and the ball radius must be nonnegative".into()));
        }
        if !(smoothness >= T::zero() && smoothness <= T::one()) {
            return Err(Error::Argument("smoothness must lie in [0, 1]".into()));
        }
        let kappa = (T::lit(2.0) * T::PI() * nu).cosh();
        Ok(Self {
            nu,
            kappa,
            ball_radius,
            smoothness,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential<T> {
    pieces: Vec<Piece<T>>,
    jumps: Vec<Jump<T>>,
    trig: Trig<T>,
    is_real: bool,
    segments: Vec<Segment<T>>,
}

fn snap<T: Real>(x: T) -> T {
    let tol = T::lit(ENDPOINT_SNAP);
    if x.abs() < tol {
        T::zero()
    } else if (x - T::PI()).abs() < tol {
        T::PI()
    } else {
        x
    }
}

fn finite<T: Real>(c: &Cx<T>) -> bool {
    c.re.is_finite() && c.im.is_finite()
}

impl<T: Real> Potential<T> {
    pub fn new(pieces: Vec<Piece<T>>, jumps: Vec<Jump<T>>, trig: Trig<T>) -> Result<Self> {
        let mut pieces = pieces;
        for p in pieces.iter_mut() {
            p.from = snap(p.from);
            p.to = snap(p.to);
            if !(p.from < p.to) {
                return Err(Error::InvalidPotential(format!(
                    "piece [{}, {}] is empty or reversed",
                    p.from, p.to
                )));
            }
            if !p.poly.iter().all(finite) {
                return Err(Error::InvalidPotential("non-finite polynomial coefficient".into()));
            }
            while p.poly.len() > 1 && *p.poly.last().unwrap() == czero() {
                p.poly.pop();
            }
        }
        if let (Some(first), Some(last)) = (pieces.first(), pieces.last()) {
            if first.from != T::zero() || last.to != T::PI() {
                return Err(Error::InvalidPotential("pieces must cover [0, pi]".into()));
            }
        }
        for w in pieces.windows(2) {
            if w[0].to != w[1].from {
                return Err(Error::InvalidPotential(format!(
                    "pieces must be contiguous and ordered (gap or overlap at {})",
                    w[0].to
                )));
            }
        }
        let mut jumps = jumps;
        for j in &jumps {
            if !(j.at > T::zero() && j.at < T::PI()) {
                return Err(Error::InvalidPotential(format!(
                    "jump location {} must lie strictly inside (0, pi)",
                    j.at
                )));
            }
            if !finite(&j.height) {
                return Err(Error::InvalidPotential("non-finite jump height".into()));
            }
        }
        jumps.sort_by(|a, b| a.at.partial_cmp(&b.at).unwrap());
        if !trig.cos.iter().chain(trig.sin.iter()).all(finite) {
            return Err(Error::InvalidPotential("non-finite trigonometric coefficient".into()));
        }
        let mut trig = trig;
        if let Some(s0) = trig.sin.first_mut() {
            *s0 = czero();
        }
        let is_real = pieces.iter().flat_map(|p| p.poly.iter()).all(|c| c.im == T::zero())
            && jumps.iter().all(|j| j.height.im == T::zero())
            && trig.cos.iter().chain(trig.sin.iter()).all(|c| c.im == T::zero());
        let segments = build_segments(&pieces, &jumps);
        Ok(Self {
            pieces,
            jumps,
            trig,
            is_real,
            segments,
        })
    }

    pub fn zero() -> Self {
        Self::new(vec![], vec![], Trig::default()).expect("zero potential is valid")
    }

    /// `u(x) = sum_j coeffs[j] x^j` on the whole interval.
    pub fn polynomial(coeffs: Vec<Cx<T>>) -> Self {
        let piece = Piece {
            from: T::zero(),
            to: T::PI(),
            poly: coeffs,
        };
        Self::new(vec![piece], vec![], Trig::default()).expect("polynomial potential is valid")
    }

    /// `u(x) = c x`, i.e. `q = c`.
    pub fn linear(c: Cx<T>) -> Self {
        Self::polynomial(vec![czero(), c])
    }

    /// Step of height `c` at `a`, i.e. `q = c delta(x - a)`.
    pub fn step(a: T, c: Cx<T>) -> Result<Self> {
        Self::new(vec![], vec![Jump { at: a, height: c }], Trig::default())
    }

    pub fn trig(cos: Vec<Cx<T>>, sin: Vec<Cx<T>>) -> Result<Self> {
        Self::new(vec![], vec![], Trig { cos, sin })
    }

    /// Pure cosine series `sum_k a[k] cos(kx)`.
    pub fn cosine_series(a: Vec<Cx<T>>) -> Self {
        Self::trig(a, vec![]).expect("finite cosine series is valid")
    }

    pub fn pieces(&self) -> &[Piece<T>] {
        &self.pieces
    }

    pub fn jumps(&self) -> &[Jump<T>] {
        &self.jumps
    }

    pub fn trig_part(&self) -> &Trig<T> {
        &self.trig
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    /// Interior points where the piecewise part changes formula.
    pub fn breakpoints(&self) -> Vec<T> {
        self.segments.iter().skip(1).map(|s| s.a).collect()
    }

    /// True when `u` is constant on every segment.
    pub fn is_piecewise_constant(&self) -> bool {
        self.trig.is_empty() && self.segments.iter().all(|s| s.is_constant())
    }

    pub fn is_zero(&self) -> bool {
        self.trig.is_empty() && self.segments.iter().all(|s| s.coeffs.iter().all(|c| *c == czero()))
    }

    /// Index of the segment containing `x` (right-continuous convention).
    pub fn segment_index(&self, x: T) -> usize {
        let i = self.segments.partition_point(|s| s.a <= x);
        i.saturating_sub(1)
    }

    /// `u` on segment `seg` at `x` without a segment lookup.
    #[inline]
    pub fn eval_in(&self, seg: usize, x: T) -> Cx<T> {
        let s = &self.segments[seg];
        let mut v = s.poly(x);
        if !self.trig.cos.is_empty() || !self.trig.sin.is_empty() {
            v += self.trig.eval(x);
        }
        v
    }

    pub fn eval(&self, x: T) -> Result<Cx<T>> {
        if !(x >= T::zero() && x <= T::PI()) {
            return Err(Error::Domain { x: x.as_f64() });
        }
        Ok(self.eval_in(self.segment_index(x), x))
    }

    pub fn conj(&self) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                from: p.from,
                to: p.to,
                poly: p.poly.iter().map(|c| c.conj()).collect(),
            })
            .collect();
        let jumps = self
            .jumps
            .iter()
            .map(|j| Jump {
                at: j.at,
                height: j.height.conj(),
            })
            .collect();
        let trig = Trig {
            cos: self.trig.cos.iter().map(|c| c.conj()).collect(),
            sin: self.trig.sin.iter().map(|c| c.conj()).collect(),
        };
        Self::new(pieces, jumps, trig).expect("conjugate of a valid potential is valid")
    }

    pub fn scale(&self, c: Cx<T>) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                from: p.from,
                to: p.to,
                poly: p.poly.iter().map(|v| v * c).collect(),
            })
            .collect();
        let jumps = self
            .jumps
            .iter()
            .map(|j| Jump {
                at: j.at,
                height: j.height * c,
            })
            .collect();
        let trig = Trig {
            cos: self.trig.cos.iter().map(|v| v * c).collect(),
            sin: self.trig.sin.iter().map(|v| v * c).collect(),
        };
        Self::new(pieces, jumps, trig).expect("scaled potential is valid")
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Self {
        let mut cuts = vec![T::zero(), T::PI()];
        for p in self.pieces.iter().chain(other.pieces.iter()) {
            cuts.push(p.from);
            cuts.push(p.to);
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let poly_on = |pot: &Self, mid: T| -> Vec<Cx<T>> {
            pot.pieces
                .iter()
                .find(|p| p.from <= mid && mid < p.to)
                .map(|p| p.poly.clone())
                .unwrap_or_default()
        };
        let pieces = if self.pieces.is_empty() && other.pieces.is_empty() {
            vec![]
        } else {
            cuts.windows(2)
                .map(|w| {
                    let mid = (w[0] + w[1]) * T::lit(0.5);
                    let (a, b) = (poly_on(self, mid), poly_on(other, mid));
                    let n = a.len().max(b.len());
                    let poly = (0..n)
                        .map(|k| a.get(k).copied().unwrap_or_default() + b.get(k).copied().unwrap_or_default())
                        .collect();
                    Piece {
                        from: w[0],
                        to: w[1],
                        poly,
                    }
                })
                .collect()
        };
        let jumps = self.jumps.iter().chain(other.jumps.iter()).cloned().collect();
        let merge = |a: &[Cx<T>], b: &[Cx<T>]| -> Vec<Cx<T>> {
            let n = a.len().max(b.len());
            (0..n)
                .map(|k| a.get(k).copied().unwrap_or_default() + b.get(k).copied().unwrap_or_default())
                .collect()
        };
        let trig = Trig {
            cos: merge(&self.trig.cos, &other.trig.cos),
            sin: merge(&self.trig.sin, &other.trig.sin),
        };
        Self::new(pieces, jumps, trig).expect("sum of valid potentials is valid")
    }

    /// `int_a^b u(x) e^{i w x} dx` in closed form.
    pub fn exp_moment(&self, w: Cx<T>, a: T, b: T) -> Cx<T> {
        let mut total = czero();
        if !(b > a) {
            return total;
        }
        let i = imag_unit::<T>();
        for s in &self.segments {
            let lo = s.a.max(a);
            let hi = s.b.min(b);
            if hi > lo && s.coeffs.iter().any(|c| *c != czero()) {
                total += poly_exp_integral(&s.coeffs, w, lo, hi);
            }
        }
        let half = T::lit(0.5);
        for (k, c) in self.trig.cos.iter().enumerate() {
            if *c == czero() {
                continue;
            }
            let kk = T::from_index(k);
            let v = exp_integral(w + kk, a, b) + exp_integral(w - kk, a, b);
            total += c * v * half;
        }
        for (k, c) in self.trig.sin.iter().enumerate().skip(1) {
            if *c == czero() {
                continue;
            }
            let kk = T::from_index(k);
            let v = (exp_integral(w + kk, a, b) - exp_integral(w - kk, a, b)) / (i * T::lit(2.0));
            total += c * v;
        }
        total
    }

    /// `F(rho) = int_0^pi u(x) e^{i rho x} dx`.
    pub fn fourier_strip(&self, rho: Cx<T>) -> Cx<T> {
        self.exp_moment(rho, T::zero(), T::PI())
    }

    /// `c_n(x) = int_0^x u(t) e^{i rho_n t} dt` for `rhos[n-1] = rho_n`.
    pub fn windowed_transform_seq(&self, x: T, rhos: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
        if !(x >= T::zero() && x <= T::PI()) {
            return Err(Error::Domain { x: x.as_f64() });
        }
        let quarter = T::lit(0.25);
        for (k, r) in rhos.iter().enumerate() {
            let n = T::from_index(k + 1);
            if !((r - n).norm() < quarter) {
                return Err(Error::Argument(format!(
                    "|rho_{} - {}| = {} is not below 1/4",
                    k + 1,
                    k + 1,
                    (r - n).norm()
                )));
            }
        }
        Ok(rhos.iter().map(|r| self.exp_moment(*r, T::zero(), x)).collect())
    }

    /// Orthonormal cosine coefficients `c_0 = (u, 1/sqrt(pi))`,
    /// `c_k = (u, sqrt(2/pi) cos kx)` for `k = 0..=k_max`.
    pub fn cosine_coefficients(&self, k_max: usize) -> Vec<Cx<T>> {
        let pi = T::PI();
        let c0 = T::one() / pi.sqrt();
        let ck = (T::lit(2.0) / pi).sqrt();
        let half = T::lit(0.5);
        (0..=k_max)
            .map(|k| {
                let kk = Complex::new(T::from_index(k), T::zero());
                if k == 0 {
                    self.exp_moment(czero(), T::zero(), pi) * c0
                } else {
                    let v = (self.exp_moment(kk, T::zero(), pi) + self.exp_moment(-kk, T::zero(), pi)) * half;
                    v * ck
                }
            })
            .collect()
    }

    /// `||u||_{L_2[0,pi]}` by Gauss quadrature that is exact up to rounding
    /// for the polynomial and trigonometric parts.
    pub fn l2_norm(&self) -> T {
        let (xi, wi) = gauss_legendre(24);
        let freq = self.trig.degree() as f64;
        let mut sum = T::zero();
        for (idx, s) in self.segments.iter().enumerate() {
            let len = (s.b - s.a).as_f64();
            let cells = ((len * (freq + 1.0) / 2.0).ceil() as usize).max(1);
            let h = (s.b - s.a) / T::from_index(cells);
            for c in 0..cells {
                let a = s.a + h * T::from_index(c);
                for (x, w) in xi.iter().zip(&wi) {
                    let t = a + h * T::lit(0.5 * (x + 1.0));
                    sum += self.eval_in(idx, t).norm_sqr() * h * T::lit(0.5 * w);
                }
            }
        }
        sum.sqrt()
    }

    pub fn l2_distance(&self, other: &Self) -> T {
        self.add(&other.scale(Complex::new(-T::one(), T::zero()))).l2_norm()
    }

    /// Cosine-series Sobolev norm `(sum_k (1+k^2)^sigma |c_k|^2)^{1/2}`.
    ///
    /// The exact `L_2` norm is combined with the weighted excess
    /// `sum_k ((1+k^2)^sigma - 1) |c_k|^2`; beyond the summed modes the
    /// coefficients are modelled by a fitted power law. Returns infinity when
    /// the fitted decay is too slow for `sigma`.
    pub fn sobolev_norm(&self, sigma: T) -> Result<T> {
        if !(sigma >= T::zero() && sigma <= T::one()) {
            return Err(Error::Argument("sigma must lie in [0, 1]".into()));
        }
        if self.pieces.is_empty() && self.jumps.is_empty() && self.trig.sin.iter().all(|c| *c == czero()) {
            // pure cosine series: exact
            let pi = T::PI();
            let mut sum = T::zero();
            for (k, a) in self.trig.cos.iter().enumerate() {
                let kk = T::from_index(k);
                let norm_sq = if k == 0 { pi } else { pi * T::lit(0.5) };
                sum += (T::one() + kk * kk).powf(sigma) * a.norm_sqr() * norm_sq;
            }
            return Ok(sum.sqrt());
        }
        let l2 = self.l2_norm();
        if sigma == T::zero() {
            return Ok(l2);
        }
        let kmax = SOBOLEV_MODES;
        let c = self.cosine_coefficients(kmax);
        let mut excess = T::zero();
        for (k, ck) in c.iter().enumerate().skip(1) {
            let kk = T::from_index(k);
            excess += ((T::one() + kk * kk).powf(sigma) - T::one()) * ck.norm_sqr();
        }
        let band = |lo: usize, hi: usize| -> T { c[lo + 1..=hi].iter().fold(T::zero(), |s, v| s + v.norm_sqr()) };
        let e1 = band(kmax / 4, kmax / 2);
        let e2 = band(kmax / 2, kmax);
        let scale = l2 * l2 + T::min_positive_value();
        if e2 > T::lit(1e-30) * scale && e1 > T::zero() {
            // |c_k|^2 ~ A k^{-p}, with p from the ratio of two octave bands
            let p = (e1 / e2).log2() + T::one();
            let two_sigma = sigma + sigma;
            if p <= two_sigma + T::one() {
                return Ok(T::infinity());
            }
            let shape = (kmax / 2 + 1..=kmax).fold(T::zero(), |s, k| s + T::from_index(k).powf(-p));
            let amp = e2 / shape;
            let k0 = T::from_index(kmax) + T::lit(0.5);
            let weighted = amp * k0.powf(two_sigma - p + T::one()) / (p - two_sigma - T::one());
            let plain = amp * k0.powf(T::one() - p) / (p - T::one());
            excess += (weighted - plain).max(T::zero());
        }
        Ok((l2 * l2 + excess).sqrt())
    }

    /// Smooth approximation: the trigonometric part truncated at
    /// `K = ceil(1/eps)` plus the cosine series of the remaining part
    /// truncated at the same frequency.
    pub fn mollify(&self, eps: T) -> Result<Self> {
        if !(eps > T::zero()) {
            return Err(Error::Argument("eps must be positive".into()));
        }
        let kf = (T::one() / eps).ceil();
        let k = kf.to_usize().ok_or_else(|| Error::Argument("eps too small".into()))?;
        let mut cos: Vec<Cx<T>> = self.trig.cos.iter().take(k + 1).copied().collect();
        let sin: Vec<Cx<T>> = self.trig.sin.iter().take(k + 1).copied().collect();
        let rest = Self::new(self.pieces.clone(), self.jumps.clone(), Trig::default())?;
        if !rest.is_zero() {
            let pi = T::PI();
            let c = rest.cosine_coefficients(k);
            cos.resize(k + 1, czero());
            for (j, cj) in c.iter().enumerate() {
                let factor = if j == 0 {
                    T::one() / pi.sqrt()
                } else {
                    (T::lit(2.0) / pi).sqrt()
                };
                cos[j] += cj * factor;
            }
        }
        Self::trig(cos, sin)
    }

    /// Random cosine series with complex Gaussian coefficients damped by
    /// `(1+k^2)^(-sigma-0.51)`, rescaled to `||u||_sigma = radius`.
    pub fn random_ball<R: Rng + ?Sized>(rng: &mut R, radius: T, sigma: T, modes: usize) -> Self {
        let damp = sigma + T::lit(0.51);
        let inv_sqrt2 = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        let mut a: Vec<Cx<T>> = (0..=modes)
            .map(|k| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let kk = T::from_index(k);
                let d = (T::one() + kk * kk).powf(-damp) * inv_sqrt2;
                Complex::new(T::lit(re) * d, T::lit(im) * d)
            })
            .collect();
        let norm = Self::cosine_series(a.clone())
            .sobolev_norm(sigma)
            .expect("sigma validated by caller");
        let s = if norm > T::zero() { radius / norm } else { T::zero() };
        a.iter_mut().for_each(|c| *c *= s);
        Self::cosine_series(a)
    }

    pub fn to_spec(&self) -> PotentialSpec {
        let num = |c: &Cx<T>| {
            if c.im == T::zero() {
                Number::Real(c.re.as_f64())
            } else {
                Number::Complex([c.re.as_f64(), c.im.as_f64()])
            }
        };
        PotentialSpec {
            pieces: self
                .pieces
                .iter()
                .map(|p| PieceSpec {
                    from: p.from.as_f64(),
                    to: p.to.as_f64(),
                    poly: p.poly.iter().map(num).collect(),
                })
                .collect(),
            jumps: self
                .jumps
                .iter()
                .map(|j| JumpSpec {
                    at: j.at.as_f64(),
                    height: num(&j.height),
                })
                .collect(),
            trig: TrigSpec {
                cos: self.trig.cos.iter().map(num).collect(),
                sin: self.trig.sin.iter().map(num).collect(),
            },
        }
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        let cx = |n: &Number| -> Cx<T> {
            let (re, im) = n.parts();
            Complex::new(T::lit(re), T::lit(im))
        };
        let pieces = spec
            .pieces
            .iter()
            .map(|p| Piece {
                from: T::lit(p.from),
                to: T::lit(p.to),
                poly: p.poly.iter().map(cx).collect(),
            })
            .collect();
        let jumps = spec
            .jumps
            .iter()
            .map(|j| Jump {
                at: T::lit(j.at),
                height: cx(&j.height),
            })
            .collect();
        let trig = Trig {
            cos: spec.trig.cos.iter().map(cx).collect(),
            sin: spec.trig.sin.iter().map(cx).collect(),
        };
        Self::new(pieces, jumps, trig)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PotentialSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_spec(&spec)
    }
}

fn build_segments<T: Real>(pieces: &[Piece<T>], jumps: &[Jump<T>]) -> Vec<Segment<T>> {
    let mut cuts = vec![T::zero(), T::PI()];
    for p in pieces {
        cuts.push(p.from);
        cuts.push(p.to);
    }
    for j in jumps {
        cuts.push(j.at);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let mid = (a + b) * T::lit(0.5);
            let mut coeffs = pieces
                .iter()
                .find(|p| p.from <= mid && mid < p.to)
                .map(|p| p.poly.clone())
                .unwrap_or_default();
            let offset = jumps.iter().filter(|j| j.at <= a).fold(czero(), |s, j| s + j.height);
            if coeffs.is_empty() {
                coeffs.push(czero());
            }
            coeffs[0] += offset;
            Segment { a, b, coeffs }
        })
        .collect()
}

/// `int_a^b e^{i w x} dx`.
fn exp_integral<T: Real>(w: Cx<T>, a: T, b: T) -> Cx<T> {
    let i = imag_unit::<T>();
    let h = b - a;
    (i * w * a).exp() * expm1_over(i * w * h) * h
}

/// `mu_m(z) = int_0^1 s^m e^{z s} ds` for `m = 0..=deg`.
fn unit_moments<T: Real>(z: Cx<T>, deg: usize) -> Vec<Cx<T>> {
    let r = z.norm();
    let mut mu = vec![czero(); deg + 1];
    if r <= T::one() {
        for (m, slot) in mu.iter_mut().enumerate() {
            let mut term = Complex::new(T::one(), T::zero());
            let mut sum = term / T::from_index(m + 1);
            for k in 1..60 {
                term = term * z / T::from_index(k);
                let add = term / T::from_index(m + k + 1);
                sum += add;
                if add.norm() <= T::epsilon() * T::lit(1e-2) * sum.norm() {
                    break;
                }
            }
            *slot = sum;
        }
    } else {
        let ez = z.exp();
        mu[0] = expm1_over(z);
        for k in 1..=deg {
            mu[k] = (ez - mu[k - 1] * T::from_index(k)) / z;
        }
    }
    mu
}

/// `int_lo^hi p(x) e^{i w x} dx` for `p(x) = sum_j coeffs[j] x^j`.
fn poly_exp_integral<T: Real>(coeffs: &[Cx<T>], w: Cx<T>, lo: T, hi: T) -> Cx<T> {
    let deg = coeffs.len() - 1;
    let h = hi - lo;
    let z = imag_unit::<T>() * w * h;
    // The upward recurrence is stable once |z| exceeds the degree; below
    // that, halve the interval until the series branch applies.
    if z.norm() > T::one() && z.norm() <= T::lit(2.0) * T::from_index(deg) {
        let mid = (lo + hi) * T::lit(0.5);
        return poly_exp_integral(coeffs, w, lo, mid) + poly_exp_integral(coeffs, w, mid, hi);
    }
    // Taylor shift: p(lo + h s) = sum_m d_m s^m
    let mut d = coeffs.to_vec();
    for k in 0..deg {
        for j in (k..deg).rev() {
            let v = d[j + 1] * lo;
            d[j] += v;
        }
    }
    let mut hp = T::one();
    for dm in d.iter_mut() {
        *dm *= hp;
        hp *= h;
    }
    let mu = unit_moments(z, deg);
    let sum = d.iter().zip(&mu).fold(czero(), |s, (a, b)| s + a * b);
    (imag_unit::<T>() * w * lo).exp() * sum * h
}

/// A real number or a `[re, im]` pair in the JSON potential format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Real(f64),
    Complex([f64; 2]),
}

impl Number {
    pub fn parts(&self) -> (f64, f64) {
        match *self {
            Number::Real(r) => (r, 0.0),
            Number::Complex([r, i]) => (r, i),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub from: f64,
    pub to: f64,
    pub poly: Vec<Number>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub at: f64,
    pub height: Number,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSpec {
    #[serde(default)]
    pub cos: Vec<Number>,
    #[serde(default)]
    pub sin: Vec<Number>,
}

/// Serializable form of a potential.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub pieces: Vec<PieceSpec>,
    #[serde(default)]
    pub jumps: Vec<JumpSpec>,
    #[serde(default)]
    pub trig: TrigSpec,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(Potential::<f64>::zero().eval(1.0).unwrap(), c(0.0));
        let lin = Potential::linear(c(2.0));
        assert!((lin.eval(PI).unwrap() - c(2.0 * PI)).norm() < 1e-14);
        let st = Potential::step(PI / 2.0, c(3.0)).unwrap();
        assert_eq!(st.eval(PI / 4.0).unwrap(), c(0.0));
        assert_eq!(st.eval(3.0 * PI / 4.0).unwrap(), c(3.0));
        assert_eq!(st.eval(PI / 2.0).unwrap(), c(3.0));
        assert!(matches!(st.eval(4.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn clenshaw_matches_direct_sums() {
        let t = Trig {
            cos: vec![c(0.5), c(-1.0), Complex::new(0.2, 0.3)],
            sin: vec![c(9.0), c(0.7), c(0.0), Complex::new(0.0, -0.4)],
        };
        for &x in &[0.0, 0.3, 1.7, PI] {
            let direct = c(0.5) - c(x.cos()) + Complex::new(0.2, 0.3) * (2.0 * x).cos()
                + c(0.7 * x.sin())
                + Complex::new(0.0, -0.4) * (3.0 * x).sin();
            assert!((t.eval(x) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn polynomial_moments_match_quadrature() {
        let p = Potential::polynomial(vec![c(1.0), Complex::new(-0.5, 0.2), c(0.3), c(-0.05)]);
        let (xi, wi) = gauss_legendre(40);
        for &w in &[
            Complex::new(0.0, 0.0),
            Complex::new(0.3, 0.0),
            Complex::new(2.7, 0.1),
            Complex::new(11.0, -0.5),
            Complex::new(150.0, 0.0),
        ] {
            let (a, b) = (0.2, 2.9);
            let cells = 40;
            let h = (b - a) / cells as f64;
            let mut q = Complex::new(0.0, 0.0);
            for k in 0..cells {
                for (x, wt) in xi.iter().zip(&wi) {
                    let t = a + h * (k as f64 + 0.5 * (x + 1.0));
                    q += p.eval(t).unwrap() * (Complex::new(0.0, 1.0) * w * t).exp() * (0.5 * h * wt);
                }
            }
            let e = p.exp_moment(w, a, b);
            assert!((e - q).norm() < 1e-12 * (1.0 + q.norm()), "w = {w}: {e} vs {q}");
        }
    }

    #[test]
    fn parse_spec_example_and_complex_numbers() {
        let text = r#"{"pieces":[{"from":0,"to":3.14159,"poly":[1.0,[0.0,2.0]]}],
            "jumps":[{"at":1.5708,"height":3.0}],"trig":{"cos":[0.0,1.0],"sin":[]}}"#;
        let p: Potential<f64> = Potential::from_json(text).unwrap();
        assert_eq!(p.pieces()[0].to, PI);
        assert!(!p.is_real());
        let v = p.eval(2.0).unwrap();
        let expect = Complex::new(1.0, 4.0) + 3.0 + 2.0f64.cos();
        assert!((v - expect).norm() < 1e-14);
        assert!(matches!(
            Potential::<f64>::from_json(r#"{"jumps":[{"at":0.0,"height":1}]}"#),
            Err(Error::InvalidPotential(_))
        ));
        assert!(matches!(Potential::<f64>::from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn sobolev_norm_of_polynomial_matches_coefficient_sum() {
        // u = x has |c_k|^2 ~ k^{-4}; compare against a long direct sum
        let p = Potential::linear(c(1.0));
        let coeffs = p.cosine_coefficients(200_000);
        let direct: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, v)| (1.0 + (k * k) as f64).powf(0.75) * v.norm_sqr())
            .sum();
        let n = p.sobolev_norm(0.75).unwrap();
        assert!((n * n - direct).abs() < 1e-8 * direct, "{} vs {}", n * n, direct);
    }

    #[test]
    fn step_sobolev_norm_blows_up_at_one_half() {
        let st = Potential::step(1.0, c(1.0)).unwrap();
        assert!(st.sobolev_norm(0.25).unwrap().is_finite());
        assert!(st.sobolev_norm(0.6).unwrap().is_infinite());
    }
}
