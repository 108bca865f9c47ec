//! Argument-principle counting and root isolation for `omega(pi, lambda)`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quasiode::{char_function_scaled, char_jet, OdeOptions, Scaled};
use crate::scalar::{principal_sqrt, Cx, Real};

/// Largest phase change accepted between neighbouring contour samples.
const MAX_PHASE_STEP: f64 = std::f64::consts::FRAC_PI_4;

/// `ln(cosh(|Im rho| pi) / max(1, |rho|))`: the size of `omega` away from
/// its zeros, used to decide when a contour passes too close to a root.
pub(crate) fn reference_log<T: Real>(lambda: Cx<T>) -> T {
    let rho = principal_sqrt(lambda);
    let a = rho.im.abs() * T::PI();
    let lc = if a > T::lit(20.0) {
        a - T::lit(2.0).ln()
    } else {
        a.cosh().ln()
    };
    lc - T::one().max(rho.norm()).ln()
}

/// A closed contour in the plane of the variable `z`, with `lambda(z)`.
pub(crate) trait Contour<T>: Sync {
    fn point(&self, t: T) -> Cx<T>;
    /// Number of uniformly spaced starting samples.
    fn initial_samples(&self) -> usize;
    /// Starting parameters in `[0, 1)`, ascending.
    fn initial_params(&self) -> Vec<T>
    where
        T: Real,
    {
        let n = self.initial_samples().max(16);
        (0..n).map(|k| T::from_index(k) / T::from_index(n)).collect()
    }
}

pub(crate) struct Circle<T> {
    pub center: Cx<T>,
    pub radius: T,
}

impl<T: Real> Contour<T> for Circle<T> {
    fn point(&self, t: T) -> Cx<T> {
        let a = T::lit(2.0) * T::PI() * t;
        self.center + Complex::new(a.cos(), a.sin()) * self.radius
    }

    fn initial_samples(&self) -> usize {
        // omega turns about once per unit of Re rho along the contour
        let reach = principal_sqrt(Complex::new(self.center.norm() + self.radius, T::zero())).re;
        let inner = principal_sqrt(Complex::new((self.center.norm() - self.radius).max(T::zero()), T::zero())).re;
        let turns = if self.center.norm() > self.radius {
            (reach - inner) * T::lit(2.0)
        } else {
            reach
        };
        16 + (T::lit(10.0) * turns).ceil().to_usize().unwrap_or(0)
    }

    fn initial_params(&self) -> Vec<T> {
        if self.center.norm() > T::zero() {
            let n = self.initial_samples().max(16);
            return (0..n).map(|k| T::from_index(k) / T::from_index(n)).collect();
        }
        // around the origin arg omega moves like -pi Re rho = -pi R cos(phi/2)
        let r = self.radius.sqrt();
        let two_pi = T::lit(2.0) * T::PI();
        let target = T::lit(0.6);
        let mut out = Vec::new();
        let mut a = T::zero();
        while a < two_pi {
            out.push(a / two_pi);
            let phi = a;
            let rate = r * T::PI() * T::lit(0.5) * (phi * T::lit(0.5)).sin().abs() + T::one();
            a += (target / rate).min(T::lit(0.2));
        }
        out
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` traversed counterclockwise.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Rect<T> {
    pub x0: T,
    pub x1: T,
    pub y0: T,
    pub y1: T,
}

impl<T: Real> Rect<T> {
    pub fn center(&self) -> Cx<T> {
        Complex::new((self.x0 + self.x1) * T::lit(0.5), (self.y0 + self.y1) * T::lit(0.5))
    }

    pub fn contains_expanded(&self, z: Cx<T>, frac: T) -> bool {
        let dx = (self.x1 - self.x0) * frac;
        let dy = (self.y1 - self.y0) * frac;
        z.re >= self.x0 - dx && z.re <= self.x1 + dx && z.im >= self.y0 - dy && z.im <= self.y1 + dy
    }

    fn corners(&self) -> [Cx<T>; 4] {
        [
            Complex::new(self.x0, self.y0),
            Complex::new(self.x1, self.y0),
            Complex::new(self.x1, self.y1),
            Complex::new(self.x0, self.y1),
        ]
    }

    pub fn split(&self, fx: T, fy: T) -> [Rect<T>; 4] {
        let xm = self.x0 + (self.x1 - self.x0) * fx;
        let ym = self.y0 + (self.y1 - self.y0) * fy;
        [
            Rect { x0: self.x0, x1: xm, y0: self.y0, y1: ym },
            Rect { x0: xm, x1: self.x1, y0: self.y0, y1: ym },
            Rect { x0: xm, x1: self.x1, y0: ym, y1: self.y1 },
            Rect { x0: self.x0, x1: xm, y0: ym, y1: self.y1 },
        ]
    }
}

/// Which complex variable a rectangle lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Plane {
    Lambda,
    /// `lambda = rho^2`
    Rho,
}

impl Plane {
    pub fn to_lambda<T: Real>(self, z: Cx<T>) -> Cx<T> {
        match self {
            Plane::Lambda => z,
            Plane::Rho => z * z,
        }
    }

    pub fn coordinate<T: Real>(self, l: Cx<T>) -> Cx<T> {
        match self {
            Plane::Lambda => l,
            Plane::Rho => principal_sqrt(l),
        }
    }
}

pub(crate) struct RectContour<T> {
    pub rect: Rect<T>,
    pub plane: Plane,
}

impl<T: Real> Contour<T> for RectContour<T> {
    fn point(&self, t: T) -> Cx<T> {
        let c = self.rect.corners();
        let s = t * T::lit(4.0);
        let k = s.floor().to_usize().unwrap_or(0).min(3);
        let f = s - T::from_index(k);
        let z = c[k] + (c[(k + 1) % 4] - c[k]) * f;
        self.plane.to_lambda(z)
    }

    fn initial_samples(&self) -> usize {
        let c = self.rect.corners();
        let mut total = 0usize;
        for k in 0..4 {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            let (ra, rb) = match self.plane {
                Plane::Rho => (a, b),
                Plane::Lambda => (principal_sqrt(a), principal_sqrt(b)),
            };
            // phase turns with Re rho; guard the branch cut with the length in lambda
            let span = match self.plane {
                Plane::Rho => (b - a).norm(),
                Plane::Lambda => {
                    let m = ra.norm().min(rb.norm()).max(T::one());
                    (b - a).norm() / (T::lit(2.0) * m)
                }
            };
            total += 8 + (T::lit(8.0) * span).ceil().to_usize().unwrap_or(0);
        }
        total
    }
}

#[derive(Clone, Copy)]
struct Sample<T> {
    t: T,
    value: Cx<T>,
}

/// Winding number of `omega(pi, .)` along `contour`. `floor` is the relative
/// size (against [`reference_log`]) below which a sample counts as touching
/// a zero.
pub(crate) fn winding<T: Real, C: Contour<T>>(
    p: &Potential<T>,
    contour: &C,
    floor: T,
    opts: &OdeOptions<T>,
) -> Result<i64> {
    let ln_floor = floor.ln();
    let eval = |t: T| -> Result<Sample<T>> {
        let lambda = contour.point(t);
        let w: Scaled<T> = char_function_scaled(p, lambda, opts)?;
        if w.mantissa.norm() == T::zero() || w.ln_norm() - reference_log(lambda) < ln_floor {
            return Err(Error::ContourTooClose {
                re: lambda.re.as_f64(),
                im: lambda.im.as_f64(),
            });
        }
        Ok(Sample { t, value: w.mantissa })
    };
    let params = contour.initial_params();
    let n0 = params.len();
    let samples: Vec<Sample<T>> = params.into_par_iter().map(eval).collect::<Result<Vec<_>>>()?;
    let max_step = T::lit(MAX_PHASE_STEP);
    let min_dt = T::lit(1e-13);
    let mut total = T::zero();
    for k in 0..n0 {
        let a = samples[k];
        let b = if k + 1 < n0 {
            samples[k + 1]
        } else {
            Sample {
                t: T::one(),
                value: samples[0].value,
            }
        };
        // refine until every phase step is small
        let mut stack = vec![(a, b)];
        while let Some((a, b)) = stack.pop() {
            let d = (b.value / a.value).arg();
            if d.abs() <= max_step {
                total += d;
                continue;
            }
            if b.t - a.t < min_dt {
                let lambda = contour.point(a.t);
                return Err(Error::ContourTooClose {
                    re: lambda.re.as_f64(),
                    im: lambda.im.as_f64(),
                });
            }
            let m = eval((a.t + b.t) * T::lit(0.5))?;
            stack.push((m, b));
            stack.push((a, m));
        }
    }
    let w = total / (T::lit(2.0) * T::PI());
    Ok(w.round().to_i64().unwrap_or(0))
}

/// Default floor for counting contours.
pub(crate) fn count_floor<T: Real>() -> T {
    T::tol(1e-7)
}

/// Newton iteration `lambda -= m omega / omega'` with the derivative from the
/// first-order jet. Stops once the update is below `tol` relative.
pub(crate) fn newton<T: Real>(
    p: &Potential<T>,
    start: Cx<T>,
    multiplicity: usize,
    tol: T,
    opts: &OdeOptions<T>,
) -> Result<Cx<T>> {
    let lambda = modified_newton(p, start, multiplicity, tol, opts)?;
    if multiplicity == 1 {
        return Ok(lambda);
    }
    polish_multiple(p, lambda, multiplicity, tol, opts)
}

/// A root of multiplicity `m` is a simple root of the `(m-1)`-th Taylor
/// coefficient, which converges to full precision.
fn polish_multiple<T: Real>(p: &Potential<T>, start: Cx<T>, m: usize, tol: T, opts: &OdeOptions<T>) -> Result<Cx<T>> {
    let mut lambda = start;
    let limit = T::tol(1e-5) * T::one().max(start.norm());
    for _ in 0..12 {
        let (j, _) = char_jet(p, lambda, m, opts)?;
        if j[m].norm() == T::zero() {
            return Ok(start);
        }
        let step = j[m - 1] / (j[m] * T::from_index(m));
        lambda -= step;
        if (lambda - start).norm() > limit {
            // wandered off to a critical point: keep the modified Newton result
            return Ok(start);
        }
        if step.norm() < tol * T::one().max(lambda.norm()) {
            return Ok(lambda);
        }
    }
    Ok(lambda)
}

fn modified_newton<T: Real>(
    p: &Potential<T>,
    start: Cx<T>,
    multiplicity: usize,
    tol: T,
    opts: &OdeOptions<T>,
) -> Result<Cx<T>> {
    let mut lambda = start;
    let m = T::from_index(multiplicity);
    let mut prev_step = T::infinity();
    let mut converged = false;
    let mut stalls = 0;
    for it in 0..80 {
        let (j, _) = char_jet(p, lambda, 1, opts)?;
        if j[0] == Complex::new(T::zero(), T::zero()) {
            return Ok(lambda);
        }
        if j[1].norm() == T::zero() {
            return Err(Error::Convergence {
                iterations: it,
                change: f64::INFINITY,
            });
        }
        let mut step = j[0] / j[1] * m;
        let scale = T::one().max(lambda.norm());
        // damp wild steps: never move further than the local root spacing
        let cap = T::one().max(principal_sqrt(lambda).norm());
        if step.norm() > cap {
            step = step * (cap / step.norm());
        }
        lambda -= step;
        let size = step.norm();
        if converged {
            return Ok(lambda);
        }
        if size < tol * scale {
            converged = true;
            continue;
        }
        if size >= prev_step * T::lit(0.9) {
            stalls += 1;
            // multiple roots limit the attainable accuracy
            if stalls >= 4 && size < T::tol(1e-6) * scale {
                return Ok(lambda);
            }
        } else {
            stalls = 0;
        }
        prev_step = size;
    }
    Err(Error::Convergence {
        iterations: 80,
        change: prev_step.as_f64(),
    })
}

/// Winding number on shrinking circles around `lambda0`, accepted when two
/// consecutive radii agree.
pub(crate) fn multiplicity_at<T: Real>(p: &Potential<T>, lambda0: Cx<T>, opts: &OdeOptions<T>) -> Result<usize> {
    let mut radius = T::lit(1e-3);
    let mut last: Option<i64> = None;
    let floor = T::tol(1e-12);
    for _ in 0..7 {
        let c = Circle {
            center: lambda0,
            radius,
        };
        match winding(p, &c, floor, opts) {
            Ok(w) => {
                if last == Some(w) && w >= 0 {
                    return Ok(w as usize);
                }
                last = Some(w);
            }
            Err(Error::ContourTooClose { .. }) => {
                // radius below the resolution of omega
                break;
            }
            Err(e) => return Err(e),
        }
        radius *= T::lit(0.1);
    }
    Err(Error::MultiplicityUndetermined {
        re: lambda0.re.as_f64(),
        im: lambda0.im.as_f64(),
    })
}

/// Roots (with multiplicities) inside `rect` given their total `count`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn isolate<T: Real>(
    p: &Potential<T>,
    rect: Rect<T>,
    plane: Plane,
    count: usize,
    tol: T,
    opts: &OdeOptions<T>,
    count_opts: &OdeOptions<T>,
    depth: usize,
) -> Result<Vec<(Cx<T>, usize)>> {
    if count == 0 {
        return Ok(vec![]);
    }
    let start = plane.to_lambda(rect.center());
    if let Ok(l) = newton(p, start, count, tol, opts) {
        let inside = rect.contains_expanded(plane.coordinate(l), T::lit(1e-9));
        if inside && (count == 1 || multiplicity_at(p, l, opts).ok() == Some(count)) {
            return Ok(vec![(l, count)]);
        }
    }
    if depth > 60 {
        return Err(Error::Localization(format!(
            "cannot separate {count} roots near lambda = {start}"
        )));
    }
    let splits = [(0.5137, 0.4629), (0.4411, 0.5583), (0.5871, 0.3917)];
    let mut last_err = None;
    for &(fx, fy) in &splits {
        let kids = rect.split(T::lit(fx), T::lit(fy));
        let counts: Result<Vec<i64>> = kids
            .iter()
            .map(|r| winding(p, &RectContour { rect: *r, plane }, count_floor(), count_opts))
            .collect();
        match counts {
            Ok(c) if c.iter().all(|&v| v >= 0) && c.iter().sum::<i64>() == count as i64 => {
                let mut out = Vec::new();
                for (r, k) in kids.iter().zip(c) {
                    out.extend(isolate(p, *r, plane, k as usize, tol, opts, count_opts, depth + 1)?);
                }
                return Ok(out);
            }
            Ok(c) => {
                last_err = Some(Error::Localization(format!(
                    "inconsistent sub-counts {c:?} for {count} roots near lambda = {start}"
                )))
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Localization("subdivision failed".into())))
}
