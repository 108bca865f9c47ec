//! Eigenvalues as zeros of `omega(pi, lambda)`: counting, localization,
//! multiplicities and the remainder sequence `s_n = sqrt(lambda_n) - n`.

mod contour;

use std::cmp::Ordering;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Potential, StripParams};
use crate::quasiode::{char_function_scaled, OdeOptions};
use crate::scalar::{arg_half_open, principal_sqrt, Cx, Real};
use contour::{count_floor, isolate, newton, reference_log, winding, Circle, Plane, Rect};

/// Number of indices handled by the two-dimensional search before the
/// asymptotic Newton sweep takes over.
const LOW_INDICES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralDatum<T> {
    pub n: usize,
    pub lambda: Cx<T>,
    pub rho: Cx<T>,
    pub multiplicity: usize,
    pub s_n: Cx<T>,
    /// `|omega(pi, lambda)|` relative to the size of `omega` nearby.
    pub residual: T,
}

#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions<T> {
    pub ode: OdeOptions<T>,
    /// Relative size of the last Newton update.
    pub tol_root: T,
    /// Integration tolerance for argument-principle counts, which only need
    /// the phase of `omega` to a fraction of a radian.
    pub count_rtol: T,
}

impl<T: Real> SpectrumOptions<T> {
    fn count_ode(&self) -> OdeOptions<T> {
        OdeOptions {
            rtol: self.count_rtol.max(self.ode.rtol),
            ..self.ode
        }
    }
}

impl<T: Real> Default for SpectrumOptions<T> {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            tol_root: T::tol(1e-10),
            count_rtol: T::tol(1e-9),
        }
    }
}

/// Number of eigenvalues (with algebraic multiplicity) in `|lambda| < radius_sq`.
pub fn count_in_disk<T: Real>(p: &Potential<T>, radius_sq: T, opts: &SpectrumOptions<T>) -> Result<usize> {
    count_in_circle(p, Complex::new(T::zero(), T::zero()), radius_sq, opts)
}

/// Number of eigenvalues in `|lambda - center| < radius`.
pub fn count_in_circle<T: Real>(
    p: &Potential<T>,
    center: Cx<T>,
    radius: T,
    opts: &SpectrumOptions<T>,
) -> Result<usize> {
    if !(radius > T::zero()) {
        return Err(Error::Argument(format!("contour radius {radius} must be positive")));
    }
    let w = winding(p, &Circle { center, radius }, count_floor(), &opts.count_ode())?;
    usize::try_from(w).map_err(|_| Error::Localization(format!("negative winding number {w}")))
}

/// Algebraic multiplicity of the zero of `omega(pi, .)` at `lambda0`.
pub fn multiplicity_at<T: Real>(p: &Potential<T>, lambda0: Cx<T>, opts: &SpectrumOptions<T>) -> Result<usize> {
    contour::multiplicity_at(p, lambda0, &opts.ode)
}

/// Relative residual `|omega(pi, lambda)| max(1,|rho|) / cosh(Im rho pi)`.
pub fn root_residual<T: Real>(p: &Potential<T>, lambda: Cx<T>, opts: &SpectrumOptions<T>) -> Result<T> {
    let w = char_function_scaled(p, lambda, &opts.ode)?;
    if w.mantissa.norm() == T::zero() {
        return Ok(T::zero());
    }
    Ok((w.ln_norm() - reference_log(lambda)).exp())
}

/// First-order guess `n^2 - (2n/pi) int u sin 2nx`.
fn asymptotic_guess<T: Real>(p: &Potential<T>, n: usize) -> Cx<T> {
    let nn = T::from_index(n);
    let w = Complex::new(T::lit(2.0) * nn, T::zero());
    let m = p.exp_moment(w, T::zero(), T::PI()) - p.exp_moment(-w, T::zero(), T::PI());
    let sin_moment = m / Complex::new(T::zero(), T::lit(2.0));
    Complex::new(nn * nn, T::zero()) - sin_moment * (T::lit(2.0) * nn / T::PI())
}

fn order_key<T: Real>(a: &Cx<T>, b: &Cx<T>) -> Ordering {
    let (na, nb) = (a.norm(), b.norm());
    let tie = T::lit(1e-9) * T::one().max(na.max(nb));
    if (na - nb).abs() > tie {
        na.partial_cmp(&nb).unwrap_or(Ordering::Equal)
    } else {
        arg_half_open(*a).partial_cmp(&arg_half_open(*b)).unwrap_or(Ordering::Equal)
    }
}

struct Found<T> {
    roots: Vec<(Cx<T>, usize)>,
}

impl<T: Real> Found<T> {
    fn is_new(&self, l: Cx<T>) -> bool {
        let sep = T::lit(1e-6) * T::one().max(l.norm());
        self.roots.iter().all(|(r, _)| (r - l).norm() > sep)
    }

    fn push(&mut self, l: Cx<T>, m: usize) -> bool {
        if self.is_new(l) {
            self.roots.push((l, m));
            true
        } else {
            false
        }
    }

    fn count_below(&self, radius_sq: T) -> usize {
        self.roots.iter().filter(|(l, _)| l.norm() < radius_sq).map(|(_, m)| m).sum()
    }
}

fn square<T: Real>(half: T) -> Rect<T> {
    // slightly off-centre so the real axis never lies on a cell edge by symmetry
    let off = half * T::lit(0.0123);
    Rect {
        x0: -half - off,
        x1: half + off * T::lit(0.5),
        y0: -half - off * T::lit(0.7),
        y1: half + off * T::lit(1.3),
    }
}

fn search_rect<T: Real>(
    p: &Potential<T>,
    rect: Rect<T>,
    plane: Plane,
    opts: &SpectrumOptions<T>,
    found: &mut Found<T>,
) -> Result<()> {
    let count_ode = opts.count_ode();
    let c = winding(p, &contour::RectContour { rect, plane }, count_floor(), &count_ode)?;
    if c < 0 {
        return Err(Error::Localization(format!("negative count on {rect:?}")));
    }
    for (l, m) in isolate(p, rect, plane, c as usize, opts.tol_root, &opts.ode, &count_ode, 0)? {
        found.push(l, m);
    }
    Ok(())
}

/// Locates the first `n` eigenvalues, ordered by `|lambda|` then `arg lambda`.
/// An eigenvalue of multiplicity `m` fills `m` consecutive indices.
pub fn localize<T: Real>(
    p: &Potential<T>,
    n: usize,
    sp: &StripParams<T>,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<SpectralDatum<T>>> {
    if n == 0 {
        return Err(Error::Argument("at least one eigenvalue must be requested".into()));
    }
    let mut found = Found { roots: Vec::new() };
    let low = LOW_INDICES.min(n + 1);
    let half = T::from_index(low) + T::lit(0.5);
    search_rect(p, square(half * half), Plane::Lambda, opts, &mut found)?;

    let mut top = n + 1;
    let mut next = low + 1;
    loop {
        // Newton from the first-order asymptotics, one index box at a time
        let idx: Vec<usize> = (next..=top).collect();
        let guesses: Vec<Result<Cx<T>>> = idx
            .par_iter()
            .map(|&k| newton(p, asymptotic_guess(p, k), 1, opts.tol_root, &opts.ode))
            .collect();
        for (&k, g) in idx.iter().zip(guesses) {
            let kk = T::from_index(k);
            let ok = match g {
                Ok(l) => (principal_sqrt(l) - kk).norm() < T::lit(0.5) && found.push(l, 1),
                Err(_) => false,
            };
            if !ok {
                let box_half = sp.nu.max(T::one()) + T::lit(0.5);
                let rect = Rect {
                    x0: kk - T::lit(0.4987),
                    x1: kk + T::lit(0.5013),
                    y0: -box_half,
                    y1: box_half * T::lit(1.0071),
                };
                search_rect(p, rect, Plane::Rho, opts, &mut found)?;
            }
        }
        next = top + 1;

        // certify completeness inside a separating circle
        let mut certified = None;
        for shift in [0.0, 0.13, -0.11, 0.23, -0.21] {
            let r = T::from_index(top) + T::lit(0.5 + shift);
            match count_in_disk(p, r * r, opts) {
                Ok(c) => {
                    certified = Some((r * r, c));
                    break;
                }
                Err(Error::ContourTooClose { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let (radius_sq, count) = certified.ok_or_else(|| {
            Error::Localization(format!("no clean contour near |lambda| = ({top}.5)^2"))
        })?;
        let mut have = found.count_below(radius_sq);
        if have < count {
            // something escaped the boxes: full search of the disk
            search_rect(p, square(radius_sq), Plane::Lambda, opts, &mut found)?;
            have = found.count_below(radius_sq);
        }
        if have != count {
            return Err(Error::Localization(format!(
                "found {have} eigenvalues in |lambda| < {radius_sq} but the contour counts {count}"
            )));
        }
        if count >= n {
            let mut inside: Vec<(Cx<T>, usize)> =
                found.roots.iter().copied().filter(|(l, _)| l.norm() < radius_sq).collect();
            inside.sort_by(|a, b| order_key(&a.0, &b.0));
            return finish(p, &inside, n, opts);
        }
        top += (n - count).max(2);
    }
}

fn finish<T: Real>(
    p: &Potential<T>,
    roots: &[(Cx<T>, usize)],
    n: usize,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<SpectralDatum<T>>> {
    let residuals: Vec<Result<T>> = roots.par_iter().map(|(l, _)| root_residual(p, *l, opts)).collect();
    let mut out = Vec::with_capacity(n);
    for ((l, m), res) in roots.iter().zip(residuals) {
        let residual = res?;
        let rho = principal_sqrt(*l);
        for _ in 0..*m {
            if out.len() == n {
                break;
            }
            let k = out.len() + 1;
            out.push(SpectralDatum {
                n: k,
                lambda: *l,
                rho,
                multiplicity: *m,
                s_n: rho - T::from_index(k),
                residual,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemainderReport<T> {
    pub sigma: T,
    pub s_seq: Vec<Cx<T>>,
    /// `sum |s_k|^2 k^(2 sigma)` over the computed range.
    pub weighted_norm: T,
    /// Partial sums of `weighted_norm`, one per index.
    pub tail_profile: Vec<T>,
}

impl<T: Real> RemainderReport<T> {
    /// Relative growth of the partial sums over the last `window` indices.
    pub fn last_increment(&self, window: usize) -> T {
        let len = self.tail_profile.len();
        if len <= window || self.weighted_norm == T::zero() {
            return T::zero();
        }
        (self.weighted_norm - self.tail_profile[len - 1 - window]) / self.weighted_norm
    }
}

pub fn remainders<T: Real>(data: &[SpectralDatum<T>], sigma: T) -> RemainderReport<T> {
    let s_seq: Vec<Cx<T>> = data.iter().map(|d| d.s_n).collect();
    let mut acc = T::zero();
    let tail_profile: Vec<T> = data
        .iter()
        .map(|d| {
            acc += d.s_n.norm_sqr() * T::from_index(d.n).powf(T::lit(2.0) * sigma);
            acc
        })
        .collect();
    RemainderReport {
        sigma,
        s_seq,
        weighted_norm: acc,
        tail_profile,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport<T> {
    pub seed: u64,
    pub radius: T,
    pub sigma: T,
    pub n: usize,
    pub samples: usize,
    /// Identifier of the norm the potentials were scaled in.
    pub norm_convention: String,
    /// `||{s_n}||_sigma` per sample (the square root of the report's
    /// weighted sum), the quantity bounded by the ball constant.
    pub norms: Vec<T>,
    pub max: T,
    pub median: T,
}

pub const NORM_CONVENTION: &str = "potential:cosine-(1+k^2)^sigma;remainder:sqrt(sum|s_k|^2k^(2sigma))";

/// Cosine modes of the random potentials drawn by [`ball_sweep`].
pub const SWEEP_MODES: usize = 32;

/// Random potentials of the sweep, reproducible from `seed`.
pub fn ball_samples<T: Real>(radius: T, sigma: T, samples: usize, seed: u64) -> Vec<Potential<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| Potential::random_ball(&mut rng, radius, sigma, SWEEP_MODES))
        .collect()
}

/// Weighted remainder norms for random potentials with `||u||_sigma = radius`.
pub fn ball_sweep<T: Real>(
    radius: T,
    sigma: T,
    samples: usize,
    n: usize,
    seed: u64,
    opts: &SpectrumOptions<T>,
) -> Result<SweepReport<T>> {
    if !(sigma > T::zero() && sigma < T::lit(0.5)) {
        return Err(Error::Argument(format!("sigma = {sigma} must lie in (0, 1/2)")));
    }
    if samples == 0 {
        return Err(Error::Argument("at least one sample is required".into()));
    }
    let pots = ball_samples(radius, sigma, samples, seed);
    let sp = StripParams::new(T::one(), radius, sigma)?;
    let norms: Vec<T> = pots
        .par_iter()
        .map(|p| localize(p, n, &sp, opts).map(|d| remainders(&d, sigma).weighted_norm.sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted = norms.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let max = *sorted.last().expect("samples >= 1");
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) * T::lit(0.5)
    };
    Ok(SweepReport {
        seed,
        radius,
        sigma,
        n,
        samples,
        norm_convention: NORM_CONVENTION.to_string(),
        norms,
        max,
        median,
    })
}

/// CSV with columns `n, Re lambda, Im lambda, Re s_n, Im s_n, multiplicity`.
pub fn to_csv<T: Real>(data: &[SpectralDatum<T>]) -> String {
    let mut s = String::from("n,re_lambda,im_lambda,re_s,im_s,multiplicity\n");
    for d in data {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            d.n,
            d.lambda.re.as_f64(),
            d.lambda.im.as_f64(),
            d.s_n.re.as_f64(),
            d.s_n.im.as_f64(),
            d.multiplicity
        ));
    }
    s
}
