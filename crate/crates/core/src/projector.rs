//! Spectral projectors `P_n f = sum_{k<=n} (f, w_k) y_k`, their norms, and
//! the resolvent built from Green's functions.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigensystem::{basis, default_grid, Basis};
use crate::error::{Error, Result};
use crate::linalg::{power_iteration, CMatrix};
use crate::potential::{Potential, StripParams};
use crate::quadrature::Grid;
use crate::quasiode::{integrate, wronskian, OdeOptions};
use crate::scalar::{cone, czero, Cx, Real};
use crate::spectrum::{count_in_circle, count_in_disk, localize, SpectrumOptions};

/// Radius of the eigenvalue-free disk required around a resolvent point.
pub const RESOLVENT_MARGIN: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct ProjectorMatrix<T> {
    pub n: usize,
    pub grid: Grid<T>,
    pub y_block: Vec<Vec<Cx<T>>>,
    /// Classical derivatives `y' = y^[1] + u y`.
    pub dy_block: Vec<Vec<Cx<T>>>,
    pub w_block: Vec<Vec<Cx<T>>>,
}

fn samples_of<T: Real>(p: &Potential<T>, grid: &Grid<T>) -> Vec<Cx<T>> {
    grid.points().iter().map(|&x| p.eval(x).unwrap_or_default()).collect()
}

impl<T: Real> ProjectorMatrix<T> {
    /// Projector onto the first `n` members of a computed basis.
    pub fn from_basis(p: &Potential<T>, b: &Basis<T>, n: usize) -> Result<Self> {
        if n > b.len() {
            return Err(Error::Argument(format!("basis has {} members, {n} requested", b.len())));
        }
        let u = samples_of(p, &b.grid);
        let dy_block = b.functions[..n]
            .iter()
            .map(|f| (0..u.len()).map(|i| f.y1[i] + u[i] * f.y[i]).collect())
            .collect();
        Ok(Self {
            n,
            grid: b.grid.clone(),
            y_block: b.functions[..n].iter().map(|f| f.y.clone()).collect(),
            dy_block,
            w_block: b.dual[..n].iter().map(|d| d.w.clone()).collect(),
        })
    }

    pub fn zero(grid: Grid<T>) -> Self {
        Self {
            n: 0,
            grid,
            y_block: vec![],
            dy_block: vec![],
            w_block: vec![],
        }
    }

    pub fn apply(&self, f: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut out = vec![czero(); f.len()];
        for (y, w) in self.y_block.iter().zip(&self.w_block) {
            let a = self.grid.inner(f, w);
            for (o, v) in out.iter_mut().zip(y) {
                *o += a * v;
            }
        }
        out
    }

    /// Numerical rank of the Gram matrix of the range functions.
    pub fn rank(&self) -> usize {
        let n = self.n;
        if n == 0 {
            return 0;
        }
        let g = CMatrix::from_fn(n, n, |i, j| self.grid.inner(&self.y_block[i], &self.y_block[j]));
        let ev = g.hermitian_eigenvalues();
        let top = ev[n - 1];
        ev.iter().filter(|&&e| e > T::lit(1e-8) * top).count()
    }

    /// `max ||P P f - P f|| / ||f||` over sines up to frequency `2n + 2` and a
    /// non-symmetric smooth function.
    pub fn idempotency_defect(&self) -> T {
        let mut tests: Vec<Vec<Cx<T>>> = (1..=2 * self.n + 2)
            .map(|k| {
                let kk = T::from_index(k);
                self.grid.sample(|x| Complex::new((kk * x).sin(), T::zero()))
            })
            .collect();
        tests.push(self.grid.sample(|x| Complex::new(x.cos(), x * (T::PI() - x)) * x.exp()));
        tests
            .par_iter()
            .map(|f| {
                let pf = self.apply(f);
                let ppf = self.apply(&pf);
                let d: Vec<Cx<T>> = ppf.iter().zip(&pf).map(|(a, b)| a - b).collect();
                self.grid.norm_l2(&d) / self.grid.norm_l2(f)
            })
            .reduce(T::zero, |a, b| a.max(b))
    }

    /// `||P||` from `L_2` to `W_2^1` with `||g||^2 = ||g||^2 + ||g'||^2`.
    pub fn norm_l2_to_w21(&self) -> T {
        family_norm(&self.grid, &[(self, T::one())])
    }
}

/// Norm `L_2 -> W_2^1` of `sum_j s_j P_j` for projectors on a common grid:
/// `||.||^2 = lambda_max(Q^1/2 G Q^1/2)` with `G` the `W_2^1` Gram matrix of
/// the range functions and `Q` the `L_2` Gram matrix of the functionals.
fn family_norm<T: Real>(grid: &Grid<T>, parts: &[(&ProjectorMatrix<T>, T)]) -> T {
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for (pm, s) in parts {
        for k in 0..pm.n {
            ys.push((&pm.y_block[k], &pm.dy_block[k], *s));
            ws.push(&pm.w_block[k]);
        }
    }
    let m = ys.len();
    if m == 0 {
        return T::zero();
    }
    let g = CMatrix::from_fn(m, m, |k, l| {
        let (yl, dl, sl) = ys[l];
        let (yk, dk, sk) = ys[k];
        (grid.inner(yl, yk) + grid.inner(dl, dk)) * (sl * sk)
    });
    let q = CMatrix::from_fn(m, m, |k, l| grid.inner(ws[l], ws[k]));
    let r = q.psd_sqrt();
    let h = r.mul(&g).mul(&r);
    let top = h.hermitian_eigenvalues()[m - 1];
    top.max(T::zero()).sqrt()
}

/// `||P_a - P_b||` from `L_2` to `W_2^1`.
pub fn difference_norm<T: Real>(a: &ProjectorMatrix<T>, b: &ProjectorMatrix<T>) -> Result<T> {
    if a.grid.points() != b.grid.points() {
        return Err(Error::Argument("projectors live on different grids".into()));
    }
    Ok(family_norm(&a.grid, &[(a, T::one()), (b, -T::one())]))
}

/// Checks that the circle `|lambda| = (n + 1/2)^2` separates the first `n`
/// eigenvalues from the rest.
fn check_separation<T: Real>(p: &Potential<T>, n: usize, opts: &SpectrumOptions<T>) -> Result<()> {
    let r = T::from_index(n) + T::lit(0.5);
    match count_in_disk(p, r * r, opts) {
        Ok(c) if c == n => Ok(()),
        Ok(c) => Err(Error::ContourConflict {
            n,
            detail: format!("{c} eigenvalues inside |lambda| = ({n}.5)^2"),
        }),
        Err(Error::ContourTooClose { re, im }) => Err(Error::ContourConflict {
            n,
            detail: format!("eigenvalue near the contour at {re}{im:+}i"),
        }),
        Err(e) => Err(e),
    }
}

/// Projector `P_n(u)` sampled on `grid` (whose edges should contain the
/// breakpoints of `p`).
pub fn build_on<T: Real>(
    p: &Potential<T>,
    n: usize,
    grid: Grid<T>,
    sp: &StripParams<T>,
    opts: &SpectrumOptions<T>,
) -> Result<ProjectorMatrix<T>> {
    if n == 0 {
        return Ok(ProjectorMatrix::zero(grid));
    }
    check_separation(p, n, opts)?;
    let data = localize(p, n, sp, opts)?;
    let b = basis(p, &data, grid, &opts.ode)?;
    ProjectorMatrix::from_basis(p, &b, n)
}

pub fn build<T: Real>(
    p: &Potential<T>,
    n: usize,
    sp: &StripParams<T>,
    opts: &SpectrumOptions<T>,
) -> Result<ProjectorMatrix<T>> {
    build_on(p, n, default_grid(p), sp, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityStep<T> {
    pub t: T,
    /// `||t direction||_sigma`.
    pub perturbation_norm: T,
    pub norm: Option<T>,
    pub error: Option<String>,
}

/// `||P_n(u0 + t h) - P_n(u0)||_{L2 -> W21}` for `t = t0 / 2^k`,
/// `k = 0..=halvings`. Steps whose projector cannot be built are reported
/// with the error and no norm.
#[allow(clippy::too_many_arguments)]
pub fn continuity_experiment<T: Real>(
    u0: &Potential<T>,
    direction: &Potential<T>,
    sigma: T,
    n: usize,
    halvings: usize,
    t0: T,
    sp: &StripParams<T>,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<ContinuityStep<T>>> {
    let grid = default_grid(&u0.add(direction));
    let base = build_on(u0, n, grid.clone(), sp, opts)?;
    let dir_norm = direction.sobolev_norm(sigma).unwrap_or(T::infinity());
    let steps: Vec<T> = (0..=halvings).map(|k| t0 / T::lit(2.0).powi(k as i32)).collect();
    Ok(steps
        .par_iter()
        .map(|&t| {
            let ut = u0.add(&direction.scale(Complex::new(t, T::zero())));
            let res = build_on(&ut, n, grid.clone(), sp, opts).and_then(|pt| difference_norm(&pt, &base));
            let (norm, error) = match res {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            ContinuityStep {
                t,
                perturbation_norm: dir_norm * t,
                norm,
                error,
            }
        })
        .collect())
}

/// `(L - lambda)^-1` with kernel `phi(min) psi(max) / C`, where `phi`
/// vanishes at 0, `psi` at pi and `C = -(phi psi^[1] - psi phi^[1])`.
#[derive(Clone, Debug)]
pub struct Resolvent<T> {
    pub lambda: Cx<T>,
    pub grid: Grid<T>,
    phi: Vec<Cx<T>>,
    phi1: Vec<Cx<T>>,
    psi: Vec<Cx<T>>,
    psi1: Vec<Cx<T>>,
    c: Cx<T>,
}

impl<T: Real> Resolvent<T> {
    pub fn new(p: &Potential<T>, lambda: Cx<T>, grid: Grid<T>, opts: &OdeOptions<T>) -> Result<Self> {
        let init = (czero(), cone());
        let phi = integrate(p, lambda, init, T::zero(), T::PI(), None, grid.points(), opts)?;
        // backward from pi so the decaying solution stays accurate for Re lambda << 0
        let psi = integrate(p, lambda, init, T::PI(), T::zero(), None, grid.points(), opts)?;
        let wr = wronskian(&phi, &psi);
        let c = -wr[wr.len() / 2];
        let size = grid.sup_norm(&phi.y) * grid.sup_norm(&psi.y1) + grid.sup_norm(&psi.y) * grid.sup_norm(&phi.y1);
        if !(c.norm() > T::tol(1e-12) * size) {
            return Err(Error::IllConditionedResolvent {
                re: lambda.re.as_f64(),
                im: lambda.im.as_f64(),
                margin: 0.0,
            });
        }
        Ok(Self {
            lambda,
            grid,
            phi: phi.y,
            phi1: phi.y1,
            psi: psi.y,
            psi1: psi.y1,
            c,
        })
    }

    pub fn apply(&self, f: &[Cx<T>]) -> Vec<Cx<T>> {
        self.apply_with_quasi(f).0
    }

    /// `g = (L - lambda)^-1 f` together with `g^[1]`.
    pub fn apply_with_quasi(&self, f: &[Cx<T>]) -> (Vec<Cx<T>>, Vec<Cx<T>>) {
        let pf: Vec<Cx<T>> = self.phi.iter().zip(f).map(|(a, b)| a * b).collect();
        let qf: Vec<Cx<T>> = self.psi.iter().zip(f).map(|(a, b)| a * b).collect();
        let left = self.grid.cumulative(&pf);
        let right = self.grid.cumulative(&qf);
        let total = *right.last().expect("nonempty grid");
        let inv = self.c.inv();
        let g = (0..f.len())
            .map(|i| (self.psi[i] * left[i] + self.phi[i] * (total - right[i])) * inv)
            .collect();
        let g1 = (0..f.len())
            .map(|i| (self.psi1[i] * left[i] + self.phi1[i] * (total - right[i])) * inv)
            .collect();
        (g, g1)
    }
}

/// `L_2 -> L_2` norm of an operator with symmetric kernel, acting on grid
/// samples, by power iteration in weighted coordinates.
pub fn symmetric_operator_norm<T: Real, F>(grid: &Grid<T>, apply: F) -> T
where
    F: Fn(&[Cx<T>]) -> Vec<Cx<T>>,
{
    let idx: Vec<usize> = (0..grid.len()).filter(|&i| grid.weights()[i] > T::zero()).collect();
    let sq: Vec<T> = idx.iter().map(|&i| grid.weights()[i].sqrt()).collect();
    let len = grid.len();
    let a = |v: &[Cx<T>]| -> Vec<Cx<T>> {
        let mut f = vec![czero(); len];
        for (k, &i) in idx.iter().enumerate() {
            f[i] = v[k] / sq[k];
        }
        let g = apply(&f);
        idx.iter().zip(&sq).map(|(&i, s)| g[i] * *s).collect()
    };
    // symmetric kernel: A^H v = conj(A conj v)
    let ah = |v: &[Cx<T>]| -> Vec<Cx<T>> {
        let c: Vec<Cx<T>> = v.iter().map(|z| z.conj()).collect();
        a(&c).into_iter().map(|z| z.conj()).collect()
    };
    power_iteration(idx.len(), a, ah, T::tol(1e-9), 300)
}

fn check_margin<T: Real>(p: &Potential<T>, lambda: Cx<T>, opts: &SpectrumOptions<T>) -> Result<()> {
    let margin = T::lit(RESOLVENT_MARGIN);
    let bad = Error::IllConditionedResolvent {
        re: lambda.re.as_f64(),
        im: lambda.im.as_f64(),
        margin: RESOLVENT_MARGIN,
    };
    match count_in_circle(p, lambda, margin, opts) {
        Ok(0) => Ok(()),
        Ok(_) | Err(Error::ContourTooClose { .. }) => Err(bad),
        Err(e) => Err(e),
    }
}

/// `||(L_eps - lambda)^-1 - (L - lambda)^-1||` on `L_2`, after checking that
/// no eigenvalue of either operator lies within [`RESOLVENT_MARGIN`] of `lambda`.
pub fn resolvent_distance<T: Real>(
    p: &Potential<T>,
    p_eps: &Potential<T>,
    lambda: Cx<T>,
    grid: &Grid<T>,
    opts: &SpectrumOptions<T>,
) -> Result<T> {
    check_margin(p, lambda, opts)?;
    check_margin(p_eps, lambda, opts)?;
    let r = Resolvent::new(p, lambda, grid.clone(), &opts.ode)?;
    let re = Resolvent::new(p_eps, lambda, grid.clone(), &opts.ode)?;
    Ok(symmetric_operator_norm(grid, |f| {
        let a = re.apply(f);
        let b = r.apply(f);
        a.iter().zip(&b).map(|(x, y)| x - y).collect()
    }))
}

/// Norm of `R(l) - R(m) - (l - m) R(l) R(m)`.
pub fn resolvent_identity_defect<T: Real>(rl: &Resolvent<T>, rm: &Resolvent<T>) -> T {
    let d = rl.lambda - rm.lambda;
    symmetric_operator_norm(&rl.grid, |f| {
        let a = rl.apply(f);
        let b = rm.apply(f);
        let c = rl.apply(&b);
        (0..f.len()).map(|i| a[i] - b[i] - c[i] * d).collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolventStep<T> {
    pub eps: T,
    pub distance: T,
}

/// Resolvent distances between `u` and `mollify(u, eps)` for
/// `eps = eps0 / 2^k`, `k = 0..=halvings`.
pub fn resolvent_experiment<T: Real>(
    u: &Potential<T>,
    lambda: Cx<T>,
    eps0: T,
    halvings: usize,
    opts: &SpectrumOptions<T>,
) -> Result<Vec<ResolventStep<T>>> {
    let grid = default_grid(u);
    (0..=halvings)
        .into_par_iter()
        .map(|k| {
            let eps = eps0 / T::lit(2.0).powi(k as i32);
            let ue = u.mollify(eps)?;
            Ok(ResolventStep {
                eps,
                distance: resolvent_distance(u, &ue, lambda, &grid, opts)?,
            })
        })
        .collect()
}
