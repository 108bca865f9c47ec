//! Eigenfunctions, root chains, the biorthogonal system and the remainders
//! of the eigenfunction asymptotics.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::potential::Potential;
use crate::quadrature::Grid;
use crate::quasiode::{char_chain, integrate, solution_grid, OdeOptions};
use crate::scalar::{cone, czero, principal_sqrt, Cx, Real};
use crate::spectrum::SpectralDatum;

pub const DEFAULT_CELLS: usize = 512;
pub const DEFAULT_NODES: usize = 8;

/// Number of sine test functions in [`weak_residual`].
const WEAK_TESTS: usize = 16;

/// Eigenvalues closer than this (relative) form one cluster.
const CLUSTER_TOL: f64 = 1e-6;

type Chain<T> = (Vec<EigenFunction<T>>, Vec<BiorthElement<T>>);

#[derive(Clone, Debug)]
pub struct EigenFunction<T> {
    pub datum: SpectralDatum<T>,
    pub y: Vec<Cx<T>>,
    pub y1: Vec<Cx<T>>,
    pub chain_index: usize,
}

#[derive(Clone, Debug)]
pub struct BiorthElement<T> {
    pub datum: SpectralDatum<T>,
    pub w: Vec<Cx<T>>,
    /// Quasi-derivative with respect to the conjugate potential.
    pub w1: Vec<Cx<T>>,
}

/// Grid with more than 4096 points whose cell edges contain the breakpoints.
pub fn default_grid<T: Real>(p: &Potential<T>) -> Grid<T> {
    solution_grid(p, DEFAULT_CELLS, DEFAULT_NODES)
}

fn sine<T: Real>(grid: &Grid<T>, n: usize) -> Vec<Cx<T>> {
    let k = T::from_index(n);
    grid.sample(|x| Complex::new((k * x).sin(), T::zero()))
}

/// Scale and unit rotation making `||y|| = 1` and `(y, sin nx) >= 0`.
fn normalization<T: Real>(grid: &Grid<T>, n: usize, y: &[Cx<T>]) -> Result<Cx<T>> {
    let norm = grid.norm_l2(y);
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::DegenerateTrace { n });
    }
    let c = grid.inner(y, &sine(grid, n));
    let rot = if c.norm() > T::zero() { c.conj() / c.norm() } else { cone() };
    Ok(rot / norm)
}

fn datum_at<T: Real>(d: &SpectralDatum<T>, n: usize) -> SpectralDatum<T> {
    SpectralDatum {
        n,
        s_n: d.rho - T::from_index(n),
        ..*d
    }
}

/// Normalized eigenfunction `omega(., lambda_n)` and its quasi-derivative.
pub fn eigenfunction<T: Real>(
    p: &Potential<T>,
    d: &SpectralDatum<T>,
    grid: &Grid<T>,
    opts: &OdeOptions<T>,
) -> Result<EigenFunction<T>> {
    let tr = integrate(p, d.lambda, (czero(), cone()), T::zero(), T::PI(), None, grid.points(), opts)?;
    let s = normalization(grid, d.n, &tr.y)?;
    Ok(EigenFunction {
        datum: *d,
        y: tr.y.iter().map(|v| v * s).collect(),
        y1: tr.y1.iter().map(|v| v * s).collect(),
        chain_index: 0,
    })
}

/// The chain `omega, omega_lambda, ...` of length `d.multiplicity`, scaled
/// together so the eigenfunction has unit norm.
pub fn root_chain<T: Real>(
    p: &Potential<T>,
    d: &SpectralDatum<T>,
    grid: &Grid<T>,
    opts: &OdeOptions<T>,
) -> Result<Vec<EigenFunction<T>>> {
    let m = d.multiplicity.max(1);
    if m == 1 {
        return Ok(vec![eigenfunction(p, d, grid, opts)?]);
    }
    let ch = char_chain(p, d.lambda, m - 1, grid.points(), opts)?;
    let s = normalization(grid, d.n, &ch.traces[0].y)?;
    let chain: Vec<EigenFunction<T>> = ch
        .traces
        .iter()
        .enumerate()
        .map(|(j, tr)| EigenFunction {
            datum: datum_at(d, d.n + j),
            y: tr.y.iter().map(|v| v * s).collect(),
            y1: tr.y1.iter().map(|v| v * s).collect(),
            chain_index: j,
        })
        .collect();
    if chain_independence(grid, &chain) < T::tol(1e-10) {
        return Err(Error::InconsistentMultiplicity { n: d.n, multiplicity: m });
    }
    Ok(chain)
}

/// Determinant of the Gram matrix of the chain after scaling each member to
/// unit norm: 1 for orthogonal functions, 0 for dependent ones.
pub fn chain_independence<T: Real>(grid: &Grid<T>, chain: &[EigenFunction<T>]) -> T {
    let norms: Vec<T> = chain.iter().map(|f| grid.norm_l2(&f.y)).collect();
    let g = CMatrix::from_fn(chain.len(), chain.len(), |i, j| {
        grid.inner(&chain[i].y, &chain[j].y) / (norms[i] * norms[j])
    });
    g.hermitian_eigenvalues().iter().fold(T::one(), |a, &e| a * e)
}

/// Biorthogonal elements for one cluster: `w_j = sum_s b_js conj(y_s)` with
/// `B = (A^-1)^H`, `A_is = int y_i y_s`. For a simple eigenvalue this is
/// `w = conj(y) / conj(int y^2)`.
pub fn biorthogonal<T: Real>(grid: &Grid<T>, chain: &[EigenFunction<T>]) -> Result<Vec<BiorthElement<T>>> {
    let m = chain.len();
    let n = chain.first().map(|f| f.datum.n).unwrap_or(0);
    let a = CMatrix::from_fn(m, m, |i, s| grid.bilinear(&chain[i].y, &chain[s].y));
    let inv = a.inverse(T::tol(1e-10)).map_err(|_| Error::DegeneratePairing { n })?;
    let b = inv.adjoint();
    let len = grid.len();
    Ok((0..m)
        .map(|j| {
            let mut w = vec![czero(); len];
            let mut w1 = vec![czero(); len];
            for (s, f) in chain.iter().enumerate() {
                let c = b[(j, s)];
                for i in 0..len {
                    w[i] += c * f.y[i].conj();
                    w1[i] += c * f.y1[i].conj();
                }
            }
            BiorthElement {
                datum: chain[j].datum,
                w,
                w1,
            }
        })
        .collect())
}

/// Eigen- and associated functions together with the biorthogonal system.
#[derive(Clone, Debug)]
pub struct Basis<T> {
    pub grid: Grid<T>,
    pub functions: Vec<EigenFunction<T>>,
    pub dual: Vec<BiorthElement<T>>,
}

fn clusters<T: Real>(data: &[SpectralDatum<T>]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=data.len() {
        let split = i == data.len() || {
            let a = data[start].lambda;
            (data[i].lambda - a).norm() > T::lit(CLUSTER_TOL) * T::one().max(a.norm())
        };
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Builds the basis for consecutive spectral data (a multiple eigenvalue
/// must appear with all of its indices).
pub fn basis<T: Real>(
    p: &Potential<T>,
    data: &[SpectralDatum<T>],
    grid: Grid<T>,
    opts: &OdeOptions<T>,
) -> Result<Basis<T>> {
    let groups = clusters(data);
    let parts: Vec<Result<Chain<T>>> = groups
        .par_iter()
        .map(|r| {
            let d = &data[r.start];
            if d.multiplicity != r.len() {
                return Err(Error::InconsistentMultiplicity {
                    n: d.n,
                    multiplicity: d.multiplicity,
                });
            }
            let chain = root_chain(p, d, &grid, opts)?;
            let dual = biorthogonal(&grid, &chain)?;
            Ok((chain, dual))
        })
        .collect();
    let mut functions = Vec::with_capacity(data.len());
    let mut dual = Vec::with_capacity(data.len());
    for part in parts {
        let (f, w) = part?;
        functions.extend(f);
        dual.extend(w);
    }
    Ok(Basis { grid, functions, dual })
}

impl<T: Real> Basis<T> {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// `max_{n,m <= k} |(y_n, w_m) - delta_nm|`.
    pub fn biorthogonality_defect(&self, k: usize) -> T {
        let k = k.min(self.len());
        (0..k)
            .into_par_iter()
            .map(|i| {
                (0..k).fold(T::zero(), |m, j| {
                    let v = self.grid.inner(&self.functions[i].y, &self.dual[j].w);
                    let target = if i == j { cone() } else { czero() };
                    m.max((v - target).norm())
                })
            })
            .reduce(T::zero, |a, b| a.max(b))
    }

    /// `max_n sup |w_n - y_n|`; zero for real potentials.
    pub fn self_adjoint_gap(&self) -> T {
        self.functions
            .iter()
            .zip(&self.dual)
            .fold(T::zero(), |m, (f, d)| {
                m.max(f.y.iter().zip(&d.w).fold(T::zero(), |a, (y, w)| a.max((y - w).norm())))
            })
    }

    /// Ratio of extreme eigenvalues of the Gram matrix `(y_i, y_j)`,
    /// `i, j < k`.
    pub fn gram_condition(&self, k: usize) -> T {
        let k = k.min(self.len());
        let g = CMatrix::from_fn(k, k, |i, j| self.grid.inner(&self.functions[i].y, &self.functions[j].y));
        let ev = g.hermitian_eigenvalues();
        match (ev.first(), ev.last()) {
            (Some(&lo), Some(&hi)) if lo > T::zero() => hi / lo,
            (Some(_), Some(_)) => T::infinity(),
            _ => T::one(),
        }
    }
}

/// `max_k |int (y1 g' - u y1 g - u^2 y g - lambda y g)|` over normalized
/// `g = sqrt(2/pi) sin kx`: the weak form of `l(y) - lambda y` for the
/// first member of a chain.
pub fn weak_residual<T: Real>(p: &Potential<T>, grid: &Grid<T>, f: &EigenFunction<T>) -> T {
    let u: Vec<Cx<T>> = grid.points().iter().map(|&x| p.eval(x).unwrap_or_default()).collect();
    let c = (T::lit(2.0) / T::PI()).sqrt();
    let lambda = f.datum.lambda;
    let mut worst = T::zero();
    for k in 1..=WEAK_TESTS {
        let kk = T::from_index(k);
        let integrand: Vec<Cx<T>> = grid
            .points()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let g = (kk * x).sin() * c;
                let dg = (kk * x).cos() * kk * c;
                let (y, y1, ui) = (f.y[i], f.y1[i], u[i]);
                y1 * dg - ui * y1 * g - ui * ui * y * g - lambda * y * g
            })
            .collect();
        worst = worst.max(grid.integrate(&integrand).norm());
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfasReport<T> {
    pub sigma: T,
    /// First index from which `|rho_n - n| < 1/4` holds on the computed range.
    pub start: usize,
    pub n: Vec<usize>,
    pub beta: Vec<T>,
    pub gamma: Vec<T>,
    /// `sum (beta^2 + gamma^2) n^(2 sigma)` from `start` on.
    pub weighted_sum: T,
    pub partial_sums: Vec<T>,
}

impl<T: Real> EfasReport<T> {
    /// Relative growth of the weighted sum over the last `window` indices.
    pub fn last_increment(&self, window: usize) -> T {
        let len = self.partial_sums.len();
        if len <= window || self.weighted_sum == T::zero() {
            return T::zero();
        }
        (self.weighted_sum - self.partial_sums[len - 1 - window]) / self.weighted_sum
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,beta,gamma\n");
        for i in 0..self.n.len() {
            s.push_str(&format!(
                "{},{:.16e},{:.16e}\n",
                self.n[i],
                self.beta[i].as_f64(),
                self.gamma[i].as_f64()
            ));
        }
        s
    }
}

/// Start index of the asymptotic regime for the computed data.
pub fn asymptotic_start<T: Real>(data: &[SpectralDatum<T>]) -> usize {
    let quarter = T::lit(0.25);
    let mut start = 1;
    for d in data {
        if !((d.rho - T::from_index(d.n)).norm() < quarter) {
            start = d.n + 1;
        }
    }
    start
}

/// Sup-norm remainders `beta_n = |phi_n| + |psi_n|`,
/// `gamma_n = |phi_n^1| + |psi_n^1|` of the eigenfunction asymptotics for
/// indices from the asymptotic start up to `last`.
pub fn efas_report<T: Real>(b: &Basis<T>, last: usize, sigma: T) -> EfasReport<T> {
    let data: Vec<SpectralDatum<T>> = b.functions.iter().map(|f| f.datum).collect();
    let start = asymptotic_start(&data);
    let last = last.min(b.len());
    let c = (T::lit(2.0) / T::PI()).sqrt();
    let rows: Vec<(usize, T, T)> = (start..=last)
        .into_par_iter()
        .map(|n| {
            let f = &b.functions[n - 1];
            let d = &b.dual[n - 1];
            let nn = T::from_index(n);
            let mut sup = [T::zero(); 4];
            for (i, &x) in b.grid.points().iter().enumerate() {
                let (s, co) = ((nn * x).sin() * c, (nn * x).cos() * c);
                sup[0] = sup[0].max((f.y[i] - s).norm());
                sup[1] = sup[1].max((d.w[i] - s).norm());
                sup[2] = sup[2].max((f.y1[i] / nn - co).norm());
                sup[3] = sup[3].max((d.w1[i] / nn - co).norm());
            }
            (n, sup[0] + sup[1], sup[2] + sup[3])
        })
        .collect();
    let mut acc = T::zero();
    let mut partial_sums = Vec::with_capacity(rows.len());
    for &(n, be, ga) in &rows {
        acc += (be * be + ga * ga) * T::from_index(n).powf(T::lit(2.0) * sigma);
        partial_sums.push(acc);
    }
    EfasReport {
        sigma,
        start,
        n: rows.iter().map(|r| r.0).collect(),
        beta: rows.iter().map(|r| r.1).collect(),
        gamma: rows.iter().map(|r| r.2).collect(),
        weighted_sum: acc,
        partial_sums,
    }
}

/// `sqrt(lambda)` for the free eigenvalues, used to build free data.
pub fn free_datum<T: Real>(n: usize) -> SpectralDatum<T> {
    let l = Complex::new(T::from_index(n * n), T::zero());
    SpectralDatum {
        n,
        lambda: l,
        rho: principal_sqrt(l),
        multiplicity: 1,
        s_n: czero(),
        residual: T::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_eigenfunction_is_sine() {
        let p = Potential::<f64>::zero();
        let g = default_grid(&p);
        let f = eigenfunction(&p, &free_datum(2), &g, &OdeOptions::default()).unwrap();
        let c = (2.0 / PI).sqrt();
        for (i, &x) in g.points().iter().enumerate() {
            assert!((f.y[i] - Complex::new(c * (2.0 * x).sin(), 0.0)).norm() < 1e-12);
            assert!((f.y1[i] - Complex::new(2.0 * c * (2.0 * x).cos(), 0.0)).norm() < 1e-11);
        }
        assert!(weak_residual(&p, &g, &f) < 1e-10);
    }

    #[test]
    fn free_basis_is_orthonormal() {
        let p = Potential::<f64>::zero();
        let data: Vec<_> = (1..=6).map(free_datum).collect();
        let b = basis(&p, &data, default_grid(&p), &OdeOptions::default()).unwrap();
        assert!(b.biorthogonality_defect(6) < 1e-12);
        assert!(b.self_adjoint_gap() < 1e-12);
        assert!((b.gram_condition(6) - 1.0).abs() < 1e-10);
        let r = efas_report(&b, 6, 0.25);
        assert_eq!(r.start, 1);
        assert!(r.beta.iter().chain(&r.gamma).all(|&v| v < 1e-10));
    }

    #[test]
    fn clusters_group_equal_eigenvalues() {
        let mut d: Vec<SpectralDatum<f64>> = (1..=4).map(free_datum).collect();
        d[2].lambda = d[1].lambda;
        assert_eq!(clusters(&d), vec![0..1, 1..3, 3..4]);
    }
}
