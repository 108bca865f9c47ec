//! Small dense complex linear algebra: just what the projector and
//! biorthogonalization code needs.

use crate::error::{Error, Result};
use crate::scalar::{cone, czero, Cx, Real};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Cx<T>>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == czero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).fold(czero(), |s, (a, b)| s + a * b)
            })
            .collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting. Fails when
    /// a pivot falls below `tol` times the largest entry.
    pub fn inverse(&self, tol: T) -> Result<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let scale = self.max_abs();
        if scale == T::zero() {
            return Err(Error::Argument("singular matrix".into()));
        }
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let (piv, pmag) = (col..n)
                .map(|r| (r, a[(r, col)].norm()))
                .fold((col, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmag <= tol * scale {
                return Err(Error::Argument("singular matrix".into()));
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let d = a[(col, col)].inv();
            for j in 0..n {
                a.data[col * n + j] *= d;
                inv.data[col * n + j] *= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == czero() {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a.data[col * n + j], inv.data[col * n + j]);
                    a.data[r * n + j] -= f * ac;
                    inv.data[r * n + j] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    /// Eigenvalues of a Hermitian matrix (cyclic Jacobi), ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        self.hermitian_eigen().0
    }

    /// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian
    /// matrix, `A = V diag(e) V^H`.
    pub fn hermitian_eigen(&self) -> (Vec<T>, Self) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        // enforce exact Hermitian symmetry
        for i in 0..n {
            a[(i, i)] = Cx::new(a[(i, i)].re, T::zero());
            for j in i + 1..n {
                let v = (a[(i, j)] + a[(j, i)].conj()) * T::lit(0.5);
                a[(i, j)] = v;
                a[(j, i)] = v.conj();
            }
        }
        let mut v = Self::identity(n);
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let mut off = T::zero();
            let mut diag = T::zero();
            for i in 0..n {
                diag += a[(i, i)].norm_sqr();
                for j in i + 1..n {
                    off += a[(i, j)].norm_sqr();
                }
            }
            if off <= eps * eps * diag || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let mag = apq.norm();
                    if mag == T::zero() {
                        continue;
                    }
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    // phase e^{i phi} = apq / |apq|; rotate in the real plane
                    let phase = apq / mag;
                    let tau = (aqq - app) / (T::lit(2.0) * mag);
                    let t = tau.signum() / (tau.abs() + (T::one() + tau * tau).sqrt());
                    let t = if tau == T::zero() { T::one() } else { t };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    // columns: a_p' = c a_p - s conj(phase) a_q, a_q' = s phase a_p + c a_q
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * c - akq * phase.conj() * s;
                        a[(k, q)] = akp * phase * s + akq * c;
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c - vkq * phase.conj() * s;
                        v[(k, q)] = vkp * phase * s + vkq * c;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk * c - aqk * phase * s;
                        a[(q, k)] = apk * phase.conj() * s + aqk * c;
                    }
                    a[(p, q)] = czero();
                    a[(q, p)] = czero();
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| a[(x, x)].re.partial_cmp(&a[(y, y)].re).unwrap_or(std::cmp::Ordering::Equal));
        let ev = order.iter().map(|&i| a[(i, i)].re).collect();
        let vs = Self::from_fn(n, n, |r, c| v[(r, order[c])]);
        (ev, vs)
    }

    /// Square root of a Hermitian positive semidefinite matrix; negative
    /// rounding-level eigenvalues are clipped to zero.
    pub fn psd_sqrt(&self) -> Self {
        let (ev, v) = self.hermitian_eigen();
        let n = self.rows;
        Self::from_fn(n, n, |i, j| {
            (0..n).fold(czero(), |s, k| s + v[(i, k)] * v[(j, k)].conj() * ev[k].max(T::zero()).sqrt())
        })
    }

    /// Largest singular value via power iteration on `A^H A`.
    pub fn largest_singular_value(&self) -> T {
        let adj = self.adjoint();
        power_iteration(
            self.cols,
            |v| self.mul_vec(v),
            |v| adj.mul_vec(v),
            T::tol(1e-12),
            500,
        )
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Cx<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Largest singular value of an operator given by its action and the action
/// of its adjoint, both in the Euclidean inner product of the coefficient
/// vectors. Deterministic start vector.
pub fn power_iteration<T, A, H>(dim: usize, apply: A, apply_adjoint: H, rtol: T, max_iter: usize) -> T
where
    T: Real,
    A: Fn(&[Cx<T>]) -> Vec<Cx<T>>,
    H: Fn(&[Cx<T>]) -> Vec<Cx<T>>,
{
    if dim == 0 {
        return T::zero();
    }
    let norm = |v: &[Cx<T>]| v.iter().fold(T::zero(), |s, x| s + x.norm_sqr()).sqrt();
    // a start vector with no special structure
    let mut v: Vec<Cx<T>> = (0..dim)
        .map(|k| {
            let t = T::from_index(k + 1);
            Cx::new((t * T::lit(0.7548776662)).sin() + T::lit(1.1), (t * T::lit(0.5698402910)).cos())
        })
        .collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut sigma_sq = T::zero();
    for _ in 0..max_iter {
        let av = apply(&v);
        let w = apply_adjoint(&av);
        let nw = norm(&w);
        if nw == T::zero() {
            return T::zero();
        }
        let next = nw;
        v = w.into_iter().map(|x| x / nw).collect();
        let done = (next - sigma_sq).abs() <= rtol * next;
        sigma_sq = next;
        if done {
            break;
        }
    }
    sigma_sq.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn inverse_round_trip() {
        let a = CMatrix::from_fn(4, 4, |i, j| {
            c(((i * 3 + j) as f64).sin() + if i == j { 3.0 } else { 0.0 }, (i as f64 - j as f64) * 0.3)
        });
        let inv = a.inverse(1e-14).unwrap();
        let id = a.mul(&inv);
        assert!(id.sub(&CMatrix::identity(4)).max_abs() < 1e-13);
    }

    #[test]
    fn hermitian_eigenvalues_of_known_matrix() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = c(2.0, 0.0);
        a[(1, 1)] = c(2.0, 0.0);
        a[(0, 1)] = c(0.0, 1.0);
        a[(1, 0)] = c(0.0, -1.0);
        let ev = a.hermitian_eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn psd_square_root_squares_back() {
        let b = CMatrix::from_fn(4, 3, |i, j| c((i as f64 + 1.0) * (j as f64 - 0.5), (i * j) as f64 * 0.2));
        let h = b.mul(&b.adjoint());
        let r = h.psd_sqrt();
        assert!(r.mul(&r).sub(&h).max_abs() < 1e-12 * h.max_abs());
        let (ev, v) = h.hermitian_eigen();
        assert!(ev[0].abs() < 1e-12);
        let back = CMatrix::from_fn(4, 4, |i, j| (0..4).fold(c(0.0, 0.0), |s, k| s + v[(i, k)] * v[(j, k)].conj() * ev[k]));
        assert!(back.sub(&h).max_abs() < 1e-12 * h.max_abs());
    }

    #[test]
    fn hermitian_eigenvalues_match_trace_and_singular_values() {
        let b = CMatrix::from_fn(5, 5, |i, j| c(((i + 2 * j) as f64).cos(), ((3 * i + j) as f64).sin()));
        let h = b.adjoint().mul(&b);
        let ev = h.hermitian_eigenvalues();
        let tr: f64 = (0..5).map(|i| h[(i, i)].re).sum();
        assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-12);
        let smax = b.largest_singular_value();
        assert!((smax * smax - ev[4]).abs() < 1e-9 * ev[4]);
    }
}
