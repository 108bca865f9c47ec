//! Composite Gauss–Legendre grids on `[0, pi]`.
//!
//! A grid is a list of cells whose endpoints include every breakpoint of the
//! potential. Each cell carries `m` Gauss nodes; the stored points are the
//! cell endpoints interleaved with the nodes, so sampled functions can be
//! integrated, accumulated and differentiated cell by cell with spectral
//! accuracy even when they have kinks at the breakpoints.

use crate::scalar::{czero, Cx, Real};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed in `f64`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_m.
        let k = (m - i) as f64;
        let mut x = ((4.0 * k - 1.0) / (4.0 * m as f64 + 2.0) * std::f64::consts::PI).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        dp = if d != 0.0 { d } else { dp };
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn legendre_all(m: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; m + 1];
    p[0] = 1.0;
    if m >= 1 {
        p[1] = x;
    }
    for k in 2..=m {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
    }
    p
}

/// Reference data for one cell: nodes, weights, integration and
/// differentiation matrices on `[-1, 1]`.
#[derive(Clone, Debug)]
struct CellRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    /// `integ[i][j] = int_{-1}^{xi_i} l_j`.
    integ: Vec<Vec<T>>,
    diff: Vec<Vec<T>>,
    /// derivative rows at the cell endpoints -1 and +1
    diff_left: Vec<T>,
    diff_right: Vec<T>,
    interp_left: Vec<T>,
    interp_right: Vec<T>,
    bary: Vec<f64>,
    nodes64: Vec<f64>,
}

impl<T: Real> CellRule<T> {
    fn new(m: usize) -> Self {
        let (xi, w) = gauss_legendre(m);
        let p_nodes: Vec<Vec<f64>> = xi.iter().map(|&x| legendre_all(m, x)).collect();
        let mut integ = vec![vec![T::zero(); m]; m];
        for i in 0..m {
            let p = &p_nodes[i];
            // antiderivatives of P_k from -1 evaluated at xi_i
            let anti: Vec<f64> = (0..m)
                .map(|k| {
                    if k == 0 {
                        xi[i] + 1.0
                    } else {
                        (p[k + 1] - p[k - 1]) / (2.0 * k as f64 + 1.0)
                    }
                })
                .collect();
            for j in 0..m {
                let mut s = 0.0;
                for k in 0..m {
                    s += (2.0 * k as f64 + 1.0) / 2.0 * p_nodes[j][k] * anti[k];
                }
                integ[i][j] = T::lit(w[j] * s);
            }
        }
        let bary: Vec<f64> = (0..m)
            .map(|j| {
                let mut prod = 1.0;
                for k in 0..m {
                    if k != j {
                        prod *= xi[j] - xi[k];
                    }
                }
                1.0 / prod
            })
            .collect();
        let mut diff = vec![vec![T::zero(); m]; m];
        for i in 0..m {
            let mut diag = 0.0;
            for j in 0..m {
                if i != j {
                    let d = bary[j] / bary[i] / (xi[i] - xi[j]);
                    diff[i][j] = T::lit(d);
                    diag -= d;
                }
            }
            diff[i][i] = T::lit(diag);
        }
        let endpoint_rows = |x: f64| -> (Vec<T>, Vec<T>) {
            let l: Vec<f64> = (0..m)
                .map(|j| {
                    let mut prod = 1.0;
                    for k in 0..m {
                        if k != j {
                            prod *= (x - xi[k]) / (xi[j] - xi[k]);
                        }
                    }
                    prod
                })
                .collect();
            let s_all: f64 = xi.iter().map(|&k| 1.0 / (x - k)).sum();
            let interp = l.iter().map(|&v| T::lit(v)).collect();
            let deriv = (0..m)
                .map(|j| T::lit(l[j] * (s_all - 1.0 / (x - xi[j]))))
                .collect();
            (interp, deriv)
        };
        let (interp_left, diff_left) = endpoint_rows(-1.0);
        let (interp_right, diff_right) = endpoint_rows(1.0);
        Self {
            nodes: xi.iter().map(|&v| T::lit(v)).collect(),
            weights: w.iter().map(|&v| T::lit(v)).collect(),
            integ,
            diff,
            diff_left,
            diff_right,
            interp_left,
            interp_right,
            bary,
            nodes64: xi,
        }
    }
}

/// Composite Gauss–Legendre grid on `[0, pi]`.
#[derive(Clone, Debug)]
pub struct Grid<T> {
    x: Vec<T>,
    weights: Vec<T>,
    edges: Vec<T>,
    rule: CellRule<T>,
}

impl<T: Real> Grid<T> {
    /// `cells` equal cells with `m` Gauss nodes each.
    pub fn uniform(cells: usize, m: usize) -> Self {
        Self::with_breaks(&[], cells, m)
    }

    /// Grid whose cell edges include `breaks`. Roughly `cells` cells are
    /// distributed over the segments proportionally to their length.
    pub fn with_breaks(breaks: &[T], cells: usize, m: usize) -> Self {
        let cells = cells.max(1);
        let mut knots = vec![T::zero()];
        let mut inner: Vec<T> = breaks
            .iter()
            .copied()
            .filter(|&b| b > T::zero() && b < T::PI())
            .collect();
        inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
        inner.dedup();
        knots.extend(inner);
        knots.push(T::PI());
        let mut edges = vec![T::zero()];
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let share = ((b - a) / T::PI() * T::from_index(cells)).round();
            let k = share.to_usize().unwrap_or(1).max(1);
            let h = (b - a) / T::from_index(k);
            for i in 1..k {
                edges.push(a + h * T::from_index(i));
            }
            edges.push(b);
        }
        Self::from_edges(edges, m)
    }

    /// Grid from explicit, strictly increasing cell edges spanning `[0, pi]`.
    pub fn from_edges(edges: Vec<T>, m: usize) -> Self {
        let rule = CellRule::new(m);
        let half = T::lit(0.5);
        let mut x = Vec::with_capacity((edges.len() - 1) * (m + 1) + 1);
        let mut weights = Vec::with_capacity(x.capacity());
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let c = (a + b) * half;
            let h = (b - a) * half;
            x.push(a);
            weights.push(T::zero());
            for (xi, wi) in rule.nodes.iter().zip(&rule.weights) {
                x.push(c + h * *xi);
                weights.push(h * *wi);
            }
        }
        x.push(*edges.last().unwrap());
        weights.push(T::zero());
        Self {
            x,
            weights,
            edges,
            rule,
        }
    }

    pub fn points(&self) -> &[T] {
        &self.x
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.rule.nodes.len()
    }

    fn stride(&self) -> usize {
        self.rule.nodes.len() + 1
    }

    /// Indices of the stored points that are cell edges.
    pub fn edge_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).map(move |c| c * self.stride())
    }

    pub fn sample<F: Fn(T) -> Cx<T>>(&self, f: F) -> Vec<Cx<T>> {
        self.x.iter().map(|&x| f(x)).collect()
    }

    pub fn integrate(&self, f: &[Cx<T>]) -> Cx<T> {
        let mut s = czero();
        for (v, w) in f.iter().zip(&self.weights) {
            s += v * *w;
        }
        s
    }

    pub fn integrate_real(&self, f: &[T]) -> T {
        f.iter().zip(&self.weights).fold(T::zero(), |s, (v, w)| s + *v * *w)
    }

    /// `(f, g) = int f conj(g)`.
    pub fn inner(&self, f: &[Cx<T>], g: &[Cx<T>]) -> Cx<T> {
        let mut s = czero();
        for ((a, b), w) in f.iter().zip(g).zip(&self.weights) {
            if *w != T::zero() {
                s += a * b.conj() * *w;
            }
        }
        s
    }

    /// `int f g` without conjugation.
    pub fn bilinear(&self, f: &[Cx<T>], g: &[Cx<T>]) -> Cx<T> {
        let mut s = czero();
        for ((a, b), w) in f.iter().zip(g).zip(&self.weights) {
            if *w != T::zero() {
                s += a * b * *w;
            }
        }
        s
    }

    pub fn norm_l2(&self, f: &[Cx<T>]) -> T {
        let s = f
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |s, (v, w)| s + v.norm_sqr() * *w);
        s.sqrt()
    }

    pub fn sup_norm(&self, f: &[Cx<T>]) -> T {
        f.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// `F(x) = int_0^x f` at every stored point.
    pub fn cumulative(&self, f: &[Cx<T>]) -> Vec<Cx<T>> {
        let m = self.rule.nodes.len();
        let stride = m + 1;
        let half = T::lit(0.5);
        let mut out = vec![czero(); self.x.len()];
        let mut acc = czero();
        for (c, w) in self.edges.windows(2).enumerate() {
            let h = (w[1] - w[0]) * half;
            let base = c * stride;
            out[base] = acc;
            let vals = &f[base + 1..base + 1 + m];
            for i in 0..m {
                let mut s = czero();
                for (j, v) in vals.iter().enumerate() {
                    s += v * self.rule.integ[i][j];
                }
                out[base + 1 + i] = acc + s * h;
            }
            let mut total = czero();
            for (j, v) in vals.iter().enumerate() {
                total += v * self.rule.weights[j];
            }
            acc += total * h;
        }
        let last = out.len() - 1;
        out[last] = acc;
        out
    }

    /// Spectral derivative inside every cell. At interior edges the two
    /// one-sided values are averaged.
    pub fn derivative(&self, f: &[Cx<T>]) -> Vec<Cx<T>> {
        let m = self.rule.nodes.len();
        let stride = m + 1;
        let half = T::lit(0.5);
        let mut out = vec![czero(); self.x.len()];
        for (c, w) in self.edges.windows(2).enumerate() {
            let scale = T::one() / ((w[1] - w[0]) * half);
            let base = c * stride;
            let vals = &f[base + 1..base + 1 + m];
            for i in 0..m {
                let mut s = czero();
                for (j, v) in vals.iter().enumerate() {
                    s += v * self.rule.diff[i][j];
                }
                out[base + 1 + i] = s * scale;
            }
            let mut left = czero();
            let mut right = czero();
            for (j, v) in vals.iter().enumerate() {
                left += v * self.rule.diff_left[j];
                right += v * self.rule.diff_right[j];
            }
            if c == 0 {
                out[base] = left * scale;
            } else {
                out[base] = (out[base] + left * scale) * half;
            }
            out[base + stride] = right * scale;
        }
        out
    }

    /// Values at the left and right edge of every cell, extrapolated from the
    /// cell's Gauss nodes.
    pub fn edge_limits(&self, f: &[Cx<T>]) -> Vec<(Cx<T>, Cx<T>)> {
        let m = self.rule.nodes.len();
        let stride = m + 1;
        let mut out = Vec::with_capacity(self.cells());
        for c in 0..self.cells() {
            let vals = &f[c * stride + 1..c * stride + 1 + m];
            let mut l = czero();
            let mut r = czero();
            for (j, v) in vals.iter().enumerate() {
                l += v * self.rule.interp_left[j];
                r += v * self.rule.interp_right[j];
            }
            out.push((l, r));
        }
        out
    }

    /// Interpolates sampled data at an arbitrary `x` using the nodes of the
    /// containing cell.
    pub fn interpolate(&self, f: &[Cx<T>], x: T) -> Cx<T> {
        let ncell = self.cells();
        let c = match self
            .edges
            .binary_search_by(|e| e.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => return f[i.min(ncell) * self.stride()],
            Err(i) => i.saturating_sub(1).min(ncell - 1),
        };
        let (a, b) = (self.edges[c], self.edges[c + 1]);
        let xi = ((x - a) / (b - a) * T::lit(2.0) - T::one()).as_f64();
        let base = c * self.stride() + 1;
        let mut num = czero();
        let mut den = T::zero();
        for (j, &node) in self.rule.nodes64.iter().enumerate() {
            let d = xi - node;
            if d == 0.0 {
                return f[base + j];
            }
            let coef = T::lit(self.rule.bary[j] / d);
            num += f[base + j] * coef;
            den += coef;
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn gauss_weights_integrate_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn cumulative_and_derivative_of_sine() {
        let g: Grid<f64> = Grid::with_breaks(&[1.0], 40, 8);
        let f = g.sample(|x| Complex::new(x.sin(), 0.0));
        let cum = g.cumulative(&f);
        for (x, v) in g.points().iter().zip(&cum) {
            assert!((v.re - (1.0 - x.cos())).abs() < 1e-13);
        }
        let d = g.derivative(&f);
        for (x, v) in g.points().iter().zip(&d) {
            assert!((v.re - x.cos()).abs() < 1e-10);
        }
        assert!((g.integrate(&f).re - 2.0).abs() < 1e-13);
        assert!((g.interpolate(&f, 0.3).re - 0.3f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn breaks_are_edges() {
        let g: Grid<f64> = Grid::with_breaks(&[0.5, 2.0], 10, 4);
        assert!(g.edges().contains(&0.5));
        assert!(g.edges().contains(&2.0));
        assert_eq!(g.len(), g.cells() * 5 + 1);
        assert_eq!(*g.points().last().unwrap(), std::f64::consts::PI);
    }
}
