//! Dormand–Prince 8(5,3) step for complex linear systems.
//!
//! Only single steps are provided here; the segment driver decides where to
//! stop so that output points and potential breakpoints are hit exactly.

#![allow(clippy::needless_range_loop)]

use crate::scalar::{czero, Cx, Real};

const A: [[f64; 12]; 12] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0],
    [0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0],
    [-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0],
    [2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0],
];
const C: [f64; 12] = [0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0];
const B: [f64; 12] = [0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259];
const ER: [f64; 12] = [0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294];
const BHH: [f64; 3] = [0.2440944881889764, 0.7338466882816118, 0.022058823529411766];

/// Step-size controller constants of the classical code.
const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;

pub(crate) struct Dop853<T> {
    a: [[T; 12]; 12],
    c: [T; 12],
    b: [T; 12],
    er: [T; 12],
    bhh: [T; 3],
    k: Vec<Vec<Cx<T>>>,
    stage: Vec<Cx<T>>,
    pub y_new: Vec<Cx<T>>,
}

pub(crate) struct StepOutcome<T> {
    /// Scaled error norm; the step is acceptable when it is at most one.
    pub err: T,
    /// Suggested next step size (same sign as the attempted one).
    pub h_next: T,
}

impl<T: Real> Dop853<T> {
    pub fn new(dim: usize) -> Self {
        let lit = |x: f64| T::lit(x);
        Self {
            a: A.map(|row| row.map(lit)),
            c: C.map(lit),
            b: B.map(lit),
            er: ER.map(lit),
            bhh: BHH.map(lit),
            k: vec![vec![czero(); dim]; 12],
            stage: vec![czero(); dim],
            y_new: vec![czero(); dim],
        }
    }

    /// Attempts a step of size `h` from `(x, y)`. `scale` receives the state
    /// before and after the step and fills per-component error weights.
    /// The candidate state is left in `y_new`.
    pub fn step<F, S>(&mut self, f: &F, scale: &S, x: T, y: &[Cx<T>], h: T) -> StepOutcome<T>
    where
        F: Fn(T, &[Cx<T>], &mut [Cx<T>]),
        S: Fn(&[Cx<T>], &[Cx<T>], &mut [T]),
    {
        let n = y.len();
        f(x, y, &mut self.k[0]);
        for s in 1..12 {
            for i in 0..n {
                let mut acc: Cx<T> = czero();
                for j in 0..s {
                    let aij = self.a[s][j];
                    if aij != T::zero() {
                        acc += self.k[j][i] * aij;
                    }
                }
                self.stage[i] = y[i] + acc * h;
            }
            f(x + self.c[s] * h, &self.stage, &mut self.k[s]);
        }
        for i in 0..n {
            let mut acc: Cx<T> = czero();
            for s in 0..12 {
                if self.b[s] != T::zero() {
                    acc += self.k[s][i] * self.b[s];
                }
            }
            self.y_new[i] = y[i] + acc * h;
        }
        let mut sk = vec![T::zero(); n];
        scale(y, &self.y_new, &mut sk);
        let mut err = T::zero();
        let mut err2 = T::zero();
        for i in 0..n {
            let mut bsum: Cx<T> = czero();
            for s in 0..12 {
                if self.b[s] != T::zero() {
                    bsum += self.k[s][i] * self.b[s];
                }
            }
            let e2 = bsum - self.k[0][i] * self.bhh[0] - self.k[8][i] * self.bhh[1] - self.k[11][i] * self.bhh[2];
            let mut e: Cx<T> = czero();
            for s in 0..12 {
                if self.er[s] != T::zero() {
                    e += self.k[s][i] * self.er[s];
                }
            }
            err2 += (e2.norm() / sk[i]).powi(2);
            err += (e.norm() / sk[i]).powi(2);
        }
        let mut deno = err + T::lit(0.01) * err2;
        if deno <= T::zero() {
            deno = T::one();
        }
        let err = h.abs() * err * (T::one() / (deno * T::from_index(n))).sqrt();
        let err = if err.is_finite() { err } else { T::infinity() };
        let fac = if err.is_finite() {
            (err.powf(T::lit(0.125)) / T::lit(SAFE))
                .min(T::one() / T::lit(FAC_MIN))
                .max(T::one() / T::lit(FAC_MAX))
        } else {
            T::lit(10.0)
        };
        StepOutcome { err, h_next: h / fac }
    }
}
