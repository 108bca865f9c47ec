//! Segment-by-segment propagation of the block system
//!
//! ```text
//! y_j'  = u y_j + y1_j
//! y1_j' = -(lambda + u^2) y_j - u y1_j - y_{j-1}      (y_{-1} = f)
//! ```
//!
//! Block `j` is the `j`-th Taylor coefficient in `lambda` of the solution,
//! so block 0 alone is the plain quasi-derivative system.

use num_complex::Complex;

use super::dop853::Dop853;
use crate::error::{Error, Result};
use crate::jet::{cos_sinc_jets, Jet};
use crate::potential::Potential;
use crate::scalar::{czero, principal_sqrt, Cx, Real};

/// Magnitudes outside `[1/RESCALE, RESCALE]` trigger renormalization.
const RESCALE: f64 = 1e60;

pub(crate) struct Propagated<T> {
    pub outputs: Vec<Vec<Cx<T>>>,
    pub output_logs: Vec<T>,
    pub state: Vec<Cx<T>>,
    pub log_scale: T,
}

pub(crate) struct System<'a, T> {
    pub potential: &'a Potential<T>,
    pub lambda: Cx<T>,
    pub order: usize,
    pub forcing: Option<&'a (dyn Fn(T) -> Cx<T> + Sync)>,
    pub rtol: T,
    pub max_steps: usize,
    pub exact_constant: bool,
}

impl<'a, T: Real> System<'a, T> {
    fn dim(&self) -> usize {
        2 * (self.order + 1)
    }

    /// Integrates from `from` to `to`, recording the state at `outputs`,
    /// which must be ordered in the direction of integration.
    pub fn run(&self, init: &[Cx<T>], from: T, to: T, outputs: &[T]) -> Result<Propagated<T>> {
        assert_eq!(init.len(), self.dim());
        let forward = to >= from;
        let within = |t: T| if forward { t > from && t < to } else { t < from && t > to };
        let mut cuts: Vec<T> = self
            .potential
            .segments()
            .iter()
            .skip(1)
            .map(|s| s.a)
            .filter(|&a| within(a))
            .collect();
        if !forward {
            cuts.reverse();
        }
        // merge cuts, outputs and the end point into one ordered stop list
        let mut stops: Vec<(T, Option<usize>)> = Vec::with_capacity(cuts.len() + outputs.len() + 1);
        let (mut ci, mut oi) = (0, 0);
        let before = |a: T, b: T| if forward { a <= b } else { a >= b };
        while ci < cuts.len() || oi < outputs.len() {
            if oi < outputs.len() && (ci >= cuts.len() || before(outputs[oi], cuts[ci])) {
                stops.push((outputs[oi], Some(oi)));
                oi += 1;
            } else {
                stops.push((cuts[ci], None));
                ci += 1;
            }
        }
        stops.push((to, None));

        let mut state = init.to_vec();
        let mut log_scale = T::zero();
        let mut out_states = vec![Vec::new(); outputs.len()];
        let mut out_logs = vec![T::zero(); outputs.len()];
        let rho = principal_sqrt(self.lambda);
        let sc = T::one().max(rho.norm());
        let dir = if forward { T::one() } else { -T::one() };
        let mut h_nat = dir * (to - from).abs().min(T::lit(0.25) / sc).max(T::epsilon());
        let mut steps = 0usize;
        let mut stepper = Dop853::new(self.dim());
        let mut x = from;
        for (t, slot) in stops {
            if t != x {
                let mid = (x + t) * T::lit(0.5);
                let seg = self.potential.segment_index(mid);
                let constant = self.exact_constant
                    && self.forcing.is_none()
                    && self.potential.trig_part().is_empty()
                    && self.potential.segments()[seg].is_constant();
                if constant {
                    let u = self.potential.segments()[seg].coeffs[0];
                    self.advance_constant(u, rho, x, t, &mut state, &mut log_scale);
                } else {
                    self.advance_rk(
                        &mut stepper,
                        seg,
                        sc,
                        x,
                        t,
                        &mut state,
                        &mut log_scale,
                        &mut h_nat,
                        &mut steps,
                    )?;
                }
                x = t;
            }
            if let Some(k) = slot {
                out_states[k] = state.clone();
                out_logs[k] = log_scale;
            }
        }
        Ok(Propagated {
            outputs: out_states,
            output_logs: out_logs,
            state,
            log_scale,
        })
    }

    fn renormalize(&self, state: &mut [Cx<T>], log_scale: &mut T) {
        if self.forcing.is_some() {
            return;
        }
        let m = state.iter().fold(T::zero(), |m, v| m.max(v.norm()));
        let big = T::lit(RESCALE);
        if m > big || (m > T::zero() && m < T::one() / big) {
            let inv = T::one() / m;
            state.iter_mut().for_each(|v| *v *= inv);
            *log_scale += m.ln();
        }
    }

    /// Exact transfer `exp(A h) = cos(rho h) I + sin(rho h)/rho A` over a
    /// segment where `u` is constant, carried out on jets in `lambda`.
    fn advance_constant(&self, u: Cx<T>, rho: Cx<T>, from: T, to: T, state: &mut [Cx<T>], log_scale: &mut T) {
        let order = self.order;
        let total = to - from;
        // keep |Im rho| h moderate so cos/sin stay representable
        let growth = rho.im.abs() * total.abs();
        let pieces = (growth / T::lit(200.0)).ceil().to_usize().unwrap_or(1).max(1);
        let h = total / T::from_index(pieces);
        let lam = Jet::variable(self.lambda, order);
        let (c, s) = cos_sinc_jets(&lam, h);
        let uj = Jet::constant(u, order);
        let u2 = Jet::constant(u * u, order);
        for _ in 0..pieces {
            let y = Jet::from_coeffs((0..=order).map(|j| state[2 * j]).collect());
            let y1 = Jet::from_coeffs((0..=order).map(|j| state[2 * j + 1]).collect());
            let ay = uj.mul(&y).add(&y1);
            let ay1 = lam.add(&u2).mul(&y).scale(-Complex::new(T::one(), T::zero())).sub(&uj.mul(&y1));
            let ny = c.mul(&y).add(&s.mul(&ay));
            let ny1 = c.mul(&y1).add(&s.mul(&ay1));
            for j in 0..=order {
                state[2 * j] = ny.coeffs()[j];
                state[2 * j + 1] = ny1.coeffs()[j];
            }
            self.renormalize(state, log_scale);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn advance_rk(
        &self,
        stepper: &mut Dop853<T>,
        seg: usize,
        sc: T,
        from: T,
        to: T,
        state: &mut [Cx<T>],
        log_scale: &mut T,
        h_nat: &mut T,
        steps: &mut usize,
    ) -> Result<()> {
        let p = self.potential;
        let lambda = self.lambda;
        let order = self.order;
        let forcing = self.forcing;
        let rhs = |x: T, s: &[Cx<T>], out: &mut [Cx<T>]| {
            let u = p.eval_in(seg, x);
            let lu = lambda + u * u;
            for j in 0..=order {
                let (y, y1) = (s[2 * j], s[2 * j + 1]);
                out[2 * j] = u * y + y1;
                let mut d = -(lu * y) - u * y1;
                if j > 0 {
                    d -= s[2 * j - 2];
                } else if let Some(f) = forcing {
                    d -= f(x);
                }
                out[2 * j + 1] = d;
            }
        };
        let rtol = self.rtol;
        let atol = if forcing.is_some() { rtol * T::lit(1e-6) } else { T::min_positive_value() };
        let scale = |a: &[Cx<T>], b: &[Cx<T>], sk: &mut [T]| {
            let amp = |s: &[Cx<T>], j: usize| (s[2 * j].norm() * sc).max(s[2 * j + 1].norm());
            let floor = T::lit(1e-8) * amp(a, 0).max(amp(b, 0));
            for j in 0..=order {
                let aj = amp(a, j).max(amp(b, j)).max(floor);
                let w = rtol * aj + atol;
                sk[2 * j] = w / sc;
                sk[2 * j + 1] = w;
            }
        };
        let forward = to > from;
        let mut x = from;
        loop {
            let remaining = to - x;
            if remaining == T::zero() || (forward && remaining < T::zero()) || (!forward && remaining > T::zero()) {
                return Ok(());
            }
            let mut h = *h_nat;
            let mut last = false;
            if h.abs() >= remaining.abs() * (T::one() - T::lit(1e-12)) {
                h = remaining;
                last = true;
            }
            let min_h = T::lit(1e-13) * T::one().max(x.abs());
            if h.abs() < min_h && !last {
                return Err(self.failure(x, "step size underflow"));
            }
            let out = stepper.step(&rhs, &scale, x, state, h);
            *steps += 1;
            if *steps > self.max_steps {
                return Err(self.failure(x, "step budget exhausted"));
            }
            if out.err <= T::one() {
                state.copy_from_slice(&stepper.y_new);
                if state.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(self.failure(x, "non-finite state"));
                }
                self.renormalize(state, log_scale);
                if last {
                    if out.h_next.abs() > h_nat.abs() {
                        *h_nat = out.h_next;
                    }
                    return Ok(());
                }
                x += h;
                *h_nat = out.h_next;
            } else {
                *h_nat = out.h_next;
                if !out.err.is_finite() {
                    *h_nat = h * T::lit(0.1);
                }
            }
        }
    }

    fn failure(&self, x: T, reason: &str) -> Error {
        Error::IntegrationFailure {
            at: x.as_f64(),
            lambda_re: self.lambda.re.as_f64(),
            lambda_im: self.lambda.im.as_f64(),
            reason: reason.to_string(),
        }
    }
}

pub(crate) fn zero_state<T: Real>(order: usize) -> Vec<Cx<T>> {
    vec![czero(); 2 * (order + 1)]
}
