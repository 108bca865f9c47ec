//! Quasi-derivative form of `-y'' + q y = lambda y` with `q = u'`.
//!
//! With `y1 = y' - u y` the equation becomes the first-order system
//! `y' = u y + y1`, `y1' = -(lambda + u^2) y - u y1`, whose coefficients are
//! integrable even when `q` contains delta functions. Piecewise constant
//! segments are crossed with the exact transfer matrix, everything else with
//! an adaptive eighth-order Runge–Kutta method.

mod dop853;
mod propagate;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::Grid;
use crate::scalar::{cone, czero, Cx, Real};
use propagate::{zero_state, System};

/// Largest log-scale folded back into stored samples.
const FOLD_LIMIT: f64 = 600.0;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions<T> {
    /// Relative local error tolerance of the Runge–Kutta steps.
    pub rtol: T,
    pub max_steps: usize,
    /// Use exact transfer matrices on piecewise constant segments.
    pub exact_constant: bool,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::tol(1e-12),
            max_steps: 5_000_000,
            exact_constant: true,
        }
    }
}

/// A value `mantissa * exp(log_scale)`; used where solutions may exceed the
/// floating point range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled<T> {
    pub mantissa: Cx<T>,
    pub log_scale: T,
}

impl<T: Real> Scaled<T> {
    pub fn value(&self) -> Cx<T> {
        self.mantissa * self.log_scale.exp()
    }

    pub fn ln_norm(&self) -> T {
        self.mantissa.norm().ln() + self.log_scale
    }
}

/// Samples of a solution `(y, y^[1])` of the quasi-derivative system.
#[derive(Clone, Debug)]
pub struct SolutionTrace<T> {
    pub lambda: Cx<T>,
    pub x: Vec<T>,
    pub y: Vec<Cx<T>>,
    pub y1: Vec<Cx<T>>,
    /// Stored samples are to be multiplied by `exp(log_scale)`; zero unless
    /// the solution leaves the floating point range.
    pub log_scale: T,
}

impl<T: Real> SolutionTrace<T> {
    /// CSV rows `x, Re y, Im y, Re y1, Im y1`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,re_y,im_y,re_y1,im_y1\n");
        for i in 0..self.x.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.x[i], self.y[i].re, self.y[i].im, self.y1[i].re, self.y1[i].im
            ));
        }
        s
    }
}

/// Solutions of the root-chain hierarchy `l(w_j) = lambda0 w_j + w_{j-1}`.
#[derive(Clone, Debug)]
pub struct ChainTrace<T> {
    pub lambda0: Cx<T>,
    pub traces: Vec<SolutionTrace<T>>,
}

impl<T: Real> ChainTrace<T> {
    pub fn order(&self) -> usize {
        self.traces.len() - 1
    }
}

/// Grid used for sampled eigenfunctions: composite Gauss cells whose edges
/// include the breakpoints of `p`.
pub fn solution_grid<T: Real>(p: &Potential<T>, cells: usize, nodes: usize) -> Grid<T> {
    Grid::with_breaks(&p.breakpoints(), cells, nodes)
}

fn check_interval<T: Real>(x: T) -> Result<()> {
    if !(x >= T::zero() && x <= T::PI()) {
        return Err(Error::Domain { x: x.as_f64() });
    }
    Ok(())
}

/// Sampled states, their common log-scale, the end state and its log-scale.
type BlockRun<T> = (Vec<Vec<Cx<T>>>, T, Vec<Cx<T>>, T);

#[allow(clippy::too_many_arguments)]
fn run_blocks<T: Real>(
    p: &Potential<T>,
    lambda: Cx<T>,
    order: usize,
    init: &[Cx<T>],
    from: T,
    to: T,
    forcing: Option<&(dyn Fn(T) -> Cx<T> + Sync)>,
    samples: &[T],
    opts: &OdeOptions<T>,
) -> Result<BlockRun<T>> {
    check_interval(from)?;
    check_interval(to)?;
    for &s in samples {
        check_interval(s)?;
        let lo = from.min(to);
        let hi = from.max(to);
        if s < lo || s > hi {
            return Err(Error::Argument(format!("sample point {s} outside the integration interval")));
        }
    }
    if samples.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Argument("sample points must be nondecreasing".into()));
    }
    let sys = System {
        potential: p,
        lambda,
        order,
        forcing,
        rtol: opts.rtol,
        max_steps: opts.max_steps,
        exact_constant: opts.exact_constant,
    };
    let forward = to >= from;
    let ordered: Vec<T> = if forward {
        samples.to_vec()
    } else {
        samples.iter().rev().copied().collect()
    };
    let prop = sys.run(init, from, to, &ordered)?;
    let mut outs = prop.outputs;
    let mut logs = prop.output_logs;
    if !forward {
        outs.reverse();
        logs.reverse();
    }
    let top = logs.iter().fold(T::zero(), |m, &l| m.max(l));
    let common = if top <= T::lit(FOLD_LIMIT) { T::zero() } else { top };
    for (s, l) in outs.iter_mut().zip(&logs) {
        let f = (*l - common).exp();
        if f != T::one() {
            s.iter_mut().for_each(|v| *v *= f);
        }
    }
    Ok((outs, common, prop.state, prop.log_scale))
}

/// Solves the system with `(y, y^[1])(from) = init`, sampled at `samples`
/// (ascending, inside the integration interval). `forcing` adds `-f` to the
/// quasi-derivative equation, i.e. solves `l(y) = lambda y + f`.
#[allow(clippy::too_many_arguments)]
pub fn integrate<T: Real>(
    p: &Potential<T>,
    lambda: Cx<T>,
    init: (Cx<T>, Cx<T>),
    from: T,
    to: T,
    forcing: Option<&(dyn Fn(T) -> Cx<T> + Sync)>,
    samples: &[T],
    opts: &OdeOptions<T>,
) -> Result<SolutionTrace<T>> {
    let (outs, log_scale, _, _) = run_blocks(p, lambda, 0, &[init.0, init.1], from, to, forcing, samples, opts)?;
    Ok(SolutionTrace {
        lambda,
        x: samples.to_vec(),
        y: outs.iter().map(|s| s[0]).collect(),
        y1: outs.iter().map(|s| s[1]).collect(),
        log_scale,
    })
}

/// End state `(y(to), y^[1](to))` of the homogeneous system with scaling.
pub fn shoot<T: Real>(
    p: &Potential<T>,
    lambda: Cx<T>,
    init: (Cx<T>, Cx<T>),
    from: T,
    to: T,
    opts: &OdeOptions<T>,
) -> Result<(Scaled<T>, Scaled<T>)> {
    let (_, _, state, log_scale) = run_blocks(p, lambda, 0, &[init.0, init.1], from, to, None, &[], opts)?;
    Ok((
        Scaled {
            mantissa: state[0],
            log_scale,
        },
        Scaled {
            mantissa: state[1],
            log_scale,
        },
    ))
}

/// `omega(pi, lambda)` in scaled form.
pub fn char_function_scaled<T: Real>(p: &Potential<T>, lambda: Cx<T>, opts: &OdeOptions<T>) -> Result<Scaled<T>> {
    Ok(shoot(p, lambda, (czero(), cone()), T::zero(), T::PI(), opts)?.0)
}

/// `omega(pi, lambda)`, the characteristic function whose zeros are the
/// Dirichlet eigenvalues.
pub fn char_function<T: Real>(p: &Potential<T>, lambda: Cx<T>, opts: &OdeOptions<T>) -> Result<Cx<T>> {
    Ok(char_function_scaled(p, lambda, opts)?.value())
}

/// Taylor coefficients `(1/j!) d^j/dlambda^j omega(pi, lambda0)` for
/// `j = 0..=order`, sharing the returned log-scale.
pub fn char_jet<T: Real>(
    p: &Potential<T>,
    lambda0: Cx<T>,
    order: usize,
    opts: &OdeOptions<T>,
) -> Result<(Vec<Cx<T>>, T)> {
    let mut init = zero_state(order);
    init[1] = cone();
    let (_, _, state, log_scale) = run_blocks(p, lambda0, order, &init, T::zero(), T::PI(), None, &[], opts)?;
    Ok(((0..=order).map(|j| state[2 * j]).collect(), log_scale))
}

/// The chain `omega, omega_lambda, ..., omega_lambda^(up_to)` (normalized
/// Taylor coefficients) sampled at `samples`.
pub fn char_chain<T: Real>(
    p: &Potential<T>,
    lambda0: Cx<T>,
    up_to: usize,
    samples: &[T],
    opts: &OdeOptions<T>,
) -> Result<ChainTrace<T>> {
    let mut init = zero_state(up_to);
    init[1] = cone();
    let (outs, log_scale, _, _) = run_blocks(p, lambda0, up_to, &init, T::zero(), T::PI(), None, samples, opts)?;
    let traces = (0..=up_to)
        .map(|j| SolutionTrace {
            lambda: lambda0,
            x: samples.to_vec(),
            y: outs.iter().map(|s| s[2 * j]).collect(),
            y1: outs.iter().map(|s| s[2 * j + 1]).collect(),
            log_scale,
        })
        .collect();
    Ok(ChainTrace { lambda0, traces })
}

/// Modified Wronskian `v y1_w - w y1_v` at every sample.
pub fn wronskian<T: Real>(v: &SolutionTrace<T>, w: &SolutionTrace<T>) -> Vec<Cx<T>> {
    (0..v.x.len()).map(|i| v.y[i] * w.y1[i] - w.y[i] * v.y1[i]).collect()
}

/// A function in the operator domain together with its quasi-derivative and
/// its image `l(f) = -(f^[1])' - u f^[1] - u^2 f`, sampled on a grid.
#[derive(Clone, Debug)]
pub struct DomainFunction<T> {
    pub values: Vec<Cx<T>>,
    pub quasi: Vec<Cx<T>>,
    pub image: Vec<Cx<T>>,
}

impl<T: Real> DomainFunction<T> {
    /// Builds quasi-derivative and image of a smooth sampled function by
    /// spectral differentiation inside each cell.
    pub fn from_samples(grid: &Grid<T>, p: &Potential<T>, values: Vec<Cx<T>>) -> Self {
        let u: Vec<Cx<T>> = grid.points().iter().map(|&x| p.eval(x).unwrap_or_default()).collect();
        let d = grid.derivative(&values);
        let quasi: Vec<Cx<T>> = (0..values.len()).map(|i| d[i] - u[i] * values[i]).collect();
        let dq = grid.derivative(&quasi);
        let image = (0..values.len())
            .map(|i| -dq[i] - u[i] * quasi[i] - u[i] * u[i] * values[i])
            .collect();
        Self { values, quasi, image }
    }

    /// A solution of `l(f) = lambda f + h` whose trace is given.
    pub fn from_solution(trace: &SolutionTrace<T>, h: Option<&[Cx<T>]>) -> Self {
        let scale = trace.log_scale.exp();
        let values: Vec<Cx<T>> = trace.y.iter().map(|v| v * scale).collect();
        let quasi: Vec<Cx<T>> = trace.y1.iter().map(|v| v * scale).collect();
        let image = (0..values.len())
            .map(|i| trace.lambda * values[i] + h.map(|h| h[i]).unwrap_or_default())
            .collect();
        Self { values, quasi, image }
    }
}

/// `|(L f, g) - (f, conj(L) g)|` where `g` belongs to the domain of the
/// operator with the conjugate potential.
pub fn lagrange_defect<T: Real>(grid: &Grid<T>, f: &DomainFunction<T>, g: &DomainFunction<T>) -> T {
    let lhs = grid.inner(&f.image, &g.values);
    let rhs = grid.inner(&f.values, &g.image);
    (lhs - rhs).norm()
}

/// Free characteristic function `sin(rho pi)/rho`, entire in `lambda`.
pub fn free_char_function<T: Real>(lambda: Cx<T>) -> Cx<T> {
    let lam = crate::jet::Jet::constant(lambda, 0);
    let (_, s) = crate::jet::cos_sinc_jets(&lam, T::PI());
    s.value()
}
