//! Modified Prüfer variables.
//!
//! For large `|rho|` the solution `s(x, rho)` with `s(0) = 0`, `s^[1](0) = 1`
//! is written as `rho s = r sin(theta)`, `s^[1] = r cos(theta)`, where the
//! phase solves
//!
//! ```text
//! theta(x) = rho x + int_0^x u sin(2 theta) + (1/2rho) int_0^x u^2 (1 - cos(2 theta))
//! ```
//!
//! and the amplitude is `r = exp{-int_0^x u cos(2 theta) + (u^2/2rho) sin(2 theta)}`.
//! The phase equation is solved by Picard iteration, which is only attempted
//! where the smallness functional guarantees a contraction.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::potential::{Potential, StripParams};
use crate::quadrature::Grid;
use crate::quasiode::SolutionTrace;
use crate::scalar::{Cx, Real};

const MAX_ITERATIONS: usize = 200;
const NODES_PER_CELL: usize = 12;
/// Cell length times `|rho|`.
const CELL_PHASE: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct PrueferField<T> {
    pub rho: Cx<T>,
    pub grid: Grid<T>,
    pub theta: Vec<Cx<T>>,
    pub f_pert: Vec<Cx<T>>,
    /// Filled by [`amplitude`].
    pub r_amp: Option<Vec<Cx<T>>>,
    pub upsilon: T,
    pub iterations: usize,
}

impl<T: Real> PrueferField<T> {
    pub fn sup_perturbation(&self) -> T {
        self.f_pert.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Observed `sup |f(x, rho)| / Upsilon(rho)`.
    pub fn bound_ratio(&self) -> T {
        if self.upsilon > T::zero() {
            self.sup_perturbation() / self.upsilon
        } else {
            T::zero()
        }
    }
}

/// Quadrature grid resolving oscillations at frequency `2|rho|` and the
/// breakpoints and trigonometric content of `p`.
pub fn phase_grid<T: Real>(p: &Potential<T>, rho: Cx<T>) -> Grid<T> {
    let freq = rho.norm().max(T::from_index(p.trig_part().degree())).max(T::one());
    let cells = (T::PI() * freq / T::lit(CELL_PHASE)).ceil().to_usize().unwrap_or(1).max(8);
    Grid::with_breaks(&p.breakpoints(), cells, NODES_PER_CELL)
}

fn sample_u<T: Real>(p: &Potential<T>, grid: &Grid<T>) -> Vec<Cx<T>> {
    grid.points().iter().map(|&x| p.eval(x).unwrap_or_default()).collect()
}

fn check_strip<T: Real>(rho: Cx<T>, sp: &StripParams<T>) -> Result<()> {
    if rho.norm() == T::zero() {
        return Err(Error::SingularArgument);
    }
    if rho.im.abs() > sp.nu {
        return Err(Error::Argument(format!(
            "|Im rho| = {} exceeds the strip half-width {}",
            rho.im.abs(),
            sp.nu
        )));
    }
    Ok(())
}

fn upsilon_on<T: Real>(u: &[Cx<T>], grid: &Grid<T>, rho: Cx<T>, sp: &StripParams<T>) -> T {
    let two = T::lit(2.0);
    let us: Vec<Cx<T>> = grid.points().iter().zip(u).map(|(&x, v)| v * (rho * two * x).sin()).collect();
    let uc: Vec<Cx<T>> = grid.points().iter().zip(u).map(|(&x, v)| v * (rho * two * x).cos()).collect();
    let s = grid.cumulative(&us);
    let c = grid.cumulative(&uc);
    let window = s
        .iter()
        .zip(&c)
        .fold(T::zero(), |m, (a, b)| m.max(a.norm() + b.norm()));
    let r = sp.ball_radius;
    let k = sp.kappa;
    window + r * r * (T::one() + k + r * k * k) / (two * rho.norm())
}

/// `Upsilon(rho)`: the larger of the windowed sine/cosine transforms of `u`
/// over `x`, plus the ball term `R^2 (1 + kappa + R kappa^2) / (2|rho|)`.
pub fn upsilon<T: Real>(p: &Potential<T>, rho: Cx<T>, sp: &StripParams<T>) -> Result<T> {
    check_strip(rho, sp)?;
    let grid = phase_grid(p, rho);
    let u = sample_u(p, &grid);
    Ok(upsilon_on(&u, &grid, rho, sp))
}

/// Right-hand side of the contraction condition, `2^-7 (1 + 64 R^2 kappa^2)^-2`.
pub fn contraction_threshold<T: Real>(sp: &StripParams<T>) -> T {
    let rk = sp.ball_radius * sp.kappa;
    let d = T::one() + T::lit(64.0) * rk * rk;
    T::lit(1.0 / 128.0) / (d * d)
}

pub fn condition_holds<T: Real>(p: &Potential<T>, rho: Cx<T>, sp: &StripParams<T>) -> Result<bool> {
    Ok(upsilon(p, rho, sp)? < contraction_threshold(sp))
}

fn phase_map<T: Real>(u: &[Cx<T>], grid: &Grid<T>, rho: Cx<T>, theta: &[Cx<T>]) -> Vec<Cx<T>> {
    let two = T::lit(2.0);
    let inv = (rho * two).inv();
    let integrand: Vec<Cx<T>> = u
        .iter()
        .zip(theta)
        .map(|(v, t)| {
            let (s, c) = ((t * two).sin(), (t * two).cos());
            v * s + v * v * inv * (Complex::new(T::one(), T::zero()) - c)
        })
        .collect();
    let cum = grid.cumulative(&integrand);
    grid.points().iter().zip(cum).map(|(&x, c)| rho * x + c).collect()
}

/// Solves the phase equation by Picard iteration from `theta = rho x`,
/// refusing when the contraction condition fails.
pub fn solve_phase<T: Real>(p: &Potential<T>, rho: Cx<T>, sp: &StripParams<T>) -> Result<PrueferField<T>> {
    check_strip(rho, sp)?;
    let grid = phase_grid(p, rho);
    let u = sample_u(p, &grid);
    let ups = upsilon_on(&u, &grid, rho, sp);
    let threshold = contraction_threshold(sp);
    if !(ups < threshold) {
        return Err(Error::ConditionNotSatisfied {
            upsilon: ups.as_f64(),
            threshold: threshold.as_f64(),
        });
    }
    picard(grid, &u, rho, ups)
}

/// Picard iteration without the contraction check; fails only if the
/// iteration does not settle.
pub fn iterate_phase<T: Real>(p: &Potential<T>, rho: Cx<T>, sp: &StripParams<T>) -> Result<PrueferField<T>> {
    check_strip(rho, sp)?;
    let grid = phase_grid(p, rho);
    let u = sample_u(p, &grid);
    let ups = upsilon_on(&u, &grid, rho, sp);
    picard(grid, &u, rho, ups)
}

fn picard<T: Real>(grid: Grid<T>, u: &[Cx<T>], rho: Cx<T>, ups: T) -> Result<PrueferField<T>> {
    let tol = T::tol(1e-12);
    let mut theta: Vec<Cx<T>> = grid.points().iter().map(|&x| rho * x).collect();
    let mut change = T::infinity();
    for it in 1..=MAX_ITERATIONS {
        let next = phase_map(u, &grid, rho, &theta);
        change = next
            .iter()
            .zip(&theta)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()));
        theta = next;
        if !change.is_finite() {
            break;
        }
        if change < tol {
            let f_pert = grid.points().iter().zip(&theta).map(|(&x, t)| t - rho * x).collect();
            return Ok(PrueferField {
                rho,
                grid,
                theta,
                f_pert,
                r_amp: None,
                upsilon: ups,
                iterations: it,
            });
        }
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        change: change.as_f64(),
    })
}

/// Fills the amplitude `r(x, rho)` from the solved phase.
pub fn amplitude<T: Real>(field: &PrueferField<T>, p: &Potential<T>) -> PrueferField<T> {
    let u = sample_u(p, &field.grid);
    let two = T::lit(2.0);
    let inv = (field.rho * two).inv();
    let integrand: Vec<Cx<T>> = u
        .iter()
        .zip(&field.theta)
        .map(|(v, t)| v * (t * two).cos() + v * v * inv * (t * two).sin())
        .collect();
    let cum = field.grid.cumulative(&integrand);
    let mut out = field.clone();
    out.r_amp = Some(cum.into_iter().map(|c| (-c).exp()).collect());
    out
}

/// Solution trace `y = r sin(theta)/rho`, `y^[1] = r cos(theta)` at
/// `lambda = rho^2`. The amplitude is computed if missing.
pub fn reconstruct<T: Real>(field: &PrueferField<T>, p: &Potential<T>) -> SolutionTrace<T> {
    let filled;
    let f = if field.r_amp.is_some() {
        field
    } else {
        filled = amplitude(field, p);
        &filled
    };
    let r = f.r_amp.as_ref().expect("amplitude filled");
    let rho = f.rho;
    SolutionTrace {
        lambda: rho * rho,
        x: f.grid.points().to_vec(),
        y: r.iter().zip(&f.theta).map(|(a, t)| a * t.sin() / rho).collect(),
        y1: r.iter().zip(&f.theta).map(|(a, t)| a * t.cos()).collect(),
        log_scale: T::zero(),
    }
}

/// Sup-norm distance between the solved phase and one more application of
/// the fixed-point map.
pub fn fixed_point_residual<T: Real>(field: &PrueferField<T>, p: &Potential<T>) -> T {
    let u = sample_u(p, &field.grid);
    let next = phase_map(&u, &field.grid, field.rho, &field.theta);
    next.iter()
        .zip(&field.theta)
        .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
}
