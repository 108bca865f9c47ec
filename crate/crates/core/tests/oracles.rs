use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex;
use quasispec::eigensystem::{basis, default_grid};
use quasispec::potential::{Potential, StripParams};
use quasispec::pruefer::{condition_holds, reconstruct, solve_phase};
use quasispec::quasiode::{char_function, integrate, OdeOptions};
use quasispec::spectrum::{count_in_circle, count_in_disk, localize, multiplicity_at, SpectrumOptions};
use quasispec::Error;

type C64 = Complex<f64>;

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

fn strip() -> StripParams<f64> {
    StripParams::new(1.0, 1.0, 0.25).unwrap()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if f(lo) * f(m) <= 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    0.5 * (lo + hi)
}

fn real_roots(f: impl Fn(f64) -> f64 + Copy, count: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let h = 1e-3;
    let mut a = h;
    while out.len() < count {
        let b = a + h;
        if f(a) == 0.0 {
            out.push(a);
        } else if f(a) * f(b) < 0.0 {
            out.push(bisect(f, a, b));
        }
        a = b;
    }
    out
}

#[test]
fn delta_step_matches_transcendental_roots() {
    let p = Potential::step(FRAC_PI_2, c(3.0)).unwrap();
    let d = localize(&p, 15, &strip(), &SpectrumOptions::default()).unwrap();
    let roots = real_roots(|r| (r * PI).sin() + 3.0 / r * (r * PI / 2.0).sin().powi(2), 15);
    for (x, r) in d.iter().zip(&roots) {
        assert!((x.lambda - c(r * r)).norm() < 1e-9, "n = {}: {} vs {}", x.n, x.lambda, r * r);
        assert_eq!(x.multiplicity, 1);
    }
}

#[test]
fn delta_step_contour_through_an_eigenvalue_is_rejected() {
    // rho = 3/2 solves sin(rho pi) + (3/rho) sin^2(rho pi / 2) = 0 exactly
    let p = Potential::step(FRAC_PI_2, c(3.0)).unwrap();
    let o = SpectrumOptions::default();
    let w = char_function(&p, c(2.25), &o.ode).unwrap();
    assert!(w.norm() < 1e-12);
    assert!(matches!(count_in_disk(&p, 2.25, &o), Err(Error::ContourTooClose { .. })));
    assert_eq!(count_in_disk(&p, 2.2, &o).unwrap(), 0);
    assert_eq!(count_in_disk(&p, 2.3, &o).unwrap(), 1);
}

#[test]
fn delta_step_eigenfunctions_match_two_segment_solution() {
    let p = Potential::step(FRAC_PI_2, c(3.0)).unwrap();
    let o = SpectrumOptions::default();
    let d = localize(&p, 6, &strip(), &o).unwrap();
    let b = basis(&p, &d, default_grid(&p), &o.ode).unwrap();
    let a = FRAC_PI_2;
    for f in &b.functions {
        let r = f.datum.rho.re;
        // y = sin(r x) left of a; the jump of y' is 3 y(a)
        let ya = (r * a).sin();
        let da = r * (r * a).cos() + 3.0 * ya;
        let (s, k) = ((r * a).sin(), (r * a).cos());
        let (ca, cb) = (ya * s + da / r * k, ya * k - da / r * s);
        let raw = b.grid.sample(|x| c(if x < a { (r * x).sin() } else { ca * (r * x).sin() + cb * (r * x).cos() }));
        let n = f.datum.n as f64;
        let sine = b.grid.sample(|x| c((n * x).sin()));
        let proj = b.grid.inner(&raw, &sine);
        let scale = proj.norm() / proj / b.grid.norm_l2(&raw);
        let err = raw
            .iter()
            .zip(&f.y)
            .map(|(o, y)| (o * scale - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "n = {n}: {err:e}");
    }
}

#[test]
fn linear_potential_shifts_by_its_slope() {
    // q = u' = 2: eigenvalues n^2 + 2, eigenfunctions the sines
    let p = Potential::linear(c(2.0));
    let o = SpectrumOptions::default();
    let d = localize(&p, 12, &strip(), &o).unwrap();
    for x in &d {
        assert!((x.lambda - c((x.n * x.n) as f64 + 2.0)).norm() < 1e-9);
    }
    let b = basis(&p, &d, default_grid(&p), &o.ode).unwrap();
    let k = (2.0 / PI).sqrt();
    for f in &b.functions {
        let n = f.datum.n as f64;
        for (i, &x) in b.grid.points().iter().enumerate() {
            assert!((f.y[i] - c(k * (n * x).sin())).norm() < 1e-8);
        }
    }
}

/// Step height giving a double eigenvalue: with z = rho pi solving
/// sin z = z, both omega and its derivative vanish.
fn double_root() -> (C64, C64) {
    let mut z = Complex::new(7.5, 2.77);
    for _ in 0..60 {
        z -= (z.sin() - z) / (z.cos() - 1.0);
    }
    let r = z / PI;
    let h = -r * 2.0 * (r * FRAC_PI_2).cos() / (r * FRAC_PI_2).sin();
    (h, r * r)
}

#[test]
fn engineered_double_eigenvalue() {
    let (h, lam) = double_root();
    let p = Potential::step(FRAC_PI_2, h).unwrap();
    let o = SpectrumOptions::default();
    let d = localize(&p, 6, &strip(), &o).unwrap();
    let hits: Vec<_> = d.iter().filter(|x| (x.lambda - lam).norm() < 1e-8 * lam.norm()).collect();
    assert_eq!(hits.len(), 2, "{d:?}");
    assert!(hits.iter().all(|x| x.multiplicity == 2));
    assert_eq!(hits[1].n, hits[0].n + 1);
    assert_eq!(multiplicity_at(&p, lam, &o).unwrap(), 2);

    // a small change of the height splits it into two simple roots, about
    // sqrt(delta) apart and centred within O(delta)
    let delta = 1e-4;
    let q = Potential::step(FRAC_PI_2, h + c(delta)).unwrap();
    assert_eq!(count_in_circle(&q, lam, 0.05, &o).unwrap(), 2);
    let e = localize(&q, 6, &strip(), &o).unwrap();
    let near: Vec<C64> = e.iter().filter(|x| (x.lambda - lam).norm() < 0.05).map(|x| x.lambda).collect();
    assert_eq!(near.len(), 2);
    assert!(e.iter().all(|x| x.multiplicity == 1));
    let gap = (near[0] - near[1]).norm();
    assert!(gap > 1e-3 && gap < 0.1, "gap {gap}");
    assert!(((near[0] + near[1]) * 0.5 - lam).norm() < 20.0 * delta);
}

#[test]
fn complex_step_localizes_at_every_truncation() {
    let p = Potential::step(1.3, Complex::new(2.0, 0.5)).unwrap();
    let o = SpectrumOptions::default();
    let full = localize(&p, 12, &strip(), &o).unwrap();
    for n in [1, 5, 8, 9] {
        let d = localize(&p, n, &strip(), &o).unwrap();
        assert_eq!(d.len(), n);
        for (a, b) in d.iter().zip(&full) {
            assert!((a.lambda - b.lambda).norm() < 1e-9 * b.lambda.norm().max(1.0));
        }
    }
}

#[test]
fn pruefer_reconstruction_matches_direct_integration() {
    let p = Potential::trig(vec![c(0.0), Complex::new(0.01, 0.005)], vec![c(0.004)]).unwrap();
    let sp = StripParams::new(0.0, 0.02, 0.25).unwrap();
    for r in [40.0, 80.0] {
        let rho = c(r);
        assert!(condition_holds(&p, rho, &sp).unwrap());
        let field = solve_phase(&p, rho, &sp).unwrap();
        let tr = reconstruct(&field, &p);
        let direct = integrate(&p, rho * rho, (c(0.0), c(1.0)), 0.0, PI, None, &tr.x, &OdeOptions::default()).unwrap();
        for (a, b) in tr.y.iter().zip(&direct.y) {
            assert!((a - b).norm() < 1e-8);
        }
    }
}
