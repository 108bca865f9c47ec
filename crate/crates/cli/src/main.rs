use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use num_complex::Complex;
use quasispec::eigensystem::{basis, efas_report, weak_residual, DEFAULT_NODES};
use quasispec::potential::{Potential, StripParams};
use quasispec::projector::{continuity_experiment, resolvent_experiment};
use quasispec::quasiode::solution_grid;
use quasispec::spectrum::{self, ball_sweep, localize, remainders, SpectrumOptions, NORM_CONVENTION};
use quasispec::{Error, ErrorClass};
use serde::Serialize;
use serde_json::json;

mod report;

use report::{Meta, Report, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Solve,
    Asymptotics,
    Basis,
    Projector,
    Sweep,
    Resolvent,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Asymptotics => "asymptotics",
            Command::Basis => "basis",
            Command::Projector => "projector",
            Command::Sweep => "sweep",
            Command::Resolvent => "resolvent",
        }
    }
}

/// Spectra, eigenfunction bases and projector experiments for Dirichlet
/// problems with singular potentials q = u' on [0, pi].
#[derive(Debug, Parser)]
#[command(name = "quasispec", version)]
struct RunConfig {
    /// Potential description (JSON); not used by `sweep`.
    #[arg(long)]
    potential: Option<PathBuf>,
    #[arg(long, value_enum)]
    command: Command,
    /// Number of eigenvalues (or the projector rank).
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 0.25)]
    sigma: f64,
    /// Radius of the potential ball.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Half-width of the strip |Im rho| <= nu.
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    tol_root: f64,
    /// Cells of the eigenfunction grid; each carries 8 Gauss nodes.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Relative tolerance of the ODE integrator.
    #[arg(long, default_value_t = 1e-12)]
    rtol: f64,
    /// Random potentials drawn by `sweep`.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Spectral parameter for `resolvent`, as `re` or `re,im`.
    #[arg(long, default_value = "-5", allow_hyphen_values = true)]
    lambda: String,
    /// Number of halvings of t (`projector`) or epsilon (`resolvent`).
    #[arg(long)]
    halvings: Option<usize>,
    /// Initial perturbation size for `projector`.
    #[arg(long, default_value_t = 0.25)]
    t0: f64,
    /// Initial mollification width for `resolvent`.
    #[arg(long, default_value_t = 0.2)]
    eps0: f64,
    /// Perturbation direction for `projector` (defaults to cos x).
    #[arg(long)]
    direction: Option<PathBuf>,
}

enum Failure {
    Solver(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Input => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Separation => 4,
    }
}

fn fail(code: &str, class: &str, message: String, status: u8) -> ExitCode {
    let body = json!({ "error": { "code": code, "class": class, "message": message }, "exit_code": status });
    println!("{body}");
    ExitCode::from(status)
}

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", "input", e.to_string(), 2),
    };
    if let Some(n) = std::env::var("QUASISPEC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(&cfg) {
        Ok(files) => {
            println!("{}", json!({ "command": cfg.command.name(), "written": files }));
            ExitCode::SUCCESS
        }
        Err(Failure::Solver(e)) => {
            let class = e.class();
            let label = match class {
                ErrorClass::Input => "input",
                ErrorClass::Numerical => "numerical",
                ErrorClass::Separation => "separation",
            };
            fail(e.code(), label, e.to_string(), exit_code(class))
        }
        Err(Failure::Io(e)) => fail("io", "io", e.to_string(), 1),
    }
}

fn validate(cfg: &RunConfig) -> Result<(), Error> {
    let positive = [("tol-root", cfg.tol_root), ("rtol", cfg.rtol), ("t0", cfg.t0), ("eps0", cfg.eps0)];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Argument(format!("--{name} must be positive")));
        }
    }
    if !(1e-15..=1e-3).contains(&cfg.rtol) {
        return Err(Error::Argument("--rtol must lie in [1e-15, 1e-3]".into()));
    }
    if cfg.n == 0 {
        return Err(Error::Argument("--n must be at least 1".into()));
    }
    if cfg.grid < 4 {
        return Err(Error::Argument("--grid must be at least 4 cells".into()));
    }
    if cfg.command != Command::Sweep && cfg.potential.is_none() {
        return Err(Error::Argument(format!("--potential is required for {}", cfg.command.name())));
    }
    Ok(())
}

fn read_potential(path: &PathBuf) -> Result<(Potential<f64>, String), Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let p = Potential::from_json(&text)?;
    let canonical = serde_json::to_string(&p.to_spec()).map_err(|e| Error::Parse(e.to_string()))?;
    Ok((p, report::sha256_hex(canonical.as_bytes())))
}

fn parse_lambda(s: &str) -> Result<Complex<f64>, Error> {
    let bad = || Error::Argument(format!("cannot read --lambda {s:?}; expected `re` or `re,im`"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [re] => Ok(Complex::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex::new(num(re)?, num(im)?)),
        _ => Err(bad()),
    }
}

fn run(cfg: &RunConfig) -> Result<Vec<String>, Failure> {
    validate(cfg)?;
    let mut opts = SpectrumOptions::default();
    opts.ode.rtol = cfg.rtol;
    opts.tol_root = cfg.tol_root;
    let loaded = match &cfg.potential {
        Some(path) if cfg.command != Command::Sweep => Some(read_potential(path)?),
        _ => None,
    };
    let meta = Meta {
        tool: "quasispec",
        version: env!("CARGO_PKG_VERSION"),
        core_version: quasispec::VERSION,
        command: cfg.command.name().into(),
        potential_sha256: loaded.as_ref().map(|(_, h)| h.clone()),
        norm_convention: NORM_CONVENTION,
        tolerances: Tolerances {
            ode_rtol: opts.ode.rtol,
            tol_root: opts.tol_root,
            count_rtol: opts.count_rtol,
        },
        grid_cells: cfg.grid,
        grid_nodes: DEFAULT_NODES,
        n: cfg.n,
        sigma: cfg.sigma,
        radius: cfg.radius,
        nu: cfg.nu,
        seed: cfg.seed,
    };
    let sp = StripParams::new(cfg.nu, cfg.radius, cfg.sigma)?;
    let out = &cfg.out;
    let json = |body: &dyn ReportBody| render(&meta, body);
    let mut files = Vec::new();

    match cfg.command {
        Command::Solve => {
            let (p, _) = loaded.as_ref().expect("validated");
            let d = localize(p, cfg.n, &sp, &opts)?;
            let max_residual = d.iter().map(|x| x.residual).fold(0.0, f64::max);
            files.push(report::write(out, "spectrum.csv", &spectrum::to_csv(&d))?);
            let body = json!({ "eigenvalues": d.len(), "max_residual": max_residual });
            files.push(report::write(out, "solve.json", &json(&body))?);
        }
        Command::Asymptotics => {
            let (p, _) = loaded.as_ref().expect("validated");
            let d = localize(p, cfg.n, &sp, &opts)?;
            let rem = remainders(&d, cfg.sigma);
            let b = basis(p, &d, solution_grid(p, cfg.grid, DEFAULT_NODES), &opts.ode)?;
            let efas = efas_report(&b, cfg.n, cfg.sigma);
            let mut csv = String::from("n,re_s,im_s,partial_sum\n");
            for (x, acc) in d.iter().zip(&rem.tail_profile) {
                csv.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", x.n, x.s_n.re, x.s_n.im, acc));
            }
            files.push(report::write(out, "remainders.csv", &csv)?);
            files.push(report::write(out, "efas.csv", &efas.to_csv())?);
            let window = 10.min(cfg.n.saturating_sub(1));
            let body = Asymptotics {
                remainder_norm: rem.weighted_norm.sqrt(),
                remainder_last_increment: rem.last_increment(window),
                efas_last_increment: efas.last_increment(window),
                increment_window: window,
                remainder: &rem,
                efas: &efas,
            };
            files.push(report::write(out, "asymptotics.json", &json(&body))?);
        }
        Command::Basis => {
            let (p, _) = loaded.as_ref().expect("validated");
            let d = localize(p, cfg.n, &sp, &opts)?;
            let b = basis(p, &d, solution_grid(p, cfg.grid, DEFAULT_NODES), &opts.ode)?;
            let residual = b.functions.iter().map(|f| weak_residual(p, &b.grid, f)).fold(0.0, f64::max);
            let body = json!({
                "size": b.len(),
                "biorthogonality_defect": b.biorthogonality_defect(cfg.n),
                "gram_condition": b.gram_condition(cfg.n),
                "self_adjoint_gap": b.self_adjoint_gap(),
                "max_weak_residual": residual,
                "multiplicities": d.iter().map(|x| x.multiplicity).collect::<Vec<_>>(),
            });
            files.push(report::write(out, "basis.json", &json(&body))?);
        }
        Command::Projector => {
            let (p, _) = loaded.as_ref().expect("validated");
            let direction = match &cfg.direction {
                Some(path) => read_potential(path)?.0,
                None => Potential::trig(vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)], vec![])?,
            };
            let steps = continuity_experiment(p, &direction, cfg.sigma, cfg.n, cfg.halvings.unwrap_or(6), cfg.t0, &sp, &opts)?;
            let mut csv = String::from("t,perturbation_norm,norm,error\n");
            for s in &steps {
                let norm = s.norm.map(|v| format!("{v:.16e}")).unwrap_or_default();
                let err = s.error.as_deref().unwrap_or("").replace(',', ";");
                csv.push_str(&format!("{:.16e},{:.16e},{norm},{err}\n", s.t, s.perturbation_norm));
            }
            files.push(report::write(out, "continuity.csv", &csv)?);
            files.push(report::write(out, "projector.json", &json(&json!({ "steps": steps })))?);
        }
        Command::Sweep => {
            let r = ball_sweep(cfg.radius, cfg.sigma, cfg.samples, cfg.n, cfg.seed, &opts)?;
            files.push(report::write(out, "sweep.json", &json(&json!({ "sweep": r })))?);
        }
        Command::Resolvent => {
            let (p, _) = loaded.as_ref().expect("validated");
            let lambda = parse_lambda(&cfg.lambda)?;
            let steps = resolvent_experiment(p, lambda, cfg.eps0, cfg.halvings.unwrap_or(5), &opts)?;
            let mut csv = String::from("eps,distance\n");
            for s in &steps {
                csv.push_str(&format!("{:.16e},{:.16e}\n", s.eps, s.distance));
            }
            files.push(report::write(out, "resolvent.csv", &csv)?);
            let body = json!({ "lambda": [lambda.re, lambda.im], "steps": steps });
            files.push(report::write(out, "resolvent.json", &json(&body))?);
        }
    }
    Ok(files)
}

#[derive(Serialize)]
struct Asymptotics<'a> {
    remainder_norm: f64,
    remainder_last_increment: f64,
    efas_last_increment: f64,
    increment_window: usize,
    remainder: &'a quasispec::RemainderReport,
    efas: &'a quasispec::EfasReport,
}

/// Object-safe view of a serializable report body.
trait ReportBody {
    fn json(&self, meta: &Meta) -> String;
}

impl<S: Serialize> ReportBody for S {
    fn json(&self, meta: &Meta) -> String {
        report::to_json(&Report { meta, body: self })
    }
}

fn render(meta: &Meta, body: &dyn ReportBody) -> String {
    body.json(meta)
}
