//! Batch runs: mesh sweeps with error tables, the solution-selection experiment, and
//! plot-ready CSV output.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dgspace::{DGFunction, DGSpace, ErrorNorms};
use crate::elliptic::{linear_guess, IterationRecord, solve_newton, solve_splitting, JacobianMode, ReducedSystem, SolverConfig};
use crate::error::{Error, Result};
use crate::ldg_ops::LDGSystem;
use crate::mesh::Mesh;
use crate::parabolic::{evolve, EvolveConfig, ProjectionMode, Scheme, TimeGrid};
use crate::problems::{self, Problem, ProblemKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Newton,
    Splitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Stationary,
    Rk4,
    ForwardEuler,
    Trapezoidal,
}

impl SchemeKind {
    fn time_scheme(self) -> Option<Scheme> {
        match self {
            SchemeKind::Stationary => None,
            SchemeKind::Rk4 => Some(Scheme::Rk4),
            SchemeKind::ForwardEuler => Some(Scheme::ForwardEuler),
            SchemeKind::Trapezoidal => Some(Scheme::Trapezoidal),
        }
    }

    fn explicit(self) -> bool {
        matches!(self, SchemeKind::Rk4 | SchemeKind::ForwardEuler)
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value '{value}' for {key}"))
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton" => Ok(Self::Newton),
            "splitting" => Ok(Self::Splitting),
            _ => Err(bad("solver", s)),
        }
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" => Ok(Self::Stationary),
            "rk4" => Ok(Self::Rk4),
            "feuler" => Ok(Self::ForwardEuler),
            "trapezoidal" => Ok(Self::Trapezoidal),
            _ => Err(bad("scheme", s)),
        }
    }
}

impl FromStr for ProjectionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modified" => Ok(Self::Modified),
            "standard" => Ok(Self::Standard),
            _ => Err(bad("projection", s)),
        }
    }
}

impl FromStr for JacobianMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "finite-difference" | "fd" => Ok(Self::FiniteDifference),
            _ => Err(bad("jacobian", s)),
        }
    }
}

/// Everything a sweep needs. Unset optional fields fall back to the problem's published settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub degrees: Vec<usize>,
    pub cells: Vec<usize>,
    pub alpha: Option<f64>,
    pub solver: SolverKind,
    pub scheme: SchemeKind,
    pub dt: Option<f64>,
    pub kappa_t: Option<f64>,
    pub final_time: Option<f64>,
    pub solver_config: SolverConfig,
    pub projection: ProjectionMode,
    /// Markdown table path.
    pub out: Option<PathBuf>,
    /// CSV path for the raw numbers.
    pub csv: Option<PathBuf>,
    pub seed: u64,
}

impl RunConfig {
    /// Defaults for a problem: its mesh list, `r = 0..=2`, stationary Newton for elliptic
    /// problems and RK4 for parabolic ones.
    pub fn for_problem(name: &str) -> Result<Self> {
        let pb = problems::by_name(name)?;
        Ok(Self {
            problem: name.to_string(),
            degrees: vec![0, 1, 2],
            cells: pb.cells.clone(),
            alpha: None,
            solver: SolverKind::Newton,
            scheme: match pb.kind {
                ProblemKind::Elliptic => SchemeKind::Stationary,
                ProblemKind::Parabolic => SchemeKind::Rk4,
            },
            dt: None,
            kappa_t: None,
            final_time: None,
            solver_config: SolverConfig::default(),
            projection: ProjectionMode::Modified,
            out: None,
            csv: None,
            seed: 0,
        })
    }

    /// Reads flat `key = value` lines; `#` starts a comment. `problem` must come first
    /// if present, since it resets the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config: Option<Self> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "problem" {
                if config.is_some() {
                    return Err(Error::Config(format!("line {}: problem must be the first key", n + 1)));
                }
                config = Some(Self::for_problem(value)?);
            } else {
                config.get_or_insert(Self::for_problem("test1")?).set(key, value)?;
            }
        }
        config.ok_or_else(|| Error::Config("empty configuration".into()))
    }

    /// Sets one field from its text form; keys match the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| bad(key, value))
        }
        fn list(key: &str, value: &str) -> Result<Vec<usize>> {
            value.split(',').map(|v| num(key, v.trim())).collect()
        }
        match key {
            "problem" => {
                let fresh = Self::for_problem(value)?;
                *self = Self { problem: fresh.problem, cells: fresh.cells, scheme: fresh.scheme, ..self.clone() };
            }
            "r" => self.degrees = list(key, value)?,
            "J" => self.cells = list(key, value)?,
            "alpha" => self.alpha = Some(num(key, value)?),
            "solver" => self.solver = value.parse()?,
            "scheme" => self.scheme = value.parse()?,
            "dt" => self.dt = Some(num(key, value)?),
            "kappa_t" | "kappa-t" => self.kappa_t = Some(num(key, value)?),
            "T" => self.final_time = Some(num(key, value)?),
            "newton_tol" => self.solver_config.newton_tol = num(key, value)?,
            "max_newton_iters" => self.solver_config.max_newton_iters = num(key, value)?,
            "splitting_tol" => self.solver_config.splitting_tol = num(key, value)?,
            "max_splitting_iters" => self.solver_config.max_splitting_iters = num(key, value)?,
            "jacobian" => self.solver_config.jacobian = value.parse()?,
            "projection" => self.projection = value.parse()?,
            "out" => self.out = Some(PathBuf::from(value)),
            "csv" => self.csv = Some(PathBuf::from(value)),
            "seed" => self.seed = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let pb = problems::by_name(&self.problem)?;
        self.solver_config.validate()?;
        if self.degrees.is_empty() || self.cells.is_empty() {
            return Err(Error::Config("need at least one r and one J".into()));
        }
        if self.cells.contains(&0) {
            return Err(Error::Config("J must be positive".into()));
        }
        if self.cells.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("J list must be strictly increasing".into()));
        }
        match (pb.kind, self.scheme) {
            (ProblemKind::Elliptic, SchemeKind::Stationary) | (ProblemKind::Parabolic, SchemeKind::Rk4 | SchemeKind::ForwardEuler | SchemeKind::Trapezoidal) => {}
            (kind, scheme) => {
                return Err(Error::Config(format!("scheme {scheme:?} does not apply to a {kind:?} problem")));
            }
        }
        if self.scheme.explicit() && self.dt.is_some() && self.kappa_t.is_some() {
            return Err(Error::Config("give either dt or kappa_t, not both".into()));
        }
        if self.scheme.explicit() && self.dt.is_none() && self.kappa_t.is_none() && pb.parabolic.is_none() {
            return Err(Error::Config("explicit schemes need dt or kappa_t".into()));
        }
        Ok(())
    }

    fn time_grid(&self, pb: &Problem, r: usize, h_max: f64) -> Result<TimeGrid> {
        let settings = pb.parabolic;
        let final_time = self
            .final_time
            .or(settings.map(|s| s.final_time))
            .ok_or_else(|| Error::Config("final time T is required".into()))?;
        if let Some(dt) = self.dt {
            return TimeGrid::from_dt(final_time, dt);
        }
        if self.scheme == SchemeKind::Trapezoidal && self.kappa_t.is_none() {
            let dt = settings.map(|s| s.dt_trapezoidal).ok_or_else(|| Error::Config("dt is required".into()))?;
            return TimeGrid::from_dt(final_time, dt);
        }
        let kappa = match self.kappa_t {
            Some(k) => k,
            None => settings
                .and_then(|s| s.kappa_t.get(r).copied())
                .ok_or_else(|| Error::Config(format!("no default kappa_t for r = {r}")))?,
        };
        TimeGrid::from_cfl(final_time, kappa, h_max)
    }
}

/// Result of one `(r, J)` run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solution: DGFunction,
    pub errors: ErrorNorms,
    /// Nonlinear iterations of a stationary solve; empty for time stepping.
    pub log: Vec<IterationRecord>,
    /// Time at which errors were measured (0 for stationary problems).
    pub time: f64,
}

/// Solves one configuration on a uniform mesh and measures the error against the exact solution.
pub fn run_single(config: &RunConfig, r: usize, cells: usize) -> Result<RunOutcome> {
    let pb = problems::by_name(&config.problem)?;
    let space = Arc::new(DGSpace::new(Mesh::uniform(pb.a, pb.b, cells)?, r));
    let sys = LDGSystem::assemble(Arc::clone(&space));
    let mut op = pb.numerical_operator();
    if let Some(a) = config.alpha {
        op = op.with_alpha(a);
    }
    let (solution, time, log) = match config.scheme.time_scheme() {
        None => {
            let bc = pb.bc.at(0.0);
            let guess = linear_guess(&space, bc);
            let sol = match config.solver {
                SolverKind::Newton => solve_newton(&sys, &op, bc, &config.solver_config, &guess)?,
                SolverKind::Splitting => {
                    let s = solve_splitting(&sys, &op, bc, &config.solver_config, &guess)?;
                    if !s.converged {
                        let residual = s.log.last().map_or(f64::NAN, |l| l.residual);
                        return Err(Error::NoConvergence {
                            iterations: s.log.len(),
                            residual,
                            last: s.state.u.into_coeffs(),
                        });
                    }
                    s
                }
            };
            (sol.state.u, 0.0, sol.log)
        }
        Some(scheme) => {
            let grid = config.time_grid(&pb, r, space.mesh().h_max())?;
            let ev_config = EvolveConfig {
                scheme,
                projection: config.projection,
                solver: config.solver_config.clone(),
                snapshot_every: None,
            };
            let ev = evolve(&pb, &sys, &grid, &op, &ev_config)?;
            (ev.u, grid.final_time, Vec::new())
        }
    };
    let errors = match pb.exact_jet(0.0, 0.0) {
        Some(_) => solution.error_norms(|x| pb.exact(x, time).unwrap_or(f64::NAN)),
        None => ErrorNorms { l2: f64::NAN, linf: f64::NAN },
    };
    Ok(RunOutcome { solution, errors, log, time })
}

/// `log(e_coarse / e_fine) / log(h_coarse / h_fine)`; `log2` of the ratio when `h` halves.
pub fn convergence_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

#[derive(Debug, Clone)]
pub struct StudyRow {
    pub r: usize,
    pub cells: usize,
    pub h: f64,
    /// Errors, or the failure message.
    pub result: std::result::Result<ErrorNorms, String>,
    pub l2_order: Option<f64>,
    pub linf_order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub problem: String,
    pub alpha: f64,
    pub rows: Vec<StudyRow>,
}

/// Two significant digits with a signed two-digit exponent, e.g. `3.9e-04`.
pub fn sci2(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.1e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

impl StudyReport {
    pub fn rows_for(&self, r: usize) -> impl Iterator<Item = &StudyRow> {
        self.rows.iter().filter(move |row| row.r == r)
    }

    /// Table with one block of two rows (L2, L-infinity) per degree and an error/order
    /// column pair per mesh.
    pub fn markdown(&self) -> String {
        let mut degrees: Vec<usize> = self.rows.iter().map(|r| r.r).collect();
        degrees.dedup();
        let cells: Vec<usize> = self.rows_for(degrees[0]).map(|r| r.cells).collect();
        let mut out = String::new();
        let _ = writeln!(out, "{} with alpha = {}\n", self.problem, self.alpha);
        let mut header = String::from("| r | Norm |");
        let mut rule = String::from("|---|---|");
        for (i, j) in cells.iter().enumerate() {
            let _ = write!(header, " J = {j} Error |");
            rule.push_str("---|");
            if i > 0 {
                header.push_str(" Order |");
                rule.push_str("---|");
            }
        }
        let _ = writeln!(out, "{header}\n{rule}");
        for &r in &degrees {
            for (name, pick) in [("L2", 0), ("Linf", 1)] {
                let mut line = format!("| {} | {name} |", if pick == 0 { r.to_string() } else { String::new() });
                for (i, row) in self.rows_for(r).enumerate() {
                    let (err, order) = match &row.result {
                        Ok(e) => (
                            sci2(if pick == 0 { e.l2 } else { e.linf }),
                            if pick == 0 { row.l2_order } else { row.linf_order },
                        ),
                        Err(_) => ("fail".to_string(), None),
                    };
                    let _ = write!(line, " {err} |");
                    if i > 0 {
                        let _ = write!(line, " {} |", order.map_or("-".to_string(), |o| format!("{o:.2}")));
                    }
                }
                let _ = writeln!(out, "{line}");
            }
        }
        let failures: Vec<&StudyRow> = self.rows.iter().filter(|r| r.result.is_err()).collect();
        if !failures.is_empty() {
            let _ = writeln!(out);
            for row in failures {
                let _ = writeln!(out, "- r = {}, J = {}: {}", row.r, row.cells, row.result.as_ref().unwrap_err());
            }
        }
        out
    }

    /// Raw numbers, one line per run; failed runs leave the number fields empty.
    pub fn csv(&self) -> String {
        let mut out = String::from("r,J,h,l2,l2_order,linf,linf_order\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
        for row in &self.rows {
            let (l2, linf) = match &row.result {
                Ok(e) => (format!("{:e}", e.l2), format!("{:e}", e.linf)),
                Err(_) => (String::new(), String::new()),
            };
            let _ = writeln!(out, "{},{},{:e},{l2},{},{linf},{}", row.r, row.cells, row.h, opt(row.l2_order), opt(row.linf_order));
        }
        out
    }

    /// Writes the Markdown and CSV files named in `config`, if any.
    pub fn write_outputs(&self, config: &RunConfig) -> Result<()> {
        if let Some(path) = &config.out {
            std::fs::write(path, self.markdown())?;
        }
        if let Some(path) = &config.csv {
            std::fs::write(path, self.csv())?;
        }
        Ok(())
    }
}

/// Runs every `(r, J)` pair of the configuration. Failed runs are recorded in their row and
/// the sweep continues.
pub fn run_convergence_study(config: &RunConfig) -> Result<StudyReport> {
    config.validate()?;
    let pb = problems::by_name(&config.problem)?;
    let jobs: Vec<(usize, usize)> = config.degrees.iter().flat_map(|&r| config.cells.iter().map(move |&j| (r, j))).collect();
    let results: Vec<std::result::Result<ErrorNorms, String>> = jobs
        .par_iter()
        .map(|&(r, j)| run_single(config, r, j).map(|o| o.errors).map_err(|e| e.to_string()))
        .collect();
    let mut rows: Vec<StudyRow> = Vec::with_capacity(jobs.len());
    for (&(r, cells), result) in jobs.iter().zip(results) {
        let h = (pb.b - pb.a) / cells as f64;
        let prev = rows.last().filter(|p| p.r == r);
        let (l2_order, linf_order) = match (prev.map(|p| (&p.result, p.h)), &result) {
            (Some((Ok(e0), h0)), Ok(e1)) => (
                Some(convergence_order(e0.l2, e1.l2, h0, h)),
                Some(convergence_order(e0.linf, e1.linf, h0, h)),
            ),
            _ => (None, None),
        };
        rows.push(StudyRow { r, cells, h, result, l2_order, linf_order });
    }
    Ok(StudyReport { problem: config.problem.clone(), alpha: config.alpha.unwrap_or(pb.alpha), rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    UPlus,
    UMinus,
    Mu,
    Other,
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fixture::UPlus => "u_plus",
            Fixture::UMinus => "u_minus",
            Fixture::Mu => "mu",
            Fixture::Other => "other",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub converged_to: Fixture,
    pub final_u: DGFunction,
    /// L2 distances to `u_plus`, `u_minus`, `mu`.
    pub distances: [f64; 3],
    /// Why the result is `Other`, when it is.
    pub diagnostics: Option<String>,
}

/// Nearest fixture in L2 if it is within `10 h^{r+1}` and the others are at least ten times
/// farther; `Other` otherwise.
pub fn classify(distances: [f64; 3], h: f64, r: usize) -> Fixture {
    let tol = 10.0 * h.powi(r as i32 + 1);
    let (best, &d) = distances
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("three distances");
    let separated = distances.iter().enumerate().all(|(i, &o)| i == best || o >= 10.0 * d);
    if d <= tol && separated {
        [Fixture::UPlus, Fixture::UMinus, Fixture::Mu][best]
    } else {
        Fixture::Other
    }
}

/// Test 1 with moment `alpha`: 100 splitting iterations from `(3/4) mu + (1/4) u_bar`, then
/// Newton, then classification against `u_plus`, `u_minus`, `mu`.
pub fn run_selection_experiment(alpha: f64, r: usize, cells: usize) -> Result<SelectionOutcome> {
    let pb = problems::test1();
    let fx = problems::selection_fixtures();
    let space = Arc::new(DGSpace::new(Mesh::uniform(pb.a, pb.b, cells)?, r));
    let sys = LDGSystem::assemble(Arc::clone(&space));
    let op = pb.numerical_operator().with_alpha(alpha);
    let bc = pb.bc.at(0.0);
    let guess = DGFunction::project(Arc::clone(&space), |x| fx.initial_guess(x));
    let config = SolverConfig { max_splitting_iters: 100, ..SolverConfig::default() };
    let distances_of = |u: &DGFunction| {
        [fx.u_plus, fx.u_minus, fx.mu].map(|f| u.error_norms(f).l2)
    };
    let split = match solve_splitting(&sys, &op, bc, &config, &guess) {
        Ok(s) => s.state.u,
        Err(e) => {
            return Ok(SelectionOutcome {
                converged_to: Fixture::Other,
                distances: distances_of(&guess),
                final_u: guess,
                diagnostics: Some(format!("splitting failed: {e}")),
            })
        }
    };
    let h = space.mesh().h_max();
    match ReducedSystem::new(&sys, &op, bc).newton(&config, split.coeffs()) {
        Ok((u, _)) => {
            let u = DGFunction::from_coeffs(Arc::clone(&space), u)?;
            let distances = distances_of(&u);
            let converged_to = classify(distances, h, r);
            let diagnostics = (converged_to == Fixture::Other)
                .then(|| format!("no fixture within 10 h^(r+1) = {:.2e} with separation 10; distances {distances:?}", 10.0 * h.powi(r as i32 + 1)));
            Ok(SelectionOutcome { converged_to, final_u: u, distances, diagnostics })
        }
        Err(e) => Ok(SelectionOutcome {
            converged_to: Fixture::Other,
            distances: distances_of(&split),
            final_u: split,
            diagnostics: Some(format!("Newton failed: {e}")),
        }),
    }
}

/// `x_sample,u_h,exact,error` at `per_cell` evenly spaced points per cell (cell ends included).
pub fn solution_csv(u: &DGFunction, exact: Option<&dyn Fn(f64) -> f64>, per_cell: usize) -> String {
    let mut out = String::from("x_sample,u_h,exact,error\n");
    for (x, v) in u.sample(per_cell) {
        match exact {
            Some(f) => {
                let e = f(x);
                let _ = writeln!(out, "{x:e},{v:e},{e:e},{:e}", v - e);
            }
            None => {
                let _ = writeln!(out, "{x:e},{v:e},,");
            }
        }
    }
    out
}
