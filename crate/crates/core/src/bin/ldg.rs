use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ldg::problems;
use ldg::study::{self, RunConfig};
use ldg::{Error, Result};

#[derive(Parser)]
#[command(name = "ldg", about = "LDG solver for fully nonlinear 1D elliptic and parabolic equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one stationary problem and print its errors.
    Solve(RunArgs),
    /// Mesh sweep with error and order tables.
    Study(RunArgs),
    /// Time-step one parabolic problem and print its errors.
    Evolve(RunArgs),
    /// Which Test 1 solution the scheme selects for a given moment.
    Select {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        r: usize,
        #[arg(long = "J", default_value_t = 40)]
        cells: usize,
        /// Solution dump (x_sample,u_h,exact,error against u_plus).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// List the built-in problems.
    Problems,
}

/// Flags override values read from `--config`.
#[derive(Args)]
struct RunArgs {
    /// Flat key=value file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Polynomial degree(s), comma separated.
    #[arg(long)]
    r: Option<String>,
    /// Cell count(s), comma separated and increasing.
    #[arg(long = "J")]
    cells: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// newton | splitting
    #[arg(long)]
    solver: Option<String>,
    /// stationary | rk4 | feuler | trapezoidal
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "kappa-t")]
    kappa_t: Option<String>,
    #[arg(long = "T")]
    final_time: Option<String>,
    /// modified | standard
    #[arg(long)]
    projection: Option<String>,
    /// analytic | fd
    #[arg(long)]
    jacobian: Option<String>,
    #[arg(long = "newton-tol")]
    newton_tol: Option<String>,
    #[arg(long = "max-newton-iters")]
    max_newton_iters: Option<String>,
    #[arg(long = "splitting-tol")]
    splitting_tol: Option<String>,
    #[arg(long = "max-splitting-iters")]
    max_splitting_iters: Option<String>,
    /// Markdown table (study).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV output: raw study numbers, or the solution dump for solve/evolve.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Coefficient dump (cell,coeff,value) for solve/evolve.
    #[arg(long)]
    coeffs: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::parse(&std::fs::read_to_string(path)?)?,
            None => RunConfig::for_problem(self.problem.as_deref().unwrap_or("test1"))?,
        };
        let overrides = [
            ("problem", &self.problem),
            ("r", &self.r),
            ("J", &self.cells),
            ("alpha", &self.alpha),
            ("solver", &self.solver),
            ("scheme", &self.scheme),
            ("dt", &self.dt),
            ("kappa_t", &self.kappa_t),
            ("T", &self.final_time),
            ("projection", &self.projection),
            ("jacobian", &self.jacobian),
            ("newton_tol", &self.newton_tol),
            ("max_newton_iters", &self.max_newton_iters),
            ("splitting_tol", &self.splitting_tol),
            ("max_splitting_iters", &self.max_splitting_iters),
            ("seed", &self.seed),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        if let Some(p) = &self.out {
            config.out = Some(p.clone());
        }
        if let Some(p) = &self.csv {
            config.csv = Some(p.clone());
        }
        config.validate()?;
        Ok(config)
    }
}

fn single(args: &RunArgs) -> Result<()> {
    let config = args.config()?;
    let (&[r], &[cells]) = (config.degrees.as_slice(), config.cells.as_slice()) else {
        return Err(Error::Config("solve and evolve take a single r and J; use study for sweeps".into()));
    };
    let pb = problems::by_name(&config.problem)?;
    let outcome = study::run_single(&config, r, cells)?;
    for rec in &outcome.log {
        println!("iter {:3}  residual {:.3e}  step {:.3e}", rec.iteration, rec.residual, rec.step);
    }
    println!(
        "{} r = {r} J = {cells} t = {}: L2 error {:.3e}, Linf error {:.3e}",
        config.problem, outcome.time, outcome.errors.l2, outcome.errors.linf
    );
    if let Some(path) = &config.csv {
        let t = outcome.time;
        let exact = |x: f64| pb.exact(x, t).unwrap_or(f64::NAN);
        std::fs::write(path, study::solution_csv(&outcome.solution, Some(&exact), 5))?;
    }
    if let Some(path) = &args.coeffs {
        outcome.solution.write_csv(std::fs::File::create(path)?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) | Command::Evolve(args) => single(&args),
        Command::Study(args) => {
            let config = args.config()?;
            let report = study::run_convergence_study(&config)?;
            report.write_outputs(&config)?;
            print!("{}", report.markdown());
            Ok(())
        }
        Command::Select { alpha, r, cells, csv } => {
            let outcome = study::run_selection_experiment(alpha, r, cells)?;
            let [dp, dm, dmu] = outcome.distances;
            println!("alpha = {alpha} r = {r} J = {cells}: {}", outcome.converged_to);
            println!("L2 distance to u_plus {dp:.3e}, u_minus {dm:.3e}, mu {dmu:.3e}");
            if let Some(d) = &outcome.diagnostics {
                println!("{d}");
            }
            if let Some(path) = csv {
                let fx = problems::selection_fixtures();
                std::fs::write(path, study::solution_csv(&outcome.final_u, Some(&fx.u_plus), 5))?;
            }
            Ok(())
        }
        Command::Problems => {
            for name in problems::NAMES {
                let pb = problems::by_name(name)?;
                println!("{name}: {:?} on ({}, {}), alpha = {}", pb.kind, pb.a, pb.b, pb.alpha);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
