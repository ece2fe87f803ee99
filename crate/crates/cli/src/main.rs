use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use statsol::harness::{emit_report, run_experiment, ExperimentConfig, EXPERIMENTS};
use statsol::io::{self, GridHint};
use statsol::transport::w1_ensembles_with_plan;
use statsol::{
    canonical_solution, kruzkov_residual, moment, moment_residual, project_ensemble,
    sample_gaussian, structure_function, CovarianceKernel, FluxModel, Grid, Partition,
    TestFunction,
};

#[derive(Parser)]
#[command(
    name = "statsol",
    version,
    about = "Statistical solutions of scalar conservation laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GridOpts {
    /// Treat the domain as an interval with outflow boundaries instead of a torus.
    #[arg(long)]
    bounded: bool,
    /// Domain `left,right`; inferred from the cell centers when omitted.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    domain: Option<Vec<f64>>,
}

impl GridOpts {
    fn hint(&self) -> GridHint {
        GridHint {
            domain: self.domain.as_ref().map(|d| (d[0], d[1])),
            periodic: !self.bounded,
        }
    }
}

#[derive(Args, Clone)]
struct FluxOpts {
    #[arg(long, default_value = "burgers")]
    flux: String,
    /// Advection speed.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    speed: f64,
}

impl FluxOpts {
    fn model(&self) -> Result<FluxModel> {
        Ok(FluxModel::from_name(&self.flux, self.speed)?)
    }
}

#[derive(Args, Clone)]
struct TestFunctionOpts {
    #[arg(long, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long)]
    w: f64,
    #[arg(long)]
    t1: f64,
    #[arg(long)]
    t2: f64,
}

impl TestFunctionOpts {
    fn build(&self) -> Result<TestFunction> {
        Ok(TestFunction::new(self.x0, self.w, self.t1, self.t2)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a centered Gaussian ensemble.
    Gaussian {
        #[arg(long, default_value = "brownian")]
        kernel: String,
        #[arg(long, default_value_t = 0.1)]
        length_scale: f64,
        #[arg(long)]
        cells: usize,
        #[arg(long)]
        members: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(
            long,
            value_delimiter = ',',
            num_args = 2,
            default_value = "0,1",
            allow_hyphen_values = true
        )]
        domain: Vec<f64>,
        #[arg(long)]
        bounded: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve an ensemble with the entropy solver and write the trajectory.
    Evolve {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        flux: FluxOpts,
        /// Output times, comma separated, starting at 0.
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        #[arg(long, default_value_t = 0.45)]
        cfl: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Moments `m^k` on a strided lattice of cell-center tuples, or at one point tuple.
    Moments {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        grid: GridOpts,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        grid_stride: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        points: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structure function at the given radii.
    Structure {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        grid: GridOpts,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Monte Carlo partition projection onto a uniform partition.
    Project {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        grid: GridOpts,
        #[arg(long)]
        cells: usize,
        #[arg(long)]
        realizations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact W1 distance between two equal-size ensembles.
    Wasserstein {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        grid: GridOpts,
        #[arg(long)]
        emit_plan: Option<PathBuf>,
    },
    /// Weak residual of the k-th moment equation.
    Residual {
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        grid: GridOpts,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        flux: FluxOpts,
        #[command(flatten)]
        phi: TestFunctionOpts,
    },
    /// Kruzkov entropy residuals for a list of constants.
    Entropy {
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        grid: GridOpts,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        c: Vec<f64>,
        #[command(flatten)]
        flux: FluxOpts,
        #[command(flatten)]
        phi: TestFunctionOpts,
    },
    /// Run a named experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print experiment names and their config keys.
    ListExperiments,
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("STATSOL_THREADS") {
        let n: usize = value.parse().ok().filter(|n| *n > 0).with_context(|| {
            format!("STATSOL_THREADS must be a positive integer, got {value:?}")
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn lattice(grid: &Grid, k: usize, stride: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..grid.n_cells())
        .step_by(stride)
        .map(|j| grid.center(j))
        .collect();
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

fn write_or_print(header: Vec<String>, rows: Vec<Vec<f64>>, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => io::save_table(&header, &rows, path)?,
        None => io::write_table(&header, &rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gaussian {
            kernel,
            length_scale,
            cells,
            members,
            seed,
            domain,
            bounded,
            out,
        } => {
            let grid = Grid::new(domain[0], domain[1], cells, !bounded)?;
            let kernel = CovarianceKernel::from_name(&kernel, length_scale)?;
            let ens = sample_gaussian(&kernel, &grid, members, seed)?;
            io::save_ensemble(&ens, &out)?;
        }
        Command::Evolve {
            input,
            grid,
            flux,
            times,
            cfl,
            out,
        } => {
            let ens = io::load_ensemble(&input, grid.hint())?;
            let traj = canonical_solution(&ens, &flux.model()?, &times, cfl)?;
            io::save_trajectory(&traj, &out)?;
        }
        Command::Moments {
            input,
            grid,
            k,
            grid_stride,
            points,
            out,
        } => {
            if grid_stride == 0 {
                bail!("--grid-stride must be >= 1");
            }
            let ens = io::load_ensemble(&input, grid.hint())?;
            let tuples = match points {
                Some(p) if p.len() == k => vec![p],
                Some(p) => bail!("--points has {} coordinates but --k is {k}", p.len()),
                None => lattice(ens.grid(), k, grid_stride),
            };
            let mut header: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
            header.push("value".into());
            let rows = tuples
                .into_iter()
                .map(|x| {
                    let v = moment(&ens, &x)?;
                    Ok(x.into_iter().chain([v]).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            write_or_print(header, rows, out.as_deref())?;
        }
        Command::Structure {
            input,
            grid,
            p,
            radii,
        } => {
            let ens = io::load_ensemble(&input, grid.hint())?;
            let mut rows = Vec::new();
            for r in radii {
                let s = structure_function(&ens, r, p)?;
                if s.under_resolved {
                    eprintln!(
                        "warning: r = {r} is below the cell width; estimate is under-resolved"
                    );
                }
                rows.push(vec![r, s.value]);
            }
            write_or_print(vec!["r".into(), "value".into()], rows, None)?;
        }
        Command::Project {
            input,
            grid,
            cells,
            realizations,
            seed,
            out,
        } => {
            let ens = io::load_ensemble(&input, grid.hint())?;
            let partition = Partition::uniform_on(ens.grid(), cells)?;
            let projected = project_ensemble(&ens, &partition, realizations, seed)?;
            io::save_ensemble(&projected, &out)?;
        }
        Command::Wasserstein {
            a,
            b,
            grid,
            emit_plan,
        } => {
            let ea = io::load_ensemble(&a, grid.hint())?;
            let eb = io::load_ensemble(&b, grid.hint())?;
            let (w1, plan) = w1_ensembles_with_plan(&ea, &eb)?;
            println!("W1={}", io::format_float(w1));
            if let Some(path) = emit_plan {
                let rows = plan
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| vec![i as f64, j as f64])
                    .collect::<Vec<_>>();
                io::save_table(&["i".into(), "j".into()], &rows, &path)?;
            }
        }
        Command::Residual {
            traj,
            grid,
            k,
            flux,
            phi,
        } => {
            let traj = io::load_trajectory(&traj, grid.hint())?;
            let r = moment_residual(&traj, k, &flux.model()?, &phi.build()?)?;
            println!("quantity,value");
            println!("residual_k{k},{}", io::format_float(r));
        }
        Command::Entropy {
            traj,
            grid,
            c,
            flux,
            phi,
        } => {
            if c.is_empty() {
                bail!("--c needs at least one constant");
            }
            let traj = io::load_trajectory(&traj, grid.hint())?;
            let model = flux.model()?;
            let phi = phi.build()?;
            println!("quantity,value");
            for c in c {
                let r = kruzkov_residual(&traj, &model, c, &phi)?;
                println!("kruzkov_c{c},{}", io::format_float(r.value));
                println!("tolerance_c{c},{}", io::format_float(r.tolerance()));
                println!("admissible_c{c},{}", u8::from(r.is_admissible()));
            }
        }
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg)?;
            let paths = emit_report(&report, &out)?;
            for check in &report.checks {
                println!(
                    "{} {}: {} {} {}",
                    if check.pass { "PASS" } else { "FAIL" },
                    check.name,
                    check.value,
                    check.relation,
                    check.threshold
                );
            }
            for path in paths {
                println!("wrote {}", path.display());
            }
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::ListExperiments => {
            let mut text = String::new();
            for name in EXPERIMENTS {
                let keys = ExperimentConfig::keys_for(name)?;
                text.push_str(&format!(
                    "{name}\n  required: experiment\n  optional: {}\n",
                    keys.join(", ")
                ));
            }
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| run(cli));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
