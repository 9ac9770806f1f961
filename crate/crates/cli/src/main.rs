use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use nzpc_cli::{commands, ExperimentConfig};

/// Data-driven reachability and predictive control experiments.
///
/// Settings come from the built-in defaults, then the `--config` file, then
/// command-line flags, each overriding the previous.
#[derive(Debug, Parser)]
#[command(name = "nzpc", version)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate offline input-output trajectories and write them as CSV.
    GenData {
        /// Use the control experiment's initial set and input domain.
        #[arg(long)]
        control: bool,
        /// Also write the ground-truth states.
        #[arg(long)]
        record: bool,
    },
    /// Compute output reachable sets and check them by Monte Carlo.
    Reach {
        /// Trajectory CSV to learn from instead of simulating.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Like `reach`, but only report containment and fail unless it is 100%.
    Verify {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run the closed loop; fails on any violation or infeasible step.
    Nzpc {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        /// Number of consecutive seeds to run.
        #[arg(long)]
        seeds: Option<usize>,
        /// Also write the predicted output sets of every step as JSON.
        #[arg(long)]
        dump_sets: bool,
    },
    /// Rough Lipschitz and covering-radius estimates from trajectory data.
    EstimateLipschitz {
        #[arg(long)]
        data: PathBuf,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    let stdout = std::io::stdout();
    let mut w = stdout.lock();

    match cli.command {
        Command::GenData { control, record } => {
            cfg.data.record_states |= record;
            cfg.validate()?;
            let out = commands::gen_data(&cfg, control, &cfg.out_dir)?;
            writeln!(w, "wrote {}", out.trajectories.display())?;
            if let Some(p) = &out.states {
                writeln!(w, "wrote {}", p.display())?;
            }
            writeln!(w, "{} data rows, {} window columns", out.rows, out.columns)?;
            Ok(true)
        }
        Command::Reach { data, samples } => {
            if let Some(s) = samples {
                cfg.reach.samples = s;
            }
            cfg.validate()?;
            let out = commands::reach(&cfg, data.as_deref(), cfg.reach.samples)?;
            let (sets, report) = commands::write_reach(&out, &cfg.out_dir)?;
            writeln!(w, "learned from {} window columns", out.columns)?;
            commands::print_report(&mut w, &out.report)?;
            writeln!(w, "wrote {}\nwrote {}", sets.display(), report.display())?;
            Ok(true)
        }
        Command::Verify { data, samples } => {
            if let Some(s) = samples {
                cfg.reach.samples = s;
            }
            cfg.validate()?;
            let out = commands::reach(&cfg, data.as_deref(), cfg.reach.samples)?;
            commands::print_report(&mut w, &out.report)?;
            let ok = out.report.all_contained();
            writeln!(
                w,
                "{}",
                if ok {
                    "all samples contained"
                } else {
                    "containment FAILED"
                }
            )?;
            Ok(ok)
        }
        Command::Nzpc {
            data,
            steps,
            seeds,
            dump_sets,
        } => {
            if let Some(s) = steps {
                cfg.control.steps = s;
            }
            if let Some(s) = seeds {
                cfg.control.seeds = s;
            }
            cfg.validate()?;
            let runs = commands::nzpc(&cfg, data.as_deref(), dump_sets)?;
            let mut ok = true;
            for run in &runs {
                for path in commands::write_nzpc(run, &cfg.out_dir, dump_sets)? {
                    writeln!(w, "wrote {}", path.display())?;
                }
                commands::print_run(&mut w, run)?;
                ok &= run.passed();
            }
            Ok(ok)
        }
        Command::EstimateLipschitz { data } => {
            let e = commands::estimate_lipschitz(&data)?;
            writeln!(
                w,
                "naive estimates (pairwise slope maxima and a probe-grid covering radius), not certified bounds"
            )?;
            writeln!(
                w,
                "columns: {}, pairs: {}, probes: {}",
                e.columns, e.pairs, e.probes
            )?;
            let l: Vec<String> = e.lipschitz.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(w, "lipschitz = [{}]", l.join(", "))?;
            writeln!(w, "delta = {:.6}", e.delta)?;
            Ok(true)
        }
        Command::Config => {
            cfg.validate()?;
            write!(w, "{}", cfg.to_toml()?)?;
            Ok(true)
        }
    }
}
