//! Subcommand implementations, kept out of the binary so they can be tested.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nzpc_core::benchmark::{ControlExperiment, ReachabilityExperiment};
use nzpc_core::data::{read_trajectories_csv, write_states_csv, write_trajectories_csv};
use nzpc_core::nzpc::run_closed_loop;
use nzpc_core::plant::{verify_containment, ContainmentReport};
use nzpc_core::{ClosedLoopLog, DataWindow, ReachResult, Trajectory};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::estimate;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn read_data(path: &Path) -> Result<Vec<Trajectory>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_trajectories_csv(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))
}

fn window_of(trajectories: &[Trajectory]) -> Result<DataWindow> {
    DataWindow::build(trajectories).context("building the data window")
}

pub struct GenDataOutput {
    pub trajectories: PathBuf,
    pub states: Option<PathBuf>,
    pub rows: usize,
    pub columns: usize,
}

/// Offline data for the reachability (default) or the control experiment.
pub fn gen_data(cfg: &ExperimentConfig, control: bool, out_dir: &Path) -> Result<GenDataOutput> {
    let record = cfg.data.record_states;
    let data = if control {
        let exp = cfg.control()?;
        exp.simulator(cfg.seed)?.generate_dataset(
            &exp.x0,
            &exp.nzpc.reach.zu,
            exp.trajectories,
            exp.length,
            record,
        )?
    } else {
        cfg.reachability()?.generate_data(cfg.seed, record)?
    };
    let trajectories = out_dir.join("trajectories.csv");
    write_trajectories_csv(create(&trajectories)?, &data.trajectories)?;
    let states = match &data.states {
        Some(s) => {
            let path = out_dir.join("states.csv");
            write_states_csv(create(&path)?, s)?;
            Some(path)
        }
        None => None,
    };
    Ok(GenDataOutput {
        trajectories,
        states,
        rows: data.trajectories.iter().map(|t| t.len()).sum(),
        columns: window_of(&data.trajectories)?.len(),
    })
}

pub struct ReachOutput {
    pub result: ReachResult,
    pub report: ContainmentReport,
    pub columns: usize,
}

/// Reachable sets from the configured (or given) data, followed by a
/// Monte-Carlo containment check with `samples` rollouts.
pub fn reach(cfg: &ExperimentConfig, data: Option<&Path>, samples: usize) -> Result<ReachOutput> {
    let exp: ReachabilityExperiment = cfg.reachability()?;
    let trajectories = match data {
        Some(path) => read_data(path)?,
        None => exp.generate_data(cfg.seed, false)?.trajectories,
    };
    let window = window_of(&trajectories)?;
    let result = exp.reach(&window)?;
    let sim = exp.simulator(cfg.seed)?;
    let report = verify_containment(
        &sim,
        &result,
        &exp.x0,
        &exp.reach.zu,
        samples,
        cfg.seed.wrapping_add(1),
        nzpc_core::sets::DEFAULT_CONTAINMENT_TOL,
    )?;
    Ok(ReachOutput {
        result,
        report,
        columns: window.len(),
    })
}

pub fn write_reach(out: &ReachOutput, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let sets = out_dir.join("reach_sets.json");
    create(&sets)?.write_all(out.result.to_json()?.as_bytes())?;
    let report = out_dir.join("containment.json");
    create(&report)?.write_all(serde_json::to_string_pretty(&out.report)?.as_bytes())?;
    Ok((sets, report))
}

pub fn print_report(w: &mut impl Write, report: &ContainmentReport) -> Result<()> {
    writeln!(
        w,
        "containment over {} samples (tol {:e}, {}):",
        report.samples, report.tolerance, report.sampling
    )?;
    for s in &report.steps {
        writeln!(
            w,
            "  k={}: {}/{} contained, worst level {:.4}",
            s.step, s.contained, s.samples, s.worst_level
        )?;
    }
    Ok(())
}

pub struct SeedRun {
    pub seed: u64,
    pub log: ClosedLoopLog,
    pub violations: nzpc_core::nzpc::Violations,
}

impl SeedRun {
    pub fn passed(&self) -> bool {
        self.violations.is_clean() && self.log.aborted.is_none()
    }
}

fn run_seed(
    exp: &ControlExperiment,
    seed: u64,
    data: Option<&[Trajectory]>,
    keep_sets: bool,
) -> Result<SeedRun> {
    let log = match data {
        Some(trajectories) => {
            let window = window_of(trajectories)?;
            let sim = exp.simulator(seed)?;
            run_closed_loop(
                &sim,
                &exp.nzpc,
                &window,
                &exp.x0,
                seed.wrapping_add(1),
                keep_sets,
            )?
        }
        None => exp.run(seed, keep_sets)?,
    };
    let violations = log.violations(&exp.nzpc, nzpc_core::sets::DEFAULT_CONTAINMENT_TOL)?;
    Ok(SeedRun {
        seed,
        log,
        violations,
    })
}

/// Closed-loop runs for `cfg.control.seeds` consecutive seeds starting at
/// `cfg.seed`, in parallel.
pub fn nzpc(cfg: &ExperimentConfig, data: Option<&Path>, keep_sets: bool) -> Result<Vec<SeedRun>> {
    let exp = cfg.control()?;
    let trajectories = data.map(read_data).transpose()?;
    let seeds: Vec<u64> = (0..cfg.control.seeds.max(1) as u64)
        .map(|i| cfg.seed.wrapping_add(i))
        .collect();
    seeds
        .par_iter()
        .map(|&seed| {
            run_seed(&exp, seed, trajectories.as_deref(), keep_sets)
                .with_context(|| format!("seed {seed}"))
        })
        .collect()
}

pub fn write_nzpc(run: &SeedRun, out_dir: &Path, dump_sets: bool) -> Result<Vec<PathBuf>> {
    let csv = out_dir.join(format!("nzpc_seed{}.csv", run.seed));
    let mut w = create(&csv)?;
    run.log.write_csv(&mut w)?;
    w.flush()?;
    let mut written = vec![csv];
    if dump_sets {
        let path = out_dir.join(format!("nzpc_seed{}_sets.json", run.seed));
        create(&path)?.write_all(run.log.sets_json()?.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

pub fn print_run(w: &mut impl Write, run: &SeedRun) -> Result<()> {
    let v = &run.violations;
    let dist = |y: &Option<nalgebra::DVector<f64>>| y.as_ref().map_or(f64::NAN, |y| y.norm());
    writeln!(
        w,
        "seed {}: {} steps, {} output / {} input violations, {} non-optimal steps, |y| {:.3} -> {:.3}",
        run.seed,
        run.log.steps.len(),
        v.output.len(),
        v.input.len(),
        v.non_optimal.len(),
        dist(&run.log.initial_output),
        dist(&run.log.final_output),
    )?;
    if let Some((step, why)) = &run.log.aborted {
        writeln!(w, "  infeasible at step {step}: {why}")?;
    }
    Ok(())
}

pub fn estimate_lipschitz(data: &Path) -> Result<estimate::Estimate> {
    estimate::estimate(&window_of(&read_data(data)?)?)
}
