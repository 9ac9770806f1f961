//! Parameter bundles for the stirred-tank reachability and control
//! experiments.

use std::sync::Arc;

use nalgebra::{dvector, DMatrix};

use crate::data::{DataWindow, PlantDimensions};
use crate::nzpc::{ClosedLoopLog, NzpcConfig, QpSettings};
use crate::plant::{verify_containment, ContainmentReport, CstrPlant, Dataset, PlantSimulator};
use crate::reach::{reach_horizon, ReachConfig, ReachResult};
use crate::sets::Zonotope;
use crate::Result;

pub const ETA: f64 = 22.0;
pub const TRAJECTORIES: usize = 50;
pub const TRAJECTORY_LENGTH: usize = 10;

/// Output map `H = [[1, 0.001], [−0.01, 1]]`.
pub fn output_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.001, -0.01, 1.0])
}

pub fn dimensions() -> PlantDimensions {
    PlantDimensions::new(output_matrix(), 2, ETA).expect("H has full row rank")
}

/// `⟨0, diag(0.08, 0.71)⟩`.
pub fn zeps() -> Zonotope {
    Zonotope::from_diagonal(&[0.0, 0.0], &[0.08, 0.71]).expect("valid box")
}

/// Everything needed to collect data, compute output reachable sets and check
/// them against the true plant.
#[derive(Debug, Clone)]
pub struct ReachabilityExperiment {
    pub dims: PlantDimensions,
    pub plant: CstrPlant,
    pub x0: Zonotope,
    pub horizon: usize,
    pub trajectories: usize,
    pub length: usize,
    pub reach: ReachConfig,
}

impl ReachabilityExperiment {
    pub fn standard() -> Self {
        let zw = Zonotope::from_columns(&[0.0, 0.0], &[&[2e-4, 2e-4]]).expect("valid");
        let zv = Zonotope::from_columns(&[0.0, 0.0], &[&[1e-3, 1e-3]]).expect("valid");
        let zu = Zonotope::from_diagonal(&[0.0, 0.0], &[0.1, 3.0]).expect("valid");
        Self {
            dims: dimensions(),
            plant: CstrPlant::default(),
            x0: Zonotope::from_diagonal(&[-2.0, -20.5], &[0.01, 0.2]).expect("valid"),
            horizon: 5,
            trajectories: TRAJECTORIES,
            length: TRAJECTORY_LENGTH,
            reach: ReachConfig {
                zw,
                zv,
                zu,
                lipschitz: dvector![1.0, 1.0],
                delta: 0.0,
                zeps_override: Some(zeps()),
            },
        }
    }

    pub fn simulator(&self, seed: u64) -> Result<PlantSimulator> {
        PlantSimulator::new(
            Arc::new(self.plant),
            self.dims.clone(),
            self.reach.zw.clone(),
            self.reach.zv.clone(),
            seed,
        )
    }

    /// `R̂y_0 = H X₀ + Z_v`.
    pub fn initial_output_set(&self) -> Result<Zonotope> {
        self.x0
            .linear_map(self.dims.h())?
            .minkowski_sum(&self.reach.zv)
    }

    pub fn generate_data(&self, seed: u64, record: bool) -> Result<Dataset> {
        self.simulator(seed)?.generate_dataset(
            &self.x0,
            &self.reach.zu,
            self.trajectories,
            self.length,
            record,
        )
    }

    pub fn reach(&self, window: &DataWindow) -> Result<ReachResult> {
        reach_horizon(
            window,
            &self.initial_output_set()?,
            self.horizon,
            &self.reach,
            &self.dims,
        )
    }

    /// Data collection, reachable sets and a Monte-Carlo containment check.
    pub fn run(&self, seed: u64, samples: usize) -> Result<(ReachResult, ContainmentReport)> {
        let data = self.generate_data(seed, false)?;
        let window = DataWindow::build(&data.trajectories)?;
        let result = self.reach(&window)?;
        let sim = self.simulator(seed)?;
        let report = verify_containment(
            &sim,
            &result,
            &self.x0,
            &self.reach.zu,
            samples,
            seed.wrapping_add(1),
            crate::sets::DEFAULT_CONTAINMENT_TOL,
        )?;
        Ok((result, report))
    }
}

/// Closed-loop experiment on the stirred tank.
#[derive(Debug, Clone)]
pub struct ControlExperiment {
    pub dims: PlantDimensions,
    pub plant: CstrPlant,
    pub x0: Zonotope,
    pub trajectories: usize,
    pub length: usize,
    pub nzpc: NzpcConfig,
}

impl ControlExperiment {
    pub fn standard() -> Self {
        let u_ref = dvector![0.0, 0.007];
        let input = Zonotope::from_diagonal(u_ref.as_slice(), &[5.0, 3.0]).expect("valid");
        let zw = Zonotope::from_columns(&[0.0, 0.0], &[&[2e-4, 0.02]]).expect("valid");
        let zv = Zonotope::from_columns(&[0.0, 0.0], &[&[1e-3, 0.01]]).expect("valid");
        Self {
            dims: dimensions(),
            plant: CstrPlant::default(),
            x0: Zonotope::from_diagonal(&[-2.0, -20.5], &[0.01, 1.0]).expect("valid"),
            trajectories: TRAJECTORIES,
            length: TRAJECTORY_LENGTH,
            nzpc: NzpcConfig {
                horizon: 3,
                q: DMatrix::identity(2, 2) * 5.0,
                r: DMatrix::identity(2, 2) * 0.02,
                y_ref: dvector![0.0, 0.0],
                u_ref,
                input_constraint: input.clone(),
                output_lower: dvector![-3.0, -22.0],
                output_upper: dvector![0.25, 2.7],
                input_overrides: vec![],
                output_overrides: vec![],
                steps: 150,
                reach: ReachConfig {
                    zw,
                    zv,
                    zu: input,
                    lipschitz: dvector![1.0, 1.0],
                    delta: 0.0,
                    zeps_override: Some(zeps()),
                },
                hold_previous_on_infeasible: false,
                qp: QpSettings::default(),
            },
        }
    }

    pub fn simulator(&self, seed: u64) -> Result<PlantSimulator> {
        PlantSimulator::new(
            Arc::new(self.plant),
            self.dims.clone(),
            self.nzpc.reach.zw.clone(),
            self.nzpc.reach.zv.clone(),
            seed,
        )
    }

    /// Offline data with inputs drawn from the input domain.
    pub fn generate_data(&self, seed: u64) -> Result<Dataset> {
        self.simulator(seed)?.generate_dataset(
            &self.x0,
            &self.nzpc.reach.zu,
            self.trajectories,
            self.length,
            false,
        )
    }

    pub fn run(&self, seed: u64, keep_sets: bool) -> Result<ClosedLoopLog> {
        let data = self.generate_data(seed)?;
        let window = DataWindow::build(&data.trajectories)?;
        let sim = self.simulator(seed)?;
        crate::nzpc::run_closed_loop(
            &sim,
            &self.nzpc,
            &window,
            &self.x0,
            seed.wrapping_add(1),
            keep_sets,
        )
    }
}
