//! TOML experiment configuration. Every field has a default, so an empty file
//! reproduces the stirred-tank experiments.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use nalgebra::{DMatrix, DVector};
use nzpc_core::benchmark::{ControlExperiment, ReachabilityExperiment};
use nzpc_core::plant::CstrPhysical;
use nzpc_core::{
    CstrParams, CstrPlant, NzpcConfig, PlantDimensions, QpSettings, ReachConfig, Zonotope,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub system: SystemConfig,
    pub data: DataConfig,
    pub reach: ReachSpec,
    pub control: ControlSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantKind {
    /// Reactor in deviation coordinates around its operating point.
    Deviation,
    /// Absolute-coordinate expressions evaluated as written.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub plant: PlantKind,
    /// Upper clamp on the exponent of the printed form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp_arg_max: Option<f64>,
    /// Output matrix, row by row.
    pub h: Vec<Vec<f64>>,
    pub n_u: usize,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub trajectories: usize,
    pub length: usize,
    pub record_states: bool,
}

/// `⟨center, [g₁ … g_γ]⟩` with the generators listed column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZonotopeSpec {
    pub center: Vec<f64>,
    #[serde(default)]
    pub generators: Vec<Vec<f64>>,
}

/// Either a fixed `Z_ε` or `"formula"` to derive it from `lipschitz` and
/// `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZepsSpec {
    Fixed(ZonotopeSpec),
    Derived(ZepsKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZepsKeyword {
    Formula,
}

impl ZepsSpec {
    fn from_override(z: Option<&Zonotope>) -> Self {
        z.map_or(ZepsSpec::Derived(ZepsKeyword::Formula), |z| {
            ZepsSpec::Fixed(z.into())
        })
    }

    fn to_override(&self, field: &str) -> Result<Option<Zonotope>> {
        match self {
            ZepsSpec::Fixed(z) => z.to_zonotope(field).map(Some),
            ZepsSpec::Derived(ZepsKeyword::Formula) => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReachSpec {
    pub horizon: usize,
    pub samples: usize,
    pub x0: ZonotopeSpec,
    pub zw: ZonotopeSpec,
    pub zv: ZonotopeSpec,
    pub zu: ZonotopeSpec,
    pub lipschitz: Vec<f64>,
    pub delta: f64,
    pub zeps: ZepsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSpec {
    pub horizon: usize,
    pub steps: usize,
    /// Number of consecutive seeds run by one `nzpc` invocation.
    pub seeds: usize,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub y_ref: Vec<f64>,
    pub u_ref: Vec<f64>,
    /// Input constraint `U`; also the input domain unless `zu` is given.
    pub input: ZonotopeSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zu: Option<ZonotopeSpec>,
    pub output_lower: Vec<f64>,
    pub output_upper: Vec<f64>,
    pub x0: ZonotopeSpec,
    pub zw: ZonotopeSpec,
    pub zv: ZonotopeSpec,
    pub lipschitz: Vec<f64>,
    pub delta: f64,
    pub zeps: ZepsSpec,
    pub hold_previous_on_infeasible: bool,
    pub qp: QpSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub polish: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: PathBuf::from("out"),
            system: SystemConfig::default(),
            data: DataConfig::default(),
            reach: ReachSpec::default(),
            control: ControlSpec::default(),
        }
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        let h = nzpc_core::benchmark::output_matrix();
        Self {
            plant: PlantKind::Deviation,
            exp_arg_max: None,
            h: rows(&h),
            n_u: 2,
            eta: nzpc_core::benchmark::ETA,
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            trajectories: nzpc_core::benchmark::TRAJECTORIES,
            length: nzpc_core::benchmark::TRAJECTORY_LENGTH,
            record_states: false,
        }
    }
}

impl Default for ReachSpec {
    fn default() -> Self {
        let exp = ReachabilityExperiment::standard();
        Self {
            horizon: exp.horizon,
            samples: 1000,
            x0: (&exp.x0).into(),
            zw: (&exp.reach.zw).into(),
            zv: (&exp.reach.zv).into(),
            zu: (&exp.reach.zu).into(),
            lipschitz: exp.reach.lipschitz.iter().copied().collect(),
            delta: exp.reach.delta,
            zeps: ZepsSpec::from_override(exp.reach.zeps_override.as_ref()),
        }
    }
}

impl Default for ControlSpec {
    fn default() -> Self {
        let exp = ControlExperiment::standard();
        let c = &exp.nzpc;
        Self {
            horizon: c.horizon,
            steps: c.steps,
            seeds: 1,
            q: rows(&c.q),
            r: rows(&c.r),
            y_ref: c.y_ref.iter().copied().collect(),
            u_ref: c.u_ref.iter().copied().collect(),
            input: (&c.input_constraint).into(),
            zu: None,
            output_lower: c.output_lower.iter().copied().collect(),
            output_upper: c.output_upper.iter().copied().collect(),
            x0: (&exp.x0).into(),
            zw: (&c.reach.zw).into(),
            zv: (&c.reach.zv).into(),
            lipschitz: c.reach.lipschitz.iter().copied().collect(),
            delta: c.reach.delta,
            zeps: ZepsSpec::from_override(c.reach.zeps_override.as_ref()),
            hold_previous_on_infeasible: c.hold_previous_on_infeasible,
            qp: QpSpec::default(),
        }
    }
}

impl Default for QpSpec {
    fn default() -> Self {
        let s = QpSettings::default();
        Self {
            tol: s.tol,
            max_iter: s.max_iter,
            rho: s.rho,
            sigma: s.sigma,
            alpha: s.alpha,
            polish: s.polish,
        }
    }
}

impl From<&Zonotope> for ZonotopeSpec {
    fn from(z: &Zonotope) -> Self {
        Self {
            center: z.center().iter().copied().collect(),
            generators: z
                .generators()
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
        }
    }
}

impl ZonotopeSpec {
    pub fn to_zonotope(&self, field: &str) -> Result<Zonotope> {
        let n = self.center.len();
        if let Some((i, g)) = self
            .generators
            .iter()
            .enumerate()
            .find(|(_, g)| g.len() != n)
        {
            bail!(
                "{field}: generator {i} has {} entries, center has {n}",
                g.len()
            );
        }
        let g = DMatrix::from_fn(n, self.generators.len(), |r, c| self.generators[c][r]);
        Zonotope::new(DVector::from_vec(self.center.clone()), g).with_context(|| field.to_string())
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>> {
    ensure!(!rows.is_empty(), "{field}: matrix has no rows");
    let cols = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        bail!(
            "{field}: row {i} has {} entries, row 0 has {cols}",
            rows[i].len()
        );
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn dims(&self) -> Result<PlantDimensions> {
        let h = matrix(&self.system.h, "system.h")?;
        PlantDimensions::new(h, self.system.n_u, self.system.eta).context("system")
    }

    pub fn plant(&self) -> CstrPlant {
        match self.system.plant {
            PlantKind::Deviation => CstrPlant::Deviation(CstrPhysical::default()),
            PlantKind::Printed => CstrPlant::Printed(CstrParams {
                exp_arg_max: self.system.exp_arg_max,
                ..CstrParams::default()
            }),
        }
    }

    fn check_plant_dims(&self, dims: &PlantDimensions) -> Result<()> {
        ensure!(
            dims.n_x == 2 && dims.n_u == 2,
            "system: the reactor has 2 states and 2 inputs, H implies {} states and n_u = {}",
            dims.n_x,
            dims.n_u
        );
        Ok(())
    }

    pub fn reachability(&self) -> Result<ReachabilityExperiment> {
        let dims = self.dims()?;
        self.check_plant_dims(&dims)?;
        let r = &self.reach;
        ensure!(r.horizon >= 1, "reach.horizon must be at least 1");
        let reach = ReachConfig {
            zw: r.zw.to_zonotope("reach.zw")?,
            zv: r.zv.to_zonotope("reach.zv")?,
            zu: r.zu.to_zonotope("reach.zu")?,
            lipschitz: vector(&r.lipschitz),
            delta: r.delta,
            zeps_override: r.zeps.to_override("reach.zeps")?,
        };
        reach.validate(&dims).context("reach")?;
        let x0 = r.x0.to_zonotope("reach.x0")?;
        ensure!(
            x0.dim() == dims.n_x,
            "reach.x0: expected {} entries, got {}",
            dims.n_x,
            x0.dim()
        );
        Ok(ReachabilityExperiment {
            dims,
            plant: self.plant(),
            x0,
            horizon: r.horizon,
            trajectories: self.data.trajectories,
            length: self.data.length,
            reach,
        })
    }

    pub fn control(&self) -> Result<ControlExperiment> {
        let dims = self.dims()?;
        self.check_plant_dims(&dims)?;
        let c = &self.control;
        ensure!(c.horizon >= 1, "control.horizon must be at least 1");
        let input = c.input.to_zonotope("control.input")?;
        let zu = match &c.zu {
            Some(z) => z.to_zonotope("control.zu")?,
            None => input.clone(),
        };
        let nzpc = NzpcConfig {
            horizon: c.horizon,
            q: matrix(&c.q, "control.q")?,
            r: matrix(&c.r, "control.r")?,
            y_ref: vector(&c.y_ref),
            u_ref: vector(&c.u_ref),
            input_constraint: input,
            output_lower: vector(&c.output_lower),
            output_upper: vector(&c.output_upper),
            input_overrides: vec![],
            output_overrides: vec![],
            steps: c.steps,
            reach: ReachConfig {
                zw: c.zw.to_zonotope("control.zw")?,
                zv: c.zv.to_zonotope("control.zv")?,
                zu,
                lipschitz: vector(&c.lipschitz),
                delta: c.delta,
                zeps_override: c.zeps.to_override("control.zeps")?,
            },
            hold_previous_on_infeasible: c.hold_previous_on_infeasible,
            qp: QpSettings {
                tol: c.qp.tol,
                max_iter: c.qp.max_iter,
                rho: c.qp.rho,
                sigma: c.qp.sigma,
                alpha: c.qp.alpha,
                polish: c.qp.polish,
                ..QpSettings::default()
            },
        };
        nzpc.validate(&dims).context("control")?;
        let x0 = c.x0.to_zonotope("control.x0")?;
        ensure!(
            x0.dim() == dims.n_x,
            "control.x0: expected {} entries, got {}",
            dims.n_x,
            x0.dim()
        );
        Ok(ControlExperiment {
            dims,
            plant: self.plant(),
            x0,
            trajectories: self.data.trajectories,
            length: self.data.length,
            nzpc,
        })
    }

    /// Checks every section, so a bad field is reported before anything runs.
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.seed <= i64::MAX as u64,
            "seed must fit a TOML integer (at most {}), got {}",
            i64::MAX,
            self.seed
        );
        ensure!(
            self.data.trajectories >= 1,
            "data.trajectories must be at least 1"
        );
        ensure!(self.data.length >= 2, "data.length must be at least 2");
        self.reachability()?;
        self.control()?;
        Ok(())
    }
}
