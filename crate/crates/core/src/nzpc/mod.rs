//! Receding-horizon control on data-driven reachable sets.
//!
//! At every time step the controller learns a linearized model from the
//! current data window, expresses the centers of the predicted output sets as
//! affine functions of the input sequence ([`AffinePredictor`]), turns the
//! optimal control problem into a convex QP ([`QpProblem`]), solves it with
//! an operator-splitting method ([`solve_qp`]) and applies the first input.
//!
//! Predicted outputs are encoded exactly as zonotope members
//! `y = c(u) + G β`, `‖β‖∞ ≤ 1`; the output constraints act on the interval
//! hull `c(u) ± Δg` of each predicted set.

mod closed_loop;
mod predictor;
mod qp;
mod solver;

pub use closed_loop::{
    nzpc_step, run_closed_loop, ClosedLoopLog, ClosedLoopStep, NzpcStep, Violations,
};
pub use predictor::{build_predictor, AffinePredictor};
pub use qp::{assemble_qp, QpLayout, QpProblem, RowBlock};
pub use solver::{solve_qp, QpSettings, QpSolution, QpStatus};

use nalgebra::{DMatrix, DVector};

use crate::data::PlantDimensions;
use crate::linalg;
use crate::reach::ReachConfig;
use crate::sets::Zonotope;
use crate::{Error, Result};

/// Controller parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NzpcConfig {
    /// Prediction horizon `N`.
    pub horizon: usize,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub y_ref: DVector<f64>,
    pub u_ref: DVector<f64>,
    /// `U_k` for every prediction step without an override.
    pub input_constraint: Zonotope,
    pub output_lower: DVector<f64>,
    pub output_upper: DVector<f64>,
    /// Entry `k` replaces `U_k` for prediction step `k`.
    pub input_overrides: Vec<Zonotope>,
    /// Entry `k` replaces the output bounds for prediction step `k`.
    pub output_overrides: Vec<(DVector<f64>, DVector<f64>)>,
    /// Closed-loop length.
    pub steps: usize,
    pub reach: ReachConfig,
    /// Apply the previous input when the QP is infeasible instead of stopping.
    pub hold_previous_on_infeasible: bool,
    pub qp: QpSettings,
}

impl NzpcConfig {
    pub fn input_constraint_at(&self, k: usize) -> &Zonotope {
        self.input_overrides
            .get(k)
            .unwrap_or(&self.input_constraint)
    }

    pub fn output_bounds_at(&self, k: usize) -> (&DVector<f64>, &DVector<f64>) {
        match self.output_overrides.get(k) {
            Some((lo, hi)) => (lo, hi),
            None => (&self.output_lower, &self.output_upper),
        }
    }

    pub fn validate(&self, dims: &PlantDimensions) -> Result<()> {
        self.reach.validate(dims)?;
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        check_weight(&self.q, dims.n_y, "Q")?;
        check_weight(&self.r, dims.n_u, "R")?;
        if self.y_ref.len() != dims.n_y {
            return Err(Error::dims("y_ref", dims.n_y, self.y_ref.len()));
        }
        if self.u_ref.len() != dims.n_u {
            return Err(Error::dims("u_ref", dims.n_u, self.u_ref.len()));
        }
        let zu = self.reach.zu.to_interval();
        for k in 0..self.horizon {
            let u = self.input_constraint_at(k);
            if u.dim() != dims.n_u {
                return Err(Error::dims("input constraint", dims.n_u, u.dim()));
            }
            if !zu.encloses(&u.to_interval(), 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "input constraint of step {k} is not inside the input domain Z_u"
                )));
            }
            let (lo, hi) = self.output_bounds_at(k);
            if lo.len() != dims.n_y {
                return Err(Error::dims("output lower bound", dims.n_y, lo.len()));
            }
            if hi.len() != dims.n_y {
                return Err(Error::dims("output upper bound", dims.n_y, hi.len()));
            }
            if let Some(i) = (0..dims.n_y).find(|&i| !(lo[i] <= hi[i])) {
                return Err(Error::InvalidArgument(format!(
                    "output bounds of step {k} are inverted in dimension {i}: {} > {}",
                    lo[i], hi[i]
                )));
            }
        }
        Ok(())
    }
}

fn check_weight(m: &DMatrix<f64>, n: usize, name: &'static str) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(Error::dims(name, n, m.nrows()));
    }
    if !linalg::is_symmetric(m, 1e-12) {
        return Err(Error::InvalidArgument(format!("{name} must be symmetric")));
    }
    let min = linalg::min_symmetric_eigenvalue(m);
    if !(min > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{name} must be positive definite, smallest eigenvalue {min}"
        )));
    }
    Ok(())
}
