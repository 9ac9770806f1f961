//! Data-driven reachability: fit an implicit linearized model to a data
//! window, bound the model mismatch together with the Lagrange remainder, and
//! propagate output reachable sets that over-approximate the exact ones.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::data::{DataWindow, PlantDimensions};
use crate::linalg;
use crate::sets::{IntervalVector, Zonotope};
use crate::{Error, Result};

/// Noise and input sets, Lipschitz constants and covering radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachConfig {
    /// Process noise set, dimension `n_x`.
    pub zw: Zonotope,
    /// Measurement noise set, dimension `n_y`.
    pub zv: Zonotope,
    /// Input domain, dimension `n_u`.
    pub zu: Zonotope,
    /// Per-component Lipschitz constants of `f`, length `n_x`.
    pub lipschitz: DVector<f64>,
    /// Covering radius of the data in the extended state space.
    pub delta: f64,
    /// Replaces the Lipschitz box when set.
    pub zeps_override: Option<Zonotope>,
}

impl ReachConfig {
    pub fn validate(&self, dims: &PlantDimensions) -> Result<()> {
        if self.zw.dim() != dims.n_x {
            return Err(Error::dims("process noise set", dims.n_x, self.zw.dim()));
        }
        if self.zv.dim() != dims.n_y {
            return Err(Error::dims(
                "measurement noise set",
                dims.n_y,
                self.zv.dim(),
            ));
        }
        if self.zu.dim() != dims.n_u {
            return Err(Error::dims("input set", dims.n_u, self.zu.dim()));
        }
        if self.lipschitz.len() != dims.n_x {
            return Err(Error::dims(
                "Lipschitz constants",
                dims.n_x,
                self.lipschitz.len(),
            ));
        }
        if let Some(i) = self.lipschitz.iter().position(|&l| !(l > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz constant {i} must be positive, got {}",
                self.lipschitz[i]
            )));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "covering radius must be non-negative, got {}",
                self.delta
            )));
        }
        if let Some(z) = &self.zeps_override {
            if z.dim() != dims.n_y {
                return Err(Error::dims("Z_eps override", dims.n_y, z.dim()));
            }
        }
        Ok(())
    }
}

/// Linearization point `ξ* = [x*; u*]` with `x* = H†(y* − v*)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationPoint {
    pub y_star: DVector<f64>,
    pub v_star: DVector<f64>,
    pub u_star: DVector<f64>,
    pub x_star: DVector<f64>,
    pub xi_star: DVector<f64>,
}

impl LinearizationPoint {
    pub fn new(
        y_star: DVector<f64>,
        v_star: DVector<f64>,
        u_star: DVector<f64>,
        dims: &PlantDimensions,
    ) -> Result<Self> {
        if y_star.len() != dims.n_y {
            return Err(Error::dims("y*", dims.n_y, y_star.len()));
        }
        if v_star.len() != dims.n_y {
            return Err(Error::dims("v*", dims.n_y, v_star.len()));
        }
        if u_star.len() != dims.n_u {
            return Err(Error::dims("u*", dims.n_u, u_star.len()));
        }
        let x_star = dims.h_pinv() * (&y_star - &v_star);
        let mut xi_star = DVector::zeros(dims.n_x + dims.n_u);
        xi_star.rows_mut(0, dims.n_x).copy_from(&x_star);
        xi_star.rows_mut(dims.n_x, dims.n_u).copy_from(&u_star);
        Ok(Self {
            y_star,
            v_star,
            u_star,
            x_star,
            xi_star,
        })
    }

    /// Centers of the initial output set, the measurement noise and the input
    /// domain, which keeps the Lagrange remainder small.
    pub fn from_set_centers(
        ry0: &Zonotope,
        cfg: &ReachConfig,
        dims: &PlantDimensions,
    ) -> Result<Self> {
        Self::new(
            ry0.center().clone(),
            cfg.zv.center().clone(),
            cfg.zu.center().clone(),
            dims,
        )
    }
}

/// `M̂ = [m0 | Â | B̂]` around a linearization point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedModel {
    mhat: DMatrix<f64>,
    n_x: usize,
    pub point: LinearizationPoint,
}

impl LinearizedModel {
    pub fn new(mhat: DMatrix<f64>, point: LinearizationPoint) -> Result<Self> {
        let n_x = point.x_star.len();
        let n_u = point.u_star.len();
        if mhat.ncols() != 1 + n_x + n_u {
            return Err(Error::dims("model columns", 1 + n_x + n_u, mhat.ncols()));
        }
        if mhat.nrows() != point.y_star.len() {
            return Err(Error::dims("model rows", point.y_star.len(), mhat.nrows()));
        }
        Ok(Self { mhat, n_x, point })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mhat
    }

    /// Offset `f_H(x*, u*)` estimate.
    pub fn m0(&self) -> DVector<f64> {
        self.mhat.column(0).into_owned()
    }

    pub fn a_hat(&self) -> DMatrix<f64> {
        self.mhat.columns(1, self.n_x).into_owned()
    }

    pub fn b_hat(&self) -> DMatrix<f64> {
        let n_u = self.mhat.ncols() - 1 - self.n_x;
        self.mhat.columns(1 + self.n_x, n_u).into_owned()
    }
}

/// Everything the learning phase produces for one window.
#[derive(Debug, Clone)]
pub struct LearnedModel {
    pub model: LinearizedModel,
    pub zl: Zonotope,
    pub zeps: Zonotope,
}

/// Output of [`reach_horizon`]. `output_sets[k]` is the set `k + 1` steps
/// ahead; `state_sets[k]` is the state set used to produce it.
#[derive(Debug, Clone)]
pub struct ReachResult {
    pub initial: Zonotope,
    pub model: LinearizedModel,
    pub zl: Zonotope,
    pub zeps: Zonotope,
    pub output_sets: Vec<Zonotope>,
    pub state_sets: Vec<Zonotope>,
}

#[derive(Serialize)]
struct ModelDump<'a> {
    m0: Vec<f64>,
    a_hat: Vec<Vec<f64>>,
    b_hat: Vec<Vec<f64>>,
    linearization_point: &'a LinearizationPoint,
}

#[derive(Serialize)]
struct ReachDump<'a> {
    initial: &'a Zonotope,
    output_sets: &'a [Zonotope],
    state_sets: &'a [Zonotope],
    zl: &'a Zonotope,
    zeps: &'a Zonotope,
    model: ModelDump<'a>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ReachResult {
    pub fn horizon(&self) -> usize {
        self.output_sets.len()
    }

    pub fn learned(&self) -> LearnedModel {
        LearnedModel {
            model: self.model.clone(),
            zl: self.zl.clone(),
            zeps: self.zeps.clone(),
        }
    }

    /// JSON dump of all sets and the model matrices.
    pub fn to_json(&self) -> Result<String> {
        let dump = ReachDump {
            initial: &self.initial,
            output_sets: &self.output_sets,
            state_sets: &self.state_sets,
            zl: &self.zl,
            zeps: &self.zeps,
            model: ModelDump {
                m0: self.model.m0().iter().copied().collect(),
                a_hat: rows(&self.model.a_hat()),
                b_hat: rows(&self.model.b_hat()),
                linearization_point: &self.model.point,
            },
        };
        Ok(serde_json::to_string_pretty(&dump)?)
    }
}

/// Least-squares fit
/// `M̂ = (Y₊ − H C_Mw − C_Mv) [1ᵀ; H†(Y₋ − 1ᵀ⊗y*); U₋ − 1ᵀ⊗u*]†`.
pub fn estimate_model(
    window: &DataWindow,
    point: &LinearizationPoint,
    cfg: &ReachConfig,
    dims: &PlantDimensions,
) -> Result<LinearizedModel> {
    check_window(window, dims)?;
    let t = window.len();
    let (n_x, n_u) = (dims.n_x, dims.n_u);

    let mut regressor = DMatrix::zeros(1 + n_x + n_u, t);
    regressor.row_mut(0).fill(1.0);
    let dy = window.y_minus() - linalg::repeat_column(&point.y_star, t);
    regressor.rows_mut(1, n_x).copy_from(&(dims.h_pinv() * dy));
    let du = window.u_minus() - linalg::repeat_column(&point.u_star, t);
    regressor.rows_mut(1 + n_x, n_u).copy_from(&du);

    // The state rows pass through H†, so at most n_y of them are independent.
    let required = 1 + dims.n_y + n_u;
    let rank = linalg::numerical_rank(&regressor);
    if rank < required {
        return Err(Error::RankDeficient {
            what: "data regressor (insufficiently exciting data)",
            rank,
            required,
        });
    }

    let c_mw = cfg.zw.concat_noise(t)?;
    let c_mv = cfg.zv.concat_noise(t)?;
    let target = window.y_plus() - dims.h() * c_mw.center() - c_mv.center();
    let mhat = target * linalg::pseudo_inverse(&regressor);
    LinearizedModel::new(mhat, point.clone())
}

/// Zonotope bounding model mismatch plus Lagrange remainder at the data
/// points: interval hull of the residuals
/// `r_j = (Y₊)_j − M̂ [0; H†((Y₋)_j − (y* − v*)); (U₋)_j − u*]`, minus
/// `M̂ (1 × (−H† Z_v + g_η Z_η) × 0)`, `H Z_w` and `Z_v`.
pub fn compute_zl(
    window: &DataWindow,
    model: &LinearizedModel,
    cfg: &ReachConfig,
    dims: &PlantDimensions,
) -> Result<Zonotope> {
    check_window(window, dims)?;
    if window.is_empty() {
        return Err(Error::InvalidArgument("empty data window".into()));
    }
    let t = window.len();
    let p = &model.point;
    let (n_x, n_u) = (dims.n_x, dims.n_u);

    let mut regressor = DMatrix::zeros(1 + n_x + n_u, t);
    let shift = &p.y_star - &p.v_star;
    let dy = window.y_minus() - linalg::repeat_column(&shift, t);
    regressor.rows_mut(1, n_x).copy_from(&(dims.h_pinv() * dy));
    let du = window.u_minus() - linalg::repeat_column(&p.u_star, t);
    regressor.rows_mut(1 + n_x, n_u).copy_from(&du);
    let residuals = window.y_plus() - model.matrix() * regressor;

    let lower = DVector::from_iterator(dims.n_y, residuals.row_iter().map(|r| r.min()));
    let upper = DVector::from_iterator(dims.n_y, residuals.row_iter().map(|r| r.max()));
    let hull = Zonotope::from_interval(&IntervalVector::new(lower, upper)?);

    let state_part = cfg
        .zv
        .linear_map(dims.h_pinv())?
        .negate()
        .minkowski_sum(&dims.state_box().linear_map(dims.g_eta())?)?;
    let stacked = Zonotope::point(DVector::from_element(1, 1.0))
        .cartesian_product(&state_part)
        .cartesian_product(&Zonotope::origin(n_u));
    let mapped = stacked.linear_map(model.matrix())?;

    // Proof-consistent H·Z_w (not H†·Z_w).
    hull.minkowski_difference(&mapped)?
        .minkowski_difference(&cfg.zw.linear_map(dims.h())?)?
        .minkowski_difference(&cfg.zv)
}

/// `⟨0, diag(|H_i,·| L_f δ / 2)⟩`, or the configured override.
pub fn compute_zeps(cfg: &ReachConfig, dims: &PlantDimensions) -> Zonotope {
    if let Some(z) = &cfg.zeps_override {
        return z.clone();
    }
    let half = DVector::from_iterator(
        dims.n_y,
        dims.h()
            .row_iter()
            .map(|row| row.abs().dot(&cfg.lipschitz.transpose()) * cfg.delta / 2.0),
    );
    Zonotope::new(DVector::zeros(dims.n_y), DMatrix::from_diagonal(&half))
        .expect("square generator")
}

/// Learning phase for one window around the given linearization point.
pub fn learn(
    window: &DataWindow,
    point: &LinearizationPoint,
    cfg: &ReachConfig,
    dims: &PlantDimensions,
) -> Result<LearnedModel> {
    cfg.validate(dims)?;
    let model = estimate_model(window, point, cfg, dims)?;
    let zl = compute_zl(window, &model, cfg, dims)?;
    let zeps = compute_zeps(cfg, dims);
    Ok(LearnedModel { model, zl, zeps })
}

/// One propagation step:
/// `R̂x = H†(R̂y − Z_v) + g_η Z_η`,
/// `R̂y⁺ = M̂ (1 × ((R̂x × U) − ξ*)) + Z_v + H Z_w + Z_L + Z_ε`.
pub fn reach_step(
    ry: &Zonotope,
    input_set: &Zonotope,
    learned: &LearnedModel,
    cfg: &ReachConfig,
    dims: &PlantDimensions,
) -> Result<(Zonotope, Zonotope)> {
    if ry.dim() != dims.n_y {
        return Err(Error::dims("output set", dims.n_y, ry.dim()));
    }
    if input_set.dim() != dims.n_u {
        return Err(Error::dims("input set", dims.n_u, input_set.dim()));
    }
    let rx = ry
        .minkowski_difference(&cfg.zv)?
        .linear_map(dims.h_pinv())?
        .minkowski_sum(&dims.state_box().linear_map(dims.g_eta())?)?;
    let extended = rx
        .cartesian_product(input_set)
        .translate(&-&learned.model.point.xi_star)?;
    let lifted = Zonotope::point(DVector::from_element(1, 1.0)).cartesian_product(&extended);
    let next = lifted
        .linear_map(learned.model.matrix())?
        .minkowski_sum(&cfg.zv)?
        .minkowski_sum(&cfg.zw.linear_map(dims.h())?)?
        .minkowski_sum(&learned.zl)?
        .minkowski_sum(&learned.zeps)?;
    Ok((rx, next))
}

/// Learns once from `window` (linearizing at the centers of `ry0`, `Z_v`,
/// `Z_u`) and propagates `horizon` steps with the whole input domain.
pub fn reach_horizon(
    window: &DataWindow,
    ry0: &Zonotope,
    horizon: usize,
    cfg: &ReachConfig,
    dims: &PlantDimensions,
) -> Result<ReachResult> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if ry0.dim() != dims.n_y {
        return Err(Error::dims("initial output set", dims.n_y, ry0.dim()));
    }
    let point = LinearizationPoint::from_set_centers(ry0, cfg, dims)?;
    let learned = learn(window, &point, cfg, dims)?;

    let mut output_sets = Vec::with_capacity(horizon);
    let mut state_sets = Vec::with_capacity(horizon);
    let mut ry = ry0.clone();
    for _ in 0..horizon {
        let (rx, next) = reach_step(&ry, &cfg.zu, &learned, cfg, dims)?;
        state_sets.push(rx);
        output_sets.push(next.clone());
        ry = next;
    }
    Ok(ReachResult {
        initial: ry0.clone(),
        model: learned.model,
        zl: learned.zl,
        zeps: learned.zeps,
        output_sets,
        state_sets,
    })
}

fn check_window(window: &DataWindow, dims: &PlantDimensions) -> Result<()> {
    if window.n_y() != dims.n_y {
        return Err(Error::dims("window outputs", dims.n_y, window.n_y()));
    }
    if window.n_u() != dims.n_u {
        return Err(Error::dims("window inputs", dims.n_u, window.n_u()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn scalar_dims() -> PlantDimensions {
        PlantDimensions::new(DMatrix::identity(1, 1), 1, 100.0).unwrap()
    }

    fn scalar_cfg() -> ReachConfig {
        ReachConfig {
            zw: Zonotope::origin(1),
            zv: Zonotope::origin(1),
            zu: Zonotope::from_diagonal(&[0.0], &[1.0]).unwrap(),
            lipschitz: dvector![1.0],
            delta: 0.0,
            zeps_override: None,
        }
    }

    /// x⁺ = 0.5 x + u, y = x, no noise.
    fn lti_window() -> DataWindow {
        let mut x = 1.0;
        let us = [0.3, -0.7, 0.2, 0.9, -0.4, 0.1, -1.0, 0.5];
        let mut ym = Vec::new();
        let mut yp = Vec::new();
        for &u in &us {
            let xn = 0.5 * x + u;
            ym.push(x);
            yp.push(xn);
            x = xn;
        }
        DataWindow::from_matrices(
            DMatrix::from_row_slice(1, us.len(), &ym),
            DMatrix::from_row_slice(1, us.len(), &us),
            DMatrix::from_row_slice(1, us.len(), &yp),
        )
        .unwrap()
    }

    #[test]
    fn lti_recovery() {
        let dims = scalar_dims();
        let cfg = scalar_cfg();
        let p =
            LinearizationPoint::new(dvector![0.0], dvector![0.0], dvector![0.0], &dims).unwrap();
        let m = estimate_model(&lti_window(), &p, &cfg, &dims).unwrap();
        assert_relative_eq!(
            m.matrix(),
            &DMatrix::from_row_slice(1, 3, &[0.0, 0.5, 1.0]),
            epsilon = 1e-8
        );
    }

    #[test]
    fn lti_zl_contains_origin() {
        let dims = scalar_dims();
        let cfg = scalar_cfg();
        let p =
            LinearizationPoint::new(dvector![0.3], dvector![0.0], dvector![0.0], &dims).unwrap();
        let w = lti_window();
        let m = estimate_model(&w, &p, &cfg, &dims).unwrap();
        let zl = compute_zl(&w, &m, &cfg, &dims).unwrap();
        assert!(zl.contains_point(&dvector![0.0], 1e-9).unwrap());
        assert!(zl.half_widths()[0] < 1e-9);
    }

    #[test]
    fn rank_deficient_regressor_is_reported() {
        let dims = scalar_dims();
        let cfg = scalar_cfg();
        // constant input: u row is collinear with the ones row
        let w = DataWindow::from_matrices(
            DMatrix::from_row_slice(1, 4, &[1.0, 2.0, 3.0, 4.0]),
            DMatrix::from_row_slice(1, 4, &[1.0, 1.0, 1.0, 1.0]),
            DMatrix::from_row_slice(1, 4, &[2.0, 3.0, 4.0, 5.0]),
        )
        .unwrap();
        let p =
            LinearizationPoint::new(dvector![0.0], dvector![0.0], dvector![0.0], &dims).unwrap();
        assert!(matches!(
            estimate_model(&w, &p, &cfg, &dims),
            Err(Error::RankDeficient {
                rank: 2,
                required: 3,
                ..
            })
        ));
    }

    #[test]
    fn fewer_outputs_than_states_fits_min_norm_model() {
        let dims =
            PlantDimensions::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), 1, 100.0).unwrap();
        let cfg = ReachConfig {
            zw: Zonotope::origin(2),
            zv: Zonotope::origin(1),
            zu: Zonotope::from_diagonal(&[0.0], &[1.0]).unwrap(),
            lipschitz: dvector![1.0, 1.0],
            delta: 0.0,
            zeps_override: None,
        };
        let y = [1.0, -2.0, 0.5, 3.0, -1.0];
        let u = [0.3, 0.1, -0.7, 0.2, 0.9];
        let y_plus: Vec<f64> = y
            .iter()
            .zip(&u)
            .map(|(y, u)| 0.1 + 0.5 * y + 2.0 * u)
            .collect();
        let w = DataWindow::from_matrices(
            DMatrix::from_row_slice(1, 5, &y),
            DMatrix::from_row_slice(1, 5, &u),
            DMatrix::from_row_slice(1, 5, &y_plus),
        )
        .unwrap();
        let p =
            LinearizationPoint::new(dvector![0.0], dvector![0.0], dvector![0.0], &dims).unwrap();
        let m = estimate_model(&w, &p, &cfg, &dims).unwrap();
        let expected = DMatrix::from_row_slice(1, 4, &[0.1, 0.5, 0.0, 2.0]);
        assert!((m.matrix() - expected).norm() < 1e-12);
    }

    #[test]
    fn zeps_formula_and_override() {
        let dims = PlantDimensions::new(DMatrix::identity(2, 2), 1, 10.0).unwrap();
        let mut cfg = ReachConfig {
            zw: Zonotope::origin(2),
            zv: Zonotope::origin(2),
            zu: Zonotope::origin(1),
            lipschitz: dvector![1.0, 1.0],
            delta: 0.0,
            zeps_override: None,
        };
        assert!(compute_zeps(&cfg, &dims).is_point());
        cfg.delta = 2.0;
        assert_eq!(
            compute_zeps(&cfg, &dims).generators(),
            &DMatrix::<f64>::identity(2, 2)
        );
        let o = Zonotope::from_diagonal(&[0.0, 0.0], &[0.08, 0.71]).unwrap();
        cfg.zeps_override = Some(o.clone());
        assert_eq!(compute_zeps(&cfg, &dims), o);
    }

    #[test]
    fn zeps_uses_absolute_rows() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.001, -0.01, 1.0]);
        let dims = PlantDimensions::new(h, 2, 22.0).unwrap();
        let cfg = ReachConfig {
            zw: Zonotope::origin(2),
            zv: Zonotope::origin(2),
            zu: Zonotope::origin(2),
            lipschitz: dvector![2.0, 4.0],
            delta: 0.5,
            zeps_override: None,
        };
        let hw = compute_zeps(&cfg, &dims).half_widths();
        assert_relative_eq!(
            hw,
            dvector![(2.0 + 0.004) * 0.25, (0.02 + 4.0) * 0.25],
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_model_gives_origin() {
        let dims = scalar_dims();
        let cfg = ReachConfig {
            zu: Zonotope::origin(1),
            ..scalar_cfg()
        };
        let point =
            LinearizationPoint::new(dvector![0.0], dvector![0.0], dvector![0.0], &dims).unwrap();
        let learned = LearnedModel {
            model: LinearizedModel::new(DMatrix::zeros(1, 3), point).unwrap(),
            zl: Zonotope::origin(1),
            zeps: Zonotope::origin(1),
        };
        let ry = Zonotope::from_diagonal(&[3.0], &[1.0]).unwrap();
        let (_, next) = reach_step(&ry, &cfg.zu, &learned, &cfg, &dims).unwrap();
        assert_eq!(next.center(), &dvector![0.0]);
        assert!(next.is_point());
    }

    #[test]
    fn point_input_enters_through_b_hat() {
        let dims = scalar_dims();
        let cfg = scalar_cfg();
        let point =
            LinearizationPoint::new(dvector![0.0], dvector![0.0], dvector![0.2], &dims).unwrap();
        let learned = LearnedModel {
            model: LinearizedModel::new(DMatrix::from_row_slice(1, 3, &[0.1, 0.5, 2.0]), point)
                .unwrap(),
            zl: Zonotope::origin(1),
            zeps: Zonotope::origin(1),
        };
        let ry = Zonotope::point(dvector![1.0]);
        let c = |u: f64| {
            reach_step(&ry, &Zonotope::point(dvector![u]), &learned, &cfg, &dims)
                .unwrap()
                .1
                .center()[0]
        };
        assert_relative_eq!(c(1.0) - c(0.0), 2.0, epsilon = 1e-14);
        assert_relative_eq!(c(0.2), 0.1 + 0.5, epsilon = 1e-14);
    }

    #[test]
    fn horizon_one_equals_single_step() {
        let dims = scalar_dims();
        let cfg = scalar_cfg();
        let w = lti_window();
        let ry0 = Zonotope::from_diagonal(&[0.5], &[0.1]).unwrap();
        let r = reach_horizon(&w, &ry0, 1, &cfg, &dims).unwrap();
        let (_, next) = reach_step(&ry0, &cfg.zu, &r.learned(), &cfg, &dims).unwrap();
        assert_eq!(r.output_sets, vec![next]);
        assert!(reach_horizon(&w, &ry0, 0, &cfg, &dims).is_err());
    }

    #[test]
    fn config_validation() {
        let dims = scalar_dims();
        let mut cfg = scalar_cfg();
        cfg.lipschitz = dvector![0.0];
        assert!(cfg.validate(&dims).is_err());
        let mut cfg = scalar_cfg();
        cfg.delta = -1.0;
        assert!(cfg.validate(&dims).is_err());
        let mut cfg = scalar_cfg();
        cfg.zw = Zonotope::origin(2);
        assert!(cfg.validate(&dims).is_err());
    }
}
