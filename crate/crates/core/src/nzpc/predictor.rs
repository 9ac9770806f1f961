use nalgebra::{DMatrix, DVector};

use crate::data::PlantDimensions;
use crate::reach::{reach_step, LearnedModel, ReachConfig};
use crate::sets::Zonotope;
use crate::{Error, Result};

/// Predicted output sets as functions of the input sequence.
///
/// Step `k` (predicting time `t + k + 1`) has center
/// `offset_k + Σ_{j ≤ k} gain_{k,j} u_j` and the fixed generator matrix
/// `generators_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePredictor {
    n_u: usize,
    center_offsets: Vec<DVector<f64>>,
    center_gains: Vec<Vec<DMatrix<f64>>>,
    delta_g: Vec<DVector<f64>>,
    generators: Vec<DMatrix<f64>>,
}

impl AffinePredictor {
    pub fn horizon(&self) -> usize {
        self.center_offsets.len()
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_y(&self) -> usize {
        self.center_offsets.first().map_or(0, |c| c.len())
    }

    pub fn center_offset(&self, k: usize) -> &DVector<f64> {
        &self.center_offsets[k]
    }

    /// Coefficient of `u_j` in the center of step `k`, for `j ≤ k`.
    pub fn center_gain(&self, k: usize, j: usize) -> &DMatrix<f64> {
        &self.center_gains[k][j]
    }

    /// Interval-hull half-widths of step `k`.
    pub fn delta_g(&self, k: usize) -> &DVector<f64> {
        &self.delta_g[k]
    }

    pub fn generators(&self, k: usize) -> &DMatrix<f64> {
        &self.generators[k]
    }

    /// Centers of all steps for the input sequence `u_0..u_{N−1}`.
    pub fn centers(&self, inputs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        if inputs.len() != self.horizon() {
            return Err(Error::dims("input sequence", self.horizon(), inputs.len()));
        }
        if let Some(u) = inputs.iter().find(|u| u.len() != self.n_u) {
            return Err(Error::dims("input", self.n_u, u.len()));
        }
        Ok((0..self.horizon())
            .map(|k| {
                let mut c = self.center_offsets[k].clone();
                for (j, u) in inputs.iter().enumerate().take(k + 1) {
                    c += &self.center_gains[k][j] * u;
                }
                c
            })
            .collect())
    }

    /// Predicted output sets for a fixed input sequence.
    pub fn sets(&self, inputs: &[DVector<f64>]) -> Result<Vec<Zonotope>> {
        self.centers(inputs)?
            .into_iter()
            .zip(&self.generators)
            .map(|(c, g)| Zonotope::new(c, g.clone()))
            .collect()
    }
}

/// Runs the reachability recursion with point inputs symbolically:
/// `c_{k+1} = d + Â H† c_k + B̂ u_k` with
/// `d = m0 + Â(g_η c_η − H† c_v − x*) − B̂ u* + c_v + H c_w + c_L + c_ε`,
/// while the generators come from [`reach_step`] with `u = u*`, since a point
/// input contributes no generator columns.
pub fn build_predictor(
    learned: &LearnedModel,
    ry0: &Zonotope,
    horizon: usize,
    cfg: &ReachConfig,
    dims: &PlantDimensions,
) -> Result<AffinePredictor> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if ry0.dim() != dims.n_y {
        return Err(Error::dims("initial output set", dims.n_y, ry0.dim()));
    }
    let model = &learned.model;
    let point = &model.point;
    let a_hat = model.a_hat();
    let b_hat = model.b_hat();
    let transfer = &a_hat * dims.h_pinv();

    let state_center = dims.g_eta() * dims.state_box().center();
    let drift = model.m0()
        + &a_hat * (state_center - dims.h_pinv() * cfg.zv.center() - &point.x_star)
        - &b_hat * &point.u_star
        + cfg.zv.center()
        + dims.h() * cfg.zw.center()
        + learned.zl.center()
        + learned.zeps.center();

    let mut center_offsets: Vec<DVector<f64>> = Vec::with_capacity(horizon);
    let mut center_gains: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(horizon);
    let mut generators = Vec::with_capacity(horizon);
    let mut delta_g = Vec::with_capacity(horizon);

    let nominal = Zonotope::point(point.u_star.clone());
    let mut ry = ry0.clone();
    for k in 0..horizon {
        let prev_offset = center_offsets.last().unwrap_or(ry0.center());
        center_offsets.push(&drift + &transfer * prev_offset);
        let mut gains: Vec<DMatrix<f64>> = match center_gains.last() {
            Some(prev) => prev.iter().map(|g| &transfer * g).collect(),
            None => Vec::with_capacity(1),
        };
        gains.push(b_hat.clone());
        center_gains.push(gains);

        let (_, next) = reach_step(&ry, &nominal, learned, cfg, dims)?;
        delta_g.push(next.half_widths());
        generators.push(next.generators().clone());
        ry = next;
        debug_assert_eq!(center_gains[k].len(), k + 1);
    }

    Ok(AffinePredictor {
        n_u: dims.n_u,
        center_offsets,
        center_gains,
        delta_g,
        generators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reach::{LinearizationPoint, LinearizedModel};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn setup(mhat: DMatrix<f64>) -> (LearnedModel, ReachConfig, PlantDimensions) {
        let dims = PlantDimensions::new(DMatrix::from_row_slice(1, 1, &[2.0]), 1, 10.0).unwrap();
        let cfg = ReachConfig {
            zw: Zonotope::from_diagonal(&[0.01], &[0.1]).unwrap(),
            zv: Zonotope::from_diagonal(&[-0.02], &[0.05]).unwrap(),
            zu: Zonotope::from_diagonal(&[0.3], &[1.0]).unwrap(),
            lipschitz: dvector![1.0],
            delta: 0.1,
            zeps_override: None,
        };
        let point =
            LinearizationPoint::new(dvector![0.7], dvector![-0.02], dvector![0.3], &dims).unwrap();
        let learned = LearnedModel {
            model: LinearizedModel::new(mhat, point).unwrap(),
            zl: Zonotope::from_diagonal(&[0.03], &[0.2]).unwrap(),
            zeps: Zonotope::from_diagonal(&[0.0], &[0.05]).unwrap(),
        };
        (learned, cfg, dims)
    }

    #[test]
    fn single_step_gain_is_b_hat() {
        let (learned, cfg, dims) = setup(DMatrix::from_row_slice(1, 3, &[0.1, 0.8, 1.5]));
        let ry0 = Zonotope::point(dvector![0.7]);
        let p = build_predictor(&learned, &ry0, 1, &cfg, &dims).unwrap();
        assert_eq!(p.center_gain(0, 0), &learned.model.b_hat());
    }

    #[test]
    fn centers_match_point_input_recursion() {
        let (learned, cfg, dims) = setup(DMatrix::from_row_slice(1, 3, &[0.1, 0.8, 1.5]));
        let ry0 = Zonotope::from_diagonal(&[0.7], &[0.1]).unwrap();
        let p = build_predictor(&learned, &ry0, 4, &cfg, &dims).unwrap();
        let inputs = vec![dvector![0.2], dvector![-0.5], dvector![1.0], dvector![0.0]];
        let centers = p.centers(&inputs).unwrap();
        let mut ry = ry0.clone();
        for (k, u) in inputs.iter().enumerate() {
            let (_, next) =
                reach_step(&ry, &Zonotope::point(u.clone()), &learned, &cfg, &dims).unwrap();
            assert_relative_eq!(centers[k], next.center().clone(), epsilon = 1e-12);
            assert_eq!(p.generators(k), next.generators());
            ry = next;
        }
    }

    #[test]
    fn zero_model_centers_ignore_inputs() {
        let (learned, cfg, dims) = setup(DMatrix::zeros(1, 3));
        let ry0 = Zonotope::point(dvector![0.7]);
        let p = build_predictor(&learned, &ry0, 3, &cfg, &dims).unwrap();
        let a = p
            .centers(&[dvector![0.0], dvector![0.0], dvector![0.0]])
            .unwrap();
        let b = p
            .centers(&[dvector![5.0], dvector![-3.0], dvector![1.0]])
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn delta_g_is_generator_row_sum() {
        let (learned, cfg, dims) = setup(DMatrix::from_row_slice(1, 3, &[0.1, 0.8, 1.5]));
        let p = build_predictor(&learned, &Zonotope::point(dvector![0.7]), 2, &cfg, &dims).unwrap();
        for k in 0..2 {
            let sum: f64 = p.generators(k).iter().map(|g| g.abs()).sum();
            assert_relative_eq!(p.delta_g(k)[0], sum, epsilon = 1e-14);
        }
    }

    #[test]
    fn wrong_sequence_length_is_rejected() {
        let (learned, cfg, dims) = setup(DMatrix::zeros(1, 3));
        let p = build_predictor(&learned, &Zonotope::point(dvector![0.7]), 2, &cfg, &dims).unwrap();
        assert!(p.centers(&[dvector![0.0]]).is_err());
    }
}
