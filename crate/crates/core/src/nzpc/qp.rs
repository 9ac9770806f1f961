use nalgebra::{DMatrix, DVector};

use super::{AffinePredictor, NzpcConfig};
use crate::sets::Zonotope;
use crate::{Error, Result};

/// `min ½ zᵀ P z + qᵀ z + constant` subject to `lower ≤ A z ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_lower: DVector<f64>,
    pub ineq_upper: DVector<f64>,
    pub layout: QpLayout,
    pub blocks: Vec<RowBlock>,
}

/// Position of each variable block in the decision vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QpLayout {
    pub n_u: usize,
    pub horizon: usize,
    /// `(start, len)` of the output coefficients `β_{k+1}`.
    pub output_betas: Vec<(usize, usize)>,
    /// `(start, len)` of the input coefficients of step `k`, when `U_k` is
    /// not an axis-aligned box.
    pub input_betas: Vec<Option<(usize, usize)>>,
    pub n_vars: usize,
}

impl QpLayout {
    pub fn input(&self, z: &DVector<f64>, k: usize) -> DVector<f64> {
        z.rows(k * self.n_u, self.n_u).into_owned()
    }

    pub fn inputs(&self, z: &DVector<f64>) -> Vec<DVector<f64>> {
        (0..self.horizon).map(|k| self.input(z, k)).collect()
    }

    pub fn output_beta(&self, z: &DVector<f64>, k: usize) -> DVector<f64> {
        let (start, len) = self.output_betas[k];
        z.rows(start, len).into_owned()
    }
}

/// Named group of constraint rows, used for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RowBlock {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl QpProblem {
    pub fn n_vars(&self) -> usize {
        self.hessian.nrows()
    }

    pub fn n_constraints(&self) -> usize {
        self.ineq_matrix.nrows()
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.hessian * z)) + self.linear.dot(z) + self.constant
    }

    /// Largest bound violation of `A z`.
    pub fn max_violation(&self, z: &DVector<f64>) -> f64 {
        let az = &self.ineq_matrix * z;
        (0..az.len())
            .map(|i| {
                (self.ineq_lower[i] - az[i])
                    .max(az[i] - self.ineq_upper[i])
                    .max(0.0)
            })
            .fold(0.0, f64::max)
    }

    pub fn block_of(&self, row: usize) -> Option<&RowBlock> {
        self.blocks
            .iter()
            .find(|b| row >= b.start && row < b.start + b.len)
    }
}

fn is_axis_box(z: &Zonotope) -> bool {
    let g = z.generators();
    g.is_square() && (0..g.nrows()).all(|i| (0..g.ncols()).all(|j| i == j || g[(i, j)] == 0.0))
}

struct Rows {
    a: Vec<(DVector<f64>, f64, f64)>,
    blocks: Vec<RowBlock>,
    n_vars: usize,
}

impl Rows {
    fn begin(&mut self, name: String) -> usize {
        self.blocks.push(RowBlock {
            name,
            start: self.a.len(),
            len: 0,
        });
        self.a.len()
    }

    fn push(&mut self, row: DVector<f64>, lo: f64, hi: f64) {
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            return;
        }
        self.a.push((row, lo, hi));
        self.blocks.last_mut().expect("block started").len += 1;
    }

    fn zero(&self) -> DVector<f64> {
        DVector::zeros(self.n_vars)
    }
}

/// Builds the QP over `[u_0..u_{N−1}, β_1..β_N, β^u blocks]`:
///
/// - cost `Σ_k ‖c_{k+1}(u) + G_{k+1} β_{k+1} − y_ref‖²_Q + ‖u_k − u_ref‖²_R`,
/// - interval rows `Y_l + Δg ≤ c_{k+1}(u) ≤ Y_u − Δg`,
/// - `−1 ≤ β ≤ 1`,
/// - `u_k ∈ U_k`, as a box for axis-aligned `U_k` and through
///   `u_k = c_U + G_U β^u` otherwise.
///
/// Rows with both bounds infinite are dropped.
pub fn assemble_qp(pred: &AffinePredictor, cfg: &NzpcConfig) -> Result<QpProblem> {
    let horizon = pred.horizon();
    if horizon != cfg.horizon {
        return Err(Error::dims("predictor horizon", cfg.horizon, horizon));
    }
    let n_u = pred.n_u();
    let n_y = pred.n_y();
    if cfg.q.nrows() != n_y {
        return Err(Error::dims("Q", n_y, cfg.q.nrows()));
    }
    if cfg.r.nrows() != n_u {
        return Err(Error::dims("R", n_u, cfg.r.nrows()));
    }

    let mut next = horizon * n_u;
    let mut output_betas = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let len = pred.generators(k).ncols();
        output_betas.push((next, len));
        next += len;
    }
    let mut input_betas = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let u_set = cfg.input_constraint_at(k);
        if is_axis_box(u_set) {
            input_betas.push(None);
        } else {
            let len = u_set.num_generators();
            input_betas.push(Some((next, len)));
            next += len;
        }
    }
    let n_vars = next;
    let layout = QpLayout {
        n_u,
        horizon,
        output_betas,
        input_betas,
        n_vars,
    };

    // y_{k+1} − y_ref = S_k z + s_k
    let mut hessian = DMatrix::zeros(n_vars, n_vars);
    let mut linear = DVector::zeros(n_vars);
    let mut constant = 0.0;
    for k in 0..horizon {
        let mut s_mat = DMatrix::zeros(n_y, n_vars);
        for j in 0..=k {
            s_mat
                .columns_mut(j * n_u, n_u)
                .copy_from(pred.center_gain(k, j));
        }
        let (start, len) = layout.output_betas[k];
        s_mat.columns_mut(start, len).copy_from(pred.generators(k));
        let s_vec = pred.center_offset(k) - &cfg.y_ref;

        let qs = &cfg.q * &s_mat;
        hessian += 2.0 * s_mat.transpose() * &qs;
        linear += 2.0 * qs.transpose() * &s_vec;
        constant += s_vec.dot(&(&cfg.q * &s_vec));

        let block = k * n_u;
        let mut r_block = hessian.view_mut((block, block), (n_u, n_u));
        r_block += 2.0 * &cfg.r;
        let ru = &cfg.r * &cfg.u_ref;
        let mut lin_block = linear.rows_mut(block, n_u);
        lin_block -= 2.0 * &ru;
        constant += cfg.u_ref.dot(&ru);
    }
    hessian = (&hessian + hessian.transpose()) * 0.5;

    let mut rows = Rows {
        a: Vec::new(),
        blocks: Vec::new(),
        n_vars,
    };
    for k in 0..horizon {
        let (lo, hi) = cfg.output_bounds_at(k);
        if lo.len() != n_y || hi.len() != n_y {
            return Err(Error::dims("output bounds", n_y, lo.len().min(hi.len())));
        }
        rows.begin(format!("output interval, step {}", k + 1));
        let offset = pred.center_offset(k);
        let dg = pred.delta_g(k);
        for i in 0..n_y {
            let mut row = rows.zero();
            for j in 0..=k {
                row.rows_mut(j * n_u, n_u)
                    .copy_from(&pred.center_gain(k, j).row(i).transpose());
            }
            rows.push(row, lo[i] + dg[i] - offset[i], hi[i] - dg[i] - offset[i]);
        }
    }
    for k in 0..horizon {
        rows.begin(format!("output coefficients, step {}", k + 1));
        let (start, len) = layout.output_betas[k];
        for c in start..start + len {
            let mut row = rows.zero();
            row[c] = 1.0;
            rows.push(row, -1.0, 1.0);
        }
    }
    for k in 0..horizon {
        let u_set = cfg.input_constraint_at(k);
        if u_set.dim() != n_u {
            return Err(Error::dims("input constraint", n_u, u_set.dim()));
        }
        rows.begin(format!("input constraint, step {}", k));
        let c = u_set.center();
        match layout.input_betas[k] {
            None => {
                for i in 0..n_u {
                    let mut row = rows.zero();
                    row[k * n_u + i] = 1.0;
                    let w = u_set.generators()[(i, i)].abs();
                    rows.push(row, c[i] - w, c[i] + w);
                }
            }
            Some((start, len)) => {
                let g = u_set.generators();
                for i in 0..n_u {
                    let mut row = rows.zero();
                    row[k * n_u + i] = 1.0;
                    for j in 0..len {
                        row[start + j] = -g[(i, j)];
                    }
                    rows.push(row, c[i], c[i]);
                }
                for j in start..start + len {
                    let mut row = rows.zero();
                    row[j] = 1.0;
                    rows.push(row, -1.0, 1.0);
                }
            }
        }
    }

    let m = rows.a.len();
    let mut ineq_matrix = DMatrix::zeros(m, n_vars);
    let mut ineq_lower = DVector::zeros(m);
    let mut ineq_upper = DVector::zeros(m);
    for (i, (row, lo, hi)) in rows.a.into_iter().enumerate() {
        ineq_matrix.set_row(i, &row.transpose());
        ineq_lower[i] = lo;
        ineq_upper[i] = hi;
    }
    let blocks = rows.blocks.into_iter().filter(|b| b.len > 0).collect();
    Ok(QpProblem {
        hessian,
        linear,
        constant,
        ineq_matrix,
        ineq_lower,
        ineq_upper,
        layout,
        blocks,
    })
}
