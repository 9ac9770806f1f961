use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{IntervalVector, MatrixZonotope};
use crate::{Error, Result};

/// Relative tolerance used by [`Zonotope::contains_point`] when callers have
/// no better figure.
pub const DEFAULT_CONTAINMENT_TOL: f64 = 1e-9;

/// Zonotope `⟨c, G⟩ = { c + G β : ‖β‖∞ ≤ 1 }`.
///
/// `G` is `n × γ`; `γ = 0` is a point. Generator columns are kept in the order
/// the operations produce them, zero columns included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ZonotopeRepr", into = "ZonotopeRepr")]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

/// JSON layout: `{"center": [...], "generators": [[col1], [col2], ...]}`.
#[derive(Serialize, Deserialize)]
struct ZonotopeRepr {
    center: Vec<f64>,
    generators: Vec<Vec<f64>>,
}

impl TryFrom<ZonotopeRepr> for Zonotope {
    type Error = Error;

    fn try_from(r: ZonotopeRepr) -> Result<Self> {
        let n = r.center.len();
        let mut data = Vec::with_capacity(n * r.generators.len());
        for col in &r.generators {
            if col.len() != n {
                return Err(Error::dims("zonotope generator column", n, col.len()));
            }
            data.extend_from_slice(col);
        }
        Zonotope::new(
            DVector::from_vec(r.center),
            DMatrix::from_vec(n, r.generators.len(), data),
        )
    }
}

impl From<Zonotope> for ZonotopeRepr {
    fn from(z: Zonotope) -> Self {
        ZonotopeRepr {
            center: z.center.iter().copied().collect(),
            generators: z
                .generators
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
        }
    }
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        if generators.nrows() != center.len() {
            return Err(Error::dims(
                "zonotope generators",
                center.len(),
                generators.nrows(),
            ));
        }
        Ok(Self { center, generators })
    }

    /// Builds a zonotope from a center slice and generator columns.
    pub fn from_columns(center: &[f64], columns: &[&[f64]]) -> Result<Self> {
        let n = center.len();
        let mut g = DMatrix::zeros(n, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::dims("zonotope generator column", n, col.len()));
            }
            g.set_column(j, &DVector::from_column_slice(col));
        }
        Self::new(DVector::from_column_slice(center), g)
    }

    /// `⟨c, diag(d)⟩`.
    pub fn from_diagonal(center: &[f64], diag: &[f64]) -> Result<Self> {
        if center.len() != diag.len() {
            return Err(Error::dims("zonotope diagonal", center.len(), diag.len()));
        }
        Self::new(
            DVector::from_column_slice(center),
            DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        )
    }

    pub fn point(center: DVector<f64>) -> Self {
        let n = center.len();
        Self {
            center,
            generators: DMatrix::zeros(n, 0),
        }
    }

    pub fn origin(n: usize) -> Self {
        Self::point(DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn is_point(&self) -> bool {
        self.generators.ncols() == 0 || self.generators.iter().all(|&g| g == 0.0)
    }

    /// Member for the coefficients `beta` (not checked against `[-1, 1]`).
    pub fn member(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        if beta.len() != self.num_generators() {
            return Err(Error::dims(
                "zonotope coefficients",
                self.num_generators(),
                beta.len(),
            ));
        }
        Ok(&self.center + &self.generators * beta)
    }

    /// `⟨c1 + c2, [G1 G2]⟩`.
    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        if self.dim() != other.dim() {
            return Err(Error::dims("minkowski sum", self.dim(), other.dim()));
        }
        let n = self.dim();
        let (g1, g2) = (self.num_generators(), other.num_generators());
        let mut g = DMatrix::zeros(n, g1 + g2);
        g.columns_mut(0, g1).copy_from(&self.generators);
        g.columns_mut(g1, g2).copy_from(&other.generators);
        Ok(Zonotope {
            center: &self.center + &other.center,
            generators: g,
        })
    }

    /// `self + (-other)`.
    pub fn minkowski_difference(&self, other: &Zonotope) -> Result<Zonotope> {
        self.minkowski_sum(&other.negate())
    }

    pub fn negate(&self) -> Zonotope {
        Zonotope {
            center: -&self.center,
            generators: -&self.generators,
        }
    }

    /// `⟨L c, L G⟩`.
    pub fn linear_map(&self, l: &DMatrix<f64>) -> Result<Zonotope> {
        if l.ncols() != self.dim() {
            return Err(Error::dims("linear map", self.dim(), l.ncols()));
        }
        Ok(Zonotope {
            center: l * &self.center,
            generators: l * &self.generators,
        })
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<Zonotope> {
        if v.len() != self.dim() {
            return Err(Error::dims("translation", self.dim(), v.len()));
        }
        Ok(Zonotope {
            center: &self.center + v,
            generators: self.generators.clone(),
        })
    }

    /// Stacked center with block-diagonal generators `[G1 0; 0 G2]`.
    pub fn cartesian_product(&self, other: &Zonotope) -> Zonotope {
        let (n1, n2) = (self.dim(), other.dim());
        let (g1, g2) = (self.num_generators(), other.num_generators());
        let mut center = DVector::zeros(n1 + n2);
        center.rows_mut(0, n1).copy_from(&self.center);
        center.rows_mut(n1, n2).copy_from(&other.center);
        let mut g = DMatrix::zeros(n1 + n2, g1 + g2);
        g.view_mut((0, 0), (n1, g1)).copy_from(&self.generators);
        g.view_mut((n1, g1), (n2, g2)).copy_from(&other.generators);
        Zonotope {
            center,
            generators: g,
        }
    }

    /// Element-wise `Σ |g_i|`.
    pub fn half_widths(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.generators
                .row_iter()
                .map(|r| r.iter().map(|v| v.abs()).sum()),
        )
    }

    /// Interval hull `[c - Δg, c + Δg]`.
    pub fn to_interval(&self) -> IntervalVector {
        let dg = self.half_widths();
        IntervalVector::new(&self.center - &dg, &self.center + &dg)
            .expect("half widths are non-negative")
    }

    /// Midpoint center with one generator per dimension of non-zero width.
    pub fn from_interval(i: &IntervalVector) -> Zonotope {
        let radius = i.radius();
        let cols: Vec<usize> = (0..i.dim()).filter(|&k| radius[k] > 0.0).collect();
        let mut g = DMatrix::zeros(i.dim(), cols.len());
        for (j, &k) in cols.iter().enumerate() {
            g[(k, j)] = radius[k];
        }
        Zonotope {
            center: i.midpoint(),
            generators: g,
        }
    }

    /// Multiplies every generator by `factor` (center unchanged).
    pub fn scale_generators(&self, factor: f64) -> Zonotope {
        Zonotope {
            center: self.center.clone(),
            generators: &self.generators * factor,
        }
    }

    /// Decides `p ∈ Z` up to `tol` by the linear program
    /// `min t  s.t.  |β_i| ≤ t,  ‖G β − (p − c)‖∞ ≤ tol·s`, where `s` is the
    /// magnitude of `p` and `c` (at least 1). Contained iff `t ≤ 1 + tol`.
    pub fn contains_point(&self, p: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self
            .containment_level(p, tol)?
            .is_some_and(|level| level <= 1.0 + tol))
    }

    /// Smallest `‖β‖∞` reaching `p` within the residual tolerance, or `None`
    /// when no coefficient vector reaches it at all.
    pub fn containment_level(&self, p: &DVector<f64>, tol: f64) -> Result<Option<f64>> {
        if p.len() != self.dim() {
            return Err(Error::dims("containment point", self.dim(), p.len()));
        }
        let d = p - &self.center;
        let slack = tol * 1f64.max(p.amax()).max(self.center.amax());
        let gamma = self.num_generators();

        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let t = problem.add_var(1.0, (0.0, f64::INFINITY));
        let beta: Vec<_> = (0..gamma)
            .map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
            .collect();
        for &b in &beta {
            problem.add_constraint([(b, 1.0), (t, -1.0)], ComparisonOp::Le, 0.0);
            problem.add_constraint([(b, -1.0), (t, -1.0)], ComparisonOp::Le, 0.0);
        }
        let mut any_row = false;
        for r in 0..self.dim() {
            let row = self.generators.row(r);
            let scale = row.amax();
            if scale == 0.0 {
                if d[r].abs() > slack {
                    return Ok(None);
                }
                continue;
            }
            any_row = true;
            let terms: Vec<_> = beta
                .iter()
                .zip(row.iter())
                .filter(|(_, &g)| g != 0.0)
                .map(|(&b, &g)| (b, g / scale))
                .collect();
            problem.add_constraint(terms.clone(), ComparisonOp::Le, (d[r] + slack) / scale);
            problem.add_constraint(terms, ComparisonOp::Ge, (d[r] - slack) / scale);
        }
        if !any_row {
            return Ok(Some(0.0));
        }
        match problem.solve() {
            Ok(outcome) => match outcome.solution() {
                Some(sol) => Ok(Some(sol.objective().max(0.0))),
                None => Err(Error::LpSolver("solve interrupted".into())),
            },
            Err(microlp::Error::Infeasible) => Ok(None),
            Err(e) => Err(Error::LpSolver(e.to_string())),
        }
    }

    /// Box-method order reduction: keeps the `max_generators - dim` generators
    /// with the largest `‖g‖₁ − ‖g‖∞` and encloses the rest in an axis-aligned
    /// box, giving at most `max_generators` columns. No-op when the zonotope
    /// already has at most `max_generators` generators.
    pub fn reduce_order(&self, max_generators: usize) -> Result<Zonotope> {
        let n = self.dim();
        if max_generators < n {
            return Err(Error::InvalidArgument(format!(
                "reduce_order needs max_generators >= dimension ({max_generators} < {n})"
            )));
        }
        let gamma = self.num_generators();
        if gamma <= max_generators {
            return Ok(self.clone());
        }
        let keep = max_generators - n;
        let mut order: Vec<(usize, f64)> = self
            .generators
            .column_iter()
            .enumerate()
            .map(|(j, g)| (j, g.lp_norm(1) - g.amax()))
            .collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut g = DMatrix::zeros(n, keep + n);
        let mut boxed = DVector::<f64>::zeros(n);
        for (rank, &(j, _)) in order.iter().enumerate() {
            if rank < keep {
                g.set_column(rank, &self.generators.column(j));
            } else {
                boxed += self.generators.column(j).abs();
            }
        }
        for i in 0..n {
            g[(i, keep + i)] = boxed[i];
        }
        Ok(Zonotope {
            center: self.center.clone(),
            generators: g,
        })
    }

    /// Matrix zonotope of `cols` stacked copies of this set: center `1_T^T ⊗ c`
    /// and one generator matrix per (column, generator) pair.
    pub fn concat_noise(&self, cols: usize) -> Result<MatrixZonotope> {
        if cols == 0 {
            return Err(Error::InvalidArgument(
                "noise concatenation needs at least one column".into(),
            ));
        }
        let n = self.dim();
        let center = crate::linalg::repeat_column(&self.center, cols);
        let mut generators = Vec::with_capacity(cols * self.num_generators());
        for t in 0..cols {
            for g in self.generators.column_iter() {
                let mut m = DMatrix::zeros(n, cols);
                m.set_column(t, &g);
                generators.push(m);
            }
        }
        MatrixZonotope::new(center, generators)
    }
}
