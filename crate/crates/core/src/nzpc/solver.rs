//! Operator-splitting (ADMM) QP solver in the style of OSQP: Ruiz
//! equilibration, a cached reduced KKT factorization, over-relaxation,
//! adaptive penalty, primal infeasibility certificates and active-set
//! polishing.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::QpProblem;

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const EQ_RHO_SCALE: f64 = 1e3;
const SCALING_ITERS: usize = 10;
const POLISH_ROUNDS: usize = 10;
const POLISH_REFINE: usize = 10;
const POLISH_DELTA: f64 = 1e-9;
const TIGHTEN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum QpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

impl QpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            QpStatus::Optimal => "optimal",
            QpStatus::MaxIterations => "max_iterations",
            QpStatus::Infeasible => "infeasible",
        }
    }
}

impl std::fmt::Display for QpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    /// Absolute and relative residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub adaptive_rho_interval: usize,
    pub infeasibility_tol: f64,
    pub polish: bool,
    pub check_interval: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 20_000,
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            adaptive_rho_interval: 25,
            infeasibility_tol: 1e-7,
            polish: true,
            check_interval: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Constraint multipliers; negative on active lower bounds.
    pub y: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
    pub polished: bool,
    /// Unit-norm certificate `δy` when infeasible.
    pub certificate: Option<DVector<f64>>,
}

struct Scaled {
    p: DMatrix<f64>,
    q: DVector<f64>,
    a: DMatrix<f64>,
    l: DVector<f64>,
    u: DVector<f64>,
    d: DVector<f64>,
    e: DVector<f64>,
    c: f64,
}

fn norm_inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn col_norm_inf(m: &DMatrix<f64>, j: usize) -> f64 {
    m.column(j).iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn row_norm_inf(m: &DMatrix<f64>, i: usize) -> f64 {
    m.row(i).iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn limit(s: f64) -> f64 {
    if s < 1e-4 {
        1.0
    } else {
        s.min(1e4)
    }
}

fn equilibrate(prob: &QpProblem) -> Scaled {
    let n = prob.n_vars();
    let m = prob.n_constraints();
    let mut p = prob.hessian.clone();
    let mut q = prob.linear.clone();
    let mut a = prob.ineq_matrix.clone();
    let mut d = DVector::from_element(n, 1.0);
    let mut e = DVector::from_element(m, 1.0);
    let mut c = 1.0;

    for _ in 0..SCALING_ITERS {
        let dd = DVector::from_fn(n, |j, _| {
            let norm = col_norm_inf(&p, j).max(col_norm_inf(&a, j));
            1.0 / limit(norm).sqrt()
        });
        let de = DVector::from_fn(m, |i, _| 1.0 / limit(row_norm_inf(&a, i)).sqrt());
        for j in 0..n {
            for i in 0..n {
                p[(i, j)] *= dd[i] * dd[j];
            }
            q[j] *= dd[j];
        }
        for j in 0..n {
            for i in 0..m {
                a[(i, j)] *= de[i] * dd[j];
            }
        }
        d.component_mul_assign(&dd);
        e.component_mul_assign(&de);

        let mean_col = if n == 0 {
            1.0
        } else {
            (0..n).map(|j| col_norm_inf(&p, j)).sum::<f64>() / n as f64
        };
        let gamma = 1.0 / limit(mean_col.max(norm_inf(&q)));
        p *= gamma;
        q *= gamma;
        c *= gamma;
    }

    let l = prob.ineq_lower.component_mul(&e);
    let u = prob.ineq_upper.component_mul(&e);
    Scaled {
        p,
        q,
        a,
        l,
        u,
        d,
        e,
        c,
    }
}

fn factor(s: &Scaled, sigma: f64, rho: &DVector<f64>) -> Option<Cholesky<f64, Dyn>> {
    let n = s.p.nrows();
    let mut k = &s.p + DMatrix::identity(n, n) * sigma;
    let mut ra = s.a.clone();
    for (i, mut row) in ra.row_iter_mut().enumerate() {
        row *= rho[i];
    }
    k += s.a.transpose() * ra;
    Cholesky::new(k)
}

fn project(v: &DVector<f64>, l: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| v[i].max(l[i]).min(u[i]))
}

fn rho_vector(s: &Scaled, rho: f64) -> DVector<f64> {
    DVector::from_fn(s.l.len(), |i, _| {
        if s.l[i] == f64::NEG_INFINITY && s.u[i] == f64::INFINITY {
            RHO_MIN
        } else if s.u[i] - s.l[i] < 1e-4 {
            EQ_RHO_SCALE * rho
        } else {
            rho
        }
    })
}

struct Residuals {
    prim: f64,
    dual: f64,
    eps_prim: f64,
    eps_dual: f64,
}

fn unscaled_residuals(
    prob: &QpProblem,
    x: &DVector<f64>,
    z: &DVector<f64>,
    y: &DVector<f64>,
    tol: f64,
) -> Residuals {
    let ax = &prob.ineq_matrix * x;
    let px = &prob.hessian * x;
    let aty = prob.ineq_matrix.transpose() * y;
    let prim = norm_inf(&(&ax - z));
    let dual = norm_inf(&(&px + &prob.linear + &aty));
    let prim_norm = norm_inf(&ax).max(norm_inf(z));
    let dual_norm = norm_inf(&px)
        .max(norm_inf(&aty))
        .max(norm_inf(&prob.linear));
    Residuals {
        prim,
        dual,
        eps_prim: tol + tol * prim_norm,
        eps_dual: tol + tol * dual_norm,
    }
}

fn is_infeasibility_certificate(prob: &QpProblem, dy: &DVector<f64>, tol: f64) -> bool {
    let norm = norm_inf(dy);
    if norm <= 0.0 || !norm.is_finite() {
        return false;
    }
    let aty = prob.ineq_matrix.transpose() * dy;
    if norm_inf(&aty) > tol * norm {
        return false;
    }
    let mut support = 0.0;
    for i in 0..dy.len() {
        if dy[i] > 0.0 {
            if prob.ineq_upper[i] == f64::INFINITY {
                return false;
            }
            support += prob.ineq_upper[i] * dy[i];
        } else if dy[i] < 0.0 {
            if prob.ineq_lower[i] == f64::NEG_INFINITY {
                return false;
            }
            support += prob.ineq_lower[i] * dy[i];
        }
    }
    support < -tol * norm
}

fn infeasible(
    prob: &QpProblem,
    iterations: usize,
    certificate: Option<DVector<f64>>,
) -> QpSolution {
    let n = prob.n_vars();
    QpSolution {
        x: DVector::from_element(n, f64::NAN),
        y: DVector::from_element(prob.n_constraints(), f64::NAN),
        status: QpStatus::Infeasible,
        iterations,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        objective: f64::INFINITY,
        polished: false,
        certificate,
    }
}

/// Solves `min ½ xᵀPx + qᵀx` s.t. `l ≤ Ax ≤ u`.
///
/// `Optimal` means primal and dual residuals are within `tol` (absolute plus
/// `tol` relative to the problem scale). `MaxIterations` returns the last
/// iterate with its residuals. `Infeasible` is reported for crossing bounds or
/// when the multiplier increments converge to a Farkas certificate.
pub fn solve_qp(prob: &QpProblem, settings: &QpSettings) -> QpSolution {
    let m = prob.n_constraints();
    if let Some(i) = (0..m).find(|&i| prob.ineq_lower[i] > prob.ineq_upper[i]) {
        let mut cert = DVector::zeros(m);
        cert[i] = 1.0;
        return infeasible(prob, 0, Some(cert));
    }
    let Some(mut admm) = Admm::new(prob, settings) else {
        return infeasible(prob, 0, None);
    };

    let mut status = admm.run(settings.tol, settings.max_iter);
    if status == QpStatus::Infeasible {
        let cert = admm.certificate.take();
        return infeasible(prob, admm.iterations, cert);
    }
    let (mut xu, mut zu, mut yu) = admm.unscaled();
    let mut res = unscaled_residuals(prob, &xu, &zu, &yu, settings.tol);
    let mut polished = false;
    if settings.polish {
        let mut attempt = try_polish(prob, &xu, &zu, &yu, &res, settings.tol);
        if attempt.is_none() && status == QpStatus::Optimal && admm.iterations < settings.max_iter {
            // tighten and try once more from a sharper active-set guess
            if admm.run(settings.tol * TIGHTEN, settings.max_iter) == QpStatus::Optimal {
                (xu, zu, yu) = admm.unscaled();
                res = unscaled_residuals(prob, &xu, &zu, &yu, settings.tol);
                attempt = try_polish(prob, &xu, &zu, &yu, &res, settings.tol);
            }
        }
        if let Some((xp, yp, rp)) = attempt {
            xu = xp;
            yu = yp;
            res = rp;
            polished = true;
            status = QpStatus::Optimal;
        }
    }
    let objective = prob.objective(&xu);
    QpSolution {
        x: xu,
        y: yu,
        status,
        iterations: admm.iterations,
        primal_residual: res.prim,
        dual_residual: res.dual,
        objective,
        polished,
        certificate: None,
    }
}

fn try_polish(
    prob: &QpProblem,
    x: &DVector<f64>,
    z: &DVector<f64>,
    y: &DVector<f64>,
    res: &Residuals,
    tol: f64,
) -> Option<(DVector<f64>, DVector<f64>, Residuals)> {
    let (xp, yp) = polish(prob, x, z, y, tol)?;
    let zp = project(
        &(&prob.ineq_matrix * &xp),
        &prob.ineq_lower,
        &prob.ineq_upper,
    );
    let rp = unscaled_residuals(prob, &xp, &zp, &yp, tol);
    let good = rp.prim <= rp.eps_prim && rp.dual <= rp.eps_dual;
    let better = rp.prim <= res.prim.max(rp.eps_prim) && rp.dual <= res.dual.max(rp.eps_dual);
    (good && better).then_some((xp, yp, rp))
}

struct Admm<'a> {
    prob: &'a QpProblem,
    settings: &'a QpSettings,
    s: Scaled,
    rho: f64,
    rho_vec: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    x: DVector<f64>,
    z: DVector<f64>,
    y: DVector<f64>,
    iterations: usize,
    certificate: Option<DVector<f64>>,
}

impl<'a> Admm<'a> {
    fn new(prob: &'a QpProblem, settings: &'a QpSettings) -> Option<Self> {
        let s = equilibrate(prob);
        let rho = settings.rho;
        let rho_vec = rho_vector(&s, rho);
        let chol = factor(&s, settings.sigma, &rho_vec)?;
        let n = prob.n_vars();
        let m = prob.n_constraints();
        let z = project(&DVector::zeros(m), &s.l, &s.u);
        Some(Self {
            prob,
            settings,
            s,
            rho,
            rho_vec,
            chol,
            x: DVector::zeros(n),
            z,
            y: DVector::zeros(m),
            iterations: 0,
            certificate: None,
        })
    }

    fn unscaled(&self) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let s = &self.s;
        (
            self.x.component_mul(&s.d),
            self.z.component_div(&s.e),
            self.y.component_mul(&s.e) / s.c,
        )
    }

    /// Iterates until the residuals meet `tol`, a certificate appears or the
    /// total iteration count reaches `max_iter`.
    fn run(&mut self, tol: f64, max_iter: usize) -> QpStatus {
        let settings = self.settings;
        let (sigma, alpha) = (settings.sigma, settings.alpha);
        while self.iterations < max_iter {
            self.iterations += 1;
            let iter = self.iterations;
            let s = &self.s;
            let rhs = &self.x * sigma - &s.q
                + s.a.transpose() * (self.rho_vec.component_mul(&self.z) - &self.y);
            let x_tilde = self.chol.solve(&rhs);
            let z_tilde = &s.a * &x_tilde;

            let x_next = &x_tilde * alpha + &self.x * (1.0 - alpha);
            let z_relaxed = &z_tilde * alpha + &self.z * (1.0 - alpha);
            let z_next = project(
                &(&z_relaxed + self.y.component_div(&self.rho_vec)),
                &s.l,
                &s.u,
            );
            let y_next = &self.y + self.rho_vec.component_mul(&(&z_relaxed - &z_next));
            let dy = &y_next - &self.y;
            self.x = x_next;
            self.z = z_next;
            self.y = y_next;

            if iter.is_multiple_of(settings.check_interval.max(1)) || iter == max_iter {
                let (xu, zu, yu) = self.unscaled();
                let res = unscaled_residuals(self.prob, &xu, &zu, &yu, tol);
                if res.prim <= res.eps_prim && res.dual <= res.eps_dual {
                    return QpStatus::Optimal;
                }
                let dy_unscaled = dy.component_mul(&self.s.e);
                if is_infeasibility_certificate(self.prob, &dy_unscaled, settings.infeasibility_tol)
                {
                    let norm = norm_inf(&dy_unscaled);
                    self.certificate = Some(dy_unscaled / norm);
                    return QpStatus::Infeasible;
                }
            }

            let interval = settings.adaptive_rho_interval;
            if interval > 0 && iter.is_multiple_of(interval) && !self.update_rho() {
                break;
            }
        }
        QpStatus::MaxIterations
    }

    /// Rebalances the penalty from the scaled residual ratio; false when the
    /// refactorization fails.
    fn update_rho(&mut self) -> bool {
        let s = &self.s;
        let ax = &s.a * &self.x;
        let px = &s.p * &self.x;
        let aty = s.a.transpose() * &self.y;
        let prim = norm_inf(&(&ax - &self.z)) / norm_inf(&ax).max(norm_inf(&self.z)).max(1e-30);
        let dual = norm_inf(&(&px + &s.q + &aty))
            / norm_inf(&px)
                .max(norm_inf(&aty))
                .max(norm_inf(&s.q))
                .max(1e-30);
        let candidate = (self.rho * (prim / dual.max(1e-30)).sqrt()).clamp(RHO_MIN, RHO_MAX);
        if candidate > 5.0 * self.rho || candidate < self.rho / 5.0 {
            self.rho = candidate;
            self.rho_vec = rho_vector(s, candidate);
            match factor(s, self.settings.sigma, &self.rho_vec) {
                Some(c) => self.chol = c,
                None => return false,
            }
        }
        true
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Free,
    Lower,
    Upper,
    Fixed,
}

/// Solves the equality-constrained problem on the guessed active set with a
/// regularized KKT system and iterative refinement started at the ADMM
/// iterate, so directions of zero curvature keep their ADMM values. Then
/// repairs the guess
/// (dropping rows whose multiplier has the wrong sign, adding violated rows)
/// a few times.
fn polish(
    prob: &QpProblem,
    x0: &DVector<f64>,
    z: &DVector<f64>,
    y: &DVector<f64>,
    tol: f64,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let m = prob.n_constraints();
    let (lo, hi) = (&prob.ineq_lower, &prob.ineq_upper);
    let mut sides: Vec<Side> = (0..m)
        .map(|i| {
            if lo[i] == hi[i] {
                Side::Fixed
            } else if z[i] - lo[i] < -y[i] {
                Side::Lower
            } else if hi[i] - z[i] < y[i] {
                Side::Upper
            } else {
                Side::Free
            }
        })
        .collect();

    let mut last = None;
    for _ in 0..POLISH_ROUNDS {
        let (x, y_full) = solve_active(prob, &sides, x0, y)?;
        let ax = &prob.ineq_matrix * &x;
        let mut changed = false;
        for i in 0..m {
            match sides[i] {
                Side::Lower if y_full[i] > 0.0 => {
                    sides[i] = Side::Free;
                    changed = true;
                }
                Side::Upper if y_full[i] < 0.0 => {
                    sides[i] = Side::Free;
                    changed = true;
                }
                Side::Free if ax[i] < lo[i] - tol => {
                    sides[i] = Side::Lower;
                    changed = true;
                }
                Side::Free if ax[i] > hi[i] + tol => {
                    sides[i] = Side::Upper;
                    changed = true;
                }
                _ => {}
            }
        }
        last = Some((x, y_full));
        if !changed {
            break;
        }
    }
    last
}

fn solve_active(
    prob: &QpProblem,
    sides: &[Side],
    x0: &DVector<f64>,
    y0: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = prob.n_vars();
    let m = prob.n_constraints();
    let active: Vec<(usize, f64)> = sides
        .iter()
        .enumerate()
        .filter_map(|(i, side)| match side {
            Side::Free => None,
            Side::Lower | Side::Fixed => Some((i, prob.ineq_lower[i])),
            Side::Upper => Some((i, prob.ineq_upper[i])),
        })
        .collect();
    let k = active.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(&prob.hessian);
    for (r, &(i, _)) in active.iter().enumerate() {
        for j in 0..n {
            let a = prob.ineq_matrix[(i, j)];
            kkt[(n + r, j)] = a;
            kkt[(j, n + r)] = a;
        }
    }
    let mut reg = kkt.clone();
    for i in 0..n {
        reg[(i, i)] += POLISH_DELTA;
    }
    for r in 0..k {
        reg[(n + r, n + r)] -= POLISH_DELTA;
    }
    let lu = reg.lu();
    let mut rhs = DVector::zeros(n + k);
    rhs.rows_mut(0, n).copy_from(&(-&prob.linear));
    for (r, &(_, b)) in active.iter().enumerate() {
        rhs[n + r] = b;
    }
    let mut sol = DVector::zeros(n + k);
    sol.rows_mut(0, n).copy_from(x0);
    for (r, &(i, _)) in active.iter().enumerate() {
        sol[n + r] = y0[i];
    }
    for _ in 0..POLISH_REFINE {
        let err = &rhs - &kkt * &sol;
        sol += lu.solve(&err)?;
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let x = sol.rows(0, n).into_owned();
    let mut y_full = DVector::zeros(m);
    for (r, &(i, _)) in active.iter().enumerate() {
        y_full[i] = sol[n + r];
    }
    Some((x, y_full))
}
