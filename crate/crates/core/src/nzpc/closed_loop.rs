use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;

use super::{
    assemble_qp, build_predictor, solve_qp, AffinePredictor, NzpcConfig, QpProblem, QpStatus,
};
use crate::data::{format_float, ColumnSource, DataWindow, PlantDimensions};
use crate::plant::PlantSimulator;
use crate::reach::{learn, LinearizationPoint};
use crate::sets::Zonotope;
use crate::{Error, Result};

/// Outcome of one controller evaluation.
#[derive(Debug, Clone)]
pub struct NzpcStep {
    pub status: QpStatus,
    /// First optimal input; `None` when the QP has no usable solution.
    pub u_apply: Option<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    /// `y_{t+k+1|t} = c_{k+1}(u*) + G_{k+1} β*`.
    pub predicted_outputs: Vec<DVector<f64>>,
    /// Predicted output sets at the optimal inputs.
    pub reachable_sets: Vec<Zonotope>,
    pub iterations: usize,
    pub polished: bool,
    pub solve_ms: f64,
    pub objective: f64,
    pub diagnostics: Option<String>,
}

/// Learning phase around `⟨y_now, 0⟩`, predictor, QP and solve.
pub fn nzpc_step(
    window: &DataWindow,
    y_now: &DVector<f64>,
    cfg: &NzpcConfig,
    dims: &PlantDimensions,
) -> Result<NzpcStep> {
    if window.is_empty() {
        return Err(Error::InvalidArgument("empty data window".into()));
    }
    if y_now.len() != dims.n_y {
        return Err(Error::dims("current output", dims.n_y, y_now.len()));
    }
    let ry0 = Zonotope::point(y_now.clone());
    let point = LinearizationPoint::from_set_centers(&ry0, &cfg.reach, dims)?;
    let learned = learn(window, &point, &cfg.reach, dims)?;
    let pred = build_predictor(&learned, &ry0, cfg.horizon, &cfg.reach, dims)?;
    let qp = assemble_qp(&pred, cfg)?;

    let start = Instant::now();
    let sol = solve_qp(&qp, &cfg.qp);
    let solve_ms = start.elapsed().as_secs_f64() * 1e3;

    if sol.status == QpStatus::Infeasible {
        return Ok(NzpcStep {
            status: sol.status,
            u_apply: None,
            inputs: vec![],
            predicted_outputs: vec![],
            reachable_sets: vec![],
            iterations: sol.iterations,
            polished: false,
            solve_ms,
            objective: f64::INFINITY,
            diagnostics: Some(diagnose(&qp, &pred, cfg)),
        });
    }

    let inputs = snap_inputs(&qp, &sol.x, cfg);
    let reachable_sets = pred.sets(&inputs)?;
    let predicted_outputs = reachable_sets
        .iter()
        .enumerate()
        .map(|(k, set)| {
            let beta = qp.layout.output_beta(&sol.x, k).map(|b| b.clamp(-1.0, 1.0));
            set.member(&beta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NzpcStep {
        status: sol.status,
        u_apply: Some(inputs[0].clone()),
        inputs,
        predicted_outputs,
        reachable_sets,
        iterations: sol.iterations,
        polished: sol.polished,
        solve_ms,
        objective: sol.objective,
        diagnostics: None,
    })
}

/// Removes the solver's residual constraint slack from the inputs: clamps to
/// box-shaped `U_k`, otherwise rebuilds `u_k = c + G β` from clamped
/// coefficients.
fn snap_inputs(qp: &QpProblem, z: &DVector<f64>, cfg: &NzpcConfig) -> Vec<DVector<f64>> {
    (0..qp.layout.horizon)
        .map(|k| {
            let u_set = cfg.input_constraint_at(k);
            match qp.layout.input_betas[k] {
                None => {
                    let hull = u_set.to_interval();
                    let u = qp.layout.input(z, k);
                    DVector::from_fn(u.len(), |i, _| u[i].clamp(hull.lower()[i], hull.upper()[i]))
                }
                Some((start, len)) => {
                    let beta = z.rows(start, len).map(|b| b.clamp(-1.0, 1.0));
                    u_set.member(&beta).expect("coefficient count matches")
                }
            }
        })
        .collect()
}

/// Names the constraint rows violated at the input-set centers, and rows whose
/// hull width alone exceeds the output band.
fn diagnose(qp: &QpProblem, pred: &AffinePredictor, cfg: &NzpcConfig) -> String {
    let mut notes = Vec::new();
    for (i, (lo, hi)) in qp.ineq_lower.iter().zip(&qp.ineq_upper).enumerate() {
        if lo > hi {
            let name = qp.block_of(i).map_or("unknown block", |b| b.name.as_str());
            notes.push(format!("{name}: hull wider than the output band (row {i})"));
        }
    }
    let centers: Vec<_> = (0..pred.horizon())
        .map(|k| cfg.input_constraint_at(k).center().clone())
        .collect();
    if let Ok(cs) = pred.centers(&centers) {
        for (k, c) in cs.iter().enumerate() {
            let (lo, hi) = cfg.output_bounds_at(k);
            let dg = pred.delta_g(k);
            for i in 0..c.len() {
                if c[i] - dg[i] < lo[i] {
                    notes.push(format!(
                        "output interval, step {}: dim {} lower hull {} < {} at input centers",
                        k + 1,
                        i + 1,
                        c[i] - dg[i],
                        lo[i]
                    ));
                }
                if c[i] + dg[i] > hi[i] {
                    notes.push(format!(
                        "output interval, step {}: dim {} upper hull {} > {} at input centers",
                        k + 1,
                        i + 1,
                        c[i] + dg[i],
                        hi[i]
                    ));
                }
            }
        }
    }
    if notes.is_empty() {
        "no constraint block violated at the input-set centers".into()
    } else {
        notes.join("; ")
    }
}

/// One logged closed-loop step.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedLoopStep {
    pub step: usize,
    /// Measured output `y(t)`.
    pub y: DVector<f64>,
    /// Applied input `u(t)`.
    pub u: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub polished: bool,
    pub solve_ms: f64,
    pub held_previous: bool,
    pub predicted: Vec<DVector<f64>>,
    pub hull_lower: Vec<DVector<f64>>,
    pub hull_upper: Vec<DVector<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<Zonotope>>,
}

/// Steps whose measured output or applied input violates the constraints.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Violations {
    pub output: Vec<usize>,
    pub input: Vec<usize>,
    pub non_optimal: Vec<usize>,
}

impl Violations {
    pub fn is_clean(&self) -> bool {
        self.output.is_empty() && self.input.is_empty() && self.non_optimal.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedLoopLog {
    pub horizon: usize,
    pub n_y: usize,
    pub n_u: usize,
    pub seed: u64,
    pub initial_output: Option<DVector<f64>>,
    pub steps: Vec<ClosedLoopStep>,
    /// Output measured after the last applied input.
    pub final_output: Option<DVector<f64>>,
    /// Step at which the loop stopped on an infeasible QP, with diagnostics.
    pub aborted: Option<(usize, String)>,
}

impl ClosedLoopLog {
    fn empty(horizon: usize, n_y: usize, n_u: usize, seed: u64) -> Self {
        Self {
            horizon,
            n_y,
            n_u,
            seed,
            initial_output: None,
            steps: vec![],
            final_output: None,
            aborted: None,
        }
    }

    /// Checks `Y_l ≤ y(t) ≤ Y_u` for every measured output (including the one
    /// after the last step) and `u(t) ∈ U_0` for every applied input.
    pub fn violations(&self, cfg: &NzpcConfig, tol: f64) -> Result<Violations> {
        let mut v = Violations::default();
        let (lo, hi) = (&cfg.output_lower, &cfg.output_upper);
        let out_ok =
            |y: &DVector<f64>| (0..y.len()).all(|i| y[i] >= lo[i] - tol && y[i] <= hi[i] + tol);
        for s in &self.steps {
            if !out_ok(&s.y) {
                v.output.push(s.step);
            }
            if !cfg.input_constraint_at(0).contains_point(&s.u, tol)? {
                v.input.push(s.step);
            }
            if s.status != QpStatus::Optimal {
                v.non_optimal.push(s.step);
            }
        }
        if let Some(y) = &self.final_output {
            if !out_ok(y) {
                v.output.push(self.steps.len());
            }
        }
        if let Some((step, _)) = &self.aborted {
            if !v.non_optimal.contains(step) {
                v.non_optimal.push(*step);
            }
        }
        Ok(v)
    }

    /// `step,y_*,u_*,qp_status,qp_iters,solve_ms,pred{k}_lo_{i},pred{k}_hi_{i}`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["step".to_string()];
        header.extend((1..=self.n_y).map(|i| format!("y_{i}")));
        header.extend((1..=self.n_u).map(|i| format!("u_{i}")));
        header.extend(["qp_status", "qp_iters", "solve_ms"].map(String::from));
        for k in 1..=self.horizon {
            for i in 1..=self.n_y {
                header.push(format!("pred{k}_lo_{i}"));
                header.push(format!("pred{k}_hi_{i}"));
            }
        }
        w.write_record(&header)?;
        for s in &self.steps {
            let mut rec = vec![s.step.to_string()];
            rec.extend(s.y.iter().map(|v| format_float(*v)));
            rec.extend(s.u.iter().map(|v| format_float(*v)));
            rec.push(s.status.to_string());
            rec.push(s.iterations.to_string());
            rec.push(format!("{:.3}", s.solve_ms));
            for k in 0..self.horizon {
                for i in 0..self.n_y {
                    let lo = s.hull_lower.get(k).map_or(f64::NAN, |h| h[i]);
                    let hi = s.hull_upper.get(k).map_or(f64::NAN, |h| h[i]);
                    rec.push(format_float(lo));
                    rec.push(format_float(hi));
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Predicted sets of every logged step, when they were kept.
    pub fn sets_json(&self) -> Result<String> {
        let sets: Vec<_> = self
            .steps
            .iter()
            .map(|s| serde_json::json!({ "step": s.step, "sets": s.sets }))
            .collect();
        Ok(serde_json::to_string_pretty(&sets)?)
    }
}

/// Receding-horizon loop: evaluate the controller on the current output,
/// apply the first input to the plant, measure, slide the window and repeat.
///
/// The plant is reseeded with `seed`; the initial state is drawn from
/// `x0_set`. An infeasible QP stops the loop and is recorded in
/// [`ClosedLoopLog::aborted`] unless holding the previous input is enabled.
pub fn run_closed_loop(
    plant: &PlantSimulator,
    cfg: &NzpcConfig,
    initial_window: &DataWindow,
    x0_set: &Zonotope,
    seed: u64,
    keep_sets: bool,
) -> Result<ClosedLoopLog> {
    let dims = plant.dims().clone();
    cfg.validate(&dims)?;
    if x0_set.dim() != dims.n_x {
        return Err(Error::dims("initial state set", dims.n_x, x0_set.dim()));
    }
    let mut log = ClosedLoopLog::empty(cfg.horizon, dims.n_y, dims.n_u, seed);
    if cfg.steps == 0 {
        return Ok(log);
    }

    let mut sim = plant.reseeded(seed);
    let mut x = sim.sample(x0_set);
    sim.check_state_bound(&x, 0)?;
    let mut y = sim.measure(&x);
    log.initial_output = Some(y.clone());
    let mut window = initial_window.clone();
    let mut previous: Option<DVector<f64>> = None;

    for t in 0..cfg.steps {
        let step = nzpc_step(&window, &y, cfg, &dims)?;
        let (u, held) = match (&step.u_apply, &previous) {
            (Some(u), _) => (u.clone(), false),
            (None, Some(prev)) if cfg.hold_previous_on_infeasible => (prev.clone(), true),
            (None, _) => {
                log::warn!(
                    "infeasible QP at step {t}: {}",
                    step.diagnostics.as_deref().unwrap_or("")
                );
                log.aborted = Some((t, step.diagnostics.unwrap_or_default()));
                return Ok(log);
            }
        };
        let hulls: Vec<_> = step
            .reachable_sets
            .iter()
            .map(|z| z.to_interval())
            .collect();

        let x_next = sim.advance(&x, &u)?;
        sim.check_state_bound(&x_next, t + 1)?;
        let y_next = sim.measure(&x_next);
        let source = ColumnSource {
            trajectory: format!("loop-{seed}"),
            k: t,
        };
        window = window.slide(&u, &y, &y_next, source)?.0;

        log.steps.push(ClosedLoopStep {
            step: t,
            y: y.clone(),
            u: u.clone(),
            status: step.status,
            iterations: step.iterations,
            polished: step.polished,
            solve_ms: step.solve_ms,
            held_previous: held,
            predicted: step.predicted_outputs,
            hull_lower: hulls.iter().map(|h| h.lower().clone()).collect(),
            hull_upper: hulls.iter().map(|h| h.upper().clone()).collect(),
            sets: keep_sets.then_some(step.reachable_sets),
        });
        previous = Some(u);
        x = x_next;
        y = y_next;
    }
    log.final_output = Some(y);
    Ok(log)
}
