//! Ground-truth plants for data generation, closed-loop runs and Monte-Carlo
//! containment checks.
//!
//! Two stirred-tank reactor (CSTR) forms ship here:
//!
//! - [`cstr_step`] evaluates the discrete-time expressions with the constants
//!   `τ = 0.015`, `α = 7.2e10`, `β = −8750`, `ρ = 1.5e13` exactly as written,
//!   in absolute coordinates with the exponential `exp(β / x₂)`. Starting at
//!   `x = [−2, −20.5]` this form yields `≈ [5.0e194, −6.9e198]` after one step
//!   and overflows to non-finite values at step 14 (see
//!   `docs/cstr-exponential.md`).
//! - [`CstrPlant::Deviation`] is the same reactor written in deviation
//!   coordinates around the operating point `C_A = 0.5`, `T = 350 K`, with
//!   the state feedback `k = [−3, −6.9]` folded into the coolant term. It stays
//!   bounded, has `x = 0` as (near-)equilibrium for `u ≈ 0`, and is the plant
//!   used by the bundled experiments.
//!
//! The data-driven pipeline never sees these functions: it only receives
//! trajectories. Ground-truth states are returned only when explicitly
//! requested.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{PlantDimensions, Trajectory};
use crate::reach::ReachResult;
use crate::sets::Zonotope;
use crate::{Error, Result};

/// Constants of the stirred-tank expressions in absolute coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CstrParams {
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    /// Upper saturation of the exponent `β / x₂`; `None` evaluates it as is.
    pub exp_arg_max: Option<f64>,
}

impl Default for CstrParams {
    fn default() -> Self {
        Self {
            tau: 0.015,
            alpha: 7.2e10,
            beta: -8750.0,
            rho: 1.5e13,
            exp_arg_max: None,
        }
    }
}

/// One step of the stirred-tank expressions as written:
///
/// ```text
/// f1 = ((1 − 0.5τ − α e^{β/x2} τ) x1 + τ) / (1 + 0.5τ) + u1 τ
/// f2 = ((1 − 1.5τ) x2 + ρ x1 e^{β/x2}) / (1 + 1.5τ)
///      + τ (350 − 6.3 x1 − 14.4 x2) / (1 + 1.5τ) + u2 τ
/// ```
pub fn cstr_step(x: &DVector<f64>, u: &DVector<f64>, p: &CstrParams) -> Result<DVector<f64>> {
    if x.len() != 2 {
        return Err(Error::dims("CSTR state", 2, x.len()));
    }
    if u.len() != 2 {
        return Err(Error::dims("CSTR input", 2, u.len()));
    }
    if !(p.tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {}",
            p.tau
        )));
    }
    let (x1, x2) = (x[0], x[1]);
    if x2 == 0.0 {
        return Err(Error::Domain {
            term: "exp(beta / x2)",
            detail: "x2 = 0".into(),
        });
    }
    let mut arg = p.beta / x2;
    if let Some(max) = p.exp_arg_max {
        arg = arg.min(max);
    }
    let e = arg.exp();
    if !e.is_finite() {
        return Err(Error::Domain {
            term: "exp(beta / x2)",
            detail: format!("exp({arg}) overflows at x2 = {x2}"),
        });
    }
    let tau = p.tau;
    let f1 = ((1.0 - 0.5 * tau - p.alpha * e * tau) * x1 + tau) / (1.0 + 0.5 * tau) + u[0] * tau;
    let f2 = ((1.0 - 1.5 * tau) * x2 + p.rho * x1 * e) / (1.0 + 1.5 * tau)
        + tau * (350.0 - 6.3 * x1 - 14.4 * x2) / (1.0 + 1.5 * tau)
        + u[1] * tau;
    if !f1.is_finite() {
        return Err(Error::Domain {
            term: "f1",
            detail: format!("non-finite value at x = [{x1}, {x2}]"),
        });
    }
    if !f2.is_finite() {
        return Err(Error::Domain {
            term: "f2",
            detail: format!("non-finite value at x = [{x1}, {x2}]"),
        });
    }
    Ok(DVector::from_vec(vec![f1, f2]))
}

/// Physical constants of the reactor in deviation coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CstrPhysical {
    /// Sampling time.
    pub tau: f64,
    pub density: f64,
    pub heat_capacity: f64,
    pub reaction_enthalpy: f64,
    /// Activation energy over the gas constant.
    pub e_over_r: f64,
    pub k0: f64,
    pub ua: f64,
    pub flow: f64,
    pub feed_temperature: f64,
    pub volume: f64,
    pub feed_concentration: f64,
    /// Operating point: concentration, temperature, coolant temperature.
    pub ca0: f64,
    pub t0: f64,
    pub tc0: f64,
    /// Coolant feedback gains on the deviation state.
    pub feedback: [f64; 2],
}

impl Default for CstrPhysical {
    fn default() -> Self {
        Self {
            tau: 0.015,
            density: 1000.0,
            heat_capacity: 0.239,
            reaction_enthalpy: -5e4,
            e_over_r: 8750.0,
            k0: 7.2e10,
            ua: 5e4,
            flow: 100.0,
            feed_temperature: 350.0,
            volume: 100.0,
            feed_concentration: 1.0,
            ca0: 0.5,
            t0: 350.0,
            tc0: 300.0,
            feedback: [-3.0, -6.9],
        }
    }
}

/// Reactor step in deviation coordinates `x = [C_A − C_A0, T − T0]`.
pub fn cstr_deviation_step(
    x: &DVector<f64>,
    u: &DVector<f64>,
    p: &CstrPhysical,
) -> Result<DVector<f64>> {
    if x.len() != 2 {
        return Err(Error::dims("CSTR state", 2, x.len()));
    }
    if u.len() != 2 {
        return Err(Error::dims("CSTR input", 2, u.len()));
    }
    let temp = x[1] + p.t0;
    if temp <= 0.0 {
        return Err(Error::Domain {
            term: "exp(-E/(R T))",
            detail: format!("non-positive absolute temperature {temp}"),
        });
    }
    let t = p.tau;
    let e = (-p.e_over_r / temp).exp();
    let conc = x[0] + p.ca0;
    let q_v = p.flow / p.volume;
    let cool = t * p.ua / (2.0 * p.volume * p.density * p.heat_capacity);
    let coolant = p.feedback[0] * x[0] + p.feedback[1] * x[1] + p.tc0;

    let f1 = ((1.0 - 0.5 * q_v * t - t * p.k0 * e) * conc + q_v * p.feed_concentration * t)
        / (1.0 + 0.5 * q_v * t)
        + u[0] * t
        - p.ca0;
    let f2 = (temp * (1.0 - 0.5 * q_v * t - cool)
        + t * (p.feed_temperature * q_v
            + p.ua * coolant / (p.volume * p.density * p.heat_capacity))
        - conc * t * p.reaction_enthalpy * p.k0 / (p.density * p.heat_capacity) * e)
        / (1.0 + 0.5 * q_v * t + cool)
        + u[1] * t
        - p.t0;
    if !f1.is_finite() || !f2.is_finite() {
        return Err(Error::Domain {
            term: "deviation CSTR",
            detail: format!("non-finite value at x = [{}, {}]", x[0], x[1]),
        });
    }
    Ok(DVector::from_vec(vec![f1, f2]))
}

/// Deterministic discrete-time dynamics `x⁺ = f(x, u)`.
pub trait Dynamics: Send + Sync + fmt::Debug {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CstrPlant {
    /// Absolute-coordinate expressions, see [`cstr_step`].
    Printed(CstrParams),
    /// Deviation coordinates, see [`cstr_deviation_step`].
    Deviation(CstrPhysical),
}

impl Default for CstrPlant {
    fn default() -> Self {
        CstrPlant::Deviation(CstrPhysical::default())
    }
}

impl Dynamics for CstrPlant {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            CstrPlant::Printed(p) => cstr_step(x, u, p),
            CstrPlant::Deviation(p) => cstr_deviation_step(x, u, p),
        }
    }
}

/// `x⁺ = A x + B u`, for exact-recovery tests.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl LinearPlant {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims("linear plant A", a.nrows(), a.ncols()));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::dims("linear plant B", a.nrows(), b.nrows()));
        }
        Ok(Self { a, b })
    }
}

impl Dynamics for LinearPlant {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.state_dim() {
            return Err(Error::dims("linear plant state", self.state_dim(), x.len()));
        }
        if u.len() != self.input_dim() {
            return Err(Error::dims("linear plant input", self.input_dim(), u.len()));
        }
        Ok(&self.a * x + &self.b * u)
    }
}

/// Dynamics from a closure.
pub struct FnDynamics<F> {
    n_x: usize,
    n_u: usize,
    f: F,
}

impl<F> FnDynamics<F>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync,
{
    pub fn new(n_x: usize, n_u: usize, f: F) -> Self {
        Self { n_x, n_u, f }
    }
}

impl<F> fmt::Debug for FnDynamics<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnDynamics")
            .field("n_x", &self.n_x)
            .field("n_u", &self.n_u)
            .finish()
    }
}

impl<F> Dynamics for FnDynamics<F>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync,
{
    fn state_dim(&self) -> usize {
        self.n_x
    }

    fn input_dim(&self) -> usize {
        self.n_u
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        let next = (self.f)(x, u);
        if next.len() != self.n_x {
            return Err(Error::dims("custom dynamics output", self.n_x, next.len()));
        }
        Ok(next)
    }
}

/// `c + G β` with `β` uniform on `[−1, 1]^γ` (uniform over the generator
/// cube, not over the set's volume).
pub fn sample_in_zonotope<R: Rng + ?Sized>(z: &Zonotope, rng: &mut R) -> DVector<f64> {
    let beta = DVector::from_fn(z.num_generators(), |_, _| rng.gen_range(-1.0..=1.0));
    z.member(&beta).expect("coefficient count matches")
}

/// Noisy plant `x⁺ = f(x, u) + w`, `y = H x + v` with `w ∈ Z_w`, `v ∈ Z_v`.
#[derive(Debug, Clone)]
pub struct PlantSimulator {
    dynamics: Arc<dyn Dynamics>,
    dims: PlantDimensions,
    zw: Zonotope,
    zv: Zonotope,
    seed: u64,
    rng: ChaCha8Rng,
}

/// A simulated trajectory; `states` is filled only when recording.
#[derive(Debug, Clone)]
pub struct SimulatedTrajectory {
    pub trajectory: Trajectory,
    pub states: Option<Vec<DVector<f64>>>,
}

/// Trajectories plus their optional ground-truth states.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub trajectories: Vec<Trajectory>,
    pub states: Option<Vec<(String, Vec<DVector<f64>>)>>,
}

impl PlantSimulator {
    pub fn new(
        dynamics: Arc<dyn Dynamics>,
        dims: PlantDimensions,
        zw: Zonotope,
        zv: Zonotope,
        seed: u64,
    ) -> Result<Self> {
        if dynamics.state_dim() != dims.n_x {
            return Err(Error::dims("plant state", dims.n_x, dynamics.state_dim()));
        }
        if dynamics.input_dim() != dims.n_u {
            return Err(Error::dims("plant input", dims.n_u, dynamics.input_dim()));
        }
        if zw.dim() != dims.n_x {
            return Err(Error::dims("process noise set", dims.n_x, zw.dim()));
        }
        if zv.dim() != dims.n_y {
            return Err(Error::dims("measurement noise set", dims.n_y, zv.dim()));
        }
        Ok(Self {
            dynamics,
            dims,
            zw,
            zv,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn dims(&self) -> &PlantDimensions {
        &self.dims
    }

    pub fn dynamics(&self) -> &Arc<dyn Dynamics> {
        &self.dynamics
    }

    pub fn zw(&self) -> &Zonotope {
        &self.zw
    }

    pub fn zv(&self) -> &Zonotope {
        &self.zv
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same plant, fresh generator with another seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            ..self.clone()
        }
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn sample(&mut self, z: &Zonotope) -> DVector<f64> {
        sample_in_zonotope(z, &mut self.rng)
    }

    /// `H x + v` with fresh measurement noise.
    pub fn measure(&mut self, x: &DVector<f64>) -> DVector<f64> {
        let v = sample_in_zonotope(&self.zv, &mut self.rng);
        self.dims.h() * x + v
    }

    /// `f(x, u) + w` with fresh process noise.
    pub fn advance(&mut self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        let w = sample_in_zonotope(&self.zw, &mut self.rng);
        Ok(self.dynamics.step(x, u)? + w)
    }

    /// Fails when `‖x‖∞ > η`.
    pub fn check_state_bound(&self, x: &DVector<f64>, step: usize) -> Result<()> {
        let norm = x.amax();
        if !(norm <= self.dims.eta()) {
            return Err(Error::StateBound {
                step,
                norm,
                eta: self.dims.eta(),
            });
        }
        Ok(())
    }

    /// Applies `inputs[k]` at time `k` starting from `x0` and measures every
    /// state, giving `inputs.len()` samples.
    pub fn simulate_trajectory(
        &mut self,
        id: impl Into<String>,
        x0: &DVector<f64>,
        inputs: &[DVector<f64>],
        record: bool,
    ) -> Result<SimulatedTrajectory> {
        if inputs.is_empty() {
            return Err(Error::InvalidArgument(
                "trajectory needs at least one input".into(),
            ));
        }
        if x0.len() != self.dims.n_x {
            return Err(Error::dims("initial state", self.dims.n_x, x0.len()));
        }
        let mut x = x0.clone();
        let mut outputs = Vec::with_capacity(inputs.len());
        let mut states = Vec::with_capacity(inputs.len());
        for (k, u) in inputs.iter().enumerate() {
            if u.len() != self.dims.n_u {
                return Err(Error::dims("trajectory input", self.dims.n_u, u.len()));
            }
            self.check_state_bound(&x, k)?;
            outputs.push(self.measure(&x));
            states.push(x.clone());
            if k + 1 < inputs.len() {
                x = self.advance(&x, u)?;
            }
        }
        let trajectory = Trajectory {
            id: id.into(),
            inputs: inputs.to_vec(),
            outputs,
        };
        Ok(SimulatedTrajectory {
            trajectory,
            states: record.then_some(states),
        })
    }

    /// `count` trajectories of `length` samples with `x0 ∈ X0` and inputs drawn
    /// from `input_set`.
    pub fn generate_dataset(
        &mut self,
        x0_set: &Zonotope,
        input_set: &Zonotope,
        count: usize,
        length: usize,
        record: bool,
    ) -> Result<Dataset> {
        if length < 2 {
            return Err(Error::InvalidArgument(format!(
                "trajectory length must be at least 2, got {length}"
            )));
        }
        let mut trajectories = Vec::with_capacity(count);
        let mut states = Vec::with_capacity(if record { count } else { 0 });
        for i in 0..count {
            let x0 = self.sample(x0_set);
            let inputs: Vec<_> = (0..length).map(|_| self.sample(input_set)).collect();
            let id = i.to_string();
            let sim = self.simulate_trajectory(id.clone(), &x0, &inputs, record)?;
            if let Some(xs) = sim.states {
                states.push((id, xs));
            }
            trajectories.push(sim.trajectory);
        }
        Ok(Dataset {
            trajectories,
            states: record.then_some(states),
        })
    }
}

/// Containment statistics for one prediction step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepContainment {
    /// Steps ahead, starting at 1.
    pub step: usize,
    pub samples: usize,
    pub contained: usize,
    /// Largest `‖β‖∞` needed by any sample; above 1 means a miss, infinite
    /// means no coefficient vector reached the sample.
    pub worst_level: f64,
}

impl StepContainment {
    pub fn fraction(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            self.contained as f64 / self.samples as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub samples: usize,
    pub tolerance: f64,
    pub sampling: &'static str,
    pub steps: Vec<StepContainment>,
}

impl ContainmentReport {
    pub fn all_contained(&self) -> bool {
        self.steps.iter().all(|s| s.contained == s.samples)
    }
}

/// Monte-Carlo check that true outputs stay in the predicted output sets:
/// draws `x0 ∈ X0`, `u_k ∈ Z_u` and noises, rolls the true plant forward and
/// tests `y(k) ∈ output_sets[k − 1]` for every step.
pub fn verify_containment(
    sim: &PlantSimulator,
    reach: &ReachResult,
    x0_set: &Zonotope,
    input_set: &Zonotope,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ContainmentReport> {
    let horizon = reach.horizon();
    if x0_set.dim() != sim.dims.n_x {
        return Err(Error::dims("initial state set", sim.dims.n_x, x0_set.dim()));
    }
    if input_set.dim() != sim.dims.n_u {
        return Err(Error::dims("input set", sim.dims.n_u, input_set.dim()));
    }
    let levels: Vec<Vec<Option<f64>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut x = sample_in_zonotope(x0_set, &mut rng);
            sim.check_state_bound(&x, 0)?;
            let mut out = Vec::with_capacity(horizon);
            for (k, set) in reach.output_sets.iter().enumerate() {
                let u = sample_in_zonotope(input_set, &mut rng);
                let w = sample_in_zonotope(&sim.zw, &mut rng);
                x = sim.dynamics.step(&x, &u)? + w;
                sim.check_state_bound(&x, k + 1)?;
                let v = sample_in_zonotope(&sim.zv, &mut rng);
                let y = sim.dims.h() * &x + v;
                out.push(set.containment_level(&y, tol)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let steps = (0..horizon)
        .map(|k| {
            let mut contained = 0;
            let mut worst: f64 = 0.0;
            for sample in &levels {
                match sample[k] {
                    Some(l) => {
                        if l <= 1.0 + tol {
                            contained += 1;
                        }
                        worst = worst.max(l);
                    }
                    None => worst = f64::INFINITY,
                }
            }
            StepContainment {
                step: k + 1,
                samples,
                contained,
                worst_level: worst,
            }
        })
        .collect();
    Ok(ContainmentReport {
        samples,
        tolerance: tol,
        sampling: "uniform over the generator cube of each set",
        steps,
    })
}
