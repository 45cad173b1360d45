//! Time stepping for `Cp⁻¹` along a prescribed deformation history.
//!
//! The state variable is `Cp⁻¹`, so every flow rule enters as `d/dt[Cp⁻¹] = λ G`.
//! The multiplier comes either from a Perzyna overstress law or from a scalar
//! return onto `Φ = 0` along a frozen direction. Neither is prescribed by the
//! rate-independent model; both are approximations of it.

use crate::constitutive::{self, MaterialParams};
use crate::flow::{self, FlowEvaluation, ModelId};
use crate::tensor::{self, Mat3, SymMat3};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A deformation gradient prescribed as a function of time.
pub trait DeformationPath: Sync {
    fn at(&self, t: f64) -> Mat3;
}

impl<F: Fn(f64) -> Mat3 + Sync> DeformationPath for F {
    fn at(&self, t: f64) -> Mat3 {
        self(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[serde(rename = "euler")]
    ForwardEuler,
    #[serde(rename = "rk4")]
    Rk4,
    #[serde(rename = "exponential_map")]
    ExponentialMap,
}

impl Scheme {
    pub fn key(&self) -> &'static str {
        match self {
            Scheme::ForwardEuler => "euler",
            Scheme::Rk4 => "rk4",
            Scheme::ExponentialMap => "exponential_map",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    Perzyna,
    ConsistentReturn,
}

impl Closure {
    pub fn key(&self) -> &'static str {
        match self {
            Closure::Perzyna => "perzyna",
            Closure::ConsistentReturn => "consistent_return",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControls {
    pub dt: f64,
    pub scheme: Scheme,
    pub closure: Closure,
    /// Return tolerance on `|Φ|`, in units of `σ_y`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            dt: 1e-3,
            scheme: Scheme::ExponentialMap,
            closure: Closure::Perzyna,
            newton_tol: 1e-10,
            newton_max_iter: 100,
        }
    }
}

impl StepControls {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| Err(Error::Validation { field: format!("controls.{field}"), message });
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", format!("must be > 0, got {}", self.dt));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return bad("newton_tol", format!("must be > 0, got {}", self.newton_tol));
        }
        if self.newton_max_iter == 0 {
            return bad("newton_max_iter", "must be >= 1".into());
        }
        if self.closure == Closure::ConsistentReturn && self.scheme == Scheme::Rk4 {
            return bad("closure", "consistent_return requires scheme euler or exponential_map".into());
        }
        Ok(())
    }

    /// Rejects structure-preserving updates for models whose defects they would hide.
    pub fn check_admissible(&self, model: ModelId) -> Result<()> {
        if self.scheme == Scheme::ExponentialMap && !model.is_consistent() {
            return Err(Error::InadmissibleScheme { model: model.key().into(), scheme: self.scheme.key().into() });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlasticState {
    pub cp: Mat3,
    pub cp_inv: Mat3,
    pub t: f64,
}

impl PlasticState {
    pub fn identity() -> Self {
        PlasticState { cp: Mat3::IDENTITY, cp_inv: Mat3::IDENTITY, t: 0.0 }
    }

    pub fn from_cp(cp: Mat3, t: f64) -> Result<Self> {
        Ok(PlasticState { cp_inv: cp.inv()?, cp, t })
    }

    pub fn from_cp_inv(cp_inv: Mat3, t: f64) -> Result<Self> {
        Ok(PlasticState { cp: cp_inv.inv()?, cp_inv, t })
    }

    /// `‖Cp Cp⁻¹ − 𝟙‖`.
    pub fn cache_residual(&self) -> f64 {
        (self.cp * self.cp_inv - Mat3::IDENTITY).norm()
    }
}

/// Perzyna overstress multiplier `⟨Φ⟩₊ / (η σ_y)`.
pub fn perzyna_multiplier(phi: f64, params: &MaterialParams) -> f64 {
    phi.max(0.0) / (params.eta * params.sigma_y)
}

/// Result of one step: the new state and the multiplier that produced it.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: PlasticState,
    pub lambda: f64,
    pub iterations: usize,
}

fn eval(model: ModelId, params: &MaterialParams, f: &Mat3, cp: &Mat3) -> Result<FlowEvaluation> {
    let c = tensor::gram(f);
    flow::evaluate(model, params, &c, cp, Some(f))
}

fn rate(model: ModelId, params: &MaterialParams, f: &Mat3, cp_inv: &Mat3) -> Result<(Mat3, f64)> {
    let e = eval(model, params, f, &cp_inv.inv()?)?;
    let lambda = perzyna_multiplier(e.phi, params);
    Ok((e.direction * lambda, lambda))
}

// Cp⁻¹ ← √Cp⁻¹ exp(s A) √Cp⁻¹.
fn exp_update(cp_inv: &Mat3, a: &SymMat3, s: f64) -> Result<Mat3> {
    let u_inv = tensor::sqrt_psd(&cp_inv.sym())?;
    Ok(tensor::exp_sym(&a.scale(s)).congruence(&u_inv.to_mat()).to_mat())
}

fn advance(cp_inv: Mat3, t: f64, model: ModelId) -> Result<PlasticState> {
    let next = PlasticState::from_cp_inv(cp_inv, t).map_err(|e| Error::Inadmissible { t, source: Box::new(e) })?;
    if model.requires_symmetric_state() {
        let min = next.cp.sym().min_eigenvalue();
        if !(min > 0.0) {
            return Err(Error::Inadmissible { t, source: Box::new(Error::NotPositiveDefinite { min_eigenvalue: min }) });
        }
    }
    if !next.cp.is_finite() {
        return Err(Error::Inadmissible { t, source: Box::new(Error::Precondition("non-finite state".into())) });
    }
    Ok(next)
}

/// Advances `state` by `controls.dt` along `path`.
pub fn step(
    state: &PlasticState,
    model: ModelId,
    params: &MaterialParams,
    path: &dyn DeformationPath,
    controls: &StepControls,
) -> Result<StepOutcome> {
    let dt = controls.dt;
    let t0 = state.t;
    let t1 = t0 + dt;
    match controls.closure {
        Closure::Perzyna => {
            let (cp_inv, lambda) = match controls.scheme {
                Scheme::ForwardEuler => {
                    let (g, lambda) = rate(model, params, &path.at(t0), &state.cp_inv)?;
                    (state.cp_inv + g * dt, lambda)
                }
                Scheme::Rk4 => {
                    let th = t0 + 0.5 * dt;
                    let (k1, lambda) = rate(model, params, &path.at(t0), &state.cp_inv)?;
                    let (k2, _) = rate(model, params, &path.at(th), &(state.cp_inv + k1 * (0.5 * dt)))?;
                    let (k3, _) = rate(model, params, &path.at(th), &(state.cp_inv + k2 * (0.5 * dt)))?;
                    let (k4, _) = rate(model, params, &path.at(t1), &(state.cp_inv + k3 * dt))?;
                    (state.cp_inv + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0), lambda)
                }
                Scheme::ExponentialMap => {
                    controls.check_admissible(model)?;
                    let e = eval(model, params, &path.at(t0), &state.cp)?;
                    let lambda = perzyna_multiplier(e.phi, params);
                    if lambda == 0.0 {
                        (state.cp_inv, 0.0)
                    } else {
                        let a = e.frame_direction.expect("symmetric model has a frame direction");
                        (exp_update(&state.cp_inv, &a, dt * lambda)?, lambda)
                    }
                }
            };
            Ok(StepOutcome { state: advance(cp_inv, t1, model)?, lambda, iterations: 0 })
        }
        Closure::ConsistentReturn => consistent_return(state, model, params, &path.at(t1), controls),
    }
}

// Elastic predictor at F(t1), then a scalar solve Φ(Δ) = 0 along the trial direction.
fn consistent_return(
    state: &PlasticState,
    model: ModelId,
    params: &MaterialParams,
    f1: &Mat3,
    controls: &StepControls,
) -> Result<StepOutcome> {
    let t1 = state.t + controls.dt;
    let trial = eval(model, params, f1, &state.cp)?;
    if trial.phi <= 0.0 {
        return Ok(StepOutcome { state: advance(state.cp_inv, t1, model)?, lambda: 0.0, iterations: 0 });
    }
    let update: Box<dyn Fn(f64) -> Result<Mat3>> = match controls.scheme {
        Scheme::ForwardEuler => {
            let g = trial.direction;
            let cp_inv = state.cp_inv;
            Box::new(move |d| Ok(cp_inv + g * d))
        }
        Scheme::ExponentialMap => {
            controls.check_admissible(model)?;
            let a = trial.frame_direction.expect("symmetric model has a frame direction");
            let cp_inv = state.cp_inv;
            Box::new(move |d| exp_update(&cp_inv, &a, d))
        }
        Scheme::Rk4 => {
            return Err(Error::Validation {
                field: "controls.closure".into(),
                message: "consistent_return requires scheme euler or exponential_map".into(),
            })
        }
    };
    let phi_at = |d: f64| -> Result<f64> {
        let cp_inv = update(d)?;
        Ok(eval(model, params, f1, &cp_inv.inv()?)?.phi)
    };
    let tol = controls.newton_tol * params.sigma_y;

    // Bracket: Φ(0) > 0, grow the upper end until Φ changes sign.
    let mut lo = 0.0;
    let mut phi_lo = trial.phi;
    let mut hi = (trial.phi / trial.measure.max(f64::MIN_POSITIVE)).max(1e-12);
    let mut phi_hi = phi_at(hi)?;
    let mut iterations = 1;
    while phi_hi > 0.0 {
        lo = hi;
        phi_lo = phi_hi;
        hi *= 2.0;
        phi_hi = phi_at(hi)?;
        iterations += 1;
        if iterations > controls.newton_max_iter {
            return Err(Error::NoConvergence { iterations, residual: phi_hi });
        }
    }

    // Safeguarded secant (Newton with a secant slope) inside the bracket.
    let (mut x, mut fx) = if phi_hi.abs() < phi_lo.abs() { (hi, phi_hi) } else { (lo, phi_lo) };
    let (mut x_prev, mut f_prev) = if x == hi { (lo, phi_lo) } else { (hi, phi_hi) };
    while fx.abs() > tol {
        if iterations >= controls.newton_max_iter {
            return Err(Error::NoConvergence { iterations, residual: fx });
        }
        let slope = (fx - f_prev) / (x - x_prev);
        let mut cand = x - fx / slope;
        if !(cand.is_finite() && cand > lo && cand < hi) {
            cand = 0.5 * (lo + hi);
        }
        let fc = phi_at(cand)?;
        iterations += 1;
        if fc > 0.0 {
            lo = cand;
        } else {
            hi = cand;
        }
        x_prev = x;
        f_prev = fx;
        x = cand;
        fx = fc;
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let cp_inv = update(x)?;
    Ok(StepOutcome { state: advance(cp_inv, t1, model)?, lambda: x / controls.dt, iterations })
}

/// One trajectory sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub f: Mat3,
    pub cp: Mat3,
    /// Multiplier of the step that produced this record (0 at the initial record).
    pub lambda: f64,
    pub phi: f64,
    /// `(‖dev τe‖, ‖dev Σe‖, 𝓕, ‖dev Σ̊‖)`; only `𝓕` is defined for non-symmetric states.
    pub measures: [f64; 4],
    pub energy: f64,
    /// `|det Cp − 1|`.
    pub det_residual: f64,
    /// `‖Cp − Cpᵀ‖ / ‖Cp‖`.
    pub symmetry_residual: f64,
    pub min_eigenvalue: f64,
    /// `dW̃/dt` at frozen `C`, with the recorded multiplier.
    pub dissipation_rate: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub model: ModelId,
    pub params: MaterialParams,
    pub controls: StepControls,
    pub records: Vec<Record>,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectory is never empty")
    }

    pub fn max_of(&self, f: impl Fn(&Record) -> f64) -> f64 {
        self.records.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_of(&self, f: impl Fn(&Record) -> f64) -> f64 {
        self.records.iter().map(f).fold(f64::INFINITY, f64::min)
    }
}

/// Builds the record for `(t, F, Cp)` with multiplier `lambda`.
pub fn record(model: ModelId, params: &MaterialParams, t: f64, f: &Mat3, cp: &Mat3, lambda: f64) -> Result<Record> {
    let c = tensor::gram(f);
    let e = flow::evaluate(model, params, &c, cp, Some(f))?;
    let cp_inv = cp.inv()?;
    let measures = if model.requires_symmetric_state() {
        constitutive::stress_bundle(params, &c, &cp.sym(), Some(f))?.yield_measures()
    } else {
        let sigma = constitutive::sigma_tilde_general(params, &c.to_mat(), &cp_inv)?;
        let nan = f64::NAN;
        [nan, nan, constitutive::trace_square_root(&tensor::dev3(&sigma)), nan]
    };
    Ok(Record {
        t,
        f: *f,
        cp: *cp,
        lambda,
        phi: e.phi,
        measures,
        energy: constitutive::energy_general(params, &c.to_mat(), &cp_inv)?,
        det_residual: (cp.det() - 1.0).abs(),
        symmetry_residual: (*cp - cp.transpose()).norm() / cp.norm(),
        min_eigenvalue: cp.sym().min_eigenvalue(),
        dissipation_rate: lambda * e.dissipation_rate,
    })
}

/// Integrates `steps` steps of size `controls.dt` from `initial`.
pub fn simulate(
    model: ModelId,
    params: &MaterialParams,
    path: &dyn DeformationPath,
    initial: PlasticState,
    controls: &StepControls,
    steps: usize,
) -> Result<Trajectory> {
    params.validate()?;
    controls.validate()?;
    controls.check_admissible(model)?;
    let t0 = initial.t;
    let mut records = Vec::with_capacity(steps + 1);
    records.push(record(model, params, t0, &path.at(t0), &initial.cp, 0.0)?);
    let mut state = initial;
    for n in 1..=steps {
        let t = t0 + n as f64 * controls.dt;
        let inadmissible = |e: Error| match e {
            Error::NotPositiveDefinite { .. } | Error::SingularMatrix { .. } => Error::Inadmissible { t, source: Box::new(e) },
            e => e,
        };
        let mut out = step(&state, model, params, path, controls).map_err(inadmissible)?;
        // Clock from the step index so that runs with equal dt agree bit-for-bit.
        out.state.t = t;
        records.push(record(model, params, t, &path.at(t), &out.state.cp, out.lambda).map_err(inadmissible)?);
        state = out.state;
    }
    Ok(Trajectory { model, params: *params, controls: *controls, records })
}
