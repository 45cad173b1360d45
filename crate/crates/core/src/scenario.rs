//! Loading programs, scenario files and output formats.
//!
//! A scenario file is TOML:
//!
//! ```toml
//! model = "lion1997"            # or: models = ["lion1997", "helm2001"]
//! energy = "isochoric_nh"
//! seed = 42
//! preset = "simple_shear"       # optional; fills [loading] and [controls]
//!
//! [material]                    # every key optional
//! mu = 1.0
//! lambda = 2.0
//! kappa = 10.0
//! sigma_y = 0.2
//! yield_radius_factor = 0.816496580927726
//! eta = 0.05
//!
//! [controls]
//! steps = 1000
//! scheme = "exponential_map"    # euler | rk4 | exponential_map
//! closure = "perzyna"           # perzyna | consistent_return
//! newton_tol = 1e-10
//! newton_max_iter = 100
//!
//! [loading]
//! kind = "simple_shear"         # simple_shear | uniaxial_stretch | biaxial_stretch | relaxation | piecewise_table
//! total_time = 1.0
//! knots = [[0.0, 0.0], [1.0, 0.5]]
//! # relaxation only: base mode and frozen amplitude
//! # base = "simple_shear"
//! # amplitude = 0.5
//! # piecewise_table only: rows [t, F11, F12, F13, F21, F22, F23, F31, F32, F33]
//! # table = [[0.0, 1, 0, 0, 0, 1, 0, 0, 0, 1], ...]
//!
//! [output]
//! trajectory = "run.csv"
//! summary = "run.json"
//! ```

use crate::constitutive::{EnergyKind, MaterialParams};
use crate::flow::ModelId;
use crate::integrator::{self, Closure, DeformationPath, PlasticState, Record, Scheme, StepControls, Trajectory};
use crate::tensor::Mat3;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadingKind {
    SimpleShear,
    UniaxialStretch,
    BiaxialStretch,
    Relaxation,
    PiecewiseTable,
}

impl LoadingKind {
    pub fn key(&self) -> &'static str {
        match self {
            LoadingKind::SimpleShear => "simple_shear",
            LoadingKind::UniaxialStretch => "uniaxial_stretch",
            LoadingKind::BiaxialStretch => "biaxial_stretch",
            LoadingKind::Relaxation => "relaxation",
            LoadingKind::PiecewiseTable => "piecewise_table",
        }
    }
}

/// `F = 𝟙 + γ e1⊗e2`.
pub fn simple_shear(gamma: f64) -> Mat3 {
    Mat3([[1.0, gamma, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
}

/// `F = diag(s, s^{-1/2}, s^{-1/2})`.
pub fn uniaxial_stretch(s: f64) -> Mat3 {
    let r = 1.0 / s.sqrt();
    Mat3::from_diag([s, r, r])
}

/// `F = diag(s, s, s^{-2})`.
pub fn biaxial_stretch(s: f64) -> Mat3 {
    Mat3::from_diag([s, s, 1.0 / (s * s)])
}

fn mode(kind: LoadingKind, p: f64) -> Mat3 {
    match kind {
        LoadingKind::UniaxialStretch => uniaxial_stretch(p),
        LoadingKind::BiaxialStretch => biaxial_stretch(p),
        _ => simple_shear(p),
    }
}

fn lerp_knots(knots: &[[f64; 2]], t: f64) -> f64 {
    let first = knots[0];
    if t <= first[0] {
        return first[1];
    }
    for w in knots.windows(2) {
        let ([t0, p0], [t1, p1]) = (w[0], w[1]);
        if t <= t1 {
            return p0 + (p1 - p0) * (t - t0) / (t1 - t0);
        }
    }
    knots[knots.len() - 1][1]
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadingProgram {
    pub kind: LoadingKind,
    pub total_time: f64,
    /// `(t, p)` knots of the amplitude schedule.
    pub knots: Vec<[f64; 2]>,
    /// Relaxation: the frozen mode.
    pub base: LoadingKind,
    /// Relaxation: the frozen amplitude.
    pub amplitude: f64,
    /// Piecewise table: rows `[t, F11, …, F33]`.
    pub table: Vec<[f64; 10]>,
}

impl LoadingProgram {
    pub fn ramp(kind: LoadingKind, total_time: f64, from: f64, to: f64) -> Self {
        LoadingProgram {
            kind,
            total_time,
            knots: vec![[0.0, from], [total_time, to]],
            base: LoadingKind::SimpleShear,
            amplitude: 0.0,
            table: Vec::new(),
        }
    }

    pub fn relaxation(base: LoadingKind, amplitude: f64, total_time: f64) -> Self {
        LoadingProgram { kind: LoadingKind::Relaxation, base, amplitude, knots: Vec::new(), ..Self::ramp(base, total_time, 0.0, 0.0) }
    }

    pub fn table(rows: Vec<[f64; 10]>) -> Self {
        let total_time = rows.last().map_or(0.0, |r| r[0]);
        LoadingProgram { kind: LoadingKind::PiecewiseTable, table: rows, knots: Vec::new(), ..Self::ramp(LoadingKind::SimpleShear, total_time, 0.0, 0.0) }
    }

    /// Shear in the 1-2 plane followed by shear in the 1-3 plane.
    pub fn non_proportional(gamma: f64, total_time: f64) -> Self {
        let row = |t: f64, g12: f64, g13: f64| [t, 1.0, g12, g13, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        Self::table(vec![row(0.0, 0.0, 0.0), row(0.5 * total_time, gamma, 0.0), row(total_time, gamma, gamma)])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| Err(Error::Validation { field: format!("loading.{field}"), message });
        if !(self.total_time.is_finite() && self.total_time > 0.0) {
            return bad("total_time", format!("must be > 0, got {}", self.total_time));
        }
        let times: Vec<f64> = match self.kind {
            LoadingKind::Relaxation => {
                if self.base == LoadingKind::Relaxation || self.base == LoadingKind::PiecewiseTable {
                    return bad("base", "must be simple_shear, uniaxial_stretch or biaxial_stretch".into());
                }
                if !self.amplitude.is_finite() {
                    return bad("amplitude", "must be finite".into());
                }
                vec![0.0]
            }
            LoadingKind::PiecewiseTable => {
                if self.table.is_empty() {
                    return bad("table", "needs at least one row".into());
                }
                if self.table.iter().flatten().any(|x| !x.is_finite()) {
                    return bad("table", "entries must be finite".into());
                }
                self.table.iter().map(|r| r[0]).collect()
            }
            _ => {
                if self.knots.is_empty() {
                    return bad("knots", "needs at least one knot".into());
                }
                if self.knots.iter().flatten().any(|x| !x.is_finite()) {
                    return bad("knots", "entries must be finite".into());
                }
                self.knots.iter().map(|k| k[0]).collect()
            }
        };
        if times.windows(2).any(|w| w[1] <= w[0]) {
            let field = if self.kind == LoadingKind::PiecewiseTable { "table" } else { "knots" };
            return bad(field, "times must be strictly increasing".into());
        }
        // Sampled: every knot plus seven interior points per interval.
        let mut probes: Vec<f64> = times.clone();
        probes.extend(times.windows(2).flat_map(|w| (1..8).map(move |k| w[0] + (w[1] - w[0]) * k as f64 / 8.0)));
        probes.push(self.total_time);
        for t in probes {
            let f = self.at(t);
            let ok = match self.effective_mode() {
                Some(LoadingKind::UniaxialStretch) | Some(LoadingKind::BiaxialStretch) => self.parameter(t) > 0.0,
                _ => true,
            };
            if !ok || !(f.det() > 0.0) || !f.is_finite() {
                let field = if self.kind == LoadingKind::PiecewiseTable { "table" } else { "knots" };
                return bad(field, format!("deformation gradient is not admissible at t = {t} (det F = {})", f.det()));
            }
        }
        Ok(())
    }

    fn effective_mode(&self) -> Option<LoadingKind> {
        match self.kind {
            LoadingKind::Relaxation => Some(self.base),
            LoadingKind::PiecewiseTable => None,
            k => Some(k),
        }
    }

    /// The amplitude `p(t)`.
    pub fn parameter(&self, t: f64) -> f64 {
        match self.kind {
            LoadingKind::Relaxation => self.amplitude,
            LoadingKind::PiecewiseTable => f64::NAN,
            _ => lerp_knots(&self.knots, t),
        }
    }
}

impl DeformationPath for LoadingProgram {
    fn at(&self, t: f64) -> Mat3 {
        match self.kind {
            LoadingKind::PiecewiseTable => {
                let rows = &self.table;
                let entry = |k: usize| {
                    let knots: Vec<[f64; 2]> = rows.iter().map(|r| [r[0], r[k + 1]]).collect();
                    lerp_knots(&knots, t)
                };
                Mat3(std::array::from_fn(|i| std::array::from_fn(|j| entry(3 * i + j))))
            }
            LoadingKind::Relaxation => mode(self.base, self.amplitude),
            kind => mode(kind, lerp_knots(&self.knots, t)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputPaths {
    pub trajectory: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub models: Vec<ModelId>,
    pub params: MaterialParams,
    pub controls: StepControls,
    pub steps: usize,
    pub loading: LoadingProgram,
    pub output: OutputPaths,
    pub seed: u64,
    pub preset: Option<String>,
}

impl ScenarioConfig {
    pub fn dt(&self) -> f64 {
        self.loading.total_time / self.steps as f64
    }

    pub fn run(&self, model: ModelId) -> Result<Trajectory> {
        integrator::simulate(model, &self.params, &self.loading, PlasticState::identity(), &self.controls, self.steps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Validation { field: "models".into(), message: "at least one model is required".into() });
        }
        self.params.validate()?;
        if self.steps == 0 {
            return Err(Error::Validation { field: "controls.steps".into(), message: "must be >= 1".into() });
        }
        self.loading.validate()?;
        self.controls.validate()?;
        for m in &self.models {
            self.controls.check_admissible(*m)?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        let raw = RawConfig::from(self);
        toml::to_string(&raw).expect("scenario serializes")
    }
}

// File grammar. Everything optional so that defaults and presets can fill gaps.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    models: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(default)]
    material: RawMaterial,
    #[serde(default)]
    controls: RawControls,
    #[serde(default)]
    loading: RawLoading,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    yield_radius_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControls {
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closure: Option<Closure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    newton_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    newton_max_iter: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoading {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<LoadingKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    knots: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    base: Option<LoadingKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<Vec<[f64; 10]>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<PathBuf>,
}

impl From<&ScenarioConfig> for RawConfig {
    fn from(c: &ScenarioConfig) -> Self {
        let l = &c.loading;
        let p = &c.params;
        RawConfig {
            model: None,
            models: Some(c.models.iter().map(|m| m.key().to_string()).collect()),
            energy: Some(p.energy.key().to_string()),
            seed: Some(c.seed),
            preset: c.preset.clone(),
            material: RawMaterial {
                mu: Some(p.mu),
                lambda: Some(p.lambda),
                kappa: Some(p.kappa),
                sigma_y: Some(p.sigma_y),
                yield_radius_factor: Some(p.yield_radius_factor),
                eta: Some(p.eta),
            },
            controls: RawControls {
                steps: Some(c.steps),
                scheme: Some(c.controls.scheme),
                closure: Some(c.controls.closure),
                newton_tol: Some(c.controls.newton_tol),
                newton_max_iter: Some(c.controls.newton_max_iter),
            },
            loading: RawLoading {
                kind: Some(l.kind),
                total_time: Some(l.total_time),
                knots: Some(l.knots.clone()),
                base: Some(l.base),
                amplitude: Some(l.amplitude),
                table: Some(l.table.clone()),
            },
            output: RawOutput { trajectory: c.output.trajectory.clone(), summary: c.output.summary.clone() },
        }
    }
}

pub const PRESETS: [&str; 5] = ["simple_shear", "uniaxial_stretch", "biaxial_stretch", "relaxation", "non_proportional"];

/// Loading program and scheme of a named preset.
pub fn preset(name: &str) -> Option<(LoadingProgram, Scheme)> {
    Some(match name {
        "simple_shear" => (LoadingProgram::ramp(LoadingKind::SimpleShear, 1.0, 0.0, 0.5), Scheme::ExponentialMap),
        "uniaxial_stretch" => (LoadingProgram::ramp(LoadingKind::UniaxialStretch, 1.0, 1.0, 1.3), Scheme::ExponentialMap),
        "biaxial_stretch" => (LoadingProgram::ramp(LoadingKind::BiaxialStretch, 1.0, 1.0, 1.15), Scheme::ExponentialMap),
        "relaxation" => (LoadingProgram::relaxation(LoadingKind::SimpleShear, 0.5, 1.0), Scheme::ExponentialMap),
        "non_proportional" => (LoadingProgram::non_proportional(0.15, 1.0), Scheme::ForwardEuler),
        _ => return None,
    })
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Validation { field: field.into(), message: message.into() }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))?;

    let models = match (&raw.model, &raw.models) {
        (Some(_), Some(_)) => return Err(invalid("model", "give either `model` or `models`, not both")),
        (Some(m), None) => vec![m.clone()],
        (None, Some(ms)) => ms.clone(),
        (None, None) => return Err(invalid("model", "missing")),
    };
    let models = models
        .iter()
        .map(|k| ModelId::from_key(k).ok_or_else(|| invalid("model", format!("unknown model `{k}`"))))
        .collect::<Result<Vec<_>>>()?;

    let energy = match &raw.energy {
        Some(k) => EnergyKind::from_key(k).ok_or_else(|| invalid("energy", format!("unknown energy `{k}`")))?,
        None => EnergyKind::IsochoricNeoHooke,
    };

    let (preset_loading, preset_scheme) = match &raw.preset {
        Some(name) => preset(name).ok_or_else(|| invalid("preset", format!("unknown preset `{name}`")))?,
        None => (LoadingProgram::ramp(LoadingKind::SimpleShear, 1.0, 0.0, 0.5), Scheme::ExponentialMap),
    };

    let d = MaterialParams::default();
    let m = &raw.material;
    let params = MaterialParams {
        mu: m.mu.unwrap_or(d.mu),
        lambda: m.lambda.unwrap_or(d.lambda),
        kappa: m.kappa.unwrap_or(d.kappa),
        sigma_y: m.sigma_y.unwrap_or(d.sigma_y),
        yield_radius_factor: m.yield_radius_factor.unwrap_or(d.yield_radius_factor),
        eta: m.eta.unwrap_or(d.eta),
        energy,
    };

    let l = raw.loading;
    let kind = l.kind.unwrap_or(preset_loading.kind);
    let same_kind = kind == preset_loading.kind;
    let loading = LoadingProgram {
        kind,
        total_time: l.total_time.unwrap_or(preset_loading.total_time),
        knots: l.knots.unwrap_or_else(|| if same_kind { preset_loading.knots.clone() } else { Vec::new() }),
        base: l.base.unwrap_or(preset_loading.base),
        amplitude: l.amplitude.unwrap_or(preset_loading.amplitude),
        table: l.table.unwrap_or_else(|| if same_kind { preset_loading.table.clone() } else { Vec::new() }),
    };

    let dc = StepControls::default();
    let c = raw.controls;
    let steps = c.steps.unwrap_or(1000);
    let controls = StepControls {
        dt: if steps > 0 { loading.total_time / steps as f64 } else { f64::NAN },
        scheme: c.scheme.unwrap_or(preset_scheme),
        closure: c.closure.unwrap_or(dc.closure),
        newton_tol: c.newton_tol.unwrap_or(dc.newton_tol),
        newton_max_iter: c.newton_max_iter.unwrap_or(dc.newton_max_iter),
    };

    let config = ScenarioConfig {
        models,
        params,
        controls,
        steps,
        loading,
        output: OutputPaths { trajectory: raw.output.trajectory, summary: raw.output.summary },
        seed: raw.seed.unwrap_or(42),
        preset: raw.preset,
    };
    config.validate()?;
    Ok(config)
}

/// The shipped demonstration scenario for `model`.
pub fn demo(model: ModelId) -> ScenarioConfig {
    let (energy, loading, scheme) = match model {
        ModelId::SimoHughes1998 => (
            EnergyKind::SimoHughes,
            LoadingProgram::ramp(LoadingKind::SimpleShear, 1.0, 0.0, 0.5),
            Scheme::ForwardEuler,
        ),
        ModelId::AppendixA3 => (EnergyKind::IsochoricNeoHooke, LoadingProgram::non_proportional(0.15, 1.0), Scheme::ForwardEuler),
        _ => (
            EnergyKind::IsochoricNeoHooke,
            LoadingProgram::ramp(LoadingKind::SimpleShear, 1.0, 0.0, 0.5),
            Scheme::ExponentialMap,
        ),
    };
    let steps = 1000;
    ScenarioConfig {
        models: vec![model],
        params: MaterialParams::with_energy(energy),
        controls: StepControls { dt: loading.total_time / steps as f64, scheme, ..Default::default() },
        steps,
        loading,
        output: OutputPaths::default(),
        seed: 42,
        preset: None,
    }
}

pub const CSV_COLUMNS: [&str; 27] = [
    "t", "F11", "F12", "F13", "F21", "F22", "F23", "F31", "F32", "F33", "Cp11", "Cp12", "Cp13", "Cp22", "Cp23", "Cp33",
    "lambda", "phi", "dev_norm_tau_e", "dev_norm_sigma_e", "f_script", "dev_norm_sigma_ring", "det_residual",
    "symmetry_residual", "min_eigenvalue", "dissipation_rate", "energy",
];

fn csv_row(r: &Record) -> Vec<f64> {
    let mut row = vec![r.t];
    row.extend(r.f.to_row_array());
    let cp = &r.cp.0;
    row.extend([cp[0][0], cp[0][1], cp[0][2], cp[1][1], cp[1][2], cp[2][2]]);
    row.extend([r.lambda, r.phi]);
    row.extend(r.measures);
    row.extend([r.det_residual, r.symmetry_residual, r.min_eigenvalue, r.dissipation_rate, r.energy]);
    row
}

pub fn write_trajectory_csv(trajectory: &Trajectory, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "# format_version: {FORMAT_VERSION}")?;
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in &trajectory.records {
        let cells: Vec<String> = csv_row(r).iter().map(|x| format!("{x:e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
