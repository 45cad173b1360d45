//! Flow rules for the plastic metric.
//!
//! Each model returns the yield value `Φ` and the rate `G = d/dt[Cp⁻¹]` at unit
//! multiplier. The seven models are coded along the route in which each one is
//! usually stated, so two models that agree do so by algebra rather than by
//! sharing code.

use crate::constitutive::{self, MaterialParams, StressBundle};
use crate::tensor::{self, dev3, inner, Mat3, SymMat3};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative skew above which a state passed to a symmetric model is rejected.
pub const STATE_SYMMETRY_TOL: f64 = 1e-8;
/// Deviator norms below `ZERO_DEVIATOR_REL · σ_y` cannot be normalized.
pub const ZERO_DEVIATOR_REL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    #[serde(rename = "simo_miehe1992")]
    SimoMiehe1992,
    #[serde(rename = "miehe1995")]
    Miehe1995,
    #[serde(rename = "lion1997")]
    Lion1997,
    #[serde(rename = "simo_hughes1998")]
    SimoHughes1998,
    #[serde(rename = "helm2001")]
    Helm2001,
    #[serde(rename = "grandi_stefanelli2015")]
    GrandiStefanelli2015,
    #[serde(rename = "appendix_a3")]
    AppendixA3,
}

impl ModelId {
    pub const ALL: [ModelId; 7] = [
        ModelId::SimoMiehe1992,
        ModelId::Miehe1995,
        ModelId::Lion1997,
        ModelId::SimoHughes1998,
        ModelId::Helm2001,
        ModelId::GrandiStefanelli2015,
        ModelId::AppendixA3,
    ];

    /// Models that keep `Cp` symmetric, positive and unimodular.
    pub const CONSISTENT: [ModelId; 5] = [
        ModelId::SimoMiehe1992,
        ModelId::Miehe1995,
        ModelId::Lion1997,
        ModelId::Helm2001,
        ModelId::GrandiStefanelli2015,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            ModelId::SimoMiehe1992 => "simo_miehe1992",
            ModelId::Miehe1995 => "miehe1995",
            ModelId::Lion1997 => "lion1997",
            ModelId::SimoHughes1998 => "simo_hughes1998",
            ModelId::Helm2001 => "helm2001",
            ModelId::GrandiStefanelli2015 => "grandi_stefanelli2015",
            ModelId::AppendixA3 => "appendix_a3",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.key() == key)
    }

    pub fn is_consistent(&self) -> bool {
        Self::CONSISTENT.contains(self)
    }

    /// Whether the model is defined on symmetric `Cp` only.
    pub fn requires_symmetric_state(&self) -> bool {
        *self != ModelId::AppendixA3
    }

    /// Whether `⟨G, Cp⟩ = 0`, so that `det Cp` is a first integral.
    pub fn is_trace_compatible(&self) -> bool {
        *self != ModelId::SimoHughes1998
    }

    pub fn measure_name(&self) -> &'static str {
        match self {
            ModelId::SimoMiehe1992 | ModelId::SimoHughes1998 => "dev_norm_tau_e",
            ModelId::Miehe1995 | ModelId::Helm2001 => "f_script",
            ModelId::Lion1997 => "dev_norm_sigma_e",
            ModelId::GrandiStefanelli2015 => "dev_norm_sigma_ring",
            ModelId::AppendixA3 => "dev_norm_sigma_tilde",
        }
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Clone, Debug)]
pub struct FlowEvaluation {
    pub model: ModelId,
    /// Yield value `measure − yield_radius_factor · σ_y`.
    pub phi: f64,
    /// The model's deviatoric stress norm.
    pub measure: f64,
    /// `G` with `d/dt[Cp⁻¹] = λ G`; zero when `phi ≤ 0`.
    pub direction: Mat3,
    /// `A = √Cp G √Cp`, for models defined on symmetric states.
    pub frame_direction: Option<SymMat3>,
    /// Relative skew of `√Cp G √Cp` before symmetrization.
    pub frame_asymmetry: f64,
    /// `dW̃/dt` at frozen `C` and unit multiplier.
    pub dissipation_rate: f64,
    pub consistent: bool,
}

impl FlowEvaluation {
    pub fn is_plastic(&self) -> bool {
        self.phi > 0.0
    }
}

fn check_symmetric(cp: &Mat3) -> Result<SymMat3> {
    let residual = cp.asymmetry();
    if residual > STATE_SYMMETRY_TOL {
        return Err(Error::AsymmetricState { residual });
    }
    Ok(cp.sym())
}

fn normalize(norm: f64, params: &MaterialParams) -> Result<f64> {
    if norm <= ZERO_DEVIATOR_REL * params.sigma_y {
        Err(Error::ZeroDeviator { norm })
    } else {
        Ok(1.0 / norm)
    }
}

fn spatial_f(c: &SymMat3, f: Option<&Mat3>) -> Result<Mat3> {
    match f {
        Some(f) => Ok(*f),
        None => Ok(tensor::sqrt_psd(c)?.to_mat()),
    }
}

/// `d/dt W̃(C Cp⁻¹) = ⟨DW̃, C G⟩ = ½ ⟨Σ̃ Cp, G⟩` at frozen `C`.
pub fn energy_rate(params: &MaterialParams, c: &Mat3, cp_inv: &Mat3, g: &Mat3) -> Result<f64> {
    let dw = constitutive::energy_gradient(params, &(*c * *cp_inv))?;
    Ok(inner(&dw, &(*c * *g)))
}

/// The four yield measures `(‖dev τe‖, ‖dev Σe‖, 𝓕, ‖dev Σ̊‖)`.
pub fn yield_measures_report(params: &MaterialParams, c: &SymMat3, cp: &SymMat3, f: Option<&Mat3>) -> Result<[f64; 4]> {
    Ok(constitutive::stress_bundle(params, c, cp, f)?.yield_measures())
}

pub fn evaluate(model: ModelId, params: &MaterialParams, c: &SymMat3, cp: &Mat3, f: Option<&Mat3>) -> Result<FlowEvaluation> {
    if model == ModelId::AppendixA3 {
        return evaluate_a3(params, c, cp, f);
    }
    let cp_s = check_symmetric(cp)?;
    let bundle = constitutive::stress_bundle(params, c, &cp_s, f)?;
    let measure = match model {
        ModelId::SimoMiehe1992 | ModelId::SimoHughes1998 => bundle.dev_norm_tau_e,
        ModelId::Miehe1995 | ModelId::Helm2001 => bundle.f_script,
        ModelId::Lion1997 => bundle.dev_norm_sigma_e,
        ModelId::GrandiStefanelli2015 => bundle.dev_norm_sigma_ring,
        ModelId::AppendixA3 => unreachable!(),
    };
    let phi = measure - params.yield_radius();
    let u = tensor::sqrt_psd(&cp_s)?.to_mat();
    if phi <= 0.0 {
        return Ok(FlowEvaluation {
            model,
            phi,
            measure,
            direction: Mat3::ZERO,
            frame_direction: Some(SymMat3::ZERO),
            frame_asymmetry: 0.0,
            dissipation_rate: 0.0,
            consistent: model.is_consistent(),
        });
    }
    let direction = match model {
        ModelId::SimoMiehe1992 => simo_miehe_direction(params, c, &cp_s, &bundle, f)?,
        ModelId::Miehe1995 => miehe_direction(params, &cp_s, &bundle)?,
        ModelId::Lion1997 => lion_direction(params, &cp_s, &bundle)?,
        ModelId::SimoHughes1998 => simo_hughes_direction(params, c, &cp_s, &bundle, f)?,
        ModelId::Helm2001 => helm_direction(params, &cp_s, &bundle)?,
        ModelId::GrandiStefanelli2015 => grandi_stefanelli_direction(params, &cp_s, &bundle)?,
        ModelId::AppendixA3 => unreachable!(),
    };
    let frame = u * direction * u;
    let frame_asymmetry = frame.asymmetry();
    let cp_inv = cp_s.inv()?.to_mat();
    let dissipation_rate = energy_rate(params, &c.to_mat(), &cp_inv, &direction)?;
    Ok(FlowEvaluation {
        model,
        phi,
        measure,
        direction,
        frame_direction: Some(frame.sym()),
        frame_asymmetry,
        dissipation_rate,
        consistent: model.is_consistent(),
    })
}

// −F⁻¹ [(dev τe / ‖dev τe‖) Be] F⁻ᵀ with Be = F Cp⁻¹ Fᵀ.
fn simo_miehe_direction(
    params: &MaterialParams,
    c: &SymMat3,
    cp: &SymMat3,
    bundle: &StressBundle,
    f: Option<&Mat3>,
) -> Result<Mat3> {
    let f = spatial_f(c, f)?;
    let f_inv = f.inv()?;
    let tau = bundle.f1.scale(2.0).congruence(&f);
    let dev = tau.dev();
    let n = dev.to_mat() * normalize(dev.norm(), params)?;
    let b_e = cp.inv()?.congruence(&f);
    Ok(-(f_inv * (n * b_e) * f_inv.transpose()))
}

// −Cp⁻¹ dev Σ̃ / 𝓕.
fn miehe_direction(params: &MaterialParams, cp: &SymMat3, bundle: &StressBundle) -> Result<Mat3> {
    let dev = dev3(&bundle.sigma_tilde);
    let f_script = constitutive::trace_square_root(&dev);
    Ok(-(cp.inv()?.to_mat() * dev) * normalize(f_script, params)?)
}

// d/dt[Cp] = (dev Σ̃ / 𝓕) Cp, converted with d/dt[Cp⁻¹] = −Cp⁻¹ Ċp Cp⁻¹.
fn helm_direction(params: &MaterialParams, cp: &SymMat3, bundle: &StressBundle) -> Result<Mat3> {
    let cp_dot = helm_cp_rate(params, cp, bundle)?;
    let cp_inv = cp.inv()?.to_mat();
    Ok(-(cp_inv * cp_dot * cp_inv))
}

/// `d/dt[Cp] = (dev Σ̃ / 𝓕) Cp` at unit multiplier.
pub fn helm_cp_rate(params: &MaterialParams, cp: &SymMat3, bundle: &StressBundle) -> Result<Mat3> {
    let sigma_cp = bundle.sigma_tilde * *cp;
    let tr = bundle.sigma_tilde.trace();
    let dev_cp = sigma_cp - cp.to_mat() * (tr / 3.0);
    Ok(dev_cp * normalize(bundle.f_script, params)?)
}

// −dev₃(Cp⁻¹ f̂) Cp⁻¹ / √(tr[(f̂ Cp⁻¹)²] − ⅓ (tr f̂ Cp⁻¹)²).
fn lion_direction(params: &MaterialParams, cp: &SymMat3, bundle: &StressBundle) -> Result<Mat3> {
    let cp_inv = cp.inv()?.to_mat();
    let fh = bundle.f_hat.to_mat();
    let d = dev3(&(fh * cp_inv));
    let denom = inner(&d, &d.transpose()).max(0.0).sqrt();
    Ok(-(dev3(&(cp_inv * fh)) * cp_inv) * normalize(denom, params)?)
}

// −(2/3) tr(Be) F⁻¹ (dev τe / ‖dev τe‖) F⁻ᵀ.
fn simo_hughes_direction(
    params: &MaterialParams,
    c: &SymMat3,
    cp: &SymMat3,
    bundle: &StressBundle,
    f: Option<&Mat3>,
) -> Result<Mat3> {
    let f = spatial_f(c, f)?;
    let f_inv = f.inv()?;
    let tau = bundle.f1.scale(2.0).congruence(&f);
    let dev = tau.dev();
    let n = dev.scale(normalize(dev.norm(), params)?);
    let tr_be = (*c * cp.inv()?).trace();
    Ok(n.congruence(&f_inv).to_mat() * (-2.0 / 3.0 * tr_be))
}

// √Cp⁻¹ (−dev Σ̊ / ‖dev Σ̊‖) √Cp⁻¹.
fn grandi_stefanelli_direction(params: &MaterialParams, cp: &SymMat3, bundle: &StressBundle) -> Result<Mat3> {
    let dev = bundle.sigma_ring.dev();
    let a = -dev.scale(normalize(dev.norm(), params)?);
    let u_inv = tensor::inv_sqrt_psd(cp)?;
    Ok(a.congruence(&u_inv.to_mat()).to_mat())
}

// −(dev Σ̃ / ‖dev Σ̃‖) Cp⁻¹ on a general Cp.
fn evaluate_a3(params: &MaterialParams, c: &SymMat3, cp: &Mat3, f: Option<&Mat3>) -> Result<FlowEvaluation> {
    if let Some(f) = f {
        constitutive::check_deformation(c, f)?;
    }
    let cp_inv = cp.inv()?;
    let cm = c.to_mat();
    let sigma = constitutive::sigma_tilde_general(params, &cm, &cp_inv)?;
    let dev = dev3(&sigma);
    let measure = dev.norm();
    let phi = measure - params.yield_radius();
    let (direction, dissipation_rate) = if phi > 0.0 {
        let g = -(dev * cp_inv) * normalize(measure, params)?;
        (g, energy_rate(params, &cm, &cp_inv, &g)?)
    } else {
        (Mat3::ZERO, 0.0)
    };
    Ok(FlowEvaluation {
        model: ModelId::AppendixA3,
        phi,
        measure,
        direction,
        frame_direction: None,
        frame_asymmetry: 0.0,
        dissipation_rate,
        consistent: false,
    })
}

/// The closed-form `dW̃/dt` at unit multiplier, `−½ · measure`, for consistent models.
pub fn closed_form_dissipation(eval: &FlowEvaluation) -> Option<f64> {
    if !eval.consistent {
        return None;
    }
    Some(if eval.is_plastic() { -0.5 * eval.measure } else { 0.0 })
}

/// The skew increment `H = e1⊗e2 − e2⊗e1` and `tr[(dev₃H)²]`.
///
/// `D²Φ̃(Σ̃)(H, H) = tr[(dev₃H)²]` for `Φ̃ = ½ tr[(dev₃Σ̃)²]`, so a negative value
/// shows that `Φ̃` is not convex on non-symmetric stresses.
pub fn nonconvexity_witness() -> (Mat3, f64) {
    let h = Mat3([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
    (h, curvature(&h))
}

/// `tr[(dev₃H)²]`.
pub fn curvature(h: &Mat3) -> f64 {
    let d = dev3(h);
    inner(&d, &d.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::EnergyKind;

    fn shear_state() -> (SymMat3, Mat3, Mat3) {
        let f = Mat3([[1.0, 0.6, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let c = tensor::gram(&f);
        let cp = SymMat3::new(1.05, 0.97, 1.0, 0.04, 0.0, 0.01);
        let cp = cp.scale(cp.det().powf(-1.0 / 3.0)).to_mat();
        (c, cp, f)
    }

    #[test]
    fn relaxed_state_is_elastic_for_every_model() {
        let p = MaterialParams::default();
        let c = SymMat3::new(1.2, 0.9, 1.0, 0.1, 0.0, 0.0);
        for m in ModelId::ALL {
            let e = evaluate(m, &p, &c, &c.to_mat(), None).unwrap();
            assert!((e.phi + p.yield_radius()).abs() < 1e-12, "{m}");
            assert_eq!(e.direction, Mat3::ZERO);
        }
    }

    #[test]
    fn consistent_frames_are_unit_and_trace_free() {
        let p = MaterialParams::default();
        let (c, cp, f) = shear_state();
        for m in ModelId::CONSISTENT {
            let e = evaluate(m, &p, &c, &cp, Some(&f)).unwrap();
            assert!(e.is_plastic());
            let a = e.frame_direction.unwrap();
            assert!((a.norm() - 1.0).abs() < 1e-12, "{m}");
            assert!(a.trace().abs() < 1e-12, "{m}");
            assert!(e.frame_asymmetry < 1e-12, "{m}");
            assert!(inner(&e.direction, &cp).abs() < 1e-12, "{m}");
            assert!((e.dissipation_rate - closed_form_dissipation(&e).unwrap()).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn lion_neo_hooke_direction_matches_hand_formula() {
        let p = MaterialParams::with_energy(EnergyKind::IsochoricNeoHooke);
        let (c, cp, f) = shear_state();
        let e = evaluate(ModelId::Lion1997, &p, &c, &cp, Some(&f)).unwrap();
        let cp_inv = cp.inv().unwrap();
        let m = cp_inv * c.to_mat();
        let tr = m.trace();
        let denom = (inner(&m, &m.transpose()) - tr * tr / 3.0).sqrt();
        let want = -(dev3(&m) * cp_inv) * (1.0 / denom);
        assert!((e.direction - want).norm() < 1e-12);
    }

    #[test]
    fn helm_simple_neo_hooke_rate_matches_hand_formula() {
        let p = MaterialParams::with_energy(EnergyKind::SimpleNeoHooke);
        let (c, cp, _) = shear_state();
        let cp_s = cp.sym();
        let b = constitutive::stress_bundle(&p, &c, &cp_s, None).unwrap();
        let rate = helm_cp_rate(&p, &cp_s, &b).unwrap();
        let cpi = cp_s.inv().unwrap();
        let want = (c.to_mat() - cp * ((c * cpi).trace() / 3.0)) * (p.mu / b.f_script);
        assert!((rate - want).norm() < 1e-12);
    }

    #[test]
    fn simo_hughes_is_not_trace_compatible() {
        let p = MaterialParams::with_energy(EnergyKind::SimoHughes);
        let (c, cp, f) = shear_state();
        let e = evaluate(ModelId::SimoHughes1998, &p, &c, &cp, Some(&f)).unwrap();
        assert!(inner(&e.direction, &cp).abs() > 1e-3);
    }

    #[test]
    fn a3_direction_is_not_symmetric() {
        let p = MaterialParams::default();
        let (c, cp, _) = shear_state();
        let e = evaluate(ModelId::AppendixA3, &p, &c, &cp, None).unwrap();
        assert!(e.direction.asymmetry() > 1e-4);
        assert!(inner(&e.direction, &cp.transpose()).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_state_is_rejected() {
        let p = MaterialParams::default();
        let (c, mut cp, _) = shear_state();
        cp.0[0][1] += 1e-3;
        assert!(matches!(evaluate(ModelId::Lion1997, &p, &c, &cp, None), Err(Error::AsymmetricState { .. })));
    }

    #[test]
    fn witness_curvature() {
        let (_, k) = nonconvexity_witness();
        assert_eq!(k, -2.0);
        assert_eq!(curvature(&Mat3::IDENTITY), 0.0);
        let d = Mat3::from_diag([-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0]);
        assert!((curvature(&d) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn keys_round_trip() {
        for m in ModelId::ALL {
            assert_eq!(ModelId::from_key(m.key()), Some(m));
        }
    }
}
