//! Isotropic elastic energies and the stress measures derived from them.
//!
//! Every energy is written as `Ψ(I1, I2, I3)` of the principal invariants of
//! the elastic right Cauchy–Green tensor `Ce`. Because `Ce` and `X = C Cp⁻¹`
//! share their invariants, the same `Ψ` evaluates `W̃(C Cp⁻¹)` without ever
//! forming `Fp`.
//!
//! The derivative `D_{Ce}W = α1 𝟙 + α2 Ce + α3 Ce²` is obtained from `∂Ψ/∂Ik`
//! and the Cayley–Hamilton theorem:
//!
//! ```text
//! α1 = Ψ1 + I1 Ψ2 + I2 Ψ3,   α2 = −Ψ2 − I1 Ψ3,   α3 = Ψ3
//! ```

use crate::tensor::{self, dev3, inner, principal_invariants, Mat3, SymMat3};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative tolerance on `‖FᵀF − C‖ / ‖C‖` when a deformation gradient accompanies `C`.
pub const DEFORMATION_CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    /// `(μ/2)(I1 − 3)`
    #[serde(rename = "simple_nh")]
    SimpleNeoHooke,
    /// `μ I1 I3^{-1/3} + h(I3)`, `h(x) = (κ/4)((x − 1) − ln x)`
    #[serde(rename = "isochoric_nh")]
    IsochoricNeoHooke,
    /// `(μ/4)‖Ce − 𝟙‖² + (λ/8)(tr Ce − 3)²`
    #[serde(rename = "svk")]
    SaintVenantKirchhoff,
    /// `(μ/2)(I1 I3^{-1/3} − 3) + (κ/4)((I3 − 1) − ln I3)`
    #[serde(rename = "simo_hughes")]
    SimoHughes,
}

impl EnergyKind {
    pub const ALL: [EnergyKind; 4] = [
        EnergyKind::SimpleNeoHooke,
        EnergyKind::IsochoricNeoHooke,
        EnergyKind::SaintVenantKirchhoff,
        EnergyKind::SimoHughes,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            EnergyKind::SimpleNeoHooke => "simple_nh",
            EnergyKind::IsochoricNeoHooke => "isochoric_nh",
            EnergyKind::SaintVenantKirchhoff => "svk",
            EnergyKind::SimoHughes => "simo_hughes",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.key() == key)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialParams {
    pub mu: f64,
    /// Second Lamé modulus (Saint-Venant–Kirchhoff only).
    pub lambda: f64,
    /// Bulk modulus of the volumetric term.
    pub kappa: f64,
    pub sigma_y: f64,
    /// Radius of the elastic domain in units of `sigma_y`.
    pub yield_radius_factor: f64,
    /// Perzyna relaxation time.
    pub eta: f64,
    pub energy: EnergyKind,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            mu: 1.0,
            lambda: 2.0,
            kappa: 10.0,
            sigma_y: 0.2,
            yield_radius_factor: (2.0_f64 / 3.0).sqrt(),
            eta: 0.05,
            energy: EnergyKind::IsochoricNeoHooke,
        }
    }
}

impl MaterialParams {
    pub fn with_energy(energy: EnergyKind) -> Self {
        MaterialParams { energy, ..Default::default() }
    }

    pub fn yield_radius(&self) -> f64 {
        self.yield_radius_factor * self.sigma_y
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Validation { field: format!("material.{field}"), message: format!("must be > 0, got {v}") })
            }
        };
        positive("mu", self.mu)?;
        positive("sigma_y", self.sigma_y)?;
        positive("eta", self.eta)?;
        positive("yield_radius_factor", self.yield_radius_factor)?;
        match self.energy {
            EnergyKind::IsochoricNeoHooke | EnergyKind::SimoHughes => positive("kappa", self.kappa)?,
            EnergyKind::SaintVenantKirchhoff if !self.lambda.is_finite() || self.lambda < 0.0 => {
                return Err(Error::Validation {
                    field: "material.lambda".into(),
                    message: format!("must be >= 0, got {}", self.lambda),
                })
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Invariants {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

impl Invariants {
    pub fn of(x: &Mat3) -> Self {
        let (i1, i2, i3) = principal_invariants(x);
        Invariants { i1, i2, i3 }
    }
}

fn require_positive_i3(inv: &Invariants) -> Result<()> {
    if inv.i3 > 0.0 && inv.i3.is_finite() {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite { min_eigenvalue: inv.i3 })
    }
}

fn volumetric(kappa: f64, i3: f64) -> (f64, f64) {
    (0.25 * kappa * ((i3 - 1.0) - i3.ln()), 0.25 * kappa * (1.0 - 1.0 / i3))
}

/// `Ψ(I1, I2, I3)`.
pub fn energy_from_invariants(params: &MaterialParams, inv: &Invariants) -> Result<f64> {
    require_positive_i3(inv)?;
    let Invariants { i1, i2, i3 } = *inv;
    let mu = params.mu;
    Ok(match params.energy {
        EnergyKind::SimpleNeoHooke => 0.5 * mu * (i1 - 3.0),
        EnergyKind::IsochoricNeoHooke => mu * i1 * i3.powf(-1.0 / 3.0) + volumetric(params.kappa, i3).0,
        EnergyKind::SaintVenantKirchhoff => {
            0.25 * mu * (i1 * i1 - 2.0 * i2 - 2.0 * i1 + 3.0) + 0.125 * params.lambda * (i1 - 3.0).powi(2)
        }
        EnergyKind::SimoHughes => 0.5 * mu * (i1 * i3.powf(-1.0 / 3.0) - 3.0) + volumetric(params.kappa, i3).0,
    })
}

/// `(∂Ψ/∂I1, ∂Ψ/∂I2, ∂Ψ/∂I3)`.
pub fn energy_invariant_gradient(params: &MaterialParams, inv: &Invariants) -> Result<[f64; 3]> {
    require_positive_i3(inv)?;
    let Invariants { i1, i3, .. } = *inv;
    let mu = params.mu;
    Ok(match params.energy {
        EnergyKind::SimpleNeoHooke => [0.5 * mu, 0.0, 0.0],
        EnergyKind::IsochoricNeoHooke => {
            let c = i3.powf(-1.0 / 3.0);
            [mu * c, 0.0, -mu * i1 * c / (3.0 * i3) + volumetric(params.kappa, i3).1]
        }
        EnergyKind::SaintVenantKirchhoff => {
            [0.5 * mu * (i1 - 1.0) + 0.25 * params.lambda * (i1 - 3.0), -0.5 * mu, 0.0]
        }
        EnergyKind::SimoHughes => {
            let c = i3.powf(-1.0 / 3.0);
            [0.5 * mu * c, 0.0, -mu * i1 * c / (6.0 * i3) + volumetric(params.kappa, i3).1]
        }
    })
}

/// Coefficients of `D_{Ce}W = α1 𝟙 + α2 Ce + α3 Ce²`.
pub fn alpha_coefficients(params: &MaterialParams, inv: &Invariants) -> Result<[f64; 3]> {
    let [p1, p2, p3] = energy_invariant_gradient(params, inv)?;
    Ok([p1 + inv.i1 * p2 + inv.i2 * p3, -p2 - inv.i1 * p3, p3])
}

/// `W̃(C Cp⁻¹)` for symmetric arguments.
pub fn energy_value(params: &MaterialParams, c: &SymMat3, cp_inv: &SymMat3) -> Result<f64> {
    energy_from_invariants(params, &Invariants::of(&(*c * *cp_inv)))
}

/// `W̃(C Cp⁻¹)` for a general (possibly non-symmetric) `Cp⁻¹`.
pub fn energy_general(params: &MaterialParams, c: &Mat3, cp_inv: &Mat3) -> Result<f64> {
    energy_from_invariants(params, &Invariants::of(&(*c * *cp_inv)))
}

/// `DW̃(X)` with respect to the full (non-symmetric) argument `X`:
/// `Ψ1 𝟙 + Ψ2 (I1 𝟙 − Xᵀ) + Ψ3 I3 X⁻ᵀ`.
pub fn energy_gradient(params: &MaterialParams, x: &Mat3) -> Result<Mat3> {
    let inv = Invariants::of(x);
    let [p1, p2, p3] = energy_invariant_gradient(params, &inv)?;
    let cof = x.cof(); // = I3 X⁻ᵀ
    Ok(Mat3::IDENTITY * (p1 + p2 * inv.i1) - x.transpose() * p2 + cof * p3)
}

/// `Σ̃ = 2 C DW̃(C Cp⁻¹) Cp⁻¹`, evaluated straight from the energy derivative.
/// Works for non-symmetric `Cp⁻¹` as well.
pub fn sigma_tilde_general(params: &MaterialParams, c: &Mat3, cp_inv: &Mat3) -> Result<Mat3> {
    let x = *c * *cp_inv;
    Ok((*c * energy_gradient(params, &x)? * *cp_inv).scale(2.0))
}

/// `f̂ = α1 C + α2 C Cp⁻¹ C + α3 C Cp⁻¹ C Cp⁻¹ C`.
pub fn f_hat(c: &SymMat3, cp_inv: &SymMat3, alpha: [f64; 3]) -> SymMat3 {
    let c_cpi = *c * *cp_inv;
    c.scale(alpha[0]) + cp_inv.congruence(&c.to_mat()).scale(alpha[1]) + c.congruence(&c_cpi).scale(alpha[2])
}

/// `f₁ = α1 Cp⁻¹ + α2 Cp⁻¹ C Cp⁻¹ + α3 Cp⁻¹ C Cp⁻¹ C Cp⁻¹`.
pub fn f1_kernel(c: &SymMat3, cp_inv: &SymMat3, alpha: [f64; 3]) -> SymMat3 {
    let cpi_c = *cp_inv * *c;
    cp_inv.scale(alpha[0]) + c.congruence(&cp_inv.to_mat()).scale(alpha[1]) + cp_inv.congruence(&cpi_c).scale(alpha[2])
}

/// `√tr(M²)` for a matrix whose square has non-negative trace in exact arithmetic.
pub(crate) fn trace_square_root(m: &Mat3) -> f64 {
    inner(m, &m.transpose()).max(0.0).sqrt()
}

/// All stress measures at one state `(C, Cp)`.
#[derive(Clone, Debug)]
pub struct StressBundle {
    pub invariants: Invariants,
    pub alpha: [f64; 3],
    pub f_hat: SymMat3,
    pub f1: SymMat3,
    /// `Fp⁻¹ Σe Fp⁻ᵀ = 2 Cp⁻¹ f̂ Cp⁻¹`, the Mandel stress pulled back to the reference configuration.
    /// Note `f̂ = C f₁ Cp`, so this differs from `2 f₁` unless `C` and `Cp` coincide.
    pub sigma_e_pushforward: SymMat3,
    /// `Σ̃ = 2 f̂ Cp⁻¹`.
    pub sigma_tilde: Mat3,
    /// `Σ̊ = 2 √Cp⁻¹ sym[C DW̃] √Cp⁻¹`.
    pub sigma_ring: SymMat3,
    /// `τe = 2 F f₁ Fᵀ`, present only when `F` was supplied.
    pub tau_e: Option<SymMat3>,
    pub dev_norm_sigma_e: f64,
    pub dev_norm_tau_e: f64,
    /// `𝓕 = √tr((dev Σ̃)²)`.
    pub f_script: f64,
    pub dev_norm_sigma_ring: f64,
    pub energy_value: f64,
}

impl StressBundle {
    /// `(‖dev τe‖, ‖dev Σe‖, 𝓕, ‖dev Σ̊‖)`.
    pub fn yield_measures(&self) -> [f64; 4] {
        [self.dev_norm_tau_e, self.dev_norm_sigma_e, self.f_script, self.dev_norm_sigma_ring]
    }
}

/// Checks `FᵀF = C` to [`DEFORMATION_CONSISTENCY_TOL`].
pub fn check_deformation(c: &SymMat3, f: &Mat3) -> Result<()> {
    let residual = (tensor::gram(f) - *c).norm() / c.norm().max(f64::MIN_POSITIVE);
    if residual <= DEFORMATION_CONSISTENCY_TOL {
        Ok(())
    } else {
        Err(Error::InconsistentDeformation { residual })
    }
}

pub fn stress_bundle(params: &MaterialParams, c: &SymMat3, cp: &SymMat3, f: Option<&Mat3>) -> Result<StressBundle> {
    if let Some(f) = f {
        check_deformation(c, f)?;
    }
    let cp_inv = cp.inv()?;
    let u_inv = tensor::inv_sqrt_psd(cp)?;
    let x = *c * cp_inv;
    let invariants = Invariants::of(&x);
    let alpha = alpha_coefficients(params, &invariants)?;
    let f_hat = f_hat(c, &cp_inv, alpha);
    let f1 = f1_kernel(c, &cp_inv, alpha);

    // Route 1: representation coefficients.
    let fh_cpi = f_hat * cp_inv;
    let sigma_tilde = fh_cpi.scale(2.0);
    // ‖dev Σe‖² = tr[(dev f̂Cp⁻¹)²]; forming the deviator first avoids cancellation.
    let d = dev3(&fh_cpi);
    let dev_norm_sigma_e = 2.0 * inner(&d, &d.transpose()).max(0.0).sqrt();
    let f_script = trace_square_root(&dev3(&sigma_tilde));

    // Route 2: the energy derivative itself.
    let c_dw = c.to_mat() * energy_gradient(params, &x)?;
    let sigma_ring = c_dw.sym().scale(2.0).congruence(&u_inv.to_mat());
    let dev_norm_sigma_ring = sigma_ring.dev().norm();

    // Route 3: spatial Kirchhoff stress.
    let f_spatial = match f {
        Some(f) => *f,
        None => tensor::sqrt_psd(c)?.to_mat(),
    };
    let tau = f1.scale(2.0).congruence(&f_spatial);
    let dev_norm_tau_e = tau.dev().norm();

    let energy_value = energy_from_invariants(params, &invariants)?;
    Ok(StressBundle {
        invariants,
        alpha,
        f_hat,
        f1,
        sigma_e_pushforward: f_hat.congruence(&cp_inv.to_mat()).scale(2.0),
        sigma_tilde,
        sigma_ring,
        tau_e: f.map(|_| tau),
        dev_norm_sigma_e,
        dev_norm_tau_e,
        f_script,
        dev_norm_sigma_ring,
        energy_value,
    })
}

/// Both evaluations of `⟨Fe⁻¹ (dev τe) Fe⁻ᵀ, 𝟙⟩`.
#[derive(Clone, Copy, Debug)]
pub struct TraceDefect {
    /// From the invariants of `Ce` and the representation coefficients.
    pub closed_form: f64,
    /// From explicitly assembled `τe`, `Fe⁻¹` and the trace.
    pub assembled: f64,
}

/// The trace that decides whether the Simo–Hughes flow rule keeps `det C̄p = 1`.
pub fn simo_hughes_trace_defect(params: &MaterialParams, fe: &Mat3) -> Result<TraceDefect> {
    let fe_inv = fe.inv()?;
    let ce = tensor::gram(fe);
    let inv = Invariants::of(&ce.to_mat());
    let [a1, a2, a3] = alpha_coefficients(params, &inv)?;
    let Invariants { i1, i2, i3 } = inv;

    let tr_c2 = i1 * i1 - 2.0 * i2;
    let tr_c3 = i1 * i1 * i1 - 3.0 * i1 * i2 + 3.0 * i3;
    let tr_2dw = 2.0 * (3.0 * a1 + a2 * i1 + a3 * tr_c2);
    let tr_tau = 2.0 * (a1 * i1 + a2 * tr_c2 + a3 * tr_c3);
    let closed_form = tr_2dw - tr_tau * (i2 / i3) / 3.0;

    let ce_m = ce.to_mat();
    let dw = Mat3::IDENTITY * a1 + ce_m * a2 + (ce_m * ce_m) * a3;
    let tau = (*fe * dw * fe.transpose()).scale(2.0);
    let assembled = (fe_inv * dev3(&tau) * fe_inv.transpose()).trace();
    Ok(TraceDefect { closed_form, assembled })
}

/// The Simo-energy form `μ I3^{-4/3} (3 I3 − I1 I2 / 3)` of the trace defect.
pub fn simo_energy_trace_defect(mu: f64, ce: &SymMat3) -> f64 {
    let Invariants { i1, i2, i3 } = Invariants::of(&ce.to_mat());
    mu * i3.powf(-4.0 / 3.0) * (3.0 * i3 - i1 * i2 / 3.0)
}
