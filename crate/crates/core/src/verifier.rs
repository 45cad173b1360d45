//! Executable checks for the algebraic identities, consistency properties,
//! model equivalences and known deficiencies of the flow rules.
//!
//! Every check yields a [`CheckReport`]. Randomised checks draw sample `i`
//! from a stream keyed by `(seed, check name, i)`, so a report depends on the
//! seed only and not on the thread count.

use crate::constitutive::{self, EnergyKind, Invariants, MaterialParams};
use crate::flow::{self, ModelId};
use crate::integrator::{self, PlasticState, Scheme, StepControls, Trajectory};
use crate::sampling::{self, random_deformation, random_matrix, random_rotation, random_state, random_sym, rng_for};
use crate::scenario::{self, LoadingKind, LoadingProgram};
use crate::tensor::{self, dev3, inner, principal_invariants, Mat3, SymMat3};
use crate::{par, Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Pass iff `worst_residual ≤ threshold`.
    Upper,
    /// Pass iff `worst_residual ≥ threshold` (the check exhibits an effect).
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// The property under test.
    pub claim: String,
    pub worst_residual: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub samples: usize,
    pub pass: bool,
    /// The worst sample, recorded on failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

impl CheckReport {
    pub fn new(
        name: impl Into<String>,
        claim: impl Into<String>,
        worst_residual: f64,
        threshold: f64,
        bound: Bound,
        samples: usize,
        witness: Option<serde_json::Value>,
    ) -> Self {
        let pass = match bound {
            Bound::Upper => worst_residual <= threshold,
            Bound::Lower => worst_residual >= threshold,
        };
        CheckReport {
            name: name.into(),
            claim: claim.into(),
            worst_residual,
            threshold,
            bound,
            samples,
            pass,
            witness: if pass { None } else { witness },
        }
    }

    /// One line of human-readable output.
    pub fn line(&self) -> String {
        let op = match self.bound {
            Bound::Upper => "<=",
            Bound::Lower => ">=",
        };
        format!(
            "{} {} worst={:e} {op} {:e} (n={}) {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.worst_residual,
            self.threshold,
            self.samples,
            self.claim
        )
    }
}

/// Threshold classes.
#[derive(Clone, Copy, Debug)]
pub enum Class {
    Algebraic,
    Structural,
    Trajectory,
    FiniteDifference,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds {
    pub algebraic: f64,
    pub structural: f64,
    pub trajectory: f64,
    pub finite_difference: f64,
    /// Per-check overrides keyed by full check name.
    pub overrides: BTreeMap<String, f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            algebraic: 1e-10,
            structural: 1e-12,
            trajectory: 1e-6,
            finite_difference: 1e-6,
            overrides: BTreeMap::new(),
        }
    }
}

impl Thresholds {
    pub fn resolve(&self, name: &str, class: Class) -> f64 {
        if let Some(v) = self.overrides.get(name) {
            return *v;
        }
        match class {
            Class::Algebraic => self.algebraic,
            Class::Structural => self.structural,
            Class::Trajectory => self.trajectory,
            Class::FiniteDifference => self.finite_difference,
            Class::Fixed(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub samples: usize,
    /// Sample count for the cheap transport estimate.
    pub estimate_samples: usize,
    pub thresholds: Thresholds,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 42, samples: 1000, estimate_samples: 10_000, thresholds: Thresholds::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Stress,
    Flow,
    Equivalence,
    Deficiency,
    All,
}

impl Suite {
    pub fn from_key(key: &str) -> Option<Self> {
        Some(match key {
            "algebra" => Suite::Algebra,
            "stress" => Suite::Stress,
            "flow" => Suite::Flow,
            "equivalence" => Suite::Equivalence,
            "deficiency" => Suite::Deficiency,
            "all" => Suite::All,
            _ => return None,
        })
    }

    pub fn key(&self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Stress => "stress",
            Suite::Flow => "flow",
            Suite::Equivalence => "equivalence",
            Suite::Deficiency => "deficiency",
            Suite::All => "all",
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<CheckReport>> {
    let mut reports = match suite {
        Suite::Algebra => check_algebra(opts),
        Suite::Stress => check_stress_identities(opts),
        Suite::Flow => check_flow(opts)?,
        Suite::Equivalence => check_equivalences(opts)?,
        Suite::Deficiency => check_deficiencies(opts)?,
        Suite::All => {
            let mut all = check_algebra(opts);
            all.extend(check_stress_identities(opts));
            all.extend(check_flow(opts)?);
            all.extend(check_equivalences(opts)?);
            all.extend(check_deficiencies(opts)?);
            all
        }
    };
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(reports)
}

// ---------------------------------------------------------------------------
// sampling plumbing

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn check_seed(opts: &VerifyOptions, name: &str) -> u64 {
    opts.seed ^ fnv1a(name)
}

fn pick_worst<W: Serialize>(results: Vec<(f64, W)>, bound: Bound) -> (f64, Option<serde_json::Value>) {
    let mut best: Option<(f64, W)> = None;
    for (r, w) in results {
        let worse = match &best {
            None => true,
            Some((b, _)) if b.is_nan() => false,
            Some((b, _)) => {
                r.is_nan()
                    || match bound {
                        Bound::Upper => r > *b,
                        Bound::Lower => r < *b,
                    }
            }
        };
        if worse {
            best = Some((r, w));
        }
    }
    match best {
        Some((r, w)) => (r, serde_json::to_value(w).ok()),
        None => (f64::NAN, None),
    }
}

/// Runs `f(seed, i)` for `i < n` and reduces to one report.
fn sampled<W, F>(opts: &VerifyOptions, name: &str, claim: &str, class: Class, bound: Bound, n: usize, f: F) -> CheckReport
where
    W: Serialize + Send,
    F: Fn(u64, u64) -> (f64, W) + Sync + Send,
{
    let seed = check_seed(opts, name);
    let results = par::map_range(n, |i| f(seed, i as u64));
    let (worst, witness) = pick_worst(results, bound);
    CheckReport::new(name, claim, worst, opts.thresholds.resolve(name, class), bound, n, witness)
}

fn single(opts: &VerifyOptions, name: &str, claim: &str, class: Class, bound: Bound, value: f64, witness: impl Serialize) -> CheckReport {
    CheckReport::new(name, claim, value, opts.thresholds.resolve(name, class), bound, 1, serde_json::to_value(witness).ok())
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

#[derive(Serialize)]
struct MatrixWitness {
    x: Mat3,
}

#[derive(Serialize)]
struct PairWitness {
    a: Mat3,
    b: Mat3,
}

#[derive(Serialize)]
struct StateWitness {
    energy: EnergyKind,
    f: Mat3,
    cp: SymMat3,
}

#[derive(Serialize)]
struct ModelStateWitness {
    model: ModelId,
    energy: EnergyKind,
    sigma_y: f64,
    f: Mat3,
    cp: SymMat3,
}

// ---------------------------------------------------------------------------
// algebra

pub fn check_algebra(opts: &VerifyOptions) -> Vec<CheckReport> {
    let n = opts.samples;
    let general = |seed: u64, i: u64| random_matrix(&mut rng_for(seed, i), 1.0);
    let deformation = |seed: u64, i: u64| random_deformation(&mut rng_for(seed, i), sampling::DEFORMATION_RADIUS);
    let mut out = Vec::new();

    out.push(sampled(opts, "algebra.dev_trace_free", "the deviator is trace-free", Class::Structural, Bound::Upper, n, |s, i| {
        let x = general(s, i);
        (dev3(&x).trace().abs() / x.norm(), MatrixWitness { x })
    }));
    out.push(sampled(
        opts,
        "algebra.dev_norm_identity",
        "‖dev X‖² = ‖X‖² − (tr X)²/3",
        Class::Structural,
        Bound::Upper,
        n,
        |s, i| {
            let x = general(s, i);
            let d = dev3(&x).norm();
            let n2 = x.norm().powi(2);
            (rel(d * d, n2 - x.trace().powi(2) / 3.0, n2), MatrixWitness { x })
        },
    ));
    out.push(sampled(opts, "algebra.dev_round_trip", "dev X + (tr X/3) 𝟙 = X", Class::Structural, Bound::Upper, n, |s, i| {
        let x = general(s, i);
        let back = dev3(&x) + Mat3::IDENTITY * (x.trace() / 3.0);
        ((back - x).norm() / x.norm(), MatrixWitness { x })
    }));
    out.push(sampled(opts, "algebra.inverse_round_trip", "X inv(X) = 𝟙", Class::Structural, Bound::Upper, n, |s, i| {
        let x = deformation(s, i);
        let r = match x.inv() {
            Ok(xi) => (x * xi - Mat3::IDENTITY).norm(),
            Err(_) => f64::INFINITY,
        };
        (r, MatrixWitness { x })
    }));
    out.push(sampled(opts, "algebra.cofactor_identity", "X Cof(X)ᵀ = det(X) 𝟙", Class::Structural, Bound::Upper, n, |s, i| {
        let x = general(s, i);
        let r = (x * x.cof().transpose() - Mat3::IDENTITY * x.det()).norm() / x.norm().powi(3);
        (r, MatrixWitness { x })
    }));
    out.push(sampled(
        opts,
        "algebra.eigen_reconstruction",
        "V diag(λ) Vᵀ = S with orthonormal V and ascending λ",
        Class::Algebraic,
        Bound::Upper,
        n,
        |s, i| {
            let mut rng = rng_for(s, i);
            let sym = if i % 10 == 0 {
                // clustered spectrum
                let q = random_rotation(&mut rng);
                let d: f64 = rng.gen_range(0.5..2.0);
                SymMat3::from_diag([d, d * (1.0 + 1e-9), 2.0 * d]).congruence(&q)
            } else {
                random_sym(&mut rng, 2.0)
            };
            let e = sym.eig();
            let v = e.vectors;
            let back = v * Mat3::from_diag(e.values) * v.transpose();
            let sorted = e.values[0] <= e.values[1] && e.values[1] <= e.values[2];
            let r = ((back - sym.to_mat()).norm() / sym.norm()).max((v.transpose() * v - Mat3::IDENTITY).norm());
            (if sorted { r } else { f64::INFINITY }, MatrixWitness { x: sym.to_mat() })
        },
    ));
    out.push(sampled(opts, "algebra.sqrt_round_trip", "sqrt(S)² = S", Class::Structural, Bound::Upper, n, |s, i| {
        let c = tensor::gram(&deformation(s, i));
        let r = match tensor::sqrt_psd(&c) {
            Ok(u) => {
                let m = u.to_mat();
                (m * m - c.to_mat()).norm() / c.norm()
            }
            Err(_) => f64::INFINITY,
        };
        (r, MatrixWitness { x: c.to_mat() })
    }));
    out.push(sampled(opts, "algebra.exp_log_round_trip", "exp(log S) = S", Class::Algebraic, Bound::Upper, n, |s, i| {
        let c = tensor::gram(&deformation(s, i));
        let r = match tensor::log_psd(&c) {
            Ok(l) => (tensor::exp_sym(&l) - c).norm() / c.norm(),
            Err(_) => f64::INFINITY,
        };
        (r, MatrixWitness { x: c.to_mat() })
    }));
    out.push(sampled(opts, "algebra.polar_reconstruction", "R U = F with det R = 1", Class::Algebraic, Bound::Upper, n, |s, i| {
        let f = deformation(s, i);
        let r = match tensor::polar_decompose(&f) {
            Ok((r, u)) => ((r * u - f).norm() / f.norm()).max((r.det() - 1.0).abs()),
            Err(_) => f64::INFINITY,
        };
        (r, MatrixWitness { x: f })
    }));
    out.push(sampled(opts, "algebra.polar_orthogonality", "RᵀR = 𝟙", Class::Structural, Bound::Upper, n, |s, i| {
        let f = deformation(s, i);
        let r = match tensor::polar_decompose(&f) {
            Ok((r, _)) => (r.transpose() * r - Mat3::IDENTITY).norm(),
            Err(_) => f64::INFINITY,
        };
        (r, MatrixWitness { x: f })
    }));
    out.push(sampled(
        opts,
        "algebra.isotropic_equivariance",
        "sqrt, log and exp commute with orthogonal conjugation",
        Class::Algebraic,
        Bound::Upper,
        n,
        |s, i| {
            let mut rng = rng_for(s, i);
            let c = tensor::gram(&random_deformation(&mut rng, sampling::DEFORMATION_RADIUS));
            let q = random_rotation(&mut rng);
            let qt = q.transpose();
            let rotated = c.congruence(&qt);
            let mut worst: f64 = 0.0;
            let mut cmp = |fx: Result<SymMat3>, frx: Result<SymMat3>| {
                worst = worst.max(match (fx, frx) {
                    (Ok(a), Ok(b)) => (a.congruence(&qt) - b).norm() / a.norm(),
                    _ => f64::INFINITY,
                });
            };
            cmp(tensor::sqrt_psd(&c), tensor::sqrt_psd(&rotated));
            cmp(tensor::log_psd(&c), tensor::log_psd(&rotated));
            cmp(Ok(tensor::exp_sym(&c)), Ok(tensor::exp_sym(&rotated)));
            (worst, PairWitness { a: c.to_mat(), b: q })
        },
    ));
    out.push(sampled(
        opts,
        "algebra.invariant_similarity",
        "I_k(AB) = I_k(BA)",
        Class::Algebraic,
        Bound::Upper,
        n,
        |s, i| {
            let mut rng = rng_for(s, i);
            let a = random_matrix(&mut rng, 1.0);
            let b = random_matrix(&mut rng, 1.0);
            let (x1, x2, x3) = principal_invariants(&(a * b));
            let (y1, y2, y3) = principal_invariants(&(b * a));
            let k = a.norm() * b.norm();
            let r = rel(x1, y1, k).max(rel(x2, y2, k * k)).max(rel(x3, y3, k * k * k));
            (r, PairWitness { a, b })
        },
    ));
    out.push(sampled(
        opts,
        "algebra.transport_lower_bound",
        "‖Feᵀ S Fe⁻ᵀ‖² ≥ ½‖S‖² for symmetric S",
        Class::Fixed(0.0),
        Bound::Upper,
        opts.estimate_samples,
        |s, i| {
            let mut rng = rng_for(s, i);
            let fe = random_deformation(&mut rng, sampling::DEFORMATION_RADIUS);
            let sym = random_sym(&mut rng, 1.0);
            let r = match fe.inv() {
                Ok(fi) => {
                    let m = fe.transpose() * sym.to_mat() * fi.transpose();
                    let s2 = sym.norm().powi(2);
                    (0.5 * s2 - m.norm().powi(2)).max(0.0) / s2
                }
                Err(_) => f64::INFINITY,
            };
            (r, PairWitness { a: fe, b: sym.to_mat() })
        },
    ));
    out
}

// ---------------------------------------------------------------------------
// stress identities

/// `Σe = 2 Ce (α1 𝟙 + α2 Ce + α3 Ce²)` from an explicit elastic factor.
fn sigma_e_direct(params: &MaterialParams, fe: &Mat3) -> Result<Mat3> {
    let ce = tensor::gram(fe).to_mat();
    let [a1, a2, a3] = constitutive::alpha_coefficients(params, &Invariants::of(&ce))?;
    Ok((ce * (Mat3::IDENTITY * a1 + ce * a2 + ce * ce * a3)).scale(2.0))
}

/// `D W̃(X)` by central differences on the nine entries, `h = 1e-6 ‖X‖`.
pub fn finite_difference_gradient(params: &MaterialParams, x: &Mat3) -> Result<Mat3> {
    let h = 1e-6 * x.norm();
    let mut d = Mat3::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            let mut p = *x;
            let mut m = *x;
            p.0[i][j] += h;
            m.0[i][j] -= h;
            let wp = constitutive::energy_from_invariants(params, &Invariants::of(&p))?;
            let wm = constitutive::energy_from_invariants(params, &Invariants::of(&m))?;
            d.0[i][j] = (wp - wm) / (2.0 * h);
        }
    }
    Ok(d)
}

pub fn check_stress_identities(opts: &VerifyOptions) -> Vec<CheckReport> {
    let n = opts.samples;
    let mut out = Vec::new();

    out.push(sampled(
        opts,
        "stress.invariant_equality",
        "I_k(Ce) = I_k(C Cp⁻¹)",
        Class::Algebraic,
        Bound::Upper,
        n,
        |s, i| {
            let st = random_state(s, i);
            let r = (|| -> Result<f64> {
                let fe = st.f * st.fp.inv()?;
                let (a1, a2, a3) = principal_invariants(&tensor::gram(&fe).to_mat());
                let (b1, b2, b3) = principal_invariants(&(st.c * st.cp.inv()?));
                Ok(rel(a1, b1, a1.abs().max(1.0)).max(rel(a2, b2, a2.abs().max(1.0))).max(rel(a3, b3, a3.abs().max(1.0))))
            })()
            .unwrap_or(f64::INFINITY);
            (r, StateWitness { energy: EnergyKind::SimpleNeoHooke, f: st.f, cp: st.cp })
        },
    ));

    for energy in EnergyKind::ALL {
        let p = MaterialParams::with_energy(energy);
        let e = energy.key();
        let witness = |st: &sampling::StateSample| StateWitness { energy, f: st.f, cp: st.cp };

        out.push(sampled(
            opts,
            &format!("stress.energy_two_route.{e}"),
            "W̃(C Cp⁻¹) equals W(Fe) with Fe = F Fp⁻¹",
            Class::Algebraic,
            Bound::Upper,
            n,
            |s, i| {
                let st = random_state(s, i);
                let r = (|| -> Result<f64> {
                    let w1 = constitutive::energy_value(&p, &st.c, &st.cp.inv()?)?;
                    let fe = st.f * st.fp.inv()?;
                    let w2 = constitutive::energy_from_invariants(&p, &Invariants::of(&tensor::gram(&fe).to_mat()))?;
                    Ok(rel(w1, w2, w1.abs().max(1.0)))
                })()
                .unwrap_or(f64::INFINITY);
                (r, witness(&st))
            },
        ));

        out.push(sampled(
            opts,
            &format!("stress.transform_relations.{e}"),
            "Σ̃ = Fᵀ τe F⁻ᵀ, Fp⁻¹ Σe Fp⁻ᵀ = 2 Cp⁻¹ f̂ Cp⁻¹, f̂ = C f₁ Cp, tr Σe = tr τe, dev Σe = Feᵀ (dev τe) Fe⁻ᵀ",
            Class::Algebraic,
            Bound::Upper,
            n,
            |s, i| {
                let st = random_state(s, i);
                let r = (|| -> Result<f64> {
                    let b = constitutive::stress_bundle(&p, &st.c, &st.cp, Some(&st.f))?;
                    let tau = b.tau_e.expect("F supplied").to_mat();
                    let f_inv = st.f.inv()?;
                    let fp_inv = st.fp.inv()?;
                    let fe = st.f * fp_inv;
                    let fe_inv = fe.inv()?;
                    let sigma_e = sigma_e_direct(&p, &fe)?;
                    let scale = b.sigma_tilde.norm().max(f64::MIN_POSITIVE);
                    let r1 = (b.sigma_tilde - st.f.transpose() * tau * f_inv.transpose()).norm() / scale;
                    let pulled = fp_inv * sigma_e * fp_inv.transpose();
                    let r2 = (pulled - b.sigma_e_pushforward.to_mat()).norm() / pulled.norm();
                    let r3 = rel(sigma_e.trace(), tau.trace(), sigma_e.norm());
                    let r4 = (dev3(&sigma_e) - fe.transpose() * dev3(&tau) * fe_inv.transpose()).norm() / sigma_e.norm();
                    let kernel = st.c.to_mat() * b.f1.to_mat() * st.cp.to_mat();
                    let r5 = (b.f_hat.to_mat() - kernel).norm() / b.f_hat.norm();
                    Ok(r1.max(r2).max(r3).max(r4).max(r5))
                })()
                .unwrap_or(f64::INFINITY);
                (r, witness(&st))
            },
        ));

        out.push(sampled(
            opts,
            &format!("stress.sigma_tilde_cp_symmetry.{e}"),
            "Σ̃ Cp and Cp⁻¹ Σ̃ are symmetric",
            Class::Structural,
            Bound::Upper,
            n,
            |s, i| {
                let st = random_state(s, i);
                let r = (|| -> Result<f64> {
                    let b = constitutive::stress_bundle(&p, &st.c, &st.cp, None)?;
                    let left = b.sigma_tilde * st.cp;
                    let right = st.cp.inv()? * b.sigma_tilde;
                    Ok(left.asymmetry().max(right.asymmetry()))
                })()
                .unwrap_or(f64::INFINITY);
                (r, witness(&st))
            },
        ));

        out.push(sampled(
            opts,
            &format!("stress.f_script_frame.{e}"),
            "𝓕² = ‖dev(Up⁻¹ Σ̃ Up)‖² and tr[(dev Σ̃)²] ≥ 0",
            Class::Algebraic,
            Bound::Upper,
            n,
            |s, i| {
                let st = random_state(s, i);
                let r = (|| -> Result<f64> {
                    let b = constitutive::stress_bundle(&p, &st.c, &st.cp, None)?;
                    let u = tensor::sqrt_psd(&st.cp)?.to_mat();
                    let u_inv = u.inv()?;
                    let framed = dev3(&(u_inv * b.sigma_tilde * u)).norm().powi(2);
                    let d = dev3(&b.sigma_tilde);
                    let tr2 = inner(&d, &d.transpose());
                    let scale = framed.max(f64::MIN_POSITIVE);
                    Ok(rel(b.f_script * b.f_script, framed, scale).max((-tr2).max(0.0) / scale))
                })()
                .unwrap_or(f64::INFINITY);
                (r, witness(&st))
            },
        ));

        out.push(sampled(
            opts,
            &format!("stress.yield_measure_coincidence.{e}"),
            "‖dev τe‖ = ‖dev Σe‖ = 𝓕 = ‖dev Σ̊‖",
            Class::Algebraic,
            Bound::Upper,
            n,
            |s, i| {
                let st = random_state(s, i);
                let r = match flow::yield_measures_report(&p, &st.c, &st.cp, Some(&st.f)) {
                    Ok(m) => {
                        let hi = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let lo = m.iter().cloned().fold(f64::INFINITY, f64::min);
                        (hi - lo) / hi.max(f64::MIN_POSITIVE)
                    }
                    Err(_) => f64::INFINITY,
                };
                (r, witness(&st))
            },
        ));

        out.push(sampled(
            opts,
            &format!("stress.alpha_finite_difference.{e}"),
            "Σe from the representation coefficients equals 2 Ce D_{Ce}W by central differences",
            Class::FiniteDifference,
            Bound::Upper,
            n,
            |s, i| {
                let st = random_state(s, i);
                let r = (|| -> Result<f64> {
                    let fe = st.f * st.fp.inv()?;
                    let ce = tensor::gram(&fe).to_mat();
                    let sigma = sigma_e_direct(&p, &fe)?;
                    let fd = (ce * finite_difference_gradient(&p, &ce)?).scale(2.0);
                    // Near stress-free states the invariant energy loses digits; floor the scale at μ.
                    Ok((sigma - fd).norm() / sigma.norm().max(p.mu))
                })()
                .unwrap_or(f64::INFINITY);
                (r, witness(&st))
            },
        ));

        out.push(sampled(
            opts,
            &format!("stress.energy_rate.{e}"),
            "d/ds W̃(C(s) Cp⁻¹) = ⟨DW̃, Ċ Cp⁻¹⟩",
            Class::FiniteDifference,
            Bound::Upper,
            n,
            |s, i| {
                let st = random_state(s, i);
                let h_dir = random_matrix(&mut rng_for(s ^ 0x5eed, i), 1.0);
                let r = (|| -> Result<f64> {
                    let cp_inv = st.cp.inv()?.to_mat();
                    let c_at = |t: f64| {
                        let ft = st.f + h_dir * t;
                        ft.transpose() * ft
                    };
                    let c_dot = h_dir.transpose() * st.f + st.f.transpose() * h_dir;
                    let dw = constitutive::energy_gradient(&p, &(st.c * cp_inv))?;
                    let exact = inner(&dw, &(c_dot * cp_inv));
                    let h = 1e-6;
                    let wp = constitutive::energy_general(&p, &c_at(h), &cp_inv)?;
                    let wm = constitutive::energy_general(&p, &c_at(-h), &cp_inv)?;
                    let scale = exact.abs().max(1e-3 * dw.norm() * (c_dot * cp_inv).norm());
                    Ok(rel((wp - wm) / (2.0 * h), exact, scale))
                })()
                .unwrap_or(f64::INFINITY);
                (r, witness(&st))
            },
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// flow rules and trajectories

/// Material used for random plastic states: a small yield stress puts almost
/// every sample outside the elastic domain.
pub fn plastic_params(energy: EnergyKind) -> MaterialParams {
    MaterialParams { sigma_y: 1e-3, ..MaterialParams::with_energy(energy) }
}

fn sample_energy(i: u64) -> EnergyKind {
    EnergyKind::ALL[(i % 4) as usize]
}

/// `dW̃/dt` along `G` at frozen `C` by central differences.
pub fn finite_difference_rate(params: &MaterialParams, c: &Mat3, cp_inv: &Mat3, g: &Mat3) -> Result<f64> {
    let h = 1e-6 / g.norm().max(f64::MIN_POSITIVE);
    let wp = constitutive::energy_general(params, c, &(*cp_inv + *g * h))?;
    let wm = constitutive::energy_general(params, c, &(*cp_inv - *g * h))?;
    Ok((wp - wm) / (2.0 * h))
}

fn flow_sample(
    model: ModelId,
    s: u64,
    i: u64,
) -> (sampling::StateSample, MaterialParams, Result<flow::FlowEvaluation>) {
    let st = random_state(s, i);
    let p = plastic_params(sample_energy(i));
    let e = flow::evaluate(model, &p, &st.c, &st.cp.to_mat(), Some(&st.f));
    (st, p, e)
}

fn model_witness(model: ModelId, st: &sampling::StateSample, p: &MaterialParams) -> ModelStateWitness {
    ModelStateWitness { model, energy: p.energy, sigma_y: p.sigma_y, f: st.f, cp: st.cp }
}

/// The relaxation program used for the monotone-energy and convergence checks.
pub fn relaxation_program(total_time: f64) -> LoadingProgram {
    LoadingProgram::relaxation(LoadingKind::SimpleShear, 0.5, total_time)
}

/// Observed order `log2(|y_n − y_2n| / |y_2n − y_4n|)` of the final `Cp`.
pub fn observed_order(model: ModelId, scheme: Scheme, total_time: f64, n: usize) -> Result<f64> {
    let p = MaterialParams::default();
    let loading = relaxation_program(total_time);
    let finals = [n, 2 * n, 4 * n]
        .iter()
        .map(|&k| {
            let c = StepControls { dt: total_time / k as f64, scheme, ..Default::default() };
            integrator::simulate(model, &p, &loading, PlasticState::identity(), &c, k).map(|t| t.last().cp)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(((finals[0] - finals[1]).norm() / (finals[1] - finals[2]).norm()).log2())
}

#[derive(Serialize)]
struct RecordWitness {
    step: usize,
    t: f64,
    f: Mat3,
    cp: Mat3,
    lambda: f64,
}

fn worst_record(traj: &Trajectory, f: impl Fn(&integrator::Record) -> f64, bound: Bound) -> (f64, Option<serde_json::Value>) {
    let results = traj
        .records
        .iter()
        .enumerate()
        .map(|(k, r)| (f(r), RecordWitness { step: k, t: r.t, f: r.f, cp: r.cp, lambda: r.lambda }))
        .collect();
    pick_worst(results, bound)
}

/// Structural checks on one trajectory of a consistent model.
pub fn check_consistency(traj: &Trajectory, opts: &VerifyOptions) -> Result<Vec<CheckReport>> {
    let m = traj.model.key();
    let p = &traj.params;
    let n = traj.records.len();
    let th = &opts.thresholds;
    let mut out = Vec::new();
    let mut push = |suffix: &str, claim: &str, class: Class, bound: Bound, (worst, witness): (f64, Option<serde_json::Value>)| {
        let name = format!("consistency.{m}.{suffix}");
        let t = th.resolve(&name, class);
        out.push(CheckReport::new(name, claim, worst, t, bound, n, witness));
    };
    push("symmetry", "Cp stays symmetric", Class::Structural, Bound::Upper, worst_record(traj, |r| r.symmetry_residual, Bound::Upper));
    push("det", "det Cp stays 1", Class::Fixed(1e-11), Bound::Upper, worst_record(traj, |r| r.det_residual, Bound::Upper));
    push(
        "positive",
        "Cp stays positive definite",
        Class::Fixed(f64::MIN_POSITIVE),
        Bound::Lower,
        worst_record(traj, |r| r.min_eigenvalue, Bound::Lower),
    );
    push(
        "dissipation",
        "dW̃/dt ≤ 0 at frozen C",
        Class::Fixed(1e-10 * p.mu),
        Bound::Upper,
        worst_record(traj, |r| r.dissipation_rate, Bound::Upper),
    );

    // Finite-difference dissipation at unit multiplier on every plastic record.
    let fd: Vec<(f64, RecordWitness)> = traj
        .records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let v = (|| -> Result<f64> {
                let c = tensor::gram(&r.f);
                let e = flow::evaluate(traj.model, p, &c, &r.cp, Some(&r.f))?;
                if !e.is_plastic() {
                    return Ok(0.0);
                }
                let fd = finite_difference_rate(p, &c.to_mat(), &r.cp.inv()?, &e.direction)?;
                let closed = flow::closed_form_dissipation(&e).unwrap_or(e.dissipation_rate);
                Ok(rel(fd, closed, e.measure).max(rel(e.dissipation_rate, closed, e.measure)))
            })()
            .unwrap_or(f64::INFINITY);
            (v, RecordWitness { step: k, t: r.t, f: r.f, cp: r.cp, lambda: r.lambda })
        })
        .collect();
    push(
        "dissipation_fd",
        "unit-multiplier dW̃/dt equals −½ × yield measure, by closed form and by central differences",
        Class::FiniteDifference,
        Bound::Upper,
        pick_worst(fd, Bound::Upper),
    );
    Ok(out)
}

/// Maximum over time of `‖Cp^A − Cp^B‖ / ‖Cp^A‖`.
pub fn trajectory_deviation(a: &Trajectory, b: &Trajectory) -> (f64, usize) {
    a.records
        .iter()
        .zip(&b.records)
        .enumerate()
        .map(|(k, (ra, rb))| ((ra.cp - rb.cp).norm() / ra.cp.norm(), k))
        .fold((0.0, 0), |acc, x| if x.0 > acc.0 || x.0.is_nan() { x } else { acc })
}

pub fn equivalence_name(a: ModelId, b: ModelId) -> String {
    format!("equivalence.trajectory.{}~{}", a.key(), b.key())
}

/// Integrates both models on the same program and compares `Cp(t)`.
#[allow(clippy::too_many_arguments)]
pub fn check_equivalence(
    a: ModelId,
    b: ModelId,
    params_a: &MaterialParams,
    params_b: &MaterialParams,
    loading: &LoadingProgram,
    controls: &StepControls,
    steps: usize,
    opts: &VerifyOptions,
) -> Result<CheckReport> {
    if params_a.yield_radius() != params_b.yield_radius() {
        return Err(Error::Precondition(format!(
            "equivalence requires identical yield radii ({} vs {})",
            params_a.yield_radius(),
            params_b.yield_radius()
        )));
    }
    if params_a != params_b {
        return Err(Error::Precondition("equivalence requires identical material parameters".into()));
    }
    for m in [a, b] {
        if !m.is_consistent() {
            return Err(Error::Precondition(format!("{m} is not a consistent model")));
        }
    }
    let ta = integrator::simulate(a, params_a, loading, PlasticState::identity(), controls, steps)?;
    let tb = integrator::simulate(b, params_b, loading, PlasticState::identity(), controls, steps)?;
    Ok(equivalence_report(&ta, &tb, opts))
}

fn equivalence_report(ta: &Trajectory, tb: &Trajectory, opts: &VerifyOptions) -> CheckReport {
    let name = equivalence_name(ta.model, tb.model);
    let (dev, k) = trajectory_deviation(ta, tb);
    let r = &ta.records[k];
    CheckReport::new(
        name.clone(),
        format!("{} and {} produce the same Cp(t)", ta.model, tb.model),
        dev,
        opts.thresholds.resolve(&name, Class::Trajectory),
        Bound::Upper,
        ta.records.len(),
        serde_json::to_value(RecordWitness { step: k, t: r.t, f: r.f, cp: r.cp, lambda: r.lambda }).ok(),
    )
}

fn run_demos(models: &[ModelId]) -> Result<Vec<Trajectory>> {
    par::map(models, |&m| scenario::demo(m).run(m)).into_iter().collect()
}

pub fn check_flow(opts: &VerifyOptions) -> Result<Vec<CheckReport>> {
    let n = opts.samples;
    let mut out = Vec::new();

    for model in ModelId::CONSISTENT {
        out.push(sampled(
            opts,
            &format!("flow.frame_unit_trace_free.{model}"),
            "√Cp G √Cp is symmetric, trace-free and of unit norm",
            Class::Structural,
            Bound::Upper,
            n,
            |s, i| {
                let (st, p, e) = flow_sample(model, s, i);
                let r = match e {
                    Ok(e) if e.is_plastic() => {
                        let a = e.frame_direction.expect("symmetric model");
                        (a.norm() - 1.0).abs().max(a.trace().abs()).max(e.frame_asymmetry)
                    }
                    Ok(_) => 0.0,
                    Err(_) => f64::INFINITY,
                };
                (r, model_witness(model, &st, &p))
            },
        ));
        out.push(sampled(
            opts,
            &format!("flow.dissipation_closed_form.{model}"),
            "unit-multiplier dW̃/dt equals −½ × yield measure",
            Class::Algebraic,
            Bound::Upper,
            n,
            |s, i| {
                let (st, p, e) = flow_sample(model, s, i);
                let r = match e {
                    Ok(e) if e.is_plastic() => {
                        rel(e.dissipation_rate, flow::closed_form_dissipation(&e).unwrap_or(f64::NAN), e.measure)
                    }
                    Ok(_) => 0.0,
                    Err(_) => f64::INFINITY,
                };
                (r, model_witness(model, &st, &p))
            },
        ));
    }

    for model in ModelId::ALL.into_iter().filter(|m| m.is_trace_compatible()) {
        out.push(sampled(
            opts,
            &format!("flow.trace_compatible.{model}"),
            "⟨G, Cp⟩ = 0, so det Cp is a first integral",
            Class::Structural,
            Bound::Upper,
            n,
            |s, i| {
                let (st, p, e) = flow_sample(model, s, i);
                let r = match e {
                    Ok(e) if e.is_plastic() => {
                        inner(&e.direction, &st.cp.to_mat()).abs() / (e.direction.norm() * st.cp.norm())
                    }
                    Ok(_) => 0.0,
                    Err(_) => f64::INFINITY,
                };
                (r, model_witness(model, &st, &p))
            },
        ));
    }

    out.push(sampled(
        opts,
        "flow.appendix_a3_skew",
        "the appendix_a3 rate of Cp⁻¹ is not symmetric on generic symmetric states",
        Class::Fixed(1e-6),
        Bound::Lower,
        n,
        |s, i| {
            let (st, p, e) = flow_sample(ModelId::AppendixA3, s, i);
            let r = match e {
                Ok(e) if e.is_plastic() => e.direction.asymmetry(),
                Ok(_) => f64::INFINITY,
                Err(_) => f64::NAN,
            };
            (r, model_witness(ModelId::AppendixA3, &st, &p))
        },
    ));

    // Trajectories of the consistent models on the shared shear program.
    for traj in run_demos(&ModelId::CONSISTENT)? {
        out.extend(check_consistency(&traj, opts)?);
    }

    // Relaxation at frozen F.
    let relax: Vec<Result<Trajectory>> = par::map(&ModelId::CONSISTENT, |&m| {
        let p = MaterialParams::default();
        integrator::simulate(m, &p, &relaxation_program(1.0), PlasticState::identity(), &StepControls::default(), 1000)
    });
    for traj in relax {
        let traj = traj?;
        let m = traj.model;
        let inc: Vec<(f64, RecordWitness)> = traj
            .records
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let r = &w[1];
                (w[1].energy - w[0].energy, RecordWitness { step: k + 1, t: r.t, f: r.f, cp: r.cp, lambda: r.lambda })
            })
            .collect();
        let (worst, witness) = pick_worst(inc, Bound::Upper);
        let name = format!("consistency.{m}.relaxation_monotone");
        let t = opts.thresholds.resolve(&name, Class::Fixed(1e-10 * traj.params.mu));
        out.push(CheckReport::new(name, "W̃ is non-increasing at frozen F", worst, t, Bound::Upper, traj.records.len(), witness));
    }

    // Integrator order and determinant preservation.
    let order_cases = [("euler", Scheme::ForwardEuler, 0.9), ("rk4", Scheme::Rk4, 2.9)];
    let orders: Vec<Result<f64>> = par::map(&order_cases, |&(_, scheme, _)| observed_order(ModelId::Lion1997, scheme, 0.05, 40));
    for ((key, _, min), order) in order_cases.iter().zip(orders) {
        let order = order?;
        out.push(single(
            opts,
            &format!("integrator.order.{key}"),
            &format!("observed convergence order of {key} on smooth relaxation is at least {min}"),
            Class::Fixed(*min),
            Bound::Lower,
            order,
            serde_json::json!({ "model": "lion1997", "steps": [40, 80, 160], "total_time": 0.05 }),
        ));
    }
    let gs = scenario::demo(ModelId::GrandiStefanelli2015);
    let traj = gs.run(ModelId::GrandiStefanelli2015)?;
    let (worst, witness) = worst_record(&traj, |r| r.det_residual, Bound::Upper);
    let name = "integrator.exponential_map_det";
    out.push(CheckReport::new(
        name,
        "the exponential map keeps det Cp = 1 over 10³ steps",
        worst,
        opts.thresholds.resolve(name, Class::Fixed(1e-12)),
        Bound::Upper,
        traj.records.len(),
        witness,
    ));
    Ok(out)
}

// ---------------------------------------------------------------------------
// equivalences

/// Model pairs whose directions agree state by state.
pub const ALGEBRAIC_EQUIVALENCES: [(ModelId, ModelId, Class); 4] = [
    (ModelId::SimoMiehe1992, ModelId::Lion1997, Class::Algebraic),
    (ModelId::Helm2001, ModelId::Miehe1995, Class::Structural),
    (ModelId::Lion1997, ModelId::GrandiStefanelli2015, Class::Algebraic),
    (ModelId::Helm2001, ModelId::GrandiStefanelli2015, Class::Algebraic),
];

pub fn check_equivalences(opts: &VerifyOptions) -> Result<Vec<CheckReport>> {
    let n = opts.samples;
    let mut out = Vec::new();
    for (a, b, class) in ALGEBRAIC_EQUIVALENCES {
        out.push(sampled(
            opts,
            &format!("equivalence.direction.{a}~{b}"),
            &format!("{a} and {b} give the same rate of Cp⁻¹ on every plastic state"),
            class,
            Bound::Upper,
            n,
            |s, i| {
                let st = random_state(s, i);
                let p = plastic_params(sample_energy(i));
                let r = (|| -> Result<f64> {
                    let cp = st.cp.to_mat();
                    let ea = flow::evaluate(a, &p, &st.c, &cp, Some(&st.f))?;
                    let eb = flow::evaluate(b, &p, &st.c, &cp, Some(&st.f))?;
                    if ea.is_plastic() != eb.is_plastic() {
                        return Ok(f64::INFINITY);
                    }
                    if !ea.is_plastic() {
                        return Ok(0.0);
                    }
                    Ok((ea.direction - eb.direction).norm() / ea.direction.norm())
                })()
                .unwrap_or(f64::INFINITY);
                (r, model_witness(a, &st, &p))
            },
        ));
    }

    let trajectories = run_demos(&ModelId::CONSISTENT)?;
    for (i, ta) in trajectories.iter().enumerate() {
        for tb in &trajectories[i + 1..] {
            if ta.params.yield_radius() != tb.params.yield_radius() {
                return Err(Error::Precondition("equivalence requires identical yield radii".into()));
            }
            out.push(equivalence_report(ta, tb, opts));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// deficiencies

/// The increment printed alongside the non-convexity remark, which is not
/// trace-free.
pub fn printed_witness() -> Mat3 {
    Mat3([[-0.5, 1.0, 2.0], [-2.0, -0.5, 3.0], [-1.0, -3.0, -0.5]])
}

/// A sheared state with `Cp` not coaxial with `C`, where `Σ̃` has a sizeable skew part.
pub fn generic_gap_state() -> (SymMat3, SymMat3, Mat3) {
    let f = scenario::simple_shear(1.0);
    let s = SymMat3::new(0.2, -0.1, -0.1, 0.3, 0.0, 0.0);
    (tensor::gram(&f), tensor::exp_sym(&s), f)
}

pub fn check_deficiencies(opts: &VerifyOptions) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();

    let (h, k) = flow::nonconvexity_witness();
    out.push(single(
        opts,
        "deficiency.nonconvexity_witness",
        "tr[(dev H)²] = −2 for H = e1⊗e2 − e2⊗e1, so ½ tr[(dev Σ̃)²] is not convex",
        Class::Fixed(0.0),
        Bound::Upper,
        (k + 2.0).abs(),
        MatrixWitness { x: h },
    ));
    let d = Mat3::from_diag([-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0]);
    out.push(single(
        opts,
        "deficiency.diagonal_curvature",
        "tr[(dev H)²] = 2/3 for H = diag(−1/3, 2/3, −1/3)",
        Class::Fixed(4.0 * f64::EPSILON),
        Bound::Upper,
        (flow::curvature(&d) - 2.0 / 3.0).abs(),
        MatrixWitness { x: d },
    ));
    let m = printed_witness();
    out.push(single(
        opts,
        "deficiency.printed_witness_curvature",
        "the printed increment also has negative curvature tr[(dev H)²] (value −26)",
        Class::Fixed(0.0),
        Bound::Upper,
        flow::curvature(&m),
        MatrixWitness { x: m },
    ));

    let p_sh = MaterialParams::with_energy(EnergyKind::SimoHughes);
    out.push(sampled(
        opts,
        "deficiency.simo_hughes_defect_routes",
        "closed-form and assembled ⟨Fe⁻¹ dev τe Fe⁻ᵀ, 𝟙⟩ agree",
        Class::Algebraic,
        Bound::Upper,
        opts.samples,
        |s, i| {
            let mut rng = rng_for(s, i);
            let fe = random_deformation(&mut rng, sampling::DEFORMATION_RADIUS);
            let p = MaterialParams::with_energy(sample_energy(i));
            let r = match constitutive::simo_hughes_trace_defect(&p, &fe) {
                Ok(d) => rel(d.closed_form, d.assembled, d.closed_form.abs().max(p.mu)),
                Err(_) => f64::INFINITY,
            };
            (r, StateWitness { energy: p.energy, f: fe, cp: SymMat3::IDENTITY })
        },
    ));
    out.push(sampled(
        opts,
        "deficiency.simo_hughes_defect_conformal",
        "the trace defect vanishes for Fe = λ Q",
        Class::Structural,
        Bound::Upper,
        opts.samples,
        |s, i| {
            let mut rng = rng_for(s, i);
            let fe = random_rotation(&mut rng) * rng.gen_range(0.7..1.4);
            let p = MaterialParams::with_energy(sample_energy(i));
            let r = match constitutive::simo_hughes_trace_defect(&p, &fe) {
                Ok(d) => d.closed_form.abs().max(d.assembled.abs()),
                Err(_) => f64::INFINITY,
            };
            (r, StateWitness { energy: p.energy, f: fe, cp: SymMat3::IDENTITY })
        },
    ));
    let fe = Mat3::from_diag([2.0, 1.0, 1.0]);
    let defect = constitutive::simo_hughes_trace_defect(&p_sh, &fe)?;
    out.push(single(
        opts,
        "deficiency.simo_hughes_defect_nonzero",
        "the trace defect is nonzero for Ce = diag(4, 1, 1)",
        Class::Fixed(1e-3),
        Bound::Lower,
        defect.closed_form.abs(),
        StateWitness { energy: EnergyKind::SimoHughes, f: fe, cp: SymMat3::IDENTITY },
    ));

    let demos = run_demos(&[ModelId::SimoHughes1998, ModelId::AppendixA3])?;
    let sh = &demos[0];
    let (worst, witness) = worst_record(sh, |r| r.det_residual, Bound::Upper);
    let name = "deficiency.simo_hughes_det_drift";
    out.push(CheckReport::new(
        name,
        "simo_hughes1998 does not keep det C̄p = 1 in simple shear up to γ = 0.5",
        worst,
        opts.thresholds.resolve(name, Class::Fixed(1e-4)),
        Bound::Lower,
        sh.records.len(),
        witness,
    ));
    let a3 = &demos[1];
    let (worst, witness) = worst_record(a3, |r| r.symmetry_residual, Bound::Upper);
    let name = "deficiency.appendix_a3_skew";
    out.push(CheckReport::new(
        name,
        "appendix_a3 loses symmetry of Cp under non-proportional loading",
        worst,
        opts.thresholds.resolve(name, Class::Fixed(1e-6)),
        Bound::Lower,
        a3.records.len(),
        witness,
    ));

    let (c, cp, f) = generic_gap_state();
    let p = MaterialParams::default();
    let b = constitutive::stress_bundle(&p, &c, &cp, Some(&f))?;
    let frob = dev3(&b.sigma_tilde).norm();
    out.push(single(
        opts,
        "deficiency.f_script_gap",
        "√tr[(dev Σ̃)²] differs from ‖dev Σ̃‖ on a generic state",
        Class::Fixed(1e-3),
        Bound::Lower,
        rel(b.f_script, frob, frob),
        StateWitness { energy: p.energy, f, cp },
    ));
    Ok(out)
}
