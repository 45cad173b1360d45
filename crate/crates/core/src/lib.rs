//! Material-point library for isotropic finite-strain plasticity formulated in
//! the plastic metric `Cp = FpᵀFp`.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: 3×3 algebra, Cardano/Jacobi eigen-decomposition, matrix
//!   functions of symmetric tensors, polar decomposition.
//! - [`constitutive`]: isotropic elastic energies written in the invariants
//!   of `C Cp⁻¹`, their representation coefficients and every stress measure
//!   the flow rules consume.
//! - [`flow`]: seven flow rules for `Cp`, each coded along its own path so the
//!   equivalence checks compare genuinely different computations.
//! - [`integrator`]: multiplier closures, explicit and exponential-map steps,
//!   trajectories.
//! - [`verifier`]: executable checks for the consistency, equivalence and
//!   deficiency claims about the flow rules.
//! - [`scenario`]: loading programs, configuration files and output formats.
//! - [`par`]: data-parallel helpers (rayon behind the `parallel` feature).

pub mod constitutive;
pub mod flow;
pub mod integrator;
pub mod par;
pub mod sampling;
pub mod scenario;
pub mod tensor;
pub mod verifier;

pub use constitutive::{EnergyKind, MaterialParams, StressBundle};
pub use flow::{FlowEvaluation, ModelId};
pub use integrator::{Closure, PlasticState, Scheme, StepControls, Trajectory};
pub use tensor::{Mat3, SymMat3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("singular matrix (det = {det:e})")]
    SingularMatrix { det: f64 },
    #[error("tensor is not positive definite (min eigenvalue = {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("deformation gradient does not reproduce C (‖FᵀF − C‖/‖C‖ = {residual:e})")]
    InconsistentDeformation { residual: f64 },
    #[error("deviatoric stress vanishes on an active yield surface (norm = {norm:e})")]
    ZeroDeviator { norm: f64 },
    #[error("plastic state is not symmetric (relative skew = {residual:e})")]
    AsymmetricState { residual: f64 },
    #[error("consistency solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("scheme {scheme} is not admissible for model {model}")]
    InadmissibleScheme { model: String, scheme: String },
    #[error("plastic state left the admissible cone at t = {t}: {source}")]
    Inadmissible {
        t: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("{0}")]
    Precondition(String),
}

impl Error {
    /// Errors caused by user input rather than by numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Validation { .. } | Error::InadmissibleScheme { .. } | Error::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
