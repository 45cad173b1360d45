//! Seeded random states.
//!
//! Sample `i` of a run with seed `s` is drawn from its own ChaCha stream, so
//! a sample does not depend on how many others were drawn before it or on
//! which thread drew it.

use crate::tensor::{self, rotation, Mat3, SymMat3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    let axis = loop {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            break v;
        }
    };
    rotation(axis, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
}

/// Symmetric matrix with Frobenius norm at most `radius`.
pub fn random_sym(rng: &mut impl Rng, radius: f64) -> SymMat3 {
    let mut s = SymMat3(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    let n = s.norm();
    if n > 0.0 {
        s = s.scale(radius * rng.gen_range(0.0..1.0) / n);
    }
    s
}

pub fn random_matrix(rng: &mut impl Rng, radius: f64) -> Mat3 {
    Mat3(std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-radius..radius))))
}

/// `exp(S) Q` with `‖S‖ ≤ radius`.
pub fn random_deformation(rng: &mut impl Rng, radius: f64) -> Mat3 {
    tensor::exp_sym(&random_sym(rng, radius)).to_mat() * random_rotation(rng)
}

/// `exp(dev S)`: symmetric, positive definite, unimodular.
pub fn random_unimodular(rng: &mut impl Rng, radius: f64) -> SymMat3 {
    tensor::exp_sym(&random_sym(rng, radius).dev())
}

/// A full kinematic sample `F = Fe Fp`.
#[derive(Clone, Debug)]
pub struct StateSample {
    pub f: Mat3,
    pub fe: Mat3,
    pub fp: Mat3,
    pub c: SymMat3,
    pub cp: SymMat3,
}

pub const DEFORMATION_RADIUS: f64 = 0.5;
pub const PLASTIC_RADIUS: f64 = 0.4;

pub fn random_state(seed: u64, index: u64) -> StateSample {
    let mut rng = rng_for(seed, index);
    let fe = random_deformation(&mut rng, DEFORMATION_RADIUS);
    let cp = random_unimodular(&mut rng, PLASTIC_RADIUS);
    let up = tensor::sqrt_psd(&cp).expect("exp of symmetric is positive definite");
    let fp = random_rotation(&mut rng) * up;
    let f = fe * fp;
    StateSample { f, fe, fp, c: tensor::gram(&f), cp: tensor::gram(&fp) }
}
