//! Dense 3×3 tensor algebra.
//!
//! [`Mat3`] holds general second-order tensors (deformation gradients, the
//! non-symmetric referential stress, flow directions). [`SymMat3`] stores the
//! six independent components of a symmetric tensor, so symmetry is a
//! property of the type rather than something checked at runtime.
//!
//! All inner products are Frobenius: `⟨X, Y⟩ = tr(X Yᵀ)`.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

/// Relative threshold for singular matrices: `|det X| ≤ SINGULAR_REL · ‖X‖³`.
pub const SINGULAR_REL: f64 = 1e-14;

/// Relative discriminant below which Cardano's eigenvectors are replaced by Jacobi.
pub const CARDANO_DISCRIMINANT_TOL: f64 = 1e-12;

/// Eigenvalues (relative to the spectral scale) at or below this are not positive definite.
pub const PD_REL: f64 = 1e-14;

/// General 3×3 real matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

/// Symmetric 3×3 matrix stored as `[xx, yy, zz, xy, xz, yz]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMat3(pub [f64; 6]);

/// Ascending eigenvalues with the matching orthonormal eigenvectors.
#[derive(Clone, Copy, Debug)]
pub struct SymEigen {
    pub values: [f64; 3],
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: Mat3,
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn new(rows: [[f64; 3]; 3]) -> Self {
        Mat3(rows)
    }

    pub fn from_diag(d: [f64; 3]) -> Self {
        Mat3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn from_row_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), 9, "Mat3 needs 9 entries");
        Mat3([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn to_row_array(&self) -> [f64; 9] {
        let a = &self.0;
        [a[0][0], a[0][1], a[0][2], a[1][0], a[1][1], a[1][2], a[2][0], a[2][1], a[2][2]]
    }

    pub fn transpose(&self) -> Mat3 {
        let a = &self.0;
        Mat3([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        det3(self)
    }

    pub fn cof(&self) -> Mat3 {
        cof3(self)
    }

    pub fn inv(&self) -> Result<Mat3> {
        inv3(self)
    }

    pub fn norm(&self) -> f64 {
        inner(self, self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|x| *x *= s);
        out
    }

    pub fn dev(&self) -> Mat3 {
        dev3(self)
    }

    /// `½(X + Xᵀ)` as a stored-symmetric tensor.
    pub fn sym(&self) -> SymMat3 {
        let a = &self.0;
        SymMat3([
            a[0][0],
            a[1][1],
            a[2][2],
            0.5 * (a[0][1] + a[1][0]),
            0.5 * (a[0][2] + a[2][0]),
            0.5 * (a[1][2] + a[2][1]),
        ])
    }

    pub fn skew(&self) -> Mat3 {
        (*self - self.transpose()).scale(0.5)
    }

    /// `‖X − Xᵀ‖ / ‖X‖` (zero for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        let n = self.norm();
        if n == 0.0 {
            0.0
        } else {
            (*self - self.transpose()).norm() / n
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl Default for Mat3 {
    fn default() -> Self {
        Mat3::ZERO
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, rhs: Mat3) {
        *self = *self + rhs;
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self.scale(-1.0)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Mat3(out)
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        self.scale(s)
    }
}

impl Mul<Mat3> for f64 {
    type Output = Mat3;
    fn mul(self, m: Mat3) -> Mat3 {
        m.scale(self)
    }
}

impl Mul<SymMat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: SymMat3) -> Mat3 {
        self * rhs.to_mat()
    }
}

impl Mul<Mat3> for SymMat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        self.to_mat() * rhs
    }
}

impl Mul for SymMat3 {
    type Output = Mat3;
    fn mul(self, rhs: SymMat3) -> Mat3 {
        self.to_mat() * rhs.to_mat()
    }
}

/// `⟨X, Y⟩ = tr(X Yᵀ)`.
pub fn inner(x: &Mat3, y: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += x.0[i][j] * y.0[i][j];
        }
    }
    s
}

/// Deviatoric part `X − (tr X / 3) 𝟙`.
pub fn dev3(x: &Mat3) -> Mat3 {
    let m = x.trace() / 3.0;
    let mut out = *x;
    for i in 0..3 {
        out.0[i][i] -= m;
    }
    out
}

/// `(tr X, tr Cof X, det X)`; valid for non-symmetric `X`.
pub fn principal_invariants(x: &Mat3) -> (f64, f64, f64) {
    let i1 = x.trace();
    let i2 = cof3(x).trace();
    (i1, i2, det3(x))
}

pub fn det3(x: &Mat3) -> f64 {
    let a = &x.0;
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Cofactor matrix, so that `X · Cof(X)ᵀ = det(X) 𝟙`.
pub fn cof3(x: &Mat3) -> Mat3 {
    let a = &x.0;
    Mat3([
        [
            a[1][1] * a[2][2] - a[1][2] * a[2][1],
            a[1][2] * a[2][0] - a[1][0] * a[2][2],
            a[1][0] * a[2][1] - a[1][1] * a[2][0],
        ],
        [
            a[0][2] * a[2][1] - a[0][1] * a[2][2],
            a[0][0] * a[2][2] - a[0][2] * a[2][0],
            a[0][1] * a[2][0] - a[0][0] * a[2][1],
        ],
        [
            a[0][1] * a[1][2] - a[0][2] * a[1][1],
            a[0][2] * a[1][0] - a[0][0] * a[1][2],
            a[0][0] * a[1][1] - a[0][1] * a[1][0],
        ],
    ])
}

pub fn inv3(x: &Mat3) -> Result<Mat3> {
    let det = det3(x);
    let n = x.norm();
    if !det.is_finite() || det.abs() <= SINGULAR_REL * n * n * n {
        return Err(Error::SingularMatrix { det });
    }
    Ok(cof3(x).transpose().scale(1.0 / det))
}

impl SymMat3 {
    pub const ZERO: SymMat3 = SymMat3([0.0; 6]);
    pub const IDENTITY: SymMat3 = SymMat3([1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);

    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        SymMat3([xx, yy, zz, xy, xz, yz])
    }

    pub fn from_diag(d: [f64; 3]) -> Self {
        SymMat3([d[0], d[1], d[2], 0.0, 0.0, 0.0])
    }

    pub fn to_mat(&self) -> Mat3 {
        let s = &self.0;
        Mat3([[s[0], s[3], s[4]], [s[3], s[1], s[5]], [s[4], s[5], s[2]]])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        const IDX: [[usize; 3]; 3] = [[0, 3, 4], [3, 1, 5], [4, 5, 2]];
        self.0[IDX[i][j]]
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn det(&self) -> f64 {
        det3(&self.to_mat())
    }

    pub fn norm(&self) -> f64 {
        let s = &self.0;
        (s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + 2.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5])).sqrt()
    }

    pub fn scale(&self, k: f64) -> SymMat3 {
        let mut out = *self;
        out.0.iter_mut().for_each(|x| *x *= k);
        out
    }

    pub fn dev(&self) -> SymMat3 {
        let m = self.trace() / 3.0;
        let s = &self.0;
        SymMat3([s[0] - m, s[1] - m, s[2] - m, s[3], s[4], s[5]])
    }

    pub fn inv(&self) -> Result<SymMat3> {
        Ok(inv3(&self.to_mat())?.sym())
    }

    /// `A S Aᵀ`, assembled so the result is symmetric by construction.
    pub fn congruence(&self, a: &Mat3) -> SymMat3 {
        let m = *a * self.to_mat();
        let at = a.transpose();
        let row = |i: usize, j: usize| m.0[i][0] * at.0[0][j] + m.0[i][1] * at.0[1][j] + m.0[i][2] * at.0[2][j];
        SymMat3([row(0, 0), row(1, 1), row(2, 2), row(0, 1), row(0, 2), row(1, 2)])
    }

    pub fn eig(&self) -> SymEigen {
        eig_sym(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigenvalues_sym(self)[0]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Add for SymMat3 {
    type Output = SymMat3;
    fn add(self, rhs: SymMat3) -> SymMat3 {
        let mut out = self;
        out.0.iter_mut().zip(rhs.0).for_each(|(a, b)| *a += b);
        out
    }
}

impl Sub for SymMat3 {
    type Output = SymMat3;
    fn sub(self, rhs: SymMat3) -> SymMat3 {
        let mut out = self;
        out.0.iter_mut().zip(rhs.0).for_each(|(a, b)| *a -= b);
        out
    }
}

impl Neg for SymMat3 {
    type Output = SymMat3;
    fn neg(self) -> SymMat3 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for SymMat3 {
    type Output = SymMat3;
    fn mul(self, k: f64) -> SymMat3 {
        self.scale(k)
    }
}

impl From<SymMat3> for Mat3 {
    fn from(s: SymMat3) -> Mat3 {
        s.to_mat()
    }
}

fn spectral_scale(s: &SymMat3) -> f64 {
    s.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Cardano eigenvalues, ascending. Returns the relative discriminant as well.
fn cardano_values(s: &SymMat3) -> ([f64; 3], f64) {
    let m = s.trace() / 3.0;
    let k = s.dev();
    let p2 = k.norm().powi(2) / 6.0;
    let scale = spectral_scale(s);
    if p2 <= (f64::EPSILON * scale).powi(2) {
        return ([m; 3], 0.0);
    }
    let p = p2.sqrt();
    let r = (k.det() / (2.0 * p * p2)).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = m + 2.0 * p * phi.cos();
    let lo = m + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let mid = 3.0 * m - hi - lo;
    let mut v = [lo, mid, hi];
    v.sort_by(|a, b| a.total_cmp(b));
    (v, 1.0 - r * r)
}

fn eigenvalues_sym(s: &SymMat3) -> [f64; 3] {
    let (v, disc) = cardano_values(s);
    if disc < CARDANO_DISCRIMINANT_TOL {
        eig_sym_jacobi(s).values
    } else {
        v
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalized(a: [f64; 3]) -> [f64; 3] {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Unit eigenvector of `s` for the (simple) eigenvalue `lambda`, from the
/// largest cross product of rows of `s − λ𝟙`.
fn eigenvector_simple(s: &SymMat3, lambda: f64) -> [f64; 3] {
    let m = s.to_mat();
    let r = |i: usize| {
        let mut row = m.0[i];
        row[i] -= lambda;
        row
    };
    let (r0, r1, r2) = (r(0), r(1), r(2));
    let candidates = [cross(r0, r1), cross(r0, r2), cross(r1, r2)];
    let best = candidates
        .iter()
        .copied()
        .max_by(|a, b| dot(*a, *a).total_cmp(&dot(*b, *b)))
        .unwrap();
    normalized(best)
}

/// Any unit vector orthogonal to `w`.
fn orthogonal_to(w: [f64; 3]) -> [f64; 3] {
    if w[0].abs() > w[1].abs() {
        normalized([-w[2], 0.0, w[0]])
    } else {
        normalized([0.0, w[2], -w[1]])
    }
}

/// Symmetric eigen-decomposition: closed-form Cardano eigenvalues, with a
/// Jacobi fallback when two eigenvalues (nearly) coincide.
pub fn eig_sym(s: &SymMat3) -> SymEigen {
    let (values, disc) = cardano_values(s);
    if disc < CARDANO_DISCRIMINANT_TOL {
        return eig_sym_jacobi(s);
    }
    // Start from the eigenvalue farther from the middle one; the other two are
    // resolved inside its orthogonal complement.
    let (first, rest) = if values[2] - values[1] >= values[1] - values[0] { (2, [0, 1]) } else { (0, [1, 2]) };
    let w = eigenvector_simple(s, values[first]);
    let u = orthogonal_to(w);
    let v = cross(w, u);
    let sm = s.to_mat();
    let apply = |x: [f64; 3]| {
        [
            dot(sm.0[0], x),
            dot(sm.0[1], x),
            dot(sm.0[2], x),
        ]
    };
    let (au, av) = (apply(u), apply(v));
    // 2×2 projected block [[a, b], [b, c]]
    let a = dot(u, au);
    let b = dot(u, av);
    let c = dot(v, av);
    let lambda = values[rest[0]];
    let (p, q) = if (a - lambda).abs() >= (c - lambda).abs() { (b, lambda - a) } else { (lambda - c, b) };
    let (p, q) = if p == 0.0 && q == 0.0 { (1.0, 0.0) } else { (p, q) };
    let n = (p * p + q * q).sqrt();
    let (p, q) = (p / n, q / n);
    let x = normalized([p * u[0] + q * v[0], p * u[1] + q * v[1], p * u[2] + q * v[2]]);
    let y = cross(w, x);
    let mut cols = [[0.0; 3]; 3];
    cols[first] = w;
    cols[rest[0]] = x;
    cols[rest[1]] = y;
    let mut vectors = Mat3::ZERO;
    for (j, col) in cols.iter().enumerate() {
        for i in 0..3 {
            vectors.0[i][j] = col[i];
        }
    }
    SymEigen { values, vectors }
}

/// Cyclic Jacobi eigen-decomposition. Slower than Cardano but accurate for
/// clustered spectra; also serves as an independent route in tests.
pub fn eig_sym_jacobi(s: &SymMat3) -> SymEigen {
    let mut a = s.to_mat();
    let mut v = Mat3::IDENTITY;
    let scale = spectral_scale(s).max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let off = a.0[0][1].powi(2) + a.0[0][2].powi(2) + a.0[1][2].powi(2);
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a.0[p][q];
            if apq.abs() <= 1e-300 {
                continue;
            }
            let theta = (a.0[q][q] - a.0[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let sn = t * c;
            let mut rot = Mat3::IDENTITY;
            rot.0[p][p] = c;
            rot.0[q][q] = c;
            rot.0[p][q] = sn;
            rot.0[q][p] = -sn;
            a = rot.transpose() * a * rot;
            a.0[p][q] = 0.0;
            a.0[q][p] = 0.0;
            v = v * rot;
        }
    }
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| a.0[i][i].total_cmp(&a.0[j][j]));
    let values = [a.0[idx[0]][idx[0]], a.0[idx[1]][idx[1]], a.0[idx[2]][idx[2]]];
    let mut vectors = Mat3::ZERO;
    for (jn, &jo) in idx.iter().enumerate() {
        for i in 0..3 {
            vectors.0[i][jn] = v.0[i][jo];
        }
    }
    SymEigen { values, vectors }
}

impl SymEigen {
    /// `V diag(f(λ)) Vᵀ`, symmetric by construction.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMat3 {
        let mut out = [0.0; 6];
        const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
        for k in 0..3 {
            let fk = f(self.values[k]);
            for (slot, &(i, j)) in PAIRS.iter().enumerate() {
                out[slot] += fk * self.vectors.0[i][k] * self.vectors.0[j][k];
            }
        }
        SymMat3(out)
    }
}

fn check_pd(s: &SymMat3, e: &SymEigen) -> Result<()> {
    let min = e.values[0];
    let tol = PD_REL * spectral_scale(s);
    if !(min > tol) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(())
}

/// Principal square root of a positive-definite tensor.
pub fn sqrt_psd(s: &SymMat3) -> Result<SymMat3> {
    let e = eig_sym(s);
    check_pd(s, &e)?;
    Ok(e.map(f64::sqrt))
}

/// Inverse principal square root `S^{-1/2}`.
pub fn inv_sqrt_psd(s: &SymMat3) -> Result<SymMat3> {
    let e = eig_sym(s);
    check_pd(s, &e)?;
    Ok(e.map(|x| 1.0 / x.sqrt()))
}

pub fn log_psd(s: &SymMat3) -> Result<SymMat3> {
    let e = eig_sym(s);
    check_pd(s, &e)?;
    Ok(e.map(f64::ln))
}

pub fn exp_sym(s: &SymMat3) -> SymMat3 {
    eig_sym(s).map(f64::exp)
}

/// Right polar decomposition `F = R U` with `U = √(FᵀF)`.
pub fn polar_decompose(f: &Mat3) -> Result<(Mat3, SymMat3)> {
    let det = f.det();
    let n = f.norm();
    if !(det > SINGULAR_REL * n * n * n) {
        return Err(Error::SingularMatrix { det });
    }
    let c = gram(f);
    let e = eig_sym(&c);
    check_pd(&c, &e)?;
    let u = e.map(f64::sqrt);
    let u_inv = e.map(|x| 1.0 / x.sqrt());
    Ok((*f * u_inv, u))
}

/// `FᵀF` as a symmetric tensor.
pub fn gram(f: &Mat3) -> SymMat3 {
    SymMat3::IDENTITY.congruence(&f.transpose())
}

/// Rotation about a unit axis by `angle` (Rodrigues).
pub fn rotation(axis: [f64; 3], angle: f64) -> Mat3 {
    let k = normalized(axis);
    let (s, c) = angle.sin_cos();
    let kx = Mat3([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]]);
    Mat3::IDENTITY + kx * s + (kx * kx) * (1.0 - c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn sample_sym(seed: u64) -> SymMat3 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        SymMat3(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
    }

    fn sample_mat(seed: u64) -> Mat3 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Mat3(std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))))
    }

    #[test]
    fn inner_identity_is_three() {
        assert_eq!(inner(&Mat3::IDENTITY, &Mat3::IDENTITY), 3.0);
    }

    #[test]
    fn curvature_of_printed_witness_matrix() {
        // The printed matrix is not trace-free (tr = -3/2): tr(M²) = -25.25 and
        // tr((dev M)²) = -26. Both are negative, which is what matters.
        let m = Mat3([[-0.5, 1.0, 2.0], [-2.0, -0.5, 3.0], [-1.0, -3.0, -0.5]]);
        assert!(close(inner(&m, &m.transpose()), -25.25, 1e-14));
        let d = dev3(&m);
        assert!(close(inner(&d, &d.transpose()), -26.0, 1e-13));
    }

    #[test]
    fn curvature_of_diagonal_deviator() {
        let d = Mat3::from_diag([-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0]);
        assert!(close(inner(&d, &d.transpose()), 2.0 / 3.0, 1e-15));
    }

    #[test]
    fn dev_examples() {
        assert_eq!(dev3(&Mat3::IDENTITY), Mat3::ZERO);
        let d = dev3(&Mat3::from_diag([1.0, 1.0, 4.0]));
        assert_eq!(d, Mat3::from_diag([-1.0, -1.0, 2.0]));
        for seed in 0..50 {
            let x = sample_mat(seed);
            let back = dev3(&x) + Mat3::IDENTITY * (x.trace() / 3.0);
            assert!((back - x).norm() < 1e-15);
        }
    }

    #[test]
    fn invariant_examples() {
        assert_eq!(principal_invariants(&Mat3::IDENTITY), (3.0, 3.0, 1.0));
        assert_eq!(principal_invariants(&Mat3::from_diag([2.0, 3.0, 4.0])), (9.0, 26.0, 24.0));
    }

    #[test]
    fn det_cof_inv_examples() {
        assert_eq!(det3(&Mat3::IDENTITY), 1.0);
        assert_eq!(inv3(&Mat3::IDENTITY).unwrap(), Mat3::IDENTITY);
        assert_eq!(cof3(&Mat3::from_diag([2.0, 3.0, 4.0])), Mat3::from_diag([12.0, 8.0, 6.0]));
        for seed in 0..50 {
            let x = sample_mat(seed) + Mat3::IDENTITY * 2.0;
            let r = x * inv3(&x).unwrap() - Mat3::IDENTITY;
            assert!(r.norm() < 1e-12);
            let c = x * cof3(&x).transpose() - Mat3::IDENTITY * x.det();
            assert!(c.norm() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let x = Mat3([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]]);
        assert!(matches!(inv3(&x), Err(Error::SingularMatrix { .. })));
        assert!(matches!(polar_decompose(&Mat3::from_diag([1.0, 1.0, -1.0])), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn eig_examples() {
        let e = eig_sym(&SymMat3::IDENTITY);
        assert_eq!(e.values, [1.0, 1.0, 1.0]);
        let e = eig_sym(&SymMat3::from_diag([16.0, 4.0, 9.0]));
        for (v, want) in e.values.iter().zip([4.0, 9.0, 16.0]) {
            assert!(close(*v, want, 1e-13));
        }
    }

    #[test]
    fn eig_reconstructs_random_and_clustered() {
        for seed in 0..200 {
            let s = sample_sym(seed);
            for e in [eig_sym(&s), eig_sym_jacobi(&s)] {
                let r = e.map(|x| x) - s;
                assert!(r.norm() < 1e-12, "seed {seed}: {}", r.norm());
                let vtv = e.vectors.transpose() * e.vectors - Mat3::IDENTITY;
                assert!(vtv.norm() < 1e-13);
                assert!(e.values[0] <= e.values[1] && e.values[1] <= e.values[2]);
            }
        }
        // clustered spectrum: eigenvalues 1, 1 + 1e-9, 2 rotated
        let q = rotation([1.0, 2.0, 3.0], 0.7);
        let s = SymMat3::from_diag([1.0, 1.0 + 1e-9, 2.0]).congruence(&q);
        let e = eig_sym(&s);
        assert!((e.map(|x| x) - s).norm() < 1e-13);
    }

    #[test]
    fn matrix_function_examples() {
        assert_eq!(sqrt_psd(&SymMat3::IDENTITY).unwrap(), SymMat3::IDENTITY);
        assert_eq!(exp_sym(&SymMat3::ZERO), SymMat3::IDENTITY);
        let r = sqrt_psd(&SymMat3::from_diag([4.0, 9.0, 16.0])).unwrap() - SymMat3::from_diag([2.0, 3.0, 4.0]);
        assert!(r.norm() < 1e-14);
        assert!(matches!(
            sqrt_psd(&SymMat3::from_diag([1.0, -1.0, 2.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(log_psd(&SymMat3::from_diag([1.0, 0.0, 2.0])), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn polar_examples() {
        let (r, u) = polar_decompose(&Mat3::IDENTITY).unwrap();
        assert!((r - Mat3::IDENTITY).norm() < 1e-15);
        assert!((u - SymMat3::IDENTITY).norm() < 1e-15);
        let q = rotation([0.3, -1.0, 0.4], 1.1);
        let (r, u) = polar_decompose(&q).unwrap();
        assert!((r - q).norm() < 1e-14);
        assert!((u - SymMat3::IDENTITY).norm() < 1e-14);
    }
}
