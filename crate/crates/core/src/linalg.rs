//! Small dense linear algebra in the real ambient space R^2n.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_RANK_TOL: f64 = 1e-9;

const JACOBI_SWEEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// A vector of R^2n in interleaved coordinates (x1, y1, ..., xn, yn).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AmbientVector(pub Vec<f64>);

impl AmbientVector {
    pub fn zeros(dim: usize) -> Self {
        AmbientVector(vec![0.0; dim])
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        AmbientVector(self.0.iter().map(|x| c * x).collect())
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += c * b;
        }
    }

    pub fn normalized(&self) -> Result<Self, LinalgError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(LinalgError::ZeroVector);
        }
        Ok(self.scaled(1.0 / n))
    }

    /// Linear combination `sum coeffs[k] * vectors[k]`.
    pub fn combination(dim: usize, coeffs: &[f64], vectors: &[AmbientVector]) -> Self {
        let mut out = Self::zeros(dim);
        for (c, v) in coeffs.iter().zip(vectors) {
            out.axpy(*c, v);
        }
        out
    }
}

impl Add for &AmbientVector {
    type Output = AmbientVector;
    fn add(self, rhs: &AmbientVector) -> AmbientVector {
        AmbientVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &AmbientVector {
    type Output = AmbientVector;
    fn sub(self, rhs: &AmbientVector) -> AmbientVector {
        AmbientVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &AmbientVector {
    type Output = AmbientVector;
    fn neg(self) -> AmbientVector {
        AmbientVector(self.0.iter().map(|a| -a).collect())
    }
}

impl Mul<&AmbientVector> for f64 {
    type Output = AmbientVector;
    fn mul(self, rhs: &AmbientVector) -> AmbientVector {
        rhs.scaled(self)
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| c * x).collect() }
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Cholesky solve for a symmetric positive definite matrix.
    pub fn solve_spd(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.rows;
        if rhs.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
                if i == j {
                    let d = self[(i, i)] - s;
                    if d <= 0.0 || !d.is_finite() {
                        return Err(LinalgError::NotPositiveDefinite);
                    }
                    l[(i, i)] = d.sqrt();
                } else {
                    l[(i, j)] = (self[(i, j)] - s) / l[(j, j)];
                }
            }
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
            y[i] = (rhs[i] - s) / l[(i, i)];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| l[(k, i)] * x[k]).sum();
            x[i] = (y[i] - s) / l[(i, i)];
        }
        Ok(x)
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let n = self.rows;
        let mut a = self.clone();
        for _ in 0..JACOBI_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-30 * a.frobenius().powi(2).max(f64::MIN_POSITIVE) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// One-sided Jacobi SVD. Returns singular values and right singular
    /// vectors (as columns of the returned matrix), unsorted.
    pub fn singular_values_right(&self) -> (Vec<f64>, Matrix) {
        let (m, n) = (self.rows, self.cols);
        let mut w = self.clone();
        let mut v = Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });
        for _ in 0..JACOBI_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha: f64 = (0..m).map(|k| w[(k, p)] * w[(k, p)]).sum();
                    let beta: f64 = (0..m).map(|k| w[(k, q)] * w[(k, q)]).sum();
                    let gamma: f64 = (0..m).map(|k| w[(k, p)] * w[(k, q)]).sum();
                    if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for k in 0..m {
                        let a = w[(k, p)];
                        let b = w[(k, q)];
                        w[(k, p)] = c * a - s * b;
                        w[(k, q)] = s * a + c * b;
                    }
                    for k in 0..n {
                        let a = v[(k, p)];
                        let b = v[(k, q)];
                        v[(k, p)] = c * a - s * b;
                        v[(k, q)] = s * a + c * b;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let sigma = (0..n).map(|j| (0..m).map(|k| w[(k, j)] * w[(k, j)]).sum::<f64>().sqrt()).collect();
        (sigma, v)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// A linear subspace given by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<AmbientVector>,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace { ambient_dim, basis: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn basis(&self) -> &[AmbientVector] {
        &self.basis
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &AmbientVector) -> Result<AmbientVector, LinalgError> {
        if v.dim() != self.ambient_dim {
            return Err(LinalgError::DimensionMismatch { expected: self.ambient_dim, got: v.dim() });
        }
        let mut out = AmbientVector::zeros(self.ambient_dim);
        for b in &self.basis {
            out.axpy(v.dot(b), b);
        }
        Ok(out)
    }

    /// `v` minus its projection.
    pub fn reject(&self, v: &AmbientVector) -> Result<AmbientVector, LinalgError> {
        Ok(v - &self.project(v)?)
    }

    /// Orthonormal basis of the orthogonal complement, built from the standard
    /// basis by pivoted Gram-Schmidt.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient_dim;
        let mut out = Subspace::zero(n);
        let mut candidates: Vec<AmbientVector> = (0..n).map(|k| AmbientVector::basis(n, k)).collect();
        for _ in self.dim()..n {
            let residuals: Vec<AmbientVector> = candidates
                .iter()
                .map(|e| {
                    let mut w = e.clone();
                    for _ in 0..2 {
                        for b in self.basis.iter().chain(&out.basis) {
                            let c = w.dot(b);
                            w.axpy(-c, b);
                        }
                    }
                    w
                })
                .collect();
            let (best, _) = residuals
                .iter()
                .enumerate()
                .fold((0, -1.0), |(bi, bn), (i, r)| if r.norm() > bn { (i, r.norm()) } else { (bi, bn) });
            let r = &residuals[best];
            if r.norm() < 1e-8 {
                break;
            }
            out.basis.push(r.scaled(1.0 / r.norm()));
            candidates.remove(best);
        }
        out
    }

    /// Orthonormality defect `max |<b_i, b_j> - delta_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.basis[i].dot(&self.basis[j]) - target).abs());
            }
        }
        worst
    }
}

/// Modified Gram-Schmidt with one reorthogonalisation pass. Vectors whose
/// residual falls below `rank_tol` times the largest input norm are dropped.
pub fn gram_schmidt(ambient_dim: usize, vectors: &[AmbientVector], rank_tol: f64) -> Result<Subspace, LinalgError> {
    let mut out = Subspace::zero(ambient_dim);
    let scale = vectors.iter().map(AmbientVector::norm).fold(0.0, f64::max);
    for v in vectors {
        if v.dim() != ambient_dim {
            return Err(LinalgError::DimensionMismatch { expected: ambient_dim, got: v.dim() });
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &out.basis {
                let c = w.dot(b);
                w.axpy(-c, b);
            }
        }
        let n = w.norm();
        if n > rank_tol * scale && n > 0.0 {
            out.basis.push(w.scaled(1.0 / n));
        }
    }
    Ok(out)
}

/// Orthogonal projection of `v` onto `s`.
pub fn project(v: &AmbientVector, s: &Subspace) -> Result<AmbientVector, LinalgError> {
    s.project(v)
}

/// Intersection of two subspaces from the principal vectors of the pair:
/// directions of `b` whose principal cosine against `a` is at least `1 - tol`.
pub fn subspace_intersection(a: &Subspace, b: &Subspace, tol: f64) -> Result<Subspace, LinalgError> {
    if a.ambient_dim != b.ambient_dim {
        return Err(LinalgError::DimensionMismatch { expected: a.ambient_dim, got: b.ambient_dim });
    }
    let n = a.ambient_dim;
    if a.dim() == 0 || b.dim() == 0 {
        return Ok(Subspace::zero(n));
    }
    let cross = Matrix::from_fn(a.dim(), b.dim(), |i, j| a.basis[i].dot(&b.basis[j]));
    let (sigma, v) = cross.singular_values_right();
    let members: Vec<AmbientVector> = sigma
        .iter()
        .enumerate()
        .filter(|(_, s)| **s >= 1.0 - tol)
        .map(|(c, _)| AmbientVector::combination(n, &v.column(c), &b.basis))
        .collect();
    gram_schmidt(n, &members, DEFAULT_RANK_TOL)
}

/// Angle in [0, pi/2] between `v` and the subspace `s`.
///
/// Computed as `atan2(|v - Pv|, |Pv|)`, which equals `acos(|Pv| / |v|)` but
/// keeps full precision near both ends of the range.
pub fn angle_vector_subspace(v: &AmbientVector, s: &Subspace) -> Result<f64, LinalgError> {
    if v.norm() == 0.0 {
        return Err(LinalgError::ZeroVector);
    }
    let p = s.project(v)?;
    let r = v - &p;
    Ok(r.norm().atan2(p.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn av(xs: &[f64]) -> AmbientVector {
        AmbientVector(xs.to_vec())
    }

    #[test]
    fn gram_schmidt_basic() {
        let s = gram_schmidt(4, &[av(&[1.0, 0.0, 0.0, 0.0]), av(&[1.0, 1.0, 0.0, 0.0])], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(s.orthonormality_defect() < 1e-15);
        let v = av(&[1.0, 2.0, 3.0, 4.0]);
        let s = gram_schmidt(4, &[v.clone(), v.scaled(2.0)], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(gram_schmidt(4, &[], DEFAULT_RANK_TOL).unwrap().dim(), 0);
        assert!(matches!(
            gram_schmidt(4, &[av(&[1.0])], DEFAULT_RANK_TOL),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let e1 = AmbientVector::basis(4, 0);
        let e2 = AmbientVector::basis(4, 1);
        let s1 = gram_schmidt(4, std::slice::from_ref(&e1), DEFAULT_RANK_TOL).unwrap();
        let s2 = gram_schmidt(4, &[e2], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(project(&e1, &s1).unwrap(), e1);
        assert_eq!(project(&e1, &s2).unwrap().norm(), 0.0);
        assert!(project(&av(&[1.0, 2.0]), &s1).is_err());
    }

    #[test]
    fn complement_spans_the_rest() {
        let s = gram_schmidt(4, &[av(&[1.0, 1.0, 0.0, 0.0]), av(&[0.0, 1.0, 1.0, 1.0])], DEFAULT_RANK_TOL).unwrap();
        let c = s.complement();
        assert_eq!(c.dim(), 2);
        for b in c.basis() {
            assert!(s.project(b).unwrap().norm() < 1e-14);
        }
        assert!(c.orthonormality_defect() < 1e-14);
    }

    #[test]
    fn intersections() {
        let s = gram_schmidt(4, &[av(&[1.0, 1.0, 0.0, 0.0]), av(&[0.0, 0.0, 1.0, 0.0])], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(subspace_intersection(&s, &s, 1e-9).unwrap().dim(), 2);
        let t = s.complement();
        assert_eq!(subspace_intersection(&s, &t, 1e-9).unwrap().dim(), 0);
        // planes in R^3 meeting in a line
        let a = gram_schmidt(3, &[av(&[1.0, 0.0, 0.0]), av(&[0.0, 1.0, 0.0])], DEFAULT_RANK_TOL).unwrap();
        let b = gram_schmidt(3, &[av(&[1.0, 1.0, 0.0]), av(&[0.0, 1.0, 1.0])], DEFAULT_RANK_TOL).unwrap();
        let line = subspace_intersection(&a, &b, 1e-9).unwrap();
        assert_eq!(line.dim(), 1);
        let d = &line.basis()[0];
        assert!((d.0[0].abs() - d.0[1].abs()).abs() < 1e-12 && d.0[2].abs() < 1e-12);
    }

    #[test]
    fn angles() {
        let s = gram_schmidt(3, &[av(&[1.0, 0.0, 0.0])], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(angle_vector_subspace(&av(&[2.0, 0.0, 0.0]), &s).unwrap(), 0.0);
        let a = angle_vector_subspace(&av(&[0.0, 1.0, 0.0]), &s).unwrap();
        assert!((a - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let a = angle_vector_subspace(&av(&[1.0, 1.0, 0.0]), &s).unwrap();
        assert!((a - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(angle_vector_subspace(&av(&[0.0; 3]), &s), Err(LinalgError::ZeroVector));
    }

    #[test]
    fn spd_solve_and_eigenvalues() {
        let g = Matrix::from_fn(3, 3, |i, j| if i == j { 4.0 } else { 1.0 });
        let x = g.solve_spd(&[6.0, 6.0, 6.0]).unwrap();
        assert!(x.iter().all(|xi| (xi - 1.0).abs() < 1e-14));
        let ev = g.symmetric_eigenvalues();
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12 && (ev[2] - 6.0).abs() < 1e-12);
        let bad = Matrix::from_fn(2, 2, |_, _| 1.0);
        assert_eq!(bad.solve_spd(&[1.0, 1.0]), Err(LinalgError::NotPositiveDefinite));
    }

    #[test]
    fn singular_values() {
        let m = Matrix::from_fn(2, 2, |i, j| [[3.0, 0.0], [4.0, 5.0]][i][j]);
        let (mut s, _) = m.singular_values_right();
        s.sort_by(f64::total_cmp);
        // singular values of [[3,0],[4,5]] are sqrt(45) and sqrt(5)
        assert!((s[0] - 5f64.sqrt()).abs() < 1e-12);
        assert!((s[1] - 45f64.sqrt()).abs() < 1e-12);
    }
}
