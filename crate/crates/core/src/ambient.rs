//! Flat complex Euclidean space C^n = (R^2n, J, <,>) with its canonical
//! complex structure.
//!
//! Coordinates are interleaved as (x1, y1, x2, y2, ..., xn, yn), so J acts on
//! each pair as `(a, b) -> (-b, a)`: `J dx_i = dy_i` and `J dy_i = -dx_i`.

use serde::{Deserialize, Serialize};

use crate::linalg::{AmbientVector, LinalgError, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbientSpace {
    complex_dim: usize,
}

impl AmbientSpace {
    pub fn new(complex_dim: usize) -> Self {
        AmbientSpace { complex_dim }
    }

    pub fn complex_dim(&self) -> usize {
        self.complex_dim
    }

    pub fn real_dim(&self) -> usize {
        2 * self.complex_dim
    }

    /// Index of the real coordinate `x_i` (1-based `i`, as in the usual notation).
    pub fn x(&self, i: usize) -> usize {
        2 * (i - 1)
    }

    pub fn y(&self, i: usize) -> usize {
        2 * (i - 1) + 1
    }

    pub fn apply_j(&self, v: &AmbientVector) -> Result<AmbientVector, LinalgError> {
        if v.dim() != self.real_dim() {
            return Err(LinalgError::DimensionMismatch { expected: self.real_dim(), got: v.dim() });
        }
        Ok(apply_j(v))
    }

    /// The matrix of J at a point. Constant on C^n; the point argument exists
    /// so the parallelism check differentiates a genuine tensor field.
    pub fn complex_structure_at(&self, _point: &[f64]) -> Matrix {
        let n = self.real_dim();
        let mut m = Matrix::zeros(n, n);
        for k in 0..self.complex_dim {
            m[(2 * k + 1, 2 * k)] = 1.0;
            m[(2 * k, 2 * k + 1)] = -1.0;
        }
        m
    }

    /// `max |<Jv, Jw> - <v, w>|` over all pairs drawn from `samples`.
    pub fn check_hermitian_compatibility(&self, samples: &[AmbientVector]) -> f64 {
        let js: Vec<AmbientVector> = samples.iter().map(apply_j).collect();
        let mut worst: f64 = 0.0;
        for (i, v) in samples.iter().enumerate() {
            for (j, w) in samples.iter().enumerate() {
                worst = worst.max((js[i].dot(&js[j]) - v.dot(w)).abs());
            }
        }
        worst
    }

    /// Finite-difference derivative of the J tensor field along each
    /// direction at each point, largest absolute entry over everything.
    pub fn check_kaehler_parallel(&self, points: &[Vec<f64>], directions: &[Vec<f64>], step: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for p in points {
            for d in directions {
                let shifted = |t: f64| -> Vec<f64> { p.iter().zip(d).map(|(a, b)| a + t * b).collect() };
                let plus = self.complex_structure_at(&shifted(step));
                let minus = self.complex_structure_at(&shifted(-step));
                let deriv = plus.sub(&minus).scaled(1.0 / (2.0 * step));
                worst = worst.max(deriv.max_abs());
            }
        }
        worst
    }
}

/// Canonical complex structure on interleaved coordinates.
pub fn apply_j(v: &AmbientVector) -> AmbientVector {
    let mut out = vec![0.0; v.dim()];
    for (pair, src) in out.chunks_exact_mut(2).zip(v.0.chunks_exact(2)) {
        pair[0] = -src[1];
        pair[1] = src[0];
    }
    AmbientVector(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn j_maps_dx_to_dy() {
        let c = AmbientSpace::new(3);
        let dx1 = AmbientVector::basis(6, c.x(1));
        assert_eq!(c.apply_j(&dx1).unwrap(), AmbientVector::basis(6, c.y(1)));
        let dy2 = AmbientVector::basis(6, c.y(2));
        assert_eq!(c.apply_j(&dy2).unwrap(), AmbientVector::basis(6, c.x(2)).scaled(-1.0));
        let v = AmbientVector(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(apply_j(&apply_j(&v)), v.scaled(-1.0));
        assert!(c.apply_j(&AmbientVector::zeros(4)).is_err());
    }

    #[test]
    fn matrix_agrees_with_pairwise_rotation() {
        let c = AmbientSpace::new(2);
        let m = c.complex_structure_at(&[]);
        let v = AmbientVector(vec![1.0, -2.0, 0.5, 3.0]);
        assert_eq!(m.mul_vec(&v.0), apply_j(&v).0);
    }

    #[test]
    fn compatibility_and_parallelism() {
        let c = AmbientSpace::new(6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<AmbientVector> =
            (0..100).map(|_| AmbientVector((0..12).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect();
        assert!(c.check_hermitian_compatibility(&samples) < 1e-13);

        let c5 = AmbientSpace::new(5);
        let pts: Vec<Vec<f64>> = (0..10).map(|_| (0..10).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        for step in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            assert!(c5.check_kaehler_parallel(&pts, &pts, step) < 1e-12);
        }
    }
}
