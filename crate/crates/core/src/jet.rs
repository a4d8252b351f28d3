//! Second-order forward-mode automatic differentiation.
//!
//! A [`Jet2`] carries a value together with its full gradient and Hessian with
//! respect to `m` seeded parameters. Constants carry no derivative storage and
//! broadcast as zero against seeded jets.

use thiserror::Error;

use crate::expr::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("seed index {index} out of range for {dim} parameters")]
pub struct SeedError {
    pub index: usize,
    pub dim: usize,
}

/// Value, gradient and Hessian of a scalar with respect to `dim()` parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    // row-major dim x dim, always exactly symmetric
    hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64) -> Self {
        Jet2 { value, grad: Vec::new(), hess: Vec::new() }
    }

    /// The `i`-th coordinate of `point` as an independent variable.
    pub fn seed(point: &[f64], i: usize) -> Result<Self, SeedError> {
        let m = point.len();
        if i >= m {
            return Err(SeedError { index: i, dim: m });
        }
        let mut grad = vec![0.0; m];
        grad[i] = 1.0;
        Ok(Jet2 { value: point[i], grad, hess: vec![0.0; m * m] })
    }

    /// Seeds every coordinate of `point`.
    pub fn seed_all(point: &[f64]) -> Vec<Jet2> {
        (0..point.len()).map(|i| Jet2::seed(point, i).expect("index in range")).collect()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Number of parameters; zero for constants.
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    /// First derivatives, or an empty slice for constants.
    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_at(&self, i: usize) -> f64 {
        self.grad.get(i).copied().unwrap_or(0.0)
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        let m = self.dim();
        if m == 0 {
            0.0
        } else {
            self.hess[i * m + j]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().chain(&self.hess).all(|x| x.is_finite())
    }

    fn build(value: f64, m: usize, grad: impl Fn(usize) -> f64, hess: impl Fn(usize, usize) -> f64) -> Self {
        if m == 0 {
            return Jet2::constant(value);
        }
        let grad: Vec<f64> = (0..m).map(grad).collect();
        let mut h = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let x = hess(i, j);
                h[i * m + j] = x;
                h[j * m + i] = x;
            }
        }
        Jet2 { value, grad, hess: h }
    }
}

impl Scalar for Jet2 {
    fn constant(c: f64) -> Self {
        Jet2::constant(c)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn add(&self, rhs: &Self) -> Self {
        let m = self.dim().max(rhs.dim());
        Jet2::build(
            self.value + rhs.value,
            m,
            |i| self.grad_at(i) + rhs.grad_at(i),
            |i, j| self.hess(i, j) + rhs.hess(i, j),
        )
    }

    fn sub(&self, rhs: &Self) -> Self {
        let m = self.dim().max(rhs.dim());
        Jet2::build(
            self.value - rhs.value,
            m,
            |i| self.grad_at(i) - rhs.grad_at(i),
            |i, j| self.hess(i, j) - rhs.hess(i, j),
        )
    }

    fn mul(&self, rhs: &Self) -> Self {
        let m = self.dim().max(rhs.dim());
        let (a, b) = (self.value, rhs.value);
        Jet2::build(
            a * b,
            m,
            |i| a * rhs.grad_at(i) + b * self.grad_at(i),
            |i, j| {
                a * rhs.hess(i, j)
                    + b * self.hess(i, j)
                    + self.grad_at(i) * rhs.grad_at(j)
                    + rhs.grad_at(i) * self.grad_at(j)
            },
        )
    }

    fn div(&self, rhs: &Self) -> Self {
        let m = self.dim().max(rhs.dim());
        let b = rhs.value;
        let q = self.value / b;
        let gq: Vec<f64> = (0..m).map(|i| (self.grad_at(i) - q * rhs.grad_at(i)) / b).collect();
        Jet2::build(
            q,
            m,
            |i| gq[i],
            |i, j| {
                (self.hess(i, j) - q * rhs.hess(i, j) - gq[i] * rhs.grad_at(j) - rhs.grad_at(i) * gq[j]) / b
            },
        )
    }

    fn neg(&self) -> Self {
        Jet2::build(-self.value, self.dim(), |i| -self.grad_at(i), |i, j| -self.hess(i, j))
    }

    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet2::build(
            f0,
            self.dim(),
            |i| f1 * self.grad_at(i),
            |i, j| f1 * self.hess(i, j) + f2 * self.grad_at(i) * self.grad_at(j),
        )
    }
}
