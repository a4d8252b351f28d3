//! Warped-product structure read off the induced metric, and the dichotomy
//! between Riemannian products and quasi hemi-slant warped products.
//!
//! A split of the parameters into base and fiber is warped when the mixed
//! Gram entries vanish, the base block ignores the fiber coordinates, and the
//! fiber block at every base point is a scalar multiple `f^2` of the fiber
//! block at a reference base point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::{evaluate_chart, GeometryError, ImmersionSpec, PointChart};
use crate::linalg::Matrix;
use crate::par::{map_indexed, Execution};
use crate::slant::DistributionAssignment;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WarpError {
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("parameter {0} is not a base direction")]
    NotBase(usize),
    #[error("parameter {0} is not a fiber direction")]
    NotFiber(usize),
    #[error("fiber block vanishes at the reference base point")]
    DegenerateFiber,
    #[error("empty sample grid")]
    EmptyGrid,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarpSplit {
    pub base: Vec<usize>,
    pub fiber: Vec<usize>,
}

impl WarpSplit {
    pub fn new(base: Vec<usize>, fiber: Vec<usize>) -> Self {
        WarpSplit { base, fiber }
    }

    pub fn validate(&self, m: usize) -> Result<(), WarpError> {
        if self.fiber.is_empty() {
            return Err(WarpError::InvalidSplit("empty fiber".into()));
        }
        let mut seen = vec![false; m];
        for &i in self.base.iter().chain(&self.fiber) {
            if i >= m {
                return Err(WarpError::InvalidSplit(format!("index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(WarpError::InvalidSplit(format!("index {i} used twice")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(WarpError::InvalidSplit("split does not cover every parameter".into()));
        }
        Ok(())
    }

    /// Full parameter vector from base and fiber coordinates.
    pub fn assemble(&self, base: &[f64], fiber: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.base.len() + self.fiber.len()];
        for (k, &i) in self.base.iter().enumerate() {
            p[i] = base[k];
        }
        for (k, &i) in self.fiber.iter().enumerate() {
            p[i] = fiber[k];
        }
        p
    }

    fn fiber_block(&self, c: &PointChart) -> Matrix {
        c.gram().submatrix(&self.fiber, &self.fiber)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    RiemannianProduct,
    QuasiHemiSlant,
    Neither,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::RiemannianProduct => "RIEMANNIAN_PRODUCT",
            Verdict::QuasiHemiSlant => "QUASI_HEMI_SLANT",
            Verdict::Neither => "NEITHER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpSample {
    pub base: Vec<f64>,
    /// Warping function, normalised to 1 at the reference base point.
    pub f: f64,
    /// `d ln f` along each base direction, at the first fiber point.
    pub grad_ln_f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpReport {
    pub base: Vec<String>,
    pub fiber: Vec<String>,
    /// Largest |g_bf| over base × fiber pairs and grid points.
    pub cross_residual: f64,
    /// Largest change of the base block across fiber points.
    pub base_independence_residual: f64,
    /// Largest relative Frobenius misfit of the fiber block against
    /// `lambda(b)` times the reference block.
    pub proportionality_residual: f64,
    pub is_warped: bool,
    pub samples: Vec<WarpSample>,
    pub max_grad_ln_f: f64,
    pub constant_warping: bool,
    /// Whether the base holds only invariant-block directions.
    pub base_is_invariant_block: bool,
    /// Settled here for non-warped or trivially warped splits; otherwise
    /// decided by [`dichotomy_check`].
    pub verdict: Option<Verdict>,
}

/// `d ln f` along base direction `i` at `point`. On a warped metric the fiber
/// block is `f(b)^2 G2(fiber)`, so `ln |G_fib|_F = 2 ln f + const` and only
/// the block at points near `point` is needed.
pub fn grad_ln_f(spec: &ImmersionSpec, split: &WarpSplit, point: &[f64], i: usize, tol: &Tolerances) -> Result<f64, WarpError> {
    if !split.base.contains(&i) {
        return Err(WarpError::NotBase(i));
    }
    let h = tol.fd_step;
    let ln_norm = |t: f64| -> Result<f64, WarpError> {
        let mut p = point.to_vec();
        p[i] += t * h;
        let c = evaluate_chart(spec, &p, tol.rank_tol)?;
        let n = split.fiber_block(&c).frobenius();
        if n == 0.0 {
            return Err(WarpError::DegenerateFiber);
        }
        Ok(n.ln())
    };
    let d = (-ln_norm(2.0)? + 8.0 * ln_norm(1.0)? - 8.0 * ln_norm(-1.0)? + ln_norm(-2.0)?) / (12.0 * h);
    Ok(0.5 * d)
}

/// `f(b_a) / f(b_b)` measured at one fiber point.
pub fn warping_ratio(spec: &ImmersionSpec, split: &WarpSplit, b_a: &[f64], b_b: &[f64], fiber: &[f64], tol: &Tolerances) -> Result<f64, WarpError> {
    let ga = split.fiber_block(&evaluate_chart(spec, &split.assemble(b_a, fiber), tol.rank_tol)?);
    let gb = split.fiber_block(&evaluate_chart(spec, &split.assemble(b_b, fiber), tol.rank_tol)?);
    let nb = gb.inner(&gb);
    if nb == 0.0 {
        return Err(WarpError::DegenerateFiber);
    }
    Ok((ga.inner(&gb) / nb).sqrt())
}

/// Measures the warped structure over the grid `base_points × fiber_points`.
/// The first base point is the reference where `f = 1`.
pub fn analyze_warp(
    spec: &ImmersionSpec,
    assignment: &DistributionAssignment,
    split: &WarpSplit,
    base_points: &[Vec<f64>],
    fiber_points: &[Vec<f64>],
    tol: &Tolerances,
    exec: Execution,
) -> Result<WarpReport, WarpError> {
    split.validate(spec.param_count())?;
    if base_points.is_empty() || fiber_points.is_empty() {
        return Err(WarpError::EmptyGrid);
    }
    let nf = fiber_points.len();
    let grid: Vec<Vec<f64>> = base_points
        .iter()
        .flat_map(|b| fiber_points.iter().map(move |f| split.assemble(b, f)))
        .collect();
    let charts = map_indexed(exec, &grid, |_, p| evaluate_chart(spec, p, tol.rank_tol));
    let charts: Vec<PointChart> = charts.into_iter().collect::<Result<_, _>>()?;
    let at = |b: usize, f: usize| &charts[b * nf + f];

    let mut cross: f64 = 0.0;
    for c in &charts {
        let g = c.gram();
        for &i in &split.base {
            for &j in &split.fiber {
                cross = cross.max(g[(i, j)].abs());
            }
        }
    }

    let mut base_indep: f64 = 0.0;
    for b in 0..base_points.len() {
        let g0 = at(b, 0).gram().submatrix(&split.base, &split.base);
        let scale = g0.max_abs().max(1.0);
        for f in 1..nf {
            let g = at(b, f).gram().submatrix(&split.base, &split.base);
            base_indep = base_indep.max(g.sub(&g0).max_abs() / scale);
        }
    }

    let reference: Vec<Matrix> = (0..nf).map(|f| split.fiber_block(at(0, f))).collect();
    let ref_norm: f64 = reference.iter().map(|g| g.inner(g)).sum();
    if ref_norm == 0.0 {
        return Err(WarpError::DegenerateFiber);
    }
    let mut prop: f64 = 0.0;
    let mut lambdas = Vec::with_capacity(base_points.len());
    for b in 0..base_points.len() {
        let blocks: Vec<Matrix> = (0..nf).map(|f| split.fiber_block(at(b, f))).collect();
        let lambda = blocks.iter().zip(&reference).map(|(g, r)| g.inner(r)).sum::<f64>() / ref_norm;
        let misfit: f64 = blocks.iter().zip(&reference).map(|(g, r)| g.sub(&r.scaled(lambda)).inner(&g.sub(&r.scaled(lambda)))).sum();
        let size: f64 = blocks.iter().map(|g| g.inner(g)).sum();
        prop = prop.max((misfit / size.max(f64::MIN_POSITIVE)).sqrt());
        lambdas.push(lambda);
    }

    let grads = map_indexed(exec, base_points, |_, b| -> Result<Vec<f64>, WarpError> {
        let p = split.assemble(b, &fiber_points[0]);
        split.base.iter().map(|&i| grad_ln_f(spec, split, &p, i, tol)).collect()
    });
    let mut samples = Vec::with_capacity(base_points.len());
    let mut max_grad: f64 = 0.0;
    for ((b, lambda), g) in base_points.iter().zip(&lambdas).zip(grads) {
        let g = g?;
        max_grad = g.iter().fold(max_grad, |m, x| m.max(x.abs()));
        samples.push(WarpSample { base: b.clone(), f: lambda.max(0.0).sqrt(), grad_ln_f: g });
    }

    let scale = charts.iter().fold(1.0f64, |s, c| s.max(c.gram().max_abs()));
    let is_warped = cross / scale < tol.warp_tol && base_indep < tol.warp_tol && prop < tol.warp_tol;
    let constant_warping = max_grad < tol.grad_tol;
    let verdict = if !is_warped {
        Some(Verdict::Neither)
    } else if constant_warping {
        Some(Verdict::RiemannianProduct)
    } else {
        None
    };
    let names = |ix: &[usize]| ix.iter().map(|&i| spec.params()[i].clone()).collect();
    let mut base_sorted = split.base.clone();
    base_sorted.sort_unstable();
    let mut inv_sorted = assignment.invariant.clone();
    inv_sorted.sort_unstable();
    Ok(WarpReport {
        base: names(&split.base),
        fiber: names(&split.fiber),
        cross_residual: cross,
        base_independence_residual: base_indep,
        proportionality_residual: prop,
        is_warped,
        samples,
        max_grad_ln_f: max_grad,
        constant_warping,
        base_is_invariant_block: base_sorted == inv_sorted,
        verdict,
    })
}

/// `|nabla_{d_i} d_j - (d_i ln f) d_j|` for base direction `i` and fiber
/// direction `j`.
pub fn warped_connection_residual(spec: &ImmersionSpec, split: &WarpSplit, point: &[f64], i: usize, j: usize, tol: &Tolerances) -> Result<f64, WarpError> {
    if !split.fiber.contains(&j) {
        return Err(WarpError::NotFiber(j));
    }
    let g = grad_ln_f(spec, split, point, i, tol)?;
    let c = evaluate_chart(spec, point, tol.rank_tol)?;
    let m = spec.param_count();
    let mut ei = vec![0.0; m];
    ei[i] = 1.0;
    let mut ej = vec![0.0; m];
    ej[j] = 1.0;
    let mut r = c.connection(&ei, &ej);
    r.axpy(-g, c.tangent(j));
    Ok(r.norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedConnectionResidual {
    pub point: Vec<f64>,
    pub base: String,
    pub fiber: String,
    pub grad_ln_f: f64,
    pub residual: f64,
}

/// Warped connection residuals for every base × fiber pair at every point.
pub fn check_warped_connection(spec: &ImmersionSpec, split: &WarpSplit, points: &[Vec<f64>], tol: &Tolerances, exec: Execution) -> Result<Vec<WarpedConnectionResidual>, WarpError> {
    split.validate(spec.param_count())?;
    let per = map_indexed(exec, points, |_, p| -> Result<Vec<WarpedConnectionResidual>, WarpError> {
        let mut out = Vec::new();
        for &i in &split.base {
            for &j in &split.fiber {
                out.push(WarpedConnectionResidual {
                    point: p.clone(),
                    base: spec.params()[i].clone(),
                    fiber: spec.params()[j].clone(),
                    grad_ln_f: grad_ln_f(spec, split, p, i, tol)?,
                    residual: warped_connection_residual(spec, split, p, i, j, tol)?,
                });
            }
        }
        Ok(out)
    });
    let mut out = Vec::new();
    for r in per {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dichotomy {
    /// `max |(d_i ln f) g(Z, phi W)|` over base directions and D2 fields.
    pub phi_product: f64,
    /// `max cos^2(theta2) |d_i ln f|`
    pub strengthened: f64,
    pub max_grad_ln_f: f64,
    pub theta2: Option<f64>,
    pub verdict: Verdict,
    /// Both branches failed on a configuration that looked warped.
    pub counterexample: bool,
}

/// Decides between a constant warping function and an anti-invariant second
/// slant block. `theta2` is the measured angle of D2, `None` when D2 is empty.
#[allow(clippy::too_many_arguments)]
pub fn dichotomy_check(
    spec: &ImmersionSpec,
    assignment: &DistributionAssignment,
    split: &WarpSplit,
    warp: &WarpReport,
    theta2: Option<f64>,
    points: &[Vec<f64>],
    tol: &Tolerances,
    exec: Execution,
) -> Result<Dichotomy, WarpError> {
    let per = map_indexed(exec, points, |_, p| -> Result<(f64, f64), WarpError> {
        let c = evaluate_chart(spec, p, tol.rank_tol)?;
        let mut g_max: f64 = 0.0;
        let mut e64: f64 = 0.0;
        let mut zw: f64 = 0.0;
        for &z in &assignment.slant2 {
            for &w in &assignment.slant2 {
                zw = zw.max(c.tangent(z).dot(&c.phi(c.tangent(w))).abs());
            }
        }
        for &i in &split.base {
            let g = grad_ln_f(spec, split, p, i, tol)?.abs();
            g_max = g_max.max(g);
            e64 = e64.max(g * zw);
        }
        Ok((g_max, e64))
    });
    let mut max_grad: f64 = 0.0;
    let mut phi_product: f64 = 0.0;
    for r in per {
        let (g, e) = r?;
        max_grad = max_grad.max(g);
        phi_product = phi_product.max(e);
    }
    let cos2 = theta2.map(|t| t.cos().powi(2)).unwrap_or(0.0);
    let hemi = theta2.is_some_and(|t| (t - std::f64::consts::FRAC_PI_2).abs() < tol.angle_tol);
    let (verdict, counterexample) = if !warp.is_warped {
        (Verdict::Neither, false)
    } else if max_grad < tol.grad_tol {
        (Verdict::RiemannianProduct, false)
    } else if hemi {
        (Verdict::QuasiHemiSlant, false)
    } else {
        (Verdict::Neither, true)
    };
    Ok(Dichotomy { phi_product, strengthened: cos2 * max_grad, max_grad_ln_f: max_grad, theta2, verdict, counterexample })
}
