//! Slant angles, the quasi bi-slant axioms and the induced splittings of the
//! tangent and normal spaces.
//!
//! The tangent space is split into three blocks `D` (invariant), `D1` and
//! `D2` (slant), each spanned by a group of coordinate vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ambient::apply_j;
use crate::chart::{evaluate_chart, GeometryError, ImmersionSpec, PointChart, MEMBERSHIP_TOL};
use crate::linalg::{angle_vector_subspace, gram_schmidt, subspace_intersection, AmbientVector, LinalgError, Subspace};
use crate::par::{map_indexed, Execution};
use crate::sampling::{random_coefficients, rng_for};
use crate::tolerances::Tolerances;

const PROBE_STREAM: u64 = 0x5A;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlantError {
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("probe is the zero vector")]
    ZeroProbe,
    #[error("probe does not lie in block {0}")]
    ProbeOutsideBlock(Block),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    D,
    D1,
    D2,
}

impl std::fmt::Display for Block {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Block::D => "D",
            Block::D1 => "D1",
            Block::D2 => "D2",
        })
    }
}

/// Parameter indices whose coordinate vectors span D, D1 and D2.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionAssignment {
    pub invariant: Vec<usize>,
    pub slant1: Vec<usize>,
    pub slant2: Vec<usize>,
}

impl DistributionAssignment {
    pub fn new(invariant: Vec<usize>, slant1: Vec<usize>, slant2: Vec<usize>) -> Self {
        DistributionAssignment { invariant, slant1, slant2 }
    }

    pub fn block(&self, b: Block) -> &[usize] {
        match b {
            Block::D => &self.invariant,
            Block::D1 => &self.slant1,
            Block::D2 => &self.slant2,
        }
    }

    pub fn validate(&self, param_count: usize) -> Result<(), SlantError> {
        let all: Vec<usize> = self.invariant.iter().chain(&self.slant1).chain(&self.slant2).copied().collect();
        for (k, i) in all.iter().enumerate() {
            if *i >= param_count {
                return Err(SlantError::InvalidAssignment(format!("index {i} out of range")));
            }
            if all[..k].contains(i) {
                return Err(SlantError::InvalidAssignment(format!("index {i} assigned twice")));
            }
        }
        Ok(())
    }

    /// Whether the three blocks together use every parameter.
    pub fn covers(&self, param_count: usize) -> bool {
        self.invariant.len() + self.slant1.len() + self.slant2.len() == param_count
    }
}

/// Orthonormal basis of the span of the coordinate vectors in `indices`.
pub fn block_span(chart: &PointChart, indices: &[usize], rank_tol: f64) -> Result<Subspace, SlantError> {
    let vs: Vec<AmbientVector> = indices.iter().map(|&i| chart.tangent(i).clone()).collect();
    Ok(gram_schmidt(chart.ambient().real_dim(), &vs, rank_tol)?)
}

/// The three block spans at a chart.
#[derive(Debug, Clone)]
pub struct BlockSpans {
    pub d: Subspace,
    pub d1: Subspace,
    pub d2: Subspace,
}

impl BlockSpans {
    pub fn at(chart: &PointChart, a: &DistributionAssignment, rank_tol: f64) -> Result<Self, SlantError> {
        Ok(BlockSpans {
            d: block_span(chart, &a.invariant, rank_tol)?,
            d1: block_span(chart, &a.slant1, rank_tol)?,
            d2: block_span(chart, &a.slant2, rank_tol)?,
        })
    }

    pub fn get(&self, b: Block) -> &Subspace {
        match b {
            Block::D => &self.d,
            Block::D1 => &self.d1,
            Block::D2 => &self.d2,
        }
    }
}

/// Angle between J(probe) and the span of the chosen block.
pub fn distribution_slant_angle(
    chart: &PointChart,
    assignment: &DistributionAssignment,
    which: Block,
    probe: &AmbientVector,
    rank_tol: f64,
) -> Result<f64, SlantError> {
    let n = probe.norm();
    if n == 0.0 {
        return Err(SlantError::ZeroProbe);
    }
    let span = block_span(chart, assignment.block(which), rank_tol)?;
    if span.reject(probe)?.norm() / n > MEMBERSHIP_TOL {
        return Err(SlantError::ProbeOutsideBlock(which));
    }
    Ok(angle_vector_subspace(&apply_j(probe), &span)?)
}

/// Angle between Jv and the whole tangent space.
pub fn wirtinger_angle(chart: &PointChart, v: &AmbientVector) -> Result<f64, SlantError> {
    if v.norm() == 0.0 {
        return Err(SlantError::ZeroProbe);
    }
    Ok(angle_vector_subspace(&apply_j(v), chart.tangent_space())?)
}

/// The maximal J-invariant subspace T ∩ J(T).
pub fn auto_invariant_block(chart: &PointChart, tol: f64) -> Result<Subspace, SlantError> {
    let t = chart.tangent_space();
    let jt: Vec<AmbientVector> = t.basis().iter().map(apply_j).collect();
    let jt = gram_schmidt(t.ambient_dim(), &jt, crate::linalg::DEFAULT_RANK_TOL)?;
    Ok(subspace_intersection(t, &jt, tol)?)
}

/// Orthogonal projections of a tangent vector onto D, D1 and D2.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionTriple {
    pub p: AmbientVector,
    pub q: AmbientVector,
    pub r: AmbientVector,
    /// `|v - P v - Q v - R v|`; nonzero when the blocks are not orthogonal
    /// or do not cover the tangent space.
    pub residual: f64,
}

pub fn project_pqr(
    chart: &PointChart,
    assignment: &DistributionAssignment,
    v: &AmbientVector,
    rank_tol: f64,
) -> Result<ProjectionTriple, SlantError> {
    let spans = BlockSpans::at(chart, assignment, rank_tol)?;
    let p = spans.d.project(v)?;
    let q = spans.d1.project(v)?;
    let r = spans.d2.project(v)?;
    let mut rest = v.clone();
    rest.axpy(-1.0, &p);
    rest.axpy(-1.0, &q);
    rest.axpy(-1.0, &r);
    Ok(ProjectionTriple { p, q, r, residual: rest.norm() })
}

/// Splitting of the normal space into omega(D1), omega(D2) and the rest.
#[derive(Debug, Clone)]
pub struct NormalDecomposition {
    pub omega_d1: Subspace,
    pub omega_d2: Subspace,
    pub mu: Subspace,
    /// `max |J b - P_mu J b|` over the basis of mu.
    pub mu_invariance_residual: f64,
    /// Largest cosine between omega(D1) and omega(D2).
    pub omega_overlap: f64,
}

pub fn normal_decomposition(
    chart: &PointChart,
    assignment: &DistributionAssignment,
    rank_tol: f64,
) -> Result<NormalDecomposition, SlantError> {
    let dim = chart.ambient().real_dim();
    let spans = BlockSpans::at(chart, assignment, rank_tol)?;
    let images = |s: &Subspace| -> Vec<AmbientVector> { s.basis().iter().map(|b| chart.omega(b)).collect() };
    let w1 = images(&spans.d1);
    let w2 = images(&spans.d2);
    let omega_d1 = gram_schmidt(dim, &w1, rank_tol)?;
    let omega_d2 = gram_schmidt(dim, &w2, rank_tol)?;
    let both: Vec<AmbientVector> = w1.into_iter().chain(w2).collect();
    let omega_sum = gram_schmidt(dim, &both, rank_tol)?;
    // Candidates come from unit normals, so the threshold is absolute.
    let mut mu_candidates = Vec::new();
    for n in chart.normal_space().basis() {
        let r = omega_sum.reject(n)?;
        if r.norm() > 1e-6 {
            mu_candidates.push(r);
        }
    }
    let mu = gram_schmidt(dim, &mu_candidates, 1e-6)?;
    let mut residual: f64 = 0.0;
    for b in mu.basis() {
        let jb = apply_j(b);
        residual = residual.max(mu.reject(&jb)?.norm());
    }
    let mut overlap: f64 = 0.0;
    for a in omega_d1.basis() {
        for b in omega_d2.basis() {
            overlap = overlap.max(a.dot(b).abs());
        }
    }
    Ok(NormalDecomposition { omega_d1, omega_d2, mu, mu_invariance_residual: residual, omega_overlap: overlap })
}

/// Residuals of the slant lemmas on one block at one chart.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaResiduals {
    /// `max |phi_B^2 X + cos^2(theta) X|`
    pub phi_squared: f64,
    /// `max |<phi_B X, phi_B Y> - cos^2(theta) <X, Y>|`
    pub phi_inner: f64,
    /// `max |<omega X, omega Y> - sin^2(theta) <X, Y>|`
    pub omega_inner: f64,
    pub pairs: usize,
}

impl LemmaResiduals {
    pub fn max(&self) -> f64 {
        self.phi_squared.max(self.phi_inner).max(self.omega_inner)
    }

    pub fn merge(self, other: LemmaResiduals) -> LemmaResiduals {
        LemmaResiduals {
            phi_squared: self.phi_squared.max(other.phi_squared),
            phi_inner: self.phi_inner.max(other.phi_inner),
            omega_inner: self.omega_inner.max(other.omega_inner),
            pairs: self.pairs + other.pairs,
        }
    }
}

/// Evaluates the three slant-lemma identities on unit `probes` of `span`,
/// where `phi_B` is the tangential part of J projected onto the block.
pub fn lemma_residuals(chart: &PointChart, span: &Subspace, theta: f64, probes: &[AmbientVector]) -> LemmaResiduals {
    let c2 = theta.cos().powi(2);
    let s2 = theta.sin().powi(2);
    let phi_b = |v: &AmbientVector| span.project(&chart.phi(v)).expect("same ambient");
    let mut out = LemmaResiduals::default();
    let phis: Vec<AmbientVector> = probes.iter().map(phi_b).collect();
    let omegas: Vec<AmbientVector> = probes.iter().map(|p| chart.omega(p)).collect();
    for (k, x) in probes.iter().enumerate() {
        let mut r = phi_b(&phis[k]);
        r.axpy(c2, x);
        out.phi_squared = out.phi_squared.max(r.norm());
        for (l, y) in probes.iter().enumerate() {
            let g = x.dot(y);
            out.phi_inner = out.phi_inner.max((phis[k].dot(&phis[l]) - c2 * g).abs());
            out.omega_inner = out.omega_inner.max((omegas[k].dot(&omegas[l]) - s2 * g).abs());
            out.pairs += 1;
        }
    }
    out
}

/// Random unit vectors in the span of the given coordinate vectors.
pub fn block_probes(chart: &PointChart, indices: &[usize], count: usize, seed: u64, stream: u64, index: u64) -> Vec<AmbientVector> {
    if indices.is_empty() {
        return Vec::new();
    }
    let mut rng = rng_for(seed, PROBE_STREAM ^ (stream << 8), index);
    let frame: Vec<AmbientVector> = indices.iter().map(|&i| chart.tangent(i).clone()).collect();
    (0..count)
        .map(|_| {
            let c = random_coefficients(&mut rng, indices.len());
            let v = AmbientVector::combination(chart.ambient().real_dim(), &c, &frame);
            v.scaled(1.0 / v.norm())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlantClass {
    Invariant,
    AntiInvariant,
    ProperSlant,
    NonConstant,
    Empty,
}

/// Angle statistics of one block over all points and probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAngles {
    pub block: Block,
    pub params: Vec<String>,
    pub samples: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub max_deviation: f64,
    pub class: SlantClass,
}

impl BlockAngles {
    fn from_samples(block: Block, params: Vec<String>, angles: &[f64], angle_tol: f64) -> Self {
        if angles.is_empty() {
            return BlockAngles { block, params, samples: 0, mean: None, min: None, max: None, max_deviation: 0.0, class: SlantClass::Empty };
        }
        let mean = angles.iter().sum::<f64>() / angles.len() as f64;
        let min = angles.iter().copied().fold(f64::INFINITY, f64::min);
        let max = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dev = angles.iter().fold(0.0f64, |d, a| d.max((a - mean).abs()));
        let class = if dev >= angle_tol {
            SlantClass::NonConstant
        } else if mean < angle_tol {
            SlantClass::Invariant
        } else if (mean - std::f64::consts::FRAC_PI_2).abs() < angle_tol {
            SlantClass::AntiInvariant
        } else {
            SlantClass::ProperSlant
        };
        BlockAngles { block, params, samples: angles.len(), mean: Some(mean), min: Some(min), max: Some(max), max_deviation: dev, class }
    }

    /// Whether the angle is constant (conditions d and e).
    pub fn is_constant(&self) -> bool {
        self.class != SlantClass::NonConstant
    }
}

/// Largest Gram entry between two coordinate vectors from different blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTerm {
    pub a: String,
    pub b: String,
    /// Value at the first sample point.
    pub value: f64,
    /// Largest |g_ab| over the sample points.
    pub max_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionFlags {
    pub a: bool,
    pub b: bool,
    pub c: bool,
    pub d: bool,
    pub e: bool,
}

impl ConditionFlags {
    pub fn all(&self) -> bool {
        self.a && self.b && self.c && self.d && self.e
    }

    /// Names of the failing conditions.
    pub fn failing(&self) -> Vec<&'static str> {
        [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d), ("e", self.e)]
            .into_iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| n)
            .collect()
    }
}

/// Outcome of checking the quasi bi-slant axioms over a set of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlantReport {
    pub points: usize,
    pub seed: u64,
    pub probes_per_block: usize,
    /// Blocks use every parameter.
    pub covers_tangent: bool,
    /// (a) largest cosine between vectors of different blocks.
    pub orthogonality_residual: f64,
    pub cross_terms: Vec<CrossTerm>,
    /// (b) largest |omega X| / |X| over invariant-block probes.
    pub invariant_omega_residual: f64,
    /// (b) largest angle between JX and D.
    pub invariant_angle_residual: f64,
    /// Dimensions of T ∩ J(T) seen across the points (min, max).
    pub auto_invariant_dim: (usize, usize),
    /// (c) `max |<J d1, d2>|` over orthonormal block bases.
    pub condition_c: f64,
    /// The mirrored quantity `max |<J d2, d1>|`.
    pub condition_c_mirrored: f64,
    pub angles: Vec<BlockAngles>,
    pub conditions: ConditionFlags,
}

impl SlantReport {
    pub fn block(&self, b: Block) -> &BlockAngles {
        self.angles.iter().find(|a| a.block == b).expect("all three blocks are reported")
    }

    pub fn theta(&self, b: Block) -> Option<f64> {
        self.block(b).mean
    }
}

struct PointSlant {
    cross: Vec<(usize, usize, f64)>,
    orth: f64,
    omega_res: f64,
    angle_res: f64,
    auto_dim: usize,
    c: f64,
    c_mirror: f64,
    angles: [Vec<f64>; 3],
}

fn point_slant(chart: &PointChart, a: &DistributionAssignment, tol: &Tolerances, seed: u64, index: u64) -> Result<PointSlant, SlantError> {
    let spans = BlockSpans::at(chart, a, tol.rank_tol)?;
    let blocks = [Block::D, Block::D1, Block::D2];
    let g = chart.gram();

    let mut cross = Vec::new();
    let mut orth: f64 = 0.0;
    for (x, bx) in blocks.iter().enumerate() {
        for by in &blocks[x + 1..] {
            for &i in a.block(*bx) {
                for &j in a.block(*by) {
                    cross.push((i.min(j), i.max(j), g[(i, j)]));
                }
            }
            for u in spans.get(*bx).basis() {
                for v in spans.get(*by).basis() {
                    orth = orth.max(u.dot(v).abs());
                }
            }
        }
    }

    let mut omega_res: f64 = 0.0;
    let mut angle_res: f64 = 0.0;
    let d_probes = block_probes(chart, &a.invariant, tol.probes_per_block, seed, 0, index);
    for p in spans.d.basis().iter().chain(&d_probes) {
        omega_res = omega_res.max(chart.omega(p).norm());
        angle_res = angle_res.max(angle_vector_subspace(&apply_j(p), &spans.d)?);
    }

    let auto_dim = auto_invariant_block(chart, tol.intersection_tol)?.dim();

    let mut c: f64 = 0.0;
    let mut c_mirror: f64 = 0.0;
    for u in spans.d1.basis() {
        for v in spans.d2.basis() {
            c = c.max(apply_j(u).dot(v).abs());
            c_mirror = c_mirror.max(apply_j(v).dot(u).abs());
        }
    }

    let mut angles: [Vec<f64>; 3] = Default::default();
    for (k, b) in [Block::D1, Block::D2].into_iter().enumerate() {
        let probes = block_probes(chart, a.block(b), tol.probes_per_block, seed, 1 + k as u64, index);
        angles[k + 1] = probes
            .iter()
            .map(|p| angle_vector_subspace(&apply_j(p), spans.get(b)))
            .collect::<Result<_, _>>()?;
    }
    angles[0] = d_probes
        .iter()
        .map(|p| angle_vector_subspace(&apply_j(p), &spans.d))
        .collect::<Result<_, _>>()?;

    Ok(PointSlant { cross, orth, omega_res, angle_res, auto_dim, c, c_mirror, angles })
}

/// Checks conditions (a)-(e) of the quasi bi-slant definition at every
/// sample point. Probes are drawn from `seed`, so the report is reproducible.
pub fn verify_quasi_bi_slant(
    spec: &ImmersionSpec,
    assignment: &DistributionAssignment,
    points: &[Vec<f64>],
    tol: &Tolerances,
    seed: u64,
    exec: Execution,
) -> Result<SlantReport, SlantError> {
    let m = spec.param_count();
    assignment.validate(m)?;
    let per_point = map_indexed(exec, points, |i, p| -> Result<PointSlant, SlantError> {
        let chart = evaluate_chart(spec, p, tol.rank_tol)?;
        point_slant(&chart, assignment, tol, seed, i as u64)
    });
    let per_point: Vec<PointSlant> = per_point.into_iter().collect::<Result<_, _>>()?;

    let mut orth: f64 = 0.0;
    let mut omega_res: f64 = 0.0;
    let mut angle_res: f64 = 0.0;
    let mut c: f64 = 0.0;
    let mut c_mirror: f64 = 0.0;
    let mut auto_dim = (usize::MAX, 0);
    let mut angles: [Vec<f64>; 3] = Default::default();
    let mut cross_terms: Vec<CrossTerm> = Vec::new();
    for (k, ps) in per_point.iter().enumerate() {
        orth = orth.max(ps.orth);
        omega_res = omega_res.max(ps.omega_res);
        angle_res = angle_res.max(ps.angle_res);
        c = c.max(ps.c);
        c_mirror = c_mirror.max(ps.c_mirror);
        auto_dim = (auto_dim.0.min(ps.auto_dim), auto_dim.1.max(ps.auto_dim));
        for (all, here) in angles.iter_mut().zip(&ps.angles) {
            all.extend_from_slice(here);
        }
        for (idx, &(i, j, v)) in ps.cross.iter().enumerate() {
            if k == 0 {
                cross_terms.push(CrossTerm { a: spec.params()[i].clone(), b: spec.params()[j].clone(), value: v, max_abs: v.abs() });
            } else {
                cross_terms[idx].max_abs = cross_terms[idx].max_abs.max(v.abs());
            }
        }
    }
    if per_point.is_empty() {
        auto_dim = (0, 0);
    }

    let names = |b: Block| assignment.block(b).iter().map(|&i| spec.params()[i].clone()).collect::<Vec<_>>();
    let block_angles: Vec<BlockAngles> = [Block::D, Block::D1, Block::D2]
        .into_iter()
        .enumerate()
        .map(|(k, b)| BlockAngles::from_samples(b, names(b), &angles[k], tol.angle_tol))
        .collect();

    let covers = assignment.covers(m);
    let conditions = ConditionFlags {
        a: covers && orth < tol.orthogonality_tol,
        b: angle_res < tol.angle_tol,
        c: c < tol.orthogonality_tol,
        d: block_angles[1].is_constant(),
        e: block_angles[2].is_constant(),
    };
    Ok(SlantReport {
        points: points.len(),
        seed,
        probes_per_block: tol.probes_per_block,
        covers_tangent: covers,
        orthogonality_residual: orth,
        cross_terms,
        invariant_omega_residual: omega_res,
        invariant_angle_residual: angle_res,
        auto_invariant_dim: auto_dim,
        condition_c: c,
        condition_c_mirrored: c_mirror,
        angles: block_angles,
        conditions,
    })
}
