//! First- and second-order geometry of a parametrised submanifold at a point.
//!
//! Everything here lives in flat C^n, so the ambient connection is the plain
//! directional derivative: `D_i D_j chi` is the Hessian of the immersion, its
//! tangential part is the induced connection and its normal part the second
//! fundamental form. Derivatives of the immersion come from exact jets;
//! derivatives of constructed fields (frames, J-images) use a five-point
//! central difference.

use thiserror::Error;

use crate::ambient::{apply_j, AmbientSpace};
use crate::expr::{parse, Ast, EvalError, ParseError};
use crate::jet::Jet2;
use crate::linalg::{gram_schmidt, AmbientVector, LinalgError, Matrix, Subspace};

/// Charts with `lambda_min < CONDITION_FLOOR * lambda_max` are rejected.
pub const CONDITION_FLOOR: f64 = 1e-8;
/// Relative distance from T (or N) tolerated by membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid immersion: {0}")]
    InvalidSpec(String),
    #[error("component {component}: {source}")]
    Parse { component: usize, source: ParseError },
    #[error("expression evaluation failed at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error("non-finite derivatives at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("immersion not regular at {point:?}: Gram eigenvalues in [{smallest:e}, {largest:e}]")]
    RankDeficient { point: Vec<f64>, smallest: f64, largest: f64 },
    #[error("vector is not tangent (relative normal part {0:e})")]
    NotTangent(f64),
    #[error("vector is not normal (relative tangential part {0:e})")]
    NotNormal(f64),
    #[error("point has {got} coordinates, immersion has {expected} parameters")]
    PointDimension { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A parametric immersion chi: R^m -> C^n, one expression per real ambient
/// coordinate in interleaved order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionSpec {
    params: Vec<String>,
    components: Vec<Ast>,
    ambient: AmbientSpace,
}

impl ImmersionSpec {
    pub fn new(params: Vec<String>, components: Vec<Ast>, complex_dim: usize) -> Result<Self, GeometryError> {
        let ambient = AmbientSpace::new(complex_dim);
        if components.len() != ambient.real_dim() {
            return Err(GeometryError::InvalidSpec(format!(
                "expected {} components, got {}",
                ambient.real_dim(),
                components.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if params[..i].contains(p) {
                return Err(GeometryError::InvalidSpec(format!("duplicate parameter `{p}`")));
            }
        }
        for (k, c) in components.iter().enumerate() {
            if let Some(v) = c.free_variables().into_iter().find(|v| !params.contains(v)) {
                return Err(GeometryError::InvalidSpec(format!("component {k} uses undeclared `{v}`")));
            }
        }
        Ok(ImmersionSpec { params, components, ambient })
    }

    /// Parses component strings.
    pub fn parse(params: &[&str], components: &[&str], complex_dim: usize) -> Result<Self, GeometryError> {
        let asts = components
            .iter()
            .enumerate()
            .map(|(component, src)| parse(src).map_err(|source| GeometryError::Parse { component, source }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(params.iter().map(|s| s.to_string()).collect(), asts, complex_dim)
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name)
    }

    pub fn components(&self) -> &[Ast] {
        &self.components
    }

    pub fn ambient(&self) -> AmbientSpace {
        self.ambient
    }

    fn check_point(&self, point: &[f64]) -> Result<(), GeometryError> {
        if point.len() != self.param_count() {
            return Err(GeometryError::PointDimension { expected: self.param_count(), got: point.len() });
        }
        Ok(())
    }

    /// chi(point) without derivatives.
    pub fn position(&self, point: &[f64]) -> Result<AmbientVector, GeometryError> {
        self.check_point(point)?;
        let comps = self
            .components
            .iter()
            .map(|c| {
                c.evaluate_indexed(&self.params, point)
                    .map_err(|source| GeometryError::Eval { point: point.to_vec(), source })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(AmbientVector(comps))
    }

    /// Jets of every component at `point`.
    pub fn jets(&self, point: &[f64]) -> Result<Vec<Jet2>, GeometryError> {
        self.check_point(point)?;
        let seeds = Jet2::seed_all(point);
        self.components
            .iter()
            .map(|c| {
                c.evaluate_indexed(&self.params, &seeds)
                    .map_err(|source| GeometryError::Eval { point: point.to_vec(), source })
            })
            .collect()
    }
}

/// A tangent vector given by its coefficients over the coordinate frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFieldValue {
    pub coefficients: Vec<f64>,
}

impl TangentFieldValue {
    pub fn ambient(&self, chart: &PointChart) -> AmbientVector {
        chart.frame_combination(&self.coefficients)
    }
}

/// Geometry of the immersion at one parameter point.
#[derive(Debug, Clone)]
pub struct PointChart {
    point: Vec<f64>,
    ambient: AmbientSpace,
    tangents: Vec<AmbientVector>,
    hessian: Vec<Vec<AmbientVector>>,
    gram: Matrix,
    tangent_space: Subspace,
    normal_space: Subspace,
}

/// Result of differentiating a normal field along a tangent direction.
#[derive(Debug, Clone)]
pub struct NormalDerivative {
    /// The normal connection applied to the field.
    pub normal: AmbientVector,
    /// Tangential part of the ambient derivative.
    pub tangential: AmbientVector,
    /// `|tangential + A_N X|`, zero when the Weingarten formula holds.
    pub weingarten_residual: f64,
}

/// Computes the chart of `spec` at `point`.
pub fn evaluate_chart(spec: &ImmersionSpec, point: &[f64], rank_tol: f64) -> Result<PointChart, GeometryError> {
    let jets = spec.jets(point)?;
    if !jets.iter().all(Jet2::is_finite) {
        return Err(GeometryError::NonFinite(point.to_vec()));
    }
    let m = spec.param_count();
    let dim = spec.ambient().real_dim();
    let tangents: Vec<AmbientVector> =
        (0..m).map(|i| AmbientVector(jets.iter().map(|j| j.grad_at(i)).collect())).collect();
    let hessian: Vec<Vec<AmbientVector>> = (0..m)
        .map(|i| (0..m).map(|k| AmbientVector(jets.iter().map(|j| j.hess(i, k)).collect())).collect())
        .collect();
    let gram = Matrix::from_fn(m, m, |i, j| tangents[i].dot(&tangents[j]));
    let ev = gram.symmetric_eigenvalues();
    let (smallest, largest) = (ev.first().copied().unwrap_or(0.0), ev.last().copied().unwrap_or(0.0));
    let regular = m == 0 || (largest > 0.0 && smallest >= CONDITION_FLOOR * largest);
    let tangent_space = gram_schmidt(dim, &tangents, rank_tol)?;
    if !regular || tangent_space.dim() < m {
        return Err(GeometryError::RankDeficient { point: point.to_vec(), smallest, largest });
    }
    let normal_space = tangent_space.complement();
    Ok(PointChart {
        point: point.to_vec(),
        ambient: spec.ambient(),
        tangents,
        hessian,
        gram,
        tangent_space,
        normal_space,
    })
}

impl PointChart {
    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn ambient(&self) -> AmbientSpace {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.tangents.len()
    }

    /// Coordinate tangent vector d chi / d u_i.
    pub fn tangent(&self, i: usize) -> &AmbientVector {
        &self.tangents[i]
    }

    pub fn tangents(&self) -> &[AmbientVector] {
        &self.tangents
    }

    /// d^2 chi / d u_i d u_j.
    pub fn hessian(&self, i: usize, j: usize) -> &AmbientVector {
        &self.hessian[i][j]
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn tangent_space(&self) -> &Subspace {
        &self.tangent_space
    }

    pub fn normal_space(&self) -> &Subspace {
        &self.normal_space
    }

    pub fn frame_combination(&self, coeffs: &[f64]) -> AmbientVector {
        AmbientVector::combination(self.ambient.real_dim(), coeffs, &self.tangents)
    }

    /// Frame coefficients of a tangent vector (least squares against the frame).
    pub fn coefficients_of(&self, v: &AmbientVector) -> Result<Vec<f64>, GeometryError> {
        let rhs: Vec<f64> = self.tangents.iter().map(|t| t.dot(v)).collect();
        Ok(self.gram.solve_spd(&rhs)?)
    }

    fn relative_normal_part(&self, v: &AmbientVector) -> Result<f64, GeometryError> {
        let n = v.norm();
        if n == 0.0 {
            return Ok(0.0);
        }
        Ok(self.tangent_space.reject(v)?.norm() / n)
    }

    /// Tangential and normal parts of Jv for a tangent vector v.
    pub fn phi_omega(&self, v: &AmbientVector) -> Result<(AmbientVector, AmbientVector), GeometryError> {
        let off = self.relative_normal_part(v)?;
        if off > MEMBERSHIP_TOL {
            return Err(GeometryError::NotTangent(off));
        }
        Ok(self.split_j(v))
    }

    /// Tangential and normal parts of J applied to a normal vector.
    pub fn bc_decompose(&self, nv: &AmbientVector) -> Result<(AmbientVector, AmbientVector), GeometryError> {
        let n = nv.norm();
        if n > 0.0 {
            let off = self.normal_space.reject(nv)?.norm() / n;
            if off > MEMBERSHIP_TOL {
                return Err(GeometryError::NotNormal(off));
            }
        }
        Ok(self.split_j(nv))
    }

    /// (P_T Jv, Jv - P_T Jv) without membership checks.
    pub fn split_j(&self, v: &AmbientVector) -> (AmbientVector, AmbientVector) {
        let jv = apply_j(v);
        let t = self.tangent_space.project(&jv).expect("dimension checked at construction");
        let n = &jv - &t;
        (t, n)
    }

    pub fn phi(&self, v: &AmbientVector) -> AmbientVector {
        self.split_j(v).0
    }

    pub fn omega(&self, v: &AmbientVector) -> AmbientVector {
        self.split_j(v).1
    }

    pub fn tangential_part(&self, v: &AmbientVector) -> AmbientVector {
        self.tangent_space.project(v).expect("dimension checked at construction")
    }

    pub fn normal_part(&self, v: &AmbientVector) -> AmbientVector {
        self.tangent_space.reject(v).expect("dimension checked at construction")
    }

    /// Ambient derivative of the constant-coefficient field `y` along `x`:
    /// `sum x_i y_j d_i d_j chi`.
    pub fn ambient_derivative(&self, x: &[f64], y: &[f64]) -> AmbientVector {
        let mut out = AmbientVector::zeros(self.ambient.real_dim());
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                if *xi != 0.0 && *yj != 0.0 {
                    out.axpy(xi * yj, &self.hessian[i][j]);
                }
            }
        }
        out
    }

    /// sigma(d_i, d_j).
    pub fn second_fundamental_form(&self, i: usize, j: usize) -> AmbientVector {
        self.normal_part(&self.hessian[i][j])
    }

    /// sigma(X, Y) for frame coefficient vectors.
    pub fn sigma(&self, x: &[f64], y: &[f64]) -> AmbientVector {
        self.normal_part(&self.ambient_derivative(x, y))
    }

    /// sigma(U, V) for ambient tangent vectors.
    pub fn sigma_vectors(&self, u: &AmbientVector, v: &AmbientVector) -> Result<AmbientVector, GeometryError> {
        let x = self.coefficients_of(u)?;
        let y = self.coefficients_of(v)?;
        Ok(self.sigma(&x, &y))
    }

    /// `g(A_N U, V) = <sigma(U, V), N>`.
    pub fn shape_form(&self, normal: &AmbientVector, u: &AmbientVector, v: &AmbientVector) -> Result<f64, GeometryError> {
        Ok(self.sigma_vectors(u, v)?.dot(normal))
    }

    /// Shape operator A_N over the coordinate frame: column i holds the frame
    /// coefficients of `A_N d_i`.
    pub fn shape_operator(&self, normal: &AmbientVector) -> Result<Matrix, GeometryError> {
        let off = if normal.norm() > 0.0 {
            self.normal_space.reject(normal)?.norm() / normal.norm()
        } else {
            0.0
        };
        if off > MEMBERSHIP_TOL {
            return Err(GeometryError::NotNormal(off));
        }
        let m = self.dim();
        let s = Matrix::from_fn(m, m, |i, j| self.second_fundamental_form(i, j).dot(normal));
        let mut a = Matrix::zeros(m, m);
        for i in 0..m {
            let col = self.gram.solve_spd(&s.column(i))?;
            for (k, c) in col.into_iter().enumerate() {
                a[(k, i)] = c;
            }
        }
        Ok(a)
    }

    /// Induced Levi-Civita connection nabla_{d_i} d_j in frame coefficients.
    pub fn induced_connection(&self, i: usize, j: usize) -> Result<TangentFieldValue, GeometryError> {
        let rhs: Vec<f64> = self.tangents.iter().map(|t| t.dot(&self.hessian[i][j])).collect();
        Ok(TangentFieldValue { coefficients: self.gram.solve_spd(&rhs)? })
    }

    /// nabla_X Y for constant-coefficient fields, as an ambient tangent vector.
    pub fn connection(&self, x: &[f64], y: &[f64]) -> AmbientVector {
        self.tangential_part(&self.ambient_derivative(x, y))
    }
}

/// Directional derivative of a vector field along the parameter direction
/// `direction`, by the Richardson-extrapolated five-point stencil
/// `(-f(+2h) + 8 f(+h) - 8 f(-h) + f(-2h)) / 12h`.
pub fn field_derivative<F>(field: F, point: &[f64], direction: &[f64], step: f64) -> Result<AmbientVector, GeometryError>
where
    F: Fn(&[f64]) -> Result<AmbientVector, GeometryError>,
{
    let at = |t: f64| -> Result<AmbientVector, GeometryError> {
        let p: Vec<f64> = point.iter().zip(direction).map(|(a, d)| a + t * d).collect();
        field(&p)
    };
    let p2 = at(2.0 * step)?;
    let p1 = at(step)?;
    let m1 = at(-step)?;
    let m2 = at(-2.0 * step)?;
    let mut out = p1.scaled(8.0);
    out.axpy(-8.0, &m1);
    out.axpy(-1.0, &p2);
    out.axpy(1.0, &m2);
    Ok(out.scaled(1.0 / (12.0 * step)))
}

/// Coordinate direction `e_i` in parameter space.
pub fn coordinate_direction(m: usize, i: usize) -> Vec<f64> {
    let mut d = vec![0.0; m];
    d[i] = 1.0;
    d
}

/// Normal connection of a normal field along the tangent direction with
/// frame coefficients `direction`, plus the Weingarten consistency residual.
pub fn normal_connection<F>(
    chart: &PointChart,
    field: F,
    direction: &[f64],
    step: f64,
) -> Result<NormalDerivative, GeometryError>
where
    F: Fn(&[f64]) -> Result<AmbientVector, GeometryError>,
{
    let n_here = field(chart.point())?;
    let d = field_derivative(&field, chart.point(), direction, step)?;
    let normal = chart.normal_part(&d);
    let tangential = chart.tangential_part(&d);
    let a = chart.shape_operator(&chart.normal_part(&n_here))?;
    let a_x = chart.frame_combination(&a.mul_vec(direction));
    let weingarten_residual = (&tangential + &a_x).norm();
    Ok(NormalDerivative { normal, tangential, weingarten_residual })
}

/// A field on parameter space computed from the chart at each point.
pub fn chart_field<'a, F>(
    spec: &'a ImmersionSpec,
    rank_tol: f64,
    f: F,
) -> impl Fn(&[f64]) -> Result<AmbientVector, GeometryError> + 'a
where
    F: Fn(&PointChart) -> Result<AmbientVector, GeometryError> + 'a,
{
    move |p: &[f64]| f(&evaluate_chart(spec, p, rank_tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_RANK_TOL;

    fn polar() -> ImmersionSpec {
        ImmersionSpec::parse(
            &["u", "v", "w", "s", "t"],
            &["v*cos(u)", "w*cos(u)", "v*sin(u)", "w*sin(u)", "-v+w", "v+w", "0", "0", "s", "t"],
            5,
        )
        .unwrap()
    }

    fn chart(spec: &ImmersionSpec, p: &[f64]) -> PointChart {
        evaluate_chart(spec, p, DEFAULT_RANK_TOL).unwrap()
    }

    #[test]
    fn spec_validation() {
        let err = ImmersionSpec::parse(&["u"], &["u", "0", "0"], 2).unwrap_err();
        assert!(err.to_string().contains("expected 4 components"));
        let err = ImmersionSpec::parse(&["u"], &["u", "q", "0", "0"], 2).unwrap_err();
        assert!(err.to_string().contains("`q`"));
        assert!(ImmersionSpec::parse(&["u", "u"], &["u", "0"], 1).is_err());
    }

    #[test]
    fn polar_metric_at_reference_point() {
        let spec = polar();
        let c = chart(&spec, &[0.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(c.gram()[(0, 0)], 2.0);
        assert_eq!(c.gram()[(1, 1)], 3.0);
        assert_eq!(c.gram()[(0, 1)], 0.0);
        assert_eq!(c.tangent_space().dim(), 5);
        assert_eq!(c.normal_space().dim(), 5);
        for t in c.tangent_space().basis() {
            for n in c.normal_space().basis() {
                assert!(t.dot(n).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_singular_points() {
        let spec = polar();
        // v = w = 0 collapses d/du
        assert!(matches!(
            evaluate_chart(&spec, &[0.3, 0.0, 0.0, 0.0, 0.0], DEFAULT_RANK_TOL),
            Err(GeometryError::RankDeficient { .. })
        ));
        assert!(matches!(
            evaluate_chart(&spec, &[0.3, 1.0], DEFAULT_RANK_TOL),
            Err(GeometryError::PointDimension { .. })
        ));
    }

    #[test]
    fn phi_omega_on_planes() {
        let hol = ImmersionSpec::parse(&["u", "v"], &["u", "v", "0", "0"], 2).unwrap();
        let c = chart(&hol, &[0.2, 0.4]);
        let (_, w) = c.phi_omega(c.tangent(0)).unwrap();
        assert_eq!(w.norm(), 0.0);
        let real = ImmersionSpec::parse(&["u", "v"], &["u", "0", "v", "0"], 2).unwrap();
        let c = chart(&real, &[0.2, 0.4]);
        let (p, _) = c.phi_omega(c.tangent(1)).unwrap();
        assert_eq!(p.norm(), 0.0);
        assert!(matches!(c.phi_omega(&AmbientVector::basis(4, 1)), Err(GeometryError::NotTangent(_))));
    }

    #[test]
    fn polar_phi_ratio() {
        let c = chart(&polar(), &[0.3, 1.0, 1.0, 0.0, 0.0]);
        let v2 = c.tangent(1);
        let (phi, omega) = c.phi_omega(v2).unwrap();
        let jv = apply_j(v2);
        assert!((phi.norm() / jv.norm() - 1.0 / 3.0).abs() < 1e-14);
        assert!((&(&phi + &omega) - &jv).max_abs() == 0.0);
    }

    #[test]
    fn bc_of_omega_image() {
        let c = chart(&polar(), &[0.3, 1.0, 1.0, 0.0, 0.0]);
        let v2 = c.tangent(1);
        let w = c.omega(v2);
        let (b, cc) = c.bc_decompose(&w).unwrap();
        // <B w, v2> = -|w|^2 = -(8/9) * 3
        assert!((b.dot(v2) + 8.0 / 3.0).abs() < 1e-13);
        let back = apply_j(&(&b + &cc));
        assert!((&back + &w).max_abs() < 1e-15);
        assert!(matches!(c.bc_decompose(v2), Err(GeometryError::NotNormal(_))));
    }

    #[test]
    fn second_fundamental_form_by_hand() {
        let c = chart(&polar(), &[0.0, 1.0, 1.0, 0.0, 0.0]);
        // sigma(u,u) = chi_uu + v2/3 + v3/3 at (0,1,1,0,0)
        let mut expected = c.hessian(0, 0).clone();
        expected.axpy(1.0 / 3.0, c.tangent(1));
        expected.axpy(1.0 / 3.0, c.tangent(2));
        assert!((&c.second_fundamental_form(0, 0) - &expected).max_abs() < 1e-14);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(c.second_fundamental_form(i, j), c.second_fundamental_form(j, i));
            }
        }
        let flat = ImmersionSpec::parse(&["u", "v"], &["u+v", "2*v", "u", "0"], 2).unwrap();
        let c = chart(&flat, &[1.0, 2.0]);
        assert_eq!(c.second_fundamental_form(0, 1).norm(), 0.0);
    }

    #[test]
    fn induced_connection_matches_warping() {
        let c = chart(&polar(), &[0.4, 1.5, 0.5, 0.0, 0.0]);
        let nabla = c.induced_connection(1, 0).unwrap();
        let expected = 1.5 / (1.5f64.powi(2) + 0.25);
        assert!((nabla.coefficients[0] - expected).abs() < 1e-14);
        assert!(nabla.coefficients[1..].iter().all(|x| x.abs() < 1e-14));
        assert_eq!(nabla, c.induced_connection(0, 1).unwrap());
    }

    #[test]
    fn shape_operator_is_metric_dual_of_sigma() {
        let c = chart(&polar(), &[0.7, 1.2, 0.8, 0.1, 0.2]);
        let sigma_uu = c.second_fundamental_form(0, 0);
        let n = sigma_uu.normalized().unwrap();
        let a = c.shape_operator(&n).unwrap();
        let g = c.gram();
        for i in 0..5 {
            for j in 0..5 {
                let lhs = c.second_fundamental_form(i, j).dot(&n);
                let ga: f64 = (0..5).map(|k| a[(k, i)] * g[(k, j)]).sum();
                assert!((lhs - ga).abs() < 1e-12);
                // self-adjoint with respect to g
                let ga_t: f64 = (0..5).map(|k| a[(k, j)] * g[(k, i)]).sum();
                assert!((ga - ga_t).abs() < 1e-12);
            }
        }
        assert!(c.shape_operator(c.tangent(0)).is_err());
    }

    #[test]
    fn field_derivative_cross_checks_jets() {
        let spec = polar();
        let p = [0.3, 1.1, 0.9, 0.0, 0.0];
        let du = chart_field(&spec, DEFAULT_RANK_TOL, |c| Ok(c.tangent(0).clone()));
        let d = field_derivative(&du, &p, &coordinate_direction(5, 0), DEFAULT_FD_STEP).unwrap();
        let c = chart(&spec, &p);
        assert!((&d - c.hessian(0, 0)).max_abs() < 1e-8);
        let constant = |_: &[f64]| Ok(AmbientVector(vec![1.0; 10]));
        assert!(field_derivative(constant, &p, &coordinate_direction(5, 2), 1e-4).unwrap().max_abs() < 1e-10);
        let linear = |q: &[f64]| Ok(AmbientVector(vec![3.0 * q[0] - q[1]; 2]));
        let d = field_derivative(linear, &p, &coordinate_direction(5, 0), 1e-4).unwrap();
        assert!((d.0[0] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn weingarten_for_omega_of_du() {
        let spec = polar();
        let field = chart_field(&spec, DEFAULT_RANK_TOL, |c| Ok(c.omega(c.tangent(0))));
        for p in [[0.3, 1.0, 1.0, 0.0, 0.0], [-0.5, 0.7, 1.9, 0.3, -0.2]] {
            let c = chart(&spec, &p);
            for i in 0..5 {
                let nd = normal_connection(&c, &field, &coordinate_direction(5, i), DEFAULT_FD_STEP).unwrap();
                assert!(nd.weingarten_residual < 1e-6, "{i}: {}", nd.weingarten_residual);
            }
        }
        let plane = ImmersionSpec::parse(&["u", "v"], &["u", "0", "v", "0"], 2).unwrap();
        let c = chart(&plane, &[0.1, 0.2]);
        let constant = |_: &[f64]| Ok(AmbientVector::basis(4, 1));
        let nd = normal_connection(&c, constant, &[1.0, 0.0], DEFAULT_FD_STEP).unwrap();
        assert!(nd.normal.norm() < 1e-12 && nd.weingarten_residual < 1e-12);
    }
}
