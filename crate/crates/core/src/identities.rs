//! Both sides of the long structure identities, evaluated pointwise on
//! constant-coefficient combinations of coordinate fields.
//!
//! Coordinate fields commute, so every Lie bracket on the left-hand sides
//! vanishes. Derivatives of non-constant fields such as `QY` or `omega Z` are
//! taken by a five-point stencil in parameter space; everything else comes
//! straight from the jets.

use serde::{Deserialize, Serialize};

use crate::chart::{evaluate_chart, ImmersionSpec, PointChart};
use crate::linalg::AmbientVector;
use crate::par::{map_indexed, Execution};
use crate::slant::{BlockSpans, DistributionAssignment, SlantError};
use crate::tolerances::Tolerances;

/// A constant-coefficient combination of coordinate fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub label: String,
    pub coefficients: Vec<f64>,
}

impl Field {
    pub fn coordinate(spec: &ImmersionSpec, i: usize) -> Field {
        let mut coefficients = vec![0.0; spec.param_count()];
        coefficients[i] = 1.0;
        Field { label: format!("d{}", spec.params()[i]), coefficients }
    }

    pub fn zero(m: usize) -> Field {
        Field { label: "0".into(), coefficients: vec![0.0; m] }
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field { label: format!("{c}*{}", self.label), coefficients: self.coefficients.iter().map(|x| c * x).collect() }
    }

    /// Coordinate fields for every index in `indices`.
    pub fn all(spec: &ImmersionSpec, indices: &[usize]) -> Vec<Field> {
        indices.iter().map(|&i| Field::coordinate(spec, i)).collect()
    }
}

/// Whether a residual involves finite differences or only jets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Jet,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub identity: String,
    pub point: Vec<f64>,
    /// Role name and field label, in argument order.
    pub arguments: Vec<(String, String)>,
    pub left: f64,
    pub right: f64,
    pub residual: f64,
    /// Largest magnitude among the left side and the individual right-side terms.
    pub dominant: f64,
    pub regime: Regime,
}

impl IdentityResidual {
    fn new(identity: &str, point: &[f64], arguments: Vec<(&str, &Field)>, left: f64, terms: &[f64], regime: Regime) -> Self {
        let right: f64 = terms.iter().sum();
        let dominant = terms.iter().fold(left.abs(), |d, t| d.max(t.abs()));
        IdentityResidual {
            identity: identity.to_string(),
            point: point.to_vec(),
            arguments: arguments.into_iter().map(|(r, f)| (r.to_string(), f.label.clone())).collect(),
            left,
            right,
            residual: (left - right).abs(),
            dominant,
            regime,
        }
    }
}

/// Largest residual in a list, zero when empty.
pub fn worst(residuals: &[IdentityResidual]) -> f64 {
    residuals.iter().fold(0.0, |w, r| w.max(r.residual))
}

/// Shared inputs of the identity checks.
#[derive(Debug, Clone)]
pub struct IdentityContext<'a> {
    pub spec: &'a ImmersionSpec,
    pub assignment: &'a DistributionAssignment,
    pub theta1: f64,
    pub theta2: f64,
    pub tol: Tolerances,
}

struct Site {
    chart: PointChart,
    spans: BlockSpans,
}

impl Site {
    fn new(ctx: &IdentityContext, p: &[f64]) -> Result<Site, SlantError> {
        let chart = evaluate_chart(ctx.spec, p, ctx.tol.rank_tol)?;
        let spans = BlockSpans::at(&chart, ctx.assignment, ctx.tol.rank_tol)?;
        Ok(Site { chart, spans })
    }

    fn vector(&self, f: &Field) -> AmbientVector {
        self.chart.frame_combination(&f.coefficients)
    }

    fn q(&self, f: &Field) -> AmbientVector {
        self.spans.d1.project(&self.vector(f)).expect("same ambient")
    }

    fn r(&self, f: &Field) -> AmbientVector {
        self.spans.d2.project(&self.vector(f)).expect("same ambient")
    }

    fn phi(&self, v: &AmbientVector) -> AmbientVector {
        self.chart.phi(v)
    }

    fn omega(&self, v: &AmbientVector) -> AmbientVector {
        self.chart.omega(v)
    }

    /// `g(A_N U, V)`
    fn a(&self, n: &AmbientVector, u: &AmbientVector, v: &AmbientVector) -> Result<f64, SlantError> {
        Ok(self.chart.shape_form(n, u, v)?)
    }
}

/// Sites at `p + t h d` for t = 2, 1, -1, -2.
struct Stencil {
    sites: Vec<Site>,
    step: f64,
}

impl Stencil {
    fn new(ctx: &IdentityContext, p: &[f64], direction: &[f64]) -> Result<Stencil, SlantError> {
        let h = ctx.tol.fd_step;
        let sites = [2.0, 1.0, -1.0, -2.0]
            .iter()
            .map(|t| {
                let q: Vec<f64> = p.iter().zip(direction).map(|(a, d)| a + t * h * d).collect();
                Site::new(ctx, &q)
            })
            .collect::<Result<_, _>>()?;
        Ok(Stencil { sites, step: h })
    }

    /// Ambient derivative of the field `f` along the stencil direction.
    fn derivative(&self, f: impl Fn(&Site) -> AmbientVector) -> AmbientVector {
        let v: Vec<AmbientVector> = self.sites.iter().map(f).collect();
        let mut out = v[1].scaled(8.0);
        out.axpy(-8.0, &v[2]);
        out.axpy(-1.0, &v[0]);
        out.axpy(1.0, &v[3]);
        out.scaled(1.0 / (12.0 * self.step))
    }
}

/// A site plus the stencils along each field direction that will be
/// differentiated there, built once per point.
struct Local {
    site: Site,
    stencils: Vec<(Vec<f64>, Stencil)>,
}

impl Local {
    fn new<'f>(ctx: &IdentityContext, p: &[f64], directions: impl IntoIterator<Item = &'f Field>) -> Result<Local, SlantError> {
        let site = Site::new(ctx, p)?;
        let mut stencils: Vec<(Vec<f64>, Stencil)> = Vec::new();
        for d in directions {
            if !stencils.iter().any(|(c, _)| *c == d.coefficients) {
                stencils.push((d.coefficients.clone(), Stencil::new(ctx, p, &d.coefficients)?));
            }
        }
        Ok(Local { site, stencils })
    }

    fn stencil(&self, d: &Field) -> &Stencil {
        &self.stencils.iter().find(|(c, _)| *c == d.coefficients).expect("stencil built for every direction").1
    }
}

fn combos<'f>(xs: &'f [Field], ys: &'f [Field], zs: &'f [Field]) -> Vec<(&'f Field, &'f Field, &'f Field)> {
    let mut out = Vec::new();
    for x in xs {
        for y in ys {
            for z in zs {
                out.push((x, y, z));
            }
        }
    }
    out
}

fn per_point<F>(points: &[Vec<f64>], exec: Execution, f: F) -> Result<Vec<IdentityResidual>, SlantError>
where
    F: Fn(&[f64]) -> Result<Vec<IdentityResidual>, SlantError> + Sync + Send,
{
    let chunks = map_indexed(exec, points, |_, p| f(p));
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// `g(nabla_X Y, phi Z)` and the ten terms that should sum to it: the
/// cos^2 and sin^2 weighted pieces of both slant blocks, two normal
/// connection terms and two shape-operator terms.
pub fn connection_identity_terms(ctx: &IdentityContext, p: &[f64], x: &Field, y: &Field, z: &Field) -> Result<(f64, [f64; 10]), SlantError> {
    connection_terms(ctx, &Local::new(ctx, p, [x])?, x, y, z)
}

fn connection_terms(ctx: &IdentityContext, local: &Local, x: &Field, y: &Field, z: &Field) -> Result<(f64, [f64; 10]), SlantError> {
    let s = &local.site;
    let st = local.stencil(x);
    let c = &s.chart;
    let (xv, zv) = (s.vector(x), s.vector(z));
    let (qy, ry) = (s.q(y), s.r(y));
    let phi_z = s.phi(&zv);
    let omega_z = s.omega(&zv);
    let w_phi_qy = s.omega(&s.phi(&qy));
    let w_phi_ry = s.omega(&s.phi(&ry));
    let (c1, s1) = (ctx.theta1.cos().powi(2), ctx.theta1.sin().powi(2));
    let (c2, s2) = (ctx.theta2.cos().powi(2), ctx.theta2.sin().powi(2));

    let left = c.connection(&x.coefficients, &y.coefficients).dot(&phi_z);
    let nabla_qy = c.tangential_part(&st.derivative(|t| t.q(y)));
    let nabla_ry = c.tangential_part(&st.derivative(|t| t.r(y)));
    let nperp_wz = c.normal_part(&st.derivative(|t| t.omega(&t.vector(z))));
    let terms = [
        c1 * nabla_qy.dot(&phi_z),
        s.a(&w_phi_qy, &phi_z, &xv)?,
        -s1 * s.a(&omega_z, &xv, &qy)?,
        c2 * nabla_ry.dot(&phi_z),
        s.a(&w_phi_ry, &phi_z, &xv)?,
        -s2 * s.a(&omega_z, &xv, &ry)?,
        nperp_wz.dot(&w_phi_qy),
        nperp_wz.dot(&w_phi_ry),
        s.a(&s.omega(&qy), &zv, &xv)?,
        s.a(&s.omega(&ry), &zv, &xv)?,
    ];
    Ok((left, terms))
}

/// The six terms that should sum to `g([Y, Z], phi X)`, which vanishes for
/// constant-coefficient fields.
pub fn bracket_identity_terms(ctx: &IdentityContext, p: &[f64], x: &Field, y: &Field, z: &Field) -> Result<(f64, [f64; 6]), SlantError> {
    bracket_terms(&Local::new(ctx, p, [y, z])?, x, y, z)
}

fn bracket_terms(local: &Local, x: &Field, y: &Field, z: &Field) -> Result<(f64, [f64; 6]), SlantError> {
    let s = &local.site;
    let c = &s.chart;
    let (xv, yv, zv) = (s.vector(x), s.vector(y), s.vector(z));
    let phi_x = s.phi(&xv);
    let w_phi_y = s.omega(&s.phi(&yv));
    let w_phi_z = s.omega(&s.phi(&zv));
    let omega_x_along = |d: &Field| -> Result<AmbientVector, SlantError> { Ok(c.normal_part(&local.stencil(d).derivative(|t| t.omega(&t.vector(x))))) };
    let terms = [
        s.a(&w_phi_z, &phi_x, &yv)?,
        -s.a(&w_phi_y, &phi_x, &zv)?,
        omega_x_along(y)?.dot(&w_phi_z),
        -omega_x_along(z)?.dot(&w_phi_y),
        s.a(&s.omega(&zv), &xv, &yv)?,
        -s.a(&s.omega(&yv), &xv, &zv)?,
    ];
    Ok((0.0, terms))
}

/// `g(sigma(X, A), omega B)` against `g(sigma(X, B), omega QA) + g(sigma(X, B), omega RA)`.
/// Both warped sigma identities have this shape with different argument roles.
pub fn warped_sigma_terms(ctx: &IdentityContext, p: &[f64], x: &Field, a: &Field, b: &Field) -> Result<(f64, [f64; 2]), SlantError> {
    Ok(sigma_terms(&Site::new(ctx, p)?, x, a, b))
}

fn sigma_terms(s: &Site, x: &Field, a: &Field, b: &Field) -> (f64, [f64; 2]) {
    let c = &s.chart;
    let left = c.sigma(&x.coefficients, &a.coefficients).dot(&s.omega(&s.vector(b)));
    let sxb = c.sigma(&x.coefficients, &b.coefficients);
    (left, [sxb.dot(&s.omega(&s.q(a))), sxb.dot(&s.omega(&s.r(a)))])
}

/// Residuals of the connection identity over every (X, Y, Z) in
/// `xs × ys × zs` at every point. `tag` names the variant.
pub fn check_connection_identity(
    ctx: &IdentityContext,
    tag: &str,
    xs: &[Field],
    ys: &[Field],
    zs: &[Field],
    points: &[Vec<f64>],
    exec: Execution,
) -> Result<Vec<IdentityResidual>, SlantError> {
    let cs = combos(xs, ys, zs);
    per_point(points, exec, |p| {
        let local = Local::new(ctx, p, xs)?;
        cs.iter()
            .map(|(x, y, z)| {
                let (l, t) = connection_terms(ctx, &local, x, y, z)?;
                Ok(IdentityResidual::new(tag, p, vec![("X", x), ("Y", y), ("Z", z)], l, &t, Regime::FiniteDifference))
            })
            .collect()
    })
}

pub fn check_bracket_identity(
    ctx: &IdentityContext,
    tag: &str,
    xs: &[Field],
    ys: &[Field],
    zs: &[Field],
    points: &[Vec<f64>],
    exec: Execution,
) -> Result<Vec<IdentityResidual>, SlantError> {
    let cs = combos(xs, ys, zs);
    per_point(points, exec, |p| {
        let local = Local::new(ctx, p, ys.iter().chain(zs))?;
        cs.iter()
            .map(|(x, y, z)| {
                let (l, t) = bracket_terms(&local, x, y, z)?;
                Ok(IdentityResidual::new(tag, p, vec![("X", x), ("Y", y), ("Z", z)], l, &t, Regime::FiniteDifference))
            })
            .collect()
    })
}

/// Warped sigma identity with X on the base. One reading takes X, Z as base
/// fields and Y as a fiber field, the other takes X, Y on the base and Z on
/// the fiber; callers pick the reading through the lists they pass.
pub fn check_warped_sigma_base(
    ctx: &IdentityContext,
    tag: &str,
    xs: &[Field],
    ys: &[Field],
    zs: &[Field],
    points: &[Vec<f64>],
    exec: Execution,
) -> Result<Vec<IdentityResidual>, SlantError> {
    let cs = combos(xs, ys, zs);
    per_point(points, exec, |p| {
        let site = Site::new(ctx, p)?;
        cs.iter()
            .map(|(x, y, z)| {
                let (l, t) = sigma_terms(&site, x, y, z);
                Ok(IdentityResidual::new(tag, p, vec![("X", x), ("Y", y), ("Z", z)], l, &t, Regime::Jet))
            })
            .collect()
    })
}

/// Warped sigma identity with X a base field and Z, W fiber fields.
pub fn check_warped_sigma_fiber(
    ctx: &IdentityContext,
    tag: &str,
    xs: &[Field],
    zs: &[Field],
    ws: &[Field],
    points: &[Vec<f64>],
    exec: Execution,
) -> Result<Vec<IdentityResidual>, SlantError> {
    let cs = combos(xs, zs, ws);
    per_point(points, exec, |p| {
        let site = Site::new(ctx, p)?;
        cs.iter()
            .map(|(x, z, w)| {
                let (l, t) = sigma_terms(&site, x, z, w);
                Ok(IdentityResidual::new(tag, p, vec![("X", x), ("Z", z), ("W", w)], l, &t, Regime::Jet))
            })
            .collect()
    })
}

/// `phi` against the two candidate symmetries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Skewness {
    /// `max |<phi X, Y> + <X, phi Y>|`
    pub skew: f64,
    /// `max |<phi X, Y> - <X, phi Y>|`
    pub symmetric: f64,
}

pub fn check_skewness(chart: &PointChart, probes: &[AmbientVector]) -> Skewness {
    let phis: Vec<AmbientVector> = probes.iter().map(|p| chart.phi(p)).collect();
    let mut out = Skewness::default();
    for (i, x) in probes.iter().enumerate() {
        for (j, y) in probes.iter().enumerate() {
            let a = phis[i].dot(y);
            let b = x.dot(&phis[j]);
            out.skew = out.skew.max((a + b).abs());
            out.symmetric = out.symmetric.max((a - b).abs());
        }
    }
    out
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

    fn ctx<'a>(spec: &'a ImmersionSpec, a: &'a DistributionAssignment) -> IdentityContext<'a> {
        IdentityContext { spec, assignment: a, theta1: (1.0f64 / 3.0).acos(), theta2: std::f64::consts::FRAC_PI_2, tol: Tolerances::default() }
    }

    #[test]
    fn skewness_on_holomorphic_plane() {
        let spec = ImmersionSpec::parse(&["u", "v"], &["u", "v", "0", "0"], 2).unwrap();
        let c = evaluate_chart(&spec, &[0.2, 0.1], DEFAULT_RANK_TOL).unwrap();
        let s = check_skewness(&c, c.tangents());
        assert_eq!(s.skew, 0.0);
        // phi du = dv, so <phi du, dv> - <du, phi dv> = 1 - (-1)
        assert_eq!(s.symmetric, 2.0);
    }

    #[test]
    fn warped_sigma_by_hand() {
        // sigma(v, u) . omega(du) = -w at u = 0, v = w = 1
        let spec = polar();
        let a = DistributionAssignment::new(vec![3, 4], vec![1, 2], vec![0]);
        let c = ctx(&spec, &a);
        let p = [0.0, 1.0, 1.0, 0.0, 0.0];
        let (l, t) = warped_sigma_terms(&c, &p, &Field::coordinate(&spec, 1), &Field::coordinate(&spec, 0), &Field::coordinate(&spec, 0)).unwrap();
        assert!((l + 1.0).abs() < 1e-12, "{l}");
        assert_eq!(t[0], 0.0);
        assert!((t[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_fields_give_zero() {
        let spec = polar();
        let a = DistributionAssignment::new(vec![3, 4], vec![1, 2], vec![0]);
        let c = ctx(&spec, &a);
        let z = Field::zero(5);
        let p = [0.3, 1.0, 1.0, 0.0, 0.0];
        let (l, t) = connection_identity_terms(&c, &p, &z, &Field::coordinate(&spec, 0), &Field::coordinate(&spec, 0)).unwrap();
        assert_eq!(l, 0.0);
        assert!(t.iter().all(|x| x.abs() < 1e-12));
        let (l, t) = warped_sigma_terms(&c, &p, &z, &Field::coordinate(&spec, 0), &Field::coordinate(&spec, 1)).unwrap();
        assert_eq!((l, t), (0.0, [0.0, 0.0]));
    }

    #[test]
    fn bracket_identity_antisymmetric() {
        let spec = polar();
        let a = DistributionAssignment::new(vec![3, 4], vec![1, 2], vec![0]);
        let c = ctx(&spec, &a);
        let y = Field { label: "Y".into(), coefficients: vec![0.3, -0.7, 0.2, 0.0, 0.0] };
        let (_, t) = bracket_identity_terms(&c, &[0.3, 1.0, 1.2, 0.0, 0.0], &Field::coordinate(&spec, 1), &y, &y).unwrap();
        assert!(t.iter().sum::<f64>().abs() < 1e-10);
    }
}
