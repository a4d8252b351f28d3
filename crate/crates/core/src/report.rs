//! Runs the checks selected by a manifest and renders the results.
//!
//! Checks run in the fixed order of [`CheckKind::ALL`]. A check whose
//! prerequisites failed still runs when its quantities are well defined and
//! is reported as `PRECONDITION_UNMET` with the failed prerequisite named.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ambient::AmbientSpace;
use crate::chart::{evaluate_chart, PointChart};
use crate::identities::{
    check_bracket_identity, check_connection_identity, check_skewness, check_warped_sigma_base, check_warped_sigma_fiber, worst, Field,
    IdentityContext, IdentityResidual,
};
use crate::linalg::AmbientVector;
use crate::manifest::{CheckKind, Claim, Manifest, ManifestError, Resolved};
use crate::par::{map_indexed, Execution};
use crate::sampling::{random_coefficients, rng_for};
use crate::slant::{block_probes, block_span, lemma_residuals, normal_decomposition, verify_quasi_bi_slant, Block, LemmaResiduals, SlantClass, SlantReport};
use crate::tolerances::Tolerances;
use crate::warp::{analyze_warp, check_warped_connection, dichotomy_check, warping_ratio, Dichotomy, Verdict, WarpReport};

const AMBIENT_STREAM: u64 = 0xA0;
const CHART_STREAM: u64 = 0xC0;
const LEMMA_STREAM: u64 = 0xD0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    PreconditionUnmet,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::PreconditionUnmet => "PRECONDITION_UNMET",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: CheckKind,
    pub status: Status,
    pub summary: String,
    pub worst_residual: Option<f64>,
    pub tolerance: Option<f64>,
    /// Prerequisites that did not hold.
    pub unmet: Vec<String>,
    pub details: Value,
}

/// A recorded claim next to the measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim: Claim,
    pub measured: Value,
    pub agrees: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub pass: usize,
    pub fail: usize,
    pub precondition_unmet: usize,
    pub claims_disagreeing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub engine: String,
    /// The manifest with defaults and the effective seed filled in.
    pub manifest: Manifest,
    pub points: Vec<Vec<f64>>,
    pub checks: Vec<CheckRecord>,
    /// Every claim with its measurement; disagreeing ones are discrepancies.
    pub discrepancies: Vec<ClaimRecord>,
    pub counts: Counts,
}

impl RunReport {
    pub fn check(&self, kind: CheckKind) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.check == kind)
    }

    pub fn exit_code(&self) -> i32 {
        if self.counts.fail > 0 {
            1
        } else {
            0
        }
    }
}

/// A report plus wall-clock times, which stay out of the machine output so
/// that it is reproducible.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub timings: Vec<(CheckKind, Duration)>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub exec: Execution,
    pub seed: Option<u64>,
    pub checks: Option<Vec<CheckKind>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Machine,
}

pub fn run(manifest: &Manifest, opts: &RunOptions) -> Result<RunOutcome, ManifestError> {
    let mut m = manifest.clone();
    if let Some(seed) = opts.seed {
        m.samples.seed = seed;
    }
    if let Some(c) = &opts.checks {
        m.checks = c.clone();
    }
    let resolved = m.resolve()?;
    m.checks = resolved.checks.clone();
    let engine = Engine::new(&m, &resolved, opts.exec);

    let mut checks = Vec::with_capacity(resolved.checks.len());
    let mut timings = Vec::with_capacity(resolved.checks.len());
    for &kind in &resolved.checks {
        let start = Instant::now();
        checks.push(engine.check(kind));
        timings.push((kind, start.elapsed()));
    }
    let discrepancies: Vec<ClaimRecord> = m.claims.iter().map(|c| engine.claim(c)).collect();

    let mut counts = Counts::default();
    for c in &checks {
        match c.status {
            Status::Pass => counts.pass += 1,
            Status::Fail => counts.fail += 1,
            Status::PreconditionUnmet => counts.precondition_unmet += 1,
        }
    }
    counts.claims_disagreeing = discrepancies.iter().filter(|d| !d.agrees).count();
    let report = RunReport {
        engine: format!("slantcheck {}", env!("CARGO_PKG_VERSION")),
        manifest: m,
        points: resolved.points.clone(),
        checks,
        discrepancies,
        counts,
    };
    Ok(RunOutcome { report, timings })
}

pub fn emit(outcome: &RunOutcome, format: Format) -> String {
    match format {
        Format::Machine => emit_machine(&outcome.report),
        Format::Human => emit_human(&outcome.report, Some(&outcome.timings)),
    }
}

/// Pretty JSON; numbers use the shortest representation that reads back to
/// the same `f64`.
pub fn emit_machine(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn sci(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.2e}"),
        None => "-".into(),
    }
}

pub fn emit_human(report: &RunReport, timings: Option<&[(CheckKind, Duration)]>) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let m = &report.manifest;
    let _ = writeln!(out, "{}  manifest {}  seed {}  points {}", report.engine, m.name, m.samples.seed, report.points.len());
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<30} {:<18} {:>9} {:>9} {:>9}  summary", "check", "status", "worst", "tol", "time");
    for c in &report.checks {
        let t = timings
            .and_then(|ts| ts.iter().find(|(k, _)| *k == c.check))
            .map(|(_, d)| format!("{:.1}ms", d.as_secs_f64() * 1e3))
            .unwrap_or_else(|| "-".into());
        let mut summary = c.summary.clone();
        if !c.unmet.is_empty() {
            summary.push_str(&format!(" [unmet: {}]", c.unmet.join("; ")));
        }
        let _ = writeln!(out, "{:<30} {:<18} {:>9} {:>9} {:>9}  {}", c.check.name(), c.status.to_string(), sci(c.worst_residual), sci(c.tolerance), t, summary);
    }
    if !report.discrepancies.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "claims");
        for d in &report.discrepancies {
            let mark = if d.agrees { "ok" } else { "DISCREPANCY" };
            let _ = writeln!(out, "  {:<11} {:<40} measured {:<24} {}", mark, claim_label(&d.claim), d.measured.to_string(), d.detail);
        }
    }
    let c = &report.counts;
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{} PASS, {} FAIL, {} PRECONDITION_UNMET, {} claim discrepancies",
        c.pass, c.fail, c.precondition_unmet, c.claims_disagreeing
    );
    out
}

fn claim_label(c: &Claim) -> String {
    match c {
        Claim::SlantAngle { block, value, .. } => format!("slant angle {block} = {value:.12}"),
        Claim::InvariantDimension { value, .. } => format!("invariant dimension = {value}"),
        Claim::MetricEntry { a, b, value, .. } => format!("g({a},{b}) = {value}"),
        Claim::Verdict { value, .. } => format!("verdict = {value}"),
        Claim::WarpingRatio { value, .. } => format!("warping ratio = {value}"),
        Claim::QuasiBiSlant { value, .. } => format!("quasi bi-slant = {value}"),
    }
}

fn record(kind: CheckKind, status: Status, summary: impl Into<String>, worst: Option<f64>, tol: Option<f64>, unmet: Vec<String>, details: Value) -> CheckRecord {
    CheckRecord { check: kind, status, summary: summary.into(), worst_residual: worst, tolerance: tol, unmet, details }
}

fn failed(kind: CheckKind, err: impl std::fmt::Display) -> CheckRecord {
    record(kind, Status::Fail, format!("error: {err}"), None, None, Vec::new(), Value::Null)
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable")
}

/// Status from a residual, unless a prerequisite failed.
fn graded(worst: f64, tol: f64, unmet: &[String]) -> Status {
    if !unmet.is_empty() {
        Status::PreconditionUnmet
    } else if worst < tol {
        Status::Pass
    } else {
        Status::Fail
    }
}

struct Engine<'a> {
    m: &'a Manifest,
    r: &'a Resolved,
    tol: Tolerances,
    seed: u64,
    exec: Execution,
    slant: OnceLock<Result<SlantReport, String>>,
    warp: OnceLock<Option<Result<WarpReport, String>>>,
    dichotomy: OnceLock<Option<Result<Dichotomy, String>>>,
}

impl<'a> Engine<'a> {
    fn new(m: &'a Manifest, r: &'a Resolved, exec: Execution) -> Self {
        Engine { m, r, tol: m.tolerances, seed: m.samples.seed, exec, slant: OnceLock::new(), warp: OnceLock::new(), dichotomy: OnceLock::new() }
    }

    fn slant(&self) -> &Result<SlantReport, String> {
        self.slant.get_or_init(|| {
            verify_quasi_bi_slant(&self.r.spec, &self.r.assignment, &self.r.points, &self.tol, self.seed, self.exec).map_err(|e| e.to_string())
        })
    }

    fn warp(&self) -> &Option<Result<WarpReport, String>> {
        self.warp.get_or_init(|| {
            let (split, w) = (self.r.split.as_ref()?, self.m.warp.as_ref()?);
            Some(
                analyze_warp(&self.r.spec, &self.r.assignment, split, &w.base_points, &w.fiber_points, &self.tol, self.exec)
                    .map_err(|e| e.to_string()),
            )
        })
    }

    fn theta(&self, b: Block) -> Option<f64> {
        self.slant().as_ref().ok().and_then(|s| s.theta(b))
    }

    fn dichotomy(&self) -> &Option<Result<Dichotomy, String>> {
        self.dichotomy.get_or_init(|| {
            let split = self.r.split.as_ref()?;
            let warp = match self.warp().as_ref()? {
                Ok(w) => w,
                Err(e) => return Some(Err(e.clone())),
            };
            let theta2 = self.theta(Block::D2);
            Some(
                dichotomy_check(&self.r.spec, &self.r.assignment, split, warp, theta2, &self.r.points, &self.tol, self.exec)
                    .map_err(|e| e.to_string()),
            )
        })
    }

    /// Names of failed structural prerequisites.
    fn unmet_quasi(&self) -> Vec<String> {
        match self.slant() {
            Ok(s) if s.conditions.all() => Vec::new(),
            Ok(s) => vec![format!("quasi bi-slant conditions fail: {}", s.conditions.failing().join(", "))],
            Err(e) => vec![format!("quasi bi-slant check errored: {e}")],
        }
    }

    fn unmet_warp(&self) -> Vec<String> {
        match self.warp() {
            None => vec!["no warp split given".into()],
            Some(Ok(w)) if w.is_warped => Vec::new(),
            Some(Ok(_)) => vec!["metric is not warped over the given split".into()],
            Some(Err(e)) => vec![format!("warp analysis errored: {e}")],
        }
    }

    fn check(&self, kind: CheckKind) -> CheckRecord {
        match kind {
            CheckKind::Ambient => self.ambient(),
            CheckKind::Charts => self.charts(),
            CheckKind::QuasiBiSlant => self.quasi_bi_slant(),
            CheckKind::SlantIdentitiesD1 => self.slant_identities(kind, Block::D1),
            CheckKind::SlantIdentitiesD2 => self.slant_identities(kind, Block::D2),
            CheckKind::NormalDecomposition => self.normal_decomposition(),
            CheckKind::ConnectionIdentity => self.prop(kind, Block::D1, false),
            CheckKind::ConnectionIdentityXInD => self.prop(kind, Block::D, false),
            CheckKind::BracketIdentity => self.prop(kind, Block::D1, true),
            CheckKind::BracketIdentityXInD => self.prop(kind, Block::D, true),
            CheckKind::Warp => self.warp_check(),
            CheckKind::WarpedConnection => self.warped_connection(),
            CheckKind::WarpedSigmaIdentity | CheckKind::WarpedSigmaIdentitySwapped | CheckKind::WarpedSigmaFiberIdentity => self.warped_sigma(kind),
            CheckKind::Dichotomy => self.dichotomy_record(),
        }
    }

    fn ambient(&self) -> CheckRecord {
        let kind = CheckKind::Ambient;
        let space: AmbientSpace = self.r.spec.ambient();
        let dim = space.real_dim();
        let mut rng = rng_for(self.seed, AMBIENT_STREAM, 0);
        let samples: Vec<AmbientVector> = (0..100).map(|_| AmbientVector(random_coefficients(&mut rng, dim))).collect();
        let directions: Vec<Vec<f64>> = (0..10).map(|_| random_coefficients(&mut rng, dim)).collect();
        let mut positions = Vec::new();
        for p in &self.r.points {
            match self.r.spec.position(p) {
                Ok(x) => positions.push(x.0),
                Err(e) => return failed(kind, e),
            }
        }
        let hermitian = space.check_hermitian_compatibility(&samples);
        let kaehler = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6].iter().fold(0.0f64, |w, &h| w.max(space.check_kaehler_parallel(&positions, &directions, h)));
        let w = hermitian.max(kaehler);
        record(
            kind,
            graded(w, self.tol.ambient_tol, &[]),
            format!("J compatibility {hermitian:.1e}, parallelism {kaehler:.1e}"),
            Some(w),
            Some(self.tol.ambient_tol),
            Vec::new(),
            json!({ "hermitian_compatibility": hermitian, "kaehler_parallel": kaehler, "vector_samples": samples.len() }),
        )
    }

    fn charts(&self) -> CheckRecord {
        let kind = CheckKind::Charts;
        let m = self.r.spec.param_count();
        let probes = self.tol.probes_per_block.max(2);
        let per = map_indexed(self.exec, &self.r.points, |i, p| -> Result<[f64; 4], String> {
            let c = evaluate_chart(&self.r.spec, p, self.tol.rank_tol).map_err(|e| e.to_string())?;
            let mut rng = rng_for(self.seed, CHART_STREAM, i as u64);
            let coeffs: Vec<Vec<f64>> = (0..probes).map(|_| random_coefficients(&mut rng, m)).collect();
            let tangents: Vec<AmbientVector> = coeffs.iter().map(|x| {
                let v = c.frame_combination(x);
                v.scaled(1.0 / v.norm())
            }).collect();
            let skew = check_skewness(&c, &tangents);
            let mut split_res: f64 = 0.0;
            for v in &tangents {
                let jv = crate::ambient::apply_j(v);
                let (phi, omega) = c.split_j(v);
                split_res = split_res.max((jv.dot(&jv) - phi.dot(&phi) - omega.dot(&omega)).abs() / v.dot(v));
            }
            let gw = gauss_weingarten(&c, &coeffs, &mut rng).map_err(|e| e.to_string())?;
            Ok([skew.skew, skew.symmetric, split_res, gw])
        });
        let mut worst = [0.0f64; 4];
        let mut singular = Vec::new();
        for (p, r) in self.r.points.iter().zip(per) {
            match r {
                Ok(v) => {
                    for k in 0..4 {
                        worst[k] = worst[k].max(v[k]);
                    }
                }
                Err(e) => singular.push(json!({ "point": p, "error": e })),
            }
        }
        let [skew, symmetric, split_res, gw] = worst;
        let ok = singular.is_empty() && skew < self.tol.orthogonality_tol && split_res < self.tol.orthogonality_tol && gw < self.tol.jet_tol;
        record(
            kind,
            if ok { Status::Pass } else { Status::Fail },
            format!(
                "{} charts, {} singular; phi skew {skew:.1e} (symmetric form {symmetric:.1e}), |Jv|^2 split {split_res:.1e}, Gauss-Weingarten {gw:.1e}",
                self.r.points.len(),
                singular.len()
            ),
            Some(skew.max(split_res).max(gw)),
            Some(self.tol.orthogonality_tol),
            Vec::new(),
            json!({
                "phi_skew_residual": skew,
                "phi_symmetric_residual": symmetric,
                "j_split_residual": split_res,
                "gauss_weingarten_residual": gw,
                "singular_points": singular,
            }),
        )
    }

    fn quasi_bi_slant(&self) -> CheckRecord {
        let kind = CheckKind::QuasiBiSlant;
        let s = match self.slant() {
            Ok(s) => s,
            Err(e) => return failed(kind, e),
        };
        let c = s.conditions;
        let flag = |b: bool| if b { "ok" } else { "FAIL" };
        let angle = |b: Block| s.theta(b).map(|t| format!("{t:.12}")).unwrap_or_else(|| "-".into());
        let dev = s.angles.iter().fold(0.0f64, |d, a| d.max(a.max_deviation));
        let worst = s.orthogonality_residual.max(s.condition_c).max(s.invariant_angle_residual).max(dev);
        let mut summary = format!(
            "a {} b {} c {} d {} e {}; theta1 {} theta2 {}",
            flag(c.a),
            flag(c.b),
            flag(c.c),
            flag(c.d),
            flag(c.e),
            angle(Block::D1),
            angle(Block::D2)
        );
        if !c.a {
            let worst_cross = s.cross_terms.iter().filter(|t| t.max_abs > 0.0).map(|t| format!("g({},{})={}", t.a, t.b, t.value)).collect::<Vec<_>>();
            if !worst_cross.is_empty() {
                summary.push_str(&format!("; cross terms {}", worst_cross.join(" ")));
            }
        }
        record(kind, if c.all() { Status::Pass } else { Status::Fail }, summary, Some(worst), None, Vec::new(), to_value(s))
    }

    fn slant_identities(&self, kind: CheckKind, block: Block) -> CheckRecord {
        let s = match self.slant() {
            Ok(s) => s,
            Err(e) => return failed(kind, e),
        };
        let info = s.block(block);
        let indices = self.r.assignment.block(block);
        let Some(theta) = info.mean else {
            return record(kind, Status::PreconditionUnmet, format!("{block} is empty"), None, None, vec![format!("{block} is empty")], Value::Null);
        };
        let mut unmet = self.unmet_quasi();
        if info.class == SlantClass::NonConstant {
            unmet.push(format!("angle of {block} is not constant"));
        }
        let stream = LEMMA_STREAM + if block == Block::D1 { 1 } else { 2 };
        let per = map_indexed(self.exec, &self.r.points, |i, p| -> Result<LemmaResiduals, String> {
            let c = evaluate_chart(&self.r.spec, p, self.tol.rank_tol).map_err(|e| e.to_string())?;
            let span = block_span(&c, indices, self.tol.rank_tol).map_err(|e| e.to_string())?;
            let probes = block_probes(&c, indices, self.tol.probes_per_block, self.seed, stream, i as u64);
            Ok(lemma_residuals(&c, &span, theta, &probes))
        });
        let mut total = LemmaResiduals::default();
        for r in per {
            match r {
                Ok(r) => total = total.merge(r),
                Err(e) => return failed(kind, e),
            }
        }
        let w = total.max();
        record(
            kind,
            graded(w, self.tol.lemma_tol, &unmet),
            format!(
                "theta {theta:.12}; phi^2 {:.1e}, <phi X, phi Y> {:.1e}, <omega X, omega Y> {:.1e} over {} pairs",
                total.phi_squared, total.phi_inner, total.omega_inner, total.pairs
            ),
            Some(w),
            Some(self.tol.lemma_tol),
            unmet,
            json!({ "theta": theta, "residuals": total }),
        )
    }

    fn normal_decomposition(&self) -> CheckRecord {
        let kind = CheckKind::NormalDecomposition;
        let per = map_indexed(self.exec, &self.r.points, |_, p| -> Result<([usize; 3], f64, f64), String> {
            let c = evaluate_chart(&self.r.spec, p, self.tol.rank_tol).map_err(|e| e.to_string())?;
            let nd = normal_decomposition(&c, &self.r.assignment, self.tol.rank_tol).map_err(|e| e.to_string())?;
            Ok(([nd.omega_d1.dim(), nd.omega_d2.dim(), nd.mu.dim()], nd.mu_invariance_residual, nd.omega_overlap))
        });
        let mut dims: Vec<[usize; 3]> = Vec::new();
        let (mut mu_res, mut overlap) = (0.0f64, 0.0f64);
        for r in per {
            match r {
                Ok((d, m, o)) => {
                    if !dims.contains(&d) {
                        dims.push(d);
                    }
                    mu_res = mu_res.max(m);
                    overlap = overlap.max(o);
                }
                Err(e) => return failed(kind, e),
            }
        }
        let unmet = self.unmet_quasi();
        let w = mu_res.max(overlap);
        let d = dims[0];
        record(
            kind,
            graded(w, self.tol.jet_tol, &unmet),
            format!("dims omega(D1) {} omega(D2) {} mu {}; mu J-invariance {mu_res:.1e}, omega overlap {overlap:.1e}", d[0], d[1], d[2]),
            Some(w),
            Some(self.tol.jet_tol),
            unmet,
            json!({ "dimensions": dims, "mu_invariance_residual": mu_res, "omega_overlap": overlap }),
        )
    }

    fn identity_context(&self) -> IdentityContext<'_> {
        IdentityContext {
            spec: &self.r.spec,
            assignment: &self.r.assignment,
            theta1: self.theta(Block::D1).unwrap_or(0.0),
            theta2: self.theta(Block::D2).unwrap_or(0.0),
            tol: self.tol,
        }
    }

    fn identity_record(&self, kind: CheckKind, res: Result<Vec<IdentityResidual>, String>, tol: f64, mut unmet: Vec<String>, empty: Option<String>) -> CheckRecord {
        if let Some(e) = empty {
            unmet.push(e);
        }
        let res = match res {
            Ok(r) => r,
            Err(e) => return failed(kind, e),
        };
        let w = worst(&res);
        let worst_case = res.iter().max_by(|a, b| a.residual.total_cmp(&b.residual));
        let dominant = res.iter().fold(0.0f64, |d, r| d.max(r.dominant));
        let regime = res.first().map(|r| r.regime);
        record(
            kind,
            graded(w, tol, &unmet),
            format!("{} evaluations, worst residual {w:.1e}, largest term {dominant:.1e}", res.len()),
            Some(w),
            Some(tol),
            unmet,
            json!({ "evaluations": res.len(), "regime": regime, "largest_term": dominant, "worst": worst_case }),
        )
    }

    fn prop(&self, kind: CheckKind, x_block: Block, bracket: bool) -> CheckRecord {
        let spec = &self.r.spec;
        let a = &self.r.assignment;
        let xs = Field::all(spec, a.block(x_block));
        let yz: Vec<usize> = a.slant1.iter().chain(&a.slant2).copied().collect();
        let yz = Field::all(spec, &yz);
        let ctx = self.identity_context();
        let res = if bracket {
            check_bracket_identity(&ctx, kind.name(), &xs, &yz, &yz, &self.r.points, self.exec)
        } else {
            check_connection_identity(&ctx, kind.name(), &xs, &yz, &yz, &self.r.points, self.exec)
        };
        let empty = if xs.is_empty() || yz.is_empty() { Some(format!("no fields to evaluate ({x_block} or D1+D2 empty)")) } else { None };
        self.identity_record(kind, res.map_err(|e| e.to_string()), self.tol.fd_tol, self.unmet_quasi(), empty)
    }

    fn warp_check(&self) -> CheckRecord {
        let kind = CheckKind::Warp;
        let w = match self.warp() {
            None => return record(kind, Status::PreconditionUnmet, "no warp split given", None, None, vec!["no warp split given".into()], Value::Null),
            Some(Err(e)) => return failed(kind, e),
            Some(Ok(w)) => w,
        };
        let worst = w.base_independence_residual.max(w.proportionality_residual);
        let mut summary = format!(
            "base {:?} fiber {:?}: cross {:.1e}, base drift {:.1e}, proportionality {:.1e}, max |d ln f| {:.3e}",
            w.base, w.fiber, w.cross_residual, w.base_independence_residual, w.proportionality_residual, w.max_grad_ln_f
        );
        if !w.base_is_invariant_block {
            summary.push_str("; base is not the invariant block");
        }
        record(kind, if w.is_warped { Status::Pass } else { Status::Fail }, summary, Some(worst.max(w.cross_residual)), Some(self.tol.warp_tol), Vec::new(), to_value(w))
    }

    fn warped_connection(&self) -> CheckRecord {
        let kind = CheckKind::WarpedConnection;
        let unmet = self.unmet_warp();
        let Some(split) = &self.r.split else {
            return record(kind, Status::PreconditionUnmet, "no warp split given", None, None, unmet, Value::Null);
        };
        let res = match check_warped_connection(&self.r.spec, split, &self.r.points, &self.tol, self.exec) {
            Ok(r) => r,
            Err(e) => return failed(kind, e),
        };
        let w = res.iter().fold(0.0f64, |m, r| m.max(r.residual));
        let worst_case = res.iter().max_by(|a, b| a.residual.total_cmp(&b.residual));
        record(
            kind,
            graded(w, self.tol.warp_tol, &unmet),
            format!("{} base x fiber pairs, worst {w:.1e}", res.len()),
            Some(w),
            Some(self.tol.warp_tol),
            unmet,
            json!({ "evaluations": res.len(), "worst": worst_case }),
        )
    }

    fn warped_sigma(&self, kind: CheckKind) -> CheckRecord {
        let mut unmet = self.unmet_warp();
        let Some(split) = &self.r.split else {
            return record(kind, Status::PreconditionUnmet, "no warp split given", None, None, unmet, Value::Null);
        };
        unmet.extend(self.unmet_quasi());
        let base = Field::all(&self.r.spec, &split.base);
        let fiber = Field::all(&self.r.spec, &split.fiber);
        let ctx = self.identity_context();
        let pts = &self.r.points;
        let res = match kind {
            CheckKind::WarpedSigmaIdentity => check_warped_sigma_base(&ctx, kind.name(), &base, &fiber, &base, pts, self.exec),
            CheckKind::WarpedSigmaIdentitySwapped => check_warped_sigma_base(&ctx, kind.name(), &base, &base, &fiber, pts, self.exec),
            _ => check_warped_sigma_fiber(&ctx, kind.name(), &base, &fiber, &fiber, pts, self.exec),
        };
        let empty = if base.is_empty() { Some("empty base".to_string()) } else { None };
        self.identity_record(kind, res.map_err(|e| e.to_string()), self.tol.jet_tol, unmet, empty)
    }

    fn dichotomy_record(&self) -> CheckRecord {
        let kind = CheckKind::Dichotomy;
        let mut unmet = self.unmet_warp();
        unmet.extend(self.unmet_quasi());
        let d = match self.dichotomy() {
            None => return record(kind, Status::PreconditionUnmet, "no warp split given", None, None, unmet, Value::Null),
            Some(Err(e)) => return failed(kind, e),
            Some(Ok(d)) => d,
        };
        let status = if !unmet.is_empty() {
            Status::PreconditionUnmet
        } else if d.counterexample || d.phi_product >= self.tol.jet_tol {
            Status::Fail
        } else {
            Status::Pass
        };
        let mut summary = format!(
            "verdict {}; max |d ln f| {:.3e}, theta2 {}, (d ln f) g(Z, phi W) {:.1e}, cos^2(theta2) |d ln f| {:.1e}",
            d.verdict,
            d.max_grad_ln_f,
            d.theta2.map(|t| format!("{t:.12}")).unwrap_or_else(|| "-".into()),
            d.phi_product,
            d.strengthened
        );
        if d.counterexample {
            summary.push_str("; NEITHER branch holds on a warped quasi bi-slant configuration");
        }
        let base_is_invariant = matches!(self.warp(), Some(Ok(w)) if w.base_is_invariant_block);
        let mut details = to_value(d);
        details["base_is_invariant_block"] = Value::Bool(base_is_invariant);
        record(kind, status, summary, Some(d.phi_product), Some(self.tol.jet_tol), unmet, details)
    }

    fn verdict(&self) -> Option<Verdict> {
        match self.dichotomy() {
            Some(Ok(d)) => Some(d.verdict),
            _ => match self.warp() {
                Some(Ok(w)) => w.verdict,
                _ => None,
            },
        }
    }

    fn claim(&self, claim: &Claim) -> ClaimRecord {
        let tol = self.tol.claim_tol;
        let out = |measured: Value, agrees: bool, detail: String| ClaimRecord { claim: claim.clone(), measured, agrees, detail };
        match claim {
            Claim::SlantAngle { block, value, .. } => match self.slant() {
                Ok(s) => {
                    let b = s.block(*block);
                    match b.mean {
                        Some(mean) => {
                            let ok = (mean - value).abs() < tol && b.max_deviation < tol;
                            out(json!(mean), ok, format!("deviation {:.1e} over {} samples", b.max_deviation, b.samples))
                        }
                        None => out(Value::Null, false, format!("{block} is empty")),
                    }
                }
                Err(e) => out(Value::Null, false, e.clone()),
            },
            Claim::InvariantDimension { value, .. } => match self.slant() {
                Ok(s) => {
                    let (lo, hi) = s.auto_invariant_dim;
                    out(json!(lo), lo == *value && hi == *value, format!("T cap J(T) dimension range {lo}..{hi}"))
                }
                Err(e) => out(Value::Null, false, e.clone()),
            },
            Claim::MetricEntry { a, b, value, .. } => {
                let (i, j) = (self.r.spec.param_index(a).expect("validated"), self.r.spec.param_index(b).expect("validated"));
                let mut first = None;
                let mut dev: f64 = 0.0;
                for p in &self.r.points {
                    match evaluate_chart(&self.r.spec, p, self.tol.rank_tol) {
                        Ok(c) => {
                            let g = c.gram()[(i, j)];
                            first.get_or_insert(g);
                            dev = dev.max((g - value).abs());
                        }
                        Err(e) => return out(Value::Null, false, e.to_string()),
                    }
                }
                out(json!(first), dev < tol, format!("largest |g - claimed| {dev:.3e} over {} points", self.r.points.len()))
            }
            Claim::Verdict { value, .. } => match self.verdict() {
                Some(v) => out(json!(v), v == *value, String::new()),
                None => out(Value::Null, false, "no verdict".into()),
            },
            Claim::WarpingRatio { base_a, base_b, value, .. } => {
                let (Some(split), Some(w)) = (&self.r.split, &self.m.warp) else {
                    return out(Value::Null, false, "no warp split".into());
                };
                match warping_ratio(&self.r.spec, split, base_a, base_b, &w.fiber_points[0], &self.tol) {
                    Ok(r) => out(json!(r), (r - value).abs() < tol, format!("f({base_a:?}) / f({base_b:?})")),
                    Err(e) => out(Value::Null, false, e.to_string()),
                }
            }
            Claim::QuasiBiSlant { value, .. } => match self.slant() {
                Ok(s) => {
                    let all = s.conditions.all();
                    let failing = s.conditions.failing();
                    let detail = if failing.is_empty() { "all conditions hold".into() } else { format!("failing: {}", failing.join(", ")) };
                    out(json!(all), all == *value, detail)
                }
                Err(e) => out(Value::Null, false, e.clone()),
            },
        }
    }
}

/// `max |<sigma(X, Y), N> - g(A_N X, Y)|` over probe pairs and random normals.
fn gauss_weingarten<R: rand::Rng>(c: &PointChart, coeffs: &[Vec<f64>], rng: &mut R) -> Result<f64, crate::chart::GeometryError> {
    let dim = c.ambient().real_dim();
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let n = c.normal_part(&AmbientVector(random_coefficients(rng, dim)));
        if n.norm() == 0.0 {
            continue;
        }
        let a = c.shape_operator(&n)?;
        for x in coeffs {
            let ax = c.frame_combination(&a.mul_vec(x));
            for y in coeffs {
                let yv = c.frame_combination(y);
                worst = worst.max((c.sigma(x, y).dot(&n) - ax.dot(&yv)).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fixture;

    #[test]
    fn holomorphic_plane_runs_clean() {
        let out = run(&fixture("holomorphic_plane").unwrap(), &RunOptions::default()).unwrap();
        let r = &out.report;
        assert_eq!(r.check(CheckKind::QuasiBiSlant).unwrap().status, Status::Pass);
        assert_eq!(r.exit_code(), 0, "{}", emit_human(r, None));
        assert!(r.discrepancies.iter().all(|d| d.agrees));
    }

    #[test]
    fn requested_checks_appear_once() {
        let opts = RunOptions { checks: Some(vec![CheckKind::Dichotomy, CheckKind::Ambient]), ..Default::default() };
        let r = run(&fixture("slant_plane").unwrap(), &opts).unwrap().report;
        let kinds: Vec<CheckKind> = r.checks.iter().map(|c| c.check).collect();
        assert_eq!(kinds, vec![CheckKind::Ambient, CheckKind::Dichotomy]);
        assert_eq!(r.checks[1].status, Status::PreconditionUnmet);
    }

    #[test]
    fn machine_output_round_trips() {
        let r = run(&fixture("slant_plane:0.3").unwrap(), &RunOptions::default()).unwrap().report;
        let text = emit_machine(&r);
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(emit_machine(&back), text);
    }

    #[test]
    fn human_output_has_one_line_per_check() {
        let out = run(&fixture("example_7_2").unwrap(), &RunOptions::default()).unwrap();
        let text = emit(&out, Format::Human);
        for c in &out.report.checks {
            assert_eq!(text.lines().filter(|l| l.starts_with(&format!("{} ", c.check.name()))).count(), 1, "{}", c.check);
        }
    }
}
