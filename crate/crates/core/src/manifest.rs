//! JSON manifests describing one immersion, its distributions, an optional
//! warp split, the sample points and the checks to run.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::{GeometryError, ImmersionSpec};
use crate::expr::parse;
use crate::sampling::{uniform_points, DEFAULT_SEED};
use crate::slant::{Block, DistributionAssignment};
use crate::tolerances::Tolerances;
use crate::warp::{Verdict, WarpSplit};

const SAMPLE_STREAM: u64 = 0x51;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Semantic { path: String, message: String },
}

impl ManifestError {
    fn semantic(path: impl Into<String>, message: impl Into<String>) -> Self {
        ManifestError::Semantic { path: path.into(), message: message.into() }
    }
}

/// Every check the engine knows, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Ambient,
    Charts,
    QuasiBiSlant,
    SlantIdentitiesD1,
    SlantIdentitiesD2,
    NormalDecomposition,
    ConnectionIdentity,
    ConnectionIdentityXInD,
    BracketIdentity,
    BracketIdentityXInD,
    Warp,
    WarpedConnection,
    WarpedSigmaIdentity,
    WarpedSigmaIdentitySwapped,
    WarpedSigmaFiberIdentity,
    Dichotomy,
}

impl CheckKind {
    pub const ALL: [CheckKind; 16] = [
        CheckKind::Ambient,
        CheckKind::Charts,
        CheckKind::QuasiBiSlant,
        CheckKind::SlantIdentitiesD1,
        CheckKind::SlantIdentitiesD2,
        CheckKind::NormalDecomposition,
        CheckKind::ConnectionIdentity,
        CheckKind::ConnectionIdentityXInD,
        CheckKind::BracketIdentity,
        CheckKind::BracketIdentityXInD,
        CheckKind::Warp,
        CheckKind::WarpedConnection,
        CheckKind::WarpedSigmaIdentity,
        CheckKind::WarpedSigmaIdentitySwapped,
        CheckKind::WarpedSigmaFiberIdentity,
        CheckKind::Dichotomy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Ambient => "ambient",
            CheckKind::Charts => "charts",
            CheckKind::QuasiBiSlant => "quasi_bi_slant",
            CheckKind::SlantIdentitiesD1 => "slant_identities_d1",
            CheckKind::SlantIdentitiesD2 => "slant_identities_d2",
            CheckKind::NormalDecomposition => "normal_decomposition",
            CheckKind::ConnectionIdentity => "connection_identity",
            CheckKind::ConnectionIdentityXInD => "connection_identity_x_in_d",
            CheckKind::BracketIdentity => "bracket_identity",
            CheckKind::BracketIdentityXInD => "bracket_identity_x_in_d",
            CheckKind::Warp => "warp",
            CheckKind::WarpedConnection => "warped_connection",
            CheckKind::WarpedSigmaIdentity => "warped_sigma_identity",
            CheckKind::WarpedSigmaIdentitySwapped => "warped_sigma_identity_swapped",
            CheckKind::WarpedSigmaFiberIdentity => "warped_sigma_fiber_identity",
            CheckKind::Dichotomy => "dichotomy",
        }
    }

    pub fn from_name(s: &str) -> Option<CheckKind> {
        CheckKind::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Checks that only make sense with a warp split.
    pub fn needs_warp(self) -> bool {
        self >= CheckKind::Warp
    }
}

impl std::fmt::Display for CheckKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameter names grouped into the three blocks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Distributions {
    #[serde(default)]
    pub invariant: Vec<String>,
    #[serde(default)]
    pub slant_1: Vec<String>,
    #[serde(default)]
    pub slant_2: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpSpec {
    pub base: Vec<String>,
    pub fiber: Vec<String>,
    /// Values of the base parameters, in `base` order. The first is the
    /// reference point where `f = 1`.
    pub base_points: Vec<Vec<f64>>,
    pub fiber_points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub ranges: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub count: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for Samples {
    fn default() -> Self {
        Samples { points: Vec::new(), ranges: BTreeMap::new(), count: 0, seed: DEFAULT_SEED }
    }
}

/// A recorded statement about the fixture that the run compares against
/// the measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Claim {
    SlantAngle { block: Block, value: f64, note: String },
    InvariantDimension { value: usize, note: String },
    MetricEntry { a: String, b: String, value: f64, note: String },
    Verdict { value: Verdict, note: String },
    WarpingRatio { base_a: Vec<f64>, base_b: Vec<f64>, value: f64, note: String },
    QuasiBiSlant { value: bool, note: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub ambient_dimension: usize,
    pub parameters: Vec<String>,
    pub immersion: Vec<String>,
    #[serde(default)]
    pub distributions: Distributions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp: Option<WarpSpec>,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Empty means every applicable check.
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub claims: Vec<Claim>,
}

/// A manifest with names turned into indices and sample points generated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: ImmersionSpec,
    pub assignment: DistributionAssignment,
    pub split: Option<WarpSplit>,
    pub points: Vec<Vec<f64>>,
    pub checks: Vec<CheckKind>,
}

pub fn load_manifest(path: &Path) -> Result<Manifest, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
    let m = Manifest::from_json(&text)?;
    m.resolve()?;
    Ok(m)
}

impl Manifest {
    /// Parses without semantic validation.
    pub fn from_json(text: &str) -> Result<Manifest, ManifestError> {
        serde_json::from_str(text).map_err(|e| ManifestError::Parse { line: e.line(), column: e.column(), message: strip_position(&e.to_string()) })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// The same manifest with defaults made explicit.
    pub fn with_resolved_checks(&self) -> Result<Manifest, ManifestError> {
        let r = self.resolve()?;
        Ok(Manifest { checks: r.checks, ..self.clone() })
    }

    pub fn resolve(&self) -> Result<Resolved, ManifestError> {
        let n = self.ambient_dimension;
        if n == 0 {
            return Err(ManifestError::semantic("ambient_dimension", "must be positive"));
        }
        if self.immersion.len() != 2 * n {
            return Err(ManifestError::semantic(
                "immersion",
                format!("expected {} components, got {}", 2 * n, self.immersion.len()),
            ));
        }
        let mut asts = Vec::with_capacity(self.immersion.len());
        for (k, src) in self.immersion.iter().enumerate() {
            let ast = parse(src).map_err(|e| ManifestError::semantic(format!("immersion[{k}]"), e.to_string()))?;
            if let Some(v) = ast.free_variables().into_iter().find(|v| !self.parameters.contains(v)) {
                return Err(ManifestError::semantic(format!("immersion[{k}]"), format!("unknown parameter `{v}`")));
            }
            asts.push(ast);
        }
        let spec = ImmersionSpec::new(self.parameters.clone(), asts, n).map_err(|e| match e {
            GeometryError::InvalidSpec(msg) => ManifestError::semantic("parameters", msg),
            other => ManifestError::semantic("immersion", other.to_string()),
        })?;
        let m = spec.param_count();
        let index = |path: String, name: &str| -> Result<usize, ManifestError> {
            spec.param_index(name).ok_or_else(|| ManifestError::semantic(path, format!("unknown parameter `{name}`")))
        };
        let group = |field: &str, names: &[String]| -> Result<Vec<usize>, ManifestError> {
            names.iter().enumerate().map(|(k, s)| index(format!("{field}[{k}]"), s)).collect()
        };

        let d = &self.distributions;
        let assignment = DistributionAssignment::new(
            group("distributions.invariant", &d.invariant)?,
            group("distributions.slant_1", &d.slant_1)?,
            group("distributions.slant_2", &d.slant_2)?,
        );
        assignment.validate(m).map_err(|e| ManifestError::semantic("distributions", e.to_string()))?;

        let split = match &self.warp {
            None => None,
            Some(w) => {
                let s = WarpSplit::new(group("warp.base", &w.base)?, group("warp.fiber", &w.fiber)?);
                s.validate(m).map_err(|e| ManifestError::semantic("warp", e.to_string()))?;
                if w.base_points.is_empty() || w.fiber_points.is_empty() {
                    return Err(ManifestError::semantic("warp", "base_points and fiber_points must be non-empty"));
                }
                for (k, b) in w.base_points.iter().enumerate() {
                    if b.len() != w.base.len() {
                        return Err(ManifestError::semantic(format!("warp.base_points[{k}]"), format!("expected {} values, got {}", w.base.len(), b.len())));
                    }
                }
                for (k, f) in w.fiber_points.iter().enumerate() {
                    if f.len() != w.fiber.len() {
                        return Err(ManifestError::semantic(format!("warp.fiber_points[{k}]"), format!("expected {} values, got {}", w.fiber.len(), f.len())));
                    }
                }
                Some(s)
            }
        };

        for (k, p) in self.samples.points.iter().enumerate() {
            if p.len() != m {
                return Err(ManifestError::semantic(format!("samples.points[{k}]"), format!("expected {m} values, got {}", p.len())));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(ManifestError::semantic(format!("samples.points[{k}]"), "non-finite coordinate"));
            }
        }
        for name in self.samples.ranges.keys() {
            index(format!("samples.ranges.{name}"), name)?;
        }
        let mut points = self.samples.points.clone();
        if self.samples.count > 0 {
            let mut ranges = Vec::with_capacity(m);
            for name in spec.params() {
                let [lo, hi] = *self
                    .samples
                    .ranges
                    .get(name)
                    .ok_or_else(|| ManifestError::semantic("samples.ranges", format!("missing range for `{name}`")))?;
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(ManifestError::semantic(format!("samples.ranges.{name}"), "expected finite [lo, hi] with lo <= hi"));
                }
                ranges.push((lo, hi));
            }
            points.extend(uniform_points(&ranges, self.samples.count, self.samples.seed, SAMPLE_STREAM));
        }
        if points.is_empty() {
            return Err(ManifestError::semantic("samples", "no sample points"));
        }

        let checks = if self.checks.is_empty() {
            CheckKind::ALL.into_iter().filter(|c| split.is_some() || !c.needs_warp()).collect()
        } else {
            let mut c = self.checks.clone();
            c.sort();
            if c.windows(2).any(|w| w[0] == w[1]) {
                return Err(ManifestError::semantic("checks", "duplicate check"));
            }
            c
        };

        for (k, claim) in self.claims.iter().enumerate() {
            if let Claim::MetricEntry { a, b, .. } = claim {
                index(format!("claims[{k}].a"), a)?;
                index(format!("claims[{k}].b"), b)?;
            }
            if let Claim::WarpingRatio { base_a, base_b, .. } = claim {
                let Some(w) = &self.warp else {
                    return Err(ManifestError::semantic(format!("claims[{k}]"), "warping ratio needs a warp split"));
                };
                if base_a.len() != w.base.len() || base_b.len() != w.base.len() {
                    return Err(ManifestError::semantic(format!("claims[{k}]"), "base point length mismatch"));
                }
            }
        }

        Ok(Resolved { spec, assignment, split, points, checks })
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POLAR: &str = r#"{
        "name": "polar",
        "ambient_dimension": 5,
        "parameters": ["u", "v", "w", "s", "t"],
        "immersion": ["v*cos(u)", "w*cos(u)", "v*sin(u)", "w*sin(u)", "-v+w", "v+w", "0", "0", "s", "t"],
        "distributions": {"invariant": ["s", "t"], "slant_1": ["v", "w"], "slant_2": ["u"]},
        "samples": {"points": [[0.3, 1, 1, 0, 0]]}
    }"#;

    #[test]
    fn loads_with_defaults() {
        let m = Manifest::from_json(POLAR).unwrap();
        assert_eq!(m.tolerances, Tolerances::default());
        assert_eq!(m.samples.seed, 0xC0FFEE);
        let r = m.resolve().unwrap();
        assert_eq!(r.spec.ambient().complex_dim(), 5);
        assert_eq!(r.assignment.slant2, vec![0]);
        assert!(r.checks.iter().all(|c| !c.needs_warp()));
        assert!(m.with_resolved_checks().unwrap().to_json().contains("\"rank_tol\""));
    }

    #[test]
    fn component_count_mismatch() {
        let bad = POLAR.replace("\"0\", \"0\", \"s\"", "\"0\", \"s\"");
        let err = Manifest::from_json(&bad).unwrap().resolve().unwrap_err();
        assert_eq!(err.to_string(), "immersion: expected 10 components, got 9");
    }

    #[test]
    fn unknown_name_has_a_path() {
        let bad = POLAR.replace("\"slant_2\": [\"u\"]", "\"slant_2\": [\"q\"]");
        let err = Manifest::from_json(&bad).unwrap().resolve().unwrap_err();
        assert_eq!(err.to_string(), "distributions.slant_2[0]: unknown parameter `q`");
    }

    #[test]
    fn syntax_error_has_a_position() {
        match Manifest::from_json("{\n  \"name\": ,\n}") {
            Err(ManifestError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 11)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn check_names_round_trip() {
        for c in CheckKind::ALL {
            assert_eq!(CheckKind::from_name(c.name()), Some(c));
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
    }
}
