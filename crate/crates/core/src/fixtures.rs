//! Built-in fixture manifests.
//!
//! Parameterised fixtures take arguments after a colon, for example
//! `slant_plane:0.3` or `direct_product:0.5,1.1`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::manifest::{Claim, Distributions, Manifest, Samples, WarpSpec};
use crate::sampling::DEFAULT_SEED;
use crate::slant::Block;
use crate::tolerances::Tolerances;
use crate::warp::Verdict;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    Unknown(String),
    #[error("bad arguments for `{name}`: {message}")]
    BadArgs { name: String, message: String },
}

pub struct FixtureInfo {
    pub name: &'static str,
    pub args: &'static str,
    pub description: &'static str,
}

pub const REGISTRY: &[FixtureInfo] = &[
    FixtureInfo { name: "example_7_1", args: "", description: "bi-slant example in C^6 whose slant blocks are not orthogonal" },
    FixtureInfo { name: "example_7_2", args: "", description: "warped quasi hemi-slant submanifold of C^5" },
    FixtureInfo { name: "fixture_7_1_corrected", args: "", description: "C^7 repair of example_7_1 with orthogonal blocks" },
    FixtureInfo { name: "slant_plane", args: "[theta=0.7]", description: "slant plane (u, v cos theta, v sin theta, 0) in C^2" },
    FixtureInfo { name: "holomorphic_plane", args: "", description: "(u, v, 0, 0) in C^2" },
    FixtureInfo { name: "totally_real_plane", args: "", description: "(u, 0, v, 0) in C^2" },
    FixtureInfo { name: "direct_product", args: "[theta1,theta2=0.5,1.1]", description: "C x slant plane x slant plane in C^5" },
    FixtureInfo { name: "polar_warp", args: "[theta1=0.9]", description: "polar warped template with slant angle theta1, f = sqrt(v^2+w^2)" },
    FixtureInfo { name: "identity_c2", args: "", description: "identity embedding of C^2, everything invariant" },
    FixtureInfo { name: "non_product", args: "", description: "(u, v, uv, 0) in C^2, not a warped product" },
];

/// Instantiates a fixture by name, with optional `:args`.
pub fn fixture(spec: &str) -> Result<Manifest, FixtureError> {
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let nums = |count: usize, defaults: &[f64]| -> Result<Vec<f64>, FixtureError> {
        let bad = |message: String| FixtureError::BadArgs { name: name.to_string(), message };
        let v: Vec<f64> = match args {
            None => return Ok(defaults.to_vec()),
            Some(a) => a.split(',').map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")))).collect::<Result<_, _>>()?,
        };
        if v.len() != count {
            return Err(bad(format!("expected {count} values, got {}", v.len())));
        }
        Ok(v)
    };
    let no_args = || match args {
        None => Ok(()),
        Some(_) => Err(FixtureError::BadArgs { name: name.to_string(), message: "takes no arguments".into() }),
    };
    let angle = |t: f64, open: bool| -> Result<f64, FixtureError> {
        let ok = if open { t > 0.0 && t < FRAC_PI_2 } else { (0.0..=FRAC_PI_2).contains(&t) };
        if ok {
            Ok(t)
        } else {
            Err(FixtureError::BadArgs { name: name.to_string(), message: format!("angle {t} out of range") })
        }
    };
    match name {
        "example_7_1" => no_args().map(|_| example_7_1()),
        "example_7_2" => no_args().map(|_| example_7_2()),
        "fixture_7_1_corrected" => no_args().map(|_| fixture_7_1_corrected()),
        "slant_plane" => Ok(slant_plane(angle(nums(1, &[0.7])?[0], false)?)),
        "holomorphic_plane" => no_args().map(|_| holomorphic_plane()),
        "totally_real_plane" => no_args().map(|_| totally_real_plane()),
        "direct_product" => {
            let v = nums(2, &[0.5, 1.1])?;
            Ok(direct_product(angle(v[0], true)?, angle(v[1], true)?))
        }
        "polar_warp" => Ok(polar_warp(angle(nums(1, &[0.9])?[0], true)?)),
        "identity_c2" => no_args().map(|_| identity_c2()),
        "non_product" => no_args().map(|_| non_product()),
        _ => Err(FixtureError::Unknown(spec.to_string())),
    }
}

/// Every registry entry with default arguments.
pub fn all_fixtures() -> Vec<Manifest> {
    REGISTRY.iter().map(|f| fixture(f.name).expect("registry entries build")).collect()
}

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn ranges(r: &[(&str, f64, f64)]) -> BTreeMap<String, [f64; 2]> {
    r.iter().map(|(n, a, b)| (n.to_string(), [*a, *b])).collect()
}

fn third() -> f64 {
    (1.0f64 / 3.0).acos()
}

#[allow(clippy::too_many_arguments)]
fn manifest(
    name: String,
    n: usize,
    params: &[&str],
    immersion: Vec<String>,
    dist: [&[&str]; 3],
    warp: Option<WarpSpec>,
    samples: Samples,
    claims: Vec<Claim>,
) -> Manifest {
    Manifest {
        name,
        ambient_dimension: n,
        parameters: s(params),
        immersion,
        distributions: Distributions { invariant: s(dist[0]), slant_1: s(dist[1]), slant_2: s(dist[2]) },
        warp,
        samples,
        tolerances: Tolerances::default(),
        checks: Vec::new(),
        claims,
    }
}

fn slant(block: Block, value: f64, note: &str) -> Claim {
    Claim::SlantAngle { block, value, note: note.into() }
}

fn metric(a: &str, b: &str, value: f64, note: &str) -> Claim {
    Claim::MetricEntry { a: a.into(), b: b.into(), value, note: note.into() }
}

fn verdict(value: Verdict, note: &str) -> Claim {
    Claim::Verdict { value, note: note.into() }
}

fn quasi(value: bool, note: &str) -> Claim {
    Claim::QuasiBiSlant { value, note: note.into() }
}

fn invariant_dim(value: usize, note: &str) -> Claim {
    Claim::InvariantDimension { value, note: note.into() }
}

/// `a u + b v` for sign coefficients, as expression text.
fn signed_sum(terms: &[(i64, &str)]) -> String {
    let mut out = String::new();
    for (k, (c, v)) in terms.iter().enumerate() {
        match (*c, k) {
            (1, 0) => out.push_str(v),
            (-1, _) => out.push_str(&format!("-{v}")),
            (1, _) => out.push_str(&format!("+{v}")),
            (c, _) => out.push_str(&format!("{c:+}*{v}")),
        }
    }
    out
}

fn product_warp_grid(fiber: &[&str]) -> WarpSpec {
    WarpSpec {
        base: s(&["s", "t"]),
        fiber: s(fiber),
        base_points: vec![vec![0.0, 0.0], vec![1.0, -0.5], vec![-0.7, 0.3]],
        fiber_points: vec![vec![0.1, 0.2, 0.3, 0.4], vec![1.0, -1.0, 0.5, 0.2], vec![-0.3, 0.8, -1.1, 0.6]],
    }
}

fn box_samples(params: &[&str], lo: f64, hi: f64, points: Vec<Vec<f64>>) -> Samples {
    Samples { points, ranges: params.iter().map(|p| (p.to_string(), [lo, hi])).collect(), count: 10, seed: DEFAULT_SEED }
}

const BI_SLANT_PARAMS: [&str; 6] = ["u", "v", "w", "r", "s", "t"];

/// Slant legs over the first four complex coordinates, shared by the
/// bi-slant fixtures.
fn bi_slant_legs() -> Vec<String> {
    let t = "acos(1/3)";
    vec![
        format!("u*cos({t})"),
        format!("v*cos({t})"),
        format!("u*sin({t})"),
        format!("v*sin({t})"),
        format!("w*cos({t})"),
        format!("r*cos({t})"),
        format!("w*sin({t})"),
        format!("r*sin({t})"),
    ]
}

fn example_7_1() -> Manifest {
    let mut imm = bi_slant_legs();
    imm.extend(s(&["-u-w+v+r", "u+w+v+r", "s", "t"]));
    let c = "claimed metric 3(du^2+dv^2) + 3(dw^2+dr^2) + ds^2 + dt^2";
    manifest(
        "example_7_1".into(),
        6,
        &BI_SLANT_PARAMS,
        imm,
        [&["s", "t"], &["u", "v"], &["w", "r"]],
        Some(product_warp_grid(&["u", "v", "w", "r"])),
        box_samples(&BI_SLANT_PARAMS, -2.0, 2.0, vec![vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]]),
        vec![
            slant(Block::D1, third(), "claimed slant angle of D1"),
            slant(Block::D2, third(), "claimed slant angle of D2"),
            invariant_dim(2, "claimed invariant distribution span{ds, dt}"),
            metric("u", "u", 3.0, c),
            metric("v", "v", 3.0, c),
            metric("w", "w", 3.0, c),
            metric("r", "r", 3.0, c),
            metric("u", "w", 0.0, c),
            metric("v", "r", 0.0, c),
            quasi(true, "claimed proper quasi bi-slant"),
            verdict(Verdict::RiemannianProduct, "claimed Riemannian product with constant warping"),
        ],
    )
}

fn polar_template(name: String, k: Option<f64>, theta1: f64, note: &str) -> Manifest {
    let (a, b) = match k {
        None => ("-v+w".to_string(), "v+w".to_string()),
        Some(k) => (format!("{}*(-v+w)", num(k)), format!("{}*(v+w)", num(k))),
    };
    let params = ["u", "v", "w", "s", "t"];
    let imm = vec!["v*cos(u)".into(), "w*cos(u)".into(), "v*sin(u)".into(), "w*sin(u)".into(), a, b, "0".into(), "0".into(), "s".into(), "t".into()];
    let mut claims = vec![
        slant(Block::D1, theta1, &format!("{note}slant angle of D1")),
        slant(Block::D2, FRAC_PI_2, &format!("{note}anti-invariant D2")),
        invariant_dim(2, &format!("{note}invariant distribution span{{ds, dt}}")),
        quasi(true, &format!("{note}quasi bi-slant")),
        verdict(Verdict::QuasiHemiSlant, &format!("{note}warped quasi hemi-slant")),
    ];
    if k.is_none() {
        claims.insert(
            3,
            Claim::WarpingRatio { base_a: vec![0.0, 0.0, 3.0, 4.0], base_b: vec![0.0, 0.0, 1.0, 0.0], value: 5.0, note: "claimed f = sqrt(v^2 + w^2)".into() },
        );
    }
    let mut explicit = vec![vec![0.3, 1.0, 1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0, 0.0, 0.0]];
    if k.is_some() {
        explicit.truncate(1);
    }
    manifest(
        name,
        5,
        &params,
        imm,
        [&["s", "t"], &["v", "w"], &["u"]],
        Some(WarpSpec {
            base: s(&["s", "t", "v", "w"]),
            fiber: s(&["u"]),
            base_points: vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.2, -0.1, 3.0, 4.0], vec![0.5, 0.3, 1.0, 1.0], vec![-0.4, 0.7, 2.0, 0.5]],
            fiber_points: vec![vec![0.0], vec![0.7], vec![-1.3]],
        }),
        Samples {
            points: explicit,
            ranges: ranges(&[("u", -3.0, 3.0), ("v", 0.5, 2.0), ("w", 0.5, 2.0), ("s", -1.0, 1.0), ("t", -1.0, 1.0)]),
            count: 10,
            seed: DEFAULT_SEED,
        },
        claims,
    )
}

fn example_7_2() -> Manifest {
    polar_template("example_7_2".into(), None, third(), "claimed ")
}

/// Same template with `(x3, y3) = k(-v + w, v + w)`, where
/// `k^2 = (1 - c) / (2 (1 + c))` makes the D1 slant angle `acos(c)`.
pub fn polar_warp(theta1: f64) -> Manifest {
    let c = theta1.cos();
    let k = ((1.0 - c) / (2.0 * (1.0 + c))).sqrt();
    polar_template(format!("polar_warp:{}", num(theta1)), Some(k), theta1, "expected ")
}

/// Signs `(x, y)` of the legs of d_u, d_v, d_w, d_r in their complex
/// coordinate.
pub type SignPattern = [[i64; 2]; 4];

/// The leg signs of the bi-slant example.
pub const EXAMPLE_SIGNS: SignPattern = [[-1, 1], [1, 1], [-1, 1], [1, 1]];

/// Where the legs live: one complex coordinate for all four, or one for
/// each slant block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegLayout {
    Shared,
    Separate,
}

/// Exact check of every quasi bi-slant condition with slant angles
/// `acos(1/3)` on both blocks.
///
/// The slant parts `cos(t) dx_1 + sin(t) dx_2` and its J-image are replaced
/// by an orthonormal pair `e, Je`, which changes no inner product, so the
/// frame has integer entries.
pub fn signs_pass(signs: &SignPattern, layout: LegLayout) -> bool {
    // pairs: 0 = D1 slant part, 1 = D2 slant part, 2 = invariant, 3/4 = legs
    let pairs = if layout == LegLayout::Shared { 4 } else { 5 };
    let leg_pair = |block: usize| if layout == LegLayout::Shared { 3 } else { 3 + block };
    let mut frame: Vec<Vec<i64>> = Vec::new();
    for (k, sg) in signs.iter().enumerate() {
        let block = k / 2;
        let mut v = vec![0i64; 2 * pairs];
        v[2 * block + k % 2] = 1;
        v[2 * leg_pair(block)] = sg[0];
        v[2 * leg_pair(block) + 1] = sg[1];
        frame.push(v);
    }
    for k in 0..2 {
        let mut v = vec![0i64; 2 * pairs];
        v[4 + k] = 1;
        frame.push(v);
    }
    let dot = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<i64>();
    let j = |a: &[i64]| -> Vec<i64> { a.chunks(2).flat_map(|p| [-p[1], p[0]]).collect() };
    let blocks: [&[usize]; 3] = [&[4, 5], &[0, 1], &[2, 3]];
    // block orthogonality
    for x in 0..3 {
        for y in x + 1..3 {
            for &a in blocks[x] {
                for &b in blocks[y] {
                    if dot(&frame[a], &frame[b]) != 0 {
                        return false;
                    }
                }
            }
        }
    }
    // J(D) = D
    if j(&frame[4]) != frame[5] {
        return false;
    }
    // J(D1) orthogonal to D2
    for &a in blocks[1] {
        for &b in blocks[2] {
            if dot(&j(&frame[a]), &frame[b]) != 0 {
                return false;
            }
        }
    }
    // a two-dimensional block has constant angle with cos = |<Ja, b>| / sqrt(det G)
    for blk in &blocks[1..] {
        let (a, b) = (&frame[blk[0]], &frame[blk[1]]);
        let det = dot(a, a) * dot(b, b) - dot(a, b).pow(2);
        let k = dot(&j(a), b);
        if k == 0 || 9 * k * k != det {
            return false;
        }
    }
    true
}

fn pattern(mask: u32) -> SignPattern {
    let sign = |bit: u32| if mask >> bit & 1 == 1 { -1 } else { 1 };
    [[sign(0), sign(1)], [sign(2), sign(3)], [sign(4), sign(5)], [sign(6), sign(7)]]
}

/// All 256 sign patterns that pass under `layout`.
pub fn sign_search(layout: LegLayout) -> Vec<SignPattern> {
    (0..256u32).map(pattern).filter(|p| signs_pass(p, layout)).collect()
}

/// The passing pattern closest to the example's own signs.
pub fn corrected_signs() -> SignPattern {
    let distance = |p: &SignPattern| p.iter().flatten().zip(EXAMPLE_SIGNS.iter().flatten()).filter(|(a, b)| a != b).count();
    sign_search(LegLayout::Separate).into_iter().min_by_key(distance).expect("the separate layout admits solutions")
}

fn fixture_7_1_corrected() -> Manifest {
    let sg = corrected_signs();
    let mut imm = bi_slant_legs();
    imm.push(signed_sum(&[(sg[0][0], "u"), (sg[1][0], "v")]));
    imm.push(signed_sum(&[(sg[0][1], "u"), (sg[1][1], "v")]));
    imm.push(signed_sum(&[(sg[2][0], "w"), (sg[3][0], "r")]));
    imm.push(signed_sum(&[(sg[2][1], "w"), (sg[3][1], "r")]));
    imm.extend(s(&["s", "t"]));
    let t = third();
    manifest(
        "fixture_7_1_corrected".into(),
        7,
        &BI_SLANT_PARAMS,
        imm,
        [&["s", "t"], &["u", "v"], &["w", "r"]],
        Some(product_warp_grid(&["u", "v", "w", "r"])),
        box_samples(&BI_SLANT_PARAMS, -2.0, 2.0, vec![vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]]),
        vec![
            slant(Block::D1, t, "expected slant angle of D1"),
            slant(Block::D2, t, "expected slant angle of D2"),
            invariant_dim(2, "expected invariant span{ds, dt}"),
            metric("u", "w", 0.0, "blocks orthogonal"),
            metric("v", "r", 0.0, "blocks orthogonal"),
            metric("u", "u", 3.0, "expected metric 3(du^2+dv^2+dw^2+dr^2) + ds^2 + dt^2"),
            quasi(true, "expected proper quasi bi-slant"),
            verdict(Verdict::RiemannianProduct, "expected Riemannian product"),
        ],
    )
}

pub fn slant_plane(theta: f64) -> Manifest {
    let imm = vec!["u".into(), format!("v*cos({})", num(theta)), format!("v*sin({})", num(theta)), "0".into()];
    manifest(
        format!("slant_plane:{}", num(theta)),
        2,
        &["u", "v"],
        imm,
        [&[], &["u", "v"], &[]],
        None,
        box_samples(&["u", "v"], -1.0, 1.0, Vec::new()),
        vec![slant(Block::D1, theta, "expected Wirtinger angle"), quasi(true, "a slant plane is trivially quasi bi-slant")],
    )
}

fn holomorphic_plane() -> Manifest {
    manifest(
        "holomorphic_plane".into(),
        2,
        &["u", "v"],
        s(&["u", "v", "0", "0"]),
        [&["u", "v"], &[], &[]],
        None,
        box_samples(&["u", "v"], -1.0, 1.0, Vec::new()),
        vec![invariant_dim(2, "complex line"), quasi(true, "invariant")],
    )
}

fn totally_real_plane() -> Manifest {
    manifest(
        "totally_real_plane".into(),
        2,
        &["u", "v"],
        s(&["u", "0", "v", "0"]),
        [&[], &["u", "v"], &[]],
        None,
        box_samples(&["u", "v"], -1.0, 1.0, Vec::new()),
        vec![slant(Block::D1, FRAC_PI_2, "totally real"), invariant_dim(0, "totally real"), quasi(true, "anti-invariant")],
    )
}

pub fn direct_product(theta1: f64, theta2: f64) -> Manifest {
    let (a, b) = (num(theta1), num(theta2));
    let imm = vec![
        "s".into(),
        "t".into(),
        "u".into(),
        format!("v*cos({a})"),
        format!("v*sin({a})"),
        "0".into(),
        "w".into(),
        format!("r*cos({b})"),
        format!("r*sin({b})"),
        "0".into(),
    ];
    manifest(
        format!("direct_product:{},{}", num(theta1), num(theta2)),
        5,
        &BI_SLANT_PARAMS,
        imm,
        [&["s", "t"], &["u", "v"], &["w", "r"]],
        Some(product_warp_grid(&["u", "v", "w", "r"])),
        box_samples(&BI_SLANT_PARAMS, -1.0, 1.0, Vec::new()),
        vec![
            slant(Block::D1, theta1, "expected slant angle of D1"),
            slant(Block::D2, theta2, "expected slant angle of D2"),
            invariant_dim(2, "only the C factor is invariant"),
            quasi(true, "product of slant planes"),
            verdict(Verdict::RiemannianProduct, "flat product"),
        ],
    )
}

fn identity_c2() -> Manifest {
    let p = ["p", "q", "x", "y"];
    manifest(
        "identity_c2".into(),
        2,
        &p,
        s(&p),
        [&p, &[], &[]],
        None,
        box_samples(&p, -1.0, 1.0, Vec::new()),
        vec![invariant_dim(4, "open subset of C^2"), quasi(true, "invariant")],
    )
}

fn non_product() -> Manifest {
    manifest(
        "non_product".into(),
        2,
        &["u", "v"],
        s(&["u", "v", "u*v", "0"]),
        [&[], &[], &[]],
        Some(WarpSpec { base: s(&["u"]), fiber: s(&["v"]), base_points: vec![vec![1.0], vec![0.5], vec![1.5]], fiber_points: vec![vec![1.0], vec![0.5], vec![1.5]] }),
        box_samples(&["u", "v"], 0.5, 1.5, Vec::new()),
        vec![verdict(Verdict::Neither, "mixed metric term u v")],
    )
}
