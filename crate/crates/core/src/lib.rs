//! Numerical verification of quasi bi-slant and warped product submanifolds
//! of complex Euclidean space.
//!
//! A submanifold is given as a parametric immersion whose coordinate
//! expressions are parsed by [`expr`] and differentiated exactly to second
//! order with [`jet`]. [`chart`] assembles the extrinsic geometry at a point,
//! [`slant`] measures slant angles and checks the quasi bi-slant axioms,
//! [`identities`] evaluates both sides of the structure identities, and
//! [`warp`] detects warped-product metrics and applies the dichotomy between
//! Riemannian products and quasi hemi-slant warped products. [`report`]
//! drives everything from a JSON manifest.

pub mod ambient;
pub mod chart;
pub mod expr;
pub mod fixtures;
pub mod identities;
pub mod jet;
pub mod linalg;
pub mod manifest;
pub mod par;
pub mod report;
pub mod sampling;
pub mod slant;
pub mod tolerances;
pub mod warp;

pub use ambient::AmbientSpace;
pub use chart::{evaluate_chart, ImmersionSpec, PointChart};
pub use expr::{parse, Ast};
pub use jet::Jet2;
pub use linalg::{AmbientVector, Subspace};
pub use manifest::Manifest;
pub use par::Execution;
pub use report::{run, RunReport};
