//! Numerical thresholds used by the checks. Every field can be overridden
//! from a manifest; omitted fields take the defaults below.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual below which Gram-Schmidt drops a vector.
    pub rank_tol: f64,
    /// Angle classification and constancy (radians).
    pub angle_tol: f64,
    /// |d ln f| below this counts as a constant warping function.
    pub grad_tol: f64,
    /// Cosine-normalised orthogonality residuals (block orthogonality and J(D1) ⊥ D2).
    pub orthogonality_tol: f64,
    /// Residuals of the flat ambient structure.
    pub ambient_tol: f64,
    /// Residuals assembled purely from jets.
    pub jet_tol: f64,
    /// Residuals containing finite-difference field derivatives.
    pub fd_tol: f64,
    /// Slant lemma residuals.
    pub lemma_tol: f64,
    /// Relative residual of the warped metric block structure.
    pub warp_tol: f64,
    /// Principal cosine threshold `1 - tol` for subspace intersection.
    pub intersection_tol: f64,
    /// Agreement tolerance between a recorded claim and the measurement.
    pub claim_tol: f64,
    /// Finite-difference step in parameter space.
    pub fd_step: f64,
    /// Random unit probes per block and sample point.
    pub probes_per_block: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_tol: 1e-9,
            angle_tol: 1e-7,
            grad_tol: 1e-7,
            orthogonality_tol: 1e-10,
            ambient_tol: 1e-12,
            jet_tol: 1e-9,
            fd_tol: 1e-5,
            lemma_tol: 1e-8,
            warp_tol: 1e-8,
            intersection_tol: 1e-8,
            claim_tol: 1e-8,
            fd_step: 1e-4,
            probes_per_block: 8,
        }
    }
}
