//! Numerical tolerances shared by every module.

/// Max entrywise deviation `|M[i][j] - conj(M[j][i])|` for a Hermitian matrix.
pub const HERMITIAN: f64 = 1e-10;
/// Asymmetry accepted by [`crate::linalg::hermitize`] before symmetrizing.
pub const HERMITIZE_GUARD: f64 = 1e-8;
/// Slack on the smallest eigenvalue when checking positivity.
pub const PSD_SLACK: f64 = 1e-9;
/// Trace deviation allowed for density matrices.
pub const TRACE: f64 = 1e-9;
/// Backward-error bound for extremal eigenpairs.
pub const EIGEN_RESIDUAL: f64 = 1e-8;
/// Entrywise deviation of `sum_k E_k^dag E_k` (or `sum_k M_k`) from the identity.
pub const COMPLETENESS: f64 = 1e-8;
/// Norm deviation allowed for pure-state amplitudes.
pub const NORM: f64 = 1e-10;
/// Relative threshold below which `lambda_min` counts as zero (kappa = +inf).
pub const KAPPA_ZERO: f64 = 1e-9;
/// Two subset deltas closer than this are considered tied.
pub const TIE: f64 = 1e-12;
