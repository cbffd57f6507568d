//! Numerical tolerances shared across modules.

/// Norm drift allowed after a unitary statevector operation.
pub const NORM: f64 = 1e-12;

/// Agreement between two independent routes to the same quantity.
pub const ORACLE_EQUIV: f64 = 1e-10;

/// Accepted deviation from unit norm for inputs that claim to be normalized.
pub const INPUT_NORM: f64 = 1e-8;

/// Eigen-residual target for the exact diagonalisation.
pub const EIGEN_RESIDUAL: f64 = 1e-9;

/// Two lowest eigenvalues closer than this are reported as degenerate.
pub const DEGENERACY: f64 = 1e-9;

/// Relative gap below which singular values are clustered as degenerate.
pub const SINGULAR_CLUSTER: f64 = 1e-6;

/// Singular values below this are treated as structurally zero.
pub const SINGULAR_ZERO: f64 = 1e-12;

/// Gradients within this distance of the maximum are ties.
pub const GRADIENT_TIE: f64 = 1e-10;

/// Assembled forged state must stay this close to unit norm.
pub const FORGED_NORM: f64 = 1e-6;
