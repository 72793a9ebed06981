//! Every numerical threshold used by tests, solvers and the experiment
//! runner. Thresholds are absolute unless the name says `_REL`; the ones
//! scaled by `s_plus` or a field norm say so in their doc line.

/// Frobenius orthonormality of the moving frame, E_i . E_j = delta_ij.
pub const FRAME_ORTHONORMAL: f64 = 1e-13;
/// Central-difference check of the frame derivative identities.
pub const FRAME_DERIVATIVE_FD: f64 = 1e-8;
/// Step for the frame derivative check.
pub const FRAME_DERIVATIVE_STEP: f64 = 1e-5;
/// Relative tolerance of the s_plus identity -a2 - b2 s/3 + 2 c2 s^2/3 = 0.
pub const PARAM_IDENTITY_REL: f64 = 1e-12;
/// |tr Q| relative to |Q| for a valid tensor.
pub const TRACELESS_REL: f64 = 1e-14;
/// w -> Q -> w round trip.
pub const W_ROUND_TRIP: f64 = 1e-13;
/// Lower bound slack for the bulk potential, f_bulk >= -BULK_NONNEG.
pub const BULK_NONNEG: f64 = 1e-12;
/// Closed-form checks that are exact up to a few roundings.
pub const EXACT: f64 = 1e-12;

/// Default scaled-gradient tolerance for the radial minimiser.
pub const RADIAL_GRADIENT: f64 = 1e-8;
/// ODE residual of a converged radial profile, in units of s_plus.
pub const ODE_RESIDUAL_REL: f64 = 1e-6;
/// Analytic gradient against central differences, radial energy.
pub const RADIAL_GRADIENT_FD_REL: f64 = 1e-6;
/// Finite-difference step for the radial gradient check, in units of s_plus.
pub const RADIAL_FD_STEP_REL: f64 = 1e-6;
/// Slack on the maximum principle |w|^2 <= (2/3) s_plus^2.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-6;
/// Node-wise distance between the +w3 and -w3 minimisers, units of s_plus.
pub const Z2_PAIRING_REL: f64 = 1e-6;
/// Observed order of the energy under grid halving.
pub const REFINEMENT_ORDER: f64 = 1.8;

/// Default scaled-gradient tolerance for the disk minimiser.
pub const DISK_GRADIENT: f64 = 1e-9;
/// Analytic gradient against central differences, disk energy.
pub const DISK_GRADIENT_FD_REL: f64 = 1e-5;
/// Lift of a radial profile: disk energy vs radial energy.
pub const DISK_REDUCTION_REL: f64 = 1e-10;
/// Disk energy under a discrete rotation of the arrays.
pub const ROTATION_INVARIANCE_REL: f64 = 1e-12;
/// Energy drift of a lifted critical point after 100 descent iterations.
pub const FIXED_POINT_DRIFT: f64 = 1e-10;
/// Multistart agreement with one radial profile, units of s_plus.
pub const MULTISTART_NODEWISE_REL: f64 = 1e-4;
/// so2 defect relative to the field norm.
pub const SO2_DEFECT_REL: f64 = 1e-6;
/// z2 defect relative to the field norm needed to call a field escaped.
pub const ESCAPE_DEFECT_REL: f64 = 1e-2;
/// Mean angular variance of a symmetric minimiser.
pub const ANGULAR_VARIANCE: f64 = 1e-8;

/// Reconstruction of Q from (psi, P).
pub const DECOMPOSITION_RECONSTRUCT: f64 = 1e-10;
/// decompose followed by reconstruct on random fields.
pub const DECOMPOSITION_ROUND_TRIP: f64 = 1e-9;
/// |Pi(P)| and |[P, Q_*]| for a normal field.
pub const NORMALITY: f64 = 1e-10;
/// Default in-neighbourhood radius, units of s_plus (Frobenius sup norm).
pub const NEIGHBOURHOOD_RADIUS_REL: f64 = 0.5;
/// Smallest admissible v . n_* in the decomposition.
pub const MIN_ALIGNMENT: f64 = 0.5;
/// Quadrature of the Dirichlet energy of the harmonic limit.
pub const HARMONIC_ENERGY_REL: f64 = 5e-3;
/// Sphere-norm identity of the harmonic-limit profiles.
pub const SPHERE_NORM: f64 = 1e-12;
/// Tangent check of the projection, built by finite differences.
pub const TANGENT_FD: f64 = 1e-8;

/// Unconstrained L_par ground state: |lambda_1| bound.
pub const L_PAR_ZERO: f64 = 5e-3;
/// Correlation of the L_par ground state with n_3.
pub const L_PAR_CORRELATION: f64 = 0.999;
/// Constrained L_par ground state lower bound at k = 2.
pub const L_PAR_CONSTRAINED_MIN: f64 = 0.05;
/// Eigen-residual bound relative to the operator norm estimate.
pub const EIGEN_RESIDUAL_REL: f64 = 1e-8;
/// Numerical nonnegativity of a Hessian eigenvalue.
pub const HESSIAN_NONNEG: f64 = 1e-6;
/// Symmetry of the finite-difference Hessian.
pub const FD_HESSIAN_SYMMETRY: f64 = 1e-7;
/// Linearity of the finite-difference Hessian-vector product.
pub const FD_HESSIAN_LINEARITY: f64 = 1e-8;
/// Base of the finite-difference Hessian step, h = step (1 + |base|_inf).
pub const FD_HESSIAN_STEP: f64 = 1e-5;
/// Rayleigh quotient of a witness against its Ritz value.
pub const RAYLEIGH_MATCH_REL: f64 = 1e-6;

/// Endpoints of a path against the minimisers.
pub const PATH_ENDPOINT: f64 = 1e-8;
/// Discrete conformal invariance of the inverted annulus.
pub const CONFORMAL_REL: f64 = 1e-2;
/// Variation of the explicit-path maximum across radii.
pub const PATH_MAX_VARIATION_REL: f64 = 0.10;
/// Required growth of alpha_R over the same radii.
pub const ALPHA_GROWTH: f64 = 2.0;
/// Default scaled-gradient tolerance of the climbing image.
pub const SADDLE_GRADIENT: f64 = 1e-7;

/// alpha_R / ln R must reach this fraction of its limit at R = 1e4.
pub const ALPHA_RATIO_FRACTION: f64 = 0.65;
/// Fitted odd-k slope against (pi/2) s_plus^2.
pub const ODD_K_SLOPE_REL: f64 = 0.15;
/// Range of the k = 2 minimal energies relative to their mean.
pub const EVEN_K_RANGE_REL: f64 = 0.05;
/// Odd-k slope against the alpha_R slope at k = 1.
pub const SLOPE_MATCH_REL: f64 = 0.10;
