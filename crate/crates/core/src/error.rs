use thiserror::Error;

/// Errors raised across the laboratory. Variants that correspond to a violated
/// structural hypothesis name that hypothesis in their message.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TeigError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficient matrix is not symmetric (relative asymmetry {asymmetry:.3e}, at r = {at:.6})")]
    NonSymmetric { asymmetry: f64, at: f64 },

    #[error("ellipticity bound violated: {quantity} = {value:.6e} outside [1/Lambda, Lambda] with Lambda = {bound} (at r = {at:.6})")]
    EllipticityViolation {
        quantity: String,
        value: f64,
        bound: f64,
        at: f64,
    },

    #[error("boundary contrast condition sigma1 != sigma2 violated: |sigma1 - sigma2| = {contrast:.3e} < floor {floor:.3e}")]
    ContrastViolation { contrast: f64, floor: f64 },

    #[error("lambda must be nonzero")]
    ZeroLambda,

    #[error("accuracy loss in {context}: estimated relative error {estimate:.3e}")]
    AccuracyLoss { context: String, estimate: f64 },

    #[error("lambda = {re} + {im}i lies outside the wedge |Im lambda| >= {gamma} |lambda| (ratio {ratio:.4})")]
    WedgeViolation {
        re: f64,
        im: f64,
        ratio: f64,
        gamma: f64,
    },

    #[error("degenerate contrast: sigma1 and sigma2 coincide, the Cauchy system is not solvable")]
    DegenerateContrast,

    #[error("contour passes through (or too close to) a zero near radius {radius:.6e}")]
    ContourThroughZero { radius: f64 },

    #[error("phase tracking did not stabilise on {context}")]
    PhaseTrackingUnstable { context: String },

    #[error("root refinement did not converge near {re} + {im}i")]
    NonConvergence { re: f64, im: f64 },

    #[error("spectrum is empty")]
    EmptySpectrum,

    #[error("radial mode solvers need an isotropic coefficient a(r) I")]
    UnsupportedAnisotropy,

    #[error("discrete system is singular (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("rank test ambiguous: singular values {sigma_keep:.3e} / {sigma_drop:.3e} show no clear gap")]
    RankTestAmbiguous { sigma_keep: f64, sigma_drop: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("quadrature did not converge: {context} (error estimate {estimate:.3e})")]
    QuadratureNotConverged { context: String, estimate: f64 },

    #[error("I - gamma T^(k+1) is not invertible (condition estimate {condition:.3e})")]
    NotInModifiedResolventSet { condition: f64 },

    #[error("profile error: {0}")]
    Profile(String),
}

pub type Result<T> = std::result::Result<T, TeigError>;
