use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// Every variant maps onto a stable machine-readable [`Error::code`] so
/// front ends can report failures without parsing messages.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("homogeneous potentials with alpha >= 2 have no bound non-circular orbits (alpha = {alpha})")]
    NoNonCircularOrbits { alpha: f64 },

    #[error("state outside the domain: {0}")]
    Domain(&'static str),

    #[error("kinetic Hessian is singular where p = A(t, x)")]
    DegenerateMomentum,

    #[error("configuration not supported: {0}")]
    Unsupported(&'static str),

    #[error("collision: |x| = {radius:e} fell below the floor at t = {t}")]
    Collision { t: f64, radius: f64 },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("integration exceeded {max_steps} steps")]
    TooManySteps { max_steps: usize },

    #[error("no bound orbit for h = {h}, L = {l}")]
    NoBoundOrbit { h: f64, l: f64 },

    #[error("orbit is circular (double turning point) for h = {h}, L = {l}")]
    CircularDegenerate { h: f64, l: f64 },

    #[error("quadrature did not converge (last relative change {change:e})")]
    Quadrature { change: f64 },

    #[error("target apsidal angle {target} outside scanned range [{lo}, {hi}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("root finding stagnated after {iterations} iterations")]
    RootStagnation { iterations: usize },

    #[error("orbit failed to close: residual {residual:e} exceeds {tolerance:e}")]
    ClosureFailed { residual: f64, tolerance: f64 },

    #[error("chart (h, L) -> (I1, I2) is singular")]
    ChartSingular,

    #[error("gradient of K0 vanishes")]
    ZeroGradient,

    #[error("monodromy symplectic residual {residual:e} exceeds {limit:e}")]
    SymplecticResidual { residual: f64, limit: f64 },

    #[error("shooting Jacobian is singular at eps = 0: the unperturbed orbit lies on a manifold of periodic solutions")]
    SingularAtZero,

    #[error("Newton iteration stagnated: residual {residual:e} after {iterations} iterations")]
    NewtonStagnation { residual: f64, iterations: usize },

    #[error("Levenberg-Marquardt damping left the admissible range")]
    DampingFloor,

    #[error("no orbit at the requested energy was found near the seed (energy residual {residual:e})")]
    EnergyInfeasible { residual: f64 },

    #[error("routes disagree on the {problem} verdict")]
    RouteDisagreement { problem: &'static str },
}

impl Error {
    /// Stable code used in machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "INVALID_PARAMETER",
            Error::NoNonCircularOrbits { .. } => "ORBIT_RANGE",
            Error::Domain(_) => "DOMAIN",
            Error::DegenerateMomentum => "DEGENERATE_MOMENTUM",
            Error::Unsupported(_) => "UNSUPPORTED",
            Error::Collision { .. } => "COLLISION",
            Error::StepSizeUnderflow { .. } => "STEP_UNDERFLOW",
            Error::TooManySteps { .. } => "TOO_MANY_STEPS",
            Error::NoBoundOrbit { .. } => "NO_BOUND_ORBIT",
            Error::CircularDegenerate { .. } => "CIRCULAR_DEGENERATE",
            Error::Quadrature { .. } => "QUADRATURE",
            Error::TargetOutOfRange { .. } => "TARGET_OUT_OF_RANGE",
            Error::RootStagnation { .. } => "ROOT_STAGNATION",
            Error::ClosureFailed { .. } => "CLOSURE_FAILED",
            Error::ChartSingular => "CHART_SINGULAR",
            Error::ZeroGradient => "ZERO_GRADIENT",
            Error::SymplecticResidual { .. } => "SYMPLECTIC_RESIDUAL",
            Error::SingularAtZero => "SINGULAR_AT_ZERO",
            Error::NewtonStagnation { .. } => "NEWTON_STAGNATION",
            Error::DampingFloor => "DAMPING_FLOOR",
            Error::EnergyInfeasible { .. } => "ENERGY_INFEASIBLE",
            Error::RouteDisagreement { .. } => "ROUTE_DISAGREEMENT",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
