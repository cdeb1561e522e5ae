use thiserror::Error;

use crate::discretize::ConstraintFamily;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range for knot vector of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("knot {u} outside the curve domain [{lo}, {hi}]")]
    OutOfDomain { u: f64, lo: f64, hi: f64 },

    #[error("derivative order {order} exceeds curve degree {degree}")]
    DerivativeOrder { order: usize, degree: usize },

    #[error("degenerate tangent at u = {u} (norm {norm:e})")]
    DegenerateTangent { u: f64, norm: f64 },

    #[error("duplicate or near-coincident points at index {index} (distance {distance:e})")]
    DuplicatePoints { index: usize, distance: f64 },

    #[error("singular interpolation system at pivot {0}")]
    SingularSystem(usize),

    #[error("no feasible angular velocity for linear speed {v} m/s")]
    InfeasibleSpeed { v: f64 },

    #[error("no feasible linear velocity for angular rate {omega} rad/s")]
    InfeasibleAngular { omega: f64 },

    #[error("boundary conditions violate the feasibility assumption: {0}")]
    BoundaryInfeasible(String),

    #[error("problem infeasible ({family})")]
    Infeasible { family: ConstraintFamily },

    #[error("solver stopped after {0} iterations without converging")]
    MaxIterations(usize),

    #[error("segment {index} stalls: v_k + v_(k+1) = {sum:e}")]
    StalledSegment { index: usize, sum: f64 },

    #[error("oracle grid too large: n * M^2 = {0:e} exceeds 1e8")]
    OracleGuard(f64),

    #[error("no feasible path through the velocity grid")]
    OracleNoPath,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the inputs are well-formed but no admissible speed profile exists
    /// (or none was found).
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleSpeed { .. }
                | Error::InfeasibleAngular { .. }
                | Error::BoundaryInfeasible(_)
                | Error::Infeasible { .. }
                | Error::MaxIterations(_)
                | Error::OracleNoPath
        )
    }
}
