use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("simulation diverged at substep {substep}{}", step.map(|s| format!(" (step {s})")).unwrap_or_default())]
    SimulationDiverged { substep: usize, step: Option<usize> },
    #[error("planning timed out after {elapsed_s:.3}s ({progress})")]
    PlanningTimeout { elapsed_s: f64, progress: String },
    #[error("planning infeasible: {0}")]
    PlanningInfeasible(String),
    #[error("goal pose in collision (penetration {penetration:.3e})")]
    GoalInCollision { penetration: f64 },
    #[error("generation failed: {0}")]
    GenerationFailed(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid_arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn invalid_geom<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidGeometry(msg.into()))
}
