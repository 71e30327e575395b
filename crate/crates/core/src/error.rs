use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The level sets could not be resolved by the sub-cell triangulation.
    #[error("geometry resolution failure in cell {cell}: {reason}")]
    GeometryResolution { cell: usize, reason: String },

    #[error("geometry conflict in cell {cell}: both level sets vanish near ({x:.6}, {y:.6})")]
    GeometryConflict { cell: usize, x: f64, y: f64 },

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    /// Structural or numerical breakdown of the linear solver.
    #[error("solver failure: {reason}")]
    Solver {
        reason: String,
        pivot: Option<usize>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn solver(reason: impl Into<String>, pivot: Option<usize>) -> Self {
        Error::Solver {
            reason: reason.into(),
            pivot,
        }
    }

    /// True for failures that originate in the geometry pipeline.
    pub fn is_geometry(&self) -> bool {
        matches!(
            self,
            Error::GeometryResolution { .. } | Error::GeometryConflict { .. }
        )
    }
}
