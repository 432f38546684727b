use thiserror::Error;

/// Errors raised by the solvers, geometry routines and the front-end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("open surface: {0}")]
    OpenSurface(String),

    #[error("degenerate element (area {area:e} m^2)")]
    DegenerateElement { area: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("pressure solve did not converge after {iterations} iterations (last relative residual {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        residual_history: Vec<f64>,
    },

    #[error("singular boundary system (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("boundary solve residual {residual:e} above tolerance")]
    InaccurateSolve { residual: f64 },

    #[error("surface collision: out of supported regime ({pairs} intersecting triangle pairs)")]
    SurfaceCollision { pairs: usize },

    #[error("time step {dt:e} s exceeds the surface advection limit {limit:e} s")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("narrow band coverage gap at voxel {0:?}")]
    CoverageGap([i32; 3]),

    #[error("insufficient oscillation: {crossings} zero crossings")]
    InsufficientOscillation { crossings: usize },

    #[error("dry probe at x={x}, z={z}")]
    DryProbe { x: f64, z: f64 },

    #[error("config line {line}: `{key}`: {msg}")]
    Config { line: usize, key: String, msg: String },

    #[error("unknown validation suite `{0}`")]
    UnknownSuite(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::UnknownSuite(_) => 2,
            Error::NonConvergence { .. }
            | Error::SingularSystem { .. }
            | Error::InaccurateSolve { .. }
            | Error::CoverageGap(_)
            | Error::StepTooLarge { .. } => 3,
            Error::SurfaceCollision { .. }
            | Error::OpenSurface(_)
            | Error::DegenerateElement { .. }
            | Error::InvalidMesh(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
