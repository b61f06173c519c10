use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown shape `{0}` (expected ellipse, kite or disk)")]
    UnknownShape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("obstacle {index} intersects or touches the measurement circle")]
    ObstacleIntersectsMeasurement { index: usize },
    #[error("point ({x:.4}, {y:.4}) lies inside an obstacle")]
    PointInsideObstacle { x: f64, y: f64 },
    #[error("coincident points: distance {0:e}")]
    CoincidentPoints(f64),
    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),
    #[error("lag grid too short: half-width {have} < required {need}")]
    LagGridTooShort { have: f64, need: f64 },
    #[error("singular boundary-integral system at k = {k} (condition estimate {condition:e})")]
    SingularSystem { k: f64, condition: f64 },
    #[error("series did not converge within {0} terms")]
    SeriesNonConvergence(usize),
    #[error("empty frequency band")]
    EmptyBand,
    #[error("missing frequency solve for k = {0}")]
    MissingFrequency(f64),
    #[error("time grid mismatch: {0}")]
    GridMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("missing source index {0}")]
    MissingSource(usize),
    #[error("SVD failed: {0}")]
    Svd(String),
    #[error("zero operator")]
    ZeroOperator,
    #[error("missing input `{0}` in dataset")]
    MissingInput(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
