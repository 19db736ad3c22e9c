use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("effective angle {angle} exceeds the unaliased range +/-{limit}")]
    SpatialAliasing { angle: f64, limit: f64 },

    #[error("direction cosines ({cy}, {cz}) lie outside the unit disc")]
    InvalidDirection { cy: f64, cz: f64 },

    #[error("signal subspace is degenerate (condition number {condition:e})")]
    SubspaceDegenerate { condition: f64 },

    #[error("both AoA pairs are equidistant from the known inter-surface direction")]
    AmbiguousDisambiguation,

    #[error("bearings from the two sensing surfaces are parallel")]
    ParallelBearings,

    #[error("inconsistent geometry: {0}")]
    InconsistentGeometry(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
