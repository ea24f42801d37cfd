use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is singular (determinant {det:e})")]
    Singular { det: f64 },
    #[error("matrix is not expansive: eigenvalue modulus {modulus} <= 1")]
    NotExpansive { modulus: f64 },
    #[error("series truncation {truncation} leaves tail bound {tail:e} >= 1e-12")]
    TruncationTooSmall { truncation: usize, tail: f64 },
    #[error("filter tail {tail:e} exceeds tolerance outside the half period")]
    PeriodTooSmall { tail: f64 },
    #[error("dilation to scale {scale} is not resolvable on the grid ({detail})")]
    AliasingRisk { scale: i32, detail: String },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("scale {scale} is not resolvable: {detail}")]
    ScaleUnresolvable { scale: i32, detail: String },
    #[error("nested dyadic cubes need a diagonal integer dilation compatible with the grid: {0}")]
    NotNested(String),
    #[error("frame profile leaves frequency {frequency:?} uncovered")]
    CoverageGap { frequency: Vec<f64> },
    #[error("field energy outside the covered band: fraction {fraction:e}")]
    SpectrumUncovered { fraction: f64 },
    #[error("sampling lattice at level {level} is not aligned with the grid: {detail}")]
    LatticeMisaligned { level: i32, detail: String },
    #[error("parameter inadmissible: {0}")]
    ParameterInadmissible(String),
    #[error("degenerate division: {0}")]
    DivisionDegenerate(String),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
