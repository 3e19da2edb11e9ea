use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected_rows}×{expected_cols}, got {rows}×{cols}")]
    Shape { expected_rows: usize, expected_cols: usize, rows: usize, cols: usize },

    #[error("non-differentiable point: regularization is zero and the density has exponent {exponent} < 2 at a kink")]
    NonDifferentiable { exponent: f64 },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("grid span too small for the inner minimization: minimum found on the boundary of |z| <= {span}; increase the span")]
    SpanTooSmall { span: f64 },

    #[error("limit not resolved; possible subsequence dependence ({0})")]
    LimitNotResolved(String),

    #[error("empty slit: truncation radius {0} must exceed the unit hole radius")]
    EmptySlit(f64),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("slit unresolved: element size {h} too large for truncation radius {radius}")]
    SlitUnresolved { h: f64, radius: f64 },

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("field does not match mesh: {0}")]
    FieldMismatch(String),

    #[error("invalid boundary condition: {0}")]
    BoundaryCondition(String),

    #[error("invalid solver options: {0}")]
    SolverOptions(String),

    #[error("density/field blow-up: non-finite energy during line search")]
    BlowUp,

    #[error("capacity degenerate (infinite-extent potential): p = {p} must be below the dimension {d}")]
    DegenerateCapacity { d: usize, p: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid cell problem: {0}")]
    CellSpec(String),

    #[error("extrapolation needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("non-monotone truncation; check solver convergence (value rose from {previous} to {next})")]
    NonMonotone { previous: f64, next: f64 },

    #[error("not a thin-film-dominant regime: delta/eps does not vanish")]
    NotThinFilm,

    #[error("ell undefined: r/delta does not converge")]
    EllUndefined,

    #[error("invalid sequences: {0}")]
    Sequences(String),

    #[error("interfacial table range exceeded: |z| = {requested} outside [{min}, {max}]")]
    TableRange { requested: f64, min: f64, max: f64 },

    #[error("invalid film geometry: {0}")]
    FilmGeometry(String),

    #[error("mismatched meshes: {0}")]
    MismatchedMeshes(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
