//! Error types shared across the library.

use thiserror::Error;

/// Errors raised by chart evaluation (metric, inverse, Christoffels).
#[derive(Debug, Clone, Error)]
pub enum ChartError {
    #[error("point ({0}, {1}, {2}) lies outside the chart box")]
    OutsideBox(f64, f64, f64),
    #[error("point too close to the chart boundary for a finite-difference stencil (margin {margin})")]
    StencilMargin { margin: f64 },
    #[error("metric is near-singular at the evaluation point (condition estimate {cond:.3e})")]
    NearSingular { cond: f64 },
}

/// Errors raised by the metric catalog constructor.
#[derive(Debug, Clone, Error)]
pub enum CatalogError {
    #[error("unknown manifold id `{0}`; known ids: euclidean, h2xr, e-kappa-tau, nil3, smooth-nonanalytic-product")]
    UnknownName(String),
    #[error("parameter `{name}` = {value} out of range for `{entry}`: {reason}")]
    BadParameter {
        entry: String,
        name: String,
        value: f64,
        reason: String,
    },
    #[error("unexpected parameter `{name}` for `{entry}`")]
    UnexpectedParameter { entry: String, name: String },
}

/// Errors raised by geodesic integration and parallel transport.
#[derive(Debug, Clone, Error)]
pub enum GeodesicError {
    #[error("geodesic left the chart box at arclength {exit_s:.6}")]
    LeftChart { exit_s: f64 },
    #[error("step count {0} is below the minimum of 16")]
    TooFewSteps(usize),
    #[error("initial velocity is not unit: |v|_g = {0}")]
    NotUnitSpeed(f64),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// Errors raised while building a Fermi chart.
#[derive(Debug, Clone, Error)]
pub enum FermiError {
    #[error("seed normal is not unit and orthogonal to the geodesic (defect {0:.3e})")]
    BadSeedNormal(f64),
    #[error("embedding fails the injectivity check at eps = {eps}; retry with eps = {}", eps / 2.0)]
    NotInjective { eps: f64 },
    #[error("arc half-length {arc:.4} is shorter than the requested eps {eps:.4}")]
    ArcTooShort { arc: f64, eps: f64 },
    #[error("resolution {0} must be odd and at least 5")]
    BadResolution(usize),
    #[error("fermi chart was deserialized without its ambient manifold; exact re-integration unavailable")]
    DetachedAmbient,
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// Errors raised by the isometry catalog.
#[derive(Debug, Clone, Error)]
pub enum IsometryError {
    #[error("Mobius parameters do not map the disk to itself (|center| = {0} >= 1)")]
    BadMobius(f64),
    #[error("geodesic spec not covered by the catalog for `{chart}`: {reason}")]
    UnsupportedSpec { chart: String, reason: String },
    #[error("fermi-coordinate inverse did not converge at the sampled point")]
    InverseDiverged,
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// Errors raised while assembling the minimal-graph operator.
#[derive(Debug, Clone, Error)]
pub enum OperatorError {
    #[error("induced metric is not positive definite at node {node:?} (graph degenerate)")]
    Degenerate { node: (usize, usize) },
    #[error("tilt factor W^2 = {0} is not positive")]
    NonPositiveTilt(f64),
    #[error("normal has N3 = {0} <= 0")]
    DownwardNormal(f64),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// Errors raised by the Dirichlet solver.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("grid resolution {0} is below the minimum of 17 per axis")]
    GridTooCoarse(usize),
    #[error("Newton iteration diverged after {iterations} iterations (last residual {last:.3e})")]
    Diverged {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },
    #[error("linear system is singular at Newton step {0}")]
    SingularSystem(usize),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// Errors raised by reflection/extension grid operations.
#[derive(Debug, Clone, Error)]
pub enum ExtensionError {
    #[error("boundary row is not a geodesic trace: max |u(x1, 0)| = {0:.3e}")]
    NotGeodesicBoundary(f64),
    #[error("grids are incompatible: {0}")]
    GridMismatch(String),
    #[error("axis rows disagree by {0:.3e}")]
    AxisMismatch(f64),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Errors raised by the regularity probes.
#[derive(Debug, Clone, Error)]
pub enum ProbeError {
    #[error("field does not vanish on the flat boundary: max |w(y1, 0)| = {0:.3e}")]
    NotVanishing(f64),
    #[error("probe region radius {0:.3e} resolves no grid nodes")]
    RegionTooSmall(f64),
    #[error("boundary extension differs across vertical sequences by {0:.3e}; bounded-gradient hypothesis violated")]
    SequenceMismatch(f64),
}
