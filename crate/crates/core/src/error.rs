use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("camera matrix is rank deficient (sigma_min/sigma_max = {0:.3e})")]
    RankDeficient(f64),
    #[error("point coincides with the camera center")]
    AtCenter,
    #[error("homography is singular")]
    Singular,
    #[error("not enough independent correspondences to estimate a homography")]
    InsufficientData,
    #[error("camera centers coincide")]
    CoincidentCenters,
    #[error("bilinear form does not have rank two")]
    NotRankTwo,
    #[error("fundamental forms are not compatible")]
    Incompatible,
    #[error("linear solve is ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("point does not lie on the quadric (|S(x)| = {0:.3e})")]
    NotOnQuadric(f64),
    #[error("lines are skew")]
    SkewLines,
    #[error("lines coincide")]
    CoincidentLines,
    #[error("fit is underdetermined (nullity {0})")]
    Underdetermined(usize),
    #[error("no quadric fits the points")]
    NoFit,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("point {0} lies on the residual locus and has no conjugate")]
    ResidualPoint(usize),
    #[error("conjugate images do not match (max residual {0:.3e})")]
    ImageMismatch(f64),
    #[error("invalid curve type: {0}")]
    InvalidType(String),
    #[error("retry budget exhausted: {0}")]
    RetryExhausted(String),
    #[error("no real points found on the sampled slices")]
    EmptySlice,
    #[error("the two quadrics do not span a pencil")]
    NotAPencil,
    #[error("line is a secant of the curve")]
    SecantLine,
    #[error("no real secant through the point")]
    NoRealSecant,
    #[error("point lies on the curve")]
    PointOnCurve,
    #[error("point is not on the curve (residual {0:.3e})")]
    NotOnCurve(f64),
    #[error("no real solution")]
    NoRealSolution,
    #[error("only {0} of 8 base points are real")]
    ComplexBasePoints(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
