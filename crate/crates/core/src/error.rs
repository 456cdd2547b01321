use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("columns are not orthonormal (max |QᵀQ - I| = {0:e})")]
    NotOrthonormal(f64),

    #[error("complement is empty")]
    EmptyComplement,

    #[error("target rank not identifiable: relative gap (σ_r - σ_r+1)/σ_1 = {relative_gap:e} at r = {r}")]
    RankNotIdentifiable { r: usize, relative_gap: f64 },

    #[error("singular value gap condition fails: σ_r(AW) = {sigma_r_aw}, σ_r+1(A) = {sigma_next}")]
    GapConditionFails { sigma_r_aw: f64, sigma_next: f64 },

    #[error("segment bound not applicable at k = {k}: α² - β² - min(z12², z21²) = {gap}")]
    SegmentInapplicable { k: usize, gap: f64 },

    #[error("pair is not in the sharpness regime: α² - β² - z12² - z21² = {0}")]
    NotSharpRegime(f64),

    #[error("sample covariance would be singular: {0}")]
    SingularCovariance(String),

    #[error("joint covariance is not positive definite (min eigenvalue bound {0:e})")]
    NotPositiveDefinite(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown study `{0}`")]
    UnknownStudy(String),

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
