use thiserror::Error;

/// Errors produced by model construction and evaluation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("singular model: {0}")]
    Singular(String),

    #[error("non-singular model: {0}")]
    NonSingular(String),

    #[error("branch point ordering failed: {0}")]
    BranchOrdering(String),

    #[error("accuracy target missed: {message} (achieved {achieved:.3e})")]
    Accuracy { message: String, achieved: f64 },

    #[error("pole: {0}")]
    Pole(String),

    #[error("branch selection failed: {0}")]
    Branch(String),

    #[error("point too close to the critical curve: {0}")]
    BoundaryAmbiguous(String),

    #[error("search failed: {0}")]
    SearchFailure(String),

    #[error("removable singularity: {0}")]
    RemovableSingularity(String),

    #[error("no closed form: {0}")]
    NoClosedForm(String),
}

pub type Result<T> = std::result::Result<T, Error>;
