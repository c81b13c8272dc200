use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Model parameters outside their validity region, or a malformed model description.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An argument outside an operation's domain (orders, ranges, parameter bounds).
    #[error("domain error: {0}")]
    Domain(String),

    /// A length/shape mismatch between related sequences.
    #[error("size error: {0}")]
    Size(String),

    /// The circulant spectrum kept genuinely negative eigenvalues after the retry policy
    /// was exhausted. Carries the last eigenvalue report so callers can decide whether to
    /// fall back to the truncated approximation.
    #[error(
        "embedding failed: min eigenvalue {min_eig:.6e} ({negative_count} genuinely negative of \
         {m_tilde}) after {doublings} size doubling(s)"
    )]
    EmbeddingFailure {
        m_tilde: usize,
        min_eig: f64,
        negative_count: usize,
        doublings: u32,
    },

    /// A numerical integrity check tripped, e.g. the eigenvalue transform of a supposedly
    /// Hermitian first row left an excessive imaginary residue.
    #[error("integrity check failed: {0}")]
    Integrity(String),

    /// Nothing usable remains (all eigenvalues non-positive, zero empirical variance, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
