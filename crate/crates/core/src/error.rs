//! Error type shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("singular configuration: particles {0} and {1} at distance {2:.3e}")]
    SingularConfiguration(usize, usize, f64),

    #[error("unknown particle id {0}")]
    UnknownId(usize),

    #[error("classification inconsistency at particle {id}: best registration deviation {deviation:.6} exceeds eps_max {eps_max:.6}")]
    ClassificationInconsistency {
        id: usize,
        deviation: f64,
        eps_max: f64,
    },

    #[error("embedding obstruction at lattice site {site:?}: {reason}")]
    EmbeddingObstruction { site: [i64; 3], reason: String },

    #[error("tuning failure: {0}")]
    TuningFailure(String),

    #[error("infeasible potential parameters: violates {0}")]
    Infeasible(String),

    #[error("trust region violated: {0}")]
    TrustRegion(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
