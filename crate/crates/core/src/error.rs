use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty corpus: {0}")]
    EmptyCorpus(&'static str),
    #[error("duplicate post_id {post_id:?} for user {user:?} on network {network:?}")]
    DuplicatePost {
        user: String,
        network: String,
        post_id: String,
    },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no in-vocabulary tokens in held-out corpus")]
    NoHeldoutTokens,
    #[error("index out of range: {0}")]
    OutOfRange(String),
}
