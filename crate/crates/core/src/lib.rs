//! Collapsed Gibbs inference for a multi-network topic model.
//!
//! Users post short texts on several social networks. Every post carries a
//! single topic, and every token is emitted by one of three sources selected
//! by a per-token switch: a global topic-word distribution shared by all
//! networks, a network-local distribution for the same topic, or a corpus-wide
//! background distribution. The crate recovers per-user topic preferences,
//! per-(user, topic) network preferences, and all word distributions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI, and
//! multi-chain orchestration live in the `msnt` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod corpus;
mod error;
pub mod evaluation;
pub mod generator;
pub mod math;
pub mod model;
pub mod sampler;

pub use error::{Error, Result};

pub use corpus::{split_holdout, Corpus, CorpusBuilder, Post, Split, Vocabulary};
pub use model::{
    estimate_parameters, init_state, recount, CountTables, Hyperparameters, LatentAssignments,
    PosteriorEstimates,
};
pub use sampler::{train, ConditionalWeights, Diagnostics, EstimateMode, GibbsState, TrainConfig};

/// RNG used for every seeded operation in the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the crate RNG from an integer seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
