//! Plain collapsed-Gibbs LDA over per-user documents, used as the comparison
//! point for held-out perplexity.
//!
//! A user's document is the concatenation of all their posts across every
//! network, in canonical order.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::corpus::Corpus;
use crate::math::{draw_categorical, ln};
use crate::sampler::ConditionalWeights;
use crate::{seeded_rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaConfig {
    pub num_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iters: usize,
    pub seed: u64,
}

/// Point estimates of a trained LDA model.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub num_topics: usize,
    pub vocab: usize,
    pub alpha: f64,
    pub beta: f64,
    /// `[d][k]`, one document per corpus user.
    pub theta: Vec<f64>,
    /// `[k][w]`.
    pub phi: Vec<f64>,
}

impl LdaModel {
    pub fn num_docs(&self) -> usize {
        self.theta.len() / self.num_topics
    }

    pub fn theta_row(&self, doc: usize) -> &[f64] {
        &self.theta[doc * self.num_topics..(doc + 1) * self.num_topics]
    }

    pub fn phi_row(&self, topic: usize) -> &[f64] {
        &self.phi[topic * self.vocab..(topic + 1) * self.vocab]
    }
}

fn user_documents(corpus: &Corpus) -> Vec<Vec<u32>> {
    let mut docs = vec![Vec::new(); corpus.num_users()];
    for (u, _, post) in corpus.iter_posts() {
        docs[u].extend_from_slice(&post.tokens);
    }
    docs
}

/// Token-level LDA sampler state.
#[derive(Debug, Clone)]
pub struct LdaState {
    config: LdaConfig,
    vocab: usize,
    docs: Vec<Vec<u32>>,
    topics: Vec<Vec<u32>>,
    doc_topic: Vec<u32>,
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
}

impl LdaState {
    /// Uniform random topic for every token.
    pub fn initialize(corpus: &Corpus, config: LdaConfig) -> Result<Self> {
        if config.num_topics == 0 {
            return Err(Error::InvalidHyperparameter("K must be >= 1".into()));
        }
        if !(config.alpha > 0.0 && config.beta > 0.0) {
            return Err(Error::InvalidHyperparameter(
                "alpha and beta must be > 0".into(),
            ));
        }
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus("cannot train LDA on an empty corpus"));
        }
        let k = config.num_topics;
        let v = corpus.vocab_size();
        let docs = user_documents(corpus);
        let mut rng = seeded_rng(config.seed);
        let topics: Vec<Vec<u32>> = docs
            .iter()
            .map(|d| d.iter().map(|_| rng.random_range(0..k as u32)).collect())
            .collect();
        let mut state = Self {
            config,
            vocab: v,
            doc_topic: vec![0; docs.len() * k],
            topic_word: vec![0; k * v],
            topic_total: vec![0; k],
            docs,
            topics,
        };
        for d in 0..state.docs.len() {
            for i in 0..state.docs[d].len() {
                state.apply(d, i, 1);
            }
        }
        Ok(state)
    }

    fn apply(&mut self, doc: usize, token: usize, delta: i32) {
        let k = self.config.num_topics;
        let z = self.topics[doc][token] as usize;
        let w = self.docs[doc][token] as usize;
        for cell in [
            &mut self.doc_topic[doc * k + z],
            &mut self.topic_word[z * self.vocab + w],
            &mut self.topic_total[z],
        ] {
            *cell = cell.wrapping_add_signed(delta);
        }
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn doc_len(&self, doc: usize) -> usize {
        self.docs[doc].len()
    }

    pub fn doc_tokens(&self, doc: usize) -> &[u32] {
        &self.docs[doc]
    }

    pub fn token_topics(&self, doc: usize) -> &[u32] {
        &self.topics[doc]
    }

    pub fn remove_token(&mut self, doc: usize, token: usize) {
        self.apply(doc, token, -1);
    }

    pub fn add_token(&mut self, doc: usize, token: usize, topic: u32) {
        self.topics[doc][token] = topic;
        self.apply(doc, token, 1);
    }

    fn fill_weights(&self, doc: usize, token: usize, out: &mut [f64]) {
        let k = self.config.num_topics;
        let w = self.docs[doc][token] as usize;
        let vb = self.vocab as f64 * self.config.beta;
        for (z, slot) in out.iter_mut().enumerate() {
            *slot = (f64::from(self.doc_topic[doc * k + z]) + self.config.alpha)
                * (f64::from(self.topic_word[z * self.vocab + w]) + self.config.beta)
                / (f64::from(self.topic_total[z]) + vb);
        }
    }

    /// Topic conditional of a token removed with
    /// [`remove_token`](Self::remove_token).
    pub fn conditional(&self, doc: usize, token: usize) -> ConditionalWeights {
        let mut weights = vec![0.0; self.config.num_topics];
        self.fill_weights(doc, token, &mut weights);
        ConditionalWeights { weights }
    }

    pub fn sweep<R: RngCore + ?Sized>(&mut self, rng: &mut R) {
        let mut weights = vec![0.0; self.config.num_topics];
        for doc in 0..self.docs.len() {
            for token in 0..self.docs[doc].len() {
                self.remove_token(doc, token);
                self.fill_weights(doc, token, &mut weights);
                let z = draw_categorical(&weights, rng) as u32;
                self.add_token(doc, token, z);
            }
        }
    }

    pub fn model(&self) -> LdaModel {
        let LdaConfig {
            num_topics: k,
            alpha,
            beta,
            ..
        } = self.config;
        let mut theta = Vec::with_capacity(self.doc_topic.len());
        for (d, row) in self.doc_topic.chunks_exact(k).enumerate() {
            let denom = self.docs[d].len() as f64 + k as f64 * alpha;
            theta.extend(row.iter().map(|&c| (f64::from(c) + alpha) / denom));
        }
        let mut phi = Vec::with_capacity(self.topic_word.len());
        let vb = self.vocab as f64 * beta;
        for (z, row) in self.topic_word.chunks_exact(self.vocab).enumerate() {
            let denom = f64::from(self.topic_total[z]) + vb;
            phi.extend(row.iter().map(|&c| (f64::from(c) + beta) / denom));
        }
        LdaModel {
            num_topics: k,
            vocab: self.vocab,
            alpha,
            beta,
            theta,
            phi,
        }
    }
}

pub fn train_lda(corpus: &Corpus, config: LdaConfig) -> Result<LdaModel> {
    let mut state = LdaState::initialize(corpus, config)?;
    let mut rng = seeded_rng(config.seed);
    rng.set_stream(1);
    for _ in 0..config.iters {
        state.sweep(&mut rng);
    }
    Ok(state.model())
}

/// Per-token perplexity with `p(w | d) = Σ_k theta[d][k] phi[k][w]`, where
/// held-out document `d` is user `d`'s held-out posts.
pub fn lda_perplexity(model: &LdaModel, heldout: &Corpus) -> Result<f64> {
    if heldout.num_users() != model.num_docs() || heldout.vocab_size() != model.vocab {
        return Err(Error::ShapeMismatch(
            "held-out users or vocabulary differ from the LDA model".into(),
        ));
    }
    let mut log_lik = 0.0;
    let mut n = 0usize;
    for (u, _, post) in heldout.iter_posts() {
        let theta = model.theta_row(u);
        for &w in &post.tokens {
            let p: f64 = (0..model.num_topics)
                .map(|k| theta[k] * model.phi[k * model.vocab + w as usize])
                .sum();
            log_lik += ln(p);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoHeldoutTokens);
    }
    Ok(crate::math::exp(-log_lik / n as f64))
}
