//! Hyperparameters, latent assignments, sufficient statistics, and posterior
//! point estimates.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::Corpus;
use crate::{seeded_rng, Error, Result};

/// Token drawn from the topic's global word distribution.
pub const GLOBAL: u8 = 0;
/// Token drawn from the topic's network-local word distribution.
pub const LOCAL: u8 = 1;
/// Token drawn from the background word distribution.
pub const BACKGROUND: u8 = 2;

/// Symmetric Dirichlet/Beta priors of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    pub num_topics: usize,
    /// Prior weight per topic on user topic preferences.
    pub alpha: f64,
    pub beta_global: f64,
    pub beta_local: f64,
    pub beta_background: f64,
    /// Prior weight per network on (user, topic) network preferences.
    pub lambda: f64,
    /// `(global, local)` prior on the per-(network, topic) switch.
    pub tau_switch: [f64; 2],
    /// `(non-background, background)` prior on the background switch.
    pub tau_background: [f64; 2],
}

impl Hyperparameters {
    /// `alpha = 50 / K`, all word and network priors `0.01`, switch priors
    /// `(0.5, 0.5)`.
    pub fn with_defaults(num_topics: usize) -> Self {
        Self {
            num_topics,
            alpha: 50.0 / num_topics.max(1) as f64,
            beta_global: 0.01,
            beta_local: 0.01,
            beta_background: 0.01,
            lambda: 0.01,
            tau_switch: [0.5, 0.5],
            tau_background: [0.5, 0.5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_topics == 0 {
            return Err(Error::InvalidHyperparameter("K must be >= 1".into()));
        }
        let weights = [
            ("alpha", self.alpha),
            ("beta_global", self.beta_global),
            ("beta_local", self.beta_local),
            ("beta_background", self.beta_background),
            ("lambda", self.lambda),
            ("tau_switch.global", self.tau_switch[0]),
            ("tau_switch.local", self.tau_switch[1]),
            ("tau_background.topic", self.tau_background[0]),
            ("tau_background.background", self.tau_background[1]),
        ];
        for (name, w) in weights {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidHyperparameter(alloc::format!(
                    "{name} must be finite and > 0, got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// Table dimensions: users, networks, topics, vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub users: usize,
    pub networks: usize,
    pub topics: usize,
    pub vocab: usize,
}

impl Dims {
    pub fn of(corpus: &Corpus, num_topics: usize) -> Self {
        Self {
            users: corpus.num_users(),
            networks: corpus.num_networks(),
            topics: num_topics,
            vocab: corpus.vocab_size(),
        }
    }
}

/// Per-post topics and per-token switches, flattened in the corpus'
/// canonical post order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LatentAssignments {
    pub post_topic: Vec<u32>,
    /// One of [`GLOBAL`], [`LOCAL`], [`BACKGROUND`] per token.
    pub token_switch: Vec<u8>,
}

impl LatentAssignments {
    pub fn check_shape(&self, corpus: &Corpus, num_topics: usize) -> Result<()> {
        if self.post_topic.len() != corpus.num_posts()
            || self.token_switch.len() != corpus.num_tokens()
        {
            return Err(Error::ShapeMismatch(alloc::format!(
                "assignments cover {} posts / {} tokens, corpus has {} / {}",
                self.post_topic.len(),
                self.token_switch.len(),
                corpus.num_posts(),
                corpus.num_tokens()
            )));
        }
        if self.post_topic.iter().any(|&z| z as usize >= num_topics) {
            return Err(Error::OutOfRange("post topic >= K".into()));
        }
        if self.token_switch.iter().any(|&x| x > BACKGROUND) {
            return Err(Error::OutOfRange("switch value > 2".into()));
        }
        Ok(())
    }
}

/// Sufficient statistics of the collapsed sampler.
///
/// Layouts are row-major in the order the field docs give. The two `*_total`
/// vectors cache row sums of the topic-word tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTables {
    pub dims: Dims,
    /// `[u][k]`: posts of user `u` with topic `k`.
    pub user_topic: Vec<u32>,
    /// `[u][k][s]`: posts of user `u` with topic `k` on network `s`.
    pub user_topic_network: Vec<u32>,
    /// `[k][w]`: global-switch tokens of word `w` under topic `k`.
    pub global_topic_word: Vec<u32>,
    /// `[s][k][w]`: local-switch tokens on network `s`.
    pub local_topic_word: Vec<u32>,
    /// `[w]`: background tokens.
    pub background_word: Vec<u32>,
    /// `[s][k][x]` for `x` in {global, local}.
    pub switch_global_local: Vec<u32>,
    /// `[non-background, background]` token counts.
    pub switch_background: [u32; 2],
    /// `[k]`: row sums of `global_topic_word`.
    pub global_topic_total: Vec<u32>,
    /// `[s][k]`: row sums of `local_topic_word`.
    pub local_topic_total: Vec<u32>,
}

impl CountTables {
    pub fn zeros(dims: Dims) -> Self {
        let Dims {
            users: u,
            networks: s,
            topics: k,
            vocab: v,
        } = dims;
        Self {
            dims,
            user_topic: vec![0; u * k],
            user_topic_network: vec![0; u * k * s],
            global_topic_word: vec![0; k * v],
            local_topic_word: vec![0; s * k * v],
            background_word: vec![0; v],
            switch_global_local: vec![0; s * k * 2],
            switch_background: [0; 2],
            global_topic_total: vec![0; k],
            local_topic_total: vec![0; s * k],
        }
    }

    #[inline]
    pub fn ut(&self, user: usize, topic: usize) -> usize {
        user * self.dims.topics + topic
    }

    #[inline]
    pub fn utn(&self, user: usize, topic: usize, network: usize) -> usize {
        (user * self.dims.topics + topic) * self.dims.networks + network
    }

    #[inline]
    pub fn nk(&self, network: usize, topic: usize) -> usize {
        network * self.dims.topics + topic
    }

    /// Adds (`delta = 1`) or removes (`delta = -1`) one token's contribution.
    #[inline]
    pub(crate) fn apply_token(
        &mut self,
        topic: usize,
        network: usize,
        word: usize,
        switch: u8,
        delta: i32,
    ) {
        if switch == BACKGROUND {
            bump(&mut self.background_word[word], delta);
            bump(&mut self.switch_background[1], delta);
        } else {
            self.apply_topic_word(topic, network, word, switch, delta);
            bump(&mut self.switch_background[0], delta);
        }
    }

    /// The topic-dependent part of a non-background token: its topic-word
    /// count and its global/local switch count. No-op for background tokens.
    #[inline]
    pub(crate) fn apply_topic_word(
        &mut self,
        topic: usize,
        network: usize,
        word: usize,
        switch: u8,
        delta: i32,
    ) {
        let v = self.dims.vocab;
        let nk = self.nk(network, topic);
        match switch {
            GLOBAL => {
                bump(&mut self.global_topic_word[topic * v + word], delta);
                bump(&mut self.global_topic_total[topic], delta);
                bump(&mut self.switch_global_local[nk * 2], delta);
            }
            LOCAL => {
                bump(&mut self.local_topic_word[nk * v + word], delta);
                bump(&mut self.local_topic_total[nk], delta);
                bump(&mut self.switch_global_local[nk * 2 + 1], delta);
            }
            _ => {}
        }
    }

    /// Adds or removes a post's topic-level counts (not its tokens).
    #[inline]
    pub(crate) fn apply_post(&mut self, user: usize, network: usize, topic: usize, delta: i32) {
        let ut = self.ut(user, topic);
        let utn = self.utn(user, topic, network);
        bump(&mut self.user_topic[ut], delta);
        bump(&mut self.user_topic_network[utn], delta);
    }

    /// Total tokens per switch value `[global, local, background]`.
    pub fn switch_totals(&self) -> [u64; 3] {
        let mut out = [0u64; 3];
        for pair in self.switch_global_local.chunks_exact(2) {
            out[0] += u64::from(pair[0]);
            out[1] += u64::from(pair[1]);
        }
        out[2] = u64::from(self.switch_background[1]);
        out
    }
}

#[inline]
fn bump(cell: &mut u32, delta: i32) {
    *cell = cell.wrapping_add_signed(delta);
    debug_assert!(*cell != u32::MAX, "count went negative");
}

/// Random initial state: topics uniform on `[0, K)`, switches uniform on
/// `{0, 1, 2}`.
pub fn init_state(
    corpus: &Corpus,
    hp: &Hyperparameters,
    seed: u64,
) -> Result<(LatentAssignments, CountTables)> {
    hp.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus("cannot initialize on an empty corpus"));
    }
    let mut rng = seeded_rng(seed);
    let k = hp.num_topics;
    let mut assignments = LatentAssignments {
        post_topic: Vec::with_capacity(corpus.num_posts()),
        token_switch: Vec::with_capacity(corpus.num_tokens()),
    };
    for (_, _, post) in corpus.iter_posts() {
        assignments.post_topic.push(rng.random_range(0..k as u32));
        for _ in &post.tokens {
            assignments.token_switch.push(rng.random_range(0..3u8));
        }
    }
    let counts = recount(corpus, hp.num_topics, &assignments)?;
    Ok((assignments, counts))
}

/// Rebuilds every count table from scratch.
pub fn recount(
    corpus: &Corpus,
    num_topics: usize,
    assignments: &LatentAssignments,
) -> Result<CountTables> {
    assignments.check_shape(corpus, num_topics)?;
    let mut counts = CountTables::zeros(Dims::of(corpus, num_topics));
    let mut cursor = 0;
    for ((u, s, post), &z) in corpus.iter_posts().zip(&assignments.post_topic) {
        let z = z as usize;
        counts.apply_post(u, s, z, 1);
        for &w in &post.tokens {
            counts.apply_token(z, s, w as usize, assignments.token_switch[cursor], 1);
            cursor += 1;
        }
    }
    Ok(counts)
}

/// Posterior-mean point estimates of every model distribution.
///
/// All tables are row-major; every innermost row is a probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEstimates {
    pub dims: Dims,
    /// `[u][k]` user topic preference.
    pub theta: Vec<f64>,
    /// `[k][w]` global topic-word distributions.
    pub phi_global: Vec<f64>,
    /// `[s][k][w]` local topic-word distributions.
    pub phi_local: Vec<f64>,
    /// `[w]` background word distribution.
    pub phi_background: Vec<f64>,
    /// `[u][k][s]` network preference of user `u` for topic `k`.
    pub rho: Vec<f64>,
    /// `[s][k][global, local]`.
    pub sigma_switch: Vec<f64>,
    /// `[non-background, background]`.
    pub sigma_background: [f64; 2],
}

impl PosteriorEstimates {
    pub fn theta_row(&self, user: usize) -> &[f64] {
        let k = self.dims.topics;
        &self.theta[user * k..(user + 1) * k]
    }

    pub fn phi_global_row(&self, topic: usize) -> &[f64] {
        let v = self.dims.vocab;
        &self.phi_global[topic * v..(topic + 1) * v]
    }

    pub fn phi_local_row(&self, network: usize, topic: usize) -> &[f64] {
        let v = self.dims.vocab;
        let start = (network * self.dims.topics + topic) * v;
        &self.phi_local[start..start + v]
    }

    pub fn rho_row(&self, user: usize, topic: usize) -> &[f64] {
        let s = self.dims.networks;
        let start = (user * self.dims.topics + topic) * s;
        &self.rho[start..start + s]
    }

    pub fn sigma_switch_row(&self, network: usize, topic: usize) -> &[f64] {
        let start = (network * self.dims.topics + topic) * 2;
        &self.sigma_switch[start..start + 2]
    }

    /// Element-wise mean of several estimates with identical dimensions.
    pub fn mean_of(snapshots: &[PosteriorEstimates]) -> Option<PosteriorEstimates> {
        let first = snapshots.first()?;
        let mut out = first.clone();
        let n = snapshots.len() as f64;
        fn accumulate(dst: &mut [f64], src: &[f64]) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
        for snap in &snapshots[1..] {
            accumulate(&mut out.theta, &snap.theta);
            accumulate(&mut out.phi_global, &snap.phi_global);
            accumulate(&mut out.phi_local, &snap.phi_local);
            accumulate(&mut out.phi_background, &snap.phi_background);
            accumulate(&mut out.rho, &snap.rho);
            accumulate(&mut out.sigma_switch, &snap.sigma_switch);
            accumulate(&mut out.sigma_background, &snap.sigma_background);
        }
        for table in [
            &mut out.theta,
            &mut out.phi_global,
            &mut out.phi_local,
            &mut out.phi_background,
            &mut out.rho,
            &mut out.sigma_switch,
        ] {
            table.iter_mut().for_each(|x| *x /= n);
        }
        out.sigma_background.iter_mut().for_each(|x| *x /= n);
        Some(out)
    }
}

/// Fills `out` with `(count + prior) / Σ (count + prior)` row by row.
fn smoothed_rows(counts: &[u32], row_len: usize, prior: f64, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(counts.len());
    for row in counts.chunks_exact(row_len) {
        let total: u64 = row.iter().map(|&c| u64::from(c)).sum();
        let denom = total as f64 + row_len as f64 * prior;
        out.extend(row.iter().map(|&c| (f64::from(c) + prior) / denom));
    }
}

/// Posterior-mean estimates from the count tables.
pub fn estimate_parameters(hp: &Hyperparameters, counts: &CountTables) -> PosteriorEstimates {
    let d = counts.dims;
    let mut est = PosteriorEstimates {
        dims: d,
        theta: Vec::new(),
        phi_global: Vec::new(),
        phi_local: Vec::new(),
        phi_background: Vec::new(),
        rho: Vec::new(),
        sigma_switch: Vec::with_capacity(counts.switch_global_local.len()),
        sigma_background: [0.0; 2],
    };
    smoothed_rows(&counts.user_topic, d.topics, hp.alpha, &mut est.theta);
    smoothed_rows(
        &counts.global_topic_word,
        d.vocab,
        hp.beta_global,
        &mut est.phi_global,
    );
    smoothed_rows(
        &counts.local_topic_word,
        d.vocab,
        hp.beta_local,
        &mut est.phi_local,
    );
    smoothed_rows(
        &counts.background_word,
        d.vocab,
        hp.beta_background,
        &mut est.phi_background,
    );
    smoothed_rows(
        &counts.user_topic_network,
        d.networks,
        hp.lambda,
        &mut est.rho,
    );
    for pair in counts.switch_global_local.chunks_exact(2) {
        let a = f64::from(pair[0]) + hp.tau_switch[0];
        let b = f64::from(pair[1]) + hp.tau_switch[1];
        est.sigma_switch.push(a / (a + b));
        est.sigma_switch.push(b / (a + b));
    }
    let a = f64::from(counts.switch_background[0]) + hp.tau_background[0];
    let b = f64::from(counts.switch_background[1]) + hp.tau_background[1];
    est.sigma_background = [a / (a + b), b / (a + b)];
    est
}
