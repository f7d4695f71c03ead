//! Collapsed Gibbs sampler.
//!
//! Each sweep visits posts in canonical order (users, networks, posts). For a
//! post it first resamples every token's switch with the token removed from
//! the counts, then resamples the post's topic with the whole post removed.
//!
//! The post-topic conditional multiplies per-word factors computed from counts
//! that exclude the entire post, with no rising-factorial correction for words
//! repeated inside the post. Posts are short, so the approximation is the
//! usual one for one-topic-per-post samplers.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::corpus::Corpus;
use crate::evaluation;
use crate::math::{draw_categorical, exp, ln};
use crate::model::{
    estimate_parameters, init_state, recount, CountTables, Hyperparameters, LatentAssignments,
    PosteriorEstimates, BACKGROUND, GLOBAL, LOCAL,
};
use crate::{seeded_rng, Error, Result, SeededRng};

/// Unnormalized conditional weights over a categorical domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalWeights {
    pub weights: Vec<f64>,
}

impl ConditionalWeights {
    pub fn domain_size(&self) -> usize {
        self.weights.len()
    }

    pub fn normalized(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }
}

/// Flattened view of a corpus in canonical post order.
#[derive(Debug, Clone)]
struct Layout {
    post_user: Vec<u32>,
    post_network: Vec<u32>,
    /// `post_start[p]..post_start[p + 1]` indexes `tokens`.
    post_start: Vec<usize>,
    tokens: Vec<u32>,
    user_posts: Vec<u32>,
}

impl Layout {
    fn new(corpus: &Corpus) -> Self {
        let mut layout = Layout {
            post_user: Vec::with_capacity(corpus.num_posts()),
            post_network: Vec::with_capacity(corpus.num_posts()),
            post_start: Vec::with_capacity(corpus.num_posts() + 1),
            tokens: Vec::with_capacity(corpus.num_tokens()),
            user_posts: vec![0; corpus.num_users()],
        };
        layout.post_start.push(0);
        for (u, s, post) in corpus.iter_posts() {
            layout.post_user.push(u as u32);
            layout.post_network.push(s as u32);
            layout.tokens.extend_from_slice(&post.tokens);
            layout.post_start.push(layout.tokens.len());
            layout.user_posts[u] += 1;
        }
        layout
    }
}

const PRODUCT_CHUNK: usize = 8;

/// Mutable sampler state: assignments plus the count tables that cache them.
#[derive(Debug, Clone)]
pub struct GibbsState {
    hp: Hyperparameters,
    layout: Layout,
    assignments: LatentAssignments,
    counts: CountTables,
    topic_buf: Vec<f64>,
}

impl GibbsState {
    /// Wraps existing assignments; the counts are rebuilt from them.
    pub fn new(
        corpus: &Corpus,
        hp: Hyperparameters,
        assignments: LatentAssignments,
    ) -> Result<Self> {
        hp.validate()?;
        let counts = recount(corpus, hp.num_topics, &assignments)?;
        Ok(Self::from_parts(corpus, hp, assignments, counts))
    }

    /// Random initialization, see [`init_state`].
    pub fn initialize(corpus: &Corpus, hp: Hyperparameters, seed: u64) -> Result<Self> {
        let (assignments, counts) = init_state(corpus, &hp, seed)?;
        Ok(Self::from_parts(corpus, hp, assignments, counts))
    }

    fn from_parts(
        corpus: &Corpus,
        hp: Hyperparameters,
        assignments: LatentAssignments,
        counts: CountTables,
    ) -> Self {
        Self {
            hp,
            layout: Layout::new(corpus),
            assignments,
            counts,
            topic_buf: vec![0.0; hp.num_topics],
        }
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hp
    }

    pub fn assignments(&self) -> &LatentAssignments {
        &self.assignments
    }

    pub fn counts(&self) -> &CountTables {
        &self.counts
    }

    pub fn num_posts(&self) -> usize {
        self.layout.post_user.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.layout.tokens.len()
    }

    pub fn post_len(&self, post: usize) -> usize {
        self.layout.post_start[post + 1] - self.layout.post_start[post]
    }

    pub fn estimates(&self) -> PosteriorEstimates {
        estimate_parameters(&self.hp, &self.counts)
    }

    pub fn into_parts(self) -> (LatentAssignments, CountTables) {
        (self.assignments, self.counts)
    }

    #[inline]
    fn token_ctx(&self, post: usize, token: usize) -> (usize, usize, usize, usize) {
        let flat = self.layout.post_start[post] + token;
        (
            flat,
            self.assignments.post_topic[post] as usize,
            self.layout.post_network[post] as usize,
            self.layout.tokens[flat] as usize,
        )
    }

    /// Removes one token's current switch from the counts.
    pub fn remove_token(&mut self, post: usize, token: usize) {
        let (flat, z, h, w) = self.token_ctx(post, token);
        let x = self.assignments.token_switch[flat];
        self.counts.apply_token(z, h, w, x, -1);
    }

    /// Sets a removed token's switch and adds it back to the counts.
    pub fn add_token(&mut self, post: usize, token: usize, switch: u8) {
        let (flat, z, h, w) = self.token_ctx(post, token);
        self.assignments.token_switch[flat] = switch;
        self.counts.apply_token(z, h, w, switch, 1);
    }

    #[inline]
    fn fill_switch_weights(&self, post: usize, token: usize, out: &mut [f64; 3]) {
        let (_, z, h, w) = self.token_ctx(post, token);
        let hp = &self.hp;
        let c = &self.counts;
        let v = c.dims.vocab as f64;
        let nk = c.nk(h, z);

        let n_topic = f64::from(c.switch_background[0]);
        let n_background = f64::from(c.switch_background[1]);
        let bg_denom = n_topic + n_background + hp.tau_background[0] + hp.tau_background[1];
        let p_topic = (n_topic + hp.tau_background[0]) / bg_denom;

        let n_global = f64::from(c.switch_global_local[nk * 2]);
        let n_local = f64::from(c.switch_global_local[nk * 2 + 1]);
        let sw_denom = n_global + n_local + hp.tau_switch[0] + hp.tau_switch[1];

        let global_word = (f64::from(c.global_topic_word[z * c.dims.vocab + w]) + hp.beta_global)
            / (f64::from(c.global_topic_total[z]) + v * hp.beta_global);
        let local_word = (f64::from(c.local_topic_word[nk * c.dims.vocab + w]) + hp.beta_local)
            / (f64::from(c.local_topic_total[nk]) + v * hp.beta_local);
        let background_word = (f64::from(c.background_word[w]) + hp.beta_background)
            / (n_background + v * hp.beta_background);

        out[GLOBAL as usize] = p_topic * (n_global + hp.tau_switch[0]) / sw_denom * global_word;
        out[LOCAL as usize] = p_topic * (n_local + hp.tau_switch[1]) / sw_denom * local_word;
        out[BACKGROUND as usize] =
            (n_background + hp.tau_background[1]) / bg_denom * background_word;
    }

    /// Switch conditional for a token that has been removed with
    /// [`remove_token`](Self::remove_token).
    pub fn conditional_word_switch(&self, post: usize, token: usize) -> ConditionalWeights {
        let mut out = [0.0; 3];
        self.fill_switch_weights(post, token, &mut out);
        ConditionalWeights {
            weights: out.to_vec(),
        }
    }

    fn apply_post(&mut self, post: usize, delta: i32) {
        let z = self.assignments.post_topic[post] as usize;
        let u = self.layout.post_user[post] as usize;
        let h = self.layout.post_network[post] as usize;
        self.counts.apply_post(u, h, z, delta);
        let range = self.layout.post_start[post]..self.layout.post_start[post + 1];
        for flat in range {
            let x = self.assignments.token_switch[flat];
            let w = self.layout.tokens[flat] as usize;
            self.counts.apply_topic_word(z, h, w, x, delta);
        }
    }

    /// Removes a post's topic and the topic-dependent counts of its
    /// non-background tokens.
    pub fn remove_post(&mut self, post: usize) {
        self.apply_post(post, -1);
    }

    /// Sets a removed post's topic and adds its counts back.
    pub fn add_post(&mut self, post: usize, topic: u32) {
        self.assignments.post_topic[post] = topic;
        self.apply_post(post, 1);
    }

    /// Writes `log weight - max log weight` for every topic into `out`, then
    /// exponentiates in place.
    fn fill_topic_weights(&self, post: usize, out: &mut [f64]) {
        let hp = &self.hp;
        let c = &self.counts;
        let d = c.dims;
        let v = d.vocab as f64;
        let u = self.layout.post_user[post] as usize;
        let h = self.layout.post_network[post] as usize;
        let range = self.layout.post_start[post]..self.layout.post_start[post + 1];
        let tokens = &self.layout.tokens[range.clone()];
        let switches = &self.assignments.token_switch[range];

        let mut n_global_tokens = 0.0;
        let mut n_local_tokens = 0.0;
        for &x in switches {
            match x {
                GLOBAL => n_global_tokens += 1.0,
                LOCAL => n_local_tokens += 1.0,
                _ => {}
            }
        }
        let other_posts = f64::from(self.layout.user_posts[u]) - 1.0;
        let theta_denom = ln(other_posts + d.topics as f64 * hp.alpha);
        let tau_sum = hp.tau_switch[0] + hp.tau_switch[1];

        let mut max = f64::NEG_INFINITY;
        for (k, slot) in out.iter_mut().enumerate() {
            let n_uk = f64::from(c.user_topic[c.ut(u, k)]);
            let n_ukh = f64::from(c.user_topic_network[c.utn(u, k, h)]);
            let mut lw = ln(n_uk + hp.alpha) - theta_denom + ln(n_ukh + hp.lambda)
                - ln(n_uk + d.networks as f64 * hp.lambda);

            let nk = c.nk(h, k);
            let n_global = f64::from(c.switch_global_local[nk * 2]);
            let n_local = f64::from(c.switch_global_local[nk * 2 + 1]);
            let ln_sw_denom = ln(n_global + n_local + tau_sum);
            if n_global_tokens > 0.0 {
                lw += n_global_tokens
                    * (ln(n_global + hp.tau_switch[0])
                        - ln_sw_denom
                        - ln(f64::from(c.global_topic_total[k]) + v * hp.beta_global));
            }
            if n_local_tokens > 0.0 {
                lw += n_local_tokens
                    * (ln(n_local + hp.tau_switch[1])
                        - ln_sw_denom
                        - ln(f64::from(c.local_topic_total[nk]) + v * hp.beta_local));
            }
            let global_row = &c.global_topic_word[k * d.vocab..(k + 1) * d.vocab];
            let local_row = &c.local_topic_word[nk * d.vocab..(nk + 1) * d.vocab];
            // Products of at most PRODUCT_CHUNK factors stay far from f64
            // overflow/underflow, so only one ln per chunk is needed.
            let mut product = 1.0;
            let mut in_product = 0;
            for (&w, &x) in tokens.iter().zip(switches) {
                let factor = match x {
                    GLOBAL => f64::from(global_row[w as usize]) + hp.beta_global,
                    LOCAL => f64::from(local_row[w as usize]) + hp.beta_local,
                    _ => continue,
                };
                product *= factor;
                in_product += 1;
                if in_product == PRODUCT_CHUNK || !(1e-150..=1e150).contains(&product) {
                    lw += ln(product);
                    product = 1.0;
                    in_product = 0;
                }
            }
            lw += ln(product);
            *slot = lw;
            max = max.max(lw);
        }
        for slot in out.iter_mut() {
            *slot = exp(*slot - max);
        }
    }

    /// Topic conditional for a post removed with
    /// [`remove_post`](Self::remove_post). Computed in log space and shifted
    /// so the largest weight is exactly one.
    pub fn conditional_post_topic(&self, post: usize) -> ConditionalWeights {
        let mut weights = vec![0.0; self.hp.num_topics];
        self.fill_topic_weights(post, &mut weights);
        ConditionalWeights { weights }
    }

    /// One full Gibbs sweep over the corpus.
    pub fn sweep<R: RngCore + ?Sized>(&mut self, rng: &mut R) {
        let mut switch_weights = [0.0; 3];
        let mut topic_weights = core::mem::take(&mut self.topic_buf);
        for post in 0..self.num_posts() {
            for token in 0..self.post_len(post) {
                self.remove_token(post, token);
                self.fill_switch_weights(post, token, &mut switch_weights);
                let x = draw_categorical(&switch_weights, rng) as u8;
                self.add_token(post, token, x);
            }
            self.remove_post(post);
            self.fill_topic_weights(post, &mut topic_weights);
            let z = draw_categorical(&topic_weights, rng) as u32;
            self.add_post(post, z);
        }
        self.topic_buf = topic_weights;
    }
}

/// How the final estimates are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    /// Estimates from the state after the last sweep.
    FinalState,
    /// Element-wise mean of estimates taken every `spacing` sweeps after
    /// burn-in, `snapshots` times.
    Average { snapshots: usize, spacing: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub max_iters: usize,
    pub burn_in: usize,
    pub estimate_mode: EstimateMode,
    pub seed: u64,
    /// Log every this many sweeps (plus the first and last); 0 disables.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            burn_in: 300,
            estimate_mode: EstimateMode::FinalState,
            seed: 20_200_101,
            log_every: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if let EstimateMode::Average { snapshots, spacing } = self.estimate_mode {
            if spacing == 0 || snapshots == 0 {
                return Err(Error::InvalidConfig(
                    "snapshot count and spacing must be >= 1".into(),
                ));
            }
            if self.burn_in >= self.max_iters {
                return Err(Error::InvalidConfig(alloc::format!(
                    "burn_in {} must be below max_iters {}",
                    self.burn_in,
                    self.max_iters
                )));
            }
            let last = self.burn_in + snapshots * spacing;
            if last > self.max_iters {
                return Err(Error::InvalidConfig(alloc::format!(
                    "last snapshot at sweep {last} exceeds max_iters {}",
                    self.max_iters
                )));
            }
        }
        Ok(())
    }
}

/// One diagnostics log point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPoint {
    pub iteration: usize,
    pub train_perplexity: f64,
    /// Fraction of tokens with switch global, local, background.
    pub switch_fractions: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub trace: Vec<LogPoint>,
    /// Training-set log-likelihood of the returned estimates.
    pub final_log_likelihood: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub estimates: PosteriorEstimates,
    pub diagnostics: Diagnostics,
    pub assignments: LatentAssignments,
    pub counts: CountTables,
}

fn log_point(state: &GibbsState, corpus: &Corpus, iteration: usize) -> LogPoint {
    let est = state.estimates();
    let train_perplexity =
        evaluation::perplexity(&est, corpus, &Default::default()).unwrap_or(f64::NAN);
    let totals = state.counts().switch_totals();
    let all = (totals[0] + totals[1] + totals[2]).max(1) as f64;
    LogPoint {
        iteration,
        train_perplexity,
        switch_fractions: [
            totals[0] as f64 / all,
            totals[1] as f64 / all,
            totals[2] as f64 / all,
        ],
    }
}

/// Runs the sampler from a seeded random start for `config.max_iters` sweeps.
///
/// `on_log` sees each diagnostics point as it is produced.
pub fn train_with_observer(
    corpus: &Corpus,
    hp: &Hyperparameters,
    config: &TrainConfig,
    mut on_log: impl FnMut(&LogPoint),
) -> Result<TrainOutput> {
    config.validate()?;
    let mut state = GibbsState::initialize(corpus, *hp, config.seed)?;
    let mut rng: SeededRng = seeded_rng(config.seed);
    // init_state consumed stream 0 of the same seed
    rng.set_stream(1);

    let mut diagnostics = Diagnostics::default();
    let mut snapshots = Vec::new();
    for iter in 1..=config.max_iters {
        state.sweep(&mut rng);
        diagnostics.sweeps = iter;
        if config.log_every > 0
            && (iter == 1 || iter % config.log_every == 0 || iter == config.max_iters)
        {
            let point = log_point(&state, corpus, iter);
            on_log(&point);
            diagnostics.trace.push(point);
        }
        if let EstimateMode::Average {
            snapshots: n,
            spacing,
        } = config.estimate_mode
        {
            if iter > config.burn_in
                && (iter - config.burn_in).is_multiple_of(spacing)
                && snapshots.len() < n
            {
                snapshots.push(state.estimates());
            }
        }
    }
    let estimates = match config.estimate_mode {
        EstimateMode::FinalState => state.estimates(),
        EstimateMode::Average { .. } => {
            PosteriorEstimates::mean_of(&snapshots).unwrap_or_else(|| state.estimates())
        }
    };
    diagnostics.final_log_likelihood =
        evaluation::likelihood(&estimates, corpus, &Default::default())?;
    let (assignments, counts) = state.into_parts();
    Ok(TrainOutput {
        estimates,
        diagnostics,
        assignments,
        counts,
    })
}

/// [`train_with_observer`] without an observer.
pub fn train(corpus: &Corpus, hp: &Hyperparameters, config: &TrainConfig) -> Result<TrainOutput> {
    train_with_observer(corpus, hp, config, |_| {})
}
