//! Held-out perplexity and likelihood, PMI topic coherence, Jensen-Shannon
//! similarity reports, top-word tables, and topic matching for recovery runs.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Corpus;
use crate::math::{ln, log2, log_sum_exp};
use crate::model::PosteriorEstimates;
use crate::{Error, Result};

/// Jensen-Shannon divergence in bits, so the value lies in `[0, 1]`.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "jsd over lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(jsd_unchecked(p, q))
}

fn jsd_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            total += 0.5 * a * log2(a / m);
        }
        if b > 0.0 {
            total += 0.5 * b * log2(b / m);
        }
    }
    total.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PerplexityOptions {
    /// Multiply each topic's term by the network preference `rho[u][k][s]`.
    pub include_rho: bool,
}

fn check_dims(est: &PosteriorEstimates, corpus: &Corpus) -> Result<()> {
    let d = est.dims;
    if corpus.num_users() != d.users
        || corpus.num_networks() != d.networks
        || corpus.vocab_size() != d.vocab
    {
        return Err(Error::ShapeMismatch(alloc::format!(
            "corpus is {}x{}x{} (users x networks x vocab), estimates are {}x{}x{}",
            corpus.num_users(),
            corpus.num_networks(),
            corpus.vocab_size(),
            d.users,
            d.networks,
            d.vocab
        )));
    }
    Ok(())
}

/// `ln P(post)` under the one-topic-per-post mixture, with word probability
/// `σB·φB(w) + (1-σB)·(σ0·φp_k(w) + σ1·φs_hk(w))`.
pub fn post_log_prob(
    est: &PosteriorEstimates,
    user: usize,
    network: usize,
    tokens: &[u32],
    options: &PerplexityOptions,
    scratch: &mut Vec<f64>,
) -> f64 {
    let [p_topic, p_background] = est.sigma_background;
    scratch.clear();
    for k in 0..est.dims.topics {
        let mut lp = ln(est.theta_row(user)[k]);
        if options.include_rho {
            lp += ln(est.rho_row(user, k)[network]);
        }
        let sigma = est.sigma_switch_row(network, k);
        let global = est.phi_global_row(k);
        let local = est.phi_local_row(network, k);
        for &w in tokens {
            let w = w as usize;
            let p = p_background * est.phi_background[w]
                + p_topic * (sigma[0] * global[w] + sigma[1] * local[w]);
            lp += ln(p);
        }
        scratch.push(lp);
    }
    log_sum_exp(scratch)
}

/// Sum of post log-probabilities (natural log). Zero for an empty corpus.
pub fn likelihood(
    est: &PosteriorEstimates,
    heldout: &Corpus,
    options: &PerplexityOptions,
) -> Result<f64> {
    check_dims(est, heldout)?;
    let mut scratch = Vec::with_capacity(est.dims.topics);
    Ok(heldout
        .iter_posts()
        .map(|(u, s, post)| post_log_prob(est, u, s, &post.tokens, options, &mut scratch))
        .sum())
}

/// `exp(-likelihood / token count)`.
pub fn perplexity(
    est: &PosteriorEstimates,
    heldout: &Corpus,
    options: &PerplexityOptions,
) -> Result<f64> {
    let n = heldout.num_tokens();
    if n == 0 {
        return Err(Error::NoHeldoutTokens);
    }
    let ll = likelihood(est, heldout, options)?;
    Ok(crate::math::exp(-ll / n as f64))
}

/// Which word distribution a report or metric reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Global { topic: usize },
    Local { network: usize, topic: usize },
    Background,
}

impl Scope {
    pub fn distribution<'a>(&self, est: &'a PosteriorEstimates) -> Result<&'a [f64]> {
        let d = est.dims;
        match *self {
            Scope::Global { topic } if topic < d.topics => Ok(est.phi_global_row(topic)),
            Scope::Local { network, topic } if topic < d.topics && network < d.networks => {
                Ok(est.phi_local_row(network, topic))
            }
            Scope::Background => Ok(&est.phi_background),
            other => Err(Error::OutOfRange(alloc::format!("{other:?}"))),
        }
    }
}

/// Indices of the `n` largest entries, descending, ties broken by index.
pub fn ranked(dist: &[f64], n: usize) -> Vec<(u32, f64)> {
    let mut order: Vec<u32> = (0..dist.len() as u32).collect();
    order.sort_by(|&a, &b| {
        dist[b as usize]
            .total_cmp(&dist[a as usize])
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .take(n)
        .map(|w| (w, dist[w as usize]))
        .collect()
}

/// Top `n` words of one distribution with their probabilities.
pub fn top_words(est: &PosteriorEstimates, scope: Scope, n: usize) -> Result<Vec<(u32, f64)>> {
    Ok(ranked(scope.distribution(est)?, n))
}

/// Which topic-word distributions feed the PMI score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PmiSource {
    #[default]
    Global,
    Local {
        network: usize,
    },
}

/// Mean pairwise PMI of each topic's top words, averaged over topics.
///
/// Occurrence probabilities are fractions of reference posts containing a
/// word (or both words). Each topic's pair sum is divided by `T (T - 1)`
/// where `T` is the number of words used. A pair involving a word that never
/// occurs in the reference contributes zero.
pub fn pmi_score(
    est: &PosteriorEstimates,
    reference: &Corpus,
    top_n: usize,
    source: PmiSource,
) -> Result<f64> {
    const EPS: f64 = 1e-12;
    if top_n < 2 {
        return Err(Error::InvalidConfig(
            "PMI needs at least 2 top words".into(),
        ));
    }
    if reference.vocab_size() != est.dims.vocab {
        return Err(Error::ShapeMismatch(
            "reference vocabulary size differs".into(),
        ));
    }
    let n_posts = reference.num_posts();
    if n_posts == 0 {
        return Err(Error::EmptyCorpus("PMI reference corpus has no posts"));
    }
    let d = n_posts as f64;
    let k_topics = est.dims.topics;
    let mut slot_of = vec![u32::MAX; est.dims.vocab];
    let mut present: Vec<u32> = Vec::new();
    let mut total = 0.0;
    for k in 0..k_topics {
        let dist = match source {
            PmiSource::Global => est.phi_global_row(k),
            PmiSource::Local { network } => {
                if network >= est.dims.networks {
                    return Err(Error::OutOfRange(alloc::format!("network {network}")));
                }
                est.phi_local_row(network, k)
            }
        };
        let words: Vec<u32> = ranked(dist, top_n)
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(w, _)| w)
            .collect();
        let t = words.len();
        if t < 2 {
            continue;
        }
        for (i, &w) in words.iter().enumerate() {
            slot_of[w as usize] = i as u32;
        }
        let mut single = vec![0u32; t];
        let mut pair = vec![0u32; t * t];
        for (_, _, post) in reference.iter_posts() {
            present.clear();
            present.extend(
                post.tokens
                    .iter()
                    .map(|&w| slot_of[w as usize])
                    .filter(|&s| s != u32::MAX),
            );
            present.sort_unstable();
            present.dedup();
            for (a, &i) in present.iter().enumerate() {
                single[i as usize] += 1;
                for &j in &present[a + 1..] {
                    pair[i as usize * t + j as usize] += 1;
                }
            }
        }
        let mut topic_sum = 0.0;
        for i in 0..t {
            for j in i + 1..t {
                let (pi, pj) = (f64::from(single[i]) / d, f64::from(single[j]) / d);
                if pi == 0.0 || pj == 0.0 {
                    continue;
                }
                let pij = f64::from(pair[i * t + j]) / d;
                topic_sum += ln((pij + EPS) / (pi * pj));
            }
        }
        total += topic_sum / (t * (t - 1)) as f64;
        for &w in &words {
            slot_of[w as usize] = u32::MAX;
        }
    }
    Ok(total / k_topics as f64)
}

/// Counts over 20 bins of width 0.05 covering `[0, 1]`; 1.0 falls in the last.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Histogram {
    pub counts: [u64; 20],
}

impl Histogram {
    pub const BIN_WIDTH: f64 = 0.05;

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut h = Histogram::default();
        for v in values {
            let bin = libm::floor(v / Self::BIN_WIDTH) as usize;
            h.counts[bin.min(19)] += 1;
        }
        h
    }

    /// `(low, high, count)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| {
            (
                i as f64 * Self::BIN_WIDTH,
                (i + 1) as f64 * Self::BIN_WIDTH,
                c,
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPairJsd {
    pub topic: usize,
    pub network_a: usize,
    pub network_b: usize,
    pub jsd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalGlobalJsd {
    pub topic: usize,
    pub network: usize,
    pub jsd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JsdReport {
    pub pairwise_local: Vec<LocalPairJsd>,
    pub local_vs_global: Vec<LocalGlobalJsd>,
    pub pairwise_histogram: Histogram,
    pub local_vs_global_histogram: Histogram,
}

impl JsdReport {
    pub fn mean_local_vs_global(&self) -> f64 {
        mean(self.local_vs_global.iter().map(|e| e.jsd))
    }

    pub fn mean_pairwise_local(&self) -> f64 {
        mean(self.pairwise_local.iter().map(|e| e.jsd))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// How similar each topic's local distributions are across networks and to
/// the topic's global distribution. With fewer than two networks the
/// pairwise part is empty.
pub fn jsd_report(est: &PosteriorEstimates) -> JsdReport {
    let d = est.dims;
    let mut pairwise_local = Vec::new();
    let mut local_vs_global = Vec::new();
    for topic in 0..d.topics {
        for a in 0..d.networks {
            local_vs_global.push(LocalGlobalJsd {
                topic,
                network: a,
                jsd: jsd_unchecked(est.phi_local_row(a, topic), est.phi_global_row(topic)),
            });
            for b in a + 1..d.networks {
                pairwise_local.push(LocalPairJsd {
                    topic,
                    network_a: a,
                    network_b: b,
                    jsd: jsd_unchecked(est.phi_local_row(a, topic), est.phi_local_row(b, topic)),
                });
            }
        }
    }
    JsdReport {
        pairwise_histogram: Histogram::from_values(pairwise_local.iter().map(|e| e.jsd)),
        local_vs_global_histogram: Histogram::from_values(local_vs_global.iter().map(|e| e.jsd)),
        pairwise_local,
        local_vs_global,
    }
}

/// Greedy one-to-one pairing of estimated and true topics.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMatching {
    /// `estimated_to_truth[k]` is the true topic paired with estimated `k`.
    pub estimated_to_truth: Vec<usize>,
    /// JSD of each pair, indexed by estimated topic.
    pub jsd: Vec<f64>,
}

impl TopicMatching {
    pub fn mean_jsd(&self) -> f64 {
        mean(self.jsd.iter().copied())
    }

    /// `truth_to_estimated[t]`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.estimated_to_truth.len()];
        for (e, &t) in self.estimated_to_truth.iter().enumerate() {
            inv[t] = e;
        }
        inv
    }
}

/// Repeatedly pairs the unmatched (estimated, truth) rows with the globally
/// smallest JSD. Both inputs are `K x V` row-major.
pub fn match_topics(estimated: &[f64], truth: &[f64], vocab: usize) -> Result<TopicMatching> {
    if vocab == 0 || estimated.len() != truth.len() || !estimated.len().is_multiple_of(vocab) {
        return Err(Error::ShapeMismatch(alloc::format!(
            "cannot match {} against {} entries with V = {vocab}",
            estimated.len(),
            truth.len()
        )));
    }
    let k = estimated.len() / vocab;
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k);
    for e in 0..k {
        for t in 0..k {
            let d = jsd_unchecked(
                &estimated[e * vocab..(e + 1) * vocab],
                &truth[t * vocab..(t + 1) * vocab],
            );
            candidates.push((d, e, t));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut estimated_to_truth = vec![usize::MAX; k];
    let mut truth_taken = vec![false; k];
    let mut jsd = vec![0.0; k];
    for (d, e, t) in candidates {
        if estimated_to_truth[e] == usize::MAX && !truth_taken[t] {
            estimated_to_truth[e] = t;
            truth_taken[t] = true;
            jsd[e] = d;
        }
    }
    Ok(TopicMatching {
        estimated_to_truth,
        jsd,
    })
}

/// Top words for every topic and scope, and each user's favourite topics.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicReport {
    pub topics: Vec<TopicWords>,
    pub background: Vec<(u32, f64)>,
    pub users: Vec<UserPreferences>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicWords {
    pub topic: usize,
    pub global: Vec<(u32, f64)>,
    /// One list per network.
    pub local: Vec<Vec<(u32, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserPreferences {
    pub user: usize,
    /// `(topic, theta, rho over networks)`, descending by theta.
    pub top_topics: Vec<(usize, f64, Vec<f64>)>,
}

pub fn topic_report(est: &PosteriorEstimates, top_n: usize, user_topics: usize) -> TopicReport {
    let d = est.dims;
    let topics = (0..d.topics)
        .map(|topic| TopicWords {
            topic,
            global: ranked(est.phi_global_row(topic), top_n),
            local: (0..d.networks)
                .map(|s| ranked(est.phi_local_row(s, topic), top_n))
                .collect(),
        })
        .collect();
    let users = (0..d.users)
        .map(|user| UserPreferences {
            user,
            top_topics: ranked(est.theta_row(user), user_topics)
                .into_iter()
                .map(|(k, p)| (k as usize, p, est.rho_row(user, k as usize).to_vec()))
                .collect(),
        })
        .collect();
    TopicReport {
        topics,
        background: ranked(&est.phi_background, top_n),
        users,
    }
}
