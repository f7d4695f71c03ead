//! Forward simulation of the generative process, for parameter-recovery
//! checks against known ground truth.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma};

use crate::corpus::{Corpus, Post, Vocabulary};
use crate::math::{exp, ln, unit_f64};
use crate::model::{
    Dims, Hyperparameters, LatentAssignments, PosteriorEstimates, BACKGROUND, GLOBAL, LOCAL,
};
use crate::{seeded_rng, Error, Result};

/// How the network of each post is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    /// `s ~ rho[u][z]`; a user writes `posts_per_user_network * S` posts.
    Faithful,
    /// Exactly `posts_per_user_network` posts per (user, network); `rho` is
    /// not used.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PostLength {
    Fixed(usize),
    /// `1 + Geometric` with the given mean (>= 1).
    Geometric {
        mean: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub users: usize,
    pub networks: usize,
    pub vocab: usize,
    pub posts_per_user_network: usize,
    pub length: PostLength,
    pub mode: GenMode,
    /// Generating priors; `num_topics` is K.
    pub hyper: Hyperparameters,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        let ok = self.users >= 1
            && self.networks >= 1
            && self.vocab >= 1
            && self.posts_per_user_network >= 1
            && match self.length {
                PostLength::Fixed(n) => n >= 1,
                PostLength::Geometric { mean } => mean >= 1.0 && mean.is_finite(),
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "generator counts and post length must all be >= 1".into(),
            ))
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            users: self.users,
            networks: self.networks,
            topics: self.hyper.num_topics,
            vocab: self.vocab,
        }
    }
}

/// True distributions behind a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub params: PosteriorEstimates,
    pub hyper: Hyperparameters,
    /// False when posts were spread over networks by quota instead of `rho`.
    pub rho_used: bool,
}

/// `ln` of a `Gamma(shape, 1)` draw, stable for small shapes.
fn log_gamma_draw<R: RngCore + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("positive shape");
        ln(g.sample(rng))
    } else {
        // G(a) = G(a + 1) * U^(1/a)
        let g = Gamma::new(shape + 1.0, 1.0).expect("positive shape");
        let u = 1.0 - unit_f64(rng);
        ln(g.sample(rng)) + ln(u) / shape
    }
}

/// Appends one draw from a symmetric Dirichlet of dimension `n` to `out`.
pub fn sample_dirichlet<R: RngCore + ?Sized>(
    concentration: f64,
    n: usize,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    let start = out.len();
    let mut max = f64::NEG_INFINITY;
    for _ in 0..n {
        let lg = log_gamma_draw(concentration, rng);
        max = max.max(lg);
        out.push(lg);
    }
    let row = &mut out[start..];
    let mut total = 0.0;
    for x in row.iter_mut() {
        *x = exp(*x - max);
        total += *x;
    }
    row.iter_mut().for_each(|x| *x /= total);
}

fn sample_pair<R: RngCore + ?Sized>(prior: [f64; 2], rng: &mut R) -> [f64; 2] {
    let a = log_gamma_draw(prior[0], rng);
    let b = log_gamma_draw(prior[1], rng);
    let m = a.max(b);
    let (ea, eb) = (exp(a - m), exp(b - m));
    [ea / (ea + eb), eb / (ea + eb)]
}

/// Draws every model distribution from its prior.
pub fn sample_ground_truth(gen: &GenConfig) -> Result<GroundTruth> {
    gen.validate()?;
    let hp = gen.hyper;
    let d = gen.dims();
    let mut rng = seeded_rng(gen.seed);
    let mut params = PosteriorEstimates {
        dims: d,
        theta: Vec::with_capacity(d.users * d.topics),
        phi_global: Vec::with_capacity(d.topics * d.vocab),
        phi_local: Vec::with_capacity(d.networks * d.topics * d.vocab),
        phi_background: Vec::with_capacity(d.vocab),
        rho: Vec::with_capacity(d.users * d.topics * d.networks),
        sigma_switch: Vec::with_capacity(d.networks * d.topics * 2),
        sigma_background: [0.0; 2],
    };
    sample_dirichlet(
        hp.beta_background,
        d.vocab,
        &mut rng,
        &mut params.phi_background,
    );
    params.sigma_background = sample_pair(hp.tau_background, &mut rng);
    for _ in 0..d.topics {
        sample_dirichlet(hp.beta_global, d.vocab, &mut rng, &mut params.phi_global);
    }
    for _ in 0..d.networks * d.topics {
        sample_dirichlet(hp.beta_local, d.vocab, &mut rng, &mut params.phi_local);
        params
            .sigma_switch
            .extend_from_slice(&sample_pair(hp.tau_switch, &mut rng));
    }
    for _ in 0..d.users * d.topics {
        sample_dirichlet(hp.lambda, d.networks, &mut rng, &mut params.rho);
    }
    for _ in 0..d.users {
        sample_dirichlet(hp.alpha, d.topics, &mut rng, &mut params.theta);
    }
    Ok(GroundTruth {
        params,
        hyper: hp,
        rho_used: gen.mode == GenMode::Faithful,
    })
}

/// Cumulative sums of consecutive rows, for binary-search draws.
struct CdfTable {
    row_len: usize,
    cdf: Vec<f64>,
}

impl CdfTable {
    fn new(rows: &[f64], row_len: usize) -> Self {
        let mut cdf = Vec::with_capacity(rows.len());
        for row in rows.chunks_exact(row_len) {
            let mut acc = 0.0;
            cdf.extend(row.iter().map(|p| {
                acc += p;
                acc
            }));
        }
        Self { row_len, cdf }
    }

    fn draw<R: RngCore + ?Sized>(&self, row: usize, rng: &mut R) -> usize {
        let cdf = &self.cdf[row * self.row_len..(row + 1) * self.row_len];
        let target = unit_f64(rng) * cdf[self.row_len - 1];
        cdf.partition_point(|&c| c <= target).min(self.row_len - 1)
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    let width = alloc::format!("{}", n.saturating_sub(1)).len();
    (0..n)
        .map(|i| alloc::format!("{prefix}{i:0width$}"))
        .collect()
}

struct Draft {
    topic: u32,
    tokens: Vec<u32>,
    switches: Vec<u8>,
}

/// Samples a corpus and its true latent assignments from `truth`.
pub fn generate_corpus(
    truth: &GroundTruth,
    gen: &GenConfig,
) -> Result<(Corpus, LatentAssignments)> {
    gen.validate()?;
    let p = &truth.params;
    let d = p.dims;
    if d != gen.dims() {
        return Err(Error::ShapeMismatch(
            "ground truth and generator config disagree on dimensions".into(),
        ));
    }
    let mut rng = seeded_rng(gen.seed);
    // keep corpus draws independent of the ground-truth stream
    rng.set_stream(1);

    let theta = CdfTable::new(&p.theta, d.topics);
    let rho = CdfTable::new(&p.rho, d.networks);
    let global = CdfTable::new(&p.phi_global, d.vocab);
    let local = CdfTable::new(&p.phi_local, d.vocab);
    let background = CdfTable::new(&p.phi_background, d.vocab);

    let users = names("u", d.users);
    let networks = names("net", d.networks);
    let vocabulary = Vocabulary::new(names("w", d.vocab))?;

    let mut grouped: Vec<Vec<Vec<Draft>>> = Vec::with_capacity(d.users);
    for u in 0..d.users {
        let mut per_network: Vec<Vec<Draft>> = (0..d.networks).map(|_| Vec::new()).collect();
        let total = gen.posts_per_user_network * d.networks;
        for i in 0..total {
            let z = theta.draw(u, &mut rng);
            let s = match gen.mode {
                GenMode::Faithful => rho.draw(u * d.topics + z, &mut rng),
                GenMode::Balanced => i / gen.posts_per_user_network,
            };
            let len = match gen.length {
                PostLength::Fixed(n) => n,
                PostLength::Geometric { mean } => {
                    let q = 1.0 - 1.0 / mean;
                    if q <= 0.0 {
                        1
                    } else {
                        let u01 = 1.0 - unit_f64(&mut rng);
                        1 + libm::floor(ln(u01) / ln(q)) as usize
                    }
                }
            };
            let sigma = p.sigma_switch_row(s, z);
            let nk = s * d.topics + z;
            let mut draft = Draft {
                topic: z as u32,
                tokens: Vec::with_capacity(len),
                switches: Vec::with_capacity(len),
            };
            for _ in 0..len {
                let (x, w) = if unit_f64(&mut rng) < p.sigma_background[1] {
                    (BACKGROUND, background.draw(0, &mut rng))
                } else if rng.random::<f64>() < sigma[0] {
                    (GLOBAL, global.draw(z, &mut rng))
                } else {
                    (LOCAL, local.draw(nk, &mut rng))
                };
                draft.switches.push(x);
                draft.tokens.push(w as u32);
            }
            per_network[s].push(draft);
        }
        grouped.push(per_network);
    }

    let mut assignments = LatentAssignments::default();
    let mut posts: Vec<Vec<Vec<Post>>> = Vec::with_capacity(d.users);
    for (u, per_network) in grouped.into_iter().enumerate() {
        let mut user_posts = Vec::with_capacity(d.networks);
        for (s, drafts) in per_network.into_iter().enumerate() {
            let mut group = Vec::with_capacity(drafts.len());
            for (i, draft) in drafts.into_iter().enumerate() {
                assignments.post_topic.push(draft.topic);
                assignments.token_switch.extend_from_slice(&draft.switches);
                group.push(Post {
                    post_id: alloc::format!("{}-{}-{i}", users[u], networks[s]),
                    tokens: draft.tokens,
                });
            }
            user_posts.push(group);
        }
        posts.push(user_posts);
    }
    let corpus = Corpus::from_parts(networks, users, posts, vocabulary)?;
    Ok((corpus, assignments))
}

/// Mixture word distribution implied by `truth` for one (user, network).
pub fn expected_word_distribution(truth: &GroundTruth, user: usize, network: usize) -> Vec<f64> {
    let p = &truth.params;
    let d = p.dims;
    let mut out = vec![0.0; d.vocab];
    let [p_topic, p_bg] = p.sigma_background;
    for (w, o) in out.iter_mut().enumerate() {
        *o = p_bg * p.phi_background[w];
    }
    for k in 0..d.topics {
        let weight = p.theta_row(user)[k] * p_topic;
        let sigma = p.sigma_switch_row(network, k);
        let g = p.phi_global_row(k);
        let l = p.phi_local_row(network, k);
        for (w, o) in out.iter_mut().enumerate() {
            *o += weight * (sigma[0] * g[w] + sigma[1] * l[w]);
        }
    }
    out
}
