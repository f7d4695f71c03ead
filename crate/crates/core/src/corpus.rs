//! Observed data: users, networks, posts, and the vocabulary.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::{seeded_rng, Error, Result};

/// Dense bijection between word strings and ids `0..len`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::InvalidConfig(alloc::format!(
                    "duplicate vocabulary word {w:?}"
                )));
            }
        }
        Ok(Self { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub post_id: String,
    pub tokens: Vec<u32>,
}

/// Posts grouped by (user, network), with a shared vocabulary.
///
/// Posts are stored user-major: the slot for `(u, s)` is `u * S + s`. This is
/// also the canonical iteration order used by the samplers and by flattened
/// latent assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    networks: Vec<String>,
    users: Vec<String>,
    posts: Vec<Vec<Post>>,
    vocabulary: Vocabulary,
}

impl Corpus {
    /// Assembles a corpus from `posts[user][network]`.
    pub fn from_parts(
        networks: Vec<String>,
        users: Vec<String>,
        posts: Vec<Vec<Vec<Post>>>,
        vocabulary: Vocabulary,
    ) -> Result<Self> {
        if posts.len() != users.len() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} users but {} post groups",
                users.len(),
                posts.len()
            )));
        }
        let v = vocabulary.len() as u32;
        let mut flat = Vec::with_capacity(users.len() * networks.len());
        for per_user in posts {
            if per_user.len() != networks.len() {
                return Err(Error::ShapeMismatch(alloc::format!(
                    "user has {} network groups, expected {}",
                    per_user.len(),
                    networks.len()
                )));
            }
            for group in per_user {
                if let Some(bad) = group.iter().flat_map(|p| &p.tokens).find(|&&w| w >= v) {
                    return Err(Error::OutOfRange(alloc::format!(
                        "token id {bad} with vocabulary size {v}"
                    )));
                }
                flat.push(group);
            }
        }
        Ok(Self {
            networks,
            users,
            posts: flat,
            vocabulary,
        })
    }

    pub fn networks(&self) -> &[String] {
        &self.networks
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_networks(&self) -> usize {
        self.networks.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn posts(&self, user: usize, network: usize) -> &[Post] {
        &self.posts[user * self.networks.len() + network]
    }

    /// All posts in canonical order: users, then networks, then input order.
    pub fn iter_posts(&self) -> impl Iterator<Item = (usize, usize, &Post)> + '_ {
        let s = self.networks.len().max(1);
        self.posts
            .iter()
            .enumerate()
            .flat_map(move |(slot, group)| group.iter().map(move |p| (slot / s, slot % s, p)))
    }

    pub fn num_posts(&self) -> usize {
        self.posts.iter().map(Vec::len).sum()
    }

    pub fn num_tokens(&self) -> usize {
        self.posts.iter().flatten().map(|p| p.tokens.len()).sum()
    }

    pub fn user_post_count(&self, user: usize) -> usize {
        (0..self.networks.len())
            .map(|s| self.posts(user, s).len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_posts() == 0
    }

    /// Re-expresses this corpus in `reference`'s user, network, and word ids.
    ///
    /// Tokens outside the reference vocabulary are dropped, as are posts left
    /// empty and posts from users or networks the reference does not know.
    pub fn align_to(&self, reference: &Corpus) -> Corpus {
        let s_ref = reference.num_networks();
        let mut posts: Vec<Vec<Post>> = (0..reference.num_users() * s_ref)
            .map(|_| Vec::new())
            .collect();
        let user_ids: BTreeMap<&str, usize> = reference
            .users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.as_str(), i))
            .collect();
        let network_ids: BTreeMap<&str, usize> = reference
            .networks
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        for (u, s, post) in self.iter_posts() {
            let (Some(&ru), Some(&rs)) = (
                user_ids.get(self.users[u].as_str()),
                network_ids.get(self.networks[s].as_str()),
            ) else {
                continue;
            };
            let tokens: Vec<u32> = post
                .tokens
                .iter()
                .filter_map(|&w| reference.vocabulary.id(self.vocabulary.word(w)))
                .collect();
            if !tokens.is_empty() {
                posts[ru * s_ref + rs].push(Post {
                    post_id: post.post_id.clone(),
                    tokens,
                });
            }
        }
        Corpus {
            networks: reference.networks.clone(),
            users: reference.users.clone(),
            posts,
            vocabulary: reference.vocabulary.clone(),
        }
    }

    fn with_posts(&self, posts: Vec<Vec<Post>>) -> Corpus {
        Corpus {
            networks: self.networks.clone(),
            users: self.users.clone(),
            posts,
            vocabulary: self.vocabulary.clone(),
        }
    }
}

/// Builds a [`Corpus`] from pre-tokenized records, pruning stopwords and rare
/// words.
#[derive(Debug, Clone)]
pub struct CorpusBuilder {
    min_word_count: usize,
    stopwords: BTreeSet<String>,
    records: Vec<RawPost>,
    seen: BTreeSet<(String, String, String)>,
}

#[derive(Debug, Clone)]
struct RawPost {
    user: String,
    network: String,
    post_id: String,
    tokens: Vec<String>,
}

impl Default for CorpusBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self {
            min_word_count: 1,
            stopwords: BTreeSet::new(),
            records: Vec::new(),
            seen: BTreeSet::new(),
        }
    }

    pub fn min_word_count(mut self, count: usize) -> Self {
        self.min_word_count = count;
        self
    }

    pub fn stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords.extend(words.into_iter().map(Into::into));
        self
    }

    /// Adds one post. Fails if the post id repeats within its (user, network).
    pub fn push(
        &mut self,
        user: &str,
        network: &str,
        post_id: &str,
        tokens: Vec<String>,
    ) -> Result<()> {
        let key = (user.to_string(), network.to_string(), post_id.to_string());
        if !self.seen.insert(key) {
            return Err(Error::DuplicatePost {
                user: user.to_string(),
                network: network.to_string(),
                post_id: post_id.to_string(),
            });
        }
        self.records.push(RawPost {
            user: user.to_string(),
            network: network.to_string(),
            post_id: post_id.to_string(),
            tokens,
        });
        Ok(())
    }

    pub fn build(self) -> Result<Corpus> {
        if self.min_word_count == 0 {
            return Err(Error::InvalidConfig("min_word_count must be >= 1".into()));
        }
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for rec in &self.records {
            for t in &rec.tokens {
                if !self.stopwords.contains(t) {
                    *freq.entry(t.as_str()).or_default() += 1;
                }
            }
        }
        // BTreeMap iteration gives a sorted vocabulary, independent of record order.
        let words: Vec<String> = freq
            .iter()
            .filter(|&(_, &c)| c >= self.min_word_count)
            .map(|(w, _)| (*w).to_string())
            .collect();
        let vocabulary = Vocabulary::new(words)?;

        let mut kept: Vec<(&RawPost, Vec<u32>)> = Vec::new();
        for rec in &self.records {
            let tokens: Vec<u32> = rec
                .tokens
                .iter()
                .filter(|t| !self.stopwords.contains(*t))
                .filter_map(|t| vocabulary.id(t))
                .collect();
            if !tokens.is_empty() {
                kept.push((rec, tokens));
            }
        }
        if kept.is_empty() {
            return Err(Error::EmptyCorpus("no posts survive vocabulary filtering"));
        }
        let networks: Vec<String> = kept
            .iter()
            .map(|(r, _)| r.network.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let users: Vec<String> = kept
            .iter()
            .map(|(r, _)| r.user.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let s_count = networks.len();
        let mut posts: Vec<Vec<Post>> = (0..users.len() * s_count).map(|_| Vec::new()).collect();
        for (rec, tokens) in kept {
            let u = users.binary_search(&rec.user).expect("user indexed");
            let s = networks
                .binary_search(&rec.network)
                .expect("network indexed");
            posts[u * s_count + s].push(Post {
                post_id: rec.post_id.clone(),
                tokens,
            });
        }
        Ok(Corpus {
            networks,
            users,
            posts,
            vocabulary,
        })
    }
}

/// Result of [`split_holdout`]. Both halves share users, networks, and
/// vocabulary with the source corpus.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Corpus,
    pub heldout: Corpus,
    /// Users whose held-out share was cancelled to keep a training post.
    pub protected_users: Vec<usize>,
}

/// Moves `floor(fraction * n)` randomly chosen posts of every (user, network)
/// group into a held-out corpus.
pub fn split_holdout(corpus: &Corpus, fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "holdout fraction {fraction} outside (0, 1)"
        )));
    }
    let mut rng = seeded_rng(seed);
    let s_count = corpus.num_networks();
    let mut train = Vec::with_capacity(corpus.posts.len());
    let mut heldout = Vec::with_capacity(corpus.posts.len());
    let mut protected_users = Vec::new();
    for u in 0..corpus.num_users() {
        let mut chosen: Vec<Vec<bool>> = Vec::with_capacity(s_count);
        let mut held_total = 0;
        for s in 0..s_count {
            let group = corpus.posts(u, s);
            // the epsilon keeps products like 0.3 * 10 from flooring to 2
            let n_held = libm::floor(fraction * group.len() as f64 + 1e-9) as usize;
            let mut order: Vec<usize> = (0..group.len()).collect();
            order.shuffle(&mut rng);
            let mut mask = alloc::vec![false; group.len()];
            for &i in order.iter().take(n_held) {
                mask[i] = true;
            }
            held_total += n_held;
            chosen.push(mask);
        }
        if held_total > 0 && held_total >= corpus.user_post_count(u) {
            protected_users.push(u);
            chosen
                .iter_mut()
                .for_each(|m| m.iter_mut().for_each(|b| *b = false));
        }
        for (s, mask) in chosen.iter().enumerate() {
            let group = corpus.posts(u, s);
            let (mut tr, mut ho) = (Vec::new(), Vec::new());
            for (post, &held) in group.iter().zip(mask) {
                if held {
                    ho.push(post.clone());
                } else {
                    tr.push(post.clone());
                }
            }
            train.push(tr);
            heldout.push(ho);
        }
    }
    Ok(Split {
        train: corpus.with_posts(train),
        heldout: corpus.with_posts(heldout),
        protected_users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn three_posts() -> CorpusBuilder {
        let mut b = CorpusBuilder::new();
        b.push("alice", "twitter", "p1", toks(&["coffee", "morning"]))
            .unwrap();
        b.push("alice", "tumblr", "p2", toks(&["coffee", "art"]))
            .unwrap();
        b.push("alice", "twitter", "p3", toks(&["morning", "run"]))
            .unwrap();
        b
    }

    #[test]
    fn ingest_identity_pass_through() {
        let c = three_posts().build().unwrap();
        assert_eq!(c.num_users(), 1);
        assert_eq!(c.num_networks(), 2);
        assert_eq!(c.networks(), &["tumblr".to_string(), "twitter".to_string()]);
        assert_eq!(c.num_posts(), 3);
        assert_eq!(c.num_tokens(), 6);
    }

    #[test]
    fn min_count_removes_rare_tokens() {
        let c = three_posts().min_word_count(2).build().unwrap();
        assert_eq!(c.vocab_size(), 2);
        assert!(c.vocabulary().id("art").is_none());
        assert!(c.vocabulary().id("run").is_none());
        let tumblr = c.posts(0, 0);
        assert_eq!(tumblr[0].tokens, vec![c.vocabulary().id("coffee").unwrap()]);
    }

    #[test]
    fn stopwords_and_empty_posts_dropped() {
        let mut b = CorpusBuilder::new().stopwords(["the"]);
        b.push("u1", "a", "1", toks(&["the"])).unwrap();
        b.push("u2", "a", "2", toks(&["the", "cat"])).unwrap();
        let c = b.build().unwrap();
        assert_eq!(c.users(), &["u2".to_string()]);
        assert_eq!(c.vocabulary().words(), &["cat".to_string()]);
    }

    #[test]
    fn duplicate_post_rejected() {
        let mut b = CorpusBuilder::new();
        b.push("u", "a", "1", toks(&["x"])).unwrap();
        assert!(b.push("u", "b", "1", toks(&["x"])).is_ok());
        assert!(matches!(
            b.push("u", "a", "1", toks(&["y"])),
            Err(Error::DuplicatePost { .. })
        ));
    }

    #[test]
    fn empty_after_filter_is_error() {
        let mut b = CorpusBuilder::new().min_word_count(3);
        b.push("u", "a", "1", toks(&["x"])).unwrap();
        assert!(matches!(b.build(), Err(Error::EmptyCorpus(_))));
    }

    fn ten_post_corpus() -> Corpus {
        let mut b = CorpusBuilder::new();
        for i in 0..10 {
            b.push("u", "net", &alloc::format!("p{i}"), toks(&["w"]))
                .unwrap();
        }
        b.push("v", "net", "only", toks(&["w"])).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn split_arithmetic_and_floor() {
        let c = ten_post_corpus();
        let split = split_holdout(&c, 0.1, 3).unwrap();
        assert_eq!(split.heldout.posts(0, 0).len(), 1);
        assert_eq!(split.train.posts(0, 0).len(), 9);
        let half = split_holdout(&c, 0.5, 3).unwrap();
        assert_eq!(half.heldout.posts(1, 0).len(), 0);
        assert_eq!(half.train.posts(1, 0).len(), 1);
        assert_eq!(
            half.train.num_tokens() + half.heldout.num_tokens(),
            c.num_tokens()
        );
    }

    #[test]
    fn split_is_deterministic() {
        let c = ten_post_corpus();
        let a = split_holdout(&c, 0.3, 11).unwrap();
        let b = split_holdout(&c, 0.3, 11).unwrap();
        assert_eq!(a.heldout, b.heldout);
        assert_eq!(a.train, b.train);
        assert!(split_holdout(&c, 1.0, 0).is_err());
    }

    #[test]
    fn align_drops_unknown_words() {
        let train = three_posts().min_word_count(2).build().unwrap();
        let full = three_posts().build().unwrap();
        let aligned = full.align_to(&train);
        assert_eq!(aligned.vocab_size(), 2);
        assert_eq!(aligned.num_tokens(), 4);
        // "run" was dropped, "morning" kept
        assert_eq!(aligned.posts(0, 1)[1].tokens.len(), 1);
    }
}
