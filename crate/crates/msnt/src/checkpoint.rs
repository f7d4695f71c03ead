//! Text checkpoint: hyperparameters, vocabulary hash and latent assignments.
//!
//! ```text
//! msnt-checkpoint 1
//! num_topics 5
//! alpha 0.5
//! beta_global 0.01
//! beta_local 0.01
//! beta_background 0.01
//! lambda 0.01
//! tau_switch 0.5 0.5
//! tau_background 0.8 0.2
//! vocab_sha256 <64 hex digits>
//! post_topics <n> <z_0> <z_1> ...
//! token_switches <m> <digits, one per token>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so loading reproduces
//! every field bit for bit.

use std::path::Path;

use msnt_core::{Hyperparameters, LatentAssignments, Vocabulary};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &str = "msnt-checkpoint 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub hyper: Hyperparameters,
    pub vocab_sha256: String,
    pub assignments: LatentAssignments,
}

/// SHA-256 of the vocabulary file contents (one word per line).
pub fn vocabulary_hash(vocab: &Vocabulary) -> String {
    let mut h = Sha256::new();
    for w in vocab.words() {
        h.update(w.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

impl Checkpoint {
    pub fn new(hyper: Hyperparameters, vocab: &Vocabulary, assignments: LatentAssignments) -> Self {
        Self {
            hyper,
            vocab_sha256: vocabulary_hash(vocab),
            assignments,
        }
    }

    pub fn to_text(&self) -> String {
        let h = &self.hyper;
        let mut s = format!(
            "{MAGIC}\nnum_topics {}\nalpha {}\nbeta_global {}\nbeta_local {}\nbeta_background {}\n\
             lambda {}\ntau_switch {} {}\ntau_background {} {}\nvocab_sha256 {}\npost_topics {}",
            h.num_topics,
            h.alpha,
            h.beta_global,
            h.beta_local,
            h.beta_background,
            h.lambda,
            h.tau_switch[0],
            h.tau_switch[1],
            h.tau_background[0],
            h.tau_background[1],
            self.vocab_sha256,
            self.assignments.post_topic.len(),
        );
        for z in &self.assignments.post_topic {
            s.push(' ');
            s.push_str(&z.to_string());
        }
        s.push_str(&format!(
            "\ntoken_switches {} ",
            self.assignments.token_switch.len()
        ));
        s.extend(
            self.assignments
                .token_switch
                .iter()
                .map(|&x| char::from(b'0' + x)),
        );
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, msg)| Error::parse(path, line, msg))
    }

    fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |key: &str| -> std::result::Result<(usize, Vec<&str>), (usize, String)> {
            let (n, line) = lines.next().ok_or((0, format!("missing `{key}` line")))?;
            let mut parts = line.split(' ');
            match parts.next() {
                Some(k) if k == key => Ok((n, parts.collect())),
                _ => Err((n, format!("expected `{key}`"))),
            }
        };
        let (n, magic) = next("msnt-checkpoint")?;
        if magic != ["1"] {
            return Err((n, "unsupported checkpoint version".into()));
        }
        fn num<T: std::str::FromStr>(
            n: usize,
            v: Option<&&str>,
        ) -> std::result::Result<T, (usize, String)> {
            v.and_then(|s| s.parse().ok())
                .ok_or((n, format!("bad number {:?}", v)))
        }
        let mut scalar = |key: &str| -> std::result::Result<f64, (usize, String)> {
            let (n, v) = next(key)?;
            num(n, v.first())
        };
        let num_topics = scalar("num_topics")? as usize;
        let alpha = scalar("alpha")?;
        let beta_global = scalar("beta_global")?;
        let beta_local = scalar("beta_local")?;
        let beta_background = scalar("beta_background")?;
        let lambda = scalar("lambda")?;
        let (n, ts) = next("tau_switch")?;
        let tau_switch = [num(n, ts.first())?, num(n, ts.get(1))?];
        let (n, tb) = next("tau_background")?;
        let tau_background = [num(n, tb.first())?, num(n, tb.get(1))?];
        let (n, hash) = next("vocab_sha256")?;
        let vocab_sha256 = match hash.as_slice() {
            [h] if h.len() == 64 && h.bytes().all(|b| b.is_ascii_hexdigit()) => h.to_string(),
            _ => return Err((n, "bad vocabulary hash".into())),
        };
        let (n, topics) = next("post_topics")?;
        let count: usize = num(n, topics.first())?;
        let post_topic = topics[1..]
            .iter()
            .map(|z| {
                z.parse::<u32>()
                    .map_err(|_| (n, format!("bad topic {z:?}")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if post_topic.len() != count {
            return Err((
                n,
                format!("expected {count} topics, found {}", post_topic.len()),
            ));
        }
        let (n, switches) = next("token_switches")?;
        let count: usize = num(n, switches.first())?;
        let digits = switches.get(1).copied().unwrap_or("");
        let token_switch = digits
            .bytes()
            .map(|b| match b {
                b'0'..=b'2' => Ok(b - b'0'),
                _ => Err((n, format!("bad switch {:?}", char::from(b)))),
            })
            .collect::<std::result::Result<Vec<u8>, _>>()?;
        if token_switch.len() != count || switches.len() > 2 {
            return Err((n, format!("expected {count} switches")));
        }
        Ok(Self {
            hyper: Hyperparameters {
                num_topics,
                alpha,
                beta_global,
                beta_local,
                beta_background,
                lambda,
                tau_switch,
                tau_background,
            },
            vocab_sha256,
            assignments: LatentAssignments {
                post_topic,
                token_switch,
            },
        })
    }
}
