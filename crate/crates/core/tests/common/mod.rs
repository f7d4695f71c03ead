#![allow(dead_code)]

pub mod oracle;

use msnt_core::{Corpus, LatentAssignments, Post, Vocabulary};
use rand::{Rng, RngCore};

pub fn vocab(n: usize) -> Vocabulary {
    Vocabulary::new((0..n).map(|i| format!("w{i}")).collect()).unwrap()
}

/// `posts` holds `(user, network, tokens)` records.
pub fn corpus(users: usize, networks: usize, v: usize, posts: &[(usize, usize, &[u32])]) -> Corpus {
    let mut groups = vec![vec![Vec::new(); networks]; users];
    for (i, &(u, s, tokens)) in posts.iter().enumerate() {
        groups[u][s].push(Post {
            post_id: format!("p{i}"),
            tokens: tokens.to_vec(),
        });
    }
    Corpus::from_parts(
        (0..networks).map(|s| format!("n{s}")).collect(),
        (0..users).map(|u| format!("u{u}")).collect(),
        groups,
        vocab(v),
    )
    .unwrap()
}

pub fn random_corpus<R: RngCore>(
    rng: &mut R,
    users: usize,
    networks: usize,
    v: usize,
    posts: usize,
    max_len: usize,
) -> Corpus {
    let records: Vec<(usize, usize, Vec<u32>)> = (0..posts)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (
                rng.random_range(0..users),
                rng.random_range(0..networks),
                (0..len).map(|_| rng.random_range(0..v as u32)).collect(),
            )
        })
        .collect();
    let borrowed: Vec<(usize, usize, &[u32])> = records
        .iter()
        .map(|(u, s, t)| (*u, *s, t.as_slice()))
        .collect();
    corpus(users, networks, v, &borrowed)
}

pub fn random_assignments<R: RngCore>(rng: &mut R, corpus: &Corpus, k: usize) -> LatentAssignments {
    LatentAssignments {
        post_topic: (0..corpus.num_posts())
            .map(|_| rng.random_range(0..k as u32))
            .collect(),
        token_switch: (0..corpus.num_tokens())
            .map(|_| rng.random_range(0..3u8))
            .collect(),
    }
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-300))
        .fold(0.0, f64::max)
}
