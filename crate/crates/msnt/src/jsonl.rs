//! Line-delimited JSON corpus records: `{"user", "network", "post_id", "tokens"}`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use msnt_core::{Corpus, CorpusBuilder, Post, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub user: String,
    pub network: String,
    pub post_id: String,
    pub tokens: Vec<String>,
}

/// Reads every record; blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e))?;
        out.push(record);
    }
    Ok(out)
}

/// One word per line, surrounding whitespace trimmed, blank lines ignored.
pub fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect())
}

pub fn write_word_list(path: &Path, words: &[String]) -> Result<()> {
    let mut text = String::new();
    for w in words {
        text.push_str(w);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Builds a pruned corpus from raw records.
pub fn ingest(records: Vec<Record>, stopwords: Vec<String>, min_count: usize) -> Result<Corpus> {
    let mut builder = CorpusBuilder::new()
        .min_word_count(min_count)
        .stopwords(stopwords);
    for r in records {
        builder.push(&r.user, &r.network, &r.post_id, r.tokens)?;
    }
    Ok(builder.build()?)
}

/// Rebuilds a corpus over a fixed vocabulary. Out-of-vocabulary tokens are
/// dropped and posts left empty are skipped; users and networks are sorted.
pub fn corpus_with_vocabulary(records: Vec<Record>, vocabulary: Vocabulary) -> Result<Corpus> {
    let users: BTreeSet<&str> = records.iter().map(|r| r.user.as_str()).collect();
    let networks: BTreeSet<&str> = records.iter().map(|r| r.network.as_str()).collect();
    let user_ix: BTreeMap<&str, usize> = users.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let net_ix: BTreeMap<&str, usize> = networks.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut posts = vec![vec![Vec::new(); networks.len()]; users.len()];
    let mut seen = BTreeSet::new();
    for r in &records {
        if !seen.insert((&r.user, &r.network, &r.post_id)) {
            return Err(msnt_core::Error::DuplicatePost {
                user: r.user.clone(),
                network: r.network.clone(),
                post_id: r.post_id.clone(),
            }
            .into());
        }
        let tokens: Vec<u32> = r.tokens.iter().filter_map(|w| vocabulary.id(w)).collect();
        if tokens.is_empty() {
            continue;
        }
        posts[user_ix[r.user.as_str()]][net_ix[r.network.as_str()]].push(Post {
            post_id: r.post_id.clone(),
            tokens,
        });
    }
    let corpus = Corpus::from_parts(
        networks.into_iter().map(String::from).collect(),
        users.into_iter().map(String::from).collect(),
        posts,
        vocabulary,
    )?;
    Ok(corpus)
}

/// Loads a corpus file against the vocabulary file beside it.
pub fn load_corpus(corpus: &Path, vocabulary: &Path) -> Result<Corpus> {
    let vocab = Vocabulary::new(read_word_list(vocabulary)?)?;
    corpus_with_vocabulary(read_records(corpus)?, vocab)
}

pub fn records_of(corpus: &Corpus) -> impl Iterator<Item = Record> + '_ {
    let vocab = corpus.vocabulary();
    corpus.iter_posts().map(move |(u, s, post)| Record {
        user: corpus.users()[u].clone(),
        network: corpus.networks()[s].clone(),
        post_id: post.post_id.clone(),
        tokens: post
            .tokens
            .iter()
            .map(|&w| vocab.word(w).to_string())
            .collect(),
    })
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records_of(corpus) {
        let line = serde_json::to_string(&record).expect("records always serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
