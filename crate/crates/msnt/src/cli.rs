//! `msnt` subcommands.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use msnt_core::baseline::{lda_perplexity, train_lda, LdaConfig};
use msnt_core::evaluation::{
    jsd, jsd_report, likelihood, match_topics, perplexity, pmi_score, topic_report,
    PerplexityOptions, PmiSource,
};
use msnt_core::generator::{generate_corpus, sample_ground_truth, GenConfig, PostLength};
use msnt_core::{
    estimate_parameters, recount, split_holdout, Corpus, EstimateMode, Hyperparameters,
    PosteriorEstimates, TrainConfig, Vocabulary,
};

use crate::chains::run_chains;
use crate::checkpoint::{vocabulary_hash, Checkpoint};
use crate::config::{EvalArgs, FileConfig, GenerateArgs, ModelArgs, TrainArgs, DEFAULT_SEED};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::export::{read_estimates, write_estimates};
use crate::jsonl::{
    self, load_corpus, read_records, read_word_list, write_corpus, write_word_list,
};
use crate::manifest::Manifest;

#[derive(Debug, Parser)]
#[command(
    name = "msnt",
    version,
    about = "Multi-network topic model: generate, ingest, train, evaluate, report"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// RNG seed [default: 20200101]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for every output file (created if missing)
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample ground truth and a synthetic corpus
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        generate: GenerateArgs,
    },
    /// Prune raw JSONL records into a corpus and vocabulary
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// One stopword per line
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Drop words seen fewer times than this
        #[arg(long, default_value_t = 1)]
        min_count: usize,
        /// Also write a train/held-out split with this held-out fraction
        #[arg(long)]
        holdout: Option<f64>,
    },
    /// Run the Gibbs sampler
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Held-out corpus to score after training
        #[arg(long)]
        heldout: Option<PathBuf>,
        /// Also train plain LDA with the same K, priors, sweeps and seed
        #[arg(long)]
        baseline_lda: bool,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Score a checkpoint: perplexity, likelihood and PMI
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Training corpus the checkpoint was fitted on
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        heldout: Option<PathBuf>,
        /// Reference corpus for PMI co-occurrence [default: the training corpus]
        #[arg(long)]
        pmi_reference: Option<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Top-word tables, user preferences and JSD analysis of an estimates export
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Words per topic
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Topics listed per user
        #[arg(long, default_value_t = 3)]
        user_topics: usize,
    },
    /// generate, train, and compare the fit with the ground truth
    Recover {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        generate: GenerateArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
}

/// Parses `args` (program name first) and runs the command. Progress and
/// summaries go to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        let text = e.to_string();
        Error::Usage(
            text.lines()
                .next()
                .unwrap_or("bad arguments")
                .trim_start_matches("error: ")
                .to_string(),
        )
    })?;
    execute(cli.command, out)
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Generate {
            common,
            model,
            generate,
        } => cmd_generate(common, model, generate, out),
        Command::Ingest {
            common,
            input,
            stopwords,
            min_count,
            holdout,
        } => cmd_ingest(
            common,
            &input,
            stopwords.as_deref(),
            min_count,
            holdout,
            out,
        ),
        Command::Train {
            common,
            corpus,
            vocab,
            heldout,
            baseline_lda,
            model,
            train,
        } => cmd_train(
            common,
            &corpus,
            &vocab,
            heldout.as_deref(),
            baseline_lda,
            model,
            train,
            out,
        ),
        Command::Eval {
            common,
            checkpoint,
            corpus,
            vocab,
            heldout,
            pmi_reference,
            eval,
        } => cmd_eval(
            common,
            &checkpoint,
            &corpus,
            &vocab,
            heldout.as_deref(),
            pmi_reference.as_deref(),
            eval,
            out,
        ),
        Command::Report {
            common,
            estimates,
            vocab,
            top,
            user_topics,
        } => cmd_report(common, &estimates, &vocab, top, user_topics, out),
        Command::Recover {
            common,
            model,
            generate,
            train,
        } => cmd_recover(common, model, generate, train, out),
    }
}

struct Ctx {
    file: FileConfig,
    seed: u64,
    out_dir: PathBuf,
    manifest: Manifest,
}

impl Ctx {
    fn new(command: &str, common: Common) -> Result<Self> {
        let file = FileConfig::load(common.config.as_deref())?;
        let seed = common.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        std::fs::create_dir_all(&common.out_dir).map_err(|e| Error::io(&common.out_dir, e))?;
        let mut manifest = Manifest::new(command);
        if let Some(cfg) = &common.config {
            manifest.input("config", cfg)?;
        }
        manifest.set("seed", seed);
        Ok(Self {
            file,
            seed,
            out_dir: common.out_dir,
            manifest,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, contents).map_err(|e| Error::io(p, e))
    }

    /// Rejects runs whose outputs would overwrite one of their inputs.
    fn guard(&self, inputs: &[Option<&Path>], outputs: &[&str]) -> Result<()> {
        let dir = self
            .out_dir
            .canonicalize()
            .map_err(|e| Error::io(&self.out_dir, e))?;
        for input in inputs.iter().flatten() {
            let Ok(resolved) = input.canonicalize() else {
                continue;
            };
            if let Some(name) = outputs.iter().find(|name| dir.join(name) == resolved) {
                return Err(Error::Config(format!(
                    "input {} would be overwritten by output {name}",
                    input.display()
                )));
            }
        }
        Ok(())
    }

    fn finish(mut self, outputs: &[&str]) -> Result<()> {
        self.manifest.set("outputs", outputs.join(","));
        self.manifest.write(&self.path("manifest.txt"))
    }
}

fn io_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn record_hyper(m: &mut Manifest, prefix: &str, hp: &Hyperparameters) {
    m.set(format!("{prefix}.num_topics"), hp.num_topics);
    m.set(format!("{prefix}.alpha"), hp.alpha);
    m.set(format!("{prefix}.beta_global"), hp.beta_global);
    m.set(format!("{prefix}.beta_local"), hp.beta_local);
    m.set(format!("{prefix}.beta_background"), hp.beta_background);
    m.set(format!("{prefix}.lambda"), hp.lambda);
    m.set(
        format!("{prefix}.tau_switch"),
        format!("{},{}", hp.tau_switch[0], hp.tau_switch[1]),
    );
    m.set(
        format!("{prefix}.tau_background"),
        format!("{},{}", hp.tau_background[0], hp.tau_background[1]),
    );
}

fn record_train(m: &mut Manifest, cfg: &TrainConfig, chains: usize) {
    m.set("train.max_iters", cfg.max_iters);
    m.set("train.burn_in", cfg.burn_in);
    match cfg.estimate_mode {
        EstimateMode::FinalState => m.set("train.estimate_mode", "final"),
        EstimateMode::Average { snapshots, spacing } => m.set(
            "train.estimate_mode",
            format!("average:{snapshots}x{spacing}"),
        ),
    }
    m.set("train.log_every", cfg.log_every);
    m.set("train.chains", chains);
}

fn record_gen(m: &mut Manifest, gen: &GenConfig) {
    m.set("generate.users", gen.users);
    m.set("generate.networks", gen.networks);
    m.set("generate.vocab", gen.vocab);
    m.set(
        "generate.posts_per_user_network",
        gen.posts_per_user_network,
    );
    match gen.length {
        PostLength::Fixed(n) => m.set("generate.length", format!("fixed:{n}")),
        PostLength::Geometric { mean } => m.set("generate.length", format!("geometric:{mean}")),
    }
    m.set("generate.mode", format!("{:?}", gen.mode).to_lowercase());
    record_hyper(m, "generate.hyper", &gen.hyper);
}

fn generate_into(
    ctx: &mut Ctx,
    gen: &GenConfig,
) -> Result<(Corpus, msnt_core::generator::GroundTruth)> {
    let truth = sample_ground_truth(gen)?;
    let (corpus, assignments) = generate_corpus(&truth, gen)?;
    write_corpus(&ctx.path("corpus.jsonl"), &corpus)?;
    write_word_list(&ctx.path("vocab.txt"), corpus.vocabulary().words())?;
    let mut extras = BTreeMap::new();
    extras.insert(
        "rho_used".to_string(),
        if truth.rho_used { 1.0 } else { 0.0 },
    );
    write_estimates(&ctx.path("truth.tsv"), &truth.params, &extras)?;
    Checkpoint::new(gen.hyper, corpus.vocabulary(), assignments)
        .save(&ctx.path("truth_checkpoint.txt"))?;
    record_gen(&mut ctx.manifest, gen);
    Ok((corpus, truth))
}

fn cmd_generate(
    common: Common,
    model: ModelArgs,
    generate: GenerateArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let mut ctx = Ctx::new("generate", common)?;
    let hp = model.overlay(ctx.file.model.clone()).hyperparameters()?;
    let gen = generate
        .overlay(ctx.file.generate.clone())
        .gen_config(hp, ctx.seed)?;
    let (corpus, _) = generate_into(&mut ctx, &gen)?;
    io_out(
        out,
        &format!(
            "generated {} posts, {} tokens into {}\n",
            corpus.num_posts(),
            corpus.num_tokens(),
            ctx.out_dir.display()
        ),
    )?;
    ctx.finish(&[
        "corpus.jsonl",
        "vocab.txt",
        "truth.tsv",
        "truth_checkpoint.txt",
    ])
}

fn cmd_ingest(
    common: Common,
    input: &Path,
    stopwords: Option<&Path>,
    min_count: usize,
    holdout: Option<f64>,
    out: &mut dyn Write,
) -> Result<()> {
    let mut ctx = Ctx::new("ingest", common)?;
    ctx.guard(
        &[Some(input), stopwords],
        &[
            "corpus.jsonl",
            "vocab.txt",
            "train.jsonl",
            "heldout.jsonl",
            "manifest.txt",
        ],
    )?;
    ctx.manifest.input("corpus", input)?;
    let stop = match stopwords {
        Some(p) => {
            ctx.manifest.input("stopwords", p)?;
            read_word_list(p)?
        }
        None => Vec::new(),
    };
    ctx.manifest.set("ingest.min_count", min_count);
    let corpus = jsonl::ingest(read_records(input)?, stop, min_count)?;
    write_corpus(&ctx.path("corpus.jsonl"), &corpus)?;
    write_word_list(&ctx.path("vocab.txt"), corpus.vocabulary().words())?;
    let mut outputs = vec!["corpus.jsonl", "vocab.txt"];
    let mut msg = format!(
        "{} users, {} networks, {} words, {} posts, {} tokens\n",
        corpus.num_users(),
        corpus.num_networks(),
        corpus.vocab_size(),
        corpus.num_posts(),
        corpus.num_tokens()
    );
    if let Some(fraction) = holdout {
        ctx.manifest.set("ingest.holdout", fraction);
        let split = split_holdout(&corpus, fraction, ctx.seed)?;
        write_corpus(&ctx.path("train.jsonl"), &split.train)?;
        write_corpus(&ctx.path("heldout.jsonl"), &split.heldout)?;
        outputs.extend(["train.jsonl", "heldout.jsonl"]);
        let _ = writeln!(
            msg,
            "split: {} train posts, {} held-out posts, {} protected users",
            split.train.num_posts(),
            split.heldout.num_posts(),
            split.protected_users.len()
        );
    }
    io_out(out, &msg)?;
    ctx.finish(&outputs)
}

struct Trained {
    estimates: PosteriorEstimates,
    summary: Vec<(String, String)>,
}

fn train_into(
    ctx: &mut Ctx,
    corpus: &Corpus,
    hp: &Hyperparameters,
    train: TrainArgs,
    out: &mut dyn Write,
) -> Result<Trained> {
    let cfg = train.train_config(ctx.seed)?;
    let chains = train.chains()?;
    record_hyper(&mut ctx.manifest, "model", hp);
    record_train(&mut ctx.manifest, &cfg, chains);

    io_out(out, &format!("{}\n", diagnostics::HEADER))?;
    let mut stream = Vec::new();
    let best = run_chains(corpus, hp, &cfg, chains, |p| {
        stream.push(diagnostics::csv_line(p));
    })?;
    if chains == 1 {
        for line in &stream {
            io_out(out, &format!("{line}\n"))?;
        }
    }
    let result = best.output;
    ctx.write(
        "diagnostics.csv",
        &diagnostics::to_csv(&result.diagnostics.trace),
    )?;
    Checkpoint::new(*hp, corpus.vocabulary(), result.assignments)
        .save(&ctx.path("checkpoint.txt"))?;
    write_estimates(
        &ctx.path("estimates.tsv"),
        &result.estimates,
        &BTreeMap::new(),
    )?;
    let summary = vec![
        ("chain_seed".to_string(), best.seed.to_string()),
        (
            "train_log_likelihood".to_string(),
            result.diagnostics.final_log_likelihood.to_string(),
        ),
        ("sweeps".to_string(), result.diagnostics.sweeps.to_string()),
    ];
    Ok(Trained {
        estimates: result.estimates,
        summary,
    })
}

fn summary_text(entries: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    common: Common,
    corpus_path: &Path,
    vocab_path: &Path,
    heldout: Option<&Path>,
    baseline_lda: bool,
    model: ModelArgs,
    train: TrainArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let mut ctx = Ctx::new("train", common)?;
    ctx.guard(
        &[Some(corpus_path), Some(vocab_path), heldout],
        &[
            "checkpoint.txt",
            "estimates.tsv",
            "diagnostics.csv",
            "summary.txt",
            "lda.tsv",
            "manifest.txt",
        ],
    )?;
    let hp = model.overlay(ctx.file.model.clone()).hyperparameters()?;
    let train = train.overlay(ctx.file.train.clone());
    let max_iters = train.train_config(ctx.seed)?.max_iters;
    train.chains()?;
    ctx.manifest.input("corpus", corpus_path)?;
    ctx.manifest.input("vocab", vocab_path)?;
    let corpus = load_corpus(corpus_path, vocab_path)?;
    let heldout = match heldout {
        Some(p) => {
            ctx.manifest.input("heldout", p)?;
            let vocab = corpus.vocabulary().clone();
            Some(jsonl::corpus_with_vocabulary(read_records(p)?, vocab)?.align_to(&corpus))
        }
        None => None,
    };
    let Trained {
        estimates,
        mut summary,
    } = train_into(&mut ctx, &corpus, &hp, train, out)?;
    let mut outputs = vec![
        "checkpoint.txt",
        "estimates.tsv",
        "diagnostics.csv",
        "summary.txt",
    ];
    if let Some(h) = &heldout {
        let p = perplexity(&estimates, h, &PerplexityOptions::default())?;
        summary.push(("heldout_perplexity".into(), p.to_string()));
    }
    if baseline_lda {
        ctx.manifest.set("baseline_lda", true);
        let lda = train_lda(
            &corpus,
            LdaConfig {
                num_topics: hp.num_topics,
                alpha: hp.alpha,
                beta: hp.beta_global,
                iters: max_iters,
                seed: ctx.seed,
            },
        )?;
        let mut text = String::new();
        for k in 0..lda.num_topics {
            for (w, p) in lda.phi_row(k).iter().enumerate() {
                let _ = writeln!(text, "phi\t{k},{w}\t{p}");
            }
        }
        for d in 0..lda.num_docs() {
            for (k, p) in lda.theta_row(d).iter().enumerate() {
                let _ = writeln!(text, "theta\t{d},{k}\t{p}");
            }
        }
        ctx.write("lda.tsv", &text)?;
        outputs.push("lda.tsv");
        if let Some(h) = &heldout {
            summary.push((
                "lda_heldout_perplexity".into(),
                lda_perplexity(&lda, h)?.to_string(),
            ));
        }
    }
    let text = summary_text(&summary);
    ctx.write("summary.txt", &text)?;
    io_out(out, &text)?;
    ctx.finish(&outputs)
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    common: Common,
    checkpoint: &Path,
    corpus_path: &Path,
    vocab_path: &Path,
    heldout: Option<&Path>,
    pmi_reference: Option<&Path>,
    eval: EvalArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let mut ctx = Ctx::new("eval", common)?;
    ctx.guard(
        &[
            Some(checkpoint),
            Some(corpus_path),
            Some(vocab_path),
            heldout,
            pmi_reference,
        ],
        &["eval.txt", "manifest.txt"],
    )?;
    let eval = eval.overlay(ctx.file.eval.clone());
    ctx.manifest.input("checkpoint", checkpoint)?;
    ctx.manifest.input("corpus", corpus_path)?;
    ctx.manifest.input("vocab", vocab_path)?;
    let ck = Checkpoint::load(checkpoint)?;
    let vocab = Vocabulary::new(read_word_list(vocab_path)?)?;
    let found = vocabulary_hash(&vocab);
    if found != ck.vocab_sha256 {
        return Err(Error::VocabularyMismatch {
            expected: ck.vocab_sha256,
            found,
        });
    }
    let corpus = jsonl::corpus_with_vocabulary(read_records(corpus_path)?, vocab)?;
    let counts = recount(&corpus, ck.hyper.num_topics, &ck.assignments)?;
    let est = estimate_parameters(&ck.hyper, &counts);
    let opts = PerplexityOptions {
        include_rho: eval.include_rho.unwrap_or(false),
    };
    let top = eval.pmi_top.unwrap_or(50);
    let source = match eval.pmi_network {
        Some(network) => PmiSource::Local { network },
        None => PmiSource::Global,
    };
    ctx.manifest.set("eval.include_rho", opts.include_rho);
    ctx.manifest.set("eval.pmi_top", top);
    ctx.manifest.set("eval.pmi_source", format!("{source:?}"));

    let mut results: Vec<(String, String)> = vec![
        (
            "train_log_likelihood".into(),
            likelihood(&est, &corpus, &opts)?.to_string(),
        ),
        (
            "train_perplexity".into(),
            perplexity(&est, &corpus, &opts)?.to_string(),
        ),
    ];
    if let Some(p) = heldout {
        ctx.manifest.input("heldout", p)?;
        let h = jsonl::corpus_with_vocabulary(read_records(p)?, corpus.vocabulary().clone())?
            .align_to(&corpus);
        results.push((
            "heldout_log_likelihood".into(),
            likelihood(&est, &h, &opts)?.to_string(),
        ));
        results.push((
            "heldout_perplexity".into(),
            perplexity(&est, &h, &opts)?.to_string(),
        ));
    }
    let reference = match pmi_reference {
        Some(p) => {
            ctx.manifest.input("pmi_reference", p)?;
            jsonl::corpus_with_vocabulary(read_records(p)?, corpus.vocabulary().clone())?
        }
        None => corpus.clone(),
    };
    results.push((
        "pmi_score".into(),
        pmi_score(&est, &reference, top, source)?.to_string(),
    ));
    let text = summary_text(&results);
    ctx.write("eval.txt", &text)?;
    io_out(out, &text)?;
    ctx.finish(&["eval.txt"])
}

fn cmd_report(
    common: Common,
    estimates: &Path,
    vocab_path: &Path,
    top: usize,
    user_topics: usize,
    out: &mut dyn Write,
) -> Result<()> {
    let mut ctx = Ctx::new("report", common)?;
    ctx.guard(
        &[Some(estimates), Some(vocab_path)],
        &[
            "topics.txt",
            "top_words.tsv",
            "users.tsv",
            "jsd.tsv",
            "jsd_histograms.tsv",
            "manifest.txt",
        ],
    )?;
    ctx.manifest.input("estimates", estimates)?;
    ctx.manifest.input("vocab", vocab_path)?;
    ctx.manifest.set("report.top", top);
    ctx.manifest.set("report.user_topics", user_topics);
    let (est, _) = read_estimates(estimates)?;
    let vocab = Vocabulary::new(read_word_list(vocab_path)?)?;
    if vocab.len() != est.dims.vocab {
        return Err(Error::VocabularyMismatch {
            expected: format!("{} words", est.dims.vocab),
            found: format!("{} words", vocab.len()),
        });
    }
    let report = topic_report(&est, top, user_topics);
    let word = |w: u32| vocab.word(w);

    let mut table = String::new();
    let mut records = String::from("scope\tnetwork\ttopic\trank\tword\tprobability\n");
    for t in &report.topics {
        let _ = writeln!(table, "Topic {}", t.topic);
        let mut header = format!("{:<24}", "global");
        for s in 0..t.local.len() {
            header.push_str(&format!("{:<24}", format!("local network {s}")));
        }
        let _ = writeln!(table, "{}", header.trim_end());
        for rank in 0..t.global.len() {
            let (w, p) = t.global[rank];
            let mut line = format!("{:<24}", format!("{} {:.4}", word(w), p));
            let _ = writeln!(
                records,
                "global\t\t{}\t{}\t{}\t{p}",
                t.topic,
                rank + 1,
                word(w)
            );
            for (s, local) in t.local.iter().enumerate() {
                let (w, p) = local[rank];
                line.push_str(&format!("{:<24}", format!("{} {:.4}", word(w), p)));
                let _ = writeln!(
                    records,
                    "local\t{s}\t{}\t{}\t{}\t{p}",
                    t.topic,
                    rank + 1,
                    word(w)
                );
            }
            let _ = writeln!(table, "{}", line.trim_end());
        }
        table.push('\n');
    }
    let _ = writeln!(table, "Background");
    for (rank, &(w, p)) in report.background.iter().enumerate() {
        let _ = writeln!(table, "{} {:.4}", word(w), p);
        let _ = writeln!(records, "background\t\t\t{}\t{}\t{p}", rank + 1, word(w));
    }

    let mut users = String::from("user\trank\ttopic\ttheta\trho\n");
    for u in &report.users {
        for (rank, (k, theta, rho)) in u.top_topics.iter().enumerate() {
            let rho: Vec<String> = rho.iter().map(f64::to_string).collect();
            let _ = writeln!(
                users,
                "{}\t{}\t{k}\t{theta}\t{}",
                u.user,
                rank + 1,
                rho.join(",")
            );
        }
    }

    let jr = jsd_report(&est);
    let mut jsd_rows = String::from("kind\ttopic\tnetwork_a\tnetwork_b\tjsd\n");
    for e in &jr.pairwise_local {
        let _ = writeln!(
            jsd_rows,
            "local_pair\t{}\t{}\t{}\t{}",
            e.topic, e.network_a, e.network_b, e.jsd
        );
    }
    for e in &jr.local_vs_global {
        let _ = writeln!(
            jsd_rows,
            "local_vs_global\t{}\t{}\t\t{}",
            e.topic, e.network, e.jsd
        );
    }
    let mut hist = String::from("kind\tbin_low\tbin_high\tcount\n");
    for (kind, h) in [
        ("local_pair", &jr.pairwise_histogram),
        ("local_vs_global", &jr.local_vs_global_histogram),
    ] {
        for (lo, hi, c) in h.rows() {
            let _ = writeln!(hist, "{kind}\t{lo:.2}\t{hi:.2}\t{c}");
        }
    }
    ctx.write("topics.txt", &table)?;
    ctx.write("top_words.tsv", &records)?;
    ctx.write("users.tsv", &users)?;
    ctx.write("jsd.tsv", &jsd_rows)?;
    ctx.write("jsd_histograms.tsv", &hist)?;
    io_out(out, &table)?;
    io_out(
        out,
        &format!(
            "mean_jsd_local_vs_global={}\nmean_jsd_local_pairs={}\n",
            jr.mean_local_vs_global(),
            jr.mean_pairwise_local()
        ),
    )?;
    ctx.finish(&[
        "topics.txt",
        "top_words.tsv",
        "users.tsv",
        "jsd.tsv",
        "jsd_histograms.tsv",
    ])
}

fn cmd_recover(
    common: Common,
    model: ModelArgs,
    generate: GenerateArgs,
    train: TrainArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let mut ctx = Ctx::new("recover", common)?;
    let hp = model.overlay(ctx.file.model.clone()).hyperparameters()?;
    let gen = generate
        .overlay(ctx.file.generate.clone())
        .gen_config(hp, ctx.seed)?;
    let train = train.overlay(ctx.file.train.clone());
    train.train_config(ctx.seed)?;
    train.chains()?;
    let (corpus, truth) = generate_into(&mut ctx, &gen)?;
    let Trained {
        estimates,
        mut summary,
    } = train_into(&mut ctx, &corpus, &hp, train, out)?;
    let d = estimates.dims;
    let m = match_topics(&estimates.phi_global, &truth.params.phi_global, d.vocab)?;
    summary.push((
        "mean_matched_jsd_phi_global".into(),
        m.mean_jsd().to_string(),
    ));
    for s in 0..d.networks {
        let mut total = 0.0;
        for e in 0..d.topics {
            total += jsd(
                estimates.phi_local_row(s, e),
                truth.params.phi_local_row(s, m.estimated_to_truth[e]),
            )?;
        }
        summary.push((
            format!("mean_matched_jsd_phi_local.{s}"),
            (total / d.topics as f64).to_string(),
        ));
    }
    let perm: Vec<String> = m.estimated_to_truth.iter().map(usize::to_string).collect();
    summary.push(("estimated_to_truth".into(), perm.join(",")));
    let text = summary_text(&summary);
    ctx.write("summary.txt", &text)?;
    io_out(out, &text)?;
    ctx.finish(&[
        "corpus.jsonl",
        "vocab.txt",
        "truth.tsv",
        "truth_checkpoint.txt",
        "checkpoint.txt",
        "estimates.tsv",
        "diagnostics.csv",
        "summary.txt",
    ])
}
