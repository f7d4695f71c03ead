mod common;

use common::{corpus, max_rel_err, random_corpus};
use msnt_core::baseline::{lda_perplexity, train_lda, LdaConfig, LdaModel, LdaState};
use msnt_core::evaluation::match_topics;
use msnt_core::generator::{generate_corpus, sample_ground_truth, GenConfig, GenMode, PostLength};
use msnt_core::{seeded_rng, train, Hyperparameters, TrainConfig};

fn cfg(k: usize) -> LdaConfig {
    LdaConfig {
        num_topics: k,
        alpha: 0.5,
        beta: 0.05,
        iters: 30,
        seed: 3,
    }
}

#[test]
fn single_topic_phi_is_the_smoothed_unigram() {
    let c = corpus(
        2,
        2,
        4,
        &[(0, 0, &[0, 0, 1]), (1, 1, &[3, 0]), (1, 0, &[1])],
    );
    let m = train_lda(&c, cfg(1)).unwrap();
    let counts = [3.0, 2.0, 0.0, 1.0];
    for (w, &n) in counts.iter().enumerate() {
        let want = (n + 0.05) / (6.0 + 4.0 * 0.05);
        assert!((m.phi_row(0)[w] - want).abs() < 1e-12);
    }
    assert!(m.theta.iter().all(|&t| t == 1.0));
}

#[test]
fn conditional_matches_recount_oracle() {
    let mut rng = seeded_rng(11);
    let config = cfg(3);
    for _ in 0..200 {
        let c = random_corpus(&mut rng, 3, 2, 6, 5, 4);
        let mut state = LdaState::initialize(&c, config).unwrap();
        for _ in 0..2 {
            state.sweep(&mut rng);
        }
        for d in 0..state.num_docs() {
            for i in 0..state.doc_len(d) {
                let mut s = state.clone();
                s.remove_token(d, i);
                let got = s.conditional(d, i).normalized();
                let w = state.doc_tokens(d)[i];
                let mut want = vec![0.0; 3];
                for (k, slot) in want.iter_mut().enumerate() {
                    let mut n_dk = 0.0;
                    let (mut n_kw, mut n_k) = (0.0, 0.0);
                    for e in 0..state.num_docs() {
                        for (j, (&ww, &z)) in state
                            .doc_tokens(e)
                            .iter()
                            .zip(state.token_topics(e))
                            .enumerate()
                        {
                            if (e, j) == (d, i) || z as usize != k {
                                continue;
                            }
                            n_k += 1.0;
                            if ww == w {
                                n_kw += 1.0;
                            }
                            if e == d {
                                n_dk += 1.0;
                            }
                        }
                    }
                    *slot =
                        (n_dk + config.alpha) * (n_kw + config.beta) / (n_k + 6.0 * config.beta);
                }
                let t: f64 = want.iter().sum();
                want.iter_mut().for_each(|x| *x /= t);
                assert!(max_rel_err(&got, &want) < 1e-10);
            }
        }
    }
}

fn model(theta: Vec<f64>, phi: Vec<f64>, k: usize, v: usize) -> LdaModel {
    LdaModel {
        num_topics: k,
        vocab: v,
        alpha: 0.1,
        beta: 0.1,
        theta,
        phi,
    }
}

#[test]
fn uniform_phi_has_perplexity_v() {
    let m = model(vec![0.2, 0.8, 0.6, 0.4], vec![0.2; 10], 2, 5);
    let c = corpus(2, 1, 5, &[(0, 0, &[0, 4, 4]), (1, 0, &[2])]);
    assert!((lda_perplexity(&m, &c).unwrap() / 5.0 - 1.0).abs() < 1e-12);
}

#[test]
fn single_word_vocabulary_has_perplexity_one() {
    let m = model(vec![0.5, 0.5], vec![1.0, 1.0], 2, 1);
    let c = corpus(1, 2, 1, &[(0, 0, &[0, 0]), (0, 1, &[0])]);
    assert!((lda_perplexity(&m, &c).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn two_document_hand_case() {
    let m = model(
        vec![0.9, 0.1, 0.3, 0.7],
        vec![0.5, 0.3, 0.2, 0.1, 0.1, 0.8],
        2,
        3,
    );
    let c = corpus(2, 1, 3, &[(0, 0, &[0, 2]), (1, 0, &[1])]);
    // doc 0: w0 0.9*0.5 + 0.1*0.1 = 0.46, w2 0.9*0.2 + 0.1*0.8 = 0.26
    // doc 1: w1 0.3*0.3 + 0.7*0.1 = 0.16
    let want = (-(0.46f64.ln() + 0.26f64.ln() + 0.16f64.ln()) / 3.0).exp();
    assert!((lda_perplexity(&m, &c).unwrap() - want).abs() < 1e-12);
    let wrong = corpus(3, 1, 3, &[(0, 0, &[0])]);
    assert!(lda_perplexity(&m, &wrong).is_err());
    let empty = corpus(2, 1, 3, &[]);
    assert!(lda_perplexity(&m, &empty).is_err());
}

#[test]
fn rows_are_distributions() {
    let c = random_corpus(&mut seeded_rng(4), 5, 2, 30, 40, 6);
    let m = train_lda(&c, cfg(4)).unwrap();
    assert_eq!(m.num_docs(), 5);
    for r in m.theta.chunks(4).chain(m.phi.chunks(30)) {
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    assert_eq!(m, train_lda(&c, cfg(4)).unwrap());
}

#[test]
fn agrees_with_global_only_sampler_on_one_network() {
    let mut hyper = Hyperparameters::with_defaults(4);
    hyper.alpha = 0.3;
    let gen = GenConfig {
        users: 40,
        networks: 1,
        vocab: 100,
        posts_per_user_network: 30,
        length: PostLength::Fixed(10),
        mode: GenMode::Balanced,
        hyper,
        seed: 5,
    };
    let mut truth = sample_ground_truth(&gen).unwrap();
    truth.params.sigma_background = [1.0, 0.0];
    truth
        .params
        .sigma_switch
        .chunks_mut(2)
        .for_each(|r| r.copy_from_slice(&[1.0, 0.0]));
    let (c, _) = generate_corpus(&truth, &gen).unwrap();

    let mut hp = Hyperparameters::with_defaults(4);
    hp.alpha = 0.3;
    hp.tau_background = [1e6, 1e-6];
    hp.tau_switch = [1e6, 1e-6];
    let iters = 150;
    let msnt = train(
        &c,
        &hp,
        &TrainConfig {
            max_iters: iters,
            burn_in: 0,
            log_every: 0,
            seed: 5,
            ..Default::default()
        },
    )
    .unwrap();
    let lda = train_lda(
        &c,
        LdaConfig {
            num_topics: 4,
            alpha: 0.3,
            beta: 0.01,
            iters,
            seed: 5,
        },
    )
    .unwrap();
    let m = match_topics(&msnt.estimates.phi_global, &lda.phi, 100).unwrap();
    assert!(m.mean_jsd() < 0.1, "{:?}", m.jsd);
}
