mod common;

use common::{corpus, max_rel_err, oracle, random_assignments, random_corpus};
use msnt_core::model::{BACKGROUND, GLOBAL};
use msnt_core::sampler::TrainOutput;
use msnt_core::{
    estimate_parameters, init_state, recount, seeded_rng, train, Corpus, EstimateMode, GibbsState,
    Hyperparameters, LatentAssignments, TrainConfig,
};
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

fn tiny_hp() -> Hyperparameters {
    let mut hp = Hyperparameters::with_defaults(2);
    hp.alpha = 0.3;
    hp.beta_global = 0.2;
    hp.beta_local = 0.05;
    hp.beta_background = 0.1;
    hp.lambda = 0.4;
    hp.tau_switch = [0.7, 0.3];
    hp.tau_background = [0.6, 0.9];
    hp
}

fn check_against_oracle(c: &Corpus, hp: &Hyperparameters, a: &LatentAssignments) {
    let state = GibbsState::new(c, *hp, a.clone()).unwrap();
    for post in 0..state.num_posts() {
        for token in 0..state.post_len(post) {
            let mut s = state.clone();
            s.remove_token(post, token);
            let got = s.conditional_word_switch(post, token).normalized();
            let want = oracle::switch_conditional(c, hp, a, post, token);
            let err = max_rel_err(&got, &want);
            assert!(err < 1e-10, "switch {post}/{token}: {got:?} vs {want:?}");
        }
        let mut s = state.clone();
        s.remove_post(post);
        let got = s.conditional_post_topic(post).normalized();
        let want = oracle::topic_conditional(c, hp, a, post);
        let err = max_rel_err(&got, &want);
        assert!(err < 1e-10, "topic {post}: {got:?} vs {want:?}");
    }
}

#[test]
fn conditionals_match_recount_oracle_on_random_states() {
    let mut rng = seeded_rng(7);
    let hp = tiny_hp();
    for _ in 0..1000 {
        let c = random_corpus(&mut rng, 2, 2, 5, 3, 3);
        let a = random_assignments(&mut rng, &c, 2);
        check_against_oracle(&c, &hp, &a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn conditionals_match_oracle_for_any_priors(
        seed in any::<u64>(),
        alpha in 0.01f64..5.0,
        beta in 0.001f64..2.0,
        lambda in 0.01f64..3.0,
        t0 in 0.05f64..3.0,
        t1 in 0.05f64..3.0,
        k in 1usize..4,
    ) {
        let mut rng = seeded_rng(seed);
        let c = random_corpus(&mut rng, 2, 2, 5, 4, 3);
        let mut hp = Hyperparameters::with_defaults(k);
        hp.alpha = alpha;
        hp.beta_global = beta;
        hp.beta_local = beta * 2.0;
        hp.beta_background = beta / 2.0;
        hp.lambda = lambda;
        hp.tau_switch = [t0, t1];
        hp.tau_background = [t1, t0];
        let a = random_assignments(&mut rng, &c, k);
        check_against_oracle(&c, &hp, &a);
    }
}

#[test]
fn switch_weights_from_empty_counts_are_prior_ratios() {
    let c = corpus(1, 1, 4, &[(0, 0, &[2])]);
    let hp = Hyperparameters::with_defaults(3);
    let a = LatentAssignments {
        post_topic: vec![1],
        token_switch: vec![GLOBAL],
    };
    let mut s = GibbsState::new(&c, hp, a).unwrap();
    s.remove_token(0, 0);
    let p = s.conditional_word_switch(0, 0).normalized();
    for (got, want) in p.iter().zip([0.25, 0.25, 0.5]) {
        assert!((got - want).abs() < 1e-12, "{p:?}");
    }
}

#[test]
fn frequent_background_word_prefers_background() {
    let c = corpus(1, 1, 3, &[(0, 0, &[0; 20]), (0, 0, &[0])]);
    let hp = Hyperparameters::with_defaults(2);
    let mut switches = vec![BACKGROUND; 20];
    switches.push(GLOBAL);
    let a = LatentAssignments {
        post_topic: vec![0, 1],
        token_switch: switches,
    };
    let mut s = GibbsState::new(&c, hp, a).unwrap();
    s.remove_token(1, 0);
    let w = s.conditional_word_switch(1, 0).weights;
    assert!(w[2] > w[0] && w[2] > w[1], "{w:?}");
}

#[test]
fn symmetric_single_token_topic_weights_are_uniform() {
    let c = corpus(1, 2, 5, &[(0, 1, &[3])]);
    let hp = Hyperparameters::with_defaults(2);
    let a = LatentAssignments {
        post_topic: vec![0],
        token_switch: vec![GLOBAL],
    };
    let mut s = GibbsState::new(&c, hp, a).unwrap();
    s.remove_post(0);
    let p = s.conditional_post_topic(0).normalized();
    assert!(
        (p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12,
        "{p:?}"
    );
}

#[test]
fn user_topic_counts_drive_the_topic_ratio() {
    // 9 earlier posts on topic 0, one network, background-only tokens: only
    // the user-topic factor differs between topics.
    let posts: Vec<(usize, usize, &[u32])> = (0..10).map(|_| (0, 0, &[1u32][..])).collect();
    let c = corpus(1, 1, 4, &posts);
    let hp = Hyperparameters::with_defaults(80);
    assert_eq!(hp.alpha, 0.625);
    let a = LatentAssignments {
        post_topic: vec![0; 10],
        token_switch: vec![BACKGROUND; 10],
    };
    let mut s = GibbsState::new(&c, hp, a).unwrap();
    s.remove_post(9);
    let w = s.conditional_post_topic(9).weights;
    assert!(
        (w[0] / w[1] - 9.625 / 0.625).abs() < 1e-9,
        "{}",
        w[0] / w[1]
    );
    assert!((w[1] - w[79]).abs() < 1e-15);
}

#[test]
fn ten_thousand_token_post_stays_finite() {
    // Topics 0 and 1 have identical word evidence, so only the user-topic
    // factor separates them even though the word product underflows f64.
    let long = vec![0u32; 10_000];
    let c = corpus(
        1,
        1,
        3,
        &[
            (0, 0, &long),
            (0, 0, &[0; 5]),
            (0, 0, &[0; 5]),
            (0, 0, &[2]),
        ],
    );
    let hp = Hyperparameters::with_defaults(2);
    let mut switches = vec![GLOBAL; 10_010];
    switches.push(BACKGROUND);
    let a = LatentAssignments {
        post_topic: vec![0, 0, 1, 0],
        token_switch: switches,
    };
    let mut s = GibbsState::new(&c, hp, a).unwrap();
    s.remove_post(0);
    let p = s.conditional_post_topic(0).normalized();
    let alpha = hp.alpha;
    let want = [
        (2.0 + alpha) / (3.0 + 2.0 * alpha),
        (1.0 + alpha) / (3.0 + 2.0 * alpha),
    ];
    assert!(p.iter().all(|x| x.is_finite()));
    assert!(max_rel_err(&p, &want) < 1e-12, "{p:?} vs {want:?}");
}

#[test]
fn sweep_on_empty_corpus_is_a_no_op() {
    let c = corpus(2, 2, 3, &[]);
    let hp = Hyperparameters::with_defaults(3);
    let empty = LatentAssignments {
        post_topic: vec![],
        token_switch: vec![],
    };
    let mut s = GibbsState::new(&c, hp, empty.clone()).unwrap();
    let before = s.counts().clone();
    s.sweep(&mut seeded_rng(1));
    assert_eq!(s.assignments(), &empty);
    assert_eq!(s.counts(), &before);
}

#[test]
fn sweeps_preserve_totals_and_match_recount() {
    let mut rng = seeded_rng(3);
    let c = random_corpus(&mut rng, 6, 3, 20, 60, 8);
    let hp = Hyperparameters::with_defaults(4);
    let mut s = GibbsState::initialize(&c, hp, 11).unwrap();
    let tokens = c.num_tokens() as u64;
    for _ in 0..20 {
        s.sweep(&mut rng);
        let t = s.counts();
        assert_eq!(t.switch_totals().iter().sum::<u64>(), tokens);
        assert_eq!(
            t.user_topic.iter().map(|&x| u64::from(x)).sum::<u64>(),
            c.num_posts() as u64
        );
        assert_eq!(
            t.user_topic_network
                .iter()
                .map(|&x| u64::from(x))
                .sum::<u64>(),
            c.num_posts() as u64
        );
        assert_eq!(
            u64::from(t.switch_background[0] + t.switch_background[1]),
            tokens
        );
        assert_eq!(&recount(&c, 4, s.assignments()).unwrap(), t);
    }
}

/// Collapsed log joint up to constants, from scratch.
fn log_joint(c: &Corpus, hp: &Hyperparameters, a: &LatentAssignments) -> f64 {
    let t = recount(c, hp.num_topics, a).unwrap();
    let d = t.dims;
    let dir = |counts: &[u32], prior: f64| -> f64 {
        let n: f64 = counts.iter().map(|&x| f64::from(x)).sum();
        counts
            .iter()
            .map(|&x| ln_gamma(f64::from(x) + prior))
            .sum::<f64>()
            - ln_gamma(n + counts.len() as f64 * prior)
    };
    let dir2 = |counts: &[u32], prior: [f64; 2]| -> f64 {
        let n = f64::from(counts[0] + counts[1]);
        ln_gamma(f64::from(counts[0]) + prior[0]) + ln_gamma(f64::from(counts[1]) + prior[1])
            - ln_gamma(n + prior[0] + prior[1])
    };
    let mut lj = 0.0;
    lj += t
        .user_topic
        .chunks(d.topics)
        .map(|r| dir(r, hp.alpha))
        .sum::<f64>();
    lj += t
        .user_topic_network
        .chunks(d.networks)
        .map(|r| dir(r, hp.lambda))
        .sum::<f64>();
    lj += t
        .global_topic_word
        .chunks(d.vocab)
        .map(|r| dir(r, hp.beta_global))
        .sum::<f64>();
    lj += t
        .local_topic_word
        .chunks(d.vocab)
        .map(|r| dir(r, hp.beta_local))
        .sum::<f64>();
    lj += dir(&t.background_word, hp.beta_background);
    lj += t
        .switch_global_local
        .chunks(2)
        .map(|r| dir2(r, hp.tau_switch))
        .sum::<f64>();
    lj += dir2(&t.switch_background, hp.tau_background);
    lj
}

#[test]
fn single_post_topic_frequencies_match_enumeration() {
    let c = corpus(1, 1, 3, &[(0, 0, &[1])]);
    let mut hp = Hyperparameters::with_defaults(3);
    hp.alpha = 0.4;
    let mut exact = [0.0; 3];
    for z in 0..3u32 {
        for x in 0..3u8 {
            let a = LatentAssignments {
                post_topic: vec![z],
                token_switch: vec![x],
            };
            exact[z as usize] += log_joint(&c, &hp, &a).exp();
        }
    }
    let total: f64 = exact.iter().sum();
    exact.iter_mut().for_each(|p| *p /= total);

    let mut s = GibbsState::initialize(&c, hp, 5).unwrap();
    let mut rng = seeded_rng(99);
    let mut freq = [0.0; 3];
    let n = 50_000;
    for _ in 0..n {
        s.sweep(&mut rng);
        freq[s.assignments().post_topic[0] as usize] += 1.0 / n as f64;
    }
    for k in 0..3 {
        assert!((freq[k] - exact[k]).abs() < 0.02, "{freq:?} vs {exact:?}");
    }
}

#[test]
fn three_post_joint_matches_enumeration() {
    // Single-token posts make the blocked topic conditional exact, so the
    // chain targets the collapsed joint.
    let c = corpus(2, 2, 3, &[(0, 0, &[0]), (0, 1, &[0]), (1, 1, &[2])]);
    let hp = tiny_hp();
    let mut exact = vec![0.0; 8];
    for code in 0..8 * 27 {
        let zs = code % 8;
        let xs = code / 8;
        let a = LatentAssignments {
            post_topic: (0..3).map(|i| (zs >> i) as u32 & 1).collect(),
            token_switch: vec![(xs % 3) as u8, (xs / 3 % 3) as u8, (xs / 9) as u8],
        };
        exact[zs] += log_joint(&c, &hp, &a).exp();
    }
    let total: f64 = exact.iter().sum();
    exact.iter_mut().for_each(|p| *p /= total);

    let mut s = GibbsState::initialize(&c, hp, 1).unwrap();
    let mut rng = seeded_rng(2);
    let n = 100_000;
    let mut freq = vec![0.0; 8];
    for _ in 0..n {
        s.sweep(&mut rng);
        let z = &s.assignments().post_topic;
        freq[(z[0] | z[1] << 1 | z[2] << 2) as usize] += 1.0 / n as f64;
    }
    for i in 0..8 {
        assert!((freq[i] - exact[i]).abs() < 0.02, "{freq:?} vs {exact:?}");
    }
}

fn small_corpus() -> Corpus {
    random_corpus(&mut seeded_rng(21), 8, 2, 30, 80, 6)
}

fn config(max_iters: usize) -> TrainConfig {
    TrainConfig {
        max_iters,
        burn_in: 0,
        log_every: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic() {
    let c = small_corpus();
    let hp = Hyperparameters::with_defaults(3);
    let a = train(&c, &hp, &config(15)).unwrap();
    let b = train(&c, &hp, &config(15)).unwrap();
    assert_eq!(a.estimates, b.estimates);
    assert_eq!(a.assignments, b.assignments);
    assert_eq!(a.diagnostics, b.diagnostics);
    let mut other = config(15);
    other.seed += 1;
    assert_ne!(train(&c, &hp, &other).unwrap().assignments, a.assignments);
}

#[test]
fn zero_sweeps_return_the_initial_estimates() {
    let c = small_corpus();
    let hp = Hyperparameters::with_defaults(3);
    let cfg = config(0);
    let TrainOutput {
        estimates,
        diagnostics,
        assignments,
        ..
    } = train(&c, &hp, &cfg).unwrap();
    let (init, counts) = init_state(&c, &hp, cfg.seed).unwrap();
    assert_eq!(assignments, init);
    assert_eq!(estimates, estimate_parameters(&hp, &counts));
    assert!(diagnostics.trace.is_empty());
    assert_eq!(diagnostics.sweeps, 0);
}

#[test]
fn trace_logs_first_periodic_and_last_sweeps() {
    let c = small_corpus();
    let hp = Hyperparameters::with_defaults(3);
    let out = train(&c, &hp, &config(12)).unwrap();
    let iters: Vec<usize> = out.diagnostics.trace.iter().map(|p| p.iteration).collect();
    assert_eq!(iters, vec![1, 5, 10, 12]);
    for p in &out.diagnostics.trace {
        assert!((p.switch_fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.train_perplexity.is_finite() && p.train_perplexity > 1.0);
    }
}

#[test]
fn averaged_estimates_are_normalized() {
    let c = small_corpus();
    let hp = Hyperparameters::with_defaults(3);
    let cfg = TrainConfig {
        max_iters: 20,
        burn_in: 10,
        estimate_mode: EstimateMode::Average {
            snapshots: 5,
            spacing: 2,
        },
        ..config(20)
    };
    let out = train(&c, &hp, &cfg).unwrap();
    for u in 0..c.num_users() {
        assert!((out.estimates.theta_row(u).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let bad = TrainConfig { burn_in: 20, ..cfg };
    assert!(train(&c, &hp, &bad).is_err());
    let too_long = TrainConfig {
        estimate_mode: EstimateMode::Average {
            snapshots: 6,
            spacing: 2,
        },
        ..cfg
    };
    assert!(train(&c, &hp, &too_long).is_err());
}
