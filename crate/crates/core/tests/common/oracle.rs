//! Straight-line conditionals recomputed from the assignments alone.

use msnt_core::{Corpus, Hyperparameters, LatentAssignments};

pub struct Token {
    pub post: usize,
    pub user: usize,
    pub network: usize,
    pub word: usize,
    pub switch: u8,
    pub topic: usize,
}

pub fn tokens(corpus: &Corpus, a: &LatentAssignments) -> Vec<Token> {
    let mut out = Vec::new();
    let mut flat = 0;
    for (p, (u, s, post)) in corpus.iter_posts().enumerate() {
        for &w in &post.tokens {
            out.push(Token {
                post: p,
                user: u,
                network: s,
                word: w as usize,
                switch: a.token_switch[flat],
                topic: a.post_topic[p] as usize,
            });
            flat += 1;
        }
    }
    out
}

fn count(ts: &[Token], keep: impl Fn(&Token) -> bool) -> f64 {
    ts.iter().filter(|t| keep(t)).count() as f64
}

/// Normalized switch weights for token `index` of `post`, all counts taken
/// without that token.
pub fn switch_conditional(
    corpus: &Corpus,
    hp: &Hyperparameters,
    a: &LatentAssignments,
    post: usize,
    index: usize,
) -> [f64; 3] {
    let all = tokens(corpus, a);
    let first = all.iter().position(|t| t.post == post).unwrap();
    let me = &all[first + index];
    let (z, h, w) = (me.topic, me.network, me.word);
    let v = corpus.vocab_size() as f64;
    let others: Vec<&Token> = all
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != first + index)
        .map(|(_, t)| t)
        .collect();
    let c = |f: &dyn Fn(&Token) -> bool| others.iter().filter(|t| f(t)).count() as f64;

    let n_nonbg = c(&|t| t.switch != 2);
    let n_bg = c(&|t| t.switch == 2);
    let n_g = c(&|t| t.switch == 0 && t.network == h && t.topic == z);
    let n_l = c(&|t| t.switch == 1 && t.network == h && t.topic == z);
    let g_w = c(&|t| t.switch == 0 && t.topic == z && t.word == w);
    let g_tot = c(&|t| t.switch == 0 && t.topic == z);
    let l_w = c(&|t| t.switch == 1 && t.topic == z && t.network == h && t.word == w);
    let l_tot = c(&|t| t.switch == 1 && t.topic == z && t.network == h);
    let b_w = c(&|t| t.switch == 2 && t.word == w);

    let tb = hp.tau_background;
    let ts = hp.tau_switch;
    let nonbg = (n_nonbg + tb[0]) / (n_nonbg + n_bg + tb[0] + tb[1]);
    let bg = (n_bg + tb[1]) / (n_nonbg + n_bg + tb[0] + tb[1]);
    let w0 = nonbg * (n_g + ts[0]) / (n_g + n_l + ts[0] + ts[1]) * (g_w + hp.beta_global)
        / (g_tot + v * hp.beta_global);
    let w1 = nonbg * (n_l + ts[1]) / (n_g + n_l + ts[0] + ts[1]) * (l_w + hp.beta_local)
        / (l_tot + v * hp.beta_local);
    let w2 = bg * (b_w + hp.beta_background) / (n_bg + v * hp.beta_background);
    let z = w0 + w1 + w2;
    [w0 / z, w1 / z, w2 / z]
}

/// Normalized topic weights for `post` with the whole post left out of
/// every count.
pub fn topic_conditional(
    corpus: &Corpus,
    hp: &Hyperparameters,
    a: &LatentAssignments,
    post: usize,
) -> Vec<f64> {
    let k_topics = hp.num_topics;
    let s_networks = corpus.num_networks() as f64;
    let v = corpus.vocab_size() as f64;
    let all = tokens(corpus, a);
    let others: Vec<Token> = all.into_iter().filter(|t| t.post != post).collect();
    let mine: Vec<Token> = tokens(corpus, a)
        .into_iter()
        .filter(|t| t.post == post)
        .collect();
    let (u, h) = corpus
        .iter_posts()
        .nth(post)
        .map(|(u, s, _)| (u, s))
        .unwrap();
    let post_meta: Vec<(usize, usize, usize)> = corpus
        .iter_posts()
        .enumerate()
        .filter(|&(p, _)| p != post)
        .map(|(p, (pu, ps, _))| (pu, ps, a.post_topic[p] as usize))
        .collect();
    let n_u = post_meta.iter().filter(|m| m.0 == u).count() as f64;

    let mut weights = Vec::with_capacity(k_topics);
    for k in 0..k_topics {
        let n_uk = post_meta.iter().filter(|m| m.0 == u && m.2 == k).count() as f64;
        let n_ukh = post_meta
            .iter()
            .filter(|m| m.0 == u && m.2 == k && m.1 == h)
            .count() as f64;
        let mut wgt = (n_uk + hp.alpha) / (n_u + k_topics as f64 * hp.alpha) * (n_ukh + hp.lambda)
            / (n_uk + s_networks * hp.lambda);
        let n_g = count(&others, |t| t.switch == 0 && t.network == h && t.topic == k);
        let n_l = count(&others, |t| t.switch == 1 && t.network == h && t.topic == k);
        let g_tot = count(&others, |t| t.switch == 0 && t.topic == k);
        let l_tot = count(&others, |t| t.switch == 1 && t.network == h && t.topic == k);
        let sw = n_g + n_l + hp.tau_switch[0] + hp.tau_switch[1];
        for t in &mine {
            match t.switch {
                0 => {
                    let g_w = count(&others, |o| {
                        o.switch == 0 && o.topic == k && o.word == t.word
                    });
                    wgt *= (n_g + hp.tau_switch[0]) / sw * (g_w + hp.beta_global)
                        / (g_tot + v * hp.beta_global);
                }
                1 => {
                    let l_w = count(&others, |o| {
                        o.switch == 1 && o.topic == k && o.network == h && o.word == t.word
                    });
                    wgt *= (n_l + hp.tau_switch[1]) / sw * (l_w + hp.beta_local)
                        / (l_tot + v * hp.beta_local);
                }
                _ => {}
            }
        }
        weights.push(wgt);
    }
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}
