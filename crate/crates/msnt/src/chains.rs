use msnt_core::sampler::{train_with_observer, LogPoint, TrainOutput};
use msnt_core::{Corpus, Hyperparameters, TrainConfig};

use crate::error::Result;

pub struct ChainResult {
    pub seed: u64,
    pub output: TrainOutput,
}

/// Runs `chains` independent chains on seeds `config.seed + i`, one thread
/// each, and returns the one with the highest training log-likelihood (the
/// lowest seed on ties). Only the first chain reports to `on_log`.
pub fn run_chains(
    corpus: &Corpus,
    hp: &Hyperparameters,
    config: &TrainConfig,
    chains: usize,
    on_log: impl FnMut(&LogPoint) + Send,
) -> Result<ChainResult> {
    let seeds: Vec<u64> = (0..chains.max(1) as u64)
        .map(|i| config.seed.wrapping_add(i))
        .collect();
    let mut results: Vec<Result<TrainOutput>> = Vec::with_capacity(seeds.len());
    std::thread::scope(|scope| {
        let mut on_log = Some(on_log);
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let cfg = TrainConfig { seed, ..*config };
                let mut observer = on_log.take();
                scope.spawn(move || {
                    train_with_observer(corpus, hp, &cfg, |p| {
                        if let Some(f) = observer.as_mut() {
                            f(p)
                        }
                    })
                    .map_err(Into::into)
                })
            })
            .collect();
        for h in handles {
            results.push(h.join().expect("training thread panicked"));
        }
    });
    let mut best: Option<ChainResult> = None;
    for (seed, out) in seeds.into_iter().zip(results) {
        let output = out?;
        let better = best.as_ref().is_none_or(|b| {
            output.diagnostics.final_log_likelihood > b.output.diagnostics.final_log_likelihood
        });
        if better {
            best = Some(ChainResult { seed, output });
        }
    }
    Ok(best.expect("at least one chain"))
}
