//! Run configuration. Every field is optional both on the command line and in
//! the TOML file; flags win over the file, the file over built-in defaults.

use std::path::Path;

use clap::{Args, ValueEnum};
use msnt_core::generator::{GenConfig, GenMode, PostLength};
use msnt_core::{EstimateMode, Hyperparameters, TrainConfig};
use serde::Deserialize;

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 20_200_101;
pub const DEFAULT_TOPICS: usize = 80;

macro_rules! overlay {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl $ty {
            /// Fields set in `self` win over `base`.
            pub fn overlay(self, base: Self) -> Self {
                Self { $($field: self.$field.or(base.$field)),* }
            }
        }
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArgs {
    /// Number of topics K [default: 80]
    #[arg(long)]
    pub topics: Option<usize>,
    /// Prior on user topic preferences [default: 50 / K]
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta_global: Option<f64>,
    #[arg(long)]
    pub beta_local: Option<f64>,
    #[arg(long)]
    pub beta_background: Option<f64>,
    /// Prior on (user, topic) network preferences
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Switch prior as GLOBAL,LOCAL
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub tau_switch: Option<Vec<f64>>,
    /// Background prior as NON_BACKGROUND,BACKGROUND
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub tau_background: Option<Vec<f64>>,
}
overlay!(ModelArgs {
    topics,
    alpha,
    beta_global,
    beta_local,
    beta_background,
    lambda,
    tau_switch,
    tau_background
});

fn pair(name: &str, v: &Option<Vec<f64>>, default: [f64; 2]) -> Result<[f64; 2]> {
    match v.as_deref() {
        None => Ok(default),
        Some([a, b]) => Ok([*a, *b]),
        Some(other) => Err(Error::Config(format!(
            "{name} needs 2 values, got {}",
            other.len()
        ))),
    }
}

impl ModelArgs {
    pub fn hyperparameters(&self) -> Result<Hyperparameters> {
        let k = self.topics.unwrap_or(DEFAULT_TOPICS);
        let d = Hyperparameters::with_defaults(k);
        let hp = Hyperparameters {
            num_topics: k,
            alpha: self.alpha.unwrap_or(d.alpha),
            beta_global: self.beta_global.unwrap_or(d.beta_global),
            beta_local: self.beta_local.unwrap_or(d.beta_local),
            beta_background: self.beta_background.unwrap_or(d.beta_background),
            lambda: self.lambda.unwrap_or(d.lambda),
            tau_switch: pair("tau_switch", &self.tau_switch, d.tau_switch)?,
            tau_background: pair("tau_background", &self.tau_background, d.tau_background)?,
        };
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainArgs {
    /// Gibbs sweeps [default: 500]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Sweeps before snapshot averaging starts [default: 300]
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Average this many snapshots instead of using the final state
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// Sweeps between snapshots [default: 10]
    #[arg(long)]
    pub spacing: Option<usize>,
    /// Diagnostics interval in sweeps, 0 for none [default: 50]
    #[arg(long)]
    pub log_every: Option<usize>,
    /// Independent chains with seeds seed..seed+N-1; the best training
    /// likelihood wins [default: 1]
    #[arg(long)]
    pub chains: Option<usize>,
}
overlay!(TrainArgs {
    max_iters,
    burn_in,
    snapshots,
    spacing,
    log_every,
    chains
});

impl TrainArgs {
    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let estimate_mode = match self.snapshots {
            None | Some(0) => EstimateMode::FinalState,
            Some(snapshots) => EstimateMode::Average {
                snapshots,
                spacing: self.spacing.unwrap_or(10),
            },
        };
        let cfg = TrainConfig {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            estimate_mode,
            seed,
            log_every: self.log_every.unwrap_or(d.log_every),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn chains(&self) -> Result<usize> {
        match self.chains.unwrap_or(1) {
            0 => Err(Error::Config("chains must be >= 1".into())),
            n => Ok(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Balanced,
    Faithful,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateArgs {
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub networks: Option<usize>,
    #[arg(long)]
    pub vocab: Option<usize>,
    /// Posts per (user, network); per user and network count in faithful mode
    #[arg(long)]
    pub posts: Option<usize>,
    /// Fixed tokens per post [default: 10]
    #[arg(long, conflicts_with = "mean_length")]
    pub tokens_per_post: Option<usize>,
    /// Geometric post length with this mean
    #[arg(long)]
    pub mean_length: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}
overlay!(GenerateArgs {
    users,
    networks,
    vocab,
    posts,
    tokens_per_post,
    mean_length,
    mode
});

impl GenerateArgs {
    pub fn gen_config(&self, hyper: Hyperparameters, seed: u64) -> Result<GenConfig> {
        let length = match (self.tokens_per_post, self.mean_length) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "tokens_per_post and mean_length are exclusive".into(),
                ))
            }
            (_, Some(mean)) => PostLength::Geometric { mean },
            (n, None) => PostLength::Fixed(n.unwrap_or(10)),
        };
        let gen = GenConfig {
            users: self.users.unwrap_or(100),
            networks: self.networks.unwrap_or(2),
            vocab: self.vocab.unwrap_or(300),
            posts_per_user_network: self.posts.unwrap_or(40),
            length,
            mode: match self.mode.unwrap_or(ModeArg::Balanced) {
                ModeArg::Balanced => GenMode::Balanced,
                ModeArg::Faithful => GenMode::Faithful,
            },
            hyper,
            seed,
        };
        gen.validate()?;
        Ok(gen)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalArgs {
    /// Top words per topic for PMI [default: 50]
    #[arg(long)]
    pub pmi_top: Option<usize>,
    /// Score PMI on this network's local topics instead of the global ones
    #[arg(long)]
    pub pmi_network: Option<usize>,
    /// Multiply topic terms by the network preference in perplexity
    #[arg(long, value_name = "BOOL")]
    pub include_rho: Option<bool>,
}
overlay!(EvalArgs {
    pmi_top,
    pmi_network,
    include_rho
});

/// Contents of a `--config` TOML file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: ModelArgs,
    #[serde(default)]
    pub train: TrainArgs,
    #[serde(default)]
    pub generate: GenerateArgs,
    #[serde(default)]
    pub eval: EvalArgs,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }
}
