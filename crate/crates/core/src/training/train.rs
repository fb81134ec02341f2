use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::losses::{batch_gradient, nll_loss, Objective};
use super::optim::{adam_step, clip_global_norm, AdamConfig, AdamState};
use crate::decoders::{IndexSet, Partition};
use crate::dgp::DatasetConfig;
use crate::error::{Error, Result};
use crate::flows::{
    save_model, Activation, FlowArchitecture, FlowModel, Standardize, DEFAULT_BINS,
    DEFAULT_TAIL_BOUND,
};
use crate::metrics::format_float;

/// Flow shape; the dimension comes from the dataset and the seed from the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSpec {
    pub blocks: usize,
    pub bins: usize,
    pub tail_bound: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub final_rotation: bool,
}

impl Default for FlowSpec {
    fn default() -> Self {
        Self {
            blocks: 8,
            bins: DEFAULT_BINS,
            tail_bound: DEFAULT_TAIL_BOUND,
            hidden: vec![16, 16],
            activation: Activation::Tanh,
            final_rotation: true,
        }
    }
}

impl FlowSpec {
    pub fn architecture(&self, dim: usize, seed: u64) -> FlowArchitecture {
        FlowArchitecture {
            dim,
            blocks: self.blocks,
            bins: self.bins,
            tail_bound: self.tail_bound,
            hidden: self.hidden.clone(),
            activation: self.activation,
            final_rotation: self.final_rotation,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    #[default]
    Ml,
    MlMtc,
    MlRec,
}

/// Loss section of a training manifest. Sets are 1-based text
/// (`partition = "1-5|6-10"`, `core = "1"`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub mode: LossMode,
    /// Regularizer weight; 1 for `ml_mtc` and 5 for `ml_rec` when absent.
    pub lambda: Option<f64>,
    /// MTC partition; singletons when absent.
    pub partition: Option<String>,
    /// Core latents kept by the reconstruction loss; `1` when absent.
    pub core: Option<String>,
}

impl LossConfig {
    pub fn objective(&self, dim: usize) -> Result<Objective> {
        let objective = match self.mode {
            LossMode::Ml => Objective::Ml,
            LossMode::MlMtc => Objective::MlMtc {
                lambda: self.lambda.unwrap_or(1.0),
                partition: match &self.partition {
                    Some(p) => Partition::parse(p, dim)?,
                    None => Partition::singletons(dim),
                },
            },
            LossMode::MlRec => Objective::MlRec {
                lambda: self.lambda.unwrap_or(5.0),
                core: IndexSet::parse(self.core.as_deref().unwrap_or("1"), dim)?,
            },
        };
        objective.validate(dim)?;
        Ok(objective)
    }
}

fn default_batch_size() -> usize {
    256
}

fn default_epochs() -> usize {
    375
}

fn default_true() -> bool {
    true
}

fn default_divergence_factor() -> f64 {
    10.0
}

fn default_divergence_patience() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub flow: FlowSpec,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default)]
    pub optimizer: AdamConfig,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Passes over the data; each has `⌈N / batch_size⌉` steps.
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Write a checkpoint every this many epochs (0: only the final model).
    #[serde(default)]
    pub checkpoint_every: usize,
    /// Prepend a fixed per-coordinate standardization fitted on the data.
    #[serde(default = "default_true")]
    pub standardize: bool,
    /// Abort when the epoch NLL exceeds this multiple of `max(|initial|, 1)`...
    #[serde(default = "default_divergence_factor")]
    pub divergence_factor: f64,
    /// ...for this many consecutive epochs.
    #[serde(default = "default_divergence_patience")]
    pub divergence_patience: usize,
}

impl TrainConfig {
    pub fn new(dataset: DatasetConfig) -> Self {
        Self {
            dataset,
            flow: FlowSpec::default(),
            loss: LossConfig::default(),
            optimizer: AdamConfig::default(),
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            seed: 0,
            checkpoint_every: 0,
            standardize: true,
            divergence_factor: default_divergence_factor(),
            divergence_patience: default_divergence_patience(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument(
                "batch_size and epochs must be positive".into(),
            ));
        }
        if !(self.optimizer.lr > 0.0) {
            return Err(Error::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        self.loss.objective(self.dataset.dim()).map(|_| ())
    }
}

/// Per-coordinate mean and sample standard deviation of the data.
pub fn fit_standardization(data: &[Vec<f64>]) -> Result<Standardize> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(
            "standardization needs at least two rows".into(),
        ));
    }
    let d = data[0].len();
    let n = data.len() as f64;
    let shift: Vec<f64> = (0..d)
        .map(|k| data.iter().map(|r| r[k]).sum::<f64>() / n)
        .collect();
    let scale: Vec<f64> = (0..d)
        .map(|k| (data.iter().map(|r| (r[k] - shift[k]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        .collect();
    Standardize::new(shift, scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub nll: f64,
    pub reg: f64,
    pub total: f64,
    /// Mean pre-clipping global gradient norm over the epoch's steps.
    pub grad_norm: f64,
    /// Wall time since training started.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub initial_nll: f64,
    pub epochs: Vec<EpochRecord>,
    pub skipped_samples: usize,
    pub rejected_steps: u64,
}

impl TrainHistory {
    /// `epoch,nll,reg,total,grad_norm,seconds`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,nll,reg,total,grad_norm,seconds\n");
        for r in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.3}",
                r.epoch,
                format_float(r.nll),
                format_float(r.reg),
                format_float(r.total),
                format_float(r.grad_norm),
                r.seconds
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainStatus {
    Completed,
    /// NLL stayed above the divergence threshold for the configured patience.
    Diverged {
        epoch: usize,
        nll: f64,
        initial: f64,
    },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FlowModel,
    pub history: TrainHistory,
    pub status: TrainStatus,
}

impl TrainOutcome {
    /// The divergence as an error, if training diverged.
    pub fn into_result(self) -> Result<(FlowModel, TrainHistory)> {
        match self.status {
            TrainStatus::Completed => Ok((self.model, self.history)),
            TrainStatus::Diverged {
                epoch,
                nll,
                initial,
            } => Err(Error::Divergence {
                epoch,
                nll,
                initial,
            }),
        }
    }
}

/// Generates the configured dataset and trains on it.
pub fn train(config: &TrainConfig, checkpoint_dir: Option<&Path>) -> Result<TrainOutcome> {
    let data = config.dataset.generate()?;
    train_on(config, &data, checkpoint_dir)
}

/// Trains a fresh flow on `data`. Deterministic given the config: shuffling
/// uses a seeded stream and batch gradients are reduced in a fixed order.
pub fn train_on(
    config: &TrainConfig,
    data: &[Vec<f64>],
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let dim = config.dataset.dim();
    if data.iter().any(|r| r.len() != dim) {
        return Err(Error::Dimension {
            context: "training data",
            expected: dim,
            actual: data.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(0),
        });
    }
    let objective = config.loss.objective(dim)?;
    let mut model = FlowModel::new(&config.flow.architecture(dim, config.seed))?;
    if config.standardize {
        model = model.with_standardization(fit_standardization(data)?)?;
    }
    let initial_nll = nll_loss(&model, data)?;
    let threshold = config.divergence_factor * initial_nll.abs().max(1.0);
    let steps_per_epoch = data.len().div_ceil(config.batch_size);
    let total_steps = steps_per_epoch * config.epochs;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7472_6169_6e00);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut state = AdamState::new(model.param_count());
    let mut params = model.params().to_vec();
    let mut history = TrainHistory {
        initial_nll,
        ..Default::default()
    };
    let start = Instant::now();
    let mut over = 0usize;
    let mut step = 0usize;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut nll, mut reg, mut total, mut norm) = (0.0, 0.0, 0.0, 0.0);
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<Vec<f64>> = idx.iter().map(|&i| data[i].clone()).collect();
            let mut g = batch_gradient(&model, &batch, &objective)?;
            history.skipped_samples += g.skipped;
            nll += g.nll;
            reg += g.reg;
            total += g.total;
            norm += clip_global_norm(&mut g.gradient, config.optimizer.clip_norm);
            let lr = config.optimizer.learning_rate(step, total_steps);
            adam_step(&mut params, &g.gradient, &mut state, &config.optimizer, lr)?;
            model.set_params(params.clone())?;
            step += 1;
        }
        let k = steps_per_epoch as f64;
        let record = EpochRecord {
            epoch,
            nll: nll / k,
            reg: reg / k,
            total: total / k,
            grad_norm: norm / k,
            seconds: start.elapsed().as_secs_f64(),
        };
        history.epochs.push(record);
        history.rejected_steps = state.rejected;
        if let Some(dir) = checkpoint_dir {
            if config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 {
                save_model(&model, dir.join(format!("checkpoint_epoch{epoch:05}.flow")))?;
            }
        }
        over = if record.nll > threshold || !record.nll.is_finite() {
            over + 1
        } else {
            0
        };
        if over >= config.divergence_patience.max(1) {
            return Ok(TrainOutcome {
                model,
                history,
                status: TrainStatus::Diverged {
                    epoch,
                    nll: record.nll,
                    initial: initial_nll,
                },
            });
        }
    }
    if let Some(dir) = checkpoint_dir {
        save_model(&model, dir.join("model.flow"))?;
    }
    Ok(TrainOutcome {
        model,
        history,
        status: TrainStatus::Completed,
    })
}
