//! Minibatch training loop over multi-view batches for any objective.

use crate::autodiff::optim::{sgd_step, AdamState};
use crate::autodiff::tape::Tape;
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use crate::objectives::config::{BaseLoss, ObjectiveConfig};
use crate::objectives::losses::ema_update;
use crate::objectives::model::{combined_loss, Model};
use crate::rng::SplitMix64;
use crate::synth::continuous::MultiViewBatch;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(Error::Domain(format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub optimizer: Optimizer,
}

/// One completed training run: per-epoch mean losses plus the final model.
#[derive(Debug)]
pub struct TrainRun {
    pub config_hash: u64,
    pub epoch_losses: Vec<f64>,
    pub model: Model,
    pub wall_time_s: f64,
}

fn rows_to_tensor(flat: &[f32], idx: &[usize], dim: usize) -> Tensor {
    let mut data = Vec::with_capacity(idx.len() * dim);
    for &i in idx {
        data.extend(flat[i * dim..(i + 1) * dim].iter().map(|&x| x as f64));
    }
    Tensor {
        shape: vec![idx.len(), dim],
        data,
    }
}

/// Deterministic given (config, schedule, data, seed). Shuffling, model
/// init and reparameterization noise all derive from `seed`.
pub fn train(
    cfg: &ObjectiveConfig,
    sched: &Schedule,
    encoder_sizes: &[usize],
    data: &MultiViewBatch,
    seed: u64,
    config_hash: u64,
) -> Result<TrainRun> {
    let start = std::time::Instant::now();
    cfg.validate()?;
    if data.n == 0 {
        return Err(Error::Precondition("training data is empty".into()));
    }
    if sched.batch_size == 0 || sched.batch_size > data.n {
        return Err(Error::Precondition(format!(
            "batch_size {} must lie in 1..={}",
            sched.batch_size, data.n
        )));
    }
    if sched.lr <= 0.0 {
        return Err(Error::Config("lr must be > 0".into()));
    }
    if encoder_sizes.first() != Some(&data.dim_view) {
        return Err(Error::Config(format!(
            "encoder input size {:?} must equal dim_view {}",
            encoder_sizes.first(),
            data.dim_view
        )));
    }
    let n_classes = data.t_shared.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut model = Model::build(cfg, encoder_sizes, n_classes.max(2), seed)?;

    let mut adam = match sched.optimizer {
        Optimizer::Adam => {
            let shapes: Vec<Tensor> = model.trainable_mut().iter().map(|t| (**t).clone()).collect();
            let refs: Vec<&Tensor> = shapes.iter().collect();
            Some(AdamState::new(&refs))
        }
        Optimizer::Sgd => None,
    };

    let mut rng = SplitMix64::new(seed ^ 0x7261696e5f6d7678);
    let mut epoch_losses = Vec::with_capacity(sched.epochs);
    let mut order: Vec<usize> = (0..data.n).collect();

    // divergence guard: a batch loss this far above the first batch's loss
    // means the optimizer has exploded, not that the objective is hard
    const DIVERGENCE_FACTOR: f64 = 1e9;
    let mut first_loss: Option<f64> = None;

    'epochs: for epoch in 0..sched.epochs {
        // snapshot so a diverging epoch can be rolled back: the returned
        // parameters always come from a fully finite epoch (or from init)
        let snapshot = model.clone();
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(sched.batch_size) {
            if chunk.len() < 2 {
                continue; // contrastive terms need at least one negative
            }
            let v1 = rows_to_tensor(&data.v1, chunk, data.dim_view);
            let v2 = rows_to_tensor(&data.v2, chunk, data.dim_view);
            let t: Vec<usize> = chunk.iter().map(|&i| data.t_shared[i] as usize).collect();
            let noise_seed = rng.next_u64();

            let tape = Tape::new();
            let graph = combined_loss(&tape, cfg, &model, &v1, &v2, &t, noise_seed)?;
            let batch_loss = tape.scalar_value(graph.loss);
            let ceiling = first_loss.map(|l| DIVERGENCE_FACTOR * (l.abs() + 1.0));
            if !batch_loss.is_finite() || ceiling.is_some_and(|c| batch_loss.abs() > c) {
                eprintln!(
                    "warning: diverging loss {batch_loss:.3e} at epoch {epoch}; stopping \
                     early with the last stable parameters"
                );
                model = snapshot;
                break 'epochs;
            }
            first_loss.get_or_insert(batch_loss);
            loss_sum += batch_loss;
            n_batches += 1;
            let grads = tape.backward(graph.loss)?;
            let gts: Vec<Tensor> = graph
                .trainable
                .iter()
                .map(|v| {
                    grads
                        .wrt(*v)
                        .cloned()
                        .unwrap_or_else(|| Tensor::zeros(&tape.value(*v).shape))
                })
                .collect();
            let grefs: Vec<&Tensor> = gts.iter().collect();
            let mut prefs = model.trainable_mut();
            match &mut adam {
                Some(state) => state.step(&mut prefs, &grefs, sched.lr)?,
                None => sgd_step(&mut prefs, &grefs, sched.lr)?,
            }
            if cfg.base == BaseLoss::Byol {
                let (enc1, enc2) = (model.enc1.clone(), model.enc2.clone());
                ema_update(model.target1.as_mut().unwrap(), &enc1, cfg.ema_decay)?;
                ema_update(model.target2.as_mut().unwrap(), &enc2, cfg.ema_decay)?;
            }
        }
        epoch_losses.push(if n_batches > 0 {
            loss_sum / n_batches as f64
        } else {
            f64::NAN
        });
    }

    Ok(TrainRun {
        config_hash,
        epoch_losses,
        model,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Frozen view-1 representations for a whole batch.
pub fn encode_v1(model: &Model, data: &MultiViewBatch) -> Result<Tensor> {
    let idx: Vec<usize> = (0..data.n).collect();
    model
        .enc1
        .forward(&rows_to_tensor(&data.v1, &idx, data.dim_view))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::continuous::{sample_continuous, ContinuousSpec};

    fn small_data(seed: u64) -> MultiViewBatch {
        sample_continuous(&ContinuousSpec {
            dim_shared: 4,
            dim_private: 4,
            dim_view: 16,
            n_samples: 512,
            noise_std: 0.1,
            classes_shared: 2,
            classes_nonshared: 2,
            seed,
        })
        .unwrap()
    }

    fn sched(epochs: usize) -> Schedule {
        Schedule {
            epochs,
            batch_size: 128,
            lr: 1e-3,
            optimizer: Optimizer::Adam,
        }
    }

    #[test]
    fn divergence_rolls_back_to_finite_parameters() {
        // reconstruction at lambda 10 under plain SGD with a large step
        // explodes; the guard must stop early and keep finite parameters
        let mut cfg = ObjectiveConfig::default();
        cfg.reg = crate::objectives::Regularizer::Rc;
        cfg.lambda1 = 10.0;
        cfg.lambda2 = 10.0;
        let data = small_data(4);
        let sched = Schedule {
            epochs: 8,
            batch_size: 128,
            lr: 0.3,
            optimizer: Optimizer::Sgd,
        };
        let run = train(&cfg, &sched, &[16, 16, 8], &data, 3, 0).unwrap();
        assert!(run.epoch_losses.len() < 8, "expected an early stop");
        assert!(run.epoch_losses.iter().all(|l| l.is_finite()));
        let reps = encode_v1(&run.model, &data).unwrap();
        assert!(reps.data.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let cfg = ObjectiveConfig::default();
        let data = small_data(1);
        let run = train(&cfg, &sched(0), &[16, 16, 8], &data, 5, 0).unwrap();
        let init = Model::build(&cfg, &[16, 16, 8], 2, 5).unwrap();
        assert_eq!(run.model, init);
        assert!(run.epoch_losses.is_empty());
    }

    #[test]
    fn simclr_loss_decreases() {
        let cfg = ObjectiveConfig::default();
        let data = small_data(2);
        let run = train(&cfg, &sched(20), &[16, 16, 8], &data, 7, 0).unwrap();
        assert_eq!(run.epoch_losses.len(), 20);
        assert!(
            run.epoch_losses[19] < run.epoch_losses[0],
            "{:?}",
            run.epoch_losses
        );
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = ObjectiveConfig::default();
        let data = small_data(3);
        let a = train(&cfg, &sched(3), &[16, 8], &data, 11, 0).unwrap();
        let b = train(&cfg, &sched(3), &[16, 8], &data, 11, 0).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn byol_trains_and_moves_targets() {
        let mut cfg = ObjectiveConfig::default();
        cfg.base = BaseLoss::Byol;
        let data = small_data(4);
        let run = train(&cfg, &sched(2), &[16, 8], &data, 13, 0).unwrap();
        let init = Model::build(&cfg, &[16, 8], 2, 13).unwrap();
        assert_ne!(run.model.target1, init.target1); // EMA moved the target
    }

    #[test]
    fn rejects_oversized_batch() {
        let cfg = ObjectiveConfig::default();
        let data = small_data(5);
        let mut s = sched(1);
        s.batch_size = 4096;
        assert!(train(&cfg, &s, &[16, 8], &data, 1, 0).is_err());
    }
}
