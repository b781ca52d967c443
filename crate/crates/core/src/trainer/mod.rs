//! Minibatch training with negative sampling, Adam and unit-norm entity
//! constraints, early-stopped on validation filtered MRR.
//!
//! Each batch goes through: gradient, Adam step on every parameter buffer,
//! projection of entity vectors to unit norm, and (learnable ω) a refresh
//! of the restricted weights from their raw parameters.

mod adam;
mod gradient;
mod loss;
mod sampling;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState};
pub use gradient::{batch_loss, grad_batch, Gradients, LabeledTriple, Objective};
pub use loss::{loss_derivative, loss_triple, softplus, Label, LossForm};
pub use sampling::{sample_negative, sample_negative_with_side};

use crate::error::{io_err, Error, Result};
use crate::evaluator::evaluate_triples;
use crate::kg_store::{KgDataset, Triple};
use crate::scoring::{KgeModel, MultiEmbeddingTable};
use crate::weight_learning::DirichletRegConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2_lambda: f64,
    pub negatives_per_positive: usize,
    pub max_epochs: usize,
    /// Validation MRR is computed every `eval_every` epochs and after the
    /// last epoch.
    pub eval_every: usize,
    /// Stop once this many epochs have passed since the best validation MRR.
    pub patience_epochs: usize,
    pub loss_form: LossForm,
    pub seed: u64,
    /// Sparsity penalty on learnable weights.
    pub dirichlet: DirichletRegConfig,
    /// Optional L1 penalty on learnable weights.
    pub l1_lambda: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 1 << 12,
            l2_lambda: 1e-3,
            negatives_per_positive: 1,
            max_epochs: 1000,
            eval_every: 50,
            patience_epochs: 100,
            loss_form: LossForm::Softplus,
            seed: 0,
            dirichlet: DirichletRegConfig::default(),
            l1_lambda: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn objective(&self) -> Objective {
        Objective {
            loss_form: self.loss_form,
            l2_lambda: self.l2_lambda,
            dirichlet: self.dirichlet,
            l1_lambda: self.l1_lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.l2_lambda.is_nan() || self.l2_lambda < 0.0 {
            return Err(Error::Config("l2 lambda must be >= 0".into()));
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean objective per labeled triple.
    pub train_loss: f64,
    pub valid_mrr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the best validation MRR (the final ones when there
    /// is no validation split).
    pub best: KgeModel,
    pub best_epoch: usize,
    pub best_valid_mrr: Option<f64>,
    pub final_model: KgeModel,
    pub final_epoch: usize,
    pub log: Vec<EpochRecord>,
}

/// Writes the log as `epoch\ttrain_loss\tvalid_mrr` lines; epochs without
/// a validation run get `-`.
pub fn write_log(path: &Path, log: &[EpochRecord]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "epoch\ttrain_loss\tvalid_mrr").map_err(io_err(path))?;
    for rec in log {
        let mrr = rec.valid_mrr.map_or_else(|| "-".to_string(), |m| m.to_string());
        writeln!(w, "{}\t{}\t{}", rec.epoch, rec.train_loss, mrr).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Rescales each entity vector to unit L2 norm.
pub fn project_unit_norm(table: &mut MultiEmbeddingTable) {
    table.project_entities_unit_norm();
}

/// Labeled minibatches of one epoch: positives in a seeded shuffle, each
/// followed by its `negatives_per_positive` corruptions. Epoch `e` draws
/// from stream `e` of the run seed.
pub fn epoch_batches(
    train: &[Triple],
    num_entities: usize,
    cfg: &TrainConfig,
    epoch: usize,
    order: &mut Vec<usize>,
) -> Vec<Vec<LabeledTriple>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(epoch as u64);
    order.clear();
    order.extend(0..train.len());
    order.shuffle(&mut rng);
    order
        .chunks(cfg.batch_size)
        .map(|chunk| {
            let mut batch = Vec::with_capacity(chunk.len() * (1 + cfg.negatives_per_positive));
            for &idx in chunk {
                let t = train[idx];
                batch.push(LabeledTriple::positive(t));
                for _ in 0..cfg.negatives_per_positive {
                    batch.push(LabeledTriple::negative(sample_negative(&t, num_entities, &mut rng)));
                }
            }
            batch
        })
        .collect()
}

/// Trains `model` on `dataset.train`.
pub fn train(dataset: &KgDataset, model: KgeModel, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(dataset, model, cfg, |_| {})
}

/// Like [`train`], calling `on_epoch` after every epoch.
pub fn train_with(
    dataset: &KgDataset,
    mut model: KgeModel,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if model.table.num_entities() != dataset.num_entities() {
        return Err(Error::CheckpointMismatch {
            what: "entity count",
            checkpoint: model.table.num_entities(),
            dataset: dataset.num_entities(),
        });
    }
    if model.table.num_relations() != dataset.num_relations() {
        return Err(Error::CheckpointMismatch {
            what: "relation count",
            checkpoint: model.table.num_relations(),
            dataset: dataset.num_relations(),
        });
    }
    if cfg.max_epochs == 0 {
        return Ok(TrainOutcome {
            best: model.clone(),
            best_epoch: 0,
            best_valid_mrr: None,
            final_model: model,
            final_epoch: 0,
            log: Vec::new(),
        });
    }
    if dataset.train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if dataset.num_entities() < 2 {
        return Err(Error::Config("negative sampling needs at least two entities".into()));
    }

    let obj = cfg.objective();
    let num_entities = dataset.num_entities();
    let mut ent_state = AdamState::new(model.table.entity_data().len());
    let mut rel_state = AdamState::new(model.table.relation_data().len());
    let mut raw_state = model
        .weights
        .learnable_params()
        .map(|l| AdamState::new(l.raw.len()));
    let mut ent_grad = vec![0.0; model.table.entity_data().len()];
    let mut rel_grad = vec![0.0; model.table.relation_data().len()];
    let ent_width = model.table.n_e() * model.table.dim();
    let rel_width = model.table.n_r() * model.table.dim();

    let mut log = Vec::new();
    let mut best: Option<(KgeModel, usize, f64)> = None;
    let mut order: Vec<usize> = Vec::with_capacity(dataset.train.len());
    let mut final_epoch = 0;

    for epoch in 1..=cfg.max_epochs {
        let batches = epoch_batches(&dataset.train, num_entities, cfg, epoch, &mut order);
        let mut epoch_loss = 0.0;
        let mut epoch_count = 0usize;
        for (b, batch) in batches.iter().enumerate() {
            let grads = grad_batch(&model.table, &model.weights, batch, &obj)?;
            if !grads.loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            epoch_loss += grads.loss;
            epoch_count += batch.len();

            for (&e, g) in &grads.entity {
                ent_grad[e * ent_width..(e + 1) * ent_width].copy_from_slice(g);
            }
            for (&r, g) in &grads.relation {
                rel_grad[r * rel_width..(r + 1) * rel_width].copy_from_slice(g);
            }
            adam_step(model.table.entity_data_mut(), &ent_grad, &mut ent_state, cfg.learning_rate);
            adam_step(model.table.relation_data_mut(), &rel_grad, &mut rel_state, cfg.learning_rate);
            for &e in grads.entity.keys() {
                ent_grad[e * ent_width..(e + 1) * ent_width].fill(0.0);
            }
            for &r in grads.relation.keys() {
                rel_grad[r * rel_width..(r + 1) * rel_width].fill(0.0);
            }
            if let (Some(state), Some(g)) = (raw_state.as_mut(), grads.raw_weights.as_ref()) {
                if let Some(raw) = model.weights.raw_mut() {
                    adam_step(raw, g, state, cfg.learning_rate);
                }
            }

            project_unit_norm(&mut model.table);
            model.weights.refresh();
        }
        final_epoch = epoch;

        let train_loss = epoch_loss / epoch_count as f64;
        let valid_mrr = if !dataset.valid.is_empty()
            && (epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs)
        {
            Some(evaluate_triples(&model, dataset.filter_index(), &dataset.valid)?.mrr)
        } else {
            None
        };
        let rec = EpochRecord {
            epoch,
            train_loss,
            valid_mrr,
        };
        log::debug!("epoch {epoch}: loss {train_loss:.6} valid_mrr {valid_mrr:?}");
        on_epoch(&rec);
        log.push(rec);

        if let Some(mrr) = valid_mrr {
            let improved = best.as_ref().is_none_or(|(_, _, b)| mrr > *b);
            if improved {
                log::debug!("epoch {epoch}: validation MRR improved to {mrr:.4}");
                best = Some((model.clone(), epoch, mrr));
            }
            let best_epoch = best.as_ref().map_or(0, |(_, e, _)| *e);
            if epoch - best_epoch >= cfg.patience_epochs {
                log::info!("early stop at epoch {epoch}, best epoch {best_epoch}");
                break;
            }
        }
    }

    let (best_model, best_epoch, best_mrr) = match best {
        Some((m, e, mrr)) => (m, e, Some(mrr)),
        None => (model.clone(), final_epoch, None),
    };
    Ok(TrainOutcome {
        best: best_model,
        best_epoch,
        best_valid_mrr: best_mrr,
        final_model: model,
        final_epoch,
        log,
    })
}
