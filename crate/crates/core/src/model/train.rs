use std::sync::Arc;
use std::time::Instant;

use super::{LabeledWindow, Model, ModelError};
use crate::eval::auc;
use crate::seed;
use crate::tensor::{AdamConfig, AdamState, Tape};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    /// L2 penalty on the logistic-regression weights.
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            patience: 50,
            learning_rate: 1e-3,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// `None` when the validation window holds a single class.
    pub val_auc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxEpochs => "max_epochs",
            StopReason::EarlyStop => "early_stop",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stop_reason: StopReason,
    pub seconds: f64,
}

/// Tracks the best validation loss and counts stagnant epochs.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Records `loss` for `epoch`; returns whether it is a new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.stale = 0;
            true
        } else {
            self.stale += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

const DROPOUT_STREAM: u64 = 0xd7;

/// One Adam step per training window per epoch; parameters from the epoch
/// with the lowest validation loss are restored at the end.
pub fn train(
    model: &mut Model,
    train_windows: &[LabeledWindow],
    validation: &LabeledWindow,
    hyper: &TrainConfig,
) -> Result<TrainingRun, ModelError> {
    let start = Instant::now();
    if train_windows.is_empty() {
        return Err(ModelError::EmptyTraining);
    }
    if hyper.epochs == 0
        || !(hyper.learning_rate.is_finite() && hyper.learning_rate > 0.0)
        || !(hyper.l2.is_finite() && hyper.l2 >= 0.0)
    {
        return Err(ModelError::Config(
            "epochs and learning rate must be positive".into(),
        ));
    }
    if !model.config.architecture.is_graph() {
        let positives: f64 = train_windows.iter().flat_map(|w| w.labels.iter()).sum();
        let total: usize = train_windows.iter().map(|w| w.n()).sum();
        if positives == 0.0 || positives == total as f64 {
            return Err(ModelError::SingleClass);
        }
    }
    let prepared = train_windows
        .iter()
        .map(|w| model.prepare(w))
        .collect::<Result<Vec<_>, _>>()?;
    let val = model.prepare(validation)?;
    let mut adam = AdamState::new(AdamConfig {
        learning_rate: hyper.learning_rate,
        ..AdamConfig::default()
    });
    let mut stopper = EarlyStopper::new(hyper.patience);
    let mut best_params = model.params.clone();
    let mut records = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;
    let penalize =
        hyper.l2 > 0.0 && model.config.architecture == super::Architecture::LogisticRegression;

    for epoch in 1..=hyper.epochs {
        let mut total = 0.0;
        for (w, window) in prepared.iter().enumerate() {
            let mut tape = Tape::new();
            let p = model.params.bind(&mut tape);
            let drop_seed = seed::derive(
                model.config.seed,
                DROPOUT_STREAM,
                (epoch * prepared.len() + w) as u64,
            );
            let out = model.forward_tape(&mut tape, &p, window, true, drop_seed)?;
            let mut loss = tape.bce(out.probabilities, Arc::clone(&window.labels))?;
            if penalize {
                let wv = p.get("logreg.w")?;
                let sq = tape.hadamard(wv, wv)?;
                let sq = tape.sum(sq)?;
                let sq = tape.affine(sq, hyper.l2, 0.0)?;
                loss = tape.add(loss, sq)?;
            }
            let value = tape.value(loss).item()?;
            if !value.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch, window: w });
            }
            total += value;
            let grads = tape.backward(loss)?;
            adam.update(model.params.as_map_mut(), &grads)?;
        }
        let pred = model.predict_prepared(&val)?;
        let val_loss = crate::tensor::bce_value(&pred.probabilities, &val.labels);
        if !val_loss.is_finite() {
            return Err(ModelError::NonFiniteLoss {
                epoch,
                window: usize::MAX,
            });
        }
        let val_auc = auc(&pred.probabilities, &val.labels).ok();
        let train_loss = total / prepared.len() as f64;
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");
        records.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_auc,
        });
        if stopper.observe(epoch, val_loss) {
            best_params = model.params.clone();
        }
        if stopper.should_stop() {
            stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    model.params = best_params;
    Ok(TrainingRun {
        epochs: records,
        best_epoch: stopper.best_epoch(),
        stop_reason,
        seconds: start.elapsed().as_secs_f64(),
    })
}
