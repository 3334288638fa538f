//! Mini-batch training loop shared by every model.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorcore::{adam_step, AdamState, Graph, ParamSet, Var};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// 100 epochs, batch 1, lr 0.01.
    pub fn siamese_defaults(seed: u64) -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 1,
            learning_rate: 0.01,
            seed,
        }
    }

    /// 100 epochs, batch 32, lr 0.001.
    pub fn triplet_defaults(seed: u64) -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            learning_rate: 0.001,
            seed,
        }
    }

    /// 50 epochs, batch 32, lr 0.01.
    pub fn dense_delay_defaults(seed: u64) -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.01,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingLog {
    pub fn first_loss(&self) -> Option<f64> {
        self.epochs.first().map(|e| e.mean_loss)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.mean_loss)
    }

    /// `epoch,mean_loss` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,mean_loss\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{}\n", e.epoch, e.mean_loss));
        }
        s
    }
}

/// Runs `config.epochs` passes over `samples`, reshuffled every epoch.
///
/// `loss` records one sample's forward pass on a fresh graph. The batch
/// gradient is the mean of the per-sample gradients; a short final batch
/// is kept. One Adam step is taken per batch.
pub fn fit<S>(
    params: &mut ParamSet,
    samples: &[S],
    config: &TrainConfig,
    mut loss: impl FnMut(&ParamSet, &S, &mut Graph) -> Result<Var>,
) -> Result<TrainingLog> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::InsufficientData("training set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(config.learning_rate);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut log = TrainingLog::default();
    params.zero_grad();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let mut graph = Graph::new();
                let l = loss(params, &samples[i], &mut graph)?;
                total += graph.value(l).item().unwrap_or(f64::NAN);
                let scaled = graph.scale(l, scale);
                graph.backward(scaled)?;
                graph.accumulate_into(params)?;
            }
            adam_step(params, &mut adam);
            params.zero_grad();
        }
        let mean_loss = total / samples.len() as f64;
        log::debug!("epoch {epoch}: mean loss {mean_loss:.6}");
        log.epochs.push(EpochRecord { epoch, mean_loss });
    }
    Ok(log)
}
