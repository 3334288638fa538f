use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{class_to_delay, DelayEstimate, DelayMethod, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::matchers::MatchingMatrix;
use crate::tensorcore::{glorot_uniform, softmax_in_place, Graph, ParamSet, Tensor, Var};
use crate::training::{fit, TrainConfig, TrainingLog};
use crate::SEQUENCE_LEN;

/// Input, two hidden layers, output.
pub const LAYER_SIZES: [usize; 4] = [SEQUENCE_LEN * SEQUENCE_LEN, 64, 32, NUM_CLASSES];
const LAYERS: [&str; 3] = ["dense1", "dense2", "output"];

/// Fully connected 400 → 64 (ReLU) → 32 (ReLU) → 40 (softmax) classifier.
#[derive(Debug, Clone)]
pub struct DenseDelayModel {
    pub params: ParamSet,
}

impl DenseDelayModel {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new(seed);
        for (l, name) in LAYERS.iter().enumerate() {
            let (n, m) = (LAYER_SIZES[l], LAYER_SIZES[l + 1]);
            params
                .insert(
                    format!("{name}.weight"),
                    glorot_uniform(&[n, m], n, m, &mut rng),
                )
                .expect("layer names are unique");
            params
                .insert(format!("{name}.bias"), Tensor::zeros(&[m]))
                .expect("layer names are unique");
        }
        DenseDelayModel { params }
    }

    /// All weights and biases zero: the output is uniform for any input.
    pub fn zeros(seed: u64) -> Self {
        let mut model = Self::new(seed);
        for (_, t) in model.params.iter_mut() {
            t.values_mut().fill(0.0);
        }
        model
    }

    pub fn from_params(params: ParamSet) -> Result<Self> {
        for (l, name) in LAYERS.iter().enumerate() {
            let (n, m) = (LAYER_SIZES[l], LAYER_SIZES[l + 1]);
            let w = params.get(&format!("{name}.weight"))?;
            let b = params.get(&format!("{name}.bias"))?;
            if w.shape() != [n, m] || b.shape() != [m] {
                return Err(Error::shape(
                    "densedelay",
                    format!(
                        "layer {name} must be {n}×{m}, got {:?} / {:?}",
                        w.shape(),
                        b.shape()
                    ),
                ));
            }
        }
        Ok(DenseDelayModel { params })
    }

    /// Records the forward pass on `graph` and returns the softmax output.
    pub fn forward(&self, graph: &mut Graph, features: &[f64]) -> Result<Var> {
        forward_with(&self.params, graph, features)
    }

    pub fn probabilities(&self, features: &[f64]) -> Result<Vec<f64>> {
        let mut graph = Graph::new();
        let out = self.forward(&mut graph, features)?;
        Ok(graph.value(out).values().to_vec())
    }
}

fn forward_with(params: &ParamSet, graph: &mut Graph, features: &[f64]) -> Result<Var> {
    if features.len() != LAYER_SIZES[0] {
        return Err(Error::shape(
            "densedelay",
            format!("expected {} inputs, got {}", LAYER_SIZES[0], features.len()),
        ));
    }
    let mut x = graph.constant(Tensor::vector(features.to_vec()));
    for (l, name) in LAYERS.iter().enumerate() {
        let w = graph.param(params, &format!("{name}.weight"))?;
        let b = graph.param(params, &format!("{name}.bias"))?;
        x = graph.dense(x, w, b)?;
        x = if l + 1 < LAYERS.len() {
            graph.relu(x)
        } else {
            graph.softmax(x)
        };
    }
    Ok(x)
}

/// Sharpness of the per-row softmax in [`matrix_features`].
pub const ROW_SHARPNESS: f64 = 3.0;

fn standardize(values: &mut [f64], gain: f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    for x in values.iter_mut() {
        *x = if std > 1e-12 {
            gain * (*x - mean) / std
        } else {
            0.0
        };
    }
}

/// Network input for a matrix. Each row of higher-is-match scores is
/// standardized and passed through a softmax with [`ROW_SHARPNESS`], which
/// turns it into a soft vote for its best-matching column; the 400 votes
/// are then standardized together.
pub fn matrix_features(matrix: &MatchingMatrix) -> Vec<f64> {
    let mut v = matrix.normalized();
    for row in v.chunks_exact_mut(SEQUENCE_LEN) {
        standardize(row, ROW_SHARPNESS);
        softmax_in_place(row);
    }
    standardize(&mut v, 1.0);
    v
}

/// Class with the highest probability (first on ties) and its probability.
pub fn densedelay_forward(
    model: &DenseDelayModel,
    matrix: &MatchingMatrix,
) -> Result<DelayEstimate> {
    let probs = model.probabilities(&matrix_features(matrix))?;
    let mut best = 0;
    for (c, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = c;
        }
    }
    Ok(DelayEstimate {
        delay: class_to_delay(best)?,
        confidence: probs[best],
        method: DelayMethod::DenseDelay,
    })
}

/// Categorical cross-entropy + Adam over `(matrix, class)` samples.
pub fn train_densedelay(
    model: &mut DenseDelayModel,
    samples: &[(MatchingMatrix, usize)],
    config: &TrainConfig,
) -> Result<TrainingLog> {
    if let Some((_, bad)) = samples.iter().find(|(_, c)| *c >= NUM_CLASSES) {
        return Err(Error::invalid(format!(
            "delay class {bad} outside [0, {NUM_CLASSES})"
        )));
    }
    let features: Vec<(Vec<f64>, usize)> = samples
        .iter()
        .map(|(m, c)| (matrix_features(m), *c))
        .collect();
    fit(
        &mut model.params,
        &features,
        config,
        |params, (x, class), graph| {
            let probs = forward_with(params, graph, x)?;
            graph.categorical_ce_loss(probs, *class)
        },
    )
}
