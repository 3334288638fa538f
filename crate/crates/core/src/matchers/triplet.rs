use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::branch::{self, BranchVars, EMBEDDING_LEN};
use super::{FrameMatcher, MatcherKind, MatchingMatrix, Polarity};
use crate::dataset::{FrameRef, ImageFrame, SequencePair, Triplet};
use crate::error::{Error, Result};
use crate::tensorcore::{
    cosine_similarity, glorot_uniform, squared_distance, Graph, ParamSet, Tensor, Var,
};
use crate::training::{fit, TrainConfig, TrainingLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    Euclidean,
    Cosine,
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::Cosine => "cosine",
        })
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(DistanceKind::Euclidean),
            "cosine" => Ok(DistanceKind::Cosine),
            other => Err(Error::invalid(format!(
                "unknown distance `{other}` (euclidean|cosine)"
            ))),
        }
    }
}

/// Shared branch followed by a linear 64 → 64 projection.
#[derive(Debug, Clone)]
pub struct TripletModel {
    pub params: ParamSet,
    pub distance: DistanceKind,
    /// Apply the hinge to the Euclidean loss (the cosine loss always has it).
    pub hinge: bool,
}

impl TripletModel {
    pub fn new(in_channels: usize, distance: DistanceKind, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new(seed);
        branch::init_params(&mut params, in_channels, &mut rng)?;
        params.insert(
            "proj.weight",
            glorot_uniform(
                &[EMBEDDING_LEN, EMBEDDING_LEN],
                EMBEDDING_LEN,
                EMBEDDING_LEN,
                &mut rng,
            ),
        )?;
        params.insert("proj.bias", Tensor::zeros(&[EMBEDDING_LEN]))?;
        Ok(TripletModel {
            params,
            distance,
            hinge: true,
        })
    }

    pub fn from_params(params: ParamSet, distance: DistanceKind, hinge: bool) -> Result<Self> {
        branch::in_channels(&params)?;
        params.get("proj.weight")?;
        params.get("proj.bias")?;
        Ok(TripletModel {
            params,
            distance,
            hinge,
        })
    }

    pub fn in_channels(&self) -> usize {
        branch::in_channels(&self.params).expect("validated at construction")
    }

    pub fn embed(&self, frame: &ImageFrame) -> Result<Vec<f64>> {
        let mut graph = Graph::new();
        let vars = TripletVars::bind(&mut graph, &self.params)?;
        let e = vars.forward(&mut graph, frame)?;
        Ok(graph.value(e).values().to_vec())
    }

    fn distance_between(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.distance {
            DistanceKind::Euclidean => squared_distance(a, b),
            DistanceKind::Cosine => cosine_similarity(a, b),
        }
    }
}

struct TripletVars {
    branch: BranchVars,
    weight: Var,
    bias: Var,
}

impl TripletVars {
    fn bind(graph: &mut Graph, params: &ParamSet) -> Result<Self> {
        Ok(TripletVars {
            branch: BranchVars::bind(graph, params)?,
            weight: graph.param(params, "proj.weight")?,
            bias: graph.param(params, "proj.bias")?,
        })
    }

    fn forward(&self, graph: &mut Graph, frame: &ImageFrame) -> Result<Var> {
        let features = self.branch.forward(graph, frame)?;
        graph.dense(features, self.weight, self.bias)
    }
}

impl FrameMatcher for TripletModel {
    fn kind(&self) -> MatcherKind {
        match self.distance {
            DistanceKind::Euclidean => MatcherKind::TripletEuc,
            DistanceKind::Cosine => MatcherKind::TripletSim,
        }
    }

    /// Lower is a match for both kinds: the Euclidean loss pulls matches
    /// together, and the cosine loss as trained pushes matching pairs
    /// towards low similarity.
    fn polarity(&self) -> Polarity {
        Polarity::LowerIsMatch
    }

    /// Squared L2 distance or cosine similarity of the two embeddings.
    fn score(&self, left: &ImageFrame, right: &ImageFrame) -> Result<f64> {
        Ok(self.distance_between(&self.embed(left)?, &self.embed(right)?))
    }

    fn build_matrix(&self, seq: &SequencePair) -> Result<MatchingMatrix> {
        let embed_all = |frames: &[FrameRef]| {
            frames
                .par_iter()
                .map(|f| self.embed(f))
                .collect::<Result<Vec<_>>>()
        };
        let left = embed_all(&seq.left)?;
        let right = embed_all(&seq.right)?;
        let scores = left
            .iter()
            .flat_map(|l| right.iter().map(move |r| (l, r)))
            .map(|(l, r)| self.distance_between(l, r))
            .collect();
        MatchingMatrix::new(scores, Polarity::LowerIsMatch, self.kind().to_string())
    }
}

/// Triplet loss of the model's distance kind + Adam. The per-batch loss is
/// the mean over the batch's triplets.
pub fn train_triplet(
    model: &mut TripletModel,
    triplets: &[Triplet],
    config: &TrainConfig,
) -> Result<TrainingLog> {
    let (distance, hinge) = (model.distance, model.hinge);
    fit(&mut model.params, triplets, config, |params, t, graph| {
        let vars = TripletVars::bind(graph, params)?;
        let a = vars.forward(graph, &t.anchor)?;
        let p = vars.forward(graph, &t.positive)?;
        let n = vars.forward(graph, &t.negative)?;
        match distance {
            DistanceKind::Euclidean => graph.triplet_euclidean_loss(a, p, n, hinge),
            DistanceKind::Cosine => graph.triplet_cosine_loss(a, p, n),
        }
    })
}

/// Mean of (negative score − positive score) under the model's distance;
/// positive when negatives sit further away than positives.
pub fn triplet_separation(model: &TripletModel, triplets: &[Triplet]) -> Result<f64> {
    if triplets.is_empty() {
        return Err(Error::InsufficientData("no triplets to measure".into()));
    }
    let total = triplets
        .iter()
        .map(|t| {
            let a = model.embed(&t.anchor)?;
            let p = model.embed(&t.positive)?;
            let n = model.embed(&t.negative)?;
            Ok(model.distance_between(&a, &n) - model.distance_between(&a, &p))
        })
        .sum::<Result<f64>>()?;
    Ok(total / triplets.len() as f64)
}
