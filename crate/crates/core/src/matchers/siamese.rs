use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::branch::{self, BranchVars, EMBEDDING_LEN};
use super::{FrameMatcher, MatcherKind, MatchingMatrix, Polarity};
use crate::dataset::{ImageFrame, LabeledPair, SequencePair};
use crate::error::Result;
use crate::tensorcore::{glorot_uniform, Graph, ParamSet, Tensor, Var};
use crate::training::{fit, TrainConfig, TrainingLog};

/// Shared branch, signed embedding difference, dense(64 → 1), sigmoid.
#[derive(Debug, Clone)]
pub struct SiameseModel {
    pub params: ParamSet,
}

impl SiameseModel {
    pub fn new(in_channels: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new(seed);
        branch::init_params(&mut params, in_channels, &mut rng)?;
        params.insert(
            "head.weight",
            glorot_uniform(&[EMBEDDING_LEN, 1], EMBEDDING_LEN, 1, &mut rng),
        )?;
        params.insert("head.bias", Tensor::zeros(&[1]))?;
        Ok(SiameseModel { params })
    }

    pub fn from_params(params: ParamSet) -> Result<Self> {
        branch::in_channels(&params)?;
        params.get("head.weight")?;
        params.get("head.bias")?;
        Ok(SiameseModel { params })
    }

    pub fn in_channels(&self) -> usize {
        branch::in_channels(&self.params).expect("validated at construction")
    }

    /// Sets the head weights and bias to zero.
    pub fn zero_head(&mut self) {
        for name in ["head.weight", "head.bias"] {
            self.params
                .get_mut(name)
                .expect("head exists")
                .values_mut()
                .fill(0.0);
        }
    }

    fn record(
        params: &ParamSet,
        graph: &mut Graph,
        left: &ImageFrame,
        right: &ImageFrame,
    ) -> Result<Var> {
        let vars = BranchVars::bind(graph, params)?;
        let el = vars.forward(graph, left)?;
        let er = vars.forward(graph, right)?;
        let diff = graph.sub(el, er)?;
        head(params, graph, diff)
    }

    pub fn embed(&self, frame: &ImageFrame) -> Result<Vec<f64>> {
        let mut graph = Graph::new();
        let vars = BranchVars::bind(&mut graph, &self.params)?;
        let e = vars.forward(&mut graph, frame)?;
        Ok(graph.value(e).values().to_vec())
    }

    fn head_score(&self, diff: Vec<f64>) -> Result<f64> {
        let mut graph = Graph::new();
        let d = graph.constant(Tensor::vector(diff));
        let s = head(&self.params, &mut graph, d)?;
        Ok(graph.value(s).values()[0])
    }
}

fn head(params: &ParamSet, graph: &mut Graph, diff: Var) -> Result<Var> {
    let w = graph.param(params, "head.weight")?;
    let b = graph.param(params, "head.bias")?;
    let logit = graph.dense(diff, w, b)?;
    Ok(graph.sigmoid(logit))
}

impl FrameMatcher for SiameseModel {
    fn kind(&self) -> MatcherKind {
        MatcherKind::Siamese
    }

    fn polarity(&self) -> Polarity {
        Polarity::HigherIsMatch
    }

    /// `sigmoid(w · (embed(left) − embed(right)) + b)`; not symmetric.
    fn score(&self, left: &ImageFrame, right: &ImageFrame) -> Result<f64> {
        let el = self.embed(left)?;
        let er = self.embed(right)?;
        self.head_score(el.iter().zip(&er).map(|(a, b)| a - b).collect())
    }

    fn build_matrix(&self, seq: &SequencePair) -> Result<MatchingMatrix> {
        let embed_all = |frames: &[crate::dataset::FrameRef]| {
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
            .map(|(l, r)| self.head_score(l.iter().zip(r).map(|(a, b)| a - b).collect()))
            .collect::<Result<Vec<_>>>()?;
        MatchingMatrix::new(scores, Polarity::HigherIsMatch, self.kind().to_string())
    }
}

/// Binary cross-entropy + Adam, one graph per pair.
pub fn train_siamese(
    model: &mut SiameseModel,
    pairs: &[LabeledPair],
    config: &TrainConfig,
) -> Result<TrainingLog> {
    fit(&mut model.params, pairs, config, |params, pair, graph| {
        let score = SiameseModel::record(params, graph, &pair.left, &pair.right)?;
        graph.bce_loss(score, f64::from(pair.label))
    })
}
