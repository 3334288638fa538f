//! The steps shared by the experiment grid and the command-line tool.

use std::sync::Arc;

use crate::dataset::{
    load_stereo_dir, make_pairs, make_sequence_pairs, make_triplets, render_synthetic_stereo,
    FrameRef, InputKind, SceneConfig, SequencePair,
};
use crate::delay::{
    delay_to_class, densedelay_forward, heatmap_estimate, DelayEstimate, DelayMethod,
    DenseDelayModel,
};
use crate::error::{Error, Result};
use crate::matchers::{
    FrameMatcher, MatcherKind, MatchingMatrix, ModelMetadata, PixelOracle, Polarity, SiameseModel,
    TripletModel,
};
use crate::opticalflow::{flow_stream, FlowEncoding, FlowParams};
use crate::tensorcore::ParamSet;
use crate::training::{TrainConfig, TrainingLog};

use super::DatasetSource;

/// Any of the frame matchers behind one concrete type.
pub enum AnyMatcher {
    Siamese(SiameseModel),
    Triplet(TripletModel),
    Oracle(PixelOracle),
}

impl AnyMatcher {
    pub fn untrained(
        kind: MatcherKind,
        in_channels: usize,
        hinge: bool,
        seed: u64,
    ) -> Result<Self> {
        Ok(match kind {
            MatcherKind::Siamese => AnyMatcher::Siamese(SiameseModel::new(in_channels, seed)?),
            MatcherKind::TripletEuc | MatcherKind::TripletSim => {
                let mut model =
                    TripletModel::new(in_channels, kind.distance().expect("triplet kind"), seed)?;
                model.hinge = hinge;
                AnyMatcher::Triplet(model)
            }
            MatcherKind::Oracle => AnyMatcher::Oracle(PixelOracle),
        })
    }

    pub fn from_params(meta: &ModelMetadata, params: ParamSet) -> Result<Self> {
        Ok(match meta.kind {
            MatcherKind::Siamese => AnyMatcher::Siamese(SiameseModel::from_params(params)?),
            MatcherKind::TripletEuc | MatcherKind::TripletSim => {
                AnyMatcher::Triplet(TripletModel::from_params(
                    params,
                    meta.distance().expect("triplet kind"),
                    meta.hinge,
                )?)
            }
            MatcherKind::Oracle => AnyMatcher::Oracle(PixelOracle),
        })
    }

    pub fn params(&self) -> Option<&ParamSet> {
        match self {
            AnyMatcher::Siamese(m) => Some(&m.params),
            AnyMatcher::Triplet(m) => Some(&m.params),
            AnyMatcher::Oracle(_) => None,
        }
    }

    pub fn metadata(&self, resolution: usize) -> Option<ModelMetadata> {
        let (in_channels, hinge) = match self {
            AnyMatcher::Siamese(m) => (m.in_channels(), true),
            AnyMatcher::Triplet(m) => (m.in_channels(), m.hinge),
            AnyMatcher::Oracle(_) => return None,
        };
        Some(ModelMetadata {
            kind: self.kind(),
            in_channels,
            resolution,
            hinge,
        })
    }

    fn inner(&self) -> &dyn FrameMatcher {
        match self {
            AnyMatcher::Siamese(m) => m,
            AnyMatcher::Triplet(m) => m,
            AnyMatcher::Oracle(m) => m,
        }
    }
}

impl FrameMatcher for AnyMatcher {
    fn kind(&self) -> MatcherKind {
        self.inner().kind()
    }

    fn polarity(&self) -> Polarity {
        self.inner().polarity()
    }

    fn score(
        &self,
        left: &crate::dataset::ImageFrame,
        right: &crate::dataset::ImageFrame,
    ) -> Result<f64> {
        self.inner().score(left, right)
    }

    fn build_matrix(&self, seq: &SequencePair) -> Result<MatchingMatrix> {
        self.inner().build_matrix(seq)
    }
}

/// Left and right streams of a dataset, as the matchers will see them.
pub fn load_dataset(
    source: &DatasetSource,
    input: InputKind,
    resolution: usize,
    scene: &SceneConfig,
    flow: &FlowParams,
) -> Result<(Vec<FrameRef>, Vec<FrameRef>)> {
    if resolution == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let (left, right) = match source {
        DatasetSource::Synthetic { seed } => render_synthetic_stereo(scene, *seed)?,
        DatasetSource::Directory(root) => load_stereo_dir(root, resolution)?,
    };
    match input {
        InputKind::Raw => {
            let fit = |frames: Vec<FrameRef>| -> Vec<FrameRef> {
                frames
                    .into_iter()
                    .map(|f| {
                        if f.width() == resolution && f.height() == resolution {
                            f
                        } else {
                            Arc::new(f.resized(resolution, resolution))
                        }
                    })
                    .collect()
            };
            Ok((fit(left), fit(right)))
        }
        InputKind::Flow => Ok((
            flow_stream(&left, flow, resolution, FlowEncoding::TwoChannel)?,
            flow_stream(&right, flow, resolution, FlowEncoding::TwoChannel)?,
        )),
    }
}

/// Trains `model` on `n_samples` pairs (Siamese) or triplets drawn from the
/// streams. The pixel oracle has nothing to learn and returns an empty log.
pub fn train_matcher(
    model: &mut AnyMatcher,
    left: &[FrameRef],
    right: &[FrameRef],
    n_samples: usize,
    config: &TrainConfig,
) -> Result<TrainingLog> {
    let sample_seed = config.seed ^ 0x005e_ed5a_3e0f_f00d;
    match model {
        AnyMatcher::Siamese(m) => {
            // Aligned pairs are limited by the stream length; the rest are offsets.
            let n_match = (n_samples / 2).min(left.len().min(right.len()));
            let pairs = make_pairs(left, right, n_match, n_samples - n_match, sample_seed)?;
            crate::matchers::train_siamese(m, &pairs, config)
        }
        AnyMatcher::Triplet(m) => {
            let triplets = make_triplets(left, right, n_samples, sample_seed)?;
            crate::matchers::train_triplet(m, &triplets, config)
        }
        AnyMatcher::Oracle(_) => Ok(TrainingLog::default()),
    }
}

pub fn build_matrices(
    matcher: &dyn FrameMatcher,
    sequences: &[SequencePair],
) -> Result<Vec<MatchingMatrix>> {
    sequences.iter().map(|s| matcher.build_matrix(s)).collect()
}

/// `n` desynchronized windows from the streams, as (matrix, delay class).
pub fn delay_training_set(
    matcher: &dyn FrameMatcher,
    left: &[FrameRef],
    right: &[FrameRef],
    n: usize,
    seed: u64,
) -> Result<Vec<(MatchingMatrix, usize)>> {
    let sequences = make_sequence_pairs(left, right, n, seed)?;
    let matrices = build_matrices(matcher, &sequences)?;
    matrices
        .into_iter()
        .zip(&sequences)
        .map(|(m, s)| Ok((m, delay_to_class(s.true_delay)?)))
        .collect()
}

pub fn estimate_delays(
    method: DelayMethod,
    dense: Option<&DenseDelayModel>,
    matrices: &[MatchingMatrix],
) -> Result<Vec<DelayEstimate>> {
    match method {
        DelayMethod::HeatMap => Ok(matrices.iter().map(heatmap_estimate).collect()),
        DelayMethod::DenseDelay => {
            let model = dense
                .ok_or_else(|| Error::invalid("dense delay estimation needs a trained model"))?;
            matrices
                .iter()
                .map(|m| densedelay_forward(model, m))
                .collect()
        }
    }
}
