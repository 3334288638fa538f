mod common;

use stereosync::dataset::{
    make_pairs, make_sequence_pairs, make_triplets, render_synthetic_stereo, SceneConfig,
};
use stereosync::matchers::branch::MIN_RESOLUTION;
use stereosync::matchers::{
    train_siamese, train_triplet, triplet_separation, DistanceKind, FrameMatcher, PixelOracle,
    SiameseModel, TripletModel,
};
use stereosync::tensorcore::sigmoid;
use stereosync::training::TrainConfig;
use stereosync::SEQUENCE_LEN;

fn small_scene() -> SceneConfig {
    SceneConfig {
        frames: 60,
        ..SceneConfig::default().with_resolution(MIN_RESOLUTION)
    }
}

fn row_argmax(m: &stereosync::MatchingMatrix, i: usize) -> usize {
    let s = m.normalized();
    let row = &s[i * SEQUENCE_LEN..(i + 1) * SEQUENCE_LEN];
    (0..SEQUENCE_LEN).fold(0, |b, j| if row[j] > row[b] { j } else { b })
}

#[test]
fn zero_head_scores_one_half() {
    let mut m = SiameseModel::new(1, 3).unwrap();
    m.zero_head();
    let a = common::texture(MIN_RESOLUTION, 1, 0.0, 0.0);
    let b = common::texture(MIN_RESOLUTION, 2, 0.0, 0.0);
    assert_eq!(m.score(&a, &b).unwrap(), 0.5);
}

#[test]
fn identical_frames_score_sigmoid_of_bias() {
    let mut m = SiameseModel::new(1, 4).unwrap();
    m.params.get_mut("head.bias").unwrap().values_mut()[0] = 0.3;
    let a = common::texture(MIN_RESOLUTION, 5, 0.0, 0.0);
    assert!((m.score(&a, &a).unwrap() - sigmoid(0.3)).abs() < 1e-12);
}

#[test]
fn siamese_training_reduces_loss_and_is_deterministic() {
    let (l, r) = render_synthetic_stereo(&small_scene(), 7).unwrap();
    let pairs = make_pairs(&l, &r, 10, 10, 8).unwrap();
    let config = TrainConfig {
        epochs: 50,
        batch_size: 1,
        learning_rate: 0.001,
        seed: 9,
    };
    let run = || {
        let mut m = SiameseModel::new(1, 10).unwrap();
        let log = train_siamese(&mut m, &pairs, &config).unwrap();
        (m, log)
    };
    let (a, log) = run();
    assert_eq!(log.epochs.len(), 50);
    assert!(log.final_loss().unwrap() < log.first_loss().unwrap());
    let (b, again) = run();
    assert!(a.params.same_values(&b.params));
    assert_eq!(
        log.final_loss().unwrap().to_bits(),
        again.final_loss().unwrap().to_bits()
    );
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let (l, r) = render_synthetic_stereo(&small_scene(), 11).unwrap();
    let pairs = make_pairs(&l, &r, 3, 3, 1).unwrap();
    let mut m = SiameseModel::new(1, 12).unwrap();
    let before = m.params.clone();
    let config = TrainConfig {
        epochs: 3,
        batch_size: 2,
        learning_rate: 0.0,
        seed: 1,
    };
    train_siamese(&mut m, &pairs, &config).unwrap();
    assert!(m.params.same_values(&before));
}

#[test]
fn empty_dataset_is_an_error() {
    let mut m = SiameseModel::new(1, 1).unwrap();
    assert!(train_siamese(&mut m, &[], &TrainConfig::siamese_defaults(1)).is_err());
}

#[test]
fn identical_embeddings_score_zero_distance_or_unit_cosine() {
    let a = common::texture(MIN_RESOLUTION, 13, 0.0, 0.0);
    let euc = TripletModel::new(1, DistanceKind::Euclidean, 14).unwrap();
    assert_eq!(euc.score(&a, &a).unwrap(), 0.0);
    let cos = TripletModel::new(1, DistanceKind::Cosine, 14).unwrap();
    assert!((cos.score(&a, &a).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn triplet_training_increases_separation() {
    let (l, r) = render_synthetic_stereo(&small_scene(), 15).unwrap();
    let triplets = make_triplets(&l, &r, 64, 16).unwrap();
    let mut m = TripletModel::new(1, DistanceKind::Euclidean, 17).unwrap();
    let before = triplet_separation(&m, &triplets).unwrap();
    train_triplet(
        &mut m,
        &triplets,
        &TrainConfig {
            epochs: 50,
            ..TrainConfig::triplet_defaults(18)
        },
    )
    .unwrap();
    let after = triplet_separation(&m, &triplets).unwrap();
    assert!(after > before, "separation {before} -> {after}");
}

#[test]
fn oracle_matrix_peaks_on_the_delay_diagonal() {
    let scene = SceneConfig {
        disparity: 0,
        ..small_scene()
    };
    let (l, r) = render_synthetic_stereo(&scene, 19).unwrap();
    for seq in make_sequence_pairs(&l, &r, 40, 20).unwrap() {
        let d = seq.true_delay;
        if d != 0 && d != 3 {
            continue;
        }
        let m = PixelOracle.build_matrix(&seq).unwrap();
        for i in (d as usize)..SEQUENCE_LEN {
            assert_eq!(row_argmax(&m, i) as i32, i as i32 - d, "d={d} row {i}");
        }
    }
}
