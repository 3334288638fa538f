use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use log::info;
use serde::Serialize;

use stereosync::dataset::{
    load_frames, make_pairs, make_sequence_pairs, make_triplets, render_synthetic_stereo,
    save_frames, write_manifest, FrameRef, InputKind, ManifestRecord, SequencePair, Split,
};
use stereosync::delay::{
    densedelay_forward, heatmap_estimate, train_densedelay, DelayMethod, DenseDelayModel,
};
use stereosync::eval::{
    delay_training_set, emit_plot, job_seed, load_dataset, read_results_csv, run_experiment,
    train_matcher, write_results_csv, AnyMatcher, DatasetSource, GridConfig,
};
use stereosync::matchers::{load_metadata, save_matcher, FrameMatcher, MatcherKind};
use stereosync::opticalflow::{farneback_flow, flow_stream, FlowEncoding, FlowParams};
use stereosync::{ParamSet, SEQUENCE_LEN};

use crate::config::{RunConfig, UsageError};

const MODEL_FILE: &str = "model.params";
const DELAY_FILE: &str = "delay.params";

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn refuse_overwrite(path: &Path, force: bool) -> anyhow::Result<()> {
    if path.exists() && !force {
        return Err(UsageError(format!(
            "{} already exists (pass --force to overwrite)",
            path.display()
        ))
        .into());
    }
    Ok(())
}

fn source(cfg: &RunConfig) -> DatasetSource {
    match &cfg.data {
        Some(dir) => DatasetSource::Directory(dir.clone()),
        None => DatasetSource::Synthetic { seed: cfg.seed },
    }
}

pub fn gen_data(cfg: &RunConfig) -> anyhow::Result<()> {
    let (left, right) = render_synthetic_stereo(&cfg.scene(), cfg.seed)?;
    create_dir(&cfg.out)?;
    save_frames(&left, &cfg.out.join("left"))?;
    save_frames(&right, &cfg.out.join("right"))?;

    let n_match = (cfg.train_samples / 2).min(left.len());
    let pairs = make_pairs(
        &left,
        &right,
        n_match,
        cfg.train_samples - n_match,
        job_seed(cfg.seed, &["pairs"]),
    )?;
    let triplets = make_triplets(
        &left,
        &right,
        cfg.train_samples,
        job_seed(cfg.seed, &["triplets"]),
    )?;
    let sequences = make_sequence_pairs(
        &left,
        &right,
        cfg.test_sequences,
        job_seed(cfg.seed, &["sequences"]),
    )?;
    let records: Vec<ManifestRecord> = pairs
        .iter()
        .map(|p| ManifestRecord::from_pair(p, Split::Train))
        .chain(
            triplets
                .iter()
                .map(|t| ManifestRecord::from_triplet(t, Split::Train)),
        )
        .chain(
            sequences
                .iter()
                .map(|s| ManifestRecord::from_sequence(s, Split::Test)),
        )
        .collect();
    write_manifest(&cfg.out.join("manifest.csv"), &records)?;
    if cfg.input == InputKind::Flow {
        write_flow_dumps(&left, &right, &cfg.out.join("flow"))?;
    }
    write(&cfg.out.join("config.txt"), cfg.snapshot())?;
    println!(
        "wrote {} frames per view and {} manifest records to {}",
        left.len(),
        records.len(),
        cfg.out.display()
    );
    Ok(())
}

fn write_flow_dumps(left: &[FrameRef], right: &[FrameRef], root: &Path) -> anyhow::Result<usize> {
    let params = FlowParams::default();
    let mut count = 0;
    for (name, frames) in [("left", left), ("right", right)] {
        let dir = root.join(name);
        create_dir(&dir)?;
        for (t, pair) in frames.windows(2).enumerate() {
            farneback_flow(&pair[0], &pair[1], &params)?
                .save(&dir.join(format!("flow_{t:05}.flow")))?;
            count += 1;
        }
    }
    Ok(count)
}

pub fn flow(cfg: &RunConfig) -> anyhow::Result<()> {
    let (left, right) = match source(cfg) {
        DatasetSource::Directory(dir) => (
            load_frames(&dir.join("left"), cfg.resolution)?,
            load_frames(&dir.join("right"), cfg.resolution)?,
        ),
        DatasetSource::Synthetic { seed } => render_synthetic_stereo(&cfg.scene(), seed)?,
    };
    let root = cfg.out.join("flow");
    let n = write_flow_dumps(&left, &right, &root)?;
    println!("wrote {n} flow fields to {}", root.display());
    Ok(())
}

pub fn train(cfg: &RunConfig, force: bool, resume: bool) -> anyhow::Result<()> {
    if cfg.matcher == MatcherKind::Oracle && cfg.delay == DelayMethod::HeatMap {
        return Err(UsageError("the pixel oracle with heatmap has nothing to train".into()).into());
    }
    let model_path = cfg.out.join(MODEL_FILE);
    let delay_path = cfg.out.join(DELAY_FILE);
    if !resume {
        refuse_overwrite(&model_path, force)?;
        refuse_overwrite(&delay_path, force)?;
    }
    let (left, right) = load_dataset(
        &source(cfg),
        cfg.input,
        cfg.resolution,
        &cfg.scene(),
        &FlowParams::default(),
    )?;
    let in_channels = left[0].channels();
    let seed = job_seed(cfg.seed, &["matcher"]);
    let mut matcher = AnyMatcher::untrained(cfg.matcher, in_channels, cfg.hinge, seed)?;
    if resume && cfg.matcher.is_trainable() {
        let meta = load_metadata(&model_path)?;
        let expected = matcher
            .metadata(cfg.resolution)
            .expect("trainable matchers have metadata");
        if meta != expected {
            return Err(UsageError(format!(
                "cannot resume: saved model is {} with {} channel(s) at {} px (hinge={}), run asks for {} with {} channel(s) at {} px (hinge={})",
                meta.kind,
                meta.in_channels,
                meta.resolution,
                meta.hinge,
                expected.kind,
                expected.in_channels,
                expected.resolution,
                expected.hinge
            ))
            .into());
        }
        matcher = AnyMatcher::from_params(&meta, ParamSet::load(&model_path)?)?;
    }
    create_dir(&cfg.out)?;
    if cfg.matcher.is_trainable() {
        info!("training {} on {} frames", cfg.matcher, left.len());
        let log = train_matcher(
            &mut matcher,
            &left,
            &right,
            cfg.train_samples,
            &cfg.matcher_train(seed),
        )?;
        let meta = matcher
            .metadata(cfg.resolution)
            .expect("trainable matchers have metadata");
        save_matcher(
            matcher
                .params()
                .expect("trainable matchers have parameters"),
            &meta,
            &model_path,
        )?;
        write(&cfg.out.join("train_log.csv"), log.to_csv())?;
        println!(
            "trained {} for {} epochs (final loss {:.6}) -> {}",
            cfg.matcher,
            log.epochs.len(),
            log.final_loss().unwrap_or(f64::NAN),
            model_path.display()
        );
    }
    if cfg.delay == DelayMethod::DenseDelay {
        let dseed = job_seed(cfg.seed, &["dense"]);
        let samples =
            delay_training_set(&matcher, &left, &right, cfg.delay_train_sequences, dseed)?;
        let mut dense = if resume && delay_path.exists() {
            DenseDelayModel::from_params(ParamSet::load(&delay_path)?)?
        } else {
            DenseDelayModel::new(dseed)
        };
        let log = train_densedelay(&mut dense, &samples, &cfg.dense_train(dseed))?;
        dense.params.save(&delay_path)?;
        write(&cfg.out.join("delay_log.csv"), log.to_csv())?;
        println!(
            "trained dense delay on {} matrices (final loss {:.6}) -> {}",
            samples.len(),
            log.final_loss().unwrap_or(f64::NAN),
            delay_path.display()
        );
    }
    write(&cfg.out.join("config.txt"), cfg.snapshot())?;
    Ok(())
}

#[derive(Serialize)]
struct SyncRecord {
    left: PathBuf,
    right: PathBuf,
    matcher: MatcherKind,
    input: String,
    delay_method: DelayMethod,
    delay: i32,
    confidence: f64,
}

/// The first `need` frames of `dir`, or a data error naming the directory.
fn window(dir: &Path, resolution: usize, need: usize) -> anyhow::Result<Vec<FrameRef>> {
    let frames = load_frames(dir, resolution)
        .with_context(|| format!("cannot load frames from {}", dir.display()))?;
    if frames.len() < need {
        return Err(stereosync::Error::InsufficientData(format!(
            "{} has {} frame(s), need at least {need}",
            dir.display(),
            frames.len()
        ))
        .into());
    }
    Ok(frames[..need].to_vec())
}

pub fn sync(cfg: &RunConfig) -> anyhow::Result<()> {
    let (Some(left_dir), Some(right_dir)) = (&cfg.left, &cfg.right) else {
        return Err(UsageError("sync needs --left and --right frame directories".into()).into());
    };
    let model_path = cfg
        .model
        .clone()
        .unwrap_or_else(|| cfg.out.join(MODEL_FILE));
    let (matcher, resolution) = if cfg.matcher == MatcherKind::Oracle {
        (
            AnyMatcher::untrained(MatcherKind::Oracle, 1, cfg.hinge, 0)?,
            cfg.resolution,
        )
    } else {
        let meta = load_metadata(&model_path)?;
        (
            AnyMatcher::from_params(&meta, ParamSet::load(&model_path)?)?,
            meta.resolution,
        )
    };
    let need = SEQUENCE_LEN + usize::from(cfg.input == InputKind::Flow);
    let mut left = window(left_dir, resolution, need)?;
    let mut right = window(right_dir, resolution, need)?;
    if cfg.input == InputKind::Flow {
        let params = FlowParams::default();
        left = flow_stream(&left, &params, resolution, FlowEncoding::TwoChannel)?;
        right = flow_stream(&right, &params, resolution, FlowEncoding::TwoChannel)?;
    }
    // The true delay is unknown here; the pair only carries the windows.
    let seq = SequencePair::new(left, right, 0)?;
    let matrix = matcher.build_matrix(&seq)?;
    let estimate = match cfg.delay {
        DelayMethod::HeatMap => heatmap_estimate(&matrix),
        DelayMethod::DenseDelay => {
            let path = cfg.delay_model.clone().unwrap_or_else(|| {
                model_path
                    .parent()
                    .map_or_else(|| PathBuf::from(DELAY_FILE), |p| p.join(DELAY_FILE))
            });
            let dense = DenseDelayModel::from_params(ParamSet::load(&path)?)?;
            densedelay_forward(&dense, &matrix)?
        }
    };
    create_dir(&cfg.out)?;
    matrix.save(&cfg.out.join("matrix.csv"))?;
    let record = SyncRecord {
        left: left_dir.clone(),
        right: right_dir.clone(),
        matcher: matcher.kind(),
        input: cfg.input.to_string(),
        delay_method: estimate.method,
        delay: estimate.delay,
        confidence: estimate.confidence,
    };
    write(
        &cfg.out.join("sync.json"),
        serde_json::to_string_pretty(&record)? + "\n",
    )?;
    println!(
        "delay {} frames (confidence {:.3})",
        estimate.delay, estimate.confidence
    );
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, force: bool) -> anyhow::Result<()> {
    let csv_path = cfg.out.join("results.csv");
    refuse_overwrite(&csv_path, force)?;
    let grid = GridConfig {
        datasets: cfg.datasets.clone(),
        train_sets: cfg.train_sets.clone(),
        test_sets: cfg.test_sets.clone(),
        matchers: if cfg.matchers.is_empty() {
            vec![cfg.matcher]
        } else {
            cfg.matchers.clone()
        },
        delay_methods: if cfg.delay_methods.is_empty() {
            vec![cfg.delay]
        } else {
            cfg.delay_methods.clone()
        },
        input: cfg.input,
        resolution: cfg.resolution,
        scene: cfg.scene(),
        flow: FlowParams::default(),
        hinge: cfg.hinge,
        train_samples: cfg.train_samples,
        delay_train_sequences: cfg.delay_train_sequences,
        test_sequences: cfg.test_sequences,
        siamese: cfg.train_for(MatcherKind::Siamese, 0),
        triplet: cfg.train_for(MatcherKind::TripletEuc, 0),
        dense: cfg.dense_train(0),
        seed: cfg.seed,
    };
    grid.validate().map_err(|e| UsageError(e.to_string()))?;
    let report = run_experiment(&grid)?;
    create_dir(&cfg.out)?;
    write_results_csv(&csv_path, &report.rows)?;
    emit_plot(&report.rows, &cfg.out.join("results.svg"))?;
    write(&cfg.out.join("grid_config.txt"), &report.config)?;
    for row in &report.rows {
        println!(
            "{:<28} on {:<12} n={:<4} acc={:.3} f1={:.3} mae={:.3}",
            row.system(),
            row.test_set,
            row.n,
            row.exact_acc,
            row.macro_f1,
            row.mae
        );
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

pub fn plot(cfg: &RunConfig) -> anyhow::Result<()> {
    let results = cfg
        .results
        .clone()
        .unwrap_or_else(|| cfg.out.join("results.csv"));
    let rows = read_results_csv(&results)?;
    let svg = results.with_extension("svg");
    emit_plot(&rows, &svg)?;
    println!("wrote {}", svg.display());
    Ok(())
}
