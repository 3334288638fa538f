//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereosync::dataset::{make_sequence_pairs, render_synthetic_stereo, SceneConfig};
use stereosync::delay::{
    densedelay_forward, heatmap_estimate, heatmap_estimate_with, train_densedelay, DenseDelayModel,
    HeatmapOptions, LAYER_SIZES,
};
use stereosync::eval::{
    build_matrices, delay_training_set, f1_delay, mae_frames, train_matcher, AnyMatcher,
};
use stereosync::matchers::branch::shape_trace;
use stereosync::matchers::{MatcherKind, PixelOracle, SiameseModel};
use stereosync::training::TrainConfig;
use stereosync::{Graph, ImageFrame, MatchingMatrix, Polarity, Tensor, SEQUENCE_LEN};
use tempfile::TempDir;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let results = common::gradcheck::gradient_suite();
    let elapsed = start.elapsed();
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.name)
        .collect();
    let worst = results.iter().map(|r| r.worst).fold(0.0, f64::max);
    outcome(
        failed.is_empty() && within(elapsed, 60),
        format!(
            "{} ops × ≥{} instances, worst relative error {worst:.2e}, failed {failed:?}, {:.1}s",
            results.len(),
            common::gradcheck::INSTANCES,
            elapsed.as_secs_f64()
        ),
    )
}

fn shape_fidelity() -> Outcome {
    let trace = shape_trace(224).unwrap();
    let model = SiameseModel::new(1, 0).unwrap();
    let frame = ImageFrame::new(224, 224, 1, vec![0.5; 224 * 224], 0).unwrap();
    let embedding = model.embed(&frame).unwrap().len();
    let dense = DenseDelayModel::new(0);
    let shapes: Vec<Vec<usize>> = ["dense1", "dense2", "output"]
        .iter()
        .map(|l| {
            dense
                .params
                .get(&format!("{l}.weight"))
                .unwrap()
                .shape()
                .to_vec()
        })
        .collect();
    let ok = trace == [222, 111, 109, 54, 52, 26, 24, 12]
        && embedding == 64
        && LAYER_SIZES == [400, 64, 32, 40]
        && shapes == [vec![400, 64], vec![64, 32], vec![32, 40]];
    outcome(
        ok,
        format!("trace {trace:?}, embedding {embedding}, dense {shapes:?}"),
    )
}

fn triplet_losses() -> Outcome {
    let loss = |a: &[f64], p: &[f64], n: &[f64], cosine: bool| {
        let mut g = Graph::new();
        let v: Vec<_> = [a, p, n]
            .iter()
            .map(|x| g.constant(Tensor::vector(x.to_vec())))
            .collect();
        let l = if cosine {
            g.triplet_cosine_loss(v[0], v[1], v[2])
        } else {
            g.triplet_euclidean_loss(v[0], v[1], v[2], true)
        };
        g.value(l.unwrap()).item().unwrap()
    };
    let cases = [
        (loss(&[0.3, -0.2], &[0.3, -0.2], &[0.3, -0.2], false), 0.5),
        (loss(&[1.0, 1.0], &[1.0, 1.0], &[2.0, 0.0], false), 0.0),
        (loss(&[1.0, 0.0], &[0.0, 1.0], &[3.0, 0.0], false), 0.0),
        (loss(&[0.4, 1.2], &[0.4, 1.2], &[0.4, 1.2], true), 0.5),
        (loss(&[1.0, 0.0], &[2.0, 0.0], &[0.0, 3.0], true), 1.5),
        (loss(&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], true), 0.0),
    ];
    let worst = cases
        .iter()
        .map(|(got, want)| (got - want).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-9,
        format!("{} cases, worst deviation {worst:.1e}", cases.len()),
    )
}

fn heatmap_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let n = SEQUENCE_LEN * SEQUENCE_LEN;
    let mut agree = 0;
    for t in 0..1000 {
        let polarity = if t % 2 == 0 {
            Polarity::HigherIsMatch
        } else {
            Polarity::LowerIsMatch
        };
        let scores: Vec<f64> = if t % 4 < 2 {
            (0..n).map(|_| f64::from(rng.gen_range(0..4u8))).collect()
        } else {
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let m = MatchingMatrix::new(scores.clone(), polarity, "random").unwrap();
        if heatmap_estimate(&m).delay == common::brute_force_delay(&scores, polarity) {
            agree += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        agree == 1000 && within(elapsed, 10),
        format!("{agree}/1000 agree, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn farneback_shifts() -> Outcome {
    let start = Instant::now();
    let shifts = [
        (3.0, 0.0),
        (-3.0, 0.0),
        (0.0, 2.0),
        (0.0, -2.0),
        (2.0, -2.0),
        (-3.0, 2.0),
    ];
    let worst = shifts
        .iter()
        .flat_map(|&(sx, sy)| (0..3).map(move |seed| common::shift_recovery(64, sx, sy, seed)))
        .fold(1.0, f64::min);
    let elapsed = start.elapsed();
    outcome(
        worst >= 0.9 && within(elapsed, 30),
        format!(
            "{} shifts × 3 textures, worst share within 0.5 px {worst:.3}, {:.1}s",
            shifts.len(),
            elapsed.as_secs_f64()
        ),
    )
}

/// Views coincide (zero disparity) so that matching frames are identical,
/// which is what a raw pixel comparison assumes.
fn oracle_pipeline() -> Outcome {
    let start = Instant::now();
    let scene = SceneConfig {
        disparity: 0,
        ..SceneConfig::default()
    };
    let (l, r) = render_synthetic_stereo(&scene, 51).unwrap();
    let seqs = make_sequence_pairs(&l, &r, 200, 52).unwrap();
    let matrices = build_matrices(&PixelOracle, &seqs).unwrap();
    let truths: Vec<i32> = seqs.iter().map(|s| s.true_delay).collect();
    let score = |options: HeatmapOptions| {
        let preds: Vec<i32> = matrices
            .iter()
            .map(|m| heatmap_estimate_with(m, options).delay)
            .collect();
        let (near_p, near_t): (Vec<i32>, Vec<i32>) = preds
            .iter()
            .zip(&truths)
            .filter(|(_, t)| t.abs() <= 10)
            .map(|(p, t)| (*p, *t))
            .unzip();
        let (near_acc, _) = f1_delay(&near_p, &near_t).unwrap();
        let far_err: i32 = preds
            .iter()
            .zip(&truths)
            .filter(|(_, t)| t.abs() >= 18)
            .map(|(p, t)| (p - t).abs())
            .sum();
        (
            near_acc,
            mae_frames(&preds, &truths).unwrap(),
            far_err as f64 / truths.len() as f64,
        )
    };
    let (near_acc, mae, far) = score(HeatmapOptions::default());
    let (_, normalized_mae, _) = score(HeatmapOptions {
        normalize_by_length: true,
    });
    let elapsed = start.elapsed();
    outcome(
        near_acc >= 0.95 && mae <= 0.5 && within(elapsed, 120),
        format!(
            "accuracy {near_acc:.3} for |d| ≤ 10, MAE {mae:.3} over 200 pairs ({far:.3} of it from |d| ≥ 18; \
             length-normalized votes would give {normalized_mae:.3}), {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn learned_pipeline() -> Outcome {
    let start = Instant::now();
    let scene = SceneConfig::default();
    let (tl, tr) = render_synthetic_stereo(&scene, 11).unwrap();
    let (hl, hr) = render_synthetic_stereo(&scene, 22).unwrap();
    let mut matcher = AnyMatcher::untrained(MatcherKind::TripletEuc, 1, true, 1).unwrap();
    train_matcher(
        &mut matcher,
        &tl,
        &tr,
        500,
        &TrainConfig::triplet_defaults(2),
    )
    .unwrap();
    let samples = delay_training_set(&matcher, &tl, &tr, 400, 3).unwrap();
    let mut dense = DenseDelayModel::new(5);
    train_densedelay(&mut dense, &samples, &TrainConfig::dense_delay_defaults(5)).unwrap();
    let seqs = make_sequence_pairs(&hl, &hr, 100, 6).unwrap();
    let matrices = build_matrices(&matcher, &seqs).unwrap();
    let preds: Vec<i32> = matrices
        .iter()
        .map(|m| densedelay_forward(&dense, m).unwrap().delay)
        .collect();
    let truths: Vec<i32> = seqs.iter().map(|s| s.true_delay).collect();
    let (acc, f1) = f1_delay(&preds, &truths).unwrap();
    let mae = mae_frames(&preds, &truths).unwrap();
    let elapsed = start.elapsed();
    outcome(
        acc >= 0.60 && mae <= 3.0 && within(elapsed, 30 * 60),
        format!(
            "TripletEuc 64×64 + DenseDelay on 100 held-out pairs: accuracy {acc:.2}, macro-F1 {f1:.3}, MAE {mae:.2}, {:.0}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn metrics() -> Outcome {
    let mae = mae_frames(&[0, 3, -5], &[1, 3, -1]).unwrap();
    let (acc, f1) = f1_delay(&[0, 1, 1, 1], &[0, 0, 1, 1]).unwrap();
    let ok = (mae - 5.0 / 3.0).abs() <= 1e-9
        && (acc - 0.75).abs() <= 1e-9
        && (f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() <= 1e-9;
    outcome(
        ok,
        format!("MAE {mae:.6}, accuracy {acc:.6}, macro-F1 {f1:.6}"),
    )
}

fn stereosync(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_stereosync"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Every command the tool offers, run into `out`.
fn run_all_commands(root: &Path, out: &Path) -> bool {
    let cfg = root.join("run.cfg");
    let cfg = cfg.to_str().unwrap();
    let o = |sub: &str| out.join(sub).display().to_string();
    stereosync(&[
        "gen-data",
        "--config",
        cfg,
        "--seed",
        "7",
        "--out",
        &o("data"),
    ]) && stereosync(&[
        "train",
        "--config",
        cfg,
        "--seed",
        "7",
        "--delay",
        "dense",
        "--out",
        &o("model"),
    ]) && stereosync(&[
        "sync",
        "--config",
        cfg,
        "--delay",
        "dense",
        "--left",
        &o("data/left"),
        "--right",
        &o("data/right"),
        "--model",
        &o("model/model.params"),
        "--out",
        &o("sync"),
    ]) && stereosync(&[
        "evaluate",
        "--config",
        cfg,
        "--seed",
        "7",
        "--out",
        &o("eval"),
    ])
}

fn csv_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            csv_files(&p, out);
        } else if p.extension().is_some_and(|e| e == "csv") {
            out.push(p);
        }
    }
}

fn determinism() -> Outcome {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("run.cfg"),
        "frames=50\nresolution=46\nmatcher=triplet-euc\nepochs=2\nbatch_size=4\ntrain_samples=8\n\
         dense_epochs=3\ndelay_train_sequences=20\ntest_sequences=10\n\
         dataset.a=synthetic:1\ndataset.b=synthetic:2\ntrain_sets=a\ntest_sets=b\n\
         matchers=oracle,triplet-euc\ndelay_methods=heatmap,dense\n",
    )
    .unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    if !(run_all_commands(tmp.path(), &a) && run_all_commands(tmp.path(), &b)) {
        return outcome(false, "a command failed".into());
    }
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    csv_files(&a, &mut fa);
    csv_files(&b, &mut fb);
    let differing: Vec<String> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| fs::read(x).unwrap() != fs::read(y).unwrap())
        .map(|(x, _)| x.strip_prefix(&a).unwrap().display().to_string())
        .collect();
    let names: Vec<String> = fa
        .iter()
        .map(|p| p.strip_prefix(&a).unwrap().display().to_string())
        .collect();
    outcome(
        fa.len() == fb.len() && fa.len() >= 5 && differing.is_empty(),
        format!(
            "{} CSV outputs compared {names:?}, differing {differing:?}",
            fa.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("gradient suite", gradient_suite),
        ("shape fidelity", shape_fidelity),
        ("triplet loss point values", triplet_losses),
        ("heatmap oracle equivalence", heatmap_oracle),
        ("farneback translation", farneback_shifts),
        ("pixel-oracle pipeline", oracle_pipeline),
        ("learned pipeline", learned_pipeline),
        ("metric functions", metrics),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let result = check();
        if !result.passed {
            failures += 1;
        }
        println!(
            "[{}] {name}: {}",
            if result.passed { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
