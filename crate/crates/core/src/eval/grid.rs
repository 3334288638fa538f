use std::collections::BTreeMap;
use std::path::PathBuf;

use log::info;

use super::pipeline::{
    build_matrices, delay_training_set, estimate_delays, load_dataset, train_matcher, AnyMatcher,
};
use super::{EvalReport, ReportRow};
use crate::dataset::{make_sequence_pairs, FrameRef, InputKind, SceneConfig};
use crate::delay::{train_densedelay, DelayMethod, DenseDelayModel};
use crate::error::{Error, Result};
use crate::matchers::MatcherKind;
use crate::opticalflow::FlowParams;
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    /// A procedural scene rendered with this seed.
    Synthetic { seed: u64 },
    /// A directory with `left/` and `right/` image sequences.
    Directory(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSpec {
    pub name: String,
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub datasets: Vec<DatasetSpec>,
    pub train_sets: Vec<String>,
    pub test_sets: Vec<String>,
    pub matchers: Vec<MatcherKind>,
    pub delay_methods: Vec<DelayMethod>,
    pub input: InputKind,
    pub resolution: usize,
    pub scene: SceneConfig,
    pub flow: FlowParams,
    pub hinge: bool,
    /// Pairs (Siamese) or triplets drawn from each training set.
    pub train_samples: usize,
    /// Matrices DenseDelay is trained on.
    pub delay_train_sequences: usize,
    /// Sequence pairs evaluated per test set.
    pub test_sequences: usize,
    pub siamese: TrainConfig,
    pub triplet: TrainConfig,
    pub dense: TrainConfig,
    pub seed: u64,
}

impl GridConfig {
    fn dataset(&self, name: &str) -> Result<&DatasetSpec> {
        self.datasets
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::invalid(format!("dataset `{name}` is not defined")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.matchers.is_empty() || self.delay_methods.is_empty() {
            return Err(Error::invalid(
                "grid needs at least one matcher and one delay method",
            ));
        }
        if self.train_sets.is_empty() || self.test_sets.is_empty() {
            return Err(Error::invalid(
                "grid needs at least one training and one test set",
            ));
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if self.datasets[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::invalid(format!(
                    "dataset `{}` defined twice",
                    d.name
                )));
            }
        }
        for name in self.train_sets.iter().chain(&self.test_sets) {
            self.dataset(name)?;
        }
        if let Some(t) = self.train_sets.iter().find(|t| self.test_sets.contains(t)) {
            return Err(Error::invalid(format!(
                "training set `{t}` is also listed as a test set"
            )));
        }
        if self.resolution == 0 || self.test_sequences == 0 {
            return Err(Error::invalid(
                "resolution and test sequence count must be positive",
            ));
        }
        self.scene.validate()?;
        self.flow.validate()?;
        for c in [&self.siamese, &self.triplet, &self.dense] {
            c.validate()?;
        }
        Ok(())
    }

    fn matcher_config(&self, kind: MatcherKind) -> TrainConfig {
        match kind {
            MatcherKind::Siamese => self.siamese,
            _ => self.triplet,
        }
    }

    /// `key=value` lines recording every setting.
    pub fn describe(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k}={v}\n"));
        for d in &self.datasets {
            let src = match &d.source {
                DatasetSource::Synthetic { seed } => format!("synthetic:{seed}"),
                DatasetSource::Directory(p) => format!("dir:{}", p.display()),
            };
            kv(&format!("dataset.{}", d.name), src);
        }
        kv("train_sets", self.train_sets.join(","));
        kv("test_sets", self.test_sets.join(","));
        kv(
            "matchers",
            join(self.matchers.iter().map(|m| m.to_string()).collect()),
        );
        kv(
            "delay_methods",
            join(self.delay_methods.iter().map(|m| m.to_string()).collect()),
        );
        kv("input", self.input.to_string());
        kv("resolution", self.resolution.to_string());
        kv("frames", self.scene.frames.to_string());
        kv("hinge", self.hinge.to_string());
        kv("train_samples", self.train_samples.to_string());
        kv(
            "delay_train_sequences",
            self.delay_train_sequences.to_string(),
        );
        kv("test_sequences", self.test_sequences.to_string());
        for (name, c) in [
            ("siamese", &self.siamese),
            ("triplet", &self.triplet),
            ("dense", &self.dense),
        ] {
            kv(&format!("{name}.epochs"), c.epochs.to_string());
            kv(&format!("{name}.batch_size"), c.batch_size.to_string());
            kv(
                &format!("{name}.learning_rate"),
                c.learning_rate.to_string(),
            );
        }
        kv("seed", self.seed.to_string());
        s
    }
}

/// Seed for one grid job, derived from the master seed and the job's name
/// parts with FNV-1a and a SplitMix64 finalizer.
pub fn job_seed(master: u64, parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(&master.to_le_bytes());
    for p in parts {
        feed(p.as_bytes());
        feed(&[0xff]);
    }
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Trains every (matcher, train set) once, DenseDelay once per trained
/// matcher, and scores each system on every test set.
///
/// Rows come out ordered by train set, matcher, test set, delay method.
pub fn run_experiment(config: &GridConfig) -> Result<EvalReport> {
    config.validate()?;
    let mut cache: BTreeMap<&str, (Vec<FrameRef>, Vec<FrameRef>)> = BTreeMap::new();
    let mut streams = |name: &str| -> Result<(Vec<FrameRef>, Vec<FrameRef>)> {
        let spec = config.dataset(name)?;
        if !cache.contains_key(spec.name.as_str()) {
            let data = load_dataset(
                &spec.source,
                config.input,
                config.resolution,
                &config.scene,
                &config.flow,
            )?;
            cache.insert(spec.name.as_str(), data);
        }
        Ok(cache[spec.name.as_str()].clone())
    };

    let mut rows = Vec::new();
    for train_set in &config.train_sets {
        let (train_left, train_right) = streams(train_set)?;
        let in_channels = train_left[0].channels();
        for &kind in &config.matchers {
            let name = kind.to_string();
            let seed = job_seed(config.seed, &[train_set, &name]);
            let mut matcher = AnyMatcher::untrained(kind, in_channels, config.hinge, seed)?;
            let train_config = TrainConfig {
                seed,
                ..config.matcher_config(kind)
            };
            info!("training {kind} on {train_set}");
            train_matcher(
                &mut matcher,
                &train_left,
                &train_right,
                config.train_samples,
                &train_config,
            )?;

            let dense = if config.delay_methods.contains(&DelayMethod::DenseDelay) {
                let dseed = job_seed(config.seed, &[train_set, &name, "dense"]);
                let samples = delay_training_set(
                    &matcher,
                    &train_left,
                    &train_right,
                    config.delay_train_sequences,
                    dseed,
                )?;
                let mut model = DenseDelayModel::new(dseed);
                info!("training dense delay for {kind} on {train_set}");
                train_densedelay(
                    &mut model,
                    &samples,
                    &TrainConfig {
                        seed: dseed,
                        ..config.dense
                    },
                )?;
                Some(model)
            } else {
                None
            };

            for test_set in &config.test_sets {
                let (left, right) = streams(test_set)?;
                let sequences = make_sequence_pairs(
                    &left,
                    &right,
                    config.test_sequences,
                    job_seed(config.seed, &[test_set]),
                )?;
                let truths: Vec<i32> = sequences.iter().map(|s| s.true_delay).collect();
                let matrices = build_matrices(&matcher, &sequences)?;
                for &method in &config.delay_methods {
                    let preds: Vec<i32> = estimate_delays(method, dense.as_ref(), &matrices)?
                        .into_iter()
                        .map(|e| e.delay)
                        .collect();
                    rows.push(ReportRow::score(
                        kind, method, train_set, test_set, &preds, &truths,
                    )?);
                }
            }
        }
    }
    Ok(EvalReport {
        rows,
        config: config.describe(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_grid() -> GridConfig {
        let synth = |name: &str, seed| DatasetSpec {
            name: name.into(),
            source: DatasetSource::Synthetic { seed },
        };
        GridConfig {
            datasets: vec![synth("a", 1), synth("b", 2), synth("c", 3), synth("d", 4)],
            train_sets: vec!["a".into()],
            test_sets: vec!["b".into(), "c".into(), "d".into()],
            matchers: vec![MatcherKind::Oracle],
            delay_methods: vec![DelayMethod::HeatMap, DelayMethod::DenseDelay],
            input: InputKind::Raw,
            resolution: 16,
            scene: SceneConfig {
                width: 16,
                height: 16,
                frames: 50,
                ..SceneConfig::default()
            },
            flow: FlowParams::default(),
            hinge: true,
            train_samples: 0,
            delay_train_sequences: 8,
            test_sequences: 5,
            siamese: TrainConfig::siamese_defaults(0),
            triplet: TrainConfig::triplet_defaults(0),
            dense: TrainConfig {
                epochs: 2,
                ..TrainConfig::dense_delay_defaults(0)
            },
            seed: 7,
        }
    }

    #[test]
    fn row_count_is_systems_times_test_sets() {
        let report = run_experiment(&small_grid()).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert!(report.rows.iter().all(|r| r.n == 5 && r.train_set == "a"));
        assert!(report.config.contains("test_sets=b,c,d\n"));
    }

    #[test]
    fn train_set_in_test_list_is_rejected() {
        let mut grid = small_grid();
        grid.test_sets.push("a".into());
        assert!(run_experiment(&grid).is_err());
        let mut grid = small_grid();
        grid.test_sets.push("zzz".into());
        assert!(run_experiment(&grid).is_err());
    }

    #[test]
    fn job_seeds_separate_parts() {
        assert_ne!(job_seed(1, &["ab", "c"]), job_seed(1, &["a", "bc"]));
        assert_ne!(job_seed(1, &["a"]), job_seed(2, &["a"]));
        assert_eq!(job_seed(3, &["x", "y"]), job_seed(3, &["x", "y"]));
    }
}
