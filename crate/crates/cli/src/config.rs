//! Flat `key=value` run configuration. Command-line flags override the file.

use std::fmt;
use std::path::{Path, PathBuf};

use stereosync::dataset::{InputKind, SceneConfig};
use stereosync::delay::DelayMethod;
use stereosync::eval::{DatasetSource, DatasetSpec};
use stereosync::matchers::MatcherKind;
use stereosync::training::TrainConfig;

/// A problem with the configuration or the command line (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub type ConfigResult<T> = Result<T, UsageError>;

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

pub const DESK_RESOLUTION: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub resolution: usize,
    pub input: InputKind,
    pub matcher: MatcherKind,
    pub delay: DelayMethod,
    pub hinge: bool,
    pub scene: SceneConfig,
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub delay_model: Option<PathBuf>,
    pub left: Option<PathBuf>,
    pub right: Option<PathBuf>,
    pub results: Option<PathBuf>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dense_epochs: usize,
    pub dense_batch_size: usize,
    pub dense_learning_rate: f64,
    pub train_samples: usize,
    pub delay_train_sequences: usize,
    pub test_sequences: usize,
    pub datasets: Vec<DatasetSpec>,
    pub train_sets: Vec<String>,
    pub test_sets: Vec<String>,
    pub matchers: Vec<MatcherKind>,
    pub delay_methods: Vec<DelayMethod>,
    explicit: Vec<&'static str>,
}

const KEYS: &[&str] = &[
    "seed",
    "out",
    "resolution",
    "input",
    "matcher",
    "delay",
    "hinge",
    "frames",
    "disparity",
    "blobs",
    "noise",
    "speed",
    "data",
    "model",
    "delay_model",
    "left",
    "right",
    "results",
    "epochs",
    "batch_size",
    "learning_rate",
    "dense_epochs",
    "dense_batch_size",
    "dense_learning_rate",
    "train_samples",
    "delay_train_sequences",
    "test_sequences",
    "train_sets",
    "test_sets",
    "matchers",
    "delay_methods",
];

impl Default for RunConfig {
    fn default() -> Self {
        let matcher = TrainConfig::triplet_defaults(0);
        let dense = TrainConfig::dense_delay_defaults(0);
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            resolution: DESK_RESOLUTION,
            input: InputKind::Raw,
            matcher: MatcherKind::TripletEuc,
            delay: DelayMethod::HeatMap,
            hinge: true,
            scene: SceneConfig::default(),
            data: None,
            model: None,
            delay_model: None,
            left: None,
            right: None,
            results: None,
            epochs: matcher.epochs,
            batch_size: matcher.batch_size,
            learning_rate: matcher.learning_rate,
            dense_epochs: dense.epochs,
            dense_batch_size: dense.batch_size,
            dense_learning_rate: dense.learning_rate,
            train_samples: 500,
            delay_train_sequences: 400,
            test_sequences: 100,
            datasets: Vec::new(),
            train_sets: Vec::new(),
            test_sets: Vec::new(),
            matchers: Vec::new(),
            delay_methods: Vec::new(),
            explicit: Vec::new(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> ConfigResult<T> {
    value
        .parse()
        .map_err(|_| usage(format!("invalid value `{value}` for `{key}`")))
}

fn parse_with<T>(
    key: &str,
    value: &str,
    f: impl Fn(&str) -> stereosync::Result<T>,
) -> ConfigResult<T> {
    f(value).map_err(|e| usage(format!("`{key}`: {e}")))
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn dataset_source(key: &str, value: &str) -> ConfigResult<DatasetSource> {
    if let Some(seed) = value.strip_prefix("synthetic:") {
        Ok(DatasetSource::Synthetic {
            seed: parse(key, seed)?,
        })
    } else if let Some(dir) = value.strip_prefix("dir:") {
        Ok(DatasetSource::Directory(PathBuf::from(dir)))
    } else {
        Err(usage(format!(
            "`{key}` must be `synthetic:<seed>` or `dir:<path>`, got `{value}`"
        )))
    }
}

impl RunConfig {
    /// Applies one setting. `dataset.<name>` keys declare experiment datasets.
    pub fn set(&mut self, key: &str, value: &str) -> ConfigResult<()> {
        let value = value.trim();
        if let Some(name) = key.strip_prefix("dataset.") {
            if name.is_empty() || name.contains(',') {
                return Err(usage(format!("invalid dataset name in `{key}`")));
            }
            let source = dataset_source(key, value)?;
            self.datasets.retain(|d| d.name != name);
            self.datasets.push(DatasetSpec {
                name: name.to_string(),
                source,
            });
            return Ok(());
        }
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(usage(format!("unknown config key `{key}`")));
        };
        if !self.explicit.contains(&known) {
            self.explicit.push(known);
        }
        let path = || Some(PathBuf::from(value));
        match key {
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "resolution" => self.resolution = parse(key, value)?,
            "input" => self.input = parse_with(key, value, str::parse)?,
            "matcher" => self.matcher = parse_with(key, value, str::parse)?,
            "delay" => self.delay = parse_with(key, value, str::parse)?,
            "hinge" => self.hinge = parse(key, value)?,
            "frames" => self.scene.frames = parse(key, value)?,
            "disparity" => self.scene.disparity = parse(key, value)?,
            "blobs" => self.scene.blobs = parse(key, value)?,
            "noise" => self.scene.noise = parse(key, value)?,
            "speed" => self.scene.speed = parse(key, value)?,
            "data" => self.data = path(),
            "model" => self.model = path(),
            "delay_model" => self.delay_model = path(),
            "left" => self.left = path(),
            "right" => self.right = path(),
            "results" => self.results = path(),
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "dense_epochs" => self.dense_epochs = parse(key, value)?,
            "dense_batch_size" => self.dense_batch_size = parse(key, value)?,
            "dense_learning_rate" => self.dense_learning_rate = parse(key, value)?,
            "train_samples" => self.train_samples = parse(key, value)?,
            "delay_train_sequences" => self.delay_train_sequences = parse(key, value)?,
            "test_sequences" => self.test_sequences = parse(key, value)?,
            "train_sets" => self.train_sets = list(value),
            "test_sets" => self.test_sets = list(value),
            "matchers" => {
                self.matchers = list(value)
                    .iter()
                    .map(|v| parse_with(key, v, str::parse))
                    .collect::<ConfigResult<_>>()?
            }
            "delay_methods" => {
                self.delay_methods = list(value)
                    .iter()
                    .map(|v| parse_with(key, v, str::parse))
                    .collect::<ConfigResult<_>>()?
            }
            _ => unreachable!("every key in KEYS is handled"),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> ConfigResult<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                usage(format!(
                    "config line {}: expected key=value, got `{line}`",
                    n + 1
                ))
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> ConfigResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Training setup for `kind`: its published defaults, with any
    /// explicitly configured epochs, batch size or learning rate on top.
    pub fn train_for(&self, kind: MatcherKind, seed: u64) -> TrainConfig {
        let mut c = match kind {
            MatcherKind::Siamese => TrainConfig::siamese_defaults(seed),
            _ => TrainConfig::triplet_defaults(seed),
        };
        if self.explicit.contains(&"epochs") {
            c.epochs = self.epochs;
        }
        if self.explicit.contains(&"batch_size") {
            c.batch_size = self.batch_size;
        }
        if self.explicit.contains(&"learning_rate") {
            c.learning_rate = self.learning_rate;
        }
        c
    }

    /// Matcher hyperparameters follow the matcher kind unless set explicitly.
    pub fn align_hyperparameters(&mut self) {
        let c = self.train_for(self.matcher, 0);
        (self.epochs, self.batch_size, self.learning_rate) =
            (c.epochs, c.batch_size, c.learning_rate);
    }

    /// Pins the published training setup: full resolution and the published
    /// epochs, batch sizes and learning rates.
    pub fn pin_paper_defaults(&mut self) {
        let base = match self.matcher {
            MatcherKind::Siamese => TrainConfig::siamese_defaults(0),
            _ => TrainConfig::triplet_defaults(0),
        };
        let dense = TrainConfig::dense_delay_defaults(0);
        self.resolution = stereosync::dataset::DEFAULT_RESOLUTION;
        self.epochs = base.epochs;
        self.batch_size = base.batch_size;
        self.learning_rate = base.learning_rate;
        self.dense_epochs = dense.epochs;
        self.dense_batch_size = dense.batch_size;
        self.dense_learning_rate = dense.learning_rate;
        self.explicit
            .retain(|k| !["epochs", "batch_size", "learning_rate"].contains(k));
    }

    pub fn matcher_train(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed,
        }
    }

    pub fn dense_train(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.dense_epochs,
            batch_size: self.dense_batch_size,
            learning_rate: self.dense_learning_rate,
            seed,
        }
    }

    /// The synthetic scene rendered at the run resolution.
    pub fn scene(&self) -> SceneConfig {
        self.scene.clone().with_resolution(self.resolution)
    }

    pub fn validate(&self) -> ConfigResult<()> {
        if self.resolution == 0 {
            return Err(usage("resolution must be positive"));
        }
        self.scene().validate().map_err(|e| usage(e.to_string()))?;
        for c in [self.matcher_train(0), self.dense_train(0)] {
            c.validate().map_err(|e| usage(e.to_string()))?;
        }
        Ok(())
    }

    /// Every setting as `key=value` lines, in a fixed order.
    pub fn snapshot(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut lines = vec![
            format!("seed={}", self.seed),
            format!("out={}", self.out.display()),
            format!("resolution={}", self.resolution),
            format!("input={}", self.input),
            format!("matcher={}", self.matcher),
            format!("delay={}", self.delay),
            format!("hinge={}", self.hinge),
            format!("frames={}", self.scene.frames),
            format!("disparity={}", self.scene.disparity),
            format!("blobs={}", self.scene.blobs),
            format!("noise={}", self.scene.noise),
            format!("speed={}", self.scene.speed),
            format!("epochs={}", self.epochs),
            format!("batch_size={}", self.batch_size),
            format!("learning_rate={}", self.learning_rate),
            format!("dense_epochs={}", self.dense_epochs),
            format!("dense_batch_size={}", self.dense_batch_size),
            format!("dense_learning_rate={}", self.dense_learning_rate),
            format!("train_samples={}", self.train_samples),
            format!("delay_train_sequences={}", self.delay_train_sequences),
            format!("test_sequences={}", self.test_sequences),
        ];
        for (key, value) in [
            ("data", &self.data),
            ("model", &self.model),
            ("delay_model", &self.delay_model),
            ("left", &self.left),
            ("right", &self.right),
            ("results", &self.results),
        ] {
            if let Some(p) = value {
                lines.push(format!("{key}={}", p.display()));
            }
        }
        for d in &self.datasets {
            let src = match &d.source {
                DatasetSource::Synthetic { seed } => format!("synthetic:{seed}"),
                DatasetSource::Directory(p) => format!("dir:{}", p.display()),
            };
            lines.push(format!("dataset.{}={src}", d.name));
        }
        lines.push(format!("train_sets={}", self.train_sets.join(",")));
        lines.push(format!("test_sets={}", self.test_sets.join(",")));
        lines.push(format!(
            "matchers={}",
            join(self.matchers.iter().map(|m| m.to_string()).collect())
        ));
        lines.push(format!(
            "delay_methods={}",
            join(self.delay_methods.iter().map(|m| m.to_string()).collect())
        ));
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nseed = 4\nmatcher=siamese\n\ndataset.a=synthetic:9\n")
            .unwrap();
        c.set("seed", "5").unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.matcher, MatcherKind::Siamese);
        assert_eq!(c.datasets[0].source, DatasetSource::Synthetic { seed: 9 });
        c.align_hyperparameters();
        assert_eq!((c.epochs, c.batch_size, c.learning_rate), (100, 1, 0.01));
    }

    #[test]
    fn explicit_hyperparameters_survive_alignment() {
        let mut c = RunConfig::default();
        c.apply_text("matcher=siamese\nepochs=3\n").unwrap();
        c.align_hyperparameters();
        assert_eq!((c.epochs, c.batch_size), (3, 1));
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::default()
            .apply_text("colour=blue\n")
            .unwrap_err();
        assert!(err.0.contains("`colour`"), "{}", err.0);
        assert!(RunConfig::default().apply_text("just words\n").is_err());
        assert!(RunConfig::default().apply_text("seed=abc\n").is_err());
        assert!(RunConfig::default()
            .apply_text("dataset.x=ftp:1\n")
            .is_err());
    }

    #[test]
    fn paper_defaults_pin_resolution() {
        let mut c = RunConfig::default();
        c.apply_text("epochs=2\nresolution=32\n").unwrap();
        c.pin_paper_defaults();
        assert_eq!((c.resolution, c.epochs, c.dense_epochs), (224, 100, 50));
    }

    #[test]
    fn snapshot_reparses() {
        let mut c = RunConfig::default();
        c.apply_text("dataset.a=dir:/tmp/x\ntrain_sets=a\nmatchers=oracle,siamese\n")
            .unwrap();
        let mut d = RunConfig::default();
        d.apply_text(&c.snapshot()).unwrap();
        assert_eq!(d.snapshot(), c.snapshot());
    }
}
