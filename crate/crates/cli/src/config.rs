//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use graphair_core::models::{Base, Task, Variant};
use graphair_core::train::TrainSpec;

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "dataset",
    "task",
    "base",
    "variant",
    "k_layers",
    "hidden",
    "embedding",
    "dropout",
    "epochs",
    "lr",
    "weight_decay",
    "lambda1",
    "lambda2",
    "lambda3",
    "patience",
    "seeds",
    "normalize_features",
    "val_frac",
    "test_frac",
    "split_seed",
    "pos_weight",
    "out",
    "history",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    /// Directory in the bundle format.
    Bundle(PathBuf),
    /// `synth:<n>:<seed>`, the XOR cycle graph.
    Synth { n: usize, seed: u64 },
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Bundle(p) => write!(f, "{}", p.display()),
            DatasetSource::Synth { n, seed } => write!(f, "synth:{n}:{seed}"),
        }
    }
}

impl FromStr for DatasetSource {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("synth:") {
            Some(rest) => {
                let (n, seed) = rest
                    .split_once(':')
                    .ok_or_else(|| anyhow!("synthetic dataset must look like synth:<n>:<seed>, got {s:?}"))?;
                Ok(DatasetSource::Synth {
                    n: n.trim().parse().with_context(|| format!("bad node count in {s:?}"))?,
                    seed: seed.trim().parse().with_context(|| format!("bad seed in {s:?}"))?,
                })
            }
            None if s.is_empty() => bail!("dataset path is empty"),
            None => Ok(DatasetSource::Bundle(PathBuf::from(s))),
        }
    }
}

/// Fully resolved configuration of one train or linkpred run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub task: Task,
    pub base: Base,
    pub variant: Variant,
    pub k_layers: usize,
    pub hidden: usize,
    /// Embedding width of the link-prediction encoder.
    pub embedding: usize,
    pub dropout: f64,
    pub train: TrainSpec,
    pub normalize_features: bool,
    pub val_frac: f64,
    pub test_frac: f64,
    pub split_seed: u64,
    pub out: Option<PathBuf>,
    pub history: Option<PathBuf>,
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{origin}:{}: expected `key = value`, got {line:?}", no + 1))?;
        pairs.push((key.trim().to_owned(), value.trim().to_owned()));
    }
    Ok(pairs)
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().with_context(|| format!("bad seed range {s:?}"))?;
        let b: u64 = b.trim().parse().with_context(|| format!("bad seed range {s:?}"))?;
        if a >= b {
            bail!("seed range {s:?} is empty");
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().with_context(|| format!("bad seed {t:?} in {s:?}")))
        .collect()
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| anyhow!("invalid value {v:?} for key `{key}`: {e}")),
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.0.get(key).ok_or_else(|| anyhow!("missing required key `{key}`"))?;
        v.parse()
            .map_err(|e| anyhow!("invalid value {v:?} for key `{key}`: {e}"))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.0.get(key).filter(|v| !v.is_empty()).map(PathBuf::from)
    }
}

impl RunConfig {
    /// Resolves `pairs` (later entries win) into a validated configuration.
    ///
    /// `task` fills in the task when no pair sets it; a pair that names a
    /// different task is an error.
    pub fn from_pairs(pairs: &[(String, String)], task: Option<Task>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            if !KEYS.contains(&k.as_str()) {
                bail!("unknown config key `{k}`");
            }
            map.insert(k.clone(), v.clone());
        }
        if let Some(t) = task {
            match map.get("task") {
                None => {
                    map.insert("task".into(), t.keyword().into());
                }
                Some(given) if given.parse::<Task>().ok() != Some(t) => {
                    bail!("config sets task = {given} but this command runs {t}")
                }
                Some(_) => {}
            }
        }
        let v = Values(map);

        let task: Task = v.required("task")?;
        let dataset: DatasetSource = v.required("dataset")?;
        let link = task == Task::LinkPrediction;
        let defaults = if link {
            TrainSpec::link_prediction()
        } else {
            TrainSpec::node_classification()
        };
        let seeds = match v.0.get("seeds") {
            None => defaults.seeds.clone(),
            Some(s) => parse_seeds(s)?,
        };
        let pos_weight = match v.0.get("pos_weight").map(String::as_str) {
            None | Some("auto") => None,
            Some(s) => Some(
                s.parse()
                    .map_err(|e| anyhow!("invalid value {s:?} for key `pos_weight`: {e}"))?,
            ),
        };
        let epochs = v.get("epochs", defaults.epochs)?;
        let train = TrainSpec {
            epochs,
            lr: v.get("lr", defaults.lr)?,
            weight_decay: v.get("weight_decay", defaults.weight_decay)?,
            lambdas: [
                v.get("lambda1", defaults.lambdas[0])?,
                v.get("lambda2", defaults.lambdas[1])?,
                v.get("lambda3", defaults.lambdas[2])?,
            ],
            patience: v.get("patience", defaults.patience.min(epochs))?,
            seeds,
            pos_weight,
        };
        train.validate()?;

        let config = RunConfig {
            dataset,
            task,
            base: v.get("base", Base::Gcn)?,
            variant: v.get("variant", Variant::Air)?,
            k_layers: v.get("k_layers", 1)?,
            hidden: v.get("hidden", if link { 32 } else { 16 })?,
            embedding: v.get("embedding", 16)?,
            dropout: v.get("dropout", if link { 0.0 } else { 0.5 })?,
            train,
            normalize_features: v.get("normalize_features", true)?,
            val_frac: v.get("val_frac", 0.05)?,
            test_frac: v.get("test_frac", 0.10)?,
            split_seed: v.get("split_seed", 0)?,
            out: v.path("out"),
            history: v.path("history"),
        };
        config.validate()?;
        Ok(config)
    }

    /// Parses an optional config file, then applies `overrides` on top.
    pub fn load(file: Option<&std::path::Path>, overrides: &[(String, String)], task: Option<Task>) -> Result<Self> {
        let mut pairs = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_pairs(&text, &path.display().to_string())?
            }
            None => Vec::new(),
        };
        pairs.extend(overrides.iter().cloned());
        Self::from_pairs(&pairs, task)
    }

    fn validate(&self) -> Result<()> {
        if self.k_layers == 0 || self.hidden == 0 || self.embedding == 0 {
            bail!("k_layers, hidden and embedding must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            bail!("dropout {} outside [0, 1)", self.dropout);
        }
        let held_out = self.val_frac + self.test_frac;
        if !(self.val_frac > 0.0 && self.test_frac > 0.0 && held_out < 1.0) {
            bail!("val_frac and test_frac must be positive with a sum below 1");
        }
        Ok(())
    }

    /// Every key with its resolved value, in [`KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let seeds = self
            .train
            .seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let opt_path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let values = [
            self.dataset.to_string(),
            self.task.to_string(),
            self.base.to_string(),
            self.variant.to_string(),
            self.k_layers.to_string(),
            self.hidden.to_string(),
            self.embedding.to_string(),
            self.dropout.to_string(),
            self.train.epochs.to_string(),
            self.train.lr.to_string(),
            self.train.weight_decay.to_string(),
            self.train.lambdas[0].to_string(),
            self.train.lambdas[1].to_string(),
            self.train.lambdas[2].to_string(),
            self.train.patience.to_string(),
            seeds,
            self.normalize_features.to_string(),
            self.val_frac.to_string(),
            self.test_frac.to_string(),
            self.split_seed.to_string(),
            self.train.pos_weight.map_or("auto".to_owned(), |w| w.to_string()),
            opt_path(&self.out),
            opt_path(&self.history),
        ];
        KEYS.iter().map(|k| k.to_string()).zip(values).collect()
    }

    /// The configuration as a config file.
    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> Vec<(String, String)> {
        parse_pairs(text, "test").unwrap()
    }

    #[test]
    fn defaults_from_required_keys() {
        let c = RunConfig::from_pairs(&pairs("dataset = synth:200:7\ntask = node-clf"), None).unwrap();
        assert_eq!(c.dataset, DatasetSource::Synth { n: 200, seed: 7 });
        assert_eq!(c.train, TrainSpec::node_classification());
        assert_eq!((c.k_layers, c.hidden, c.dropout), (1, 16, 0.5));
        assert_eq!(c.variant, Variant::Air);
    }

    #[test]
    fn link_defaults() {
        let c = RunConfig::from_pairs(&pairs("dataset = d"), Some(Task::LinkPrediction)).unwrap();
        assert_eq!((c.hidden, c.embedding, c.dropout), (32, 16, 0.0));
        assert_eq!(c.train.weight_decay, 0.0);
        assert_eq!(c.train.pos_weight, None);
    }

    #[test]
    fn later_values_win() {
        let mut p = pairs("dataset = d\nlr = 0.01");
        p.push(("lr".into(), "0.05".into()));
        let c = RunConfig::from_pairs(&p, Some(Task::NodeClassification)).unwrap();
        assert_eq!(c.train.lr, 0.05);
    }

    #[test]
    fn unknown_key_named() {
        let err =
            RunConfig::from_pairs(&pairs("dataset = d\nhiddne = 16"), Some(Task::NodeClassification)).unwrap_err();
        assert!(err.to_string().contains("hiddne"), "{err}");
    }

    #[test]
    fn type_errors_and_missing_keys() {
        let bad = RunConfig::from_pairs(&pairs("dataset = d\nepochs = many"), Some(Task::NodeClassification));
        assert!(bad.unwrap_err().to_string().contains("epochs"));
        let missing = RunConfig::from_pairs(&pairs("task = node-clf"), None);
        assert!(missing.unwrap_err().to_string().contains("dataset"));
        let no_task = RunConfig::from_pairs(&pairs("dataset = d"), None);
        assert!(no_task.unwrap_err().to_string().contains("task"));
    }

    #[test]
    fn default_patience_follows_short_schedules() {
        let c = RunConfig::from_pairs(&pairs("dataset = d\nepochs = 5"), Some(Task::NodeClassification)).unwrap();
        assert_eq!(c.train.patience, 5);
        let c = RunConfig::from_pairs(
            &pairs("dataset = d\nepochs = 5\npatience = 6"),
            Some(Task::NodeClassification),
        );
        assert!(c.is_err());
    }

    #[test]
    fn task_conflict() {
        let c = RunConfig::from_pairs(&pairs("dataset = d\ntask = link-pred"), Some(Task::NodeClassification));
        assert!(c.is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let p = pairs("# header\n\ndataset = d # trailing\n  lr=0.2\n");
        assert_eq!(p, vec![("dataset".into(), "d".into()), ("lr".into(), "0.2".into())]);
        assert!(parse_pairs("no equals sign", "f")
            .unwrap_err()
            .to_string()
            .contains("f:1"));
    }

    #[test]
    fn seeds_forms() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4, 9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let text = "dataset = synth:40:1\ntask = link-pred\nlr = 0.003\nweight_decay = 0.0005\nseeds = 2..5\npos_weight = 7.5\nout = r.json\n";
        let c = RunConfig::from_pairs(&pairs(text), None).unwrap();
        let again = RunConfig::from_pairs(&pairs(&c.to_text()), None).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_pairs().len(), KEYS.len());
    }
}
