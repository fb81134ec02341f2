//! Run manifests: one TOML file per experiment.
//!
//! ```toml
//! out = "runs/regime_a"
//!
//! [dataset]
//! kind = "two_moons"
//! samples = 2000
//!
//! [train]
//! epochs = 375
//! loss = { mode = "ml" }
//!
//! [eval]
//! model = "runs/regime_a/model.flow"
//! ```
//!
//! Each command reads the sections it needs. The resolved manifest, with every
//! default filled in and command-line overrides applied, is written beside the
//! outputs as `manifest.toml`.

use std::path::{Path, PathBuf};

use manimet_core::decoders::JacobianMode;
use manimet_core::dgp::DatasetConfig;
use manimet_core::metrics::{EvalOptions, SampleSource};
use manimet_core::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "MANIMET_OUT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetConfig>,
    /// Training settings; the dataset comes from `[dataset]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<toml::Table>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Flow checkpoint path or builtin decoder name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<JacobianMode>,
    pub source: SampleSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
    pub mpmi: bool,
    pub svg: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        let o = EvalOptions::default();
        Self {
            model: None,
            samples: o.samples,
            seed: o.seed,
            mode: o.mode,
            source: o.source,
            partition: o.partition,
            mpmi: o.mpmi,
            svg: false,
        }
    }
}

impl EvalSection {
    pub fn options(&self) -> EvalOptions {
        EvalOptions {
            samples: self.samples,
            seed: self.seed,
            mode: self.mode,
            source: self.source,
            partition: self.partition.clone(),
            mpmi: self.mpmi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_a: Option<String>,
    /// Second model; `ground-truth` is the torus decoder of `[dataset]`.
    pub model_b: String,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<JacobianMode>,
    /// Squared Pearson matrix against ground-truth latents. When absent it is
    /// computed whenever the dataset is labeled and model a has an encoder.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pearson: Option<bool>,
    pub svg: bool,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            model_a: None,
            model_b: "ground-truth".into(),
            samples: 1000,
            seed: 0,
            mode: None,
            pearson: None,
            svg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// `h`, `me:<set>`, `mtc` or `mtc:<partition>`.
    pub metric: String,
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub svg: bool,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            model: None,
            metric: "me:1".into(),
            sizes: vec![100, 1000],
            repeats: 10,
            seed: 0,
            svg: false,
        }
    }
}

impl RunManifest {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text)
            .map_err(|e| CliError::usage(format!("invalid manifest: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self)
            .map_err(|e| CliError::usage(format!("cannot serialize manifest: {e}")))
    }

    pub fn dataset(&self) -> Result<&DatasetConfig, CliError> {
        self.dataset
            .as_ref()
            .ok_or_else(|| CliError::usage("manifest has no [dataset] section"))
    }

    /// Full training config: `[train]` plus `[dataset]`.
    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let dataset = self.dataset()?.clone();
        let mut table = self.train.clone().unwrap_or_default();
        if table.contains_key("dataset") {
            return Err(CliError::usage(
                "[train] must not contain a dataset; use [dataset]",
            ));
        }
        let ds = toml::Value::try_from(&dataset).map_err(|e| CliError::usage(e.to_string()))?;
        table.insert("dataset".into(), ds);
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| {
                CliError::usage(format!("invalid [train] section: {}", e.message()))
            })
    }

    /// Stores `config` back as `[train]` (without its dataset).
    pub fn set_train_config(&mut self, config: &TrainConfig) -> Result<(), CliError> {
        let toml::Value::Table(mut table) =
            toml::Value::try_from(config).map_err(|e| CliError::usage(e.to_string()))?
        else {
            return Err(CliError::usage(
                "training config did not serialize to a table",
            ));
        };
        table.remove("dataset");
        self.dataset = Some(config.dataset.clone());
        self.train = Some(table);
        Ok(())
    }
}

/// `--out`, else the manifest's `out`, else `$MANIMET_OUT/<stem>`, else
/// `runs/<stem>`.
pub fn output_dir(flag: Option<&Path>, manifest: &RunManifest, stem: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &manifest.out {
        return p.clone();
    }
    match std::env::var_os(OUT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(stem),
        _ => PathBuf::from("runs").join(stem),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRAIN: &str = r#"
out = "runs/x"

[dataset]
kind = "two_moons"
samples = 300
noise = 0.05

[train]
epochs = 2
batch_size = 64
loss = { mode = "ml_mtc", lambda = 1.0 }
flow = { blocks = 2, hidden = [8] }
"#;

    #[test]
    fn train_section_resolves() {
        let m = RunManifest::parse(TRAIN).unwrap();
        let c = m.train_config().unwrap();
        assert_eq!(c.epochs, 2);
        assert_eq!(c.flow.blocks, 2);
        assert_eq!(c.dataset.dim(), 2);
        assert_eq!(c.optimizer.lr, 1e-3);
    }

    #[test]
    fn resolved_manifest_round_trips() {
        let mut m = RunManifest::parse(TRAIN).unwrap();
        let c = m.train_config().unwrap();
        m.set_train_config(&c).unwrap();
        m.eval = Some(EvalSection::default());
        let text = m.to_toml().unwrap();
        let back = RunManifest::parse(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.train_config().unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunManifest::parse("[eval]\nsamplez = 3\n").unwrap_err();
        assert!(err.to_string().contains("samplez"), "{err}");
        let m =
            RunManifest::parse("[dataset]\nkind = \"two_moons\"\n[train]\nepoch = 3\n").unwrap();
        let err = m.train_config().unwrap_err();
        assert!(err.to_string().contains("epoch"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn missing_dataset_is_usage() {
        let m = RunManifest::parse("[train]\nepochs = 1\n").unwrap();
        assert_eq!(m.train_config().unwrap_err().exit_code(), 1);
    }

    #[test]
    fn out_precedence() {
        let m = RunManifest {
            out: Some("a".into()),
            ..Default::default()
        };
        assert_eq!(
            output_dir(Some(Path::new("b")), &m, "s"),
            PathBuf::from("b")
        );
        assert_eq!(output_dir(None, &m, "s"), PathBuf::from("a"));
    }
}
