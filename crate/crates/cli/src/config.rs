use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use sql2text_core::selection::Strategy;

/// Flat key-value run configuration. A `--config` TOML file provides
/// defaults; explicit command-line flags override it. The resolved copy is
/// frozen next to the outputs (without the output path itself, so reruns
/// into different directories stay byte-identical).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_demos: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmeans_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concurrency: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Values from `flags` win over values from `self`.
    pub fn overridden_by(mut self, flags: RunConfig) -> Self {
        macro_rules! take {
            ($field:ident) => {
                if flags.$field.is_some() {
                    self.$field = flags.$field;
                }
            };
        }
        take!(pool);
        take!(test);
        take!(dataset);
        take!(index);
        take!(format);
        take!(strategy);
        take!(n_demos);
        take!(seed);
        take!(encoder_seed);
        take!(kmeans_seed);
        take!(k);
        take!(backend);
        take!(model);
        take!(template);
        take!(max_tokens);
        take!(temperature);
        take!(concurrency);
        take!(alpha);
        take!(k_min);
        take!(k_max);
        self
    }

    pub fn strategy(&self) -> anyhow::Result<Strategy> {
        let raw = self.strategy.as_deref().unwrap_or("ast_icl_top");
        raw.parse().map_err(|e: String| anyhow::anyhow!(e))
    }

    pub fn validate_for_generate(&self) -> anyhow::Result<()> {
        let strategy = self.strategy()?;
        let n = self.n_demos.unwrap_or(2);
        if strategy == Strategy::ZeroShot && n != 0 {
            bail!("zero_shot requires n_demos = 0, got {n}");
        }
        if strategy != Strategy::ZeroShot && n == 0 {
            bail!("{strategy} requires n_demos >= 1");
        }
        if let Some(t) = self.temperature {
            if t.is_nan() || t < 0.0 {
                bail!("temperature must be >= 0, got {t}");
            }
        }
        Ok(())
    }

    /// Write the frozen resolved copy next to the outputs. Input files are
    /// recorded as basename plus content hash rather than absolute paths, so
    /// two runs over identical inputs freeze byte-identically wherever the
    /// files live.
    pub fn freeze(&self, out_dir: &Path) -> anyhow::Result<()> {
        let mut frozen = toml::Table::new();
        let mut record_input = |name: &str, path: &Option<PathBuf>| -> anyhow::Result<()> {
            if let Some(path) = path {
                let base = path
                    .file_name()
                    .map(|f| f.to_string_lossy().to_string())
                    .unwrap_or_default();
                frozen.insert(name.to_string(), toml::Value::String(base));
                if let Ok(bytes) = std::fs::read(path) {
                    use sha2::{Digest, Sha256};
                    let digest = Sha256::digest(&bytes);
                    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                    frozen.insert(format!("{name}_sha256"), toml::Value::String(hex));
                }
            }
            Ok(())
        };
        record_input("pool", &self.pool)?;
        record_input("test", &self.test)?;
        record_input("dataset", &self.dataset)?;
        record_input("index", &self.index)?;

        let scalars = toml::Table::try_from(RunConfig {
            pool: None,
            test: None,
            dataset: None,
            index: None,
            ..self.clone()
        })
        .context("serializing resolved config")?;
        frozen.extend(scalars);

        std::fs::write(
            out_dir.join("config.resolved.toml"),
            toml::to_string_pretty(&frozen).context("rendering resolved config")?,
        )
        .context("writing resolved config")?;
        Ok(())
    }
}
