//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dpaudit_core::attacks::AttackSpec;
use dpaudit_core::data_io::{load_csv, preprocess, synth_blobs, PreprocessSpec};
use dpaudit_core::dataset::Dataset;
use dpaudit_core::mechanisms::{MechanismConfig, MechanismKind};
use dpaudit_core::types::{default_min_prob, AuditConfig, KPolicy, NeighborDef, PosteriorConfig, PrivacySpec};
use serde::{Deserialize, Serialize};

/// ε_th values swept when the config gives none.
pub const DEFAULT_EPS_GRID: [f64; 9] = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 50.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv { path: PathBuf, label_column: String },
    /// Two Gaussian blobs; used as is, without preprocessing.
    Synthetic { n: usize, d: usize, separation: f64, seed: u64 },
}

fn default_eps_grid() -> Vec<f64> {
    DEFAULT_EPS_GRID.to_vec()
}
fn three() -> usize {
    3
}
fn default_out() -> PathBuf {
    PathBuf::from("dpaudit-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSettings {
    pub samples_n: usize,
    pub alpha: f64,
    /// Defaults to max(0.01, 10/N).
    pub min_prob_r: Option<f64>,
    pub k_policy: KPolicy,
    pub master_seed: u64,
    /// Defaults to the mechanism's own neighbor definition.
    pub neighbor_def: Option<NeighborDef>,
    pub posterior: PosteriorConfig,
    pub delta: f64,
    pub delta_split: bool,
    /// C of the non-private logistic surrogate used by LR attacks.
    pub surrogate_c: f64,
}

impl Default for AuditSettings {
    fn default() -> Self {
        AuditSettings {
            samples_n: 10_000,
            alpha: 0.05,
            min_prob_r: None,
            k_policy: KPolicy::Default,
            master_seed: 0,
            neighbor_def: None,
            posterior: PosteriorConfig::default(),
            delta: 0.0,
            delta_split: false,
            surrogate_c: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    /// Defaults to 1000 rows, or 500 rows without categoricals for forests.
    #[serde(default)]
    pub preprocess: Option<PreprocessSpec>,
    pub mechanism: MechanismConfig,
    pub attacks: Vec<AttackSpec>,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    #[serde(default = "three")]
    pub replicates: usize,
    #[serde(default)]
    pub audit: AuditSettings,
    /// Where reports go; not echoed into reports.
    #[serde(default = "default_out", skip_serializing)]
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(s)?)
    }

    /// Reads a config; relative dataset paths are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let DatasetSource::Csv { path: p, .. } = &mut cfg.dataset {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Fills every optional field with the value that will be used.
    pub fn resolved(mut self) -> Self {
        let kind = self.mechanism.kind();
        if self.preprocess.is_none() {
            self.preprocess = Some(if kind == MechanismKind::RandomForest {
                PreprocessSpec::for_random_forest()
            } else {
                PreprocessSpec::default()
            });
        }
        let a = &mut self.audit;
        a.min_prob_r.get_or_insert(default_min_prob(a.samples_n));
        a.neighbor_def.get_or_insert(kind.native_neighbor_def());
        self
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.eps_grid.is_empty() {
            bail!("eps_grid must not be empty");
        }
        if self.replicates == 0 {
            bail!("replicates must be at least 1");
        }
        if self.attacks.is_empty() {
            bail!("at least one attack is required");
        }
        self.mechanism.validate()?;
        for a in &self.attacks {
            a.validate()?;
        }
        for &eps in &self.eps_grid {
            self.audit_config(eps, self.audit.master_seed)?.validate()?;
        }
        Ok(())
    }

    /// Audit settings for one grid point.
    pub fn audit_config(&self, eps: f64, seed: u64) -> anyhow::Result<AuditConfig> {
        let a = &self.audit;
        let mut cfg = AuditConfig::new(PrivacySpec::new(eps, a.delta)?, a.samples_n, seed);
        cfg.alpha = a.alpha;
        cfg.min_prob_r = a.min_prob_r.unwrap_or_else(|| default_min_prob(a.samples_n));
        cfg.k_policy = a.k_policy.clone();
        cfg.neighbor_def = a.neighbor_def.unwrap_or_else(|| self.mechanism.kind().native_neighbor_def());
        cfg.posterior = a.posterior;
        cfg.delta_split = a.delta_split;
        Ok(cfg)
    }

    pub fn load_dataset(&self) -> anyhow::Result<Dataset> {
        Ok(match &self.dataset {
            DatasetSource::Csv { path, label_column } => {
                let table = load_csv(path, label_column)?;
                let spec = self.preprocess.clone().unwrap_or_default();
                preprocess(&table, &spec)?
            }
            DatasetSource::Synthetic { n, d, separation, seed } => synth_blobs(*n, *d, *separation, *seed)?,
        })
    }
}
