//! Domain types shared by every stage of an audit.

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// Privacy budget (ε, δ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrivacySpec")]
pub struct PrivacySpec {
    epsilon: f64,
    delta: f64,
}

#[derive(Deserialize)]
struct RawPrivacySpec {
    epsilon: f64,
    #[serde(default)]
    delta: f64,
}

impl TryFrom<RawPrivacySpec> for PrivacySpec {
    type Error = AuditError;
    fn try_from(r: RawPrivacySpec) -> Result<Self> {
        PrivacySpec::new(r.epsilon, r.delta)
    }
}

impl PrivacySpec {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(AuditError::invalid(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(AuditError::invalid(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(PrivacySpec { epsilon, delta })
    }

    /// Pure ε-DP.
    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborDef {
    /// Same size, k rows modified.
    ReplaceOne,
    /// Rows inserted or deleted.
    AddRemove,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Search,
    Verify,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Search => "search",
            Phase::Verify => "verify",
        }
    }
}

/// Which dataset of a neighbor pair a sample was trained on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Original,
    Poisoned,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Original => "D",
            Arm::Poisoned => "D'",
        }
    }
}

/// Rows of the group-privacy schedule: `above < ε ≤ up_to` maps to `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KRange {
    pub above: f64,
    pub up_to: f64,
    pub k: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KPolicy {
    /// k=8 for ε ≤ 2, k=2 for 2 < ε ≤ 8, k=1 for ε ∈ {16, 50}.
    #[default]
    Default,
    Fixed {
        k: u32,
    },
    Ranges {
        ranges: Vec<KRange>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    KatzLog,
    ClopperPearsonRatio,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    #[serde(with = "crate::float_repr")]
    pub lower: f64,
    #[serde(with = "crate::float_repr")]
    pub upper: f64,
    pub level: f64,
    pub method: IntervalMethod,
}

impl ConfidenceInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Settings of the posterior classifier p(D|z).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PosteriorConfig {
    pub iterations: usize,
    pub ridge: f64,
}

impl Default for PosteriorConfig {
    fn default() -> Self {
        PosteriorConfig {
            iterations: 300,
            ridge: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub spec: PrivacySpec,
    pub samples_n: usize,
    pub alpha: f64,
    pub min_prob_r: f64,
    pub k_policy: KPolicy,
    pub master_seed: u64,
    pub neighbor_def: NeighborDef,
    pub posterior: PosteriorConfig,
    /// Reserved for a δ > 0 estimation path; enabling it is an error.
    pub delta_split: bool,
}

impl AuditConfig {
    pub fn new(spec: PrivacySpec, samples_n: usize, master_seed: u64) -> Self {
        AuditConfig {
            spec,
            samples_n,
            alpha: 0.05,
            min_prob_r: default_min_prob(samples_n),
            k_policy: KPolicy::Default,
            master_seed,
            neighbor_def: NeighborDef::ReplaceOne,
            posterior: PosteriorConfig::default(),
            delta_split: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_n < 2 {
            return Err(AuditError::invalid("samples_n must be at least 2"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(AuditError::invalid(format!("alpha must lie in (0, 0.5], got {}", self.alpha)));
        }
        if !(self.min_prob_r < 1.0 && self.min_prob_r * self.samples_n as f64 >= 1.0 - 1e-12) {
            return Err(AuditError::invalid(format!(
                "min_prob_r must lie in [1/N, 1), got {} with N={}",
                self.min_prob_r, self.samples_n
            )));
        }
        if self.delta_split {
            return Err(AuditError::DeltaUnsupported);
        }
        crate::attacks::select_k(self.spec.epsilon(), &self.k_policy)?;
        Ok(())
    }
}

/// max(0.01, 10/N).
pub fn default_min_prob(samples_n: usize) -> f64 {
    (10.0 / samples_n as f64).max(0.01)
}

/// Description of the poisoned pair that produced a result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub attack: crate::attacks::AttackKind,
    pub neighbor_def: NeighborDef,
    pub k: u32,
    pub victims: Vec<usize>,
    pub x_star: Vec<f64>,
    pub y_star: u8,
    /// Point at which tree votes are read.
    pub probe: Vec<f64>,
    pub original_n: usize,
    pub poisoned_n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    /// Lower bound on ε, already divided by k.
    #[serde(with = "crate::float_repr")]
    pub eps_lb: f64,
    pub threshold_t: f64,
    pub used_complement: bool,
    pub n1: usize,
    pub n0: usize,
    pub samples_n: usize,
    pub k: u32,
    pub interval: ConfidenceInterval,
    #[serde(with = "crate::float_repr")]
    pub eps_lb_search: f64,
    pub c_hat: f64,
    pub posterior_degenerate: bool,
    pub witness: Witness,
}

impl AuditResult {
    pub fn violation_detected(&self) -> bool {
        self.eps_lb.is_finite()
    }
}
