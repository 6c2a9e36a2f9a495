//! The audited learners, the noise primitives they are built from, and the
//! summary functions τ that embed a trained model into a vector.

pub mod lr;
pub mod mean;
pub mod nb;
pub mod rf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{AuditError, Result};
use crate::types::{NeighborDef, PrivacySpec};

pub use lr::{train_dp_lr_objective, train_dp_lr_output, LrModel};
pub use nb::{train_dp_nb, NbModel, NbParams};
pub use rf::{train_dp_rf, RfModel, RfParams};

/// One Laplace(0, scale) draw.
pub fn laplace_noise<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    debug_assert!(scale > 0.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -scale * u.signum() * tail.ln();
        }
    }
}

/// Samples index i with probability ∝ exp(ε·uᵢ / (2·sensitivity)).
pub fn exponential_choice<R: Rng + ?Sized>(utilities: &[f64], epsilon: f64, sensitivity: f64, rng: &mut R) -> Result<usize> {
    if utilities.is_empty() {
        return Err(AuditError::invalid("exponential mechanism needs at least one candidate"));
    }
    if utilities.iter().any(|u| !u.is_finite()) {
        return Err(AuditError::invalid("utilities must be finite"));
    }
    let weights = exponential_weights(utilities, epsilon, sensitivity);
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return Ok(i);
        }
        r -= w;
    }
    Ok(weights.iter().rposition(|&w| w > 0.0).unwrap_or(0))
}

/// Unnormalized selection weights, scaled so the best candidate has weight 1.
pub fn exponential_weights(utilities: &[f64], epsilon: f64, sensitivity: f64) -> Vec<f64> {
    let best = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    utilities
        .iter()
        .map(|&u| {
            if u == best {
                1.0
            } else {
                (epsilon * (u - best) / (2.0 * sensitivity)).exp()
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    LaplaceMean,
    GaussianNb,
    LogRegOutput,
    LogRegObjective,
    RandomForest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    HyperRectangle,
    L2Ball,
}

impl MechanismKind {
    pub fn constraint(self) -> ConstraintKind {
        match self {
            MechanismKind::LogRegOutput | MechanismKind::LogRegObjective => ConstraintKind::L2Ball,
            _ => ConstraintKind::HyperRectangle,
        }
    }

    pub fn native_neighbor_def(self) -> NeighborDef {
        match self {
            MechanismKind::RandomForest => NeighborDef::AddRemove,
            _ => NeighborDef::ReplaceOne,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn output_c() -> f64 {
    0.01
}
fn fifteen() -> usize {
    15
}
fn ten() -> usize {
    10
}
fn add_remove() -> NeighborDef {
    NeighborDef::AddRemove
}

/// Mechanism plus hyperparameters, as read from a run config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismConfig {
    LaplaceMean {
        #[serde(default = "one")]
        noise_multiplier: f64,
    },
    GaussianNb {
        #[serde(default)]
        leaky_counts: bool,
        #[serde(default = "one")]
        noise_multiplier: f64,
    },
    LogRegOutput {
        #[serde(default = "output_c")]
        c: f64,
        #[serde(default = "one")]
        noise_multiplier: f64,
    },
    LogRegObjective {
        /// None picks 10 for 1 ≤ ε ≤ 8 and 1 otherwise.
        #[serde(default)]
        c: Option<f64>,
        #[serde(default = "one")]
        noise_multiplier: f64,
    },
    RandomForest {
        #[serde(default = "fifteen")]
        trees: usize,
        #[serde(default = "ten")]
        depth: usize,
        /// Neighbor definition the sensitivity is calibrated for.
        #[serde(default = "add_remove")]
        convention: NeighborDef,
        #[serde(default = "one")]
        noise_multiplier: f64,
    },
}

impl MechanismConfig {
    pub fn gaussian_nb() -> Self {
        MechanismConfig::GaussianNb {
            leaky_counts: false,
            noise_multiplier: 1.0,
        }
    }

    pub fn kind(&self) -> MechanismKind {
        match self {
            MechanismConfig::LaplaceMean { .. } => MechanismKind::LaplaceMean,
            MechanismConfig::GaussianNb { .. } => MechanismKind::GaussianNb,
            MechanismConfig::LogRegOutput { .. } => MechanismKind::LogRegOutput,
            MechanismConfig::LogRegObjective { .. } => MechanismKind::LogRegObjective,
            MechanismConfig::RandomForest { .. } => MechanismKind::RandomForest,
        }
    }

    pub fn noise_multiplier(&self) -> f64 {
        match *self {
            MechanismConfig::LaplaceMean { noise_multiplier }
            | MechanismConfig::GaussianNb { noise_multiplier, .. }
            | MechanismConfig::LogRegOutput { noise_multiplier, .. }
            | MechanismConfig::LogRegObjective { noise_multiplier, .. }
            | MechanismConfig::RandomForest { noise_multiplier, .. } => noise_multiplier,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.noise_multiplier();
        if !(m > 0.0 && m.is_finite()) {
            return Err(AuditError::invalid(format!("noise_multiplier must be positive, got {m}")));
        }
        match *self {
            MechanismConfig::LogRegOutput { c, .. } | MechanismConfig::LogRegObjective { c: Some(c), .. } if !(c > 0.0 && c.is_finite()) => {
                Err(AuditError::invalid(format!("regularization c must be positive, got {c}")))
            }
            MechanismConfig::RandomForest { trees, depth, .. } if trees == 0 || depth == 0 || depth > 30 => {
                Err(AuditError::invalid("random forest needs trees >= 1 and 1 <= depth <= 30"))
            }
            _ => Ok(()),
        }
    }

    pub fn summary_spec(&self, d: usize) -> SummarySpec {
        match *self {
            MechanismConfig::LaplaceMean { .. } => SummarySpec::Mean { d },
            MechanismConfig::GaussianNb { leaky_counts, .. } => SummarySpec::NaiveBayes {
                d,
                include_raw_counts: leaky_counts,
            },
            MechanismConfig::LogRegOutput { .. } | MechanismConfig::LogRegObjective { .. } => {
                SummarySpec::Coefficients { dim: d + 1 }
            }
            MechanismConfig::RandomForest { trees, .. } => SummarySpec::TreeVotes { trees },
        }
    }

    /// Precomputes everything about `data` that does not involve randomness.
    pub fn prepare(&self, data: &Dataset, spec: &PrivacySpec) -> Result<PreparedMechanism> {
        self.validate()?;
        let inner = match *self {
            MechanismConfig::LaplaceMean { noise_multiplier } => Prepared::Mean(mean::Prepared::new(data, spec, noise_multiplier)),
            MechanismConfig::GaussianNb {
                leaky_counts,
                noise_multiplier,
            } => Prepared::Nb(nb::Prepared::new(
                data,
                spec,
                &NbParams {
                    leaky_counts,
                    noise_multiplier,
                },
            )?),
            MechanismConfig::LogRegOutput { c, noise_multiplier } => {
                Prepared::LrOutput(lr::OutputPrepared::new(data, spec, c, noise_multiplier)?)
            }
            MechanismConfig::LogRegObjective { c, noise_multiplier } => Prepared::LrObjective(lr::ObjectivePrepared::new(
                data,
                spec,
                c.unwrap_or_else(|| lr::default_objective_c(spec.epsilon())),
                noise_multiplier,
            )?),
            MechanismConfig::RandomForest {
                trees,
                depth,
                convention,
                noise_multiplier,
            } => Prepared::Rf(rf::Prepared::new(
                data,
                spec,
                &RfParams {
                    trees,
                    depth,
                    convention,
                    noise_multiplier,
                },
            )?),
        };
        Ok(PreparedMechanism {
            inner,
            summary: self.summary_spec(data.d()),
        })
    }

    pub fn train<R: Rng + ?Sized>(&self, data: &Dataset, spec: &PrivacySpec, rng: &mut R) -> Result<Model> {
        self.prepare(data, spec)?.train(rng)
    }
}

enum Prepared {
    Mean(mean::Prepared),
    Nb(nb::Prepared),
    LrOutput(lr::OutputPrepared),
    LrObjective(lr::ObjectivePrepared),
    Rf(rf::Prepared),
}

/// A mechanism bound to one dataset; each call to `train` is one fresh
/// randomized run.
pub struct PreparedMechanism {
    inner: Prepared,
    summary: SummarySpec,
}

impl PreparedMechanism {
    pub fn train<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Model> {
        Ok(match &self.inner {
            Prepared::Mean(p) => Model::Mean(p.release(rng)),
            Prepared::Nb(p) => Model::Nb(p.train(rng)),
            Prepared::LrOutput(p) => Model::Lr(p.train(rng)),
            Prepared::LrObjective(p) => Model::Lr(p.train(rng)?),
            Prepared::Rf(p) => Model::Rf(p.train(rng)),
        })
    }

    pub fn summary_spec(&self) -> &SummarySpec {
        &self.summary
    }

    pub fn release<R: Rng + ?Sized>(&self, probe: Option<&[f64]>, rng: &mut R) -> Result<SummaryVector> {
        summarize(&self.train(rng)?, &self.summary, probe)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Mean(Vec<f64>),
    Nb(NbModel),
    Lr(LrModel),
    Rf(RfModel),
}

/// Which embedding τ to apply to a trained model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SummarySpec {
    Mean { d: usize },
    NaiveBayes { d: usize, include_raw_counts: bool },
    Coefficients { dim: usize },
    TreeVotes { trees: usize },
}

impl SummarySpec {
    pub fn dim(&self) -> usize {
        match *self {
            SummarySpec::Mean { d } => d,
            SummarySpec::NaiveBayes { d, include_raw_counts } => 4 * d + 2 + if include_raw_counts { 2 } else { 0 },
            SummarySpec::Coefficients { dim } => dim,
            SummarySpec::TreeVotes { trees } => trees,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryVector(pub Vec<f64>);

impl SummaryVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn summarize(model: &Model, spec: &SummarySpec, probe: Option<&[f64]>) -> Result<SummaryVector> {
    let values = match (model, spec) {
        (Model::Mean(m), SummarySpec::Mean { .. }) => m.clone(),
        (Model::Nb(m), SummarySpec::NaiveBayes { include_raw_counts, .. }) => {
            let mut v = Vec::with_capacity(spec.dim());
            for y in 0..2 {
                v.extend_from_slice(&m.mu[y]);
            }
            for y in 0..2 {
                v.extend_from_slice(&m.sigma2[y]);
            }
            v.extend_from_slice(&m.prior);
            if *include_raw_counts {
                let counts = m
                    .raw_counts
                    .ok_or_else(|| AuditError::invalid("summary asks for raw counts but the model was not trained in leaky mode"))?;
                v.extend_from_slice(&counts);
            }
            v
        }
        (Model::Lr(m), SummarySpec::Coefficients { .. }) => m.theta.clone(),
        (Model::Rf(m), SummarySpec::TreeVotes { .. }) => {
            let x = probe.ok_or_else(|| AuditError::invalid("tree-vote summary needs a probe point"))?;
            m.votes(x)?
        }
        _ => return Err(AuditError::invalid("summary spec does not match the model kind")),
    };
    if values.len() != spec.dim() {
        return Err(AuditError::DimensionMismatch {
            expected: spec.dim(),
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AuditError::invalid("summary has non-finite entries"));
    }
    Ok(SummaryVector(values))
}
