//! Poisoning attacks that construct the neighbor pair (D, D′) for an audit.
//!
//! Each attack picks a poison point (x⋆, y⋆) and a ranked list of victim
//! rows. Under ReplaceOne the top-k victims are overwritten with copies of
//! the poison point; under AddRemove k copies are appended to D instead, so
//! D is a prefix of D′.

mod baselines;
pub mod influence;
mod targeted;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NeighborPair};
use crate::error::{AuditError, Result};
use crate::types::{KPolicy, NeighborDef, Witness};

pub use baselines::{clipbkd_attack, smallest_variance_direction, swap_x_attack};
pub use influence::{influence_attack, influence_vector, InfluenceContext};
pub use targeted::{corner_distance, nb_corner_flip_attack, nb_mean_shift_attack, rf_isolation_flip_attack};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    InfluencePga,
    NbCornerFlip,
    /// Moves the corner point to the opposite corner without touching its
    /// label, so only the class means and variances change.
    NbMeanShift,
    RfIsolationFlip,
    ClipBkd,
    SwapX,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackKind::InfluencePga => "influence_pga",
            AttackKind::NbCornerFlip => "nb_corner_flip",
            AttackKind::NbMeanShift => "nb_mean_shift",
            AttackKind::RfIsolationFlip => "rf_isolation_flip",
            AttackKind::ClipBkd => "clip_bkd",
            AttackKind::SwapX => "swap_x",
        }
    }
}

fn default_k() -> u32 {
    1
}
fn default_steps() -> usize {
    200
}
fn default_step_fraction() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Number of poisoned copies.
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default = "default_steps")]
    pub pga_steps: usize,
    /// PGA step as a fraction of the L2 ball radius.
    #[serde(default = "default_step_fraction")]
    pub pga_step_size: f64,
}

impl AttackSpec {
    pub fn new(kind: AttackKind) -> Self {
        AttackSpec {
            kind,
            k: 1,
            pga_steps: default_steps(),
            pga_step_size: default_step_fraction(),
        }
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(AuditError::invalid("attack k must be at least 1"));
        }
        if self.kind == AttackKind::InfluencePga && (self.pga_steps == 0 || !(self.pga_step_size > 0.0)) {
            return Err(AuditError::invalid("PGA needs positive steps and step size"));
        }
        Ok(())
    }
}

/// Inputs some attacks need beyond the data: the regularization of the
/// non-private logistic surrogate and a seed for randomized baselines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackContext {
    pub surrogate_c: f64,
    pub seed: u64,
}

impl Default for AttackContext {
    fn default() -> Self {
        AttackContext {
            surrogate_c: 1.0,
            seed: 0,
        }
    }
}

pub fn run_attack(data: &Dataset, spec: &AttackSpec, def: NeighborDef, ctx: &AttackContext) -> Result<NeighborPair> {
    spec.validate()?;
    match spec.kind {
        AttackKind::InfluencePga => influence_attack(data, spec, def, ctx.surrogate_c),
        AttackKind::NbCornerFlip => nb_corner_flip_attack(data, spec, def),
        AttackKind::NbMeanShift => nb_mean_shift_attack(data, spec, def),
        AttackKind::RfIsolationFlip => rf_isolation_flip_attack(data, spec, def),
        AttackKind::ClipBkd => clipbkd_attack(data, ctx.surrogate_c, spec, def),
        AttackKind::SwapX => swap_x_attack(data, ctx.seed, spec, def),
    }
}

/// k from the group-privacy schedule.
pub fn select_k(epsilon_th: f64, policy: &KPolicy) -> Result<u32> {
    let k = match policy {
        KPolicy::Default => {
            if epsilon_th <= 2.0 {
                Some(8)
            } else if epsilon_th <= 8.0 {
                Some(2)
            } else if epsilon_th == 16.0 || epsilon_th == 50.0 {
                Some(1)
            } else {
                None
            }
        }
        KPolicy::Fixed { k } => Some(*k),
        KPolicy::Ranges { ranges } => ranges
            .iter()
            .find(|r| epsilon_th > r.above && epsilon_th <= r.up_to)
            .map(|r| r.k),
    };
    match k {
        Some(0) => Err(AuditError::invalid("k policy produced k = 0")),
        Some(k) => Ok(k),
        None => Err(AuditError::UncoveredEpsilon(epsilon_th)),
    }
}

/// Attack output before it is turned into a pair.
pub(crate) struct Poison {
    pub kind: AttackKind,
    /// Candidate rows in attack order; the first k usable ones are replaced.
    pub ranked: Vec<usize>,
    pub x_star: Vec<f64>,
    pub y_star: u8,
}

pub(crate) fn assemble(data: &Dataset, poison: Poison, k: u32, def: NeighborDef) -> Result<NeighborPair> {
    let Poison {
        kind,
        ranked,
        x_star,
        y_star,
    } = poison;
    let (victims, poisoned) = match def {
        NeighborDef::ReplaceOne => {
            let victims: Vec<usize> = ranked
                .into_iter()
                .filter(|&i| data.row(i) != x_star.as_slice() || data.label(i) != y_star)
                .take(k as usize)
                .collect();
            if victims.len() < k as usize {
                return Err(AuditError::invalid(format!(
                    "{} found only {} eligible rows for k = {k}",
                    kind.name(),
                    victims.len()
                )));
            }
            let p = data.replace_rows(&victims, &x_star, y_star)?;
            (victims, p)
        }
        NeighborDef::AddRemove => {
            let victims = ranked.into_iter().take(1).collect();
            let p = data.append_rows(&x_star, y_star, k as usize)?;
            (victims, p)
        }
    };
    let witness = Witness {
        attack: kind,
        neighbor_def: def,
        k,
        victims,
        probe: x_star.clone(),
        x_star,
        y_star,
        original_n: data.n(),
        poisoned_n: poisoned.n(),
    };
    NeighborPair::new(data.clone(), poisoned, k, def, witness)
}
