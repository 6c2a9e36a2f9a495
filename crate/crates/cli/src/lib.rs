//! Batch harness around `dpaudit-core`: config parsing, the ε grid sweep,
//! report files, the coverage table and witness inspection.

pub mod config;
pub mod coverage;
pub mod grid;

use anyhow::Context;
use dpaudit_core::attacks::{run_attack, select_k, AttackContext, AttackSpec};
use dpaudit_core::types::Witness;
use serde::Serialize;

use config::RunConfig;

/// What `inspect` prints for one attack.
#[derive(Clone, Debug, Serialize)]
pub struct Inspection {
    pub attack: String,
    pub eps_th: f64,
    pub differing_rows: Vec<usize>,
    pub witness: Witness,
}

/// Builds the neighbor pair for one attack at one ε_th without auditing it.
pub fn inspect(cfg: &RunConfig, attack_index: usize, eps: f64, seed: u64) -> anyhow::Result<Inspection> {
    let cfg = cfg.clone().resolved();
    let attack = cfg
        .attacks
        .get(attack_index)
        .with_context(|| format!("attack index {attack_index} out of range ({} attacks)", cfg.attacks.len()))?;
    let k = select_k(eps, &cfg.audit.k_policy)?;
    let data = cfg.load_dataset()?;
    let ctx = AttackContext {
        surrogate_c: cfg.audit.surrogate_c,
        seed,
    };
    let spec = AttackSpec { k, ..attack.clone() };
    let def = cfg.audit_config(eps, seed)?.neighbor_def;
    let pair = run_attack(&data, &spec, def, &ctx)?;
    Ok(Inspection {
        attack: attack.kind.name().to_string(),
        eps_th: eps,
        differing_rows: pair.differing_rows(),
        witness: pair.witness,
    })
}
