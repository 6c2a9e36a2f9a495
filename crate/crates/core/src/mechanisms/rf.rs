//! Random forest with data-independent random splits and exponential-mechanism
//! leaf labels.
//!
//! Row i trains tree i mod m, so trees see disjoint data and each spends the
//! full budget. Split structure is a function of the tree seed and the
//! feature bounds only: node splits are derived on demand by hashing
//! (seed, node), which keeps a depth-10 forest cheap to retrain. A leaf whose
//! majority exceeds the minority by j takes the majority label with
//! probability ∝ exp(ε·u/(2e^{−jε})), u = 1 for the majority and 0 otherwise.

use rand::Rng;

use super::{exponential_choice, exponential_weights};
use crate::dataset::Dataset;
use crate::error::{AuditError, Result};
use crate::rng::{mix, unit_from_hash};
use crate::types::{NeighborDef, PrivacySpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RfParams {
    pub trees: usize,
    pub depth: usize,
    /// Neighbor definition the leaf rule is calibrated for; ReplaceOne
    /// halves the budget since a replacement is a removal plus an insertion.
    pub convention: NeighborDef,
    pub noise_multiplier: f64,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            trees: 15,
            depth: 10,
            convention: NeighborDef::AddRemove,
            noise_multiplier: 1.0,
        }
    }
}

impl RfParams {
    pub fn leaf_epsilon(&self, spec: &PrivacySpec) -> f64 {
        let eps = spec.epsilon() / self.noise_multiplier;
        match self.convention {
            NeighborDef::AddRemove => eps,
            NeighborDef::ReplaceOne => eps / 2.0,
        }
    }
}

/// P(majority label) for a leaf with majority excess j ≥ 1.
pub fn leaf_majority_probability(epsilon: f64, j: u32) -> f64 {
    let w = exponential_weights(&[1.0, 0.0], epsilon, (-(j as f64) * epsilon).exp());
    w[0] / (w[0] + w[1])
}

/// Draws a leaf label from its class counts; ties and empty leaves are uniform.
pub fn leaf_label<R: Rng + ?Sized>(c0: u32, c1: u32, epsilon: f64, rng: &mut R) -> u8 {
    if c0 == c1 {
        return rng.random_bool(0.5) as u8;
    }
    let (maj, j) = if c1 > c0 { (1u8, c1 - c0) } else { (0u8, c0 - c1) };
    let u = if maj == 1 { [0.0, 1.0] } else { [1.0, 0.0] };
    exponential_choice(&u, epsilon, (-(j as f64) * epsilon).exp(), rng).expect("two finite utilities") as u8
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub seed: u64,
    /// (leaf id, label) for leaves that received training rows, sorted.
    occupied: Vec<(u64, u8)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RfModel {
    pub trees: Vec<Tree>,
    pub depth: usize,
    pub m: usize,
    bounds: Vec<(f64, f64)>,
}

const SPLIT_FEATURE: u64 = 0;
const SPLIT_POSITION: u64 = 1;
const EMPTY_LEAF: u64 = 2;

impl RfModel {
    fn split(&self, tree: usize, node: u64, cell: &[(f64, f64)]) -> (usize, f64) {
        let seed = self.trees[tree].seed;
        let f = (mix(&[seed, node, SPLIT_FEATURE]) % cell.len() as u64) as usize;
        let u = unit_from_hash(mix(&[seed, node, SPLIT_POSITION]));
        let (lo, hi) = cell[f];
        (f, lo + u * (hi - lo))
    }

    /// Splits on the root-to-leaf path of x, and the leaf id.
    pub fn path(&self, tree: usize, x: &[f64]) -> (Vec<(usize, f64)>, u64) {
        let mut cell = self.bounds.clone();
        let mut node = 1u64;
        let mut splits = Vec::with_capacity(self.depth);
        for _ in 0..self.depth {
            let (f, thr) = self.split(tree, node, &cell);
            splits.push((f, thr));
            if x[f] <= thr {
                cell[f].1 = thr;
                node *= 2;
            } else {
                cell[f].0 = thr;
                node = 2 * node + 1;
            }
        }
        (splits, node - (1u64 << self.depth))
    }

    pub fn leaf_of(&self, tree: usize, x: &[f64]) -> u64 {
        let mut cell = self.bounds.clone();
        let mut node = 1u64;
        for _ in 0..self.depth {
            let (f, thr) = self.split(tree, node, &cell);
            if x[f] <= thr {
                cell[f].1 = thr;
                node *= 2;
            } else {
                cell[f].0 = thr;
                node = 2 * node + 1;
            }
        }
        node - (1u64 << self.depth)
    }

    pub fn leaf_label(&self, tree: usize, leaf: u64) -> u8 {
        let t = &self.trees[tree];
        match t.occupied.binary_search_by_key(&leaf, |&(l, _)| l) {
            Ok(i) => t.occupied[i].1,
            Err(_) => (mix(&[t.seed, leaf, EMPTY_LEAF]) & 1) as u8,
        }
    }

    pub fn predict_tree(&self, tree: usize, x: &[f64]) -> u8 {
        self.leaf_label(tree, self.leaf_of(tree, x))
    }

    /// Each tree's predicted label at x.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.bounds.len() {
            return Err(AuditError::invalid("probe point has the wrong dimension"));
        }
        Ok((0..self.m).map(|t| self.predict_tree(t, x) as f64).collect())
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let ones = (0..self.m).filter(|&t| self.predict_tree(t, x) == 1).count();
        (2 * ones > self.m) as u8
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }
}

pub(crate) struct Prepared {
    params: RfParams,
    eps_leaf: f64,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
    bounds: Vec<(f64, f64)>,
}

impl Prepared {
    pub(crate) fn new(data: &Dataset, spec: &PrivacySpec, params: &RfParams) -> Result<Self> {
        if params.trees == 0 || params.depth == 0 || params.depth > 30 {
            return Err(AuditError::invalid("random forest needs trees >= 1 and 1 <= depth <= 30"));
        }
        Ok(Prepared {
            params: *params,
            eps_leaf: params.leaf_epsilon(spec),
            rows: data.rows().map(|r| r.to_vec()).collect(),
            labels: data.labels().to_vec(),
            bounds: data.bounds().to_vec(),
        })
    }

    pub(crate) fn train<R: Rng + ?Sized>(&self, rng: &mut R) -> RfModel {
        let m = self.params.trees;
        let trees = (0..m)
            .map(|_| Tree {
                seed: rng.next_u64(),
                occupied: Vec::new(),
            })
            .collect();
        let mut model = RfModel {
            trees,
            depth: self.params.depth,
            m,
            bounds: self.bounds.clone(),
        };
        for t in 0..m {
            let mut counts: Vec<(u64, u32, u32)> = Vec::new();
            for i in (t..self.rows.len()).step_by(m) {
                let leaf = model.leaf_of(t, &self.rows[i]);
                let y = self.labels[i];
                match counts.iter_mut().find(|c| c.0 == leaf) {
                    Some(c) => {
                        if y == 1 {
                            c.2 += 1
                        } else {
                            c.1 += 1
                        }
                    }
                    None => counts.push((leaf, (y == 0) as u32, (y == 1) as u32)),
                }
            }
            counts.sort_unstable_by_key(|c| c.0);
            model.trees[t].occupied = counts
                .into_iter()
                .map(|(leaf, c0, c1)| (leaf, leaf_label(c0, c1, self.eps_leaf, rng)))
                .collect();
        }
        model
    }
}

pub fn train_dp_rf<R: Rng + ?Sized>(data: &Dataset, spec: &PrivacySpec, params: &RfParams, rng: &mut R) -> Result<RfModel> {
    Ok(Prepared::new(data, spec, params)?.train(rng))
}
