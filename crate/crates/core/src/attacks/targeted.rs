//! Attacks aimed at naive Bayes and random forests.

use super::{assemble, AttackKind, AttackSpec, Poison};
use crate::dataset::{Dataset, NeighborPair};
use crate::error::Result;
use crate::types::NeighborDef;

/// L∞ distance from x to the nearest corner of the box.
pub fn corner_distance(x: &[f64], bounds: &[(f64, f64)]) -> f64 {
    x.iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| (v - lo).min(hi - v).max(0.0))
        .fold(0.0, f64::max)
}

/// Row indices sorted by corner distance, ties by index.
pub(crate) fn corner_ranking(data: &Dataset) -> Vec<usize> {
    let dist: Vec<f64> = data.rows().map(|r| corner_distance(r, data.bounds())).collect();
    let mut idx: Vec<usize> = (0..data.n()).collect();
    idx.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    idx
}

fn same_class_after(first: usize, order: &[usize], data: &Dataset) -> Vec<usize> {
    let y = data.label(first);
    std::iter::once(first)
        .chain(order.iter().copied().filter(|&i| i != first && data.label(i) == y))
        .collect()
}

/// Flips the label of the point closest to a corner of the box.
pub fn nb_corner_flip_attack(data: &Dataset, spec: &AttackSpec, def: NeighborDef) -> Result<NeighborPair> {
    let order = corner_ranking(data);
    let v = order[0];
    let poison = Poison {
        kind: AttackKind::NbCornerFlip,
        ranked: same_class_after(v, &order, data),
        x_star: data.row(v).to_vec(),
        y_star: 1 - data.label(v),
    };
    assemble(data, poison, spec.k, def)
}

/// Moves the corner point to the diagonally opposite corner, label unchanged.
pub fn nb_mean_shift_attack(data: &Dataset, spec: &AttackSpec, def: NeighborDef) -> Result<NeighborPair> {
    let order = corner_ranking(data);
    let v = order[0];
    let x_star = data
        .row(v)
        .iter()
        .zip(data.bounds())
        .map(|(&x, &(lo, hi))| if x - lo <= hi - x { hi } else { lo })
        .collect();
    let poison = Poison {
        kind: AttackKind::NbMeanShift,
        ranked: same_class_after(v, &order, data),
        x_star,
        y_star: data.label(v),
    };
    assemble(data, poison, spec.k, def)
}

/// Flips the label of the point with the largest total L1 distance to the
/// rest of the data; the point itself becomes the probe for tree votes.
pub fn rf_isolation_flip_attack(data: &Dataset, spec: &AttackSpec, def: NeighborDef) -> Result<NeighborPair> {
    let n = data.n();
    let mut score = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = data.row(i).iter().zip(data.row(j)).map(|(a, b)| (a - b).abs()).sum();
            score[i] += d;
            score[j] += d;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let v = order[0];
    let poison = Poison {
        kind: AttackKind::RfIsolationFlip,
        ranked: same_class_after(v, &order, data),
        x_star: data.row(v).to_vec(),
        y_star: 1 - data.label(v),
    };
    assemble(data, poison, spec.k, def)
}
