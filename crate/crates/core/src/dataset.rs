use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::types::{NeighborDef, Witness};

/// Binary-labelled feature matrix with its declared constraint set: a
/// per-feature box and an origin-centered L2 ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<u8>,
    bounds: Vec<(f64, f64)>,
    l2_radius: f64,
}

fn row_norm(row: &[f64]) -> f64 {
    row.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Dataset {
    /// Builds a dataset with explicit constraints; rows must lie inside them.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<u8>, bounds: Vec<(f64, f64)>, l2_radius: f64) -> Result<Self> {
        let n = rows.len();
        let d = bounds.len();
        let mut features = Vec::with_capacity(n * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(AuditError::invalid(format!("row {i} has {} features, expected {d}", r.len())));
            }
            features.extend_from_slice(r);
        }
        Self::from_flat(n, d, features, labels, bounds, l2_radius)
    }

    /// Builds a dataset whose constraints are the tight box and ball of its rows.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if rows.is_empty() {
            return Err(AuditError::invalid("dataset needs at least 2 rows"));
        }
        let d = rows[0].len();
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        let mut radius = 0.0f64;
        for r in &rows {
            if r.len() != d {
                return Err(AuditError::invalid("ragged feature rows"));
            }
            for (b, &v) in bounds.iter_mut().zip(r) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
            radius = radius.max(row_norm(r));
        }
        Self::new(rows, labels, bounds, radius)
    }

    pub(crate) fn from_flat(
        n: usize,
        d: usize,
        features: Vec<f64>,
        labels: Vec<u8>,
        bounds: Vec<(f64, f64)>,
        l2_radius: f64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(AuditError::invalid("dataset needs at least 2 rows"));
        }
        if d == 0 {
            return Err(AuditError::invalid("dataset needs at least one feature"));
        }
        if labels.len() != n || features.len() != n * d {
            return Err(AuditError::invalid("labels and features disagree on row count"));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(AuditError::invalid("labels must be 0 or 1"));
        }
        if !labels.contains(&0) || !labels.contains(&1) {
            return Err(AuditError::invalid("both classes must be present"));
        }
        for (f, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(AuditError::invalid(format!("invalid bounds for feature {f}")));
            }
        }
        if !(l2_radius.is_finite() && l2_radius >= 0.0) {
            return Err(AuditError::invalid("l2_radius must be finite and nonnegative"));
        }
        let ds = Dataset {
            n,
            d,
            features,
            labels,
            bounds,
            l2_radius,
        };
        for i in 0..n {
            let r = ds.row(i);
            if r.iter().any(|v| !v.is_finite()) {
                return Err(AuditError::invalid(format!("row {i} has non-finite features")));
            }
            for (f, (&v, &(lo, hi))) in r.iter().zip(&ds.bounds).enumerate() {
                if v < lo || v > hi {
                    return Err(AuditError::invalid(format!("row {i} feature {f} = {v} outside [{lo}, {hi}]")));
                }
            }
            if row_norm(r) > l2_radius * (1.0 + 1e-12) {
                return Err(AuditError::invalid(format!("row {i} lies outside the L2 ball of radius {l2_radius}")));
            }
        }
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn l2_radius(&self) -> f64 {
        self.l2_radius
    }

    pub fn class_count(&self, y: u8) -> usize {
        self.labels.iter().filter(|&&l| l == y).count()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| hi - lo).collect()
    }

    /// Widens the declared constraints; rows are unchanged.
    pub fn with_constraints(&self, bounds: Vec<(f64, f64)>, l2_radius: f64) -> Result<Self> {
        if bounds.len() != self.d {
            return Err(AuditError::invalid("bounds dimension mismatch"));
        }
        Self::from_flat(self.n, self.d, self.features.clone(), self.labels.clone(), bounds, l2_radius)
    }

    /// Copy with the listed rows replaced by (x, y); constraints grow to cover x.
    pub fn replace_rows(&self, victims: &[usize], x: &[f64], y: u8) -> Result<Self> {
        if x.len() != self.d {
            return Err(AuditError::invalid("replacement has wrong dimension"));
        }
        let mut features = self.features.clone();
        let mut labels = self.labels.clone();
        for &v in victims {
            if v >= self.n {
                return Err(AuditError::invalid(format!("victim index {v} out of range")));
            }
            features[v * self.d..(v + 1) * self.d].copy_from_slice(x);
            labels[v] = y;
        }
        let (bounds, radius) = self.covering(x);
        Self::from_flat(self.n, self.d, features, labels, bounds, radius)
    }

    /// Copy with `copies` rows equal to (x, y) appended.
    pub fn append_rows(&self, x: &[f64], y: u8, copies: usize) -> Result<Self> {
        if x.len() != self.d {
            return Err(AuditError::invalid("appended row has wrong dimension"));
        }
        let mut features = self.features.clone();
        let mut labels = self.labels.clone();
        for _ in 0..copies {
            features.extend_from_slice(x);
            labels.push(y);
        }
        let (bounds, radius) = self.covering(x);
        Self::from_flat(self.n + copies, self.d, features, labels, bounds, radius)
    }

    fn covering(&self, x: &[f64]) -> (Vec<(f64, f64)>, f64) {
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo.min(v), hi.max(v)))
            .collect();
        (bounds, self.l2_radius.max(row_norm(x)))
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bounds).all(|(&v, &(lo, hi))| lo <= v && v <= hi)
    }

    pub fn in_ball(&self, x: &[f64]) -> bool {
        row_norm(x) <= self.l2_radius * (1.0 + 1e-12)
    }

    pub fn to_snapshot(&self) -> DatasetSnapshot {
        DatasetSnapshot {
            schema: SNAPSHOT_SCHEMA.to_string(),
            n: self.n,
            d: self.d,
            features: self.rows().map(|r| r.to_vec()).collect(),
            labels: self.labels.clone(),
            bounds: self.bounds.iter().map(|&(lo, hi)| [lo, hi]).collect(),
            l2_radius: self.l2_radius,
        }
    }

    pub fn from_snapshot(s: DatasetSnapshot) -> Result<Self> {
        if s.schema != SNAPSHOT_SCHEMA {
            return Err(AuditError::invalid(format!("unsupported dataset schema {:?}", s.schema)));
        }
        if s.features.len() != s.n || s.bounds.len() != s.d {
            return Err(AuditError::invalid("snapshot header disagrees with its contents"));
        }
        Self::new(s.features, s.labels, s.bounds.into_iter().map(|b| (b[0], b[1])).collect(), s.l2_radius)
    }
}

pub const SNAPSHOT_SCHEMA: &str = "dpaudit-dataset/1";

/// Self-describing JSON form of a [`Dataset`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSnapshot {
    pub schema: String,
    pub n: usize,
    pub d: usize,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub bounds: Vec<[f64; 2]>,
    pub l2_radius: f64,
}

/// Original dataset D and poisoned neighbor D′. Both carry the same
/// constraint set so a mechanism is calibrated identically on either arm.
#[derive(Clone, Debug)]
pub struct NeighborPair {
    pub original: Dataset,
    pub poisoned: Dataset,
    pub k: u32,
    pub neighbor_def: NeighborDef,
    pub witness: Witness,
}

impl NeighborPair {
    pub fn new(original: Dataset, poisoned: Dataset, k: u32, neighbor_def: NeighborDef, witness: Witness) -> Result<Self> {
        if k == 0 {
            return Err(AuditError::invalid("k must be at least 1"));
        }
        if original.d != poisoned.d {
            return Err(AuditError::invalid("neighbor datasets have different dimensions"));
        }
        let k_us = k as usize;
        match neighbor_def {
            NeighborDef::ReplaceOne => {
                if original.n != poisoned.n {
                    return Err(AuditError::invalid("ReplaceOne neighbors must have equal size"));
                }
                let differing = (0..original.n)
                    .filter(|&i| original.row(i) != poisoned.row(i) || original.label(i) != poisoned.label(i))
                    .count();
                if differing != k_us {
                    return Err(AuditError::invalid(format!("neighbors differ in {differing} rows, expected {k}")));
                }
            }
            NeighborDef::AddRemove => {
                let (small, large) = if original.n <= poisoned.n {
                    (&original, &poisoned)
                } else {
                    (&poisoned, &original)
                };
                if large.n - small.n > k_us || large.n == small.n {
                    return Err(AuditError::invalid("AddRemove neighbors must differ in size by 1..=k rows"));
                }
                if large.features[..small.features.len()] != small.features[..] || large.labels[..small.n] != small.labels[..] {
                    return Err(AuditError::invalid("AddRemove neighbors must share their common rows"));
                }
            }
        }
        let bounds: Vec<(f64, f64)> = original
            .bounds
            .iter()
            .zip(&poisoned.bounds)
            .map(|(&(a, b), &(c, e))| (a.min(c), b.max(e)))
            .collect();
        let radius = original.l2_radius.max(poisoned.l2_radius);
        Ok(NeighborPair {
            original: original.with_constraints(bounds.clone(), radius)?,
            poisoned: poisoned.with_constraints(bounds, radius)?,
            k,
            neighbor_def,
            witness,
        })
    }

    /// Indices of rows that differ between the two arms (ReplaceOne), or
    /// the rows present in only one arm (AddRemove).
    pub fn differing_rows(&self) -> Vec<usize> {
        let (a, b) = (&self.original, &self.poisoned);
        if a.n == b.n {
            (0..a.n).filter(|&i| a.row(i) != b.row(i) || a.label(i) != b.label(i)).collect()
        } else {
            (a.n.min(b.n)..a.n.max(b.n)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]], vec![0, 1, 1]).unwrap()
    }

    #[test]
    fn tight_constraints_cover_rows() {
        let ds = tiny();
        assert_eq!(ds.bounds(), &[(0.0, 1.0), (0.0, 1.0)]);
        assert!((ds.l2_radius() - 1.0).abs() < 1e-15);
        assert_eq!(ds.class_count(1), 2);
    }

    #[test]
    fn rejects_rows_outside_constraints_and_single_class() {
        assert!(Dataset::new(vec![vec![2.0], vec![0.0]], vec![0, 1], vec![(0.0, 1.0)], 5.0).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![0.0]], vec![0, 1], vec![(0.0, 1.0)], 0.5).is_err());
        assert!(Dataset::from_rows(vec![vec![1.0], vec![0.0]], vec![1, 1]).is_err());
    }

    #[test]
    fn replace_and_append_grow_constraints() {
        let ds = tiny();
        let r = ds.replace_rows(&[2], &[3.0, 0.0], 0).unwrap();
        assert_eq!(r.bounds()[0], (0.0, 3.0));
        assert_eq!(r.l2_radius(), 3.0);
        let a = ds.append_rows(&[0.2, 0.2], 0, 2).unwrap();
        assert_eq!(a.n(), 5);
        assert_eq!(a.row(4), &[0.2, 0.2]);
    }

    #[test]
    fn pair_validates_row_differences_and_shares_constraints() {
        let ds = tiny();
        let w = Witness {
            attack: crate::attacks::AttackKind::SwapX,
            neighbor_def: NeighborDef::ReplaceOne,
            k: 1,
            victims: vec![2],
            x_star: vec![3.0, 0.0],
            y_star: 0,
            probe: vec![3.0, 0.0],
            original_n: 3,
            poisoned_n: 3,
        };
        let p = ds.replace_rows(&[2], &[3.0, 0.0], 0).unwrap();
        let pair = NeighborPair::new(ds.clone(), p.clone(), 1, NeighborDef::ReplaceOne, w.clone()).unwrap();
        assert_eq!(pair.original.bounds(), pair.poisoned.bounds());
        assert_eq!(pair.original.l2_radius(), 3.0);
        assert_eq!(pair.differing_rows(), vec![2]);
        assert!(NeighborPair::new(ds.clone(), p, 2, NeighborDef::ReplaceOne, w.clone()).is_err());
        let a = ds.append_rows(&[0.2, 0.2], 0, 1).unwrap();
        let pair = NeighborPair::new(ds.clone(), a, 1, NeighborDef::AddRemove, w).unwrap();
        assert_eq!(pair.differing_rows(), vec![3]);
    }

    #[test]
    fn snapshot_round_trips() {
        let ds = tiny();
        let json = serde_json::to_string(&ds.to_snapshot()).unwrap();
        assert!(json.contains("dpaudit-dataset/1"));
        let back = Dataset::from_snapshot(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, ds);
    }
}
