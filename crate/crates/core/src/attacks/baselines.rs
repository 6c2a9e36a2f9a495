//! Baseline attacks: ClipBKD and Swap-X.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::targeted::corner_ranking;
use super::{assemble, AttackKind, AttackSpec, Poison};
use crate::dataset::{Dataset, NeighborPair};
use crate::error::{AuditError, Result};
use crate::mechanisms::lr::fit_nonprivate;
use crate::rng::{stream_rng, Stream};
use crate::types::NeighborDef;

/// Unit eigenvector of the sample covariance with the smallest eigenvalue.
/// Within a degenerate eigenspace the first basis vector with a nonzero
/// projection is used; the first nonzero entry is made positive.
pub fn smallest_variance_direction(data: &Dataset) -> Vec<f64> {
    let (n, d) = (data.n(), data.d());
    let mut mean = vec![0.0; d];
    for r in data.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for r in data.rows() {
        let c = DVector::from_iterator(d, r.iter().zip(&mean).map(|(v, m)| v - m));
        cov.ger(1.0 / (n.max(2) - 1) as f64, &c, &c, 1.0);
    }
    let eig = SymmetricEigen::new(cov);
    let min = eig.eigenvalues.min();
    let spread = eig.eigenvalues.max().abs().max(1.0);
    let tol = 1e-9 * spread;
    let basis: Vec<DVector<f64>> = (0..d)
        .filter(|&j| eig.eigenvalues[j] - min <= tol)
        .map(|j| eig.eigenvectors.column(j).into_owned())
        .collect();
    let mut dir = basis[0].clone();
    for axis in 0..d {
        let mut proj = DVector::<f64>::zeros(d);
        for b in &basis {
            proj += b * b[axis];
        }
        if proj.norm() > 1e-6 {
            dir = proj;
            break;
        }
    }
    dir /= dir.norm();
    if let Some(first) = dir.iter().find(|v| v.abs() > 1e-12) {
        if *first < 0.0 {
            dir = -dir;
        }
    }
    dir.iter().copied().collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// x⋆ along the least-variance direction at the median row norm; y⋆ is the
/// label the non-private fit finds less likely there.
pub fn clipbkd_attack(data: &Dataset, c: f64, spec: &AttackSpec, def: NeighborDef) -> Result<NeighborPair> {
    let dir = smallest_variance_direction(data);
    let norm = median(data.rows().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect());
    let x_star: Vec<f64> = dir.iter().map(|v| v * norm).collect();
    let fit = fit_nonprivate(data, c)?;
    let p1 = fit.predict_proba(&x_star);
    let y_star = (p1 < 0.5) as u8;
    let poison = Poison {
        kind: AttackKind::ClipBkd,
        ranked: corner_ranking(data),
        x_star,
        y_star,
    };
    assemble(data, poison, spec.k, def)
}

/// A random row takes the features of a random opposite-class row and keeps
/// its label. Further victims are random rows of the same class.
pub fn swap_x_attack(data: &Dataset, seed: u64, spec: &AttackSpec, def: NeighborDef) -> Result<NeighborPair> {
    if data.class_count(0) == 0 || data.class_count(1) == 0 {
        return Err(AuditError::invalid("swap_x needs both classes present"));
    }
    let mut rng = stream_rng(seed, Stream::Attack);
    let v = rng.random_range(0..data.n());
    let y = data.label(v);
    let opposite: Vec<usize> = (0..data.n()).filter(|&i| data.label(i) != y).collect();
    let u = *opposite.choose(&mut rng).expect("nonempty class");
    let mut rest: Vec<usize> = (0..data.n()).filter(|&i| i != v && data.label(i) == y).collect();
    rest.shuffle(&mut rng);
    let poison = Poison {
        kind: AttackKind::SwapX,
        ranked: std::iter::once(v).chain(rest).collect(),
        x_star: data.row(u).to_vec(),
        y_star: y,
    };
    assemble(data, poison, spec.k, def)
}
