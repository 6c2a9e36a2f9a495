//! Gaussian naive Bayes with Laplace-perturbed sufficient statistics.
//!
//! The budget is split ε/3 each for the means, the variances and the class
//! prior. Within the mean and variance groups a row touches every feature of
//! its own class, so each feature gets ε/(3d); the two classes are disjoint.
//! Sensitivities under ReplaceOne with box width w_f:
//!   mean     w_f / n_y
//!   variance w_f²·(n_y − 1) / n_y²
//!   prior    1 / n

use rand::Rng;

use super::laplace_noise;
use crate::dataset::Dataset;
use crate::error::{AuditError, Result};
use crate::types::PrivacySpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NbParams {
    /// Also release the perturbed class counts, rescaled to sum to n.
    pub leaky_counts: bool,
    pub noise_multiplier: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams {
            leaky_counts: false,
            noise_multiplier: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NbModel {
    pub mu: [Vec<f64>; 2],
    pub sigma2: [Vec<f64>; 2],
    pub prior: [f64; 2],
    pub raw_counts: Option<[f64; 2]>,
}

impl NbModel {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut ll = [0.0; 2];
        for y in 0..2 {
            ll[y] = self.prior[y].max(1e-300).ln();
            for (f, &v) in x.iter().enumerate() {
                let s2 = self.sigma2[y][f];
                ll[y] -= 0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - self.mu[y][f]).powi(2) / s2);
            }
        }
        crate::optim::sigmoid(ll[1] - ll[0])
    }
}

/// Record of how a release splits its budget.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BudgetLedger {
    pub entries: Vec<(String, f64)>,
}

impl BudgetLedger {
    pub fn spend(&mut self, what: impl Into<String>, eps: f64) {
        self.entries.push((what.into(), eps));
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, e)| e).sum()
    }
}

/// Sequential-composition ledger for one class's parameters plus the prior.
pub fn nb_budget(spec: &PrivacySpec, d: usize) -> BudgetLedger {
    let group = spec.epsilon() / 3.0;
    let per = group / d as f64;
    let mut ledger = BudgetLedger::default();
    for f in 0..d {
        ledger.spend(format!("mu[{f}]"), per);
    }
    for f in 0..d {
        ledger.spend(format!("sigma2[{f}]"), per);
    }
    ledger.spend("prior", group);
    ledger
}

pub(crate) struct Prepared {
    d: usize,
    n: f64,
    n_y: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
    mu_scale: [Vec<f64>; 2],
    var_scale: [Vec<f64>; 2],
    var_floor: Vec<f64>,
    prior_scale: f64,
    leaky: bool,
}

impl Prepared {
    pub(crate) fn new(data: &Dataset, spec: &PrivacySpec, params: &NbParams) -> Result<Self> {
        let d = data.d();
        let mut n_y = [0.0f64; 2];
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        for (r, &y) in data.rows().zip(data.labels()) {
            let y = y as usize;
            n_y[y] += 1.0;
            for (m, v) in mean[y].iter_mut().zip(r) {
                *m += v;
            }
        }
        for y in 0..2 {
            if n_y[y] < 2.0 {
                return Err(AuditError::invalid(format!("class {y} has fewer than 2 rows; variance undefined")));
            }
            for m in mean[y].iter_mut() {
                *m /= n_y[y];
            }
        }
        let mut var = [vec![0.0; d], vec![0.0; d]];
        for (r, &y) in data.rows().zip(data.labels()) {
            let y = y as usize;
            for f in 0..d {
                var[y][f] += (r[f] - mean[y][f]).powi(2);
            }
        }
        for y in 0..2 {
            for v in var[y].iter_mut() {
                *v /= n_y[y];
            }
        }
        let ledger = nb_budget(spec, d);
        let per = ledger.entries[0].1;
        let prior_eps = ledger.entries[2 * d].1;
        let mult = params.noise_multiplier;
        let widths = data.widths();
        let tiny = f64::MIN_POSITIVE;
        let mu_scale = [0, 1].map(|y| widths.iter().map(|w| mult * (w / n_y[y]).max(tiny) / per).collect());
        let var_scale = [0, 1].map(|y| {
            widths
                .iter()
                .map(|w| mult * (w * w * (n_y[y] - 1.0) / (n_y[y] * n_y[y])).max(tiny) / per)
                .collect()
        });
        let n = data.n() as f64;
        Ok(Prepared {
            d,
            n,
            n_y,
            mean,
            var,
            mu_scale,
            var_scale,
            var_floor: widths.iter().map(|w| (1e-9 * w * w).max(tiny)).collect(),
            prior_scale: mult * (1.0 / n) / prior_eps,
            leaky: params.leaky_counts,
        })
    }

    pub(crate) fn train<R: Rng + ?Sized>(&self, rng: &mut R) -> NbModel {
        let mut mu = [vec![0.0; self.d], vec![0.0; self.d]];
        let mut sigma2 = [vec![0.0; self.d], vec![0.0; self.d]];
        for y in 0..2 {
            for f in 0..self.d {
                mu[y][f] = self.mean[y][f] + laplace_noise(self.mu_scale[y][f], rng);
            }
        }
        for y in 0..2 {
            for f in 0..self.d {
                let v = self.var[y][f] + laplace_noise(self.var_scale[y][f], rng);
                sigma2[y][f] = v.max(self.var_floor[f]);
            }
        }
        let p1 = (self.n_y[1] / self.n + laplace_noise(self.prior_scale, rng)).clamp(0.0, 1.0);
        let prior = [1.0 - p1, p1];
        NbModel {
            mu,
            sigma2,
            prior,
            raw_counts: self.leaky.then(|| [prior[0] * self.n, prior[1] * self.n]),
        }
    }
}

pub fn train_dp_nb<R: Rng + ?Sized>(data: &Dataset, spec: &PrivacySpec, params: &NbParams, rng: &mut R) -> Result<NbModel> {
    Ok(Prepared::new(data, spec, params)?.train(rng))
}
