//! Private logistic regression by output and by objective perturbation.
//!
//! Rows are mapped to x̃ = [x/R, 1]/√2 so that ‖x̃‖ ≤ 1 with the bias folded
//! in. With λ = 1/(n·C) the mean-form objective (1/n)Σℓ + (λ/2)‖θ‖² is
//! solved in its sum form Σℓ + (1/(2C))‖θ‖².

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::dataset::Dataset;
use crate::error::{AuditError, Result};
use crate::optim::{dot, sigmoid, Logistic};
use crate::types::PrivacySpec;

pub const MAX_ITER: usize = 500;
pub const GRAD_TOL: f64 = 1e-8;

/// Lipschitz constant of the logistic loss derivative.
const LOSS_SMOOTHNESS: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
pub struct LrModel {
    /// Coefficients on the scaled features, bias last.
    pub theta: Vec<f64>,
    pub regularization_c: f64,
    /// Radius used to scale features.
    pub radius: f64,
}

impl LrModel {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.theta, &scaled_row(x, self.radius)))
    }
}

fn effective_radius(r: f64) -> f64 {
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

/// [x/R, 1]/√2.
pub fn scaled_row(x: &[f64], radius: f64) -> Vec<f64> {
    let r = effective_radius(radius);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v: Vec<f64> = x.iter().map(|v| v / r * s).collect();
    v.push(s);
    v
}

pub fn design(data: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(data.n() * (data.d() + 1));
    for r in data.rows() {
        x.extend(scaled_row(r, data.l2_radius()));
    }
    let t = data.labels().iter().map(|&y| y as f64).collect();
    (x, t)
}

/// Non-private fit M_∞(D) with sum-form ridge 1/C.
pub fn fit_nonprivate(data: &Dataset, c: f64) -> Result<LrModel> {
    let (x, t) = design(data);
    let p = data.d() + 1;
    let ridge = vec![1.0 / c; p];
    let prob = Logistic {
        x: &x,
        p,
        targets: &t,
        weights: None,
        ridge: &ridge,
        linear: None,
    };
    let fit = prob.fit(None, MAX_ITER, GRAD_TOL)?;
    if !fit.converged {
        return Err(AuditError::NonConvergence {
            epsilon: f64::INFINITY,
            c,
            iterations: MAX_ITER,
        });
    }
    Ok(LrModel {
        theta: fit.theta,
        regularization_c: c,
        radius: data.l2_radius(),
    })
}

/// Vector with uniform direction and Gamma(dim, scale) norm, i.e. density
/// ∝ exp(−‖b‖/scale).
pub fn gamma_norm_noise<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    let mut dir: Vec<f64> = loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if v.iter().any(|x: &f64| *x != 0.0) {
            break v;
        }
    };
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let radius = Gamma::new(dim as f64, scale).expect("positive gamma parameters").sample(rng);
    for v in dir.iter_mut() {
        *v *= radius / norm;
    }
    dir
}

/// Noise norm scale 2/(nλε) = 2C/ε for output perturbation.
pub fn output_noise_scale(c: f64, epsilon: f64) -> f64 {
    2.0 * c / epsilon
}

/// C = 10 for 1 ≤ ε ≤ 8, otherwise 1.
pub fn default_objective_c(epsilon: f64) -> f64 {
    if (1.0..=8.0).contains(&epsilon) {
        10.0
    } else {
        1.0
    }
}

/// (ε′, Δ) of objective perturbation for n rows and regularization C.
pub fn objective_params(n: usize, c: f64, epsilon: f64) -> (f64, f64) {
    let n_lambda = 1.0 / c;
    let lambda = n_lambda / n as f64;
    let q = LOSS_SMOOTHNESS / n_lambda;
    let eps_prime = epsilon - (1.0 + 2.0 * q + q * q).ln();
    if eps_prime > 0.0 {
        (eps_prime, 0.0)
    } else {
        let delta = LOSS_SMOOTHNESS / (n as f64 * ((epsilon / 4.0).exp_m1())) - lambda;
        (epsilon / 2.0, delta)
    }
}

pub(crate) struct OutputPrepared {
    theta_hat: Vec<f64>,
    scale: f64,
    c: f64,
    radius: f64,
}

impl OutputPrepared {
    pub(crate) fn new(data: &Dataset, spec: &PrivacySpec, c: f64, noise_multiplier: f64) -> Result<Self> {
        let fit = fit_nonprivate(data, c).map_err(|e| relabel(e, spec.epsilon()))?;
        Ok(OutputPrepared {
            theta_hat: fit.theta,
            scale: noise_multiplier * output_noise_scale(c, spec.epsilon()),
            c,
            radius: data.l2_radius(),
        })
    }

    pub(crate) fn train<R: Rng + ?Sized>(&self, rng: &mut R) -> LrModel {
        let b = gamma_norm_noise(self.theta_hat.len(), self.scale, rng);
        LrModel {
            theta: self.theta_hat.iter().zip(&b).map(|(t, b)| t + b).collect(),
            regularization_c: self.c,
            radius: self.radius,
        }
    }
}

fn relabel(e: AuditError, epsilon: f64) -> AuditError {
    match e {
        AuditError::NonConvergence { c, iterations, .. } => AuditError::NonConvergence { epsilon, c, iterations },
        other => other,
    }
}

pub(crate) struct ObjectivePrepared {
    x: Vec<f64>,
    t: Vec<f64>,
    p: usize,
    ridge: Vec<f64>,
    scale: f64,
    warm: Vec<f64>,
    epsilon: f64,
    c: f64,
    radius: f64,
}

impl ObjectivePrepared {
    pub(crate) fn new(data: &Dataset, spec: &PrivacySpec, c: f64, noise_multiplier: f64) -> Result<Self> {
        let (x, t) = design(data);
        let p = data.d() + 1;
        let (eps_prime, delta) = objective_params(data.n(), c, spec.epsilon());
        let ridge = vec![1.0 / c + data.n() as f64 * delta; p];
        let warm = fit_nonprivate(data, c).map_err(|e| relabel(e, spec.epsilon()))?.theta;
        Ok(ObjectivePrepared {
            x,
            t,
            p,
            ridge,
            scale: noise_multiplier * 2.0 / eps_prime,
            warm,
            epsilon: spec.epsilon(),
            c,
            radius: data.l2_radius(),
        })
    }

    pub(crate) fn train<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LrModel> {
        let b = gamma_norm_noise(self.p, self.scale, rng);
        let prob = Logistic {
            x: &self.x,
            p: self.p,
            targets: &self.t,
            weights: None,
            ridge: &self.ridge,
            linear: Some(&b),
        };
        let fit = prob.fit(Some(&self.warm), MAX_ITER, GRAD_TOL)?;
        if !fit.converged {
            return Err(AuditError::NonConvergence {
                epsilon: self.epsilon,
                c: self.c,
                iterations: MAX_ITER,
            });
        }
        Ok(LrModel {
            theta: fit.theta,
            regularization_c: self.c,
            radius: self.radius,
        })
    }
}

pub fn train_dp_lr_output<R: Rng + ?Sized>(data: &Dataset, spec: &PrivacySpec, c: f64, rng: &mut R) -> Result<LrModel> {
    Ok(OutputPrepared::new(data, spec, c, 1.0)?.train(rng))
}

pub fn train_dp_lr_objective<R: Rng + ?Sized>(data: &Dataset, spec: &PrivacySpec, c: f64, rng: &mut R) -> Result<LrModel> {
    ObjectivePrepared::new(data, spec, c, 1.0)?.train(rng)
}
