//! Influence-function attack on logistic regression.
//!
//! Works in the learner's design space φ = [x/R, 1]/√2, where
//! ℐ(φ, y) = (y − σ(θ̂ᵀφ))·H⁻¹φ and H = ΦᵀWΦ + λI at the non-private fit.

use nalgebra::{DMatrix, DVector};

use super::targeted::corner_ranking;
use super::{assemble, AttackKind, AttackSpec, Poison};
use crate::dataset::{Dataset, NeighborPair};
use crate::error::{AuditError, Result};
use crate::mechanisms::lr::{design, fit_nonprivate, scaled_row};
use crate::optim::{dot, sigmoid};
use crate::types::NeighborDef;

#[derive(Clone, Debug)]
pub struct InfluenceContext {
    /// ŷᵢ(1 − ŷᵢ) at the fit.
    pub w_diag: Vec<f64>,
    pub hessian_inv: DMatrix<f64>,
    pub theta_hat: Vec<f64>,
    pub radius: f64,
    /// Sum-form ridge, 1/C.
    pub lambda: f64,
}

impl InfluenceContext {
    /// Context at the non-private fit with regularization C.
    pub fn new(data: &Dataset, c: f64) -> Result<Self> {
        let fit = fit_nonprivate(data, c)?;
        Self::from_fit(data, fit.theta, 1.0 / c)
    }

    pub fn from_fit(data: &Dataset, theta: Vec<f64>, lambda: f64) -> Result<Self> {
        let (x, _) = design(data);
        let p = data.d() + 1;
        if theta.len() != p {
            return Err(AuditError::DimensionMismatch { expected: p, got: theta.len() });
        }
        let mut h = DMatrix::<f64>::identity(p, p) * lambda;
        let mut w_diag = Vec::with_capacity(data.n());
        for r in x.chunks(p) {
            let s = sigmoid(dot(r, &theta));
            let w = s * (1.0 - s);
            w_diag.push(w);
            let v = DVector::from_column_slice(r);
            h.ger(w, &v, &v, 1.0);
        }
        let hessian_inv = h.cholesky().ok_or(AuditError::SingularHessian)?.inverse();
        Ok(InfluenceContext {
            w_diag,
            hessian_inv,
            theta_hat: theta,
            radius: data.l2_radius(),
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta_hat.len()
    }

    /// Influence of a raw feature vector.
    pub fn influence_at(&self, x: &[f64], y: u8) -> Vec<f64> {
        influence_vector(self, &scaled_row(x, self.radius), y)
    }

    /// ‖ℐ‖² at raw x and its gradient with respect to x.
    fn norm_sq_and_grad(&self, x: &[f64], y: u8) -> (f64, Vec<f64>) {
        let phi = DVector::from_vec(scaled_row(x, self.radius));
        let s = sigmoid(dot(&self.theta_hat, phi.as_slice()));
        let r = y as f64 - s;
        let hphi = &self.hessian_inv * &phi;
        let h2phi = &self.hessian_inv * &hphi;
        let q = hphi.norm_squared();
        let f = r * r * q;
        // ∂f/∂φ = −2r·s(1−s)·q·θ + 2r²·H⁻²φ
        let a = -2.0 * r * s * (1.0 - s) * q;
        let scale = std::f64::consts::FRAC_1_SQRT_2 / effective_radius(self.radius);
        let grad = (0..x.len())
            .map(|j| scale * (a * self.theta_hat[j] + 2.0 * r * r * h2phi[j]))
            .collect();
        (f, grad)
    }
}

fn effective_radius(r: f64) -> f64 {
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

/// (y − σ(θ̂ᵀφ))·H⁻¹φ for a design-space vector φ.
pub fn influence_vector(ctx: &InfluenceContext, phi: &[f64], y: u8) -> Vec<f64> {
    assert_eq!(phi.len(), ctx.dim(), "design vector has the wrong dimension");
    let r = y as f64 - sigmoid(dot(&ctx.theta_hat, phi));
    let v = &ctx.hessian_inv * DVector::from_column_slice(phi);
    v.iter().map(|h| r * h).collect()
}

fn project_to_ball(x: &mut [f64], radius: f64) {
    let norm = dot(x, x).sqrt();
    if norm > radius {
        for v in x.iter_mut() {
            *v *= radius / norm;
        }
    }
}

fn class_mean(data: &Dataset, y: u8) -> Vec<f64> {
    let mut m = vec![0.0; data.d()];
    let mut count = 0.0f64;
    for (r, &l) in data.rows().zip(data.labels()) {
        if l == y {
            count += 1.0;
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
    }
    for a in m.iter_mut() {
        *a /= count.max(1.0);
    }
    m
}

/// Projected gradient ascent on ‖ℐ(x, y)‖² over the L2 ball, starting from
/// `init`. Returns the best iterate seen.
pub(crate) fn maximize_influence(ctx: &InfluenceContext, init: &[f64], y: u8, steps: usize, step_fraction: f64) -> Result<Vec<f64>> {
    let radius = effective_radius(ctx.radius);
    let eta = step_fraction * radius;
    let mut x = init.to_vec();
    project_to_ball(&mut x, radius);
    let (mut f, mut g) = ctx.norm_sq_and_grad(&x, y);
    let mut best = (f, x.clone());
    for _ in 0..steps {
        let gn = dot(&g, &g).sqrt();
        if gn == 0.0 {
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi += eta * gi / gn;
        }
        project_to_ball(&mut x, radius);
        (f, g) = ctx.norm_sq_and_grad(&x, y);
        if !f.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(AuditError::PgaDiverged { step: eta });
        }
        if f > best.0 {
            best = (f, x.clone());
        }
    }
    Ok(best.1)
}

/// Seeds at the row closest to a corner of the box, starts x⋆ at the mean of
/// the opposite class with the seed's label, and ascends ‖ℐ‖² on the ball.
pub fn influence_attack(data: &Dataset, spec: &AttackSpec, def: NeighborDef, c: f64) -> Result<NeighborPair> {
    let ctx = InfluenceContext::new(data, c)?;
    let order = corner_ranking(data);
    let v = order[0];
    let y_star = data.label(v);
    let init = class_mean(data, 1 - y_star);
    let x_star = maximize_influence(&ctx, &init, y_star, spec.pga_steps, spec.pga_step_size)?;
    let poison = Poison {
        kind: AttackKind::InfluencePga,
        ranked: order,
        x_star,
        y_star,
    };
    assemble(data, poison, spec.k, def)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::synth_blobs;

    fn norm(v: &[f64]) -> f64 {
        dot(v, v).sqrt()
    }

    #[test]
    fn zero_design_vector_has_zero_influence() {
        let data = synth_blobs(60, 2, 2.0, 1).unwrap();
        let ctx = InfluenceContext::new(&data, 1.0).unwrap();
        assert!(influence_vector(&ctx, &[0.0; 3], 1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hessian_inverse_is_symmetric_positive_definite() {
        let data = synth_blobs(80, 3, 2.0, 2).unwrap();
        let ctx = InfluenceContext::new(&data, 1.0).unwrap();
        let h = &ctx.hessian_inv;
        assert!((h - h.transpose()).abs().max() < 1e-12);
        assert!(h.clone().cholesky().is_some());
    }

    #[test]
    fn influence_shrinks_as_lambda_grows() {
        let data = synth_blobs(80, 2, 2.0, 3).unwrap();
        let base = InfluenceContext::new(&data, 1.0).unwrap();
        let x = [0.4, -0.3];
        let mut last = f64::INFINITY;
        for lambda in [0.1, 1.0, 10.0, 100.0, 1e4] {
            let ctx = InfluenceContext::from_fit(&data, base.theta_hat.clone(), lambda).unwrap();
            let n = norm(&ctx.influence_at(&x, 1));
            assert!(n < last);
            last = n;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = synth_blobs(60, 3, 2.0, 4).unwrap();
        let ctx = InfluenceContext::new(&data, 1.0).unwrap();
        let x = [0.2, -0.5, 0.3];
        let (_, g) = ctx.norm_sq_and_grad(&x, 0);
        for j in 0..3 {
            let h = 1e-6;
            let mut a = x;
            let mut b = x;
            a[j] += h;
            b[j] -= h;
            let fd = (ctx.norm_sq_and_grad(&a, 0).0 - ctx.norm_sq_and_grad(&b, 0).0) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + fd.abs()), "{j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn pga_stays_in_ball_and_never_gets_worse() {
        let data = synth_blobs(100, 2, 2.0, 5).unwrap();
        let ctx = InfluenceContext::new(&data, 1.0).unwrap();
        let init = class_mean(&data, 1);
        let x = maximize_influence(&ctx, &init, 0, 200, 0.05).unwrap();
        assert!(norm(&x) <= data.l2_radius() * (1.0 + 1e-12));
        assert!(norm(&ctx.influence_at(&x, 0)) >= norm(&ctx.influence_at(&init, 0)));
    }

    #[test]
    fn attack_beats_every_training_point() {
        let data = synth_blobs(100, 2, 2.0, 6).unwrap();
        let ctx = InfluenceContext::new(&data, 1.0).unwrap();
        let pair = influence_attack(&data, &AttackSpec::new(AttackKind::InfluencePga), NeighborDef::ReplaceOne, 1.0).unwrap();
        let w = &pair.witness;
        let attack_norm = norm(&ctx.influence_at(&w.x_star, w.y_star));
        let best_train = (0..data.n())
            .map(|i| norm(&ctx.influence_at(data.row(i), data.label(i))))
            .fold(0.0, f64::max);
        assert!(attack_norm >= best_train, "{attack_norm} < {best_train}");
        assert!(pair.poisoned.in_ball(&w.x_star));
        assert_eq!(pair.differing_rows().len(), 1);
    }
}
