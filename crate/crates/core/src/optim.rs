//! Damped Newton solver for ridge-penalized logistic regression.
//!
//! Minimizes Σ wᵢ·[softplus(θᵀxᵢ) − tᵢ·θᵀxᵢ] + ½ Σ ρⱼθⱼ² + cᵀθ with targets
//! tᵢ ∈ [0, 1], per-row weights w, per-coordinate ridge ρ and an optional
//! linear term c. Every caller in the crate (the private learners, the
//! attack surrogate and the posterior classifier) is an instance of this.

use nalgebra::{DMatrix, DVector};

use crate::error::{AuditError, Result};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub struct Logistic<'a> {
    /// n×p design matrix, row-major.
    pub x: &'a [f64],
    pub p: usize,
    pub targets: &'a [f64],
    pub weights: Option<&'a [f64]>,
    pub ridge: &'a [f64],
    pub linear: Option<&'a [f64]>,
}

#[derive(Clone, Debug)]
pub struct LogisticFit {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_inf: f64,
}

impl Logistic<'_> {
    fn n(&self) -> usize {
        self.targets.len()
    }

    fn w(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    fn total_weight(&self) -> f64 {
        self.weights.map_or(self.n() as f64, |w| w.iter().sum())
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        let mut f = 0.0;
        for i in 0..self.n() {
            let z = dot(self.row(i), theta);
            f += self.w(i) * (softplus(z) - self.targets[i] * z);
        }
        for j in 0..self.p {
            f += 0.5 * self.ridge[j] * theta[j] * theta[j];
        }
        if let Some(c) = self.linear {
            f += dot(c, theta);
        }
        f
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = (0..self.p).map(|j| self.ridge[j] * theta[j]).collect();
        if let Some(c) = self.linear {
            for (gj, cj) in g.iter_mut().zip(c) {
                *gj += cj;
            }
        }
        for i in 0..self.n() {
            let r = self.row(i);
            let s = self.w(i) * (sigmoid(dot(r, theta)) - self.targets[i]);
            for (gj, xj) in g.iter_mut().zip(r) {
                *gj += s * xj;
            }
        }
        g
    }

    /// XᵀWX + diag(ρ) at θ.
    pub fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let p = self.p;
        let mut h = vec![0.0; p * p];
        for i in 0..self.n() {
            let r = self.row(i);
            let s = sigmoid(dot(r, theta));
            let w = self.w(i) * s * (1.0 - s);
            if w == 0.0 {
                continue;
            }
            for a in 0..p {
                let wa = w * r[a];
                let row = &mut h[a * p..a * p + a + 1];
                for (b, hb) in row.iter_mut().enumerate() {
                    *hb += wa * r[b];
                }
            }
        }
        for a in 0..p {
            h[a * p + a] += self.ridge[a];
            for b in 0..a {
                h[b * p + a] = h[a * p + b];
            }
        }
        DMatrix::from_row_slice(p, p, &h)
    }

    pub fn fit(&self, init: Option<&[f64]>, max_iter: usize, tol: f64) -> Result<LogisticFit> {
        let p = self.p;
        let mut theta = init.map_or_else(|| vec![0.0; p], |t| t.to_vec());
        let scale = self.total_weight().max(1.0);
        let mut f = self.objective(&theta);
        let mut g = self.gradient(&theta);
        let mut grad_inf = inf_norm(&g);
        let mut it = 0;
        while it < max_iter && grad_inf > tol * scale {
            it += 1;
            let h = self.hessian(&theta);
            let chol = h.cholesky().ok_or(AuditError::SingularHessian)?;
            let step = chol.solve(&(-DVector::from_column_slice(&g)));
            let slope: f64 = dot(&g, step.as_slice());
            let mut t = 1.0;
            let mut accepted = false;
            let mut cand = vec![0.0; p];
            while t > 1e-12 {
                for j in 0..p {
                    cand[j] = theta[j] + t * step[j];
                }
                let fc = self.objective(&cand);
                if fc <= f + 1e-4 * t * slope {
                    f = fc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // no representable decrease left
                break;
            }
            std::mem::swap(&mut theta, &mut cand);
            g = self.gradient(&theta);
            grad_inf = inf_norm(&g);
        }
        Ok(LogisticFit {
            theta,
            iterations: it,
            converged: grad_inf <= tol * scale,
            grad_inf,
        })
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
