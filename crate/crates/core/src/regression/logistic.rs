//! Damped Newton ascent for (ridge-penalized) logistic log-likelihoods.

use nalgebra::{DMatrix, DVector};

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(h: f64) -> f64 {
    if h >= 0.0 {
        1.0 / (1.0 + (-h).exp())
    } else {
        let z = h.exp();
        z / (1.0 + z)
    }
}

/// `y ln sigmoid(h) + (1 - y) ln(1 - sigmoid(h))`.
pub fn log_lik_term(y: f64, h: f64) -> f64 {
    y * h - softplus(h)
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

struct Problem<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    ridge: &'a [f64],
}

impl Problem<'_> {
    fn objective(&self, beta: &DVector<f64>) -> f64 {
        let h = self.x * beta;
        let n = self.y.len() as f64;
        let ll: f64 = h.iter().zip(self.y).map(|(&h, &y)| log_lik_term(y, h)).sum::<f64>() / n;
        ll - 0.5 * beta.iter().zip(self.ridge).map(|(b, r)| r * b * b).sum::<f64>()
    }

    fn gradient_and_info(&self, beta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let h = self.x * beta;
        let n = self.y.len() as f64;
        let p = beta.len();
        let mut resid = DVector::zeros(h.len());
        let mut weighted = self.x.clone();
        for i in 0..h.len() {
            let pi = sigmoid(h[i]);
            resid[i] = self.y[i] - pi;
            let w = (pi * (1.0 - pi)).sqrt();
            for k in 0..p {
                weighted[(i, k)] *= w;
            }
        }
        let mut g = self.x.transpose() * resid / n;
        let mut info = weighted.transpose() * &weighted / n;
        for k in 0..p {
            g[k] -= self.ridge[k] * beta[k];
            info[(k, k)] += self.ridge[k];
        }
        (g, info)
    }
}

/// Maximizes the mean log-likelihood of `y` under `sigmoid(x beta)` minus
/// `0.5 * sum_k ridge_k beta_k^2`, starting from `init`. Stops when the
/// max-norm of the gradient drops below `tol`.
pub fn newton_logistic(
    x: &DMatrix<f64>,
    y: &[f64],
    ridge: &[f64],
    init: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> LogisticFit {
    let prob = Problem { x, y, ridge };
    let mut beta = DVector::from_vec(init);
    let mut f = prob.objective(&beta);
    let mut grad_norm = f64::INFINITY;
    let mut iterations = max_iter;
    for it in 0..max_iter {
        let (g, info) = prob.gradient_and_info(&beta);
        grad_norm = g.amax();
        if grad_norm < tol {
            return LogisticFit { beta: beta.iter().copied().collect(), iterations: it, grad_norm, converged: true };
        }
        let mut mu = 0.0;
        let step = loop {
            let mut m = info.clone();
            for k in 0..m.nrows() {
                m[(k, k)] += mu;
            }
            if let Some(ch) = m.cholesky() {
                break ch.solve(&g);
            }
            mu = if mu == 0.0 { 1e-10 * info.diagonal().amax().max(1e-300) } else { mu * 10.0 };
        };
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let cand = &beta + &step * t;
            let fc = prob.objective(&cand);
            if fc >= f + 1e-4 * t * slope {
                beta = cand;
                f = fc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            iterations = it + 1;
            break;
        }
    }
    let (g, _) = prob.gradient_and_info(&beta);
    grad_norm = grad_norm.min(g.amax());
    LogisticFit { beta: beta.iter().copied().collect(), iterations, grad_norm, converged: grad_norm < tol }
}
