//! Gaussian-process surrogate for sequential model-based search.
//!
//! Squared-exponential kernel with an isotropic length scale picked by
//! marginal likelihood over a fixed log-spaced grid. Inputs live in the
//! unit cube; outputs are centered internally.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("degenerate surrogate: {0}")]
    Degenerate(String),
}

/// Candidate isotropic length scales (unit-cube coordinates), log-spaced.
const LENGTH_SCALES: [f64; 10] = [
    0.05, 0.0754, 0.1136, 0.1712, 0.2581, 0.389, 0.5864, 0.8838, 1.3323, 2.0,
];
/// Observation noise as a fraction of the signal variance.
const NOISE_FRACTION: f64 = 1e-6;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kernel(a: &[f64], b: &[f64], length_scale: f64, signal_var: f64) -> f64 {
    signal_var * (-sq_dist(a, b) / (2.0 * length_scale * length_scale)).exp()
}

pub struct Gp {
    x: Vec<Vec<f64>>,
    y_mean: f64,
    alpha: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    pub length_scale: f64,
    pub signal_var: f64,
    pub noise_var: f64,
}

struct Fitted {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    log_marginal: f64,
    noise_var: f64,
}

fn try_fit(
    xs: &[Vec<f64>],
    y_centered: &DVector<f64>,
    length_scale: f64,
    signal_var: f64,
) -> Option<Fitted> {
    let n = xs.len();
    let mut noise_var = signal_var * NOISE_FRACTION;
    // Escalate the jitter a few times if the covariance is numerically
    // indefinite (duplicated points, tiny length scale).
    for _ in 0..5 {
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = kernel(&xs[i], &xs[j], length_scale, signal_var);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(i, i)] += noise_var;
        }
        if let Some(chol) = Cholesky::new(k) {
            let alpha = chol.solve(y_centered);
            let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
            let log_marginal = -0.5 * y_centered.dot(&alpha)
                - log_det
                - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
            return Some(Fitted { chol, alpha, log_marginal, noise_var });
        }
        noise_var *= 100.0;
    }
    None
}

impl Gp {
    /// Fits the surrogate; the length scale maximizes the marginal
    /// likelihood over [`LENGTH_SCALES`].
    pub fn fit(xs: &[Vec<f64>], ys: &[f64]) -> Result<Self, GpError> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(GpError::Degenerate(format!("{} training points", xs.len())));
        }
        let n = ys.len() as f64;
        let y_mean = ys.iter().sum::<f64>() / n;
        let signal_var = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum::<f64>() / n;
        if signal_var < 1e-10 {
            return Err(GpError::Degenerate("no output variance".into()));
        }
        let y_centered = DVector::from_iterator(ys.len(), ys.iter().map(|y| y - y_mean));

        let mut best: Option<(f64, Fitted)> = None;
        for &ls in &LENGTH_SCALES {
            if let Some(f) = try_fit(xs, &y_centered, ls, signal_var) {
                if best.as_ref().map_or(true, |(_, b)| f.log_marginal > b.log_marginal) {
                    best = Some((ls, f));
                }
            }
        }
        let Some((length_scale, fitted)) = best else {
            return Err(GpError::Degenerate("covariance not positive definite".into()));
        };
        Ok(Gp {
            x: xs.to_vec(),
            y_mean,
            alpha: fitted.alpha,
            chol: fitted.chol,
            length_scale,
            signal_var,
            noise_var: fitted.noise_var,
        })
    }

    /// Posterior mean and variance at a query point.
    pub fn predict(&self, q: &[f64]) -> (f64, f64) {
        let k_star = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|x| kernel(x, q, self.length_scale, self.signal_var)),
        );
        let mean = self.y_mean + k_star.dot(&self.alpha);
        let v = self.chol.solve(&k_star);
        let var = (self.signal_var + self.noise_var - k_star.dot(&v)).max(0.0);
        (mean, var)
    }
}

/// Expected improvement of a Gaussian belief `(mean, sd)` over the best
/// observed value, discounted by the exploration margin `xi` (same units
/// as the objective).
pub fn expected_improvement(mean: f64, sd: f64, best: f64, xi: f64) -> f64 {
    if sd < 1e-12 {
        return 0.0;
    }
    let gain = mean - best - xi;
    let z = gain / sd;
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    gain * std_normal.cdf(z) + sd * std_normal.pdf(z)
}
