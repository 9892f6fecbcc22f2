//! Epsilon-insensitive support vector regression with an RBF kernel.
//!
//! The solver is sequential minimal optimization over the standard 2n-variable
//! dual (one α and one α* per sample): maximal-violating-pair selection with a
//! second-order gain criterion, analytic two-variable updates, and incremental
//! gradient maintenance. Features are standardized internally using training
//! statistics stored in the model; the default kernel bandwidth is
//! gamma = 1 / feature_count on the standardized data.

use serde::{Deserialize, Serialize};

use super::AssessError;

/// SVR hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    /// Width of the insensitive tube.
    pub epsilon: f64,
    /// Box constraint on the dual coefficients.
    pub c: f64,
    /// RBF bandwidth; `None` means 1 / feature_count.
    pub gamma: Option<f64>,
    /// KKT violation below which the solver stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            epsilon: 0.1,
            c: 1.0,
            gamma: None,
            tol: 1e-6,
            max_iter: 500_000,
        }
    }
}

/// Per-column standardization record captured from the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &[Vec<f64>]) -> Scaler {
        let n = x.len() as f64;
        let dims = x.first().map(|r| r.len()).unwrap_or(0);
        let mut means = vec![0.0; dims];
        for row in x {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; dims];
        for row in x {
            for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Scaler { means, stds }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

/// A fitted SVR model: support vectors in standardized space, their dual
/// coefficients θ = α − α*, and the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// θ per support vector, each within [−C, C].
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub params: SvrParams,
    pub gamma: f64,
    pub scaler: Scaler,
    pub iterations: usize,
}

impl SvrModel {
    /// Kernel expansion over the support vectors, after the stored scaling.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, AssessError> {
        let expected = self.scaler.means.len();
        let mut out = Vec::with_capacity(x.len());
        for row in x {
            if row.len() != expected {
                return Err(AssessError::DimensionMismatch {
                    expected,
                    got: row.len(),
                });
            }
            let z = self.scaler.transform(row);
            let f: f64 = self
                .support_vectors
                .iter()
                .zip(&self.coefficients)
                .map(|(sv, &theta)| theta * rbf(sv, &z, self.gamma))
                .sum();
            out.push(f + self.bias);
        }
        Ok(out)
    }
}

/// Fit an epsilon-SVR by SMO on the dual.
pub fn fit_svr(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrModel, AssessError> {
    if x.len() < 1 || x.len() != y.len() {
        return Err(AssessError::TooFewSamples {
            needed: 1,
            got: x.len().min(y.len()),
        });
    }
    let n = x.len();
    let dims = x[0].len();
    let scaler = Scaler::fit(x);
    let z: Vec<Vec<f64>> = x.iter().map(|row| scaler.transform(row)).collect();
    let gamma = params.gamma.unwrap_or(1.0 / dims.max(1) as f64);

    // Dense kernel matrix; n stays small in this artifact's workloads.
    let mut kernel = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let k = rbf(&z[i], &z[j], gamma);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }

    let solution = smo(&kernel, y, params)?;
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (i, &theta) in solution.theta.iter().enumerate() {
        if theta != 0.0 {
            support_vectors.push(z[i].clone());
            coefficients.push(theta);
        }
    }
    Ok(SvrModel {
        support_vectors,
        coefficients,
        bias: solution.bias,
        params: *params,
        gamma,
        scaler,
        iterations: solution.iterations,
    })
}

struct SmoSolution {
    theta: Vec<f64>,
    bias: f64,
    iterations: usize,
}

/// SMO over the 2n-variable box-constrained dual with one equality
/// constraint. Index t < n is α_t (sign +1); index t ≥ n is α*_{t−n}
/// (sign −1). Q_st = sign(s)·sign(t)·K(s mod n, t mod n).
fn smo(kernel: &[f64], y: &[f64], params: &SvrParams) -> Result<SmoSolution, AssessError> {
    let n = y.len();
    let m = 2 * n;
    let c = params.c;
    let tau = 1e-12;
    let sign = |t: usize| -> f64 { if t < n { 1.0 } else { -1.0 } };
    let point = |t: usize| -> usize { t % n };
    let q = |s: usize, t: usize| -> f64 {
        sign(s) * sign(t) * kernel[point(s) * n + point(t)]
    };

    let mut beta = vec![0.0f64; m];
    // Gradient of the dual objective: G_t = (Qβ)_t + p_t, starting at p.
    let mut grad: Vec<f64> = (0..m)
        .map(|t| {
            if t < n {
                params.epsilon - y[t]
            } else {
                params.epsilon + y[t - n]
            }
        })
        .collect();

    let mut iterations = 0usize;
    let mut violation = f64::INFINITY;
    while iterations < params.max_iter {
        // Maximal violating pair: i maximizes −sign·G over the up set.
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        for t in 0..m {
            let up = (sign(t) > 0.0 && beta[t] < c) || (sign(t) < 0.0 && beta[t] > 0.0);
            if up {
                let v = -sign(t) * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
            let low = (sign(t) > 0.0 && beta[t] > 0.0) || (sign(t) < 0.0 && beta[t] < c);
            if low {
                let v = -sign(t) * grad[t];
                if v < gmin {
                    gmin = v;
                }
            }
        }
        violation = gmax - gmin;
        if violation < params.tol || i == usize::MAX {
            break;
        }

        // Second index: best second-order gain among violating candidates.
        let mut j = usize::MAX;
        let mut best_gain = 0.0f64;
        let gi = gmax;
        for t in 0..m {
            let low = (sign(t) > 0.0 && beta[t] > 0.0) || (sign(t) < 0.0 && beta[t] < c);
            if !low {
                continue;
            }
            let gt = -sign(t) * grad[t];
            let diff = gi - gt;
            if diff <= 0.0 {
                continue;
            }
            let mut curvature = q(i, i) + q(t, t) - 2.0 * sign(i) * sign(t) * q(i, t);
            if curvature <= 0.0 {
                curvature = tau;
            }
            let gain = diff * diff / curvature;
            if gain > best_gain {
                best_gain = gain;
                j = t;
            }
        }
        if j == usize::MAX {
            break;
        }

        // Analytic two-variable update with box clipping. The curvature along
        // the feasible direction is K_ii + K_jj − 2·K_ij in both sign cases.
        let old_i = beta[i];
        let old_j = beta[j];
        if sign(i) != sign(j) {
            let mut curvature = q(i, i) + q(j, j) - 2.0 * kernel[point(i) * n + point(j)];
            if curvature <= 0.0 {
                curvature = tau;
            }
            let delta = (-grad[i] - grad[j]) / curvature;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 && beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = diff;
            } else if diff <= 0.0 && beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 && beta[i] > c {
                beta[i] = c;
                beta[j] = c - diff;
            } else if diff <= 0.0 && beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let mut curvature = q(i, i) + q(j, j) - 2.0 * kernel[point(i) * n + point(j)];
            if curvature <= 0.0 {
                curvature = tau;
            }
            let delta = (grad[i] - grad[j]) / curvature;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c && beta[i] > c {
                beta[i] = c;
                beta[j] = sum - c;
            } else if sum <= c && beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > c && beta[j] > c {
                beta[j] = c;
                beta[i] = sum - c;
            } else if sum <= c && beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }

        let delta_i = beta[i] - old_i;
        let delta_j = beta[j] - old_j;
        if delta_i != 0.0 || delta_j != 0.0 {
            for t in 0..m {
                grad[t] += q(t, i) * delta_i + q(t, j) * delta_j;
            }
        }
        iterations += 1;
    }
    if violation >= params.tol && iterations >= params.max_iter {
        return Err(AssessError::NonConvergence {
            max_iter: params.max_iter,
            violation,
        });
    }

    // Bias from the KKT conditions. With s_t = −sign·G_t, free variables
    // pin b = s_t exactly; α at 0 and α* at C force b ≥ s_t, while α at C
    // and α* at 0 force b ≤ s_t.
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..m {
        let value = -sign(t) * grad[t];
        if beta[t] <= 0.0 {
            if sign(t) > 0.0 {
                lower = lower.max(value);
            } else {
                upper = upper.min(value);
            }
        } else if beta[t] >= c {
            if sign(t) > 0.0 {
                upper = upper.min(value);
            } else {
                lower = lower.max(value);
            }
        } else {
            free_sum += value;
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (upper + lower) / 2.0
    };

    let theta: Vec<f64> = (0..n).map(|i| beta[i] - beta[n + i]).collect();
    Ok(SmoSolution {
        theta,
        bias,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_predicts_within_epsilon() {
        let x = vec![vec![2.0, -1.0]];
        let y = vec![5.0];
        let model = fit_svr(&x, &y, &SvrParams::default()).unwrap();
        let pred = model.predict(&x).unwrap();
        assert!((pred[0] - 5.0).abs() <= 0.1 + 1e-9, "{}", pred[0]);
    }

    #[test]
    fn constant_targets_yield_bias_only_model() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y = vec![3.25; 8];
        let model = fit_svr(&x, &y, &SvrParams::default()).unwrap();
        assert!(model.support_vectors.is_empty());
        let grid = vec![vec![100.0, 4.0], vec![-3.0, 0.5]];
        for p in model.predict(&grid).unwrap() {
            assert!((p - 3.25).abs() < 1e-9);
        }
    }

    #[test]
    fn coefficients_respect_box_constraint() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64) / 10.0, ((i * 7 % 13) as f64) / 5.0])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] - r[1]).collect();
        let params = SvrParams::default();
        let model = fit_svr(&x, &y, &params).unwrap();
        for &theta in &model.coefficients {
            assert!(theta.abs() <= params.c + 1e-9);
        }
    }

    #[test]
    fn translation_invariance() {
        let x: Vec<Vec<f64>> = (0..25)
            .map(|i| vec![(i % 5) as f64, (i / 5) as f64])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| (r[0] - r[1]).sin() + r[0]).collect();
        let params = SvrParams::default();
        let base = fit_svr(&x, &y, &params).unwrap();
        let shift = [17.5, -42.0];
        let moved: Vec<Vec<f64>> = x
            .iter()
            .map(|r| r.iter().zip(shift).map(|(v, s)| v + s).collect())
            .collect();
        let shifted = fit_svr(&moved, &y, &params).unwrap();
        let grid: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 2.0, 1.0]).collect();
        let grid_moved: Vec<Vec<f64>> = grid
            .iter()
            .map(|r| r.iter().zip(shift).map(|(v, s)| v + s).collect())
            .collect();
        let a = base.predict(&grid).unwrap();
        let b = shifted.predict(&grid_moved).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-6, "{p} vs {q}");
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let x = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.0]];
        let y = vec![1.0, 2.0, 0.5];
        let model = fit_svr(&x, &y, &SvrParams::default()).unwrap();
        let bad = model.predict(&[vec![1.0]]);
        assert!(matches!(bad, Err(AssessError::DimensionMismatch { .. })));
    }

    #[test]
    fn smooth_function_is_tracked() {
        // y = 2·x1 over a grid; default parameters.
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 49.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0]).collect();
        let params = SvrParams::default();
        let model = fit_svr(&x, &y, &params).unwrap();
        let grid: Vec<Vec<f64>> = (1..20).map(|i| vec![i as f64 / 20.0]).collect();
        let preds = model.predict(&grid).unwrap();
        for (p, r) in preds.iter().zip(&grid) {
            let truth = 2.0 * r[0];
            assert!((p - truth).abs() < 0.15, "pred {p} truth {truth}");
        }
        // On a well-fit smooth dataset, training points sit within the
        // epsilon tube plus slack tolerance.
        for (p, target) in model.predict(&x).unwrap().iter().zip(&y) {
            assert!((p - target).abs() <= params.epsilon + 0.05, "{p} vs {target}");
        }
    }
}
