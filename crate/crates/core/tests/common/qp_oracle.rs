//! Independent quadratic-programming solve of the epsilon-insensitive SVR
//! dual, used as the correctness oracle for the SMO implementation.
//!
//! The dual over beta = [alpha; alpha*] in [0, C]^{2n} with the equality
//! constraint sum(alpha) = sum(alpha*) is solved by accelerated projected
//! gradient descent. The projection onto the box intersected with the
//! hyperplane is computed exactly by bisection on the hyperplane
//! multiplier. Nothing here shares code with the library solver: the
//! kernel, standardization, objective, projection, and bias recovery are
//! all reimplemented from the mathematical definitions.

/// Per-column mean/std standardization with population variance, matching
/// the documented model contract.
pub struct OracleScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl OracleScaler {
    pub fn fit(x: &[Vec<f64>]) -> OracleScaler {
        let n = x.len() as f64;
        let d = x[0].len();
        let mut means = vec![0.0; d];
        for row in x {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut stds = vec![0.0; d];
        for row in x {
            for j in 0..d {
                stds[j] += (row[j] - means[j]).powi(2) / n;
            }
        }
        for s in &mut stds {
            *s = s.sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        OracleScaler { means, stds }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| (v - self.means[j]) / self.stds[j])
            .collect()
    }
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

pub struct OracleSvr {
    pub support: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub scaler: OracleScaler,
    /// Final KKT violation, so callers can assert the oracle itself
    /// converged before trusting its predictions.
    pub kkt_violation: f64,
}

impl OracleSvr {
    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter()
            .map(|row| {
                let z = self.scaler.transform(row);
                self.support
                    .iter()
                    .zip(&self.theta)
                    .map(|(sv, t)| t * rbf(sv, &z, self.gamma))
                    .sum::<f64>()
                    + self.bias
            })
            .collect()
    }
}

/// Projection of v onto {0 <= b <= C} intersected with {sum(first n) =
/// sum(last n)}: bisection on the multiplier of the equality constraint.
fn project(v: &[f64], n: usize, c: f64) -> Vec<f64> {
    let clip = |x: f64| x.clamp(0.0, c);
    let residual = |lambda: f64| -> f64 {
        let mut r = 0.0;
        for t in 0..2 * n {
            let sign = if t < n { 1.0 } else { -1.0 };
            r += sign * clip(v[t] - lambda * sign);
        }
        r
    };
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    (0..2 * n)
        .map(|t| {
            let sign = if t < n { 1.0 } else { -1.0 };
            clip(v[t] - lambda * sign)
        })
        .collect()
}

/// Solve the SVR dual for (theta, bias) by FISTA with restarts.
pub fn solve(x: &[Vec<f64>], y: &[f64], epsilon: f64, c: f64, gamma: Option<f64>) -> OracleSvr {
    let n = x.len();
    let d = x[0].len();
    let scaler = OracleScaler::fit(x);
    let z: Vec<Vec<f64>> = x.iter().map(|r| scaler.transform(r)).collect();
    let gamma = gamma.unwrap_or(1.0 / d as f64);
    let mut kernel = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            kernel[i][j] = rbf(&z[i], &z[j], gamma);
        }
    }
    // Linear term of the dual objective over beta = [alpha; alpha*].
    let p: Vec<f64> = (0..2 * n)
        .map(|t| {
            if t < n {
                epsilon - y[t]
            } else {
                epsilon + y[t - n]
            }
        })
        .collect();
    // grad = Q beta + p with Q = [[K, -K], [-K, K]].
    let grad = |beta: &[f64]| -> Vec<f64> {
        let theta: Vec<f64> = (0..n).map(|i| beta[i] - beta[n + i]).collect();
        let k_theta: Vec<f64> = (0..n)
            .map(|i| kernel[i].iter().zip(&theta).map(|(k, t)| k * t).sum())
            .collect();
        (0..2 * n)
            .map(|t| {
                let sign = if t < n { 1.0 } else { -1.0 };
                sign * k_theta[t % n] + p[t]
            })
            .collect()
    };
    let objective = |beta: &[f64]| -> f64 {
        let theta: Vec<f64> = (0..n).map(|i| beta[i] - beta[n + i]).collect();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += theta[i] * kernel[i][j] * theta[j];
            }
        }
        0.5 * quad + p.iter().zip(beta).map(|(pi, bi)| pi * bi).sum::<f64>()
    };
    // KKT violation in the usual max-violating-pair measure.
    let violation = |beta: &[f64], g: &[f64]| -> f64 {
        let at = |t: usize| if t < n { 1.0 } else { -1.0 };
        let mut up_max = f64::NEG_INFINITY;
        let mut low_min = f64::INFINITY;
        let edge = 1e-9;
        for t in 0..2 * n {
            let value = -at(t) * g[t];
            let up = (at(t) > 0.0 && beta[t] < c - edge) || (at(t) < 0.0 && beta[t] > edge);
            let low = (at(t) > 0.0 && beta[t] > edge) || (at(t) < 0.0 && beta[t] < c - edge);
            if up {
                up_max = up_max.max(value);
            }
            if low {
                low_min = low_min.min(value);
            }
        }
        (up_max - low_min).max(0.0)
    };

    // Lipschitz bound: for symmetric Q, lambda_max <= max row sum of |Q|.
    let lipschitz = 2.0
        * kernel
            .iter()
            .map(|row| row.iter().map(|k| k.abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
        + 1e-9;

    let mut beta = vec![0.0; 2 * n];
    let mut momentum = beta.clone();
    let mut t_k = 1.0f64;
    let mut best = beta.clone();
    let mut best_obj = objective(&beta);
    for iteration in 0..400_000usize {
        let g = grad(&momentum);
        let stepped: Vec<f64> = momentum
            .iter()
            .zip(&g)
            .map(|(m, gi)| m - gi / lipschitz)
            .collect();
        let next = project(&stepped, n, c);
        let moved: f64 = next
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
        momentum = next
            .iter()
            .zip(&beta)
            .map(|(cur, prev)| cur + (t_k - 1.0) / t_next * (cur - prev))
            .collect();
        t_k = t_next;
        beta = next;
        let obj = objective(&beta);
        if obj < best_obj {
            best_obj = obj;
            best = beta.clone();
        } else if obj > best_obj + 1e-9 {
            // Restart the momentum when the objective backslides.
            momentum = beta.clone();
            t_k = 1.0;
        }
        if moved < 1e-13 {
            break;
        }
        if iteration % 256 == 255 && violation(&beta, &grad(&beta)) < 1e-8 {
            break;
        }
    }
    let beta = best;
    let kkt_violation = violation(&beta, &grad(&beta));

    // Bias from the KKT conditions on free variables; fall back to the
    // feasible interval midpoint.
    let theta: Vec<f64> = (0..n).map(|i| beta[i] - beta[n + i]).collect();
    let f_no_bias: Vec<f64> = (0..n)
        .map(|i| kernel[i].iter().zip(&theta).map(|(k, t)| k * t).sum())
        .collect();
    let mut free = Vec::new();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let margin = 1e-7 * c.max(1.0);
    for i in 0..n {
        let s = y[i] - f_no_bias[i];
        let (alpha, alpha_star) = (beta[i], beta[n + i]);
        if alpha > margin && alpha < c - margin {
            free.push(s - epsilon);
        }
        if alpha_star > margin && alpha_star < c - margin {
            free.push(s + epsilon);
        }
        if alpha <= margin {
            lower = lower.max(s - epsilon);
        }
        if alpha >= c - margin {
            upper = upper.min(s - epsilon);
        }
        if alpha_star <= margin {
            upper = upper.min(s + epsilon);
        }
        if alpha_star >= c - margin {
            lower = lower.max(s + epsilon);
        }
    }
    let bias = if !free.is_empty() {
        free.iter().sum::<f64>() / free.len() as f64
    } else {
        0.5 * (lower + upper)
    };

    OracleSvr {
        support: z,
        theta,
        bias,
        gamma,
        scaler,
        kkt_violation,
    }
}
