//! Maximization of `exp φ(s, Q, ·)` over the probability simplex.

use serde::{Deserialize, Serialize};

use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::infofunc::{Distribution, Kernel};

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut p: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizerConfig {
    /// Stop once the projected-gradient residual falls to this level.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MaximizerConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 100_000,
        }
    }
}

/// Maximizer of `exp φ(s, Q, ·)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizerResult {
    pub p_opt: Distribution,
    /// `φ(s, Q, p_opt)` in nats.
    pub value: f64,
    pub iterations: usize,
    /// `‖P − Π(P + ∇)‖₂` at termination.
    pub residual: f64,
}

fn residual(p: &[f64], grad: &[f64]) -> f64 {
    let moved: Vec<f64> = p.iter().zip(grad).map(|(x, g)| x + g).collect();
    project_to_simplex(&moved)
        .iter()
        .zip(p)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Solves `a x = b` by Gaussian elimination with full pivoting. Pivots below
/// `1e-13` of the largest are treated as zero and their unknowns set to 0.
fn solve_basic(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    let mut cols: Vec<usize> = (0..n).collect();
    let largest = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut rank = 0;
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, x) in row.iter().enumerate().skip(k) {
                if x.abs() > best {
                    (pr, pc, best) = (i, j, x.abs());
                }
            }
        }
        if best <= 1e-13 * largest {
            break;
        }
        a.swap(k, pr);
        b.swap(k, pr);
        for row in a.iter_mut() {
            row.swap(k, pc);
        }
        cols.swap(k, pc);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        rank += 1;
    }
    let mut y = vec![0.0; n];
    for k in (0..rank).rev() {
        let tail: f64 = (k + 1..rank).map(|j| a[k][j] * y[j]).sum();
        y[k] = (b[k] - tail) / a[k][k];
    }
    let mut x = vec![0.0; n];
    for (k, &c) in cols.iter().enumerate() {
        x[c] = y[k];
    }
    x
}

struct Iterate {
    p: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
    residual: f64,
}

/// Projected gradient ascent on the concave `exp φ`, finished by Newton steps
/// on the active face.
pub fn max_phi_on_kernel(kernel: &Kernel, s: f64, config: &MaximizerConfig) -> Result<MaximizerResult> {
    let dims = kernel.input_size();
    let eval = |p: Vec<f64>| -> Result<Iterate> {
        let (value, grad) = kernel.exp_phi_with_gradient(s, &Distribution::from_simplex_point(p.clone()))?;
        let residual = residual(&p, &grad);
        Ok(Iterate { p, value, grad, residual })
    };
    let finish = |it: Iterate, iterations: usize| MaximizerResult {
        p_opt: Distribution::from_simplex_point(it.p),
        value: it.value.ln(),
        iterations,
        residual: it.residual,
    };
    let mut cur = eval(vec![1.0 / dims as f64; dims])?;
    let mut step = 1.0;
    let mut iterations = 0;
    'ascent: while iterations < config.max_iterations {
        if cur.residual <= config.tolerance || dims == 1 {
            return Ok(finish(cur, iterations));
        }
        iterations += 1;
        loop {
            let moved: Vec<f64> = cur.p.iter().zip(&cur.grad).map(|(x, g)| x + step * g).collect();
            let cand = eval(project_to_simplex(&moved))?;
            // By concavity a nonnegative slope at the candidate means no overshoot.
            // The mean is removed since the displacement sums to zero.
            let mean = cand.grad.iter().sum::<f64>() / dims as f64;
            let slope: f64 = cand.grad.iter().zip(cand.p.iter().zip(&cur.p)).map(|(g, (c, x))| (g - mean) * (c - x)).sum();
            if slope >= 0.0 {
                cur = cand;
                step = (step * 2.0).min(1e6);
                break;
            }
            step *= 0.5;
            if step < 1e-30 {
                break 'ascent;
            }
        }
    }

    for _ in 0..50 {
        if cur.residual <= config.tolerance {
            return Ok(finish(cur, iterations));
        }
        iterations += 1;
        let support: Vec<usize> = (0..dims).filter(|&t| cur.p[t] > 0.0).collect();
        let m = support.len();
        let hessian = kernel.exp_phi_hessian(s, &Distribution::from_simplex_point(cur.p.clone()), &support)?;
        let mut system = vec![vec![0.0; m + 1]; m + 1];
        let mut rhs = vec![0.0; m + 1];
        for i in 0..m {
            system[i][..m].copy_from_slice(&hessian[i]);
            system[i][m] = 1.0;
            system[m][i] = 1.0;
            rhs[i] = -cur.grad[support[i]];
        }
        let sol = solve_basic(system, rhs);
        let mut direction = vec![0.0; dims];
        for (i, &t) in support.iter().enumerate() {
            direction[t] = sol[i];
        }
        let mut damping = 1.0;
        loop {
            let moved: Vec<f64> = cur.p.iter().zip(&direction).map(|(x, d)| x + damping * d).collect();
            let cand = eval(project_to_simplex(&moved))?;
            if cand.residual < cur.residual {
                cur = cand;
                break;
            }
            damping *= 0.5;
            if damping < 1e-12 {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: cur.residual,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations,
        residual: cur.residual,
    })
}

/// `max_P exp φ(s, Q, P)` for `0 < s <= 1/2`.
pub fn max_phi_over_p(s: f64, ch: &Channel) -> Result<MaximizerResult> {
    max_phi_on_kernel(&Kernel::from_channel(ch)?, s, &MaximizerConfig::default())
}
