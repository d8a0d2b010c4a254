//! Entropic regularization solved by log-domain matrix scaling.
//!
//! The plan is `π_ij = exp((c_ij - h_i - g_j) / ε)`; alternating updates of
//! `h` and `g` fit the row and column marginals.

use crate::cone::Measure;
use crate::config::Tolerances;
use crate::error::{Error, Result};

use super::{dual_value, primal_value, CostMatrix, TransportSolution};

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + values.map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Approximate maximal coupling with regularization strength `eps_reg`.
///
/// Stops when the L1 row-marginal error is at most `1e-8`.
pub fn solve_entropic(
    mu: &impl Measure,
    nu: &impl Measure,
    eps_reg: f64,
    max_iter: usize,
    tol: &Tolerances,
) -> Result<TransportSolution> {
    if !(eps_reg > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "regularization {eps_reg} must be positive"
        )));
    }
    let cost = CostMatrix::from_measures(mu, nu, tol)?;
    let (a, b) = (mu.weights(), nu.weights());
    let (m, n) = (a.len(), b.len());
    let (la, lb): (Vec<f64>, Vec<f64>) = (a.iter().map(|x| x.ln()).collect(), b.iter().map(|x| x.ln()).collect());
    let mut h = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut err = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        for i in 0..m {
            h[i] = eps_reg * (log_sum_exp((0..n).map(|j| (cost.get(i, j) - g[j]) / eps_reg)) - la[i]);
        }
        for j in 0..n {
            g[j] = eps_reg * (log_sum_exp((0..m).map(|i| (cost.get(i, j) - h[i]) / eps_reg)) - lb[j]);
        }
        err = (0..m)
            .map(|i| {
                let row: f64 = (0..n)
                    .map(|j| ((cost.get(i, j) - h[i] - g[j]) / eps_reg).exp())
                    .sum();
                (row - a[i]).abs()
            })
            .sum();
        if err <= 1e-8 {
            break;
        }
    }
    if err > 1e-8 {
        return Err(Error::NoConvergence {
            iterations,
            residual: err,
        });
    }
    let t = g[0];
    for x in &mut g {
        *x -= t;
    }
    for x in &mut h {
        *x += t;
    }
    let plan: Vec<(usize, usize, f64)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, ((cost.get(i, j) - h[i] - g[j]) / eps_reg).exp()))
        .filter(|p| p.2 > 0.0)
        .collect();
    let primal = primal_value(&plan, &cost);
    let dual = dual_value(&h, &g, a, b);
    Ok(TransportSolution {
        plan,
        h,
        g,
        primal,
        dual,
        basis: Vec::new(),
        iterations,
    })
}
