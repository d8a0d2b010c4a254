//! Brute-force enumeration of the basic solutions of a small transportation
//! polytope, used as an oracle for the simplex.
//!
//! Every set of `m + n - 1` cells is tried; dense linear algebra (not tree
//! walks) produces the primal flows and the dual potentials of each basis.

use nalgebra::{DMatrix, DVector};

use crate::cone::for_each_subset;
use crate::error::{Error, Result};

use super::CostMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationResult {
    /// Largest objective over primal-feasible bases.
    pub primal: f64,
    pub plan: Vec<Vec<f64>>,
    /// Smallest dual objective over dual-feasible bases.
    pub dual: f64,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub bases_checked: usize,
}

/// Enumerates all bases of an instance with at most 3 atoms per side.
pub fn enumerate_bases(supply: &[f64], demand: &[f64], cost: &CostMatrix) -> Result<EnumerationResult> {
    let (m, n) = (supply.len(), demand.len());
    if m > 3 || n > 3 {
        return Err(Error::SizeLimit {
            got: m.max(n),
            limit: 3,
        });
    }
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let mut best_primal = f64::NEG_INFINITY;
    let mut best_plan = vec![vec![0.0; n]; m];
    let mut best_dual = f64::INFINITY;
    let mut best_pot = (vec![0.0; m], vec![0.0; n]);
    let mut checked = 0;

    for_each_subset(cells.len(), k, |subset| {
        let chosen: Vec<(usize, usize)> = subset.iter().map(|&s| cells[s]).collect();
        // Flow equations: rows then columns; one is redundant.
        let a = DMatrix::from_fn(m + n, k, |r, c| {
            let (i, j) = chosen[c];
            if (r < m && r == i) || (r >= m && r - m == j) { 1.0 } else { 0.0 }
        });
        if a.rank(1e-9) < k {
            return;
        }
        checked += 1;
        let rhs = DVector::from_iterator(m + n, supply.iter().chain(demand).copied());
        let svd = a.clone().svd(true, true);
        if let Ok(x) = svd.solve(&rhs, 1e-12) {
            if (&a * &x - &rhs).amax() < 1e-12 && x.iter().all(|v| *v >= -1e-14) {
                let value: f64 = chosen.iter().zip(x.iter()).map(|(&(i, j), f)| f * cost.get(i, j)).sum();
                if value > best_primal {
                    best_primal = value;
                    best_plan = vec![vec![0.0; n]; m];
                    for (&(i, j), f) in chosen.iter().zip(x.iter()) {
                        best_plan[i][j] = f.max(0.0);
                    }
                }
            }
        }
        // Potentials: h_i + g_j = c_ij on the basis, g_0 = 0.
        let p = DMatrix::from_fn(k + 1, m + n, |r, c| {
            if r == k {
                return if c == m { 1.0 } else { 0.0 };
            }
            let (i, j) = chosen[r];
            if c == i || c == m + j { 1.0 } else { 0.0 }
        });
        let q = DVector::from_iterator(k + 1, chosen.iter().map(|&(i, j)| cost.get(i, j)).chain([0.0]));
        let Some(pot) = p.clone().lu().solve(&q).or_else(|| p.svd(true, true).solve(&q, 1e-12).ok()) else {
            return;
        };
        let (h, g) = (pot.rows(0, m), pot.rows(m, n));
        let feasible = (0..m).all(|i| (0..n).all(|j| h[i] + g[j] >= cost.get(i, j) - 1e-12));
        if feasible {
            let value = h.iter().zip(supply).map(|(x, w)| x * w).sum::<f64>()
                + g.iter().zip(demand).map(|(x, w)| x * w).sum::<f64>();
            if value < best_dual {
                best_dual = value;
                best_pot = (h.iter().copied().collect(), g.iter().copied().collect());
            }
        }
    });

    Ok(EnumerationResult {
        primal: best_primal,
        plan: best_plan,
        dual: best_dual,
        h: best_pot.0,
        g: best_pot.1,
        bases_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_by_hand() {
        // one-parameter family pi(t) = [[t, a-t], [b-t, ...]]
        let cost = CostMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let r = enumerate_bases(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert!((r.primal - 1.0).abs() < 1e-15);
        assert!((r.dual - 1.0).abs() < 1e-12);
        assert!((r.plan[0][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_large_instances() {
        let cost = CostMatrix::from_rows(vec![vec![0.0; 4]; 1]);
        assert!(enumerate_bases(&[1.0], &[0.25; 4], &cost).is_err());
    }
}
