//! Discrete Kantorovich problem for the cost `c(u, v) = -log|<u, v>|`.
//!
//! The coupling maximizes `sum π_ij c_ij`; its dual minimizes
//! `sum a_i h_i + sum b_j g_j` subject to `h_i + g_j >= c_ij`.

mod entropic;
mod enumerate;
mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{Cap, Direction, Measure};
use crate::config::Tolerances;
use crate::error::{Error, Result};

pub use entropic::solve_entropic;
pub use enumerate::{enumerate_bases, EnumerationResult};
pub(crate) use simplex::transport_simplex;

/// Largest number of atoms on either side accepted by the exact solver.
pub const SIZE_LIMIT: usize = 4096;

/// `-log|<u, v>|` for `u` in the dual cap and `v` in the primal cap.
pub fn cost(u: &Direction, v: &Direction, tol: &Tolerances) -> Result<f64> {
    if u.cap() != Cap::OmegaCdual || v.cap() != Cap::OmegaC {
        return Err(Error::DirectionOutsideCap {
            coords: u.to_vec(),
            cap: Cap::OmegaCdual.name(),
            margin: f64::NAN,
        });
    }
    cost_of_dot(u.coords().dot(v.coords()), tol)
}

pub(crate) fn cost_of_dot(dot: f64, tol: &Tolerances) -> Result<f64> {
    let d = dot.abs();
    if d < tol.eps_pair {
        return Err(Error::NearOrthogonalPair {
            dot: d,
            eps_pair: tol.eps_pair,
        });
    }
    Ok((-d.ln()).max(0.0))
}

/// Dense row-major cost matrix, rows indexed by `μ`-atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_measures(mu: &impl Measure, nu: &impl Measure, tol: &Tolerances) -> Result<Self> {
        let (us, vs) = (mu.atoms(), nu.atoms());
        let data = us
            .par_iter()
            .map(|u| vs.iter().map(|v| cost(u, v, tol)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?
            .concat();
        Ok(Self {
            rows: us.len(),
            cols: vs.len(),
            data,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// An optimal (or approximate, for the entropic solver) coupling with dual
/// potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSolution {
    /// Nonzero plan entries `(i, j, mass)` in row-major order.
    pub plan: Vec<(usize, usize, f64)>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    /// Primal value `S`.
    pub primal: f64,
    /// Dual value `I`.
    pub dual: f64,
    /// Basic cells of the final simplex basis (empty for the entropic solver).
    pub basis: Vec<(usize, usize)>,
    pub iterations: usize,
}

impl TransportSolution {
    pub fn gap(&self) -> f64 {
        (self.primal - self.dual).abs()
    }

    pub fn relative_gap(&self) -> f64 {
        self.gap() / self.primal.abs().max(1.0)
    }

    pub fn dense_plan(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.g.len()]; self.h.len()];
        for &(i, j, p) in &self.plan {
            out[i][j] += p;
        }
        out
    }
}

/// `sum π_ij c_ij`.
pub fn primal_value(plan: &[(usize, usize, f64)], cost: &CostMatrix) -> f64 {
    plan.iter().map(|&(i, j, p)| p * cost.get(i, j)).sum()
}

/// `sum a_i h_i + sum b_j g_j`.
pub fn dual_value(h: &[f64], g: &[f64], a: &[f64], b: &[f64]) -> f64 {
    h.iter().zip(a).map(|(x, w)| x * w).sum::<f64>() + g.iter().zip(b).map(|(x, w)| x * w).sum::<f64>()
}

/// A balanced transport problem on raw weights.
#[derive(Debug, Clone)]
pub struct TransportProblem {
    pub supply: Vec<f64>,
    pub demand: Vec<f64>,
    pub cost: CostMatrix,
}

impl TransportProblem {
    pub fn new(supply: Vec<f64>, demand: Vec<f64>, cost: CostMatrix) -> Result<Self> {
        if supply.len() != cost.rows() || demand.len() != cost.cols() {
            return Err(Error::DimensionMismatch {
                expected: cost.rows(),
                got: supply.len(),
            });
        }
        let largest = supply.len().max(demand.len());
        if largest > SIZE_LIMIT {
            return Err(Error::SizeLimit {
                got: largest,
                limit: SIZE_LIMIT,
            });
        }
        if let Some(w) = supply.iter().chain(&demand).find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::DegenerateInput(format!("atom weight {w} is not positive")));
        }
        let (sa, sb): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
        if (sa - sb).abs() > 1e-10 * sa.max(sb) {
            return Err(Error::DegenerateInput(format!(
                "total masses differ: {sa} vs {sb}"
            )));
        }
        Ok(Self { supply, demand, cost })
    }

    /// Exact maximal coupling by the transportation simplex.
    pub fn solve(&self) -> TransportSolution {
        let res = transport_simplex(&self.supply, &self.demand, &self.cost);
        let (h, g) = balance_potentials(&res.plan, res.h, res.g, &self.cost);
        let primal = primal_value(&res.plan, &self.cost);
        let dual = dual_value(&h, &g, &self.supply, &self.demand);
        TransportSolution {
            plan: res.plan,
            h,
            g,
            primal,
            dual,
            basis: res.basis,
            iterations: res.pivots,
        }
    }
}

/// Exact maximal coupling between two discrete measures.
pub fn solve_max_transport(
    mu: &impl Measure,
    nu: &impl Measure,
    tol: &Tolerances,
) -> Result<TransportSolution> {
    let largest = mu.len().max(nu.len());
    if largest > SIZE_LIMIT {
        return Err(Error::SizeLimit {
            got: largest,
            limit: SIZE_LIMIT,
        });
    }
    let cost = CostMatrix::from_measures(mu, nu, tol)?;
    let problem = TransportProblem::new(mu.weights().to_vec(), nu.weights().to_vec(), cost)?;
    Ok(problem.solve())
}

/// Re-centres optimal potentials between the components of the plan support.
///
/// Potentials are unique only up to a shift `h += s, g -= s` on each connected
/// component of the support graph. The shifts are chosen to maximize the
/// smallest slack `h_i + g_j - c_ij` between different components, which
/// makes the result independent of which degenerate basis the simplex ended
/// on and symmetric on symmetric inputs.
fn balance_potentials(
    plan: &[(usize, usize, f64)],
    mut h: Vec<f64>,
    mut g: Vec<f64>,
    cost: &CostMatrix,
) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (h.len(), g.len());
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for &(i, j, _) in plan {
        let (a, b) = (find(&mut parent, i), find(&mut parent, m + j));
        if a != b {
            parent[a] = b;
        }
    }
    let mut label = vec![usize::MAX; m + n];
    let mut count = 0;
    for x in 0..m + n {
        let r = find(&mut parent, x);
        if label[r] == usize::MAX {
            label[r] = count;
            count += 1;
        }
        label[x] = label[r];
    }
    if count < 2 || count > 128 {
        return gauge(h, g);
    }
    // r[a][b]: smallest slack from a row of component a to a column of b.
    let mut r = vec![vec![f64::INFINITY; count]; count];
    for i in 0..m {
        for j in 0..n {
            let (a, b) = (label[i], label[m + j]);
            if a != b {
                let s = h[i] + g[j] - cost.get(i, j);
                if s < r[a][b] {
                    r[a][b] = s;
                }
            }
        }
    }
    // Shifts s with s_b - s_a <= r[a][b] - delta; feasible iff no negative cycle.
    let shifts_for = |delta: f64| -> Option<Vec<f64>> {
        let mut dist = vec![0.0; count];
        for round in 0..=count {
            let mut changed = false;
            for a in 0..count {
                for b in 0..count {
                    if a != b && r[a][b].is_finite() {
                        let cand = dist[a] + r[a][b] - delta;
                        if cand < dist[b] - 1e-15 {
                            dist[b] = cand;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return Some(dist);
            }
            if round == count {
                return None;
            }
        }
        None
    };
    let lo0 = r
        .iter()
        .flatten()
        .copied()
        .filter(|x| x.is_finite())
        .fold(f64::INFINITY, f64::min);
    let mut hi = f64::INFINITY;
    for a in 0..count {
        for b in a + 1..count {
            if r[a][b].is_finite() && r[b][a].is_finite() {
                hi = hi.min(0.5 * (r[a][b] + r[b][a]));
            }
        }
    }
    if !lo0.is_finite() || !hi.is_finite() {
        return gauge(h, g);
    }
    let mut lo = lo0.max(0.0);
    for _ in 0..100 {
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if shifts_for(mid).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if let Some(s) = shifts_for(lo) {
        for i in 0..m {
            h[i] += s[label[i]];
        }
        for j in 0..n {
            g[j] -= s[label[m + j]];
        }
    }
    gauge(h, g)
}

/// Shifts potentials so that `g_0 = 0`.
fn gauge(mut h: Vec<f64>, mut g: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    if let Some(&t) = g.first() {
        for x in &mut g {
            *x -= t;
        }
        for x in &mut h {
            *x += t;
        }
    }
    (h, g)
}
