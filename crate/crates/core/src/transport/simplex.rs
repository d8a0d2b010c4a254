//! Transportation simplex for the maximization problem.
//!
//! Northwest-corner start, MODI pricing and Bland's rule on both the entering
//! and the leaving cell, which rules out cycling on degenerate bases without
//! perturbing the supplies.

use std::collections::VecDeque;

use super::CostMatrix;

pub(crate) struct SimplexResult {
    pub plan: Vec<(usize, usize, f64)>,
    pub basis: Vec<(usize, usize)>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub pivots: usize,
}

/// Spanning tree of basic cells on the bipartite graph rows ∪ columns.
/// Node `i < m` is row `i`, node `m + j` is column `j`.
struct Tree {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
}

impl Tree {
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.m + j, k));
            adj[self.m + j].push((i, k));
        }
        adj
    }

    /// Potentials with `h_i + g_j = c_ij` on basic cells and `g_0 = 0`.
    fn potentials(&self, adj: &[Vec<(usize, usize)>], cost: &CostMatrix) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        pot[m] = 0.0;
        let mut queue = VecDeque::from([m]);
        while let Some(x) = queue.pop_front() {
            for &(y, k) in &adj[x] {
                if pot[y].is_nan() {
                    let (i, j) = self.cells[k];
                    pot[y] = cost.get(i, j) - pot[x];
                    queue.push_back(y);
                }
            }
        }
        (pot[..m].to_vec(), pot[m..].to_vec())
    }

    /// Cell indices on the tree path from column node `m + j` to row node `i`.
    fn path(&self, adj: &[Vec<(usize, usize)>], i: usize, j: usize) -> Vec<usize> {
        let start = self.m + j;
        let mut via = vec![usize::MAX; self.m + self.n];
        let mut from = vec![usize::MAX; self.m + self.n];
        from[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            if x == i {
                break;
            }
            for &(y, k) in &adj[x] {
                if from[y] == usize::MAX {
                    from[y] = x;
                    via[y] = k;
                    queue.push_back(y);
                }
            }
        }
        let mut cells = Vec::new();
        let mut x = i;
        while x != start {
            cells.push(via[x]);
            x = from[x];
        }
        cells.reverse();
        cells
    }

    /// Recomputes flows from the marginals alone by peeling leaves.
    fn exact_flows(&mut self, supply: &[f64], demand: &[f64]) {
        let (m, n) = (self.m, self.n);
        let mut rest: Vec<f64> = supply.iter().chain(demand).copied().collect();
        let mut degree = vec![0usize; m + n];
        let adj = self.adjacency();
        for x in 0..m + n {
            degree[x] = adj[x].len();
        }
        let mut done = vec![false; self.cells.len()];
        let mut stack: Vec<usize> = (0..m + n).filter(|&x| degree[x] == 1).collect();
        while let Some(x) = stack.pop() {
            if degree[x] != 1 {
                continue;
            }
            let Some(&(y, k)) = adj[x].iter().find(|(_, k)| !done[*k]) else {
                continue;
            };
            let f = rest[x].max(0.0);
            self.flow[k] = f;
            done[k] = true;
            rest[x] = 0.0;
            rest[y] -= f;
            degree[x] -= 1;
            degree[y] -= 1;
            if degree[y] == 1 {
                stack.push(y);
            }
        }
    }
}

pub(crate) fn transport_simplex(supply: &[f64], demand: &[f64], cost: &CostMatrix) -> SimplexResult {
    let (m, n) = (supply.len(), demand.len());
    // Rescale demand so that both sides have the same total.
    let (sa, sb): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    let demand: Vec<f64> = if sb > 0.0 {
        demand.iter().map(|d| d * (sa / sb)).collect()
    } else {
        demand.to_vec()
    };

    // Northwest corner.
    let mut tree = Tree {
        m,
        n,
        cells: Vec::with_capacity(m + n - 1),
        flow: Vec::with_capacity(m + n - 1),
    };
    let (mut s, mut d) = (supply.to_vec(), demand.clone());
    let (mut i, mut j) = (0, 0);
    loop {
        let x = s[i].min(d[j]).max(0.0);
        tree.cells.push((i, j));
        tree.flow.push(x);
        s[i] -= x;
        d[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    tree.exact_flows(supply, &demand);

    let mut pivots = 0;
    let scale = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| cost.get(i, j).abs())
        .fold(1.0, f64::max);
    let enter_tol = 1e-13 * scale;
    let mut in_basis = vec![false; m * n];
    for &(i, j) in &tree.cells {
        in_basis[i * n + j] = true;
    }
    loop {
        let adj = tree.adjacency();
        let (h, g) = tree.potentials(&adj, cost);
        // Bland: first cell in row-major order with positive reduced profit.
        let entering = (0..m * n).find(|&k| {
            let (i, j) = (k / n, k % n);
            !in_basis[k] && cost.get(i, j) - h[i] - g[j] > enter_tol
        });
        let Some(k) = entering else {
            break;
        };
        let (ei, ej) = (k / n, k % n);
        let path = tree.path(&adj, ei, ej);
        // Path cells alternate -, +, -, ... starting at column ej.
        let minus: Vec<usize> = path.iter().step_by(2).copied().collect();
        let theta = minus
            .iter()
            .map(|&c| tree.flow[c])
            .fold(f64::INFINITY, f64::min);
        let leaving = minus
            .iter()
            .copied()
            .filter(|&c| tree.flow[c] <= theta)
            .min_by_key(|&c| {
                let (i, j) = tree.cells[c];
                i * n + j
            })
            .expect("cycle has a decreasing cell");
        for (t, &c) in path.iter().enumerate() {
            if t % 2 == 0 {
                tree.flow[c] -= theta;
            } else {
                tree.flow[c] += theta;
            }
        }
        let (li, lj) = tree.cells[leaving];
        in_basis[li * n + lj] = false;
        in_basis[k] = true;
        tree.cells[leaving] = (ei, ej);
        tree.flow[leaving] = theta;
        pivots += 1;
    }

    tree.exact_flows(supply, &demand);
    let adj = tree.adjacency();
    let (h, g) = tree.potentials(&adj, cost);
    let mut plan: Vec<(usize, usize, f64)> = tree
        .cells
        .iter()
        .zip(&tree.flow)
        .filter(|(_, f)| **f > 0.0)
        .map(|(&(i, j), &f)| (i, j, f))
        .collect();
    plan.sort_by_key(|&(i, j, _)| i * n + j);
    let mut basis = tree.cells.clone();
    basis.sort_by_key(|&(i, j)| i * n + j);
    SimplexResult {
        plan,
        basis,
        h,
        g,
        pivots,
    }
}
