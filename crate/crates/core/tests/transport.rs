mod common;

use common::Gen;
use proptest::prelude::*;
use pseudocone::transport::{dual_value, enumerate_bases, primal_value, CostMatrix, TransportProblem};
use pseudocone::{Cap, Measure};

/// Cost matrix of random atoms on a random cone.
fn costs(g: &mut Gen, dim: usize, m: usize, n: usize) -> CostMatrix {
    let cone = g.cone(dim);
    let mu = g.measure(&cone, Cap::OmegaCdual, m);
    let nu = g.measure(&cone, Cap::OmegaC, n);
    CostMatrix::from_measures(&mu, &nu, &g.tol).unwrap()
}

/// Weights drawn from {1/4, 1/2, 3/4, 1} with equal totals on both sides.
fn quarter_weights(g: &mut Gen, m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    loop {
        let mut draw = |k: usize| (0..k).map(|_| g.index(1, 4) as f64 / 4.0).collect::<Vec<f64>>();
        let (a, b) = (draw(m), draw(n));
        if (a.iter().sum::<f64>() - b.iter().sum::<f64>()).abs() < 1e-15 {
            return (a, b);
        }
    }
}

fn dense(plan: &[(usize, usize, f64)], m: usize, n: usize) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; n]; m];
    for &(i, j, x) in plan {
        p[i][j] += x;
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_pair_is_feasible_and_complementary(seed in any::<u64>(), dim in 2usize..=3, m in 1usize..=20, n in 1usize..=20) {
        let mut g = Gen::new(seed);
        let c = costs(&mut g, dim, m, n);
        let (a, b) = (g.weights(m), g.weights(n));
        let sol = TransportProblem::new(a.clone(), b.clone(), c.clone()).unwrap().solve();
        let scale = 1.0 + (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| c.get(i, j).abs()).fold(0.0, f64::max);
        let p = dense(&sol.plan, m, n);
        for i in 0..m {
            prop_assert!((p[i].iter().sum::<f64>() - a[i]).abs() <= 1e-12);
            for j in 0..n {
                prop_assert!(p[i][j] >= 0.0);
                prop_assert!(sol.h[i] + sol.g[j] >= c.get(i, j) - 1e-9 * scale);
                if p[i][j] > 1e-12 {
                    prop_assert!((sol.h[i] + sol.g[j] - c.get(i, j)).abs() <= 1e-9 * scale);
                }
            }
        }
        for j in 0..n {
            prop_assert!(((0..m).map(|i| p[i][j]).sum::<f64>() - b[j]).abs() <= 1e-12);
        }
        prop_assert_eq!(sol.g[0], 0.0);
        prop_assert!((sol.primal - sol.dual).abs() <= 1e-9 * sol.primal.abs().max(1.0));
    }

    /// Any coupling is below any dual-feasible pair.
    #[test]
    fn weak_duality(seed in any::<u64>(), dim in 2usize..=3, m in 1usize..=8, n in 1usize..=8) {
        let mut g = Gen::new(seed);
        let c = costs(&mut g, dim, m, n);
        let (a, b) = (g.weights(m), g.weights(n));
        // product coupling and the optimal plan are both feasible
        let product: Vec<(usize, usize, f64)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, a[i] * b[j])).collect();
        let sol = TransportProblem::new(a.clone(), b.clone(), c.clone()).unwrap().solve();
        // c-transform pairs of random potentials are dual-feasible
        for _ in 0..5 {
            let gv: Vec<f64> = (0..n).map(|_| g.uniform(-2.0, 2.0)).collect();
            let hv: Vec<f64> = (0..m).map(|i| (0..n).map(|j| c.get(i, j) - gv[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
            let upper = dual_value(&hv, &gv, &a, &b);
            prop_assert!(primal_value(&product, &c) <= upper + 1e-12);
            prop_assert!(primal_value(&sol.plan, &c) <= upper + 1e-12);
        }
    }

    #[test]
    fn simplex_matches_enumeration(seed in any::<u64>(), dim in 2usize..=3, m in 1usize..=3, n in 1usize..=3) {
        let mut g = Gen::new(seed);
        let c = costs(&mut g, dim, m, n);
        let (a, b) = quarter_weights(&mut g, m, n);
        let sol = TransportProblem::new(a.clone(), b.clone(), c.clone()).unwrap().solve();
        let oracle = enumerate_bases(&a, &b, &c).unwrap();
        prop_assert!((sol.primal - oracle.primal).abs() <= 1e-10, "{} vs {}", sol.primal, oracle.primal);
    }

    #[test]
    fn permuting_atoms_permutes_the_plan(seed in any::<u64>(), dim in 2usize..=3, m in 1usize..=10, n in 1usize..=10) {
        let mut g = Gen::new(seed);
        let c = costs(&mut g, dim, m, n);
        let (a, b) = (g.weights(m), g.weights(n));
        let rows: Vec<usize> = (0..m).rev().collect();
        let mut cols: Vec<usize> = (0..n).collect();
        cols.rotate_left(n / 2);
        let pc = CostMatrix::from_rows(rows.iter().map(|&i| cols.iter().map(|&j| c.get(i, j)).collect()).collect());
        let pa: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
        let pb: Vec<f64> = cols.iter().map(|&j| b[j]).collect();
        let base = TransportProblem::new(a, b, c).unwrap().solve();
        let perm = TransportProblem::new(pa, pb, pc).unwrap().solve();
        prop_assert!((base.primal - perm.primal).abs() <= 1e-12 * base.primal.abs().max(1.0));
        // the optimum is generically unique, so the plans agree entrywise
        let (p, q) = (dense(&base.plan, m, n), dense(&perm.plan, m, n));
        for (pi, &i) in rows.iter().enumerate() {
            for (pj, &j) in cols.iter().enumerate() {
                prop_assert!((q[pi][pj] - p[i][j]).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn strong_duality_on_two_hundred_instances() {
    let mut g = Gen::new(31);
    for k in 0..200 {
        let (m, n) = (g.index(1, 20), g.index(1, 20));
        let c = costs(&mut g, 2 + k % 2, m, n);
        let (a, b) = (g.weights(m), g.weights(n));
        let sol = TransportProblem::new(a, b, c).unwrap().solve();
        assert!((sol.primal - sol.dual).abs() <= 1e-9 * sol.primal.abs().max(1.0));
    }
}

#[test]
fn measures_and_costs_line_up() {
    let mut g = Gen::new(32);
    let cone = g.cone(2);
    let mu = g.measure(&cone, Cap::OmegaCdual, 3);
    let nu = g.measure(&cone, Cap::OmegaC, 4);
    let c = CostMatrix::from_measures(&mu, &nu, &g.tol).unwrap();
    for (i, u) in mu.atoms().iter().enumerate() {
        for (j, v) in nu.atoms().iter().enumerate() {
            assert_eq!(c.get(i, j), -u.dot(v).abs().ln());
        }
    }
}
