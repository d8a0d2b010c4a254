mod common;

use common::Gen;
use proptest::prelude::*;
use pseudocone::semidiscrete::{
    cell_masses, dual_objective, solve_semidiscrete, verify_pushforward, DualPoint, SemiDiscreteOptions, SemiDiscreteProblem,
};
use pseudocone::{fixtures, Cap, DiscreteMeasure, Measure, PolyhedralCone, QuadratureMeasure};

fn instance(g: &mut Gen, dim: usize, m: usize, nodes: usize) -> (PolyhedralCone, QuadratureMeasure, DiscreteMeasure) {
    let cone = g.cone(dim);
    let nu = g.measure(&cone, Cap::OmegaC, m);
    let mu = cone.cap_quadrature(Cap::OmegaCdual, nodes, 0, &g.tol).unwrap();
    (cone, mu, nu)
}

fn potentials(g: &mut Gen, m: usize) -> Vec<f64> {
    (0..m).map(|_| g.uniform(-0.5, 0.5)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn objective_is_midpoint_convex(seed in any::<u64>(), dim in 2usize..=3, m in 2usize..=6) {
        let mut g = Gen::new(seed);
        let (_, mu, nu) = instance(&mut g, dim, m, 500);
        let p = SemiDiscreteProblem::new(&mu, &nu, g.tol).unwrap();
        for _ in 0..100 {
            let (a, b) = (potentials(&mut g, m), potentials(&mut g, m));
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            prop_assert!(p.objective(&mid) <= 0.5 * (p.objective(&a) + p.objective(&b)) + 1e-12);
        }
    }

    #[test]
    fn constant_shifts_change_nothing(seed in any::<u64>(), dim in 2usize..=3, m in 1usize..=6) {
        let mut g = Gen::new(seed);
        let (_, mu, nu) = instance(&mut g, dim, m, 500);
        let base = potentials(&mut g, m);
        let j0 = dual_objective(&DualPoint { g: base.clone() }, &mu, &nu, &g.tol).unwrap();
        let c0 = cell_masses(&DualPoint { g: base.clone() }, &mu, &nu, &g.tol).unwrap();
        for t in [-3.0, 1.0, 7.0] {
            let shifted = DualPoint { g: base.iter().map(|x| x + t).collect() };
            let j = dual_objective(&shifted, &mu, &nu, &g.tol).unwrap();
            prop_assert!((j - j0).abs() <= 1e-12 * j0.abs().max(1.0));
            let c = cell_masses(&shifted, &mu, &nu, &g.tol).unwrap();
            // the shift is exact in the cost differences only up to rounding,
            // so compare the cell assignment masses to rounding
            for (a, b) in c.lowest_index_masses.iter().zip(&c0.lowest_index_masses) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn subgradient_is_the_derivative_away_from_ties(seed in any::<u64>(), dim in 2usize..=3, m in 2usize..=6) {
        let mut g = Gen::new(seed);
        let (_, mu, nu) = instance(&mut g, dim, m, 400);
        let p = SemiDiscreteProblem::new(&mu, &nu, g.tol).unwrap();
        let x = potentials(&mut g, m);
        let step = 1e-6;
        let cells = p.cells(&x).unwrap();
        prop_assume!(cells.tie_nodes == 0);
        for j in 0..m {
            let (mut up, mut down) = (x.clone(), x.clone());
            up[j] += step;
            down[j] -= step;
            // the assignment must not change inside the difference stencil
            prop_assume!(p.cells(&up).unwrap().masses == cells.masses && p.cells(&down).unwrap().masses == cells.masses);
            let fd = (p.objective(&up) - p.objective(&down)) / (2.0 * step);
            let sub = nu.weights()[j] - cells.masses[j];
            prop_assert!((fd - sub).abs() <= 1e-4, "atom {j}: {fd} vs {sub}");
        }
    }

    #[test]
    fn single_atom_always_pushes_forward(seed in any::<u64>(), dim in 2usize..=3) {
        let mut g = Gen::new(seed);
        let (cone, mu, nu) = instance(&mut g, dim, 1, 300);
        let sol = solve_semidiscrete(&cone, &mu, &nu, &SemiDiscreteOptions::default()).unwrap();
        prop_assert!(verify_pushforward(&sol.k, &mu, &nu, 1e-12).unwrap().pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Convergence of the solver implies the independent pushforward check
    /// passes at the same tolerance, and the equality case holds on cells.
    #[test]
    fn converged_potentials_push_forward(seed in any::<u64>(), dim in 2usize..=3, m in 1usize..=8) {
        let mut g = Gen::new(seed);
        let (cone, mu, nu) = instance(&mut g, dim, m, 3000);
        let opts = SemiDiscreteOptions::default();
        let sol = solve_semidiscrete(&cone, &mu, &nu, &opts).unwrap();
        prop_assert!(sol.cells.balanced_residual <= opts.tol_mass);
        prop_assert!(sol.iterations <= opts.max_iter);
        let report = verify_pushforward(&sol.k, &mu, &nu, opts.tol_mass).unwrap();
        prop_assert!(report.pass, "verify residual {}", report.max_residual);

        // e^{h(u)} e^{g_j} |<u, v_j>| = 1 with h the c-transform of g
        let gv = &sol.dual.g;
        for u in mu.atoms().iter().step_by(7) {
            let scores: Vec<f64> = nu.atoms().iter().zip(gv).map(|(v, gj)| -u.dot(v).abs().ln() - gj).collect();
            let h = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let winners: Vec<usize> = (0..m).filter(|&j| scores[j] >= h - 1e-10 * h.abs().max(1.0)).collect();
            if winners.len() == 1 {
                let j = winners[0];
                let e = (h + gv[j]).exp() * u.dot(&nu.atoms()[j]).abs();
                prop_assert!((e - 1.0).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn quarter_three_quarter_split_matches_a_grid_search() {
    let resolution = 1000;
    let (mu, nu) = fixtures::arc_two_atoms(resolution, &[0.25, 0.75]);
    let tol = pseudocone::Tolerances::default();
    let p = SemiDiscreteProblem::new(&mu, &nu, tol).unwrap();
    // J restricted to the gauge g_1 = 0, scanned on [-1, 1] with step 1e-4
    let (mut best_j, mut best_g) = (f64::INFINITY, 0.0);
    for k in 0..=20_000 {
        let g2 = -1.0 + 1e-4 * k as f64;
        let j = p.objective(&[0.0, g2]);
        if j < best_j {
            best_j = j;
            best_g = g2;
        }
    }
    let sol = solve_semidiscrete(&fixtures::quadrant(), &mu, &nu, &SemiDiscreteOptions::default()).unwrap();
    assert!(sol.objective <= best_j + 1e-12, "solver {} above grid {best_j}", sol.objective);
    // J is Lipschitz with constant at most 1 in g_2
    assert!(best_j - sol.objective <= 1e-4);
    // the larger target needs the larger cell, so v_2 moves inward: g_2 < 0
    assert!(best_g < 0.0 && sol.dual.g[1] < 0.0);
    assert!((sol.dual.g[1] - best_g).abs() <= 0.01, "{} vs {best_g}", sol.dual.g[1]);
    let bound = 1e-6f64.max(2.0 / resolution as f64);
    assert!(sol.cells.balanced_residual <= bound);
    assert!(verify_pushforward(&sol.k, &mu, &nu, bound).unwrap().pass);
}

#[test]
fn raising_one_potential_breaks_the_pushforward() {
    let (mu, nu) = fixtures::arc_two_atoms(2000, &[0.25, 0.75]);
    let sol = solve_semidiscrete(&fixtures::quadrant(), &mu, &nu, &SemiDiscreteOptions::default()).unwrap();
    let mut g = sol.dual.g.clone();
    g[1] += 0.1;
    let items = nu.atoms().iter().zip(&g).map(|(v, gj)| (v.clone(), gj.exp())).collect();
    let k = pseudocone::PseudoCone::v_form(fixtures::quadrant(), items, pseudocone::Tolerances::default()).unwrap();
    let report = verify_pushforward(&k, &mu, &nu, 1e-6).unwrap();
    assert!(!report.pass);
    assert!(report.max_residual >= 0.01);
}
