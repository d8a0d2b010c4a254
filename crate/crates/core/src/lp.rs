//! The handful of small linear programs the geometry needs, solved with
//! `microlp` and then polished: the active set of the returned vertex is
//! re-solved densely so values are accurate to rounding, not to the simplex
//! feasibility tolerance.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// A halfspace `<normal, x> <= offset`.
pub type Halfspace = (Vector, f64);

fn solve(problem: &Problem, vars: &[Variable]) -> Result<(f64, Vec<f64>)> {
    let outcome = problem.solve().map_err(|e| match e {
        microlp::Error::Infeasible => Error::Infeasible("linear program has no feasible point".into()),
        microlp::Error::Unbounded => Error::Unbounded,
        other => Error::Infeasible(format!("linear program failed: {other:?}")),
    })?;
    let sol = outcome
        .into_solution()
        .map_err(|_| Error::Infeasible("linear program was interrupted".into()))?;
    let x = vars.iter().map(|v| sol.var_value_raw(*v)).collect();
    Ok((sol.objective(), x))
}

/// Least-squares solve of `a x = b`, `None` if the result does not satisfy
/// the system to `tol`.
fn dense_solve(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Option<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let x = svd.solve(b, 1e-13).ok()?;
    let resid = (a * &x - b).amax();
    (resid <= tol).then_some(x)
}

/// `max <objective, x>` over `{x : <a_i, x> <= b_i}`; returns value and maximizer.
pub fn maximize_over_halfspaces(rows: &[Halfspace], objective: &Vector) -> Result<(f64, Vector)> {
    let dim = objective.len();
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Variable> = (0..dim)
        .map(|k| p.add_var(objective[k], (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for (a, b) in rows {
        let expr: Vec<(Variable, f64)> = vars.iter().zip(a.iter()).map(|(v, c)| (*v, *c)).collect();
        p.add_constraint(expr, ComparisonOp::Le, *b);
    }
    let (raw, x) = solve(&p, &vars)?;
    let x = Vector::from_vec(x);

    // Polish on the active rows.
    let scale = 1.0 + x.amax();
    let active: Vec<&Halfspace> = rows
        .iter()
        .filter(|(a, b)| (a.dot(&x) - b).abs() <= 1e-7 * scale)
        .collect();
    if !active.is_empty() {
        let a = DMatrix::from_fn(active.len(), dim, |i, j| active[i].0[j]);
        let b = DVector::from_iterator(active.len(), active.iter().map(|r| r.1));
        if let Some(y) = dense_solve(&a, &b, 1e-12 * scale) {
            let feasible = rows.iter().all(|(a, b)| a.dot(&y) <= b + 1e-12 * scale);
            let val = objective.dot(&y);
            if feasible && (val - raw).abs() <= 1e-6 * (1.0 + raw.abs()) {
                return Ok((val, y));
            }
        }
    }
    Ok((objective.dot(&x), x))
}

/// `min r` such that `r v` lies in `conv(points) + cone(rays)`, together with
/// the convex weights on `points`.
pub fn ray_entry(points: &[Vector], rays: &[Vector], v: &Vector) -> Result<(f64, Vec<f64>)> {
    let dim = v.len();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let r = p.add_var(1.0, (0.0, f64::INFINITY));
    let lam: Vec<Variable> = points.iter().map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let mu: Vec<Variable> = rays.iter().map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for k in 0..dim {
        let mut expr = vec![(r, v[k])];
        expr.extend(lam.iter().zip(points).map(|(l, q)| (*l, -q[k])));
        expr.extend(mu.iter().zip(rays).map(|(m, g)| (*m, -g[k])));
        p.add_constraint(expr, ComparisonOp::Eq, 0.0);
    }
    p.add_constraint(lam.iter().map(|l| (*l, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);

    let mut all = vec![r];
    all.extend(&lam);
    all.extend(&mu);
    let (raw, x) = solve(&p, &all)?;

    // Polish: re-solve the equality system on the support of the LP solution.
    let support: Vec<usize> = (1..all.len()).filter(|&i| x[i] > 1e-10).collect();
    let cols = 1 + support.len();
    let a = DMatrix::from_fn(dim + 1, cols, |row, col| {
        if col == 0 {
            return if row < dim { v[row] } else { 0.0 };
        }
        let idx = support[col - 1] - 1;
        if idx < points.len() {
            if row < dim { -points[idx][row] } else { 1.0 }
        } else if row < dim {
            -rays[idx - points.len()][row]
        } else {
            0.0
        }
    });
    let mut b = DVector::zeros(dim + 1);
    b[dim] = 1.0;
    let weights_of = |sol: &[f64]| -> Vec<f64> { sol[1..=points.len()].to_vec() };
    if let Some(y) = dense_solve(&a, &b, 1e-12 * (1.0 + raw)) {
        let ok = y.iter().skip(1).all(|t| *t >= -1e-9) && (y[0] - raw).abs() <= 1e-6 * (1.0 + raw);
        if ok {
            let mut full = vec![0.0; all.len()];
            full[0] = y[0];
            for (k, &i) in support.iter().enumerate() {
                full[i] = y[k + 1];
            }
            return Ok((y[0], weights_of(&full)));
        }
    }
    Ok((raw, weights_of(&x)))
}

/// Whether `x` lies in `conv(points) + cone(rays)` up to `tol` per coordinate.
pub fn in_hull_plus_cone(points: &[Vector], rays: &[Vector], x: &Vector, tol: f64) -> bool {
    let dim = x.len();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let lam: Vec<Variable> = points.iter().map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let mu: Vec<Variable> = rays.iter().map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
    // Slack variables measure the violation; minimize their total.
    let plus: Vec<Variable> = (0..dim).map(|_| p.add_var(1.0, (0.0, f64::INFINITY))).collect();
    let minus: Vec<Variable> = (0..dim).map(|_| p.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for k in 0..dim {
        let mut expr: Vec<(Variable, f64)> = lam.iter().zip(points).map(|(l, q)| (*l, q[k])).collect();
        expr.extend(mu.iter().zip(rays).map(|(m, g)| (*m, g[k])));
        expr.push((plus[k], 1.0));
        expr.push((minus[k], -1.0));
        p.add_constraint(expr, ComparisonOp::Eq, x[k]);
    }
    p.add_constraint(lam.iter().map(|l| (*l, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    match solve(&p, &[]) {
        Ok((violation, _)) => violation <= tol,
        Err(_) => false,
    }
}

/// Min-max allocation: split each group's mass among its allowed targets so
/// that `max_j |fixed_j + alloc_j - target_j|` is smallest. Returns the
/// optimal value and the allocated masses per target.
pub fn balance_allocation(
    fixed: &[f64],
    target: &[f64],
    groups: &[(f64, Vec<usize>)],
) -> Result<(f64, Vec<f64>)> {
    let m = fixed.len();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let t = p.add_var(1.0, (0.0, f64::INFINITY));
    let mut per_target: Vec<Vec<(Variable, f64)>> = vec![Vec::new(); m];
    for (mass, allowed) in groups {
        let vars: Vec<Variable> = allowed.iter().map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
        p.add_constraint(vars.iter().map(|v| (*v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, *mass);
        for (v, &j) in vars.iter().zip(allowed) {
            per_target[j].push((*v, 1.0));
        }
    }
    let mut alloc_vars = Vec::new();
    for j in 0..m {
        let s = p.add_var(0.0, (0.0, f64::INFINITY));
        let mut expr = per_target[j].clone();
        expr.push((s, -1.0));
        p.add_constraint(expr, ComparisonOp::Eq, 0.0);
        let r = target[j] - fixed[j];
        p.add_constraint(vec![(s, 1.0), (t, -1.0)], ComparisonOp::Le, r);
        p.add_constraint(vec![(s, 1.0), (t, 1.0)], ComparisonOp::Ge, r);
        alloc_vars.push(s);
    }
    let mut all = vec![t];
    all.extend(&alloc_vars);
    let (_, x) = solve(&p, &all)?;
    let alloc = x[1..].to_vec();
    let value = (0..m)
        .map(|j| (fixed[j] + alloc[j] - target[j]).abs())
        .fold(0.0, f64::max);
    Ok((value, alloc))
}
