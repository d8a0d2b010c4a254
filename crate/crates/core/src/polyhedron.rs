//! Brute-force vertex and facet enumeration for small polyhedra.
//!
//! This is deliberately independent of the LP code: the two are used to
//! cross-check each other.

use nalgebra::{DMatrix, DVector};

use crate::cone::for_each_subset;
use crate::linalg::{orthogonal_complement, rank, Vector};
use crate::lp::Halfspace;

fn same_row(a: &Halfspace, b: &Halfspace) -> bool {
    (&a.0 - &b.0).norm() < 1e-9 && (a.1 - b.1).abs() < 1e-9 * (1.0 + a.1.abs())
}

/// Facets of `conv(points) + cone(rays)` as unit-normal halfspaces.
///
/// Every candidate hyperplane through `n` affinely independent elements (at
/// least one point) is tested against all elements. Rays must span R^n.
pub fn hull_facets(points: &[Vector], rays: &[Vector]) -> Vec<Halfspace> {
    let dim = points.first().or(rays.first()).map(|v| v.len()).unwrap_or(0);
    // Homogenized elements: points (p, -1), rays (r, 0).
    let lifted: Vec<Vector> = points
        .iter()
        .map(|p| Vector::from_iterator(dim + 1, p.iter().copied().chain([-1.0])))
        .chain(rays.iter().map(|r| Vector::from_iterator(dim + 1, r.iter().copied().chain([0.0]))))
        .collect();
    let scale = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let mut facets: Vec<Halfspace> = Vec::new();
    for_each_subset(lifted.len(), dim, |subset| {
        if subset[0] >= points.len() {
            return;
        }
        let rows: Vec<&Vector> = subset.iter().map(|&i| &lifted[i]).collect();
        let Some(w) = orthogonal_complement(&rows) else {
            return;
        };
        let a = w.rows(0, dim).into_owned();
        let norm = a.norm();
        if norm < 1e-12 * w.norm() {
            return;
        }
        // <a, p> - beta = 0 on the subset, with w = (a, beta).
        let (a, beta) = (a / norm, w[dim] / norm);
        let tol = 1e-10 * scale;
        let side = |s: f64| -> bool {
            points.iter().all(|p| s * (a.dot(p) - beta) <= tol)
                && rays.iter().all(|r| s * a.dot(r) <= 1e-10)
        };
        let oriented = if side(1.0) {
            Some((a, beta))
        } else if side(-1.0) {
            Some((-a, -beta))
        } else {
            None
        };
        if let Some(row) = oriented {
            if !facets.iter().any(|f| same_row(f, &row)) {
                facets.push(row);
            }
        }
    });
    facets
}

/// Vertices of `{x : <a_i, x> <= b_i}` by solving every `n`-subset of rows.
pub fn vertices(rows: &[Halfspace]) -> Vec<Vector> {
    let dim = rows.first().map(|r| r.0.len()).unwrap_or(0);
    let scale = rows.iter().map(|r| r.1.abs()).fold(1.0, f64::max);
    let mut out: Vec<Vector> = Vec::new();
    for_each_subset(rows.len(), dim, |subset| {
        let a = DMatrix::from_fn(dim, dim, |i, j| rows[subset[i]].0[j]);
        let b = DVector::from_iterator(dim, subset.iter().map(|&i| rows[i].1));
        let Some(inv) = a.clone().try_inverse() else {
            return;
        };
        if a.clone().svd(false, false).singular_values.min() < 1e-10 {
            return;
        }
        let x = inv * b;
        if rows.iter().all(|(n, c)| n.dot(&x) <= c + 1e-10 * scale)
            && !out.iter().any(|y| (y - &x).norm() < 1e-9 * scale)
        {
            out.push(x);
        }
    });
    out
}

/// Whether `x` is an extreme point of `{<a_i, x> <= b_i}`.
pub fn is_extreme(rows: &[Halfspace], x: &Vector, tol: f64) -> bool {
    let tight: Vec<&Vector> = rows
        .iter()
        .filter(|(a, b)| (a.dot(x) - b).abs() <= tol * (1.0 + b.abs()))
        .map(|(a, _)| a)
        .collect();
    rank(&tight, 1e-9) == x.len()
}

/// Point of smallest Euclidean norm in `{<a_i, x> <= b_i}`.
///
/// The minimizer is the projection of the origin onto the affine span of some
/// set of at most `n` active rows; every such set is tried.
pub fn min_norm_point(rows: &[Halfspace]) -> Option<Vector> {
    let dim = rows.first()?.0.len();
    let scale = rows.iter().map(|r| r.1.abs()).fold(1.0, f64::max);
    let feasible = |x: &Vector| rows.iter().all(|(a, b)| a.dot(x) <= b + 1e-10 * scale);
    let zero = Vector::zeros(dim);
    if feasible(&zero) {
        return Some(zero);
    }
    let mut best: Option<Vector> = None;
    for k in 1..=dim.min(rows.len()) {
        for_each_subset(rows.len(), k, |subset| {
            let a = DMatrix::from_fn(k, dim, |i, j| rows[subset[i]].0[j]);
            let b = DVector::from_iterator(k, subset.iter().map(|&i| rows[i].1));
            let gram = &a * a.transpose();
            let Some(inv) = gram.try_inverse() else {
                return;
            };
            let lambda = inv * &b;
            let x = a.transpose() * lambda;
            if (&a * &x - &b).amax() > 1e-9 * scale || !feasible(&x) {
                return;
            }
            if best.as_ref().is_none_or(|y| x.norm() < y.norm()) {
                best = Some(x);
            }
        });
    }
    best
}
