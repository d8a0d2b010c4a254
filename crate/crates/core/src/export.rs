//! Boundary geometry of `K ∩ tB` for plotting.
//!
//! n = 2: CSV polyline `x,y` of the boundary, unbounded edges clipped at the
//! ball. n = 3: OBJ triangle mesh of the radial graph `v -> ρ_K(v) v` over a
//! triangulated cross-section of the cone, triangles leaving the ball dropped.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::pseudocone::PseudoCone;

#[derive(Debug, Clone, PartialEq)]
pub struct Export {
    pub text: String,
    pub warnings: Vec<String>,
}

fn cross2(a: &Vector, b: &Vector) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Part of the segment `a -> b` inside `|x| <= t`, if any.
fn clip_segment(a: &Vector, b: &Vector, t: f64) -> Option<(Vector, Vector)> {
    let d = b - a;
    // |a + s d|^2 = t^2
    let (qa, qb, qc) = (d.dot(&d), 2.0 * a.dot(&d), a.dot(a) - t * t);
    if qa == 0.0 {
        return (qc <= 0.0).then(|| (a.clone(), b.clone()));
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let s0 = ((-qb - disc.sqrt()) / (2.0 * qa)).max(0.0);
    let s1 = ((-qb + disc.sqrt()) / (2.0 * qa)).min(1.0);
    (s0 <= s1).then(|| (a + &d * s0, a + &d * s1))
}

/// Boundary polyline of a planar `K`, ordered from the first extreme ray of
/// the cone to the second.
pub fn polyline_2d(k: &PseudoCone, t: f64) -> Result<Export> {
    if k.dim() != 2 {
        return Err(Error::UnsupportedDimension(k.dim()));
    }
    let gens = k.cone().generators();
    let (ga, gb) = if cross2(&gens[0], &gens[1]) > 0.0 {
        (&gens[0], &gens[1])
    } else {
        (&gens[1], &gens[0])
    };
    let mut pts = k.extreme_points();
    let angle = |x: &Vector| cross2(ga, x).atan2(ga.dot(x));
    pts.sort_by(|a, b| angle(a).total_cmp(&angle(b)));
    let far = 2.0 * t + pts.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let mut chain = vec![&pts[0] + ga * far];
    chain.extend(pts.iter().cloned());
    chain.push(&pts[pts.len() - 1] + gb * far);

    let mut out: Vec<Vector> = Vec::new();
    for w in chain.windows(2) {
        if let Some((p, q)) = clip_segment(&w[0], &w[1], t) {
            if out.last().is_none_or(|l| (l - &p).norm() > 1e-12) {
                out.push(p);
            }
            out.push(q);
        }
    }
    out.dedup_by(|a, b| (&*a - &*b).norm() <= 1e-12);
    let mut warnings = Vec::new();
    if out.is_empty() {
        warnings.push(format!("K does not meet the ball of radius {t}"));
    }
    let mut text = String::from("x,y\n");
    for p in &out {
        writeln!(text, "{},{}", p[0], p[1]).expect("string write");
    }
    Ok(Export { text, warnings })
}

/// OBJ mesh of the radial boundary of a 3-dimensional `K` inside the ball.
/// `resolution` is the number of subdivisions of each fan triangle edge.
pub fn radial_mesh_3d(k: &PseudoCone, t: f64, resolution: usize) -> Result<Export> {
    if k.dim() != 3 {
        return Err(Error::UnsupportedDimension(k.dim()));
    }
    let gens = k.cone().generators();
    let axis = gens.iter().fold(Vector::zeros(3), |a, g| a + g).normalize();
    // Cross-section points on the plane <axis, x> = 1, in cyclic order.
    let section: Vec<Vector> = gens.iter().map(|g| g / g.dot(&axis)).collect();
    let e1 = {
        let d = &section[0] - &axis;
        d.normalize()
    };
    let e2 = axis.cross(&e1);
    let mut order: Vec<usize> = (0..section.len()).collect();
    let ang = |x: &Vector| {
        let d = x - &axis;
        d.dot(&e2).atan2(d.dot(&e1))
    };
    order.sort_by(|&a, &b| ang(&section[a]).total_cmp(&ang(&section[b])));
    // Stay off the cone boundary, where the radial function is not defined.
    let shrink = 1.0 - 1e-6;
    let corner = |i: usize| &axis + (&section[order[i]] - &axis) * shrink;

    let r = resolution.max(1);
    let mut text = String::from("# radial boundary mesh\n");
    let mut vertices: Vec<Option<usize>> = Vec::new();
    let mut count = 0usize;
    let mut faces = 0usize;
    let mut write_vertex = |p: &Vector, text: &mut String| -> Result<Option<usize>> {
        let v = p.normalize();
        let rho = k.radial_unchecked(&v)?;
        if !(rho <= t) {
            return Ok(None);
        }
        let x = v * rho;
        writeln!(text, "v {} {} {}", x[0], x[1], x[2]).expect("string write");
        count += 1;
        Ok(Some(count))
    };
    for s in 0..order.len() {
        let (a, b) = (corner(s), corner((s + 1) % order.len()));
        // barycentric grid over the triangle (axis, a, b)
        vertices.clear();
        let mut index = vec![vec![None; r + 1]; r + 1];
        for i in 0..=r {
            for j in 0..=r - i {
                let (fa, fb) = (i as f64 / r as f64, j as f64 / r as f64);
                let p = &axis * (1.0 - fa - fb) + &a * fa + &b * fb;
                index[i][j] = write_vertex(&p, &mut text)?;
            }
        }
        for i in 0..r {
            for j in 0..r - i {
                let tri = [(i, j), (i + 1, j), (i, j + 1)];
                let ids: Option<Vec<usize>> = tri.iter().map(|&(x, y)| index[x][y]).collect();
                if let Some(ids) = ids {
                    writeln!(text, "f {} {} {}", ids[0], ids[1], ids[2]).expect("string write");
                    faces += 1;
                }
                if i + j + 1 < r {
                    let tri = [(i + 1, j), (i + 1, j + 1), (i, j + 1)];
                    let ids: Option<Vec<usize>> = tri.iter().map(|&(x, y)| index[x][y]).collect();
                    if let Some(ids) = ids {
                        writeln!(text, "f {} {} {}", ids[0], ids[1], ids[2]).expect("string write");
                        faces += 1;
                    }
                }
            }
        }
    }
    let mut warnings = Vec::new();
    if faces == 0 {
        warnings.push(format!("K does not meet the ball of radius {t}"));
    }
    Ok(Export { text, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Cap;
    use crate::config::Tolerances;
    use crate::fixtures;

    #[test]
    fn two_atoms_polyline_passes_through_the_corner() {
        let (k, _, _) = fixtures::two_atoms_reconstruction();
        let e = polyline_2d(&k, 5.0).unwrap();
        let rows: Vec<Vec<f64>> = e
            .text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        let t = 0.96 / 1.4;
        assert!(rows.iter().any(|r| (r[0] - t).abs() < 1e-9 && (r[1] - t).abs() < 1e-9));
        assert_eq!(rows.len(), 5);
        for r in [&rows[0], &rows[4]] {
            assert!(((r[0] * r[0] + r[1] * r[1]).sqrt() - 5.0).abs() < 1e-9);
        }
        assert!(e.warnings.is_empty());
    }

    #[test]
    fn small_ball_gives_a_warning() {
        let (k, _, _) = fixtures::two_atoms_reconstruction();
        let e = polyline_2d(&k, 0.5).unwrap();
        assert_eq!(e.text, "x,y\n");
        assert_eq!(e.warnings.len(), 1);
    }

    #[test]
    fn octant_mesh_is_well_formed() {
        let o = fixtures::octant();
        let tol = Tolerances::default();
        let s = 1.0 / 3f64.sqrt();
        let u = o.direction(&[-s, -s, -s], Cap::OmegaCdual, &tol).unwrap();
        let k = PseudoCone::h_form(o, vec![(u, 1.0)], tol).unwrap();
        let e = radial_mesh_3d(&k, 5.0, 8).unwrap();
        let nv = e.text.lines().filter(|l| l.starts_with("v ")).count();
        let mut nf = 0;
        for l in e.text.lines().filter(|l| l.starts_with("f ")) {
            let ids: Vec<usize> = l[2..].split(' ').map(|x| x.parse().unwrap()).collect();
            assert!(ids.iter().all(|&i| i >= 1 && i <= nv));
            assert!(ids[0] != ids[1] && ids[1] != ids[2] && ids[0] != ids[2]);
            nf += 1;
        }
        assert!(nf > 0);
        // every vertex lies on the plane <u, x> = -1
        for l in e.text.lines().filter(|l| l.starts_with("v ")) {
            let x: Vec<f64> = l[2..].split(' ').map(|x| x.parse().unwrap()).collect();
            assert!(((x[0] + x[1] + x[2]) * s - 1.0).abs() < 1e-9);
        }
        assert!(polyline_2d(&k, 5.0).is_err());
    }
}
