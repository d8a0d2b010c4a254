//! Small dense helpers on top of nalgebra for dimensions 2..=5.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;

pub fn vector(coords: &[f64]) -> Vector {
    DVector::from_column_slice(coords)
}

/// Generalized cross product: a vector orthogonal to the `d - 1` given rows in R^d.
///
/// Returns `None` when the rows are (numerically) dependent, judged relative
/// to the product of row norms.
pub fn orthogonal_complement(rows: &[&Vector]) -> Option<Vector> {
    let d = rows.first()?.len();
    if rows.len() + 1 != d {
        return None;
    }
    let scale: f64 = rows.iter().map(|r| r.norm()).product();
    if scale == 0.0 {
        return None;
    }
    let mut out = DVector::zeros(d);
    for k in 0..d {
        let minor = DMatrix::from_fn(d - 1, d - 1, |i, j| {
            let col = if j < k { j } else { j + 1 };
            rows[i][col]
        });
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out[k] = sign * minor.determinant();
    }
    if out.norm() <= 1e-12 * scale {
        return None;
    }
    Some(out)
}

/// Numerical rank of a family of vectors.
pub fn rank(vectors: &[&Vector], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let d = vectors[0].len();
    let m = DMatrix::from_fn(vectors.len(), d, |i, j| vectors[i][j]);
    let svd = m.svd(false, false);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|s| **s > tol * smax.max(1.0))
        .count()
}

/// Angle between two unit vectors, robust near 0.
pub fn angle_between(a: &Vector, b: &Vector) -> f64 {
    let cross = (a - b).norm();
    let sum = (a + b).norm();
    2.0 * cross.atan2(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthogonal() {
        let a = vector(&[1.0, 2.0, 0.5]);
        let b = vector(&[0.0, 1.0, -1.0]);
        let n = orthogonal_complement(&[&a, &b]).unwrap();
        assert!(n.dot(&a).abs() < 1e-12);
        assert!(n.dot(&b).abs() < 1e-12);
        assert!(n.norm() > 0.1);
    }

    #[test]
    fn complement_in_the_plane_is_a_rotation() {
        let n = orthogonal_complement(&[&vector(&[1.0, 0.0])]).unwrap();
        assert_eq!(n.as_slice(), &[0.0, -1.0]);
    }

    #[test]
    fn dependent_rows_have_no_complement() {
        let a = vector(&[1.0, 1.0, 0.0]);
        let b = vector(&[2.0, 2.0, 0.0]);
        assert!(orthogonal_complement(&[&a, &b]).is_none());
    }

    #[test]
    fn rank_counts_independent_directions() {
        let a = vector(&[1.0, 0.0, 0.0]);
        let b = vector(&[0.0, 1.0, 0.0]);
        let c = vector(&[1.0, 1.0, 0.0]);
        assert_eq!(rank(&[&a, &b, &c], 1e-10), 2);
    }

    #[test]
    fn angle_of_orthogonal_vectors() {
        let a = vector(&[1.0, 0.0]);
        let b = vector(&[0.0, 1.0]);
        assert!((angle_between(&a, &b) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
