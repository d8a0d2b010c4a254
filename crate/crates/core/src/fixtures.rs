//! Small worked instances used by the tests, the guide and `selftest`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::cone::{Cap, DiscreteMeasure, PolyhedralCone, QuadratureMeasure};
use crate::config::Tolerances;
use crate::pseudocone::PseudoCone;

/// `-log(0.96)`, the optimal value of [`two_atoms`].
pub const TWO_ATOMS_VALUE: f64 = 0.040821994520255166;

/// `{x >= 0, y >= 0}`.
pub fn quadrant() -> PolyhedralCone {
    PolyhedralCone::orthant(2).expect("quadrant")
}

/// The nonnegative octant of R^3.
pub fn octant() -> PolyhedralCone {
    PolyhedralCone::orthant(3).expect("octant")
}

/// Half-plane pseudo-cone `{x ∈ Q : x + y >= √2}`.
pub fn half_plane() -> PseudoCone {
    let q = quadrant();
    let t = Tolerances::default();
    let u = q
        .direction(&[-FRAC_1_SQRT_2, -FRAC_1_SQRT_2], Cap::OmegaCdual, &t)
        .expect("interior");
    PseudoCone::h_form(q, vec![(u, 1.0)], t).expect("half_plane")
}

/// `conv{(0.8, 0.6), (0.6, 0.8)} + Q`.
pub fn two_vertex_body() -> PseudoCone {
    let q = quadrant();
    let t = Tolerances::default();
    let v1 = q.direction(&[0.8, 0.6], Cap::OmegaC, &t).expect("interior");
    let v2 = q.direction(&[0.6, 0.8], Cap::OmegaC, &t).expect("interior");
    PseudoCone::v_form(q, vec![(v1, 1.0), (v2, 1.0)], t).expect("two_vertex_body")
}

/// Two atoms per side on the quadrant, equal weights.
pub fn two_atoms() -> (DiscreteMeasure, DiscreteMeasure) {
    two_atoms_weighted(&[0.5, 0.5], &[0.5, 0.5])
}

pub fn two_atoms_weighted(mu_w: &[f64], nu_w: &[f64]) -> (DiscreteMeasure, DiscreteMeasure) {
    let q = quadrant();
    let t = Tolerances::default();
    let mu = DiscreteMeasure::new(&q, Cap::OmegaCdual, &[vec![-0.8, -0.6], vec![-0.6, -0.8]], mu_w, &t)
        .expect("mu");
    let nu = DiscreteMeasure::new(&q, Cap::OmegaC, &[vec![0.8, 0.6], vec![0.6, 0.8]], nu_w, &t).expect("nu");
    (mu, nu)
}

/// The pseudo-cone solving [`two_atoms`], built by hand:
/// `{x ∈ Q : 0.8x + 0.6y >= 0.96, 0.6x + 0.8y >= 0.96}`.
pub fn two_atoms_reconstruction() -> (PseudoCone, DiscreteMeasure, DiscreteMeasure) {
    let (mu, nu) = two_atoms();
    let items = crate::cone::Measure::atoms(&mu)
        .iter()
        .map(|u| (u.clone(), 0.96))
        .collect();
    let k = PseudoCone::h_form(quadrant(), items, Tolerances::default()).expect("two_atoms body");
    (k, mu, nu)
}

/// Midpoint quadrature on the dual quarter arc against two atoms.
pub fn arc_two_atoms(resolution: usize, nu_weights: &[f64]) -> (QuadratureMeasure, DiscreteMeasure) {
    let q = quadrant();
    let t = Tolerances::default();
    let mu = q.cap_quadrature(Cap::OmegaCdual, resolution, 0, &t).expect("arc");
    let nu = DiscreteMeasure::new(&q, Cap::OmegaC, &[vec![0.8, 0.6], vec![0.6, 0.8]], nu_weights, &t)
        .expect("nu");
    (mu, nu)
}
