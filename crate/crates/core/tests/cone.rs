mod common;

use std::f64::consts::PI;

use common::Gen;
use proptest::prelude::*;
use pseudocone::{Cap, Measure, PolyhedralCone, Tolerances};

fn same_generators(a: &PolyhedralCone, b: &PolyhedralCone) -> bool {
    let covers = |x: &PolyhedralCone, y: &PolyhedralCone| {
        x.generators()
            .iter()
            .all(|g| y.generators().iter().any(|h| (g - h).norm() <= 1e-9))
    };
    a.generators().len() == b.generators().len() && covers(a, b) && covers(b, a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_of_dual_is_the_cone(seed in any::<u64>(), dim in 2usize..=3) {
        let cone = Gen::new(seed).cone(dim);
        prop_assert!(same_generators(&cone.dual().dual(), &cone));
    }

    #[test]
    fn generators_of_the_dual_are_facet_normals(seed in any::<u64>(), dim in 2usize..=3) {
        let cone = Gen::new(seed).cone(dim);
        let dual = cone.dual();
        for g in cone.generators() {
            for n in dual.generators() {
                prop_assert!(g.dot(n) <= 1e-12);
            }
        }
    }
}

#[test]
fn primal_and_dual_cap_directions_have_negative_pairing() {
    let tol = Tolerances::default();
    let mut g = Gen::new(11);
    let mut pairs = 0;
    for k in 0..20 {
        let cone = g.cone(2 + k % 2);
        let us = cone.cap_quadrature(Cap::OmegaCdual, 50, k as u64, &tol).unwrap();
        let vs = cone.cap_quadrature(Cap::OmegaC, 50, k as u64, &tol).unwrap();
        for (u, v) in us.nodes().iter().zip(vs.nodes()).take(50) {
            assert!(u.dot(v) < 0.0);
            pairs += 1;
        }
    }
    assert_eq!(pairs, 1000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Node weights of any sub-arc approximate its share of the arc length.
    #[test]
    fn arc_quadrature_integrates_sub_arcs(
        seed in any::<u64>(),
        resolution in 8usize..2000,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let tol = Tolerances::default();
        let cone = Gen::new(seed).cone(2);
        let quad = cone.cap_quadrature(Cap::OmegaC, resolution, 0, &tol).unwrap();
        let gens = cone.generators();
        let start = gens[0][1].atan2(gens[0][0]);
        let mut width = gens[1][1].atan2(gens[1][0]) - start;
        width = width.rem_euclid(2.0 * PI);
        if width > PI {
            width -= 2.0 * PI;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let angle = |x: &pseudocone::Direction| {
            let x = x.coords();
            let t = (x[1].atan2(x[0]) - start).rem_euclid(2.0 * PI);
            let t = if t > PI { t - 2.0 * PI } else { t };
            t / width
        };
        let inside: f64 = quad
            .atoms()
            .iter()
            .zip(quad.weights())
            .filter(|(x, _)| {
                let s = angle(x);
                lo <= s && s <= hi
            })
            .map(|(_, w)| w)
            .sum();
        prop_assert!((inside - (hi - lo)).abs() <= 2.0 / resolution as f64);
    }
}
