mod common;

use common::Gen;
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use pseudocone::linalg::{angle_between, Vector};
use pseudocone::lp::maximize_over_halfspaces;
use pseudocone::{Cap, Direction, Form, GaussImage, Membership, PolyhedralCone, PseudoCone, SampledFunction};

fn same(a: &Direction, b: &Direction) -> bool {
    angle_between(a.coords(), b.coords()) <= 1e-12
}

/// The direction re-tagged for the copolar body, whose cone is `C°`.
fn polar(body: &PseudoCone, d: &Direction) -> Direction {
    body.cone()
        .direction(d.coords().as_slice(), d.cap().opposite(), body.tolerances())
        .unwrap()
}

/// Planar membership in `conv(points) + cone(rays)` by Carathéodory: some
/// three of the points and rays, at least one a point, represent `x` with
/// nonnegative coefficients summing to one over the points.
fn in_planar_hull_plus_cone(points: &[Vector], rays: &[Vector], x: &Vector) -> bool {
    let items: Vec<(&Vector, bool)> = points
        .iter()
        .map(|p| (p, true))
        .chain(rays.iter().map(|r| (r, false)))
        .collect();
    let n = items.len();
    let slack = 1e-12;
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                let pick = [items[a], items[b], items[c]];
                if !pick.iter().any(|(_, p)| *p) {
                    continue;
                }
                let m = Matrix3::from_fn(|r, k| match r {
                    0 | 1 => pick[k].0[r],
                    _ => f64::from(u8::from(pick[k].1)),
                });
                let rhs = Vector3::new(x[0], x[1], 1.0);
                if let Some(inv) = m.try_inverse() {
                    let s = inv * rhs;
                    if s.iter().all(|w| *w >= -slack) {
                        return true;
                    }
                } else {
                    // degenerate triple: try each pair on its own
                    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                        let (p, q) = (pick[i], pick[j]);
                        if !(p.1 || q.1) {
                            continue;
                        }
                        let m2 = nalgebra::Matrix2::new(p.0[0], q.0[0], p.0[1], q.0[1]);
                        if let Some(inv) = m2.try_inverse() {
                            let s = inv * nalgebra::Vector2::new(x[0], x[1]);
                            let total = f64::from(u8::from(p.1)) * s[0] + f64::from(u8::from(q.1)) * s[1];
                            if s.iter().all(|w| *w >= -slack) && (total - 1.0).abs() <= 1e-9 {
                                return true;
                            }
                        }
                    }
                }
            }
        }
    }
    false
}

/// Radial function by marching along the ray with step `1e-3`, then
/// bisecting the bracketing step down to `1e-10`.
fn ray_march(points: &[Vector], rays: &[Vector], v: &Vector) -> f64 {
    let inside = |r: f64| in_planar_hull_plus_cone(points, rays, &(v * r));
    let mut r = 0.0;
    while !inside(r + 1e-3) {
        r += 1e-3;
        assert!(r < 1e3, "ray does not enter K");
    }
    let (mut lo, mut hi) = (r, r + 1e-3);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vertex_form_radial_matches_ray_march(seed in any::<u64>(), count in 1usize..6) {
        let mut g = Gen::new(seed);
        let cone = g.cone(2);
        let k = g.v_form(&cone, count);
        let points: Vec<Vector> = k.items().iter().map(|(v, r)| v.coords() * *r).collect();
        for v in g.directions(&cone, Cap::OmegaC, 4) {
            let march = ray_march(&points, cone.generators(), v.coords());
            let rho = k.radial(&v).unwrap();
            prop_assert!((march - rho).abs() <= 1e-6, "march {march} vs {rho}");
        }
    }

    #[test]
    fn bodies_are_closed_under_the_cone_and_dilation(seed in any::<u64>(), dim in 2usize..=3) {
        let mut g = Gen::new(seed);
        let tol = g.tol;
        let cone = g.cone(dim);
        let k = g.pseudo_cone(&cone);
        prop_assert!(!k.contains(&Vector::zeros(dim), 1e-12));
        for v in g.directions(&cone, Cap::OmegaC, 10) {
            let x = v.coords() * k.radial(&v).unwrap();
            prop_assert!(k.contains(&x, 1e-9));
            prop_assert!(cone.contains(&x, Membership::Closed, &tol));
            let lambda = 1.0 + 4.0 * g.unit();
            prop_assert!(k.contains(&(&x * lambda), 1e-9));
            let shift = g.direction(&cone, Cap::OmegaC);
            prop_assert!(k.contains(&(&x + shift.coords() * (3.0 * g.unit())), 1e-9));
            // just inside the boundary along the ray is outside K
            prop_assert!(!k.contains(&(&x * (1.0 - 1e-6)), 1e-12));
        }
    }

    #[test]
    fn canonical_items_are_tight(seed in any::<u64>(), dim in 2usize..=3) {
        let mut g = Gen::new(seed);
        let cone = g.cone(dim);
        let k = g.pseudo_cone(&cone);
        for (d, val) in k.items() {
            match k.form() {
                Form::H => {
                    let (best, _) = maximize_over_halfspaces(k.halfspaces(), d.coords()).unwrap();
                    prop_assert!((best + val).abs() <= 1e-8 * val.max(1.0));
                }
                Form::V => prop_assert!((k.radial(d).unwrap() - val).abs() <= 1e-8 * val.max(1.0)),
            }
        }
    }

    #[test]
    fn copolar_is_an_involution(seed in any::<u64>(), dim in 2usize..=3) {
        let mut g = Gen::new(seed);
        let cone = g.cone(dim);
        let k = g.pseudo_cone(&cone);
        // the double dual cone is recomputed from normalized facet normals
        prop_assert!(k.copolar().copolar().same_as(&k, 1e-12));
    }

    #[test]
    fn radial_times_copolar_support_is_one(seed in any::<u64>(), dim in 2usize..=3) {
        let mut g = Gen::new(seed);
        let cone = g.cone(dim);
        let k = g.pseudo_cone(&cone);
        let star = k.copolar();
        for v in g.directions(&cone, Cap::OmegaC, 20) {
            let r = k.radial(&v).unwrap() * star.hbar(&polar(&star, &v)).unwrap();
            prop_assert!((r - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn hull_support_is_the_sample_minimum(seed in any::<u64>(), dim in 2usize..=3, count in 1usize..8) {
        let mut g = Gen::new(seed);
        let cone = g.cone(dim);
        let f = g.sampled(&cone, Cap::OmegaC, count);
        let hull = f.convexify(&cone).unwrap();
        for u in g.directions(&cone, Cap::OmegaCdual, 20) {
            let formula = f.samples().iter().map(|(v, fv)| u.dot(v).abs() * fv).fold(f64::INFINITY, f64::min);
            prop_assert!((hull.hbar(&u).unwrap() - formula).abs() <= 1e-9 * formula.max(1.0));
        }
    }

    #[test]
    fn biconjugate_is_below_and_touches_at_retained_samples(seed in any::<u64>(), dim in 2usize..=3, count in 1usize..8) {
        let mut g = Gen::new(seed);
        let cone = g.cone(dim);
        let f = g.sampled(&cone, Cap::OmegaC, count);
        let hull = f.convexify(&cone).unwrap();
        for (v, fv) in f.samples() {
            let fss = hull.radial(v).unwrap();
            prop_assert!(fss <= fv + 1e-12 * fv.max(1.0));
            let retained = hull.items().iter().any(|(e, _)| same(e, v));
            if retained {
                prop_assert!((fss - fv).abs() <= 1e-9 * fv);
            } else {
                prop_assert!(fss < *fv);
            }
        }
    }

    #[test]
    fn conjugate_pairing_is_at_least_one(seed in any::<u64>(), dim in 2usize..=3, count in 1usize..8) {
        let mut g = Gen::new(seed);
        let cone = g.cone(dim);
        let f = g.sampled(&cone, Cap::OmegaC, count);
        let fstar = f.pseudo_conjugate();
        for u in g.directions(&cone, Cap::OmegaCdual, 20) {
            let fu = fstar.eval(&u).unwrap();
            for (v, fv) in f.samples() {
                prop_assert!(fv * fu * u.dot(v).abs() >= 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn reverse_gauss_map_ignores_scale(seed in any::<u64>(), dim in 2usize..=3, count in 1usize..6) {
        let mut g = Gen::new(seed);
        let cone = g.cone(dim);
        let k = g.v_form(&cone, count);
        for u in g.directions(&cone, Cap::OmegaCdual, 100) {
            let base = k.reverse_gauss_map(&u).unwrap();
            for lambda in [2.0, 10.0] {
                prop_assert_eq!(&k.scaled(lambda).reverse_gauss_map(&u).unwrap(), &base);
            }
        }
    }
}

#[test]
fn triple_conjugate_equals_conjugate() {
    let mut g = Gen::new(21);
    for k in 0..10 {
        let cone = g.cone(2 + k % 2);
        let f = g.sampled(&cone, Cap::OmegaC, 6);
        let hull = f.convexify(&cone).unwrap();
        let dirs: Vec<Direction> = f.samples().iter().map(|(d, _)| d.clone()).collect();
        let fss = SampledFunction::of_radial(&hull, &dirs).unwrap();
        let (fstar, fsss) = (f.pseudo_conjugate(), fss.pseudo_conjugate());
        for u in g.directions(&cone, Cap::OmegaCdual, 100) {
            let (a, b) = (fsss.eval(&u).unwrap(), fstar.eval(&u).unwrap());
            assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
        }
    }
}

#[test]
fn ties_are_reported_not_resolved() {
    let q = PolyhedralCone::orthant(2).unwrap();
    let tol = pseudocone::Tolerances::default();
    let s = 0.5f64.sqrt();
    let k = PseudoCone::v_form(
        q.clone(),
        vec![
            (q.direction(&[0.8, 0.6], Cap::OmegaC, &tol).unwrap(), 1.0),
            (q.direction(&[0.6, 0.8], Cap::OmegaC, &tol).unwrap(), 1.0),
        ],
        tol,
    )
    .unwrap();
    let u = q.direction(&[-s, -s], Cap::OmegaCdual, &tol).unwrap();
    assert!(matches!(k.reverse_gauss_map(&u).unwrap(), GaussImage::Tie { .. }));
}
