//! Random instances shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use pseudocone::{Cap, DiscreteMeasure, Direction, PolyhedralCone, PseudoCone, SampledFunction, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Gen {
    rng: ChaCha8Rng,
    pub tol: Tolerances,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            tol: Tolerances::default(),
        }
    }

    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn index(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.rng.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
    }

    /// A pointed planar cone with opening in `[0.4, 2.6]` rad, or one of a few
    /// 3-dimensional cones.
    pub fn cone(&mut self, dim: usize) -> PolyhedralCone {
        match dim {
            2 => {
                let a = self.uniform(0.0, 2.0 * PI);
                let w = self.uniform(0.4, 2.6);
                PolyhedralCone::from_generators(&[vec![a.cos(), a.sin()], vec![(a + w).cos(), (a + w).sin()]])
                    .expect("planar cone")
            }
            3 => match self.index(0, 2) {
                0 => PolyhedralCone::orthant(3).expect("octant"),
                1 => PolyhedralCone::circular(3, self.uniform(0.3, 1.0), self.index(3, 6)).expect("circular"),
                _ => {
                    // random simplicial cone around a random axis
                    let gens: Vec<Vec<f64>> = (0..3)
                        .map(|k| {
                            let phi = 2.0 * PI * k as f64 / 3.0 + self.uniform(-0.4, 0.4);
                            let s = self.uniform(0.4, 0.9);
                            vec![s * phi.cos(), s * phi.sin(), 1.0]
                        })
                        .collect();
                    PolyhedralCone::from_generators(&gens).expect("simplicial")
                }
            },
            _ => panic!("dimension {dim}"),
        }
    }

    /// A direction in the open cap, as a positive combination of the cap
    /// cone's generators.
    pub fn direction(&mut self, cone: &PolyhedralCone, cap: Cap) -> Direction {
        let cc = cone.cap_cone(cap);
        let mut x = vec![0.0; cone.dim()];
        for g in cc.generators() {
            let w = self.uniform(0.05, 1.0);
            for (xi, gi) in x.iter_mut().zip(g.iter()) {
                *xi += w * gi;
            }
        }
        cone.direction(&x, cap, &self.tol).expect("interior direction")
    }

    pub fn directions(&mut self, cone: &PolyhedralCone, cap: Cap, count: usize) -> Vec<Direction> {
        (0..count).map(|_| self.direction(cone, cap)).collect()
    }

    pub fn weights(&mut self, count: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..count).map(|_| self.uniform(0.1, 1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let s: f64 = w.iter().sum();
        w[0] += 1.0 - s;
        w
    }

    pub fn measure(&mut self, cone: &PolyhedralCone, cap: Cap, count: usize) -> DiscreteMeasure {
        let atoms = self.directions(cone, cap, count);
        let w = self.weights(count);
        DiscreteMeasure::from_directions(cap, atoms, w).expect("measure")
    }

    pub fn h_form(&mut self, cone: &PolyhedralCone, count: usize) -> PseudoCone {
        let items = (0..count)
            .map(|_| (self.direction(cone, Cap::OmegaCdual), self.uniform(0.5, 2.0)))
            .collect();
        PseudoCone::h_form(cone.clone(), items, self.tol).expect("h-form")
    }

    pub fn v_form(&mut self, cone: &PolyhedralCone, count: usize) -> PseudoCone {
        let items = (0..count)
            .map(|_| (self.direction(cone, Cap::OmegaC), self.uniform(0.5, 2.0)))
            .collect();
        PseudoCone::v_form(cone.clone(), items, self.tol).expect("v-form")
    }

    pub fn pseudo_cone(&mut self, cone: &PolyhedralCone) -> PseudoCone {
        let count = self.index(1, 6);
        if self.index(0, 1) == 0 {
            self.h_form(cone, count)
        } else {
            self.v_form(cone, count)
        }
    }

    pub fn sampled(&mut self, cone: &PolyhedralCone, cap: Cap, count: usize) -> SampledFunction {
        let samples = (0..count)
            .map(|_| (self.direction(cone, cap), self.uniform(0.5, 2.0)))
            .collect();
        SampledFunction::new(cap, samples).expect("samples")
    }
}
