//! Pointed polyhedral cones, their duals, the open caps on the unit sphere
//! and measures supported on those caps.
//!
//! A cone stores both descriptions: extreme generators (V) and outward facet
//! normals (H), `C = {x : <n_i, x> <= 0}`. Keeping both makes the dual a swap:
//! the generators of `C°` are the facet normals of `C` and vice versa.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{angle_between, orthogonal_complement, rank, vector, Vector};

/// Which open cap of the sphere a direction lives in.
///
/// `OmegaC` is `S^{n-1} ∩ int C`, `OmegaCdual` is `S^{n-1} ∩ int C°`, both
/// relative to the ambient cone `C` of the problem at hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cap {
    OmegaC,
    OmegaCdual,
}

impl Cap {
    pub fn opposite(self) -> Cap {
        match self {
            Cap::OmegaC => Cap::OmegaCdual,
            Cap::OmegaCdual => Cap::OmegaC,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Cap::OmegaC => "Omega_C",
            Cap::OmegaCdual => "Omega_C°",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Closed,
    Interior,
}

/// A pointed, full-dimensional polyhedral cone in R^n, n in {2, 3, 4}.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralCone {
    dim: usize,
    generators: Vec<Vector>,
    facet_normals: Vec<Vector>,
}

const PARALLEL_TOL: f64 = 1e-9;

fn check_dim(dim: usize) -> Result<()> {
    if (2..=4).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn normalized(coords: &[f64], dim: usize) -> Result<Vector> {
    if coords.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: coords.len(),
        });
    }
    let v = vector(coords);
    let norm = v.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::InconsistentCone(format!(
            "vector {coords:?} cannot be normalized"
        )));
    }
    Ok(v / norm)
}

fn push_unique(list: &mut Vec<Vector>, v: Vector) {
    if !list.iter().any(|w| angle_between(w, &v) < PARALLEL_TOL) {
        list.push(v);
    }
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

impl PolyhedralCone {
    /// Builds a cone from generators, computing facets by brute-force double
    /// description over all `(n-1)`-subsets. Non-extreme generators are dropped.
    pub fn from_generators(generators: &[Vec<f64>]) -> Result<Self> {
        let dim = generators.first().map(Vec::len).unwrap_or(0);
        check_dim(dim)?;
        let mut gens: Vec<Vector> = Vec::new();
        for g in generators {
            push_unique(&mut gens, normalized(g, dim)?);
        }
        let r = rank(&gens.iter().collect::<Vec<_>>(), 1e-10);
        if r < dim {
            return Err(Error::NotFullDimensional { dim, rank: r });
        }

        let mut facets: Vec<Vector> = Vec::new();
        for_each_subset(gens.len(), dim - 1, |subset| {
            let rows: Vec<&Vector> = subset.iter().map(|&i| &gens[i]).collect();
            let Some(a) = orthogonal_complement(&rows) else {
                return;
            };
            let a = a.normalize();
            let dots: Vec<f64> = gens.iter().map(|g| g.dot(&a)).collect();
            let tol = 1e-12;
            if dots.iter().all(|d| *d <= tol) {
                push_unique(&mut facets, a);
            } else if dots.iter().all(|d| *d >= -tol) {
                push_unique(&mut facets, -a);
            }
        });
        if facets.is_empty() || rank(&facets.iter().collect::<Vec<_>>(), 1e-10) < dim {
            return Err(Error::NotPointed);
        }

        // Keep extreme rays only: tight on facets spanning an (n-1)-space.
        let extreme: Vec<Vector> = gens
            .into_iter()
            .filter(|g| {
                let tight: Vec<&Vector> = facets.iter().filter(|a| a.dot(g).abs() <= 1e-9).collect();
                rank(&tight, 1e-9) >= dim - 1
            })
            .collect();

        Ok(Self {
            dim,
            generators: extreme,
            facet_normals: facets,
        })
    }

    /// Builds a cone from both descriptions and checks that they agree.
    pub fn from_description(generators: &[Vec<f64>], facet_normals: &[Vec<f64>]) -> Result<Self> {
        let cone = Self::from_generators(generators)?;
        let mut given: Vec<Vector> = Vec::new();
        for n in facet_normals {
            push_unique(&mut given, normalized(n, cone.dim)?);
        }
        for g in &cone.generators {
            if let Some(n) = given.iter().find(|n| n.dot(g) > 1e-12) {
                return Err(Error::InconsistentCone(format!(
                    "generator {:?} violates facet normal {:?}",
                    g.as_slice(),
                    n.as_slice()
                )));
            }
        }
        let same = given.len() == cone.facet_normals.len()
            && given
                .iter()
                .all(|n| cone.facet_normals.iter().any(|m| angle_between(m, n) < PARALLEL_TOL));
        if !same {
            return Err(Error::InconsistentCone(
                "facet normals do not match the facets of the generated cone".into(),
            ));
        }
        Ok(cone)
    }

    /// The nonnegative orthant `{x >= 0}`.
    pub fn orthant(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let gens: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::from_generators(&gens)
    }

    /// Polyhedral approximation of the circular cone of half-opening angle
    /// `half_angle` around the last coordinate axis, with `k` generators on
    /// the boundary circle (n = 3) or sphere (n = 4, Fibonacci points).
    pub fn circular(dim: usize, half_angle: f64, k: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(half_angle > 0.0 && half_angle < PI / 2.0) {
            return Err(Error::InconsistentCone(format!(
                "half angle {half_angle} must lie in (0, pi/2)"
            )));
        }
        let (s, c) = half_angle.sin_cos();
        let gens: Vec<Vec<f64>> = match dim {
            2 => vec![vec![s, c], vec![-s, c]],
            3 => (0..k.max(3))
                .map(|i| {
                    let phi = 2.0 * PI * i as f64 / k.max(3) as f64;
                    vec![s * phi.cos(), s * phi.sin(), c]
                })
                .collect(),
            _ => {
                let k = k.max(4);
                let golden = PI * (3.0 - 5f64.sqrt());
                (0..k)
                    .map(|i| {
                        let z = 1.0 - 2.0 * (i as f64 + 0.5) / k as f64;
                        let r = (1.0 - z * z).sqrt();
                        let phi = golden * i as f64;
                        vec![s * r * phi.cos(), s * r * phi.sin(), s * z, c]
                    })
                    .collect()
            }
        };
        Self::from_generators(&gens)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    pub fn facet_normals(&self) -> &[Vector] {
        &self.facet_normals
    }

    /// The dual cone `C° = {y : <x, y> <= 0 for all x in C}`.
    pub fn dual(&self) -> PolyhedralCone {
        PolyhedralCone {
            dim: self.dim,
            generators: self.facet_normals.clone(),
            facet_normals: self.generators.clone(),
        }
    }

    /// The cone whose interior defines `cap` (this cone or its dual).
    pub fn cap_cone(&self, cap: Cap) -> PolyhedralCone {
        match cap {
            Cap::OmegaC => self.clone(),
            Cap::OmegaCdual => self.dual(),
        }
    }

    /// Closed: `<n_i, x> <= 1e-12` for every facet. Interior:
    /// `<n_i, x> < -eps_int |x|` for every facet.
    pub fn contains(&self, x: &Vector, mode: Membership, tol: &Tolerances) -> bool {
        match mode {
            Membership::Closed => self.facet_normals.iter().all(|n| n.dot(x) <= tol.eps_closed),
            Membership::Interior => {
                let bound = tol.eps_int * x.norm();
                x.norm() > 0.0 && self.facet_normals.iter().all(|n| n.dot(x) < -bound)
            }
        }
    }

    /// `min_i -<n_i, x/|x|>`: positive inside, zero on the boundary.
    pub fn interior_margin(&self, x: &Vector) -> f64 {
        let norm = x.norm();
        self.facet_normals
            .iter()
            .map(|n| -n.dot(x) / norm)
            .fold(f64::INFINITY, f64::min)
    }

    /// Same cone up to ordering of generators (angular tolerance `tol`).
    pub fn same_as(&self, other: &PolyhedralCone, tol: f64) -> bool {
        let covers = |a: &[Vector], b: &[Vector]| {
            a.iter().all(|x| b.iter().any(|y| angle_between(x, y) < tol))
        };
        self.dim == other.dim
            && self.generators.len() == other.generators.len()
            && covers(&self.generators, &other.generators)
            && covers(&other.generators, &self.generators)
    }

    /// Validates `coords` as a unit direction strictly inside `cap`.
    pub fn direction(&self, coords: &[f64], cap: Cap, tol: &Tolerances) -> Result<Direction> {
        let v = normalized(coords, self.dim).map_err(|_| Error::DirectionOutsideCap {
            coords: coords.to_vec(),
            cap: cap.name(),
            margin: f64::NAN,
        })?;
        let margin = self.cap_cone(cap).interior_margin(&v);
        if margin <= tol.eps_int {
            return Err(Error::DirectionOutsideCap {
                coords: coords.to_vec(),
                cap: cap.name(),
                margin,
            });
        }
        Ok(Direction { coords: v, cap })
    }

    /// Whether `d` is strictly inside `cap` of this cone.
    pub fn check_direction(&self, d: &Direction, cap: Cap, tol: &Tolerances) -> Result<()> {
        let margin = self.cap_cone(cap).interior_margin(&d.coords);
        if d.cap != cap || margin <= tol.eps_int {
            return Err(Error::DirectionOutsideCap {
                coords: d.coords.as_slice().to_vec(),
                cap: cap.name(),
                margin,
            });
        }
        Ok(())
    }

    /// Equal-weight quadrature on the open cap.
    ///
    /// n = 2: midpoint rule with `resolution` equal sub-arcs. n = 3, 4:
    /// Halton points mapped area-uniformly into a bounding spherical cap,
    /// rejection-sampled into the open cap. The Halton sequence is shifted
    /// (Cranley-Patterson rotation) by a `seed`-derived offset.
    pub fn cap_quadrature(
        &self,
        cap: Cap,
        resolution: usize,
        seed: u64,
        tol: &Tolerances,
    ) -> Result<QuadratureMeasure> {
        if resolution < 2 {
            return Err(Error::InvalidMeasure(format!(
                "quadrature resolution must be >= 2, got {resolution}"
            )));
        }
        let region = self.cap_cone(cap);
        let nodes = if self.dim == 2 {
            arc_midpoints(&region, resolution)
        } else {
            halton_cap_nodes(&region, resolution, seed, tol.eps_int)
        };
        if nodes.len() < resolution
            || nodes.iter().any(|v| region.interior_margin(v) <= tol.eps_int)
        {
            return Err(Error::EmptyCap {
                cap: cap.name(),
                margin: tol.eps_int,
            });
        }
        let w = 1.0 / resolution as f64;
        let scheme = if self.dim == 2 {
            QuadratureScheme::ArcMidpoint { resolution }
        } else {
            QuadratureScheme::Halton { resolution, seed }
        };
        Ok(QuadratureMeasure {
            cap,
            nodes: nodes.into_iter().map(|coords| Direction { coords, cap }).collect(),
            weights: vec![w; resolution],
            scheme,
        })
    }
}

/// Start angle and opening of the arc spanned by a 2-D cone, counter-clockwise.
pub(crate) fn arc_of(cone: &PolyhedralCone) -> (f64, f64) {
    let g = cone.generators();
    let a = g[0][1].atan2(g[0][0]);
    let b = g[1][1].atan2(g[1][0]);
    let ccw = (b - a).rem_euclid(2.0 * PI);
    if ccw < PI {
        (a, ccw)
    } else {
        (b, 2.0 * PI - ccw)
    }
}

fn arc_midpoints(cone: &PolyhedralCone, resolution: usize) -> Vec<Vector> {
    let (start, len) = arc_of(cone);
    let step = len / resolution as f64;
    (0..resolution)
        .map(|k| {
            let t = start + (k as f64 + 0.5) * step;
            vector(&[t.cos(), t.sin()])
        })
        .collect()
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Polar angle with density proportional to `sin^(n-2)` on `[0, theta_max]`.
fn polar_angle(dim: usize, theta_max: f64, a: f64) -> f64 {
    match dim {
        3 => (1.0 - a * (1.0 - theta_max.cos())).clamp(-1.0, 1.0).acos(),
        _ => {
            let cdf = |t: f64| t - t.sin() * t.cos();
            let target = a * cdf(theta_max);
            let (mut lo, mut hi) = (0.0, theta_max);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if cdf(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    }
}

fn halton_cap_nodes(cone: &PolyhedralCone, resolution: usize, seed: u64, eps_int: f64) -> Vec<Vector> {
    let dim = cone.dim();
    let mut axis = cone.generators().iter().fold(Vector::zeros(dim), |acc, g| acc + g);
    axis /= axis.norm();
    let mut theta_max = cone
        .generators()
        .iter()
        .map(|g| angle_between(g, &axis))
        .fold(0.0, f64::max);
    if theta_max >= PI / 2.0 - 1e-6 {
        theta_max = PI;
    }
    // Householder reflection swapping e_last and the axis.
    let mut e = Vector::zeros(dim);
    e[dim - 1] = 1.0;
    let w = &e - &axis;
    let reflect = |x: Vector| -> Vector {
        let wn = w.norm_squared();
        if wn < 1e-30 {
            x
        } else {
            let proj = 2.0 * w.dot(&x) / wn;
            x - &w * proj
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts = [unit_f64(&mut rng), unit_f64(&mut rng), unit_f64(&mut rng)];
    let bases = [2u64, 3, 5];
    let limit = (resolution as u64).saturating_mul(10_000).max(1_000_000);
    let mut out = Vec::with_capacity(resolution);
    let mut i = 1u64;
    while out.len() < resolution && i <= limit {
        let h = |k: usize| (radical_inverse(i, bases[k]) + shifts[k]).fract();
        let theta = polar_angle(dim, theta_max, h(0));
        let (st, ct) = theta.sin_cos();
        let local = if dim == 3 {
            let phi = 2.0 * PI * h(1);
            vector(&[st * phi.cos(), st * phi.sin(), ct])
        } else {
            let z = 1.0 - 2.0 * h(1);
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * PI * h(2);
            vector(&[st * r * phi.cos(), st * r * phi.sin(), st * z, ct])
        };
        let v = reflect(local);
        let v = &v / v.norm();
        if cone.interior_margin(&v) > eps_int {
            out.push(v);
        }
        i += 1;
    }
    out
}

/// A unit vector tagged with the open cap it was validated against.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    coords: Vector,
    cap: Cap,
}

impl Direction {
    /// Wraps a vector without cap validation; the caller vouches for it.
    pub(crate) fn new_unchecked(coords: Vector, cap: Cap) -> Self {
        let n = coords.norm();
        Self {
            coords: coords / n,
            cap,
        }
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    pub fn cap(&self) -> Cap {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.coords.dot(&other.coords)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.coords.as_slice().to_vec()
    }
}

/// Weighted directions on one cap: the common view of discrete and
/// quadrature measures.
pub trait Measure {
    fn cap(&self) -> Cap;
    fn atoms(&self) -> &[Direction];
    fn weights(&self) -> &[f64];
    fn len(&self) -> usize {
        self.atoms().len()
    }
    fn is_empty(&self) -> bool {
        self.atoms().is_empty()
    }
    fn dim(&self) -> usize {
        self.atoms().first().map(Direction::dim).unwrap_or(0)
    }
}

/// Finitely many weighted atoms, pairwise distinct, weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    cap: Cap,
    atoms: Vec<Direction>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(
        cone: &PolyhedralCone,
        cap: Cap,
        atoms: &[Vec<f64>],
        weights: &[f64],
        tol: &Tolerances,
    ) -> Result<Self> {
        let dirs = atoms
            .iter()
            .map(|a| cone.direction(a, cap, tol))
            .collect::<Result<Vec<_>>>()?;
        Self::from_directions(cap, dirs, weights.to_vec())
    }

    pub fn from_directions(cap: Cap, atoms: Vec<Direction>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("measure has no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        if atoms.iter().any(|a| a.cap != cap) {
            return Err(Error::InvalidMeasure("atom tagged with the wrong cap".into()));
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if angle_between(&atoms[i].coords, &atoms[j].coords) <= 1e-10 {
                    return Err(Error::InvalidMeasure(format!(
                        "atoms {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Self { cap, atoms, weights })
    }

    /// Restricts to the atoms selected by `keep` and renormalizes.
    pub fn restricted(&self, keep: impl Fn(&Direction) -> bool) -> Option<DiscreteMeasure> {
        let (atoms, weights): (Vec<Direction>, Vec<f64>) = self
            .atoms
            .iter()
            .zip(&self.weights)
            .filter(|(a, _)| keep(a))
            .map(|(a, w)| (a.clone(), *w))
            .unzip();
        let total: f64 = weights.iter().sum();
        if atoms.is_empty() || total <= 0.0 {
            return None;
        }
        let weights = normalize_weights(weights.into_iter().map(|w| w / total).collect());
        Some(DiscreteMeasure {
            cap: self.cap,
            atoms,
            weights,
        })
    }
}

/// Folds the rounding residue of a normalization into the largest weight.
pub(crate) fn normalize_weights(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    if let Some((imax, _)) = w
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
    {
        w[imax] += 1.0 - total;
    }
    w
}

impl Measure for DiscreteMeasure {
    fn cap(&self) -> Cap {
        self.cap
    }
    fn atoms(&self) -> &[Direction] {
        &self.atoms
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuadratureScheme {
    ArcMidpoint { resolution: usize },
    Halton { resolution: usize, seed: u64 },
    Atomic,
}

/// Quadrature nodes standing in for a non-atomic measure on a cap.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMeasure {
    cap: Cap,
    nodes: Vec<Direction>,
    weights: Vec<f64>,
    scheme: QuadratureScheme,
}

impl QuadratureMeasure {
    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }

    pub fn nodes(&self) -> &[Direction] {
        &self.nodes
    }

    /// Largest single node weight, the mass granularity of cell integrals.
    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
}

impl From<DiscreteMeasure> for QuadratureMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        QuadratureMeasure {
            cap: m.cap,
            nodes: m.atoms,
            weights: m.weights,
            scheme: QuadratureScheme::Atomic,
        }
    }
}

impl Measure for QuadratureMeasure {
    fn cap(&self) -> Cap {
        self.cap
    }
    fn atoms(&self) -> &[Direction] {
        &self.nodes
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
}
