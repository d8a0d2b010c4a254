//! Pseudo-cones: closed convex `K ⊆ C` with `o ∉ K` and `K + C = K`.
//!
//! Two representations are supported over a recession cone `C`:
//!
//! * H-form: `K = {x ∈ C : <u_i, x> <= -c_i}` with `u_i` in the dual cap and `c_i > 0`;
//! * V-form: `K = conv{r_j v_j} + C` with `v_j` in the primal cap and `r_j > 0`.
//!
//! The copolar `K* = {y : <x, y> <= -1 for all x in K}` swaps the two forms
//! and lives over the dual cone, so every operation has a cheap closed form
//! in one representation and a linear program in the other.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::cone::{Cap, Direction, PolyhedralCone};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{angle_between, Vector};
use crate::lp::{self, Halfspace};
use crate::polyhedron;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Form {
    #[serde(rename = "H")]
    H,
    #[serde(rename = "V")]
    V,
}

/// A pseudo-cone in canonical (irredundant) form.
#[derive(Debug, Clone)]
pub struct PseudoCone {
    cone: PolyhedralCone,
    form: Form,
    items: Vec<(Direction, f64)>,
    warnings: Vec<String>,
    tol: Tolerances,
    halfspaces: OnceLock<Vec<Halfspace>>,
}

impl PartialEq for PseudoCone {
    fn eq(&self, other: &Self) -> bool {
        self.cone == other.cone && self.form == other.form && self.items == other.items
    }
}

/// Result of the reverse radial Gauss map at one normal direction.
#[derive(Debug, Clone, PartialEq)]
pub enum GaussImage {
    /// The support maximum is isolated at vertex `index`.
    Unique { index: usize, v: Direction },
    /// Several vertices attain the maximum within the tie gap.
    Tie { indices: Vec<usize> },
}

/// A point of the boundary with a radial direction and an outer normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub v: Direction,
    pub u: Direction,
    pub point: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EqualityCase {
    Strict,
    Equal { contact: Contact },
    Violated,
}

/// Argmax with relative tie detection.
///
/// `first` is the lowest index among the tied maximizers; `ties` lists all of
/// them when there is more than one and is empty otherwise.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Argmax {
    pub first: usize,
    pub ties: Vec<usize>,
}

pub(crate) fn argmax_with_ties(scores: &[f64], tau: f64) -> Argmax {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gap = tau * best.abs();
    let mut first = usize::MAX;
    let mut count = 0;
    for (j, s) in scores.iter().enumerate() {
        if best - s <= gap {
            if first == usize::MAX {
                first = j;
            }
            count += 1;
        }
    }
    let ties = if count > 1 {
        scores
            .iter()
            .enumerate()
            .filter(|(_, s)| best - **s <= gap)
            .map(|(j, _)| j)
            .collect()
    } else {
        Vec::new()
    };
    Argmax { first, ties }
}

fn merge_duplicates(items: Vec<(Direction, f64)>, keep_larger: bool) -> Vec<(Direction, f64)> {
    let mut out: Vec<(Direction, f64)> = Vec::with_capacity(items.len());
    for (d, val) in items {
        match out
            .iter_mut()
            .find(|(e, _)| angle_between(e.coords(), d.coords()) <= 1e-10)
        {
            Some((_, existing)) => {
                *existing = if keep_larger { existing.max(val) } else { existing.min(val) };
            }
            None => out.push((d, val)),
        }
    }
    out
}

impl PseudoCone {
    fn raw(cone: PolyhedralCone, form: Form, items: Vec<(Direction, f64)>, tol: Tolerances) -> Self {
        Self {
            cone,
            form,
            items,
            warnings: Vec::new(),
            tol,
            halfspaces: OnceLock::new(),
        }
    }

    fn validate(cone: &PolyhedralCone, cap: Cap, items: &[(Direction, f64)], tol: &Tolerances) -> Result<()> {
        if items.is_empty() {
            return Err(Error::InvalidPseudoCone(
                "at least one constraint or vertex is required".into(),
            ));
        }
        for (d, val) in items {
            if d.dim() != cone.dim() {
                return Err(Error::DimensionMismatch {
                    expected: cone.dim(),
                    got: d.dim(),
                });
            }
            cone.check_direction(d, cap, tol)?;
            if !(val.is_finite() && *val > 0.0) {
                return Err(Error::InvalidPseudoCone(format!(
                    "value {val} must be positive and finite"
                )));
            }
        }
        Ok(())
    }

    /// `K = {x ∈ C : <u_i, x> <= -c_i}`. Constraints that are nowhere tight
    /// on the boundary are removed.
    pub fn h_form(cone: PolyhedralCone, constraints: Vec<(Direction, f64)>, tol: Tolerances) -> Result<Self> {
        Self::validate(&cone, Cap::OmegaCdual, &constraints, &tol)?;
        let items = merge_duplicates(constraints, true);
        let full = Self::raw(cone, Form::H, items, tol);
        let mut keep = Vec::new();
        let mut warnings = Vec::new();
        for (i, (u, c)) in full.items.iter().enumerate() {
            let h = full.support_unchecked(u.coords())?;
            if h < -c - tol.tau_geo * c.max(1.0) {
                warnings.push(format!("constraint {i} is redundant and was dropped"));
            } else {
                keep.push((u.clone(), *c));
            }
        }
        let mut k = Self::raw(full.cone, Form::H, keep, tol);
        k.warnings = warnings;
        Ok(k)
    }

    /// `K = conv{r_j v_j} + C`. Points absorbed by the others are dropped
    /// with a warning.
    pub fn v_form(cone: PolyhedralCone, vertices: Vec<(Direction, f64)>, tol: Tolerances) -> Result<Self> {
        Self::validate(&cone, Cap::OmegaC, &vertices, &tol)?;
        let items = merge_duplicates(vertices, false);
        let full = Self::raw(cone, Form::V, items, tol);
        let mut keep = Vec::new();
        let mut warnings = Vec::new();
        for (j, (v, r)) in full.items.iter().enumerate() {
            let rho = full.radial_unchecked(v.coords())?;
            if rho < r - tol.tau_geo * r.max(1.0) {
                warnings.push(format!(
                    "vertex {j} absorbed: radial value {rho} below radius {r}"
                ));
            } else {
                keep.push((v.clone(), *r));
            }
        }
        let mut k = Self::raw(full.cone, Form::V, keep, tol);
        k.warnings = warnings;
        Ok(k)
    }

    pub fn cone(&self) -> &PolyhedralCone {
        &self.cone
    }

    pub fn form(&self) -> Form {
        self.form
    }

    /// Constraint `(u_i, c_i)` pairs (H-form) or vertex `(v_j, r_j)` pairs (V-form).
    pub fn items(&self) -> &[(Direction, f64)] {
        &self.items
    }

    /// Same cone, form and items up to ordering, values within relative `tol`.
    pub fn same_as(&self, other: &PseudoCone, tol: f64) -> bool {
        let covers = |a: &[(Direction, f64)], b: &[(Direction, f64)]| {
            a.iter().all(|(d, x)| {
                b.iter().any(|(e, y)| {
                    angle_between(d.coords(), e.coords()) <= tol && (x - y).abs() <= tol * x.abs().max(1.0)
                })
            })
        };
        self.form == other.form
            && self.cone.same_as(&other.cone, tol)
            && self.items.len() == other.items.len()
            && covers(&self.items, &other.items)
            && covers(&other.items, &self.items)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn dim(&self) -> usize {
        self.cone.dim()
    }

    fn points(&self) -> Vec<Vector> {
        self.items.iter().map(|(v, r)| v.coords() * *r).collect()
    }

    /// H-description `<a, x> <= b` including the facets of the recession cone.
    pub fn halfspaces(&self) -> &[Halfspace] {
        self.halfspaces.get_or_init(|| match self.form {
            Form::H => self
                .items
                .iter()
                .map(|(u, c)| (u.coords().clone(), -c))
                .chain(self.cone.facet_normals().iter().map(|n| (n.clone(), 0.0)))
                .collect(),
            Form::V => polyhedron::hull_facets(&self.points(), self.cone.generators()),
        })
    }

    /// Radial function at an interior direction of `C`.
    pub fn radial(&self, v: &Direction) -> Result<f64> {
        self.cone.check_direction(v, Cap::OmegaC, &self.tol)?;
        self.radial_unchecked(v.coords())
    }

    /// Radial function at any unit vector of the closed cap; `+inf` if the
    /// ray misses `K`.
    pub fn radial_unchecked(&self, v: &Vector) -> Result<f64> {
        match self.form {
            Form::H => Ok(self
                .items
                .iter()
                .map(|(u, c)| {
                    let d = u.coords().dot(v);
                    if d < 0.0 { c / -d } else { f64::INFINITY }
                })
                .fold(0.0, f64::max)),
            Form::V => match lp::ray_entry(&self.points(), self.cone.generators(), v) {
                Ok((r, _)) => Ok(r),
                Err(Error::Infeasible(_)) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            },
        }
    }

    /// Support function `h_K(u) = sup <u, x>`, negative on the dual cap.
    pub fn support(&self, u: &Direction) -> Result<f64> {
        self.cone.check_direction(u, Cap::OmegaCdual, &self.tol)?;
        self.support_unchecked(u.coords())
    }

    /// Support function at any vector of the closed dual cone.
    pub fn support_unchecked(&self, u: &Vector) -> Result<f64> {
        match self.form {
            Form::V => Ok(self
                .items
                .iter()
                .map(|(v, r)| u.dot(v.coords()) * r)
                .fold(f64::NEG_INFINITY, f64::max)),
            Form::H => lp::maximize_over_halfspaces(self.halfspaces(), u).map(|(val, _)| val),
        }
    }

    /// `-h_K(u)`, positive on the dual cap.
    pub fn hbar(&self, u: &Direction) -> Result<f64> {
        self.support(u).map(|h| -h)
    }

    /// The copolar pseudo-cone over the dual cone.
    pub fn copolar(&self) -> PseudoCone {
        let items = self
            .items
            .iter()
            .map(|(d, val)| (Direction::new_unchecked(d.coords().clone(), d.cap().opposite()), 1.0 / val))
            .collect();
        let form = match self.form {
            Form::H => Form::V,
            Form::V => Form::H,
        };
        Self::raw(self.cone.dual(), form, items, self.tol)
    }

    /// `λK` for `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> PseudoCone {
        let items = self
            .items
            .iter()
            .map(|(d, val)| (d.clone(), val * lambda))
            .collect();
        let mut k = Self::raw(self.cone.clone(), self.form, items, self.tol);
        k.warnings = self.warnings.clone();
        k
    }

    /// Reverse radial Gauss map of a V-form pseudo-cone: the vertex maximizing
    /// `<u, r_j v_j>`, or the tie set when the maximum is not isolated.
    pub fn reverse_gauss_map(&self, u: &Direction) -> Result<GaussImage> {
        self.cone.check_direction(u, Cap::OmegaCdual, &self.tol)?;
        if self.form != Form::V {
            return Err(Error::InvalidPseudoCone(
                "reverse Gauss map needs the vertex form".into(),
            ));
        }
        let scores = self.vertex_scores(u.coords());
        let am = argmax_with_ties(&scores, self.tol.tau_tie);
        Ok(if am.ties.is_empty() {
            GaussImage::Unique {
                index: am.first,
                v: self.items[am.first].0.clone(),
            }
        } else {
            GaussImage::Tie { indices: am.ties }
        })
    }

    /// `<u, v_j> * r_j` for every vertex, in the arithmetic shared with the
    /// semi-discrete cell assignment.
    pub(crate) fn vertex_scores(&self, u: &Vector) -> Vec<f64> {
        self.items.iter().map(|(v, r)| u.dot(v.coords()) * r).collect()
    }

    /// Whether `u` is an outer normal of `K` at the radial point in direction `v`:
    /// `<u, ρ_K(v) v> >= h_K(u) - tol |h_K(u)|`.
    pub fn in_pseudo_subdifferential(&self, v: &Direction, u: &Direction, tol: f64) -> Result<bool> {
        let rho = self.radial(v)?;
        let h = self.support(u)?;
        Ok(rho * u.coords().dot(v.coords()) >= h - tol * h.abs())
    }

    /// Membership of an arbitrary point.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        match self.form {
            Form::H => {
                let scale = 1.0 + x.norm();
                self.halfspaces()
                    .iter()
                    .all(|(a, b)| a.dot(x) <= b + tol * scale)
            }
            Form::V => lp::in_hull_plus_cone(&self.points(), self.cone.generators(), x, tol * (1.0 + x.norm())),
        }
    }

    /// Extreme points of `K`.
    pub fn extreme_points(&self) -> Vec<Vector> {
        match self.form {
            Form::H => polyhedron::vertices(self.halfspaces()),
            Form::V => {
                let rows = self.halfspaces();
                self.points()
                    .into_iter()
                    .filter(|p| polyhedron::is_extreme(rows, p, 1e-9))
                    .collect()
            }
        }
    }

    /// The point of `K` closest to the origin.
    pub fn min_norm_point(&self) -> Result<Vector> {
        polyhedron::min_norm_point(self.halfspaces())
            .ok_or_else(|| Error::InvalidPseudoCone("no closest point found".into()))
    }

    /// `K` rescaled to have distance 1 from the origin, with the factor used.
    pub fn normalized(&self) -> Result<(PseudoCone, f64)> {
        let d = self.min_norm_point()?.norm();
        Ok((self.scaled(1.0 / d), 1.0 / d))
    }
}

/// Positive samples of a function on one cap.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    cap: Cap,
    samples: Vec<(Direction, f64)>,
    floor: f64,
}

impl SampledFunction {
    pub fn new(cap: Cap, samples: Vec<(Direction, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        for (i, (d, val)) in samples.iter().enumerate() {
            if d.cap() != cap {
                return Err(Error::InvalidPseudoCone(format!(
                    "sample {i} is tagged with the wrong cap"
                )));
            }
            if !(val.is_finite() && *val > 0.0) {
                return Err(Error::InvalidPseudoCone(format!(
                    "sample value {val} must be positive and finite"
                )));
            }
            if samples[..i]
                .iter()
                .any(|(e, _)| angle_between(e.coords(), d.coords()) <= 1e-10)
            {
                return Err(Error::InvalidPseudoCone(format!("sample {i} is a duplicate")));
            }
        }
        let floor = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        Ok(Self { cap, samples, floor })
    }

    /// Samples the radial function of `k` at the given directions.
    pub fn of_radial(k: &PseudoCone, dirs: &[Direction]) -> Result<Self> {
        let samples = dirs
            .iter()
            .map(|d| Ok((d.clone(), k.radial(d)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Cap::OmegaC, samples)
    }

    pub fn cap(&self) -> Cap {
        self.cap
    }

    pub fn samples(&self) -> &[(Direction, f64)] {
        &self.samples
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn value_at(&self, v: &Direction) -> Option<f64> {
        self.samples
            .iter()
            .find(|(d, _)| angle_between(d.coords(), v.coords()) <= 1e-10)
            .map(|s| s.1)
    }

    /// The smallest pseudo-cone containing every `f(v_j) v_j`. The recession
    /// cone is `C` for samples on the primal cap and `C°` for the dual cap.
    pub fn convexify(&self, cone: &PolyhedralCone) -> Result<PseudoCone> {
        let tol = Tolerances::default();
        self.convexify_with(cone, tol)
    }

    pub fn convexify_with(&self, cone: &PolyhedralCone, tol: Tolerances) -> Result<PseudoCone> {
        let ambient = cone.cap_cone(self.cap);
        let items = self
            .samples
            .iter()
            .map(|(d, val)| (Direction::new_unchecked(d.coords().clone(), Cap::OmegaC), *val))
            .collect();
        PseudoCone::v_form(ambient, items, tol)
    }

    /// `f*(u) = max_j 1 / (|<u, v_j>| f(v_j))`, a function on the opposite cap.
    pub fn pseudo_conjugate(&self) -> PseudoConjugate {
        PseudoConjugate {
            domain: self.cap.opposite(),
            samples: self
                .samples
                .iter()
                .map(|(d, val)| (d.coords().clone(), *val))
                .collect(),
            eps_orth: Tolerances::default().eps_orth,
        }
    }
}

/// The pseudo-conjugate of a sampled function, evaluable anywhere on its cap.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoConjugate {
    domain: Cap,
    samples: Vec<(Vector, f64)>,
    eps_orth: f64,
}

impl PseudoConjugate {
    pub fn domain(&self) -> Cap {
        self.domain
    }

    pub fn eval(&self, u: &Direction) -> Result<f64> {
        if u.cap() != self.domain {
            return Err(Error::DirectionOutsideCap {
                coords: u.to_vec(),
                cap: self.domain.name(),
                margin: f64::NAN,
            });
        }
        self.eval_vec(u.coords())
    }

    /// Evaluation at an arbitrary unit vector (closed cap allowed).
    pub fn eval_vec(&self, u: &Vector) -> Result<f64> {
        let mut best = 0.0f64;
        for (v, f) in &self.samples {
            let d = u.dot(v).abs();
            if d < self.eps_orth {
                return Err(Error::OrthogonalPair { dot: d });
            }
            best = best.max(1.0 / (d * f));
        }
        Ok(best)
    }

    /// Samples the conjugate at the given directions.
    pub fn sample(&self, dirs: &[Direction]) -> Result<SampledFunction> {
        let samples = dirs
            .iter()
            .map(|d| Ok((d.clone(), self.eval(d)?)))
            .collect::<Result<Vec<_>>>()?;
        SampledFunction::new(self.domain, samples)
    }
}

/// Classifies `e = f(v) f*(u) |<u, v>|` against 1: equality marks a contact
/// pair of the convexification.
pub fn check_equality_case(f: &SampledFunction, v: &Direction, u: &Direction, tol: f64) -> Result<EqualityCase> {
    let fv = f
        .value_at(v)
        .ok_or_else(|| Error::InvalidPseudoCone("v is not a sample direction of f".into()))?;
    let dot = u.coords().dot(v.coords()).abs();
    let fstar = f.pseudo_conjugate();
    if dot < fstar.eps_orth {
        return Err(Error::OrthogonalPair { dot });
    }
    let e = fv * fstar.eval(u)? * dot;
    Ok(if e < 1.0 - tol {
        EqualityCase::Violated
    } else if (e - 1.0).abs() <= tol {
        EqualityCase::Equal {
            contact: Contact {
                v: v.clone(),
                u: u.clone(),
                point: v.coords() * fv,
            },
        }
    } else {
        EqualityCase::Strict
    })
}
