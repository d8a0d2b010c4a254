//! Semi-discrete Gauss image solver.
//!
//! `μ` is a quadrature measure on the dual cap, `ν` is atomic on the primal
//! cap. For potentials `g` on the atoms, the c-transform
//! `h(u) = max_j (c(u, v_j) - g_j)` gives the convex dual functional
//!
//! ```text
//! J(g) = sum_i w_i max_j (c_ij - g_j) + sum_j b_j g_j
//! ```
//!
//! whose subgradient is `b - m(g)`, with `m_j` the `μ`-mass of the cell of
//! atom `j`. Cell `j` is exactly the set of normals whose reverse Gauss image
//! under `K = conv{e^{g_j} v_j} + C` is `v_j`.
//!
//! The minimizer is found in two phases. Damped Newton steps on the
//! log-sum-exp smoothing `J_ε`, with `ε` lowered by a factor 10 per level,
//! bring the cells close to their targets. Then the quadrature nodes near
//! cell boundaries are re-assigned by an exact transport solve with the far
//! nodes frozen. The second phase returns potentials at which boundary nodes
//! are exactly tied, so the split of their mass can match `ν` to rounding.
//! If the smoothed phase stalls, Polyak subgradient descent on `J` takes
//! over, with the same boundary solve tried along the way.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{Cap, DiscreteMeasure, Measure, PolyhedralCone, QuadratureMeasure};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::angle_between;
use crate::lp;
use crate::pseudocone::{argmax_with_ties, GaussImage, PseudoCone};
use crate::transport::{cost_of_dot, transport_simplex, CostMatrix};

const CHUNK: usize = 4096;
const MAX_BAND: usize = 4096;
const MAX_POTENTIAL: f64 = 50.0;
/// Smallest smoothing parameter of the Newton phase.
const SMOOTH_FLOOR: f64 = 1e-7;
const NEWTON_PER_LEVEL: usize = 25;
/// Smoothing level from which the exact band polish is attempted.
const POLISH_FROM: f64 = 1e-3;
const EARLY_BAND: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiDiscreteOptions {
    /// Target for the largest cell-mass residual.
    pub tol_mass: f64,
    pub max_iter: usize,
    pub tolerances: Tolerances,
}

impl Default for SemiDiscreteOptions {
    fn default() -> Self {
        Self {
            tol_mass: 1e-6,
            max_iter: 500,
            tolerances: Tolerances::default(),
        }
    }
}

/// Potentials on the atoms of `ν`, gauge `g_0 = 0`. `g_j = log ρ_K(v_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub g: Vec<f64>,
}

impl DualPoint {
    pub fn zero(m: usize) -> Self {
        Self { g: vec![0.0; m] }
    }

    pub fn gauged(mut g: Vec<f64>) -> Self {
        if let Some(&t) = g.first() {
            for x in &mut g {
                *x -= t;
            }
        }
        Self { g }
    }
}

/// Cell masses of the quadrature under the argmax assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    /// Mass of nodes whose maximizer is unique and equal to `j`.
    pub masses: Vec<f64>,
    /// Masses with tied nodes given to their lowest tied index.
    pub lowest_index_masses: Vec<f64>,
    /// Mass of nodes within the tie gap of two or more atoms.
    pub tie_mass: f64,
    /// `masses - b`.
    pub residuals: Vec<f64>,
    /// Smallest achievable `max_j |m_j - b_j|` when tie mass is split among
    /// its tied atoms.
    pub balanced_residual: f64,
    pub tie_nodes: usize,
}

impl CellReport {
    pub fn max_strict_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, r| a.max(r.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct SemiDiscreteSolution {
    pub dual: DualPoint,
    pub k: PseudoCone,
    pub cells: CellReport,
    pub objective: f64,
    pub iterations: usize,
    /// `J` at each recorded iterate: the start, the end of each smoothing
    /// level, each boundary solve and each subgradient step.
    pub objective_trace: Vec<f64>,
    /// Balanced cell residual at the same iterates.
    pub residual_trace: Vec<f64>,
    /// Whether the boundary re-assignment phase produced the result.
    pub polished: bool,
}

/// Quadrature nodes against atoms with the pairwise products precomputed.
pub struct SemiDiscreteProblem {
    weights: Vec<f64>,
    targets: Vec<f64>,
    dots: Vec<f64>,
    costs: Vec<f64>,
    m: usize,
    tol: Tolerances,
}

struct Pass {
    objective: f64,
    report: CellReport,
}

impl SemiDiscreteProblem {
    pub fn new(mu: &QuadratureMeasure, nu: &DiscreteMeasure, tol: Tolerances) -> Result<Self> {
        if mu.cap() != Cap::OmegaCdual || nu.cap() != Cap::OmegaC {
            return Err(Error::InvalidMeasure(
                "μ must live on the dual cap and ν on the primal cap".into(),
            ));
        }
        if mu.dim() != nu.dim() {
            return Err(Error::DimensionMismatch {
                expected: nu.dim(),
                got: mu.dim(),
            });
        }
        let m = nu.len();
        let rows: Vec<(Vec<f64>, Vec<f64>)> = mu
            .atoms()
            .par_iter()
            .map(|u| {
                let mut d = Vec::with_capacity(m);
                let mut c = Vec::with_capacity(m);
                for v in nu.atoms() {
                    let dot = u.coords().dot(v.coords());
                    c.push(cost_of_dot(dot, &tol)?);
                    d.push(dot);
                }
                Ok((d, c))
            })
            .collect::<Result<_>>()?;
        let (dots, costs): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
        Ok(Self {
            weights: mu.weights().to_vec(),
            targets: nu.weights().to_vec(),
            dots: dots.concat(),
            costs: costs.concat(),
            m,
            tol,
        })
    }

    pub fn nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn atoms(&self) -> usize {
        self.m
    }

    fn chunks(&self) -> Vec<std::ops::Range<usize>> {
        let n = self.nodes();
        (0..n.div_ceil(CHUNK))
            .map(|k| k * CHUNK..((k + 1) * CHUNK).min(n))
            .collect()
    }

    /// `J(g)`.
    pub fn objective(&self, g: &[f64]) -> f64 {
        let m = self.m;
        let partial: Vec<f64> = self
            .chunks()
            .into_par_iter()
            .map(|range| {
                range
                    .map(|i| {
                        let c = &self.costs[i * m..(i + 1) * m];
                        let best = c.iter().zip(g).map(|(c, g)| c - g).fold(f64::NEG_INFINITY, f64::max);
                        self.weights[i] * best
                    })
                    .sum::<f64>()
            })
            .collect();
        partial.iter().sum::<f64>() + self.targets.iter().zip(g).map(|(b, g)| b * g).sum::<f64>()
    }

    fn pass(&self, g: &[f64]) -> Result<Pass> {
        let m = self.m;
        let radii: Vec<f64> = g.iter().map(|x| x.exp()).collect();
        struct Partial {
            value: f64,
            masses: Vec<f64>,
            lowest: Vec<f64>,
            tie_mass: f64,
            tie_nodes: usize,
            groups: BTreeMap<Vec<usize>, f64>,
        }
        let partials: Vec<Partial> = self
            .chunks()
            .into_par_iter()
            .map(|range| {
                let mut p = Partial {
                    value: 0.0,
                    masses: vec![0.0; m],
                    lowest: vec![0.0; m],
                    tie_mass: 0.0,
                    tie_nodes: 0,
                    groups: BTreeMap::new(),
                };
                let mut scores = vec![0.0; m];
                for i in range {
                    let w = self.weights[i];
                    let d = &self.dots[i * m..(i + 1) * m];
                    for j in 0..m {
                        scores[j] = d[j] * radii[j];
                    }
                    let am = argmax_with_ties(&scores, self.tol.tau_tie);
                    p.value += w * (self.costs[i * m + am.first] - g[am.first]);
                    p.lowest[am.first] += w;
                    if am.ties.is_empty() {
                        p.masses[am.first] += w;
                    } else {
                        p.tie_mass += w;
                        p.tie_nodes += 1;
                        *p.groups.entry(am.ties).or_insert(0.0) += w;
                    }
                }
                p
            })
            .collect();
        let mut value = 0.0;
        let mut masses = vec![0.0; m];
        let mut lowest = vec![0.0; m];
        let mut tie_mass = 0.0;
        let mut tie_nodes = 0;
        let mut groups: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for p in partials {
            value += p.value;
            for j in 0..m {
                masses[j] += p.masses[j];
                lowest[j] += p.lowest[j];
            }
            tie_mass += p.tie_mass;
            tie_nodes += p.tie_nodes;
            for (k, w) in p.groups {
                *groups.entry(k).or_insert(0.0) += w;
            }
        }
        let objective = value + self.targets.iter().zip(g).map(|(b, g)| b * g).sum::<f64>();
        let report = build_report(masses, lowest, tie_mass, tie_nodes, &groups, &self.targets)?;
        Ok(Pass { objective, report })
    }

    /// Cell masses at `g`.
    pub fn cells(&self, g: &[f64]) -> Result<CellReport> {
        self.pass(g).map(|p| p.report)
    }

    /// Largest `|e^{h(u_i)} e^{g_j} |<u_i, v_j>| - 1|` over nodes with a
    /// unique cell `j`, with `h` the c-transform of `g`.
    pub fn equality_residual(&self, g: &[f64]) -> f64 {
        let m = self.m;
        let radii: Vec<f64> = g.iter().map(|x| x.exp()).collect();
        self.chunks()
            .into_par_iter()
            .map(|range| {
                let mut worst = 0.0f64;
                let mut scores = vec![0.0; m];
                for i in range {
                    let d = &self.dots[i * m..(i + 1) * m];
                    for j in 0..m {
                        scores[j] = d[j] * radii[j];
                    }
                    let am = argmax_with_ties(&scores, self.tol.tau_tie);
                    if !am.ties.is_empty() {
                        continue;
                    }
                    let c = &self.costs[i * m..(i + 1) * m];
                    let h = c.iter().zip(g).map(|(c, g)| c - g).fold(f64::NEG_INFINITY, f64::max);
                    let j = am.first;
                    worst = worst.max((h.exp() * radii[j] * d[j].abs() - 1.0).abs());
                }
                worst
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Re-assigns the nodes closest to a cell boundary by an exact transport
    /// solve with every other node frozen in its current cell.
    fn polish(&self, g: &[f64], tol_mass: f64, max_band: usize) -> Result<Option<(Vec<f64>, Pass)>> {
        let m = self.m;
        let n = self.nodes();
        // (node, winner, margin in c - g units)
        let mut ranked: Vec<(usize, usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let c = &self.costs[i * m..(i + 1) * m];
                let (mut top, mut second, mut arg) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
                for j in 0..m {
                    let s = c[j] - g[j];
                    if s > top {
                        second = top;
                        top = s;
                        arg = j;
                    } else if s > second {
                        second = s;
                    }
                }
                (i, arg, top - second)
            })
            .collect();
        ranked.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));

        let mut sizes: Vec<usize> = [256, 512, 1024, 2048, MAX_BAND]
            .into_iter()
            .filter(|&s| s < n && s <= max_band)
            .collect();
        if n <= MAX_BAND {
            sizes = vec![n];
        }
        for size in sizes {
            let (band, frozen) = ranked.split_at(size);
            let mut demand = self.targets.clone();
            for &(i, j, _) in frozen {
                demand[j] -= self.weights[i];
            }
            if demand.iter().any(|d| *d < -1e-15) {
                continue;
            }
            for d in &mut demand {
                *d = d.max(0.0);
            }
            let mut order: Vec<(usize, usize)> = band.iter().map(|&(i, j, _)| (j, i)).collect();
            order.sort_unstable();
            let supply: Vec<f64> = order.iter().map(|&(_, i)| self.weights[i]).collect();
            let cost = CostMatrix::from_rows(
                order
                    .iter()
                    .map(|&(_, i)| self.costs[i * m..(i + 1) * m].to_vec())
                    .collect(),
            );
            let res = transport_simplex(&supply, &demand, &cost);
            let candidate = DualPoint::gauged(res.g).g;
            if candidate.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let pass = self.pass(&candidate)?;
            if pass.report.balanced_residual <= tol_mass {
                return Ok(Some((candidate, pass)));
            }
        }
        Ok(None)
    }

    /// `J_ε`, its gradient `b - m_ε` and (optionally) its Hessian, for the
    /// log-sum-exp smoothing `max -> ε log Σ exp(· / ε)`.
    fn smooth_pass(&self, g: &[f64], eps: f64, hessian: bool) -> (f64, Vec<f64>, Vec<f64>) {
        let m = self.m;
        let partials: Vec<(f64, Vec<f64>, Vec<f64>)> = self
            .chunks()
            .into_par_iter()
            .map(|range| {
                let mut value = 0.0;
                let mut mass = vec![0.0; m];
                let mut hess = if hessian { vec![0.0; m * m] } else { Vec::new() };
                let mut p = vec![0.0; m];
                for i in range {
                    let w = self.weights[i];
                    let c = &self.costs[i * m..(i + 1) * m];
                    let top = c.iter().zip(g).map(|(c, g)| c - g).fold(f64::NEG_INFINITY, f64::max);
                    let mut z = 0.0;
                    for j in 0..m {
                        let x = (c[j] - g[j] - top) / eps;
                        p[j] = if x < -60.0 { 0.0 } else { x.exp() };
                        z += p[j];
                    }
                    value += w * (top + eps * z.ln());
                    for j in 0..m {
                        p[j] /= z;
                        mass[j] += w * p[j];
                    }
                    if hessian {
                        for a in 0..m {
                            if p[a] == 0.0 {
                                continue;
                            }
                            hess[a * m + a] += w * p[a];
                            for b in 0..m {
                                hess[a * m + b] -= w * p[a] * p[b];
                            }
                        }
                    }
                }
                (value, mass, hess)
            })
            .collect();
        let mut value = 0.0;
        let mut grad = self.targets.clone();
        let mut hess = if hessian { vec![0.0; m * m] } else { Vec::new() };
        for (v, mass, h) in partials {
            value += v;
            for j in 0..m {
                grad[j] -= mass[j];
            }
            for (a, b) in hess.iter_mut().zip(h) {
                *a += b / eps;
            }
        }
        value += self.targets.iter().zip(g).map(|(b, g)| b * g).sum::<f64>();
        (value, grad, hess)
    }

    /// Damped Newton on `J_ε` from `g` until the smoothed residual is at most
    /// `target`. Returns the number of steps taken.
    fn newton_level(&self, g: &mut Vec<f64>, eps: f64, target: f64, budget: usize) -> usize {
        let m = self.m;
        let k = m - 1;
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut steps = 0;
        while steps < budget.min(NEWTON_PER_LEVEL) {
            let (value, grad, hess) = self.smooth_pass(g, eps, true);
            let err = inf(&grad);
            if err <= target {
                break;
            }
            // reduced system on g_1.., gauge g_0 fixed
            let mut h = nalgebra::DMatrix::from_fn(k, k, |a, b| hess[(a + 1) * m + b + 1]);
            let scale = (0..k).map(|a| h[(a, a)]).fold(0.0, f64::max).max(1e-300);
            for a in 0..k {
                h[(a, a)] += 1e-12 * scale;
            }
            let rhs = nalgebra::DVector::from_iterator(k, grad[1..].iter().map(|x| -x));
            let Some(d) = h.clone().cholesky().map(|c| c.solve(&rhs)).or_else(|| h.lu().solve(&rhs)) else {
                break;
            };
            steps += 1;
            // J_ε is convex, so Armijo on its value keeps the iterates out of
            // the flat directions where some cell empties; near the optimum the
            // value change drowns in rounding and the residual decides
            let slope: f64 = (0..k).map(|a| grad[a + 1] * d[a]).sum();
            let noise = 1e-13 * value.abs().max(1.0);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = std::iter::once(0.0).chain((0..k).map(|a| g[a + 1] + t * d[a])).collect();
                let (vt, gt, _) = self.smooth_pass(&trial, eps, false);
                let armijo = vt <= value + 1e-4 * t * slope;
                let flat = vt <= value + noise && inf(&gt) <= (1.0 - 0.5 * t) * err;
                if armijo || flat {
                    *g = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        steps
    }

    /// Minimizes `J`; see the module documentation.
    pub fn solve(&self, cone: &PolyhedralCone, nu: &DiscreteMeasure, opts: &SemiDiscreteOptions) -> Result<SemiDiscreteSolution> {
        let m = self.m;
        let finish = |g: Vec<f64>, pass: Pass, iterations: usize, trace: (Vec<f64>, Vec<f64>), polished: bool| {
            let items = nu
                .atoms()
                .iter()
                .zip(&g)
                .map(|(v, x)| (v.clone(), x.exp()))
                .collect();
            let k = PseudoCone::v_form(cone.clone(), items, opts.tolerances)?;
            Ok(SemiDiscreteSolution {
                dual: DualPoint { g },
                k,
                cells: pass.report,
                objective: pass.objective,
                iterations,
                objective_trace: trace.0,
                residual_trace: trace.1,
                polished,
            })
        };

        let mut g = vec![0.0; m];
        let first = self.pass(&g)?;
        if m == 1 || first.report.balanced_residual <= opts.tol_mass {
            let trace = (vec![first.objective], vec![first.report.balanced_residual]);
            return finish(g, first, 0, trace, false);
        }
        let mut objective_trace = vec![first.objective];
        let mut residual_trace = vec![first.report.balanced_residual];

        // Phase 1: smoothed Newton with decreasing ε. Once the smoothing is
        // fine, the cells are exact except near the boundaries, which the
        // band polish re-assigns.
        let mut used = 0;
        let mut gs = g.clone();
        let mut eps = 1.0;
        while eps >= 0.99 * SMOOTH_FLOOR && used < opts.max_iter {
            let target = (0.1 * opts.tol_mass).max(0.1 * eps);
            used += self.newton_level(&mut gs, eps, target, opts.max_iter - used);
            if !gs.iter().all(|x| x.is_finite() && x.abs() <= MAX_POTENTIAL) {
                gs = g.clone();
                break;
            }
            if eps <= POLISH_FROM {
                let at = self.pass(&gs)?;
                objective_trace.push(at.objective);
                residual_trace.push(at.report.balanced_residual);
                if at.report.balanced_residual <= opts.tol_mass {
                    return finish(gs, at, used, (objective_trace, residual_trace), false);
                }
                let band = if eps <= 0.99 * SMOOTH_FLOOR { MAX_BAND } else { EARLY_BAND };
                if let Some((gp, pass)) = self.polish(&gs, opts.tol_mass, band)? {
                    objective_trace.push(pass.objective);
                    residual_trace.push(pass.report.balanced_residual);
                    return finish(gp, pass, used, (objective_trace, residual_trace), true);
                }
            }
            eps *= 0.1;
        }
        g = gs;
        if self.nodes() <= MAX_BAND {
            used += 1;
            if let Some((gp, pass)) = self.polish(&vec![0.0; m], opts.tol_mass, MAX_BAND)? {
                objective_trace.push(pass.objective);
                residual_trace.push(pass.report.balanced_residual);
                return finish(gp, pass, used, (objective_trace, residual_trace), true);
            }
        }
        log::info!("smoothed Newton did not reach the target; falling back to subgradient descent");

        // Lower bound on min J: the value of the product coupling.
        let lower = (0..self.nodes())
            .map(|i| {
                self.weights[i]
                    * self.costs[i * m..(i + 1) * m]
                        .iter()
                        .zip(&self.targets)
                        .map(|(c, b)| c * b)
                        .sum::<f64>()
            })
            .sum::<f64>();
        let mut current = self.pass(&g)?;
        let mut best_j = current.objective;
        let mut best_g = g.clone();
        let mut delta = (current.objective - lower).max(1e-3);
        let mut stall = 0;
        let mut last_polish = used;

        for it in used + 1..=opts.max_iter {
            let sub: Vec<f64> = (0..m)
                .map(|j| self.targets[j] - current.report.lowest_index_masses[j])
                .collect();
            let sub_max = sub.iter().fold(0.0f64, |a, s| a.max(s.abs()));
            if sub_max <= 0.02 && it - last_polish >= 10 {
                last_polish = it;
                if let Some((gp, pass)) = self.polish(&g, opts.tol_mass, MAX_BAND)? {
                    objective_trace.push(pass.objective);
                    residual_trace.push(pass.report.balanced_residual);
                    return finish(gp, pass, it, (objective_trace, residual_trace), true);
                }
            }
            let norm2: f64 = sub.iter().map(|s| s * s).sum();
            if norm2 == 0.0 {
                break;
            }
            let level = (best_j - delta).max(lower);
            let mut alpha = (current.objective - level).max(0.0) / norm2;
            // Backtracking when the step overshoots.
            let mut next = None;
            for _ in 0..12 {
                let trial = DualPoint::gauged(g.iter().zip(&sub).map(|(x, s)| x - alpha * s).collect()).g;
                let pass = self.pass(&trial)?;
                if pass.objective <= current.objective + delta {
                    next = Some((trial, pass));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((trial, pass)) = next else {
                delta *= 0.5;
                continue;
            };
            if trial.iter().any(|x| x.abs() > MAX_POTENTIAL) {
                return Err(Error::InfeasibleGeometry(format!(
                    "potentials left [-{MAX_POTENTIAL}, {MAX_POTENTIAL}]: some atom's cell stays empty (support too close to the cap boundary?)"
                )));
            }
            g = trial;
            current = pass;
            objective_trace.push(current.objective);
            residual_trace.push(current.report.balanced_residual);
            if current.report.balanced_residual <= opts.tol_mass {
                return finish(g, current, it, (objective_trace, residual_trace), false);
            }
            if current.objective < best_j - 0.5 * delta {
                best_j = current.objective;
                best_g = g.clone();
                stall = 0;
            } else {
                if current.objective < best_j {
                    best_j = current.objective;
                    best_g = g.clone();
                }
                stall += 1;
                if stall >= 5 {
                    delta *= 0.5;
                    stall = 0;
                    g = best_g.clone();
                    current = self.pass(&g)?;
                }
            }
        }
        let best = self.pass(&best_g)?;
        Err(Error::NoConvergence {
            iterations: opts.max_iter,
            residual: best.report.balanced_residual.min(current.report.balanced_residual),
        })
    }
}

fn build_report(
    masses: Vec<f64>,
    lowest: Vec<f64>,
    tie_mass: f64,
    tie_nodes: usize,
    groups: &BTreeMap<Vec<usize>, f64>,
    targets: &[f64],
) -> Result<CellReport> {
    let residuals: Vec<f64> = masses.iter().zip(targets).map(|(m, b)| m - b).collect();
    let strict = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let balanced_residual = if groups.is_empty() {
        strict
    } else {
        let groups: Vec<(f64, Vec<usize>)> = groups.iter().map(|(k, w)| (*w, k.clone())).collect();
        lp::balance_allocation(&masses, targets, &groups)?.0
    };
    Ok(CellReport {
        masses,
        lowest_index_masses: lowest,
        tie_mass,
        residuals,
        balanced_residual,
        tie_nodes,
    })
}

/// `J(g)` for the given measures.
pub fn dual_objective(g: &DualPoint, mu: &QuadratureMeasure, nu: &DiscreteMeasure, tol: &Tolerances) -> Result<f64> {
    Ok(SemiDiscreteProblem::new(mu, nu, *tol)?.objective(&g.g))
}

/// Cell masses at `g`.
pub fn cell_masses(g: &DualPoint, mu: &QuadratureMeasure, nu: &DiscreteMeasure, tol: &Tolerances) -> Result<CellReport> {
    SemiDiscreteProblem::new(mu, nu, *tol)?.cells(&g.g)
}

/// Minimizes `J` and returns the potentials, the pseudo-cone
/// `conv{e^{g_j} v_j} + C` and its cell report.
pub fn solve_semidiscrete(
    cone: &PolyhedralCone,
    mu: &QuadratureMeasure,
    nu: &DiscreteMeasure,
    opts: &SemiDiscreteOptions,
) -> Result<SemiDiscreteSolution> {
    SemiDiscreteProblem::new(mu, nu, opts.tolerances)?.solve(cone, nu, opts)
}

/// Outcome of re-deriving `(α*_K)♯μ` from the reverse Gauss map of `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    /// Mass sent to each atom of `ν` by nodes with a unique image.
    pub masses: Vec<f64>,
    pub tie_mass: f64,
    /// Mass whose image is a vertex of `K` that is not an atom of `ν`.
    pub unmatched_mass: f64,
    /// `max_j |m_j - b_j|` with tie mass split optimally among its tie sets.
    pub max_residual: f64,
    /// `max_j |m_j - b_j|` ignoring tie mass altogether.
    pub strict_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Pushes the quadrature through the reverse Gauss map of `K` and compares
/// the result with `ν`.
pub fn verify_pushforward(k: &PseudoCone, mu: &QuadratureMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<PushforwardReport> {
    let m = nu.len();
    let to_atom: Vec<Option<usize>> = k
        .items()
        .iter()
        .map(|(v, _)| {
            nu.atoms()
                .iter()
                .position(|a| angle_between(a.coords(), v.coords()) <= 1e-10)
        })
        .collect();
    let images: Vec<GaussImage> = mu
        .atoms()
        .par_iter()
        .map(|u| k.reverse_gauss_map(u))
        .collect::<Result<_>>()?;
    let mut masses = vec![0.0; m];
    let mut tie_mass = 0.0;
    let mut unmatched = 0.0;
    let mut groups: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (img, w) in images.iter().zip(mu.weights()) {
        match img {
            GaussImage::Unique { index, .. } => match to_atom[*index] {
                Some(j) => masses[j] += w,
                None => unmatched += w,
            },
            GaussImage::Tie { indices } => {
                let mapped: Vec<usize> = indices.iter().filter_map(|&i| to_atom[i]).collect();
                tie_mass += w;
                if mapped.is_empty() {
                    unmatched += w;
                } else {
                    *groups.entry(mapped).or_insert(0.0) += w;
                }
            }
        }
    }
    let report = build_report(masses.clone(), masses.clone(), tie_mass, 0, &groups, nu.weights())?;
    let max_residual = report.balanced_residual + unmatched;
    Ok(PushforwardReport {
        masses,
        tie_mass,
        unmatched_mass: unmatched,
        max_residual,
        strict_residual: report.max_strict_residual(),
        tolerance: tol,
        pass: max_residual <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn t() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn arc_two_atoms_is_balanced_at_zero() {
        let (mu, nu) = fixtures::arc_two_atoms(512, &[0.5, 0.5]);
        let rep = cell_masses(&DualPoint::zero(2), &mu, &nu, &t()).unwrap();
        assert_eq!(rep.masses, vec![0.5, 0.5]);
        assert_eq!(rep.tie_mass, 0.0);
        let sol = solve_semidiscrete(&fixtures::quadrant(), &mu, &nu, &SemiDiscreteOptions::default()).unwrap();
        assert_eq!(sol.dual.g, vec![0.0, 0.0]);
        assert_eq!(sol.iterations, 0);
        assert!(sol.k.same_as(&fixtures::two_vertex_body(), 1e-15));
    }

    #[test]
    fn cells_do_not_depend_on_targets() {
        let (mu, nu) = fixtures::arc_two_atoms(512, &[0.25, 0.75]);
        let rep = cell_masses(&DualPoint::zero(2), &mu, &nu, &t()).unwrap();
        assert_eq!(rep.masses, vec![0.5, 0.5]);
        assert_eq!(rep.residuals, vec![0.25, -0.25]);
    }

    #[test]
    fn unequal_weights_move_the_second_vertex_inward() {
        let (mu, nu) = fixtures::arc_two_atoms(512, &[0.25, 0.75]);
        let sol = solve_semidiscrete(&fixtures::quadrant(), &mu, &nu, &SemiDiscreteOptions::default()).unwrap();
        assert!(sol.dual.g[1] < 0.0);
        assert!(sol.cells.balanced_residual <= 1e-6);
        let rep = verify_pushforward(&sol.k, &mu, &nu, 1e-6).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn single_atom_returns_immediately() {
        let q = fixtures::quadrant();
        let mu = q.cap_quadrature(Cap::OmegaCdual, 64, 0, &t()).unwrap();
        let nu = DiscreteMeasure::new(&q, Cap::OmegaC, &[vec![0.6, 0.8]], &[1.0], &t()).unwrap();
        let sol = solve_semidiscrete(&q, &mu, &nu, &SemiDiscreteOptions::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.k.items()[0].1, 1.0);
        assert_eq!(sol.cells.masses, vec![1.0]);
        let j0 = dual_objective(&DualPoint { g: vec![0.0] }, &mu, &nu, &t()).unwrap();
        let j1 = dual_objective(&DualPoint { g: vec![3.0] }, &mu, &nu, &t()).unwrap();
        assert!((j0 - j1).abs() < 1e-12);
        assert!(verify_pushforward(&sol.k, &mu, &nu, 0.0).unwrap().pass);
    }

    #[test]
    fn gauge_shift_leaves_objective_and_cells() {
        let (mu, nu) = fixtures::arc_two_atoms(512, &[0.25, 0.75]);
        let p = SemiDiscreteProblem::new(&mu, &nu, t()).unwrap();
        let g = [0.0, -0.05];
        for shift in [-3.0, 1.0, 7.0] {
            let h: Vec<f64> = g.iter().map(|x| x + shift).collect();
            assert!((p.objective(&g) - p.objective(&h)).abs() < 1e-12);
            assert_eq!(p.cells(&g).unwrap().masses, p.cells(&h).unwrap().masses);
        }
    }

    #[test]
    fn perturbed_potentials_fail_verification() {
        let (mu, nu) = fixtures::arc_two_atoms(512, &[0.25, 0.75]);
        let sol = solve_semidiscrete(&fixtures::quadrant(), &mu, &nu, &SemiDiscreteOptions::default()).unwrap();
        let mut g = sol.dual.g.clone();
        g[1] += 0.1;
        let items = nu.atoms().iter().zip(&g).map(|(v, x)| (v.clone(), x.exp())).collect();
        let k = PseudoCone::v_form(fixtures::quadrant(), items, t()).unwrap();
        let rep = verify_pushforward(&k, &mu, &nu, 1e-6).unwrap();
        assert!(!rep.pass);
        assert!(rep.max_residual >= 0.01);
    }
}
