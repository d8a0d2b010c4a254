//! End-to-end Gauss image solutions with certificates.
//!
//! Two regimes:
//!
//! * **Discrete.** Both measures are atomic. The optimal coupling `π*` and
//!   potentials `(h, g)` give `K = {x ∈ C : <u_i, x> <= -e^{-h_i}}`. A
//!   discrete `μ` puts mass on normals of whole facets, so the conclusion is
//!   certified at the coupling level: every support pair of `π*` is a contact
//!   pair of `K`. No single-valued map is checked.
//! * **Semi-discrete.** `μ` is a quadrature on the dual cap. The cell solver
//!   returns `K = conv{e^{g_j} v_j} + C` and the certificate pushes `μ`
//!   through the reverse Gauss map of `K`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{Cap, DiscreteMeasure, Direction, Measure, PolyhedralCone, QuadratureMeasure};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::pseudocone::{GaussImage, PseudoCone};
use crate::semidiscrete::{solve_semidiscrete, verify_pushforward, CellReport, DualPoint, SemiDiscreteOptions};
use crate::transport::{dual_value, enumerate_bases, primal_value, solve_max_transport, CostMatrix, TransportSolution};

/// Relative duality gap accepted by the discrete certificate.
pub const GAP_TOL: f64 = 1e-9;
/// Accepted `|e^{h} ρ_K(v) |<u, v>| - 1|` on contact pairs.
pub const EQUALITY_TOL: f64 = 1e-8;
/// Plan entries below this are not treated as support.
pub const SUPPORT_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Discrete,
    SemiDiscrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Verified,
    Failed,
}

/// Residuals recomputed from the solution. Fields that do not apply to a
/// regime are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    /// `|S - I| / max(1, |S|)`.
    pub duality_gap: Option<f64>,
    /// Largest `|h_i + g_j - c_ij|` on the plan support.
    pub slackness: Option<f64>,
    /// Largest `c_ij - h_i - g_j` over all pairs (positive = infeasible).
    pub feasibility: Option<f64>,
    /// Largest deviation of the plan marginals from the weights.
    pub marginals: Option<f64>,
    pub support_pairs: usize,
    /// Support pairs `(i, j)` with `u_i` not an outer normal at `ρ_K(v_j) v_j`.
    pub subdifferential_failures: usize,
    /// Largest `|e^{h(u)} ρ_K(v) |<u, v>| - 1|` over contact pairs.
    pub equality_residual: f64,
    /// Largest cell-mass residual of the reverse Gauss map pushforward.
    pub pushforward_residual: Option<f64>,
    pub pushforward_tolerance: Option<f64>,
    pub tie_mass: Option<f64>,
    pub failures: Vec<String>,
}

impl Certificates {
    pub fn status(&self) -> Status {
        if self.failures.is_empty() {
            Status::Verified
        } else {
            Status::Failed
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionDetail {
    Discrete(TransportSolution),
    SemiDiscrete {
        dual: DualPoint,
        cells: CellReport,
        objective: f64,
        iterations: usize,
        objective_trace: Vec<f64>,
        residual_trace: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct GaussSolution {
    pub regime: Regime,
    pub k: PseudoCone,
    pub detail: SolutionDetail,
    pub certificates: Certificates,
    pub status: Status,
    pub warnings: Vec<String>,
}

/// Builds `⟨φ⟩*` for `φ_i = e^{h_i}`: constraints `<u_i, x> <= -e^{-h_i}`.
pub fn body_from_potentials(cone: &PolyhedralCone, mu: &DiscreteMeasure, h: &[f64], tol: Tolerances) -> Result<PseudoCone> {
    let items = mu
        .atoms()
        .iter()
        .zip(h)
        .map(|(u, h)| (u.clone(), (-h).exp()))
        .collect();
    PseudoCone::h_form(cone.clone(), items, tol)
}

/// Recomputes every discrete certificate from `K`, the plan and the
/// potentials, without trusting stored values.
pub fn certify_discrete(
    k: &PseudoCone,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    plan: &[(usize, usize, f64)],
    h: &[f64],
    g: &[f64],
    tol: &Tolerances,
) -> Result<Certificates> {
    let (m, n) = (mu.len(), nu.len());
    if h.len() != m || g.len() != n {
        return Err(Error::DimensionMismatch {
            expected: m + n,
            got: h.len() + g.len(),
        });
    }
    if plan.iter().any(|&(i, j, p)| i >= m || j >= n || !p.is_finite() || p < 0.0) {
        return Err(Error::CertificationFailed("plan entry out of range or negative".into()));
    }
    let cost = CostMatrix::from_measures(mu, nu, tol)?;
    let mut cert = Certificates::default();
    let mut failures = Vec::new();
    let scale = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| cost.get(i, j).abs())
        .fold(1.0, f64::max);

    let mut rows = vec![0.0; m];
    let mut cols = vec![0.0; n];
    for &(i, j, p) in plan {
        rows[i] += p;
        cols[j] += p;
    }
    let marg = rows
        .iter()
        .zip(mu.weights())
        .chain(cols.iter().zip(nu.weights()))
        .fold(0.0f64, |a, (x, w)| a.max((x - w).abs()));
    if marg > 1e-9 {
        failures.push(format!("plan marginals deviate from the weights by {marg:e}"));
    }

    let s = primal_value(plan, &cost);
    let i_val = dual_value(h, g, mu.weights(), nu.weights());
    let gap = (s - i_val).abs() / s.abs().max(1.0);
    if gap > GAP_TOL {
        failures.push(format!("duality gap {gap:e} (S = {s}, I = {i_val})"));
    }

    let mut feas = f64::NEG_INFINITY;
    for i in 0..m {
        for j in 0..n {
            feas = feas.max(cost.get(i, j) - h[i] - g[j]);
        }
    }
    if feas > 1e-9 * scale {
        failures.push(format!("potentials infeasible by {feas:e}"));
    }

    let radii = nu
        .atoms()
        .iter()
        .map(|v| k.radial(v))
        .collect::<Result<Vec<f64>>>()?;
    let mut slack = 0.0f64;
    let mut eq = 0.0f64;
    let mut support_pairs = 0;
    let mut sub_fail = 0;
    for &(i, j, p) in plan {
        if p <= SUPPORT_MASS {
            continue;
        }
        support_pairs += 1;
        let (u, v) = (&mu.atoms()[i], &nu.atoms()[j]);
        let sl = (h[i] + g[j] - cost.get(i, j)).abs();
        slack = slack.max(sl);
        if !k.in_pseudo_subdifferential(v, u, tol.tau_geo)? {
            sub_fail += 1;
            failures.push(format!("pair ({i}, {j}) is not in the pseudo-subdifferential of K"));
        }
        let e = (h[i].exp() * radii[j] * u.dot(v).abs() - 1.0).abs();
        eq = eq.max(e);
        if e > EQUALITY_TOL {
            failures.push(format!("equality case fails at pair ({i}, {j}): residual {e:e}"));
        }
    }
    if slack > 1e-9 * scale {
        failures.push(format!("complementary slackness violated by {slack:e}"));
    }
    cert.duality_gap = Some(gap);
    cert.slackness = Some(slack);
    cert.feasibility = Some(feas);
    cert.marginals = Some(marg);
    cert.support_pairs = support_pairs;
    cert.subdifferential_failures = sub_fail;
    cert.equality_residual = eq;
    cert.failures = failures;
    Ok(cert)
}

/// Optimal coupling, reconstructed `K` and coupling-level certificates.
///
/// Returns `CertificationFailed` naming the first offending check.
pub fn solve_discrete_gauss(
    cone: &PolyhedralCone,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    tol: &Tolerances,
) -> Result<GaussSolution> {
    let sol = solve_max_transport(mu, nu, tol)?;
    let k = body_from_potentials(cone, mu, &sol.h, *tol)?;
    let certificates = certify_discrete(&k, mu, nu, &sol.plan, &sol.h, &sol.g, tol)?;
    if let Some(first) = certificates.failures.first() {
        return Err(Error::CertificationFailed(first.clone()));
    }
    let mut warnings = k.warnings().to_vec();
    if k.items().len() < mu.len() {
        warnings.push(format!(
            "{} of {} constraints are redundant",
            mu.len() - k.items().len(),
            mu.len()
        ));
    }
    Ok(GaussSolution {
        regime: Regime::Discrete,
        k,
        detail: SolutionDetail::Discrete(sol),
        status: certificates.status(),
        certificates,
        warnings,
    })
}

/// Pushforward tolerance for a quadrature: `max(tol_mass, 2 / nodes)` on an
/// arc, `tol_mass` otherwise.
pub fn pushforward_tolerance(mu: &QuadratureMeasure, tol_mass: f64) -> f64 {
    if mu.dim() == 2 {
        tol_mass.max(2.0 / mu.len() as f64)
    } else {
        tol_mass.max(2.0 * mu.max_weight())
    }
}

/// Map-level certificates for a V-form `K`: pushforward through the reverse
/// Gauss map, and `ρ_K(v) |<u, v>| / |h_K(u)| = 1` at every node with a
/// unique image.
pub fn certify_semidiscrete(
    k: &PseudoCone,
    mu: &QuadratureMeasure,
    nu: &DiscreteMeasure,
    push_tol: f64,
) -> Result<Certificates> {
    let push = verify_pushforward(k, mu, nu, push_tol)?;
    let mut failures = Vec::new();
    if !push.pass {
        failures.push(format!(
            "pushforward residual {:e} exceeds {push_tol:e}",
            push.max_residual
        ));
    }
    // Radii from the LP route, support values from the vertex route.
    let radii = k
        .items()
        .iter()
        .map(|(v, _)| k.radial(v))
        .collect::<Result<Vec<f64>>>()?;
    let eq = mu
        .atoms()
        .par_iter()
        .map(|u| -> Result<f64> {
            match k.reverse_gauss_map(u)? {
                GaussImage::Unique { index, v } => {
                    let hk = k.support(u)?;
                    Ok((radii[index] * u.dot(&v).abs() / hk.abs() - 1.0).abs())
                }
                GaussImage::Tie { .. } => Ok(0.0),
            }
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if eq > EQUALITY_TOL {
        failures.push(format!("equality case residual {eq:e} on a cell"));
    }
    Ok(Certificates {
        support_pairs: mu.len(),
        equality_residual: eq,
        pushforward_residual: Some(push.max_residual),
        pushforward_tolerance: Some(push_tol),
        tie_mass: Some(push.tie_mass),
        failures,
        ..Certificates::default()
    })
}

/// Semi-discrete solve plus map-level certificates.
pub fn solve_semidiscrete_gauss(
    cone: &PolyhedralCone,
    mu: &QuadratureMeasure,
    nu: &DiscreteMeasure,
    opts: &SemiDiscreteOptions,
) -> Result<GaussSolution> {
    let sol = solve_semidiscrete(cone, mu, nu, opts)?;
    let push_tol = pushforward_tolerance(mu, opts.tol_mass);
    let certificates = certify_semidiscrete(&sol.k, mu, nu, push_tol)?;
    let mut warnings = sol.k.warnings().to_vec();
    if sol.k.items().len() < nu.len() {
        warnings.push(format!(
            "{} of {} vertices are not retained",
            nu.len() - sol.k.items().len(),
            nu.len()
        ));
    }
    if sol.cells.tie_nodes > 0 {
        warnings.push(format!(
            "{} quadrature nodes ({:.3e} mass) lie on cell boundaries",
            sol.cells.tie_nodes, sol.cells.tie_mass
        ));
    }
    Ok(GaussSolution {
        regime: Regime::SemiDiscrete,
        k: sol.k,
        detail: SolutionDetail::SemiDiscrete {
            dual: sol.dual,
            cells: sol.cells,
            objective: sol.objective,
            iterations: sol.iterations,
            objective_trace: sol.objective_trace,
            residual_trace: sol.residual_trace,
        },
        status: certificates.status(),
        certificates,
        warnings,
    })
}

/// Result of the enumeration oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub plan: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    /// `ρ_K(v_j)` found by a grid scan along each ray, refined by bisection.
    pub radii: Vec<f64>,
    pub offsets: Vec<f64>,
}

/// Enumerates every basic feasible coupling (at most 3 atoms per side) and
/// rebuilds the radii of `K` by scanning each ray of `ν` on a grid of
/// `grid_resolution` steps against the constraints `<u_i, x> <= -e^{-h_i}`.
pub fn brute_force_gauss_oracle(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid_resolution: usize,
    tol: &Tolerances,
) -> Result<OracleResult> {
    let cost = CostMatrix::from_measures(mu, nu, tol)?;
    let res = enumerate_bases(mu.weights(), nu.weights(), &cost)?;
    let offsets: Vec<f64> = res.h.iter().map(|h| (-h).exp()).collect();
    let inside = |x: &Vector| {
        mu.atoms()
            .iter()
            .zip(&offsets)
            .all(|(u, c)| u.coords().dot(x) <= -c)
    };
    let radii = nu
        .atoms()
        .iter()
        .map(|v| {
            // the ray enters K before r_max
            let r_max = mu
                .atoms()
                .iter()
                .zip(&offsets)
                .map(|(u, c)| c / u.dot(v).abs())
                .fold(0.0, f64::max)
                * 2.0;
            let step = r_max / grid_resolution.max(1) as f64;
            let mut k = 1;
            while k < grid_resolution && !inside(&(v.coords() * (k as f64 * step))) {
                k += 1;
            }
            let (mut lo, mut hi) = ((k - 1) as f64 * step, k as f64 * step);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if inside(&(v.coords() * mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            hi
        })
        .collect();
    Ok(OracleResult {
        value: res.primal,
        plan: res.plan,
        h: res.h,
        g: res.g,
        radii,
        offsets,
    })
}

/// Source measure of a truncation run.
#[derive(Debug, Clone)]
pub enum SourceMeasure {
    Discrete(DiscreteMeasure),
    Quadrature(QuadratureMeasure),
}

impl SourceMeasure {
    pub fn regime(&self) -> Regime {
        match self {
            SourceMeasure::Discrete(_) => Regime::Discrete,
            SourceMeasure::Quadrature(_) => Regime::SemiDiscrete,
        }
    }

    pub fn solve(&self, cone: &PolyhedralCone, nu: &DiscreteMeasure, opts: &SemiDiscreteOptions) -> Result<GaussSolution> {
        match self {
            SourceMeasure::Discrete(mu) => solve_discrete_gauss(cone, mu, nu, &opts.tolerances),
            SourceMeasure::Quadrature(mu) => solve_semidiscrete_gauss(cone, mu, nu, opts),
        }
    }
}

/// Exhaustion of `Ω_C` by margins `δ_j` with the normalized solutions.
#[derive(Debug, Clone)]
pub struct TruncationStudy {
    /// Interior margins `δ_1 > δ_2 > ...` defining `η_j`.
    pub margins: Vec<f64>,
    /// `ν(η_j)`.
    pub captured_mass: Vec<f64>,
    pub kept_atoms: Vec<usize>,
    /// Solutions scaled to distance 1 from the origin.
    pub solutions: Vec<PseudoCone>,
    pub scale_factors: Vec<f64>,
    pub statuses: Vec<Status>,
    /// Radius `t` of the ball the bodies are clipped to.
    pub ball: f64,
    /// Sampled Hausdorff distances between `K_a ∩ tB` and `K_b ∩ tB`.
    pub distances: Vec<Vec<f64>>,
}

/// Margin of the `j`-th exhaustion set (0-based).
pub fn truncation_margin(step: usize) -> f64 {
    0.05 * 0.1f64.powi(step as i32)
}

/// Runs the truncation scheme `ν_j = ν(· ∩ η_j) / ν(η_j)` for `steps`
/// nested sets and tabulates distances between consecutive solutions.
pub fn truncation_experiment(
    cone: &PolyhedralCone,
    mu: &SourceMeasure,
    nu_raw: &DiscreteMeasure,
    steps: usize,
    ball: f64,
    opts: &SemiDiscreteOptions,
) -> Result<TruncationStudy> {
    let mut study = TruncationStudy {
        margins: Vec::new(),
        captured_mass: Vec::new(),
        kept_atoms: Vec::new(),
        solutions: Vec::new(),
        scale_factors: Vec::new(),
        statuses: Vec::new(),
        ball,
        distances: Vec::new(),
    };
    for step in 0..steps {
        let delta = truncation_margin(step);
        let keep = |d: &Direction| cone.interior_margin(d.coords()) >= delta;
        let mass: f64 = nu_raw
            .atoms()
            .iter()
            .zip(nu_raw.weights())
            .filter(|(a, _)| keep(a))
            .map(|(_, w)| w)
            .sum();
        let nu = nu_raw
            .restricted(keep)
            .ok_or(Error::EmptyTruncation { margin: delta })?;
        log::info!("truncation step {}: margin {delta:e}, {} atoms", step + 1, nu.len());
        let sol = mu.solve(cone, &nu, opts)?;
        let (k, factor) = sol.k.normalized()?;
        study.margins.push(delta);
        study.captured_mass.push(mass);
        study.kept_atoms.push(nu.len());
        study.solutions.push(k);
        study.scale_factors.push(factor);
        study.statuses.push(sol.status);
    }
    let dirs = cone.cap_quadrature(Cap::OmegaC, if cone.dim() == 2 { 256 } else { 400 }, 0, &opts.tolerances)?;
    let clouds = study
        .solutions
        .iter()
        .map(|k| clipped_cloud(k, dirs.nodes(), ball, 24))
        .collect::<Result<Vec<_>>>()?;
    let s = clouds.len();
    let mut table = vec![vec![0.0; s]; s];
    for a in 0..s {
        for b in a + 1..s {
            let d = hausdorff(&clouds[a], &clouds[b], ball);
            table[a][b] = d;
            table[b][a] = d;
        }
    }
    study.distances = table;
    Ok(study)
}

/// Points `r v` with `ρ_K(v) <= r <= t` on a radial grid.
pub fn clipped_cloud(k: &PseudoCone, dirs: &[Direction], t: f64, layers: usize) -> Result<Vec<Vector>> {
    let mut out = Vec::new();
    for v in dirs {
        let rho = k.radial(v)?;
        if rho > t {
            continue;
        }
        for l in 0..=layers {
            let r = rho + (t - rho) * l as f64 / layers as f64;
            out.push(v.coords() * r);
        }
    }
    Ok(out)
}

/// Symmetric Hausdorff distance of two point clouds; an empty cloud is at
/// distance `t` from a nonempty one.
pub fn hausdorff(a: &[Vector], b: &[Vector], t: f64) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return t,
        _ => {}
    }
    let dist2 = |x: &Vector, y: &Vector| -> f64 { x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum() };
    let one_sided = |p: &[Vector], q: &[Vector]| {
        p.par_iter()
            .map(|x| q.iter().map(|y| dist2(x, y)).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max)
            .sqrt()
    };
    one_sided(a, b).max(one_sided(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn two_atoms_end_to_end() {
        let (mu, nu) = fixtures::two_atoms();
        let t = Tolerances::default();
        let sol = solve_discrete_gauss(&fixtures::quadrant(), &mu, &nu, &t).unwrap();
        assert_eq!(sol.status, Status::Verified);
        for (_, c) in sol.k.items() {
            assert!((c - 0.96).abs() < 1e-9);
        }
        assert!(sol.certificates.pushforward_residual.is_none());
        assert_eq!(sol.certificates.support_pairs, 2);
        let (expected, _, _) = fixtures::two_atoms_reconstruction();
        assert!(sol.k.same_as(&expected, 1e-9));
    }

    #[test]
    fn edited_offset_breaks_certificates() {
        let (mu, nu) = fixtures::two_atoms();
        let t = Tolerances::default();
        let sol = solve_discrete_gauss(&fixtures::quadrant(), &mu, &nu, &t).unwrap();
        let SolutionDetail::Discrete(ts) = &sol.detail else { panic!() };
        let mut h = ts.h.clone();
        h[0] = -(0.95f64.ln());
        let k = body_from_potentials(&fixtures::quadrant(), &mu, &h, t).unwrap();
        let cert = certify_discrete(&k, &mu, &nu, &ts.plan, &ts.h, &ts.g, &t).unwrap();
        assert_eq!(cert.status(), Status::Failed);
    }

    #[test]
    fn antipodal_single_atom() {
        let q = fixtures::quadrant();
        let t = Tolerances::default();
        let mu = DiscreteMeasure::new(&q, Cap::OmegaCdual, &[vec![-0.6, -0.8]], &[1.0], &t).unwrap();
        let nu = DiscreteMeasure::new(&q, Cap::OmegaC, &[vec![0.6, 0.8]], &[1.0], &t).unwrap();
        let sol = solve_discrete_gauss(&q, &mu, &nu, &t).unwrap();
        let SolutionDetail::Discrete(ts) = &sol.detail else { panic!() };
        assert!(ts.primal.abs() < 1e-15);
        assert!((sol.k.items()[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_rebuilds_radii_of_its_own_potentials() {
        let (mu, nu) = fixtures::two_atoms();
        let t = Tolerances::default();
        let o = brute_force_gauss_oracle(&mu, &nu, 10_000, &t).unwrap();
        assert!((o.value - fixtures::TWO_ATOMS_VALUE).abs() < 1e-12);
        // The two-atom instance has several optimal potential pairs; compare against the body of
        // the oracle's own pair
        let k = body_from_potentials(&fixtures::quadrant(), &mu, &o.h, t).unwrap();
        for (v, r) in nu.atoms().iter().zip(&o.radii) {
            assert!((k.radial(v).unwrap() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_of_deep_measure_is_constant() {
        let (mu, nu) = fixtures::two_atoms();
        let study = truncation_experiment(
            &fixtures::quadrant(),
            &SourceMeasure::Discrete(mu),
            &nu,
            3,
            5.0,
            &SemiDiscreteOptions::default(),
        )
        .unwrap();
        assert_eq!(study.solutions.len(), 3);
        assert!(study.distances.iter().flatten().all(|d| *d == 0.0));
        for k in &study.solutions {
            assert!((k.min_norm_point().unwrap().norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_truncation() {
        let q = fixtures::quadrant();
        let t = Tolerances::default();
        let (mu, _) = fixtures::two_atoms();
        let a = 0.01f64;
        let nu = DiscreteMeasure::new(&q, Cap::OmegaC, &[vec![a.cos(), a.sin()]], &[1.0], &t).unwrap();
        let err = truncation_experiment(&q, &SourceMeasure::Discrete(mu), &nu, 3, 5.0, &SemiDiscreteOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::EmptyTruncation { .. }));
    }
}
