//! JSON instance and solution files (`"schema_version": 1`).
//!
//! Instance:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "cone": {"dim": 2, "generators": [[1, 0], [0, 1]]},
//!   "mu": {"atoms": [[-0.8, -0.6], [-0.6, -0.8]], "weights": [0.5, 0.5]},
//!   "nu": {"atoms": [[0.8, 0.6], [0.6, 0.8]], "weights": [0.5, 0.5]},
//!   "options": {"regime": "discrete"}
//! }
//! ```
//!
//! `mu` may instead be `{"quadrature": {"resolution": 4096, "seed": 0}}`,
//! which selects the semi-discrete regime. Atoms need not be unit vectors.

use serde::{Deserialize, Serialize};

use crate::cone::{Cap, DiscreteMeasure, Measure, PolyhedralCone, QuadratureMeasure};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::pipeline::{Certificates, GaussSolution, Regime, SolutionDetail, SourceMeasure, Status};
use crate::pseudocone::{Form, PseudoCone};
use crate::semidiscrete::{CellReport, SemiDiscreteOptions};

pub const SCHEMA_VERSION: u32 = 1;

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeJson {
    pub dim: usize,
    pub generators: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facet_normals: Option<Vec<Vec<f64>>>,
}

impl ConeJson {
    pub fn from_cone(c: &PolyhedralCone) -> Self {
        Self {
            dim: c.dim(),
            generators: c.generators().iter().map(|g| g.as_slice().to_vec()).collect(),
            facet_normals: Some(c.facet_normals().iter().map(|n| n.as_slice().to_vec()).collect()),
        }
    }

    pub fn build(&self) -> Result<PolyhedralCone> {
        let rows = self.generators.iter().chain(self.facet_normals.iter().flatten());
        if let Some(bad) = rows.map(Vec::len).find(|&len| len != self.dim) {
            return Err(schema(format!("cone has dim {} but a vector of length {bad}", self.dim)));
        }
        match &self.facet_normals {
            Some(normals) => PolyhedralCone::from_description(&self.generators, normals),
            None => PolyhedralCone::from_generators(&self.generators),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureJson {
    /// Defaults to `options.quad_resolution`.
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureJson>,
}

impl MeasureJson {
    pub fn from_measure(m: &impl Measure) -> Self {
        Self {
            atoms: Some(m.atoms().iter().map(|a| a.to_vec()).collect()),
            weights: Some(m.weights().to_vec()),
            quadrature: None,
        }
    }

    fn discrete(&self, cone: &PolyhedralCone, cap: Cap, name: &str, tol: &Tolerances) -> Result<DiscreteMeasure> {
        let (Some(atoms), Some(weights)) = (&self.atoms, &self.weights) else {
            return Err(schema(format!("{name} needs \"atoms\" and \"weights\"")));
        };
        if let Some(a) = atoms.iter().find(|a| a.len() != cone.dim()) {
            return Err(schema(format!(
                "{name} atom {a:?} has dimension {}, cone has {}",
                a.len(),
                cone.dim()
            )));
        }
        DiscreteMeasure::new(cone, cap, atoms, weights, tol).map_err(|e| schema(format!("{name}: {e}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub cone: ConeJson,
    pub mu: MeasureJson,
    pub nu: MeasureJson,
    #[serde(default)]
    pub options: OptionsJson,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

/// Where `μ` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Atoms(DiscreteMeasure),
    Quadrature { resolution: usize, seed: Option<u64> },
}

/// Validated options with defaults filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub regime: Option<Regime>,
    pub semidiscrete: SemiDiscreteOptions,
    pub quad_resolution: usize,
    pub seed: u64,
    pub ball: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            regime: None,
            semidiscrete: SemiDiscreteOptions::default(),
            quad_resolution: 4096,
            seed: 0,
            ball: 5.0,
        }
    }
}

/// A validated instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub cone: PolyhedralCone,
    pub mu: SourceSpec,
    pub nu: DiscreteMeasure,
    pub options: RunOptions,
}

impl Instance {
    /// Parses and validates; every failure is an [`Error::Schema`].
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: InstanceJson = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        Self::from_raw(&raw)
    }

    pub fn from_raw(raw: &InstanceJson) -> Result<Self> {
        if raw.schema_version != SCHEMA_VERSION {
            return Err(schema(format!("unsupported schema_version {}", raw.schema_version)));
        }
        let cone = raw.cone.build().map_err(|e| schema(format!("cone: {e}")))?;
        let o = &raw.options;
        let defaults = RunOptions::default();
        let tolerances = o.tolerances.unwrap_or_default();
        let options = RunOptions {
            regime: o.regime,
            semidiscrete: SemiDiscreteOptions {
                tol_mass: o.tol_mass.unwrap_or(defaults.semidiscrete.tol_mass),
                max_iter: o.max_iter.unwrap_or(defaults.semidiscrete.max_iter),
                tolerances,
            },
            quad_resolution: o.quad_resolution.unwrap_or(defaults.quad_resolution),
            seed: o.seed.unwrap_or(defaults.seed),
            ball: o.ball.unwrap_or(defaults.ball),
        };
        if !(options.semidiscrete.tol_mass > 0.0) || !(options.ball > 0.0) {
            return Err(schema("tol_mass and ball must be positive"));
        }
        let nu = raw.nu.discrete(&cone, Cap::OmegaC, "nu", &tolerances)?;
        if raw.nu.quadrature.is_some() {
            return Err(schema("nu must be atomic"));
        }
        let mu = match (&raw.mu.quadrature, &raw.mu.atoms) {
            (Some(_), Some(_)) => return Err(schema("mu has both \"atoms\" and \"quadrature\"")),
            (Some(q), None) => {
                let resolution = q.resolution.unwrap_or(options.quad_resolution);
                if resolution == 0 {
                    return Err(schema("quadrature resolution must be positive"));
                }
                SourceSpec::Quadrature {
                    resolution,
                    seed: q.seed,
                }
            }
            (None, _) => SourceSpec::Atoms(raw.mu.discrete(&cone, Cap::OmegaCdual, "mu", &tolerances)?),
        };
        if matches!(mu, SourceSpec::Quadrature { .. }) && options.regime == Some(Regime::Discrete) {
            return Err(schema("a quadrature mu needs the semidiscrete regime"));
        }
        Ok(Self { cone, mu, nu, options })
    }

    /// The regime requested by `override_`, then the file, then the form of `mu`.
    pub fn regime(&self, override_: Option<Regime>) -> Regime {
        override_.or(self.options.regime).unwrap_or(match self.mu {
            SourceSpec::Atoms(_) => Regime::Discrete,
            SourceSpec::Quadrature { .. } => Regime::SemiDiscrete,
        })
    }

    /// Materializes `μ` for the regime. `seed` overrides the file's seed.
    pub fn source(&self, regime: Regime, seed: Option<u64>) -> Result<SourceMeasure> {
        let tol = &self.options.semidiscrete.tolerances;
        match (&self.mu, regime) {
            (SourceSpec::Atoms(m), Regime::Discrete) => Ok(SourceMeasure::Discrete(m.clone())),
            (SourceSpec::Atoms(m), Regime::SemiDiscrete) => Ok(SourceMeasure::Quadrature(QuadratureMeasure::from(m.clone()))),
            (SourceSpec::Quadrature { resolution, seed: s }, Regime::SemiDiscrete) => {
                let seed = seed.or(*s).unwrap_or(self.options.seed);
                Ok(SourceMeasure::Quadrature(self.cone.cap_quadrature(Cap::OmegaCdual, *resolution, seed, tol)?))
            }
            (SourceSpec::Quadrature { .. }, Regime::Discrete) => Err(schema("a quadrature mu needs the semidiscrete regime")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemJson {
    pub dir: Vec<f64>,
    pub val: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoConeJson {
    pub cone: ConeJson,
    pub form: Form,
    pub items: Vec<ItemJson>,
}

impl PseudoConeJson {
    pub fn from_body(k: &PseudoCone) -> Self {
        Self {
            cone: ConeJson::from_cone(k.cone()),
            form: k.form(),
            items: k
                .items()
                .iter()
                .map(|(d, val)| ItemJson {
                    dir: d.to_vec(),
                    val: *val,
                })
                .collect(),
        }
    }

    pub fn build(&self, tol: Tolerances) -> Result<PseudoCone> {
        let cone = self.cone.build()?;
        let cap = match self.form {
            Form::H => Cap::OmegaCdual,
            Form::V => Cap::OmegaC,
        };
        let items = self
            .items
            .iter()
            .map(|it| Ok((cone.direction(&it.dir, cap, &tol)?, it.val)))
            .collect::<Result<Vec<_>>>()?;
        match self.form {
            Form::H => PseudoCone::h_form(cone, items, tol),
            Form::V => PseudoCone::v_form(cone, items, tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportJson {
    /// `[i, j, mass]` triplets.
    pub plan: Vec<(usize, usize, f64)>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    #[serde(rename = "S")]
    pub primal: f64,
    #[serde(rename = "I")]
    pub dual: f64,
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiDiscreteJson {
    pub g: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub cells: CellReport,
}

/// Result bundle written by `solve` and read by `verify` and `export`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionJson {
    pub schema_version: u32,
    pub regime: Regime,
    pub status: Status,
    pub k: PseudoConeJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semidiscrete: Option<SemiDiscreteJson>,
    pub certificates: Certificates,
    pub warnings: Vec<String>,
}

impl SolutionJson {
    pub fn from_solution(sol: &GaussSolution) -> Self {
        let (transport, semidiscrete) = match &sol.detail {
            SolutionDetail::Discrete(t) => (
                Some(TransportJson {
                    plan: t.plan.clone(),
                    h: t.h.clone(),
                    g: t.g.clone(),
                    primal: t.primal,
                    dual: t.dual,
                    gap: t.gap(),
                    iterations: t.iterations,
                }),
                None,
            ),
            SolutionDetail::SemiDiscrete {
                dual,
                cells,
                objective,
                iterations,
                ..
            } => (
                None,
                Some(SemiDiscreteJson {
                    g: dual.g.clone(),
                    objective: *objective,
                    iterations: *iterations,
                    cells: cells.clone(),
                }),
            ),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            regime: sol.regime,
            status: sol.status,
            k: PseudoConeJson::from_body(&sol.k),
            transport,
            semidiscrete,
            certificates: sol.certificates.clone(),
            warnings: sol.warnings.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: SolutionJson = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(schema(format!("unsupported schema_version {}", s.schema_version)));
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}
