//! Numerical tolerances shared by every module.

use serde::{Deserialize, Serialize};

/// All tolerance knobs in one place.
///
/// | field | default | meaning |
/// |-------|---------|---------|
/// | `eps_int` | 1e-9 | interior margin for open caps |
/// | `eps_closed` | 1e-12 | slack for closed-cone membership |
/// | `eps_pair` | 1e-12 | smallest admissible `\|<u,v>\|` for the cost |
/// | `eps_orth` | 1e-14 | orthogonality guard for pseudo-conjugates |
/// | `tau_tie` | 1e-10 | relative gap below which an argmax is a tie |
/// | `tau_geo` | 1e-8 | geometric tightness (contacts, absorbed vertices) |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub eps_int: f64,
    pub eps_closed: f64,
    pub eps_pair: f64,
    pub eps_orth: f64,
    pub tau_tie: f64,
    pub tau_geo: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_int: 1e-9,
            eps_closed: 1e-12,
            eps_pair: 1e-12,
            eps_orth: 1e-14,
            tau_tie: 1e-10,
            tau_geo: 1e-8,
        }
    }
}

impl Tolerances {
    /// Largest cost value admitted: `-log(eps_pair)`.
    pub fn max_cost(&self) -> f64 {
        -self.eps_pair.ln()
    }
}
