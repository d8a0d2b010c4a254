//! Constructive solutions of the Gauss image problem for pseudo-cones.
//!
//! Given a measure `μ` on the open dual cap `Ω_{C°}` and `ν` on the open cap
//! `Ω_C` of a pointed polyhedral cone `C`, the library solves the transport
//! problem with cost `-log|<u, v>|`, rebuilds a pseudo-cone `K` from the
//! optimal potentials and certifies that the reverse radial Gauss map of `K`
//! pushes `μ` to `ν`.

pub mod cone;
pub mod config;
pub mod error;
pub mod export;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod pipeline;
pub mod polyhedron;
pub mod pseudocone;
pub mod semidiscrete;
pub mod transport;

pub use cone::{Cap, DiscreteMeasure, Direction, Measure, Membership, PolyhedralCone, QuadratureMeasure};
pub use config::Tolerances;
pub use error::{Error, Result};
pub use pseudocone::{check_equality_case, EqualityCase, Form, GaussImage, PseudoCone, SampledFunction};
pub use transport::{solve_entropic, solve_max_transport, CostMatrix, TransportSolution};

/// Guide chapters, compiled so their snippets stay in sync with the API.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/cones.md")]
    pub mod cones {}
    #[doc = include_str!("../../../book/src/pseudo_cones.md")]
    pub mod pseudo_cones {}
    #[doc = include_str!("../../../book/src/discrete.md")]
    pub mod discrete {}
    #[doc = include_str!("../../../book/src/semidiscrete.md")]
    pub mod semidiscrete {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
