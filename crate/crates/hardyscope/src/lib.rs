//! Geodesic mean-distance weights, spectral positivity checks, and
//! Dirichlet eigenvalue estimation on conformal two-dimensional models.
//!
//! The crate is organized around three layers: geometry (`geom`,
//! `manifold`, `domain`, `raycast`), analysis (`hardy`, `classify`,
//! `spectrum`, `flowcheck`), and the job runner behind the command-line
//! interface (`config`, `runner`).

pub mod classify;
pub mod config;
pub mod domain;
pub mod error;
pub mod expr;
pub mod flowcheck;
pub mod geom;
pub mod hardy;
pub mod linalg;
pub mod manifold;
pub mod raycast;
pub mod runner;
pub mod spectrum;

pub use domain::{DomainSpec, PolyVertex, RegionRule, VertexKind};
pub use error::{Error, Result};
pub use geom::{v, ChartCurve, Rect, Vec2};
pub use manifold::{Chart, ManifoldModel};
pub use raycast::{hitting_radius, HitOptions, RayHit};
