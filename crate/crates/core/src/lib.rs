//! Weak rigidity analysis of mixed distance/angle constraint frameworks in 2D/3D,
//! and a gradient-flow formation-control simulator built on it.
//!
//! A framework couples an agent configuration with two kinds of shape constraints:
//! squared inter-agent distances and cosines of subtended angles. The stacked
//! constraint map and its Jacobian (the weak rigidity matrix) decide, through a
//! rank test, whether the constraint set pins the shape down up to rigid motions
//! (plus uniform scaling when no distance constraint is present). The same
//! Jacobian drives a distributed gradient controller whose equilibria, invariants
//! and basins of attraction this crate simulates and classifies.
//!
//! Module layout:
//! - [`graph`]: framework specification, validation, sensing topology;
//! - [`rigidity`]: constraint map, weak rigidity matrix, rank analysis,
//!   rigidity classification and constraint partitioning;
//! - [`control`]: error vector, stacked and per-agent control laws,
//!   interaction matrix;
//! - [`dynamics`]: fixed-step integration with invariant monitors;
//! - [`equilibria`]: equilibrium classification, collinearity analysis and
//!   Monte-Carlo basin studies;
//! - [`scenario`]: JSON scenario files shared by the CLI and the browser demo;
//! - [`trace_io`]: CSV trace emission and plot-data extraction.

pub mod control;
pub mod dynamics;
pub mod equilibria;
pub mod graph;
pub mod rigidity;
pub mod scenario;
pub mod trace_io;

use graph::ValidationReport;

/// Default separation guard below which a pair of constrained agents is
/// considered degenerate (outside the domain of the constraint map).
pub const DEFAULT_EPS_SEP: f64 = 1e-9;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid framework spec:\n{0}")]
    InvalidSpec(ValidationReport),
    #[error(
        "degenerate configuration: agents {i} and {j} are {dist:.3e} apart (guard {eps:.3e})"
    )]
    DegenerateConfiguration { i: usize, j: usize, dist: f64, eps: f64 },
    #[error("framework is not GIWR: rank {rank} < threshold {threshold}")]
    NotGiwr { rank: usize, threshold: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid precondition: {0}")]
    InvalidPrecondition(String),
    #[error("configuration is not collinear (off-line residual {0:.3e})")]
    NotCollinear(f64),
    #[error("no nonnegative real root for the base distance (discriminant {0:.3e})")]
    NoRealRoot(f64),
    #[error("ambiguous base distance: two admissible roots {0:.9} and {1:.9}")]
    AmbiguousRoot(f64, f64),
    #[error("scenario error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
