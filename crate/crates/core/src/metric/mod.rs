//! Kobayashi metric estimates: boundary distance, the two-sided
//! infinitesimal sandwich, path lengths, and polyline geodesics.

mod closed_form;
mod config;
mod finsler;
mod oracle;
mod path;
mod quadrature;
mod solver;

pub use closed_form::{
    ball_distance, closed_form_distance, disc_distance, exact_infinitesimal, half_plane_distance,
    half_spaces_distance, polydisc_distance, AffineEmbedding,
};
pub use config::{EmbeddingChoice, Integrand, MetricConfig};
pub use finsler::{delta, delta_with, infinitesimal_bounds, DomainMetric, Finsler, MetricBound};
pub use oracle::{oracle_for, ClosedFormOracle, DistanceOracle, DISCRETIZATION_SLACK};
pub use path::{path_length, PolylinePath};
pub use quadrature::GaussLegendre;
pub use solver::{distance, geodesic, ray, DistanceEstimate, PathSolver};
