//! Projection bases, geodesic interpolation between planes, and the grand
//! and guided tours built on top of them.

mod basis;
mod geodesic;
mod grand;
mod guided;
mod trace;

pub use basis::{random_basis, ProjectionBasis};
pub use geodesic::{geodesic_interpolate, principal_angles, Geodesic};
pub use grand::{grand_tour, grand_tour_with_index};
pub use guided::{guided_tour, GuidedOptions, ProjectionIndex, Search};
pub use trace::{read_trace, TourFrame, TourTrace, TraceWriter};
