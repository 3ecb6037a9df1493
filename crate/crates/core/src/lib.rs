//! Convexity analysis for images of real and complex quadratic maps.
//!
//! The crate decides membership in the convex hull of the image through a
//! semidefinite relaxation, certifies non-convexity of the image from flat
//! boundary regions, and measures how far the image is from convex by
//! descending the squared offset `z` over singular boundary directions.

pub mod convexcut;
pub mod fixtures;
pub mod linalg;
pub mod nonconvexity;
pub mod oracles;
pub mod quadmap;
pub mod sdpcore;
