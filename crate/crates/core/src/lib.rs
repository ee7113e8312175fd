//! Irregular strip packing by pairwise compatibility, cluster ordering and
//! rectangle packing.

pub mod geometry;
pub mod compat;
pub mod numeric;
pub mod tsp;
pub mod qaoa;
pub mod clustering;
pub mod packing;
pub mod pipeline;
pub mod interface;
