// Comparisons written as !(x > 0.0) also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod config;
pub mod detection;
pub mod error;
pub mod dynamics;
pub mod output;
pub mod params;
pub mod pipeline;
pub mod provenance;
pub mod rng;
pub mod sideband;
pub mod special;
