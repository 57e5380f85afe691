//! From mechanical trajectories to detector clicks.

mod events;
mod filter;
mod timetag;

pub use events::{
    apply_detector, generate_events_capped, generate_sideband_events, hbt_split, poisson_stream, seconds_to_ps,
    DetectorModel, EventRates, PhotonEventStream, StreamMeta, PS_PER_S,
};
pub use filter::{filter_transmission, lorentzian_transmission, FilterChain};
pub use timetag::{read_timetags, write_timetags, TimeTagError, MAGIC, MAX_DETECTOR_ID, HEADER_LEN, VERSION};

use crate::params::ParamsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("instantaneous sideband rate {peak:.4e}/s exceeds the ceiling {ceiling:.4e}/s")]
    RateCeilingExceeded { peak: f64, ceiling: f64 },
    #[error("invalid filter chain: {0}")]
    InvalidFilter(String),
    #[error("invalid detector model: {0}")]
    InvalidDetector(String),
    #[error(transparent)]
    Params(#[from] ParamsError),
}
