//! Time-domain linear sampling for passive acoustic imaging in 2D.
//!
//! Point sources at random positions on a far circle illuminate sound-soft
//! obstacles; cross-correlating the total field recorded on two sets of
//! measurement points yields an approximation of the antisymmetrized active
//! scattered field. The imaging operator built from it is inverted by
//! truncated SVD against monopole test functions to give an indicator map.
//!
//! The stages are exposed in [`experiment`] and, with on-disk caching, by the
//! `tdlsm` binary ([`cli`]).

pub mod cli;
pub mod config;
pub mod correlation;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod helmholtz;
pub mod inversion;
pub mod operators;
pub mod pulse;
pub mod quadrature;
pub mod render;
pub mod special;
pub mod storage;
pub mod synthesis;
pub mod validation;

pub use error::{Error, Result};
