//! Simulation and hybrid beamforming for intelligent omni-surfaces: planar
//! metasurfaces whose elements reflect and refract at the same time, so a
//! single panel serves users on both of its sides.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: panel lattice, groups and side classification
//! - [`element`]: discrete element states and their coefficient pairs
//! - [`channel`]: free-space cascaded channels, noise and link budgets
//! - [`beamforming`]: zero-forcing precoding and surface-state optimizers
//! - [`analysis`]: radiation patterns, coverage maps and point SNRs
//! - [`scenefile`], [`output`] and [`cli`]: file formats and the command line

pub mod analysis;
pub mod beamforming;
pub mod channel;
pub mod cli;
pub mod element;
pub mod error;
pub mod geometry;
pub mod output;
pub mod scenefile;

pub use error::{Error, ErrorKind, Result};
