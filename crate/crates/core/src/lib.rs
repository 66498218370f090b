//! Near-resonant Kapitza–Dirac diffraction of a three-level atom, Doppler
//! sensitive probe absorption of the diffracted gas, and few-atom
//! measurement scenarios built on top of both.
//!
//! The pipeline is
//! [`dynamics`] (pump stages) → [`momentum`] (Fourier comb) →
//! [`spectroscopy`] (probe transmission) → [`measurement`] (hypothesis
//! realizations and classification).
//!
//! Work over grid points, scan points and realizations runs on rayon when the
//! `parallel` feature is enabled (the default) and sequentially otherwise;
//! results are identical either way.

pub mod bessel;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod measurement;
pub mod momentum;
pub mod params;
pub mod spectroscopy;
pub mod stats;

pub use error::{Error, Result};
