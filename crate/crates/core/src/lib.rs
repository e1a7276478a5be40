//! Circular synthetic aperture sonar (CSAS) simulation and coherent
//! deconvolution toolkit.
//!
//! The crate models a transducer orbiting a scene of point scatterers:
//! it synthesizes backscattered chirp measurements, reconstructs complex
//! imagery with delay-and-sum beamforming, characterizes the system point
//! spread function, and recovers the underlying scattering distribution
//! with several deconvolution algorithms, from a Wiener filter up to a
//! self-supervised coordinate network.

pub mod beamformer;
pub mod deconv;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod inr;
pub mod io;
pub mod metrics;
pub mod psf;
pub mod signal;
pub mod simulator;

pub use error::{Error, Result};
