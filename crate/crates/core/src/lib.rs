//! Near-field XL-MIMO channels between two uniform planar arrays.
//!
//! The crate builds free-space Green's-function channel matrices, extracts
//! their eigenvalue spectra, and reports degrees of freedom, effective DoF
//! (exact 99.9%-energy count, fringe estimate and trace estimate) and
//! equal-power capacity. The [`beamfocus`] module covers focusing phases,
//! array gains and the antenna spacing at which the gain next to a focused
//! receive antenna first vanishes. [`experiments`] drives parameter sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamfocus;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod format;
pub mod geometry;
pub mod spectrum;
pub mod units;

pub use beamfocus::{
    array_gain, array_gain_closed_form, first_gain_null, focusing_phases, paraxial_parameter,
    snr_at, spacing_threshold, FocusSetup, GainMode,
};
pub use channel::{build_channel, greens, received_field, ChannelMatrix, SystemGeometry};
pub use error::{Error, Result};
pub use geometry::{build_upa, relative_coordinate, PlanarArray, Point3};
pub use num_complex::Complex64;
pub use spectrum::{
    capacity, count_dof, edof_exact, edof_fringes, edof_report, edof_trace, eigen_spectrum,
    EdofParams, EdofReport, EigenSpectrum,
};
