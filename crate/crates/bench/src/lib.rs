//! Benchmark fixtures shared by the criterion targets.

use xlmimo_core::{spacing_threshold, SystemGeometry};

pub const WAVELENGTH: f64 = 0.01;
pub const SEPARATION: f64 = 40.0;

/// Coaxial `side x side` arrays at the reference wavelength and separation,
/// spaced at the spacing threshold.
pub fn threshold_geometry(side: usize) -> SystemGeometry {
    let d = spacing_threshold(side * side, WAVELENGTH, SEPARATION).expect("valid threshold");
    SystemGeometry::symmetric(side, d, WAVELENGTH, SEPARATION).expect("valid geometry")
}
