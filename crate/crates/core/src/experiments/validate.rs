use serde::Serialize;

use crate::beamfocus::{
    array_gain, array_gain_closed_form, paraxial_parameter, FocusSetup, GainMode,
};
use crate::channel::SystemGeometry;
use crate::error::{Error, Result};

/// Largest paraxial parameter accepted by [`validate_closed_form`].
pub const MAX_VALIDATION_EPSILON: f64 = 1.2;

/// Normalized error budget `|closed - phase_only| / N` inside `epsilon <= 1`.
pub const CLOSED_FORM_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormCheck {
    pub side_count: usize,
    pub spacing: f64,
    pub epsilon: f64,
    pub rho1_closed: f64,
    pub rho1_phase_only: f64,
    /// `|rho1_closed - rho1_phase_only| / N`.
    pub normalized_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormReport {
    pub checks: Vec<ClosedFormCheck>,
    /// Worst normalized error over checks with `epsilon <= 1`.
    pub max_normalized_error: f64,
    pub passed: bool,
}

/// Compares the Dirichlet-kernel gain at the focus neighbor against the
/// phase-only double sum for every `(side, spacing)` pair.
pub fn validate_closed_form(
    side_values: &[usize],
    spacing_grid: &[f64],
    wavelength: f64,
    separation: f64,
) -> Result<ClosedFormReport> {
    let mut checks = Vec::with_capacity(side_values.len() * spacing_grid.len());
    for &side in side_values {
        let n = side * side;
        for &spacing in spacing_grid {
            let epsilon = paraxial_parameter(n, spacing, wavelength, separation)?;
            if epsilon > MAX_VALIDATION_EPSILON {
                return Err(Error::invalid(
                    "spacing_grid",
                    format!(
                        "epsilon {epsilon:.4} at d = {spacing} m exceeds {MAX_VALIDATION_EPSILON}"
                    ),
                ));
            }
            let closed = array_gain_closed_form(n, spacing, wavelength, separation)?;
            let phase_only = if side == 1 {
                1.0
            } else {
                let setup = FocusSetup::on_axis(SystemGeometry::symmetric(
                    side, spacing, wavelength, separation,
                )?)?;
                array_gain(&setup, setup.nearest_neighbor(), GainMode::PhaseOnly)?
            };
            checks.push(ClosedFormCheck {
                side_count: side,
                spacing,
                epsilon,
                rho1_closed: closed,
                rho1_phase_only: phase_only,
                normalized_error: (closed - phase_only).abs() / n as f64,
            });
        }
    }
    let max_normalized_error = checks
        .iter()
        .filter(|c| c.epsilon <= 1.0)
        .map(|c| c.normalized_error)
        .fold(0.0, f64::max);
    Ok(ClosedFormReport {
        checks,
        max_normalized_error,
        passed: max_normalized_error <= CLOSED_FORM_TOLERANCE,
    })
}
