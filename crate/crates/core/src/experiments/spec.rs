//! Sweep specifications: the on-disk form with unit-tagged lengths and the
//! resolved form in meters.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::beamfocus::spacing_threshold;
use crate::error::{Error, Result};
use crate::spectrum::{ApertureConvention, EdofParams, DEFAULT_DOF_FLOOR, DEFAULT_ENERGY_FRACTION};
use crate::units::{Length, LengthContext};

/// Default cap on the number of grid points of one sweep.
pub const DEFAULT_MAX_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptVariable {
    Spacing,
    AntennasPerSide,
    Separation,
}

/// Columns of a sweep record that can be requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    NDof,
    NEdofExact,
    NEdofFringes,
    NEdofTrace,
    Rho1Closed,
    Rho1PhaseOnly,
    CapacityFull,
    CapacityEdofExact,
    CapacityEdofFringes,
    CapacityEdofTrace,
    Epsilon,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::NDof,
        Metric::NEdofExact,
        Metric::NEdofFringes,
        Metric::NEdofTrace,
        Metric::Rho1Closed,
        Metric::Rho1PhaseOnly,
        Metric::CapacityFull,
        Metric::CapacityEdofExact,
        Metric::CapacityEdofFringes,
        Metric::CapacityEdofTrace,
        Metric::Epsilon,
    ];

    /// Metrics that need the eigenvalue spectrum of the channel.
    pub fn needs_spectrum(self) -> bool {
        !matches!(
            self,
            Metric::Rho1Closed | Metric::Rho1PhaseOnly | Metric::Epsilon | Metric::NEdofFringes
        )
    }
}

/// Transmit power setting for capacity columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrConfig {
    Absolute {
        power: f64,
        noise_variance: f64,
    },
    /// Power chosen per point so that the SNR at the focused receive antenna,
    /// `(P / sigma^2) N / (4 pi L)^2`, equals the given value.
    Focused {
        focused_snr_db: f64,
        noise_variance: f64,
    },
}

impl Default for SnrConfig {
    fn default() -> Self {
        SnrConfig::Focused {
            focused_snr_db: 10.0,
            noise_variance: 1.0,
        }
    }
}

impl SnrConfig {
    /// `(P, sigma^2)` for an array of `n_antennas` at plane separation `separation`.
    pub fn resolve(&self, n_antennas: usize, separation: f64) -> (f64, f64) {
        match *self {
            SnrConfig::Absolute {
                power,
                noise_variance,
            } => (power, noise_variance),
            SnrConfig::Focused {
                focused_snr_db,
                noise_variance,
            } => {
                let path = 4.0 * std::f64::consts::PI * separation;
                let snr = 10f64.powf(focused_snr_db / 10.0);
                (
                    snr * noise_variance * path * path / n_antennas as f64,
                    noise_variance,
                )
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (power, noise) = match *self {
            SnrConfig::Absolute {
                power,
                noise_variance,
            } => (power, noise_variance),
            SnrConfig::Focused {
                focused_snr_db,
                noise_variance,
            } => {
                if !focused_snr_db.is_finite() {
                    return Err(Error::invalid("snr.focused_snr_db", "must be finite"));
                }
                (0.0, noise_variance)
            }
        };
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::invalid("snr.power", "must be finite and >= 0"));
        }
        if !(noise.is_finite() && noise > 0.0) {
            return Err(Error::invalid(
                "snr.noise_variance",
                "must be finite and > 0",
            ));
        }
        Ok(())
    }
}

/// Grid as written in a file: explicit values or an inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridFile {
    Values(Vec<Length>),
    Range {
        start: Length,
        stop: Length,
        step: Length,
    },
}

fn default_fraction() -> f64 {
    DEFAULT_ENERGY_FRACTION
}

fn default_floor() -> f64 {
    DEFAULT_DOF_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedFile {
    pub wavelength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_count: Option<usize>,
    #[serde(default = "default_fraction")]
    pub energy_fraction: f64,
    #[serde(default = "default_floor")]
    pub dof_floor: f64,
    #[serde(default)]
    pub aperture: ApertureConvention,
    #[serde(default)]
    pub snr: SnrConfig,
}

/// A sweep as read from JSON. Lengths may carry `lambda` / `threshold` suffixes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Parameters not given in the source figure and filled with defaults.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inferred: Vec<String>,
    pub swept_variable: SweptVariable,
    pub grid: GridFile,
    pub fixed: FixedFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<BTreeSet<Metric>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_points: Option<usize>,
}

/// Fixed parameters of a resolved sweep, lengths in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedParams {
    pub wavelength: f64,
    pub separation: Option<f64>,
    pub spacing: Option<f64>,
    pub side_count: Option<usize>,
    pub edof: EdofParams,
    pub snr: SnrConfig,
}

/// A validated sweep with every length in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: Option<String>,
    pub notes: Vec<String>,
    pub inferred: Vec<String>,
    pub swept: SweptVariable,
    pub grid: Vec<f64>,
    pub fixed: FixedParams,
    pub outputs: BTreeSet<Metric>,
    pub max_points: usize,
}

impl SweepFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    /// Resolves units and validates.
    pub fn resolve(&self) -> Result<SweepSpec> {
        let fixed = &self.fixed;
        if !(fixed.wavelength.is_finite() && fixed.wavelength > 0.0) {
            return Err(Error::invalid("fixed.wavelength", "must be finite and > 0"));
        }
        let mut context = LengthContext {
            wavelength: fixed.wavelength,
            threshold: None,
        };
        let separation = fixed.separation.map(|l| l.resolve(&context)).transpose()?;
        if let (Some(side), Some(sep)) = (fixed.side_count, separation) {
            if side > 0 && sep > 0.0 {
                context.threshold = Some(spacing_threshold(side * side, fixed.wavelength, sep)?);
            }
        }
        let spacing = fixed.spacing.map(|l| l.resolve(&context)).transpose()?;
        let grid = match &self.grid {
            GridFile::Values(values) => values
                .iter()
                .map(|v| v.resolve(&context))
                .collect::<Result<Vec<_>>>()?,
            GridFile::Range { start, stop, step } => arithmetic_grid(
                start.resolve(&context)?,
                stop.resolve(&context)?,
                step.resolve(&context)?,
            )?,
        };
        let spec = SweepSpec {
            name: self.name.clone(),
            notes: self.notes.clone(),
            inferred: self.inferred.clone(),
            swept: self.swept_variable,
            grid,
            fixed: FixedParams {
                wavelength: fixed.wavelength,
                separation,
                spacing,
                side_count: fixed.side_count,
                edof: EdofParams {
                    energy_fraction: fixed.energy_fraction,
                    dof_floor: fixed.dof_floor,
                    aperture: fixed.aperture,
                },
                snr: fixed.snr,
            },
            outputs: self
                .outputs
                .clone()
                .unwrap_or_else(|| Metric::ALL.into_iter().collect()),
            max_points: self.max_points.unwrap_or(DEFAULT_MAX_POINTS),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `start, start + step, ..., stop`; `stop` must be reached to within rounding.
pub fn arithmetic_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("grid.step", "must be finite and > 0"));
    }
    if !(start.is_finite() && stop.is_finite()) || stop < start {
        return Err(Error::invalid("grid", "needs finite start <= stop"));
    }
    let count = ((stop - start) / step).round();
    if (start + count * step - stop).abs() > 1e-9 * stop.abs().max(step) {
        return Err(Error::invalid(
            "grid",
            "stop is not reachable from start in whole steps",
        ));
    }
    if count > 1e6 {
        return Err(Error::invalid("grid", "too many points"));
    }
    Ok((0..=count as usize)
        .map(|i| start + i as f64 * step)
        .collect())
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("grid", "must not be empty"));
        }
        if self.grid.len() > self.max_points {
            return Err(Error::invalid(
                "grid",
                format!(
                    "{} points exceed the cap of {}",
                    self.grid.len(),
                    self.max_points
                ),
            ));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", "must be strictly increasing"));
        }
        if self.grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("grid", "values must be finite and > 0"));
        }
        let f = &self.fixed;
        let (swept_fixed, name) = match self.swept {
            SweptVariable::Spacing => (f.spacing.is_some(), "fixed.spacing"),
            SweptVariable::AntennasPerSide => (f.side_count.is_some(), "fixed.side_count"),
            SweptVariable::Separation => (f.separation.is_some(), "fixed.separation"),
        };
        if swept_fixed {
            return Err(Error::invalid(
                name,
                "is the swept variable and must not be fixed",
            ));
        }
        if self.swept == SweptVariable::AntennasPerSide
            && self.grid.iter().any(|v| v.fract() != 0.0)
        {
            return Err(Error::invalid(
                "grid",
                "antenna counts must be whole numbers",
            ));
        }
        let need = |present: bool, name: &'static str| {
            if present {
                Ok(())
            } else {
                Err(Error::invalid(name, "is required"))
            }
        };
        if self.swept != SweptVariable::Spacing {
            need(f.spacing.is_some(), "fixed.spacing")?;
        }
        if self.swept != SweptVariable::AntennasPerSide {
            need(f.side_count.is_some(), "fixed.side_count")?;
        }
        if self.swept != SweptVariable::Separation {
            need(f.separation.is_some(), "fixed.separation")?;
        }
        if let Some(spacing) = f.spacing {
            if !(spacing.is_finite() && spacing > 0.0) {
                return Err(Error::invalid("fixed.spacing", "must be finite and > 0"));
            }
        }
        if let Some(separation) = f.separation {
            if !(separation.is_finite() && separation > 0.0) {
                return Err(Error::invalid("fixed.separation", "must be finite and > 0"));
            }
        }
        if f.side_count == Some(0) {
            return Err(Error::invalid("fixed.side_count", "must be at least 1"));
        }
        let fraction = f.edof.energy_fraction;
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid(
                "fixed.energy_fraction",
                "must lie in (0, 1)",
            ));
        }
        if !(f.edof.dof_floor > 0.0 && f.edof.dof_floor < 1.0) {
            return Err(Error::invalid("fixed.dof_floor", "must lie in (0, 1)"));
        }
        f.snr.validate()
    }

    /// The file form with every length in meters. Feeding it back through
    /// [`SweepFile::resolve`] gives an identical spec.
    pub fn to_file(&self) -> SweepFile {
        SweepFile {
            version: Some(1),
            name: self.name.clone(),
            notes: self.notes.clone(),
            inferred: self.inferred.clone(),
            swept_variable: self.swept,
            grid: GridFile::Values(self.grid.iter().map(|&v| Length::Meters(v)).collect()),
            fixed: FixedFile {
                wavelength: self.fixed.wavelength,
                separation: self.fixed.separation.map(Length::Meters),
                spacing: self.fixed.spacing.map(Length::Meters),
                side_count: self.fixed.side_count,
                energy_fraction: self.fixed.edof.energy_fraction,
                dof_floor: self.fixed.edof.dof_floor,
                aperture: self.fixed.edof.aperture,
                snr: self.fixed.snr,
            },
            outputs: Some(self.outputs.clone()),
            max_points: Some(self.max_points),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("sweep specs always serialize")
    }
}
