//! Versioned experiment presets, one per reproduced figure.
//!
//! Each preset is a JSON file embedded at build time. Parameters the source
//! figure leaves unspecified are listed under `inferred` in the file itself.

use serde::{Deserialize, Serialize};

use super::spec::{SweepFile, SweepSpec};
use crate::beamfocus::spacing_threshold;
use crate::channel::SystemGeometry;
use crate::error::{Error, Result};
use crate::spectrum::DEFAULT_ENERGY_FRACTION;
use crate::units::{Length, LengthContext};

const PRESETS: [(&str, &str); 7] = [
    ("fig2", include_str!("../../presets/fig2.json")),
    ("fig3", include_str!("../../presets/fig3.json")),
    ("fig5", include_str!("../../presets/fig5.json")),
    ("fig6", include_str!("../../presets/fig6.json")),
    ("fig7", include_str!("../../presets/fig7.json")),
    ("fig8", include_str!("../../presets/fig8.json")),
    ("fig9", include_str!("../../presets/fig9.json")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

/// Raw JSON of a named preset.
pub fn preset_source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

fn default_fraction() -> f64 {
    DEFAULT_ENERGY_FRACTION
}

/// A single-geometry eigenvalue profile as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inferred: Vec<String>,
    pub wavelength: f64,
    pub side_count: usize,
    pub spacing: Length,
    pub separation: Length,
    #[serde(default = "default_fraction")]
    pub energy_fraction: f64,
}

/// Resolved eigenvalue-profile experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub name: Option<String>,
    pub geometry: SystemGeometry,
    pub energy_fraction: f64,
}

impl ProfileFile {
    pub fn resolve(&self) -> Result<ProfileSpec> {
        if self.side_count == 0 {
            return Err(Error::invalid("side_count", "must be at least 1"));
        }
        let mut context = LengthContext {
            wavelength: self.wavelength,
            threshold: None,
        };
        let separation = self.separation.resolve(&context)?;
        context.threshold = Some(spacing_threshold(
            self.side_count * self.side_count,
            self.wavelength,
            separation,
        )?);
        let spacing = self.spacing.resolve(&context)?;
        if !(self.energy_fraction > 0.0 && self.energy_fraction < 1.0) {
            return Err(Error::invalid("energy_fraction", "must lie in (0, 1)"));
        }
        Ok(ProfileSpec {
            name: self.name.clone(),
            geometry: SystemGeometry::symmetric(
                self.side_count,
                spacing,
                self.wavelength,
                separation,
            )?,
            energy_fraction: self.energy_fraction,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PresetFile {
    Sweep(SweepFile),
    EigenProfile(ProfileFile),
}

/// A resolved experiment: a parameter sweep or a single eigenvalue profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Sweep(SweepSpec),
    Profile(ProfileSpec),
}

impl Experiment {
    /// Parses a preset or spec file. Files without a `kind` tag are sweeps.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        let file = if value.get("kind").is_some() {
            serde_json::from_value(value).map_err(|e| Error::Spec(e.to_string()))?
        } else {
            PresetFile::Sweep(
                serde_json::from_value(value).map_err(|e| Error::Spec(e.to_string()))?,
            )
        };
        match file {
            PresetFile::Sweep(sweep) => Ok(Experiment::Sweep(sweep.resolve()?)),
            PresetFile::EigenProfile(profile) => Ok(Experiment::Profile(profile.resolve()?)),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::from_json(preset_source(name)?)
    }

    /// JSON of the experiment with all defaults expanded and lengths in meters.
    pub fn resolved_json(&self) -> String {
        let file = match self {
            Experiment::Sweep(spec) => PresetFile::Sweep(spec.to_file()),
            Experiment::Profile(spec) => PresetFile::EigenProfile(ProfileFile {
                version: Some(1),
                name: spec.name.clone(),
                notes: Vec::new(),
                inferred: Vec::new(),
                wavelength: spec.geometry.wavelength(),
                side_count: spec.geometry.tx().side_count(),
                spacing: Length::Meters(spec.geometry.tx().spacing()),
                separation: Length::Meters(spec.geometry.separation()),
                energy_fraction: spec.energy_fraction,
            }),
        };
        serde_json::to_string_pretty(&file).expect("experiments always serialize")
    }
}
