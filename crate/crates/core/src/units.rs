//! Lengths written in meters or in multiples of a reference length.
//!
//! Configuration files express most spacings as wavelength multiples
//! (`"12.65lambda"`); some presets use multiples of the spacing threshold
//! (`"0.8threshold"`). Both are resolved to meters once, when a config is
//! loaded.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A length as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Meters(f64),
    #[serde(with = "length_text")]
    Scaled(ScaledLength),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledLength {
    pub value: f64,
    pub unit: LengthUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthUnit {
    Meter,
    Wavelength,
    /// Multiples of the spacing threshold `sqrt(lambda L / sqrt(N))`.
    Threshold,
}

impl LengthUnit {
    fn suffix(self) -> &'static str {
        match self {
            LengthUnit::Meter => "m",
            LengthUnit::Wavelength => "lambda",
            LengthUnit::Threshold => "threshold",
        }
    }
}

/// Reference lengths needed to resolve scaled values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LengthContext {
    pub wavelength: f64,
    pub threshold: Option<f64>,
}

impl Length {
    pub fn meters(value: f64) -> Self {
        Length::Meters(value)
    }

    pub fn wavelengths(value: f64) -> Self {
        Length::Scaled(ScaledLength {
            value,
            unit: LengthUnit::Wavelength,
        })
    }

    pub fn resolve(&self, context: &LengthContext) -> Result<f64> {
        let meters = match *self {
            Length::Meters(v) => v,
            Length::Scaled(ScaledLength { value, unit }) => match unit {
                LengthUnit::Meter => value,
                LengthUnit::Wavelength => value * context.wavelength,
                LengthUnit::Threshold => {
                    let threshold = context.threshold.ok_or_else(|| {
                        Error::invalid(
                            "length",
                            "threshold multiples need the array size and separation",
                        )
                    })?;
                    value * threshold
                }
            },
        };
        if meters.is_finite() {
            Ok(meters)
        } else {
            Err(Error::invalid(
                "length",
                format!("{self} does not resolve to a finite length"),
            ))
        }
    }

    /// Whether resolving needs the spacing threshold.
    pub fn needs_threshold(&self) -> bool {
        matches!(
            self,
            Length::Scaled(ScaledLength {
                unit: LengthUnit::Threshold,
                ..
            })
        )
    }
}

impl fmt::Display for ScaledLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.value, self.unit.suffix())
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Meters(v) => write!(f, "{v}m"),
            Length::Scaled(s) => s.fmt(f),
        }
    }
}

impl FromStr for ScaledLength {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (number, unit) = if let Some(n) = text.strip_suffix("lambda") {
            (n, LengthUnit::Wavelength)
        } else if let Some(n) = text.strip_suffix("threshold") {
            (n, LengthUnit::Threshold)
        } else if let Some(n) = text.strip_suffix('m') {
            (n, LengthUnit::Meter)
        } else {
            (text, LengthUnit::Meter)
        };
        let number = number.trim();
        // "lambda" alone means one wavelength
        let value = if number.is_empty() && unit != LengthUnit::Meter {
            1.0
        } else {
            number
                .parse::<f64>()
                .map_err(|_| Error::invalid("length", format!("cannot parse `{text}`")))?
        };
        Ok(ScaledLength { value, unit })
    }
}

impl FromStr for Length {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let scaled: ScaledLength = text.parse()?;
        Ok(match scaled.unit {
            LengthUnit::Meter => Length::Meters(scaled.value),
            _ => Length::Scaled(scaled),
        })
    }
}

mod length_text {
    use super::ScaledLength;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        value: &ScaledLength,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        serializer.collect_str(value)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<ScaledLength, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
