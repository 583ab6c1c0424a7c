//! Run configuration: an optional JSON file overlaid with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};
use xlmimo_core::experiments::SnrConfig;
use xlmimo_core::spectrum::{
    ApertureConvention, EdofParams, DEFAULT_DOF_FLOOR, DEFAULT_ENERGY_FRACTION,
};
use xlmimo_core::units::{Length, LengthContext};
use xlmimo_core::{spacing_threshold, SystemGeometry};

pub const DEFAULT_WAVELENGTH: f64 = 0.01;
pub const DEFAULT_SIDE_COUNT: usize = 25;
pub const DEFAULT_SEPARATION_LAMBDA: f64 = 4000.0;

/// Config file contents. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub wavelength: Option<f64>,
    pub side_count: Option<usize>,
    pub spacing: Option<Length>,
    pub separation: Option<Length>,
    pub energy_fraction: Option<f64>,
    pub dof_floor: Option<f64>,
    pub aperture: Option<ApertureConvention>,
    pub snr: Option<SnrConfig>,
    pub output_path: Option<PathBuf>,
}

/// Flags shared by every subcommand. Set flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// JSON run configuration
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Wavelength in meters
    #[arg(long, global = true)]
    pub wavelength: Option<f64>,

    /// Antennas per side of each square array
    #[arg(long, global = true)]
    pub side_count: Option<usize>,

    /// Antenna spacing, e.g. `0.05`, `12.65lambda` or `0.8threshold`
    #[arg(long, global = true)]
    pub spacing: Option<Length>,

    /// Distance between the array planes, e.g. `40` or `4000lambda`
    #[arg(long, global = true)]
    pub separation: Option<Length>,

    #[arg(long, global = true)]
    pub energy_fraction: Option<f64>,

    #[arg(long, global = true)]
    pub dof_floor: Option<f64>,

    /// Aperture area convention for the fringe estimate: `cell` or `span`
    #[arg(long, global = true, value_parser = parse_aperture)]
    pub aperture: Option<ApertureConvention>,

    /// Total transmit power P (switches to an absolute power budget)
    #[arg(long, global = true)]
    pub power: Option<f64>,

    #[arg(long, global = true)]
    pub noise_variance: Option<f64>,

    /// SNR at the focused receive antenna in dB (sets P per geometry)
    #[arg(long, global = true, conflicts_with = "power")]
    pub focused_snr_db: Option<f64>,

    /// Output file
    #[arg(short, long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

fn parse_aperture(text: &str) -> Result<ApertureConvention, String> {
    match text {
        "cell" => Ok(ApertureConvention::Cell),
        "span" => Ok(ApertureConvention::Span),
        _ => Err(format!(
            "unknown aperture convention `{text}` (expected cell or span)"
        )),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Overlays the flags that were given.
    pub fn merge(mut self, args: &ParamArgs) -> Self {
        macro_rules! take {
            ($($field:ident),*) => { $( if args.$field.is_some() { self.$field = args.$field.clone(); } )* };
        }
        take!(
            wavelength,
            side_count,
            spacing,
            separation,
            energy_fraction,
            dof_floor,
            aperture
        );
        if args.output.is_some() {
            self.output_path = args.output.clone();
        }
        let noise = args
            .noise_variance
            .or_else(|| self.snr.map(|s| noise_of(&s)))
            .unwrap_or(1.0);
        if let Some(power) = args.power {
            self.snr = Some(SnrConfig::Absolute {
                power,
                noise_variance: noise,
            });
        } else if let Some(db) = args.focused_snr_db {
            self.snr = Some(SnrConfig::Focused {
                focused_snr_db: db,
                noise_variance: noise,
            });
        } else if args.noise_variance.is_some() {
            self.snr = Some(match self.snr.unwrap_or_default() {
                SnrConfig::Absolute { power, .. } => SnrConfig::Absolute {
                    power,
                    noise_variance: noise,
                },
                SnrConfig::Focused { focused_snr_db, .. } => SnrConfig::Focused {
                    focused_snr_db,
                    noise_variance: noise,
                },
            });
        }
        self
    }

    /// Resolves lengths to meters and checks every value before any work starts.
    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let wavelength = self.wavelength.unwrap_or(DEFAULT_WAVELENGTH);
        if !(wavelength.is_finite() && wavelength > 0.0) {
            bail!("invalid `wavelength`: {wavelength} (must be finite and > 0)");
        }
        let side_count = self.side_count.unwrap_or(DEFAULT_SIDE_COUNT);
        if side_count == 0 {
            bail!("invalid `side_count`: must be at least 1");
        }
        let mut context = LengthContext {
            wavelength,
            threshold: None,
        };
        let separation = self
            .separation
            .unwrap_or(Length::wavelengths(DEFAULT_SEPARATION_LAMBDA))
            .resolve(&context)
            .context("invalid `separation`")?;
        if !(separation > 0.0) {
            bail!("invalid `separation`: {separation} m (must be > 0)");
        }
        let threshold = spacing_threshold(side_count * side_count, wavelength, separation)?;
        context.threshold = Some(threshold);
        let spacing = self
            .spacing
            .map(|s| s.resolve(&context))
            .transpose()
            .context("invalid `spacing`")?;
        if let Some(d) = spacing {
            if !(d > 0.0) {
                bail!("invalid `spacing`: {d} m (must be > 0)");
            }
        }
        let energy_fraction = self.energy_fraction.unwrap_or(DEFAULT_ENERGY_FRACTION);
        if !(energy_fraction > 0.0 && energy_fraction < 1.0) {
            bail!("invalid `energy_fraction`: {energy_fraction} (must lie in (0, 1))");
        }
        let dof_floor = self.dof_floor.unwrap_or(DEFAULT_DOF_FLOOR);
        if !(dof_floor.is_finite() && dof_floor >= 0.0) {
            bail!("invalid `dof_floor`: {dof_floor} (must be finite and >= 0)");
        }
        let snr = self.snr.unwrap_or_default();
        let (power, noise) = match snr {
            SnrConfig::Absolute {
                power,
                noise_variance,
            } => (power, noise_variance),
            SnrConfig::Focused {
                focused_snr_db,
                noise_variance,
            } => (focused_snr_db, noise_variance),
        };
        if !power.is_finite() || matches!(snr, SnrConfig::Absolute { .. }) && power < 0.0 {
            bail!("invalid `snr.power`: {power}");
        }
        if !(noise.is_finite() && noise > 0.0) {
            bail!("invalid `snr.noise_variance`: {noise} (must be finite and > 0)");
        }
        Ok(Resolved {
            wavelength,
            side_count,
            spacing,
            separation,
            threshold,
            edof: EdofParams {
                energy_fraction,
                dof_floor,
                aperture: self.aperture.unwrap_or_default(),
            },
            snr,
            output_path: self.output_path.clone(),
        })
    }
}

fn noise_of(snr: &SnrConfig) -> f64 {
    match *snr {
        SnrConfig::Absolute { noise_variance, .. } | SnrConfig::Focused { noise_variance, .. } => {
            noise_variance
        }
    }
}

/// A validated configuration with every length in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub wavelength: f64,
    pub side_count: usize,
    pub spacing: Option<f64>,
    pub separation: f64,
    pub threshold: f64,
    pub edof: EdofParams,
    pub snr: SnrConfig,
    pub output_path: Option<PathBuf>,
}

impl Resolved {
    pub fn n_antennas(&self) -> usize {
        self.side_count * self.side_count
    }

    pub fn require_spacing(&self) -> anyhow::Result<f64> {
        self.spacing.ok_or_else(|| {
            anyhow::anyhow!("missing `spacing`: set it in the config or pass --spacing")
        })
    }

    pub fn geometry(&self) -> anyhow::Result<SystemGeometry> {
        Ok(SystemGeometry::symmetric(
            self.side_count,
            self.require_spacing()?,
            self.wavelength,
            self.separation,
        )?)
    }

    /// `(P, sigma^2)` for this geometry.
    pub fn power_budget(&self) -> (f64, f64) {
        self.snr.resolve(self.n_antennas(), self.separation)
    }
}

pub fn load(args: &ParamArgs) -> anyhow::Result<Resolved> {
    let base = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    base.merge(args).resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_to_the_reference_setup() {
        let r = RunConfig::default().resolve().unwrap();
        assert_eq!(r.side_count, 25);
        assert!((r.separation - 40.0).abs() < 1e-12);
        assert!((r.threshold / r.wavelength - 12.649110640673518).abs() < 1e-9);
        assert_eq!(r.spacing, None);
    }

    #[test]
    fn flags_override_file_values() {
        let file: RunConfig =
            serde_json::from_str(r#"{"side_count": 5, "spacing": "2lambda", "snr": {"power": 3.0, "noise_variance": 2.0}}"#)
                .unwrap();
        let args = ParamArgs {
            spacing: Some("0.5threshold".parse().unwrap()),
            noise_variance: Some(4.0),
            ..Default::default()
        };
        let r = file.merge(&args).resolve().unwrap();
        assert_eq!(r.side_count, 5);
        assert!((r.spacing.unwrap() - 0.5 * r.threshold).abs() < 1e-15);
        assert_eq!(
            r.snr,
            SnrConfig::Absolute {
                power: 3.0,
                noise_variance: 4.0
            }
        );
    }

    #[test]
    fn bad_values_name_the_field() {
        let cfg = RunConfig {
            energy_fraction: Some(1.5),
            ..Default::default()
        };
        assert!(cfg
            .resolve()
            .unwrap_err()
            .to_string()
            .contains("energy_fraction"));
        let cfg = RunConfig {
            spacing: Some(Length::meters(-1.0)),
            ..Default::default()
        };
        assert!(cfg.resolve().unwrap_err().to_string().contains("spacing"));
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"spacingg": 1.0}"#).is_err());
    }
}
