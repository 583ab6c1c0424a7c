use std::io::Write;

use crate::channel::{build_channel, SystemGeometry};
use crate::error::Result;
use crate::format::{format_f64, OutputError};
use crate::spectrum::eigen_spectrum;

/// Eigenvalue `mu_k^2` with its 1-based rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub index: usize,
    pub eigenvalue: f64,
}

/// Full descending spectrum of the channel between the arrays of `geometry`.
pub fn eigen_profile(geometry: &SystemGeometry) -> Result<Vec<ProfilePoint>> {
    let spectrum = eigen_spectrum(&build_channel(geometry)?)?;
    Ok(spectrum
        .values()
        .iter()
        .enumerate()
        .map(|(i, &eigenvalue)| ProfilePoint {
            index: i + 1,
            eigenvalue,
        })
        .collect())
}

/// Plateau test: `mu_k^2 / mu_1^2 >= min_ratio` for every
/// `k <= prefix_fraction * n_edof`.
pub fn has_plateau(
    profile: &[ProfilePoint],
    n_edof: usize,
    min_ratio: f64,
    prefix_fraction: f64,
) -> bool {
    let Some(first) = profile.first() else {
        return false;
    };
    if !(first.eigenvalue > 0.0) {
        return false;
    }
    let prefix = (prefix_fraction * n_edof as f64).floor() as usize;
    profile
        .iter()
        .take(prefix)
        .all(|p| p.eigenvalue / first.eigenvalue >= min_ratio)
}

pub fn write_profile_csv<W: Write>(
    profile: &[ProfilePoint],
    writer: W,
) -> std::result::Result<(), OutputError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["index", "eigenvalue", "relative"])?;
    let first = profile.first().map_or(1.0, |p| p.eigenvalue);
    for p in profile {
        csv.write_record([
            p.index.to_string(),
            format_f64(p.eigenvalue),
            format_f64(p.eigenvalue / first),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
