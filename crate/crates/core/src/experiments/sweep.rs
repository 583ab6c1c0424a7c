use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::spec::{Metric, SweepSpec, SweptVariable};
use crate::beamfocus::{
    array_gain, array_gain_closed_form, paraxial_parameter, FocusSetup, GainMode,
};
use crate::channel::{build_channel, SystemGeometry};
use crate::error::{Error, Result};
use crate::format::{format_f64, OutputError};
use crate::spectrum::{capacity, edof_fringes_for, edof_report, eigen_spectrum, truncation_index};

/// One grid point of a sweep. Metrics that were not requested are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub swept_value: f64,
    pub n_dof: Option<usize>,
    pub n_edof_exact: Option<usize>,
    pub n_edof_fringes: Option<f64>,
    pub n_edof_trace: Option<f64>,
    pub rho1_closed: Option<f64>,
    pub rho1_phase_only: Option<f64>,
    pub capacity_full: Option<f64>,
    pub capacity_edof_exact: Option<f64>,
    pub capacity_edof_fringes: Option<f64>,
    pub capacity_edof_trace: Option<f64>,
    pub epsilon: Option<f64>,
}

impl SweepRecord {
    pub const CSV_HEADER: [&'static str; 12] = [
        "swept_value",
        "n_dof",
        "n_edof_exact",
        "n_edof_fringes",
        "n_edof_trace",
        "rho1_closed",
        "rho1_phase_only",
        "capacity_full",
        "capacity_edof_exact",
        "capacity_edof_fringes",
        "capacity_edof_trace",
        "epsilon",
    ];

    fn csv_row(&self) -> [String; 12] {
        let int = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        let real = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        [
            format_f64(self.swept_value),
            int(self.n_dof),
            int(self.n_edof_exact),
            real(self.n_edof_fringes),
            real(self.n_edof_trace),
            real(self.rho1_closed),
            real(self.rho1_phase_only),
            real(self.capacity_full),
            real(self.capacity_edof_exact),
            real(self.capacity_edof_fringes),
            real(self.capacity_edof_trace),
            real(self.epsilon),
        ]
    }

    /// Relations every record must satisfy; returns a description of each violation.
    pub fn invariant_violations(&self) -> Vec<String> {
        const SLACK: f64 = 1e-9;
        let mut out = Vec::new();
        if let (Some(trace), Some(dof)) = (self.n_edof_trace, self.n_dof) {
            if trace > dof as f64 * (1.0 + SLACK) || trace < 1.0 - SLACK {
                out.push(format!("n_edof_trace {trace} outside [1, n_dof = {dof}]"));
            }
        }
        if let (Some(exact), Some(dof)) = (self.n_edof_exact, self.n_dof) {
            if exact < 1 || exact > dof {
                out.push(format!("n_edof_exact {exact} outside [1, n_dof = {dof}]"));
            }
        }
        if let (Some(truncated), Some(full)) = (self.capacity_edof_exact, self.capacity_full) {
            if truncated > full * (1.0 + SLACK) {
                out.push(format!(
                    "capacity_edof_exact {truncated} exceeds capacity_full {full}"
                ));
            }
        }
        if let Some(rho) = self.rho1_closed {
            if !(rho.is_finite() && rho >= 0.0) {
                out.push(format!(
                    "rho1_closed {rho} is not a finite non-negative gain"
                ));
            }
        }
        out
    }

    /// `|n_edof_trace - n_edof_exact| / n_edof_exact`, when both are present.
    pub fn trace_estimator_gap(&self) -> Option<f64> {
        let exact = self.n_edof_exact? as f64;
        Some((self.n_edof_trace? - exact).abs() / exact)
    }
}

/// Parameters of one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub side_count: usize,
    pub spacing: f64,
    pub separation: f64,
    pub wavelength: f64,
}

impl SweepSpec {
    /// Point parameters for grid value `value`.
    pub fn point(&self, value: f64) -> SweepPoint {
        let f = &self.fixed;
        // validate() guarantees the non-swept parameters are present
        let mut point = SweepPoint {
            side_count: f.side_count.unwrap_or(1),
            spacing: f.spacing.unwrap_or(0.0),
            separation: f.separation.unwrap_or(1.0),
            wavelength: f.wavelength,
        };
        match self.swept {
            SweptVariable::Spacing => point.spacing = value,
            SweptVariable::AntennasPerSide => point.side_count = value as usize,
            SweptVariable::Separation => point.separation = value,
        }
        point
    }
}

/// Evaluates every grid point. Points run in parallel; records come back in
/// grid order and are bit-for-bit reproducible.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let results: Vec<Result<SweepRecord>> = spec
        .grid
        .par_iter()
        .map(|&value| {
            evaluate_point(spec, value).map_err(|e| Error::SweepPoint {
                value,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

fn evaluate_point(spec: &SweepSpec, value: f64) -> Result<SweepRecord> {
    let point = spec.point(value);
    let wants = |m: Metric| spec.outputs.contains(&m);
    let n = point.side_count * point.side_count;
    let geometry = SystemGeometry::symmetric(
        point.side_count,
        point.spacing,
        point.wavelength,
        point.separation,
    )?;

    let mut record = SweepRecord {
        swept_value: value,
        n_dof: None,
        n_edof_exact: None,
        n_edof_fringes: None,
        n_edof_trace: None,
        rho1_closed: None,
        rho1_phase_only: None,
        capacity_full: None,
        capacity_edof_exact: None,
        capacity_edof_fringes: None,
        capacity_edof_trace: None,
        epsilon: None,
    };

    if wants(Metric::Epsilon) {
        record.epsilon = Some(paraxial_parameter(
            n,
            point.spacing,
            point.wavelength,
            point.separation,
        )?);
    }
    if wants(Metric::Rho1Closed) {
        record.rho1_closed = Some(array_gain_closed_form(
            n,
            point.spacing,
            point.wavelength,
            point.separation,
        )?);
    }
    if wants(Metric::NEdofFringes) {
        record.n_edof_fringes = Some(edof_fringes_for(&geometry, spec.fixed.edof.aperture)?);
    }

    if spec.outputs.iter().any(|m| m.needs_spectrum()) {
        let channel = build_channel(&geometry)?;
        let spectrum = eigen_spectrum(&channel)?;
        let report = edof_report(&spectrum, &geometry, &spec.fixed.edof)?;
        let (power, noise) = spec.fixed.snr.resolve(n, point.separation);
        let cap = |t: Option<usize>| capacity(&spectrum, power, noise, n, t);
        let len = spectrum.len();

        record.n_dof = wants(Metric::NDof).then_some(report.n_dof);
        record.n_edof_exact = wants(Metric::NEdofExact).then_some(report.n_edof_exact);
        record.n_edof_trace = wants(Metric::NEdofTrace).then_some(report.n_edof_trace);
        if wants(Metric::CapacityFull) {
            record.capacity_full = Some(cap(None)?);
        }
        if wants(Metric::CapacityEdofExact) {
            record.capacity_edof_exact = Some(cap(Some(report.n_edof_exact))?);
        }
        if wants(Metric::CapacityEdofFringes) {
            record.capacity_edof_fringes =
                Some(cap(Some(truncation_index(report.n_edof_fringes, len)))?);
        }
        if wants(Metric::CapacityEdofTrace) {
            record.capacity_edof_trace =
                Some(cap(Some(truncation_index(report.n_edof_trace, len)))?);
        }
    }

    if wants(Metric::Rho1PhaseOnly) {
        let setup = FocusSetup::on_axis(geometry)?;
        record.rho1_phase_only = Some(array_gain(
            &setup,
            setup.nearest_neighbor(),
            GainMode::PhaseOnly,
        )?);
    }
    Ok(record)
}

/// Writes records as CSV with the fixed [`SweepRecord::CSV_HEADER`].
pub fn write_records_csv<W: Write>(
    records: &[SweepRecord],
    writer: W,
) -> std::result::Result<(), OutputError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(SweepRecord::CSV_HEADER)?;
    for record in records {
        csv.write_record(record.csv_row())?;
    }
    csv.flush()?;
    Ok(())
}

/// Estimator accuracy on both sides of the spacing threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorRegime {
    /// Largest trace-estimator gap over records with `epsilon <= 1`.
    pub max_gap_paraxial: Option<f64>,
    /// Largest trace-estimator gap over records with `epsilon >= 1.5`.
    pub max_gap_beyond: Option<f64>,
}

impl EstimatorRegime {
    pub const PARAXIAL_TOLERANCE: f64 = 0.10;
    pub const BREAKDOWN_GAP: f64 = 0.20;

    pub fn from_records(records: &[SweepRecord]) -> Self {
        let mut paraxial: Option<f64> = None;
        let mut beyond: Option<f64> = None;
        for r in records {
            let (Some(eps), Some(gap)) = (r.epsilon, r.trace_estimator_gap()) else {
                continue;
            };
            if eps <= 1.0 {
                paraxial = Some(paraxial.map_or(gap, |p| p.max(gap)));
            }
            if eps >= 1.5 {
                beyond = Some(beyond.map_or(gap, |b| b.max(gap)));
            }
        }
        Self {
            max_gap_paraxial: paraxial,
            max_gap_beyond: beyond,
        }
    }

    pub fn estimator_valid_below_threshold(&self) -> bool {
        self.max_gap_paraxial
            .is_some_and(|g| g <= Self::PARAXIAL_TOLERANCE)
    }

    pub fn estimator_fails_beyond_threshold(&self) -> bool {
        self.max_gap_beyond.is_some_and(|g| g > Self::BREAKDOWN_GAP)
    }
}
