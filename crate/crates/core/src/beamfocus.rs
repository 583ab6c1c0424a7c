//! Beam focusing with a transmit array and the array gain it produces at
//! receive-plane probe points.
//!
//! With focusing phases conjugating the path to `r0 = (0, 0, L)`, the gain at
//! the nearest receive antenna `r1 = (d, 0, L)` collapses, under the Fresnel
//! expansion, to the squared Dirichlet kernel
//! `|sin(sqrt(N) pi x) / sin(pi x)|^2` with `x = d^2 / (lambda L)`. Its first
//! null sits at `d = sqrt(lambda L / sqrt(N))`, the spacing that maximizes
//! the effective DoF.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{propagation_phase, SystemGeometry};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::format::{format_f64, OutputError};
use crate::geometry::Point3;

/// How the per-antenna contributions to a probe point are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// True spherical amplitudes and phases.
    Exact,
    /// Exact phases, flat amplitude `1 / (4 pi L)`.
    PhaseOnly,
    /// Flat amplitude and second-order (Fresnel) path-length expansion.
    Fresnel,
}

impl GainMode {
    pub const ALL: [GainMode; 3] = [GainMode::Exact, GainMode::PhaseOnly, GainMode::Fresnel];

    pub fn as_str(self) -> &'static str {
        match self {
            GainMode::Exact => "exact",
            GainMode::PhaseOnly => "phase_only",
            GainMode::Fresnel => "fresnel",
        }
    }
}

impl fmt::Display for GainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(GainMode::Exact),
            "phase_only" | "phase-only" => Ok(GainMode::PhaseOnly),
            "fresnel" => Ok(GainMode::Fresnel),
            other => Err(Error::invalid(
                "mode",
                format!("unknown gain mode `{other}`"),
            )),
        }
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(angle: f64) -> f64 {
    let reduced = angle.rem_euclid(TAU);
    if reduced > PI {
        reduced - TAU
    } else {
        reduced
    }
}

/// Per-antenna phase shifts `-k |focus - tx_j|`, wrapped, in array order.
pub fn focusing_phases(geometry: &SystemGeometry, focus_point: Point3) -> Result<Vec<f64>> {
    if !focus_point.is_finite() {
        return Err(Error::invalid("focus_point", "coordinates must be finite"));
    }
    geometry
        .tx()
        .positions()
        .iter()
        .map(|tx| {
            let distance = focus_point.distance(tx);
            if distance == 0.0 {
                return Err(Error::Singularity { distance });
            }
            Ok(wrap_phase(-propagation_phase(
                distance,
                geometry.wavelength(),
            )))
        })
        .collect()
}

/// A transmit array steered at one focus point.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusSetup {
    geometry: SystemGeometry,
    focus_point: Point3,
    phases: Vec<f64>,
}

impl FocusSetup {
    pub fn new(geometry: SystemGeometry, focus_point: Point3) -> Result<Self> {
        let phases = focusing_phases(&geometry, focus_point)?;
        Ok(Self {
            geometry,
            focus_point,
            phases,
        })
    }

    /// Focus on the center of the receive plane, `r0 = (0, 0, L)`.
    pub fn on_axis(geometry: SystemGeometry) -> Result<Self> {
        let focus = Point3::new(0.0, 0.0, geometry.rx().plane_offset());
        Self::new(geometry, focus)
    }

    pub fn geometry(&self) -> &SystemGeometry {
        &self.geometry
    }

    pub fn focus_point(&self) -> Point3 {
        self.focus_point
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// The receive antenna next to the on-axis focus, `r1 = (d, 0, L)`.
    pub fn nearest_neighbor(&self) -> Point3 {
        Point3::new(
            self.focus_point.x + self.geometry.rx().spacing(),
            self.focus_point.y,
            self.focus_point.z,
        )
    }
}

/// Normalized array gain `(1/N) |sum_j a_j exp(i (phi_j + theta_j))|^2` at `probe_point`.
///
/// Amplitudes `a_j` are 1 except in [`GainMode::Exact`], where they are
/// `L / |probe - tx_j|`. All modes therefore share the calibration
/// `gain(PhaseOnly, focus) = N`.
pub fn array_gain(setup: &FocusSetup, probe_point: Point3, mode: GainMode) -> Result<f64> {
    if !probe_point.is_finite() {
        return Err(Error::invalid("probe_point", "coordinates must be finite"));
    }
    let geometry = &setup.geometry;
    let wavelength = geometry.wavelength();
    let separation = geometry.separation();
    let tx = geometry.tx().positions();

    let mut sum = Complex64::new(0.0, 0.0);
    for (source, &theta) in tx.iter().zip(&setup.phases) {
        let distance = probe_point.distance(source);
        if distance == 0.0 {
            return Err(Error::Singularity { distance });
        }
        let term = match mode {
            GainMode::PhaseOnly => {
                Complex64::from_polar(1.0, propagation_phase(distance, wavelength) + theta)
            }
            GainMode::Exact => Complex64::from_polar(
                separation / distance,
                propagation_phase(distance, wavelength) + theta,
            ),
            GainMode::Fresnel => {
                let excess =
                    fresnel_path(probe_point, *source)? - fresnel_path(setup.focus_point, *source)?;
                Complex64::from_polar(1.0, TAU * (excess / wavelength).fract())
            }
        };
        sum += term;
    }
    Ok(sum.norm_sqr() / tx.len() as f64)
}

// Paraxial path length dz + rho^2 / (2 dz).
fn fresnel_path(point: Point3, source: Point3) -> Result<f64> {
    let dz = point.z - source.z;
    if dz <= 0.0 {
        return Err(Error::invalid(
            "probe_point",
            "the Fresnel expansion needs the point in front of the transmit plane",
        ));
    }
    let dx = point.x - source.x;
    let dy = point.y - source.y;
    Ok(dz + (dx * dx + dy * dy) / (2.0 * dz))
}

/// Received SNR `(P / sigma^2) rho / (4 pi L)^2` at `probe_point`.
pub fn snr_at(
    setup: &FocusSetup,
    probe_point: Point3,
    total_power: f64,
    noise_variance: f64,
    mode: GainMode,
) -> Result<f64> {
    ensure_non_negative("total_power", total_power)?;
    ensure_positive("noise_variance", noise_variance)?;
    let gain = array_gain(setup, probe_point, mode)?;
    let path = 4.0 * PI * setup.geometry.separation();
    Ok(total_power / noise_variance * gain / (path * path))
}

/// `sin(pi u) / (pi u)`, with `sinc(0) = 1`.
pub fn sinc(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        let arg = PI * u;
        arg.sin() / arg
    }
}

/// Side length of a square array of `n_antennas`.
pub fn side_of(n_antennas: usize) -> Result<usize> {
    if n_antennas == 0 {
        return Err(Error::NotPerfectSquare(0));
    }
    let side = (n_antennas as f64).sqrt().round() as usize;
    if side * side == n_antennas {
        Ok(side)
    } else {
        Err(Error::NotPerfectSquare(n_antennas))
    }
}

/// Signed Dirichlet kernel `sin(M pi x) / sin(pi x)`, continuous in `x`.
///
/// At integer `x = n` the removable singularity takes its limit
/// `M (-1)^((M - 1) n)`.
pub fn dirichlet_kernel(order: usize, x: f64) -> f64 {
    let m = order as f64;
    let nearest = x.round();
    let r = x - nearest;
    // sin(M pi (n + r)) / sin(pi (n + r)) = (-1)^((M - 1) n) sin(M pi r) / sin(pi r)
    let sign = if ((order as i64 - 1) * nearest as i64).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    if r == 0.0 {
        sign * m
    } else {
        sign * (m * PI * r).sin() / (PI * r).sin()
    }
}

/// `d^2 / (lambda L)`, the per-antenna phase step of the nearest-neighbor sum in cycles.
fn fresnel_step(spacing: f64, wavelength: f64, separation: f64) -> f64 {
    spacing * spacing / (wavelength * separation)
}

/// Closed-form gain at the nearest neighbor of the focus,
/// `N sinc^2(sqrt(N) x) / sinc^2(x) = |sin(sqrt(N) pi x) / sin(pi x)|^2`.
///
/// Evaluated through the Dirichlet kernel, so it stays finite (equal to `N`)
/// where `x` is an integer.
pub fn array_gain_closed_form(
    n_antennas: usize,
    spacing: f64,
    wavelength: f64,
    separation: f64,
) -> Result<f64> {
    let side = side_of(n_antennas)?;
    ensure_non_negative("spacing", spacing)?;
    ensure_positive("wavelength", wavelength)?;
    ensure_positive("separation", separation)?;
    let kernel = dirichlet_kernel(side, fresnel_step(spacing, wavelength, separation));
    Ok(kernel * kernel)
}

/// The sinc-ratio form of [`array_gain_closed_form`]; `None` where `sinc(x) = 0`.
pub fn array_gain_closed_form_sinc(
    n_antennas: usize,
    spacing: f64,
    wavelength: f64,
    separation: f64,
) -> Result<Option<f64>> {
    let side = side_of(n_antennas)?;
    ensure_non_negative("spacing", spacing)?;
    ensure_positive("wavelength", wavelength)?;
    ensure_positive("separation", separation)?;
    let x = fresnel_step(spacing, wavelength, separation);
    let denominator = sinc(x);
    if denominator == 0.0 || (x != 0.0 && x.fract() == 0.0) {
        return Ok(None);
    }
    let ratio = sinc(side as f64 * x) / denominator;
    Ok(Some(n_antennas as f64 * ratio * ratio))
}

/// Antenna spacing `sqrt(lambda L / sqrt(N))` at which the nearest-neighbor
/// gain first vanishes.
pub fn spacing_threshold(n_antennas: usize, wavelength: f64, separation: f64) -> Result<f64> {
    let side = side_of(n_antennas)?;
    ensure_positive("wavelength", wavelength)?;
    ensure_positive("separation", separation)?;
    Ok((wavelength * separation / side as f64).sqrt())
}

/// `epsilon = sqrt(N) d^2 / (lambda L)`; 1 exactly at the spacing threshold.
pub fn paraxial_parameter(
    n_antennas: usize,
    spacing: f64,
    wavelength: f64,
    separation: f64,
) -> Result<f64> {
    let side = side_of(n_antennas)?;
    ensure_non_negative("spacing", spacing)?;
    ensure_positive("wavelength", wavelength)?;
    ensure_positive("separation", separation)?;
    Ok(side as f64 * fresnel_step(spacing, wavelength, separation))
}

/// Locates the first null of [`array_gain_closed_form`] on an ascending
/// spacing grid by bracketing a sign change of the signed kernel and
/// bisecting. Returns `None` if the grid does not cross a null.
pub fn first_gain_null(
    n_antennas: usize,
    wavelength: f64,
    separation: f64,
    grid: &[f64],
) -> Result<Option<f64>> {
    let side = side_of(n_antennas)?;
    ensure_positive("wavelength", wavelength)?;
    ensure_positive("separation", separation)?;
    if side == 1 {
        return Ok(None);
    }
    let kernel = |d: f64| dirichlet_kernel(side, fresnel_step(d, wavelength, separation));
    for pair in grid.windows(2) {
        let (mut lo, mut hi) = (pair[0], pair[1]);
        let (mut k_lo, k_hi) = (kernel(lo), kernel(hi));
        if k_lo == 0.0 {
            return Ok(Some(lo));
        }
        if k_lo.signum() == k_hi.signum() && k_hi != 0.0 {
            continue;
        }
        while hi - lo > 4.0 * f64::EPSILON * hi {
            let mid = 0.5 * (lo + hi);
            let k_mid = kernel(mid);
            if k_mid == 0.0 {
                return Ok(Some(mid));
            }
            if k_mid.signum() == k_lo.signum() {
                lo = mid;
                k_lo = k_mid;
            } else {
                hi = mid;
            }
        }
        return Ok(Some(0.5 * (lo + hi)));
    }
    Ok(None)
}

/// One probe of a gain map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSample {
    pub probe_x: f64,
    pub probe_y: f64,
    pub mode: GainMode,
    pub gain: f64,
}

/// Gain at every probe for every mode, probes outermost, in input order.
pub fn gain_map(
    setup: &FocusSetup,
    probes: &[Point3],
    modes: &[GainMode],
) -> Result<Vec<GainSample>> {
    let rows: Vec<Vec<GainSample>> = probes
        .par_iter()
        .map(|probe| {
            modes
                .iter()
                .map(|&mode| {
                    Ok(GainSample {
                        probe_x: probe.x,
                        probe_y: probe.y,
                        mode,
                        gain: array_gain(setup, *probe, mode)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_gain_map_csv<W: Write>(
    samples: &[GainSample],
    writer: W,
) -> std::result::Result<(), OutputError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["probe_x", "probe_y", "mode", "gain"])?;
    for s in samples {
        csv.write_record([
            format_f64(s.probe_x),
            format_f64(s.probe_y),
            s.mode.to_string(),
            format_f64(s.gain),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_upa;
    use proptest::prelude::*;

    const WAVELENGTH: f64 = 0.01;
    const SEPARATION: f64 = 40.0;

    fn reference_setup(spacing: f64) -> FocusSetup {
        FocusSetup::on_axis(SystemGeometry::symmetric(25, spacing, WAVELENGTH, SEPARATION).unwrap())
            .unwrap()
    }

    #[test]
    fn wrapping_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_phase(0.0), 0.0);
    }

    #[test]
    fn single_antenna_phase_wraps_to_zero() {
        let geometry = SystemGeometry::symmetric(1, 0.0, 0.01, 37.0 * 0.01).unwrap();
        let phases = focusing_phases(&geometry, Point3::new(0.0, 0.0, 0.37)).unwrap();
        assert!(phases[0].abs() < 1e-9);
    }

    #[test]
    fn mirrored_antennas_share_phases() {
        let setup = reference_setup(0.05);
        let side = 25;
        for n in 0..side {
            for m in 0..side {
                let a = setup.phases()[n * side + m];
                let b = setup.phases()[(side - 1 - n) * side + (side - 1 - m)];
                let c = setup.phases()[m * side + n];
                assert!((a - b).abs() < 1e-9);
                assert!((a - c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn phases_match_direct_loop() {
        let setup = reference_setup(0.1265);
        let k = TAU / WAVELENGTH;
        for (n, m) in [(1usize, 1usize), (1, 25), (13, 13), (7, 19), (25, 2)] {
            let x = (n as f64 - 13.0) * 0.1265;
            let y = (m as f64 - 13.0) * 0.1265;
            let raw = -k * (x * x + y * y + SEPARATION * SEPARATION).sqrt();
            let phase = setup.phases()[(n - 1) * 25 + (m - 1)];
            // compare on the unit circle to sidestep the branch cut
            let diff = (Complex64::from_polar(1.0, raw) - Complex64::from_polar(1.0, phase)).norm();
            assert!(diff < 1e-9, "({n},{m}) differs by {diff}");
            assert!(phase > -PI && phase <= PI);
        }
    }

    #[test]
    fn coincident_focus_is_rejected() {
        let geometry = SystemGeometry::symmetric(3, 0.1, 0.01, 1.0).unwrap();
        assert!(matches!(
            focusing_phases(&geometry, Point3::new(0.1, 0.0, 0.0)),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn focus_gain_is_n() {
        let setup = reference_setup(0.05);
        let gain = array_gain(&setup, setup.focus_point(), GainMode::PhaseOnly).unwrap();
        assert!((gain - 625.0).abs() < 1e-9);
        let fresnel = array_gain(&setup, setup.focus_point(), GainMode::Fresnel).unwrap();
        assert!((fresnel - 625.0).abs() < 1e-9);
    }

    #[test]
    fn single_antenna_gain_is_one() {
        let setup =
            FocusSetup::on_axis(SystemGeometry::symmetric(1, 0.0, 0.01, 2.0).unwrap()).unwrap();
        for mode in [GainMode::PhaseOnly, GainMode::Fresnel] {
            for probe in [Point3::new(0.3, -0.2, 2.0), Point3::new(0.0, 0.0, 2.0)] {
                assert!((array_gain(&setup, probe, mode).unwrap() - 1.0).abs() < 1e-12);
            }
        }
        // exact mode carries the amplitude ratio L / r, which is 1 on axis
        let on_axis = array_gain(&setup, Point3::new(0.0, 0.0, 2.0), GainMode::Exact).unwrap();
        assert!((on_axis - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_vanishes_at_threshold_neighbor() {
        let threshold = spacing_threshold(625, WAVELENGTH, SEPARATION).unwrap();
        let setup = reference_setup(threshold);
        let gain = array_gain(&setup, setup.nearest_neighbor(), GainMode::PhaseOnly).unwrap();
        assert!(gain < 0.02 * 625.0, "gain {gain}");
    }

    #[test]
    fn fresnel_mode_reproduces_closed_form() {
        for spacing in [0.02, 0.05, 0.1, 0.1265, 0.15, 0.2] {
            let setup = reference_setup(spacing);
            let fresnel = array_gain(&setup, setup.nearest_neighbor(), GainMode::Fresnel).unwrap();
            let closed = array_gain_closed_form(625, spacing, WAVELENGTH, SEPARATION).unwrap();
            assert!(
                (fresnel - closed).abs() < 1e-7 * 625.0,
                "d = {spacing}: {fresnel} vs {closed}"
            );
        }
    }

    #[test]
    fn closed_form_examples() {
        let threshold = spacing_threshold(625, WAVELENGTH, SEPARATION).unwrap();
        assert!(array_gain_closed_form(625, threshold, WAVELENGTH, SEPARATION).unwrap() < 1e-20);
        assert_eq!(
            array_gain_closed_form(625, 0.0, WAVELENGTH, SEPARATION).unwrap(),
            625.0
        );
        assert!(
            (array_gain_closed_form(625, 1e-6, WAVELENGTH, SEPARATION).unwrap() - 625.0).abs()
                < 1e-6
        );

        // 625 sinc^2(0.15625) / sinc^2(0.00625), evaluated independently
        let u = PI * 0.15625;
        let v = PI * 0.00625;
        let oracle = 625.0 * (u.sin() / u).powi(2) / (v.sin() / v).powi(2);
        let gain = array_gain_closed_form(625, 0.05, WAVELENGTH, SEPARATION).unwrap();
        assert!((gain - oracle).abs() < 1e-9);
        assert!((gain - 576.4).abs() < 0.1);
        let setup = reference_setup(0.05);
        let phase_only = array_gain(&setup, setup.nearest_neighbor(), GainMode::PhaseOnly).unwrap();
        assert!((gain - phase_only).abs() < 0.05 * gain);

        assert!(matches!(
            array_gain_closed_form(624, 0.05, WAVELENGTH, SEPARATION),
            Err(Error::NotPerfectSquare(624))
        ));
    }

    #[test]
    fn integer_step_returns_limit() {
        // x = d^2 / (lambda L) = 1 and 2
        for x in [1.0f64, 2.0, 3.0] {
            let spacing = (x * WAVELENGTH * SEPARATION).sqrt();
            let gain = array_gain_closed_form(625, spacing, WAVELENGTH, SEPARATION).unwrap();
            assert!((gain - 625.0).abs() < 1e-6, "x = {x}: {gain}");
            assert!(gain.is_finite());
        }
        assert_eq!(
            array_gain_closed_form_sinc(625, 0.4f64.sqrt(), 0.01, 40.0).unwrap(),
            None
        );
    }

    #[test]
    fn threshold_examples() {
        let threshold = spacing_threshold(625, WAVELENGTH, SEPARATION).unwrap();
        assert!((threshold / WAVELENGTH - 12.65).abs() < 0.005);
        assert!((threshold - 0.4f64.sqrt() / 5.0).abs() < 1e-15);
        assert_eq!(spacing_threshold(1, 0.5, 2.0).unwrap(), 1.0);
        let ratio =
            spacing_threshold(100, 0.01, 3.0).unwrap() / spacing_threshold(400, 0.01, 3.0).unwrap();
        assert!((ratio - 2.0f64.sqrt()).abs() < 1e-14);
        assert!(spacing_threshold(2, 0.01, 1.0).is_err());
        assert!(spacing_threshold(4, 0.0, 1.0).is_err());
    }

    #[test]
    fn paraxial_parameter_examples() {
        let threshold = spacing_threshold(625, WAVELENGTH, SEPARATION).unwrap();
        assert!(
            (paraxial_parameter(625, threshold, WAVELENGTH, SEPARATION).unwrap() - 1.0).abs()
                < 1e-14
        );
        assert!(
            (paraxial_parameter(625, threshold / 2.0, WAVELENGTH, SEPARATION).unwrap() - 0.25)
                .abs()
                < 1e-14
        );
        // 20 x 20 array whose threshold is 3.2 lambda
        let separation = 3.2 * 3.2 * 20.0 * WAVELENGTH;
        let eps = paraxial_parameter(400, 3.2 * WAVELENGTH, WAVELENGTH, separation).unwrap();
        assert!((eps - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snr_examples() {
        let setup = reference_setup(0.05);
        let focus = setup.focus_point();
        assert_eq!(
            snr_at(&setup, focus, 0.0, 1.0, GainMode::PhaseOnly).unwrap(),
            0.0
        );
        let snr = snr_at(&setup, focus, 3.0, 0.5, GainMode::PhaseOnly).unwrap();
        let expected = 6.0 * 625.0 / (4.0 * PI * SEPARATION).powi(2);
        assert!((snr - expected).abs() < 1e-12 * expected);
        assert!(snr_at(&setup, focus, 1.0, 0.0, GainMode::PhaseOnly).is_err());

        let threshold = spacing_threshold(625, WAVELENGTH, SEPARATION).unwrap();
        let setup = reference_setup(threshold);
        let focused = snr_at(&setup, setup.focus_point(), 1.0, 1.0, GainMode::PhaseOnly).unwrap();
        let leaked = snr_at(
            &setup,
            setup.nearest_neighbor(),
            1.0,
            1.0,
            GainMode::PhaseOnly,
        )
        .unwrap();
        assert!(leaked / focused < 0.02);
    }

    #[test]
    fn exact_and_phase_only_agree_at_focus() {
        let setup = reference_setup(0.1265);
        let exact = array_gain(&setup, setup.focus_point(), GainMode::Exact).unwrap();
        let phase_only = array_gain(&setup, setup.focus_point(), GainMode::PhaseOnly).unwrap();
        let corner = setup.geometry().tx().positions()[0];
        let max_distance = setup.focus_point().distance(&corner);
        let taper = (max_distance / SEPARATION).powi(2) - 1.0;
        assert!(exact <= phase_only);
        assert!((phase_only - exact) / phase_only <= taper);
        assert!((phase_only - exact) / phase_only < 0.01);
    }

    #[test]
    fn four_neighbors_are_equivalent() {
        let setup = reference_setup(0.08);
        let d = 0.08;
        let probes = [
            Point3::new(d, 0.0, SEPARATION),
            Point3::new(-d, 0.0, SEPARATION),
            Point3::new(0.0, d, SEPARATION),
            Point3::new(0.0, -d, SEPARATION),
        ];
        for mode in GainMode::ALL {
            let reference = array_gain(&setup, probes[0], mode).unwrap();
            for probe in &probes[1..] {
                let g = array_gain(&setup, *probe, mode).unwrap();
                assert!(
                    (g - reference).abs() < 1e-9 * 625.0,
                    "{mode}: {g} vs {reference}"
                );
            }
        }
    }

    #[test]
    fn focus_maximizes_gain_on_receive_grid() {
        let setup =
            FocusSetup::on_axis(SystemGeometry::symmetric(9, 0.07, 0.01, 3.0).unwrap()).unwrap();
        let peak = array_gain(&setup, setup.focus_point(), GainMode::PhaseOnly).unwrap();
        for probe in setup.geometry().rx().positions() {
            assert!(array_gain(&setup, *probe, GainMode::PhaseOnly).unwrap() <= peak + 1e-9);
        }
    }

    #[test]
    fn first_null_is_threshold() {
        let grid: Vec<f64> = (4..=40).map(|k| k as f64 * 0.5 * WAVELENGTH).collect();
        let null = first_gain_null(625, WAVELENGTH, SEPARATION, &grid)
            .unwrap()
            .unwrap();
        let threshold = spacing_threshold(625, WAVELENGTH, SEPARATION).unwrap();
        assert!((null - threshold).abs() <= 1e-12 * threshold);
        assert_eq!(
            first_gain_null(625, WAVELENGTH, SEPARATION, &grid[..5]).unwrap(),
            None
        );
        assert_eq!(
            first_gain_null(1, WAVELENGTH, SEPARATION, &grid).unwrap(),
            None
        );
    }

    #[test]
    fn gain_map_layout() {
        let setup =
            FocusSetup::on_axis(SystemGeometry::symmetric(3, 0.05, 0.01, 1.0).unwrap()).unwrap();
        let probes = build_upa(3, 0.05, 1.0).unwrap().positions().to_vec();
        let samples = gain_map(&setup, &probes, &GainMode::ALL).unwrap();
        assert_eq!(samples.len(), 27);
        assert_eq!(samples[3].mode, GainMode::Exact);
        assert_eq!(samples[3].probe_x, probes[1].x);
        let mut buf = Vec::new();
        write_gain_map_csv(&samples, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("probe_x,probe_y,mode,gain\n"));
        assert_eq!(text.lines().count(), 28);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "phase_only".parse::<GainMode>().unwrap(),
            GainMode::PhaseOnly
        );
        assert!("focused".parse::<GainMode>().is_err());
        for mode in GainMode::ALL {
            assert_eq!(mode.as_str().parse::<GainMode>().unwrap(), mode);
        }
    }

    proptest! {
        #[test]
        fn closed_form_is_finite_and_bounded(side in 1usize..40, x in 0.0f64..5.0) {
            let n = side * side;
            // pick spacing so that d^2 / (lambda L) = x with lambda L = 1
            let gain = array_gain_closed_form(n, x.sqrt(), 1.0, 1.0).unwrap();
            prop_assert!(gain.is_finite());
            prop_assert!(gain >= 0.0 && gain <= n as f64 * (1.0 + 1e-9));
        }

        #[test]
        fn sinc_and_dirichlet_forms_agree(side in 1usize..40, x in 0.0f64..3.0) {
            let n = side * side;
            let kernel = array_gain_closed_form(n, x.sqrt(), 1.0, 1.0).unwrap();
            if let Some(sinc_form) = array_gain_closed_form_sinc(n, x.sqrt(), 1.0, 1.0).unwrap() {
                if (x - x.round()).abs() > 1e-6 {
                    prop_assert!((kernel - sinc_form).abs() <= 1e-6 * n as f64);
                }
            }
        }

        #[test]
        fn first_closed_form_zero_is_threshold(side in 2usize..60, wavelength in 1e-3f64..1.0, separation in 1.0f64..100.0) {
            let n = side * side;
            let threshold = spacing_threshold(n, wavelength, separation).unwrap();
            let at = array_gain_closed_form(n, threshold, wavelength, separation).unwrap();
            prop_assert!(at <= 1e-18 * n as f64 * 1e6);
            // no earlier zero: the kernel keeps its sign on (0, threshold)
            for k in 1..50 {
                let d = threshold * k as f64 / 50.0;
                prop_assert!(array_gain_closed_form(n, d, wavelength, separation).unwrap() > 0.0);
            }
        }
    }
}
