use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;
use xlmimo_core::beamfocus::{gain_map, write_gain_map_csv, GainMode};
use xlmimo_core::experiments::{
    arithmetic_grid, eigen_profile, has_plateau, preset_names, preset_source, run_sweep,
    validate_closed_form, write_profile_csv, write_records_csv, EstimatorRegime, Experiment,
    ProfileSpec, SweepSpec,
};
use xlmimo_core::format::format_short;
use xlmimo_core::spectrum::{
    capacity, edof_exact, edof_report, eigen_spectrum, truncation_index, EigenSpectrum,
};
use xlmimo_core::units::{Length, LengthContext};
use xlmimo_core::{
    array_gain, array_gain_closed_form, build_channel, paraxial_parameter, EdofReport, FocusSetup,
    Point3,
};

use crate::config::Resolved;

/// Whether a command ran to completion with all checks satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    ChecksFailed,
}

fn lambdas(meters: f64, wavelength: f64) -> String {
    format!("{} lambda", format_short(meters / wavelength))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn threshold(config: &Resolved) -> anyhow::Result<Outcome> {
    let d = config.threshold;
    println!(
        "d_threshold = {} m = {}  (N = {}, wavelength = {} m, L = {} m)",
        format_short(d),
        lambdas(d, config.wavelength),
        config.n_antennas(),
        format_short(config.wavelength),
        format_short(config.separation),
    );
    if let Some(spacing) = config.spacing {
        let eps = paraxial_parameter(
            config.n_antennas(),
            spacing,
            config.wavelength,
            config.separation,
        )?;
        println!(
            "epsilon = {} at spacing {} m = {}",
            format_short(eps),
            format_short(spacing),
            lambdas(spacing, config.wavelength)
        );
    }
    Ok(Outcome::Ok)
}

#[derive(Debug, Serialize)]
struct ReportOutput {
    wavelength: f64,
    side_count: usize,
    spacing: f64,
    separation: f64,
    epsilon: f64,
    #[serde(flatten)]
    edof: EdofReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_edof_exact_default_fraction: Option<usize>,
    power: f64,
    noise_variance: f64,
    capacity_full: f64,
    capacity_edof_exact: f64,
    capacity_edof_fringes: f64,
    capacity_edof_trace: f64,
    rho1_closed: f64,
}

pub fn report(config: &Resolved, json: bool) -> anyhow::Result<Outcome> {
    let geometry = config.geometry()?;
    let spacing = geometry.tx().spacing();
    let n = config.n_antennas();
    let spectrum = eigen_spectrum(&build_channel(&geometry)?)?;
    let edof = edof_report(&spectrum, &geometry, &config.edof)?;
    let default_fraction = xlmimo_core::spectrum::DEFAULT_ENERGY_FRACTION;
    let n_edof_exact_default_fraction = (config.edof.energy_fraction != default_fraction)
        .then(|| edof_exact(&spectrum, default_fraction))
        .transpose()?;
    let (power, noise) = config.power_budget();
    let cap = |t: Option<usize>| capacity(&spectrum, power, noise, n, t);
    let len = spectrum.len();
    let out = ReportOutput {
        wavelength: config.wavelength,
        side_count: config.side_count,
        spacing,
        separation: config.separation,
        epsilon: paraxial_parameter(n, spacing, config.wavelength, config.separation)?,
        edof,
        n_edof_exact_default_fraction,
        power,
        noise_variance: noise,
        capacity_full: cap(None)?,
        capacity_edof_exact: cap(Some(edof.n_edof_exact))?,
        capacity_edof_fringes: cap(Some(truncation_index(edof.n_edof_fringes, len)))?,
        capacity_edof_trace: cap(Some(truncation_index(edof.n_edof_trace, len)))?,
        rho1_closed: array_gain_closed_form(n, spacing, config.wavelength, config.separation)?,
    };

    if let Some(path) = &config.output_path {
        write_json(path, &out)?;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(Outcome::Ok);
    }
    println!(
        "{}x{} arrays, spacing {} m ({}), L = {} m, epsilon = {}",
        config.side_count,
        config.side_count,
        format_short(spacing),
        lambdas(spacing, config.wavelength),
        format_short(config.separation),
        format_short(out.epsilon)
    );
    println!("{edof}");
    if let Some(at_default) = n_edof_exact_default_fraction {
        let relation = match edof.n_edof_exact.cmp(&at_default) {
            std::cmp::Ordering::Less => "<",
            std::cmp::Ordering::Equal => "=",
            std::cmp::Ordering::Greater => ">",
        };
        println!(
            "n_edof_exact at {}% energy: {at_default} ({} {relation} {at_default})",
            format_short(100.0 * default_fraction),
            edof.n_edof_exact
        );
    }
    println!("rho1_closed      {}", format_short(out.rho1_closed));
    println!(
        "capacity (bits/s/Hz, P = {}, noise variance = {})",
        format_short(power),
        format_short(noise)
    );
    println!("  full           {}", format_short(out.capacity_full));
    println!("  n_edof_exact   {}", format_short(out.capacity_edof_exact));
    println!(
        "  n_edof_fringes {}",
        format_short(out.capacity_edof_fringes)
    );
    println!("  n_edof_trace   {}", format_short(out.capacity_edof_trace));
    Ok(Outcome::Ok)
}

fn load_experiment(target: &str) -> anyhow::Result<(String, Experiment)> {
    if preset_names().any(|p| p == target) {
        return Ok((
            target.to_string(),
            Experiment::from_json(preset_source(target)?)?,
        ));
    }
    let path = Path::new(target);
    if !path.exists() {
        let known: Vec<&str> = preset_names().collect();
        return Err(xlmimo_core::Error::UnknownPreset(target.to_string())).with_context(|| {
            format!(
                "not a preset ({}) or an existing spec file",
                known.join(", ")
            )
        });
    }
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let experiment =
        Experiment::from_json(&text).with_context(|| format!("loading spec {}", path.display()))?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sweep")
        .to_string();
    Ok((stem, experiment))
}

pub fn sweep(
    target: &str,
    output: Option<PathBuf>,
    max_points: Option<usize>,
) -> anyhow::Result<Outcome> {
    let (name, mut experiment) = load_experiment(target)?;
    if let (Some(cap), Experiment::Sweep(spec)) = (max_points, &mut experiment) {
        spec.max_points = cap;
        spec.validate()?;
    }
    let csv_path = output.unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    let sidecar = csv_path.with_extension("json");
    if sidecar == csv_path {
        bail!(
            "output path {} collides with its JSON sidecar",
            csv_path.display()
        );
    }
    let outcome = match &experiment {
        Experiment::Sweep(spec) => run_sweep_command(spec, &csv_path)?,
        Experiment::Profile(spec) => run_profile_command(spec, &csv_path)?,
    };
    let mut side = create(&sidecar)?;
    writeln!(side, "{}", experiment.resolved_json())?;
    side.flush()?;
    println!("wrote {} and {}", csv_path.display(), sidecar.display());
    Ok(outcome)
}

fn run_sweep_command(spec: &SweepSpec, csv_path: &Path) -> anyhow::Result<Outcome> {
    let records = run_sweep(spec)?;
    write_records_csv(&records, create(csv_path)?)?;

    let mut violations = 0;
    for r in &records {
        for v in r.invariant_violations() {
            eprintln!("invariant violated at {}: {v}", r.swept_value);
            violations += 1;
        }
    }
    let best = records
        .iter()
        .filter_map(|r| r.n_edof_exact.map(|e| (e, r.swept_value)))
        .fold(None, |acc: Option<(usize, f64)>, x| match acc {
            Some(a) if a.0 >= x.0 => Some(a),
            _ => Some(x),
        });
    println!("{} records", records.len());
    if let Some((edof, at)) = best {
        println!(
            "peak n_edof_exact {edof} at swept value {} ({})",
            format_short(at),
            lambdas(at, spec.fixed.wavelength)
        );
    }
    let regime = EstimatorRegime::from_records(&records);
    if let Some(gap) = regime.max_gap_paraxial {
        let note = if regime.estimator_valid_below_threshold() {
            ""
        } else {
            " (warning: above 0.1)"
        };
        println!(
            "max trace-estimator gap, epsilon <= 1: {}{note}",
            format_short(gap)
        );
    }
    if let Some(gap) = regime.max_gap_beyond {
        println!(
            "max trace-estimator gap, epsilon >= 1.5: {}",
            format_short(gap)
        );
    }
    if violations > 0 {
        eprintln!("{violations} invariant violation(s)");
        return Ok(Outcome::ChecksFailed);
    }
    Ok(Outcome::Ok)
}

fn run_profile_command(spec: &ProfileSpec, csv_path: &Path) -> anyhow::Result<Outcome> {
    let profile = eigen_profile(&spec.geometry)?;
    write_profile_csv(&profile, create(csv_path)?)?;
    let spectrum = EigenSpectrum::from_values(profile.iter().map(|p| p.eigenvalue).collect())?;
    let n_edof = edof_exact(&spectrum, spec.energy_fraction)?;
    println!("{} eigenvalues, n_edof_exact {n_edof}", profile.len());
    println!(
        "plateau (mu_k^2 / mu_1^2 >= 0.1 for k <= n_edof_exact / 2): {}",
        if has_plateau(&profile, n_edof, 0.1, 0.5) {
            "yes"
        } else {
            "no"
        }
    );
    Ok(Outcome::Ok)
}

pub struct GainMapArgs {
    pub points: usize,
    pub half_width: Option<Length>,
    pub modes: Vec<GainMode>,
}

pub fn gainmap(config: &Resolved, args: &GainMapArgs) -> anyhow::Result<Outcome> {
    if args.points == 0 {
        bail!("invalid `points`: must be at least 1");
    }
    let geometry = config.geometry()?;
    let context = LengthContext {
        wavelength: config.wavelength,
        threshold: Some(config.threshold),
    };
    let half_width = match args.half_width {
        Some(w) => w.resolve(&context).context("invalid `half_width`")?,
        None => 2.0 * geometry.rx().spacing().max(config.wavelength),
    };
    if !(half_width >= 0.0) {
        bail!("invalid `half_width`: {half_width} (must be >= 0)");
    }
    let modes = if args.modes.is_empty() {
        GainMode::ALL.to_vec()
    } else {
        args.modes.clone()
    };
    let setup = FocusSetup::on_axis(geometry)?;
    let z = setup.focus_point().z;
    let coords: Vec<f64> = if args.points == 1 {
        vec![0.0]
    } else {
        let step = 2.0 * half_width / (args.points - 1) as f64;
        (0..args.points)
            .map(|i| -half_width + i as f64 * step)
            .collect()
    };
    let probes: Vec<Point3> = coords
        .iter()
        .flat_map(|&y| coords.iter().map(move |&x| Point3::new(x, y, z)))
        .collect();
    let samples = gain_map(&setup, &probes, &modes)?;

    let path = config
        .output_path
        .clone()
        .unwrap_or_else(|| PathBuf::from("gainmap.csv"));
    write_gain_map_csv(&samples, create(&path)?)?;
    println!(
        "wrote {} ({} probes x {} modes)",
        path.display(),
        probes.len(),
        modes.len()
    );
    let neighbor = setup.nearest_neighbor();
    for mode in &modes {
        println!(
            "{:<10} focus {}  nearest neighbor {}",
            mode.as_str(),
            format_short(array_gain(&setup, setup.focus_point(), *mode)?),
            format_short(array_gain(&setup, neighbor, *mode)?)
        );
    }
    Ok(Outcome::Ok)
}

pub struct ValidateArgs {
    pub sides: Vec<usize>,
    pub spacings: Vec<Length>,
    pub start: Length,
    pub step: Length,
}

pub fn validate(config: &Resolved, args: &ValidateArgs) -> anyhow::Result<Outcome> {
    let sides = if args.sides.is_empty() {
        vec![config.side_count]
    } else {
        args.sides.clone()
    };
    if sides.contains(&0) {
        bail!("invalid `sides`: every side count must be at least 1");
    }
    let largest = *sides.iter().max().unwrap();
    let stop =
        xlmimo_core::spacing_threshold(largest * largest, config.wavelength, config.separation)?;
    let context = LengthContext {
        wavelength: config.wavelength,
        threshold: Some(stop),
    };
    let grid = if args.spacings.is_empty() {
        let start = args.start.resolve(&context).context("invalid `start`")?;
        let step = args.step.resolve(&context).context("invalid `step`")?;
        if !(step > 0.0) {
            bail!("invalid `step`: must be > 0");
        }
        if start >= stop {
            vec![stop]
        } else {
            let count = ((stop - start) / step).floor() as usize;
            let mut grid = arithmetic_grid(start, start + count as f64 * step, step)?;
            if stop - grid[grid.len() - 1] > 1e-9 * stop {
                grid.push(stop);
            }
            grid
        }
    } else {
        args.spacings
            .iter()
            .map(|s| s.resolve(&context))
            .collect::<Result<Vec<_>, _>>()
            .context("invalid `spacings`")?
    };

    let report = validate_closed_form(&sides, &grid, config.wavelength, config.separation)?;
    if let Some(path) = &config.output_path {
        write_json(path, &report)?;
    }
    for side in &sides {
        let worst = report
            .checks
            .iter()
            .filter(|c| c.side_count == *side && c.epsilon <= 1.0)
            .map(|c| c.normalized_error)
            .fold(0.0, f64::max);
        println!(
            "N = {:>5}  max |closed - phase_only| / N = {}",
            side * side,
            format_short(worst)
        );
    }
    println!(
        "{} checks over {} spacings, max normalized error {} (tolerance {}): {}",
        report.checks.len(),
        grid.len(),
        format_short(report.max_normalized_error),
        xlmimo_core::experiments::CLOSED_FORM_TOLERANCE,
        if report.passed { "pass" } else { "FAIL" }
    );
    Ok(if report.passed {
        Outcome::Ok
    } else {
        Outcome::ChecksFailed
    })
}
