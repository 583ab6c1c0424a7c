//! Eigenvalue spectra of the channel Gram matrix and the quantities derived
//! from them: DoF, effective DoF (exact and two estimators) and capacity.
//!
//! Spectra are squared singular values of `G` by default. The alternative
//! [`SpectrumMethod::Gram`] path eigendecomposes `G G^H` directly and exists
//! for cross-checking.

use std::fmt;

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::Par;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelMatrix, SystemGeometry};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::format::format_f64;
use crate::geometry::PlanarArray;

/// Energy share captured by the effective DoF.
pub const DEFAULT_ENERGY_FRACTION: f64 = 0.999;

/// Eigenvalues below this fraction of the largest one do not count as DoF.
pub const DEFAULT_DOF_FLOOR: f64 = 1e-12;

/// Relative round-off tolerated on negative eigenvalues before they are
/// treated as a broken decomposition.
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-12;

/// Eigenvalues `mu_i^2` of `G G^H`, largest first.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    values: Vec<f64>,
    total_energy: f64,
    source_dims: (usize, usize),
}

impl EigenSpectrum {
    /// Builds a spectrum from raw eigenvalues in any order.
    ///
    /// Negative values within round-off of zero are clamped; anything more
    /// negative is rejected.
    pub fn from_eigenvalues(mut values: Vec<f64>, source_dims: (usize, usize)) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Decomposition("non-finite eigenvalue".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let floor = -NEGATIVE_EIGENVALUE_TOLERANCE * values[0].max(0.0);
        for v in values.iter_mut() {
            if *v < 0.0 {
                if *v < floor {
                    return Err(Error::NegativeEigenvalue { value: *v, floor });
                }
                *v = 0.0;
            }
        }
        let total_energy = values.iter().sum();
        Ok(Self {
            values,
            total_energy,
            source_dims,
        })
    }

    /// Synthetic spectrum of a square system.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::from_eigenvalues(values, (n, n))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest eigenvalue `mu_1^2`.
    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    /// `sum mu_i^2 = trace(G G^H)`.
    pub fn total_energy(&self) -> f64 {
        self.total_energy
    }

    /// `(N_R, N_S)` of the channel the spectrum came from.
    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    /// Squared singular values of `G`.
    #[default]
    Svd,
    /// Eigenvalues of the explicitly formed `G G^H`.
    Gram,
}

/// Squared singular values of `G`, descending.
pub fn eigen_spectrum(channel: &ChannelMatrix) -> Result<EigenSpectrum> {
    eigen_spectrum_with(channel, SpectrumMethod::Svd)
}

pub fn eigen_spectrum_with(
    channel: &ChannelMatrix,
    method: SpectrumMethod,
) -> Result<EigenSpectrum> {
    let dims = (channel.nrows(), channel.ncols());
    let values = match method {
        SpectrumMethod::Svd => singular_values_sqr(channel)?,
        SpectrumMethod::Gram => {
            let mut values = gram_eigenvalues(channel)?;
            values.sort_by(|a, b| b.total_cmp(a));
            values.truncate(dims.0.min(dims.1));
            values
        }
    };
    EigenSpectrum::from_eigenvalues(values, dims)
}

// Decompositions run sequentially so that repeated runs give identical bits;
// parallelism lives one level up, across sweep points.
fn singular_values_sqr(channel: &ChannelMatrix) -> Result<Vec<f64>> {
    use faer::linalg::svd::{self, ComputeSvdVectors};

    let matrix = channel.to_faer();
    let (m, n) = (matrix.nrows(), matrix.ncols());
    let mut s = Diag::<Complex64>::zeros(m.min(n));
    let scratch = svd::svd_scratch::<Complex64>(
        m,
        n,
        ComputeSvdVectors::No,
        ComputeSvdVectors::No,
        Par::Seq,
        Default::default(),
    );
    svd::svd(
        matrix.as_ref(),
        s.as_mut(),
        None,
        None,
        Par::Seq,
        MemStack::new(&mut MemBuffer::new(scratch)),
        Default::default(),
    )
    .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(s.column_vector().iter().map(|x| x.re * x.re).collect())
}

fn gram_eigenvalues(channel: &ChannelMatrix) -> Result<Vec<f64>> {
    use faer::linalg::evd::{self, ComputeEigenvectors};

    let n = channel.nrows();
    let gram = channel.gram();
    let matrix = faer::Mat::from_fn(n, n, |i, j| gram[i * n + j]);
    let mut s = Diag::<Complex64>::zeros(n);
    let scratch = evd::self_adjoint_evd_scratch::<Complex64>(
        n,
        ComputeEigenvectors::No,
        Par::Seq,
        Default::default(),
    );
    evd::self_adjoint_evd(
        matrix.as_ref(),
        s.as_mut(),
        None,
        Par::Seq,
        MemStack::new(&mut MemBuffer::new(scratch)),
        Default::default(),
    )
    .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(s.column_vector().iter().map(|x| x.re).collect())
}

/// Number of eigenvalues at or above `relative_floor * mu_1^2`.
pub fn count_dof(spectrum: &EigenSpectrum, relative_floor: f64) -> Result<usize> {
    if !(relative_floor > 0.0 && relative_floor < 1.0) {
        return Err(Error::invalid(
            "relative_floor",
            format!("must lie in (0, 1), got {relative_floor}"),
        ));
    }
    if spectrum.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let floor = relative_floor * spectrum.largest();
    Ok(spectrum
        .values()
        .iter()
        .filter(|&&v| v > 0.0 && v >= floor)
        .count())
}

/// Smallest `n` whose leading eigenvalues hold at least `fraction` of the energy.
pub fn edof_exact(spectrum: &EigenSpectrum, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(
            "fraction",
            format!("must lie in (0, 1), got {fraction}"),
        ));
    }
    let total = spectrum.total_energy();
    if !(total > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let target = fraction * total;
    let mut cumulative = 0.0;
    for (i, v) in spectrum.values().iter().enumerate() {
        cumulative += v;
        if cumulative >= target {
            return Ok(i + 1);
        }
    }
    // unreachable with a finite spectrum: the full prefix sums to `total`
    Ok(spectrum.len())
}

/// Fringe-counting estimate `A_S A_R / (lambda L)^2`.
pub fn edof_fringes(area_tx: f64, area_rx: f64, wavelength: f64, separation: f64) -> Result<f64> {
    ensure_positive("area_tx", area_tx)?;
    ensure_positive("area_rx", area_rx)?;
    ensure_positive("wavelength", wavelength)?;
    ensure_positive("separation", separation)?;
    let wl = wavelength * separation;
    Ok(area_tx * area_rx / (wl * wl))
}

/// How the area of a discrete array is measured for [`edof_fringes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApertureConvention {
    /// `N d^2`: every antenna owns a `d x d` cell.
    #[default]
    Cell,
    /// `((sqrt(N) - 1) d)^2`: the square spanned by the outermost antennas.
    Span,
}

impl ApertureConvention {
    pub fn area(self, array: &PlanarArray) -> f64 {
        match self {
            ApertureConvention::Cell => array.cell_area(),
            ApertureConvention::Span => array.span_area(),
        }
    }
}

/// [`edof_fringes`] evaluated on the arrays of `geometry`.
pub fn edof_fringes_for(geometry: &SystemGeometry, convention: ApertureConvention) -> Result<f64> {
    edof_fringes(
        convention.area(geometry.tx()),
        convention.area(geometry.rx()),
        geometry.wavelength(),
        geometry.separation(),
    )
}

/// Trace estimate `(sum mu_i^2)^2 / sum mu_i^4`.
pub fn edof_trace(spectrum: &EigenSpectrum) -> Result<f64> {
    let total = spectrum.total_energy();
    if !(total > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    // normalize first so that tiny channel magnitudes cannot underflow the fourth powers
    let largest = spectrum.largest();
    let (sum, sum_sq) = spectrum
        .values()
        .iter()
        .map(|v| v / largest)
        .fold((0.0, 0.0), |(s, q), v| (s + v, q + v * v));
    Ok(sum * sum / sum_sq)
}

/// Transmit power and receiver noise of a capacity evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub total_power: f64,
    pub noise_variance: f64,
}

/// Equal-power MIMO capacity `sum_{i<=T} log2(1 + P mu_i^2 / (sigma^2 N_S))`
/// in bits/s/Hz. `truncate_to = None` sums the whole spectrum.
pub fn capacity(
    spectrum: &EigenSpectrum,
    total_power: f64,
    noise_variance: f64,
    n_tx: usize,
    truncate_to: Option<usize>,
) -> Result<f64> {
    ensure_non_negative("total_power", total_power)?;
    ensure_positive("noise_variance", noise_variance)?;
    if n_tx == 0 {
        return Err(Error::invalid("n_tx", "must be at least 1"));
    }
    let terms = match truncate_to {
        Some(t) if t > spectrum.len() => {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: spectrum.len(),
            })
        }
        Some(t) => t,
        None => spectrum.len(),
    };
    let snr_per_unit = total_power / (noise_variance * n_tx as f64);
    Ok(spectrum.values()[..terms]
        .iter()
        .map(|v| (snr_per_unit * v).ln_1p())
        .sum::<f64>()
        / std::f64::consts::LN_2)
}

/// Effective-DoF summary of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdofReport {
    pub n_dof: usize,
    pub n_edof_exact: usize,
    pub n_edof_fringes: f64,
    pub n_edof_trace: f64,
    #[serde(rename = "energy_fraction")]
    pub energy_fraction_used: f64,
}

impl EdofReport {
    pub const CSV_HEADER: [&'static str; 5] = [
        "n_dof",
        "n_edof_exact",
        "n_edof_fringes",
        "n_edof_trace",
        "energy_fraction",
    ];

    pub fn csv_row(&self) -> [String; 5] {
        [
            self.n_dof.to_string(),
            self.n_edof_exact.to_string(),
            format_f64(self.n_edof_fringes),
            format_f64(self.n_edof_trace),
            format_f64(self.energy_fraction_used),
        ]
    }
}

impl fmt::Display for EdofReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::format::format_short;
        writeln!(f, "n_dof            {}", self.n_dof)?;
        writeln!(
            f,
            "n_edof_exact     {} ({}% energy)",
            self.n_edof_exact,
            format_short(100.0 * self.energy_fraction_used)
        )?;
        writeln!(f, "n_edof_fringes   {}", format_short(self.n_edof_fringes))?;
        write!(f, "n_edof_trace     {}", format_short(self.n_edof_trace))
    }
}

/// Knobs of [`edof_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdofParams {
    pub energy_fraction: f64,
    pub dof_floor: f64,
    pub aperture: ApertureConvention,
}

impl Default for EdofParams {
    fn default() -> Self {
        Self {
            energy_fraction: DEFAULT_ENERGY_FRACTION,
            dof_floor: DEFAULT_DOF_FLOOR,
            aperture: ApertureConvention::default(),
        }
    }
}

pub fn edof_report(
    spectrum: &EigenSpectrum,
    geometry: &SystemGeometry,
    params: &EdofParams,
) -> Result<EdofReport> {
    Ok(EdofReport {
        n_dof: count_dof(spectrum, params.dof_floor)?,
        n_edof_exact: edof_exact(spectrum, params.energy_fraction)?,
        n_edof_fringes: edof_fringes_for(geometry, params.aperture)?,
        n_edof_trace: edof_trace(spectrum)?,
        energy_fraction_used: params.energy_fraction,
    })
}

/// Rounds a real-valued DoF estimate to a usable truncation index in `1..=len`.
pub fn truncation_index(estimate: f64, len: usize) -> usize {
    if !estimate.is_finite() {
        return len;
    }
    (estimate.round().max(1.0) as usize).min(len)
}
