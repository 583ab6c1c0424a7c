//! Free-space Green's function channels between two planar arrays.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure_positive, Error, Result};
use crate::format::{format_complex, OutputError};
use crate::geometry::{build_upa, PlanarArray, Point3};

/// Transmit and receive arrays facing each other along the z axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemGeometry {
    tx: PlanarArray,
    rx: PlanarArray,
    wavelength: f64,
    separation: f64,
}

impl SystemGeometry {
    /// The receive plane must lie strictly in front of the transmit plane.
    pub fn new(tx: PlanarArray, rx: PlanarArray, wavelength: f64) -> Result<Self> {
        ensure_positive("wavelength", wavelength)?;
        if tx.is_empty() || rx.is_empty() {
            return Err(Error::invalid("array", "arrays must not be empty"));
        }
        let separation = rx.plane_offset() - tx.plane_offset();
        ensure_positive("separation", separation)?;
        Ok(Self {
            tx,
            rx,
            wavelength,
            separation,
        })
    }

    /// Identical `side_count x side_count` arrays, transmitter at `z = 0`,
    /// receiver at `z = separation`.
    pub fn symmetric(
        side_count: usize,
        spacing: f64,
        wavelength: f64,
        separation: f64,
    ) -> Result<Self> {
        ensure_positive("separation", separation)?;
        let tx = build_upa(side_count, spacing, 0.0)?;
        let rx = build_upa(side_count, spacing, separation)?;
        Self::new(tx, rx, wavelength)
    }

    pub fn tx(&self) -> &PlanarArray {
        &self.tx
    }

    pub fn rx(&self) -> &PlanarArray {
        &self.rx
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Plane separation `L`.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    /// The same system with the roles of the two arrays exchanged.
    pub fn swapped(&self) -> Result<Self> {
        let tx = build_upa(
            self.rx.side_count(),
            self.rx.spacing(),
            self.tx.plane_offset(),
        )?;
        let rx = build_upa(
            self.tx.side_count(),
            self.tx.spacing(),
            self.rx.plane_offset(),
        )?;
        Self::new(tx, rx, self.wavelength)
    }
}

/// Propagation phase `k r` reduced modulo `2 pi`.
///
/// Reducing `r / lambda` before multiplying keeps the phase accurate when
/// the path spans thousands of wavelengths.
pub(crate) fn propagation_phase(distance: f64, wavelength: f64) -> f64 {
    let cycles = distance / wavelength;
    TAU * (cycles - cycles.floor())
}

/// Scalar free-space Green's function `-exp(i k r) / (4 pi r)`.
pub fn greens(receive_point: Point3, source_point: Point3, wavelength: f64) -> Result<Complex64> {
    ensure_positive("wavelength", wavelength)?;
    if !receive_point.is_finite() || !source_point.is_finite() {
        return Err(Error::invalid("point", "coordinates must be finite"));
    }
    let distance = receive_point.distance(&source_point);
    if distance == 0.0 {
        return Err(Error::Singularity { distance });
    }
    Ok(greens_at_distance(distance, wavelength))
}

pub(crate) fn greens_at_distance(distance: f64, wavelength: f64) -> Complex64 {
    let phase = propagation_phase(distance, wavelength);
    -Complex64::from_polar(1.0, phase) / (4.0 * PI * distance)
}

/// Dense complex matrix, row-major, with the geometry it came from when it
/// was built by [`build_channel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<Complex64>,
    geometry: Option<SystemGeometry>,
}

impl ChannelMatrix {
    /// Wraps an arbitrary row-major matrix. Used for synthetic channels.
    pub fn from_entries(nrows: usize, ncols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return Err(Error::invalid("channel", "matrix must be non-empty"));
        }
        if entries.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                expected: nrows * ncols,
                actual: entries.len(),
            });
        }
        Ok(Self {
            nrows,
            ncols,
            entries,
            geometry: None,
        })
    }

    /// Number of receive antennas `N_R`.
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    /// Number of transmit antennas `N_S`.
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.ncols + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.entries[row * self.ncols..(row + 1) * self.ncols]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn geometry(&self) -> Option<&SystemGeometry> {
        self.geometry.as_ref()
    }

    /// Squared Frobenius norm, `sum |g_ij|^2 = trace(G G^H)`.
    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.entries.iter().map(|g| g.norm_sqr()).sum()
    }

    pub fn transpose(&self) -> ChannelMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for col in 0..self.ncols {
            entries.extend((0..self.nrows).map(|row| self.get(row, col)));
        }
        ChannelMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            entries,
            geometry: None,
        }
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> ChannelMatrix {
        ChannelMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            entries: self.entries.iter().map(|g| g * factor).collect(),
            geometry: None,
        }
    }

    /// Hermitian Gram matrix `G G^H` (`N_R x N_R`, row-major).
    pub fn gram(&self) -> Vec<Complex64> {
        let n = self.nrows;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let ri = self.row(i);
            for j in i..n {
                let rj = self.row(j);
                let value: Complex64 = ri.iter().zip(rj).map(|(a, b)| a * b.conj()).sum();
                out[i * n + j] = value;
                out[j * n + i] = value.conj();
            }
        }
        out
    }

    pub(crate) fn to_faer(&self) -> faer::Mat<Complex64> {
        faer::Mat::from_fn(self.nrows, self.ncols, |i, j| self.get(i, j))
    }

    /// Writes one CSV line per receive antenna, entries as `re+imj`.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), OutputError> {
        let mut csv = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        for row in 0..self.nrows {
            csv.write_record(self.row(row).iter().map(|g| format_complex(*g)))?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Exact Green's-function channel: `G[i][j] = greens(rx_i, tx_j)`.
pub fn build_channel(geometry: &SystemGeometry) -> Result<ChannelMatrix> {
    let tx = geometry.tx().positions();
    let rx = geometry.rx().positions();
    let wavelength = geometry.wavelength();
    let ncols = tx.len();

    let rows: Vec<Vec<Complex64>> = rx
        .par_iter()
        .map(|r| {
            tx.iter()
                .map(|s| {
                    let distance = r.distance(s);
                    if distance == 0.0 {
                        Err(Error::Singularity { distance })
                    } else {
                        Ok(greens_at_distance(distance, wavelength))
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut entries = Vec::with_capacity(rx.len() * ncols);
    for row in rows {
        entries.extend(row);
    }
    Ok(ChannelMatrix {
        nrows: rx.len(),
        ncols,
        entries,
        geometry: Some(geometry.clone()),
    })
}

/// Noiseless received field `G s`.
pub fn received_field(channel: &ChannelMatrix, sources: &[Complex64]) -> Result<Vec<Complex64>> {
    if sources.len() != channel.ncols() {
        return Err(Error::DimensionMismatch {
            expected: channel.ncols(),
            actual: sources.len(),
        });
    }
    Ok((0..channel.nrows())
        .map(|i| channel.row(i).iter().zip(sources).map(|(g, s)| g * s).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn greens_trivial_phases() {
        let origin = Point3::default();
        let g = greens(Point3::new(0.0, 0.0, 1.0), origin, 0.01).unwrap();
        assert!(close(g, Complex64::new(-1.0 / (4.0 * PI), 0.0), 1e-12));

        let g = greens(Point3::new(0.0, 0.0, 0.005), origin, 0.01).unwrap();
        assert!(close(
            g,
            Complex64::new(1.0 / (2.0 * PI * 0.01), 0.0),
            1e-12
        ));
        assert!((g.re - 15.9155).abs() < 1e-4);

        let g = greens(origin, Point3::new(0.03, 0.04, 0.0), 0.1).unwrap();
        assert!(close(g, Complex64::new(1.0 / (0.2 * PI), 0.0), 1e-12));
    }

    #[test]
    fn greens_magnitude_is_inverse_distance() {
        let g = greens(
            Point3::new(0.3, -1.2, 7.0),
            Point3::new(-0.1, 0.2, 0.0),
            0.0123,
        )
        .unwrap();
        let r = Point3::new(0.4, -1.4, 7.0).norm();
        assert!((g.norm() - 1.0 / (4.0 * PI * r)).abs() < 1e-15);
    }

    #[test]
    fn greens_rejects_bad_inputs() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert!(matches!(greens(p, p, 0.01), Err(Error::Singularity { .. })));
        assert!(greens(p, Point3::new(f64::NAN, 0.0, 0.0), 0.01).is_err());
        assert!(greens(p, Point3::default(), 0.0).is_err());
        assert!(greens(p, Point3::default(), -1.0).is_err());
    }

    #[test]
    fn geometry_requires_forward_separation() {
        let a = build_upa(2, 0.1, 0.0).unwrap();
        let b = build_upa(2, 0.1, 0.0).unwrap();
        assert!(SystemGeometry::new(a.clone(), b, 0.01).is_err());
        let c = build_upa(2, 0.1, -1.0).unwrap();
        assert!(SystemGeometry::new(a, c, 0.01).is_err());
        assert!(SystemGeometry::symmetric(2, 0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn single_pair_channel() {
        let geometry = SystemGeometry::symmetric(1, 0.0, 0.01, 3.3).unwrap();
        let channel = build_channel(&geometry).unwrap();
        assert_eq!((channel.nrows(), channel.ncols()), (1, 1));
        let expected = greens(Point3::new(0.0, 0.0, 3.3), Point3::default(), 0.01).unwrap();
        assert_eq!(channel.get(0, 0), expected);
    }

    #[test]
    fn coaxial_identical_arrays_are_symmetric() {
        let geometry = SystemGeometry::symmetric(3, 0.013, 0.01, 0.5).unwrap();
        let channel = build_channel(&geometry).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert!(close(channel.get(i, j), channel.get(j, i), 1e-12));
            }
        }
    }

    #[test]
    fn entries_match_per_pair_loop() {
        let wavelength = 0.01;
        let geometry =
            SystemGeometry::symmetric(2, wavelength / 2.0, wavelength, 10.0 * wavelength).unwrap();
        let channel = build_channel(&geometry).unwrap();
        let rx = geometry.rx().positions();
        let tx = geometry.tx().positions();
        for (i, r) in rx.iter().enumerate() {
            for (j, s) in tx.iter().enumerate() {
                let d = ((r.x - s.x).powi(2) + (r.y - s.y).powi(2) + (r.z - s.z).powi(2)).sqrt();
                let k = 2.0 * PI / wavelength;
                let oracle = -Complex64::new((k * d).cos(), (k * d).sin()) / (4.0 * PI * d);
                assert!(close(channel.get(i, j), oracle, 1e-12));
            }
        }
    }

    #[test]
    fn received_field_cases() {
        let geometry = SystemGeometry::symmetric(3, 0.02, 0.01, 0.3).unwrap();
        let channel = build_channel(&geometry).unwrap();
        let zeros = vec![Complex64::new(0.0, 0.0); 9];
        assert!(received_field(&channel, &zeros)
            .unwrap()
            .iter()
            .all(|f| f.norm() == 0.0));
        assert!(matches!(
            received_field(&channel, &zeros[..4]),
            Err(Error::DimensionMismatch {
                expected: 9,
                actual: 4
            })
        ));

        let sources: Vec<Complex64> = (0..9)
            .map(|j| Complex64::new((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos()))
            .collect();
        let field = received_field(&channel, &sources).unwrap();
        let rx = geometry.rx().positions();
        let tx = geometry.tx().positions();
        for (i, r) in rx.iter().enumerate() {
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, s) in tx.iter().enumerate() {
                sum += greens(*r, *s, 0.01).unwrap() * sources[j];
            }
            assert!(close(field[i], sum, 1e-12));
        }

        let one = SystemGeometry::new(
            build_upa(1, 0.0, 0.0).unwrap(),
            build_upa(3, 0.02, 0.3).unwrap(),
            0.01,
        )
        .unwrap();
        let column = build_channel(&one).unwrap();
        let field = received_field(&column, &[Complex64::new(1.0, 0.0)]).unwrap();
        for (i, f) in field.iter().enumerate() {
            assert_eq!(*f, column.get(i, 0));
        }
    }

    #[test]
    fn swapping_arrays_transposes() {
        let tx = build_upa(2, 0.03, 0.0).unwrap();
        let rx = build_upa(3, 0.02, 0.4).unwrap();
        let geometry = SystemGeometry::new(tx, rx, 0.01).unwrap();
        let forward = build_channel(&geometry).unwrap();
        let backward = build_channel(&geometry.swapped().unwrap()).unwrap();
        assert_eq!((backward.nrows(), backward.ncols()), (4, 9));
        let t = forward.transpose();
        for (a, b) in t.entries().iter().zip(backward.entries()) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn coordinate_scaling() {
        let c = 3.0;
        let base = build_channel(&SystemGeometry::symmetric(3, 0.017, 0.01, 0.7).unwrap()).unwrap();
        let scaled =
            build_channel(&SystemGeometry::symmetric(3, 0.017 * c, 0.01 * c, 0.7 * c).unwrap())
                .unwrap();
        for (a, b) in base.entries().iter().zip(scaled.entries()) {
            assert!(close(*b, a / c, 1e-10));
        }
    }

    #[test]
    fn csv_export_has_one_line_per_receiver() {
        let channel =
            build_channel(&SystemGeometry::symmetric(2, 0.005, 0.01, 0.1).unwrap()).unwrap();
        let mut buf = Vec::new();
        channel.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].split(',').count(), 4);
        assert!(lines[0].split(',').all(|cell| cell.ends_with('j')));
    }
}
