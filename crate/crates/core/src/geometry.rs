//! Uniform planar arrays of point antennas.
//!
//! Arrays are square grids lying in a `z = const` plane and centered on the
//! z axis. Antenna `(n, m)` (both 1-based) sits at
//! `((n - (s + 1) / 2) d, (m - (s + 1) / 2) d, z)` where `s` is the number of
//! antennas per side. Flattening is row-major in `(n, m)`: the antenna with
//! indices `(n, m)` has flat index `(n - 1) * s + (m - 1)`. Channel matrix
//! rows and columns follow this order.

use std::ops::Sub;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, Error, Result};

/// A point in space, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Sub for Point3 {
    type Output = Point3;

    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

/// Square uniform planar array parallel to the xy plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarArray {
    side_count: usize,
    spacing: f64,
    plane_offset: f64,
    positions: Vec<Point3>,
}

impl PlanarArray {
    /// Antennas per side (`sqrt(N)`).
    pub fn side_count(&self) -> usize {
        self.side_count
    }

    /// Total number of antennas `N`.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// z coordinate of the array plane.
    pub fn plane_offset(&self) -> f64 {
        self.plane_offset
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    /// Position of antenna `(n, m)`, both 1-based.
    pub fn position(&self, n: usize, m: usize) -> Result<Point3> {
        for index in [n, m] {
            if index == 0 || index > self.side_count {
                return Err(Error::IndexOutOfRange {
                    index,
                    len: self.side_count,
                });
            }
        }
        Ok(self.positions[(n - 1) * self.side_count + (m - 1)])
    }

    /// Area owned by the array when every antenna occupies a `d x d` cell.
    pub fn cell_area(&self) -> f64 {
        self.len() as f64 * self.spacing * self.spacing
    }

    /// Area of the square spanned by the outermost antennas.
    pub fn span_area(&self) -> f64 {
        let side = (self.side_count as f64 - 1.0) * self.spacing;
        side * side
    }
}

/// Builds a `side_count x side_count` array with the given pitch in the plane
/// `z = plane_offset`.
pub fn build_upa(side_count: usize, spacing: f64, plane_offset: f64) -> Result<PlanarArray> {
    if side_count == 0 {
        return Err(Error::invalid("side_count", "must be at least 1"));
    }
    ensure_non_negative("spacing", spacing)?;
    if spacing == 0.0 && side_count > 1 {
        return Err(Error::invalid(
            "spacing",
            "must be > 0 for arrays with more than one antenna",
        ));
    }
    if !plane_offset.is_finite() {
        return Err(Error::invalid("plane_offset", "must be finite"));
    }

    let coords: Vec<f64> = (1..=side_count)
        .map(|index| centered_coordinate(index, side_count, spacing))
        .collect();
    let mut positions = Vec::with_capacity(side_count * side_count);
    for &x in &coords {
        for &y in &coords {
            positions.push(Point3::new(x, y, plane_offset));
        }
    }

    Ok(PlanarArray {
        side_count,
        spacing,
        plane_offset,
        positions,
    })
}

/// Centered coordinate of the `index`-th antenna (1-based) along one side.
pub fn relative_coordinate(index: usize, side_count: usize, spacing: f64) -> Result<f64> {
    if index == 0 || index > side_count {
        return Err(Error::IndexOutOfRange {
            index,
            len: side_count,
        });
    }
    Ok(centered_coordinate(index, side_count, spacing))
}

fn centered_coordinate(index: usize, side_count: usize, spacing: f64) -> f64 {
    // Twice the offset is an exact integer, so mirrored indices give exact negatives.
    let twice = 2.0 * index as f64 - (side_count as f64 + 1.0);
    0.5 * twice * spacing
}
