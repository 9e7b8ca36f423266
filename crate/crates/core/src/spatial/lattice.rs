use std::f64::consts::{FRAC_PI_4, SQRT_2};

use super::Point;
use crate::{Error, Result};

/// Rotation of a scheme lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Axis-aligned square cells (`theta = 0`).
    Axis,
    /// Cells rotated by `pi/4`; each cell is the diamond around one bond of a
    /// square bond lattice whose spacing is the cell diagonal.
    Diagonal,
}

/// A square tiling of `[0, side]^2`.
///
/// Cells are addressed by `(row, col)`. For [`Orientation::Axis`] every
/// address is a cell, rows grow with `y` and columns with `x`.
///
/// For [`Orientation::Diagonal`] the addresses form the expanded site grid of
/// the bond lattice with `M = bonds_per_side()` bonds per side:
/// `(even, even)` are junctions, `(2j, 2i+1)` is the horizontal bond from
/// `(i, j)` to `(i+1, j)`, `(2j+1, 2i)` is the vertical bond from `(i, j)` to
/// `(i, j+1)`, and `(odd, odd)` addresses are unused. Only bond addresses are
/// cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeLattice {
    region_side: f64,
    cell_side: f64,
    orientation: Orientation,
    rows: usize,
    cols: usize,
}

impl SchemeLattice {
    /// Axis-aligned cells of side `cell`; the last row and column may be partial.
    pub fn axis(region_side: f64, cell: f64) -> Result<Self> {
        check(region_side, cell)?;
        let k = ((region_side / cell) - 1e-9).ceil().max(1.0) as usize;
        Ok(SchemeLattice {
            region_side,
            cell_side: cell,
            orientation: Orientation::Axis,
            rows: k,
            cols: k,
        })
    }

    /// Axis-aligned cells that divide the region evenly, with side as close to
    /// `nominal` from above as possible.
    pub fn axis_fitted(region_side: f64, nominal: f64) -> Result<Self> {
        check(region_side, nominal)?;
        let k = ((region_side / nominal).floor() as usize).max(1);
        Ok(SchemeLattice {
            region_side,
            cell_side: region_side / k as f64,
            orientation: Orientation::Axis,
            rows: k,
            cols: k,
        })
    }

    /// Cells of side `cell` rotated by `pi/4`.
    pub fn diagonal(region_side: f64, cell: f64) -> Result<Self> {
        check(region_side, cell)?;
        let s = cell * SQRT_2;
        let m = ((region_side / s + 1e-9).floor() as usize).max(1);
        Ok(SchemeLattice {
            region_side,
            cell_side: cell,
            orientation: Orientation::Diagonal,
            rows: 2 * m + 1,
            cols: 2 * m + 1,
        })
    }

    pub fn region_side(&self) -> f64 {
        self.region_side
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Rotation angle in radians: `0` or `pi/4`.
    pub fn theta(&self) -> f64 {
        match self.orientation {
            Orientation::Axis => 0.0,
            Orientation::Diagonal => FRAC_PI_4,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Bond spacing `sqrt(2) * cell_side` of a diagonal lattice.
    pub fn bond_spacing(&self) -> f64 {
        self.cell_side * SQRT_2
    }

    /// Bonds per side `M` of a diagonal lattice (cells per side for axis).
    pub fn bonds_per_side(&self) -> usize {
        match self.orientation {
            Orientation::Axis => self.cols,
            Orientation::Diagonal => (self.cols - 1) / 2,
        }
    }

    /// Flat index of an address.
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Whether `(row, col)` addresses a cell.
    pub fn is_cell(&self, row: usize, col: usize) -> bool {
        row < self.rows
            && col < self.cols
            && match self.orientation {
                Orientation::Axis => true,
                Orientation::Diagonal => (row + col) % 2 == 1,
            }
    }

    /// All cell addresses in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows)
            .flat_map(move |r| (0..self.cols).map(move |c| (r, c)))
            .filter(move |&(r, c)| self.is_cell(r, c))
    }

    /// Number of cells.
    pub fn num_cells(&self) -> usize {
        match self.orientation {
            Orientation::Axis => self.rows * self.cols,
            Orientation::Diagonal => {
                let m = self.bonds_per_side();
                2 * m * (m + 1)
            }
        }
    }

    /// The cell containing `p`. Points outside the tiled area are assigned to
    /// the nearest boundary cell, so the query is total over the region.
    pub fn cell_of(&self, p: Point) -> (usize, usize) {
        match self.orientation {
            Orientation::Axis => {
                let c = clamp_floor(p.x / self.cell_side, self.cols - 1);
                let r = clamp_floor(p.y / self.cell_side, self.rows - 1);
                (r, c)
            }
            Orientation::Diagonal => {
                let s = self.bond_spacing();
                let m = self.bonds_per_side() as i64;
                let pp = (p.x / s + p.y / s).floor() as i64;
                let qq = (p.x / s - p.y / s).floor() as i64;
                if (pp - qq).rem_euclid(2) == 0 {
                    let i = ((pp + qq).div_euclid(2)).clamp(0, m - 1);
                    let j = ((pp - qq).div_euclid(2)).clamp(0, m);
                    (2 * j as usize, 2 * i as usize + 1)
                } else {
                    let i = ((pp + qq + 1).div_euclid(2)).clamp(0, m);
                    let j = ((pp - qq - 1).div_euclid(2)).clamp(0, m - 1);
                    (2 * j as usize + 1, 2 * i as usize)
                }
            }
        }
    }

    /// Geometric centre of a cell (a bond midpoint for diagonal lattices).
    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        match self.orientation {
            Orientation::Axis => Point::new(
                (col as f64 + 0.5) * self.cell_side,
                (row as f64 + 0.5) * self.cell_side,
            ),
            Orientation::Diagonal => {
                let s = self.bond_spacing();
                Point::new(col as f64 * 0.5 * s, row as f64 * 0.5 * s)
            }
        }
    }

    /// Lattice coordinates used for TDMA colouring: `(row, col)` for axis
    /// cells, the rotated `(P, Q)` coordinates for diagonal cells.
    pub fn color_coords(&self, row: usize, col: usize) -> (i64, i64) {
        match self.orientation {
            Orientation::Axis => (row as i64, col as i64),
            Orientation::Diagonal => {
                let (r, c) = (row as i64, col as i64);
                ((r + c - 1).div_euclid(2), (c - r - 1).div_euclid(2))
            }
        }
    }

    /// Slot of a cell under the `a x a` periodic colouring.
    pub fn color(&self, row: usize, col: usize, a: usize) -> usize {
        let (u, w) = self.color_coords(row, col);
        let a = a as i64;
        (u.rem_euclid(a) * a + w.rem_euclid(a)) as usize
    }
}

fn check(region_side: f64, cell: f64) -> Result<()> {
    if !(region_side.is_finite() && region_side > 0.0 && cell.is_finite() && cell > 0.0) {
        return Err(Error::param(format!(
            "lattice needs positive sides, got region {region_side}, cell {cell}"
        )));
    }
    Ok(())
}

fn clamp_floor(v: f64, max: usize) -> usize {
    if v.is_nan() || v < 0.0 {
        0
    } else {
        (v.floor() as usize).min(max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_covers_region() {
        let lat = SchemeLattice::axis(10.0, 3.0).unwrap();
        assert_eq!((lat.rows(), lat.cols()), (4, 4));
        assert_eq!(lat.cell_of(Point::new(10.0, 10.0)), (3, 3));
        assert_eq!(lat.cell_of(Point::new(2.9, 6.1)), (2, 0));
        assert_eq!(lat.num_cells(), 16);
    }

    #[test]
    fn fitted_divides_evenly() {
        let lat = SchemeLattice::axis_fitted(10.0, 3.0).unwrap();
        assert_eq!(lat.cols(), 3);
        assert!((lat.cell_side() * 3.0 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_membership_is_the_nearest_bond_midpoint() {
        let lat = SchemeLattice::diagonal(10.0, 1.0).unwrap();
        let m = lat.bonds_per_side();
        assert_eq!(m, 7);
        let s = lat.bond_spacing();
        let mut rng = crate::spatial::stream_rng(1, 0);
        use rand::Rng;
        for _ in 0..2_000 {
            let p = Point::new(rng.random::<f64>() * m as f64 * s, rng.random::<f64>() * m as f64 * s);
            let (r, c) = lat.cell_of(p);
            assert!(lat.is_cell(r, c));
            // the diamond around a bond midpoint is its L1 ball of radius s/2
            let ctr = lat.cell_center(r, c);
            let l1 = (p.x - ctr.x).abs() + (p.y - ctr.y).abs();
            if l1 > 0.5 * s + 1e-9 {
                // only allowed for clamped points in the boundary triangles
                let edge = p.x < 0.5 * s || p.y < 0.5 * s || p.x > (m as f64 - 0.5) * s || p.y > (m as f64 - 0.5) * s;
                assert!(edge, "{p:?} -> ({r},{c})");
            }
        }
    }

    #[test]
    fn diagonal_cell_count() {
        let lat = SchemeLattice::diagonal(10.0, 1.0).unwrap();
        assert_eq!(lat.cells().count(), lat.num_cells());
        assert_eq!(lat.theta(), FRAC_PI_4);
    }

    #[test]
    fn colors_repeat_with_period() {
        let lat = SchemeLattice::axis(12.0, 1.0).unwrap();
        assert_eq!(lat.color(0, 0, 3), lat.color(3, 6, 3));
        assert_ne!(lat.color(0, 0, 3), lat.color(1, 0, 3));
        let d = SchemeLattice::diagonal(20.0, 1.0).unwrap();
        // horizontal bonds (0,0) and (3,0) share a colour
        assert_eq!(d.color(0, 1, 3), d.color(0, 7, 3));
    }
}
