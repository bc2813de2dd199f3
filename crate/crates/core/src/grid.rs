//! Step densities on uniform grids and their halfspace masses.
//!
//! A grid carries one value per cell: the constant density on that cell.
//! Values may be negative (charges). Mass of a halfspace is the exact sum of
//! value * area(cell ∩ H); in 2D each boundary cell is clipped against the
//! halfplane, and with rational scalars the clip is exact.

use crate::geom::{Coord, DegenerateKind, Halfspace, Sense, Sign};
use crate::scalar::{self, Rational};
use num_traits::Zero;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridError {
    BadShape { reason: String },
    ZeroTotal,
    DimensionMismatch { expected: usize, got: usize },
}

impl std::fmt::Display for GridError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridError::BadShape { reason } => write!(f, "bad grid shape: {reason}"),
            GridError::ZeroTotal => write!(f, "grid has zero total mass"),
            GridError::DimensionMismatch { expected, got } => {
                write!(f, "grid dimension mismatch: expected {expected}, got {got}")
            }
        }
    }
}

impl std::error::Error for GridError {}

/// Uniform grid in R^1 or R^2 with one density value per cell, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid<T> {
    dim: usize,
    nx: usize,
    ny: usize,
    x0: T,
    y0: T,
    hx: T,
    hy: T,
    values: Vec<T>,
}

impl<T: Coord> DensityGrid<T> {
    pub fn new_1d(x0: T, hx: T, values: Vec<T>) -> Result<Self, GridError> {
        if values.is_empty() {
            return Err(GridError::BadShape {
                reason: "no cells".into(),
            });
        }
        if !hx.is_positive() {
            return Err(GridError::BadShape {
                reason: "cell size must be positive".into(),
            });
        }
        let nx = values.len();
        Ok(DensityGrid {
            dim: 1,
            nx,
            ny: 1,
            x0,
            y0: T::zero(),
            hx,
            hy: T::one(),
            values,
        })
    }

    pub fn new_2d(
        nx: usize,
        ny: usize,
        x0: T,
        y0: T,
        hx: T,
        hy: T,
        values: Vec<T>,
    ) -> Result<Self, GridError> {
        if nx == 0 || ny == 0 || values.len() != nx * ny {
            return Err(GridError::BadShape {
                reason: format!("{} values for {}x{} cells", values.len(), nx, ny),
            });
        }
        if !hx.is_positive() || !hy.is_positive() {
            return Err(GridError::BadShape {
                reason: "cell sizes must be positive".into(),
            });
        }
        Ok(DensityGrid {
            dim: 2,
            nx,
            ny,
            x0,
            y0,
            hx,
            hy,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn x0(&self) -> &T {
        &self.x0
    }

    pub fn y0(&self) -> &T {
        &self.y0
    }

    pub fn hx(&self) -> &T {
        &self.hx
    }

    pub fn hy(&self) -> &T {
        &self.hy
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn value(&self, ix: usize, iy: usize) -> &T {
        &self.values[iy * self.nx + ix]
    }

    pub fn cell_area(&self) -> T {
        if self.dim == 1 {
            self.hx.clone()
        } else {
            self.hx.clone() * self.hy.clone()
        }
    }

    /// (xmin, xmax) extent; y extent is (y0, y0 + ny*hy) in 2D.
    pub fn x_end(&self) -> T {
        self.x0.clone() + self.hx.clone() * T::from_usize(self.nx).unwrap()
    }

    pub fn y_end(&self) -> T {
        self.y0.clone() + self.hy.clone() * T::from_usize(self.ny).unwrap()
    }

    pub fn total(&self) -> T {
        let mut acc = T::zero();
        for v in &self.values {
            acc = acc + v.clone();
        }
        acc * self.cell_area()
    }

    pub fn total_variation(&self) -> T {
        let mut acc = T::zero();
        for v in &self.values {
            acc = acc + v.abs();
        }
        acc * self.cell_area()
    }

    /// Scales values so the total is one. Fails on zero total.
    pub fn normalize(&mut self) -> Result<(), GridError> {
        let t = self.total();
        if t.is_zero() {
            return Err(GridError::ZeroTotal);
        }
        for v in &mut self.values {
            *v = v.clone() / t.clone();
        }
        Ok(())
    }

    /// Mass of the halfspace: sum over cells of value * measure(cell ∩ H).
    pub fn halfspace_mass(&self, h: &Halfspace<T>) -> T {
        if h.dim() != self.dim {
            // Callers validate dimensions; a mismatch here is a programming
            // error, not data.
            panic!(
                "halfspace dimension {} does not match grid dimension {}",
                h.dim(),
                self.dim
            );
        }
        match h.degenerate {
            DegenerateKind::Empty => return T::zero(),
            DegenerateKind::Full => return self.total(),
            DegenerateKind::None => {}
        }
        // Work with the orientation where inside means g >= 0.
        let g = match h.sense {
            Sense::NonNegative => h.functional.clone(),
            Sense::NonPositive => h.functional.negate(),
        };
        if self.dim == 1 {
            self.mass_1d(&g.coeffs[0], &g.offset)
        } else {
            self.mass_2d(&g.coeffs[0], &g.coeffs[1], &g.offset)
        }
    }

    fn mass_1d(&self, a: &T, c: &T) -> T {
        // inside = { x : a x + c >= 0 }, a != 0
        let cut = -c.clone() / a.clone();
        let right = a.is_positive();
        let mut acc = T::zero();
        for i in 0..self.nx {
            let lo = self.x0.clone() + self.hx.clone() * T::from_usize(i).unwrap();
            let hi = lo.clone() + self.hx.clone();
            let overlap = if right {
                // [max(lo, cut), hi]
                let lo2 = if cut > lo { cut.clone() } else { lo };
                let len = hi - lo2;
                if len.is_positive() {
                    len
                } else {
                    T::zero()
                }
            } else {
                let hi2 = if cut < hi { cut.clone() } else { hi };
                let len = hi2 - lo;
                if len.is_positive() {
                    len
                } else {
                    T::zero()
                }
            };
            if !overlap.is_zero() {
                acc = acc + self.values[i].clone() * overlap;
            }
        }
        acc
    }

    fn mass_2d(&self, a: &T, b: &T, c: &T) -> T {
        // Corner values of g on the (nx+1) x (ny+1) lattice, built from row
        // and column parts so rational arithmetic stays small.
        let col: Vec<T> = (0..=self.nx)
            .map(|i| a.clone() * (self.x0.clone() + self.hx.clone() * T::from_usize(i).unwrap()))
            .collect();
        let row: Vec<T> = (0..=self.ny)
            .map(|j| {
                b.clone() * (self.y0.clone() + self.hy.clone() * T::from_usize(j).unwrap())
                    + c.clone()
            })
            .collect();
        let cell_area = self.cell_area();
        let mut acc = T::zero();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = &self.values[j * self.nx + i];
                if v.is_zero() {
                    continue;
                }
                let g00 = col[i].clone() + row[j].clone();
                let g10 = col[i + 1].clone() + row[j].clone();
                let g11 = col[i + 1].clone() + row[j + 1].clone();
                let g01 = col[i].clone() + row[j + 1].clone();
                let neg = [&g00, &g10, &g11, &g01].iter().any(|g| g.is_negative());
                let pos = [&g00, &g10, &g11, &g01].iter().any(|g| g.is_positive());
                if !neg {
                    acc = acc + v.clone() * cell_area.clone();
                } else if pos {
                    let x_lo = self.x0.clone() + self.hx.clone() * T::from_usize(i).unwrap();
                    let x_hi = x_lo.clone() + self.hx.clone();
                    let y_lo = self.y0.clone() + self.hy.clone() * T::from_usize(j).unwrap();
                    let y_hi = y_lo.clone() + self.hy.clone();
                    let area = clip_area(
                        [
                            (x_lo.clone(), y_lo.clone(), g00),
                            (x_hi.clone(), y_lo, g10),
                            (x_hi, y_hi.clone(), g11),
                            (x_lo, y_hi, g01),
                        ],
                    );
                    acc = acc + v.clone() * area;
                }
            }
        }
        acc
    }
}

/// Area of the part of a convex quad (CCW corners with their g values) where
/// g >= 0. Standard single-plane clip followed by the shoelace formula.
fn clip_area<T: Coord>(corners: [(T, T, T); 4]) -> T {
    let mut poly: Vec<(T, T)> = Vec::with_capacity(6);
    for k in 0..4 {
        let (ref xa, ref ya, ref ga) = corners[k];
        let (ref xb, ref yb, ref gb) = corners[(k + 1) % 4];
        let sa = Sign::of(ga);
        let sb = Sign::of(gb);
        if sa != Sign::Neg {
            poly.push((xa.clone(), ya.clone()));
        }
        if (sa == Sign::Pos && sb == Sign::Neg) || (sa == Sign::Neg && sb == Sign::Pos) {
            // crossing point at t = ga / (ga - gb)
            let t = ga.clone() / (ga.clone() - gb.clone());
            let x = xa.clone() + t.clone() * (xb.clone() - xa.clone());
            let y = ya.clone() + t * (yb.clone() - ya.clone());
            poly.push((x, y));
        }
    }
    if poly.len() < 3 {
        return T::zero();
    }
    let mut twice = T::zero();
    for k in 0..poly.len() {
        let (ref xa, ref ya) = poly[k];
        let (ref xb, ref yb) = poly[(k + 1) % poly.len()];
        twice = twice + (xa.clone() * yb.clone() - xb.clone() * ya.clone());
    }
    let half = T::from_i64(2).unwrap();
    twice.abs() / half
}

impl DensityGrid<Rational> {
    pub fn to_f64(&self) -> DensityGrid<f64> {
        DensityGrid {
            dim: self.dim,
            nx: self.nx,
            ny: self.ny,
            x0: scalar::to_f64(&self.x0),
            y0: scalar::to_f64(&self.y0),
            hx: scalar::to_f64(&self.hx),
            hy: scalar::to_f64(&self.hy),
            values: self.values.iter().map(scalar::to_f64).collect(),
        }
    }

    /// Cumulative mass of (-inf, x], 1D grids.
    pub fn cumulative_1d(&self, x: &Rational) -> Rational {
        assert_eq!(self.dim, 1);
        let mut acc = Rational::zero();
        for i in 0..self.nx {
            let lo = self.x0.clone() + self.hx.clone() * scalar::from_int(i as i64);
            let hi = lo.clone() + self.hx.clone();
            if *x <= lo {
                break;
            }
            let upper = if *x < hi { x.clone() } else { hi };
            acc += self.values[i].clone() * (upper - lo);
        }
        acc
    }
}

impl DensityGrid<f64> {
    /// Common bounding box of several 2D grids: (x0, y0, x1, y1).
    pub fn common_bbox(grids: &[&DensityGrid<f64>]) -> (f64, f64, f64, f64) {
        let mut x0 = f64::INFINITY;
        let mut y0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for g in grids {
            x0 = x0.min(g.x0);
            x1 = x1.max(g.x_end());
            if g.dim == 2 {
                y0 = y0.min(g.y0);
                y1 = y1.max(g.y_end());
            } else {
                y0 = 0.0;
                y1 = 0.0;
            }
        }
        (x0, y0, x1, y1)
    }

    /// Refines each cell into factor x factor subcells with the same density.
    /// Masses of every region are unchanged.
    pub fn refine(&self, factor: usize) -> DensityGrid<f64> {
        assert!(factor >= 1);
        if self.dim == 1 {
            let mut values = Vec::with_capacity(self.nx * factor);
            for v in &self.values {
                values.extend(std::iter::repeat(*v).take(factor));
            }
            return DensityGrid {
                dim: 1,
                nx: self.nx * factor,
                ny: 1,
                x0: self.x0,
                y0: 0.0,
                hx: self.hx / factor as f64,
                hy: 1.0,
                values,
            };
        }
        let nx = self.nx * factor;
        let ny = self.ny * factor;
        let mut values = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                values[j * nx + i] = self.values[(j / factor) * self.nx + i / factor];
            }
        }
        DensityGrid {
            dim: 2,
            nx,
            ny,
            x0: self.x0,
            y0: self.y0,
            hx: self.hx / factor as f64,
            hy: self.hy / factor as f64,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::AffineFunctional;
    use crate::scalar::{from_int, ratio};

    fn halfspace_2d(a: f64, b: f64, c: f64) -> Halfspace<f64> {
        Halfspace::new(AffineFunctional::new(vec![a, b], c), Sense::NonNegative)
    }

    #[test]
    fn unit_square_split_by_diagonal() {
        let g = DensityGrid::new_2d(4, 4, 0.0, 0.0, 0.25, 0.25, vec![1.0; 16]).unwrap();
        // x - y >= 0 cuts the unit square in half.
        let h = halfspace_2d(1.0, -1.0, 0.0);
        let m = g.halfspace_mass(&h);
        assert!((m - 0.5).abs() < 1e-12, "{m}");
    }

    #[test]
    fn exact_rational_mass_of_offset_line() {
        let g = DensityGrid::new_2d(
            2,
            2,
            from_int(0),
            from_int(0),
            ratio(1, 2),
            ratio(1, 2),
            vec![from_int(1), from_int(2), from_int(3), from_int(4)],
        )
        .unwrap();
        // x >= 1/3 leaves 2/3 of each half-row width
        let h = Halfspace::new(
            AffineFunctional::new(vec![from_int(3), from_int(0)], from_int(-1)),
            Sense::NonNegative,
        );
        let m = g.halfspace_mass(&h);
        // columns: [0,1/2] cells keep width 1/6, [1/2,1] keep full 1/2;
        // mass = (1 + 3) * (1/6 * 1/2) + (2 + 4) * (1/2 * 1/2)
        let expected = ratio(4, 12) + ratio(6, 4);
        assert_eq!(m, expected);
    }

    #[test]
    fn mass_plus_complement_is_total_exactly_in_rationals() {
        let g = DensityGrid::new_2d(
            3,
            2,
            ratio(-1, 3),
            from_int(0),
            ratio(2, 7),
            ratio(3, 5),
            vec![
                from_int(1),
                from_int(-2),
                ratio(1, 2),
                from_int(0),
                ratio(-7, 3),
                from_int(5),
            ],
        )
        .unwrap();
        let h = Halfspace::new(
            AffineFunctional::new(vec![ratio(2, 3), ratio(-1, 5)], ratio(1, 11)),
            Sense::NonNegative,
        );
        let total = g.total();
        let m = g.halfspace_mass(&h);
        let mc = g.halfspace_mass(&h.complement());
        assert_eq!(m + mc, total);
    }

    #[test]
    fn one_dimensional_masses() {
        let g = DensityGrid::new_1d(from_int(0), ratio(1, 4), vec![from_int(1); 4]).unwrap();
        // x >= 5/8 keeps 3/8 of the unit mass
        let h = Halfspace::new(
            AffineFunctional::new(vec![from_int(8)], from_int(-5)),
            Sense::NonNegative,
        );
        assert_eq!(g.halfspace_mass(&h), ratio(3, 8));
        // sense flip gives the complement including the boundary
        let h2 = Halfspace::new(
            AffineFunctional::new(vec![from_int(8)], from_int(-5)),
            Sense::NonPositive,
        );
        assert_eq!(g.halfspace_mass(&h2), ratio(5, 8));
    }

    #[test]
    fn degenerate_halfspaces() {
        let g = DensityGrid::new_1d(from_int(0), from_int(1), vec![from_int(2)]).unwrap();
        let full = Halfspace::new(
            AffineFunctional::new(vec![from_int(0)], from_int(3)),
            Sense::NonNegative,
        );
        let empty = Halfspace::new(
            AffineFunctional::new(vec![from_int(0)], from_int(-3)),
            Sense::NonNegative,
        );
        assert_eq!(g.halfspace_mass(&full), from_int(2));
        assert_eq!(g.halfspace_mass(&empty), from_int(0));
    }

    #[test]
    fn cumulative_matches_halfline_mass() {
        let g = DensityGrid::new_1d(
            from_int(-1),
            ratio(1, 2),
            vec![from_int(1), from_int(3), from_int(0), from_int(2)],
        )
        .unwrap();
        let x = ratio(1, 3);
        // halfline x' <= x
        let h = Halfspace::new(
            AffineFunctional::new(vec![from_int(-3)], from_int(1)),
            Sense::NonNegative,
        );
        assert_eq!(g.cumulative_1d(&x), g.halfspace_mass(&h));
    }

    #[test]
    fn refine_preserves_masses() {
        let g = DensityGrid::new_2d(2, 3, -0.5, 0.25, 0.5, 0.3, (0..6).map(|i| i as f64).collect())
            .unwrap();
        let r = g.refine(4);
        assert!((g.total() - r.total()).abs() < 1e-12);
        let h = halfspace_2d(0.7, -0.2, 0.05);
        assert!((g.halfspace_mass(&h) - r.halfspace_mass(&h)).abs() < 1e-12);
    }
}
