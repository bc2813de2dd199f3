//! Points, affine functionals, halfspaces, and exact hyperplane spans.
//!
//! Types are generic over a coordinate scalar: `Rational` on exact
//! combinatorial paths, `f64` inside continuous solvers. Predicates that
//! certify anything (side classification, spans) are only offered exactly.

use crate::scalar::{self, Rational};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Coordinate scalar for geometric types.
pub trait Coord:
    Clone + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + std::fmt::Debug
{
    fn approx(&self) -> f64 {
        self.to_f64().expect("coordinate convertible to f64")
    }
}

impl Coord for Rational {}
impl Coord for f64 {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn of<T: Coord>(v: &T) -> Sign {
        if v.is_zero() {
            Sign::Zero
        } else if v.is_positive() {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Zero => Sign::Zero,
            Sign::Pos => Sign::Neg,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Neg => "-",
            Sign::Zero => "0",
            Sign::Pos => "+",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Point<T> {
    pub coords: Vec<T>,
}

impl<T: Coord> Point<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl Point<Rational> {
    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(scalar::to_f64).collect()
    }
}

/// h(x) = coeffs . x + offset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineFunctional<T> {
    pub coeffs: Vec<T>,
    pub offset: T,
}

impl<T: Coord> AffineFunctional<T> {
    pub fn new(coeffs: Vec<T>, offset: T) -> Self {
        AffineFunctional { coeffs, offset }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval_slice(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.coeffs.len());
        let mut acc = self.offset.clone();
        for (c, xi) in self.coeffs.iter().zip(x) {
            acc = acc + c.clone() * xi.clone();
        }
        acc
    }

    pub fn eval(&self, p: &Point<T>) -> T {
        self.eval_slice(&p.coords)
    }

    pub fn negate(&self) -> Self {
        AffineFunctional {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
            offset: -self.offset.clone(),
        }
    }

    /// True when every linear coefficient is zero, so h is constant.
    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

impl AffineFunctional<Rational> {
    pub fn to_f64(&self) -> AffineFunctional<f64> {
        AffineFunctional {
            coeffs: self.coeffs.iter().map(scalar::to_f64).collect(),
            offset: scalar::to_f64(&self.offset),
        }
    }
}

/// Which sign of h counts as inside the halfspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    NonNegative,
    NonPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DegenerateKind {
    None,
    Empty,
    Full,
}

/// Closed halfspace {x : h(x) >= 0} or {x : h(x) <= 0} depending on sense.
///
/// A constant functional makes the halfspace degenerate: the whole space or
/// the empty set, recorded in `degenerate`. The field is fixed at
/// construction and stays consistent with the functional.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace<T> {
    pub functional: AffineFunctional<T>,
    pub sense: Sense,
    pub degenerate: DegenerateKind,
}

impl<T: Coord> Halfspace<T> {
    pub fn new(functional: AffineFunctional<T>, sense: Sense) -> Self {
        let degenerate = if functional.is_constant() {
            let s = Sign::of(&functional.offset);
            let inside = match (sense, s) {
                (_, Sign::Zero) => true,
                (Sense::NonNegative, Sign::Pos) | (Sense::NonPositive, Sign::Neg) => true,
                _ => false,
            };
            if inside {
                DegenerateKind::Full
            } else {
                DegenerateKind::Empty
            }
        } else {
            DegenerateKind::None
        };
        Halfspace {
            functional,
            sense,
            degenerate,
        }
    }

    pub fn dim(&self) -> usize {
        self.functional.dim()
    }

    /// Sign of h at x, oriented so that Pos means strictly inside.
    pub fn oriented_sign(&self, x: &[T]) -> Sign {
        let s = Sign::of(&self.functional.eval_slice(x));
        match self.sense {
            Sense::NonNegative => s,
            Sense::NonPositive => s.flip(),
        }
    }

    /// Closed membership.
    pub fn contains(&self, x: &[T]) -> bool {
        self.oriented_sign(x) != Sign::Neg
    }

    /// The complementary halfspace (closure of it): negated functional,
    /// same sense.
    pub fn complement(&self) -> Self {
        Halfspace::new(self.functional.negate(), self.sense)
    }
}

impl Halfspace<Rational> {
    pub fn to_f64(&self) -> Halfspace<f64> {
        Halfspace::new(self.functional.to_f64(), self.sense)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeomError {
    /// Input points do not span a hyperplane (affinely dependent or wrong
    /// count for the ambient dimension).
    DegenerateSpan,
    DimensionMismatch { expected: usize, got: usize },
}

impl std::fmt::Display for GeomError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeomError::DegenerateSpan => write!(f, "points do not span a hyperplane"),
            GeomError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
        }
    }
}

impl std::error::Error for GeomError {}

/// Exact side of the oriented hyperplane h = 0 for a rational point.
pub fn side_of(h: &AffineFunctional<Rational>, p: &Point<Rational>) -> Sign {
    Sign::of(&h.eval(p))
}

/// Hyperplane through d points of R^d, as a canonical affine functional.
///
/// The result has coprime integer coefficients with the first nonzero linear
/// coefficient positive, so equal hyperplanes from any point order produce
/// identical functionals. Affinely dependent inputs are rejected.
pub fn span_hyperplane(points: &[Point<Rational>]) -> Result<AffineFunctional<Rational>, GeomError> {
    if points.is_empty() {
        return Err(GeomError::DegenerateSpan);
    }
    let d = points[0].dim();
    for p in points {
        if p.dim() != d {
            return Err(GeomError::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
    }
    if points.len() != d {
        return Err(GeomError::DegenerateSpan);
    }

    // Kernel of the d x (d+1) system [p_i | 1] . (a, c) = 0. Rank < d means
    // the points are affinely dependent.
    let cols = d + 1;
    let mut m: Vec<Vec<Rational>> = points
        .iter()
        .map(|p| {
            let mut row = p.coords.clone();
            row.push(Rational::one());
            row
        })
        .collect();

    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(pr) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, pr);
        let inv = m[row][col].clone();
        for c in col..cols {
            m[row][c] = m[row][c].clone() / inv.clone();
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..cols {
                    m[r][c] = m[r][c].clone() - factor.clone() * m[row][c].clone();
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    if row < d {
        return Err(GeomError::DegenerateSpan);
    }

    // One free column remains; set it to 1 and back-substitute.
    let free_col = (0..cols)
        .find(|c| !pivot_cols.contains(c))
        .expect("rank d leaves one free column");
    let mut sol = vec![Rational::zero(); cols];
    sol[free_col] = Rational::one();
    for (r, &pc) in pivot_cols.iter().enumerate() {
        sol[pc] = -m[r][free_col].clone();
    }

    let offset = sol.pop().expect("solution has d+1 entries");
    Ok(canonicalize(AffineFunctional::new(sol, offset)))
}

/// Scales to coprime integer coefficients, first nonzero linear coefficient
/// positive.
pub fn canonicalize(h: AffineFunctional<Rational>) -> AffineFunctional<Rational> {
    let mut all: Vec<Rational> = h.coeffs.clone();
    all.push(h.offset.clone());

    let mut denom_lcm = BigInt::one();
    for v in &all {
        denom_lcm = denom_lcm.lcm(v.denom());
    }
    let mut ints: Vec<BigInt> = all
        .iter()
        .map(|v| v.numer() * (&denom_lcm / v.denom()))
        .collect();

    let mut g = BigInt::zero();
    for v in &ints {
        g = g.gcd(v);
    }
    if !g.is_zero() {
        for v in &mut ints {
            *v = &*v / &g;
        }
    }

    let lead_neg = ints[..h.coeffs.len()]
        .iter()
        .find(|v| !v.is_zero())
        .map(|v| v.is_negative())
        .unwrap_or(false);
    if lead_neg {
        for v in &mut ints {
            *v = -&*v;
        }
    }

    let offset = Rational::from_integer(ints.pop().expect("nonempty"));
    AffineFunctional::new(
        ints.into_iter().map(Rational::from_integer).collect(),
        offset,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{from_int, ratio};

    fn pt(coords: &[i64]) -> Point<Rational> {
        Point::new(coords.iter().map(|&c| from_int(c)).collect())
    }

    #[test]
    fn span_through_two_points_is_canonical() {
        // (0,0) and (1,1) give x - y = 0.
        let h = span_hyperplane(&[pt(&[0, 0]), pt(&[1, 1])]).unwrap();
        assert_eq!(h.coeffs, vec![from_int(1), from_int(-1)]);
        assert_eq!(h.offset, from_int(0));
    }

    #[test]
    fn span_horizontal() {
        // (0,0) and (2,0) give y = 0.
        let h = span_hyperplane(&[pt(&[0, 0]), pt(&[2, 0])]).unwrap();
        assert_eq!(h.coeffs, vec![from_int(0), from_int(1)]);
        assert_eq!(h.offset, from_int(0));
    }

    #[test]
    fn span_is_order_independent() {
        let a = pt(&[3, -1]);
        let b = pt(&[-2, 5]);
        let h1 = span_hyperplane(&[a.clone(), b.clone()]).unwrap();
        let h2 = span_hyperplane(&[b, a]).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn collinear_triple_in_3d_degenerates() {
        let r = span_hyperplane(&[pt(&[0, 0, 0]), pt(&[1, 1, 1]), pt(&[2, 2, 2])]);
        assert_eq!(r, Err(GeomError::DegenerateSpan));
    }

    #[test]
    fn side_of_is_antisymmetric_under_negation() {
        let h = AffineFunctional::new(vec![ratio(2, 3), from_int(-1)], ratio(1, 7));
        let p = Point::new(vec![ratio(5, 11), ratio(-3, 2)]);
        assert_eq!(side_of(&h, &p), side_of(&h.negate(), &p).flip());
    }

    #[test]
    fn degenerate_halfspace_kinds() {
        let full = Halfspace::new(
            AffineFunctional::new(vec![from_int(0)], from_int(1)),
            Sense::NonNegative,
        );
        assert_eq!(full.degenerate, DegenerateKind::Full);
        let empty = Halfspace::new(
            AffineFunctional::new(vec![from_int(0)], from_int(-1)),
            Sense::NonNegative,
        );
        assert_eq!(empty.degenerate, DegenerateKind::Empty);
        let proper = Halfspace::new(
            AffineFunctional::new(vec![from_int(1)], from_int(0)),
            Sense::NonNegative,
        );
        assert_eq!(proper.degenerate, DegenerateKind::None);
    }

    #[test]
    fn complement_flips_strict_membership() {
        let h = Halfspace::new(
            AffineFunctional::new(vec![from_int(1), from_int(2)], from_int(-1)),
            Sense::NonNegative,
        );
        let x = [ratio(3, 1), ratio(1, 2)];
        assert_eq!(h.oriented_sign(&x), h.complement().oriented_sign(&x).flip());
    }
}
