//! Enumeration of open-halfspace dichotomies of a point set.
//!
//! Every linearly separable split of a point set in general position can be
//! realized by an oriented hyperplane through exactly d of the points, with
//! the incident points assigned to sides. The stream below yields each
//! (oriented hyperplane, assignment) pair exactly once; the positive sides
//! over the whole stream are exactly the linearly separable subsets.

use crate::colored::ColoredPointSet;
use crate::geom::{side_of, span_hyperplane, AffineFunctional, Halfspace, Sense, Sign};
use crate::scalar::Rational;

/// Side assignment for the points incident to the cutting hyperplane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideAssignment {
    /// (point index, side), sides are Pos or Neg, indices ascending.
    pub assigned: Vec<(usize, Sign)>,
}

impl SideAssignment {
    pub fn side_of(&self, index: usize) -> Option<Sign> {
        self.assigned
            .iter()
            .find(|(i, _)| *i == index)
            .map(|(_, s)| *s)
    }
}

/// Borrowed view of one dichotomy, valid during the visitor call.
pub struct DichotomyView<'a> {
    /// Canonical functional for this orientation (h or -h of the span).
    pub functional: &'a AffineFunctional<Rational>,
    /// Indices of the d incident points, ascending.
    pub incident: &'a [usize],
    /// Side of every point for this orientation; incident points are Zero.
    pub sides: &'a [Sign],
    pub assignment: &'a SideAssignment,
}

impl DichotomyView<'_> {
    /// Bitmask of the positive side, incident points per assignment.
    pub fn plus_mask(&self) -> u64 {
        debug_assert!(self.sides.len() <= 64);
        let mut mask = 0u64;
        for (i, s) in self.sides.iter().enumerate() {
            if *s == Sign::Pos {
                mask |= 1 << i;
            }
        }
        for (i, s) in &self.assignment.assigned {
            if *s == Sign::Pos {
                mask |= 1 << i;
            }
        }
        mask
    }

    /// Count of positive-side points per color.
    pub fn plus_counts(&self, colors: &[usize], num_colors: usize) -> Vec<usize> {
        let mut counts = vec![0usize; num_colors];
        for (i, s) in self.sides.iter().enumerate() {
            if *s == Sign::Pos {
                counts[colors[i]] += 1;
            }
        }
        for (i, s) in &self.assignment.assigned {
            if *s == Sign::Pos {
                counts[colors[*i]] += 1;
            }
        }
        counts
    }
}

/// Calls `visit` for every (oriented hyperplane through d points, incident
/// side assignment) pair. Sides of non-incident points are computed once per
/// unoriented hyperplane and reused across orientations and assignments.
pub fn visit_dichotomies<F: FnMut(&DichotomyView<'_>)>(s: &ColoredPointSet, mut visit: F) {
    let d = s.dim();
    let n = s.len();
    if n < d {
        return;
    }
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let pts: Vec<_> = idx.iter().map(|&i| s.point(i).clone()).collect();
        let base = span_hyperplane(&pts)
            .expect("general position: every d-subset spans a hyperplane");
        let base_sides: Vec<Sign> = (0..n)
            .map(|i| {
                if idx.contains(&i) {
                    Sign::Zero
                } else {
                    side_of(&base, s.point(i))
                }
            })
            .collect();
        debug_assert!(base_sides
            .iter()
            .enumerate()
            .all(|(i, s)| *s != Sign::Zero || idx.contains(&i)));

        for orientation in [false, true] {
            let functional = if orientation { base.negate() } else { base.clone() };
            let sides: Vec<Sign> = if orientation {
                base_sides.iter().map(|s| s.flip()).collect()
            } else {
                base_sides.clone()
            };
            for bits in 0..(1u32 << d) {
                let assignment = SideAssignment {
                    assigned: idx
                        .iter()
                        .enumerate()
                        .map(|(k, &i)| {
                            let side = if bits & (1 << k) != 0 { Sign::Pos } else { Sign::Neg };
                            (i, side)
                        })
                        .collect(),
                };
                visit(&DichotomyView {
                    functional: &functional,
                    incident: &idx,
                    sides: &sides,
                    assignment: &assignment,
                });
            }
        }

        // next d-combination of 0..n
        let mut i = d;
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if idx[i] != i + n - d {
                idx[i] += 1;
                for j in i + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
}

/// Materialized dichotomy stream: (halfspace with sense >= 0, assignment).
pub fn enumerate_dichotomies(
    s: &ColoredPointSet,
) -> impl Iterator<Item = (Halfspace<Rational>, SideAssignment)> {
    let mut out = Vec::new();
    visit_dichotomies(s, |view| {
        out.push((
            Halfspace::new(view.functional.clone(), Sense::NonNegative),
            view.assignment.clone(),
        ));
    });
    out.into_iter()
}

/// Number of distinct positive-side subsets over the dichotomy stream.
/// For N points in general position in R^d this equals
/// 2 * sum_{i=0}^{d} C(N-1, i).
pub fn count_separable_subsets(s: &ColoredPointSet) -> usize {
    let mut seen = std::collections::HashSet::new();
    visit_dichotomies(s, |view| {
        seen.insert(view.plus_mask());
    });
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::scalar::from_int;

    fn set(coords: &[(i64, i64)], colors: &[usize], k: usize) -> ColoredPointSet {
        let pts = coords
            .iter()
            .map(|&(x, y)| Point::new(vec![from_int(x), from_int(y)]))
            .collect();
        ColoredPointSet::new(pts, colors.to_vec(), k).unwrap()
    }

    #[test]
    fn triangle_inspects_all_eight_subsets() {
        let s = set(&[(0, 0), (4, 1), (1, 5)], &[0, 1, 2], 3);
        // 2 * (C(2,0) + C(2,1) + C(2,2)) = 8: every subset of 3 points.
        assert_eq!(count_separable_subsets(&s), 8);
    }

    #[test]
    fn convex_quad_misses_diagonal_splits() {
        let s = set(&[(0, 0), (10, 0), (10, 10), (0, 10)], &[0, 0, 1, 1], 2);
        // 2 * (1 + 3 + 3) = 14 of the 16 subsets; the two diagonal pairs
        // are not linearly separable.
        assert_eq!(count_separable_subsets(&s), 14);
    }

    #[test]
    fn stream_yields_consistent_sides() {
        let s = set(&[(0, 0), (4, 1), (1, 5), (3, 3)], &[0, 0, 1, 1], 2);
        let mut pairs = 0;
        visit_dichotomies(&s, |view| {
            pairs += 1;
            for (i, side) in view.sides.iter().enumerate() {
                let expected = side_of(view.functional, s.point(i));
                assert_eq!(*side, expected);
                if view.incident.contains(&i) {
                    assert_eq!(*side, Sign::Zero);
                    assert!(view.assignment.side_of(i).is_some());
                } else {
                    assert!(view.assignment.side_of(i).is_none());
                }
            }
        });
        // C(4,2) hyperplanes, 2 orientations, 4 assignments each.
        assert_eq!(pairs, 6 * 2 * 4);
    }

    #[test]
    fn plus_mask_matches_counts() {
        let s = set(&[(0, 0), (4, 1), (1, 5), (3, 3)], &[0, 0, 1, 1], 2);
        visit_dichotomies(&s, |view| {
            let mask = view.plus_mask();
            let counts = view.plus_counts(s.colors(), 2);
            let by_mask = |color: usize| {
                (0..s.len())
                    .filter(|&i| s.color(i) == color && mask & (1 << i) != 0)
                    .count()
            };
            assert_eq!(counts[0], by_mask(0));
            assert_eq!(counts[1], by_mask(1));
        });
    }
}
