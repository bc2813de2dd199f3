//! Hyperplanes cutting off equally many points of every color.
//!
//! The finder enumerates every halfspace dichotomy exactly, so a negative
//! answer is a certificate, not a search failure. The extreme-order sweep
//! computes, exactly in the plane, which orderings of per-color maximal
//! projections are realized by some direction.

use crate::colored::{ColoredPointSet, HullMembership};
use crate::dichotomy::{visit_dichotomies, SideAssignment};
use crate::geom::{Halfspace, Point, Sense, Sign};
use crate::scalar::Rational;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// A hyperplane with side assignment splitting off the same number of points
/// of every color, with that common count in [1, n-1].
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedWitness {
    pub halfspace: Halfspace<Rational>,
    pub assignment: SideAssignment,
    /// Per color: points on the positive side (incident points counted per
    /// assignment).
    pub plus_counts: Vec<usize>,
    pub minus_counts: Vec<usize>,
    pub common_count: usize,
}

/// Exact negative: the full enumeration saw no balanced dichotomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationCertificate {
    /// (oriented hyperplane, assignment) pairs visited.
    pub pairs_enumerated: usize,
    /// Distinct positive-side subsets, the separable subsets inspected.
    pub separable_subsets: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BalancedOutcome {
    Found(BalancedWitness),
    NotFound(EnumerationCertificate),
}

impl BalancedOutcome {
    pub fn witness(&self) -> Option<&BalancedWitness> {
        match self {
            BalancedOutcome::Found(w) => Some(w),
            BalancedOutcome::NotFound(_) => None,
        }
    }
}

/// Finds a balanced hyperplane by exact enumeration, or certifies none
/// exists. Among all witnesses the one with the lexicographically least
/// canonical functional (ties: assignment sides) is returned, so the result
/// does not depend on enumeration order.
pub fn find_balanced_hyperplane(s: &ColoredPointSet) -> BalancedOutcome {
    let k = s.num_colors();
    let n = s.per_color();
    let mut pairs = 0usize;
    let mut subsets: HashSet<u64> = HashSet::new();
    let mut best: Option<(Vec<Rational>, Rational, Vec<Sign>, BalancedWitness)> = None;

    visit_dichotomies(s, |view| {
        pairs += 1;
        subsets.insert(view.plus_mask());
        let counts = view.plus_counts(s.colors(), k);
        let c = counts[0];
        if c < 1 || c > n - 1 || counts.iter().any(|&ci| ci != c) {
            return;
        }
        let key_coeffs = view.functional.coeffs.clone();
        let key_offset = view.functional.offset.clone();
        let key_signs: Vec<Sign> = view.assignment.assigned.iter().map(|(_, s)| *s).collect();
        let better = match &best {
            None => true,
            Some((bc, bo, bs, _)) => {
                let cand = (&key_coeffs, &key_offset, sign_rank(&key_signs));
                let cur = (bc, bo, sign_rank(bs));
                cand < cur
            }
        };
        if better {
            let witness = BalancedWitness {
                halfspace: Halfspace::new(view.functional.clone(), Sense::NonNegative),
                assignment: view.assignment.clone(),
                minus_counts: counts.iter().map(|&ci| n - ci).collect(),
                plus_counts: counts,
                common_count: c,
            };
            best = Some((key_coeffs, key_offset, key_signs, witness));
        }
    });

    match best {
        Some((_, _, _, w)) => BalancedOutcome::Found(w),
        None => BalancedOutcome::NotFound(EnumerationCertificate {
            pairs_enumerated: pairs,
            separable_subsets: subsets.len(),
        }),
    }
}

fn sign_rank(signs: &[Sign]) -> Vec<u8> {
    signs
        .iter()
        .map(|s| match s {
            Sign::Neg => 0,
            Sign::Zero => 1,
            Sign::Pos => 2,
        })
        .collect()
}

/// Re-checks a witness against its point set. Used by tests and the CLI.
pub fn verify_witness(s: &ColoredPointSet, w: &BalancedWitness) -> bool {
    let mut counts = vec![0usize; s.num_colors()];
    for i in 0..s.len() {
        let side = match crate::geom::side_of(&w.halfspace.functional, s.point(i)) {
            Sign::Zero => match w.assignment.side_of(i) {
                Some(side) => side,
                None => return false,
            },
            side => side,
        };
        if side == Sign::Pos {
            counts[s.color(i)] += 1;
        }
    }
    let c = w.common_count;
    c >= 1 && c + 1 <= s.per_color() && counts.iter().all(|&ci| ci == c) && counts == w.plus_counts
}

/// How the extreme-order report was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeOrderMode {
    /// Exact event sweep; d <= 2 only.
    Exact,
    /// Random directions; required for d >= 3.
    Sampled { directions: usize, seed: u64 },
}

/// Orders of per-color maximal projections over all directions.
///
/// A permutation `p` is realized when some direction u orders the color
/// maxima strictly as M_{p[0]} < M_{p[1]} < ... ; tie directions are not
/// counted. Witness directions are rational so they re-verify exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeOrderReport {
    pub realized: BTreeMap<Vec<usize>, Vec<Rational>>,
    pub missing: Vec<Vec<usize>>,
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtremeOrderError {
    ExactModeNeedsLowDimension { dim: usize },
    SampledModeNeedsDirections,
}

impl std::fmt::Display for ExtremeOrderError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtremeOrderError::ExactModeNeedsLowDimension { dim } => {
                write!(f, "exact extreme-order sweep supports d <= 2, got d = {dim}")
            }
            ExtremeOrderError::SampledModeNeedsDirections => {
                write!(f, "sampled mode needs a positive direction count")
            }
        }
    }
}

impl std::error::Error for ExtremeOrderError {}

pub fn extreme_order_permutations(
    s: &ColoredPointSet,
    mode: ExtremeOrderMode,
) -> Result<ExtremeOrderReport, ExtremeOrderError> {
    match mode {
        ExtremeOrderMode::Exact => match s.dim() {
            1 => Ok(exact_orders_1d(s)),
            2 => Ok(exact_orders_2d(s)),
            d => Err(ExtremeOrderError::ExactModeNeedsLowDimension { dim: d }),
        },
        ExtremeOrderMode::Sampled { directions, seed } => {
            if directions == 0 {
                return Err(ExtremeOrderError::SampledModeNeedsDirections);
            }
            Ok(sampled_orders(s, directions, seed))
        }
    }
}

fn order_at_direction(s: &ColoredPointSet, dir: &[Rational]) -> Option<Vec<usize>> {
    let k = s.num_colors();
    let mut maxima: Vec<Option<Rational>> = vec![None; k];
    for i in 0..s.len() {
        let mut dot = Rational::zero();
        for (c, x) in dir.iter().zip(&s.point(i).coords) {
            dot += c.clone() * x.clone();
        }
        let slot = &mut maxima[s.color(i)];
        if slot.as_ref().map_or(true, |m| dot > *m) {
            *slot = Some(dot);
        }
    }
    let maxima: Vec<Rational> = maxima.into_iter().map(|m| m.unwrap()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| maxima[a].cmp(&maxima[b]));
    for w in order.windows(2) {
        if maxima[w[0]] == maxima[w[1]] {
            return None; // tie direction, not a strict order
        }
    }
    Some(order)
}

fn finish_report(
    realized: BTreeMap<Vec<usize>, Vec<Rational>>,
    k: usize,
    approximate: bool,
) -> ExtremeOrderReport {
    let mut missing = Vec::new();
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        if !realized.contains_key(&perm) {
            missing.push(perm.clone());
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    ExtremeOrderReport {
        realized,
        missing,
        approximate,
    }
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

fn exact_orders_1d(s: &ColoredPointSet) -> ExtremeOrderReport {
    let mut realized = BTreeMap::new();
    for dir in [vec![Rational::from_integer(1.into())], vec![Rational::from_integer((-1).into())]] {
        if let Some(order) = order_at_direction(s, &dir) {
            realized.entry(order).or_insert(dir);
        }
    }
    finish_report(realized, s.num_colors(), false)
}

/// Exact planar sweep. Order changes only where two colors tie, which
/// happens only at directions perpendicular to an inter-color point
/// difference; evaluating one interior direction per arc between consecutive
/// critical directions covers every realized strict order.
fn exact_orders_2d(s: &ColoredPointSet) -> ExtremeOrderReport {
    let mut dirs: BTreeSet<(Rational, Rational)> = BTreeSet::new();
    for i in 0..s.len() {
        for j in (i + 1)..s.len() {
            if s.color(i) == s.color(j) {
                continue;
            }
            let dx = s.point(i).coords[0].clone() - s.point(j).coords[0].clone();
            let dy = s.point(i).coords[1].clone() - s.point(j).coords[1].clone();
            // perpendicular directions to (dx, dy)
            let (px, py) = primitive(-dy.clone(), dx.clone());
            dirs.insert((px.clone(), py.clone()));
            dirs.insert((-px, -py));
        }
    }
    let mut dirs: Vec<(Rational, Rational)> = dirs.into_iter().collect();
    dirs.sort_by(|a, b| angular_cmp(a, b));

    let mut realized = BTreeMap::new();
    let m = dirs.len();
    for idx in 0..m {
        let a = &dirs[idx];
        let b = &dirs[(idx + 1) % m];
        // representative strictly inside the arc from a to b (ccw)
        let rep = arc_interior(a, b);
        if let Some(order) = order_at_direction(s, &[rep.0.clone(), rep.1.clone()]) {
            realized.entry(order).or_insert_with(|| vec![rep.0, rep.1]);
        }
    }
    finish_report(realized, s.num_colors(), false)
}

/// Scales a rational vector to a primitive integer vector, same direction.
fn primitive(x: Rational, y: Rational) -> (Rational, Rational) {
    use num_integer::Integer;
    let lcm = x.denom().lcm(y.denom());
    let xi = x.numer() * (&lcm / x.denom());
    let yi = y.numer() * (&lcm / y.denom());
    let g = xi.gcd(&yi);
    if g.is_zero() {
        return (Rational::zero(), Rational::zero());
    }
    (
        Rational::from_integer(&xi / &g),
        Rational::from_integer(&yi / &g),
    )
}

/// CCW angular order starting at angle 0 (positive x axis).
fn angular_cmp(a: &(Rational, Rational), b: &(Rational, Rational)) -> std::cmp::Ordering {
    let half = |v: &(Rational, Rational)| -> u8 {
        // 0 for angle in [0, pi), 1 for [pi, 2pi)
        if v.1.is_positive() || (v.1.is_zero() && v.0.is_positive()) {
            0
        } else {
            1
        }
    };
    let (ha, hb) = (half(a), half(b));
    if ha != hb {
        return ha.cmp(&hb);
    }
    // same half-plane: a before b iff cross(a, b) > 0
    let cross = a.0.clone() * b.1.clone() - a.1.clone() * b.0.clone();
    if cross.is_positive() {
        std::cmp::Ordering::Less
    } else if cross.is_negative() {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Equal
    }
}

/// A direction strictly between a and b going ccw. For an arc of exactly pi
/// (antipodal endpoints) the perpendicular at +90 degrees from a is inside.
fn arc_interior(a: &(Rational, Rational), b: &(Rational, Rational)) -> (Rational, Rational) {
    let cross = a.0.clone() * b.1.clone() - a.1.clone() * b.0.clone();
    let dot = a.0.clone() * b.0.clone() + a.1.clone() * b.1.clone();
    if cross.is_zero() && dot.is_negative() {
        return (-a.1.clone(), a.0.clone());
    }
    // positive combinations sweep the open cone between a and b when the ccw
    // arc is shorter than pi
    (a.0.clone() + b.0.clone(), a.1.clone() + b.1.clone())
}

fn sampled_orders(s: &ColoredPointSet, directions: usize, seed: u64) -> ExtremeOrderReport {
    let d = s.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut realized = BTreeMap::new();
    for _ in 0..directions {
        let mut dir: Vec<f64> = Vec::with_capacity(d);
        loop {
            dir.clear();
            let mut norm2 = 0.0;
            for _ in 0..d {
                // Box-Muller from two uniforms
                let u1: f64 = rng.random::<f64>().max(1e-12);
                let u2: f64 = rng.random();
                let g = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                dir.push(g);
                norm2 += g * g;
            }
            if norm2 > 1e-12 {
                let n = norm2.sqrt();
                for v in &mut dir {
                    *v /= n;
                }
                break;
            }
        }
        let dir_rat: Vec<Rational> = dir
            .iter()
            .map(|&v| crate::scalar::from_f64_exact(v))
            .collect();
        if let Some(order) = order_at_direction(s, &dir_rat) {
            realized.entry(order).or_insert(dir_rat);
        }
    }
    finish_report(realized, s.num_colors(), true)
}

/// Outcome of the ascending-extreme-order condition check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionIiOutcome {
    /// True iff the strictly ascending-in-color extreme order is unrealized.
    pub holds_as_labeled: bool,
    /// A relabeling (old color -> new color) under which the condition
    /// holds, when any missing permutation exists.
    pub relabeling: Option<Vec<usize>>,
}

pub fn condition_ii_check(report: &ExtremeOrderReport) -> ConditionIiOutcome {
    let k = report
        .realized
        .keys()
        .next()
        .map(|p| p.len())
        .or_else(|| report.missing.first().map(|p| p.len()))
        .unwrap_or(0);
    let identity: Vec<usize> = (0..k).collect();
    let holds_as_labeled = !report.realized.contains_key(&identity);
    // Relabeling sigma maps the lexicographically least missing permutation
    // to the identity: sigma = pi^{-1} makes pi the new ascending order.
    let relabeling = report.missing.iter().min().map(|pi| {
        let mut sigma = vec![0usize; k];
        for (rank, &color) in pi.iter().enumerate() {
            sigma[color] = rank;
        }
        sigma
    });
    ConditionIiOutcome {
        holds_as_labeled,
        relabeling,
    }
}

/// First color whose points all lie strictly inside the convex hull of the
/// union of the other colors' points, if any. Exact, d <= 3.
pub fn hull_condition_check(s: &ColoredPointSet) -> Option<usize> {
    let k = s.num_colors();
    for color in 0..k {
        let others: Vec<&Point<Rational>> = (0..s.len())
            .filter(|&i| s.color(i) != color)
            .map(|i| s.point(i))
            .collect();
        if others.len() <= s.dim() {
            continue;
        }
        let hull = HullMembership::build(&others);
        let inside = s
            .indices_of_color(color)
            .iter()
            .all(|&i| hull.strictly_contains(s.point(i)));
        if inside {
            return Some(color);
        }
    }
    None
}

/// Private helper for tests: sampling directions never realizes an order the
/// exact sweep misses.
#[cfg(test)]
pub(crate) fn sampled_subset_of_exact(s: &ColoredPointSet, samples: usize, seed: u64) -> bool {
    let exact = extreme_order_permutations(s, ExtremeOrderMode::Exact).unwrap();
    let sampled = extreme_order_permutations(
        s,
        ExtremeOrderMode::Sampled {
            directions: samples,
            seed,
        },
    )
    .unwrap();
    sampled
        .realized
        .keys()
        .all(|p| exact.realized.contains_key(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::from_int;

    fn set2(coords: &[(i64, i64)], colors: &[usize], k: usize) -> ColoredPointSet {
        let pts = coords
            .iter()
            .map(|&(x, y)| Point::new(vec![from_int(x), from_int(y)]))
            .collect();
        ColoredPointSet::new(pts, colors.to_vec(), k).unwrap()
    }

    #[test]
    fn two_colors_interleaved_on_a_line_have_balanced_cut() {
        // colors alternate along x: a vertical line between them splits 1/1
        let s = set2(&[(0, 0), (2, 1), (1, 3), (5, 2)], &[0, 0, 1, 1], 2);
        let out = find_balanced_hyperplane(&s);
        let w = out.witness().expect("witness exists");
        assert!(verify_witness(&s, &w));
        assert_eq!(w.common_count, 1);
    }

    #[test]
    fn witness_is_deterministic() {
        let s = set2(&[(0, 0), (2, 1), (1, 3), (5, 2)], &[0, 0, 1, 1], 2);
        let a = find_balanced_hyperplane(&s);
        let b = find_balanced_hyperplane(&s);
        assert_eq!(a, b);
    }

    #[test]
    fn d1_example_realizes_only_one_order() {
        // color 0 at {-1, 2}, color 1 at {0, 1}: both directions put the
        // color-1 maximum below the color-0 maximum.
        let pts = vec![
            Point::new(vec![from_int(-1)]),
            Point::new(vec![from_int(2)]),
            Point::new(vec![from_int(0)]),
            Point::new(vec![from_int(1)]),
        ];
        let s = ColoredPointSet::new(pts, vec![0, 0, 1, 1], 2).unwrap();
        let report = extreme_order_permutations(&s, ExtremeOrderMode::Exact).unwrap();
        assert!(report.realized.contains_key(&vec![1, 0]));
        assert_eq!(report.missing, vec![vec![0, 1]]);
        assert!(!report.approximate);

        let cond = condition_ii_check(&report);
        assert!(cond.holds_as_labeled);
        assert_eq!(cond.relabeling, Some(vec![0, 1]));
    }

    #[test]
    fn planar_sweep_realizes_witnessed_orders() {
        let s = set2(
            &[(0, 0), (7, 1), (2, 9), (5, 4), (11, 3), (3, -6)],
            &[0, 0, 1, 1, 2, 2],
            3,
        );
        let report = extreme_order_permutations(&s, ExtremeOrderMode::Exact).unwrap();
        assert!(!report.realized.is_empty());
        for (perm, dir) in &report.realized {
            let order = order_at_direction(&s, dir).expect("witness directions are tie-free");
            assert_eq!(&order, perm);
        }
        // realized and missing partition all 3! permutations
        assert_eq!(report.realized.len() + report.missing.len(), 6);
    }

    #[test]
    fn sampling_realizes_no_extra_orders() {
        let s = set2(
            &[(0, 0), (7, 1), (2, 9), (5, 4), (11, 3), (3, -6)],
            &[0, 0, 1, 1, 2, 2],
            3,
        );
        assert!(sampled_subset_of_exact(&s, 10_000, 7));
    }

    #[test]
    fn relabeling_makes_condition_hold() {
        let s = set2(
            &[(0, 0), (7, 1), (2, 9), (5, 4), (11, 3), (3, -6)],
            &[0, 0, 1, 1, 2, 2],
            3,
        );
        let report = extreme_order_permutations(&s, ExtremeOrderMode::Exact).unwrap();
        let cond = condition_ii_check(&report);
        if let Some(sigma) = &cond.relabeling {
            // under sigma, the ascending order must be unrealized: the
            // preimage permutation of the new identity is missing
            let mut pi = vec![0usize; sigma.len()];
            for (old, &new) in sigma.iter().enumerate() {
                pi[new] = old;
            }
            assert!(!report.realized.contains_key(&pi));
        } else {
            // all 6 permutations realized: condition can never hold
            assert_eq!(report.missing.len(), 0);
        }
    }

    #[test]
    fn hull_condition_detects_enclosed_color() {
        // color 0 in a small middle cluster, colors 1 and 2 far out
        let s = set2(
            &[(1, 0), (0, 1), (-20, -20), (20, -21), (0, 25), (-21, 19)],
            &[0, 0, 1, 1, 2, 2],
            3,
        );
        assert_eq!(hull_condition_check(&s), Some(0));
    }

    #[test]
    fn hull_condition_rejects_spread_colors() {
        let s = set2(
            &[(0, 0), (30, 1), (2, 29), (28, 28), (-5, 14), (16, -7)],
            &[0, 0, 1, 1, 2, 2],
            3,
        );
        assert_eq!(hull_condition_check(&s), None);
    }
}
