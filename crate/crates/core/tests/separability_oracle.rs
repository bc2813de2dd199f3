//! Independent check of the dichotomy enumeration against a brute-force
//! linear-programming separability oracle.
//!
//! For every subset A of a small point set, exact Fourier-Motzkin
//! elimination decides feasibility of
//!     w . a + c >= 1  for a in A,    -(w . b + c) >= 1  for b not in A,
//! which holds iff A is strictly linearly separable. The set of separable
//! subsets must coincide with the positive sides produced by the
//! enumeration, and its size with 2 * sum_{i<=d} C(N-1, i).

use equicut::colored::ColoredPointSet;
use equicut::dichotomy::visit_dichotomies;
use equicut::geom::Point;
use equicut::scalar::{from_int, Rational};
use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet};

/// One inequality: coeffs . z >= rhs.
#[derive(Clone)]
struct Row {
    coeffs: Vec<Rational>,
    rhs: Rational,
}

fn normalize(mut row: Row) -> Row {
    let scale = row
        .coeffs
        .iter()
        .find(|c| !c.is_zero())
        .cloned()
        .unwrap_or_else(|| {
            if row.rhs.is_zero() {
                Rational::from_integer(1.into())
            } else {
                row.rhs.abs()
            }
        })
        .abs();
    if !scale.is_zero() {
        for c in &mut row.coeffs {
            *c /= scale.clone();
        }
        row.rhs /= scale;
    }
    row
}

fn feasible(mut rows: Vec<Row>, vars: usize) -> bool {
    for var in (0..vars).rev() {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut rest = Vec::new();
        for row in rows {
            match row.coeffs[var].clone() {
                v if v.is_positive() => pos.push(row),
                v if v.is_negative() => neg.push(row),
                _ => rest.push(row),
            }
        }
        // combine each lower bound with each upper bound on z_var
        let mut seen: HashMap<Vec<Rational>, Rational> = HashMap::new();
        for p in &pos {
            let pk = p.coeffs[var].clone();
            for n in &neg {
                let nk = -n.coeffs[var].clone();
                let mut coeffs = Vec::with_capacity(vars);
                for i in 0..vars {
                    coeffs.push(p.coeffs[i].clone() / pk.clone() + n.coeffs[i].clone() / nk.clone());
                }
                let rhs = p.rhs.clone() / pk.clone() + n.rhs.clone() / nk.clone();
                let r = normalize(Row { coeffs, rhs });
                match seen.entry(r.coeffs.clone()) {
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        if r.rhs > *e.get() {
                            e.insert(r.rhs);
                        }
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(r.rhs);
                    }
                }
            }
        }
        rows = rest;
        for (coeffs, rhs) in seen {
            rows.push(Row { coeffs, rhs });
        }
        // early exit on a constant contradiction
        for row in &rows {
            if row.coeffs.iter().all(|c| c.is_zero()) && row.rhs.is_positive() {
                return false;
            }
        }
        rows.retain(|r| !r.coeffs.iter().all(|c| c.is_zero()));
    }
    true
}

fn strictly_separable(points: &[Point<Rational>], mask: u64) -> bool {
    let d = points[0].dim();
    let vars = d + 1;
    let rows: Vec<Row> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let inside = mask & (1 << i) != 0;
            let sign = if inside { 1 } else { -1 };
            let mut coeffs: Vec<Rational> =
                p.coords.iter().map(|c| c.clone() * from_int(sign)).collect();
            coeffs.push(from_int(sign)); // the offset variable
            Row {
                coeffs,
                rhs: from_int(1),
            }
        })
        .collect();
    feasible(rows, vars)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn random_general_position(rng: &mut ChaCha8Rng, d: usize, total: usize) -> ColoredPointSet {
    loop {
        let points: Vec<Point<Rational>> = (0..total)
            .map(|_| Point::new((0..d).map(|_| from_int(rng.random_range(-40..=40))).collect()))
            .collect();
        // colors are irrelevant to separability; give every point its own
        // color so any count works
        let colors: Vec<usize> = (0..total).collect();
        if let Ok(s) = ColoredPointSet::new(points, colors, total) {
            return s;
        }
    }
}

fn check_instance(s: &ColoredPointSet) {
    let n = s.len();
    let d = s.dim();
    let mut enumerated: HashSet<u64> = HashSet::new();
    visit_dichotomies(s, |view| {
        enumerated.insert(view.plus_mask());
    });

    let expected: usize = 2 * (0..=d).map(|i| binomial(n - 1, i)).sum::<usize>();
    assert_eq!(
        enumerated.len(),
        expected,
        "count formula failed for N={n}, d={d}"
    );

    for mask in 0..(1u64 << n) {
        let by_lp = strictly_separable(s.points(), mask);
        let by_enum = enumerated.contains(&mask);
        assert_eq!(
            by_lp, by_enum,
            "separability disagreement for mask {mask:0width$b}, N={n}, d={d}",
            width = n
        );
    }
}

#[test]
fn triangle_has_all_eight_subsets_separable() {
    let pts = vec![
        Point::new(vec![from_int(0), from_int(0)]),
        Point::new(vec![from_int(4), from_int(1)]),
        Point::new(vec![from_int(1), from_int(5)]),
    ];
    for mask in 0..8u64 {
        assert!(strictly_separable(&pts, mask), "mask {mask:03b}");
    }
}

#[test]
fn convex_quadrilateral_diagonals_are_not_separable() {
    let pts = vec![
        Point::new(vec![from_int(0), from_int(0)]),
        Point::new(vec![from_int(10), from_int(0)]),
        Point::new(vec![from_int(10), from_int(10)]),
        Point::new(vec![from_int(0), from_int(10)]),
    ];
    // diagonal pairs {0,2} and {1,3}
    assert!(!strictly_separable(&pts, 0b0101));
    assert!(!strictly_separable(&pts, 0b1010));
    let separable = (0..16u64).filter(|&m| strictly_separable(&pts, m)).count();
    assert_eq!(separable, 14);
}

#[test]
fn enumeration_matches_lp_oracle_in_2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    for total in [4, 5, 6, 8] {
        let s = random_general_position(&mut rng, 2, total);
        check_instance(&s);
    }
}

#[test]
fn enumeration_matches_lp_oracle_in_3d() {
    let mut rng = ChaCha8Rng::seed_from_u64(402);
    for total in [5, 6, 7] {
        let s = random_general_position(&mut rng, 3, total);
        check_instance(&s);
    }
}

#[test]
fn enumeration_matches_lp_oracle_in_1d() {
    let mut rng = ChaCha8Rng::seed_from_u64(403);
    for total in [2, 4, 7] {
        let s = random_general_position(&mut rng, 1, total);
        check_instance(&s);
    }
}
