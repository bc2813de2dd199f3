//! Convex windows: regions capturing a prescribed fraction of every input
//! measure.
//!
//! In one dimension the window is an interval and the solver is exact: the
//! set of intervals holding fraction alpha of the first measure forms a
//! monotone staircase in (a, b), the second measure is linear along each
//! piece, and rational arithmetic finds the first root or certifies that
//! none exists. Target fractions must be unit fractions 1/m; for other
//! alpha a generator builds block measures on which every window is
//! provably overweight.
//!
//! In the plane the solver partitions R^2 into m cells by an m-tuple of
//! functions a0 + a1 x + a2 y + b (x^2 + y^2), each cell taking the points
//! where its function is minimal. The cell whose function has the largest
//! quadratic coefficient is an intersection of halfplanes and disks, hence
//! convex. A derivative-free multistart search tunes the coefficients until
//! every cell holds 1/m of every measure; composite m chains prime stages,
//! restricting the measures to the convex cell found so far.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::DensityGrid;
use crate::scalar::{self, Rational};

/// Errors for window solvers and generators.
#[derive(Debug, Clone)]
pub enum WindowError {
    /// The requested fraction is not 1/m; existence is not guaranteed there
    /// and the solver refuses rather than report a misleading NoRoot.
    NotRepresentable { alpha: Rational },
    /// The exact family sweep found no root. With unit-total inputs this is
    /// impossible for alpha = 1/m, so it flags a precondition breach.
    NoRoot,
    BadParameter { what: String },
    /// The optimizer missed the tolerance; the best partition found and its
    /// deviation are attached, with the failing stage for composite runs.
    NoConvergence {
        stage: usize,
        residual: f64,
        best: GVPartition,
    },
}

impl fmt::Display for WindowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowError::NotRepresentable { alpha } => write!(
                f,
                "fraction {} is not of the form 1/m",
                scalar::format_rational(alpha)
            ),
            WindowError::NoRoot => write!(f, "no interval window in the exact family sweep"),
            WindowError::BadParameter { what } => write!(f, "bad parameter: {what}"),
            WindowError::NoConvergence {
                stage, residual, ..
            } => write!(
                f,
                "partition search missed tolerance at stage {stage} (deviation {residual:.3e})"
            ),
        }
    }
}

impl std::error::Error for WindowError {}

/// Closed interval with exact per-measure fractions.
#[derive(Debug, Clone)]
pub struct IntervalWindow {
    pub a: Rational,
    pub b: Rational,
    /// Re-integrated masses of [a, b], one per input measure.
    pub fractions: Vec<Rational>,
}

/// Exact mass of [a, b] under a 1D step density.
pub fn interval_mass(g: &DensityGrid<Rational>, a: &Rational, b: &Rational) -> Rational {
    assert_eq!(g.dim(), 1, "interval mass requires a 1D grid");
    let mut acc = Rational::zero();
    if b <= a {
        return acc;
    }
    for (k, v) in g.values().iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        let lo = g.x0().clone() + g.hx().clone() * scalar::from_int(k as i64);
        let hi = lo.clone() + g.hx().clone();
        let lo = if *a > lo { a.clone() } else { lo };
        let hi = if *b < hi { b.clone() } else { hi };
        if hi > lo {
            acc += v.clone() * (hi - lo);
        }
    }
    acc
}

/// Sorted, deduplicated union of both grids' cell edges.
fn merged_edges(g0: &DensityGrid<Rational>, g1: &DensityGrid<Rational>) -> Vec<Rational> {
    let mut xs = Vec::new();
    for g in [g0, g1] {
        for k in 0..=g.nx() {
            xs.push(g.x0().clone() + g.hx().clone() * scalar::from_int(k as i64));
        }
    }
    xs.sort();
    xs.dedup();
    xs
}

/// Density of g on each merged segment (zero outside the grid).
fn segment_densities(edges: &[Rational], g: &DensityGrid<Rational>) -> Vec<Rational> {
    let two = scalar::from_int(2);
    (0..edges.len() - 1)
        .map(|i| {
            let mid = (edges[i].clone() + edges[i + 1].clone()) / two.clone();
            if mid < *g.x0() || mid > g.x_end() {
                return Rational::zero();
            }
            let off = (mid - g.x0().clone()) / g.hx().clone();
            let idx = off.floor().to_integer().to_usize().unwrap_or(0);
            g.values()[idx.min(g.nx() - 1)].clone()
        })
        .collect()
}

struct FamilyWalk {
    first_root: Option<(Rational, Rational)>,
    min_m1: Rational,
}

/// Root at the far end of a linear piece, strictly inside it, or absent.
/// v0 != alpha is an invariant: piece starts are checked as the previous
/// piece's end (or at walk start).
fn crossing(
    alpha: &Rational,
    v0: &Rational,
    v1: &Rational,
    slope: &Rational,
) -> Option<Option<Rational>> {
    if v1 == alpha {
        return Some(None);
    }
    if (v0 < alpha) != (v1 < alpha) {
        return Some(Some((alpha.clone() - v0.clone()) / slope.clone()));
    }
    None
}

/// Walks the staircase {(a, b) : mu_0([a, b]) = alpha} left to right and
/// reports the first point with mu_1([a, b]) = alpha plus the family-wide
/// minimum of mu_1. Zero-density stretches of mu_0 yield vertical (b only)
/// and horizontal (a only) pieces; mu_1 is linear on every piece, so both
/// outputs are exact.
fn walk_window_family(
    m0: &DensityGrid<Rational>,
    m1: &DensityGrid<Rational>,
    alpha: &Rational,
) -> Result<FamilyWalk, WindowError> {
    let edges = merged_edges(m0, m1);
    let nseg = edges.len() - 1;
    let d0 = segment_densities(&edges, m0);
    let d1 = segment_densities(&edges, m1);

    // Lowest b with mu_0([edges[0], b]) = alpha.
    let mut acc = Rational::zero();
    let mut start = None;
    for k in 0..nseg {
        if acc == *alpha {
            start = Some((edges[k].clone(), k));
            break;
        }
        let seg_mass = d0[k].clone() * (edges[k + 1].clone() - edges[k].clone());
        if acc.clone() + seg_mass.clone() > *alpha {
            let b = edges[k].clone() + (alpha.clone() - acc.clone()) / d0[k].clone();
            start = Some((b, k));
            break;
        }
        acc += seg_mass;
    }
    if start.is_none() && acc == *alpha {
        start = Some((edges[nseg].clone(), nseg));
    }
    let Some((b0, ib0)) = start else {
        return Err(WindowError::NoRoot);
    };

    let mut a = edges[0].clone();
    let mut ia = 0usize;
    let mut b = b0;
    let mut ib = ib0;
    let mut m1v = interval_mass(m1, &a, &b);
    let mut min_m1 = m1v.clone();
    let mut first_root: Option<(Rational, Rational)> = None;
    if m1v == *alpha {
        first_root = Some((a.clone(), b.clone()));
    }

    loop {
        while ia < nseg && a >= edges[ia + 1] {
            ia += 1;
        }
        while ib < nseg && b >= edges[ib + 1] {
            ib += 1;
        }
        if ia >= nseg {
            break;
        }
        let p = d0[ia].clone();

        if ib >= nseg {
            // b is pinned at the global end; the family extends only while
            // a crosses zero-density stretches of mu_0.
            if !p.is_zero() {
                break;
            }
            let a_end = edges[ia + 1].clone();
            let len = a_end.clone() - a.clone();
            let slope = -d1[ia].clone();
            let v_end = m1v.clone() + slope.clone() * len;
            if first_root.is_none() {
                match crossing(alpha, &m1v, &v_end, &slope) {
                    Some(None) => first_root = Some((a_end.clone(), b.clone())),
                    Some(Some(t)) => first_root = Some((a.clone() + t, b.clone())),
                    None => {}
                }
            }
            if v_end < min_m1 {
                min_m1 = v_end.clone();
            }
            m1v = v_end;
            a = a_end;
            continue;
        }

        let q = d0[ib].clone();
        if q.is_zero() {
            // Vertical piece: b sweeps a zero-density stretch of mu_0.
            let b_end = edges[ib + 1].clone();
            let len = b_end.clone() - b.clone();
            let slope = d1[ib].clone();
            let v_end = m1v.clone() + slope.clone() * len;
            if first_root.is_none() {
                match crossing(alpha, &m1v, &v_end, &slope) {
                    Some(None) => first_root = Some((a.clone(), b_end.clone())),
                    Some(Some(t)) => first_root = Some((a.clone(), b.clone() + t)),
                    None => {}
                }
            }
            if v_end < min_m1 {
                min_m1 = v_end.clone();
            }
            m1v = v_end;
            b = b_end;
            continue;
        }
        if p.is_zero() {
            // Horizontal piece: a sweeps a zero-density stretch of mu_0.
            let a_end = edges[ia + 1].clone();
            let len = a_end.clone() - a.clone();
            let slope = -d1[ia].clone();
            let v_end = m1v.clone() + slope.clone() * len;
            if first_root.is_none() {
                match crossing(alpha, &m1v, &v_end, &slope) {
                    Some(None) => first_root = Some((a_end.clone(), b.clone())),
                    Some(Some(t)) => first_root = Some((a.clone() + t, b.clone())),
                    None => {}
                }
            }
            if v_end < min_m1 {
                min_m1 = v_end.clone();
            }
            m1v = v_end;
            a = a_end;
            continue;
        }

        // Diagonal piece: p da = q db keeps the mu_0 mass fixed.
        let a_room = edges[ia + 1].clone() - a.clone();
        let b_room = edges[ib + 1].clone() - b.clone();
        let da_for_b = q.clone() * b_room / p.clone();
        let da = if a_room < da_for_b { a_room } else { da_for_b };
        let ratio = p.clone() / q.clone();
        let slope = d1[ib].clone() * ratio.clone() - d1[ia].clone();
        let v_end = m1v.clone() + slope.clone() * da.clone();
        if first_root.is_none() {
            match crossing(alpha, &m1v, &v_end, &slope) {
                Some(None) => {
                    first_root = Some((a.clone() + da.clone(), b.clone() + ratio.clone() * da.clone()))
                }
                Some(Some(t)) => {
                    first_root = Some((a.clone() + t.clone(), b.clone() + ratio.clone() * t))
                }
                None => {}
            }
        }
        if v_end < min_m1 {
            min_m1 = v_end.clone();
        }
        m1v = v_end;
        b += ratio * da.clone();
        a += da;
    }

    Ok(FamilyWalk { first_root, min_m1 })
}

/// Interval holding exactly alpha = 1/m of both 1D measures.
///
/// Sweeps the exact staircase of intervals with mu_0 mass alpha and returns
/// the first (smallest a, then smallest b) where the mu_1 mass is also
/// alpha. For unit-total step densities and alpha = 1/m a root always
/// exists, so NoRoot only surfaces on precondition breaches.
pub fn find_interval_window(
    m0: &DensityGrid<Rational>,
    m1: &DensityGrid<Rational>,
    alpha: &Rational,
) -> Result<IntervalWindow, WindowError> {
    if m0.dim() != 1 || m1.dim() != 1 {
        return Err(WindowError::BadParameter {
            what: "interval windows require 1D grids".into(),
        });
    }
    if !alpha.numer().is_one() || alpha.denom() < &BigInt::from(2) {
        return Err(WindowError::NotRepresentable {
            alpha: alpha.clone(),
        });
    }
    let walk = walk_window_family(m0, m1, alpha)?;
    let (a, b) = walk.first_root.ok_or(WindowError::NoRoot)?;
    let fractions = vec![interval_mass(m0, &a, &b), interval_mass(m1, &a, &b)];
    Ok(IntervalWindow { a, b, fractions })
}

/// Outcome of the exact one-parameter family sweep at an arbitrary alpha.
#[derive(Debug, Clone)]
pub struct FamilyScan {
    /// True when no interval with mu_0 mass alpha also has mu_1 mass alpha.
    pub impossible: bool,
    /// Minimum of mu_1 over the swept family; for the block construction
    /// this is at least 1/n, which exceeds alpha and proves impossibility.
    pub min_m1_over_family: Rational,
}

/// Exact sweep deciding whether any interval cuts fraction alpha of both
/// measures. Plateau interiors of mu_0 are swept along their edges; with
/// mu_0 strictly positive on its support the family is a curve and the
/// sweep is exhaustive.
pub fn verify_interval_counterexample(
    m0: &DensityGrid<Rational>,
    m1: &DensityGrid<Rational>,
    alpha: &Rational,
) -> Result<FamilyScan, WindowError> {
    if m0.dim() != 1 || m1.dim() != 1 {
        return Err(WindowError::BadParameter {
            what: "interval windows require 1D grids".into(),
        });
    }
    if !alpha.is_positive() || *alpha >= Rational::one() {
        return Err(WindowError::BadParameter {
            what: "alpha must lie strictly between 0 and 1".into(),
        });
    }
    let walk = walk_window_family(m0, m1, alpha)?;
    Ok(FamilyScan {
        impossible: walk.first_root.is_none(),
        min_m1_over_family: walk.min_m1,
    })
}

/// Measure pair on which no interval cuts fraction alpha of both: mu_0 is
/// uniform on (0, 1) and mu_1 is n blocks of mass 1/n centered at i/(n+1)
/// with width eps_len. Any interval with mu_0 mass alpha has length alpha
/// and must swallow a whole block, so its mu_1 mass is at least 1/n > alpha.
/// Requires 1/(n+1) < alpha < 1/n and 0 < eps_len < alpha - 1/(n+1).
pub fn build_interval_counterexample(
    n: usize,
    alpha: &Rational,
    eps_len: &Rational,
) -> Result<(DensityGrid<Rational>, DensityGrid<Rational>), WindowError> {
    if n == 0 {
        return Err(WindowError::BadParameter {
            what: "n must be positive".into(),
        });
    }
    let ni = n as i64;
    let lo = scalar::ratio(1, ni + 1);
    let hi = scalar::ratio(1, ni);
    if *alpha <= lo || *alpha >= hi {
        return Err(WindowError::BadParameter {
            what: format!("alpha must lie strictly between 1/{} and 1/{}", ni + 1, ni),
        });
    }
    let slack = alpha.clone() - lo;
    if !eps_len.is_positive() || *eps_len >= slack {
        return Err(WindowError::BadParameter {
            what: "block width must satisfy 0 < eps_len < alpha - 1/(n+1)".into(),
        });
    }

    let half = eps_len.clone() / scalar::from_int(2);
    let mut blocks = Vec::with_capacity(n);
    let mut denom_lcm = BigInt::one();
    for i in 1..=ni {
        let center = scalar::ratio(i, ni + 1);
        let left = center.clone() - half.clone();
        let right = center + half.clone();
        denom_lcm = denom_lcm.lcm(left.denom());
        denom_lcm = denom_lcm.lcm(right.denom());
        blocks.push((left, right));
    }
    let cells = denom_lcm.to_usize().filter(|c| *c <= 200_000).ok_or_else(|| {
        WindowError::BadParameter {
            what: "block edges need more than 200000 uniform cells".into(),
        }
    })?;

    // Uniform background measure on (0, 1).
    let m0 = DensityGrid::new_1d(
        Rational::zero(),
        Rational::one(),
        vec![Rational::one()],
    )
    .expect("static shape");

    // Block density 1/(n eps_len): each block then carries mass exactly 1/n.
    let density = scalar::ratio(1, ni) / eps_len.clone();
    let hx = scalar::ratio(1, cells as i64);
    let mut values = vec![Rational::zero(); cells];
    for (k, v) in values.iter_mut().enumerate() {
        let lo = scalar::ratio(k as i64, cells as i64);
        let hi = scalar::ratio(k as i64 + 1, cells as i64);
        if blocks.iter().any(|(l, r)| lo >= *l && hi <= *r) {
            *v = density.clone();
        }
    }
    let m1 = DensityGrid::new_1d(Rational::zero(), hx, values).expect("static shape");
    debug_assert!(m1.total() == Rational::one());
    Ok((m0, m1))
}

/// f(x, y) = a0 + a1 x + a2 y + b (x^2 + y^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFunctional {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
}

impl QuadraticFunctional {
    pub fn zero() -> Self {
        QuadraticFunctional {
            a0: 0.0,
            a1: 0.0,
            a2: 0.0,
            b: 0.0,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a0 + self.a1 * x + self.a2 * y + self.b * (x * x + y * y)
    }
}

/// Partition of the plane into m cells: cell i takes the points where
/// functional i is minimal (lowest index on ties). Cells cover the plane.
#[derive(Debug, Clone)]
pub struct GVPartition {
    pub functionals: Vec<QuadraticFunctional>,
}

impl GVPartition {
    pub fn m(&self) -> usize {
        self.functionals.len()
    }

    pub fn cell_of(&self, x: f64, y: f64) -> usize {
        let s = x * x + y * y;
        let mut bi = 0;
        let mut bv = f64::INFINITY;
        for (i, q) in self.functionals.iter().enumerate() {
            let v = q.a0 + q.a1 * x + q.a2 * y + q.b * s;
            if v < bv {
                bv = v;
                bi = i;
            }
        }
        bi
    }

    /// Per-measure cell fractions by k x k subsample classification:
    /// out[measure][cell]. Each sample lands in exactly one cell, so rows
    /// sum to the measure totals.
    pub fn cell_measures(&self, measures: &[DensityGrid<f64>], k: usize) -> Vec<Vec<f64>> {
        assert!(k >= 1);
        measures
            .iter()
            .map(|g| {
                let mut out = vec![0.0; self.m()];
                accumulate_cell_fractions(g, &self.functionals, k, &mut out);
                out
            })
            .collect()
    }
}

/// One bounding constraint of a convex cell, in solved form.
#[derive(Debug, Clone, PartialEq)]
pub enum CellConstraint {
    /// a0 + a1 x + a2 y <= 0.
    HalfPlane { a0: f64, a1: f64, a2: f64 },
    /// (x - cx)^2 + (y - cy)^2 <= r2. r2 may be nonpositive for empty cells.
    Disk { cx: f64, cy: f64, r2: f64 },
}

impl CellConstraint {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            CellConstraint::HalfPlane { a0, a1, a2 } => a0 + a1 * x + a2 * y <= 0.0,
            CellConstraint::Disk { cx, cy, r2 } => {
                (x - cx) * (x - cx) + (y - cy) * (y - cy) <= *r2
            }
        }
    }
}

/// The partition cell with the largest quadratic coefficient, written as an
/// intersection of halfplanes and disks; such an intersection is convex.
#[derive(Debug, Clone)]
pub struct ConvexCell {
    pub index: usize,
    pub constraints: Vec<CellConstraint>,
}

impl ConvexCell {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.constraints.iter().all(|c| c.contains(x, y))
    }
}

/// Pairwise b differences below this are written as halfplanes; the disk
/// form divides by the difference and loses all precision near zero.
const HALFPLANE_B_EPS: f64 = 1e-12;

/// Classifies the max-b cell's constraints. Picking the largest quadratic
/// coefficient (lowest index on ties) makes every pairwise difference
/// nonnegative, so each constraint is a halfplane (zero difference) or a
/// disk (positive difference).
pub fn extract_convex_cell(p: &GVPartition) -> ConvexCell {
    let mut idx = 0;
    for (i, q) in p.functionals.iter().enumerate() {
        if q.b > p.functionals[idx].b {
            idx = i;
        }
    }
    let fi = &p.functionals[idx];
    let mut constraints = Vec::with_capacity(p.m().saturating_sub(1));
    for (j, fj) in p.functionals.iter().enumerate() {
        if j == idx {
            continue;
        }
        let db = fi.b - fj.b;
        let (da0, da1, da2) = (fi.a0 - fj.a0, fi.a1 - fj.a1, fi.a2 - fj.a2);
        if db <= HALFPLANE_B_EPS {
            constraints.push(CellConstraint::HalfPlane {
                a0: da0,
                a1: da1,
                a2: da2,
            });
        } else {
            let cx = -da1 / (2.0 * db);
            let cy = -da2 / (2.0 * db);
            constraints.push(CellConstraint::Disk {
                cx,
                cy,
                r2: cx * cx + cy * cy - da0 / db,
            });
        }
    }
    ConvexCell { index: idx, constraints }
}

/// Midpoint convexity check by sampling: pairs of interior points whose
/// midpoint must stay inside. The cell is an exact intersection of convex
/// constraints, so any failure indicates an implementation bug.
#[derive(Debug, Clone)]
pub struct ConvexityProbe {
    pub pairs_checked: usize,
    pub failures: usize,
}

pub fn midpoint_convexity_probe(
    cell: &ConvexCell,
    bbox: (f64, f64, f64, f64),
    pairs: usize,
    seed: u64,
) -> ConvexityProbe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, y0, x1, y1) = bbox;
    let mut pts = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs.saturating_mul(60) {
        if pts.len() >= 2 * pairs {
            break;
        }
        let x = rng.random_range(x0..x1);
        let y = rng.random_range(y0..y1);
        if cell.contains(x, y) {
            pts.push((x, y));
        }
    }
    let mut checked = 0;
    let mut failures = 0;
    for pair in pts.chunks_exact(2) {
        let mx = 0.5 * (pair[0].0 + pair[1].0);
        let my = 0.5 * (pair[0].1 + pair[1].1);
        checked += 1;
        if !cell.contains(mx, my) {
            failures += 1;
        }
    }
    ConvexityProbe {
        pairs_checked: checked,
        failures,
    }
}

/// Knobs of the planar partition search.
#[derive(Debug, Clone)]
pub struct GvConfig {
    /// Accepted deviation of every cell fraction from 1/m.
    pub tol: f64,
    /// Subsamples per grid cell axis during optimization.
    pub subsample: usize,
    /// Subsamples per grid cell axis for verification and restriction.
    pub verify_subsample: usize,
    pub multistarts: usize,
    /// Objective evaluations per start.
    pub budget: usize,
    /// Objective evaluations for the verification-lattice polish.
    pub polish_budget: usize,
    pub seed: u64,
}

impl Default for GvConfig {
    fn default() -> Self {
        GvConfig {
            tol: 1e-3,
            subsample: 4,
            verify_subsample: 8,
            multistarts: 20,
            budget: 10_000,
            polish_budget: 2500,
            seed: 0,
        }
    }
}

impl GvConfig {
    fn validate(&self) -> Result<(), WindowError> {
        let bad = |what: &str| {
            Err(WindowError::BadParameter {
                what: what.to_string(),
            })
        };
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.subsample == 0 || self.verify_subsample == 0 {
            return bad("subsample factors must be at least 1");
        }
        if self.multistarts == 0 || self.budget < 100 {
            return bad("need at least one start and a budget of 100 evaluations");
        }
        Ok(())
    }
}

#[inline]
fn classify(fns: &[QuadraticFunctional], x: f64, y: f64) -> usize {
    let s = x * x + y * y;
    let mut bi = 0;
    let mut bv = f64::INFINITY;
    for (i, q) in fns.iter().enumerate() {
        let v = q.a0 + q.a1 * x + q.a2 * y + q.b * s;
        if v < bv {
            bv = v;
            bi = i;
        }
    }
    bi
}

fn accumulate_cell_fractions(
    g: &DensityGrid<f64>,
    fns: &[QuadraticFunctional],
    k: usize,
    out: &mut [f64],
) {
    assert_eq!(g.dim(), 2, "partition fractions require 2D grids");
    let (nx, hx, hy) = (g.nx(), *g.hx(), *g.hy());
    let (gx0, gy0) = (*g.x0(), *g.y0());
    let sample_mass = hx * hy / (k * k) as f64;
    let inv_k = 1.0 / k as f64;
    for (idx, v) in g.values().iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let ix = idx % nx;
        let iy = idx / nx;
        let mass = v * sample_mass;
        for sy in 0..k {
            let y = gy0 + (iy as f64 + (sy as f64 + 0.5) * inv_k) * hy;
            for sx in 0..k {
                let x = gx0 + (ix as f64 + (sx as f64 + 0.5) * inv_k) * hx;
                out[classify(fns, x, y)] += mass;
            }
        }
    }
}

/// Flattened quadrature for one measure: coordinates, the radial term and
/// the per-point mass, with zero-mass cells dropped.
struct QuadraturePoints {
    xs: Vec<f64>,
    ys: Vec<f64>,
    rs: Vec<f64>,
    ws: Vec<f64>,
}

/// Union of all measures' points at a third of the weight: quadrature of
/// the average measure, valid for heterogeneous grid geometries.
fn mean_points(points: &[QuadraturePoints]) -> QuadraturePoints {
    let inv = 1.0 / points.len() as f64;
    let mut out = QuadraturePoints {
        xs: Vec::new(),
        ys: Vec::new(),
        rs: Vec::new(),
        ws: Vec::new(),
    };
    for p in points {
        out.xs.extend_from_slice(&p.xs);
        out.ys.extend_from_slice(&p.ys);
        out.rs.extend_from_slice(&p.rs);
        out.ws.extend(p.ws.iter().map(|w| w * inv));
    }
    out
}

impl QuadraturePoints {
    fn new(g: &DensityGrid<f64>, k: usize) -> Self {
        assert_eq!(g.dim(), 2, "partition fractions require 2D grids");
        let (nx, hx, hy) = (g.nx(), *g.hx(), *g.hy());
        let (gx0, gy0) = (*g.x0(), *g.y0());
        let sample_mass = hx * hy / (k * k) as f64;
        let inv_k = 1.0 / k as f64;
        let mut p = QuadraturePoints {
            xs: Vec::new(),
            ys: Vec::new(),
            rs: Vec::new(),
            ws: Vec::new(),
        };
        for (idx, v) in g.values().iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let ix = idx % nx;
            let iy = idx / nx;
            let mass = v * sample_mass;
            for sy in 0..k {
                let y = gy0 + (iy as f64 + (sy as f64 + 0.5) * inv_k) * hy;
                for sx in 0..k {
                    let x = gx0 + (ix as f64 + (sx as f64 + 0.5) * inv_k) * hx;
                    p.xs.push(x);
                    p.ys.push(y);
                    p.rs.push(x * x + y * y);
                    p.ws.push(mass);
                }
            }
        }
        p
    }
}

/// Objective state reused across evaluations: shared quadrature points,
/// decoded functionals and the fraction matrix scratch.
struct Evaluator<'a> {
    points: &'a [QuadraturePoints],
    m: usize,
    fns: Vec<QuadraticFunctional>,
    fracs: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(points: &'a [QuadraturePoints], m: usize) -> Self {
        Evaluator {
            points,
            m,
            fns: vec![QuadraticFunctional::zero(); m],
            fracs: vec![0.0; m * points.len()],
        }
    }

    fn eval(&mut self, params: &[f64]) -> f64 {
        decode_params(params, self.m, &mut self.fns);
        let target = 1.0 / self.m as f64;
        // Soft box keeping coefficients in [-10, 10]; scaling the family
        // leaves cells unchanged, so the box only pins the representative.
        let mut r = 0.0;
        for c in params {
            let e = c.abs() - 10.0;
            if e > 0.0 {
                r += 1e3 * e * e;
            }
        }
        self.fracs.iter_mut().for_each(|f| *f = 0.0);
        for (j, p) in self.points.iter().enumerate() {
            accumulate_points(p, &self.fns, &mut self.fracs[j * self.m..(j + 1) * self.m]);
        }
        // Acceptance is on the worst deviation, so weight it beyond its
        // share of the sum; otherwise a lone outlier cell ranks better
        // than a uniformly small spread.
        let mut maxd = 0.0f64;
        for f in &self.fracs {
            let d = f - target;
            r += d * d;
            maxd = maxd.max(d.abs());
        }
        r + 3.0 * maxd * maxd
    }
}

fn accumulate_points(p: &QuadraturePoints, fns: &[QuadraticFunctional], out: &mut [f64]) {
    for i in 0..p.xs.len() {
        let (x, y, s) = (p.xs[i], p.ys[i], p.rs[i]);
        let mut bi = 0;
        let mut bv = f64::INFINITY;
        for (c, q) in fns.iter().enumerate() {
            let v = q.a0 + q.a1 * x + q.a2 * y + q.b * s;
            if v < bv {
                bv = v;
                bi = c;
            }
        }
        out[bi] += p.ws[i];
    }
}

/// The last functional is the zero gauge; only the first m-1 are free.
fn decode_params(params: &[f64], m: usize, fns: &mut [QuadraticFunctional]) {
    debug_assert_eq!(params.len(), 4 * (m - 1));
    for i in 0..m - 1 {
        fns[i] = QuadraticFunctional {
            a0: params[4 * i],
            a1: params[4 * i + 1],
            a2: params[4 * i + 2],
            b: params[4 * i + 3],
        };
    }
    fns[m - 1] = QuadraticFunctional::zero();
}

/// Derivative-free simplex descent. Cell fractions are piecewise-smooth in
/// the coefficients with kinks where the cell topology changes, so no
/// gradients are used. Expansion, contraction and shrink coefficients are
/// scaled with the dimension, which keeps the simplex from collapsing
/// prematurely beyond a handful of parameters.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    step: f64,
    budget: usize,
) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let nf = n as f64;
    let expand = 1.0 + 2.0 / nf;
    let contract = 0.75 - 1.0 / (2.0 * nf);
    let shrink = 1.0 - 1.0 / nf;
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut fv: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    fv.push(f(x0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        fv.push(f(&x));
        pts.push(x);
    }
    let mut evals = n + 1;

    while evals < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| fv[i].partial_cmp(&fv[j]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        if fv[worst] - fv[best] < 1e-14 {
            break;
        }

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let lerp = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = lerp(1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < fv[best] {
            let xe = lerp(expand);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[worst] = xe;
                fv[worst] = fe;
            } else {
                pts[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if fr < fv[second_worst] {
            pts[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        let xc = if fr < fv[worst] {
            lerp(contract)
        } else {
            lerp(-contract)
        };
        let fc = f(&xc);
        evals += 1;
        if fc < fv[worst].min(fr) {
            pts[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        let anchor = pts[best].clone();
        for i in 0..=n {
            if i == best {
                continue;
            }
            for (x, a) in pts[i].iter_mut().zip(&anchor) {
                *x = a + shrink * (*x - *a);
            }
            fv[i] = f(&pts[i]);
            evals += 1;
            if evals >= budget {
                break;
            }
        }
    }

    let mut bi = 0;
    for i in 1..=n {
        if fv[i] < fv[bi] {
            bi = i;
        }
    }
    (pts[bi].clone(), fv[bi], evals)
}

/// Coordinate descent with a shrinking step. The lattice objective is
/// piecewise constant at fine scales, which collapses a simplex long before
/// the minimum; stepping each coordinate across the plateaus still makes
/// progress down to the quadrature quantum.
fn compass_polish<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    fx0: f64,
    step0: f64,
    step_min: f64,
    budget: usize,
) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = fx0;
    let mut step = step0;
    let mut evals = 0;
    while step >= step_min && evals < budget {
        let mut improved = false;
        for i in 0..x.len() {
            let scale = step * (1.0 + x[i].abs());
            for dir in [1.0, -1.0] {
                let old = x[i];
                x[i] = old + dir * scale;
                let fy = f(&x);
                evals += 1;
                if fy < fx {
                    fx = fy;
                    improved = true;
                    break;
                }
                x[i] = old;
            }
            if evals >= budget {
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

fn splitmix(seed: u64, idx: u64) -> u64 {
    seed.wrapping_add(idx.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Cumulative mass table over the cells of all measures, for drawing start
/// sites where the mass actually lives. Restricted (masked) measures keep
/// their support far from uniform over the frame, so uniform sites start
/// most boundaries in dead space.
struct SupportSampler {
    cells: Vec<(f64, f64, f64, f64)>,
    weights: Vec<f64>,
    cum: Vec<f64>,
    total: f64,
}

impl SupportSampler {
    fn new(measures: &[DensityGrid<f64>]) -> Self {
        let mut cells = Vec::new();
        let mut weights = Vec::new();
        let mut cum = Vec::new();
        let mut total = 0.0;
        for g in measures {
            let (nx, hx, hy) = (g.nx(), *g.hx(), *g.hy());
            for (idx, v) in g.values().iter().enumerate() {
                if *v <= 0.0 {
                    continue;
                }
                let w = v * hx * hy;
                total += w;
                let ix = idx % nx;
                let iy = idx / nx;
                cells.push((
                    g.x0() + (ix as f64 + 0.5) * hx,
                    g.y0() + (iy as f64 + 0.5) * hy,
                    hx,
                    hy,
                ));
                weights.push(w);
                cum.push(total);
            }
        }
        SupportSampler {
            cells,
            weights,
            cum,
            total,
        }
    }

    /// A point of a mass-weighted cell, jittered within the cell.
    fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let u = rng.random::<f64>() * self.total;
        let i = self.cum.partition_point(|c| *c < u).min(self.cells.len() - 1);
        let (x, y, hx, hy) = self.cells[i];
        (
            x + (rng.random::<f64>() - 0.5) * hx,
            y + (rng.random::<f64>() - 0.5) * hy,
        )
    }

    /// A few mass-weighted Lloyd iterations: sites move to the centroid of
    /// their nearest-site region, spreading them over the support with
    /// roughly balanced masses. Empty sites stay put.
    fn relax(&self, sites: &mut [(f64, f64)], iters: usize) {
        let k = sites.len();
        let mut acc = vec![(0.0f64, 0.0f64, 0.0f64); k];
        for _ in 0..iters {
            acc.iter_mut().for_each(|a| *a = (0.0, 0.0, 0.0));
            for (i, (x, y, _, _)) in self.cells.iter().enumerate() {
                let mut bi = 0;
                let mut bd = f64::INFINITY;
                for (j, (sx, sy)) in sites.iter().enumerate() {
                    let d = (x - sx).powi(2) + (y - sy).powi(2);
                    if d < bd {
                        bd = d;
                        bi = j;
                    }
                }
                let w = self.weights[i];
                acc[bi].0 += w * x;
                acc[bi].1 += w * y;
                acc[bi].2 += w;
            }
            for (site, a) in sites.iter_mut().zip(&acc) {
                if a.2 > 0.0 {
                    *site = (a.0 / a.2, a.1 / a.2);
                }
            }
        }
    }
}

/// Start vector for one multistart, cycling three layouts: a flat-quadratic
/// family driven by mass-weighted sites (near-linear boundaries), circles
/// centered on the mass (cells that carve a lump out of a restricted
/// support), and a fully random coefficient draw.
fn start_params(
    rng: &mut ChaCha8Rng,
    m: usize,
    style: usize,
    support: &SupportSampler,
) -> Vec<f64> {
    let mut params = Vec::with_capacity(4 * (m - 1));
    if style == 2 {
        for _ in 0..m - 1 {
            let (cx, cy) = support.draw(rng);
            let r = rng.random_range(0.05..0.6);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            params.extend_from_slice(&[
                sign * (cx * cx + cy * cy - r * r),
                sign * -2.0 * cx,
                sign * -2.0 * cy,
                sign,
            ]);
        }
        return params;
    }
    if style == 0 {
        let mut sites: Vec<(f64, f64)> = (0..m).map(|_| support.draw(rng)).collect();
        support.relax(&mut sites, 3);
        let weights: Vec<f64> = (0..m).map(|_| rng.random_range(-0.1..0.1)).collect();
        let last = m - 1;
        let fl = |k: usize| {
            let (x, y) = sites[k];
            (x * x + y * y - weights[k], -2.0 * x, -2.0 * y)
        };
        let (l0, l1, l2) = fl(last);
        for k in 0..m - 1 {
            let (c0, c1, c2) = fl(k);
            params.extend_from_slice(&[c0 - l0, c1 - l1, c2 - l2, 0.0]);
        }
    } else {
        for _ in 0..m - 1 {
            params.push(rng.random_range(-2.0..2.0));
            params.push(rng.random_range(-2.0..2.0));
            params.push(rng.random_range(-2.0..2.0));
            params.push(rng.random_range(-1.0..1.0));
        }
    }
    params
}

/// Maps a functional found in the scaled frame u = (x - ox)/s,
/// v = (y - oy)/s back to original coordinates. Uniform scaling keeps the
/// family closed: no cross terms appear.
fn from_unit_frame(q: &QuadraticFunctional, ox: f64, oy: f64, s: f64) -> QuadraticFunctional {
    let b = q.b / (s * s);
    QuadraticFunctional {
        a0: q.a0 - q.a1 * ox / s - q.a2 * oy / s + q.b * (ox * ox + oy * oy) / (s * s),
        a1: q.a1 / s - 2.0 * b * ox,
        a2: q.a2 / s - 2.0 * b * oy,
        b,
    }
}

fn to_unit_frame_grid(g: &DensityGrid<f64>, ox: f64, oy: f64, s: f64) -> DensityGrid<f64> {
    // Densities scale by s^2 so every cell keeps its mass.
    let values: Vec<f64> = g.values().iter().map(|v| v * s * s).collect();
    DensityGrid::new_2d(
        g.nx(),
        g.ny(),
        (g.x0() - ox) / s,
        (g.y0() - oy) / s,
        g.hx() / s,
        g.hy() / s,
        values,
    )
    .expect("scaled copy of a valid grid")
}

fn normalized_copy(g: &DensityGrid<f64>, context: &str) -> Result<DensityGrid<f64>, WindowError> {
    let mut c = g.clone();
    c.normalize().map_err(|_| WindowError::BadParameter {
        what: format!("{context}: measure has zero total"),
    })?;
    Ok(c)
}

struct StageSolution {
    partition: GVPartition,
}

/// Bounding box of the nonzero cells across all grids, padded by one cell.
/// Restricted measures occupy a fraction of the domain; framing the solve
/// to their support keeps start layouts and simplex steps well scaled.
fn support_bbox(grids: &[DensityGrid<f64>]) -> (f64, f64, f64, f64) {
    let mut bb = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for g in grids {
        let (nx, hx, hy) = (g.nx(), *g.hx(), *g.hy());
        for (idx, v) in g.values().iter().enumerate() {
            if *v <= 0.0 {
                continue;
            }
            let x = g.x0() + (idx % nx) as f64 * hx;
            let y = g.y0() + (idx / nx) as f64 * hy;
            bb.0 = bb.0.min(x - hx);
            bb.1 = bb.1.min(y - hy);
            bb.2 = bb.2.max(x + 2.0 * hx);
            bb.3 = bb.3.max(y + 2.0 * hy);
        }
    }
    if bb.0.is_finite() && bb.2 > bb.0 && bb.3 > bb.1 {
        bb
    } else {
        let refs: Vec<&DensityGrid<f64>> = grids.iter().collect();
        DensityGrid::common_bbox(&refs)
    }
}

/// One prime-stage solve: multistart simplex descent on the coarse
/// quadrature, a polish pass on the verification lattice, then acceptance
/// by the verification-lattice deviation.
fn solve_stage(
    coarse: &[DensityGrid<f64>],
    fine: &[DensityGrid<f64>],
    p: usize,
    cfg: &GvConfig,
    seed: u64,
    stage: usize,
) -> Result<StageSolution, WindowError> {
    let (bx0, by0, bx1, by1) = support_bbox(coarse);
    let scale = (bx1 - bx0).max(by1 - by0);
    if !(scale > 0.0) {
        return Err(WindowError::BadParameter {
            what: "degenerate bounding box".into(),
        });
    }
    let unit_coarse: Vec<DensityGrid<f64>> = coarse
        .iter()
        .map(|g| to_unit_frame_grid(g, bx0, by0, scale))
        .collect();
    let unit_fine: Vec<DensityGrid<f64>> = fine
        .iter()
        .map(|g| to_unit_frame_grid(g, bx0, by0, scale))
        .collect();

    let support = SupportSampler::new(&unit_coarse);
    let coarse_pts: Vec<QuadraturePoints> = unit_coarse
        .iter()
        .map(|g| QuadraturePoints::new(g, 1))
        .collect();
    let fine_pts: Vec<QuadraturePoints> = unit_fine
        .iter()
        .map(|g| QuadraturePoints::new(g, 1))
        .collect();
    // Equalizing the average of the measures is a far easier objective
    // (one constraint row instead of three) whose solutions sit near the
    // full problem's; half the starts descend it first as a warm-up.
    let mean_coarse = vec![mean_points(&coarse_pts)];
    let mean_fine = vec![mean_points(&fine_pts)];

    // Fixed retry schedule: each round is an independent multistart batch
    // with the top few candidates polished on the verification lattice.
    // Round 0 searches on the cheap optimization lattice; later rounds
    // search at full verification resolution, since a basin whose cells
    // hug the quadrature can be invisible to the rebinned objective. The
    // first candidate within tolerance wins; everything is a pure function
    // of (inputs, seed).
    const ROUNDS: u64 = 3;
    const POLISH_CANDIDATES: usize = 6;
    let mut best_dev = f64::INFINITY;
    let mut best_partition: Option<GVPartition> = None;

    for round in 0..ROUNDS {
        let round_seed = splitmix(seed, round << 32);
        let (opt_pts, opt_mean) = if round == 0 {
            (&coarse_pts, &mean_coarse)
        } else {
            (&fine_pts, &mean_fine)
        };
        let mut starts: Vec<(f64, usize, Vec<f64>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.multistarts)
                .map(|idx| {
                    let coarse_pts = opt_pts;
                    let mean_pts = opt_mean;
                    let support = &support;
                    scope.spawn(move || {
                        let mut rng =
                            ChaCha8Rng::seed_from_u64(splitmix(round_seed, idx as u64));
                        let mut x0 = start_params(&mut rng, p, idx % 3, support);
                        // The simplex loses steam as the dimension grows;
                        // higher p gets a larger budget and more
                        // kick-and-redescend restarts from the incumbent.
                        let dim = 4 * (p - 1);
                        let budget = cfg.budget * (p - 1).div_ceil(2);
                        let kicks = dim / 8 + 1;
                        let mut used = 0;
                        if idx % 2 == 0 {
                            let mut ev = Evaluator::new(mean_pts, p);
                            let mut f = |x: &[f64]| ev.eval(x);
                            let (wx, _, spent) = nelder_mead(&mut f, &x0, 0.3, budget / 4);
                            x0 = wx;
                            used += spent;
                        }
                        let mut ev = Evaluator::new(coarse_pts, p);
                        let mut f = |x: &[f64]| ev.eval(x);
                        let (mut best_x, mut best_f, spent) =
                            nelder_mead(&mut f, &x0, 0.2, budget - used);
                        used += spent;
                        for _ in 0..kicks {
                            if used + 100 >= budget {
                                break;
                            }
                            let kicked: Vec<f64> = best_x
                                .iter()
                                .map(|v| {
                                    v + rng.random_range(-1.0..1.0) * 0.2 * (1.0 + v.abs())
                                })
                                .collect();
                            let (x, fx, spent) =
                                nelder_mead(&mut f, &kicked, 0.1, budget - used);
                            used += spent;
                            if fx < best_f {
                                best_f = fx;
                                best_x = x;
                            }
                        }
                        (best_f, idx, best_x)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        starts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        for (_, _, x) in starts.iter().take(POLISH_CANDIDATES) {
            // Polish on the verification lattice so the accepted metric is
            // the optimized one. The second simplex pass rebuilds at the
            // found point, which un-sticks stalled descents; the compass
            // pass then walks across the plateaus a collapsed simplex
            // cannot see.
            let mut ev = Evaluator::new(&fine_pts, p);
            let mut f = |x: &[f64]| ev.eval(x);
            let nm_budget = cfg.polish_budget - cfg.polish_budget / 3;
            let (mid, _, _) = nelder_mead(&mut f, x, 0.05, nm_budget - nm_budget / 3);
            let (cx, cfx, _) = nelder_mead(&mut f, &mid, 0.01, nm_budget / 3);
            let (px, _) =
                compass_polish(&mut f, &cx, cfx, 0.02, 2e-4, cfg.polish_budget / 3);

            let mut unit_fns = vec![QuadraticFunctional::zero(); p];
            decode_params(&px, p, &mut unit_fns);
            let functionals: Vec<QuadraticFunctional> = unit_fns
                .iter()
                .map(|q| from_unit_frame(q, bx0, by0, scale))
                .collect();
            let partition = GVPartition { functionals };

            let fractions = partition.cell_measures(fine, 1);
            let target = 1.0 / p as f64;
            let max_dev = fractions
                .iter()
                .flat_map(|row| row.iter())
                .map(|f| (f - target).abs())
                .fold(0.0f64, f64::max);

            if max_dev < best_dev {
                best_dev = max_dev;
                best_partition = Some(partition);
            }
            if best_dev <= cfg.tol {
                return Ok(StageSolution {
                    partition: best_partition.expect("just set"),
                });
            }
        }
    }

    Err(WindowError::NoConvergence {
        stage,
        residual: best_dev,
        best: best_partition.expect("at least one candidate"),
    })
}

/// Builds one stage's normalized quadrature grids from the running
/// verification-lattice state: the optimization lattice by rebinning to
/// (roughly) `subsample` times the original resolution, the verification
/// lattice as-is. Shared by the single-solve and windowing entry points so
/// equal inputs give bit-equal solves.
///
/// The optimization lattice must stay aligned with the verification one,
/// so its resolution multiplier is the smallest divisor of
/// `verify_subsample` at or above the requested subsample.
fn stage_inputs(
    fine: &[DensityGrid<f64>],
    originals: &[DensityGrid<f64>],
    verify_subsample: usize,
    subsample: usize,
    context: &str,
) -> Result<(Vec<DensityGrid<f64>>, Vec<DensityGrid<f64>>), WindowError> {
    let want = subsample.max(1).min(verify_subsample);
    let q = (want..=verify_subsample)
        .find(|q| verify_subsample % q == 0)
        .expect("verify_subsample divides itself");
    let factor = verify_subsample / q;
    let coarse = fine
        .iter()
        .zip(originals)
        .map(|(f, orig)| {
            normalized_copy(&rebin(f, orig.nx() * q, orig.ny() * q, factor), context)
        })
        .collect::<Result<_, _>>()?;
    let fine_n = fine
        .iter()
        .map(|g| normalized_copy(g, context))
        .collect::<Result<_, _>>()?;
    Ok((coarse, fine_n))
}

fn validate_planar_measures(measures: &[DensityGrid<f64>]) -> Result<(), WindowError> {
    if measures.len() != 3 {
        return Err(WindowError::BadParameter {
            what: format!("planar windows take exactly 3 measures, got {}", measures.len()),
        });
    }
    for (j, g) in measures.iter().enumerate() {
        if g.dim() != 2 {
            return Err(WindowError::BadParameter {
                what: format!("measure {j} is not a 2D grid"),
            });
        }
        if (g.total() - 1.0).abs() > 1e-6 {
            return Err(WindowError::BadParameter {
                what: format!("measure {j} is not normalized (total {})", g.total()),
            });
        }
    }
    Ok(())
}

/// Partition splitting each of three planar measures into m equal cells.
///
/// m must be one of the primes 2, 3, 5. Returns the partition in the input
/// coordinate frame; `cell_measures` with the verification subsample
/// reproduces the accepted fractions. Any deviation beyond cfg.tol is a
/// solver limitation and comes back as NoConvergence with the best
/// partition attached.
pub fn gv_equipartition(
    measures: &[DensityGrid<f64>],
    m: usize,
    cfg: &GvConfig,
) -> Result<GVPartition, WindowError> {
    cfg.validate()?;
    if !matches!(m, 2 | 3 | 5) {
        return Err(WindowError::BadParameter {
            what: format!("cell count {m} is not one of the primes 2, 3, 5"),
        });
    }
    validate_planar_measures(measures)?;
    let fine: Vec<DensityGrid<f64>> = measures
        .iter()
        .map(|g| g.refine(cfg.verify_subsample))
        .collect();
    let (coarse_n, fine_n) = stage_inputs(
        &fine,
        measures,
        cfg.verify_subsample,
        cfg.subsample,
        "equipartition",
    )?;
    solve_stage(&coarse_n, &fine_n, m, cfg, cfg.seed, 0).map(|s| s.partition)
}

/// Convex region cutting fraction 1/m of all three measures, as the
/// intersection of one convex cell per prime stage.
#[derive(Debug, Clone)]
pub struct ConvexWindow {
    /// One convex cell per stage; the window is their intersection.
    pub cells: Vec<ConvexCell>,
    /// The stage partitions the cells were extracted from.
    pub partitions: Vec<GVPartition>,
    /// Final per-measure fractions on the verification lattice.
    pub fractions: Vec<f64>,
}

fn factor_235(m: usize) -> Option<Vec<usize>> {
    let mut rest = m;
    let mut fs = Vec::new();
    for p in [2usize, 3, 5] {
        while rest % p == 0 {
            fs.push(p);
            rest /= p;
        }
    }
    (rest == 1 && !fs.is_empty()).then_some(fs)
}

/// Rebins a refined grid back to its parent geometry by block means.
fn rebin(fine: &DensityGrid<f64>, nx: usize, ny: usize, factor: usize) -> DensityGrid<f64> {
    debug_assert_eq!(fine.nx(), nx * factor);
    debug_assert_eq!(fine.ny(), ny * factor);
    let inv = 1.0 / (factor * factor) as f64;
    let mut values = vec![0.0; nx * ny];
    for fy in 0..fine.ny() {
        for fx in 0..fine.nx() {
            values[(fy / factor) * nx + fx / factor] += fine.value(fx, fy) * inv;
        }
    }
    DensityGrid::new_2d(
        nx,
        ny,
        *fine.x0(),
        *fine.y0(),
        fine.hx() * factor as f64,
        fine.hy() * factor as f64,
        values,
    )
    .expect("rebinned copy of a valid grid")
}

/// Zeroes every cell of g whose center falls outside partition cell `keep`.
fn mask_to_cell(g: &mut DensityGrid<f64>, partition: &GVPartition, keep: usize) {
    let (nx, ny) = (g.nx(), g.ny());
    let (x0, y0, hx, hy) = (*g.x0(), *g.y0(), *g.hx(), *g.hy());
    for iy in 0..ny {
        let y = y0 + (iy as f64 + 0.5) * hy;
        for ix in 0..nx {
            let x = x0 + (ix as f64 + 0.5) * hx;
            if partition.cell_of(x, y) != keep {
                *g.values_mut().get_mut(iy * nx + ix).unwrap() = 0.0;
            }
        }
    }
}

/// Convex window at fraction 1/m for composite m with prime factors in
/// {2, 3, 5}: factor ascending, equipartition the restricted measures at
/// each prime, keep the convex cell, restrict to it on the verification
/// lattice and renormalize. Stage deviations of at most cfg.tol compose to
/// a final fraction error of at most (number of stages) * cfg.tol.
pub fn convex_window(
    measures: &[DensityGrid<f64>],
    m: usize,
    cfg: &GvConfig,
) -> Result<ConvexWindow, WindowError> {
    cfg.validate()?;
    if m < 2 {
        return Err(WindowError::BadParameter {
            what: "m must be at least 2".into(),
        });
    }
    let factors = factor_235(m).ok_or_else(|| WindowError::BadParameter {
        what: format!("{m} has a prime factor outside 2, 3, 5"),
    })?;
    validate_planar_measures(measures)?;

    // Restriction state lives on the verification lattice so stage
    // fractions compose exactly with the final re-integration.
    let mut fine: Vec<DensityGrid<f64>> = measures
        .iter()
        .map(|g| g.refine(cfg.verify_subsample))
        .collect();
    let mut cells = Vec::with_capacity(factors.len());
    let mut partitions = Vec::with_capacity(factors.len());

    for (stage, &p) in factors.iter().enumerate() {
        let ctx = format!("stage {stage}");
        let (coarse_n, fine_n) =
            stage_inputs(&fine, measures, cfg.verify_subsample, cfg.subsample, &ctx)?;
        let sol = solve_stage(
            &coarse_n,
            &fine_n,
            p,
            cfg,
            cfg.seed.wrapping_add(stage as u64),
            stage,
        )?;
        let cell = extract_convex_cell(&sol.partition);
        for g in fine.iter_mut() {
            mask_to_cell(g, &sol.partition, cell.index);
        }
        partitions.push(sol.partition);
        cells.push(cell);
    }

    let fractions: Vec<f64> = fine
        .iter()
        .zip(measures)
        .map(|(f, orig)| f.total() / orig.total())
        .collect();
    Ok(ConvexWindow {
        cells,
        partitions,
        fractions,
    })
}

/// Planar fixture on which no convex set should cut fraction alpha of all
/// three measures: a thin strip along the bottom edge of a regular
/// triangle, n blocks on the segment joining the midpoints of the two
/// slanted edges, and a blob at the apex. Shipped as a generator only.
/// Requires 1/(n+1) < alpha < 1/n and a positive thickening width.
pub fn build_simplex_counterexample(
    n: usize,
    alpha: &Rational,
    width: f64,
    grid_n: usize,
) -> Result<Vec<DensityGrid<f64>>, WindowError> {
    if n == 0 {
        return Err(WindowError::BadParameter {
            what: "n must be positive".into(),
        });
    }
    let ni = n as i64;
    let lo = scalar::ratio(1, ni + 1);
    let hi = scalar::ratio(1, ni);
    if *alpha <= lo || *alpha >= hi {
        return Err(WindowError::BadParameter {
            what: format!("alpha must lie strictly between 1/{} and 1/{}", ni + 1, ni),
        });
    }
    if !(width > 0.0) {
        return Err(WindowError::BadParameter {
            what: "thickening width must be positive".into(),
        });
    }
    if grid_n < 16 {
        return Err(WindowError::BadParameter {
            what: "grid resolution must be at least 16".into(),
        });
    }

    let apex_y = 3.0f64.sqrt() / 2.0;
    let margin = 2.0 * width + 0.05;
    let (x0, y0) = (-margin, -margin);
    let (wx, wy) = (1.0 + 2.0 * margin, apex_y + 2.0 * margin);
    let (hx, hy) = (wx / grid_n as f64, wy / grid_n as f64);

    // Block layout on the mid-segment (from (1/4, apex_y/2) to (3/4,
    // apex_y/2)), mirroring the interval construction scaled to its length.
    let alpha_f = scalar::to_f64(alpha);
    let eps_seg = 0.5 * (alpha_f - 1.0 / (n as f64 + 1.0));
    let mid_y = apex_y / 2.0;
    let seg_x0 = 0.25;
    let seg_len = 0.5;

    let mut strip = vec![0.0; grid_n * grid_n];
    let mut blocks = vec![0.0; grid_n * grid_n];
    let mut blob = vec![0.0; grid_n * grid_n];
    for iy in 0..grid_n {
        let y = y0 + (iy as f64 + 0.5) * hy;
        for ix in 0..grid_n {
            let x = x0 + (ix as f64 + 0.5) * hx;
            let idx = iy * grid_n + ix;
            if (0.0..=1.0).contains(&x) && y.abs() <= width {
                strip[idx] = 1.0;
            }
            if (y - mid_y).abs() <= width {
                for i in 1..=n {
                    let cx = seg_x0 + seg_len * i as f64 / (n as f64 + 1.0);
                    if (x - cx).abs() <= 0.5 * eps_seg * seg_len {
                        blocks[idx] = 1.0;
                    }
                }
            }
            if (x - 0.5).hypot(y - apex_y) <= 2.0 * width {
                blob[idx] = 1.0;
            }
        }
    }

    let mut out = Vec::with_capacity(3);
    for (name, values) in [("strip", strip), ("blocks", blocks), ("blob", blob)] {
        let mut g = DensityGrid::new_2d(grid_n, grid_n, x0, y0, hx, hy, values)
            .expect("static shape");
        g.normalize().map_err(|_| WindowError::BadParameter {
            what: format!("{name} measure vanished; width too small for the grid"),
        })?;
        out.push(g);
    }
    Ok(out)
}
